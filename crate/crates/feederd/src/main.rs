use std::net::SocketAddr;
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::Parser;
use feeder_core::sim::{run_scenario, Scenario};
use feederd::{Daemon, DaemonConfig, SourceMode};

/// Camera-driven pet feeder daemon.
#[derive(Debug, Parser)]
#[command(name = "feederd", version)]
struct Cli {
    /// JSON config file (bowl calibration, rates, thresholds).
    #[arg(long)]
    config: PathBuf,
    /// Drive the loop from the built-in simulated bowl.
    #[arg(long, conflicts_with = "camera_dir")]
    sim: bool,
    /// Read the newest .pgm frame from this directory each tick.
    #[arg(long, value_name = "DIR")]
    camera_dir: Option<PathBuf>,
    /// HTTP listen address, overriding the config.
    #[arg(long, value_name = "ADDR:PORT")]
    listen: Option<SocketAddr>,
    /// Status mirror endpoint, overriding the config.
    #[arg(long, value_name = "URL")]
    mirror_url: Option<String>,
    /// Run a scenario file offline instead of serving.
    #[arg(long, value_name = "FILE", requires = "report", conflicts_with_all = ["sim", "camera_dir"])]
    scenario: Option<PathBuf>,
    /// Where the scenario report is written.
    #[arg(long, value_name = "FILE", requires = "scenario")]
    report: Option<PathBuf>,
}

fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt().with_writer(std::io::stderr).with_target(false).init();
    let cli = Cli::parse();
    let mut config = DaemonConfig::load(&cli.config)?;

    if let (Some(scenario), Some(report)) = (&cli.scenario, &cli.report) {
        let text = std::fs::read_to_string(scenario).with_context(|| format!("reading {}", scenario.display()))?;
        let scenario: Scenario = serde_json::from_str(&text).context("parsing scenario")?;
        let result = run_scenario(&scenario, &config.sim_config())?;
        std::fs::write(report, serde_json::to_vec_pretty(&result)?)
            .with_context(|| format!("writing {}", report.display()))?;
        eprintln!(
            "frames {} triggers {} dispenses {} success {}",
            result.frames,
            result.triggers,
            result.dispenses,
            result.activation_success_rate.map_or("n/a".into(), |r| format!("{r:.3}"))
        );
        return Ok(());
    }

    let mode = match (cli.sim, cli.camera_dir) {
        (true, _) => SourceMode::Sim,
        (false, Some(dir)) => SourceMode::CameraDir(dir),
        (false, None) => bail!("pick a frame source: --sim or --camera-dir <DIR>"),
    };
    if let Some(addr) = cli.listen {
        config.listen = addr;
    }
    if cli.mirror_url.is_some() {
        config.mirror_url = cli.mirror_url;
    }

    let daemon = Daemon::spawn(config, mode)?;
    println!("listening on {}", daemon.addr());
    let rt = tokio::runtime::Builder::new_current_thread().enable_all().build()?;
    rt.block_on(async {
        let mut term = tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate())?;
        tokio::select! {
            r = tokio::signal::ctrl_c() => r,
            _ = term.recv() => Ok(()),
        }
    })?;
    tracing::info!("shutting down");
    daemon.shutdown();
    Ok(())
}
