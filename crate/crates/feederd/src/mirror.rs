//! Best-effort push of the latest status to a remote endpoint. Only the
//! newest payload is kept; the control loop never waits on the network.

use std::time::Duration;

use feeder_core::clock::Millis;
use serde::{Deserialize, Serialize};
use tokio::sync::watch;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MirrorPayload {
    pub food_level: f64,
    pub presence: bool,
    pub timestamp: Millis,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MirrorFailure {
    pub attempt: u32,
    pub reason: String,
    pub retry_in: Duration,
}

/// Doubling delay between `initial` and `max`.
#[derive(Debug, Clone)]
pub struct Backoff {
    initial: Duration,
    max: Duration,
    current: Duration,
}

impl Backoff {
    pub fn new(initial: Duration, max: Duration) -> Self {
        Self {
            initial,
            max,
            current: initial,
        }
    }

    pub fn next_delay(&mut self) -> Duration {
        let d = self.current;
        self.current = (self.current * 2).min(self.max);
        d
    }

    pub fn reset(&mut self) {
        self.current = self.initial;
    }
}

impl Default for Backoff {
    fn default() -> Self {
        Self::new(Duration::from_millis(500), Duration::from_secs(30))
    }
}

/// PUTs each new payload to `url` until the sender side is dropped. Failed
/// pushes are retried with the newest payload after a backoff.
pub async fn run_mirror<F>(
    url: String,
    timeout: Duration,
    mut latest: watch::Receiver<Option<MirrorPayload>>,
    mut backoff: Backoff,
    on_failure: F,
) where
    F: Fn(MirrorFailure) + Send + 'static,
{
    let client = match reqwest::Client::builder().timeout(timeout).build() {
        Ok(c) => c,
        Err(e) => {
            on_failure(MirrorFailure {
                attempt: 1,
                reason: format!("http client: {e}"),
                retry_in: Duration::ZERO,
            });
            return;
        }
    };
    let mut attempt = 0u32;
    loop {
        if attempt == 0 && latest.changed().await.is_err() {
            return;
        }
        let Some(payload) = latest.borrow_and_update().clone() else {
            continue;
        };
        let body = serde_json::to_vec(&payload).expect("payload serializes");
        let sent = client
            .put(&url)
            .header(reqwest::header::CONTENT_TYPE, "application/json")
            .body(body)
            .send()
            .await
            .and_then(|r| r.error_for_status());
        match sent {
            Ok(_) => {
                attempt = 0;
                backoff.reset();
            }
            Err(e) => {
                attempt += 1;
                let retry_in = backoff.next_delay();
                tracing::warn!(%url, attempt, "mirror push failed: {e}");
                on_failure(MirrorFailure {
                    attempt,
                    reason: e.to_string(),
                    retry_in,
                });
                tokio::time::sleep(retry_in).await;
                if latest.has_changed().is_err() {
                    return;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backoff_doubles_to_cap() {
        let mut b = Backoff::new(Duration::from_millis(100), Duration::from_millis(500));
        let got: Vec<_> = (0..5).map(|_| b.next_delay().as_millis()).collect();
        assert_eq!(got, [100, 200, 400, 500, 500]);
        b.reset();
        assert_eq!(b.next_delay().as_millis(), 100);
    }
}
