//! HTTP surface. Reads come straight from shared state; writes go to the
//! control loop and are answered once it has acted on them.

use std::convert::Infallible;
use std::sync::mpsc::Sender;
use std::sync::Arc;

use axum::body::{Body, Bytes};
use axum::extract::{Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use feeder_core::actuation::Target;
use feeder_core::control::Schedule;
use serde::{Deserialize, Serialize};
use tokio::sync::oneshot;

use crate::daemon::{LoopMsg, ScheduleUpdateError, Shared};

pub const CAPTURE_TIMESTAMP_HEADER: &str = "x-capture-timestamp";
const EVENT_BATCH: usize = 512;

#[derive(Clone)]
struct AppState {
    shared: Arc<Shared>,
    loop_tx: Sender<LoopMsg>,
}

impl AppState {
    fn send(&self, msg: LoopMsg) -> Result<(), ApiError> {
        self.loop_tx.send(msg)
            .map_err(|_| ApiError::unavailable())
    }
}

pub(crate) fn router(shared: Arc<Shared>, loop_tx: Sender<LoopMsg>) -> Router {
    let state = AppState {
        shared,
        loop_tx,
    };
    Router::new()
        .route("/status", get(status))
        .route("/frame", get(frame))
        .route("/dispense", post(dispense))
        .route("/schedule", get(get_schedule).put(put_schedule))
        .route("/events", get(events))
        .with_state(state)
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    error: &'static str,
    message: String,
}

struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, error: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            body: ErrorBody {
                error,
                message: message.into(),
            },
        }
    }

    fn unavailable() -> Self {
        Self::new(StatusCode::SERVICE_UNAVAILABLE, "ShuttingDown", "control loop is not running")
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

async fn status(State(app): State<AppState>) -> impl IntoResponse {
    Json(app.shared.snapshot())
}

async fn frame(State(app): State<AppState>) -> Result<Response, ApiError> {
    let latest = app.shared.frame.read().expect("frame lock").clone();
    let Some(latest) = latest else {
        return Err(ApiError::new(StatusCode::NOT_FOUND, "NoFrameYet", "no frame captured since start"));
    };
    Ok((
        [
            (header::CONTENT_TYPE, HeaderValue::from_static("image/x-portable-graymap")),
            (
                header::HeaderName::from_static(CAPTURE_TIMESTAMP_HEADER),
                HeaderValue::from(latest.captured_at),
            ),
        ],
        latest.pgm,
    )
        .into_response())
}

#[derive(Debug, Deserialize)]
struct DispenseBody {
    target: Target,
    quantity: f64,
}

#[derive(Debug, Serialize)]
struct Accepted {
    command_id: u64,
    target: Target,
    quantity: f64,
}

async fn dispense(State(app): State<AppState>, Json(body): Json<DispenseBody>) -> Result<Response, ApiError> {
    let max = app.shared.config.max_quantity(body.target);
    if !(body.quantity.is_finite() && body.quantity > 0.0 && body.quantity <= max) {
        return Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "QuantityOutOfRange",
            format!("{} quantity must be in (0, {max}] {}", body.target, body.target.unit()),
        ));
    }
    let (reply, answer) = oneshot::channel();
    app.send(LoopMsg::Dispense {
        target: body.target,
        quantity: body.quantity,
        reply,
    })?;
    let command_id = answer
        .await
        .map_err(|_| ApiError::unavailable())?
        .map_err(|m| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "LogWriteFailed", m))?;
    Ok((
        StatusCode::ACCEPTED,
        Json(Accepted {
            command_id,
            target: body.target,
            quantity: body.quantity,
        }),
    )
        .into_response())
}

async fn get_schedule(State(app): State<AppState>) -> impl IntoResponse {
    Json(app.shared.schedule.read().expect("schedule lock").clone())
}

async fn put_schedule(State(app): State<AppState>, Json(schedule): Json<Schedule>) -> Result<Response, ApiError> {
    let (reply, answer) = oneshot::channel();
    app.send(LoopMsg::ReplaceSchedule { schedule, reply })?;
    match answer.await.map_err(|_| ApiError::unavailable())? {
        Ok(stored) => Ok(Json(stored).into_response()),
        Err(ScheduleUpdateError::Invalid(e)) => {
            Err(ApiError::new(StatusCode::BAD_REQUEST, "InvalidSchedule", e.to_string()))
        }
        Err(e @ ScheduleUpdateError::Io(_)) => {
            Err(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "StorageFailed", e.to_string()))
        }
    }
}

#[derive(Debug, Deserialize)]
struct EventsQuery {
    #[serde(default)]
    since: u64,
    /// Keep the stream open for new events (default) or stop at the end.
    #[serde(default = "yes")]
    follow: bool,
}

fn yes() -> bool {
    true
}

struct Cursor {
    app: AppState,
    since: u64,
    follow: bool,
    seq: tokio::sync::watch::Receiver<u64>,
    stop: tokio::sync::watch::Receiver<bool>,
}

async fn events(State(app): State<AppState>, Query(q): Query<EventsQuery>) -> Response {
    let cursor = Cursor {
        seq: app.shared.log.subscribe(),
        stop: app.shared.shutdown.subscribe(),
        app,
        since: q.since,
        follow: q.follow,
    };
    let stream = futures::stream::unfold(cursor, |mut c| async move {
        loop {
            c.seq.mark_unchanged();
            let batch = c.app.shared.log.since(c.since, EVENT_BATCH);
            if let Some(last) = batch.last() {
                c.since = last.seq;
                let mut out = Vec::with_capacity(batch.len() * 160);
                for ev in &batch {
                    serde_json::to_writer(&mut out, ev).expect("events serialize");
                    out.push(b'\n');
                }
                return Some((Ok::<_, Infallible>(Bytes::from(out)), c));
            }
            if !c.follow || *c.stop.borrow() {
                return None;
            }
            tokio::select! {
                changed = c.seq.changed() => if changed.is_err() { return None },
                _ = c.stop.wait_for(|s| *s) => return None,
            }
        }
    });
    (
        [(header::CONTENT_TYPE, HeaderValue::from_static("application/x-ndjson"))],
        Body::from_stream(stream),
    )
        .into_response()
}
