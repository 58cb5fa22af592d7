//! Live session over a websocket. One task owns the simulation and ticks
//! it at 25 Hz of wall time; connections feed it through a queue and all
//! receive the same snapshot each tick. Only the connection holding the
//! driver role may steer (gaze, wink, reset).

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::Response;
use axum::routing::get;
use axum::Router;
use futures::{SinkExt, StreamExt};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::net::TcpListener;
use tokio::sync::{broadcast, mpsc};
use tokio::time::MissedTickBehavior;

use gazenav_core::classify::Model;
use gazenav_core::sim::{GazeInput, Session, SimConfig, SimEvent, TickRecord};
use gazenav_core::world::Scenario;
use gazenav_core::TICK_DT;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone)]
pub struct ServeOptions {
    pub scenario: Scenario,
    pub models: BTreeMap<String, Model>,
    pub config: SimConfig,
    pub seed: u64,
}

/// Client → server messages.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    /// A gaze pixel; omitting either coordinate clears the gaze.
    Gaze {
        #[serde(default)]
        x_px: Option<f64>,
        #[serde(default)]
        y_px: Option<f64>,
    },
    Wink,
    Reset,
    ClaimDriver,
    ReleaseDriver,
}

enum Control {
    Gaze(Option<[f64; 2]>),
    Wink,
    Reset,
}

struct Hub {
    inbound: mpsc::UnboundedSender<Control>,
    snapshots: broadcast::Sender<Arc<str>>,
    driver: Mutex<Option<u64>>,
    next_id: AtomicU64,
}

/// Running totals shipped with each snapshot.
#[derive(Debug, Clone, Default, Serialize)]
pub struct PartialMetrics {
    pub ticks: u64,
    pub sim_time: f64,
    pub distance_travelled: f64,
    pub emergency_stops: u32,
    pub goal_dispatched: bool,
    pub dispatched_object: Option<String>,
    pub arrived: bool,
    pub stop_distance: Option<f64>,
    #[serde(skip)]
    in_estop: bool,
    #[serde(skip)]
    last_pose: Option<[f64; 2]>,
}

impl PartialMetrics {
    fn update(&mut self, rec: &TickRecord) {
        self.ticks = rec.k + 1;
        self.sim_time = rec.t;
        let p = rec.pose.position();
        if let Some(q) = self.last_pose {
            self.distance_travelled += (p[0] - q[0]).hypot(p[1] - q[1]);
        }
        self.last_pose = Some(p);
        let estop = rec.nav.as_ref().is_some_and(|n| n.emergency_stop);
        if estop && !self.in_estop {
            self.emergency_stops += 1;
        }
        self.in_estop = estop;
        for e in &rec.events {
            match e {
                SimEvent::GoalDispatched(d) => {
                    self.goal_dispatched = true;
                    self.dispatched_object = Some(d.object.clone());
                    self.arrived = false;
                    self.stop_distance = None;
                }
                SimEvent::Arrived { distance } => {
                    self.arrived = true;
                    self.stop_distance = Some(*distance);
                }
                _ => {}
            }
        }
    }
}

/// The per-tick state message.
pub fn snapshot(rec: &TickRecord, session: &Session, partial: &PartialMetrics) -> Value {
    json!({
        "type": "state",
        "k": rec.k,
        "t": rec.t,
        "pose": rec.pose,
        "cmd": rec.cmd,
        "path": session.path().map(|p| &p.waypoints),
        "goal": session.goal(),
        "boxes": rec.boxes,
        "gaze": {
            "raw": rec.gaze.raw,
            "object": rec.gaze.object,
            "u": rec.gaze.u,
            "v": rec.gaze.v,
            "class": rec.gaze.class,
        },
        "intent": rec.intent,
        "wink": rec.wink,
        "obstacles": rec.obstacles,
        "metrics_partial": partial,
    })
}

/// Serves `/ws` on `listener` until the process ends.
pub async fn serve(listener: TcpListener, opts: ServeOptions) -> CliResult<()> {
    let session = Session::new(opts.scenario.clone(), opts.models.clone(), opts.config.clone(), opts.seed)?;
    let (inbound, rx) = mpsc::unbounded_channel();
    let (snapshots, _) = broadcast::channel(64);
    let hub = Arc::new(Hub {
        inbound,
        snapshots: snapshots.clone(),
        driver: Mutex::new(None),
        next_id: AtomicU64::new(1),
    });
    tokio::spawn(sim_loop(session, opts, rx, snapshots));
    let app = Router::new().route("/ws", get(upgrade)).with_state(hub);
    axum::serve(listener, app)
        .await
        .map_err(|e| CliError::new("io", format!("serve: {e}")))
}

async fn sim_loop(
    mut session: Session,
    opts: ServeOptions,
    mut rx: mpsc::UnboundedReceiver<Control>,
    tx: broadcast::Sender<Arc<str>>,
) {
    let mut clock = tokio::time::interval(Duration::from_secs_f64(TICK_DT));
    clock.set_missed_tick_behavior(MissedTickBehavior::Delay);
    let mut gaze = None;
    let mut wink = false;
    let mut partial = PartialMetrics::default();
    loop {
        clock.tick().await;
        while let Ok(msg) = rx.try_recv() {
            match msg {
                Control::Gaze(p) => gaze = p,
                Control::Wink => wink = true,
                Control::Reset => {
                    session = Session::new(opts.scenario.clone(), opts.models.clone(), opts.config.clone(), opts.seed)
                        .expect("options were validated at startup");
                    gaze = None;
                    wink = false;
                    partial = PartialMetrics::default();
                }
            }
        }
        let rec = session.step(GazeInput::Pixel(gaze), std::mem::take(&mut wink));
        partial.update(&rec);
        let text = snapshot(&rec, &session, &partial).to_string();
        // No receivers is fine; nobody is watching yet.
        let _ = tx.send(Arc::from(text));
    }
}

async fn upgrade(ws: WebSocketUpgrade, State(hub): State<Arc<Hub>>) -> Response {
    ws.on_upgrade(move |socket| connection(socket, hub))
}

fn reply(kind: &str, body: Value) -> String {
    let mut v = body;
    v["type"] = Value::from(kind);
    v.to_string()
}

async fn connection(socket: WebSocket, hub: Arc<Hub>) {
    let id = hub.next_id.fetch_add(1, Ordering::Relaxed);
    let (mut sink, mut stream) = socket.split();
    let mut snaps = hub.snapshots.subscribe();
    let (reply_tx, mut reply_rx) = mpsc::unbounded_channel::<String>();

    let writer = tokio::spawn(async move {
        loop {
            let text: String = tokio::select! {
                r = reply_rx.recv() => match r {
                    Some(t) => t,
                    None => break,
                },
                s = snaps.recv() => match s {
                    Ok(t) => t.to_string(),
                    Err(broadcast::error::RecvError::Lagged(_)) => continue,
                    Err(broadcast::error::RecvError::Closed) => break,
                },
            };
            if sink.send(Message::Text(text.into())).await.is_err() {
                break;
            }
        }
    });

    while let Some(Ok(msg)) = stream.next().await {
        let text = match msg {
            Message::Text(t) => t,
            Message::Close(_) => break,
            _ => continue,
        };
        for line in text.as_str().lines().filter(|l| !l.trim().is_empty()) {
            if let Some(r) = handle(&hub, id, line) {
                let _ = reply_tx.send(r);
            }
        }
    }

    let mut driver = hub.driver.lock().expect("driver lock");
    if *driver == Some(id) {
        *driver = None;
    }
    drop(driver);
    writer.abort();
}

fn handle(hub: &Hub, id: u64, line: &str) -> Option<String> {
    let msg: ClientMessage = match serde_json::from_str(line) {
        Ok(m) => m,
        Err(e) => return Some(reply("error", json!({ "message": format!("bad message: {e}") }))),
    };
    let mut driver = hub.driver.lock().expect("driver lock");
    let control = match msg {
        ClientMessage::ClaimDriver => {
            if driver.is_none() {
                *driver = Some(id);
            }
            return Some(reply("role", json!({ "driver": *driver == Some(id) })));
        }
        ClientMessage::ReleaseDriver => {
            if *driver == Some(id) {
                *driver = None;
            }
            return Some(reply("role", json!({ "driver": false })));
        }
        _ if *driver != Some(id) => {
            return Some(reply("error", json!({ "message": "only the driver may steer; send claim_driver first" })));
        }
        ClientMessage::Gaze { x_px, y_px } => Control::Gaze(x_px.zip(y_px).map(|(x, y)| [x, y])),
        ClientMessage::Wink => Control::Wink,
        ClientMessage::Reset => Control::Reset,
    };
    let _ = hub.inbound.send(control);
    None
}
