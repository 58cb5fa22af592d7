//! End-to-end runs: scripted gaze through the decoder into navigation,
//! with JSONL event logs, metric re-derivation and batch statistics.

mod batch;
mod eval;
pub mod pack;
mod run;
mod script;
mod session;

pub use batch::{aggregate, bench_report, run_batch, AggregateReport, AvoidanceRate, BatchRun, BenchReport, RunRecord, Stat};
pub use eval::{intent_accuracy_eval, IntentAccuracyReport, ObjectAccuracy};
pub use run::{derive_metrics, replay, run_scenario, EventLog, LogHeader, RunMetrics, RunOutput};
pub use script::{tick_of, GazeIntent, GazeScript, ScriptEvent, ScriptPhase};
pub use session::{
    BoxView, GazeInput, GazeView, IntentView, Session, SimConfig, SimEvent, TickRecord,
};
