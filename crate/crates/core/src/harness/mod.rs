//! Experiment orchestration: configuration, the training protocol,
//! evaluation, metrics, plots and the scripted reference controllers.

pub mod config;
pub mod eval;
pub mod gradcheck;
pub mod latency;
pub mod metrics;
pub mod plot;
pub mod scripted;
pub mod train;

pub use config::{ExperimentConfig, Mode};
pub use eval::{run_eval, DodgePolicy, EvalReport};
pub use gradcheck::{run_gradcheck_suite, GradcheckReport};
pub use latency::{reaction_latency, BallLatency, REACTION_DISTANCE};
pub use metrics::{read_metrics, MetricsRecord, MetricsWriter};
pub use scripted::{ScriptedDodger, ScriptedGait};
pub use train::{run_seed, run_seed_with, run_training, RunOutcome};
