//! Soft actor-critic learner shared by every controller.

pub mod agent;
pub mod checkpoint;
pub mod losses;
pub mod replay;

pub use agent::{SacAgent, SacConfig, UpdateStats};
pub use checkpoint::{SacCheckpoint, SCHEMA_VERSION};
pub use replay::{Batch, ReplayBuffer, Transition};
