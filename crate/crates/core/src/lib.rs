//! Reactive legged dodge-ball workbench.
//!
//! A kinematic four-legged crawler must avoid balls fired at it. A feudal
//! agent pairs a pretrained direction-following walker with a high-level
//! subgoal policy; both levels, and the end-to-end baseline, learn with the
//! same soft actor-critic implementation.

pub mod env;
pub mod error;
pub mod feudal;
pub mod harness;
pub mod numerics;
pub mod sac;

pub use error::{Error, Result};
