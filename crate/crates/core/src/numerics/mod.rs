//! Small dense neural-network toolkit: MLPs with hand-derived backward
//! passes, Adam, the squashed-Gaussian policy head, and a finite-difference
//! gradient oracle.

pub mod adam;
pub mod gaussian;
pub mod gradcheck;
pub mod mlp;
pub mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use gaussian::{clamp_log_std, squashed_gaussian, squashed_gaussian_backward, GaussianHeadOutput};
pub use mlp::{Activation, Dense, Mlp, MlpCache, MlpGrads};
pub use tensor::{Scalar, Tensor2};
