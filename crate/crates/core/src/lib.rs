//! Learning-based feedforward for a simulated magnetically levitated planar
//! motor stage.
//!
//! The stage's vertical axis sees a position-dependent static disturbance
//! force. This crate learns that force from settled closed-loop effort
//! measurements with Gaussian-Process regression under a physics-informed
//! composite kernel (periodic x RBF + linear), optionally compresses the
//! predictor with the Subset-of-Regressors approximation, and deploys the
//! model as an augmentation of the rigid-body feedforward controller.
//!
//! Main building blocks:
//!
//! - [`kernel`]: the composite kernel family, its hyperparameters and
//!   analytic hyperparameter gradients.
//! - [`gp`]: exact GP inference (Cholesky), marginal likelihood and its
//!   gradient; [`optimize`]: quasi-Newton hyperparameter fitting;
//!   [`sr`]: Subset-of-Regressors compression with random-restart selection.
//! - [`sim`]: the closed-loop plant simulation (double-integrator stage,
//!   PID + low-pass feedback, rigid-body feedforward, synthetic disturbance
//!   field, feedforward augmentation hook).
//! - [`trajectory`]: fourth-order (snap-limited) point-to-point reference
//!   generation.
//! - [`campaign`]: grid measurement campaigns, dataset assembly, BFR / error
//!   norms, spatial spectrum diagnostics and the with/without-augmentation
//!   tracking comparison.
//! - [`io`]: CSV / key-value / JSON persistence and the run configuration
//!   format used by the CLI.

pub mod campaign;
pub mod gp;
pub mod input;
pub mod io;
pub mod kernel;
pub mod linalg;
pub mod optimize;
pub mod seed;
pub mod sim;
pub mod spectrum;
pub mod sr;
pub mod trajectory;

pub use input::InputVector;
pub use kernel::{HyperParameters, KernelSpec};
