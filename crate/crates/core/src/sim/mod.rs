//! Closed-loop simulation of the levitated translator: linearized
//! small-angle plant, per-axis PID + low-pass feedback, rigid-body
//! feedforward with gravity compensation, the synthetic ground-truth
//! disturbance field and the feedforward augmentation hook.

mod controller;
mod field;
mod plant;
mod scenario;

pub use controller::{
    closed_loop_bandwidth_hz, design_axis, AxisController, ControllerConfig, ControllerState,
};
pub use field::{disturbance_force, DisturbanceField, FrameOffset, OffsetModel};
pub use plant::{plant_step, plant_step_forced, PlantParams, PlantState};
pub use scenario::{
    feedforward_command, run_closed_loop, ClosedLoop, EffortPredictor, NoiseModel, OracleEffort,
    Scenario, StepLog, TrackingTrace,
};

use thiserror::Error;

/// Rotations beyond this bound invalidate the small-angle linearization;
/// the simulation aborts rather than returning silently wrong physics.
pub const SMALL_ANGLE_LIMIT: f64 = 0.05;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("plant parameter {name} must be strictly positive, got {value}")]
    BadParam { name: &'static str, value: f64 },
    #[error("wrench component {axis} is not finite")]
    NonFiniteWrench { axis: usize },
    #[error(
        "small-angle assumption violated on rotation axis {axis} at t={t:.4}s: \
         |{value:.4}| rad >= {SMALL_ANGLE_LIMIT}"
    )]
    SmallAngleViolated { axis: usize, value: f64, t: f64 },
    #[error("closed loop unstable: |error| {error:.3e} on axis {axis} at t={t:.4}s")]
    Unstable { axis: usize, error: f64, t: f64 },
    #[error("controller design failed: {reason}")]
    DesignFailed { reason: String },
    #[error("disturbance field period must be strictly positive, got {0}")]
    BadFieldPeriod(f64),
}
