//! The closed control loop: reference in, feedforward + feedback, plant
//! with disturbance and measurement noise, logged trace out.
//!
//! The feedforward augmentation follows the deployment rule: the learned
//! model predicts the *total* settled z effort, so the gravity compensation
//! term is subtracted from the prediction before it is added to the
//! rigid-body feedforward, and the predictor is fed the reference positions
//! rather than their measured estimates.

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::controller::{ControllerConfig, ControllerState};
use super::field::{disturbance_force, DisturbanceField, FrameOffset, OffsetModel};
use super::plant::{plant_step_forced, PlantParams, PlantState};
use super::SimError;
use crate::gp::GPPosterior;
use crate::input::InputVector;
use crate::seed::rng_for;
use crate::sr::{sr_predict, SRPredictor};
use crate::trajectory::PlanarTrajectory;

/// Anything that can predict the total settled z effort at an input point.
pub trait EffortPredictor {
    fn predict_effort(&self, w: &InputVector) -> f64;
}

impl EffortPredictor for GPPosterior {
    fn predict_effort(&self, w: &InputVector) -> f64 {
        self.predict_mean(w)
    }
}

impl EffortPredictor for SRPredictor {
    fn predict_effort(&self, w: &InputVector) -> f64 {
        sr_predict(self, w)
    }
}

/// Ground-truth oracle: the settled total effort is the gravity
/// feedforward minus the true disturbance (integral action identity).
pub struct OracleEffort<'a> {
    pub field: &'a DisturbanceField,
    pub gravity_z: f64,
}

impl EffortPredictor for OracleEffort<'_> {
    fn predict_effort(&self, w: &InputVector) -> f64 {
        self.gravity_z - disturbance_force(self.field, w)
    }
}

/// I.i.d. Gaussian measurement noise: pose estimates per step, plus the
/// white noise on each recorded settled effort (the e(i) of the
/// disturbance observation model).
#[derive(Debug, Clone, Copy)]
pub struct NoiseModel {
    pub pose_std: [f64; 6],
    /// Std of the recorded-effort noise (N).
    pub effort_std: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            pose_std: [5e-9, 5e-9, 5e-9, 1e-8, 1e-8, 1e-8],
            effort_std: 0.02,
        }
    }
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        NoiseModel {
            pose_std: [0.0; 6],
            effort_std: 0.0,
        }
    }
}

/// Everything a closed-loop run needs except the trajectory and the
/// augmentation model.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub plant: PlantParams,
    pub controller: ControllerConfig,
    pub field: DisturbanceField,
    pub offsets: OffsetModel,
    pub noise: NoiseModel,
    /// Settling time simulated (and discarded) before logging starts.
    pub lead_in: f64,
    pub seed: u64,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            plant: PlantParams::default(),
            controller: ControllerConfig::default(),
            field: DisturbanceField::default(),
            offsets: OffsetModel::default(),
            noise: NoiseModel::default(),
            lead_in: 1.0,
            seed: 0,
        }
    }
}

/// Rigid-body feedforward wrench: mass/inertia times the reference
/// acceleration plus gravity compensation, with the optional learned
/// augmentation on the z axis.
pub fn feedforward_command(
    ref_acceleration: &[f64; 6],
    params: &PlantParams,
    augmentation: Option<&dyn EffortPredictor>,
    w: &InputVector,
) -> [f64; 6] {
    let b = params.inverse_inertia();
    let mut wrench = params.gravity_wrench();
    for i in 0..6 {
        wrench[i] += ref_acceleration[i] / b[i];
    }
    if let Some(model) = augmentation {
        wrench[2] += model.predict_effort(w) - params.gravity_z();
    }
    wrench
}

/// Per-step log record of the loop.
#[derive(Debug, Clone, Copy)]
pub struct StepLog {
    pub reference: [f64; 6],
    pub measured: [f64; 6],
    pub error: [f64; 6],
    /// Total commanded z effort (feedforward + feedback).
    pub fz_total: f64,
    /// Feedforward share of the z effort.
    pub fz_ff: f64,
}

/// A stepping closed loop, shared by the tracking runs and the grid
/// campaigns. Strictly sequential and deterministic for a given noise
/// generator.
pub struct ClosedLoop<'a> {
    params: PlantParams,
    field: DisturbanceField,
    offset: FrameOffset,
    noise: NoiseModel,
    ctrl: ControllerState,
    state: PlantState,
    rng: ChaCha8Rng,
    normal: Normal<f64>,
    error_limit: f64,
    augmentation: Option<&'a dyn EffortPredictor>,
}

impl<'a> ClosedLoop<'a> {
    pub fn new(
        scenario: &Scenario,
        offset: FrameOffset,
        start: (f64, f64),
        noise_rng: ChaCha8Rng,
        augmentation: Option<&'a dyn EffortPredictor>,
        error_limit: f64,
    ) -> Result<Self, SimError> {
        scenario.plant.validate()?;
        if scenario.field.period <= 0.0 {
            return Err(SimError::BadFieldPeriod(scenario.field.period));
        }
        let ctrl = scenario.controller.build(&scenario.plant)?;
        Ok(ClosedLoop {
            params: scenario.plant,
            field: scenario.field,
            offset,
            noise: scenario.noise,
            ctrl,
            state: PlantState::at_rest(start.0, start.1),
            rng: noise_rng,
            normal: Normal::new(0.0, 1.0).expect("unit normal"),
            error_limit,
            augmentation,
        })
    }

    pub fn time(&self) -> f64 {
        self.state.t
    }

    pub fn dt(&self) -> f64 {
        self.params.dt
    }

    pub fn state(&self) -> &PlantState {
        &self.state
    }

    pub fn offset(&self) -> &FrameOffset {
        &self.offset
    }

    /// Advance one sample period toward `reference` with reference
    /// acceleration `ref_acc` (x, y).
    pub fn step(&mut self, reference: &[f64; 6], ref_acc: [f64; 2]) -> Result<StepLog, SimError> {
        let t = self.state.t;
        let mut measured = self.state.q;
        for (m, std) in measured.iter_mut().zip(self.noise.pose_std) {
            if std > 0.0 {
                let draw: f64 = self.normal.sample(&mut self.rng);
                *m += std * draw;
            }
        }
        let mut error = [0.0; 6];
        for i in 0..6 {
            error[i] = reference[i] - measured[i];
        }
        for (axis, e) in error.iter().enumerate().take(3) {
            if e.abs() > self.error_limit {
                return Err(SimError::Unstable {
                    axis,
                    error: *e,
                    t,
                });
            }
        }
        let fb = self.ctrl.feedback_step(&error);
        let w_ref = InputVector::from_parts(reference[0], reference[1], self.offset.at(t));
        let ref_acceleration = [ref_acc[0], ref_acc[1], 0.0, 0.0, 0.0, 0.0];
        let ff = feedforward_command(&ref_acceleration, &self.params, self.augmentation, &w_ref);
        let mut total = [0.0; 6];
        for i in 0..6 {
            total[i] = ff[i] + fb[i];
        }
        let w_true = InputVector::from_parts(self.state.q[0], self.state.q[1], self.offset.at(t));
        let dist = disturbance_force(&self.field, &w_true);
        self.state = plant_step_forced(&self.state, &total, &self.params, dist)?;
        Ok(StepLog {
            reference: *reference,
            measured,
            error,
            fz_total: total[2],
            fz_ff: ff[2],
        })
    }

    /// Hold one reference for `steps` samples.
    pub fn hold(&mut self, reference: &[f64; 6], steps: usize) -> Result<(), SimError> {
        for _ in 0..steps {
            self.step(reference, [0.0, 0.0])?;
        }
        Ok(())
    }
}

/// The logged outcome of one tracking run.
#[derive(Debug, Clone)]
pub struct TrackingTrace {
    pub dt: f64,
    pub time: Vec<f64>,
    pub reference: Vec<[f64; 6]>,
    pub measured: Vec<[f64; 6]>,
    pub z_error: Vec<f64>,
    pub fz_total: Vec<f64>,
    pub fz_ff: Vec<f64>,
}

impl TrackingTrace {
    fn with_capacity(dt: f64, n: usize) -> Self {
        TrackingTrace {
            dt,
            time: Vec::with_capacity(n),
            reference: Vec::with_capacity(n),
            measured: Vec::with_capacity(n),
            z_error: Vec::with_capacity(n),
            fz_total: Vec::with_capacity(n),
            fz_ff: Vec::with_capacity(n),
        }
    }

    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }
}

/// Drive the scenario along a planar trajectory and log every step.
///
/// The frame offset is drawn by the caller (so comparisons can pin it);
/// measurement noise comes from the scenario seed's `tracking-noise`
/// sub-stream, making the run bitwise reproducible.
pub fn run_closed_loop(
    scenario: &Scenario,
    trajectory: &PlanarTrajectory,
    offset: FrameOffset,
    augmentation: Option<&dyn EffortPredictor>,
) -> Result<TrackingTrace, SimError> {
    let dt = scenario.plant.dt;
    let start = trajectory.sample(0.0).position;
    // 10x the travelled span; an error beyond this is a blown-up loop.
    let mut span = 0.01f64;
    for m in trajectory.moves() {
        span = span
            .max((m.x.end() - m.x.start()).abs())
            .max((m.y.end() - m.y.start()).abs());
    }
    let error_limit = 10.0 * span;

    let rng = rng_for(scenario.seed, "tracking-noise");
    let mut boucle = ClosedLoop::new(
        scenario,
        offset,
        (start[0], start[1]),
        rng,
        augmentation,
        error_limit,
    )?;

    // Un-logged lead-in at the start point lets the integrator absorb the
    // static disturbance before the comparison window opens.
    let hold_ref = [start[0], start[1], 0.0, 0.0, 0.0, 0.0];
    let lead_steps = (scenario.lead_in / dt).round() as usize;
    boucle.hold(&hold_ref, lead_steps)?;
    let t0 = boucle.time();

    let n = (trajectory.duration() / dt).ceil() as usize + 1;
    let mut trace = TrackingTrace::with_capacity(dt, n);
    for i in 0..n {
        let t_traj = i as f64 * dt;
        let s = trajectory.sample(t_traj);
        let reference = [s.position[0], s.position[1], 0.0, 0.0, 0.0, 0.0];
        let log = boucle.step(&reference, s.acceleration)?;
        trace.time.push(boucle.time() - t0 - dt);
        trace.reference.push(log.reference);
        trace.measured.push(log.measured);
        trace.z_error.push(log.error[2]);
        trace.fz_total.push(log.fz_total);
        trace.fz_ff.push(log.fz_ff);
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::MotionConstraints;

    fn quiet_scenario() -> Scenario {
        Scenario {
            noise: NoiseModel::noiseless(),
            field: DisturbanceField {
                amplitude: 0.0,
                slopes: [0.0, 0.0],
                sensitivity: [0.0; 6],
                ..DisturbanceField::default()
            },
            ..Scenario::default()
        }
    }

    fn constraints() -> MotionConstraints {
        MotionConstraints {
            max_velocity: 0.08,
            max_acceleration: 2.5,
            max_jerk: 100.0,
            max_snap: 1000.0,
        }
    }

    fn still_trajectory() -> PlanarTrajectory {
        PlanarTrajectory::plan(&[(0.03, 0.03), (0.03, 0.03)], &constraints(), 1.0).unwrap()
    }

    #[test]
    fn zero_acceleration_ff_is_pure_gravity() {
        let params = PlantParams::default();
        let w = InputVector::from_parts(0.0, 0.0, [0.0; 6]);
        let ff = feedforward_command(&[0.0; 6], &params, None, &w);
        assert_eq!(ff, params.gravity_wrench());
    }

    #[test]
    fn gravity_only_augmentation_is_a_no_op() {
        struct GravityOnly(f64);
        impl EffortPredictor for GravityOnly {
            fn predict_effort(&self, _: &InputVector) -> f64 {
                self.0
            }
        }
        let params = PlantParams::default();
        let model = GravityOnly(params.gravity_z());
        let w = InputVector::from_parts(0.01, 0.02, [0.0; 6]);
        let acc = [0.5, -0.2, 0.0, 0.0, 0.0, 0.0];
        let plain = feedforward_command(&acc, &params, None, &w);
        let augmented = feedforward_command(&acc, &params, Some(&model), &w);
        assert_eq!(plain, augmented);
    }

    #[test]
    fn quiet_hold_keeps_error_at_the_noise_floor() {
        let mut scenario = quiet_scenario();
        scenario.noise.pose_std = [5e-9; 6];
        let traj = still_trajectory();
        let trace =
            run_closed_loop(&scenario, &traj, FrameOffset::constant([0.0; 6]), None).unwrap();
        let max_err = trace.z_error.iter().fold(0.0f64, |m, e| m.max(e.abs()));
        assert!(
            max_err < 12.0 * 5e-9,
            "zero-motion z error {max_err:.3e} m exceeds the noise-scaled bound"
        );
    }

    #[test]
    fn steady_state_effort_matches_the_integral_identity() {
        // Constant disturbance d: settled total effort = FF effort - d.
        let mut scenario = quiet_scenario();
        let d = 1.3;
        scenario.field.sensitivity = [0.0; 6];
        scenario.field.slopes = [0.0, 0.0];
        scenario.field.amplitude = 0.0;
        // Constant disturbance through a constant frame offset channel.
        scenario.field.sensitivity[0] = d / 1e-4;
        scenario.lead_in = 3.0;
        let offset = FrameOffset::constant([1e-4, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let traj = still_trajectory();
        let trace = run_closed_loop(&scenario, &traj, offset, None).unwrap();
        let last = trace.len() - 1;
        let identity = trace.fz_ff[last] - d;
        assert!(
            (trace.fz_total[last] - identity).abs() < 1e-3,
            "F_z = {} vs FF - d = {}",
            trace.fz_total[last],
            identity
        );
    }

    #[test]
    fn oracle_augmentation_cancels_the_disturbance() {
        let mut scenario = Scenario {
            noise: NoiseModel::noiseless(),
            ..Scenario::default()
        };
        scenario.lead_in = 2.0;
        let traj =
            PlanarTrajectory::plan(&[(0.02, 0.02), (0.02, 0.06)], &constraints(), 0.3).unwrap();
        let offset = FrameOffset::constant([2e-5, -1e-5, 0.0, 5e-5, 0.0, 0.0]);

        let baseline = run_closed_loop(&scenario, &traj, offset, None).unwrap();
        let oracle = OracleEffort {
            field: &scenario.field,
            gravity_z: scenario.plant.gravity_z(),
        };
        let augmented = run_closed_loop(&scenario, &traj, offset, Some(&oracle)).unwrap();

        let linf = |t: &TrackingTrace| t.z_error.iter().fold(0.0f64, |m, e| m.max(e.abs()));
        let (e0, e1) = (linf(&baseline), linf(&augmented));
        assert!(
            e1 <= 0.1 * e0,
            "oracle augmentation reduced linf only from {e0:.3e} to {e1:.3e}"
        );
    }

    #[test]
    fn traces_are_bitwise_reproducible() {
        let scenario = Scenario::default();
        let traj =
            PlanarTrajectory::plan(&[(0.02, 0.02), (0.05, 0.02)], &constraints(), 0.2).unwrap();
        let offset = FrameOffset::constant([1e-5; 6]);
        let a = run_closed_loop(&scenario, &traj, offset, None).unwrap();
        let b = run_closed_loop(&scenario, &traj, offset, None).unwrap();
        assert_eq!(a.z_error.len(), b.z_error.len());
        for (x, y) in a.z_error.iter().zip(&b.z_error) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        for (x, y) in a.fz_total.iter().zip(&b.fz_total) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }
}
