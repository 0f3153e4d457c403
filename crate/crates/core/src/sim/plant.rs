//! The linearized 6-DOF rigid-body plant.
//!
//! Small-angle double integrator: `qddot = B (W - G + d e_z)` with diagonal
//! `B = diag(1/m, 1/m, 1/m, 1/Ixx, 1/Iyy, 1/Izz)`, gravity compensation
//! vector `G = (0, 0, m g, 0, 0, 0)` and the scalar z disturbance `d`.
//! One step applies the exact zero-order-hold solution, so a constant force
//! reproduces the analytic parabola to machine precision.

use super::{SimError, SMALL_ANGLE_LIMIT};
use crate::input::InputVector;
use crate::sim::field::{disturbance_force, DisturbanceField, FrameOffset};

/// Pose, velocity and time of the translator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantState {
    /// Pose: x, y, z (m) and three small rotations (rad).
    pub q: [f64; 6],
    /// Velocities, same order.
    pub qdot: [f64; 6],
    /// Simulation time (s).
    pub t: f64,
}

impl PlantState {
    pub fn at_rest(x: f64, y: f64) -> Self {
        PlantState {
            q: [x, y, 0.0, 0.0, 0.0, 0.0],
            qdot: [0.0; 6],
            t: 0.0,
        }
    }
}

/// Mass/inertia, gravity and the control sample period.
#[derive(Debug, Clone, Copy)]
pub struct PlantParams {
    pub mass: f64,
    pub inertia: [f64; 3],
    pub gravity: f64,
    pub dt: f64,
}

impl Default for PlantParams {
    fn default() -> Self {
        // 9.4 kg puts the gravity feedforward near 92 N, so a 0.46 N
        // inter-run effort deviation is ~0.5 % of it.
        PlantParams {
            mass: 9.4,
            inertia: [0.07, 0.07, 0.14],
            gravity: 9.81,
            dt: 1e-3,
        }
    }
}

impl PlantParams {
    pub fn validate(&self) -> Result<(), SimError> {
        for (name, value) in [
            ("mass", self.mass),
            ("inertia_x", self.inertia[0]),
            ("inertia_y", self.inertia[1]),
            ("inertia_z", self.inertia[2]),
            ("gravity", self.gravity),
            ("dt", self.dt),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(SimError::BadParam { name, value });
            }
        }
        Ok(())
    }

    /// Gravity compensation wrench `G`.
    pub fn gravity_wrench(&self) -> [f64; 6] {
        [0.0, 0.0, self.mass * self.gravity, 0.0, 0.0, 0.0]
    }

    /// z component of the gravity compensation.
    pub fn gravity_z(&self) -> f64 {
        self.mass * self.gravity
    }

    /// Diagonal of `B`.
    pub fn inverse_inertia(&self) -> [f64; 6] {
        [
            1.0 / self.mass,
            1.0 / self.mass,
            1.0 / self.mass,
            1.0 / self.inertia[0],
            1.0 / self.inertia[1],
            1.0 / self.inertia[2],
        ]
    }
}

/// Advance one sample period under a commanded wrench and a z disturbance
/// force held constant across the step.
pub fn plant_step_forced(
    state: &PlantState,
    wrench: &[f64; 6],
    params: &PlantParams,
    dist_z: f64,
) -> Result<PlantState, SimError> {
    for (axis, w) in wrench.iter().enumerate() {
        if !w.is_finite() {
            return Err(SimError::NonFiniteWrench { axis });
        }
    }
    let dt = params.dt;
    let b = params.inverse_inertia();
    let g = params.gravity_wrench();
    let mut q = state.q;
    let mut qdot = state.qdot;
    for i in 0..6 {
        let force = wrench[i] - g[i] + if i == 2 { dist_z } else { 0.0 };
        let acc = force * b[i];
        q[i] += qdot[i] * dt + 0.5 * acc * dt * dt;
        qdot[i] += acc * dt;
    }
    let t = state.t + dt;
    for axis in 3..6 {
        if q[axis].abs() >= SMALL_ANGLE_LIMIT {
            return Err(SimError::SmallAngleViolated {
                axis,
                value: q[axis],
                t,
            });
        }
    }
    Ok(PlantState { q, qdot, t })
}

/// As [`plant_step_forced`], evaluating the disturbance field at the
/// current translator position and frame offset.
pub fn plant_step(
    state: &PlantState,
    wrench: &[f64; 6],
    params: &PlantParams,
    field: &DisturbanceField,
    offset: &FrameOffset,
) -> Result<PlantState, SimError> {
    let w = InputVector::from_parts(state.q[0], state.q[1], offset.at(state.t));
    plant_step_forced(state, wrench, params, disturbance_force(field, &w))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hover_wrench(params: &PlantParams) -> [f64; 6] {
        params.gravity_wrench()
    }

    #[test]
    fn constant_force_reproduces_the_parabola() {
        let params = PlantParams::default();
        let f = 3.0;
        let mut wrench = hover_wrench(&params);
        wrench[2] += f;
        let mut state = PlantState::at_rest(0.0, 0.0);
        for _ in 0..500 {
            state = plant_step_forced(&state, &wrench, &params, 0.0).unwrap();
        }
        let t = state.t;
        let expected = 0.5 * (f / params.mass) * t * t;
        assert!(
            (state.q[2] - expected).abs() < 1e-12,
            "z = {} vs analytic {}",
            state.q[2],
            expected
        );
        assert!((state.qdot[2] - (f / params.mass) * t).abs() < 1e-12);
    }

    #[test]
    fn balanced_hover_holds_still() {
        let params = PlantParams::default();
        let wrench = hover_wrench(&params);
        let mut state = PlantState::at_rest(0.03, 0.05);
        for _ in 0..100 {
            state = plant_step_forced(&state, &wrench, &params, 0.0).unwrap();
        }
        assert_eq!(state.q[0], 0.03);
        assert_eq!(state.q[2], 0.0);
        assert_eq!(state.qdot, [0.0; 6]);
    }

    #[test]
    fn random_force_sequence_matches_fine_stepping() {
        // The same piecewise-constant wrench sequence integrated with
        // dt/100 sub-steps must agree closely (ZOH is exact per step, so
        // the only differences are rounding).
        use rand::Rng;
        use rand_chacha::rand_core::SeedableRng;
        let params = PlantParams::default();
        let mut fine = params;
        fine.dt = params.dt / 100.0;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(40);
        let mut coarse_state = PlantState::at_rest(0.0, 0.0);
        let mut fine_state = coarse_state;
        for _ in 0..200 {
            let mut wrench = hover_wrench(&params);
            for w in wrench.iter_mut().take(3) {
                *w += rng.random_range(-5.0..5.0);
            }
            coarse_state = plant_step_forced(&coarse_state, &wrench, &params, 0.0).unwrap();
            for _ in 0..100 {
                fine_state = plant_step_forced(&fine_state, &wrench, &fine, 0.0).unwrap();
            }
        }
        let scale = coarse_state.q[2].abs().max(1e-6);
        for i in 0..3 {
            assert!(
                (coarse_state.q[i] - fine_state.q[i]).abs() <= 1e-6 * scale,
                "axis {i}: {} vs {}",
                coarse_state.q[i],
                fine_state.q[i]
            );
        }
    }

    #[test]
    fn rejects_non_finite_wrench() {
        let params = PlantParams::default();
        let state = PlantState::at_rest(0.0, 0.0);
        let mut wrench = [0.0; 6];
        wrench[4] = f64::NAN;
        assert!(matches!(
            plant_step_forced(&state, &wrench, &params, 0.0),
            Err(SimError::NonFiniteWrench { axis: 4 })
        ));
    }

    #[test]
    fn guards_the_small_angle_assumption() {
        let params = PlantParams::default();
        let mut state = PlantState::at_rest(0.0, 0.0);
        let mut wrench = hover_wrench(&params);
        wrench[3] = 50.0; // torque that will wind up the rotation
        let mut tripped = false;
        for _ in 0..2000 {
            match plant_step_forced(&state, &wrench, &params, 0.0) {
                Ok(s) => state = s,
                Err(SimError::SmallAngleViolated { axis: 3, .. }) => {
                    tripped = true;
                    break;
                }
                Err(e) => panic!("unexpected error: {e}"),
            }
        }
        assert!(tripped);
    }
}
