//! Per-axis feedback: PID (serial PI x lead form) with an output low-pass,
//! discretized at the control rate with the bilinear transform.
//!
//! Gains come from a loop-shaping rule on the double-integrator axis: the
//! integral corner sits a decade below crossover, the lead spreads a factor
//! five around it (about 60 degrees of phase lead) and a second-order
//! Butterworth low-pass rolls off at eight times crossover. The crossover
//! itself is calibrated so that the -3 dB closed-loop bandwidth of the
//! complementary sensitivity lands on the requested figure.

use num_complex::Complex64;

use super::SimError;
use crate::sim::plant::PlantParams;

/// First-order section, direct form II transposed.
#[derive(Debug, Clone, Copy)]
struct FirstOrder {
    b0: f64,
    b1: f64,
    a1: f64,
    state: f64,
}

impl FirstOrder {
    fn step(&mut self, x: f64) -> f64 {
        let y = self.b0 * x + self.state;
        self.state = self.b1 * x - self.a1 * y;
        y
    }

    fn response(&self, z_inv: Complex64) -> Complex64 {
        (self.b0 + self.b1 * z_inv) / (1.0 + self.a1 * z_inv)
    }
}

/// Biquad section, direct form II transposed.
#[derive(Debug, Clone, Copy)]
struct Biquad {
    b0: f64,
    b1: f64,
    b2: f64,
    a1: f64,
    a2: f64,
    s1: f64,
    s2: f64,
}

impl Biquad {
    fn step(&mut self, x: f64) -> f64 {
        let y = self.b0 * x + self.s1;
        self.s1 = self.b1 * x - self.a1 * y + self.s2;
        self.s2 = self.b2 * x - self.a2 * y;
        y
    }

    fn response(&self, z_inv: Complex64) -> Complex64 {
        (self.b0 + self.b1 * z_inv + self.b2 * z_inv * z_inv)
            / (1.0 + self.a1 * z_inv + self.a2 * z_inv * z_inv)
    }

    /// Jury criterion for both poles strictly inside the unit circle.
    fn is_stable(&self) -> bool {
        self.a2.abs() < 1.0 && self.a1.abs() < 1.0 + self.a2
    }
}

/// One axis of the feedback controller.
#[derive(Debug, Clone, Copy)]
pub struct AxisController {
    pi: FirstOrder,
    lead: FirstOrder,
    lowpass: Biquad,
    /// Gain crossover this axis was designed for (rad/s).
    pub crossover: f64,
    /// Integral gain Ki of the parallel-form equivalent (N per m*s); the
    /// steady-state output ramps at Ki * error.
    pub ki: f64,
}

const INTEGRAL_RATIO: f64 = 10.0;
const LEAD_SPREAD: f64 = 5.0;
const LOWPASS_RATIO: f64 = 8.0;

impl AxisController {
    /// Build the axis compensator for a gain crossover `omega_c` on a
    /// double-integrator plant with the given inertia.
    fn with_crossover(inertia: f64, dt: f64, omega_c: f64) -> Result<Self, SimError> {
        let k = 2.0 / dt; // bilinear prewarp-free frequency constant
        let w_i = omega_c / INTEGRAL_RATIO;
        let w_z = omega_c / LEAD_SPREAD;
        let w_p = omega_c * LEAD_SPREAD;
        let w_l = omega_c * LOWPASS_RATIO;

        // PI: (s + w_i) / s
        let pi = FirstOrder {
            b0: (k + w_i) / k,
            b1: (w_i - k) / k,
            a1: -1.0,
            state: 0.0,
        };
        // Lead: (w_p / w_z) (s + w_z) / (s + w_p)
        let gain_lead = w_p / w_z;
        let lead = FirstOrder {
            b0: gain_lead * (k + w_z) / (k + w_p),
            b1: gain_lead * (w_z - k) / (k + w_p),
            a1: (w_p - k) / (k + w_p),
            state: 0.0,
        };
        // Second-order Butterworth low-pass at w_l.
        let sq2 = std::f64::consts::SQRT_2;
        let a0 = k * k + sq2 * w_l * k + w_l * w_l;
        let lowpass = Biquad {
            b0: w_l * w_l / a0,
            b1: 2.0 * w_l * w_l / a0,
            b2: w_l * w_l / a0,
            a1: (2.0 * w_l * w_l - 2.0 * k * k) / a0,
            a2: (k * k - sq2 * w_l * k + w_l * w_l) / a0,
            s1: 0.0,
            s2: 0.0,
        };
        if lead.a1.abs() >= 1.0 || !lowpass.is_stable() {
            return Err(SimError::DesignFailed {
                reason: format!("unstable discretization at crossover {omega_c:.1} rad/s"),
            });
        }

        let mut axis = AxisController {
            pi,
            lead,
            lowpass,
            crossover: omega_c,
            ki: 0.0,
        };
        // Normalize the open loop to unit gain at crossover.
        let mag = (axis.response(omega_c, dt) * plant_response(inertia, dt, omega_c)).norm();
        let g = 1.0 / mag;
        axis.pi.b0 *= g;
        axis.pi.b1 *= g;
        // Parallel-form Ki: the lead and low-pass have unit DC gain, so the
        // low-frequency controller behavior is g * w_i / s.
        axis.ki = g * w_i;
        Ok(axis)
    }

    /// One feedback update: error in, force out.
    pub fn step(&mut self, error: f64) -> f64 {
        let u = self.pi.step(error);
        let u = self.lead.step(u);
        self.lowpass.step(u)
    }

    /// Controller frequency response at `omega` rad/s.
    pub fn response(&self, omega: f64, dt: f64) -> Complex64 {
        let z_inv = (-Complex64::i() * omega * dt).exp();
        self.pi.response(z_inv) * self.lead.response(z_inv) * self.lowpass.response(z_inv)
    }

    pub fn reset(&mut self) {
        self.pi.state = 0.0;
        self.lead.state = 0.0;
        self.lowpass.s1 = 0.0;
        self.lowpass.s2 = 0.0;
    }
}

/// ZOH discrete response of the double integrator `1 / (I s^2)`.
fn plant_response(inertia: f64, dt: f64, omega: f64) -> Complex64 {
    let z = (Complex64::i() * omega * dt).exp();
    (dt * dt / (2.0 * inertia)) * (z + 1.0) / ((z - 1.0) * (z - 1.0))
}

/// -3 dB bandwidth (Hz) of the complementary sensitivity for one axis.
pub fn closed_loop_bandwidth_hz(axis: &AxisController, inertia: f64, dt: f64) -> f64 {
    let t_mag = |f_hz: f64| {
        let omega = 2.0 * std::f64::consts::PI * f_hz;
        let l = axis.response(omega, dt) * plant_response(inertia, dt, omega);
        (l / (1.0 + l)).norm()
    };
    let target = std::f64::consts::FRAC_1_SQRT_2;
    // Find the first crossing on a log sweep, then bisect.
    let mut lo = 0.05;
    let mut hi = lo;
    let nyquist = 0.5 / dt;
    while hi < 0.98 * nyquist && t_mag(hi) > target {
        lo = hi;
        hi *= 1.1;
    }
    if hi >= 0.98 * nyquist {
        return nyquist;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if t_mag(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Design one axis so the closed-loop -3 dB bandwidth hits `bandwidth_hz`.
pub fn design_axis(inertia: f64, dt: f64, bandwidth_hz: f64) -> Result<AxisController, SimError> {
    if !(bandwidth_hz.is_finite() && bandwidth_hz > 0.0) {
        return Err(SimError::DesignFailed {
            reason: format!("bandwidth target {bandwidth_hz} Hz out of range"),
        });
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut lo = two_pi * bandwidth_hz / 6.0;
    let mut hi = two_pi * bandwidth_hz * 2.0;
    let bw_of = |omega_c: f64| -> Result<f64, SimError> {
        let axis = AxisController::with_crossover(inertia, dt, omega_c)?;
        Ok(closed_loop_bandwidth_hz(&axis, inertia, dt))
    };
    if bw_of(lo)? > bandwidth_hz || bw_of(hi)? < bandwidth_hz {
        return Err(SimError::DesignFailed {
            reason: format!("cannot bracket {bandwidth_hz} Hz at sample period {dt}"),
        });
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if bw_of(mid)? < bandwidth_hz {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    AxisController::with_crossover(inertia, dt, 0.5 * (lo + hi))
}

/// Feedback configuration: one bandwidth target shared by all six axes.
#[derive(Debug, Clone, Copy)]
pub struct ControllerConfig {
    pub bandwidth_hz: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig { bandwidth_hz: 9.5 }
    }
}

impl ControllerConfig {
    pub fn build(&self, params: &PlantParams) -> Result<ControllerState, SimError> {
        params.validate()?;
        let inertias = params.inverse_inertia().map(|b| 1.0 / b);
        let mut axes = Vec::with_capacity(6);
        for inertia in inertias {
            axes.push(design_axis(inertia, params.dt, self.bandwidth_hz)?);
        }
        Ok(ControllerState {
            axes: axes.try_into().expect("six axes"),
            bandwidth_hz: self.bandwidth_hz,
        })
    }
}

/// All six axis controllers plus their design target.
#[derive(Debug, Clone)]
pub struct ControllerState {
    pub axes: [AxisController; 6],
    pub bandwidth_hz: f64,
}

impl ControllerState {
    /// One feedback update for the full pose error.
    pub fn feedback_step(&mut self, error: &[f64; 6]) -> [f64; 6] {
        let mut wrench = [0.0; 6];
        for (i, (axis, e)) in self.axes.iter_mut().zip(error).enumerate() {
            wrench[i] = axis.step(*e);
        }
        wrench
    }

    pub fn reset(&mut self) {
        for axis in self.axes.iter_mut() {
            axis.reset();
        }
    }
}
