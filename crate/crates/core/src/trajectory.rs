//! Fourth-order (snap-limited) point-to-point reference trajectories.
//!
//! A move is the classic symmetric 15-segment profile: piecewise-constant
//! snap, continuous jerk / acceleration / velocity / position, zero terminal
//! derivatives. Phase durations are found by saturating the jerk,
//! acceleration and velocity bounds in turn, then rounded up to the
//! planner's time quantum (as sampled-data reference generators do), with
//! the snap recomputed to hit the target distance exactly; rounding up only
//! relaxes the bounds. Moves too short to reach the velocity bound shrink
//! all phases proportionally first (quartic distance scaling).
//!
//! Planar paths chain point-to-point legs; a diagonal leg runs two 1-D
//! profiles stretched to a common duration (time scaling with matching snap
//! reduction preserves the travelled distance and never violates a bound).

use thiserror::Error;

/// Internal time resolution of planned profiles (s). Segment boundaries
/// land on this grid, which keeps sampled-data consumers (and the
/// derivative-chain integration checks) clean.
pub const TIME_QUANTUM: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("motion constraint {name} must be strictly positive and finite, got {value}")]
    BadConstraint { name: &'static str, value: f64 },
    #[error("trajectory endpoint is not finite")]
    NonFiniteEndpoint,
    #[error("planar path needs at least two waypoints")]
    TooFewWaypoints,
}

/// Bounds on velocity, acceleration, jerk and snap.
#[derive(Debug, Clone, Copy)]
pub struct MotionConstraints {
    pub max_velocity: f64,
    pub max_acceleration: f64,
    pub max_jerk: f64,
    pub max_snap: f64,
}

impl MotionConstraints {
    pub fn validate(&self) -> Result<(), TrajectoryError> {
        for (name, value) in [
            ("max_velocity", self.max_velocity),
            ("max_acceleration", self.max_acceleration),
            ("max_jerk", self.max_jerk),
            ("max_snap", self.max_snap),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(TrajectoryError::BadConstraint { name, value });
            }
        }
        Ok(())
    }
}

/// State at one instant along a profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub position: f64,
    pub velocity: f64,
    pub acceleration: f64,
    pub jerk: f64,
    pub snap: f64,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    start_time: f64,
    duration: f64,
    snap: f64,
    position: f64,
    velocity: f64,
    acceleration: f64,
    jerk: f64,
}

/// Phase durations in quanta: snap ramp, jerk hold, acceleration hold,
/// velocity hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Phases {
    ts: u64,
    tj: u64,
    ta: u64,
    tv: u64,
}

impl Phases {
    fn total_quanta(&self) -> u64 {
        8 * self.ts + 4 * self.tj + 2 * self.ta + self.tv
    }

    fn seconds(&self) -> (f64, f64, f64, f64) {
        (
            self.ts as f64 * TIME_QUANTUM,
            self.tj as f64 * TIME_QUANTUM,
            self.ta as f64 * TIME_QUANTUM,
            self.tv as f64 * TIME_QUANTUM,
        )
    }

    /// Distance travelled per unit snap:
    /// `ts (ts+tj) (2ts+tj+ta) (4ts+2tj+ta+tv)`.
    fn distance_factor(&self) -> f64 {
        let (ts, tj, ta, tv) = self.seconds();
        ts * (ts + tj) * (2.0 * ts + tj + ta) * (4.0 * ts + 2.0 * tj + ta + tv)
    }
}

fn quanta_ceil(t: f64) -> u64 {
    if t <= 0.0 {
        0
    } else {
        (t / TIME_QUANTUM - 1e-9).ceil().max(1.0) as u64
    }
}

/// One planned point-to-point move.
#[derive(Debug, Clone)]
pub struct TrajectoryProfile {
    start: f64,
    end: f64,
    duration: f64,
    peak_velocity: f64,
    phases: Phases,
    snap: f64,
    segments: Vec<Segment>,
}

/// Relative durations of the 15 segments in phase slots (ts, tj, ta, tv)
/// and the sign of the snap in each.
const SEGMENT_PATTERN: [(usize, f64); 15] = [
    (0, 1.0),
    (1, 0.0),
    (0, -1.0),
    (2, 0.0),
    (0, -1.0),
    (1, 0.0),
    (0, 1.0),
    (3, 0.0),
    (0, -1.0),
    (1, 0.0),
    (0, 1.0),
    (2, 0.0),
    (0, 1.0),
    (1, 0.0),
    (0, -1.0),
];

impl TrajectoryProfile {
    /// Build from quantized phases; the snap magnitude comes from the
    /// target distance, so the endpoint is exact by construction.
    fn from_phases(start: f64, end: f64, phases: Phases) -> Self {
        let d = (end - start).abs();
        let factor = phases.distance_factor();
        let snap = if factor > 0.0 { d / factor } else { 0.0 };
        let direction = if end >= start { 1.0 } else { -1.0 };
        let (ts, tj, ta, tv) = phases.seconds();
        let durations = [ts, tj, ta, tv];
        let mut segments = Vec::with_capacity(15);
        let (mut t, mut p, mut v, mut a, mut j) = (0.0, start, 0.0, 0.0, 0.0);
        for (slot, sign) in SEGMENT_PATTERN {
            let dt = durations[slot];
            let s = direction * sign * snap;
            segments.push(Segment {
                start_time: t,
                duration: dt,
                snap: s,
                position: p,
                velocity: v,
                acceleration: a,
                jerk: j,
            });
            p += v * dt + a * dt * dt / 2.0 + j * dt.powi(3) / 6.0 + s * dt.powi(4) / 24.0;
            v += a * dt + j * dt * dt / 2.0 + s * dt.powi(3) / 6.0;
            a += j * dt + s * dt * dt / 2.0;
            j += s * dt;
            t += dt;
        }
        let peak_velocity = segments[7].velocity.abs();
        TrajectoryProfile {
            start,
            end,
            duration: t,
            peak_velocity,
            phases,
            snap,
            segments,
        }
    }

    fn degenerate(p: f64) -> Self {
        TrajectoryProfile {
            start: p,
            end: p,
            duration: 0.0,
            peak_velocity: 0.0,
            phases: Phases {
                ts: 0,
                tj: 0,
                ta: 0,
                tv: 0,
            },
            snap: 0.0,
            segments: Vec::new(),
        }
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    /// Snap magnitude actually used (at most the planning bound).
    pub fn snap_magnitude(&self) -> f64 {
        self.snap
    }

    /// Magnitude of the constant-velocity plateau (zero when the move has
    /// no cruise phase).
    pub fn peak_velocity(&self) -> f64 {
        self.peak_velocity
    }

    /// Whether the profile contains a constant-velocity cruise segment.
    pub fn has_cruise(&self) -> bool {
        self.phases.tv > 0
    }

    fn total_quanta(&self) -> u64 {
        self.phases.total_quanta()
    }

    /// Stretch the move to `total` quanta (>= its own duration): phase
    /// durations scale up and the snap scales down to keep the distance,
    /// so every derivative bound relaxes.
    fn stretched_to_quanta(&self, total: u64) -> TrajectoryProfile {
        let own = self.total_quanta();
        if self.segments.is_empty() || total <= own {
            return self.clone();
        }
        let scale = total as f64 / own as f64;
        let ceil_scaled = |n: u64| -> u64 {
            if n == 0 {
                0
            } else {
                (n as f64 * scale - 1e-9).ceil() as u64
            }
        };
        let mut ts = ceil_scaled(self.phases.ts).max(1);
        let mut tj = ceil_scaled(self.phases.tj);
        let mut ta = ceil_scaled(self.phases.ta);
        // Land exactly on the target by adjusting the cruise phase; take
        // any overshoot from rounding back out of the other phases.
        loop {
            let rest = total as i64 - (8 * ts + 4 * tj + 2 * ta) as i64;
            if rest >= 0 {
                return TrajectoryProfile::from_phases(
                    self.start,
                    self.end,
                    Phases {
                        ts,
                        tj,
                        ta,
                        tv: rest as u64,
                    },
                );
            }
            if ta > 0 {
                ta -= 1;
            } else if tj > 0 {
                tj -= 1;
            } else if ts > 1 {
                ts -= 1;
            } else {
                return TrajectoryProfile::from_phases(
                    self.start,
                    self.end,
                    Phases { ts, tj, ta, tv: 0 },
                );
            }
        }
    }

    /// Stretch to at least `duration` seconds (rounded up to the quantum).
    pub fn stretched_to(&self, duration: f64) -> TrajectoryProfile {
        self.stretched_to_quanta(quanta_ceil(duration))
    }
}

/// Plan a time-near-optimal fourth-order move from `p0` to `p1`.
pub fn plan_fourth_order(
    p0: f64,
    p1: f64,
    c: &MotionConstraints,
) -> Result<TrajectoryProfile, TrajectoryError> {
    c.validate()?;
    if !(p0.is_finite() && p1.is_finite()) {
        return Err(TrajectoryError::NonFiniteEndpoint);
    }
    let d = (p1 - p0).abs();
    if d == 0.0 {
        return Ok(TrajectoryProfile::degenerate(p0));
    }

    let s = c.max_snap;
    // Saturate jerk, then acceleration.
    let mut ts = c.max_jerk / s;
    let mut tj;
    if s * ts * ts > c.max_acceleration {
        ts = (c.max_acceleration / s).sqrt();
        tj = 0.0;
    } else {
        tj = c.max_acceleration / (s * ts) - ts;
    }
    // Velocity bound: delta-v of a full acceleration phase is
    // a_pk (2 ts + tj + ta) with a_pk = s ts (ts + tj).
    let mut ta;
    let v_no_hold = s * ts * (ts + tj) * (2.0 * ts + tj);
    if v_no_hold > c.max_velocity {
        ta = 0.0;
        if 2.0 * s * ts.powi(3) >= c.max_velocity {
            ts = (c.max_velocity / (2.0 * s)).cbrt();
            tj = 0.0;
        } else {
            // Solve (ts + tj)(2 ts + tj) = v / (s ts) for tj.
            tj = 0.5 * (-3.0 * ts + (ts * ts + 4.0 * c.max_velocity / (s * ts)).sqrt());
        }
    } else {
        ta = (c.max_velocity - v_no_hold) / (s * ts * (ts + tj));
    }
    // Distance: d = v_pk (4 ts + 2 tj + ta + tv).
    let v_pk = s * ts * (ts + tj) * (2.0 * ts + tj + ta);
    let d_no_cruise = v_pk * (4.0 * ts + 2.0 * tj + ta);
    let tv;
    if d_no_cruise > d {
        // Too short to reach the velocity bound: shrink all phases.
        // Distance scales with the fourth power of time at fixed snap.
        let kappa = (d / d_no_cruise).powf(0.25);
        ts *= kappa;
        tj *= kappa;
        ta *= kappa;
        tv = 0.0;
    } else {
        tv = (d - d_no_cruise) / v_pk;
    }

    // Round phases up to the quantum; the snap recomputed from the target
    // distance can only shrink, so every bound stays satisfied.
    let phases = Phases {
        ts: quanta_ceil(ts),
        tj: quanta_ceil(tj),
        ta: quanta_ceil(ta),
        tv: quanta_ceil(tv),
    };
    Ok(TrajectoryProfile::from_phases(p0, p1, phases))
}

/// Evaluate position and derivatives at time `t` (clamped to the profile).
///
/// At a snap discontinuity (sampled within 1 ns of a segment boundary) the
/// reported snap is the mean of the left and right limits, which makes
/// trapezoidal re-integration of the sampled snap exact across boundaries.
pub fn sample_trajectory(profile: &TrajectoryProfile, t: f64) -> TrajectorySample {
    if profile.segments.is_empty() {
        return TrajectorySample {
            position: profile.start,
            velocity: 0.0,
            acceleration: 0.0,
            jerk: 0.0,
            snap: 0.0,
        };
    }
    const BOUNDARY_TOL: f64 = 1e-9;
    let t = t.clamp(0.0, profile.duration);
    let mut idx = profile.segments.len() - 1;
    for (i, s) in profile.segments.iter().enumerate() {
        if t < s.start_time + s.duration {
            idx = i;
            break;
        }
    }
    let seg = &profile.segments[idx];
    let tau = (t - seg.start_time).clamp(0.0, seg.duration);
    let (p, v, a, j, s) = (
        seg.position,
        seg.velocity,
        seg.acceleration,
        seg.jerk,
        seg.snap,
    );

    // Snap at the jump itself: average of the adjacent segment values.
    let mut snap = s;
    if tau <= BOUNDARY_TOL && t > BOUNDARY_TOL {
        if let Some(prev) = profile.segments[..idx]
            .iter()
            .rev()
            .find(|sg| sg.duration > 0.0)
        {
            if prev.snap != s {
                snap = 0.5 * (prev.snap + s);
            }
        }
    } else if seg.duration - tau <= BOUNDARY_TOL {
        if let Some(next) = profile.segments[idx + 1..]
            .iter()
            .find(|sg| sg.duration > 0.0)
        {
            if next.snap != s {
                snap = 0.5 * (s + next.snap);
            }
        }
    }

    TrajectorySample {
        position: p + v * tau + a * tau * tau / 2.0 + j * tau.powi(3) / 6.0 + s * tau.powi(4) / 24.0,
        velocity: v + a * tau + j * tau * tau / 2.0 + s * tau.powi(3) / 6.0,
        acceleration: a + j * tau + s * tau * tau / 2.0,
        jerk: j + s * tau,
        snap,
    }
}

/// One leg of a planar path: synchronized x and y profiles.
#[derive(Debug, Clone)]
pub struct PlanarMove {
    pub x: TrajectoryProfile,
    pub y: TrajectoryProfile,
    pub start_time: f64,
    pub duration: f64,
}

/// Planar sample: per-axis position, velocity and acceleration.
#[derive(Debug, Clone, Copy)]
pub struct PlanarSample {
    pub position: [f64; 2],
    pub velocity: [f64; 2],
    pub acceleration: [f64; 2],
}

/// A chained sequence of planar moves with dwell pauses in between.
#[derive(Debug, Clone)]
pub struct PlanarTrajectory {
    moves: Vec<PlanarMove>,
    duration: f64,
    start: [f64; 2],
}

impl PlanarTrajectory {
    /// Plan through `waypoints`, pausing `dwell` seconds after each leg.
    pub fn plan(
        waypoints: &[(f64, f64)],
        c: &MotionConstraints,
        dwell: f64,
    ) -> Result<Self, TrajectoryError> {
        if waypoints.len() < 2 {
            return Err(TrajectoryError::TooFewWaypoints);
        }
        let mut moves = Vec::new();
        let mut t = dwell.max(0.0);
        for pair in waypoints.windows(2) {
            let x = plan_fourth_order(pair[0].0, pair[1].0, c)?;
            let y = plan_fourth_order(pair[0].1, pair[1].1, c)?;
            let quanta = x.total_quanta().max(y.total_quanta());
            let x = x.stretched_to_quanta(quanta);
            let y = y.stretched_to_quanta(quanta);
            let duration = x.duration().max(y.duration());
            moves.push(PlanarMove {
                x,
                y,
                start_time: t,
                duration,
            });
            t += duration + dwell.max(0.0);
        }
        Ok(PlanarTrajectory {
            moves,
            duration: t,
            start: [waypoints[0].0, waypoints[0].1],
        })
    }

    /// The reference scan pattern over the square plane `[lo, hi]^2`:
    /// +y move, diagonal (+x, -y), another +y move, diagonal return to the
    /// start corner.
    pub fn scan_square(
        lo: f64,
        hi: f64,
        c: &MotionConstraints,
        dwell: f64,
    ) -> Result<Self, TrajectoryError> {
        Self::plan(
            &[(lo, lo), (lo, hi), (hi, lo), (hi, hi), (lo, lo)],
            c,
            dwell,
        )
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn moves(&self) -> &[PlanarMove] {
        &self.moves
    }

    pub fn sample(&self, t: f64) -> PlanarSample {
        // Before the first move / between moves: hold the last endpoint.
        let mut hold = self.start;
        for m in &self.moves {
            if t < m.start_time {
                break;
            }
            if t <= m.start_time + m.duration {
                let local = t - m.start_time;
                let sx = sample_trajectory(&m.x, local);
                let sy = sample_trajectory(&m.y, local);
                return PlanarSample {
                    position: [sx.position, sy.position],
                    velocity: [sx.velocity, sy.velocity],
                    acceleration: [sx.acceleration, sy.acceleration],
                };
            }
            hold = [m.x.end(), m.y.end()];
        }
        PlanarSample {
            position: hold,
            velocity: [0.0, 0.0],
            acceleration: [0.0, 0.0],
        }
    }

    /// Mark the steps (at period `dt`, `n` steps) where either axis sits on
    /// its constant-velocity plateau. Detection works purely on the
    /// reference profile: a step counts when an axis speed is within 1e-9
    /// of that leg's cruise speed.
    pub fn constant_velocity_mask(&self, dt: f64, n: usize) -> Vec<bool> {
        (0..n)
            .map(|i| {
                let t = i as f64 * dt;
                self.moves.iter().any(|m| {
                    if t < m.start_time || t > m.start_time + m.duration {
                        return false;
                    }
                    let local = t - m.start_time;
                    let on_plateau = |profile: &TrajectoryProfile| {
                        profile.has_cruise()
                            && profile.peak_velocity() > 0.0
                            && (sample_trajectory(profile, local).velocity.abs()
                                - profile.peak_velocity())
                            .abs()
                                < 1e-9
                    };
                    on_plateau(&m.x) || on_plateau(&m.y)
                })
            })
            .collect()
    }
}
