//! Experiment orchestration: grid measurement campaigns, dataset assembly,
//! fit metrics, and the with/without-augmentation tracking comparison.
//!
//! A campaign steps the closed loop through every point of an x-y grid,
//! waits at each point until the total z effort has settled (std over a
//! sliding window under a tolerance), and records the settled effort with
//! the input vector (reference position + the realized frame offset). At
//! steady state the integral action makes the total effort equal to the
//! feedforward effort minus the local disturbance, so these records are
//! direct disturbance measurements.

use rand::seq::SliceRandom;
use thiserror::Error;

use crate::gp::{Dataset, GpError};
use crate::input::InputVector;
use crate::seed::{rng_for, rng_indexed};
use crate::sim::{ClosedLoop, EffortPredictor, Scenario, SimError};
use crate::spectrum::{GridScan, SpectrumError};
use crate::trajectory::PlanarTrajectory;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("vectors have different lengths: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },
    #[error("best-fit ratio needs at least two samples, got {0}")]
    TooShort(usize),
    #[error("targets are constant; the best-fit-ratio denominator is zero")]
    ConstantTargets,
    #[error("error vector is empty")]
    Empty,
}

#[derive(Debug, Error)]
pub enum CampaignError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Gp(#[from] GpError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error("campaign config invalid: {reason}")]
    BadConfig { reason: String },
    #[error(
        "settling timeout in run {run} at grid point {point} (x={x:.4} m, y={y:.4} m): \
         effort std never dropped below tolerance"
    )]
    SettlingTimeout {
        run: usize,
        point: usize,
        x: f64,
        y: f64,
    },
    #[error("subsample of {requested} points requested but only {available} available")]
    SubsampleTooLarge { requested: usize, available: usize },
    #[error("measurement set does not cover the grid: {0}")]
    IncompleteGrid(String),
}

/// One grid campaign's sweep parameters.
#[derive(Debug, Clone, Copy)]
pub struct CampaignConfig {
    pub x_bounds: (f64, f64),
    pub y_bounds: (f64, f64),
    /// Grid pitch (m), both axes.
    pub spacing: f64,
    pub runs: usize,
    /// Settled when the effort std over the window drops below this (N).
    pub settle_tolerance: f64,
    /// Sliding window length (s).
    pub settle_window: f64,
    /// Per-point settling timeout (s).
    pub settle_timeout: f64,
    pub seed: u64,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            x_bounds: (0.01, 0.1),
            y_bounds: (0.01, 0.1),
            spacing: 0.002,
            runs: 6,
            settle_tolerance: 1e-3,
            settle_window: 0.2,
            settle_timeout: 5.0,
            seed: 0,
        }
    }
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<(), CampaignError> {
        let bad = |reason: String| Err(CampaignError::BadConfig { reason });
        if !(self.spacing.is_finite() && self.spacing > 0.0) {
            return bad(format!("spacing {} must be positive", self.spacing));
        }
        if self.x_bounds.1 <= self.x_bounds.0 || self.y_bounds.1 <= self.y_bounds.0 {
            return bad("grid bounds must be ordered".to_string());
        }
        if self.runs == 0 {
            return bad("at least one run required".to_string());
        }
        if self.settle_tolerance <= 0.0 || self.settle_window <= 0.0 || self.settle_timeout <= 0.0 {
            return bad("settling parameters must be positive".to_string());
        }
        Ok(())
    }

    /// Number of grid points per axis.
    pub fn grid_shape(&self) -> (usize, usize) {
        let count = |lo: f64, hi: f64| ((hi - lo) / self.spacing + 1e-9).floor() as usize + 1;
        (
            count(self.x_bounds.0, self.x_bounds.1),
            count(self.y_bounds.0, self.y_bounds.1),
        )
    }

    /// Visit order: serpentine over rows, so consecutive points are one
    /// pitch apart.
    pub fn grid_points(&self) -> Vec<(f64, f64)> {
        let (nx, ny) = self.grid_shape();
        let mut points = Vec::with_capacity(nx * ny);
        for iy in 0..ny {
            let y = self.y_bounds.0 + iy as f64 * self.spacing;
            let xs: Vec<usize> = if iy % 2 == 0 {
                (0..nx).collect()
            } else {
                (0..nx).rev().collect()
            };
            for ix in xs {
                points.push((self.x_bounds.0 + ix as f64 * self.spacing, y));
            }
        }
        points
    }
}

/// One settled measurement: input vector plus total settled z effort (N).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementRecord {
    pub input: InputVector,
    pub effort: f64,
}

/// One campaign run's worth of settled measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    pub run: usize,
    pub records: Vec<MeasurementRecord>,
}

impl MeasurementSet {
    pub fn to_dataset(&self) -> Result<Dataset, GpError> {
        Dataset::new(
            self.records.iter().map(|r| r.input).collect(),
            self.records.iter().map(|r| r.effort).collect(),
        )
    }
}

/// Sweep the grid `cfg.runs` times, drawing a fresh frame offset per run.
/// Fully deterministic for a fixed `(cfg, scenario)` pair: offsets and
/// measurement noise derive from indexed sub-streams of `cfg.seed`.
pub fn run_grid_campaign(
    cfg: &CampaignConfig,
    scenario: &Scenario,
) -> Result<Vec<MeasurementSet>, CampaignError> {
    cfg.validate()?;
    let points = cfg.grid_points();
    let dt = scenario.plant.dt;
    let window_steps = ((cfg.settle_window / dt).round() as usize).max(2);
    let timeout_steps = (cfg.settle_timeout / dt).ceil() as usize;
    let span = (cfg.x_bounds.1 - cfg.x_bounds.0).max(cfg.y_bounds.1 - cfg.y_bounds.0);
    let error_limit = 10.0 * span;

    let mut sets = Vec::with_capacity(cfg.runs);
    for run in 0..cfg.runs {
        let mut offset_rng = rng_indexed(cfg.seed, "campaign-offset", run as u64);
        let offset = scenario.offsets.draw(&mut offset_rng);
        let noise_rng = rng_indexed(cfg.seed, "campaign-noise", run as u64);
        let mut effort_rng = rng_indexed(cfg.seed, "campaign-effort-noise", run as u64);
        let effort_normal = rand_distr::Normal::new(0.0, 1.0).expect("unit normal");
        let mut boucle = ClosedLoop::new(
            scenario,
            offset,
            points[0],
            noise_rng,
            None,
            error_limit,
        )?;
        // Let the loop acquire the first point before measuring.
        let first_ref = [points[0].0, points[0].1, 0.0, 0.0, 0.0, 0.0];
        boucle.hold(&first_ref, (scenario.lead_in / dt).round() as usize)?;

        let mut records = Vec::with_capacity(points.len());
        let mut window = vec![0.0f64; window_steps];
        for (point_idx, &(x, y)) in points.iter().enumerate() {
            let reference = [x, y, 0.0, 0.0, 0.0, 0.0];
            let mut settled = false;
            let mut steps = 0usize;
            while steps < timeout_steps {
                let log = boucle.step(&reference, [0.0, 0.0])?;
                window[steps % window_steps] = log.fz_total;
                steps += 1;
                // Check a full window every few samples.
                if steps >= window_steps && steps % 20 == 0 {
                    let mean = window.iter().sum::<f64>() / window_steps as f64;
                    let var = window
                        .iter()
                        .map(|v| (v - mean) * (v - mean))
                        .sum::<f64>()
                        / window_steps as f64;
                    if var.sqrt() < cfg.settle_tolerance {
                        let input =
                            InputVector::from_parts(x, y, boucle.offset().at(boucle.time()));
                        let noise = if scenario.noise.effort_std > 0.0 {
                            let draw: f64 =
                                rand_distr::Distribution::sample(&effort_normal, &mut effort_rng);
                            scenario.noise.effort_std * draw
                        } else {
                            0.0
                        };
                        records.push(MeasurementRecord {
                            input,
                            effort: mean + noise,
                        });
                        settled = true;
                        break;
                    }
                }
            }
            if !settled {
                return Err(CampaignError::SettlingTimeout {
                    run,
                    point: point_idx,
                    x,
                    y,
                });
            }
        }
        sets.push(MeasurementSet { run, records });
    }
    Ok(sets)
}

/// Concatenate measurement sets into a training dataset: targets are the
/// raw settled efforts (gravity is subtracted at deployment, not here).
/// Records are shuffled with the seed's `assemble-shuffle` sub-stream;
/// `target_n` subsamples after the shuffle.
pub fn assemble_dataset(
    sets: &[MeasurementSet],
    seed: u64,
    target_n: Option<usize>,
) -> Result<Dataset, CampaignError> {
    let mut records: Vec<MeasurementRecord> = sets
        .iter()
        .flat_map(|s| s.records.iter().copied())
        .collect();
    if let Some(n) = target_n {
        if n > records.len() {
            return Err(CampaignError::SubsampleTooLarge {
                requested: n,
                available: records.len(),
            });
        }
    }
    let mut rng = rng_for(seed, "assemble-shuffle");
    records.shuffle(&mut rng);
    if let Some(n) = target_n {
        records.truncate(n);
    }
    Ok(Dataset::new(
        records.iter().map(|r| r.input).collect(),
        records.iter().map(|r| r.effort).collect(),
    )?)
}

/// Best Fit Ratio: `100 * max(1 - ||y - yhat|| / ||y - mean(y)||, 0)`.
pub fn bfr(y: &[f64], yhat: &[f64]) -> Result<f64, MetricError> {
    if y.len() != yhat.len() {
        return Err(MetricError::LengthMismatch {
            a: y.len(),
            b: yhat.len(),
        });
    }
    if y.len() < 2 {
        return Err(MetricError::TooShort(y.len()));
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let denom = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>().sqrt();
    if denom == 0.0 {
        return Err(MetricError::ConstantTargets);
    }
    let num = y
        .iter()
        .zip(yhat)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Ok(100.0 * (1.0 - num / denom).max(0.0))
}

/// `(||e||_2 / sqrt(N), ||e||_inf)`.
pub fn error_norms(errors: &[f64]) -> Result<(f64, f64), MetricError> {
    if errors.is_empty() {
        return Err(MetricError::Empty);
    }
    let l2 = errors.iter().map(|e| e * e).sum::<f64>().sqrt() / (errors.len() as f64).sqrt();
    let linf = errors.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    Ok((l2, linf))
}

/// Scaled-l2 and max norms of one error signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormPair {
    pub l2_scaled: f64,
    pub linf: f64,
}

/// Fit/tracking quality over the whole signal and over the
/// constant-velocity intervals.
#[derive(Debug, Clone, Copy)]
pub struct EvaluationReport {
    /// Best-fit ratio (%), for model validation reports.
    pub bfr_percent: Option<f64>,
    pub whole: NormPair,
    pub constant_velocity: NormPair,
}

/// Relative reduction (%) per norm.
#[derive(Debug, Clone, Copy)]
pub struct ReductionPair {
    pub l2_percent: f64,
    pub linf_percent: f64,
}

/// Outcome of the with/without-augmentation tracking experiment.
#[derive(Debug, Clone)]
pub struct TrackingComparison {
    pub baseline: EvaluationReport,
    pub augmented: EvaluationReport,
    pub reduction_whole: ReductionPair,
    pub reduction_constant_velocity: ReductionPair,
    pub baseline_trace: crate::sim::TrackingTrace,
    pub augmented_trace: crate::sim::TrackingTrace,
}

fn reduction(before: f64, after: f64) -> f64 {
    if before == 0.0 {
        0.0
    } else {
        100.0 * (1.0 - after / before)
    }
}

/// Evaluate one logged trace against the constant-velocity mask.
pub fn evaluate_trace(
    trace: &crate::sim::TrackingTrace,
    mask: &[bool],
) -> Result<EvaluationReport, MetricError> {
    let (l2, linf) = error_norms(&trace.z_error)?;
    let cv: Vec<f64> = trace
        .z_error
        .iter()
        .zip(mask)
        .filter_map(|(e, &m)| m.then_some(*e))
        .collect();
    let (cv_l2, cv_linf) = if cv.is_empty() {
        (0.0, 0.0)
    } else {
        error_norms(&cv)?
    };
    Ok(EvaluationReport {
        bfr_percent: None,
        whole: NormPair {
            l2_scaled: l2,
            linf,
        },
        constant_velocity: NormPair {
            l2_scaled: cv_l2,
            linf: cv_linf,
        },
    })
}

/// One tracking run without augmentation (the baseline report).
pub fn run_tracking_baseline(
    scenario: &Scenario,
    trajectory: &PlanarTrajectory,
) -> Result<(EvaluationReport, crate::sim::TrackingTrace), CampaignError> {
    let mut offset_rng = rng_for(scenario.seed, "tracking-offset");
    let offset = scenario.offsets.draw(&mut offset_rng);
    let trace = crate::sim::run_closed_loop(scenario, trajectory, offset, None)?;
    let mask = trajectory.constant_velocity_mask(scenario.plant.dt, trace.len());
    let report = evaluate_trace(&trace, &mask)?;
    Ok((report, trace))
}

/// Run the tracking trajectory twice on identical seeds and frame offset,
/// feedforward augmentation off then on, and report both plus the relative
/// reduction.
pub fn run_tracking_comparison(
    scenario: &Scenario,
    trajectory: &PlanarTrajectory,
    model: &dyn EffortPredictor,
) -> Result<TrackingComparison, CampaignError> {
    let mut offset_rng = rng_for(scenario.seed, "tracking-offset");
    let offset = scenario.offsets.draw(&mut offset_rng);
    let baseline_trace = crate::sim::run_closed_loop(scenario, trajectory, offset, None)?;
    let augmented_trace =
        crate::sim::run_closed_loop(scenario, trajectory, offset, Some(model))?;

    let mask = trajectory.constant_velocity_mask(scenario.plant.dt, baseline_trace.len());
    let baseline = evaluate_trace(&baseline_trace, &mask)?;
    let augmented = evaluate_trace(&augmented_trace, &mask)?;
    Ok(TrackingComparison {
        reduction_whole: ReductionPair {
            l2_percent: reduction(baseline.whole.l2_scaled, augmented.whole.l2_scaled),
            linf_percent: reduction(baseline.whole.linf, augmented.whole.linf),
        },
        reduction_constant_velocity: ReductionPair {
            l2_percent: reduction(
                baseline.constant_velocity.l2_scaled,
                augmented.constant_velocity.l2_scaled,
            ),
            linf_percent: reduction(
                baseline.constant_velocity.linf,
                augmented.constant_velocity.linf,
            ),
        },
        baseline,
        augmented,
        baseline_trace,
        augmented_trace,
    })
}

/// Rebuild the rectangular grid of settled efforts from one measurement
/// set (for the spatial-spectrum diagnostic). Errors when the set does not
/// cover the configured grid exactly.
pub fn grid_from_measurements(
    cfg: &CampaignConfig,
    set: &MeasurementSet,
) -> Result<GridScan, CampaignError> {
    let (nx, ny) = cfg.grid_shape();
    let mut values = vec![f64::NAN; nx * ny];
    for r in &set.records {
        let fx = (r.input.x_tm() - cfg.x_bounds.0) / cfg.spacing;
        let fy = (r.input.y_tm() - cfg.y_bounds.0) / cfg.spacing;
        let ix = fx.round() as isize;
        let iy = fy.round() as isize;
        if ix < 0
            || iy < 0
            || ix >= nx as isize
            || iy >= ny as isize
            || (fx - ix as f64).abs() > 1e-6
            || (fy - iy as f64).abs() > 1e-6
        {
            return Err(CampaignError::IncompleteGrid(format!(
                "record at ({:.5}, {:.5}) is off-grid",
                r.input.x_tm(),
                r.input.y_tm()
            )));
        }
        values[iy as usize * nx + ix as usize] = r.effort;
    }
    if values.iter().any(|v| v.is_nan()) {
        let missing = values.iter().filter(|v| v.is_nan()).count();
        return Err(CampaignError::IncompleteGrid(format!(
            "{missing} of {} cells unvisited",
            nx * ny
        )));
    }
    Ok(GridScan::new(nx, ny, cfg.spacing, values)?)
}
