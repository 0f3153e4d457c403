//! Command implementations and the error-to-exit-code taxonomy.
//!
//! Exit codes: 0 success, 2 usage, 3 parse (malformed files / config),
//! 4 numeric (factorization, settling, instability, degenerate data),
//! 5 I/O.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::Serialize;

use maglev_gp::campaign::{
    assemble_dataset, bfr, run_grid_campaign, run_tracking_baseline, run_tracking_comparison,
    CampaignError, MeasurementRecord, MeasurementSet,
};
use maglev_gp::gp::{fit_posterior, heuristic_init, Dataset, GpError};
use maglev_gp::io::config::parse_config;
use maglev_gp::io::dataset_csv::{read_dataset, DatasetFileError};
use maglev_gp::io::hp_record::hp_record_to_string;
use maglev_gp::io::model::{load_model, save_model, Model, ModelDocument, ModelFileError};
use maglev_gp::io::report as report_io;
use maglev_gp::io::ParseError;
use maglev_gp::optimize::{optimize_hyperparameters, OptimizeConfig};
use maglev_gp::sim::SimError;
use maglev_gp::sr::sr_compress;
use maglev_gp::trajectory::{PlanarTrajectory, TrajectoryError};
use maglev_gp::KernelSpec;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Parse(String),
    Numeric(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Parse(_) => 3,
            CliError::Numeric(_) => 4,
            CliError::Io(_) => 5,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Parse(m) => write!(f, "{m}"),
            CliError::Numeric(m) => write!(f, "{m}"),
            CliError::Io(m) => write!(f, "{m}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<ParseError> for CliError {
    fn from(e: ParseError) -> Self {
        CliError::Parse(e.to_string())
    }
}

impl From<DatasetFileError> for CliError {
    fn from(e: DatasetFileError) -> Self {
        match e {
            DatasetFileError::Io { .. } => CliError::Io(e.to_string()),
            DatasetFileError::Parse { .. } => CliError::Parse(e.to_string()),
        }
    }
}

impl From<ModelFileError> for CliError {
    fn from(e: ModelFileError) -> Self {
        match e {
            ModelFileError::Io { .. } => CliError::Io(e.to_string()),
            ModelFileError::Parse { .. } => CliError::Parse(e.to_string()),
        }
    }
}

impl From<GpError> for CliError {
    fn from(e: GpError) -> Self {
        match e {
            GpError::NoTrials {} | GpError::NoRestarts {} | GpError::BadSubsetSize { .. } => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Numeric(other.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        CliError::Numeric(e.to_string())
    }
}

impl From<TrajectoryError> for CliError {
    fn from(e: TrajectoryError) -> Self {
        CliError::Parse(e.to_string())
    }
}

impl From<CampaignError> for CliError {
    fn from(e: CampaignError) -> Self {
        match e {
            CampaignError::BadConfig { .. } => CliError::Parse(e.to_string()),
            CampaignError::SubsampleTooLarge { .. } => CliError::Usage(e.to_string()),
            CampaignError::Gp(inner) => inner.into(),
            other => CliError::Numeric(other.to_string()),
        }
    }
}

fn read_config(path: &Path) -> Result<maglev_gp::io::config::ConfigDoc, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(parse_config(&text)?)
}

fn resolve_seed(
    flag: Option<u64>,
    doc: &maglev_gp::io::config::ConfigDoc,
) -> Result<u64, CliError> {
    match flag.or(doc.seed()?) {
        Some(seed) => Ok(seed),
        None => Err(CliError::Usage(
            "a seed is required: pass --seed or set `[run] seed` in the config".to_string(),
        )),
    }
}

/// Read and merge measurement CSVs into one shuffled training pool.
fn load_pool(paths: &[impl AsRef<Path>], seed: u64, target: Option<usize>) -> Result<Dataset, CliError> {
    let mut sets = Vec::new();
    for (run, path) in paths.iter().enumerate() {
        let data = read_dataset(path.as_ref())?;
        sets.push(MeasurementSet {
            run,
            records: data
                .inputs()
                .iter()
                .zip(data.targets())
                .map(|(w, y)| MeasurementRecord {
                    input: *w,
                    effort: *y,
                })
                .collect(),
        });
    }
    Ok(assemble_dataset(&sets, seed, target)?)
}

#[derive(Serialize)]
struct ManifestRun {
    run: usize,
    file: String,
    records: usize,
}

#[derive(Serialize)]
struct Manifest {
    version: u32,
    seed: u64,
    grid_nx: usize,
    grid_ny: usize,
    spacing: f64,
    runs: Vec<ManifestRun>,
}

pub fn campaign(config: &Path, out: &Path, seed_flag: Option<u64>) -> Result<(), CliError> {
    let doc = read_config(config)?;
    let seed = resolve_seed(seed_flag, &doc)?;
    let scenario = doc.scenario(seed)?;
    let cfg = doc.campaign(seed)?;

    fs::create_dir_all(out)?;
    let sets = run_grid_campaign(&cfg, &scenario)?;
    let (nx, ny) = cfg.grid_shape();
    let mut manifest = Manifest {
        version: 1,
        seed,
        grid_nx: nx,
        grid_ny: ny,
        spacing: cfg.spacing,
        runs: Vec::new(),
    };
    for set in &sets {
        let name = format!("run_{:02}.csv", set.run);
        report_io::write_measurement_set(&out.join(&name), set)?;
        manifest.runs.push(ManifestRun {
            run: set.run,
            file: name,
            records: set.records.len(),
        });
    }
    fs::write(
        out.join("manifest.json"),
        serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )?;
    println!(
        "campaign complete: {} runs x {} points -> {}",
        sets.len(),
        nx * ny,
        out.display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn train(
    data: &[impl AsRef<Path>],
    kernel: &str,
    seed: u64,
    out: &Path,
    subsample: Option<usize>,
    p_sin_hint: Option<f64>,
    max_iter: usize,
    restarts: usize,
    tol: f64,
) -> Result<(), CliError> {
    let spec = KernelSpec::parse_name(kernel)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let pool = load_pool(data, seed, subsample)?;
    let init = heuristic_init(&pool, spec, p_sin_hint).map_err(CliError::from)?;
    let (hp, report) = optimize_hyperparameters(
        &pool,
        spec,
        &init,
        &OptimizeConfig {
            max_iter,
            tol,
            restarts,
            seed,
        },
    )?;
    let post = fit_posterior(&pool, spec, &hp)?;
    save_model(out, &ModelDocument::from_posterior(&post))?;
    let report_path = sibling(out, "report.json");
    fs::write(
        &report_path,
        serde_json::to_string_pretty(&report).expect("report serializes"),
    )?;
    println!(
        "trained {} on {} points ({} hyperparameters): NLL {:.3} -> {:.3}, converged {}",
        spec.name(),
        pool.len(),
        spec.param_count(),
        report.initial_nll,
        report.final_nll,
        report.converged
    );
    println!("model: {}", out.display());
    println!("report: {}", report_path.display());
    Ok(())
}

fn sibling(path: &Path, suffix: &str) -> std::path::PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".to_string());
    path.with_file_name(format!("{stem}.{suffix}"))
}

pub fn validate(
    models: &[impl AsRef<Path>],
    data: &Path,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let fresh = read_dataset(data)?;
    let mut rows = Vec::new();
    let mut csv = String::from("model,kernel,bfr_percent\n");
    for path in models {
        let model: Model = load_model(path.as_ref())?;
        let preds = model.predict_batch(fresh.inputs());
        let score = bfr(fresh.targets(), &preds).map_err(|e| CliError::Numeric(e.to_string()))?;
        let label = format!(
            "{} ({})",
            path.as_ref()
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default(),
            model.spec().name()
        );
        csv.push_str(&format!(
            "{},{},{}\n",
            path.as_ref().display(),
            model.spec().name(),
            score
        ));
        rows.push((label, score));
    }
    print!("{}", report_io::validation_table(&rows));
    if let Some(path) = out {
        fs::write(path, csv)?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn compress(
    model_path: &Path,
    data: &[impl AsRef<Path>],
    subset_size: usize,
    trials: usize,
    seed: u64,
    out: &Path,
    selection_data: Option<&Path>,
    selection_fraction: f64,
) -> Result<(), CliError> {
    if trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".to_string()));
    }
    let model = load_model(model_path)?;
    let pool = load_pool(data, seed, None)?;
    let (train, selection) = match selection_data {
        Some(path) => (pool, read_dataset(path)?),
        None => {
            if !(0.0..1.0).contains(&selection_fraction) || selection_fraction <= 0.0 {
                return Err(CliError::Usage(
                    "--selection-fraction must be in (0, 1)".to_string(),
                ));
            }
            let keep = pool.len()
                - ((pool.len() as f64 * selection_fraction).round() as usize)
                    .clamp(2, pool.len() - 1);
            let (train, sel) = pool.split_at(keep);
            (train, sel)
        }
    };
    let srp = sr_compress(
        &train,
        model.spec(),
        model.hyperparameters(),
        subset_size,
        trials,
        &selection,
        seed,
    )?;
    save_model(out, &ModelDocument::from_sr(&srp))?;
    println!(
        "compressed {} -> {} points over {} trials; selection BFR {:.2}%",
        train.len(),
        srp.subset_size(),
        trials,
        srp.selection_bfr()
    );
    println!("model: {}", out.display());
    Ok(())
}

pub fn track(
    config: &Path,
    model_path: Option<&Path>,
    out: &Path,
    seed_flag: Option<u64>,
) -> Result<(), CliError> {
    let doc = read_config(config)?;
    let seed = resolve_seed(seed_flag, &doc)?;
    let scenario = doc.scenario(seed)?;
    let (lo, hi, dwell, constraints) = doc.trajectory()?;
    let traj = PlanarTrajectory::scan_square(lo, hi, &constraints, dwell)?;
    fs::create_dir_all(out)?;

    match model_path {
        None => {
            let (report, trace) = run_tracking_baseline(&scenario, &traj)?;
            report_io::write_trace(&out.join("baseline_trace.csv"), &trace)?;
            fs::write(
                out.join("baseline_report.csv"),
                report_io::evaluation_report_to_csv(&report),
            )?;
            println!(
                "baseline only: whole l2/sqrt(N) {:.3e} m, linf {:.3e} m",
                report.whole.l2_scaled, report.whole.linf
            );
            println!(
                "constant velocity: l2/sqrt(N) {:.3e} m, linf {:.3e} m",
                report.constant_velocity.l2_scaled, report.constant_velocity.linf
            );
        }
        Some(path) => {
            let model = load_model(path)?;
            let cmp = run_tracking_comparison(&scenario, &traj, &model)?;
            report_io::write_trace(&out.join("baseline_trace.csv"), &cmp.baseline_trace)?;
            report_io::write_trace(&out.join("augmented_trace.csv"), &cmp.augmented_trace)?;
            fs::write(out.join("comparison.csv"), report_io::comparison_to_csv(&cmp))?;
            print!("{}", report_io::comparison_tables(&cmp));
        }
    }
    println!("results: {}", out.display());
    Ok(())
}

pub fn report(comparison: Option<&Path>, model: Option<&Path>) -> Result<(), CliError> {
    if comparison.is_none() && model.is_none() {
        return Err(CliError::Usage(
            "pass --comparison <csv> and/or --model <json>".to_string(),
        ));
    }
    if let Some(path) = comparison {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let summary = report_io::parse_comparison_csv(&text)?;
        print!("{}", report_io::summary_tables(&summary));
    }
    if let Some(path) = model {
        let m = load_model(path)?;
        println!(
            "model {}: kind {}, kernel {}, {} representer points{}",
            path.display(),
            m.kind(),
            m.spec().name(),
            m.len(),
            m.selection_bfr()
                .map(|b| format!(", selection BFR {b:.2}%"))
                .unwrap_or_default()
        );
        print!("{}", hp_record_to_string(m.spec(), m.hyperparameters()));
    }
    Ok(())
}
