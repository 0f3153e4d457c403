//! Trace, measurement and evaluation-report output.

use std::fs;
use std::path::Path;

use crate::campaign::{EvaluationReport, MeasurementSet, TrackingComparison};
use crate::gp::Dataset;
use crate::sim::TrackingTrace;

use super::dataset_csv;

/// Measurement run file: the dataset schema, so run files feed training
/// directly.
pub fn measurement_set_to_csv(set: &MeasurementSet) -> String {
    let data = set.to_dataset().expect("measurement sets are non-empty");
    dataset_csv::dataset_to_csv(&data)
}

pub fn write_measurement_set(path: &Path, set: &MeasurementSet) -> std::io::Result<()> {
    fs::write(path, measurement_set_to_csv(set))
}

pub fn read_measurement_set(
    path: &Path,
    run: usize,
) -> Result<MeasurementSet, dataset_csv::DatasetFileError> {
    let data: Dataset = dataset_csv::read_dataset(path)?;
    Ok(MeasurementSet {
        run,
        records: data
            .inputs()
            .iter()
            .zip(data.targets())
            .map(|(w, y)| crate::campaign::MeasurementRecord {
                input: *w,
                effort: *y,
            })
            .collect(),
    })
}

/// Tracking trace CSV: time, the six reference coordinates, the six
/// measured coordinates, z error, total z effort, feedforward z effort.
pub fn trace_to_csv(trace: &TrackingTrace) -> String {
    let mut out = String::from(
        "t_s,ref_x,ref_y,ref_z,ref_chi,ref_psi,ref_zeta,\
         meas_x,meas_y,meas_z,meas_chi,meas_psi,meas_zeta,\
         z_error_m,fz_total_N,fz_ff_N\n",
    );
    for i in 0..trace.len() {
        let mut fields: Vec<String> = vec![trace.time[i].to_string()];
        fields.extend(trace.reference[i].iter().map(|v| v.to_string()));
        fields.extend(trace.measured[i].iter().map(|v| v.to_string()));
        fields.push(trace.z_error[i].to_string());
        fields.push(trace.fz_total[i].to_string());
        fields.push(trace.fz_ff[i].to_string());
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn write_trace(path: &Path, trace: &TrackingTrace) -> std::io::Result<()> {
    fs::write(path, trace_to_csv(trace))
}

/// Evaluation report rows: one per scope.
pub fn evaluation_report_to_csv(report: &EvaluationReport) -> String {
    let mut out = String::from("scope,bfr_percent,l2_scaled,linf\n");
    let bfr = report
        .bfr_percent
        .map(|b| b.to_string())
        .unwrap_or_default();
    out.push_str(&format!(
        "whole,{bfr},{},{}\n",
        report.whole.l2_scaled, report.whole.linf
    ));
    out.push_str(&format!(
        "constant_velocity,{bfr},{},{}\n",
        report.constant_velocity.l2_scaled, report.constant_velocity.linf
    ));
    out
}

/// Comparison CSV: both runs and the relative reductions.
pub fn comparison_to_csv(c: &TrackingComparison) -> String {
    let mut out =
        String::from("scope,metric,no_compensation,kernel_based_ff,relative_reduction_percent\n");
    let mut row = |scope: &str, metric: &str, a: f64, b: f64, r: f64| {
        out.push_str(&format!("{scope},{metric},{a},{b},{r}\n"));
    };
    row(
        "whole",
        "l2_scaled",
        c.baseline.whole.l2_scaled,
        c.augmented.whole.l2_scaled,
        c.reduction_whole.l2_percent,
    );
    row(
        "whole",
        "linf",
        c.baseline.whole.linf,
        c.augmented.whole.linf,
        c.reduction_whole.linf_percent,
    );
    row(
        "constant_velocity",
        "l2_scaled",
        c.baseline.constant_velocity.l2_scaled,
        c.augmented.constant_velocity.l2_scaled,
        c.reduction_constant_velocity.l2_percent,
    );
    row(
        "constant_velocity",
        "linf",
        c.baseline.constant_velocity.linf,
        c.augmented.constant_velocity.linf,
        c.reduction_constant_velocity.linf_percent,
    );
    out
}

/// The four comparison rows as plain numbers: (baseline, augmented,
/// reduction %) per scope and norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonSummary {
    pub whole_l2: (f64, f64, f64),
    pub whole_linf: (f64, f64, f64),
    pub cv_l2: (f64, f64, f64),
    pub cv_linf: (f64, f64, f64),
}

pub fn summary_of(c: &TrackingComparison) -> ComparisonSummary {
    ComparisonSummary {
        whole_l2: (
            c.baseline.whole.l2_scaled,
            c.augmented.whole.l2_scaled,
            c.reduction_whole.l2_percent,
        ),
        whole_linf: (
            c.baseline.whole.linf,
            c.augmented.whole.linf,
            c.reduction_whole.linf_percent,
        ),
        cv_l2: (
            c.baseline.constant_velocity.l2_scaled,
            c.augmented.constant_velocity.l2_scaled,
            c.reduction_constant_velocity.l2_percent,
        ),
        cv_linf: (
            c.baseline.constant_velocity.linf,
            c.augmented.constant_velocity.linf,
            c.reduction_constant_velocity.linf_percent,
        ),
    }
}

/// Parse a comparison CSV back into its summary numbers.
pub fn parse_comparison_csv(text: &str) -> Result<ComparisonSummary, super::ParseError> {
    use super::ParseError;
    let mut lines = text.lines().enumerate();
    let header = "scope,metric,no_compensation,kernel_based_ff,relative_reduction_percent";
    match lines.next() {
        Some((_, h)) if h.trim() == header => {}
        Some(_) => return Err(ParseError::at(1, format!("bad header: expected `{header}`"))),
        None => return Err(ParseError::structure("empty file")),
    }
    let mut rows: Vec<(String, String, f64, f64, f64)> = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(ParseError::at(line_no, "expected 5 fields"));
        }
        let num = |s: &str| -> Result<f64, ParseError> {
            s.trim()
                .parse()
                .map_err(|_| ParseError::at(line_no, format!("`{s}` is not a number")))
        };
        rows.push((
            f[0].to_string(),
            f[1].to_string(),
            num(f[2])?,
            num(f[3])?,
            num(f[4])?,
        ));
    }
    let find = |scope: &str, metric: &str| -> Result<(f64, f64, f64), ParseError> {
        rows.iter()
            .find(|r| r.0 == scope && r.1 == metric)
            .map(|r| (r.2, r.3, r.4))
            .ok_or_else(|| ParseError::structure(format!("missing row {scope}/{metric}")))
    };
    Ok(ComparisonSummary {
        whole_l2: find("whole", "l2_scaled")?,
        whole_linf: find("whole", "linf")?,
        cv_l2: find("constant_velocity", "l2_scaled")?,
        cv_linf: find("constant_velocity", "linf")?,
    })
}

/// The two human-readable comparison tables from summary numbers.
pub fn summary_tables(s: &ComparisonSummary) -> String {
    let mut out = table(
        "Tracking comparison, whole trajectory (z error, m):",
        s.whole_l2,
        s.whole_linf,
    );
    out.push('\n');
    out.push_str(&table(
        "Tracking comparison, constant-velocity intervals (z error, m):",
        s.cv_l2,
        s.cv_linf,
    ));
    out
}

fn table(title: &str, l2: (f64, f64, f64), linf: (f64, f64, f64)) -> String {
    let mut out = String::new();
    out.push_str(&format!("{title}\n"));
    out.push_str(&format!(
        "{:<14}{:>18}{:>18}{:>22}\n",
        "", "No compensation", "Kernel-based FF", "Relative reduction"
    ));
    out.push_str(&format!(
        "{:<14}{:>18.3e}{:>18.3e}{:>21.2}%\n",
        "l2/sqrt(N)", l2.0, l2.1, l2.2
    ));
    out.push_str(&format!(
        "{:<14}{:>18.3e}{:>18.3e}{:>21.2}%\n",
        "linf", linf.0, linf.1, linf.2
    ));
    out
}

/// The two human-readable comparison tables (whole trajectory and
/// constant-velocity intervals).
pub fn comparison_tables(c: &TrackingComparison) -> String {
    summary_tables(&summary_of(c))
}

/// Validation table in the three-kernel layout.
pub fn validation_table(rows: &[(String, f64)]) -> String {
    let mut out = String::new();
    out.push_str(&format!("{:<24}{:>10}\n", "Kernel", "BFR %"));
    for (name, bfr) in rows {
        out.push_str(&format!("{name:<24}{bfr:>10.2}\n"));
    }
    out
}
