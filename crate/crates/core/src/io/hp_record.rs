//! Flat hyperparameter record: one `name = value` line per active
//! parameter in canonical order, natural units (never logs), preceded by
//! the kernel variant.

use super::ParseError;
use crate::kernel::{HyperParameters, KernelSpec};

/// Render the record.
pub fn hp_record_to_string(spec: KernelSpec, hp: &HyperParameters) -> String {
    let mut out = format!("kernel = {}\n", spec.name());
    for (name, value) in hp.named_values(spec) {
        out.push_str(&format!("{name} = {value}\n"));
    }
    out
}

/// Parse a record. Inactive fields of the ablated variants come back as
/// benign defaults; every active parameter must appear exactly once.
pub fn parse_hp_record(text: &str) -> Result<(KernelSpec, HyperParameters), ParseError> {
    let mut spec: Option<KernelSpec> = None;
    let mut pairs: Vec<(String, f64, usize)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ParseError::at(line_no, "expected `name = value`"))?;
        let key = key.trim();
        let value = value.trim();
        if key == "kernel" {
            if spec.is_some() {
                return Err(ParseError::at(line_no, "duplicate `kernel` line"));
            }
            spec = Some(
                KernelSpec::parse_name(value)
                    .map_err(|e| ParseError::at(line_no, e.to_string()))?,
            );
        } else {
            let v: f64 = value.parse().map_err(|_| {
                ParseError::at(line_no, format!("`{value}` is not a number"))
            })?;
            if !v.is_finite() {
                return Err(ParseError::at(line_no, "value must be finite"));
            }
            pairs.push((key.to_string(), v, line_no));
        }
    }
    let spec = spec.ok_or_else(|| ParseError::structure("missing `kernel = ...` line"))?;

    let names = spec.param_names();
    let mut hp = HyperParameters {
        sigma1: f64::NAN,
        lambda_rbf: [f64::NAN; 8],
        lambda_sin: 1.0,
        p_sin: 1.0,
        sigma2: [0.0, 0.0],
        c_lin: [0.0, 0.0],
        sigma_e: f64::NAN,
    };
    let mut seen = vec![false; names.len()];
    for (key, value, line_no) in pairs {
        let idx = names
            .iter()
            .position(|n| *n == key)
            .ok_or_else(|| {
                ParseError::at(
                    line_no,
                    format!("unknown parameter `{key}` for kernel `{}`", spec.name()),
                )
            })?;
        if seen[idx] {
            return Err(ParseError::at(line_no, format!("duplicate parameter `{key}`")));
        }
        seen[idx] = true;
        hp.set_named(&key, value);
    }
    if let Some(missing) = names.iter().zip(&seen).find(|(_, s)| !**s) {
        return Err(ParseError::structure(format!(
            "missing parameter `{}`",
            missing.0
        )));
    }
    hp.validate(spec)
        .map_err(|e| ParseError::structure(e.to_string()))?;
    Ok((spec, hp))
}
