//! Run configuration: flat `key = value` text grouped into `[sections]`.
//!
//! Every key is optional and falls back to the built-in defaults, so a
//! config file only states what it changes. Unknown sections or keys are
//! errors (typos must not silently run the defaults). The run seed lives
//! under `[run] seed`; commands may override it from the command line.

use std::collections::BTreeMap;

use super::ParseError;
use crate::campaign::CampaignConfig;
use crate::sim::{
    ControllerConfig, DisturbanceField, NoiseModel, OffsetModel, PlantParams, Scenario,
};
use crate::trajectory::MotionConstraints;

/// Parsed but untyped config text.
#[derive(Debug, Clone, Default)]
pub struct ConfigDoc {
    sections: BTreeMap<String, BTreeMap<String, (String, usize)>>,
}

const KNOWN_KEYS: &[(&str, &[&str])] = &[
    ("run", &["seed"]),
    (
        "plant",
        &["mass", "inertia_x", "inertia_y", "inertia_z", "gravity", "dt"],
    ),
    ("controller", &["bandwidth_hz"]),
    (
        "field",
        &[
            "amplitude",
            "period",
            "phase_x",
            "phase_y",
            "slope_x",
            "slope_y",
            "sens_x",
            "sens_y",
            "sens_z",
            "sens_chi",
            "sens_psi",
            "sens_zeta",
            "randomize_phases",
        ],
    ),
    (
        "offsets",
        &[
            "std_translation",
            "std_rotation",
            "drift_fraction",
            "drift_period",
            "clamp_sigmas",
        ],
    ),
    ("noise", &["pose_std_translation", "pose_std_rotation", "effort_std"]),
    ("sim", &["lead_in"]),
    (
        "campaign",
        &[
            "x_min",
            "x_max",
            "y_min",
            "y_max",
            "spacing",
            "runs",
            "settle_tolerance",
            "settle_window",
            "settle_timeout",
        ],
    ),
    (
        "trajectory",
        &[
            "plane_min",
            "plane_max",
            "dwell",
            "max_velocity",
            "max_acceleration",
            "max_jerk",
            "max_snap",
        ],
    ),
];

/// Parse config text into sections; validates syntax and key names only.
pub fn parse_config(text: &str) -> Result<ConfigDoc, ParseError> {
    let mut doc = ConfigDoc::default();
    let mut current: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| ParseError::at(line_no, "unterminated section header"))?
                .trim()
                .to_string();
            if !KNOWN_KEYS.iter().any(|(s, _)| *s == name) {
                return Err(ParseError::at(line_no, format!("unknown section `[{name}]`")));
            }
            current = Some(name.clone());
            doc.sections.entry(name).or_default();
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ParseError::at(line_no, "expected `key = value`"))?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        let section = current
            .clone()
            .ok_or_else(|| ParseError::at(line_no, "key outside any [section]"))?;
        let allowed = KNOWN_KEYS
            .iter()
            .find(|(s, _)| *s == section)
            .map(|(_, keys)| *keys)
            .unwrap_or(&[]);
        if !allowed.contains(&key.as_str()) {
            return Err(ParseError::at(
                line_no,
                format!("unknown key `{key}` in section `[{section}]`"),
            ));
        }
        let entry = doc.sections.entry(section).or_default();
        if entry.contains_key(&key) {
            return Err(ParseError::at(line_no, format!("duplicate key `{key}`")));
        }
        entry.insert(key, (value, line_no));
    }
    Ok(doc)
}

impl ConfigDoc {
    fn get(&self, section: &str, key: &str) -> Option<&(String, usize)> {
        self.sections.get(section).and_then(|s| s.get(key))
    }

    fn f64_or(&self, section: &str, key: &str, default: f64) -> Result<f64, ParseError> {
        match self.get(section, key) {
            None => Ok(default),
            Some((raw, line)) => {
                let v: f64 = raw.parse().map_err(|_| {
                    ParseError::at(*line, format!("[{section}] {key}: `{raw}` is not a number"))
                })?;
                if !v.is_finite() {
                    return Err(ParseError::at(
                        *line,
                        format!("[{section}] {key}: value must be finite"),
                    ));
                }
                Ok(v)
            }
        }
    }

    fn usize_or(&self, section: &str, key: &str, default: usize) -> Result<usize, ParseError> {
        match self.get(section, key) {
            None => Ok(default),
            Some((raw, line)) => raw.parse().map_err(|_| {
                ParseError::at(
                    *line,
                    format!("[{section}] {key}: `{raw}` is not a nonnegative integer"),
                )
            }),
        }
    }

    fn bool_or(&self, section: &str, key: &str, default: bool) -> Result<bool, ParseError> {
        match self.get(section, key) {
            None => Ok(default),
            Some((raw, line)) => match raw.as_str() {
                "true" => Ok(true),
                "false" => Ok(false),
                other => Err(ParseError::at(
                    *line,
                    format!("[{section}] {key}: `{other}` is not `true` or `false`"),
                )),
            },
        }
    }

    /// The `[run] seed` value, if present.
    pub fn seed(&self) -> Result<Option<u64>, ParseError> {
        match self.get("run", "seed") {
            None => Ok(None),
            Some((raw, line)) => raw
                .parse()
                .map(Some)
                .map_err(|_| ParseError::at(*line, format!("seed `{raw}` is not a u64"))),
        }
    }

    /// Assemble the closed-loop scenario with `seed` as the run seed.
    pub fn scenario(&self, seed: u64) -> Result<Scenario, ParseError> {
        let pd = PlantParams::default();
        let plant = PlantParams {
            mass: self.f64_or("plant", "mass", pd.mass)?,
            inertia: [
                self.f64_or("plant", "inertia_x", pd.inertia[0])?,
                self.f64_or("plant", "inertia_y", pd.inertia[1])?,
                self.f64_or("plant", "inertia_z", pd.inertia[2])?,
            ],
            gravity: self.f64_or("plant", "gravity", pd.gravity)?,
            dt: self.f64_or("plant", "dt", pd.dt)?,
        };
        let cd = ControllerConfig::default();
        let controller = ControllerConfig {
            bandwidth_hz: self.f64_or("controller", "bandwidth_hz", cd.bandwidth_hz)?,
        };
        let fd = if self.bool_or("field", "randomize_phases", false)? {
            DisturbanceField::randomized(seed)
        } else {
            DisturbanceField::default()
        };
        let field = DisturbanceField {
            amplitude: self.f64_or("field", "amplitude", fd.amplitude)?,
            period: self.f64_or("field", "period", fd.period)?,
            phases: [
                self.f64_or("field", "phase_x", fd.phases[0])?,
                self.f64_or("field", "phase_y", fd.phases[1])?,
            ],
            slopes: [
                self.f64_or("field", "slope_x", fd.slopes[0])?,
                self.f64_or("field", "slope_y", fd.slopes[1])?,
            ],
            sensitivity: [
                self.f64_or("field", "sens_x", fd.sensitivity[0])?,
                self.f64_or("field", "sens_y", fd.sensitivity[1])?,
                self.f64_or("field", "sens_z", fd.sensitivity[2])?,
                self.f64_or("field", "sens_chi", fd.sensitivity[3])?,
                self.f64_or("field", "sens_psi", fd.sensitivity[4])?,
                self.f64_or("field", "sens_zeta", fd.sensitivity[5])?,
            ],
            seed: fd.seed,
        };
        let od = OffsetModel::default();
        let offsets = OffsetModel {
            std_translation: self.f64_or("offsets", "std_translation", od.std_translation)?,
            std_rotation: self.f64_or("offsets", "std_rotation", od.std_rotation)?,
            drift_fraction: self.f64_or("offsets", "drift_fraction", od.drift_fraction)?,
            drift_period: self.f64_or("offsets", "drift_period", od.drift_period)?,
            clamp_sigmas: self.f64_or("offsets", "clamp_sigmas", od.clamp_sigmas)?,
        };
        let nd = NoiseModel::default();
        let t = self.f64_or("noise", "pose_std_translation", nd.pose_std[0])?;
        let r = self.f64_or("noise", "pose_std_rotation", nd.pose_std[3])?;
        let noise = NoiseModel {
            pose_std: [t, t, t, r, r, r],
            effort_std: self.f64_or("noise", "effort_std", nd.effort_std)?,
        };
        Ok(Scenario {
            plant,
            controller,
            field,
            offsets,
            noise,
            lead_in: self.f64_or("sim", "lead_in", Scenario::default().lead_in)?,
            seed,
        })
    }

    /// Assemble the grid-campaign sweep parameters.
    pub fn campaign(&self, seed: u64) -> Result<CampaignConfig, ParseError> {
        let d = CampaignConfig::default();
        Ok(CampaignConfig {
            x_bounds: (
                self.f64_or("campaign", "x_min", d.x_bounds.0)?,
                self.f64_or("campaign", "x_max", d.x_bounds.1)?,
            ),
            y_bounds: (
                self.f64_or("campaign", "y_min", d.y_bounds.0)?,
                self.f64_or("campaign", "y_max", d.y_bounds.1)?,
            ),
            spacing: self.f64_or("campaign", "spacing", d.spacing)?,
            runs: self.usize_or("campaign", "runs", d.runs)?,
            settle_tolerance: self.f64_or("campaign", "settle_tolerance", d.settle_tolerance)?,
            settle_window: self.f64_or("campaign", "settle_window", d.settle_window)?,
            settle_timeout: self.f64_or("campaign", "settle_timeout", d.settle_timeout)?,
            seed,
        })
    }

    /// Tracking-trajectory plane, dwell and motion constraints.
    pub fn trajectory(&self) -> Result<(f64, f64, f64, MotionConstraints), ParseError> {
        let plane_min = self.f64_or("trajectory", "plane_min", 0.015)?;
        let plane_max = self.f64_or("trajectory", "plane_max", 0.055)?;
        let dwell = self.f64_or("trajectory", "dwell", 0.25)?;
        let c = MotionConstraints {
            max_velocity: self.f64_or("trajectory", "max_velocity", 0.08)?,
            max_acceleration: self.f64_or("trajectory", "max_acceleration", 2.5)?,
            max_jerk: self.f64_or("trajectory", "max_jerk", 100.0)?,
            max_snap: self.f64_or("trajectory", "max_snap", 1000.0)?,
        };
        Ok((plane_min, plane_max, dwell, c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_yields_defaults() {
        let doc = parse_config("").unwrap();
        assert_eq!(doc.seed().unwrap(), None);
        let scenario = doc.scenario(7).unwrap();
        assert_eq!(scenario.plant.mass, 9.4);
        assert_eq!(scenario.seed, 7);
        let campaign = doc.campaign(7).unwrap();
        assert_eq!(campaign.runs, 6);
    }

    #[test]
    fn values_override_defaults() {
        let text = "\
[run]
seed = 42

# comment here
[plant]
mass = 10.5

[campaign]
spacing = 0.004
runs = 3

[field]
randomize_phases = true
";
        let doc = parse_config(text).unwrap();
        assert_eq!(doc.seed().unwrap(), Some(42));
        assert_eq!(doc.scenario(42).unwrap().plant.mass, 10.5);
        let c = doc.campaign(42).unwrap();
        assert_eq!(c.spacing, 0.004);
        assert_eq!(c.runs, 3);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let doc = parse_config("[plant]\nmass = heavy\n").unwrap();
        let err = doc.scenario(0).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = parse_config("[plant]\n[campaign]\nspacing 2\n").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    #[test]
    fn rejects_unknown_sections_and_keys() {
        assert!(parse_config("[warp_drive]\n").is_err());
        let err = parse_config("[plant]\nweight = 3\n").unwrap_err();
        assert!(err.to_string().contains("unknown key"), "{err}");
        assert!(parse_config("stray = 1\n").is_err());
        assert!(parse_config("[plant\n").is_err());
        assert!(parse_config("[plant]\nmass = 1\nmass = 2\n").is_err());
    }
}
