//! The versioned JSON model document: kernel variant, hyperparameters in
//! natural units, representer inputs and their weight vector. Covers both
//! the exact GP (inputs = all training points, weights = alpha) and the
//! Subset-of-Regressors compression (inputs = subset, weights = SR
//! weights); mean prediction is the same dot product either way.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ParseError;
use crate::gp::GPPosterior;
use crate::input::{InputVector, INPUT_DIM};
use crate::kernel::{HyperParameters, KernelPre, KernelSpec};
use crate::sim::EffortPredictor;
use crate::sr::SRPredictor;

pub const MODEL_VERSION: u32 = 1;
pub const KIND_EXACT: &str = "exact";
pub const KIND_SR: &str = "subset_regressors";

/// On-disk form of a trained predictor.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelDocument {
    pub version: u32,
    pub kind: String,
    pub kernel: String,
    pub hyperparameters: BTreeMap<String, f64>,
    pub inputs: Vec<[f64; INPUT_DIM]>,
    pub weights: Vec<f64>,
    #[serde(default)]
    pub selection_bfr_percent: Option<f64>,
}

impl ModelDocument {
    pub fn from_posterior(post: &GPPosterior) -> Self {
        ModelDocument {
            version: MODEL_VERSION,
            kind: KIND_EXACT.to_string(),
            kernel: post.spec().name().to_string(),
            hyperparameters: hp_map(post.spec(), post.hyperparameters()),
            inputs: post.training_inputs().iter().map(|w| w.0).collect(),
            weights: post.weights().iter().copied().collect(),
            selection_bfr_percent: None,
        }
    }

    pub fn from_sr(srp: &SRPredictor) -> Self {
        ModelDocument {
            version: MODEL_VERSION,
            kind: KIND_SR.to_string(),
            kernel: srp.spec().name().to_string(),
            hyperparameters: hp_map(srp.spec(), srp.hyperparameters()),
            inputs: srp.subset_inputs().iter().map(|w| w.0).collect(),
            weights: srp.weights().iter().copied().collect(),
            selection_bfr_percent: Some(srp.selection_bfr()),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model document serializes")
    }
}

fn hp_map(spec: KernelSpec, hp: &HyperParameters) -> BTreeMap<String, f64> {
    hp.named_values(spec)
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
}

/// A loaded predictor, ready for validation or feedforward augmentation.
#[derive(Debug, Clone)]
pub struct Model {
    spec: KernelSpec,
    hp: HyperParameters,
    inputs: Vec<InputVector>,
    weights: Vec<f64>,
    kind: String,
    selection_bfr: Option<f64>,
}

impl Model {
    pub fn spec(&self) -> KernelSpec {
        self.spec
    }

    pub fn hyperparameters(&self) -> &HyperParameters {
        &self.hp
    }

    pub fn kind(&self) -> &str {
        &self.kind
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn selection_bfr(&self) -> Option<f64> {
        self.selection_bfr
    }

    pub fn predict(&self, w: &InputVector) -> f64 {
        let pre = KernelPre::new(self.spec, &self.hp);
        self.inputs
            .iter()
            .zip(&self.weights)
            .map(|(wi, a)| pre.eval(w, wi) * a)
            .sum()
    }

    pub fn predict_batch(&self, ws: &[InputVector]) -> Vec<f64> {
        ws.iter().map(|w| self.predict(w)).collect()
    }
}

impl EffortPredictor for Model {
    fn predict_effort(&self, w: &InputVector) -> f64 {
        self.predict(w)
    }
}

/// Parse and validate a model document.
pub fn parse_model_json(text: &str) -> Result<Model, ParseError> {
    let doc: ModelDocument = serde_json::from_str(text)?;
    if doc.version != MODEL_VERSION {
        return Err(ParseError::structure(format!(
            "unsupported model version {} (supported: {MODEL_VERSION})",
            doc.version
        )));
    }
    if doc.kind != KIND_EXACT && doc.kind != KIND_SR {
        return Err(ParseError::structure(format!(
            "unknown model kind `{}`",
            doc.kind
        )));
    }
    let spec = KernelSpec::parse_name(&doc.kernel)
        .map_err(|e| ParseError::structure(e.to_string()))?;

    let names = spec.param_names();
    let mut hp = HyperParameters {
        sigma1: f64::NAN,
        lambda_rbf: [f64::NAN; INPUT_DIM],
        lambda_sin: 1.0,
        p_sin: 1.0,
        sigma2: [0.0, 0.0],
        c_lin: [0.0, 0.0],
        sigma_e: f64::NAN,
    };
    for name in &names {
        let value = doc.hyperparameters.get(*name).ok_or_else(|| {
            ParseError::structure(format!("missing hyperparameter `{name}`"))
        })?;
        hp.set_named(name, *value);
    }
    for key in doc.hyperparameters.keys() {
        if !names.contains(&key.as_str()) {
            return Err(ParseError::structure(format!(
                "hyperparameter `{key}` does not belong to kernel `{}`",
                doc.kernel
            )));
        }
    }
    hp.validate(spec)
        .map_err(|e| ParseError::structure(e.to_string()))?;

    if doc.inputs.len() != doc.weights.len() {
        return Err(ParseError::structure(format!(
            "{} inputs but {} weights",
            doc.inputs.len(),
            doc.weights.len()
        )));
    }
    if doc.inputs.is_empty() {
        return Err(ParseError::structure("model has no representer points"));
    }
    let inputs: Vec<InputVector> = doc.inputs.iter().map(|c| InputVector::new(*c)).collect();
    for (i, w) in inputs.iter().enumerate() {
        if !w.is_finite() {
            return Err(ParseError::structure(format!(
                "input {i} contains a non-finite coordinate"
            )));
        }
    }
    if doc.weights.iter().any(|v| !v.is_finite()) {
        return Err(ParseError::structure("weights must be finite"));
    }
    if let Some(b) = doc.selection_bfr_percent {
        if !b.is_finite() {
            return Err(ParseError::structure("selection BFR must be finite"));
        }
    }
    Ok(Model {
        spec,
        hp,
        inputs,
        weights: doc.weights,
        kind: doc.kind,
        selection_bfr: doc.selection_bfr_percent,
    })
}

pub fn save_model(path: &Path, doc: &ModelDocument) -> std::io::Result<()> {
    fs::write(path, doc.to_json())
}

#[derive(Debug, thiserror::Error)]
pub enum ModelFileError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse { path: String, source: ParseError },
}

pub fn load_model(path: &Path) -> Result<Model, ModelFileError> {
    let text = fs::read_to_string(path).map_err(|e| ModelFileError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    parse_model_json(&text).map_err(|e| ModelFileError::Parse {
        path: path.display().to_string(),
        source: e,
    })
}
