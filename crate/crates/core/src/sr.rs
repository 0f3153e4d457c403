//! Subset-of-Regressors compression of the exact GP predictor.
//!
//! The SR predictor restricts the representer expansion to `m` selected
//! training points:
//!
//! ```text
//! mean(w) = k_m(w)^T (K_mn K_nm + sigma_e^2 K_mm)^-1 K_mn y
//! ```
//!
//! Subsets are chosen by the random-restart heuristic: draw `m` points
//! without replacement, score the resulting predictor by its best-fit ratio
//! on a selection-validation set, repeat, keep the best. With `m = n` the
//! SR weights collapse to the exact GP weights `(K + sigma_e^2 I)^-1 y`.

use nalgebra::DVector;

use crate::campaign::bfr;
use crate::gp::{Dataset, GpError};
use crate::input::InputVector;
use crate::kernel::{self, HyperParameters, KernelPre, KernelSpec};
use crate::linalg::cholesky_with_jitter;
use crate::seed::rng_indexed;

/// Compressed predictor: `m` subset inputs with their SR weight vector.
#[derive(Debug, Clone)]
pub struct SRPredictor {
    spec: KernelSpec,
    hp: HyperParameters,
    subset_inputs: Vec<InputVector>,
    weights: DVector<f64>,
    /// Best-fit ratio (%) this predictor scored on its selection-validation
    /// set.
    selection_bfr: f64,
}

impl SRPredictor {
    pub fn spec(&self) -> KernelSpec {
        self.spec
    }

    pub fn hyperparameters(&self) -> &HyperParameters {
        &self.hp
    }

    pub fn subset_inputs(&self) -> &[InputVector] {
        &self.subset_inputs
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    pub fn selection_bfr(&self) -> f64 {
        self.selection_bfr
    }

    pub fn subset_size(&self) -> usize {
        self.subset_inputs.len()
    }

    /// Rebuild from persisted parts (see [`crate::io::model`]).
    pub fn from_parts(
        spec: KernelSpec,
        hp: HyperParameters,
        subset_inputs: Vec<InputVector>,
        weights: Vec<f64>,
        selection_bfr: f64,
    ) -> Result<Self, GpError> {
        hp.validate(spec)?;
        if subset_inputs.len() != weights.len() {
            return Err(GpError::LengthMismatch {
                inputs: subset_inputs.len(),
                targets: weights.len(),
            });
        }
        Ok(SRPredictor {
            spec,
            hp,
            subset_inputs,
            weights: DVector::from_vec(weights),
            selection_bfr,
        })
    }
}

/// O(m) mean prediction of the compressed model.
pub fn sr_predict(srp: &SRPredictor, w: &InputVector) -> f64 {
    let pre = KernelPre::new(srp.spec, &srp.hp);
    srp.subset_inputs
        .iter()
        .zip(srp.weights.iter())
        .map(|(wi, a)| pre.eval(w, wi) * a)
        .sum()
}

/// Batch variant of [`sr_predict`]; elementwise identical.
pub fn sr_predict_batch(srp: &SRPredictor, ws: &[InputVector]) -> Vec<f64> {
    ws.iter().map(|w| sr_predict(srp, w)).collect()
}

/// Run the random-restart subset selection and return the best-scoring
/// predictor. Deterministic for a fixed seed; the trial streams are
/// derived per index, so `trials = 1` reproduces the first trial of any
/// longer run with the same seed.
pub fn sr_compress(
    data: &Dataset,
    spec: KernelSpec,
    hp: &HyperParameters,
    m: usize,
    trials: usize,
    selection_validation: &Dataset,
    seed: u64,
) -> Result<SRPredictor, GpError> {
    hp.validate(spec)?;
    let n = data.len();
    if m == 0 || m > n {
        return Err(GpError::BadSubsetSize { m, n });
    }
    if trials == 0 {
        return Err(GpError::NoTrials {});
    }

    let k_nn = kernel::gram_matrix(spec, hp, data.inputs())?;
    let k_nv = kernel::kernel_matrix(spec, hp, data.inputs(), selection_validation.inputs())?;
    let y = DVector::from_column_slice(data.targets());
    let noise = hp.sigma_e * hp.sigma_e;

    let mut best: Option<(f64, Vec<usize>, DVector<f64>)> = None;
    for trial in 0..trials {
        let mut rng = rng_indexed(seed, "sr-trial", trial as u64);
        let mut idx = rand::seq::index::sample(&mut rng, n, m).into_vec();
        idx.sort_unstable();

        let k_nm = k_nn.select_columns(idx.iter());
        let k_mm = k_nm.select_rows(idx.iter());
        // Explicit transpose + mul dispatches to the blocked gemm, which
        // tr_mul does not.
        let mut inner = k_nm.transpose() * &k_nm;
        inner += noise * k_mm;
        let (chol, _) = cholesky_with_jitter(&inner)?;
        let weights = chol.solve(&k_nm.tr_mul(&y));

        let k_mv = k_nv.select_rows(idx.iter());
        let preds = k_mv.tr_mul(&weights);
        let score = bfr(selection_validation.targets(), preds.as_slice())?;

        let better = match &best {
            None => true,
            Some((best_score, _, _)) => score > *best_score,
        };
        if better {
            best = Some((score, idx, weights));
        }
    }

    let (selection_bfr, idx, weights) = best.expect("trials >= 1 always yields a candidate");
    Ok(SRPredictor {
        spec,
        hp: *hp,
        subset_inputs: idx.iter().map(|&i| data.inputs()[i]).collect(),
        weights,
        selection_bfr,
    })
}
