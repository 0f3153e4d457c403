//! Exact GP inference: posterior fit, mean/variance prediction and the
//! negative log marginal likelihood with its analytic gradient.
//!
//! Everything runs through one Cholesky factorization of `K + sigma_e^2 I`
//! (with the escalating-jitter fallback from [`crate::linalg`]); the mean
//! predictor is the O(N) dot product `k(w*, W_N) . alpha`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use thiserror::Error;

use crate::input::InputVector;
use crate::kernel::{self, HyperParameters, KernelError, KernelPre, KernelSpec};
use crate::linalg::{cholesky_with_jitter, FactorizationError};

#[derive(Debug, Error)]
pub enum GpError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Factorization(#[from] FactorizationError),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dataset has {inputs} inputs but {targets} targets")]
    LengthMismatch { inputs: usize, targets: usize },
    #[error("dataset contains a non-finite value at record {index}")]
    NonFiniteRecord { index: usize },
    #[error("subset size {m} is out of range (1..={n})")]
    BadSubsetSize { m: usize, n: usize },
    #[error("trial count must be at least 1")]
    NoTrials {},
    #[error("restart count must be at least 1")]
    NoRestarts {},
    #[error("all {restarts} optimizer restarts failed: {last}")]
    AllRestartsFailed { restarts: usize, last: String },
    #[error("selection-validation scoring failed: {0}")]
    Metric(#[from] crate::campaign::MetricError),
}

/// Training pairs: 8-dimensional inputs and scalar settled-effort targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    inputs: Vec<InputVector>,
    targets: Vec<f64>,
}

impl Dataset {
    pub fn new(inputs: Vec<InputVector>, targets: Vec<f64>) -> Result<Self, GpError> {
        if inputs.len() != targets.len() {
            return Err(GpError::LengthMismatch {
                inputs: inputs.len(),
                targets: targets.len(),
            });
        }
        if inputs.is_empty() {
            return Err(GpError::EmptyDataset);
        }
        for (i, (w, y)) in inputs.iter().zip(&targets).enumerate() {
            if !w.is_finite() || !y.is_finite() {
                return Err(GpError::NonFiniteRecord { index: i });
            }
        }
        Ok(Dataset { inputs, targets })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn inputs(&self) -> &[InputVector] {
        &self.inputs
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    /// Split off the first `n` records (used for selection-validation
    /// slices; shuffle beforehand if order matters).
    pub fn split_at(&self, n: usize) -> (Dataset, Dataset) {
        assert!(n > 0 && n < self.len(), "split must leave both sides nonempty");
        (
            Dataset {
                inputs: self.inputs[..n].to_vec(),
                targets: self.targets[..n].to_vec(),
            },
            Dataset {
                inputs: self.inputs[n..].to_vec(),
                targets: self.targets[n..].to_vec(),
            },
        )
    }
}

/// Trained exact-GP state: training inputs, Cholesky factor of the noisy
/// Gram matrix and the weight vector `alpha = (K + sigma_e^2 I)^-1 y`.
pub struct GPPosterior {
    spec: KernelSpec,
    hp: HyperParameters,
    inputs: Vec<InputVector>,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    jitter: f64,
}

impl GPPosterior {
    pub fn spec(&self) -> KernelSpec {
        self.spec
    }

    pub fn hyperparameters(&self) -> &HyperParameters {
        &self.hp
    }

    pub fn training_inputs(&self) -> &[InputVector] {
        &self.inputs
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.alpha
    }

    /// Jitter the factorization needed, zero in the usual case.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Lower-triangular factor L with L L^T = K + sigma_e^2 I.
    pub fn factor_l(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    /// Posterior mean at a test input.
    pub fn predict_mean(&self, w: &InputVector) -> f64 {
        let pre = KernelPre::new(self.spec, &self.hp);
        self.inputs
            .iter()
            .zip(self.alpha.iter())
            .map(|(wi, a)| pre.eval(w, wi) * a)
            .sum()
    }

    /// Posterior mean at a batch of inputs; elementwise equal to
    /// [`Self::predict_mean`].
    pub fn predict_mean_batch(&self, ws: &[InputVector]) -> Vec<f64> {
        let pre = KernelPre::new(self.spec, &self.hp);
        ws.iter()
            .map(|w| {
                self.inputs
                    .iter()
                    .zip(self.alpha.iter())
                    .map(|(wi, a)| pre.eval(w, wi) * a)
                    .sum()
            })
            .collect()
    }

    /// Posterior variance `k(w, w) - ||L^-1 k(W_N, w)||^2`.
    pub fn predict_variance(&self, w: &InputVector) -> f64 {
        let pre = KernelPre::new(self.spec, &self.hp);
        let k_star: DVector<f64> =
            DVector::from_iterator(self.inputs.len(), self.inputs.iter().map(|wi| pre.eval(w, wi)));
        let v = self
            .chol
            .l_dirty()
            .solve_lower_triangular(&k_star)
            .expect("Cholesky factor is nonsingular");
        pre.eval(w, w) - v.norm_squared()
    }
}

/// Factorize the noisy Gram matrix and solve for the weight vector.
pub fn fit_posterior(
    data: &Dataset,
    spec: KernelSpec,
    hp: &HyperParameters,
) -> Result<GPPosterior, GpError> {
    let mut k = kernel::gram_matrix(spec, hp, data.inputs())?;
    let noise = hp.sigma_e * hp.sigma_e;
    for i in 0..data.len() {
        k[(i, i)] += noise;
    }
    let (chol, jitter) = cholesky_with_jitter(&k)?;
    let y = DVector::from_column_slice(data.targets());
    let alpha = chol.solve(&y);
    Ok(GPPosterior {
        spec,
        hp: *hp,
        inputs: data.inputs().to_vec(),
        chol,
        alpha,
        jitter,
    })
}

/// Negative log marginal likelihood
/// `1/2 y^T (K + sigma_e^2 I)^-1 y + 1/2 log det(K + sigma_e^2 I) + N/2 log 2 pi`.
pub fn nll(data: &Dataset, spec: KernelSpec, hp: &HyperParameters) -> Result<f64, GpError> {
    let post = fit_posterior(data, spec, hp)?;
    let y = DVector::from_column_slice(data.targets());
    Ok(nll_from_parts(&post.chol, &post.alpha, &y))
}

fn nll_from_parts(chol: &Cholesky<f64, Dyn>, alpha: &DVector<f64>, y: &DVector<f64>) -> f64 {
    let n = y.len() as f64;
    let l = chol.l_dirty();
    let mut log_det = 0.0;
    for i in 0..y.len() {
        log_det += l[(i, i)].ln();
    }
    // det(K) = det(L)^2, so log det = 2 sum log L_ii.
    0.5 * y.dot(alpha) + log_det + 0.5 * n * (2.0 * std::f64::consts::PI).ln()
}

/// NLL gradient with respect to the active log-hyperparameters, canonical
/// order: `1/2 tr((K_s^-1 - alpha alpha^T) dK_s/dtheta)`.
pub fn nll_gradient(
    data: &Dataset,
    spec: KernelSpec,
    hp: &HyperParameters,
) -> Result<DVector<f64>, GpError> {
    nll_with_gradient(data, spec, hp).map(|(_, g)| g)
}

/// NLL and its gradient from a single factorization.
pub fn nll_with_gradient(
    data: &Dataset,
    spec: KernelSpec,
    hp: &HyperParameters,
) -> Result<(f64, DVector<f64>), GpError> {
    hp.validate(spec)?;
    let post = fit_posterior(data, spec, hp)?;
    let y = DVector::from_column_slice(data.targets());
    let value = nll_from_parts(&post.chol, &post.alpha, &y);

    let n = data.len();
    let k_inv = post.chol.inverse();
    let alpha = &post.alpha;
    let pre = KernelPre::new(spec, hp);
    let n_params = spec.param_count();
    let mut grad = vec![0.0; n_params];

    // 1/2 sum_ij M_ij dK_ij, with M = K_s^-1 - alpha alpha^T; symmetry
    // folds the off-diagonal pairs into a factor of two.
    let inputs = data.inputs();
    for i in 0..n {
        for j in i..n {
            let m_ij = k_inv[(i, j)] - alpha[i] * alpha[j];
            let weight = if i == j { 0.5 * m_ij } else { m_ij };
            let parts = pre.eval_parts(&inputs[i], &inputs[j]);
            parts.accumulate_gradient(spec, weight, &mut grad);
        }
    }
    // Noise term: dK_s/d(log sigma_e) = 2 sigma_e^2 I.
    let noise = hp.sigma_e * hp.sigma_e;
    grad[n_params - 1] = noise * (k_inv.trace() - alpha.norm_squared());

    Ok((value, DVector::from_vec(grad)))
}

/// Data-driven starting point for hyperparameter optimization.
///
/// Lengthscales start at the per-coordinate spread of the inputs, amplitudes
/// at the target spread, the linear offsets at the translator-coordinate
/// means. The period starts at `p_sin_hint` when given (e.g. from the
/// spatial-spectrum diagnostic) and at a third of the x-range otherwise.
pub fn heuristic_init(
    data: &Dataset,
    spec: KernelSpec,
    p_sin_hint: Option<f64>,
) -> Result<HyperParameters, GpError> {
    if data.is_empty() {
        return Err(GpError::EmptyDataset);
    }
    let n = data.len() as f64;
    let mut mean = [0.0; crate::input::INPUT_DIM];
    for w in data.inputs() {
        for (m, v) in mean.iter_mut().zip(w.0) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut spread = [0.0; crate::input::INPUT_DIM];
    for w in data.inputs() {
        for (s, (v, m)) in spread.iter_mut().zip(w.0.iter().zip(mean)) {
            *s += (v - m) * (v - m);
        }
    }
    let mut lambda = [0.0; crate::input::INPUT_DIM];
    for (l, s) in lambda.iter_mut().zip(spread) {
        *l = (s / n).sqrt().max(1e-8);
    }

    let y_mean = data.targets().iter().sum::<f64>() / n;
    let y_std = (data
        .targets()
        .iter()
        .map(|y| (y - y_mean) * (y - y_mean))
        .sum::<f64>()
        / n)
        .sqrt()
        .max(1e-6);
    // The targets are raw efforts with the gravity feedforward still in
    // them; the zero-mean prior has to carry that offset, so the amplitude
    // starts at the RMS rather than the centered spread.
    let y_rms = (data.targets().iter().map(|y| y * y).sum::<f64>() / n)
        .sqrt()
        .max(y_std);

    let x_range = data
        .inputs()
        .iter()
        .map(|w| w.x_tm())
        .fold((f64::MAX, f64::MIN), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let p_sin = p_sin_hint.unwrap_or(((x_range.1 - x_range.0) / 3.0).max(1e-4));

    // Plane lengthscales: with a periodic factor present the RBF should
    // start smooth and leave the ripple to the periodic term; without one
    // the RBF itself must resolve the ripple, so it starts below the
    // spread. Frame offsets act close to linearly, which a lengthscale
    // well above their spread expresses.
    let mut lambda_init = lambda;
    if !spec.has_periodic() {
        lambda_init[0] = (lambda[0] / 3.0).max(1e-8);
        lambda_init[1] = (lambda[1] / 3.0).max(1e-8);
    }
    for slot in lambda_init.iter_mut().skip(2) {
        *slot *= 10.0;
    }

    let hp = HyperParameters {
        sigma1: y_rms,
        lambda_rbf: lambda_init,
        lambda_sin: 1.0,
        p_sin,
        sigma2: [0.3 * y_std / lambda[0], 0.3 * y_std / lambda[1]],
        c_lin: [mean[0], mean[1]],
        sigma_e: 0.02 * y_std,
    };
    hp.validate(spec)?;
    Ok(hp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_input(rng: &mut impl Rng) -> InputVector {
        let mut c = [0.0; 8];
        for slot in c.iter_mut() {
            *slot = rng.random_range(-1.0..1.0);
        }
        InputVector::new(c)
    }

    fn random_dataset(rng: &mut impl Rng, n: usize) -> Dataset {
        let inputs: Vec<_> = (0..n).map(|_| random_input(rng)).collect();
        let targets: Vec<_> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        Dataset::new(inputs, targets).unwrap()
    }

    fn test_hp() -> HyperParameters {
        HyperParameters {
            sigma1: 1.2,
            lambda_rbf: [0.8, 0.9, 1.1, 0.7, 1.3, 0.6, 1.0, 0.9],
            lambda_sin: 0.9,
            p_sin: 0.7,
            sigma2: [0.4, 0.3],
            c_lin: [0.1, -0.2],
            sigma_e: 0.2,
        }
    }

    /// Independent Gaussian-elimination solver (partial pivoting) used as
    /// the brute-force oracle; shares nothing with the Cholesky path.
    fn gauss_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
        let n = a.nrows();
        let mut m = a.clone();
        let mut x = b.clone();
        for col in 0..n {
            let mut pivot = col;
            for row in col + 1..n {
                if m[(row, col)].abs() > m[(pivot, col)].abs() {
                    pivot = row;
                }
            }
            if pivot != col {
                m.swap_rows(col, pivot);
                x.swap_rows(col, pivot);
            }
            let d = m[(col, col)];
            for row in col + 1..n {
                let f = m[(row, col)] / d;
                for k in col..n {
                    let v = m[(col, k)];
                    m[(row, k)] -= f * v;
                }
                let v = x[col];
                x[row] -= f * v;
            }
        }
        for col in (0..n).rev() {
            let mut s = x[col];
            for k in col + 1..n {
                s -= m[(col, k)] * x[k];
            }
            x[col] = s / m[(col, col)];
        }
        x
    }

    /// log det via the same elimination (diagonal of U; SPD input keeps
    /// every pivot positive).
    fn gauss_log_det(a: &DMatrix<f64>) -> f64 {
        let n = a.nrows();
        let mut m = a.clone();
        let mut log_det = 0.0;
        let mut sign_flips = 0;
        for col in 0..n {
            let mut pivot = col;
            for row in col + 1..n {
                if m[(row, col)].abs() > m[(pivot, col)].abs() {
                    pivot = row;
                }
            }
            if pivot != col {
                m.swap_rows(col, pivot);
                sign_flips += 1;
            }
            let d = m[(col, col)];
            log_det += d.abs().ln();
            for row in col + 1..n {
                let f = m[(row, col)] / d;
                for k in col..n {
                    let v = m[(col, k)];
                    m[(row, k)] -= f * v;
                }
            }
        }
        assert_eq!(sign_flips % 2, 0, "SPD matrix should not flip det sign");
        log_det
    }

    fn noisy_gram(data: &Dataset, spec: KernelSpec, hp: &HyperParameters) -> DMatrix<f64> {
        let mut k = kernel::gram_matrix(spec, hp, data.inputs()).unwrap();
        for i in 0..data.len() {
            k[(i, i)] += hp.sigma_e * hp.sigma_e;
        }
        k
    }

    #[test]
    fn single_point_weight_is_half_target() {
        // k(w, w) = 1 with sigma_e = 1: alpha = (1 + 1)^-1 * 2 = 1.
        let mut hp = HyperParameters::ones();
        hp.sigma2 = [0.0, 0.0];
        hp.sigma_e = 1.0;
        let data = Dataset::new(vec![InputVector::new([0.0; 8])], vec![2.0]).unwrap();
        let post = fit_posterior(&data, KernelSpec::FullComposite, &hp).unwrap();
        assert_relative_eq!(post.weights()[0], 1.0, max_relative = 1e-14);
    }

    #[test]
    fn posterior_invariants_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let data = random_dataset(&mut rng, 25);
        let hp = test_hp();
        let post = fit_posterior(&data, KernelSpec::FullComposite, &hp).unwrap();

        let k = noisy_gram(&data, KernelSpec::FullComposite, &hp);
        let l = post.factor_l();
        let rebuilt = &l * l.transpose();
        assert!((&rebuilt - &k).norm() <= 1e-8 * k.norm());

        let y = DVector::from_column_slice(data.targets());
        let recon = &k * post.weights();
        assert!((recon - &y).norm() <= 1e-6 * y.norm());
    }

    #[test]
    fn near_zero_noise_interpolates() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let data = random_dataset(&mut rng, 15);
        let mut hp = test_hp();
        hp.sigma_e = 1e-5;
        let post = fit_posterior(&data, KernelSpec::FullComposite, &hp).unwrap();
        for (w, y) in data.inputs().iter().zip(data.targets()) {
            assert!((post.predict_mean(w) - y).abs() < 1e-4);
            // Variance collapses at a training point.
            assert!(post.predict_variance(w) <= 1e-6);
            assert!(post.predict_variance(w) >= -1e-9);
        }
    }

    #[test]
    fn interpolation_error_shrinks_with_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let data = random_dataset(&mut rng, 12);
        let mut hp = test_hp();
        let mut last = f64::MAX;
        for exp in 2..=5 {
            hp.sigma_e = 10f64.powi(-exp);
            let post = fit_posterior(&data, KernelSpec::FullComposite, &hp).unwrap();
            let max_err = data
                .inputs()
                .iter()
                .zip(data.targets())
                .map(|(w, y)| (post.predict_mean(w) - y).abs())
                .fold(0.0, f64::max);
            assert!(max_err < last, "sigma_e=1e-{exp}: {max_err} !< {last}");
            last = max_err;
        }
    }

    #[test]
    fn duplicated_point_with_conflicting_targets_still_fits() {
        let w = InputVector::new([0.1; 8]);
        let data = Dataset::new(vec![w, w], vec![1.0, -1.0]).unwrap();
        let mut hp = test_hp();
        hp.sigma_e = 0.3;
        let post = fit_posterior(&data, KernelSpec::FullComposite, &hp).unwrap();
        // Noise regularizes; prediction lands between the two targets.
        let p = post.predict_mean(&w);
        assert!(p.abs() < 1.0);
    }

    #[test]
    fn degenerate_kernel_predicts_prior_mean() {
        let mut hp = test_hp();
        hp.sigma1 = 0.0;
        hp.sigma2 = [0.0, 0.0];
        hp.sigma_e = 1.0;
        let data = Dataset::new(vec![InputVector::new([0.2; 8])], vec![3.0]).unwrap();
        let post = fit_posterior(&data, KernelSpec::FullComposite, &hp).unwrap();
        assert_eq!(post.predict_mean(&InputVector::new([0.5; 8])), 0.0);
    }

    #[test]
    fn far_point_recovers_prior_variance() {
        let mut hp = test_hp();
        hp.sigma2 = [0.0, 0.0];
        hp.lambda_rbf = [0.05; 8];
        let data = Dataset::new(vec![InputVector::new([0.0; 8])], vec![1.0]).unwrap();
        let post = fit_posterior(&data, KernelSpec::LinearPlusRbf, &hp).unwrap();
        let far = InputVector::new([5.0; 8]);
        let prior = kernel::eval_kernel(KernelSpec::LinearPlusRbf, &hp, &far, &far).unwrap();
        assert_relative_eq!(post.predict_variance(&far), prior, max_relative = 1e-9);
    }

    #[test]
    fn mean_and_variance_match_dense_solve_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let data = random_dataset(&mut rng, 25);
        let hp = test_hp();
        let spec = KernelSpec::FullComposite;
        let post = fit_posterior(&data, spec, &hp).unwrap();

        let k = noisy_gram(&data, spec, &hp);
        let y = DVector::from_column_slice(data.targets());
        let alpha_oracle = gauss_solve(&k, &y);

        for _ in 0..5 {
            let w = random_input(&mut rng);
            let k_star = DVector::from_iterator(
                data.len(),
                data.inputs()
                    .iter()
                    .map(|wi| kernel::eval_kernel(spec, &hp, &w, wi).unwrap()),
            );
            let mean_oracle = k_star.dot(&alpha_oracle);
            assert_relative_eq!(post.predict_mean(&w), mean_oracle, max_relative = 1e-8);

            let solve = gauss_solve(&k, &k_star);
            let var_oracle =
                kernel::eval_kernel(spec, &hp, &w, &w).unwrap() - k_star.dot(&solve);
            assert_relative_eq!(post.predict_variance(&w), var_oracle, max_relative = 1e-8);
        }
    }

    #[test]
    fn nll_single_point_closed_form() {
        let mut hp = HyperParameters::ones();
        hp.sigma1 = 1.7;
        hp.sigma2 = [0.0, 0.0];
        hp.sigma_e = 0.4;
        let data = Dataset::new(vec![InputVector::new([0.0; 8])], vec![0.0]).unwrap();
        let value = nll(&data, KernelSpec::FullComposite, &hp).unwrap();
        let expected = 0.5
            * (2.0 * std::f64::consts::PI * (hp.sigma1 * hp.sigma1 + hp.sigma_e * hp.sigma_e))
                .ln();
        assert_relative_eq!(value, expected, max_relative = 1e-12);
    }

    #[test]
    fn nll_zero_targets_drops_quadratic_term() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let inputs: Vec<_> = (0..8).map(|_| random_input(&mut rng)).collect();
        let data = Dataset::new(inputs, vec![0.0; 8]).unwrap();
        let hp = test_hp();
        let value = nll(&data, KernelSpec::FullComposite, &hp).unwrap();
        let k = noisy_gram(&data, KernelSpec::FullComposite, &hp);
        let expected =
            gauss_log_det(&k) / 2.0 + 4.0 * (2.0 * std::f64::consts::PI).ln();
        assert_relative_eq!(value, expected, max_relative = 1e-10);
    }

    #[test]
    fn nll_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let data = random_dataset(&mut rng, 20);
        for spec in [
            KernelSpec::FullComposite,
            KernelSpec::LinearPlusRbf,
            KernelSpec::RbfOnly,
        ] {
            let hp = test_hp();
            let value = nll(&data, spec, &hp).unwrap();
            let k = noisy_gram(&data, spec, &hp);
            let y = DVector::from_column_slice(data.targets());
            let expected = 0.5 * y.dot(&gauss_solve(&k, &y))
                + 0.5 * gauss_log_det(&k)
                + 0.5 * data.len() as f64 * (2.0 * std::f64::consts::PI).ln();
            assert_relative_eq!(value, expected, max_relative = 1e-8);
        }
    }

    #[test]
    fn nll_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        let h = 1e-6;
        for spec in [
            KernelSpec::FullComposite,
            KernelSpec::LinearPlusRbf,
            KernelSpec::RbfOnly,
        ] {
            for _ in 0..4 {
                let data = random_dataset(&mut rng, 12);
                let hp = test_hp();
                let grad = nll_gradient(&data, spec, &hp).unwrap();
                assert_eq!(grad.len(), spec.param_count());
                let x0 = hp.to_log_vector(spec).unwrap();
                for p in 0..spec.param_count() {
                    let mut xp = x0.clone();
                    xp[p] += h;
                    let mut xm = x0.clone();
                    xm[p] -= h;
                    let fp = nll(&data, spec, &hp.with_log_vector(spec, &xp).unwrap()).unwrap();
                    let fm = nll(&data, spec, &hp.with_log_vector(spec, &xm).unwrap()).unwrap();
                    let fd = (fp - fm) / (2.0 * h);
                    let scale = grad[p].abs().max(1e-6);
                    assert!(
                        (grad[p] - fd).abs() <= 1e-5 * scale,
                        "spec {spec:?} param {p}: analytic {} vs fd {}",
                        grad[p],
                        fd
                    );
                }
            }
        }
    }

    #[test]
    fn gradient_has_no_masked_entries() {
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        let data = random_dataset(&mut rng, 10);
        let grad = nll_gradient(&data, KernelSpec::RbfOnly, &test_hp()).unwrap();
        // sigma1 + 8 lengthscales + sigma_e; no sigma2 or c_lin slots.
        assert_eq!(grad.len(), 10);
    }

    #[test]
    fn heuristic_init_is_valid_for_all_variants() {
        let mut rng = ChaCha8Rng::seed_from_u64(28);
        let data = random_dataset(&mut rng, 30);
        for spec in [
            KernelSpec::FullComposite,
            KernelSpec::LinearPlusRbf,
            KernelSpec::RbfOnly,
        ] {
            let hp = heuristic_init(&data, spec, Some(0.03)).unwrap();
            assert!(hp.to_log_vector(spec).is_ok());
        }
    }

    #[test]
    fn dataset_validation() {
        assert!(matches!(
            Dataset::new(vec![], vec![]),
            Err(GpError::EmptyDataset)
        ));
        assert!(matches!(
            Dataset::new(vec![InputVector::new([0.0; 8])], vec![1.0, 2.0]),
            Err(GpError::LengthMismatch { .. })
        ));
        assert!(matches!(
            Dataset::new(vec![InputVector::new([f64::NAN; 8])], vec![1.0]),
            Err(GpError::NonFiniteRecord { index: 0 })
        ));
    }
}
