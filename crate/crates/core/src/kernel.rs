//! The composite disturbance kernel and its hyperparameter gradients.
//!
//! The full kernel is the product of a periodic kernel (coil-array pitch)
//! and an anisotropic RBF kernel (smooth magnetic inconsistencies), plus a
//! linear kernel in the two translator coordinates (plane tilt trends):
//!
//! ```text
//! k(a, b) = sigma1^2 * exp( - sum_v (a_v - b_v)^2 / (2 lambda_rbf_v^2)
//!                           - sum_v sin^2(pi (a_v - b_v) / p_sin) / (2 lambda_sin^2) )
//!         + sum_{v=1,2} sigma2_v^2 (a_v - c_v)(b_v - c_v)
//! ```
//!
//! with the periodic sum dropped for [`KernelSpec::LinearPlusRbf`] and both
//! periodic and linear parts dropped for [`KernelSpec::RbfOnly`]. The three
//! variants carry 16, 14 and 10 hyperparameters (noise std included).
//!
//! Positive hyperparameters are optimized as logarithms; the canonical
//! parameter ordering is `log sigma1`, 8x `log lambda_rbf`, `log lambda_sin`,
//! `log p_sin`, 2x `log sigma2`, 2x `c_lin` (raw), `log sigma_e`, with the
//! variant's inactive entries masked out.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::input::{InputVector, INPUT_DIM};

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("hyperparameter {name} must be finite, got {value}")]
    NonFinite { name: &'static str, value: f64 },
    #[error("hyperparameter {name} must be strictly positive, got {value}")]
    NotPositive { name: &'static str, value: f64 },
    #[error("hyperparameter {name} must be nonnegative, got {value}")]
    Negative { name: &'static str, value: f64 },
    #[error("log-parameter vector has length {got}, expected {expected}")]
    BadVectorLength { expected: usize, got: usize },
    #[error("unknown kernel variant `{0}` (expected full, linear-rbf or rbf)")]
    UnknownVariant(String),
}

/// Which terms of the composite kernel are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelSpec {
    /// Periodic x RBF + linear; 16 hyperparameters.
    FullComposite,
    /// RBF + linear; 14 hyperparameters.
    LinearPlusRbf,
    /// RBF alone; 10 hyperparameters.
    RbfOnly,
}

impl KernelSpec {
    pub fn has_periodic(self) -> bool {
        matches!(self, KernelSpec::FullComposite)
    }

    pub fn has_linear(self) -> bool {
        !matches!(self, KernelSpec::RbfOnly)
    }

    /// Number of free hyperparameters, noise std included.
    pub fn param_count(self) -> usize {
        match self {
            KernelSpec::FullComposite => 16,
            KernelSpec::LinearPlusRbf => 14,
            KernelSpec::RbfOnly => 10,
        }
    }

    /// Names of the active hyperparameters in canonical order.
    pub fn param_names(self) -> Vec<&'static str> {
        let mut names = vec!["sigma1"];
        names.extend(LAMBDA_RBF_NAMES);
        if self.has_periodic() {
            names.push("lambda_sin");
            names.push("p_sin");
        }
        if self.has_linear() {
            names.extend(["sigma2_1", "sigma2_2", "c_lin_1", "c_lin_2"]);
        }
        names.push("sigma_e");
        debug_assert_eq!(names.len(), self.param_count());
        names
    }

    pub fn name(self) -> &'static str {
        match self {
            KernelSpec::FullComposite => "full",
            KernelSpec::LinearPlusRbf => "linear-rbf",
            KernelSpec::RbfOnly => "rbf",
        }
    }

    pub fn parse_name(name: &str) -> Result<Self, KernelError> {
        match name {
            "full" => Ok(KernelSpec::FullComposite),
            "linear-rbf" => Ok(KernelSpec::LinearPlusRbf),
            "rbf" => Ok(KernelSpec::RbfOnly),
            other => Err(KernelError::UnknownVariant(other.to_string())),
        }
    }
}

const LAMBDA_RBF_NAMES: [&str; INPUT_DIM] = [
    "lambda_rbf_1",
    "lambda_rbf_2",
    "lambda_rbf_3",
    "lambda_rbf_4",
    "lambda_rbf_5",
    "lambda_rbf_6",
    "lambda_rbf_7",
    "lambda_rbf_8",
];

/// All kernel parameters in natural units.
///
/// Fields not used by an ablated variant are simply ignored when evaluating
/// that variant. Amplitudes (`sigma1`, `sigma2`) and the noise std may be
/// zero for evaluation; lengthscales and the period must stay positive.
/// Optimization additionally requires every active positive-constrained
/// parameter to be strictly positive (log-space).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperParameters {
    /// Amplitude of the exponential factor (N).
    pub sigma1: f64,
    /// Per-coordinate RBF lengthscales (units of the input coordinate).
    pub lambda_rbf: [f64; INPUT_DIM],
    /// Unitless periodic lengthscale.
    pub lambda_sin: f64,
    /// Spatial period shared by all coordinates (m).
    pub p_sin: f64,
    /// Linear-kernel amplitudes for the two translator coordinates (N/m).
    pub sigma2: [f64; 2],
    /// Linear-kernel offsets (m); unconstrained.
    pub c_lin: [f64; 2],
    /// Measurement noise std (N).
    pub sigma_e: f64,
}

impl HyperParameters {
    /// A bland, valid starting point (unit scales everywhere).
    pub fn ones() -> Self {
        HyperParameters {
            sigma1: 1.0,
            lambda_rbf: [1.0; INPUT_DIM],
            lambda_sin: 1.0,
            p_sin: 1.0,
            sigma2: [1.0, 1.0],
            c_lin: [0.0, 0.0],
            sigma_e: 1.0,
        }
    }

    /// Validity for evaluation: everything finite, scales positive where a
    /// division occurs, amplitudes and noise merely nonnegative.
    pub fn validate(&self, spec: KernelSpec) -> Result<(), KernelError> {
        let finite = |name, value: f64| {
            if value.is_finite() {
                Ok(())
            } else {
                Err(KernelError::NonFinite { name, value })
            }
        };
        let positive = |name, value: f64| {
            finite(name, value)?;
            if value > 0.0 {
                Ok(())
            } else {
                Err(KernelError::NotPositive { name, value })
            }
        };
        let nonnegative = |name, value: f64| {
            finite(name, value)?;
            if value >= 0.0 {
                Ok(())
            } else {
                Err(KernelError::Negative { name, value })
            }
        };

        nonnegative("sigma1", self.sigma1)?;
        for (name, value) in LAMBDA_RBF_NAMES.iter().zip(self.lambda_rbf) {
            positive(name, value)?;
        }
        if spec.has_periodic() {
            positive("lambda_sin", self.lambda_sin)?;
            positive("p_sin", self.p_sin)?;
        }
        if spec.has_linear() {
            nonnegative("sigma2_1", self.sigma2[0])?;
            nonnegative("sigma2_2", self.sigma2[1])?;
            finite("c_lin_1", self.c_lin[0])?;
            finite("c_lin_2", self.c_lin[1])?;
        }
        nonnegative("sigma_e", self.sigma_e)
    }

    /// Pack the active parameters into the canonical log-space vector.
    ///
    /// Errors if an active positive-constrained parameter is not strictly
    /// positive (its log would not be finite).
    pub fn to_log_vector(&self, spec: KernelSpec) -> Result<Vec<f64>, KernelError> {
        self.validate(spec)?;
        let log_of = |name, value: f64| {
            if value > 0.0 {
                Ok(value.ln())
            } else {
                Err(KernelError::NotPositive { name, value })
            }
        };
        let mut v = Vec::with_capacity(spec.param_count());
        v.push(log_of("sigma1", self.sigma1)?);
        for (name, value) in LAMBDA_RBF_NAMES.iter().zip(self.lambda_rbf) {
            v.push(log_of(name, value)?);
        }
        if spec.has_periodic() {
            v.push(log_of("lambda_sin", self.lambda_sin)?);
            v.push(log_of("p_sin", self.p_sin)?);
        }
        if spec.has_linear() {
            v.push(log_of("sigma2_1", self.sigma2[0])?);
            v.push(log_of("sigma2_2", self.sigma2[1])?);
            v.push(self.c_lin[0]);
            v.push(self.c_lin[1]);
        }
        v.push(log_of("sigma_e", self.sigma_e)?);
        Ok(v)
    }

    /// Rebuild from a canonical log-space vector, keeping `self`'s values for
    /// the variant's inactive fields.
    pub fn with_log_vector(&self, spec: KernelSpec, v: &[f64]) -> Result<Self, KernelError> {
        if v.len() != spec.param_count() {
            return Err(KernelError::BadVectorLength {
                expected: spec.param_count(),
                got: v.len(),
            });
        }
        let mut hp = *self;
        let mut it = v.iter().copied();
        let mut next = || it.next().expect("length checked above");
        hp.sigma1 = next().exp();
        for slot in hp.lambda_rbf.iter_mut() {
            *slot = next().exp();
        }
        if spec.has_periodic() {
            hp.lambda_sin = next().exp();
            hp.p_sin = next().exp();
        }
        if spec.has_linear() {
            hp.sigma2[0] = next().exp();
            hp.sigma2[1] = next().exp();
            hp.c_lin[0] = next();
            hp.c_lin[1] = next();
        }
        hp.sigma_e = next().exp();
        hp.validate(spec)?;
        Ok(hp)
    }

    /// Serialize to flat `name = value` lines in canonical order, natural
    /// units (not logs). Inverse of [`crate::io::hp_record::parse_hp_record`].
    pub fn named_values(&self, spec: KernelSpec) -> Vec<(&'static str, f64)> {
        let mut out = vec![("sigma1", self.sigma1)];
        for (name, value) in LAMBDA_RBF_NAMES.iter().zip(self.lambda_rbf) {
            out.push((name, value));
        }
        if spec.has_periodic() {
            out.push(("lambda_sin", self.lambda_sin));
            out.push(("p_sin", self.p_sin));
        }
        if spec.has_linear() {
            out.push(("sigma2_1", self.sigma2[0]));
            out.push(("sigma2_2", self.sigma2[1]));
            out.push(("c_lin_1", self.c_lin[0]));
            out.push(("c_lin_2", self.c_lin[1]));
        }
        out.push(("sigma_e", self.sigma_e));
        out
    }

    pub fn set_named(&mut self, name: &str, value: f64) -> bool {
        match name {
            "sigma1" => self.sigma1 = value,
            "lambda_sin" => self.lambda_sin = value,
            "p_sin" => self.p_sin = value,
            "sigma2_1" => self.sigma2[0] = value,
            "sigma2_2" => self.sigma2[1] = value,
            "c_lin_1" => self.c_lin[0] = value,
            "c_lin_2" => self.c_lin[1] = value,
            "sigma_e" => self.sigma_e = value,
            other => match LAMBDA_RBF_NAMES.iter().position(|n| *n == other) {
                Some(i) => self.lambda_rbf[i] = value,
                None => return false,
            },
        }
        true
    }
}

/// Precomputed per-hyperparameter constants for fast pair evaluation.
#[derive(Debug, Clone, Copy)]
pub(crate) struct KernelPre {
    spec: KernelSpec,
    sigma1_sq: f64,
    inv_two_lambda_sq: [f64; INPUT_DIM],
    inv_two_lambda_sin_sq: f64,
    pi_over_p: f64,
    sigma2_sq: [f64; 2],
    c_lin: [f64; 2],
}

impl KernelPre {
    pub(crate) fn new(spec: KernelSpec, hp: &HyperParameters) -> Self {
        let mut inv_two_lambda_sq = [0.0; INPUT_DIM];
        for (slot, lam) in inv_two_lambda_sq.iter_mut().zip(hp.lambda_rbf) {
            *slot = 1.0 / (2.0 * lam * lam);
        }
        KernelPre {
            spec,
            sigma1_sq: hp.sigma1 * hp.sigma1,
            inv_two_lambda_sq,
            inv_two_lambda_sin_sq: if spec.has_periodic() {
                1.0 / (2.0 * hp.lambda_sin * hp.lambda_sin)
            } else {
                0.0
            },
            pi_over_p: if spec.has_periodic() {
                std::f64::consts::PI / hp.p_sin
            } else {
                0.0
            },
            sigma2_sq: if spec.has_linear() {
                [hp.sigma2[0] * hp.sigma2[0], hp.sigma2[1] * hp.sigma2[1]]
            } else {
                [0.0, 0.0]
            },
            c_lin: hp.c_lin,
        }
    }

    /// Kernel value for one pair.
    #[inline]
    pub(crate) fn eval(&self, a: &InputVector, b: &InputVector) -> f64 {
        let mut expo = 0.0;
        for v in 0..INPUT_DIM {
            // |a - b| keeps the evaluation bitwise symmetric in (a, b).
            let d = (a.0[v] - b.0[v]).abs();
            expo += d * d * self.inv_two_lambda_sq[v];
            if self.spec.has_periodic() {
                let s = (self.pi_over_p * d).sin();
                expo += s * s * self.inv_two_lambda_sin_sq;
            }
        }
        let mut k = self.sigma1_sq * (-expo).exp();
        if self.spec.has_linear() {
            for v in 0..2 {
                // Group the centered product first: multiplication commutes
                // bitwise, so k(a, b) == k(b, a) exactly.
                k += self.sigma2_sq[v] * ((a.0[v] - self.c_lin[v]) * (b.0[v] - self.c_lin[v]));
            }
        }
        k
    }

    /// Kernel value and all intermediate terms needed for gradients.
    #[inline]
    pub(crate) fn eval_parts(&self, a: &InputVector, b: &InputVector) -> PairParts {
        let mut rbf_terms = [0.0; INPUT_DIM];
        let mut periodic_sum = 0.0;
        let mut period_grad_sum = 0.0;
        let mut expo = 0.0;
        for v in 0..INPUT_DIM {
            let d = (a.0[v] - b.0[v]).abs();
            let r = d * d * self.inv_two_lambda_sq[v];
            rbf_terms[v] = r;
            expo += r;
            if self.spec.has_periodic() {
                let u = self.pi_over_p * d;
                let (sin_u, cos_u) = u.sin_cos();
                expo += sin_u * sin_u * self.inv_two_lambda_sin_sq;
                periodic_sum += sin_u * sin_u * self.inv_two_lambda_sin_sq;
                // d(-p_v)/d(log p_sin) = u sin(2u) / (2 lambda_sin^2)
                period_grad_sum += u * 2.0 * sin_u * cos_u * self.inv_two_lambda_sin_sq;
            }
        }
        let exp_part = self.sigma1_sq * (-expo).exp();
        let mut lin_terms = [0.0; 2];
        let mut lin_sum_centered = [0.0; 2];
        if self.spec.has_linear() {
            for v in 0..2 {
                let da = a.0[v] - self.c_lin[v];
                let db = b.0[v] - self.c_lin[v];
                lin_terms[v] = self.sigma2_sq[v] * (da * db);
                lin_sum_centered[v] = self.sigma2_sq[v] * (da + db);
            }
        }
        PairParts {
            exp_part,
            rbf_terms,
            periodic_sum,
            period_grad_sum,
            lin_terms,
            lin_sum_centered,
        }
    }
}

/// Intermediates of one pair evaluation, enough to form every
/// hyperparameter derivative without re-evaluating the kernel.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PairParts {
    /// sigma1^2 * exp(-RBF sum - periodic sum).
    pub exp_part: f64,
    /// Per-coordinate RBF exponent terms d^2 / (2 lambda^2).
    pub rbf_terms: [f64; INPUT_DIM],
    /// Periodic exponent sum.
    pub periodic_sum: f64,
    /// Sum of u sin(2u) / (2 lambda_sin^2) over coordinates.
    pub period_grad_sum: f64,
    /// Linear kernel terms sigma2^2 (a-c)(b-c), per coordinate.
    pub lin_terms: [f64; 2],
    /// sigma2^2 ((a-c) + (b-c)), per coordinate (for the c_lin gradient).
    pub lin_sum_centered: [f64; 2],
}

impl PairParts {
    /// Accumulate `weight * dk/dtheta` into `grad`, one slot per active
    /// hyperparameter in canonical order. The trailing `sigma_e` slot is
    /// untouched: the noise enters the Gram matrix only through its
    /// diagonal, which callers handle separately.
    #[inline]
    pub(crate) fn accumulate_gradient(&self, spec: KernelSpec, weight: f64, grad: &mut [f64]) {
        let we = weight * self.exp_part;
        grad[0] += 2.0 * we;
        for v in 0..INPUT_DIM {
            grad[1 + v] += we * 2.0 * self.rbf_terms[v];
        }
        let mut idx = 1 + INPUT_DIM;
        if spec.has_periodic() {
            grad[idx] += we * 2.0 * self.periodic_sum;
            grad[idx + 1] += we * self.period_grad_sum;
            idx += 2;
        }
        if spec.has_linear() {
            grad[idx] += weight * 2.0 * self.lin_terms[0];
            grad[idx + 1] += weight * 2.0 * self.lin_terms[1];
            grad[idx + 2] -= weight * self.lin_sum_centered[0];
            grad[idx + 3] -= weight * self.lin_sum_centered[1];
        }
    }
}

/// Evaluate the kernel for one pair of inputs.
pub fn eval_kernel(
    spec: KernelSpec,
    hp: &HyperParameters,
    a: &InputVector,
    b: &InputVector,
) -> Result<f64, KernelError> {
    hp.validate(spec)?;
    Ok(KernelPre::new(spec, hp).eval(a, b))
}

/// Cross-covariance matrix; element (i, j) is `k(a[i], b[j])`.
pub fn kernel_matrix(
    spec: KernelSpec,
    hp: &HyperParameters,
    a: &[InputVector],
    b: &[InputVector],
) -> Result<DMatrix<f64>, KernelError> {
    hp.validate(spec)?;
    let pre = KernelPre::new(spec, hp);
    let mut m = DMatrix::zeros(a.len(), b.len());
    for (i, ai) in a.iter().enumerate() {
        for (j, bj) in b.iter().enumerate() {
            m[(i, j)] = pre.eval(ai, bj);
        }
    }
    Ok(m)
}

/// Symmetric Gram matrix over one input set (noise-free).
pub fn gram_matrix(
    spec: KernelSpec,
    hp: &HyperParameters,
    inputs: &[InputVector],
) -> Result<DMatrix<f64>, KernelError> {
    hp.validate(spec)?;
    let pre = KernelPre::new(spec, hp);
    let n = inputs.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let k = pre.eval(&inputs[i], &inputs[j]);
            m[(i, j)] = k;
            m[(j, i)] = k;
        }
    }
    Ok(m)
}

/// Derivative of the Gram matrix with respect to each active
/// log-hyperparameter, in canonical order.
///
/// The last entry (for `log sigma_e`) is identically zero: the noise std
/// does not enter the noise-free Gram matrix.
pub fn kernel_matrix_grad(
    spec: KernelSpec,
    hp: &HyperParameters,
    inputs: &[InputVector],
) -> Result<Vec<DMatrix<f64>>, KernelError> {
    hp.validate(spec)?;
    let pre = KernelPre::new(spec, hp);
    let n = inputs.len();
    let n_params = spec.param_count();
    let mut grads = vec![DMatrix::zeros(n, n); n_params];
    let mut slot = vec![0.0; n_params];
    for i in 0..n {
        for j in i..n {
            slot.iter_mut().for_each(|g| *g = 0.0);
            let parts = pre.eval_parts(&inputs[i], &inputs[j]);
            parts.accumulate_gradient(spec, 1.0, &mut slot);
            for (g, m) in slot.iter().zip(grads.iter_mut()) {
                m[(i, j)] = *g;
                m[(j, i)] = *g;
            }
        }
    }
    Ok(grads)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn wv(coords: [f64; INPUT_DIM]) -> InputVector {
        InputVector::new(coords)
    }

    fn random_input(rng: &mut impl Rng) -> InputVector {
        let mut c = [0.0; INPUT_DIM];
        for slot in c.iter_mut() {
            *slot = rng.random_range(-1.0..1.0);
        }
        InputVector::new(c)
    }

    fn random_hp(rng: &mut impl Rng) -> HyperParameters {
        let mut lam = [0.0; INPUT_DIM];
        for slot in lam.iter_mut() {
            *slot = rng.random_range(0.3..3.0);
        }
        HyperParameters {
            sigma1: rng.random_range(0.3..2.0),
            lambda_rbf: lam,
            lambda_sin: rng.random_range(0.3..2.0),
            p_sin: rng.random_range(0.5..2.0),
            sigma2: [rng.random_range(0.1..1.5), rng.random_range(0.1..1.5)],
            c_lin: [rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)],
            sigma_e: rng.random_range(0.01..0.5),
        }
    }

    #[test]
    fn same_point_unit_amplitude_gives_one() {
        // Zero distance: exp(0) = 1; linear part disabled.
        let mut hp = HyperParameters::ones();
        hp.sigma2 = [0.0, 0.0];
        let a = wv([0.3, -0.2, 0.1, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let k = eval_kernel(KernelSpec::FullComposite, &hp, &a, &a).unwrap();
        assert_relative_eq!(k, 1.0, max_relative = 1e-15);
    }

    #[test]
    fn pure_linear_kernel_multiplies_centered_coords() {
        let mut hp = HyperParameters::ones();
        hp.sigma1 = 0.0;
        hp.sigma2 = [1.0, 0.0];
        hp.c_lin = [0.0, 0.0];
        let a = wv([2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let b = wv([3.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let k = eval_kernel(KernelSpec::FullComposite, &hp, &a, &b).unwrap();
        assert_relative_eq!(k, 6.0, max_relative = 1e-15);
    }

    #[test]
    fn one_period_apart_looks_identical() {
        // One full period along a single coordinate with the RBF part
        // disabled by huge lengthscales: sin(pi) = 0 restores k = sigma1^2.
        let mut hp = HyperParameters::ones();
        hp.lambda_rbf = [1e6; INPUT_DIM];
        hp.sigma2 = [0.0, 0.0];
        hp.p_sin = 0.37;
        for axis in 0..INPUT_DIM {
            let a = wv([0.11; INPUT_DIM]);
            let mut shifted = a;
            shifted.0[axis] += hp.p_sin;
            let k = eval_kernel(KernelSpec::FullComposite, &hp, &a, &shifted).unwrap();
            assert_relative_eq!(k, 1.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn kernel_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for spec in [
            KernelSpec::FullComposite,
            KernelSpec::LinearPlusRbf,
            KernelSpec::RbfOnly,
        ] {
            for _ in 0..50 {
                let hp = random_hp(&mut rng);
                let a = random_input(&mut rng);
                let b = random_input(&mut rng);
                let kab = eval_kernel(spec, &hp, &a, &b).unwrap();
                let kba = eval_kernel(spec, &hp, &b, &a).unwrap();
                assert_eq!(kab, kba);
            }
        }
    }

    #[test]
    fn cross_matrix_transposes() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let hp = random_hp(&mut rng);
        let a: Vec<_> = (0..4).map(|_| random_input(&mut rng)).collect();
        let b: Vec<_> = (0..7).map(|_| random_input(&mut rng)).collect();
        let kab = kernel_matrix(KernelSpec::FullComposite, &hp, &a, &b).unwrap();
        let kba = kernel_matrix(KernelSpec::FullComposite, &hp, &b, &a).unwrap();
        assert_eq!(kab, kba.transpose());
    }

    #[test]
    fn single_point_gram_is_scalar_kernel() {
        let hp = HyperParameters::ones();
        let a = wv([0.5, 0.25, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let g = gram_matrix(KernelSpec::FullComposite, &hp, &[a]).unwrap();
        assert_eq!(g.nrows(), 1);
        let k = eval_kernel(KernelSpec::FullComposite, &hp, &a, &a).unwrap();
        assert_eq!(g[(0, 0)], k);
    }

    #[test]
    fn gram_plus_noise_is_positive_definite() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let hp = random_hp(&mut rng);
        let inputs: Vec<_> = (0..20).map(|_| random_input(&mut rng)).collect();
        let mut g = gram_matrix(KernelSpec::FullComposite, &hp, &inputs).unwrap();
        for i in 0..20 {
            g[(i, i)] += hp.sigma_e * hp.sigma_e;
        }
        let eig = g.symmetric_eigenvalues();
        assert!(eig.iter().all(|&e| e > 0.0), "eigenvalues: {eig:?}");
    }

    #[test]
    fn gram_is_positive_semidefinite_up_to_roundoff() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for spec in [
            KernelSpec::FullComposite,
            KernelSpec::LinearPlusRbf,
            KernelSpec::RbfOnly,
        ] {
            let hp = random_hp(&mut rng);
            let inputs: Vec<_> = (0..50).map(|_| random_input(&mut rng)).collect();
            let g = gram_matrix(spec, &hp, &inputs).unwrap();
            let eig = g.symmetric_eigenvalues();
            let max = eig.iter().cloned().fold(f64::MIN, f64::max);
            let min = eig.iter().cloned().fold(f64::MAX, f64::min);
            assert!(min >= -1e-8 * max, "min {min}, max {max}");
        }
    }

    #[test]
    fn rbf_only_matches_full_with_disabled_terms() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..30 {
            let mut hp = random_hp(&mut rng);
            let a = random_input(&mut rng);
            let b = random_input(&mut rng);
            let k_rbf = eval_kernel(KernelSpec::RbfOnly, &hp, &a, &b).unwrap();
            hp.sigma2 = [0.0, 0.0];
            hp.lambda_sin = 1e9;
            let k_full = eval_kernel(KernelSpec::FullComposite, &hp, &a, &b).unwrap();
            assert_relative_eq!(k_rbf, k_full, epsilon = 1e-9);
        }
    }

    #[test]
    fn linear_rbf_matches_full_with_periodic_disabled() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..30 {
            let mut hp = random_hp(&mut rng);
            let a = random_input(&mut rng);
            let b = random_input(&mut rng);
            let k_lr = eval_kernel(KernelSpec::LinearPlusRbf, &hp, &a, &b).unwrap();
            hp.lambda_sin = 1e9;
            let k_full = eval_kernel(KernelSpec::FullComposite, &hp, &a, &b).unwrap();
            assert_relative_eq!(k_lr, k_full, epsilon = 1e-9);
        }
    }

    #[test]
    fn sigma1_gradient_is_twice_exp_part() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let hp = random_hp(&mut rng);
        let inputs: Vec<_> = (0..6).map(|_| random_input(&mut rng)).collect();
        let grads = kernel_matrix_grad(KernelSpec::FullComposite, &hp, &inputs).unwrap();
        let k = gram_matrix(KernelSpec::FullComposite, &hp, &inputs).unwrap();
        // Remove the linear part to isolate the exp factor.
        let mut hp_nolin = hp;
        hp_nolin.sigma2 = [0.0, 0.0];
        let exp_part = gram_matrix(KernelSpec::FullComposite, &hp_nolin, &inputs).unwrap();
        assert!((&grads[0] - 2.0 * &exp_part).norm() < 1e-12 * k.norm());
    }

    #[test]
    fn zero_sigma1_kills_lengthscale_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut hp = random_hp(&mut rng);
        hp.sigma1 = 0.0;
        let inputs: Vec<_> = (0..5).map(|_| random_input(&mut rng)).collect();
        let grads = kernel_matrix_grad(KernelSpec::FullComposite, &hp, &inputs).unwrap();
        for g in &grads[1..1 + INPUT_DIM] {
            assert_eq!(g.norm(), 0.0);
        }
    }

    #[test]
    fn sigma_e_gram_gradient_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let hp = random_hp(&mut rng);
        let inputs: Vec<_> = (0..5).map(|_| random_input(&mut rng)).collect();
        for spec in [
            KernelSpec::FullComposite,
            KernelSpec::LinearPlusRbf,
            KernelSpec::RbfOnly,
        ] {
            let grads = kernel_matrix_grad(spec, &hp, &inputs).unwrap();
            assert_eq!(grads.len(), spec.param_count());
            assert_eq!(grads.last().unwrap().norm(), 0.0);
        }
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        // Central differences with step 1e-6 in log space, every active
        // hyperparameter, all three variants.
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let h = 1e-6;
        for spec in [
            KernelSpec::FullComposite,
            KernelSpec::LinearPlusRbf,
            KernelSpec::RbfOnly,
        ] {
            for _ in 0..5 {
                let hp = random_hp(&mut rng);
                let inputs: Vec<_> = (0..4).map(|_| random_input(&mut rng)).collect();
                let grads = kernel_matrix_grad(spec, &hp, &inputs).unwrap();
                let x0 = hp.to_log_vector(spec).unwrap();
                for p in 0..spec.param_count() {
                    let mut xp = x0.clone();
                    xp[p] += h;
                    let mut xm = x0.clone();
                    xm[p] -= h;
                    let kp = gram_matrix(spec, &hp.with_log_vector(spec, &xp).unwrap(), &inputs)
                        .unwrap();
                    let km = gram_matrix(spec, &hp.with_log_vector(spec, &xm).unwrap(), &inputs)
                        .unwrap();
                    let fd = (kp - km) / (2.0 * h);
                    let scale = grads[p].norm().max(1e-12);
                    assert!(
                        (&grads[p] - &fd).norm() <= 1e-5 * scale,
                        "spec {spec:?} param {p}: |analytic - fd| = {} vs scale {scale}",
                        (&grads[p] - &fd).norm()
                    );
                }
            }
        }
    }

    #[test]
    fn log_vector_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for spec in [
            KernelSpec::FullComposite,
            KernelSpec::LinearPlusRbf,
            KernelSpec::RbfOnly,
        ] {
            let hp = random_hp(&mut rng);
            let v = hp.to_log_vector(spec).unwrap();
            assert_eq!(v.len(), spec.param_count());
            let back = hp.with_log_vector(spec, &v).unwrap();
            assert_relative_eq!(back.sigma1, hp.sigma1, max_relative = 1e-14);
            assert_relative_eq!(back.sigma_e, hp.sigma_e, max_relative = 1e-14);
            for v in 0..INPUT_DIM {
                assert_relative_eq!(back.lambda_rbf[v], hp.lambda_rbf[v], max_relative = 1e-14);
            }
        }
    }

    #[test]
    fn rejects_nonfinite_and_nonpositive() {
        let mut hp = HyperParameters::ones();
        hp.lambda_rbf[3] = 0.0;
        assert!(eval_kernel(
            KernelSpec::RbfOnly,
            &hp,
            &wv([0.0; 8]),
            &wv([0.0; 8])
        )
        .is_err());
        let mut hp = HyperParameters::ones();
        hp.sigma1 = f64::NAN;
        assert!(hp.validate(KernelSpec::RbfOnly).is_err());
        let mut hp = HyperParameters::ones();
        hp.p_sin = -1.0;
        assert!(hp.validate(KernelSpec::FullComposite).is_err());
        // p_sin is inactive for the ablations, so it may be junk there.
        assert!(hp.validate(KernelSpec::LinearPlusRbf).is_ok());
    }
}
