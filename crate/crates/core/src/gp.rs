//! Exact Gaussian-process regression over numeric hyperparameter coordinates.
//!
//! Targets are standardized inside [`GpModel::fit`]; all kernel parameters
//! therefore live in standardized units. [`GpModel::posterior`] returns
//! de-standardized mean and (latent) variance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Cholesky, JITTER_MAX};

const STD_FLOOR: f64 = 1e-12;
const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelFamily {
    SquaredExponential,
    Matern52,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LengthScale {
    Shared(f64),
    PerDim(Vec<f64>),
}

impl LengthScale {
    fn get(&self, dim: usize) -> f64 {
        match self {
            LengthScale::Shared(l) => *l,
            LengthScale::PerDim(v) => v[dim],
        }
    }

    /// Scalar summary used for tie-breaking (mean over dimensions).
    pub fn magnitude(&self) -> f64 {
        match self {
            LengthScale::Shared(l) => *l,
            LengthScale::PerDim(v) => v.iter().sum::<f64>() / v.len().max(1) as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub family: KernelFamily,
    pub length_scale: LengthScale,
    pub signal_variance: f64,
    pub noise_variance: f64,
}

impl KernelConfig {
    pub fn new(family: KernelFamily, length_scale: f64, signal_variance: f64, noise_variance: f64) -> Self {
        KernelConfig {
            family,
            length_scale: LengthScale::Shared(length_scale),
            signal_variance,
            noise_variance,
        }
    }

    pub fn with_noise(mut self, noise_variance: f64) -> Self {
        self.noise_variance = noise_variance;
        self
    }

    pub fn validate(&self, dims: usize) -> Result<()> {
        let ok_ls = match &self.length_scale {
            LengthScale::Shared(l) => *l > 0.0 && l.is_finite(),
            LengthScale::PerDim(v) => {
                if v.len() != dims {
                    return Err(Error::DimensionMismatch {
                        expected: dims,
                        got: v.len(),
                    });
                }
                v.iter().all(|l| *l > 0.0 && l.is_finite())
            }
        };
        if !ok_ls {
            return Err(Error::InvalidKernel("length scale must be positive".into()));
        }
        if !(self.signal_variance > 0.0 && self.signal_variance.is_finite()) {
            return Err(Error::InvalidKernel("signal variance must be positive".into()));
        }
        if !(self.noise_variance >= 0.0 && self.noise_variance.is_finite()) {
            return Err(Error::InvalidKernel("noise variance must be non-negative".into()));
        }
        Ok(())
    }

    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        let r2: f64 = a
            .iter()
            .zip(b)
            .enumerate()
            .map(|(d, (x, y))| {
                let t = (x - y) / self.length_scale.get(d);
                t * t
            })
            .sum();
        match self.family {
            KernelFamily::SquaredExponential => self.signal_variance * (-0.5 * r2).exp(),
            KernelFamily::Matern52 => {
                let s = (5.0 * r2).sqrt();
                self.signal_variance * (1.0 + s + s * s / 3.0) * (-s).exp()
            }
        }
    }

    /// The log-spaced candidate grid searched by marginal likelihood:
    /// length scale × signal variance × noise = 5 × 3 × 3 configurations.
    pub fn default_grid(family: KernelFamily) -> Vec<KernelConfig> {
        let mut out = Vec::with_capacity(45);
        for &ls in &[0.05, 0.1, 0.2, 0.5, 1.0] {
            for &sv in &[0.5, 1.0, 2.0] {
                for &noise in &[1e-6, 1e-4, 1e-2] {
                    out.push(KernelConfig::new(family, ls, sv, noise));
                }
            }
        }
        out
    }
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig::new(KernelFamily::Matern52, 0.2, 1.0, 1e-6)
    }
}

#[derive(Debug, Clone)]
pub struct GpModel {
    inputs: Vec<Vec<f64>>,
    targets: Vec<f64>,
    target_mean: f64,
    target_std: f64,
    kernel: KernelConfig,
    chol: Cholesky,
    alpha: Vec<f64>,
    jitter: f64,
}

fn standardize(targets: &[f64]) -> Result<(Vec<f64>, f64, f64)> {
    if let Some(i) = targets.iter().position(|t| !t.is_finite()) {
        return Err(Error::NonFiniteTarget(i));
    }
    let n = targets.len() as f64;
    let mean = targets.iter().sum::<f64>() / n;
    let var = targets.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / n;
    let std = var.sqrt().max(STD_FLOOR);
    Ok((targets.iter().map(|t| (t - mean) / std).collect(), mean, std))
}

fn check_inputs(inputs: &[Vec<f64>], targets: &[f64], needed: usize) -> Result<usize> {
    if inputs.len() < needed {
        return Err(Error::TooFewPoints {
            needed,
            got: inputs.len(),
        });
    }
    if inputs.len() != targets.len() {
        return Err(Error::DimensionMismatch {
            expected: inputs.len(),
            got: targets.len(),
        });
    }
    let dims = inputs[0].len();
    for x in inputs {
        if x.len() != dims {
            return Err(Error::DimensionMismatch {
                expected: dims,
                got: x.len(),
            });
        }
    }
    Ok(dims)
}

fn covariance(inputs: &[Vec<f64>], kernel: &KernelConfig) -> Vec<f64> {
    let n = inputs.len();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let v = kernel.eval(&inputs[i], &inputs[j]);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
        k[i * n + i] += kernel.noise_variance;
    }
    k
}

fn lml(chol: &Cholesky, y: &[f64], alpha: &[f64]) -> f64 {
    let fit: f64 = y.iter().zip(alpha).map(|(a, b)| a * b).sum();
    -0.5 * fit - 0.5 * chol.log_det() - 0.5 * y.len() as f64 * LN_2PI
}

impl GpModel {
    pub fn fit(inputs: Vec<Vec<f64>>, targets: &[f64], kernel: KernelConfig) -> Result<Self> {
        let dims = check_inputs(&inputs, targets, 1)?;
        kernel.validate(dims)?;
        let (y, target_mean, target_std) = standardize(targets)?;
        let n = inputs.len();
        let k = covariance(&inputs, &kernel);
        let (chol, jitter) = Cholesky::factor_with_jitter(&k, n).ok_or(Error::NotPositiveDefinite {
            max_jitter: JITTER_MAX,
        })?;
        let alpha = chol.solve(&y);
        Ok(GpModel {
            inputs,
            targets: y,
            target_mean,
            target_std,
            kernel,
            chol,
            alpha,
            jitter,
        })
    }

    pub fn dims(&self) -> usize {
        self.inputs[0].len()
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    /// Standardized training targets.
    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn target_mean(&self) -> f64 {
        self.target_mean
    }

    pub fn target_std(&self) -> f64 {
        self.target_std
    }

    pub fn kernel(&self) -> &KernelConfig {
        &self.kernel
    }

    /// Diagonal jitter that was added to make the factorization succeed.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Posterior mean and variance in standardized units.
    pub fn posterior_standardized(&self, x: &[f64]) -> Result<(f64, f64)> {
        if x.len() != self.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                got: x.len(),
            });
        }
        let kx: Vec<f64> = self.inputs.iter().map(|xi| self.kernel.eval(xi, x)).collect();
        let mean: f64 = kx.iter().zip(&self.alpha).map(|(a, b)| a * b).sum();
        let v = self.chol.solve_lower(&kx);
        let var = self.kernel.eval(x, x) - v.iter().map(|t| t * t).sum::<f64>();
        Ok((mean, var.max(0.0)))
    }

    /// De-standardized predictive mean and latent variance at `x`.
    pub fn posterior(&self, x: &[f64]) -> Result<(f64, f64)> {
        let (m, v) = self.posterior_standardized(x)?;
        Ok((
            m * self.target_std + self.target_mean,
            v * self.target_std * self.target_std,
        ))
    }

    /// Log marginal likelihood of the standardized targets.
    pub fn log_marginal_likelihood(&self) -> f64 {
        lml(&self.chol, &self.targets, &self.alpha)
    }
}

/// Picks the candidate kernel with the largest log marginal likelihood.
///
/// Candidates are scored on their own covariance without jitter; a candidate
/// whose matrix is singular is inadmissible. Ties go to the smallest length
/// scale. With constant targets every admissible candidate ties.
pub fn fit_kernel_hyperparams(
    inputs: &[Vec<f64>],
    targets: &[f64],
    candidates: &[KernelConfig],
) -> Result<KernelConfig> {
    let dims = check_inputs(inputs, targets, 2)?;
    let (y, _, _) = standardize(targets)?;
    let constant = y.iter().all(|v| *v == 0.0);
    let n = inputs.len();

    let mut best: Option<(f64, &KernelConfig)> = None;
    for cand in candidates {
        if cand.validate(dims).is_err() {
            continue;
        }
        let k = covariance(inputs, cand);
        let Some(chol) = Cholesky::factor(&k, n) else {
            continue;
        };
        let score = if constant {
            0.0
        } else {
            lml(&chol, &y, &chol.solve(&y))
        };
        if !score.is_finite() {
            continue;
        }
        best = match best {
            None => Some((score, cand)),
            Some((s, b)) => {
                let tol = 1e-12 * s.abs().max(1.0);
                if score > s + tol
                    || ((score - s).abs() <= tol
                        && cand.length_scale.magnitude() < b.length_scale.magnitude())
                {
                    Some((score, cand))
                } else {
                    Some((s, b))
                }
            }
        };
    }
    best.map(|(_, k)| k.clone()).ok_or(Error::NoAdmissibleKernel)
}

/// Fits a model after selecting kernel hyperparameters from `candidates`.
/// A single training point skips selection and uses the first candidate.
/// Length scales tried per dimension by [`refine_length_scales`]. The upper
/// values are long enough to make a coordinate effectively irrelevant on the
/// unit cube.
pub const PER_DIM_SCALES: [f64; 8] = [0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 20.0];

/// Coordinate search over per-dimension length scales, starting from
/// `start` (typically the winner of [`fit_kernel_hyperparams`]).
///
/// Each sweep visits the dimensions in order and keeps the scale in
/// `scales` with the highest log marginal likelihood; a change must beat the
/// current score by a relative 1e-9. Signal and noise variance stay fixed.
pub fn refine_length_scales(
    inputs: &[Vec<f64>],
    targets: &[f64],
    start: &KernelConfig,
    scales: &[f64],
    sweeps: usize,
) -> Result<KernelConfig> {
    let dims = check_inputs(inputs, targets, 2)?;
    start.validate(dims)?;
    let (y, _, _) = standardize(targets)?;
    let n = inputs.len();
    let score = |k: &KernelConfig| -> Option<f64> {
        let chol = Cholesky::factor(&covariance(inputs, k), n)?;
        let s = lml(&chol, &y, &chol.solve(&y));
        s.is_finite().then_some(s)
    };
    let mut current = start.clone();
    current.length_scale = LengthScale::PerDim((0..dims).map(|d| start.length_scale.get(d)).collect());
    let Some(mut best) = score(&current) else {
        return Ok(current);
    };
    if y.iter().all(|v| *v == 0.0) {
        return Ok(current);
    }
    for _ in 0..sweeps {
        let mut changed = false;
        for d in 0..dims {
            for &l in scales {
                let mut cand = current.clone();
                if let LengthScale::PerDim(v) = &mut cand.length_scale {
                    if v[d] == l {
                        continue;
                    }
                    v[d] = l;
                }
                if let Some(s) = score(&cand) {
                    if s > best + 1e-9 * best.abs().max(1.0) {
                        best = s;
                        current = cand;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    Ok(current)
}

pub fn fit_auto(inputs: Vec<Vec<f64>>, targets: &[f64], candidates: &[KernelConfig]) -> Result<GpModel> {
    let kernel = if inputs.len() >= 2 {
        fit_kernel_hyperparams(&inputs, targets, candidates)?
    } else {
        candidates.first().cloned().unwrap_or_default()
    };
    GpModel::fit(inputs, targets, kernel)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn se(ls: f64, noise: f64) -> KernelConfig {
        KernelConfig::new(KernelFamily::SquaredExponential, ls, 1.0, noise)
    }

    #[test]
    fn single_point_interpolates() {
        let m = GpModel::fit(vec![vec![0.5]], &[3.0], se(0.2, 0.0)).unwrap();
        let (mean, var) = m.posterior(&[0.5]).unwrap();
        assert!((mean - 3.0).abs() < 1e-9);
        assert!(var <= 1e-8);
    }

    #[test]
    fn interpolates_linear_data() {
        let xs: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64 / 4.0]).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x[0]).collect();
        let m = GpModel::fit(xs.clone(), &ys, KernelConfig::default().with_noise(0.0)).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            let (mean, var) = m.posterior(x).unwrap();
            assert!((mean - y).abs() <= 1e-6 * y.abs().max(1.0), "{mean} vs {y}");
            assert!(var <= 1e-8);
        }
    }

    #[test]
    fn duplicate_conflicting_inputs_use_jitter() {
        let m = GpModel::fit(vec![vec![0.3], vec![0.3]], &[1.0, 2.0], se(0.2, 0.0));
        match m {
            Ok(m) => assert!(m.jitter() > 0.0),
            Err(e) => assert!(matches!(e, Error::NotPositiveDefinite { .. })),
        }
    }

    #[test]
    fn far_query_reverts_to_prior() {
        let xs = vec![vec![0.0], vec![0.1], vec![0.2]];
        let ys = [1.0, 2.0, 4.0];
        let m = GpModel::fit(xs, &ys, se(0.05, 0.0)).unwrap();
        let (mean, var) = m.posterior(&[100.0]).unwrap();
        let prior = m.kernel().signal_variance * m.target_std().powi(2);
        assert!((mean - m.target_mean()).abs() < 1e-9);
        assert!((var - prior).abs() <= 0.01 * prior);
    }

    #[test]
    fn dimension_mismatch() {
        let m = GpModel::fit(vec![vec![0.0, 1.0]], &[1.0], se(0.2, 0.0)).unwrap();
        assert!(matches!(
            m.posterior(&[0.0]).unwrap_err(),
            Error::DimensionMismatch { expected: 2, got: 1 }
        ));
        assert!(GpModel::fit(vec![vec![0.0], vec![0.0, 1.0]], &[1.0, 2.0], se(0.2, 0.0)).is_err());
    }

    #[test]
    fn invalid_kernel_rejected() {
        assert!(GpModel::fit(vec![vec![0.0]], &[1.0], se(0.0, 0.0)).is_err());
        assert!(GpModel::fit(vec![vec![0.0]], &[1.0], se(1.0, -1.0)).is_err());
        assert!(GpModel::fit(vec![vec![0.0]], &[f64::NAN], se(1.0, 0.0)).is_err());
    }

    #[test]
    fn single_point_lml_closed_form() {
        let m = GpModel::fit(vec![vec![0.2]], &[7.0], se(1.0, 0.0)).unwrap();
        assert!((m.log_marginal_likelihood() + 0.5 * LN_2PI).abs() < 1e-12);
    }

    #[test]
    fn selects_short_length_scale_for_sinusoid() {
        let xs: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64 / 29.0]).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (40.0 * x[0]).sin()).collect();
        let cands = [se(0.01, 1e-6), se(10.0, 1e-6)];
        let k = fit_kernel_hyperparams(&xs, &ys, &cands).unwrap();
        assert_eq!(k.length_scale, LengthScale::Shared(0.01));
    }

    #[test]
    fn constant_targets_prefer_smallest_length_scale() {
        let xs: Vec<Vec<f64>> = (0..4).map(|i| vec![i as f64 / 3.0]).collect();
        let k = fit_kernel_hyperparams(&xs, &[2.0; 4], &KernelConfig::default_grid(KernelFamily::Matern52))
            .unwrap();
        assert_eq!(k.length_scale, LengthScale::Shared(0.05));
    }

    #[test]
    fn identical_points_without_noise_fail() {
        let xs = vec![vec![0.4], vec![0.4]];
        let cands = [se(0.1, 0.0), se(1.0, 0.0)];
        assert_eq!(
            fit_kernel_hyperparams(&xs, &[1.0, 2.0], &cands).unwrap_err(),
            Error::NoAdmissibleKernel
        );
    }

    #[test]
    fn per_dim_length_scale() {
        let k = KernelConfig {
            family: KernelFamily::SquaredExponential,
            length_scale: LengthScale::PerDim(vec![1.0, 2.0]),
            signal_variance: 1.0,
            noise_variance: 0.0,
        };
        let v = k.eval(&[0.0, 0.0], &[1.0, 2.0]);
        assert!((v - (-1.0f64).exp()).abs() < 1e-15);
        assert!(k.validate(3).is_err());
    }
}
