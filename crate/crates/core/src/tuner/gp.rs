use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use super::nelder_mead::{self, Bounds};
use super::space::{Assignment, SearchSpace};
use crate::error::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_3;
const LENGTH_SCALE_RANGE: (f64, f64) = (1e-2, 1e4);
const SIGNAL_VARIANCE_RANGE: (f64, f64) = (1e-3, 1e3);
const MAX_NOISE_VARIANCE: f64 = 1.0;
const FIRST_JITTER: f64 = 1e-10;
/// Free-noise model must beat the noise-floor model by this many nats.
const NOISE_SELECTION_MARGIN: f64 = 1.0;
/// Exploration margin in standardized objective units.
pub const EI_XI: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    /// One per search dimension, in internal coordinates.
    pub length_scales: Vec<f64>,
    pub signal_variance: f64,
    pub noise_variance: f64,
}

#[derive(Debug, Clone)]
pub struct SurrogateOptions {
    pub noise_floor: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SurrogateOptions {
    fn default() -> Self {
        Self {
            noise_floor: 1e-10,
            restarts: 5,
            seed: 0,
        }
    }
}

/// Matérn 5/2 correlation at scaled distance `r`.
pub fn matern52(r: f64) -> f64 {
    let s = 5f64.sqrt() * r;
    (1.0 + s + s * s / 3.0) * (-s).exp()
}

fn scaled_distance(a: &[f64], b: &[f64], groups: &[usize], length_scales: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(groups)
        .map(|((x, y), g)| ((x - y) / length_scales[*g]).powi(2))
        .sum::<f64>()
        .sqrt()
}

struct Factorized {
    chol: DMatrix<f64>,
    alpha: DVector<f64>,
    jitter: f64,
    log_marginal_likelihood: f64,
}

fn factorize(x: &[Vec<f64>], y: &DVector<f64>, groups: &[usize], k: &KernelParams) -> Option<Factorized> {
    let n = x.len();
    let mut base = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = k.signal_variance * matern52(scaled_distance(&x[i], &x[j], groups, &k.length_scales));
            base[(i, j)] = v;
            base[(j, i)] = v;
        }
    }
    let mut jitter = 0.0;
    loop {
        let mut m = base.clone();
        for i in 0..n {
            m[(i, i)] += k.noise_variance + jitter;
        }
        if let Some(c) = m.cholesky() {
            let alpha = c.solve(y);
            let l = c.unpack();
            let log_det: f64 = (0..n).map(|i| l[(i, i)].ln()).sum();
            let lml = -0.5 * y.dot(&alpha) - log_det - 0.5 * n as f64 * LN_2PI;
            return Some(Factorized {
                chol: l,
                alpha,
                jitter,
                log_marginal_likelihood: lml,
            });
        }
        jitter = if jitter == 0.0 { FIRST_JITTER } else { jitter * 10.0 };
        if jitter > 1.0 {
            return None;
        }
    }
}

/// Gaussian-process regression of objective values on internal coordinates.
#[derive(Debug, Clone)]
pub struct SurrogateState {
    space: SearchSpace,
    groups: Vec<usize>,
    inputs: Vec<Vec<f64>>,
    targets: Vec<f64>,
    y_mean: f64,
    y_std: f64,
    kernel: KernelParams,
    chol: DMatrix<f64>,
    alpha: DVector<f64>,
    jitter: f64,
    log_marginal_likelihood: f64,
}

impl SurrogateState {
    /// Fits kernel hyperparameters by maximizing the marginal likelihood.
    pub fn fit(space: &SearchSpace, trials: &[(Assignment, f64)], options: &SurrogateOptions) -> Result<Self> {
        let (inputs, targets) = Self::check(space, trials)?;
        let n_ls = space.len();
        let floor = options.noise_floor;
        let (y_mean, y_std) = standardization(&targets);
        let y = DVector::from_iterator(targets.len(), targets.iter().map(|t| (t - y_mean) / y_std));
        let groups = space.length_scale_groups();

        let decode = |theta: &[f64], free_noise: bool| KernelParams {
            length_scales: theta[..n_ls].iter().map(|v| v.exp()).collect(),
            signal_variance: theta[n_ls].exp(),
            noise_variance: if free_noise { theta[n_ls + 1].exp() } else { floor },
        };

        let mut best: Option<(f64, KernelParams)> = None;
        for free_noise in [false, true] {
            if free_noise && floor >= MAX_NOISE_VARIANCE {
                continue;
            }
            let n_theta = n_ls + 1 + usize::from(free_noise);
            let mut lower = vec![LENGTH_SCALE_RANGE.0.ln(); n_ls];
            let mut upper = vec![LENGTH_SCALE_RANGE.1.ln(); n_ls];
            lower.push(SIGNAL_VARIANCE_RANGE.0.ln());
            upper.push(SIGNAL_VARIANCE_RANGE.1.ln());
            if free_noise {
                lower.push(floor.ln());
                upper.push(MAX_NOISE_VARIANCE.ln());
            }
            let bounds = Bounds { lower, upper };
            let objective = |theta: &[f64]| match factorize(&inputs, &y, &groups, &decode(theta, free_noise)) {
                Some(f) => -f.log_marginal_likelihood,
                None => f64::INFINITY,
            };
            let mut variant_best: Option<(f64, Vec<f64>)> = None;
            for restart in 0..options.restarts.max(1) {
                let start: Vec<f64> = if restart == 0 {
                    let mut s = vec![0.3f64.ln(); n_ls];
                    s.push(0.0);
                    if free_noise {
                        s.push(1e-2f64.max(floor).ln());
                    }
                    s
                } else {
                    let mut rng = ChaCha8Rng::seed_from_u64(options.seed.wrapping_add(restart as u64));
                    let mut s: Vec<f64> = (0..n_ls).map(|_| rng.random_range(0.05f64.ln()..5f64.ln())).collect();
                    s.push(rng.random_range(-1.0..1.0));
                    if free_noise {
                        s.push(rng.random_range(floor.ln()..0.0));
                    }
                    s
                };
                let m = nelder_mead::minimize(objective, &start, &bounds, 300 * n_theta);
                if m.value.is_finite() && variant_best.as_ref().is_none_or(|(v, _)| m.value < *v) {
                    variant_best = Some((m.value, m.x));
                }
            }
            if let Some((neg_lml, theta)) = variant_best {
                let lml = -neg_lml;
                let margin = if free_noise { NOISE_SELECTION_MARGIN } else { 0.0 };
                if best.as_ref().is_none_or(|(b, _)| lml > b + margin) {
                    best = Some((lml, decode(&theta, free_noise)));
                }
            }
        }
        let (_, kernel) = best.ok_or_else(|| Error::Surrogate("kernel matrix not positive definite".into()))?;
        Self::assemble(space.clone(), groups, inputs, targets, y_mean, y_std, kernel)
    }

    /// Conditions on the trials with fixed kernel hyperparameters.
    pub fn with_kernel(space: &SearchSpace, trials: &[(Assignment, f64)], kernel: KernelParams) -> Result<Self> {
        if kernel.length_scales.len() != space.len() {
            return Err(Error::LengthMismatch(kernel.length_scales.len(), space.len()));
        }
        let (inputs, targets) = Self::check(space, trials)?;
        let (y_mean, y_std) = standardization(&targets);
        Self::assemble(
            space.clone(),
            space.length_scale_groups(),
            inputs,
            targets,
            y_mean,
            y_std,
            kernel,
        )
    }

    fn check(space: &SearchSpace, trials: &[(Assignment, f64)]) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
        if trials.len() < 2 {
            return Err(Error::Surrogate(format!(
                "need at least 2 trials, got {}",
                trials.len()
            )));
        }
        let inputs = trials
            .iter()
            .map(|(a, _)| space.encode(a))
            .collect::<Result<Vec<_>>>()?;
        if inputs.iter().all(|x| x == &inputs[0]) {
            return Err(Error::Surrogate("all trial inputs identical".into()));
        }
        let targets: Vec<f64> = trials.iter().map(|(_, y)| *y).collect();
        if targets.iter().any(|y| !y.is_finite()) {
            return Err(Error::NonFinite("trial objective"));
        }
        Ok((inputs, targets))
    }

    fn assemble(
        space: SearchSpace,
        groups: Vec<usize>,
        inputs: Vec<Vec<f64>>,
        targets: Vec<f64>,
        y_mean: f64,
        y_std: f64,
        kernel: KernelParams,
    ) -> Result<Self> {
        let y = DVector::from_iterator(targets.len(), targets.iter().map(|t| (t - y_mean) / y_std));
        let f = factorize(&inputs, &y, &groups, &kernel)
            .ok_or_else(|| Error::Surrogate("kernel matrix not positive definite".into()))?;
        Ok(Self {
            space,
            groups,
            inputs,
            targets,
            y_mean,
            y_std,
            kernel,
            chol: f.chol,
            alpha: f.alpha,
            jitter: f.jitter,
            log_marginal_likelihood: f.log_marginal_likelihood,
        })
    }

    pub fn space(&self) -> &SearchSpace {
        &self.space
    }

    pub fn kernel(&self) -> &KernelParams {
        &self.kernel
    }

    /// Diagonal term actually added to the kernel matrix: noise plus jitter.
    pub fn diagonal_noise(&self) -> f64 {
        self.kernel.noise_variance + self.jitter
    }

    pub fn log_marginal_likelihood(&self) -> f64 {
        self.log_marginal_likelihood
    }

    /// Internal coordinates of the training trials.
    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    /// Mean and standard deviation used to standardize targets.
    pub fn standardization(&self) -> (f64, f64) {
        (self.y_mean, self.y_std)
    }

    fn cross_covariance(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.inputs.len(),
            self.inputs.iter().map(|xi| {
                self.kernel.signal_variance * matern52(scaled_distance(x, xi, &self.groups, &self.kernel.length_scales))
            }),
        )
    }

    /// Standardized posterior mean and variance of the latent function.
    fn predict_standardized(&self, x: &[f64]) -> (f64, f64) {
        let k = self.cross_covariance(x);
        let mean = k.dot(&self.alpha);
        let v = self
            .chol
            .solve_lower_triangular(&k)
            .expect("Cholesky factor has a positive diagonal");
        let var = (self.kernel.signal_variance - v.dot(&v)).max(0.0);
        (mean, var)
    }

    /// Posterior mean at internal coordinates, in objective units.
    pub fn mean_encoded(&self, x: &[f64]) -> f64 {
        self.cross_covariance(x).dot(&self.alpha) * self.y_std + self.y_mean
    }

    /// Posterior mean and variance at internal coordinates, in objective units.
    pub fn predict_encoded(&self, x: &[f64]) -> (f64, f64) {
        let (m, v) = self.predict_standardized(x);
        (m * self.y_std + self.y_mean, v * self.y_std * self.y_std)
    }

    pub fn predict(&self, a: &Assignment) -> Result<(f64, f64)> {
        Ok(self.predict_encoded(&self.space.encode(a)?))
    }

    /// Expected improvement below the best observed objective.
    pub fn expected_improvement_encoded(&self, x: &[f64]) -> f64 {
        let best = self
            .targets
            .iter()
            .map(|t| (t - self.y_mean) / self.y_std)
            .fold(f64::INFINITY, f64::min);
        let (mean, var) = self.predict_standardized(x);
        let gain = best - mean - EI_XI;
        let sd = var.sqrt();
        if sd <= 1e-12 {
            return gain.max(0.0);
        }
        let z = gain / sd;
        let normal = Normal::standard();
        gain * normal.cdf(z) + sd * normal.pdf(z)
    }

    pub fn expected_improvement(&self, a: &Assignment) -> Result<f64> {
        Ok(self.expected_improvement_encoded(&self.space.encode(a)?))
    }
}

fn standardization(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    (mean, if sd > 0.0 { sd } else { 1.0 })
}

/// Fits a surrogate with default options.
pub fn fit_surrogate(space: &SearchSpace, trials: &[(Assignment, f64)]) -> Result<SurrogateState> {
    SurrogateState::fit(space, trials, &SurrogateOptions::default())
}

/// Draws `n_candidates` points and returns the one with the largest expected
/// improvement; the first wins ties.
pub fn suggest_next(surrogate: &SurrogateState, rng: &mut impl Rng, n_candidates: usize) -> Result<Assignment> {
    let space = surrogate.space();
    let mut best: Option<(f64, Assignment)> = None;
    for _ in 0..n_candidates.max(1) {
        let a = space.sample(rng);
        let ei = surrogate.expected_improvement(&a)?;
        if best.as_ref().is_none_or(|(b, _)| ei > *b) {
            best = Some((ei, a));
        }
    }
    Ok(best.expect("at least one candidate").1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tuner::space::{Dimension, DimensionKind, Value};

    fn unit_space() -> SearchSpace {
        SearchSpace::new(vec![Dimension {
            name: "x".into(),
            kind: DimensionKind::Real { low: 0.0, high: 1.0 },
        }])
        .unwrap()
    }

    fn trial(x: f64, y: f64) -> (Assignment, f64) {
        (Assignment(vec![Value::Real(x)]), y)
    }

    #[test]
    fn matern_at_zero_and_decay() {
        assert_eq!(matern52(0.0), 1.0);
        assert!(matern52(1.0) < 1.0 && matern52(2.0) < matern52(1.0));
    }

    #[test]
    fn identical_inputs_rejected() {
        let trials = vec![trial(0.5, 1.0), trial(0.5, 2.0)];
        assert!(matches!(
            fit_surrogate(&unit_space(), &trials),
            Err(Error::Surrogate(_))
        ));
    }

    #[test]
    fn single_trial_rejected() {
        assert!(fit_surrogate(&unit_space(), &[trial(0.5, 1.0)]).is_err());
    }

    #[test]
    fn constant_targets_fit() {
        let trials = vec![trial(0.1, 3.0), trial(0.9, 3.0), trial(0.4, 3.0)];
        let s = fit_surrogate(&unit_space(), &trials).unwrap();
        let (m, _) = s.predict(&trial(0.6, 0.0).0).unwrap();
        assert!((m - 3.0).abs() < 1e-6);
    }
}
