//! Penalized least-squares objective for MAP fitting.
//!
//! ```text
//! J(θ) = Σ (ŷ(θ) - y)² / 2
//!      + (1/τ) Σ_j sqrt(δ_j² + ε²)
//!      + ‖β‖² / (2·sps²) + ‖κ‖² / (2·hps²)
//! ```
//!
//! The parameter vector is laid out as `[k, m, δ.., β_yearly.., β_weekly.., κ..]`.

use nalgebra::{DMatrix, DVector};

use super::config::SeasonalityMode;

/// Smoothing of the absolute value in the changepoint penalty.
pub const L1_SMOOTHING: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamLayout {
    pub n_changepoints: usize,
    pub n_yearly: usize,
    pub n_weekly: usize,
    pub n_holidays: usize,
}

impl ParamLayout {
    pub fn len(&self) -> usize {
        2 + self.n_changepoints + self.n_seasonal() + self.n_holidays
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Trend block: `k`, `m` and the changepoint adjustments.
    pub fn n_trend(&self) -> usize {
        2 + self.n_changepoints
    }

    pub fn n_seasonal(&self) -> usize {
        self.n_yearly + self.n_weekly
    }

    pub fn delta(&self) -> std::ops::Range<usize> {
        2..2 + self.n_changepoints
    }

    pub fn yearly(&self) -> std::ops::Range<usize> {
        let s = self.n_trend();
        s..s + self.n_yearly
    }

    pub fn weekly(&self) -> std::ops::Range<usize> {
        let s = self.yearly().end;
        s..s + self.n_weekly
    }

    pub fn beta(&self) -> std::ops::Range<usize> {
        self.n_trend()..self.n_trend() + self.n_seasonal()
    }

    pub fn kappa(&self) -> std::ops::Range<usize> {
        let s = self.beta().end;
        s..s + self.n_holidays
    }

    /// Everything multiplied by the trend in multiplicative mode.
    pub fn non_trend(&self) -> std::ops::Range<usize> {
        self.n_trend()..self.len()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PriorScales {
    pub changepoint: f64,
    pub seasonality: f64,
    pub holiday: f64,
}

/// Training data expanded into a design matrix.
///
/// Row `i` is `[t, 1, (t - s_j)·1{t ≥ s_j}.., fourier.., holiday indicators..]`,
/// so the additive prediction is `Z·θ`. In multiplicative mode the trend
/// columns and the remaining columns are combined as `g·(1 + s)`.
#[derive(Debug, Clone)]
pub struct PenalizedObjective {
    layout: ParamLayout,
    mode: SeasonalityMode,
    priors: PriorScales,
    design: DMatrix<f64>,
    target: DVector<f64>,
    /// `ZᵀZ`, exact Hessian of the additive data term.
    gram: Option<DMatrix<f64>>,
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub value: f64,
    pub gradient: DVector<f64>,
}

impl PenalizedObjective {
    pub fn new(
        layout: ParamLayout,
        mode: SeasonalityMode,
        priors: PriorScales,
        design: DMatrix<f64>,
        target: DVector<f64>,
    ) -> Self {
        assert_eq!(design.ncols(), layout.len());
        assert_eq!(design.nrows(), target.len());
        let gram = match mode {
            SeasonalityMode::Additive => Some(design.tr_mul(&design)),
            SeasonalityMode::Multiplicative => None,
        };
        Self {
            layout,
            mode,
            priors,
            design,
            target,
            gram,
        }
    }

    pub fn layout(&self) -> ParamLayout {
        self.layout
    }

    pub fn n_observations(&self) -> usize {
        self.target.len()
    }

    pub fn dim(&self) -> usize {
        self.layout.len()
    }

    /// Normalized predictions at the training rows.
    pub fn predictions(&self, theta: &DVector<f64>) -> DVector<f64> {
        match self.mode {
            SeasonalityMode::Additive => &self.design * theta,
            SeasonalityMode::Multiplicative => {
                let (g, s) = self.split(theta);
                g.zip_map(&s, |g, s| g * (1.0 + s))
            }
        }
    }

    pub fn residuals(&self, theta: &DVector<f64>) -> DVector<f64> {
        self.predictions(theta) - &self.target
    }

    fn split(&self, theta: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let nt = self.layout.n_trend();
        let zt = self.design.columns(0, nt);
        let zs = self.design.columns(nt, self.layout.len() - nt);
        let g = zt * theta.rows(0, nt);
        let s = zs * theta.rows(nt, self.layout.len() - nt);
        (g, s)
    }

    fn penalty(&self, theta: &DVector<f64>) -> f64 {
        let eps2 = L1_SMOOTHING * L1_SMOOTHING;
        let l1: f64 = theta.as_slice()[self.layout.delta()]
            .iter()
            .map(|d| (d * d + eps2).sqrt())
            .sum();
        let b2: f64 = theta.as_slice()[self.layout.beta()].iter().map(|b| b * b).sum();
        let h2: f64 = theta.as_slice()[self.layout.kappa()].iter().map(|h| h * h).sum();
        l1 / self.priors.changepoint
            + b2 / (2.0 * self.priors.seasonality.powi(2))
            + h2 / (2.0 * self.priors.holiday.powi(2))
    }

    fn add_penalty_gradient(&self, theta: &DVector<f64>, grad: &mut DVector<f64>) {
        let eps2 = L1_SMOOTHING * L1_SMOOTHING;
        for i in self.layout.delta() {
            let d = theta[i];
            grad[i] += d / (d * d + eps2).sqrt() / self.priors.changepoint;
        }
        let ws = 1.0 / self.priors.seasonality.powi(2);
        for i in self.layout.beta() {
            grad[i] += ws * theta[i];
        }
        let wh = 1.0 / self.priors.holiday.powi(2);
        for i in self.layout.kappa() {
            grad[i] += wh * theta[i];
        }
    }

    /// Extra diagonal turning the smoothed-L1 Hessian into the curvature of
    /// its quadratic majorizer, `1 / (τ·sqrt(δ² + ε²))`.
    pub fn l1_majorizer_extra(&self, theta: &DVector<f64>) -> Vec<(usize, f64)> {
        let eps2 = L1_SMOOTHING * L1_SMOOTHING;
        self.layout
            .delta()
            .map(|i| {
                let q = theta[i] * theta[i] + eps2;
                (i, (1.0 / q.sqrt() - eps2 / q.powf(1.5)) / self.priors.changepoint)
            })
            .collect()
    }

    fn add_penalty_hessian(&self, theta: &DVector<f64>, hess: &mut DMatrix<f64>) {
        let eps2 = L1_SMOOTHING * L1_SMOOTHING;
        for i in self.layout.delta() {
            let d = theta[i];
            hess[(i, i)] += eps2 / (d * d + eps2).powf(1.5) / self.priors.changepoint;
        }
        let ws = 1.0 / self.priors.seasonality.powi(2);
        for i in self.layout.beta() {
            hess[(i, i)] += ws;
        }
        let wh = 1.0 / self.priors.holiday.powi(2);
        for i in self.layout.kappa() {
            hess[(i, i)] += wh;
        }
    }

    pub fn value(&self, theta: &DVector<f64>) -> f64 {
        let r = self.residuals(theta);
        0.5 * r.norm_squared() + self.penalty(theta)
    }

    pub fn gradient(&self, theta: &DVector<f64>) -> DVector<f64> {
        self.evaluate(theta).gradient
    }

    pub fn evaluate(&self, theta: &DVector<f64>) -> Evaluation {
        let (value, gradient, _) = self.evaluate_inner(theta, false);
        Evaluation { value, gradient }
    }

    /// Value, gradient and a positive semi-definite curvature matrix: the
    /// exact Hessian in additive mode, Gauss-Newton in multiplicative mode.
    pub fn evaluate_with_curvature(&self, theta: &DVector<f64>) -> (Evaluation, DMatrix<f64>) {
        let (value, gradient, hess) = self.evaluate_inner(theta, true);
        (Evaluation { value, gradient }, hess.expect("curvature requested"))
    }

    fn evaluate_inner(&self, theta: &DVector<f64>, want_hessian: bool) -> (f64, DVector<f64>, Option<DMatrix<f64>>) {
        let (r, mut grad, hess) = match self.mode {
            SeasonalityMode::Additive => {
                let r = &self.design * theta - &self.target;
                let grad = self.design.tr_mul(&r);
                let hess = want_hessian.then(|| self.gram.clone().expect("additive gram"));
                (r, grad, hess)
            }
            SeasonalityMode::Multiplicative => {
                let (g, s) = self.split(theta);
                let r = g.zip_map(&s, |g, s| g * (1.0 + s)) - &self.target;
                // Jacobian of the predictions: trend columns scaled by (1 + s),
                // the rest scaled by g.
                let nt = self.layout.n_trend();
                let one_plus_s = s.map(|v| 1.0 + v);
                let mut jac = self.design.clone();
                for (c, mut col) in jac.column_iter_mut().enumerate() {
                    if c < nt {
                        col.component_mul_assign(&one_plus_s);
                    } else {
                        col.component_mul_assign(&g);
                    }
                }
                let grad = jac.tr_mul(&r);
                let hess = want_hessian.then(|| jac.tr_mul(&jac));
                (r, grad, hess)
            }
        };
        let value = 0.5 * r.norm_squared() + self.penalty(theta);
        self.add_penalty_gradient(theta, &mut grad);
        let hess = hess.map(|mut h| {
            self.add_penalty_hessian(theta, &mut h);
            h
        });
        (value, grad, hess)
    }
}
