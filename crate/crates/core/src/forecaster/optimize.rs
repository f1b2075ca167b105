//! Damped Newton minimizer for the penalized objective.

use nalgebra::{DMatrix, DVector};

use super::objective::PenalizedObjective;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    pub gradient_tolerance: f64,
    pub max_iterations: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            gradient_tolerance: 1e-9,
            max_iterations: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    GradientTolerance,
    /// The predicted decrease fell below the resolution of the objective.
    PrecisionFloor,
}

#[derive(Debug, Clone)]
pub struct OptimizeTrace {
    /// Objective after each accepted step, starting with the initial point.
    pub objective: Vec<f64>,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub stop: StopReason,
}

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;
const FLOOR: f64 = 1e-15;

pub fn minimize(
    objective: &PenalizedObjective,
    start: DVector<f64>,
    options: NewtonOptions,
) -> Result<(DVector<f64>, OptimizeTrace)> {
    let mut theta = start;
    let mut trace = OptimizeTrace {
        objective: Vec::new(),
        iterations: 0,
        gradient_norm: f64::INFINITY,
        stop: StopReason::GradientTolerance,
    };

    for iter in 0..=options.max_iterations {
        let (ev, hess) = objective.evaluate_with_curvature(&theta);
        if !ev.value.is_finite() || ev.gradient.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("objective during fitting"));
        }
        if trace.objective.is_empty() {
            trace.objective.push(ev.value);
        }
        let gnorm = ev.gradient.norm();
        trace.iterations = iter;
        trace.gradient_norm = gnorm;
        if gnorm <= options.gradient_tolerance {
            trace.stop = StopReason::GradientTolerance;
            return Ok((theta, trace));
        }
        if iter == options.max_iterations {
            break;
        }

        // Full Newton step first; if it fails the sufficient-decrease test,
        // fall back to the L1-majorizer step with backtracking.
        let mut accepted = None;
        let mut slope = 0.0;
        let newton = descent(newton_step(hess.clone(), &ev.gradient), &ev.gradient);
        if let Some((step, s)) = &newton {
            slope = *s;
            accepted = try_step(objective, &theta, step, ev.value, slope, 1);
        }
        // Newton steps treat a far-from-zero |δ| as linear and jump across
        // the kink; clip sign changes to zero and backtrack.
        if accepted.is_none() {
            if let Some((step, _)) = &newton {
                accepted = try_clipped(objective, &theta, step, &ev.gradient, ev.value);
            }
        }
        if accepted.is_none() {
            let mut h = hess;
            for (i, extra) in objective.l1_majorizer_extra(&theta) {
                h[(i, i)] += extra;
            }
            let (step, s) = descent(newton_step(h, &ev.gradient), &ev.gradient)
                .unwrap_or_else(|| (-ev.gradient.clone(), -gnorm * gnorm));
            slope = s;
            accepted = try_step(objective, &theta, &step, ev.value, slope, MAX_HALVINGS);
        }

        match accepted {
            Some((candidate, value)) => {
                theta = candidate;
                trace.objective.push(value);
            }
            None if -slope <= FLOOR * ev.value.abs().max(1.0) => {
                trace.stop = StopReason::PrecisionFloor;
                return Ok((theta, trace));
            }
            None => break,
        }
    }

    Err(Error::NotConverged {
        iterations: trace.iterations,
        objective: *trace.objective.last().unwrap_or(&f64::NAN),
        gradient_norm: trace.gradient_norm,
        parameters: theta.iter().copied().collect(),
    })
}

fn descent(step: DVector<f64>, gradient: &DVector<f64>) -> Option<(DVector<f64>, f64)> {
    let slope = gradient.dot(&step);
    (slope < 0.0).then_some((step, slope))
}

/// Backtracking Armijo search over at most `tries` step lengths.
fn try_step(
    objective: &PenalizedObjective,
    theta: &DVector<f64>,
    step: &DVector<f64>,
    value: f64,
    slope: f64,
    tries: usize,
) -> Option<(DVector<f64>, f64)> {
    let mut alpha = 1.0;
    for _ in 0..tries {
        let candidate = theta + alpha * step;
        let v = objective.value(&candidate);
        // Strict decrease: an unchanged value means the step is below the
        // objective's resolution.
        if v.is_finite() && v < value && v <= value + ARMIJO * alpha * slope {
            return Some((candidate, v));
        }
        alpha *= 0.5;
    }
    None
}

/// As [`try_step`], with changepoint adjustments that would change sign set
/// to zero at every trial length.
fn try_clipped(
    objective: &PenalizedObjective,
    theta: &DVector<f64>,
    step: &DVector<f64>,
    gradient: &DVector<f64>,
    value: f64,
) -> Option<(DVector<f64>, f64)> {
    let delta = objective.layout().delta();
    let mut alpha = 1.0;
    for _ in 0..MAX_HALVINGS {
        let mut candidate = theta + alpha * step;
        let mut clipped = false;
        for i in delta.clone() {
            if theta[i] * candidate[i] < 0.0 {
                candidate[i] = 0.0;
                clipped = true;
            }
        }
        if !clipped {
            return None;
        }
        let slope = gradient.dot(&(&candidate - theta));
        let v = objective.value(&candidate);
        if slope < 0.0 && v.is_finite() && v < value && v <= value + ARMIJO * slope {
            return Some((candidate, v));
        }
        alpha *= 0.5;
    }
    None
}

/// Solves `H·Δ = -g`, adding Levenberg damping until `H` factorizes.
fn newton_step(hess: DMatrix<f64>, gradient: &DVector<f64>) -> DVector<f64> {
    let n = hess.nrows();
    let scale = (0..n).map(|i| hess[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
    let mut damping = 0.0;
    loop {
        let mut h = hess.clone();
        for i in 0..n {
            h[(i, i)] += damping;
        }
        if let Some(chol) = h.cholesky() {
            return -chol.solve(gradient);
        }
        damping = if damping == 0.0 { scale * 1e-12 } else { damping * 10.0 };
        if damping > scale * 1e6 {
            return -gradient.clone();
        }
    }
}
