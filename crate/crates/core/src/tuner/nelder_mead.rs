//! Box-constrained Nelder-Mead; points are clamped into the box after every
//! simplex move.

pub(crate) struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    fn clamp(&self, x: &mut [f64]) {
        for ((v, lo), hi) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.clamp(*lo, *hi);
        }
    }
}

pub(crate) struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
}

/// Minimizes `f` from `start`. Non-finite values are treated as +inf.
pub(crate) fn minimize(mut f: impl FnMut(&[f64]) -> f64, start: &[f64], bounds: &Bounds, max_evals: usize) -> Minimum {
    let n = start.len();
    let mut eval = |x: &[f64]| {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    let mut x0 = start.to_vec();
    bounds.clamp(&mut x0);
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let f0 = eval(&x0);
    simplex.push((x0.clone(), f0));
    for i in 0..n {
        let mut x = x0.clone();
        let width = bounds.upper[i] - bounds.lower[i];
        let step = 0.1 * width;
        x[i] = if x[i] + step <= bounds.upper[i] {
            x[i] + step
        } else {
            x[i] - step
        };
        let v = eval(&x);
        simplex.push((x, v));
    }
    let mut evals = n + 1;

    while evals < max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        let spread = (worst - best).abs();
        let size = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if spread <= 1e-10 * (1.0 + best.abs()) && size <= 1e-8 {
            break;
        }

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / n as f64;
            }
        }
        let along = |t: f64, worst: &[f64]| -> Vec<f64> {
            let mut p: Vec<f64> = centroid.iter().zip(worst).map(|(c, w)| c + t * (c - w)).collect();
            bounds.clamp(&mut p);
            p
        };
        let xw = simplex[n].0.clone();
        let xr = along(1.0, &xw);
        let fr = eval(&xr);
        evals += 1;
        if fr < simplex[0].1 {
            let xe = along(2.0, &xw);
            let fe = eval(&xe);
            evals += 1;
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < simplex[n].1 {
            let x = along(0.5, &xw);
            let v = eval(&x);
            (x, v)
        } else {
            let x = along(-0.5, &xw);
            let v = eval(&x);
            (x, v)
        };
        evals += 1;
        if fc < simplex[n].1.min(fr) {
            simplex[n] = (xc, fc);
            continue;
        }
        let x_best = simplex[0].0.clone();
        for (x, v) in simplex.iter_mut().skip(1) {
            for (xi, bi) in x.iter_mut().zip(&x_best) {
                *xi = bi + 0.5 * (*xi - bi);
            }
            *v = eval(x);
        }
        evals += n;
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    Minimum { x, value }
}
