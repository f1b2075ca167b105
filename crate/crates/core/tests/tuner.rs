use aquacast::tuner::{
    fit_surrogate, matern52, partial_dependence, partial_dependence_all, search, suggest_next, Assignment, Dimension,
    DimensionKind, KernelParams, SearchSettings, SearchSpace, SurrogateOptions, SurrogateState, TrialOutcome, Value,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn real(name: &str, low: f64, high: f64) -> Dimension {
    Dimension {
        name: name.into(),
        kind: DimensionKind::Real { low, high },
    }
}

fn one_d(low: f64, high: f64) -> SearchSpace {
    SearchSpace::new(vec![real("x", low, high)]).unwrap()
}

fn at(x: f64) -> Assignment {
    Assignment(vec![Value::Real(x)])
}

/// Gauss-Jordan solve, independent of the library's Cholesky path.
#[allow(clippy::needless_range_loop)]
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, p);
        b.swap(c, p);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
    }
    (0..n).map(|i| b[i] / a[i][i]).collect()
}

/// Posterior mean and variance from the textbook formulas on 1-D inputs
/// scaled to `[0, 1]`.
fn dense_oracle(xs: &[f64], ys: &[f64], k: &KernelParams, diag: f64, x: f64) -> (f64, f64) {
    let n = xs.len();
    let ym = ys.iter().sum::<f64>() / n as f64;
    let ysd = {
        let v = ys.iter().map(|y| (y - ym).powi(2)).sum::<f64>() / n as f64;
        if v > 0.0 {
            v.sqrt()
        } else {
            1.0
        }
    };
    let z: Vec<f64> = ys.iter().map(|y| (y - ym) / ysd).collect();
    let cov = |a: f64, b: f64| {
        let r = ((a - b) / k.length_scales[0]).abs();
        let s = 5f64.sqrt() * r;
        k.signal_variance * (1.0 + s + s * s / 3.0) * (-s).exp()
    };
    let kmat: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| cov(xs[i], xs[j]) + if i == j { diag } else { 0.0 })
                .collect()
        })
        .collect();
    let kstar: Vec<f64> = xs.iter().map(|xi| cov(x, *xi)).collect();
    let alpha = solve(kmat.clone(), z);
    let v = solve(kmat, kstar.clone());
    let mean: f64 = kstar.iter().zip(&alpha).map(|(a, b)| a * b).sum();
    let var = k.signal_variance - kstar.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>();
    (mean * ysd + ym, var.max(0.0) * ysd * ysd)
}

#[test]
fn two_trials_interpolated() {
    let space = one_d(0.0, 1.0);
    let trials = vec![(at(0.2), 0.2), (at(0.8), 0.8)];
    let options = SurrogateOptions {
        noise_floor: 1e-12,
        ..Default::default()
    };
    let s = SurrogateState::fit(&space, &trials, &options).unwrap();
    for (a, y) in &trials {
        let (m, _) = s.predict(a).unwrap();
        assert!((m - y).abs() < 1e-6, "mean {m} vs {y}");
    }
}

#[test]
fn variance_shrinks_at_data() {
    let space = one_d(0.0, 10.0);
    let trials: Vec<_> = [0.5, 1.0, 1.5, 2.0].iter().map(|x| (at(*x), x * x)).collect();
    let s = fit_surrogate(&space, &trials).unwrap();
    let (_, near) = s.predict(&at(1.0)).unwrap();
    let (_, far) = s.predict(&at(10.0)).unwrap();
    assert!(near <= far, "{near} > {far}");
}

#[test]
fn ordering_invariant() {
    let space = one_d(0.0, 5.0);
    let trials: Vec<_> = [0.3, 4.1, 2.2, 1.7, 3.3]
        .iter()
        .map(|x| (at(*x), (x - 2.0f64).powi(2)))
        .collect();
    let mut reversed = trials.clone();
    reversed.reverse();
    let a = fit_surrogate(&space, &trials).unwrap();
    let b = fit_surrogate(&space, &reversed).unwrap();
    for x in [0.0, 1.1, 2.5, 4.9] {
        let (ma, va) = a.predict(&at(x)).unwrap();
        let (mb, vb) = b.predict(&at(x)).unwrap();
        assert!((ma - mb).abs() < 1e-6 * (1.0 + ma.abs()), "{ma} {mb}");
        assert!((va - vb).abs() < 1e-6 * (1.0 + va.abs()), "{va} {vb}");
    }
}

#[test]
fn matches_dense_oracle_at_training_points() {
    let space = one_d(0.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in [2usize, 7, 20] {
        let xs: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (6.0 * x).sin() + 0.3 * x).collect();
        let trials: Vec<_> = xs.iter().zip(&ys).map(|(x, y)| (at(*x), *y)).collect();
        let kernel = KernelParams {
            length_scales: vec![0.2],
            signal_variance: 1.3,
            noise_variance: 1e-4,
        };
        let s = SurrogateState::with_kernel(&space, &trials, kernel.clone()).unwrap();
        for x in &xs {
            let (m, v) = s.predict(&at(*x)).unwrap();
            let (mo, vo) = dense_oracle(&xs, &ys, &kernel, s.diagonal_noise(), *x);
            assert!((m - mo).abs() < 1e-8, "n={n} mean {m} vs {mo}");
            assert!((v - vo).abs() < 1e-8, "n={n} var {v} vs {vo}");
        }
    }
}

#[test]
fn matern_closed_form() {
    let r = 0.7f64;
    let s = 5f64.sqrt() * r;
    assert!((matern52(r) - (1.0 + s + 5.0 * r * r / 3.0) * (-s).exp()).abs() < 1e-15);
}

#[test]
fn suggestion_maximizes_ei_over_candidates() {
    let space = one_d(0.0, 1.0);
    let s = fit_surrogate(&space, &[(at(0.2), 0.2), (at(0.8), 0.8)]).unwrap();
    let rng = ChaCha8Rng::seed_from_u64(5);
    let chosen = suggest_next(&s, &mut rng.clone(), 1000).unwrap();
    let chosen_ei = s.expected_improvement(&chosen).unwrap();
    let mut replay = rng;
    for _ in 0..1000 {
        let c = space.sample(&mut replay);
        assert!(chosen_ei >= s.expected_improvement(&c).unwrap());
    }
}

#[test]
fn constant_observations_first_candidate() {
    let space = one_d(0.0, 1.0);
    let s = fit_surrogate(&space, &[(at(0.1), 2.0), (at(0.5), 2.0), (at(0.9), 2.0)]).unwrap();
    let rng = ChaCha8Rng::seed_from_u64(9);
    let first = space.sample(&mut rng.clone());
    let chosen = suggest_next(&s, &mut rng.clone(), 1000).unwrap();
    assert!(space.contains(&chosen));
    assert_eq!(chosen, first);
}

#[test]
fn log_uniform_suggestions_not_clustered_high() {
    let space = SearchSpace::new(vec![Dimension {
        name: "changepoint_prior_scale".into(),
        kind: DimensionKind::LogUniform { low: 0.001, high: 0.5 },
    }])
    .unwrap();
    let flat = vec![
        (Assignment(vec![Value::Real(0.01)]), 1.0),
        (Assignment(vec![Value::Real(0.1)]), 1.0),
    ];
    let s = fit_surrogate(&space, &flat).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 1000;
    let high = (0..n)
        .filter(|_| suggest_next(&s, &mut rng, 10).unwrap().0[0].as_f64().unwrap() > 0.25)
        .count();
    // Log-uniform mass above 0.25 is ln 2 / ln 500 ~ 0.11; linear would be 0.5.
    assert!((high as f64 / n as f64) < 0.2, "{high} of {n} above 0.25");
}

fn quadratic_best(seed: u64) -> f64 {
    let r = search(&one_d(0.0, 5.0), &SearchSettings::new(30, seed), |_, a| {
        Ok(TrialOutcome::scalar((a.0[0].as_f64().unwrap() - 2.0).powi(2)))
    })
    .unwrap();
    r.best_trial().assignment.0[0].as_f64().unwrap()
}

#[test]
fn quadratic_optimum_found() {
    let hits = (0..10).filter(|s| (quadratic_best(*s) - 2.0).abs() <= 0.1).count();
    assert!(hits >= 8, "{hits} of 10 seeds within 0.1");
}

#[test]
fn search_deterministic() {
    let space = SearchSpace::additive_default();
    let run = || {
        search(&space, &SearchSettings::new(8, 4), |_, a| {
            let v: f64 = a.0.iter().filter_map(Value::as_f64).map(|x| x.ln().powi(2)).sum();
            Ok(TrialOutcome::scalar(v))
        })
        .unwrap()
    };
    let (a, b) = (run(), run());
    let csv = |r: &aquacast::tuner::SearchResult| {
        let mut out = Vec::new();
        r.write_history_csv(&mut out, false).unwrap();
        out
    };
    assert_eq!(csv(&a), csv(&b));
    assert_eq!(a.trials.len(), 8);
    assert!(a.trials[5..].iter().all(|t| t.guided));
}

#[test]
fn pdp_constant_over_ignored_dimension() {
    let space = SearchSpace::new(vec![real("x", 0.0, 1.0), real("y", 0.0, 1.0)]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let trials: Vec<_> = (0..20)
        .map(|_| {
            let a = space.sample(&mut rng);
            let y = a.0[1].as_f64().unwrap();
            (a, (y - 0.3).powi(2))
        })
        .collect();
    let s = fit_surrogate(&space, &trials).unwrap();
    let rows = partial_dependence(&s, &["x"], 40, 0).unwrap();
    assert_eq!(rows.len(), 40);
    let mean = rows.iter().map(|r| r.value).sum::<f64>() / rows.len() as f64;
    for r in &rows {
        assert!((r.value - mean).abs() <= 1e-6, "{} vs {mean}", r.value);
    }
}

#[test]
fn pdp_monotone_for_monotone_objective() {
    let space = one_d(0.0, 1.0);
    let trials: Vec<_> = (0..10)
        .map(|i| i as f64 / 9.0)
        .map(|x| (at(x), 3.0 * x + 1.0))
        .collect();
    let s = fit_surrogate(&space, &trials).unwrap();
    let rows = partial_dependence(&s, &["x"], 40, 0).unwrap();
    assert!(rows.windows(2).all(|w| w[1].value >= w[0].value));
    assert_eq!(rows[0].x1, Value::Real(0.0));
    assert_eq!(rows[39].x1, Value::Real(1.0));
}

#[test]
fn pdp_layout_for_four_dimensions() {
    let space = SearchSpace::additive_default();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let trials: Vec<_> = (0..12).map(|i| (space.sample(&mut rng), i as f64)).collect();
    let s = fit_surrogate(&space, &trials).unwrap();
    let rows = partial_dependence_all(&s, 10, 0).unwrap();
    let one_d = rows.iter().filter(|r| r.dim2.is_none()).count();
    let pairs: std::collections::BTreeSet<_> = rows
        .iter()
        .filter_map(|r| r.dim2.as_ref().map(|d| (r.dim1.clone(), d.clone())))
        .collect();
    // Three continuous grids of 10 plus the two-label categorical.
    assert_eq!(one_d, 32);
    assert_eq!(pairs.len(), 6);
    assert!(partial_dependence(&s, &["units"], 10, 0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn suggestions_within_space(seed in 0u64..1000) {
        let space = SearchSpace::new(vec![
            Dimension { name: "n".into(), kind: DimensionKind::Integer { low: 30, high: 365 } },
            Dimension { name: "s".into(), kind: DimensionKind::LogUniform { low: 0.001, high: 0.5 } },
            Dimension { name: "m".into(), kind: DimensionKind::Categorical { choices: vec!["a".into(), "b".into()] } },
        ]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let trials: Vec<_> = (0..6).map(|i| (space.sample(&mut rng), (i * 7 % 5) as f64)).collect();
        let s = fit_surrogate(&space, &trials).unwrap();
        let a = suggest_next(&s, &mut rng, 50).unwrap();
        prop_assert!(space.contains(&a));
        prop_assert!(matches!(a.0[0], Value::Int(_)));
    }
}
