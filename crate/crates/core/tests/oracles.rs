//! Checks against independent references: closed-form laminate means,
//! one-dimensional quadrature, the sampler's target covariance and trend
//! statements of the convergence results.

use homoglab::corrector::{
    solve_massive_corrector, solve_steady_corrector, steady_rve, SolverConfig,
};
use homoglab::extrapolation::scalar_resolvent_model;
use homoglab::gaussian_field::{
    CoefficientField, CoefficientMapSpec, CoefficientModel, CovarianceSpec, SampleSeed,
};
use homoglab::lattice::{PeriodicGrid, ScalarField};
use homoglab::semigroup::{flux_average, Semigroup, TimeGrid};
use homoglab::smallcontrast::first_order_semigroup_stepped;
use homoglab::stats::experiments::{ball_averages, lag_covariances};
use homoglab::stats::{mean_with_stderr, run_ensemble, EnsembleSpec};
use homoglab::two_scale::{run_two_scale, MacroPotential, TwoScaleOptions};

fn model(d: usize, n: usize, beta: f64) -> CoefficientModel {
    let grid = PeriodicGrid::new(d, n).unwrap();
    CoefficientModel::new(
        &grid,
        &CovarianceSpec::new(beta).unwrap(),
        &CoefficientMapSpec::logistic(0.5, 1.0),
    )
    .unwrap()
}

fn laminate(grid: PeriodicGrid) -> CoefficientField {
    let n = grid.side() as f64;
    CoefficientField::from_field(ScalarField::from_fn(grid, |c| {
        let x = c[0] as f64 / n;
        0.55 + 0.4 * (2.0 * std::f64::consts::PI * x).sin().powi(3) * (0.5 + 0.5 * (6.0 * x).cos())
    }))
    .unwrap()
}

#[test]
fn laminate_matches_one_dimensional_means() {
    for (d, n) in [(2, 64), (3, 16)] {
        let grid = PeriodicGrid::new(d, n).unwrap();
        let a = laminate(grid);
        let edges = a.edge_coefficients();
        let harmonic = n as f64
            / (0..n)
                .map(|i| {
                    let mut c = vec![0; d];
                    c[0] = i;
                    1.0 / edges[0][grid.index(&c)]
                })
                .sum::<f64>();
        let arithmetic = a.field().mean();
        let (_, est) = steady_rve(&a, &SolverConfig::default(), vec![]).unwrap();
        for i in 0..d {
            for j in 0..d {
                let want = match (i, j) {
                    (0, 0) => harmonic,
                    (i, j) if i == j => arithmetic,
                    _ => 0.0,
                };
                let got = est.entry(i, j);
                assert!(
                    (got - want).abs() <= 1e-8 * want.abs().max(1.0),
                    "d={d} ({i},{j}): {got} vs {want}"
                );
            }
        }
    }
}

/// `E[A(g)]` for `g ~ N(0, var)` by Gauss-Hermite-free trapezoidal quadrature
/// on a wide uniform mesh.
fn gaussian_expectation(f: impl Fn(f64) -> f64, var: f64) -> f64 {
    let s = var.sqrt();
    let h = 1e-3;
    let mut acc = 0.0;
    let mut x = -12.0;
    while x <= 12.0 {
        acc += f(s * x) * (-0.5 * x * x).exp();
        x += h;
    }
    acc * h / (2.0 * std::f64::consts::PI).sqrt()
}

#[test]
fn birkhoff_mean_matches_quadrature() {
    let m = model(2, 64, 4.0);
    let var = m.density().implied_covariance().values()[0];
    let want = gaussian_expectation(|g| m.map().apply(g), var);
    let ens = EnsembleSpec::new(200, 11).unwrap();
    let rows = run_ensemble(&ens, None, |seed| {
        Ok(ball_averages(m.sample(seed)?.field(), &[8.0])[0])
    })
    .unwrap();
    let (mean, se) = mean_with_stderr(&rows);
    assert!((mean - want).abs() <= 3.0 * se, "{mean} +- {se} vs {want}");
}

#[test]
fn sampler_covariance_matches_clamped_target() {
    for beta in [1.0, 4.0] {
        let m = model(2, 64, beta);
        let target = m.density().implied_covariance();
        let lags = [1, 2, 4, 8];
        let ens = EnsembleSpec::new(400, 3).unwrap();
        let rows = run_ensemble(&ens, None, |seed| {
            Ok(lag_covariances(&m.gaussian(seed), &lags))
        })
        .unwrap();
        for (k, &l) in lags.iter().enumerate() {
            let col: Vec<f64> = rows.iter().map(|r| r[k]).collect();
            let (mean, se) = mean_with_stderr(&col);
            let want = target.values()[l];
            assert!(
                (mean - want).abs() <= 3.0 * se,
                "beta={beta} lag {l}: {mean} +- {se} vs {want}"
            );
        }
    }
}

#[test]
fn sampler_ignores_thread_count() {
    let m = model(2, 32, 2.0);
    let ens = EnsembleSpec::new(6, 5).unwrap();
    let one = run_ensemble(&ens, Some(1), |s| m.sample(s)).unwrap();
    let three = run_ensemble(&ens, Some(3), |s| m.sample(s)).unwrap();
    assert_eq!(one, three);
}

#[test]
fn massive_correctors_approach_the_steady_one() {
    let m = model(2, 64, 4.0);
    let a = m.sample(SampleSeed::new(2, 0)).unwrap();
    let cfg = SolverConfig::default();
    let steady = solve_steady_corrector(&a, 0, &cfg).unwrap().grad_phi();
    let mut last = f64::INFINITY;
    for t in [4.0, 16.0, 64.0, 256.0] {
        let err = solve_massive_corrector(&a, 0, t, &cfg)
            .unwrap()
            .grad_phi()
            .sub(&steady)
            .norm();
        assert!(err <= 1.05 * last, "T={t}: {err} > {last}");
        last = err;
    }
}

#[test]
fn accumulated_gradient_approaches_the_corrector() {
    let m = model(2, 64, 4.0);
    let a = m.sample(SampleSeed::new(2, 1)).unwrap();
    let cfg = SolverConfig::default();
    let steady = solve_steady_corrector(&a, 1, &cfg).unwrap().grad_phi();
    let probes = [4.0, 16.0, 64.0];
    let mut errs = Vec::new();
    Semigroup::new(&a, &cfg)
        .unwrap()
        .step_through(1, &TimeGrid::new(64.0).unwrap(), &probes, |s, _, probe| {
            if probe {
                errs.push(s.s_accum.sub(&steady).norm());
            }
            Ok(())
        })
        .unwrap();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
}

#[test]
fn flux_average_mean_is_the_effective_coefficient() {
    let m = model(2, 64, 4.0);
    let ens = EnsembleSpec::new(24, 9).unwrap();
    let cfg = SolverConfig::default();
    let rows = run_ensemble(&ens, None, |seed| {
        let a = m.sample(seed)?;
        let mut q = 0.0;
        Semigroup::new(&a, &cfg)?.run(0, &TimeGrid::new(16.0)?, &[16.0], |s| {
            q = flux_average(s, 4.0)?[0];
            Ok(())
        })?;
        let (_, est) = steady_rve(&a, &cfg, vec![seed])?;
        Ok((q, est.entry(0, 0)))
    })
    .unwrap();
    let qs: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let (mean, se) = mean_with_stderr(&qs);
    let ahom = rows.iter().map(|r| r.1).sum::<f64>() / rows.len() as f64;
    // the flux at finite T carries an O(eta^2) bias on top of the noise
    assert!(
        (mean - ahom).abs() <= 3.0 * se + 0.01,
        "{mean} +- {se} vs {ahom}"
    );
}

#[test]
fn semigroup_follows_small_contrast_prediction() {
    let m = model(2, 64, 4.0);
    let g = m.gaussian(SampleSeed::new(4, 0));
    let atilde = homoglab::gaussian_field::centred_perturbation(&g);
    let delta = 0.05;
    let a =
        homoglab::gaussian_field::small_contrast_from_perturbation(atilde.clone(), delta).unwrap();
    let sg = Semigroup::new(&a, &SolverConfig::default()).unwrap();
    for t in [4.0, 16.0] {
        // same steps on both sides, so only the contrast remainder is left
        let steps = TimeGrid::new(t).unwrap();
        let got = sg
            .step_through(0, &steps, &[], |_, _, _| Ok(()))
            .unwrap()
            .grad_u()
            .squared_magnitude()
            .mean();
        let pred = homoglab::lattice::gradient(
            &first_order_semigroup_stepped(&atilde, 0, &steps)
                .unwrap()
                .scaled(delta),
        );
        let want = pred.squared_magnitude().mean();
        assert!((got - want).abs() <= 0.1 * want, "T={t}: {got} vs {want}");
    }
}

#[test]
fn two_scale_error_is_bounded_and_decreasing() {
    let opts = TwoScaleOptions::default();
    let pot = MacroPotential::default_for(2);
    let mut last = f64::INFINITY;
    for (n, eps) in [(16, 0.125), (32, 0.0625), (64, 0.03125)] {
        let a = model(2, n, 4.0).sample(SampleSeed::new(6, 0)).unwrap();
        let r = run_two_scale(&a, &pot, eps, &opts, &SolverConfig::default(), vec![]).unwrap();
        assert!(r.grad_error >= 0.0 && r.grad_error <= r.norm_grad_v + r.norm_grad_expansion);
        assert!(r.grad_error < last, "eps={eps}: {} >= {last}", r.grad_error);
        last = r.grad_error;
    }
}

#[test]
fn two_scale_laminate_is_grid_independent() {
    let pot = MacroPotential::default_for(2);
    let eps = 1.0 / 16.0;
    let errs: Vec<f64> = [32, 64]
        .into_iter()
        .map(|n| {
            let a = laminate_periodic(PeriodicGrid::new(2, n).unwrap(), 8);
            run_two_scale(
                &a,
                &pot,
                eps,
                &TwoScaleOptions::default(),
                &SolverConfig::default(),
                vec![],
            )
            .unwrap()
            .grad_error
        })
        .collect();
    assert!((errs[0] - errs[1]).abs() <= 0.05 * errs[1], "{errs:?}");
}

/// Laminate with period `p` fine cells, so refining the cell count keeps
/// the microstructure fixed.
fn laminate_periodic(grid: PeriodicGrid, p: usize) -> CoefficientField {
    CoefficientField::from_field(ScalarField::from_fn(grid, |c| {
        [0.6, 0.9, 1.0, 0.7, 0.55, 0.8, 0.95, 0.65][c[0] % p]
    }))
    .unwrap()
}

#[test]
fn resolvent_ladder_has_order_n() {
    for n in 1..=3 {
        for t in [16.0, 32.0, 64.0] {
            let e1 = (scalar_resolvent_model(n, t, 1.0).unwrap() - 1.0).abs();
            let e2 = (scalar_resolvent_model(n, 2.0 * t, 1.0).unwrap() - 1.0).abs();
            let ratio = e1 / e2;
            let want = 2f64.powi(n as i32);
            assert!((ratio / want - 1.0).abs() <= 0.1, "n={n} T={t}: {ratio}");
        }
    }
    assert!((scalar_resolvent_model(1, 10.0, 1.0).unwrap() - 1.0 / 1.1).abs() < 1e-15);
}
