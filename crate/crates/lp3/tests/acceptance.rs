//! Workspace acceptance gates: one test per numbered end-to-end guarantee,
//! each printing a `[criterion NN] PASS` line with its measured values and
//! asserting its own wall-clock budget, so
//! `cargo test -p lp3 --test acceptance -- --nocapture` doubles as a
//! numerical report of the whole pipeline.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, resume_unwind, AssertUnwindSafe};
use std::time::Instant;

use lp3::core::dataset::PeriodicDataset;
use lp3::core::dynamics::{iterate, DynamicsConfig, Lyapunov, Map1D};
use lp3::core::elm::{Activation, FiniteNetwork, WeightLaw};
use lp3::core::kernels::{Activation as KernelActivation, DeepKind, KernelFamily, KernelSpec};
use lp3::core::limitmap::{fit_limit, symmetry_residual, TrainedMap};
use lp3::core::orbits::{continue_orbit, find_orbits, orbit_census, Terminus};
use lp3::core::quadratic::{
    attractor_births, attractor_period, fixed_point_multiplier, quadratic_error, NormalQuadratic,
    QuadraticFit,
};
use lp3::core::rng::{derive_seed, Rng};
use lp3::scan::{scan_2d, Axis, ScanGrid, ScanRow};

/// Root seed of every acceptance draw; each criterion derives its own
/// sub-seed from a task label so the draws stay independent and frozen.
const ROOT_SEED: u64 = 0;

/// Runs one criterion body, printing a single pass/fail line. The body
/// returns its detail string; any panic inside it is re-raised after the
/// FAIL line so `cargo test` still reports the failure.
fn run_criterion(n: usize, budget_s: f64, body: impl FnOnce() -> String) {
    let started = Instant::now();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(detail) => {
            let dt = started.elapsed().as_secs_f64();
            println!("[criterion {n:02}] PASS ({dt:.1}s): {detail}");
            assert!(
                dt <= budget_s,
                "[criterion {n:02}] runtime {dt:.1}s exceeded budget {budget_s}s"
            );
        }
        Err(cause) => {
            let dt = started.elapsed().as_secs_f64();
            println!("[criterion {n:02}] FAIL ({dt:.1}s)");
            resume_unwind(cause);
        }
    }
}

/// The four closed-form single-layer families.
fn analytic_families() -> [KernelFamily; 4] {
    [
        KernelFamily::Erf,
        KernelFamily::Sin,
        KernelFamily::Cos,
        KernelFamily::Relu,
    ]
}

fn unit_kernel(family: KernelFamily) -> KernelSpec {
    KernelSpec::new(family, 1.0, 1.0).unwrap()
}

/// Random period-n orbit with pairwise separation >= 0.01 (keeps the 3x3
/// Gram condition below ~1e6 so interpolation residuals stay meaningful).
fn random_orbit(rng: &mut Rng, n: usize, lo: f64, hi: f64) -> PeriodicDataset {
    loop {
        let pts: Vec<f64> = (0..n).map(|_| rng.uniform(lo, hi)).collect();
        let mut sep = f64::INFINITY;
        for i in 0..n {
            for j in i + 1..n {
                sep = sep.min((pts[i] - pts[j]).abs());
            }
        }
        if sep >= 0.01 {
            return PeriodicDataset::period_orbit(&pts).unwrap();
        }
    }
}

fn evenly_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// |f'(x_1) ... f'(x_n)| over the training points.
fn stability_product(map: &TrainedMap, points: &[f64]) -> f64 {
    points
        .iter()
        .map(|&x| map.evaluate_deriv(x, 1).unwrap())
        .product::<f64>()
        .abs()
}

#[test]
fn criterion_01_trained_maps_interpolate_their_data() {
    run_criterion(1, 10.0, || {
        let mut rng = Rng::from_seed(derive_seed(ROOT_SEED, "acceptance-interpolation"));
        let mut worst = 0.0_f64;
        for _ in 0..100 {
            let data = random_orbit(&mut rng, 3, -3.0, 3.0);
            for family in analytic_families() {
                let map = fit_limit(&data, &unit_kernel(family)).unwrap();
                for (&x, &y) in data.xs().iter().zip(data.ys()) {
                    worst = worst.max((map.evaluate(x) - y).abs());
                }
            }
        }
        assert!(worst <= 1e-8, "max data residual {worst:e}");
        format!("max |f(x_i) - y_i| = {worst:.2e} over 100 datasets x 4 families")
    });
}

#[test]
fn criterion_02_closed_forms_match_monte_carlo() {
    run_criterion(2, 60.0, || {
        let mut rng = Rng::from_seed(derive_seed(ROOT_SEED, "acceptance-montecarlo"));
        let mut worst_z = 0.0_f64;
        for family in analytic_families() {
            let kernel = unit_kernel(family.clone());
            for i in 0..20 {
                let x = rng.uniform(-2.0, 2.0);
                let y = rng.uniform(-2.0, 2.0);
                let seed = derive_seed(ROOT_SEED, &format!("acceptance-mc-{family:?}-{i}"));
                let mc = kernel.monte_carlo(x, y, 1_000_000, seed).unwrap();
                let z = (kernel.eval(x, y).unwrap() - mc.mean).abs() / mc.std_error;
                assert!(
                    z <= 4.0,
                    "{family:?} at ({x:.3}, {y:.3}): |analytic - empirical| = {z:.2} std errors"
                );
                worst_z = worst_z.max(z);
            }
        }
        format!("worst deviation {worst_z:.2} of 4.0 allowed std errors (80 probes, N=1e6)")
    });
}

#[test]
fn criterion_03_derivatives_match_finite_differences() {
    run_criterion(3, 5.0, || {
        let mut rng = Rng::from_seed(derive_seed(ROOT_SEED, "acceptance-derivatives"));
        let mut worst = 0.0_f64;
        // Central differences certify ~1e-10 absolute at this step size, so
        // the relative gate uses a 1e-3 floor in the denominator.
        let rel = |fd: f64, an: f64| (fd - an).abs() / an.abs().max(1e-3);
        for family in analytic_families() {
            let kernel = unit_kernel(family.clone());
            let data = PeriodicDataset::period_orbit(&[-1.1, 0.8, 0.2]).unwrap();
            let map = fit_limit(&data, &kernel).unwrap();
            let mut checked = 0;
            while checked < 200 {
                let x = rng.uniform(-2.0, 2.0);
                let y = rng.uniform(-2.0, 2.0);
                // The ReLU kernel has a |x - y| kink: probe away from the
                // diagonal, and away from the data points for the map.
                if family == KernelFamily::Relu
                    && ((x - y).abs() < 0.05
                        || data.xs().iter().any(|&p| (x - p).abs() < 0.05))
                {
                    continue;
                }
                let h = 6e-6 * x.abs().max(1.0);
                let fd = (kernel.eval(x + h, y).unwrap() - kernel.eval(x - h, y).unwrap())
                    / (2.0 * h);
                let e = rel(fd, kernel.dx(x, y).unwrap());
                assert!(e <= 1e-6, "{family:?} kernel dx at ({x}, {y}): rel {e:e}");
                worst = worst.max(e);

                let fd = (map.evaluate(x + h) - map.evaluate(x - h)) / (2.0 * h);
                let e = rel(fd, map.evaluate_deriv(x, 1).unwrap());
                assert!(e <= 1e-6, "{family:?} map derivative at {x}: rel {e:e}");
                worst = worst.max(e);
                checked += 1;
            }
        }
        format!("worst relative deviation {worst:.2e} of 1e-6 allowed (200 probes x 4 families)")
    });
}

#[test]
fn criterion_04_finite_networks_converge_to_the_limit_map() {
    run_criterion(4, 120.0, || {
        let data = PeriodicDataset::period_orbit(&[-1.0, 1.0, 0.0]).unwrap();
        let limit = fit_limit(&data, &unit_kernel(KernelFamily::Erf)).unwrap();
        let grid = evenly_spaced(-2.0, 2.0, 201);
        let limit_vals: Vec<f64> = grid.iter().map(|&x| limit.evaluate(x)).collect();
        let mut medians = Vec::new();
        for n_nodes in [10usize, 100, 1_000, 10_000] {
            let mut sups: Vec<f64> = (0..20)
                .map(|s| {
                    let seed =
                        derive_seed(ROOT_SEED, &format!("acceptance-width-{n_nodes}-{s}"));
                    let net = FiniteNetwork::sample(
                        n_nodes,
                        Activation::Erf,
                        1.0,
                        1.0,
                        WeightLaw::Gaussian,
                        seed,
                    )
                    .unwrap()
                    .train_readout(&data)
                    .unwrap();
                    grid.iter()
                        .zip(&limit_vals)
                        .map(|(&x, &lv)| (net.eval(x, 1.0).unwrap() - lv).abs())
                        .fold(0.0, f64::max)
                })
                .collect();
            sups.sort_by(f64::total_cmp);
            medians.push(0.5 * (sups[9] + sups[10]));
        }
        for pair in medians.windows(2) {
            assert!(
                pair[1] < pair[0],
                "median sup-errors not strictly decreasing: {medians:?}"
            );
        }
        let shown: Vec<String> = medians.iter().map(|m| format!("{m:.2e}")).collect();
        format!(
            "median sup-errors [{}] strictly decreasing over N = 10..10^4",
            shown.join(", ")
        )
    });
}

#[test]
fn criterion_05_stability_window_and_untrained_attractor() {
    run_criterion(5, 300.0, || {
        let kernel = unit_kernel(KernelFamily::Erf);
        let starts = evenly_spaced(-10.0, 10.0, 21);

        // Stability window of the trained 3-orbit over c, from the fits alone.
        let mut window: Vec<f64> = Vec::new();
        for k in 0..=1200 {
            let c = -3.0 + 0.005 * k as f64;
            let Ok(data) = PeriodicDataset::period_orbit(&[-1.0, 1.0, c]) else {
                continue; // c collides with a training input
            };
            let Ok(map) = fit_limit(&data, &kernel) else {
                continue;
            };
            if stability_product(&map, data.xs()) < 1.0 {
                window.push(c);
            }
        }
        // The stable set splits into contiguous runs: one for c far below the
        // training points (extending past c = -3) and the main window ending
        // just above c = 0.22. The quoted edges are the upper ends of those
        // two runs.
        let mut runs: Vec<(f64, f64)> = Vec::new();
        for &c in &window {
            match runs.last_mut() {
                Some((_, hi)) if c - *hi <= 0.0075 => *hi = c,
                _ => runs.push((c, c)),
            }
        }
        assert!(
            runs.len() >= 2,
            "expected two stable runs over c, found {runs:?}"
        );
        let right = runs.last().unwrap().1;
        let left = runs[0].1;
        assert!(
            (right - 0.22).abs() <= 0.02,
            "right stability boundary {right} not within 0.22 +/- 0.02"
        );
        assert!(
            (left + 2.2).abs() <= 0.05,
            "left stability edge {left} not within -2.2 +/- 0.05"
        );

        // A period-3 attractor away from the training points ("untrained")
        // must be reachable for every c in [-0.40, -0.05].
        for k in 0..8 {
            let c = -0.40 + 0.05 * k as f64;
            let data = PeriodicDataset::period_orbit(&[-1.0, 1.0, c]).unwrap();
            let map = fit_limit(&data, &kernel).unwrap();
            let found = starts.iter().any(|&x0| {
                let s = iterate(
                    &map,
                    &DynamicsConfig {
                        transient: 20_000,
                        horizon: 4_000,
                        x0,
                        eps_period: 1e-10,
                        n_max: 6,
                        sample_len: 3,
                        ..DynamicsConfig::default()
                    },
                );
                s.period == Some(3)
                    && !s.diverged
                    && s.trajectory_sample.iter().all(|&p| {
                        data.xs().iter().all(|&t| (p - t).abs() > 1e-2)
                    })
            });
            assert!(found, "no untrained period-3 attractor at c = {c}");
        }

        // Chaotic response at c = -0.5 and c = 0.3: some start has a
        // positive time-averaged Lyapunov exponent.
        let mut lambdas = Vec::new();
        for c in [-0.5, 0.3] {
            let data = PeriodicDataset::period_orbit(&[-1.0, 1.0, c]).unwrap();
            let map = fit_limit(&data, &kernel).unwrap();
            let best = starts
                .iter()
                .filter_map(|&x0| {
                    let s = iterate(
                        &map,
                        &DynamicsConfig {
                            transient: 10_000,
                            horizon: 100_000,
                            x0,
                            ..DynamicsConfig::default()
                        },
                    );
                    match (s.diverged, s.lyapunov) {
                        (false, Lyapunov::Finite(l)) => Some(l),
                        _ => None,
                    }
                })
                .fold(f64::NEG_INFINITY, f64::max);
            assert!(best > 0.0, "no positive Lyapunov exponent at c = {c}: best {best}");
            lambdas.push(best);
        }
        format!(
            "stability edges at c = {left:.3} and {right:.3}, untrained 3-orbit on \
             [-0.40, -0.05], lambda = {:.3}/{:.3} at c = -0.5/0.3",
            lambdas[0], lambdas[1]
        )
    });
}

#[test]
fn criterion_06_externalization_branches_fold_or_reach_the_origin() {
    run_criterion(6, 180.0, || {
        let data = PeriodicDataset::period_orbit(&[-1.0, 1.0, -0.8]).unwrap();
        let map = fit_limit(&data, &unit_kernel(KernelFamily::Erf)).unwrap();
        let records = find_orbits(&map, 3, (-10.0, 10.0), 600);
        assert!(!records.is_empty(), "no periodic orbits found at sigma_fb = 1");
        let periods: BTreeSet<usize> = records.iter().map(|r| r.period).collect();
        assert_eq!(
            periods,
            BTreeSet::from([1, 2, 3]),
            "census must contain periods 1, 2, 3"
        );

        // A fold joins two census orbits (the stable and unstable side of
        // one geometric branch), so the fold-side continuations are grouped
        // by (period, fold sigma, fold point) before checking stability.
        struct FoldSide {
            period: usize,
            sigma: f64,
            x_end: f64,
            stable_somewhere: bool,
        }
        let mut stable_periods: BTreeSet<usize> = BTreeSet::new();
        let mut fold_sides: Vec<FoldSide> = Vec::new();
        for rec in &records {
            let cont = continue_orbit(
                |s| map.with_feedback(s),
                1.0,
                rec.points[0],
                rec.period,
                1e-2,
                1e-3,
            )
            .unwrap_or_else(|e| {
                panic!("continuation of p={} from {}: {e}", rec.period, rec.points[0])
            });
            let stable_somewhere = cont
                .path
                .iter()
                .any(|bp| bp.sigma < 1.0 && bp.sigma > 0.0 && bp.lambda < 0.0);
            let x_end = cont.path.last().unwrap().x;
            match cont.terminus {
                Terminus::Fold { sigma } => {
                    assert!(
                        sigma > 0.0 && sigma < 1.0,
                        "p={} fold at sigma = {sigma}, not inside (0, 1)",
                        rec.period
                    );
                    fold_sides.push(FoldSide {
                        period: rec.period,
                        sigma,
                        x_end,
                        stable_somewhere,
                    });
                }
                Terminus::ReachedMin => {
                    assert_eq!(
                        rec.period, 1,
                        "only the fixed-point branch may continue to the origin"
                    );
                    assert!(
                        x_end.abs() < 0.05,
                        "fixed-point branch ends at {x_end}, away from the origin"
                    );
                }
                Terminus::LostConvergence { sigma } => {
                    panic!("p={} branch lost convergence at sigma = {sigma}", rec.period)
                }
            }
            if stable_somewhere {
                stable_periods.insert(rec.period);
            }
        }
        let mut folds = Vec::new();
        let mut grouped = vec![false; fold_sides.len()];
        for i in 0..fold_sides.len() {
            if grouped[i] {
                continue;
            }
            let mut stable = fold_sides[i].stable_somewhere;
            for j in i + 1..fold_sides.len() {
                if fold_sides[j].period == fold_sides[i].period
                    && (fold_sides[j].sigma - fold_sides[i].sigma).abs() <= 1e-6
                    && (fold_sides[j].x_end - fold_sides[i].x_end).abs() <= 1e-3
                {
                    grouped[j] = true;
                    stable = stable || fold_sides[j].stable_somewhere;
                }
            }
            assert!(
                stable,
                "p={} branch folding at sigma = {} has no stable stretch on either side",
                fold_sides[i].period, fold_sides[i].sigma
            );
            folds.push((fold_sides[i].period, fold_sides[i].sigma));
        }
        assert!(
            stable_periods.len() >= 3,
            "only {stable_periods:?} achieve a stable stretch in (0, 1)"
        );
        let fold_list: Vec<String> = folds
            .iter()
            .map(|(p, s)| format!("p={p}@{s:.4}"))
            .collect();
        format!(
            "{} orbit sides -> folds [{}], stable stretches for periods {stable_periods:?}",
            records.len(),
            fold_list.join(", ")
        )
    });
}

#[test]
fn criterion_07_quadratic_conjugacy_identity_and_kappa_gate() {
    run_criterion(7, 30.0, || {
        let mut rng = Rng::from_seed(derive_seed(ROOT_SEED, "acceptance-conjugacy"));
        // Ascending 3-cycles a < b < c (visited in that order). Separation
        // >= 0.2 keeps the parabola coefficients O(100), so the 1e-9 gate
        // sits far above rounding of the exact algebraic identity.
        let mut draw_cycle = |sep: f64, span: f64| loop {
            let mut p = [
                rng.uniform(-span, span),
                rng.uniform(-span, span),
                rng.uniform(-span, span),
            ];
            p.sort_by(f64::total_cmp);
            if p[1] - p[0] >= sep && p[2] - p[1] >= sep {
                return PeriodicDataset::li_yorke(p[0], p[1], p[2], p[0]).unwrap();
            }
        };

        let mut worst = 0.0_f64;
        for _ in 0..50 {
            let data = draw_cycle(0.2, 2.0);
            let fit = QuadraticFit::from_dataset(&data).unwrap();
            let lo = data.xs()[0] - 1.0;
            let hi = data.xs()[2] + 1.0;
            for sigma in [0.3, 0.7, 1.0] {
                let kappa = fit.kappa(sigma);
                let map = fit.map(sigma);
                for &x in &evenly_spaced(lo, hi, 401) {
                    let lhs = fit.to_normal(sigma, map.eval(x));
                    let h = fit.to_normal(sigma, x);
                    worst = worst.max((lhs - (h * h + kappa)).abs());
                }
            }
        }
        assert!(worst <= 1e-9, "conjugacy identity residual {worst:e}");

        let mut kappa_max = f64::NEG_INFINITY;
        for _ in 0..1000 {
            let data = draw_cycle(0.01, 3.0);
            let fit = QuadraticFit::from_dataset(&data).unwrap();
            kappa_max = kappa_max.max(fit.kappa(1.0));
        }
        assert!(
            kappa_max <= -1.75 + 1e-9,
            "kappa(1) = {kappa_max} above the period-3 bound -7/4"
        );
        format!(
            "identity residual {worst:.2e} (50 datasets x 3 sigma), \
             max kappa(1) = {kappa_max:.6} <= -1.75 over 1000 cycles"
        )
    });
}

#[test]
fn criterion_08_attractor_births_follow_sharkovsky_order() {
    run_criterion(8, 300.0, || {
        let data = PeriodicDataset::period_orbit(&[-1.0, 1.0, 0.0]).unwrap();
        let fit = QuadraticFit::from_dataset(&data).unwrap();
        let births = attractor_births(&fit, 6, 1e-4).unwrap();
        let sigma = |p: usize| -> f64 {
            births[p - 1].unwrap_or_else(|| panic!("no attractor of period {p} was born"))
        };
        let order = [1, 2, 4, 6, 5, 3];
        for pair in order.windows(2) {
            assert!(
                sigma(pair[0]) <= sigma(pair[1]),
                "birth order violated: sigma[{}] = {} > sigma[{}] = {}",
                pair[0],
                sigma(pair[0]),
                pair[1],
                sigma(pair[1])
            );
        }
        let mu = fixed_point_multiplier(fit.kappa(sigma(3)));
        let mu_expect = 1.0 + 2.0 * 2.0_f64.sqrt();
        assert!(
            (mu - mu_expect).abs() <= 0.01,
            "multiplier at the period-3 birth: {mu} vs 1 + 2*sqrt(2) = {mu_expect}"
        );
        format!(
            "births sigma[1,2,4,6,5,3] = {:?}, mu at period-3 birth = {mu:.4}",
            order.map(sigma)
        )
    });
}

#[test]
fn criterion_09_small_width_maps_approach_their_parabola() {
    run_criterion(9, 10.0, || {
        let data = PeriodicDataset::period_orbit(&[-1.0, 1.0, 0.0]).unwrap();
        let fit = QuadraticFit::from_dataset(&data).unwrap();
        let widths = [1.0, 1e-1, 1e-2, 1e-3];
        let errors = |family: KernelFamily| -> Vec<f64> {
            widths
                .iter()
                .map(|&sw| {
                    let kernel = KernelSpec::new(family.clone(), sw, 1.0).unwrap();
                    let map = fit_limit(&data, &kernel).unwrap();
                    quadratic_error(&map, &fit).unwrap()
                })
                .collect()
        };
        let mut last = Vec::new();
        for family in [KernelFamily::Erf, KernelFamily::Sin, KernelFamily::Cos] {
            let errs = errors(family.clone());
            for pair in errs.windows(2) {
                assert!(
                    pair[1] < pair[0],
                    "{family:?}: quadratic error not strictly decreasing: {errs:?}"
                );
            }
            last.push(errs[3]);
        }
        let relu = errors(KernelFamily::Relu);
        assert!(
            relu[3] > 0.1 * relu[0],
            "ReLU error collapsed at small width: e(1e-3) = {} vs e(1) = {}",
            relu[3],
            relu[0]
        );
        format!(
            "erf/sin/cos errors at sigma_w=1e-3: {:.2e}/{:.2e}/{:.2e} (decreasing over 3 decades); \
             relu keeps e(1e-3)/e(1) = {:.2}",
            last[0],
            last[1],
            last[2],
            relu[3] / relu[0]
        )
    });
}

#[test]
fn criterion_10_sign_symmetric_kernels_train_odd_pairs() {
    run_criterion(10, 10.0, || {
        let families = vec![
            KernelFamily::Erf,
            KernelFamily::Sin,
            KernelFamily::Cos,
            KernelFamily::Relu,
            KernelFamily::SgnLimit,
            KernelFamily::DeltaLimit,
            KernelFamily::UniformNumeric {
                activation: KernelActivation::Erf,
                nodes: 64,
            },
            KernelFamily::Deep {
                activation: KernelActivation::Erf,
                depth: 3,
                kind: DeepKind::Ntk,
            },
            KernelFamily::WithOutputBias(Box::new(KernelFamily::Erf)),
        ];
        let grid = evenly_spaced(-3.0, 3.0, 101);
        let mut rng = Rng::from_seed(derive_seed(ROOT_SEED, "acceptance-symmetry"));
        let mut pairs = Vec::new();
        while pairs.len() < 20 {
            let a = rng.uniform(0.3, 2.0);
            let c = rng.uniform(-2.5, 2.5);
            if (c - a).abs() >= 0.1 && (c + a).abs() >= 0.1 {
                pairs.push((a, c));
            }
        }
        let mut worst = 0.0_f64;
        for family in &families {
            let kernel = unit_kernel(family.clone());
            for &(a, c) in &pairs {
                let r = symmetry_residual(a, c, &kernel, &grid).unwrap();
                assert!(r <= 1e-10, "{family:?} at (a, c) = ({a}, {c}): residual {r:e}");
                worst = worst.max(r);
            }
        }
        format!(
            "worst mirror residual {worst:.2e} over {} families x 20 datasets",
            families.len()
        )
    });
}

#[test]
fn criterion_11_lyapunov_calibration_and_affine_invariance() {
    run_criterion(11, 30.0, || {
        // x -> x^2 - 2 is conjugate to the full tent map: lambda = ln 2.
        let s = iterate(
            &NormalQuadratic { kappa: -2.0 },
            &DynamicsConfig {
                transient: 1_000,
                horizon: 1_000_000,
                x0: 0.12345,
                ..DynamicsConfig::default()
            },
        );
        let Lyapunov::Finite(lambda) = s.lyapunov else {
            panic!("no finite Lyapunov exponent for x^2 - 2: {:?}", s.lyapunov)
        };
        assert!(!s.diverged);
        assert!(
            (lambda - std::f64::consts::LN_2).abs() <= 0.01,
            "lambda = {lambda} vs ln 2 = {}",
            std::f64::consts::LN_2
        );

        // Period detection must be a conjugacy invariant: iterating
        // g = A . f . A^{-1} from A(x0) sees the same attractor period.
        // kappa is drawn from the stable-cascade range, away from the
        // period-doubling parameters where detection is marginal.
        let mut rng = Rng::from_seed(derive_seed(ROOT_SEED, "acceptance-conjugation"));
        let boundaries = [-0.75, -1.25, -1.3681];
        let mut checked = 0;
        let mut seen = BTreeSet::new();
        while checked < 20 {
            let kappa = rng.uniform(-1.39, 0.24);
            if boundaries.iter().any(|b| (kappa - b).abs() < 0.02) {
                continue;
            }
            let p = rng.uniform(0.5, 2.0) * if rng.uniform01() < 0.5 { -1.0 } else { 1.0 };
            let q = rng.uniform(-1.0, 1.0);
            let f = NormalQuadratic { kappa };
            // A(x) = p x + q conjugates u^2 + kappa to the parabola below.
            let g = QuadraticFit::from_coefficients(
                q * q / p + kappa * p + q,
                -2.0 * q / p,
                1.0 / p,
            )
            .unwrap()
            .map(1.0);
            let direct = attractor_period(&f, 0.0, 64);
            let conjugated = attractor_period(&g, q, 64);
            assert_eq!(
                direct, conjugated,
                "period changed under A(x) = {p}x + {q} at kappa = {kappa}"
            );
            assert!(direct.is_some(), "no attractor detected at kappa = {kappa}");
            seen.insert(direct.unwrap());
            checked += 1;
        }
        format!(
            "lambda(x^2 - 2) = {lambda:.4} (ln 2 +/- 0.01); 20 conjugated cases agree, \
             periods seen {seen:?}"
        )
    });
}

/// Dense-grid bisection census of x -> x^2 + kappa: every sign change of
/// f^p(x) - x over `cells` grid intervals is refined to a root, reduced to
/// its minimal period, clustered into orbits, and deduplicated at 1e-2.
fn bisection_census(
    map: &NormalQuadratic,
    p_max: usize,
    lo: f64,
    hi: f64,
    cells: usize,
) -> Vec<(usize, Vec<f64>, bool)> {
    let compose = |x0: f64, n: usize| -> f64 {
        let mut x = x0;
        for _ in 0..n {
            x = map.eval(x);
        }
        x
    };
    let mut orbits: Vec<(usize, Vec<f64>, bool)> = Vec::new();
    for p in 1..=p_max {
        let g = |x: f64| compose(x, p) - x;
        let mut prev_x = lo;
        let mut prev_g = g(lo);
        for k in 1..=cells {
            let x = lo + (hi - lo) * k as f64 / cells as f64;
            let gx = g(x);
            let root = if prev_g == 0.0 {
                Some(prev_x)
            } else if prev_g * gx < 0.0 {
                let (mut l, mut r, mut gl) = (prev_x, x, prev_g);
                for _ in 0..100 {
                    let m = 0.5 * (l + r);
                    let gm = g(m);
                    if gm == 0.0 {
                        l = m;
                        r = m;
                        break;
                    }
                    if gl * gm < 0.0 {
                        r = m;
                    } else {
                        l = m;
                        gl = gm;
                    }
                }
                Some(0.5 * (l + r))
            } else {
                None
            };
            prev_x = x;
            prev_g = gx;
            let Some(root) = root else { continue };
            // Minimal period: smallest divisor of p that closes the orbit.
            let minimal = (1..=p)
                .find(|d| p % d == 0 && (compose(root, *d) - root).abs() <= 1e-8)
                .unwrap();
            if minimal != p {
                continue; // found already in the pass for its own period
            }
            let mut pts = Vec::with_capacity(p);
            let mut xi = root;
            for _ in 0..p {
                pts.push(xi);
                xi = map.eval(xi);
            }
            let mut sorted = pts.clone();
            sorted.sort_by(f64::total_cmp);
            let duplicate = orbits.iter().any(|(op, opts, _)| {
                *op == p
                    && opts
                        .iter()
                        .zip(&sorted)
                        .all(|(a, b)| (a - b).abs() <= 1e-2)
            });
            if duplicate {
                continue;
            }
            let multiplier: f64 = pts.iter().map(|&u| 2.0 * u).product();
            orbits.push((p, sorted, multiplier.abs() < 1.0));
        }
    }
    orbits
}

#[test]
fn criterion_12_newton_census_matches_bisection_enumeration() {
    run_criterion(12, 30.0, || {
        let mut totals = Vec::new();
        for kappa in [-1.0, -1.3, -1.7655] {
            let map = NormalQuadratic { kappa };
            let newton = find_orbits(&map, 4, (-2.2, 2.2), 800);
            let oracle = bisection_census(&map, 4, -2.2, 2.2, 200_000);
            assert_eq!(
                newton.len(),
                oracle.len(),
                "kappa = {kappa}: Newton found {} orbits, bisection {}",
                newton.len(),
                oracle.len()
            );
            for rec in &newton {
                let mut sorted = rec.points.clone();
                sorted.sort_by(f64::total_cmp);
                let matched = oracle.iter().find(|(p, pts, _)| {
                    *p == rec.period
                        && pts.iter().zip(&sorted).all(|(a, b)| (a - b).abs() <= 1e-2)
                });
                let Some((_, _, oracle_stable)) = matched else {
                    panic!(
                        "kappa = {kappa}: Newton orbit p={} {:?} missing from bisection census",
                        rec.period, rec.points
                    )
                };
                assert_eq!(
                    rec.stable, *oracle_stable,
                    "kappa = {kappa}: stability mismatch on p={} {:?}",
                    rec.period, rec.points
                );
            }
            totals.push((kappa, newton.len()));
        }
        format!("orbit counts agree: {totals:?} (periods <= 4, dedup 1e-2)")
    });
}

#[test]
fn criterion_13_longer_datasets_breed_more_unstable_orbits() {
    run_criterion(13, 600.0, || {
        let mut ratios = Vec::new();
        for family in analytic_families() {
            let kernel = unit_kernel(family.clone());
            let mut unstable = [0usize; 2];
            for (slot, n) in [2usize, 3].into_iter().enumerate() {
                for t in 0..50 {
                    let seed =
                        derive_seed(ROOT_SEED, &format!("acceptance-census-{family:?}-{n}-{t}"));
                    let mut rng = Rng::from_seed(seed);
                    let data = random_orbit(&mut rng, n, -3.0, 3.0);
                    let map = fit_limit(&data, &kernel).unwrap();
                    let records = find_orbits(&map, 6, (-10.0, 10.0), 200);
                    unstable[slot] += orbit_census(&records, 6)
                        .iter()
                        .map(|row| row.unstable)
                        .sum::<usize>();
                }
            }
            assert!(
                unstable[1] >= 2 * unstable[0],
                "{family:?}: {} unstable orbits for n=3 vs {} for n=2",
                unstable[1],
                unstable[0]
            );
            ratios.push((family, unstable[0], unstable[1]));
        }
        let summary: Vec<String> = ratios
            .iter()
            .map(|(f, a, b)| format!("{f:?} {a}->{b}"))
            .collect();
        format!("unstable totals n=2 -> n=3 (50 datasets each): {}", summary.join(", "))
    });
}

#[test]
fn criterion_14_relu_scan_is_scale_invariant() {
    run_criterion(14, 120.0, || {
        let grid = ScanGrid {
            axis1: Axis::new("c", -3.0, 3.0, 61).unwrap(),
            axis2: Some(Axis::new("sigma", 0.1, 10.0, 21).unwrap()),
            x0_set: vec![0.0],
            dynamics: DynamicsConfig {
                transient: 2_000,
                horizon: 2_000,
                n_max: 16,
                ..DynamicsConfig::default()
            },
            excluded: vec![],
        };
        let rows = scan_2d(&KernelFamily::Relu, -1.0, 1.0, &grid, 0.0).unwrap();
        let n_sigma = 21;
        assert_eq!(rows.len(), 61 * n_sigma);
        let mut cells = 0;
        for block in rows.chunks(n_sigma) {
            // With sigma_w = sigma_b = sigma the ReLU kernel is sigma^2 times
            // a scale-free function, which cancels against the dual solve:
            // every sigma in a block must reproduce the first row's outcome.
            let signature = |row: &ScanRow| match row {
                ScanRow::Sample(s) => (s.period, s.diverged, false),
                ScanRow::Gap { .. } => (None, false, true),
            };
            let first = signature(&block[0]);
            for row in block {
                assert_eq!(
                    signature(row),
                    first,
                    "period changed along the sigma axis at c-block {:?}",
                    match &block[0] {
                        ScanRow::Sample(s) => s.params[0],
                        ScanRow::Gap { params, .. } => params[0],
                    }
                );
                cells += 1;
            }
        }
        format!("{cells} cells: detected periods identical along the sigma axis")
    });
}
