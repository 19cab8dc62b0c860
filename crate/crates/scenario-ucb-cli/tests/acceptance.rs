//! Acceptance gate: every release criterion as one test, each printing a
//! PASS/FAIL line with the measured quantities (run with --nocapture to see
//! them).

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use scenario_ucb::gp::{GpState, Observation};
use scenario_ucb::kernel::{kernel_matrix, Grid, KernelSpec};
use scenario_ucb::regret::{incumbent_maxmin, solve_scenario};
use scenario_ucb::scenario::{
    sample_count_corollary1, sample_count_redraw, sample_count_theorem2,
};
use scenario_ucb::validate::{
    bound_suite, build_run, concentration_suite, robustness_suite, violation_suite,
    RobustnessConfig, RunPopulationConfig, ViolationConfig,
};

use scenario_ucb_cli::config::ExperimentConfig;
use scenario_ucb_cli::runner::execute_sweep;

fn pass(name: &str, detail: String) {
    println!("acceptance {name}: PASS ({detail})");
}

#[test]
fn c01_reference_study_curve_shape() {
    // Default configuration: 101-point grid, lengthscale 0.05 + 0.01 delta,
    // delta ~ U[0,1], N = 20, T = 1000, averaged over 20 paired seeds per nu.
    let cfg = ExperimentConfig::default();
    let nus = [0.1, 0.4, 1.0];
    let series = execute_sweep(&cfg, &nus).expect("sweep runs");

    let at = |s: &scenario_ucb_cli::runner::SweepSeries, t: usize| s.mean_redraw[t - 1];
    for s in &series {
        assert!(
            at(s, 100) < 0.5,
            "nu {}: mean regret {} at T=100 not below 0.5",
            s.nu,
            at(s, 100)
        );
        assert!(
            at(s, 1000) < at(s, 200),
            "nu {}: mean regret did not decrease from T=200 ({}) to T=1000 ({})",
            s.nu,
            at(s, 200),
            at(s, 1000)
        );
    }
    let finals: Vec<f64> = series.iter().map(|s| at(s, 1000)).collect();
    for w in finals.windows(2) {
        assert!(
            w[0] <= w[1],
            "final mean regret not non-decreasing in nu: {finals:?}"
        );
    }
    pass(
        "01 reference-study curve shape",
        format!(
            "mean regret at T=1000 by nu: {:.5} <= {:.5} <= {:.5}; at T=100 all < 0.5",
            finals[0], finals[1], finals[2]
        ),
    );
}

/// Direct one-shot conditioning, independent of the incremental path.
fn reference_posterior(
    spec: &KernelSpec,
    grid: &Grid,
    rho2: f64,
    obs: &[(usize, f64)],
) -> (Vec<f64>, Vec<f64>) {
    let km = kernel_matrix(spec, grid).unwrap();
    let t = obs.len();
    let k =
        DMatrix::from_fn(t, t, |i, j| km[(obs[i].0, obs[j].0)]) + DMatrix::identity(t, t) * rho2;
    let chol = k.cholesky().expect("reference system must be PD");
    let y = DVector::from_iterator(t, obs.iter().map(|o| o.1));
    let alpha = chol.solve(&y);
    let mut mean = Vec::new();
    let mut sigma = Vec::new();
    for x in 0..grid.len() {
        let kx = DVector::from_fn(t, |i, _| km[(obs[i].0, x)]);
        mean.push(kx.dot(&alpha));
        sigma.push((km[(x, x)] - kx.dot(&chol.solve(&kx))).max(0.0).sqrt());
    }
    (mean, sigma)
}

#[test]
fn c02_gp_incremental_equals_one_shot() {
    let mut worst: f64 = 0.0;
    for seed in 0..100u64 {
        let mut rng = ChaCha12Rng::seed_from_u64(1000 + seed);
        let nx = rng.random_range(2..=21);
        let mut points: Vec<f64> = (0..nx).map(|_| rng.random_range(0.0..1.0)).collect();
        points.sort_by(f64::total_cmp);
        points.dedup();
        let grid = Grid::new(points).unwrap();
        let spec = KernelSpec::squared_exponential(rng.random_range(0.0..1.0)).unwrap();
        let rho2 = rng.random_range(0.005..0.1);
        let mut gp = GpState::new(spec, grid.clone(), rho2).unwrap();
        let mut obs = Vec::new();
        for t in 1..=rng.random_range(1..=50) {
            let x_index = rng.random_range(0..grid.len());
            let y: f64 = rng.sample(StandardNormal);
            gp.update(Observation { x_index, y, t }).unwrap();
            obs.push((x_index, y));
        }
        let (mean, sigma) = reference_posterior(&spec, &grid, rho2, &obs);
        for x in 0..grid.len() {
            let (mu, sig) = gp.predict(x).unwrap();
            let err = (mu - mean[x]).abs().max((sig - sigma[x]).abs());
            worst = worst.max(err);
            assert!(err <= 1e-8, "seed {seed}: posterior error {err} at x {x}");
        }
    }
    pass(
        "02 incremental posterior exactness",
        format!("100 randomized sequences, worst |error| = {worst:.3e} <= 1e-8"),
    );
}

#[test]
fn c03_sample_complexity_table() {
    let t2 = sample_count_theorem2(0.1, 0.05).unwrap();
    let c1 = sample_count_corollary1(0.1, 0.05).unwrap();
    let rd = sample_count_redraw(0.1, 0.05, 10.0).unwrap();
    assert_eq!((t2, c1, rd), (29, 30, 300));
    pass(
        "03 sample-complexity table",
        format!("eta=0.1 zeta=0.05: {t2} / {c1}; alpha_T=10: {rd}"),
    );
}

#[test]
fn c04_violation_probability_monte_carlo() {
    let report = violation_suite(&ViolationConfig::default()).unwrap();
    assert!(report.passed, "{}", report.summary_line());
    pass("04 violation probability", report.summary_line());
}

#[test]
fn c05_instantaneous_regret_concentration() {
    let report = concentration_suite(&RunPopulationConfig::default()).unwrap();
    assert!(report.passed, "{}", report.summary_line());
    pass("05 regret concentration", report.summary_line());
}

#[test]
fn c06_finite_time_bound_validity() {
    let report = bound_suite(&RunPopulationConfig::default()).unwrap();
    assert!(report.passed, "{}", report.summary_line());
    pass("06 finite-time bound validity", report.summary_line());
}

#[test]
fn c07_redraw_robustness() {
    let report = robustness_suite(&RobustnessConfig::default()).unwrap();
    assert!(report.passed, "{}", report.summary_line());
    pass("07 re-draw robustness", report.summary_line());
}

#[test]
fn c08_loop_reaches_brute_force_max_min() {
    let cfg = RunPopulationConfig {
        rho2: 1e-10,
        t_max: 500,
        ..Default::default()
    };
    let hits: usize = (0..100u64)
        .into_par_iter()
        .map(|rep| {
            let (trace, gt) = build_run(&cfg, rep).unwrap();
            let tables = gt.truth_tables();
            let j = solve_scenario(&tables).unwrap().tau_star;
            let incumbent = *incumbent_maxmin(&trace, &tables)
                .unwrap()
                .last()
                .unwrap();
            usize::from((incumbent - j).abs() <= 1e-3)
        })
        .sum();
    assert!(hits >= 95, "only {hits}/100 seeds reached the max-min value");
    pass(
        "08 max-min oracle equivalence",
        format!("{hits}/100 seeds within 1e-3 of the exhaustive solution"),
    );
}

#[test]
fn c09_added_constraints_and_non_binding_equality() {
    let mut rng = ChaCha12Rng::seed_from_u64(9);
    let mut non_binding = 0usize;
    for case in 0..10_000 {
        let nx = rng.random_range(2..=8);
        let n = rng.random_range(1..=6);
        let tables: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..nx).map(|_| rng.random_range(-3.0..3.0)).collect())
            .collect();
        let refs: Vec<&[f64]> = tables.iter().map(|t| t.as_slice()).collect();
        let base = solve_scenario(&refs).unwrap();
        let extra: Vec<f64> = (0..nx).map(|_| rng.random_range(-3.0..3.0)).collect();
        let mut ext = refs.clone();
        ext.push(&extra);
        let solution = solve_scenario(&ext).unwrap();
        assert!(
            solution.tau_star <= base.tau_star,
            "case {case}: tau increased"
        );
        if extra[base.x_star_index] >= base.tau_star {
            assert_eq!(
                solution.tau_star, base.tau_star,
                "case {case}: non-binding draw changed the value"
            );
            non_binding += 1;
        }
    }
    pass(
        "09 constraint monotonicity",
        format!("10000 instances; {non_binding} non-binding draws left the value bit-identical"),
    );
}

#[test]
fn c10_byte_identical_outputs_across_invocations() {
    let tmp = tempfile::tempdir().unwrap();
    let dirs = [tmp.path().join("a"), tmp.path().join("b")];
    for dir in &dirs {
        let out = std::process::Command::new(env!("CARGO_BIN_EXE_scenario-ucb"))
            .args(["run", "--seed", "42", "--out", dir.to_str().unwrap()])
            .output()
            .expect("binary runs");
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let mut bytes = 0usize;
    for name in ["trace.csv", "curve.csv", "manifest.txt"] {
        let a = std::fs::read(dirs[0].join(name)).unwrap();
        let b = std::fs::read(dirs[1].join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between invocations");
        bytes += a.len();
    }
    pass(
        "10 determinism",
        format!("two invocations, {bytes} bytes of output compared byte-identical"),
    );
}
