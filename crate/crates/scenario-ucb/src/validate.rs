//! Monte-Carlo validation suites for the probabilistic guarantees.
//!
//! Each suite estimates the frequency of a failure event whose probability
//! the theory caps at a threshold, and passes when the observed frequency
//! stays within three standard errors of that cap. A configuration whose
//! repetition count cannot resolve the threshold at three sigma is refused.

use rand::Rng;
use rayon::prelude::*;

use crate::algo::{run_scenario_ucb, BetaSchedule, BetaVariant, RunTrace};
use crate::env::GroundTruth;
use crate::error::{Error, Result};
use crate::kernel::{Grid, KernelSpec, LengthscaleMap};
use crate::regret::solve_scenario;
use crate::rng::SeedBundle;
use crate::scenario::{
    draw_fresh, draw_scenarios, sample_count_corollary1, sample_count_redraw, DeltaDist,
};

/// Outcome of one suite: the observed failure frequency against its
/// three-sigma acceptance limit.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SuiteReport {
    pub suite: &'static str,
    pub observed: f64,
    pub threshold: f64,
    pub std_err: f64,
    pub limit: f64,
    pub n_outer: usize,
    pub passed: bool,
    pub detail: String,
}

impl SuiteReport {
    fn new(
        suite: &'static str,
        failures: usize,
        n_outer: usize,
        threshold: f64,
        detail: String,
    ) -> Self {
        let observed = failures as f64 / n_outer as f64;
        let std_err = (threshold * (1.0 - threshold) / n_outer as f64).sqrt();
        let limit = threshold + 3.0 * std_err;
        SuiteReport {
            suite,
            observed,
            threshold,
            std_err,
            limit,
            n_outer,
            passed: observed <= limit,
            detail,
        }
    }

    pub fn summary_line(&self) -> String {
        format!(
            "suite={} {} observed={:.5} threshold={:.5} std_err={:.5} limit={:.5} n={} ({})",
            self.suite,
            if self.passed { "PASS" } else { "FAIL" },
            self.observed,
            self.threshold,
            self.std_err,
            self.limit,
            self.n_outer,
            self.detail
        )
    }
}

/// Repetitions needed so that three standard errors at `threshold` stay
/// below the threshold itself.
pub fn required_outer(threshold: f64) -> usize {
    (9.0 * (1.0 - threshold) / threshold).ceil() as usize
}

fn check_power(threshold: f64, n_outer: usize) -> Result<()> {
    let need = required_outer(threshold);
    if n_outer < need {
        return Err(Error::Underpowered {
            threshold,
            need,
            got: n_outer,
        });
    }
    Ok(())
}

/// Violation-probability suite.
///
/// Draws `n_outer` multisamples of size `N = ceil(log(1/zeta)/eta)` from a
/// synthetic uniform constraint function, takes the sample maximum `M`, and
/// estimates the fresh-sample violation probability `P(v > M)` with
/// `n_inner` draws. The frequency of outer draws whose violation
/// probability exceeds `eta` must stay within `zeta + 3 SE`.
#[derive(Debug, Clone, Copy)]
pub struct ViolationConfig {
    pub eta: f64,
    pub zeta: f64,
    pub n_outer: usize,
    pub n_inner: usize,
    pub seed: u64,
}

impl Default for ViolationConfig {
    fn default() -> Self {
        ViolationConfig {
            eta: 0.1,
            zeta: 0.05,
            n_outer: 2000,
            n_inner: 5000,
            seed: 42,
        }
    }
}

pub fn violation_suite(cfg: &ViolationConfig) -> Result<SuiteReport> {
    check_power(cfg.zeta, cfg.n_outer)?;
    let n = sample_count_corollary1(cfg.eta, cfg.zeta)? as usize;
    let failures: usize = (0..cfg.n_outer)
        .into_par_iter()
        .map(|rep| {
            let bundle = SeedBundle::derive(cfg.seed, rep as u64);
            let mut outer_rng = bundle.scenario_rng();
            let mut inner_rng = bundle.redraw_rng();
            let m = (0..n)
                .map(|_| outer_rng.random_range(0.0..1.0))
                .fold(f64::NEG_INFINITY, f64::max);
            let violations = (0..cfg.n_inner)
                .filter(|_| inner_rng.random_range(0.0..1.0) > m)
                .count();
            usize::from(violations as f64 / cfg.n_inner as f64 > cfg.eta)
        })
        .sum();
    Ok(SuiteReport::new(
        "violation",
        failures,
        cfg.n_outer,
        cfg.zeta,
        format!("N={n} inner={}", cfg.n_inner),
    ))
}

/// Shared configuration for the suites that run the scenario-UCB loop on a
/// small synthetic instance.
#[derive(Debug, Clone, Copy)]
pub struct RunPopulationConfig {
    pub grid_size: usize,
    pub n_scenarios: usize,
    pub t_max: usize,
    pub epsilon: f64,
    pub rho2: f64,
    pub n_runs: usize,
    pub seed: u64,
}

impl Default for RunPopulationConfig {
    fn default() -> Self {
        RunPopulationConfig {
            grid_size: 11,
            n_scenarios: 3,
            t_max: 200,
            epsilon: 0.1,
            rho2: 0.01,
            n_runs: 200,
            seed: 42,
        }
    }
}

/// Build one seeded run: scenario set, ground truth, and the trace.
pub fn build_run(cfg: &RunPopulationConfig, rep: u64) -> Result<(RunTrace, GroundTruth)> {
    let bundle = SeedBundle::derive(cfg.seed, rep);
    let grid = Grid::from_range(0.0, 1.0, 1.0 / (cfg.grid_size - 1) as f64)?;
    let dist = DeltaDist::Uniform { lo: 0.0, hi: 1.0 };
    let set = draw_scenarios(
        cfg.n_scenarios,
        &dist,
        LengthscaleMap::default(),
        &grid,
        bundle.master,
        &mut bundle.scenario_rng(),
        &mut bundle.realization_rng(),
    )?;
    let kernels: Vec<KernelSpec> = set
        .deltas()
        .into_iter()
        .map(KernelSpec::squared_exponential)
        .collect::<Result<_>>()?;
    let schedule = BetaSchedule::new(BetaVariant::ScenarioUcb, grid.len(), cfg.epsilon)?;
    let mut gt = GroundTruth::new(grid.clone(), set, cfg.rho2, bundle.noise_rng())?;
    let trace = run_scenario_ucb(
        &mut gt,
        &kernels,
        &grid,
        cfg.rho2,
        cfg.t_max,
        schedule,
        bundle.master,
    )?;
    Ok((trace, gt))
}

fn population_exceedances(cfg: &RunPopulationConfig) -> Result<(usize, usize)> {
    let per_run: Vec<(bool, bool)> = (0..cfg.n_runs)
        .into_par_iter()
        .map(|rep| -> Result<(bool, bool)> {
            let (trace, gt) = build_run(cfg, rep as u64)?;
            let j_base = solve_scenario(&gt.truth_tables())?.tau_star;
            let log_term = (1.0 + 1.0 / cfg.rho2).ln();
            let mut conc_exceeded = false;
            let mut bound_exceeded = false;
            let mut sum_r = 0.0;
            let mut gamma_cum = 0.0;
            for (k, d) in trace.decisions.iter().enumerate() {
                let t = k + 1;
                let f = gt.truth(d.x_index, d.scenario_index.unwrap_or(0))?;
                let r = j_base - f;
                let beta = trace.betas[k];
                let sigma = trace.sigmas[k];
                if r > 2.0 * beta.sqrt() * sigma {
                    conc_exceeded = true;
                }
                sum_r += r;
                gamma_cum += 0.5 * (1.0 + sigma * sigma / cfg.rho2).ln();
                let bound = (8.0 * beta * gamma_cum / (t as f64 * log_term)).sqrt();
                if sum_r / t as f64 > bound {
                    bound_exceeded = true;
                }
            }
            Ok((conc_exceeded, bound_exceeded))
        })
        .collect::<Result<_>>()?;
    let conc = per_run.iter().filter(|r| r.0).count();
    let bound = per_run.iter().filter(|r| r.1).count();
    Ok((conc, bound))
}

/// Instantaneous-regret concentration suite: the fraction of runs where
/// `J(D_N) - F(x_t, d_it)` ever exceeds `2 sqrt(beta_t) sigma_t` must stay
/// within `epsilon + 3 SE`.
pub fn concentration_suite(cfg: &RunPopulationConfig) -> Result<SuiteReport> {
    check_power(cfg.epsilon, cfg.n_runs)?;
    let (conc, _) = population_exceedances(cfg)?;
    Ok(SuiteReport::new(
        "concentration",
        conc,
        cfg.n_runs,
        cfg.epsilon,
        format!(
            "|X|={} N={} T={}",
            cfg.grid_size, cfg.n_scenarios, cfg.t_max
        ),
    ))
}

/// Finite-time bound suite: the fraction of runs where the running mean of
/// `J(D_N) - F(x_t, d_it)` ever exceeds the bound with empirical gamma must
/// stay within `epsilon + 3 SE`, simultaneously over all t.
pub fn bound_suite(cfg: &RunPopulationConfig) -> Result<SuiteReport> {
    check_power(cfg.epsilon, cfg.n_runs)?;
    let (_, bound) = population_exceedances(cfg)?;
    Ok(SuiteReport::new(
        "bound",
        bound,
        cfg.n_runs,
        cfg.epsilon,
        format!(
            "|X|={} N={} T={}",
            cfg.grid_size, cfg.n_scenarios, cfg.t_max
        ),
    ))
}

/// Re-draw robustness suite.
///
/// With `N = ceil(alpha_T / eta * log(1/zeta))` scenarios, the probability
/// that a sequence of `ceil(alpha_T)` fresh draws changes the sampled
/// max-min value `J(D_N)` should exceed `eta` for at most a `zeta` fraction
/// of multisamples. The inner probability is estimated with `n_inner`
/// fresh sequences per multisample.
#[derive(Debug, Clone, Copy)]
pub struct RobustnessConfig {
    pub eta: f64,
    pub zeta: f64,
    pub alpha_t: f64,
    pub grid_size: usize,
    pub n_outer: usize,
    pub n_inner: usize,
    pub seed: u64,
}

impl Default for RobustnessConfig {
    fn default() -> Self {
        RobustnessConfig {
            eta: 0.1,
            zeta: 0.05,
            alpha_t: 4.0,
            grid_size: 11,
            n_outer: 500,
            n_inner: 400,
            seed: 42,
        }
    }
}

pub fn robustness_suite(cfg: &RobustnessConfig) -> Result<SuiteReport> {
    check_power(cfg.zeta, cfg.n_outer)?;
    let n = sample_count_redraw(cfg.eta, cfg.zeta, cfg.alpha_t)? as usize;
    let k_draws = cfg.alpha_t.ceil() as usize;
    let grid = Grid::from_range(0.0, 1.0, 1.0 / (cfg.grid_size - 1) as f64)?;
    let dist = DeltaDist::Uniform { lo: 0.0, hi: 1.0 };

    let bad_outer: usize = (0..cfg.n_outer)
        .into_par_iter()
        .map(|rep| -> Result<usize> {
            let bundle = SeedBundle::derive(cfg.seed, rep as u64);
            let set = draw_scenarios(
                n,
                &dist,
                LengthscaleMap::default(),
                &grid,
                bundle.master,
                &mut bundle.scenario_rng(),
                &mut bundle.realization_rng(),
            )?;
            let tables: Vec<&[f64]> = set
                .scenarios
                .iter()
                .map(|s| s.realization.as_slice())
                .collect();
            let j_base = solve_scenario(&tables)?.tau_star;

            let mut redraw_rng = bundle.redraw_rng();
            let mut altered = 0usize;
            for _ in 0..cfg.n_inner {
                let mut sequence_alters = false;
                for _ in 0..k_draws {
                    let fresh =
                        draw_fresh(n, &dist, LengthscaleMap::default(), &grid, &mut redraw_rng)?;
                    if !sequence_alters {
                        let mut ext = tables.clone();
                        ext.push(fresh.realization.as_slice());
                        if solve_scenario(&ext)?.tau_star != j_base {
                            sequence_alters = true;
                        }
                    }
                }
                if sequence_alters {
                    altered += 1;
                }
            }
            Ok(usize::from(
                altered as f64 / cfg.n_inner as f64 > cfg.eta,
            ))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;

    Ok(SuiteReport::new(
        "robustness",
        bad_outer,
        cfg.n_outer,
        cfg.zeta,
        format!("N={n} draws/seq={k_draws} inner={}", cfg.n_inner),
    ))
}
