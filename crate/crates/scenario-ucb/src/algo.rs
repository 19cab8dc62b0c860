//! The two sequential decision loops: single-GP UCB on one fixed scenario
//! and scenario UCB over N per-scenario GPs.
//!
//! Scenario UCB queries the point maximizing, over the grid, the minimum
//! over scenarios of `mu^i + sqrt(beta_t) sigma^i`, then updates only the GP
//! of the minimizing scenario. The trace records `sigma` before the update,
//! which is what the concentration checks need.

use crate::env::Blackbox;
use crate::error::{Error, Result};
use crate::gp::{GpState, Observation};
use crate::kernel::{Grid, KernelSpec};
use crate::maxmin::max_min_select;

/// Confidence schedule variant. The single-GP loop uses denominator
/// `6 epsilon`, the scenario loop `3 epsilon`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum BetaVariant {
    GpUcb,
    ScenarioUcb,
}

/// `beta_t = 2 log(|X| pi^2 t^2 / (c epsilon))` with `c` set by the variant.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BetaSchedule {
    pub variant: BetaVariant,
    pub grid_size: usize,
    pub epsilon: f64,
}

impl BetaSchedule {
    pub fn new(variant: BetaVariant, grid_size: usize, epsilon: f64) -> Result<Self> {
        if grid_size == 0 {
            return Err(Error::Empty("grid"));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::ParamRange {
                param: "epsilon",
                range: "(0, 1)",
                value: epsilon,
            });
        }
        Ok(BetaSchedule {
            variant,
            grid_size,
            epsilon,
        })
    }

    pub fn beta(&self, t: usize) -> Result<f64> {
        if t < 1 {
            return Err(Error::ParamRange {
                param: "t",
                range: "[1, inf)",
                value: t as f64,
            });
        }
        let denom = match self.variant {
            BetaVariant::GpUcb => 6.0 * self.epsilon,
            BetaVariant::ScenarioUcb => 3.0 * self.epsilon,
        };
        let t = t as f64;
        let x = self.grid_size as f64;
        Ok(2.0 * (x * std::f64::consts::PI.powi(2) * t * t / denom).ln())
    }
}

/// One step of a decision loop. `scenario_index` is `None` for the
/// single-GP loop.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Decision {
    pub t: usize,
    pub x_index: usize,
    pub scenario_index: Option<usize>,
    pub ucb_value: f64,
    pub y: f64,
}

/// Snapshot of the parameters a run was produced with; carried in the trace
/// so downstream computations need no side channel.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RunConfig {
    pub n_scenarios: usize,
    pub grid_size: usize,
    pub t_max: usize,
    pub noise_var: f64,
    pub epsilon: f64,
    pub beta_variant: BetaVariant,
}

/// Complete per-iteration record of one run.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RunTrace {
    pub decisions: Vec<Decision>,
    /// `sigma^{i_t}_{t-1}(x_t)`, taken before the step's GP update.
    pub sigmas: Vec<f64>,
    pub betas: Vec<f64>,
    pub master_seed: u64,
    pub config: RunConfig,
}

impl RunTrace {
    pub fn len(&self) -> usize {
        self.decisions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decisions.is_empty()
    }
}

/// Pick `(x_t, i_t, ucb)` from the current posteriors: `x_t` maximizes the
/// per-point minimum UCB over scenarios, `i_t` attains that minimum.
pub fn select_scenario_ucb(states: &[GpState], beta: f64) -> Result<(usize, usize, f64)> {
    if states.is_empty() {
        return Err(Error::Empty("state list"));
    }
    if !(beta >= 0.0) {
        return Err(Error::ParamRange {
            param: "beta",
            range: "[0, inf)",
            value: beta,
        });
    }
    let nx = states[0].grid().len();
    let sqrt_beta = beta.sqrt();
    // Cache mean/sigma tables once; the scan below touches every cell.
    let means: Vec<&[f64]> = states.iter().map(|s| s.mean_values()).collect();
    let sigmas: Vec<Vec<f64>> = states.iter().map(|s| s.sigma_values()).collect();
    Ok(max_min_select(nx, states.len(), |x, i| {
        means[i][x] + sqrt_beta * sigmas[i][x]
    }))
}

/// Scenario-UCB loop with step-level access, so harnesses can inspect the
/// per-scenario posteriors between iterations.
pub struct ScenarioUcb {
    states: Vec<GpState>,
    schedule: BetaSchedule,
    t: usize,
}

/// What one step produced: the decision plus the pre-update `sigma` and the
/// step's `beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub x_index: usize,
    pub scenario_index: usize,
    pub ucb_value: f64,
    pub y: f64,
    pub sigma: f64,
    pub beta: f64,
}

impl ScenarioUcb {
    pub fn new(
        kernels: &[KernelSpec],
        grid: &Grid,
        noise_var: f64,
        schedule: BetaSchedule,
    ) -> Result<Self> {
        if kernels.is_empty() {
            return Err(Error::Empty("kernel list"));
        }
        let states = kernels
            .iter()
            .map(|spec| GpState::new(*spec, grid.clone(), noise_var))
            .collect::<Result<Vec<_>>>()?;
        Ok(ScenarioUcb {
            states,
            schedule,
            t: 0,
        })
    }

    pub fn states(&self) -> &[GpState] {
        &self.states
    }

    pub fn t(&self) -> usize {
        self.t
    }

    /// Run one iteration: select, query the blackbox, update only the
    /// selected scenario's GP.
    pub fn step<B: Blackbox>(&mut self, blackbox: &mut B) -> Result<StepRecord> {
        self.t += 1;
        let t = self.t;
        let mut step = || -> Result<StepRecord> {
            let beta = self.schedule.beta(t)?;
            let (x_index, scenario_index, ucb_value) = select_scenario_ucb(&self.states, beta)?;
            let (_, sigma) = self.states[scenario_index].predict(x_index)?;
            let y = blackbox.query(x_index, scenario_index)?;
            self.states[scenario_index].update(Observation { x_index, y, t })?;
            Ok(StepRecord {
                x_index,
                scenario_index,
                ucb_value,
                y,
                sigma,
                beta,
            })
        };
        step().map_err(|e| e.at_iteration(t))
    }
}

/// Run the scenario-UCB loop for `t_max` iterations.
pub fn run_scenario_ucb<B: Blackbox>(
    blackbox: &mut B,
    kernels: &[KernelSpec],
    grid: &Grid,
    noise_var: f64,
    t_max: usize,
    schedule: BetaSchedule,
    master_seed: u64,
) -> Result<RunTrace> {
    if t_max == 0 {
        return Err(Error::Empty("horizon"));
    }
    let mut loop_ = ScenarioUcb::new(kernels, grid, noise_var, schedule)?;
    let mut decisions = Vec::with_capacity(t_max);
    let mut sigmas = Vec::with_capacity(t_max);
    let mut betas = Vec::with_capacity(t_max);
    for t in 1..=t_max {
        let rec = loop_.step(blackbox)?;
        decisions.push(Decision {
            t,
            x_index: rec.x_index,
            scenario_index: Some(rec.scenario_index),
            ucb_value: rec.ucb_value,
            y: rec.y,
        });
        sigmas.push(rec.sigma);
        betas.push(rec.beta);
    }
    Ok(RunTrace {
        decisions,
        sigmas,
        betas,
        master_seed,
        config: RunConfig {
            n_scenarios: kernels.len(),
            grid_size: grid.len(),
            t_max,
            noise_var,
            epsilon: schedule.epsilon,
            beta_variant: schedule.variant,
        },
    })
}

/// Baseline single-GP UCB loop on one fixed scenario.
pub fn run_gp_ucb<B: Blackbox>(
    blackbox: &mut B,
    kernel: &KernelSpec,
    scenario_id: usize,
    grid: &Grid,
    noise_var: f64,
    t_max: usize,
    schedule: BetaSchedule,
    master_seed: u64,
) -> Result<RunTrace> {
    if t_max == 0 {
        return Err(Error::Empty("horizon"));
    }
    let mut state = GpState::new(*kernel, grid.clone(), noise_var)?;
    let mut decisions = Vec::with_capacity(t_max);
    let mut sigmas = Vec::with_capacity(t_max);
    let mut betas = Vec::with_capacity(t_max);
    for t in 1..=t_max {
        let mut step = || -> Result<()> {
            let beta = schedule.beta(t)?;
            let sqrt_beta = beta.sqrt();
            let means = state.mean_values();
            let sig = state.sigma_values();
            let (x_index, _, ucb_value) =
                max_min_select(grid.len(), 1, |x, _| means[x] + sqrt_beta * sig[x]);
            let y = blackbox.query(x_index, scenario_id)?;
            state.update(Observation { x_index, y, t })?;
            decisions.push(Decision {
                t,
                x_index,
                scenario_index: None,
                ucb_value,
                y,
            });
            sigmas.push(sig[x_index]);
            betas.push(beta);
            Ok(())
        };
        step().map_err(|e| e.at_iteration(t))?;
    }
    Ok(RunTrace {
        decisions,
        sigmas,
        betas,
        master_seed,
        config: RunConfig {
            n_scenarios: 1,
            grid_size: grid.len(),
            t_max,
            noise_var,
            epsilon: schedule.epsilon,
            beta_variant: schedule.variant,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn beta_values_match_formula() {
        let s = BetaSchedule::new(BetaVariant::ScenarioUcb, 101, 0.1).unwrap();
        assert_relative_eq!(s.beta(1).unwrap(), 16.2173, max_relative = 1e-4);
        let g = BetaSchedule::new(BetaVariant::GpUcb, 101, 0.1).unwrap();
        assert_relative_eq!(g.beta(1).unwrap(), 14.8310, max_relative = 1e-4);
    }

    #[test]
    fn beta_log_identity_between_steps() {
        let s = BetaSchedule::new(BetaVariant::ScenarioUcb, 101, 0.1).unwrap();
        let b1 = s.beta(1).unwrap();
        let b2 = s.beta(2).unwrap();
        assert_relative_eq!(b2, b1 + 2.0 * 4.0f64.ln(), max_relative = 1e-12);
    }

    #[test]
    fn beta_is_monotone() {
        for variant in [BetaVariant::GpUcb, BetaVariant::ScenarioUcb] {
            let s = BetaSchedule::new(variant, 11, 0.05).unwrap();
            let mut prev = 0.0;
            for t in 1..200 {
                let b = s.beta(t).unwrap();
                assert!(b > prev);
                prev = b;
            }
        }
    }

    #[test]
    fn beta_rejects_t_zero() {
        let s = BetaSchedule::new(BetaVariant::ScenarioUcb, 11, 0.1).unwrap();
        assert!(s.beta(0).is_err());
    }

    #[test]
    fn select_on_prior_states_breaks_ties_low() {
        let grid = Grid::from_range(0.0, 1.0, 0.25).unwrap();
        let kernels: Vec<KernelSpec> = (0..3)
            .map(|i| KernelSpec::squared_exponential(i as f64 / 3.0).unwrap())
            .collect();
        let states: Vec<GpState> = kernels
            .iter()
            .map(|k| GpState::new(*k, grid.clone(), 0.01).unwrap())
            .collect();
        let (x, i, v) = select_scenario_ucb(&states, 4.0).unwrap();
        assert_eq!((x, i), (0, 0));
        assert_relative_eq!(v, 2.0, max_relative = 1e-12);
    }

    #[test]
    fn select_rejects_empty_and_negative_beta() {
        assert!(select_scenario_ucb(&[], 1.0).is_err());
        let grid = Grid::from_range(0.0, 1.0, 0.5).unwrap();
        let st = vec![GpState::new(
            KernelSpec::squared_exponential(0.0).unwrap(),
            grid,
            0.01,
        )
        .unwrap()];
        assert!(select_scenario_ucb(&st, -0.5).is_err());
    }
}
