//! Scenario problem values, regret under re-draw, empirical information
//! gain, and the theoretical bound curves.
//!
//! The max-min value `J` of a scenario set is computed by exhaustive scan of
//! the truth tables (the grid is finite). Regret is always evaluated on
//! noiseless truths, never on noisy query values.

use crate::algo::RunTrace;
use crate::env::GroundTruth;
use crate::error::{Error, Result};
use crate::kernel::KernelSpectrum;
use crate::maxmin::max_min_select;
use crate::scenario::Scenario;

/// Solution of the sampled max-min problem: the maximizing point, the
/// scenario attaining the minimum there, and the value.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ScenarioSolution {
    pub x_star_index: usize,
    pub i_star_index: usize,
    pub tau_star: f64,
}

/// Exhaustive exact max-min over complete truth tables. Ties break to the
/// lowest point index, then the lowest scenario index, matching the
/// decision loop's rule.
pub fn solve_scenario(tables: &[&[f64]]) -> Result<ScenarioSolution> {
    if tables.is_empty() {
        return Err(Error::Empty("truth tables"));
    }
    let nx = tables[0].len();
    if nx == 0 {
        return Err(Error::Empty("truth table"));
    }
    for (i, t) in tables.iter().enumerate() {
        if t.len() != nx {
            return Err(Error::LengthMismatch {
                what: "truth table",
                got: t.len(),
                expected: nx,
            })
            .map_err(|e| e.at_iteration(i));
        }
    }
    let (x, i, v) = max_min_select(nx, tables.len(), |x, i| tables[i][x]);
    Ok(ScenarioSolution {
        x_star_index: x,
        i_star_index: i,
        tau_star: v,
    })
}

/// Per-iteration regret record of one run.
///
/// `redraw_avg[t-1]` is the running mean of `J(D_N u d^t) - F(x_t, d_it)`;
/// `noredraw_avg` is the same mean with `J(D_N)` in place of the re-drawn
/// value, the quantity the finite-time bound controls. `bound` evaluates
/// that bound per step from the trace's `beta_t` and the cumulative
/// empirical information gain.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RegretCurve {
    /// Instantaneous regret `J(D_N) - F(x_t, d_it)`.
    pub r_inst: Vec<f64>,
    /// `J(D_N u d^t)` per step.
    pub j_redraw: Vec<f64>,
    /// Running mean of `J(D_N u d^t) - F(x_t, d_it)`.
    pub redraw_avg: Vec<f64>,
    /// Running mean of `r_inst`.
    pub noredraw_avg: Vec<f64>,
    /// Bound value per step with cumulative empirical gamma.
    pub bound: Vec<f64>,
    /// Number of distinct extra scenarios drawn up to each step.
    pub redraw_count: Vec<usize>,
    /// The sampled problem's value `J(D_N)`.
    pub j_base: f64,
}

impl RegretCurve {
    pub fn len(&self) -> usize {
        self.r_inst.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r_inst.is_empty()
    }
}

/// Evaluate the regret curves of a run against the re-draw sequence.
///
/// `redraws` pairs each draw time with the drawn scenario; the first entry
/// must be at t = 1 and the active scenario is constant between draws. `J`
/// is recomputed on the N+1 tables once per block.
pub fn redraw_regret(
    trace: &RunTrace,
    gt: &GroundTruth,
    redraws: &[(usize, Scenario)],
) -> Result<RegretCurve> {
    let t_max = trace.len();
    if t_max == 0 {
        return Err(Error::Empty("trace"));
    }
    if redraws.is_empty() {
        return Err(Error::Empty("re-draw sequence"));
    }
    if redraws[0].0 != 1 {
        return Err(Error::InvalidSchedule {
            t: redraws[0].0,
            alpha: f64::NAN,
        });
    }
    let base_tables = gt.truth_tables();
    let j_base = solve_scenario(&base_tables)?.tau_star;

    // One J per distinct re-draw.
    let mut j_per_draw = Vec::with_capacity(redraws.len());
    for (_, scenario) in redraws {
        if scenario.realization.len() != gt.grid().len() {
            return Err(Error::LengthMismatch {
                what: "re-draw realization",
                got: scenario.realization.len(),
                expected: gt.grid().len(),
            });
        }
        let mut tables = base_tables.clone();
        tables.push(scenario.realization.as_slice());
        j_per_draw.push(solve_scenario(&tables)?.tau_star);
    }

    let rho2 = trace.config.noise_var;
    let log_term = (1.0 + 1.0 / rho2).ln();
    let mut curve = RegretCurve {
        r_inst: Vec::with_capacity(t_max),
        j_redraw: Vec::with_capacity(t_max),
        redraw_avg: Vec::with_capacity(t_max),
        noredraw_avg: Vec::with_capacity(t_max),
        bound: Vec::with_capacity(t_max),
        redraw_count: Vec::with_capacity(t_max),
        j_base,
    };
    let mut draw_idx = 0usize;
    let mut sum_redraw = 0.0;
    let mut sum_noredraw = 0.0;
    let mut gamma_cum = 0.0;
    for (k, d) in trace.decisions.iter().enumerate() {
        let t = k + 1;
        while draw_idx + 1 < redraws.len() && redraws[draw_idx + 1].0 <= t {
            draw_idx += 1;
        }
        let i_t = d.scenario_index.unwrap_or(0);
        let f = gt.truth(d.x_index, i_t)?;
        let j_t = j_per_draw[draw_idx];
        sum_redraw += j_t - f;
        sum_noredraw += j_base - f;
        gamma_cum += 0.5 * (1.0 + trace.sigmas[k] * trace.sigmas[k] / rho2).ln();
        curve.r_inst.push(j_base - f);
        curve.j_redraw.push(j_t);
        curve.redraw_avg.push(sum_redraw / t as f64);
        curve.noredraw_avg.push(sum_noredraw / t as f64);
        curve
            .bound
            .push((8.0 * trace.betas[k] * gamma_cum / (t as f64 * log_term)).sqrt());
        curve.redraw_count.push(draw_idx + 1);
    }
    Ok(curve)
}

/// Empirical per-scenario information gain of a run:
/// `gamma^i_T = 1/2 sum_t log(1 + sigma_t^2 / rho^2)` over the steps where
/// scenario `i` was selected.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GammaEstimate {
    pub per_scenario: Vec<f64>,
    pub total: f64,
    /// Order-level spectral bounds per scenario, filled by
    /// [`GammaEstimate::with_spectrum_bounds`].
    pub bound_t_star_one: Option<Vec<f64>>,
    pub bound_t_star_grid: Option<Vec<f64>>,
}

pub fn empirical_gamma(trace: &RunTrace, rho2: f64) -> Result<GammaEstimate> {
    if !(rho2 > 0.0) {
        return Err(Error::ParamRange {
            param: "rho2",
            range: "(0, inf)",
            value: rho2,
        });
    }
    let mut per_scenario = vec![0.0; trace.config.n_scenarios.max(1)];
    for (k, d) in trace.decisions.iter().enumerate() {
        let i = d.scenario_index.unwrap_or(0);
        let s = trace.sigmas[k];
        per_scenario[i] += 0.5 * (1.0 + s * s / rho2).ln();
    }
    let total = per_scenario.iter().sum();
    Ok(GammaEstimate {
        per_scenario,
        total,
        bound_t_star_one: None,
        bound_t_star_grid: None,
    })
}

impl GammaEstimate {
    /// Attach the spectral shape bounds for each scenario's kernel, at
    /// `t_star = 1` and `t_star = |X|`.
    pub fn with_spectrum_bounds(
        mut self,
        spectra: &[KernelSpectrum],
        t_len: usize,
        rho2: f64,
    ) -> Result<Self> {
        if spectra.len() != self.per_scenario.len() {
            return Err(Error::LengthMismatch {
                what: "spectra",
                got: spectra.len(),
                expected: self.per_scenario.len(),
            });
        }
        let one = spectra
            .iter()
            .map(|s| gamma_bound(s, t_len, rho2, 1))
            .collect::<Result<Vec<_>>>()?;
        let grid = spectra
            .iter()
            .map(|s| gamma_bound(s, t_len, rho2, s.len()))
            .collect::<Result<Vec<_>>>()?;
        self.bound_t_star_one = Some(one);
        self.bound_t_star_grid = Some(grid);
        Ok(self)
    }
}

/// Order-level information-gain bound from a kernel spectrum, with unit
/// constant:
/// `rho^{-2} (T * sum_{j > t_star} lambda_j + t_star * log(T * sum_j lambda_j))`.
///
/// This is a shape function for diagnostics, not a certified constant.
/// `t_star = |X|` empties the linear tail term, the regime valid for
/// `T > |X|`.
pub fn gamma_bound(spectrum: &KernelSpectrum, t_len: usize, rho2: f64, t_star: usize) -> Result<f64> {
    let n = spectrum.len();
    if t_star < 1 || t_star > n {
        return Err(Error::IndexOutOfBounds {
            what: "spectrum rank",
            index: t_star,
            len: n,
        });
    }
    if t_len < 1 {
        return Err(Error::Empty("horizon"));
    }
    if !(rho2 > 0.0) {
        return Err(Error::ParamRange {
            param: "rho2",
            range: "(0, inf)",
            value: rho2,
        });
    }
    let t = t_len as f64;
    let tail = spectrum.tail_sum(t_star);
    let total = spectrum.sum();
    Ok((t * tail + t_star as f64 * (t * total).ln()) / rho2)
}

/// Finite-time regret bound `sqrt(8 beta_T gamma_T / (T log(1 + 1/rho^2)))`.
pub fn regret_bound(beta_t: f64, gamma_t: f64, t_len: usize, rho2: f64) -> Result<f64> {
    for (param, value) in [("beta_t", beta_t), ("gamma_t", gamma_t), ("rho2", rho2)] {
        if !(value > 0.0) {
            return Err(Error::ParamRange {
                param,
                range: "(0, inf)",
                value,
            });
        }
    }
    if t_len < 1 {
        return Err(Error::Empty("horizon"));
    }
    Ok((8.0 * beta_t * gamma_t / (t_len as f64 * (1.0 + 1.0 / rho2).ln())).sqrt())
}

/// Order-level consistency scaling with unit constant:
/// `sqrt(alpha(T) |X| / (eta T) * log(1/zeta) * log(|X| T^2 / eps) * log(|X| T))`
/// with `alpha(T) = T^nu`. Vanishes as `T` grows iff `nu < 1`.
pub fn consistency_scaling(
    t_len: usize,
    nu: f64,
    grid_size: usize,
    eta: f64,
    zeta: f64,
    epsilon: f64,
) -> Result<f64> {
    if t_len < 1 {
        return Err(Error::Empty("horizon"));
    }
    if grid_size == 0 {
        return Err(Error::Empty("grid"));
    }
    for (param, value) in [("eta", eta), ("zeta", zeta), ("epsilon", epsilon)] {
        if !(value > 0.0 && value < 1.0) {
            return Err(Error::ParamRange {
                param,
                range: "(0, 1)",
                value,
            });
        }
    }
    if !(nu > 0.0 && nu <= 1.0) {
        return Err(Error::ParamRange {
            param: "nu",
            range: "(0, 1]",
            value: nu,
        });
    }
    let t = t_len as f64;
    let x = grid_size as f64;
    let alpha_t = t.powf(nu);
    Ok(
        (alpha_t * x / (eta * t) * (1.0 / zeta).ln() * (x * t * t / epsilon).ln() * (x * t).ln())
            .sqrt(),
    )
}

/// Whether the sufficient condition for vanishing regret holds: the re-draw
/// frequency grows strictly sub-linearly.
pub fn consistency_guaranteed(nu: f64) -> bool {
    nu < 1.0
}

/// Running best max-min value among the points a run has queried, evaluated
/// on noiseless truth tables.
pub fn incumbent_maxmin(trace: &RunTrace, tables: &[&[f64]]) -> Result<Vec<f64>> {
    if tables.is_empty() {
        return Err(Error::Empty("truth tables"));
    }
    let mut best = f64::NEG_INFINITY;
    let mut out = Vec::with_capacity(trace.len());
    for d in &trace.decisions {
        let mut env = f64::INFINITY;
        for t in tables {
            let v = *t.get(d.x_index).ok_or(Error::IndexOutOfBounds {
                what: "truth table",
                index: d.x_index,
                len: t.len(),
            })?;
            env = env.min(v);
        }
        best = best.max(env);
        out.push(best);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn solve_single_table_is_argmax() {
        let t = vec![0.2, 0.9, -0.5];
        let sol = solve_scenario(&[&t]).unwrap();
        assert_eq!(sol.x_star_index, 1);
        assert_eq!(sol.i_star_index, 0);
        assert_eq!(sol.tau_star, 0.9);
    }

    #[test]
    fn solve_two_by_two_table() {
        // rows = points: F = [[3, 1], [2, 2]]; row minima (1, 2)
        let t0 = vec![3.0, 2.0];
        let t1 = vec![1.0, 2.0];
        let sol = solve_scenario(&[&t0, &t1]).unwrap();
        assert_eq!(sol.x_star_index, 1);
        assert_eq!(sol.tau_star, 2.0);
        // both scenarios tie at the solution point; lowest index wins
        assert_eq!(sol.i_star_index, 0);
    }

    #[test]
    fn adding_a_scenario_never_raises_tau() {
        let t0 = vec![3.0, 2.0, 0.5];
        let t1 = vec![1.0, 2.0, 4.0];
        let base = solve_scenario(&[&t0, &t1]).unwrap();
        let extra = vec![0.9, 5.0, -1.0];
        let ext = solve_scenario(&[&t0, &t1, &extra]).unwrap();
        assert!(ext.tau_star <= base.tau_star);
    }

    #[test]
    fn solve_rejects_empty_and_mismatched() {
        assert!(solve_scenario(&[]).is_err());
        let a = vec![1.0, 2.0];
        let b = vec![1.0];
        assert!(solve_scenario(&[&a, &b]).is_err());
    }

    #[test]
    fn gamma_one_step() {
        // single step with sigma = 1, rho^2 = 0.01 -> 0.5 ln(101)
        let half_ln_101 = 0.5 * 101.0f64.ln();
        assert_relative_eq!(half_ln_101, 2.30756, max_relative = 1e-5);
    }

    #[test]
    fn gamma_bound_identity_spectrum() {
        use crate::kernel::spectrum;
        use nalgebra::DMatrix;
        let s = spectrum(&DMatrix::identity(4, 4)).unwrap();
        let v = gamma_bound(&s, 10, 1.0, 1).unwrap();
        assert_relative_eq!(v, 30.0 + 40.0f64.ln(), max_relative = 1e-12);
        assert_relative_eq!(v, 33.6889, max_relative = 1e-5);
        // t_star = |X| leaves only the log term
        let v = gamma_bound(&s, 10, 1.0, 4).unwrap();
        assert_relative_eq!(v, 4.0 * 40.0f64.ln(), max_relative = 1e-12);
    }

    #[test]
    fn gamma_bound_tail_shrinks_on_decaying_spectrum() {
        use crate::kernel::{kernel_matrix, spectrum, Grid, KernelSpec};
        let grid = Grid::from_range(0.0, 1.0, 0.01).unwrap();
        let spec = KernelSpec::squared_exponential(0.0).unwrap();
        let s = spectrum(&kernel_matrix(&spec, &grid).unwrap()).unwrap();
        let mut prev = f64::INFINITY;
        for t_star in [1, 2, 4, 8, 16, 32, 64, 101] {
            let tail = s.tail_sum(t_star);
            assert!(tail <= prev + 1e-12);
            prev = tail;
        }
    }

    #[test]
    fn regret_bound_value_and_scaling() {
        let v = regret_bound(16.21731, 2.30756, 1, 0.01).unwrap();
        assert_relative_eq!(v, 8.0541, max_relative = 1e-4);
        let v4 = regret_bound(16.21731, 2.30756, 4, 0.01).unwrap();
        assert_relative_eq!(v4, v / 2.0, max_relative = 1e-12);
        assert!(regret_bound(0.0, 1.0, 1, 0.01).is_err());
    }

    #[test]
    fn consistency_scaling_shrinks_for_sublinear_nu() {
        let a = consistency_scaling(1_000, 0.1, 101, 0.1, 0.05, 0.1).unwrap();
        let b = consistency_scaling(1_000_000, 0.1, 101, 0.1, 0.05, 0.1).unwrap();
        assert!(b < a);
        // nu = 0.4: quadrupling T shrinks by ~4^{-0.3}, inflated by slowly
        // growing log factors
        let c = consistency_scaling(10_000, 0.4, 101, 0.1, 0.05, 0.1).unwrap();
        let d = consistency_scaling(40_000, 0.4, 101, 0.1, 0.05, 0.1).unwrap();
        let ratio = d / c;
        let ideal = 4.0f64.powf((0.4 - 1.0) / 2.0);
        assert!(ratio >= ideal && ratio <= ideal * 1.2, "ratio {ratio} vs {ideal}");
        assert!(consistency_guaranteed(0.4));
        assert!(!consistency_guaranteed(1.0));
    }
}
