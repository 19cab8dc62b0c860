//! Scenario sampling, sample-complexity formulas, and the re-draw schedule.
//!
//! A scenario is one uncertainty draw `d = (omega, delta)`: a kernel
//! parameter `delta` plus the realized function table over the grid. The
//! re-draw schedule turns a frequency-of-re-draw function `alpha` into the
//! iterations at which a fresh extra scenario is drawn; the active extra
//! scenario is constant on the blocks between draws.

use rand::Rng;
use rand_chacha::ChaCha12Rng;

use crate::env::synthesize;
use crate::error::{Error, Result};
use crate::kernel::{Grid, KernelFamily, KernelSpec, LengthscaleMap};

/// One uncertainty draw: id within its set, kernel parameter, and the
/// realized function values over the grid.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Scenario {
    pub id: usize,
    pub delta: f64,
    pub realization: Vec<f64>,
}

/// The fixed multi-sample `D_N` the algorithm optimizes against.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ScenarioSet {
    pub scenarios: Vec<Scenario>,
    pub rng_seed: u64,
}

impl ScenarioSet {
    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    pub fn deltas(&self) -> Vec<f64> {
        self.scenarios.iter().map(|s| s.delta).collect()
    }
}

/// Distribution of the uncertainty parameter `delta`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum DeltaDist {
    Uniform { lo: f64, hi: f64 },
    Constant(f64),
}

impl DeltaDist {
    pub fn validate(&self) -> Result<()> {
        match self {
            DeltaDist::Uniform { lo, hi } if !(lo < hi) => Err(Error::Distribution(format!(
                "uniform bounds must satisfy lo < hi, got [{lo}, {hi}]"
            ))),
            _ => Ok(()),
        }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        match *self {
            DeltaDist::Uniform { lo, hi } => rng.random_range(lo..hi),
            DeltaDist::Constant(v) => v,
        }
    }
}

/// Draw `n` i.i.d. scenarios: `delta` from `dist` (its own stream) and the
/// realization sampled from the matching GP prior (the realization stream).
pub fn draw_scenarios(
    n: usize,
    dist: &DeltaDist,
    map: LengthscaleMap,
    grid: &Grid,
    seed: u64,
    scenario_rng: &mut ChaCha12Rng,
    realization_rng: &mut ChaCha12Rng,
) -> Result<ScenarioSet> {
    if n == 0 {
        return Err(Error::Empty("scenario set"));
    }
    dist.validate()?;
    let mut scenarios = Vec::with_capacity(n);
    for id in 0..n {
        scenarios.push(draw_one(id, dist, map, grid, scenario_rng, realization_rng)?);
    }
    Ok(ScenarioSet {
        scenarios,
        rng_seed: seed,
    })
}

/// Draw a single scenario; used for the fresh (N+1)-th draws as well.
pub fn draw_one(
    id: usize,
    dist: &DeltaDist,
    map: LengthscaleMap,
    grid: &Grid,
    delta_rng: &mut impl Rng,
    realization_rng: &mut impl Rng,
) -> Result<Scenario> {
    let delta = dist.sample(delta_rng);
    let spec = KernelSpec::new(KernelFamily::SquaredExponential, delta, map)?;
    let realization = synthesize(&spec, grid, realization_rng)?;
    Ok(Scenario {
        id,
        delta,
        realization,
    })
}

/// Draw one fresh scenario with `delta` and realization taken sequentially
/// from a single stream; used for the re-drawn (N+1)-th scenarios.
pub fn draw_fresh(
    id: usize,
    dist: &DeltaDist,
    map: LengthscaleMap,
    grid: &Grid,
    rng: &mut impl Rng,
) -> Result<Scenario> {
    let delta = dist.sample(rng);
    let spec = KernelSpec::new(KernelFamily::SquaredExponential, delta, map)?;
    let realization = synthesize(&spec, grid, rng)?;
    Ok(Scenario {
        id,
        delta,
        realization,
    })
}

/// Materialize the re-draw sequence of a schedule: one fresh scenario per
/// draw time, all taken from the re-draw stream.
pub fn draw_redraw_sequence(
    schedule: &RedrawSchedule,
    dist: &DeltaDist,
    map: LengthscaleMap,
    grid: &Grid,
    rng: &mut impl Rng,
) -> Result<Vec<(usize, Scenario)>> {
    schedule
        .redraw_times()
        .into_iter()
        .enumerate()
        .map(|(k, t)| Ok((t, draw_fresh(k, dist, map, grid, rng)?)))
        .collect()
}

/// Smallest integer `N` with `N >= log(1/zeta) / log(1/(1-eta))`.
pub fn sample_count_theorem2(eta: f64, zeta: f64) -> Result<u64> {
    check_unit_open("eta", eta)?;
    check_unit_open("zeta", zeta)?;
    let n = (1.0 / zeta).ln() / (1.0 / (1.0 - eta)).ln();
    Ok((n.ceil() as u64).max(1))
}

/// `N = ceil((1/eta) log(1/zeta))`.
pub fn sample_count_corollary1(eta: f64, zeta: f64) -> Result<u64> {
    check_unit_open("eta", eta)?;
    check_unit_open("zeta", zeta)?;
    Ok((((1.0 / zeta).ln() / eta).ceil() as u64).max(1))
}

/// `N = ceil(alpha(T)/eta * log(1/zeta))`, the count that makes the whole
/// re-draw sequence robust.
pub fn sample_count_redraw(eta: f64, zeta: f64, alpha_t: f64) -> Result<u64> {
    check_unit_open("eta", eta)?;
    check_unit_open("zeta", zeta)?;
    if !(alpha_t >= 1.0) {
        return Err(Error::ParamRange {
            param: "alpha_t",
            range: "[1, inf)",
            value: alpha_t,
        });
    }
    Ok(((alpha_t * (1.0 / zeta).ln() / eta).ceil() as u64).max(1))
}

fn check_unit_open(param: &'static str, value: f64) -> Result<()> {
    if !(value > 0.0 && value < 1.0) {
        return Err(Error::ParamRange {
            param,
            range: "(0, 1)",
            value,
        });
    }
    Ok(())
}

/// The frequency-of-re-draw function, either `alpha(t) = t^nu` or an
/// explicit table indexed from t = 1.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum AlphaSpec {
    Exponent(f64),
    Table(Vec<f64>),
}

/// A validated re-draw schedule over a fixed horizon.
///
/// A fresh extra scenario is drawn at t = 1 and at every t where
/// `floor(alpha(t))` strictly increases; between draws the active extra
/// scenario is constant.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RedrawSchedule {
    alpha: AlphaSpec,
    t_max: usize,
}

impl RedrawSchedule {
    /// Validate `1 <= alpha(t) <= t` over the horizon.
    pub fn new(alpha: AlphaSpec, t_max: usize) -> Result<Self> {
        if t_max == 0 {
            return Err(Error::Empty("horizon"));
        }
        if let AlphaSpec::Table(table) = &alpha {
            if table.len() < t_max {
                return Err(Error::LengthMismatch {
                    what: "alpha table",
                    got: table.len(),
                    expected: t_max,
                });
            }
        }
        let schedule = RedrawSchedule { alpha, t_max };
        for t in 1..=t_max {
            let a = schedule.alpha(t);
            if !(a >= 1.0 && a <= t as f64) {
                return Err(Error::InvalidSchedule { t, alpha: a });
            }
        }
        Ok(schedule)
    }

    pub fn t_max(&self) -> usize {
        self.t_max
    }

    pub fn alpha(&self, t: usize) -> f64 {
        match &self.alpha {
            AlphaSpec::Exponent(nu) => (t as f64).powf(*nu),
            AlphaSpec::Table(table) => table[t - 1],
        }
    }

    /// Iterations at which a fresh extra scenario is drawn: t = 1, then
    /// every t where `floor(alpha(t))` crosses an integer.
    pub fn redraw_times(&self) -> Vec<usize> {
        let mut times = vec![1];
        let mut level = self.alpha(1).floor();
        for t in 2..=self.t_max {
            let f = self.alpha(t).floor();
            if f > level {
                times.push(t);
                level = f;
            }
        }
        times
    }

    /// For each t in `1..=t_max`, the 0-based index of the active extra
    /// scenario (how many draws happened up to t, minus one).
    pub fn assignment(&self) -> Vec<usize> {
        let times = self.redraw_times();
        let mut out = Vec::with_capacity(self.t_max);
        let mut idx = 0usize;
        for t in 1..=self.t_max {
            while idx + 1 < times.len() && times[idx + 1] <= t {
                idx += 1;
            }
            out.push(idx);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedBundle;

    #[test]
    fn theorem2_counts() {
        assert_eq!(sample_count_theorem2(0.1, 0.05).unwrap(), 29);
        assert_eq!(sample_count_theorem2(0.5, 0.5).unwrap(), 1);
    }

    #[test]
    fn corollary1_counts() {
        assert_eq!(sample_count_corollary1(0.1, 0.05).unwrap(), 30);
        assert_eq!(sample_count_corollary1(0.5, 0.5).unwrap(), 2);
        assert_eq!(sample_count_corollary1(0.999, 0.05).unwrap(), 3);
    }

    #[test]
    fn redraw_counts() {
        assert_eq!(sample_count_redraw(0.1, 0.05, 1.0).unwrap(), 30);
        assert_eq!(sample_count_redraw(0.1, 0.05, 10.0).unwrap(), 300);
        // monotone non-decreasing in alpha_t
        let mut prev = 0;
        for k in 1..=20 {
            let n = sample_count_redraw(0.2, 0.1, k as f64).unwrap();
            assert!(n >= prev);
            prev = n;
        }
    }

    #[test]
    fn parameter_ranges_rejected() {
        assert!(sample_count_theorem2(0.0, 0.5).is_err());
        assert!(sample_count_corollary1(0.5, 1.0).is_err());
        assert!(sample_count_redraw(0.5, 0.5, 0.5).is_err());
    }

    #[test]
    fn redraw_times_identity_schedule() {
        let s = RedrawSchedule::new(AlphaSpec::Exponent(1.0), 5).unwrap();
        assert_eq!(s.redraw_times(), vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn redraw_times_slow_schedule() {
        let s = RedrawSchedule::new(AlphaSpec::Exponent(0.1), 1000).unwrap();
        assert_eq!(s.redraw_times(), vec![1]);
    }

    #[test]
    fn redraw_times_crossing() {
        let s = RedrawSchedule::new(AlphaSpec::Exponent(0.4), 10).unwrap();
        assert_eq!(s.redraw_times(), vec![1, 6]);
    }

    #[test]
    fn schedule_rejects_super_linear_alpha() {
        assert!(matches!(
            RedrawSchedule::new(AlphaSpec::Exponent(1.5), 10),
            Err(Error::InvalidSchedule { .. })
        ));
        assert!(RedrawSchedule::new(AlphaSpec::Table(vec![1.0, 0.5]), 2).is_err());
    }

    #[test]
    fn assignment_is_block_constant() {
        let s = RedrawSchedule::new(AlphaSpec::Exponent(0.4), 40).unwrap();
        let times = s.redraw_times();
        let assign = s.assignment();
        assert_eq!(assign.len(), 40);
        for (k, &start) in times.iter().enumerate() {
            let end = times.get(k + 1).copied().unwrap_or(41);
            for t in start..end {
                assert_eq!(assign[t - 1], k);
            }
        }
    }

    #[test]
    fn draws_are_deterministic_given_seed() {
        let grid = Grid::from_range(0.0, 1.0, 0.25).unwrap();
        let dist = DeltaDist::Uniform { lo: 0.0, hi: 1.0 };
        let draw = |seed: u64| {
            let bundle = SeedBundle::new(seed);
            draw_scenarios(
                20,
                &dist,
                LengthscaleMap::default(),
                &grid,
                seed,
                &mut bundle.scenario_rng(),
                &mut bundle.realization_rng(),
            )
            .unwrap()
        };
        let a = draw(9);
        let b = draw(9);
        assert_eq!(a, b);
        assert_eq!(a.len(), 20);
        for s in &a.scenarios {
            assert!(s.delta >= 0.0 && s.delta < 1.0);
            assert_eq!(s.realization.len(), grid.len());
        }
    }

    #[test]
    fn uniform_delta_mean_is_half() {
        let bundle = SeedBundle::new(11);
        let mut rng = bundle.scenario_rng();
        let dist = DeltaDist::Uniform { lo: 0.0, hi: 1.0 };
        let n = 100_000;
        let mean: f64 = (0..n).map(|_| dist.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.01, "mean {mean}");
    }
}
