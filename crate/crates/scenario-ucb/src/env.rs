//! Ground-truth environment: zero-mean GP realizations over the grid and
//! noisy blackbox queries.
//!
//! The decision loop only ever sees [`Blackbox::query`]; noiseless values
//! are exposed through [`GroundTruth::truth`] for regret evaluation alone.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::kernel::{kernel_matrix, Grid, KernelSpec};
use crate::scenario::ScenarioSet;

/// Diagonal jitter for the sampling factorization, and the single retry
/// value if the first attempt fails.
pub const SAMPLE_JITTER: f64 = 1e-10;
pub const SAMPLE_JITTER_RETRY: f64 = 1e-8;

/// Noisy access to the realized functions; the only interface the decision
/// loop is given.
pub trait Blackbox {
    /// `F(x, d_i) + n`, with fresh Gaussian measurement noise.
    fn query(&mut self, x_index: usize, scenario_id: usize) -> Result<f64>;
}

/// Materialized realizations for a scenario set plus the measurement-noise
/// stream.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    grid: Grid,
    scenarios: ScenarioSet,
    noise_var: f64,
    noise_rng: ChaCha12Rng,
}

impl GroundTruth {
    pub fn new(
        grid: Grid,
        scenarios: ScenarioSet,
        noise_var: f64,
        noise_rng: ChaCha12Rng,
    ) -> Result<Self> {
        if !(noise_var >= 0.0) {
            return Err(Error::ParamRange {
                param: "noise_var",
                range: "[0, inf)",
                value: noise_var,
            });
        }
        for s in &scenarios.scenarios {
            if s.realization.len() != grid.len() {
                return Err(Error::LengthMismatch {
                    what: "scenario realization",
                    got: s.realization.len(),
                    expected: grid.len(),
                });
            }
        }
        Ok(GroundTruth {
            grid,
            scenarios,
            noise_var,
            noise_rng,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn scenario_set(&self) -> &ScenarioSet {
        &self.scenarios
    }

    pub fn n_scenarios(&self) -> usize {
        self.scenarios.len()
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }

    /// Noiseless `F(x, d_i)`. Regret evaluation only; never handed to the
    /// decision loop.
    pub fn truth(&self, x_index: usize, scenario_id: usize) -> Result<f64> {
        let s = self
            .scenarios
            .scenarios
            .get(scenario_id)
            .ok_or(Error::IndexOutOfBounds {
                what: "scenario set",
                index: scenario_id,
                len: self.scenarios.len(),
            })?;
        s.realization
            .get(x_index)
            .copied()
            .ok_or(Error::IndexOutOfBounds {
                what: "grid",
                index: x_index,
                len: self.grid.len(),
            })
    }

    /// The full noiseless tables, one slice per scenario.
    pub fn truth_tables(&self) -> Vec<&[f64]> {
        self.scenarios
            .scenarios
            .iter()
            .map(|s| s.realization.as_slice())
            .collect()
    }
}

impl Blackbox for GroundTruth {
    fn query(&mut self, x_index: usize, scenario_id: usize) -> Result<f64> {
        let f = self.truth(x_index, scenario_id)?;
        let n: f64 = self.noise_rng.sample(StandardNormal);
        Ok(f + self.noise_var.sqrt() * n)
    }
}

/// Sample one realization of the zero-mean GP prior with covariance
/// `kernel_matrix(spec, grid)` via a jittered Cholesky factor.
pub fn synthesize(spec: &KernelSpec, grid: &Grid, rng: &mut impl Rng) -> Result<Vec<f64>> {
    let cov = kernel_matrix(spec, grid)?;
    let n = grid.len();
    let chol = psd_factor(&cov)?;
    let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let mut out = vec![0.0; n];
    for i in 0..n {
        let mut s = 0.0;
        for j in 0..=i {
            s += chol[(i, j)] * z[j];
        }
        out[i] = s;
    }
    Ok(out)
}

fn psd_factor(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    for jitter in [SAMPLE_JITTER, SAMPLE_JITTER_RETRY] {
        let m = cov + DMatrix::identity(cov.nrows(), cov.ncols()) * jitter;
        if let Some(chol) = m.cholesky() {
            return Ok(chol.unpack());
        }
    }
    Err(Error::Numerical(format!(
        "covariance factorization failed for {}x{} matrix even with jitter {SAMPLE_JITTER_RETRY:e}",
        cov.nrows(),
        cov.ncols()
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedBundle;
    use crate::scenario::Scenario;

    fn tiny_gt(noise_var: f64) -> GroundTruth {
        let grid = Grid::new(vec![0.0, 0.5, 1.0]).unwrap();
        let set = ScenarioSet {
            scenarios: vec![Scenario {
                id: 0,
                delta: 0.2,
                realization: vec![0.4, -1.1, 0.9],
            }],
            rng_seed: 0,
        };
        GroundTruth::new(grid, set, noise_var, SeedBundle::new(3).noise_rng()).unwrap()
    }

    #[test]
    fn synthesize_is_deterministic() {
        let grid = Grid::from_range(0.0, 1.0, 0.1).unwrap();
        let spec = KernelSpec::squared_exponential(0.3).unwrap();
        let a = synthesize(&spec, &grid, &mut SeedBundle::new(5).realization_rng()).unwrap();
        let b = synthesize(&spec, &grid, &mut SeedBundle::new(5).realization_rng()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), grid.len());
    }

    #[test]
    fn noiseless_query_returns_truth() {
        let mut gt = tiny_gt(0.0);
        assert_eq!(gt.query(1, 0).unwrap(), -1.1);
        assert_eq!(gt.query(1, 0).unwrap(), -1.1);
    }

    #[test]
    fn truth_is_pure_and_round_trips() {
        let gt = tiny_gt(0.25);
        assert_eq!(gt.truth(2, 0).unwrap(), 0.9);
        assert_eq!(gt.truth(2, 0).unwrap(), 0.9);
        assert!(gt.truth(3, 0).is_err());
        assert!(gt.truth(0, 1).is_err());
    }

    #[test]
    fn query_noise_has_requested_variance() {
        let mut gt = tiny_gt(0.04);
        let n = 10_000;
        let samples: Vec<f64> = (0..n).map(|_| gt.query(0, 0).unwrap()).collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        // mean within 3 standard errors, variance within 5%
        assert!((mean - 0.4).abs() < 3.0 * 0.2 / 100.0, "mean {mean}");
        assert!((var - 0.04).abs() < 0.05 * 0.04, "var {var}");
    }
}
