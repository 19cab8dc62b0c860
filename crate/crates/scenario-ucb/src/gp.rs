//! Exact Gaussian-process posteriors on the grid, one per scenario.
//!
//! Conditioning follows the standard closed form: with observations
//! `y = [y_1..y_T]` at grid points `A_T`,
//!
//! ```text
//! mu(x)      = k_T(x)' (K_T + rho^2 I)^{-1} y
//! sigma^2(x) = k(x,x) - k_T(x)' (K_T + rho^2 I)^{-1} k_T(x)
//! ```
//!
//! The factor `L` of `K_T + rho^2 I` is extended by one row per observation
//! (rank-1 Cholesky extension), with a full refactorization every
//! [`REFACTOR_PERIOD`] updates or when a pivot degenerates. Posterior mean
//! and sigma are cached over the whole grid after each update, since the
//! selection rule scans every point anyway.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::kernel::{kernel_matrix, Grid, KernelSpec};

/// Full refactorization cadence, in observations.
pub const REFACTOR_PERIOD: usize = 64;

/// Diagonal jitter added once if the positive-definite solve fails.
pub const JITTER: f64 = 1e-10;

const MIN_PIVOT: f64 = 1e-12;

/// One noisy blackbox sample: grid index, observed value, iteration stamp.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Observation {
    pub x_index: usize,
    pub y: f64,
    pub t: usize,
}

/// Posterior state of a single scenario's GP over the grid.
#[derive(Debug, Clone)]
pub struct GpState {
    spec: KernelSpec,
    grid: Grid,
    noise_var: f64,
    /// Gram matrix of the kernel over the grid; observations index into it.
    kmat: DMatrix<f64>,
    data: Vec<Observation>,
    /// Packed rows of the lower-triangular factor of `K_T + (rho^2+jitter) I`.
    chol: Vec<Vec<f64>>,
    /// Row `t` holds `L^{-1} K_{T,grid}` restricted to observation `t`.
    v: Vec<Vec<f64>>,
    /// `L^{-1} y`.
    c: Vec<f64>,
    mean: Vec<f64>,
    /// Per grid point, `sum_t v[t][x]^2`; `sigma^2 = k(x,x) - sumsq`.
    sumsq: Vec<f64>,
    jitter: f64,
}

impl GpState {
    pub fn new(spec: KernelSpec, grid: Grid, noise_var: f64) -> Result<Self> {
        if !(noise_var > 0.0) {
            return Err(Error::ParamRange {
                param: "noise_var",
                range: "(0, inf)",
                value: noise_var,
            });
        }
        let kmat = kernel_matrix(&spec, &grid)?;
        let n = grid.len();
        Ok(GpState {
            spec,
            grid,
            noise_var,
            kmat,
            data: Vec::new(),
            chol: Vec::new(),
            v: Vec::new(),
            c: Vec::new(),
            mean: vec![0.0; n],
            sumsq: vec![0.0; n],
            jitter: 0.0,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }

    pub fn observations(&self) -> &[Observation] {
        &self.data
    }

    pub fn n_observations(&self) -> usize {
        self.data.len()
    }

    /// Posterior mean over the whole grid.
    pub fn mean_values(&self) -> &[f64] {
        &self.mean
    }

    /// Posterior standard deviation over the whole grid.
    pub fn sigma_values(&self) -> Vec<f64> {
        (0..self.grid.len()).map(|x| self.sigma_at(x)).collect()
    }

    fn sigma_at(&self, x: usize) -> f64 {
        (self.kmat[(x, x)] - self.sumsq[x]).max(0.0).sqrt()
    }

    /// Posterior `(mean, sigma)` at one grid point.
    pub fn predict(&self, x_index: usize) -> Result<(f64, f64)> {
        if x_index >= self.grid.len() {
            return Err(Error::IndexOutOfBounds {
                what: "grid",
                index: x_index,
                len: self.grid.len(),
            });
        }
        Ok((self.mean[x_index], self.sigma_at(x_index)))
    }

    /// Upper confidence bound `mean + sqrt(beta) * sigma` at one grid point.
    pub fn ucb_value(&self, x_index: usize, beta: f64) -> Result<f64> {
        if !(beta >= 0.0) {
            return Err(Error::ParamRange {
                param: "beta",
                range: "[0, inf)",
                value: beta,
            });
        }
        let (mu, sigma) = self.predict(x_index)?;
        Ok(mu + beta.sqrt() * sigma)
    }

    /// Condition on one more observation, recomputing the cached posterior
    /// over the full grid.
    pub fn update(&mut self, obs: Observation) -> Result<()> {
        if obs.x_index >= self.grid.len() {
            return Err(Error::IndexOutOfBounds {
                what: "grid",
                index: obs.x_index,
                len: self.grid.len(),
            });
        }
        self.data.push(obs);
        if self.data.len() % REFACTOR_PERIOD == 0 {
            self.refactor()
        } else {
            match self.extend_last() {
                Ok(()) => Ok(()),
                // Degenerate pivot: rebuild the whole factor, with jitter if needed.
                Err(Error::Numerical(_)) => self.refactor(),
                Err(e) => Err(e),
            }
        }
    }

    /// Extend factor, v, c and cached posterior by the last data row.
    fn extend_last(&mut self) -> Result<()> {
        let t = self.data.len() - 1;
        let j = self.data[t].x_index;
        let nx = self.grid.len();

        let b: Vec<f64> = (0..t)
            .map(|s| self.kmat[(j, self.data[s].x_index)])
            .collect();
        let w = forward_sub(&self.chol, &b);
        let diag = self.kmat[(j, j)] + self.noise_var + self.jitter;
        let pivot = diag - w.iter().map(|x| x * x).sum::<f64>();
        if !(pivot > MIN_PIVOT) {
            return Err(Error::Numerical(format!(
                "degenerate pivot {pivot:e} extending factor at T={}",
                t + 1
            )));
        }
        let l = pivot.sqrt();

        let mut vrow: Vec<f64> = (0..nx).map(|x| self.kmat[(j, x)]).collect();
        for (s, ws) in w.iter().enumerate() {
            let row = &self.v[s];
            for x in 0..nx {
                vrow[x] -= ws * row[x];
            }
        }
        for x in vrow.iter_mut() {
            *x /= l;
        }

        let cdot: f64 = w.iter().zip(&self.c).map(|(a, b)| a * b).sum();
        let cnew = (self.data[t].y - cdot) / l;

        for x in 0..nx {
            self.mean[x] += vrow[x] * cnew;
            self.sumsq[x] += vrow[x] * vrow[x];
        }
        let mut lrow = w;
        lrow.push(l);
        self.chol.push(lrow);
        self.v.push(vrow);
        self.c.push(cnew);
        Ok(())
    }

    /// Rebuild factor, v, c and cached posterior from scratch. If the
    /// positive-definite factorization fails, add diagonal jitter once;
    /// failing again is a hard error.
    fn refactor(&mut self) -> Result<()> {
        match self.try_refactor() {
            Ok(()) => Ok(()),
            Err(first) => {
                if self.jitter == 0.0 {
                    self.jitter = JITTER;
                    self.try_refactor()
                } else {
                    Err(first)
                }
            }
        }
    }

    fn try_refactor(&mut self) -> Result<()> {
        let t_len = self.data.len();
        let nx = self.grid.len();

        let mut chol: Vec<Vec<f64>> = Vec::with_capacity(t_len);
        for i in 0..t_len {
            let xi = self.data[i].x_index;
            let mut row = Vec::with_capacity(i + 1);
            for j in 0..i {
                let mut s = self.kmat[(xi, self.data[j].x_index)];
                for k in 0..j {
                    s -= row[k] * chol[j][k];
                }
                row.push(s / chol[j][j]);
            }
            let mut pivot = self.kmat[(xi, xi)] + self.noise_var + self.jitter;
            for k in 0..i {
                pivot -= row[k] * row[k];
            }
            if !(pivot > MIN_PIVOT) {
                let dmax = chol
                    .iter()
                    .map(|r| *r.last().unwrap())
                    .fold(f64::NEG_INFINITY, f64::max);
                let dmin = chol
                    .iter()
                    .map(|r| *r.last().unwrap())
                    .fold(f64::INFINITY, f64::min);
                return Err(Error::Numerical(format!(
                    "factorization of (K_T + rho^2 I) failed at row {i} of {t_len}: \
                     pivot {pivot:e}, jitter {:e}, factor diagonal range [{dmin:e}, {dmax:e}]",
                    self.jitter
                )));
            }
            row.push(pivot.sqrt());
            chol.push(row);
        }

        let mut v: Vec<Vec<f64>> = Vec::with_capacity(t_len);
        for i in 0..t_len {
            let xi = self.data[i].x_index;
            let mut row: Vec<f64> = (0..nx).map(|x| self.kmat[(xi, x)]).collect();
            for s in 0..i {
                let ls = chol[i][s];
                let vs = &v[s];
                for x in 0..nx {
                    row[x] -= ls * vs[x];
                }
            }
            let d = chol[i][i];
            for x in row.iter_mut() {
                *x /= d;
            }
            v.push(row);
        }

        let y: Vec<f64> = self.data.iter().map(|o| o.y).collect();
        let c = forward_sub(&chol, &y);

        let mut mean = vec![0.0; nx];
        let mut sumsq = vec![0.0; nx];
        for (row, &ci) in v.iter().zip(&c) {
            for x in 0..nx {
                mean[x] += row[x] * ci;
                sumsq[x] += row[x] * row[x];
            }
        }

        self.chol = chol;
        self.v = v;
        self.c = c;
        self.mean = mean;
        self.sumsq = sumsq;
        Ok(())
    }
}

/// Solve `L w = b` for a packed lower-triangular factor.
fn forward_sub(chol: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let mut w = Vec::with_capacity(b.len());
    for (i, row) in chol.iter().take(b.len()).enumerate() {
        let mut s = b[i];
        for (k, wk) in w.iter().enumerate() {
            s -= row[k] * wk;
        }
        w.push(s / row[i]);
    }
    w
}
