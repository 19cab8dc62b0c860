//! Uncertainty-parameterized kernels, Gram matrices over the decision grid,
//! and their eigenvalue spectra.
//!
//! Each uncertainty draw carries a parameter `delta` that selects a kernel
//! through a configurable lengthscale map. The spectra feed the information
//! gain bounds in [`crate::regret`].

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Tolerance below which a computed eigenvalue counts as a PSD violation.
/// Values in `(-TOL_PSD, 0)` are clamped to zero.
pub const TOL_PSD: f64 = 1e-8;

/// The finite decision domain: an ordered list of points. A point's identity
/// is its index; values are never compared for equality after construction.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Grid {
    points: Vec<f64>,
}

impl Grid {
    /// Build a grid from explicit points, rejecting duplicates.
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty("grid"));
        }
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_by(|&a, &b| points[a].total_cmp(&points[b]));
        for w in order.windows(2) {
            if points[w[0]] == points[w[1]] {
                return Err(Error::DuplicateGridPoint(w[0], w[1]));
            }
        }
        Ok(Grid { points })
    }

    /// Regular grid `{min, min+step, ...}` up to and including `max`
    /// (within half a step).
    pub fn from_range(min: f64, max: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) {
            return Err(Error::ParamRange {
                param: "grid step",
                range: "(0, inf)",
                value: step,
            });
        }
        if max < min {
            return Err(Error::ParamRange {
                param: "grid max",
                range: "[min, inf)",
                value: max,
            });
        }
        let n = ((max - min) / step + 0.5).floor() as usize + 1;
        Grid::new((0..n).map(|i| min + step * i as f64).collect())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, index: usize) -> Result<f64> {
        self.points
            .get(index)
            .copied()
            .ok_or(Error::IndexOutOfBounds {
                what: "grid",
                index,
                len: self.points.len(),
            })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }
}

/// Affine map from the uncertainty parameter to a kernel lengthscale,
/// `l(delta) = base + slope * delta`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LengthscaleMap {
    pub base: f64,
    pub slope: f64,
}

impl Default for LengthscaleMap {
    fn default() -> Self {
        LengthscaleMap {
            base: 0.05,
            slope: 0.01,
        }
    }
}

impl LengthscaleMap {
    pub fn lengthscale(&self, delta: f64) -> f64 {
        self.base + self.slope * delta
    }
}

/// Kernel families. Only the squared exponential is required; the enum is an
/// extension point for other stationary kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[non_exhaustive]
pub enum KernelFamily {
    SquaredExponential,
}

/// A kernel selected by an uncertainty draw: family, the draw's `delta`, and
/// the map that turns `delta` into a lengthscale.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub delta: f64,
    pub lengthscale_map: LengthscaleMap,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, delta: f64, lengthscale_map: LengthscaleMap) -> Result<Self> {
        let spec = KernelSpec {
            family,
            delta,
            lengthscale_map,
        };
        let l = spec.lengthscale();
        if !(l > 0.0) {
            return Err(Error::NonPositiveLengthscale(l));
        }
        Ok(spec)
    }

    /// Squared-exponential kernel with the default lengthscale map.
    pub fn squared_exponential(delta: f64) -> Result<Self> {
        KernelSpec::new(
            KernelFamily::SquaredExponential,
            delta,
            LengthscaleMap::default(),
        )
    }

    pub fn lengthscale(&self) -> f64 {
        self.lengthscale_map.lengthscale(self.delta)
    }
}

/// Evaluate the kernel at a pair of points: `exp(-(x1-x2)^2 / l(delta)^2)`
/// for the squared-exponential family.
pub fn kernel_eval(spec: &KernelSpec, x1: f64, x2: f64) -> Result<f64> {
    let l = spec.lengthscale();
    if !(l > 0.0) {
        return Err(Error::NonPositiveLengthscale(l));
    }
    match spec.family {
        KernelFamily::SquaredExponential => {
            let d = x1 - x2;
            Ok((-(d * d) / (l * l)).exp())
        }
    }
}

/// Gram matrix of the kernel over the grid. Symmetric with unit diagonal for
/// the squared-exponential family.
pub fn kernel_matrix(spec: &KernelSpec, grid: &Grid) -> Result<DMatrix<f64>> {
    let n = grid.len();
    if n == 0 {
        return Err(Error::Empty("grid"));
    }
    let pts = grid.points();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = kernel_eval(spec, pts[i], pts[i])?;
        for j in 0..i {
            let v = kernel_eval(spec, pts[i], pts[j])?;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

/// Eigenvalues of a kernel matrix, sorted descending, tiny negatives clamped.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct KernelSpectrum {
    eigenvalues: Vec<f64>,
}

impl KernelSpectrum {
    /// Descending, non-negative eigenvalues.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Sum of all eigenvalues (the trace of the kernel matrix).
    pub fn sum(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    /// Sum of the eigenvalues ranked strictly below `t_star` (1-indexed rank).
    pub fn tail_sum(&self, t_star: usize) -> f64 {
        self.eigenvalues.iter().skip(t_star).sum()
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }
}

/// Eigendecompose a symmetric PSD matrix into its spectrum.
///
/// Rejects non-symmetric input, clamps eigenvalues in `(-TOL_PSD, 0)` to
/// zero, and verifies the trace identity `sum(eig) = tr(m)` within
/// `TOL_PSD * n`.
pub fn spectrum(m: &DMatrix<f64>) -> Result<KernelSpectrum> {
    let n = m.nrows();
    if n == 0 || m.ncols() != n {
        return Err(Error::Empty("matrix"));
    }
    for i in 0..n {
        for j in 0..i {
            let diff = (m[(i, j)] - m[(j, i)]).abs();
            if diff > TOL_PSD {
                return Err(Error::NotSymmetric { i, j, diff });
            }
        }
    }
    let eig = m.clone().symmetric_eigen();
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    for v in &mut vals {
        if *v < 0.0 {
            if *v < -TOL_PSD {
                return Err(Error::Numerical(format!(
                    "matrix is not PSD: eigenvalue {v:e} below -{TOL_PSD:e}"
                )));
            }
            *v = 0.0;
        }
    }
    vals.sort_by(|a, b| b.total_cmp(a));
    let trace: f64 = (0..n).map(|i| m[(i, i)]).sum();
    let sum: f64 = vals.iter().sum();
    if (sum - trace).abs() > TOL_PSD * n as f64 {
        return Err(Error::Numerical(format!(
            "eigenvalue sum {sum} does not reconstruct trace {trace}"
        )));
    }
    Ok(KernelSpectrum { eigenvalues: vals })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn se(delta: f64) -> KernelSpec {
        KernelSpec::squared_exponential(delta).unwrap()
    }

    #[test]
    fn eval_at_zero_distance_is_one() {
        assert_eq!(kernel_eval(&se(0.3), 0.42, 0.42).unwrap(), 1.0);
    }

    #[test]
    fn eval_matches_direct_formula() {
        // delta = 0 gives lengthscale 0.05; distance 0.05 puts the exponent at -1
        let k = kernel_eval(&se(0.0), 0.0, 0.05).unwrap();
        assert_relative_eq!(k, (-1.0f64).exp(), max_relative = 1e-12);
        // delta = 1 gives lengthscale 0.06
        let k = kernel_eval(&se(1.0), 0.0, 0.06).unwrap();
        assert_relative_eq!(k, (-1.0f64).exp(), max_relative = 1e-12);
    }

    #[test]
    fn non_positive_lengthscale_rejected() {
        let map = LengthscaleMap {
            base: 0.0,
            slope: 0.0,
        };
        assert!(matches!(
            KernelSpec::new(KernelFamily::SquaredExponential, 0.5, map),
            Err(Error::NonPositiveLengthscale(_))
        ));
    }

    #[test]
    fn matrix_single_point() {
        let g = Grid::new(vec![0.3]).unwrap();
        let m = kernel_matrix(&se(0.0), &g).unwrap();
        assert_eq!(m.nrows(), 1);
        assert_eq!(m[(0, 0)], 1.0);
    }

    #[test]
    fn matrix_two_points_elementwise() {
        let g = Grid::new(vec![0.0, 0.05]).unwrap();
        let m = kernel_matrix(&se(0.0), &g).unwrap();
        let e1 = (-1.0f64).exp();
        assert_eq!(m[(0, 0)], 1.0);
        assert_eq!(m[(1, 1)], 1.0);
        assert_relative_eq!(m[(0, 1)], e1, max_relative = 1e-12);
        assert_eq!(m[(0, 1)], m[(1, 0)]);
    }

    #[test]
    fn matrix_unit_diagonal_on_default_grid() {
        let g = Grid::from_range(0.0, 1.0, 0.01).unwrap();
        assert_eq!(g.len(), 101);
        let m = kernel_matrix(&se(0.0), &g).unwrap();
        for i in 0..101 {
            assert_eq!(m[(i, i)], 1.0);
        }
    }

    #[test]
    fn spectrum_identity() {
        let m = DMatrix::identity(5, 5);
        let s = spectrum(&m).unwrap();
        for &v in s.eigenvalues() {
            assert_relative_eq!(v, 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn spectrum_two_by_two_analytic() {
        let a = 0.37;
        let m = DMatrix::from_row_slice(2, 2, &[1.0, a, a, 1.0]);
        let s = spectrum(&m).unwrap();
        assert_relative_eq!(s.eigenvalues()[0], 1.0 + a, max_relative = 1e-12);
        assert_relative_eq!(s.eigenvalues()[1], 1.0 - a, max_relative = 1e-12);
    }

    #[test]
    fn spectrum_trace_identity_on_default_grid() {
        let g = Grid::from_range(0.0, 1.0, 0.01).unwrap();
        let m = kernel_matrix(&se(0.0), &g).unwrap();
        let s = spectrum(&m).unwrap();
        assert!((s.sum() - 101.0).abs() <= 1e-6 * 101.0);
    }

    #[test]
    fn spectrum_rejects_non_symmetric() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.5, 1.0]);
        assert!(matches!(spectrum(&m), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn grid_rejects_duplicates() {
        assert!(matches!(
            Grid::new(vec![0.1, 0.2, 0.1]),
            Err(Error::DuplicateGridPoint(_, _))
        ));
    }

    #[test]
    fn range_grid_endpoints() {
        let g = Grid::from_range(0.0, 1.0, 0.01).unwrap();
        assert_eq!(g.point(0).unwrap(), 0.0);
        assert_relative_eq!(g.point(100).unwrap(), 1.0, max_relative = 1e-12);
    }
}
