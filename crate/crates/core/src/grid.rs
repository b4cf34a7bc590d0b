//! Periodic sample grid and the collocated fields stored on it.

use crate::error::{Error, Result};
use crate::sum::compensated_sum;

/// Minimum number of nodes along each axis.
pub const MIN_NODES: usize = 4;

/// Periodic rectangular grid. Node `(i, j, k)` sits at `(i·hx, j·hy, k·hz)`
/// and the box is `[0, Lx) × [0, Ly) × [0, Lz)` with wrap-around.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    dims: [usize; 3],
    spacing: [f64; 3],
}

impl GridSpec {
    pub fn new(dims: [usize; 3], spacing: [f64; 3]) -> Result<Self> {
        for a in 0..3 {
            if dims[a] < MIN_NODES {
                return Err(Error::InvalidGrid(format!(
                    "axis {a} has {} nodes, need at least {MIN_NODES}",
                    dims[a]
                )));
            }
            if !(spacing[a].is_finite() && spacing[a] > 0.0) {
                return Err(Error::InvalidGrid(format!(
                    "axis {a} spacing {} is not a positive length",
                    spacing[a]
                )));
            }
        }
        Ok(Self { dims, spacing })
    }

    /// Grid with `dims` nodes filling a box of the given side lengths.
    pub fn with_lengths(dims: [usize; 3], lengths: [f64; 3]) -> Result<Self> {
        let spacing = [
            lengths[0] / dims[0] as f64,
            lengths[1] / dims[1] as f64,
            lengths[2] / dims[2] as f64,
        ];
        Self::new(dims, spacing)
    }

    /// `n³` nodes on a cube of side `length`.
    pub fn cubic(n: usize, length: f64) -> Result<Self> {
        Self::with_lengths([n; 3], [length; 3])
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn lengths(&self) -> [f64; 3] {
        [
            self.dims[0] as f64 * self.spacing[0],
            self.dims[1] as f64 * self.spacing[1],
            self.dims[2] as f64 * self.spacing[2],
        ]
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing[0] * self.spacing[1] * self.spacing[2]
    }

    pub fn volume(&self) -> f64 {
        let l = self.lengths();
        l[0] * l[1] * l[2]
    }

    /// Linear index of node `(i, j, k)`; x varies fastest.
    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    /// Inverse of [`GridSpec::index`].
    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.dims[0];
        let r = idx / self.dims[0];
        [i, r % self.dims[1], r / self.dims[1]]
    }

    /// Index of node `(i, j, k)` after periodic wrap of signed coordinates.
    #[inline]
    pub fn wrapped_index(&self, c: [i64; 3]) -> usize {
        let w = |v: i64, n: usize| v.rem_euclid(n as i64) as usize;
        self.index(
            w(c[0], self.dims[0]),
            w(c[1], self.dims[1]),
            w(c[2], self.dims[2]),
        )
    }

    #[inline]
    pub fn position(&self, idx: usize) -> [f64; 3] {
        let c = self.coords(idx);
        [
            c[0] as f64 * self.spacing[0],
            c[1] as f64 * self.spacing[1],
            c[2] as f64 * self.spacing[2],
        ]
    }

    /// Physical wavenumber of FFT bin `m` along `axis`, in `(-π/h, π/h]`.
    #[inline]
    pub fn wavenumber(&self, axis: usize, m: usize) -> f64 {
        let n = self.dims[axis];
        let signed = if m <= n / 2 {
            m as i64
        } else {
            m as i64 - n as i64
        };
        2.0 * std::f64::consts::PI * signed as f64 / self.lengths()[axis]
    }

    pub(crate) fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// One real value per node.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            data: vec![0.0; grid.len()],
            grid,
        }
    }

    pub fn from_vec(grid: GridSpec, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "scalar field has {} values for {} nodes",
                data.len(),
                grid.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("scalar field"));
        }
        Ok(Self { grid, data })
    }

    pub(crate) fn from_vec_unchecked(grid: GridSpec, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), grid.len());
        Self { grid, data }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn([f64; 3]) -> f64) -> Self {
        let data = (0..grid.len()).map(|n| f(grid.position(n))).collect();
        Self { grid, data }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Three real components per node, collocated.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: GridSpec,
    comps: [Vec<f64>; 3],
}

impl VectorField {
    pub fn zeros(grid: GridSpec) -> Self {
        let n = grid.len();
        Self {
            grid,
            comps: [vec![0.0; n], vec![0.0; n], vec![0.0; n]],
        }
    }

    pub fn from_components(grid: GridSpec, comps: [Vec<f64>; 3]) -> Result<Self> {
        for c in &comps {
            if c.len() != grid.len() {
                return Err(Error::InvalidArgument(format!(
                    "vector component has {} values for {} nodes",
                    c.len(),
                    grid.len()
                )));
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("vector field"));
            }
        }
        Ok(Self { grid, comps })
    }

    pub(crate) fn from_components_unchecked(grid: GridSpec, comps: [Vec<f64>; 3]) -> Self {
        Self { grid, comps }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        let mut out = Self::zeros(grid);
        for n in 0..grid.len() {
            let v = f(grid.position(n));
            for (a, c) in out.comps.iter_mut().enumerate() {
                c[n] = v[a];
            }
        }
        out
    }

    /// Same vector at every node.
    pub fn uniform(grid: GridSpec, v: [f64; 3]) -> Self {
        let n = grid.len();
        Self {
            grid,
            comps: [vec![v[0]; n], vec![v[1]; n], vec![v[2]; n]],
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn component(&self, a: usize) -> &[f64] {
        &self.comps[a]
    }

    pub fn component_mut(&mut self, a: usize) -> &mut [f64] {
        &mut self.comps[a]
    }

    pub fn components(&self) -> &[Vec<f64>; 3] {
        &self.comps
    }

    pub fn into_components(self) -> [Vec<f64>; 3] {
        self.comps
    }

    #[inline]
    pub fn at(&self, n: usize) -> [f64; 3] {
        [self.comps[0][n], self.comps[1][n], self.comps[2][n]]
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().all(|c| c.iter().all(|v| v.is_finite()))
    }

    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `self * a + other * b`, node by node.
    pub fn lincomb(&self, a: f64, other: &VectorField, b: f64) -> Result<VectorField> {
        self.grid.check_same(&other.grid)?;
        let comps = std::array::from_fn(|c| {
            self.comps[c]
                .iter()
                .zip(&other.comps[c])
                .map(|(x, y)| a * x + b * y)
                .collect()
        });
        Ok(Self {
            grid: self.grid,
            comps,
        })
    }

    pub fn scaled(&self, s: f64) -> VectorField {
        let comps = std::array::from_fn(|c| self.comps[c].iter().map(|x| s * x).collect());
        Self {
            grid: self.grid,
            comps,
        }
    }

    /// `sqrt(∫ |v|² d³x)`.
    pub fn l2_norm(&self) -> f64 {
        let n = self.grid.len();
        let sq: Vec<f64> = (0..n)
            .map(|i| {
                let v = self.at(i);
                v[0] * v[0] + v[1] * v[1] + v[2] * v[2]
            })
            .collect();
        (compensated_sum(&sq) * self.grid.cell_volume()).sqrt()
    }
}

/// Electric and magnetic fields at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub e: VectorField,
    pub b: VectorField,
    pub t: f64,
}

impl FieldState {
    pub fn new(e: VectorField, b: VectorField, t: f64) -> Result<Self> {
        e.grid().check_same(b.grid())?;
        if !t.is_finite() {
            return Err(Error::NonFinite("state time"));
        }
        Ok(Self { e, b, t })
    }

    pub fn zeros(grid: GridSpec, t: f64) -> Self {
        Self {
            e: VectorField::zeros(grid),
            b: VectorField::zeros(grid),
            t,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        self.e.grid()
    }

    /// Stacked component `a` of `(Ex, Ey, Ez, Bx, By, Bz)`.
    #[inline]
    pub fn stacked(&self, a: usize) -> &[f64] {
        if a < 3 {
            self.e.component(a)
        } else {
            self.b.component(a - 3)
        }
    }

    /// `∫ (E² + B²) d³x`.
    pub fn energy(&self) -> f64 {
        let e = self.e.l2_norm();
        let b = self.b.l2_norm();
        e * e + b * b
    }

    pub fn is_finite(&self) -> bool {
        self.e.is_finite() && self.b.is_finite()
    }

    /// Relative L2 distance `‖self − other‖ / ‖other‖` over both fields.
    pub fn relative_l2_error(&self, reference: &FieldState) -> Result<f64> {
        let de = self.e.lincomb(1.0, &reference.e, -1.0)?.l2_norm();
        let db = self.b.lincomb(1.0, &reference.b, -1.0)?.l2_norm();
        let num = (de * de + db * db).sqrt();
        let den = reference.energy().sqrt();
        Ok(if den == 0.0 { num } else { num / den })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_or_degenerate_grids() {
        assert!(GridSpec::new([3, 8, 8], [1.0; 3]).is_err());
        assert!(GridSpec::new([8, 8, 8], [1.0, 0.0, 1.0]).is_err());
        assert!(GridSpec::new([8, 8, 8], [1.0, f64::NAN, 1.0]).is_err());
        assert!(GridSpec::new([4, 4, 4], [0.5; 3]).is_ok());
    }

    #[test]
    fn index_roundtrip_and_wrap() {
        let g = GridSpec::new([4, 5, 6], [1.0; 3]).unwrap();
        for n in 0..g.len() {
            let c = g.coords(n);
            assert_eq!(g.index(c[0], c[1], c[2]), n);
        }
        assert_eq!(g.wrapped_index([-1, 0, 0]), g.index(3, 0, 0));
        assert_eq!(g.wrapped_index([4, 5, 6]), 0);
    }

    #[test]
    fn wavenumbers_are_signed() {
        let g = GridSpec::cubic(8, 1.0).unwrap();
        let tau = 2.0 * std::f64::consts::PI;
        assert_eq!(g.wavenumber(0, 1), tau);
        assert_eq!(g.wavenumber(0, 4), 4.0 * tau);
        assert_eq!(g.wavenumber(0, 7), -tau);
    }

    #[test]
    fn mismatched_state_rejected() {
        let g1 = GridSpec::cubic(4, 1.0).unwrap();
        let g2 = GridSpec::cubic(4, 2.0).unwrap();
        let r = FieldState::new(VectorField::zeros(g1), VectorField::zeros(g2), 0.0);
        assert_eq!(r, Err(Error::GridMismatch));
    }
}
