//! Affine point maps `x ↦ αx + β` on the periodic box and field pullback.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::Fft3;
use crate::grid::{GridSpec, ScalarField, VectorField};

pub type Mat3 = [[f64; 3]; 3];

pub const IDENTITY: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

pub fn det3(m: &Mat3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

pub fn transpose3(m: &Mat3) -> Mat3 {
    std::array::from_fn(|i| std::array::from_fn(|j| m[j][i]))
}

pub fn matmul3(a: &Mat3, b: &Mat3) -> Mat3 {
    std::array::from_fn(|i| std::array::from_fn(|j| (0..3).map(|k| a[i][k] * b[k][j]).sum()))
}

pub fn matvec3(a: &Mat3, v: &[f64; 3]) -> [f64; 3] {
    std::array::from_fn(|i| a[i][0] * v[0] + a[i][1] * v[1] + a[i][2] * v[2])
}

fn inverse3(m: &Mat3) -> Option<Mat3> {
    let d = det3(m);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    let c =
        |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
    let adj = [
        [c(1, 2, 1, 2), -c(0, 2, 1, 2), c(0, 1, 1, 2)],
        [-c(1, 2, 0, 2), c(0, 2, 0, 2), -c(0, 1, 0, 2)],
        [c(1, 2, 0, 1), -c(0, 2, 0, 1), c(0, 1, 0, 1)],
    ];
    Some(std::array::from_fn(|i| {
        std::array::from_fn(|j| adj[i][j] / d)
    }))
}

/// `(axis, sign)` per row if `m` is a signed permutation matrix.
fn signed_permutation(m: &Mat3) -> Option<[(usize, i64); 3]> {
    let mut out = [(0, 1); 3];
    let mut used = [false; 3];
    for (r, row) in m.iter().enumerate() {
        let nz: Vec<usize> = (0..3).filter(|&c| row[c] != 0.0).collect();
        if nz.len() != 1 {
            return None;
        }
        let c = nz[0];
        let s = if row[c] == 1.0 {
            1
        } else if row[c] == -1.0 {
            -1
        } else {
            return None;
        };
        if used[c] {
            return None;
        }
        used[c] = true;
        out[r] = (c, s);
    }
    Some(out)
}

/// How a map is applied to sampled fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exactness {
    /// Nodes map onto nodes; pullback is an index permutation.
    GridExact,
    /// Pullback evaluates the band-limited Fourier interpolant.
    Interpolated,
}

/// Spatial automorphism `x ↦ αx + β` taken modulo the periodic box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMap {
    alpha: Mat3,
    beta: [f64; 3],
    exactness: Exactness,
}

impl AffineMap {
    /// Validates invertibility and, for `GridExact`, that the map sends the
    /// nodes of `grid` onto nodes.
    pub fn new(alpha: Mat3, beta: [f64; 3], exactness: Exactness, grid: &GridSpec) -> Result<Self> {
        let map = Self::unchecked(alpha, beta, exactness)?;
        if exactness == Exactness::GridExact {
            map.node_permutation(grid)?;
        }
        Ok(map)
    }

    /// Picks `GridExact` when the map permits it on `grid`.
    pub fn classify(alpha: Mat3, beta: [f64; 3], grid: &GridSpec) -> Result<Self> {
        let exact = Self::unchecked(alpha, beta, Exactness::GridExact)?;
        if exact.node_permutation(grid).is_ok() {
            Ok(exact)
        } else {
            Self::unchecked(alpha, beta, Exactness::Interpolated)
        }
    }

    fn unchecked(alpha: Mat3, beta: [f64; 3], exactness: Exactness) -> Result<Self> {
        if alpha
            .iter()
            .flatten()
            .chain(beta.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::InvalidMap("non-finite entries".into()));
        }
        let d = det3(&alpha);
        let scale = alpha.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        if d.abs() <= 1e-12 * scale.powi(3) || d == 0.0 {
            return Err(Error::InvalidMap(format!("alpha is singular (det = {d})")));
        }
        Ok(Self {
            alpha,
            beta,
            exactness,
        })
    }

    pub fn identity() -> Self {
        Self {
            alpha: IDENTITY,
            beta: [0.0; 3],
            exactness: Exactness::GridExact,
        }
    }

    /// `x ↦ -x`.
    pub fn inversion() -> Self {
        let mut alpha = IDENTITY;
        for (i, row) in alpha.iter_mut().enumerate() {
            row[i] = -1.0;
        }
        Self {
            alpha,
            beta: [0.0; 3],
            exactness: Exactness::GridExact,
        }
    }

    /// Translation by whole node counts.
    pub fn node_translation(grid: &GridSpec, nodes: [i64; 3]) -> Self {
        let h = grid.spacing();
        let beta = std::array::from_fn(|a| nodes[a] as f64 * h[a]);
        Self {
            alpha: IDENTITY,
            beta,
            exactness: Exactness::GridExact,
        }
    }

    /// Rotation by `quarter_turns · 90°` about a coordinate axis.
    pub fn quarter_turn(axis: usize, quarter_turns: i64, grid: &GridSpec) -> Result<Self> {
        if axis > 2 {
            return Err(Error::InvalidMap(format!("axis {axis} out of range")));
        }
        let q = quarter_turns.rem_euclid(4);
        let (c, s) = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)][q as usize];
        let (p, r) = ((axis + 1) % 3, (axis + 2) % 3);
        let mut alpha = [[0.0; 3]; 3];
        alpha[axis][axis] = 1.0;
        alpha[p][p] = c;
        alpha[p][r] = -s;
        alpha[r][p] = s;
        alpha[r][r] = c;
        Self::new(alpha, [0.0; 3], Exactness::GridExact, grid)
    }

    pub fn alpha(&self) -> &Mat3 {
        &self.alpha
    }

    pub fn beta(&self) -> [f64; 3] {
        self.beta
    }

    pub fn exactness(&self) -> Exactness {
        self.exactness
    }

    pub fn det(&self) -> f64 {
        det3(&self.alpha)
    }

    pub fn is_identity(&self) -> bool {
        self.alpha == IDENTITY && self.beta == [0.0; 3]
    }

    pub fn apply(&self, x: [f64; 3]) -> [f64; 3] {
        let y = matvec3(&self.alpha, &x);
        std::array::from_fn(|a| y[a] + self.beta[a])
    }

    pub fn inverse(&self) -> Self {
        // invertibility was checked at construction
        let inv = inverse3(&self.alpha).expect("validated map is invertible");
        let b = matvec3(&inv, &self.beta);
        Self {
            alpha: inv,
            beta: [-b[0], -b[1], -b[2]],
            exactness: self.exactness,
        }
    }

    /// True when `α` is orthogonal with determinant +1.
    pub fn is_proper_rotation(&self) -> bool {
        let p = matmul3(&transpose3(&self.alpha), &self.alpha);
        let ortho = (0..3).all(|i| (0..3).all(|j| (p[i][j] - IDENTITY[i][j]).abs() <= 1e-12));
        ortho && (self.det() - 1.0).abs() <= 1e-12
    }

    /// Source node index for every target node, when the map is grid-exact.
    pub fn node_permutation(&self, grid: &GridSpec) -> Result<Vec<usize>> {
        let perm = signed_permutation(&self.alpha).ok_or_else(|| {
            Error::InvalidMap("grid-exact maps need a signed permutation matrix".into())
        })?;
        let d = grid.dims();
        let h = grid.spacing();
        let mut shift = [0i64; 3];
        for a in 0..3 {
            let (src, _) = perm[a];
            if d[src] != d[a] || h[src] != h[a] {
                return Err(Error::InvalidMap(format!(
                    "axis {a} is fed from axis {src} with a different sampling"
                )));
            }
            let q = self.beta[a] / h[a];
            let r = q.round();
            if (q - r).abs() > 1e-9 * q.abs().max(1.0) {
                return Err(Error::InvalidMap(format!(
                    "beta[{a}] = {} is not a whole number of nodes",
                    self.beta[a]
                )));
            }
            shift[a] = r as i64;
        }
        Ok((0..grid.len())
            .map(|n| {
                let c = grid.coords(n);
                let src: [i64; 3] = std::array::from_fn(|a| {
                    let (axis, sign) = perm[a];
                    sign * c[axis] as i64 + shift[a]
                });
                grid.wrapped_index(src)
            })
            .collect())
    }
}

/// Precomputed pullback for one map on one grid.
pub struct Pullback {
    grid: GridSpec,
    kind: PullbackKind,
}

enum PullbackKind {
    Permute(Vec<usize>),
    /// Fractional translation followed by an exact permutation.
    ShiftPermute {
        fft: Box<Fft3>,
        phase: Vec<Complex64>,
        perm: Vec<usize>,
    },
    /// Direct evaluation of the trigonometric interpolant at mapped points.
    General {
        fft: Box<Fft3>,
        map: AffineMap,
    },
}

impl Pullback {
    pub fn new(map: &AffineMap, grid: &GridSpec) -> Result<Self> {
        let kind = match map.exactness {
            Exactness::GridExact => PullbackKind::Permute(map.node_permutation(grid)?),
            Exactness::Interpolated => {
                let linear = AffineMap {
                    beta: [0.0; 3],
                    ..*map
                };
                match linear.node_permutation(grid) {
                    Ok(perm) => {
                        // F(αx + β) = (T_β F)(αx) with T_β F(y) = F(y + β)
                        let fft = Box::new(Fft3::new(*grid));
                        let d = grid.dims();
                        let phase = (0..grid.len())
                            .map(|idx| {
                                let c = grid.coords(idx);
                                (0..3).fold(Complex64::new(1.0, 0.0), |acc, a| {
                                    let arg = fft.k(a, c[a]) * map.beta[a];
                                    let f = if d[a].is_multiple_of(2) && c[a] == d[a] / 2 {
                                        Complex64::new(arg.cos(), 0.0)
                                    } else {
                                        Complex64::new(arg.cos(), arg.sin())
                                    };
                                    acc * f
                                })
                            })
                            .collect();
                        PullbackKind::ShiftPermute { fft, phase, perm }
                    }
                    Err(_) => PullbackKind::General {
                        fft: Box::new(Fft3::new(*grid)),
                        map: *map,
                    },
                }
            }
        };
        Ok(Self { grid: *grid, kind })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// `g(x) = f(αx + β)` for one scalar component.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        match &self.kind {
            PullbackKind::Permute(p) => p.iter().map(|&s| f[s]).collect(),
            PullbackKind::ShiftPermute { fft, phase, perm } => {
                let mut s = fft.forward_real(f);
                for (z, p) in s.iter_mut().zip(phase) {
                    *z *= p;
                }
                let shifted = fft.inverse_real(&s);
                perm.iter().map(|&i| shifted[i]).collect()
            }
            PullbackKind::General { fft, map } => evaluate_interpolant(fft, f, map),
        }
    }

    pub fn apply_vector(&self, v: &VectorField) -> Result<VectorField> {
        self.grid.check_same(v.grid())?;
        let comps = std::array::from_fn(|a| self.apply(v.component(a)));
        Ok(VectorField::from_components_unchecked(self.grid, comps))
    }

    pub fn apply_scalar(&self, s: &ScalarField) -> Result<ScalarField> {
        self.grid.check_same(s.grid())?;
        Ok(ScalarField::from_vec_unchecked(
            self.grid,
            self.apply(s.values()),
        ))
    }
}

fn evaluate_interpolant(fft: &Fft3, f: &[f64], map: &AffineMap) -> Vec<f64> {
    let grid = *fft.grid();
    let d = grid.dims();
    let spectrum = fft.forward_real(f);
    let n_total = grid.len() as f64;
    let cmax = spectrum.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    // (coefficient, wavevector) with Nyquist bins split evenly between ±k
    let mut modes: Vec<(Complex64, [f64; 3])> = Vec::new();
    for (idx, &c) in spectrum.iter().enumerate() {
        if c.norm() <= 1e-15 * cmax {
            continue;
        }
        let cc = grid.coords(idx);
        let mut variants: Vec<(f64, [f64; 3])> = vec![(1.0, [0.0; 3])];
        for a in 0..3 {
            let k = fft.k(a, cc[a]);
            let nyq = d[a].is_multiple_of(2) && cc[a] == d[a] / 2;
            variants = variants
                .into_iter()
                .flat_map(|(w, kv)| {
                    let mut p = kv;
                    p[a] = k;
                    if nyq {
                        let mut q = kv;
                        q[a] = -k;
                        vec![(w * 0.5, p), (w * 0.5, q)]
                    } else {
                        vec![(w, p)]
                    }
                })
                .collect();
        }
        for (w, kv) in variants {
            modes.push((c * (w / n_total), kv));
        }
    }
    (0..grid.len())
        .map(|n| {
            let y = map.apply(grid.position(n));
            let mut acc = crate::sum::NeumaierSum::new();
            for (c, k) in &modes {
                let arg = k[0] * y[0] + k[1] * y[1] + k[2] * y[2];
                acc.add(c.re * arg.cos() - c.im * arg.sin());
            }
            acc.value()
        })
        .collect()
}

/// `result(x) = field(αx + β mod L)`, componentwise.
pub fn pullback(field: &VectorField, map: &AffineMap) -> Result<VectorField> {
    Pullback::new(map, field.grid())?.apply_vector(field)
}
