//! Second-order staggered (Yee) scheme.
//!
//! Component placement within a cell:
//!
//! ```text
//! Ex (i+½, j,   k  )   Bx (i,   j+½, k+½)
//! Ey (i,   j+½, k  )   By (i+½, j,   k+½)
//! Ez (i,   j,   k+½)   Bz (i+½, j+½, k  )
//! ```
//!
//! Both E and B live at integer times; a step is B-half-kick, E-drift, B-half-kick.
//! Collocated input and output are moved on and off the staggered grid with
//! fourth-order midpoint interpolation.

use crate::current::PreparedCurrent;
use crate::error::{Error, Result};
use crate::grid::{FieldState, GridSpec, VectorField};

/// `out[n] = f[n + delta·ê_axis]` with periodic wrap.
fn roll(grid: &GridSpec, f: &[f64], axis: usize, delta: isize) -> Vec<f64> {
    let d = grid.dims();
    let n = d[axis] as isize;
    let stride = match axis {
        0 => 1,
        1 => d[0],
        _ => d[0] * d[1],
    };
    let mut out = vec![0.0; f.len()];
    for (idx, o) in out.iter_mut().enumerate() {
        let c = ((idx / stride) % d[axis]) as isize;
        let src = (c + delta).rem_euclid(n) as usize;
        *o = f[idx - c as usize * stride + src * stride];
    }
    out
}

/// Four-point midpoint interpolation: `g[i] ≈ f(i + ½)` along `axis`.
fn to_half(grid: &GridSpec, f: &[f64], axis: usize) -> Vec<f64> {
    let m1 = roll(grid, f, axis, -1);
    let p1 = roll(grid, f, axis, 1);
    let p2 = roll(grid, f, axis, 2);
    (0..f.len())
        .map(|n| (-m1[n] + 9.0 * f[n] + 9.0 * p1[n] - p2[n]) / 16.0)
        .collect()
}

/// Inverse placement: `f[i] ≈ g(i − ½)`, i.e. back onto the nodes.
fn from_half(grid: &GridSpec, g: &[f64], axis: usize) -> Vec<f64> {
    let m2 = roll(grid, g, axis, -2);
    let m1 = roll(grid, g, axis, -1);
    let p1 = roll(grid, g, axis, 1);
    (0..g.len())
        .map(|n| (-m2[n] + 9.0 * m1[n] + 9.0 * g[n] - p1[n]) / 16.0)
        .collect()
}

/// Forward difference `(f[i+1] − f[i]) / h` along `axis`.
fn dfwd(grid: &GridSpec, f: &[f64], axis: usize) -> Vec<f64> {
    let h = grid.spacing()[axis];
    roll(grid, f, axis, 1)
        .iter()
        .zip(f)
        .map(|(a, b)| (a - b) / h)
        .collect()
}

/// Backward difference `(f[i] − f[i−1]) / h` along `axis`.
fn dbwd(grid: &GridSpec, f: &[f64], axis: usize) -> Vec<f64> {
    let h = grid.spacing()[axis];
    f.iter()
        .zip(roll(grid, f, axis, -1))
        .map(|(a, b)| (a - b) / h)
        .collect()
}

/// The two axes that B component `a` is offset along.
const B_AXES: [[usize; 2]; 3] = [[1, 2], [0, 2], [0, 1]];

pub struct YeeIntegrator {
    grid: GridSpec,
    e: [Vec<f64>; 3],
    b: [Vec<f64>; 3],
    t0: f64,
    steps: u64,
    dt_last: f64,
    current: PreparedCurrent,
}

impl YeeIntegrator {
    pub fn new(state: &FieldState, current: PreparedCurrent) -> Result<Self> {
        let grid = *state.grid();
        grid.check_same(current.grid())?;
        if !state.is_finite() {
            return Err(Error::NonFinite("initial state"));
        }
        let e = std::array::from_fn(|a| to_half(&grid, state.e.component(a), a));
        let b = std::array::from_fn(|a| {
            let [p, q] = B_AXES[a];
            to_half(&grid, &to_half(&grid, state.b.component(a), p), q)
        });
        Ok(Self {
            grid,
            e,
            b,
            t0: state.t,
            steps: 0,
            dt_last: 0.0,
            current,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn time(&self) -> f64 {
        self.t0 + self.steps as f64 * self.dt_last
    }

    fn curl_e(&self) -> [Vec<f64>; 3] {
        let g = &self.grid;
        let e = &self.e;
        let sub =
            |a: Vec<f64>, b: Vec<f64>| a.iter().zip(&b).map(|(x, y)| x - y).collect::<Vec<_>>();
        [
            sub(dfwd(g, &e[2], 1), dfwd(g, &e[1], 2)),
            sub(dfwd(g, &e[0], 2), dfwd(g, &e[2], 0)),
            sub(dfwd(g, &e[1], 0), dfwd(g, &e[0], 1)),
        ]
    }

    fn curl_b(&self) -> [Vec<f64>; 3] {
        let g = &self.grid;
        let b = &self.b;
        let sub =
            |a: Vec<f64>, b: Vec<f64>| a.iter().zip(&b).map(|(x, y)| x - y).collect::<Vec<_>>();
        [
            sub(dbwd(g, &b[2], 1), dbwd(g, &b[1], 2)),
            sub(dbwd(g, &b[0], 2), dbwd(g, &b[2], 0)),
            sub(dbwd(g, &b[1], 0), dbwd(g, &b[0], 1)),
        ]
    }

    fn kick_b(&mut self, h: f64) {
        let c = self.curl_e();
        for a in 0..3 {
            for (b, d) in self.b[a].iter_mut().zip(&c[a]) {
                *b -= h * d;
            }
        }
    }

    pub fn step(&mut self, dt: f64) -> Result<()> {
        if self.steps > 0 && dt != self.dt_last {
            self.t0 = self.time();
            self.steps = 0;
        }
        self.dt_last = dt;
        let t = self.time();
        self.kick_b(0.5 * dt);
        let c = self.curl_b();
        let j = if self.current.is_zero() {
            None
        } else {
            let s = self.current.sample(t + 0.5 * dt);
            Some(std::array::from_fn::<_, 3, _>(|a| {
                to_half(&self.grid, s.component(a), a)
            }))
        };
        for a in 0..3 {
            for (n, e) in self.e[a].iter_mut().enumerate() {
                let src = j.as_ref().map_or(0.0, |j| j[a][n]);
                *e += dt * (c[a][n] - src);
            }
        }
        self.kick_b(0.5 * dt);
        self.steps += 1;
        let finite = self
            .e
            .iter()
            .chain(self.b.iter())
            .flatten()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Diverged { t: self.time() });
        }
        Ok(())
    }

    /// Fields interpolated back onto the nodes.
    pub fn state(&self) -> FieldState {
        let g = &self.grid;
        let e = std::array::from_fn(|a| from_half(g, &self.e[a], a));
        let b = std::array::from_fn(|a| {
            let [p, q] = B_AXES[a];
            from_half(g, &from_half(g, &self.b[a], q), p)
        });
        FieldState {
            e: VectorField::from_components_unchecked(*g, e),
            b: VectorField::from_components_unchecked(*g, b),
            t: self.time(),
        }
    }

    /// Discrete divergence of the staggered magnetic field (exactly preserved by the scheme).
    pub fn staggered_div_b(&self) -> f64 {
        let g = &self.grid;
        let d: Vec<Vec<f64>> = (0..3).map(|a| dfwd(g, &self.b[a], a)).collect();
        (0..g.len())
            .map(|n| (d[0][n] + d[1][n] + d[2][n]).abs())
            .fold(0.0, f64::max)
    }

    pub fn current(&self) -> &PreparedCurrent {
        &self.current
    }
}
