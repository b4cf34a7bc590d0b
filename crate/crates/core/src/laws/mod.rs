//! Quadratic two-point balance laws `∂t ρ + ∇·𝒥 = S` for Maxwell fields.
//!
//! With `F = (Ex, Ey, Ez, Bx, By, Bz)` at `(x, t)` and `G` the raw components
//! of the (possibly time-shifted) state at `Âx`:
//!
//! ```text
//! ρ   = W[a][b]    F_a G_b
//! 𝒥_i = K[i][a][b] F_a G_b
//! S   = T[a][c] F_a J_c(Âx) + T[a][3+c] G_a J_c(x)      (c < 3)
//! ```

mod balance;
mod discover;
mod eval;
mod file;

pub use balance::{
    balance_streaming, residual, residual_with, BalanceOptions, BalanceReport, BalanceTracker,
    HistoryBuffer, TimeStencil,
};
pub use discover::{
    discover_laws, random_ensemble, DiscoveryOptions, DiscoveryResult, LawCandidate, MIN_ENSEMBLE,
};
pub use eval::{density, flux, source_power, LawEvaluator};

use crate::affine::{det3, AffineMap, Mat3};
use crate::error::{Error, Result};
use crate::grid::GridSpec;

pub type Mat6 = [[f64; 6]; 6];
pub type Flux6 = [[[f64; 6]; 6]; 3];

/// Number of free coefficients in `(W, K)`.
pub const COEFFICIENTS: usize = 36 + 108;

const LEVI: [[[f64; 3]; 3]; 3] = {
    let mut e = [[[0.0; 3]; 3]; 3];
    e[0][1][2] = 1.0;
    e[1][2][0] = 1.0;
    e[2][0][1] = 1.0;
    e[0][2][1] = -1.0;
    e[2][1][0] = -1.0;
    e[1][0][2] = -1.0;
    e
};

#[derive(Debug, Clone, PartialEq)]
pub struct TwoPointLawSpec {
    pub name: String,
    pub map: AffineMap,
    /// Partner state is taken `time_shift` steps ahead.
    pub time_shift: usize,
    pub w: Mat6,
    pub k: Flux6,
    pub source: Mat6,
}

/// Current-work tensor implied by `W` through `∂t E = … − J`.
pub fn source_from_mixing(w: &Mat6) -> Mat6 {
    let mut t = [[0.0; 6]; 6];
    for a in 0..6 {
        for c in 0..3 {
            t[a][c] = -w[a][c];
            t[a][3 + c] = -w[c][a];
        }
    }
    t
}

impl TwoPointLawSpec {
    pub fn new(
        name: impl Into<String>,
        map: AffineMap,
        time_shift: usize,
        w: Mat6,
        k: Flux6,
        source: Mat6,
    ) -> Result<Self> {
        let finite = w
            .iter()
            .flatten()
            .chain(k.iter().flatten().flatten())
            .chain(source.iter().flatten());
        if !finite.into_iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("law coefficients"));
        }
        Ok(Self {
            name: name.into(),
            map,
            time_shift,
            w,
            k,
            source,
        })
    }

    /// Law whose source term is derived from `W`.
    pub fn from_mixing(
        name: impl Into<String>,
        map: AffineMap,
        time_shift: usize,
        w: Mat6,
        k: Flux6,
    ) -> Result<Self> {
        let s = source_from_mixing(&w);
        Self::new(name, map, time_shift, w, k, s)
    }

    /// `(W, K)` flattened row-major, W first.
    pub fn coefficients(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.w.iter().flatten().copied().collect();
        v.extend(self.k.iter().flatten().flatten());
        v
    }

    /// Inverse of [`coefficients`](Self::coefficients); the source follows from `W`.
    pub fn from_coefficients(
        name: impl Into<String>,
        map: AffineMap,
        time_shift: usize,
        c: &[f64],
    ) -> Result<Self> {
        if c.len() != COEFFICIENTS {
            return Err(Error::InvalidArgument(format!(
                "expected {COEFFICIENTS} coefficients, got {}",
                c.len()
            )));
        }
        let mut w = [[0.0; 6]; 6];
        let mut k = [[[0.0; 6]; 6]; 3];
        for a in 0..6 {
            for b in 0..6 {
                w[a][b] = c[6 * a + b];
                for i in 0..3 {
                    k[i][a][b] = c[36 + 36 * i + 6 * a + b];
                }
            }
        }
        Self::from_mixing(name, map, time_shift, w, k)
    }

    /// Frobenius norm of `(W, K)`.
    pub fn norm(&self) -> f64 {
        self.coefficients()
            .iter()
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.w.iter_mut().flatten().for_each(|v| *v *= s);
        out.k.iter_mut().flatten().flatten().for_each(|v| *v *= s);
        out.source.iter_mut().flatten().for_each(|v| *v *= s);
        out
    }

    /// Copy with unit [`norm`](Self::norm).
    pub fn normalized(&self) -> Self {
        let n = self.norm();
        if n == 0.0 {
            self.clone()
        } else {
            self.scaled(1.0 / n)
        }
    }

    /// `W = Wᵀ`, i.e. the density is unchanged by exchanging the two points
    /// when the map is an involution.
    pub fn is_swap_symmetric(&self) -> bool {
        (0..6).all(|a| (0..6).all(|b| self.w[a][b] == self.w[b][a]))
    }
}

fn poynting() -> Flux6 {
    let mut k = [[[0.0; 6]; 6]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for l in 0..3 {
                k[i][j][3 + l] += LEVI[i][j][l];
                k[i][3 + l][j] += LEVI[i][j][l];
            }
        }
    }
    k
}

fn identity6() -> Mat6 {
    std::array::from_fn(|a| std::array::from_fn(|b| if a == b { 1.0 } else { 0.0 }))
}

/// `∂t(E·E + B·B) + ∇·(2 E×B) = −2 J·E`.
pub fn law_local_energy() -> TwoPointLawSpec {
    TwoPointLawSpec::from_mixing(
        "local-energy",
        AffineMap::identity(),
        0,
        identity6(),
        poynting(),
    )
    .expect("finite coefficients")
}

/// Parity law: `ρ = B(x)·E(−x) + B(−x)·E(x)`, `𝒥 = E(x)×E(−x) − B(x)×B(−x)`,
/// `S = −(B(x)·J(−x) + B(−x)·J(x))`.
pub fn law_inversion() -> TwoPointLawSpec {
    let mut w = [[0.0; 6]; 6];
    let mut k = [[[0.0; 6]; 6]; 3];
    for i in 0..3 {
        w[3 + i][i] = 1.0;
        w[i][3 + i] = 1.0;
        for j in 0..3 {
            for l in 0..3 {
                k[i][j][l] = LEVI[i][j][l];
                k[i][3 + j][3 + l] = -LEVI[i][j][l];
            }
        }
    }
    TwoPointLawSpec::from_mixing("inversion", AffineMap::inversion(), 0, w, k)
        .expect("finite coefficients")
}

/// Rotation law with partner `F'(x) = αᵀF(αx)`:
/// `ρ = E·E' + B·B'`, `𝒥 = E×B' + E'×B`, `S = −(J·E' + J'·E)`.
pub fn law_rotation(map: &AffineMap) -> Result<TwoPointLawSpec> {
    if map.beta().iter().any(|&b| b != 0.0) {
        return Err(Error::InvalidMap("rotation law expects β = 0".into()));
    }
    let alpha: &Mat3 = map.alpha();
    if !map.is_proper_rotation() {
        return Err(Error::NotARotation { det: det3(alpha) });
    }
    let mut w = [[0.0; 6]; 6];
    let mut k = [[[0.0; 6]; 6]; 3];
    for i in 0..3 {
        for j in 0..3 {
            w[i][j] = alpha[j][i];
            w[3 + i][3 + j] = alpha[j][i];
            for l in 0..3 {
                for m in 0..3 {
                    // (E × B')_i with B'_m = α_lm G_{3+l}
                    k[i][j][3 + l] += LEVI[i][j][m] * alpha[l][m];
                    // (E' × B)_i with E'_j = α_lj G_l
                    k[i][3 + m][l] += LEVI[i][j][m] * alpha[l][j];
                }
            }
        }
    }
    TwoPointLawSpec::from_mixing("rotation", *map, 0, w, k)
}

/// `ρ = E(x,t)·E(x+Δx,t+m dt) + B(x,t)·B(x+Δx,t+m dt)` with the two-point Poynting flux.
pub fn law_translation(grid: &GridSpec, nodes: [i64; 3], time_shift: usize) -> TwoPointLawSpec {
    let map = AffineMap::node_translation(grid, nodes);
    TwoPointLawSpec::from_mixing("translation", map, time_shift, identity6(), poynting())
        .expect("finite coefficients")
}

#[cfg(test)]
mod tests;
