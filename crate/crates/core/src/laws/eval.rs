//! Pointwise evaluation of density, flux and source for one law on one grid.

use super::{Mat6, TwoPointLawSpec};
use crate::affine::Pullback;
use crate::current::{CurrentSpec, PreparedCurrent};
use crate::error::Result;
use crate::fft::Fft3;
use crate::grid::{FieldState, GridSpec, ScalarField, VectorField};
use crate::ops::divergence_spectral;

pub type Components = [Vec<f64>; 6];

/// `out += Σ c[a][b] f_a g_b`, skipping zero coefficients.
fn accumulate(c: &Mat6, f: [&[f64]; 6], g: [&[f64]; 6], out: &mut [f64]) {
    for a in 0..6 {
        for b in 0..6 {
            let w = c[a][b];
            if w == 0.0 {
                continue;
            }
            for ((o, x), y) in out.iter_mut().zip(f[a]).zip(g[b]) {
                *o += w * x * y;
            }
        }
    }
}

fn stacked(s: &FieldState) -> [&[f64]; 6] {
    std::array::from_fn(|a| s.stacked(a))
}

fn refs(c: &Components) -> [&[f64]; 6] {
    std::array::from_fn(|a| c[a].as_slice())
}

/// A law prepared on a grid, with its pullback and spectral operators cached.
pub struct LawEvaluator {
    law: TwoPointLawSpec,
    grid: GridSpec,
    pullback: Pullback,
    fft: Fft3,
}

impl LawEvaluator {
    pub fn new(law: &TwoPointLawSpec, grid: &GridSpec) -> Result<Self> {
        Ok(Self {
            law: law.clone(),
            grid: *grid,
            pullback: Pullback::new(&law.map, grid)?,
            fft: Fft3::new(*grid),
        })
    }

    pub fn law(&self) -> &TwoPointLawSpec {
        &self.law
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Raw components of `shifted` pulled back to `Âx`.
    pub fn partner(&self, shifted: &FieldState) -> Result<Components> {
        self.grid.check_same(shifted.grid())?;
        Ok(std::array::from_fn(|a| {
            self.pullback.apply(shifted.stacked(a))
        }))
    }

    pub fn density_with(&self, now: &FieldState, g: &Components) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len()];
        accumulate(&self.law.w, stacked(now), refs(g), &mut out);
        out
    }

    pub fn flux_with(&self, now: &FieldState, g: &Components) -> [Vec<f64>; 3] {
        std::array::from_fn(|i| {
            let mut out = vec![0.0; self.grid.len()];
            accumulate(&self.law.k[i], stacked(now), refs(g), &mut out);
            out
        })
    }

    /// Spectral divergence of the flux.
    pub fn flux_divergence_with(&self, now: &FieldState, g: &Components) -> Vec<f64> {
        let f = self.flux_with(now, g);
        divergence_spectral(&self.fft, [&f[0], &f[1], &f[2]])
    }

    /// `S` given `J(x, t_now)` and `J(·, t_shifted)` sampled on the nodes.
    pub fn source_with(
        &self,
        now: &FieldState,
        g: &Components,
        j_now: &VectorField,
        j_shifted: &VectorField,
    ) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len()];
        let jm: [Vec<f64>; 3] =
            std::array::from_fn(|c| self.pullback.apply(j_shifted.component(c)));
        let zero = vec![0.0; self.grid.len()];
        let t = &self.law.source;
        // split T into the F·J(Âx) and G·J(x) halves
        let mut lo = [[0.0; 6]; 6];
        let mut hi = [[0.0; 6]; 6];
        for a in 0..6 {
            for c in 0..3 {
                lo[a][c] = t[a][c];
                hi[a][c] = t[a][3 + c];
            }
        }
        let jm6: [&[f64]; 6] = [&jm[0], &jm[1], &jm[2], &zero, &zero, &zero];
        let jn6: [&[f64]; 6] = [
            j_now.component(0),
            j_now.component(1),
            j_now.component(2),
            &zero,
            &zero,
            &zero,
        ];
        accumulate(&lo, stacked(now), jm6, &mut out);
        accumulate(&hi, refs(g), jn6, &mut out);
        out
    }

    pub fn density(&self, now: &FieldState, shifted: &FieldState) -> Result<ScalarField> {
        let g = self.partner(shifted)?;
        self.grid.check_same(now.grid())?;
        ScalarField::from_vec(self.grid, self.density_with(now, &g))
    }

    pub fn flux(&self, now: &FieldState, shifted: &FieldState) -> Result<VectorField> {
        let g = self.partner(shifted)?;
        self.grid.check_same(now.grid())?;
        VectorField::from_components(self.grid, self.flux_with(now, &g))
    }

    pub fn source_power(
        &self,
        now: &FieldState,
        shifted: &FieldState,
        current: &PreparedCurrent,
    ) -> Result<ScalarField> {
        self.grid.check_same(now.grid())?;
        self.grid.check_same(current.grid())?;
        if current.is_zero() {
            return Ok(ScalarField::zeros(self.grid));
        }
        let g = self.partner(shifted)?;
        let out = self.source_with(now, &g, &current.sample(now.t), &current.sample(shifted.t));
        ScalarField::from_vec(self.grid, out)
    }
}

/// `ρ(x) = W_ab F_a(x) F'_b(Âx)` with `F'` the state at `t + m·dt`.
pub fn density(
    law: &TwoPointLawSpec,
    now: &FieldState,
    shifted: &FieldState,
) -> Result<ScalarField> {
    LawEvaluator::new(law, now.grid())?.density(now, shifted)
}

pub fn flux(law: &TwoPointLawSpec, now: &FieldState, shifted: &FieldState) -> Result<VectorField> {
    LawEvaluator::new(law, now.grid())?.flux(now, shifted)
}

pub fn source_power(
    law: &TwoPointLawSpec,
    now: &FieldState,
    shifted: &FieldState,
    current: &CurrentSpec,
) -> Result<ScalarField> {
    let j = PreparedCurrent::new(current, now.grid())?;
    LawEvaluator::new(law, now.grid())?.source_power(now, shifted, &j)
}
