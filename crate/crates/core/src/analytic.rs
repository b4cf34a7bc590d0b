//! Closed-form vacuum solutions used as reference data.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{FieldState, GridSpec, VectorField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    /// Travels toward `+ẑ`.
    #[default]
    Forward,
    /// Travels toward `−ẑ`.
    Backward,
}

/// `E = E₀ sin(kz ∓ ωt) x̂`, `B = ±E₀ sin(kz ∓ ωt) ŷ`, `ω = k`, `k = 2π·mode/L_z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneWaveSpec {
    pub amplitude: f64,
    pub mode: u32,
    #[serde(default)]
    pub direction: Direction,
}

impl PlaneWaveSpec {
    pub fn new(amplitude: f64, mode: u32) -> Self {
        Self {
            amplitude,
            mode,
            direction: Direction::Forward,
        }
    }

    pub fn reversed(self) -> Self {
        let direction = match self.direction {
            Direction::Forward => Direction::Backward,
            Direction::Backward => Direction::Forward,
        };
        Self { direction, ..self }
    }

    pub fn wavenumber(&self, grid: &GridSpec) -> f64 {
        2.0 * PI * self.mode as f64 / grid.lengths()[2]
    }

    pub fn omega(&self, grid: &GridSpec) -> f64 {
        self.wavenumber(grid)
    }

    pub fn wavelength(&self, grid: &GridSpec) -> f64 {
        grid.lengths()[2] / self.mode as f64
    }

    pub fn period(&self, grid: &GridSpec) -> f64 {
        self.wavelength(grid)
    }

    fn validate(&self, grid: &GridSpec) -> Result<()> {
        if !self.amplitude.is_finite() {
            return Err(Error::NonFinite("plane-wave amplitude"));
        }
        let nz = grid.dims()[2];
        if self.mode == 0 || 2 * self.mode as usize >= nz {
            return Err(Error::InvalidWavenumber(format!(
                "mode {} must lie in 1..{} for {nz} nodes along z",
                self.mode,
                nz.div_ceil(2)
            )));
        }
        Ok(())
    }
}

pub fn plane_wave(spec: &PlaneWaveSpec, grid: &GridSpec, t: f64) -> Result<FieldState> {
    spec.validate(grid)?;
    let k = spec.wavenumber(grid);
    let (s, sb) = match spec.direction {
        Direction::Forward => (-1.0, 1.0),
        Direction::Backward => (1.0, -1.0),
    };
    let e0 = spec.amplitude;
    let e = VectorField::from_fn(*grid, |x| [e0 * (k * x[2] + s * k * t).sin(), 0.0, 0.0]);
    let b = VectorField::from_fn(*grid, |x| {
        [0.0, sb * e0 * (k * x[2] + s * k * t).sin(), 0.0]
    });
    FieldState::new(e, b, t)
}

/// Sum of the forward and backward travelers of `spec`.
pub fn standing_wave(spec: &PlaneWaveSpec, grid: &GridSpec, t: f64) -> Result<FieldState> {
    let fwd = plane_wave(
        &PlaneWaveSpec {
            direction: Direction::Forward,
            ..*spec
        },
        grid,
        t,
    )?;
    let bwd = plane_wave(
        &PlaneWaveSpec {
            direction: Direction::Backward,
            ..*spec
        },
        grid,
        t,
    )?;
    FieldState::new(
        fwd.e.lincomb(1.0, &bwd.e, 1.0)?,
        fwd.b.lincomb(1.0, &bwd.b, 1.0)?,
        t,
    )
}

/// `Vol · E₀² · cos(k d)`: the integrated translation density of a plane wave.
pub fn twopoint_energy_analytic(e0: f64, vol: f64, k: f64, d: f64) -> f64 {
    vol * e0 * e0 * (k * d).cos()
}
