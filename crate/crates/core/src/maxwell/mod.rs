//! Time integration of the source-driven Maxwell equations
//! `∂t B = −∇×E`, `∂t E = ∇×B − J` (units with `c = 1`).

mod spectral;
mod yee;

use serde::{Deserialize, Serialize};

pub use spectral::{SpectralIntegrator, ACTIVE_CUTOFF};
pub use yee::YeeIntegrator;

use crate::current::{CurrentSpec, PreparedCurrent};
use crate::error::{Error, Result};
use crate::grid::{FieldState, GridSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Stepper {
    /// Fourier curls with classical RK4.
    #[default]
    Spectral,
    /// Staggered second-order leapfrog.
    Yee,
}

impl Stepper {
    pub fn safety(self) -> f64 {
        match self {
            Stepper::Spectral => 0.5,
            Stepper::Yee => 0.9,
        }
    }

    /// Nominal temporal order of accuracy.
    pub fn order(self) -> u32 {
        match self {
            Stepper::Spectral => 4,
            Stepper::Yee => 2,
        }
    }
}

impl std::str::FromStr for Stepper {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "spectral" | "rk4" => Ok(Stepper::Spectral),
            "yee" | "fdtd" => Ok(Stepper::Yee),
            other => Err(Error::Parse(format!("unknown stepper `{other}`"))),
        }
    }
}

impl std::fmt::Display for Stepper {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Stepper::Spectral => "spectral",
            Stepper::Yee => "yee",
        })
    }
}

/// Largest stable step: `safety · (Σ h_a⁻²)^(−1/2)`.
pub fn cfl_max_dt(grid: &GridSpec, stepper: Stepper) -> f64 {
    let s: f64 = grid.spacing().iter().map(|h| h.powi(-2)).sum();
    stepper.safety() / s.sqrt()
}

fn check_dt(grid: &GridSpec, stepper: Stepper, dt: f64) -> Result<()> {
    if !dt.is_finite() || dt == 0.0 {
        return Err(Error::InvalidArgument(format!(
            "time step must be finite and nonzero, got {dt}"
        )));
    }
    let max = cfl_max_dt(grid, stepper);
    if dt.abs() > max {
        return Err(Error::StepTooLarge { dt, max });
    }
    Ok(())
}

/// A running integration of either scheme.
pub enum Integrator {
    Spectral(SpectralIntegrator),
    Yee(YeeIntegrator),
}

impl Integrator {
    pub fn new(state: &FieldState, current: &CurrentSpec, stepper: Stepper) -> Result<Self> {
        let j = PreparedCurrent::new(current, state.grid())?;
        Ok(match stepper {
            Stepper::Spectral => Integrator::Spectral(SpectralIntegrator::new(state, j)?),
            Stepper::Yee => Integrator::Yee(YeeIntegrator::new(state, j)?),
        })
    }

    pub fn stepper(&self) -> Stepper {
        match self {
            Integrator::Spectral(_) => Stepper::Spectral,
            Integrator::Yee(_) => Stepper::Yee,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        match self {
            Integrator::Spectral(s) => s.grid(),
            Integrator::Yee(s) => s.grid(),
        }
    }

    pub fn time(&self) -> f64 {
        match self {
            Integrator::Spectral(s) => s.time(),
            Integrator::Yee(s) => s.time(),
        }
    }

    pub fn step(&mut self, dt: f64) -> Result<()> {
        check_dt(self.grid(), self.stepper(), dt)?;
        match self {
            Integrator::Spectral(s) => s.step(dt),
            Integrator::Yee(s) => s.step(dt),
        }
    }

    pub fn state(&self) -> FieldState {
        match self {
            Integrator::Spectral(s) => s.state(),
            Integrator::Yee(s) => s.state(),
        }
    }

    pub fn current(&self) -> &PreparedCurrent {
        match self {
            Integrator::Spectral(s) => s.current(),
            Integrator::Yee(s) => s.current(),
        }
    }
}

pub fn step_spectral(state: &FieldState, current: &CurrentSpec, dt: f64) -> Result<FieldState> {
    let mut it = Integrator::new(state, current, Stepper::Spectral)?;
    it.step(dt)?;
    Ok(it.state())
}

pub fn step_yee(state: &FieldState, current: &CurrentSpec, dt: f64) -> Result<FieldState> {
    let mut it = Integrator::new(state, current, Stepper::Yee)?;
    it.step(dt)?;
    Ok(it.state())
}

/// Stored states `F(t0 + n·dt)` for `n = 0..=nsteps`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<FieldState>,
    pub dt: f64,
    pub source: CurrentSpec,
    pub stepper: Stepper,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn grid(&self) -> &GridSpec {
        self.states[0].grid()
    }

    pub fn last(&self) -> &FieldState {
        self.states
            .last()
            .expect("trajectory holds the initial state")
    }
}

/// Runs `nsteps` steps, calling `visit(n, state)` for every `n` divisible by
/// `every` and for the final step. Nothing is kept in memory.
pub fn evolve_streaming<F>(
    initial: &FieldState,
    current: &CurrentSpec,
    dt: f64,
    nsteps: usize,
    stepper: Stepper,
    every: usize,
    mut visit: F,
) -> Result<()>
where
    F: FnMut(usize, &FieldState) -> Result<()>,
{
    check_dt(initial.grid(), stepper, dt)?;
    let every = every.max(1);
    let mut it = Integrator::new(initial, current, stepper)?;
    visit(0, initial)?;
    for n in 1..=nsteps {
        it.step(dt)?;
        if n % every == 0 || n == nsteps {
            visit(n, &it.state())?;
        }
    }
    Ok(())
}

pub fn evolve(
    initial: &FieldState,
    current: &CurrentSpec,
    dt: f64,
    nsteps: usize,
    stepper: Stepper,
) -> Result<Trajectory> {
    let mut states = Vec::with_capacity(nsteps + 1);
    evolve_streaming(initial, current, dt, nsteps, stepper, 1, |_, s| {
        states.push(s.clone());
        Ok(())
    })?;
    Ok(Trajectory {
        states,
        dt,
        source: current.clone(),
        stepper,
    })
}

#[cfg(test)]
mod tests;
