//! Prescribed, externally driven current densities `J(x, t)`.
//!
//! Every current is made transverse (divergence-free) when it is prepared on
//! a grid, so charge density never builds up and `∇·E` stays zero.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{Fft3, Spectrum};
use crate::grid::{GridSpec, VectorField};

/// Closed-form description of a driving current.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CurrentSpec {
    #[default]
    Zero,
    /// `J = a · sin(ωt)`, uniform in space.
    UniformOscillating { amplitude: [f64; 3], omega: f64 },
    /// `J = p⊥ · sin(k·x − ωt)` with `k = 2π·mode/L`.
    PlaneWave {
        mode: [i64; 3],
        polarization: [f64; 3],
        omega: f64,
    },
    /// Transverse part of `p · exp(−|x−c|²/2w²) · sin(ω(t−t₀)) · exp(−(t−t₀)²/2τ²)`.
    GaussianPulse {
        center: [f64; 3],
        width: f64,
        polarization: [f64; 3],
        omega: f64,
        t_center: f64,
        duration: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum TimeFn {
    Sin(f64),
    Cos(f64),
    Pulse { omega: f64, t0: f64, tau: f64 },
}

impl TimeFn {
    fn eval(self, t: f64) -> f64 {
        match self {
            TimeFn::Sin(w) => (w * t).sin(),
            TimeFn::Cos(w) => (w * t).cos(),
            TimeFn::Pulse { omega, t0, tau } => {
                let s = t - t0;
                (omega * s).sin() * (-0.5 * s * s / (tau * tau)).exp()
            }
        }
    }
}

struct Profile {
    field: VectorField,
    spectrum: [Spectrum; 3],
    time: TimeFn,
}

/// A current sampled onto one grid: a sum of fixed spatial profiles with
/// scalar time envelopes.
pub struct PreparedCurrent {
    spec: CurrentSpec,
    grid: GridSpec,
    profiles: Vec<Profile>,
}

fn project_transverse(fft: &Fft3, s: &mut [Spectrum; 3]) {
    for idx in 0..s[0].len() {
        // derivative wavenumbers, so the discrete spectral divergence vanishes at Nyquist too
        let k = fft.ik_vec(idx).map(|z| z.im);
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if k2 == 0.0 {
            continue;
        }
        let kc = (k[0] * s[0][idx] + k[1] * s[1][idx] + k[2] * s[2][idx]) / k2;
        for a in 0..3 {
            s[a][idx] -= kc * k[a];
        }
    }
}

fn finite(v: &[f64], what: &'static str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

impl PreparedCurrent {
    pub fn new(spec: &CurrentSpec, grid: &GridSpec) -> Result<Self> {
        let fft = Fft3::new(*grid);
        let l = grid.lengths();
        let mut profiles = Vec::new();
        let mut push = |field: VectorField, time: TimeFn, project: bool| {
            let (s0, s1) = fft.forward_real_pair(field.component(0), field.component(1));
            let s2 = fft.forward_real(field.component(2));
            let mut spectrum = [s0, s1, s2];
            let field = if project {
                project_transverse(&fft, &mut spectrum);
                let (c0, c1) = fft.inverse_real_pair(&spectrum[0], &spectrum[1]);
                VectorField::from_components_unchecked(
                    *grid,
                    [c0, c1, fft.inverse_real(&spectrum[2])],
                )
            } else {
                field
            };
            profiles.push(Profile {
                field,
                spectrum,
                time,
            });
        };
        match *spec {
            CurrentSpec::Zero => {}
            CurrentSpec::UniformOscillating { amplitude, omega } => {
                finite(&amplitude, "current amplitude")?;
                finite(&[omega], "current frequency")?;
                push(
                    VectorField::uniform(*grid, amplitude),
                    TimeFn::Sin(omega),
                    false,
                );
            }
            CurrentSpec::PlaneWave {
                mode,
                polarization,
                omega,
            } => {
                finite(&polarization, "current polarization")?;
                finite(&[omega], "current frequency")?;
                let d = grid.dims();
                for a in 0..3 {
                    if 2 * mode[a].unsigned_abs() as usize >= d[a] {
                        return Err(Error::InvalidWavenumber(format!(
                            "mode {} on axis {a} is not resolved by {} nodes",
                            mode[a], d[a]
                        )));
                    }
                }
                if mode == [0; 3] {
                    return Err(Error::InvalidWavenumber(
                        "plane-wave current needs k ≠ 0".into(),
                    ));
                }
                let k: [f64; 3] = std::array::from_fn(|a| 2.0 * PI * mode[a] as f64 / l[a]);
                let k2: f64 = k.iter().map(|x| x * x).sum();
                let pk: f64 = (0..3).map(|a| polarization[a] * k[a]).sum();
                let p: [f64; 3] = std::array::from_fn(|a| polarization[a] - pk * k[a] / k2);
                let phase = |x: [f64; 3]| k[0] * x[0] + k[1] * x[1] + k[2] * x[2];
                // sin(k·x − ωt) = sin(k·x) cos(ωt) − cos(k·x) sin(ωt)
                let s = VectorField::from_fn(*grid, |x| {
                    let v = phase(x).sin();
                    [p[0] * v, p[1] * v, p[2] * v]
                });
                let c = VectorField::from_fn(*grid, |x| {
                    let v = -phase(x).cos();
                    [p[0] * v, p[1] * v, p[2] * v]
                });
                push(s, TimeFn::Cos(omega), false);
                push(c, TimeFn::Sin(omega), false);
            }
            CurrentSpec::GaussianPulse {
                center,
                width,
                polarization,
                omega,
                t_center,
                duration,
            } => {
                finite(&center, "pulse center")?;
                finite(&polarization, "pulse polarization")?;
                finite(&[omega, t_center], "pulse timing")?;
                if !(width > 0.0 && duration > 0.0) {
                    return Err(Error::InvalidArgument(
                        "pulse width and duration must be positive".into(),
                    ));
                }
                let f = VectorField::from_fn(*grid, |x| {
                    let r2: f64 = (0..3)
                        .map(|a| {
                            let d = (x[a] - center[a]).rem_euclid(l[a]);
                            let d = if d >= 0.5 * l[a] { d - l[a] } else { d };
                            d * d
                        })
                        .sum();
                    let g = (-0.5 * r2 / (width * width)).exp();
                    [
                        polarization[0] * g,
                        polarization[1] * g,
                        polarization[2] * g,
                    ]
                });
                push(
                    f,
                    TimeFn::Pulse {
                        omega,
                        t0: t_center,
                        tau: duration,
                    },
                    true,
                );
            }
        }
        Ok(Self {
            spec: spec.clone(),
            grid: *grid,
            profiles,
        })
    }

    pub fn spec(&self) -> &CurrentSpec {
        &self.spec
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn is_zero(&self) -> bool {
        self.profiles.is_empty()
    }

    /// `J(·, t)` on the grid nodes.
    pub fn sample(&self, t: f64) -> VectorField {
        let mut out = VectorField::zeros(self.grid);
        for p in &self.profiles {
            let g = p.time.eval(t);
            for a in 0..3 {
                for (o, v) in out.component_mut(a).iter_mut().zip(p.field.component(a)) {
                    *o += g * v;
                }
            }
        }
        out
    }

    /// Spectrum of `J(·, t)` restricted to the bins in `active`, written to `out`.
    pub(crate) fn spectrum_at(&self, t: f64, active: &[usize], out: &mut [Vec<Complex64>; 3]) {
        for (slot, &idx) in active.iter().enumerate() {
            for o in out.iter_mut() {
                o[slot] = Complex64::new(0.0, 0.0);
            }
            for p in &self.profiles {
                let g = p.time.eval(t);
                for a in 0..3 {
                    out[a][slot] += p.spectrum[a][idx] * g;
                }
            }
        }
    }

    /// Spectral bins where any profile has weight above `threshold`.
    pub(crate) fn support(&self, threshold: f64) -> Vec<bool> {
        let mut mask = vec![false; self.grid.len()];
        for p in &self.profiles {
            for s in &p.spectrum {
                for (m, z) in mask.iter_mut().zip(s) {
                    if z.norm() > threshold {
                        *m = true;
                    }
                }
            }
        }
        mask
    }

    pub(crate) fn spectral_scale(&self) -> f64 {
        self.profiles
            .iter()
            .flat_map(|p| p.spectrum.iter().flatten())
            .fold(0.0, |m, z| m.max(z.norm()))
    }
}
