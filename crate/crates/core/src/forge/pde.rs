//! Periodic 1D evolution equations `∂t f = R(f)` solved with spectral
//! derivatives and classical RK4.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PdeKind {
    /// `∂t f + c ∂x f = 0`.
    Advection { c: f64 },
    /// `∂t f + ∂x(f²/2) = ν ∂x² f`.
    Burgers { nu: f64 },
    /// `∂t f + 6 f ∂x f + ∂x³ f = 0`.
    Kdv,
}

/// Growth of `max|f|` beyond this factor is reported as divergence.
pub const GROWTH_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pde1D {
    kind: PdeKind,
    length: f64,
    n: usize,
}

impl Pde1D {
    pub fn new(kind: PdeKind, length: f64, n: usize) -> Result<Self> {
        if n < 32 {
            return Err(Error::InvalidArgument(format!(
                "need at least 32 nodes, got {n}"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "bad domain length {length}"
            )));
        }
        match kind {
            PdeKind::Advection { c } if !c.is_finite() => {
                return Err(Error::NonFinite("advection speed"))
            }
            PdeKind::Burgers { nu } if !(nu.is_finite() && nu >= 0.0) => {
                return Err(Error::InvalidArgument(format!(
                    "viscosity must be finite and ≥ 0, got {nu}"
                )))
            }
            _ => {}
        }
        Ok(Self { kind, length, n })
    }

    pub fn kind(&self) -> PdeKind {
        self.kind
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn nodes(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n).map(|i| i as f64 * self.spacing()).collect()
    }

    /// Samples `f` at the nodes.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.positions().into_iter().map(f).collect()
    }

    fn kmax(&self) -> f64 {
        PI / self.spacing()
    }

    /// Largest stable RK4 step for data bounded by `amp`.
    ///
    /// Uses `λ dt ≤ 2` with `λ = |c| k` (advection), `amp k + ν k²` (Burgers)
    /// or `6 amp k + k³` (KdV) at the highest resolved wavenumber `k`.
    pub fn max_dt(&self, amp: f64) -> f64 {
        let k = self.kmax();
        let lambda = match self.kind {
            PdeKind::Advection { c } => c.abs() * k,
            PdeKind::Burgers { nu } => amp * k + nu * k * k,
            PdeKind::Kdv => 6.0 * amp * k + k * k * k,
        };
        if lambda == 0.0 {
            f64::INFINITY
        } else {
            2.0 / lambda
        }
    }

    /// A time over which smooth data of size `amp` changes by O(1).
    pub fn time_scale(&self, amp: f64) -> f64 {
        let k1 = 2.0 * PI / self.length;
        let rate = match self.kind {
            PdeKind::Advection { c } => c.abs() * k1,
            PdeKind::Burgers { nu } => amp * k1 + nu * k1 * k1,
            PdeKind::Kdv => 6.0 * amp * k1 + k1 * k1 * k1,
        };
        if rate > 0.0 {
            1.0 / rate
        } else {
            1.0
        }
    }
}

/// Spectral right-hand side evaluator with cached plans.
pub struct Rhs {
    pde: Pde1D,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    ik: Vec<Complex64>,
    buf: Vec<Complex64>,
    buf2: Vec<Complex64>,
}

impl Rhs {
    pub fn new(pde: &Pde1D) -> Self {
        let n = pde.n;
        let mut planner = FftPlanner::new();
        let k0 = 2.0 * PI / pde.length;
        let ik = (0..n)
            .map(|m| {
                if 2 * m == n {
                    Complex64::new(0.0, 0.0)
                } else {
                    let s = if 2 * m < n {
                        m as f64
                    } else {
                        m as f64 - n as f64
                    };
                    Complex64::new(0.0, s * k0)
                }
            })
            .collect();
        Self {
            pde: *pde,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
            ik,
            buf: vec![Complex64::new(0.0, 0.0); n],
            buf2: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    /// `out = R(f)`.
    pub fn eval(&mut self, f: &[f64], out: &mut [f64]) {
        let n = f.len();
        let scale = 1.0 / n as f64;
        for (b, v) in self.buf.iter_mut().zip(f) {
            *b = Complex64::new(*v, 0.0);
        }
        self.fwd.process(&mut self.buf);
        match self.pde.kind {
            PdeKind::Advection { c } => {
                for (b, k) in self.buf.iter_mut().zip(&self.ik) {
                    *b *= -c * k;
                }
            }
            PdeKind::Burgers { .. } | PdeKind::Kdv => {
                for (b, v) in self.buf2.iter_mut().zip(f) {
                    *b = Complex64::new(v * v, 0.0);
                }
                self.fwd.process(&mut self.buf2);
                for m in 0..n {
                    let k = self.ik[m];
                    self.buf[m] = match self.pde.kind {
                        // −½∂x(f²) + ν ∂x²f
                        PdeKind::Burgers { nu } => {
                            -0.5 * k * self.buf2[m] + nu * k * k * self.buf[m]
                        }
                        // −3∂x(f²) − ∂x³f
                        _ => -3.0 * k * self.buf2[m] - k * k * k * self.buf[m],
                    };
                }
            }
        }
        self.inv.process(&mut self.buf);
        for (o, b) in out.iter_mut().zip(&self.buf) {
            *o = b.re * scale;
        }
    }
}

fn max_abs(f: &[f64]) -> f64 {
    f.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Steps `f` in place with RK4, reusing the scratch buffers of `rhs`.
pub struct Stepper1D {
    rhs: Rhs,
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl Stepper1D {
    pub fn new(pde: &Pde1D) -> Self {
        let n = pde.n;
        Self {
            rhs: Rhs::new(pde),
            k: std::array::from_fn(|_| vec![0.0; n]),
            tmp: vec![0.0; n],
        }
    }

    pub fn step(&mut self, f: &mut [f64], dt: f64) {
        let n = f.len();
        self.rhs.eval(f, &mut self.k[0]);
        for s in 1..4 {
            let c = if s == 3 { dt } else { 0.5 * dt };
            for i in 0..n {
                self.tmp[i] = f[i] + c * self.k[s - 1][i];
            }
            let (tmp, k) = (&self.tmp, &mut self.k[s]);
            self.rhs.eval(tmp, k);
        }
        for i in 0..n {
            f[i] +=
                dt / 6.0 * (self.k[0][i] + 2.0 * self.k[1][i] + 2.0 * self.k[2][i] + self.k[3][i]);
        }
    }
}

/// Runs `nsteps` RK4 steps, calling `visit(n, f)` at every step including `n = 0`.
pub fn evolve_1d_with<F>(
    pde: &Pde1D,
    f0: &[f64],
    dt: f64,
    nsteps: usize,
    mut visit: F,
) -> Result<()>
where
    F: FnMut(usize, &[f64]),
{
    if f0.len() != pde.n {
        return Err(Error::InvalidArgument(format!(
            "expected {} samples, got {}",
            pde.n,
            f0.len()
        )));
    }
    if f0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("initial samples"));
    }
    let amp0 = max_abs(f0);
    let max = pde.max_dt(amp0);
    if !dt.is_finite() || dt.abs() > max {
        return Err(Error::StepTooLarge { dt, max });
    }
    let limit = GROWTH_LIMIT * amp0.max(f64::MIN_POSITIVE);
    let mut st = Stepper1D::new(pde);
    let mut f = f0.to_vec();
    visit(0, &f);
    for n in 1..=nsteps {
        st.step(&mut f, dt);
        let m = max_abs(&f);
        if !m.is_finite() || m > limit {
            return Err(Error::Diverged { t: n as f64 * dt });
        }
        visit(n, &f);
    }
    Ok(())
}

/// Node samples at every step `0..=nsteps`.
pub fn evolve_1d(pde: &Pde1D, f0: &[f64], dt: f64, nsteps: usize) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(nsteps + 1);
    evolve_1d_with(pde, f0, dt, nsteps, |_, f| out.push(f.to_vec()))?;
    Ok(out)
}

/// Weights `w` with `Σ w[n] f[n]` equal to the trigonometric interpolant at `x`.
pub fn interpolation_weights(pde: &Pde1D, x: f64) -> Vec<f64> {
    let n = pde.n;
    let k0 = 2.0 * PI / pde.length;
    let h = pde.spacing();
    (0..n)
        .map(|j| {
            let d = x - j as f64 * h;
            let mut s = 1.0;
            for m in 1..n.div_ceil(2) {
                s += 2.0 * (m as f64 * k0 * d).cos();
            }
            if n.is_multiple_of(2) {
                s += (n as f64 / 2.0 * k0 * d).cos();
            }
            s / n as f64
        })
        .collect()
}
