//! Classical RK4 for the method-of-lines Maxwell system with spectral curls.
//!
//! Each Fourier mode evolves independently, so the integrator keeps only the
//! modes that carry field or source weight. Bins below `ACTIVE_CUTOFF` times
//! the largest coefficient are treated as empty.

use num_complex::Complex64;

use crate::current::PreparedCurrent;
use crate::error::{Error, Result};
use crate::fft::Fft3;
use crate::grid::{FieldState, GridSpec, VectorField};

/// Relative magnitude below which a spectral bin is considered empty.
pub const ACTIVE_CUTOFF: f64 = 1e-13;

type Modes = [Vec<Complex64>; 3];

pub struct SpectralIntegrator {
    grid: GridSpec,
    fft: Fft3,
    active: Vec<usize>,
    ik: Vec<[Complex64; 3]>,
    e: Modes,
    b: Modes,
    t0: f64,
    steps: u64,
    dt_last: f64,
    current: PreparedCurrent,
    jbuf: Modes,
}

fn zeros(n: usize) -> Modes {
    std::array::from_fn(|_| vec![Complex64::new(0.0, 0.0); n])
}

impl SpectralIntegrator {
    pub fn new(state: &FieldState, current: PreparedCurrent) -> Result<Self> {
        let grid = *state.grid();
        grid.check_same(current.grid())?;
        if !state.is_finite() {
            return Err(Error::NonFinite("initial state"));
        }
        let fft = Fft3::new(grid);
        let (ex, ey) = fft.forward_real_pair(state.e.component(0), state.e.component(1));
        let (ez, bx) = fft.forward_real_pair(state.e.component(2), state.b.component(0));
        let (by, bz) = fft.forward_real_pair(state.b.component(1), state.b.component(2));
        let full = [ex, ey, ez, bx, by, bz];
        let fmax = full.iter().flatten().fold(0.0f64, |m, z| m.max(z.norm()));
        let jmask = current.support(ACTIVE_CUTOFF * current.spectral_scale());
        let active: Vec<usize> = (0..grid.len())
            .filter(|&idx| jmask[idx] || full.iter().any(|s| s[idx].norm() > ACTIVE_CUTOFF * fmax))
            .collect();
        let pick = |s: &Vec<Complex64>| active.iter().map(|&i| s[i]).collect::<Vec<_>>();
        let e = [pick(&full[0]), pick(&full[1]), pick(&full[2])];
        let b = [pick(&full[3]), pick(&full[4]), pick(&full[5])];
        let ik = active.iter().map(|&i| fft.ik_vec(i)).collect();
        let n = active.len();
        Ok(Self {
            grid,
            fft,
            active,
            ik,
            e,
            b,
            t0: state.t,
            steps: 0,
            dt_last: 0.0,
            current,
            jbuf: zeros(n),
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn time(&self) -> f64 {
        self.t0 + self.steps as f64 * self.dt_last
    }

    /// Number of spectral bins being evolved.
    pub fn active_modes(&self) -> usize {
        self.active.len()
    }

    fn rhs(&mut self, e: &Modes, b: &Modes, t: f64, de: &mut Modes, db: &mut Modes) {
        let drive = !self.current.is_zero();
        if drive {
            self.current.spectrum_at(t, &self.active, &mut self.jbuf);
        }
        for s in 0..self.active.len() {
            let k = self.ik[s];
            let (e0, e1, e2) = (e[0][s], e[1][s], e[2][s]);
            let (b0, b1, b2) = (b[0][s], b[1][s], b[2][s]);
            // ∂t E = ∇×B − J, ∂t B = −∇×E
            de[0][s] = k[1] * b2 - k[2] * b1;
            de[1][s] = k[2] * b0 - k[0] * b2;
            de[2][s] = k[0] * b1 - k[1] * b0;
            db[0][s] = -(k[1] * e2 - k[2] * e1);
            db[1][s] = -(k[2] * e0 - k[0] * e2);
            db[2][s] = -(k[0] * e1 - k[1] * e0);
            if drive {
                for a in 0..3 {
                    de[a][s] -= self.jbuf[a][s];
                }
            }
        }
    }

    /// One RK4 step of size `dt` (stability is the caller's concern).
    pub fn step(&mut self, dt: f64) -> Result<()> {
        if self.steps > 0 && dt != self.dt_last {
            // times are reconstructed from a step count, so re-anchor
            self.t0 = self.time();
            self.steps = 0;
        }
        self.dt_last = dt;
        let t = self.time();
        let n = self.active.len();
        let (mut k1e, mut k1b) = (zeros(n), zeros(n));
        let (mut k2e, mut k2b) = (zeros(n), zeros(n));
        let (mut k3e, mut k3b) = (zeros(n), zeros(n));
        let (mut k4e, mut k4b) = (zeros(n), zeros(n));
        let (e0, b0) = (self.e.clone(), self.b.clone());
        let axpy = |base: &Modes, k: &Modes, h: f64| -> Modes {
            std::array::from_fn(|a| base[a].iter().zip(&k[a]).map(|(x, y)| x + y * h).collect())
        };
        self.rhs(&e0, &b0, t, &mut k1e, &mut k1b);
        let (e1, b1) = (axpy(&e0, &k1e, 0.5 * dt), axpy(&b0, &k1b, 0.5 * dt));
        self.rhs(&e1, &b1, t + 0.5 * dt, &mut k2e, &mut k2b);
        let (e2, b2) = (axpy(&e0, &k2e, 0.5 * dt), axpy(&b0, &k2b, 0.5 * dt));
        self.rhs(&e2, &b2, t + 0.5 * dt, &mut k3e, &mut k3b);
        let (e3, b3) = (axpy(&e0, &k3e, dt), axpy(&b0, &k3b, dt));
        self.rhs(&e3, &b3, t + dt, &mut k4e, &mut k4b);
        let w = dt / 6.0;
        for a in 0..3 {
            for s in 0..n {
                self.e[a][s] += w * (k1e[a][s] + 2.0 * k2e[a][s] + 2.0 * k3e[a][s] + k4e[a][s]);
                self.b[a][s] += w * (k1b[a][s] + 2.0 * k2b[a][s] + 2.0 * k3b[a][s] + k4b[a][s]);
            }
        }
        self.steps += 1;
        let finite = self
            .e
            .iter()
            .chain(self.b.iter())
            .flatten()
            .all(|z| z.re.is_finite() && z.im.is_finite());
        if !finite {
            return Err(Error::Diverged { t: self.time() });
        }
        Ok(())
    }

    fn scatter(&self, m: &[Complex64]) -> Vec<Complex64> {
        let mut full = vec![Complex64::new(0.0, 0.0); self.grid.len()];
        for (s, &idx) in self.active.iter().enumerate() {
            full[idx] = m[s];
        }
        full
    }

    /// Current fields on the collocated grid.
    pub fn state(&self) -> FieldState {
        let f: Vec<Vec<Complex64>> = self
            .e
            .iter()
            .chain(self.b.iter())
            .map(|m| self.scatter(m))
            .collect();
        let (ex, ey) = self.fft.inverse_real_pair(&f[0], &f[1]);
        let (ez, bx) = self.fft.inverse_real_pair(&f[2], &f[3]);
        let (by, bz) = self.fft.inverse_real_pair(&f[4], &f[5]);
        FieldState {
            e: VectorField::from_components_unchecked(self.grid, [ex, ey, ez]),
            b: VectorField::from_components_unchecked(self.grid, [bx, by, bz]),
            t: self.time(),
        }
    }

    pub fn current(&self) -> &PreparedCurrent {
        &self.current
    }
}
