//! Three-dimensional FFTs on the periodic grid.
//!
//! Spectral arrays use the same x-fastest layout as the physical fields, and
//! the forward transform is unnormalized (the inverse divides by the node count).

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::GridSpec;

pub type Spectrum = Vec<Complex64>;

pub struct Fft3 {
    grid: GridSpec,
    fwd: [Arc<dyn Fft<f64>>; 3],
    inv: [Arc<dyn Fft<f64>>; 3],
    /// `i·k` per axis and bin, zero at the Nyquist bin.
    dk: [Vec<Complex64>; 3],
    /// Physical wavenumber per axis and bin (Nyquist bin kept).
    k: [Vec<f64>; 3],
}

impl Fft3 {
    pub fn new(grid: GridSpec) -> Self {
        let mut planner = FftPlanner::new();
        let d = grid.dims();
        let fwd = std::array::from_fn(|a| planner.plan_fft_forward(d[a]));
        let inv = std::array::from_fn(|a| planner.plan_fft_inverse(d[a]));
        let k: [Vec<f64>; 3] =
            std::array::from_fn(|a| (0..d[a]).map(|m| grid.wavenumber(a, m)).collect());
        let dk = std::array::from_fn(|a| {
            (0..d[a])
                .map(|m| {
                    if d[a].is_multiple_of(2) && m == d[a] / 2 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        Complex64::new(0.0, k[a][m])
                    }
                })
                .collect()
        });
        Self {
            grid,
            fwd,
            inv,
            dk,
            k,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Physical wavenumber of bin `m` on `axis`.
    #[inline]
    pub fn k(&self, axis: usize, m: usize) -> f64 {
        self.k[axis][m]
    }

    /// Derivative multiplier `i·k` (zero on the Nyquist bin).
    #[inline]
    pub fn ik(&self, axis: usize, m: usize) -> Complex64 {
        self.dk[axis][m]
    }

    #[inline]
    pub fn is_nyquist(&self, axis: usize, m: usize) -> bool {
        let n = self.grid.dims()[axis];
        n.is_multiple_of(2) && m == n / 2
    }

    /// Index of the bin holding `-k` for the bin at `idx`.
    #[inline]
    pub fn mirror(&self, idx: usize) -> usize {
        let d = self.grid.dims();
        let c = self.grid.coords(idx);
        let m = |v: usize, n: usize| (n - v) % n;
        self.grid.index(m(c[0], d[0]), m(c[1], d[1]), m(c[2], d[2]))
    }

    fn transform(&self, data: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>; 3]) {
        let d = self.grid.dims();
        // x lines are contiguous
        plans[0].process(data);
        // y: outer = nz, len = ny, inner = nx
        self.strided_pass(data, &plans[1], d[2], d[1], d[0]);
        // z: outer = 1, len = nz, inner = nx·ny
        self.strided_pass(data, &plans[2], 1, d[2], d[0] * d[1]);
    }

    fn strided_pass(
        &self,
        data: &mut [Complex64],
        plan: &Arc<dyn Fft<f64>>,
        outer: usize,
        len: usize,
        inner: usize,
    ) {
        let mut tmp = vec![Complex64::new(0.0, 0.0); len * inner];
        for o in 0..outer {
            let block = &mut data[o * len * inner..(o + 1) * len * inner];
            for l in 0..len {
                for i in 0..inner {
                    tmp[i * len + l] = block[l * inner + i];
                }
            }
            plan.process(&mut tmp);
            for l in 0..len {
                for i in 0..inner {
                    block[l * inner + i] = tmp[i * len + l];
                }
            }
        }
    }

    pub fn forward_complex(&self, data: &mut [Complex64]) {
        self.transform(data, &self.fwd);
    }

    /// Inverse transform including the `1/N` normalization.
    pub fn inverse_complex(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inv);
        let s = 1.0 / data.len() as f64;
        for v in data.iter_mut() {
            *v *= s;
        }
    }

    /// Spectrum of a real field, symmetrized so that `c(-k) = conj(c(k))` holds exactly.
    pub fn forward_real(&self, values: &[f64]) -> Spectrum {
        let mut buf: Spectrum = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward_complex(&mut buf);
        self.hermitianize(&mut buf);
        buf
    }

    /// Spectra of two real fields from one complex transform.
    pub fn forward_real_pair(&self, a: &[f64], b: &[f64]) -> (Spectrum, Spectrum) {
        let mut buf: Spectrum = a
            .iter()
            .zip(b)
            .map(|(&x, &y)| Complex64::new(x, y))
            .collect();
        self.forward_complex(&mut buf);
        let n = buf.len();
        let mut sa = vec![Complex64::new(0.0, 0.0); n];
        let mut sb = vec![Complex64::new(0.0, 0.0); n];
        for idx in 0..n {
            let z = buf[idx];
            let zm = buf[self.mirror(idx)].conj();
            sa[idx] = (z + zm) * 0.5;
            sb[idx] = (z - zm) * Complex64::new(0.0, -0.5);
        }
        (sa, sb)
    }

    pub fn hermitianize(&self, s: &mut [Complex64]) {
        for idx in 0..s.len() {
            let m = self.mirror(idx);
            if m > idx {
                let avg = (s[idx] + s[m].conj()) * 0.5;
                s[idx] = avg;
                s[m] = avg.conj();
            } else if m == idx {
                s[idx] = Complex64::new(s[idx].re, 0.0);
            }
        }
    }

    /// Real part of the inverse transform.
    pub fn inverse_real(&self, spectrum: &[Complex64]) -> Vec<f64> {
        let mut buf = spectrum.to_vec();
        self.inverse_complex(&mut buf);
        buf.into_iter().map(|z| z.re).collect()
    }

    /// Two real fields from Hermitian spectra with a single complex transform.
    pub fn inverse_real_pair(&self, a: &[Complex64], b: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
        let i = Complex64::new(0.0, 1.0);
        let mut buf: Spectrum = a.iter().zip(b).map(|(&x, &y)| x + i * y).collect();
        self.inverse_complex(&mut buf);
        (
            buf.iter().map(|z| z.re).collect(),
            buf.iter().map(|z| z.im).collect(),
        )
    }

    /// Multiplies `s` by `i·k_axis` in place.
    pub fn differentiate(&self, s: &mut [Complex64], axis: usize) {
        let d = self.grid.dims();
        for (idx, v) in s.iter_mut().enumerate() {
            let m = match axis {
                0 => idx % d[0],
                1 => (idx / d[0]) % d[1],
                _ => idx / (d[0] * d[1]),
            };
            *v *= self.dk[axis][m];
        }
    }

    /// `(i·kx, i·ky, i·kz)` for the bin at `idx`.
    #[inline]
    pub fn ik_vec(&self, idx: usize) -> [Complex64; 3] {
        let c = self.grid.coords(idx);
        [self.dk[0][c[0]], self.dk[1][c[1]], self.dk[2][c[2]]]
    }

    /// Physical wavevector for the bin at `idx`.
    #[inline]
    pub fn k_vec(&self, idx: usize) -> [f64; 3] {
        let c = self.grid.coords(idx);
        [self.k[0][c[0]], self.k[1][c[1]], self.k[2][c[2]]]
    }
}
