//! Seeded, band-limited, divergence-free random fields.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fft::Fft3;
use crate::grid::{FieldState, GridSpec, VectorField};

/// Integer mode vectors `n ≠ 0` with `|n_a| ≤ kmax`, one from each `±n` pair.
fn half_modes(kmax: i64) -> Vec<[i64; 3]> {
    let mut out = Vec::new();
    for nz in -kmax..=kmax {
        for ny in -kmax..=kmax {
            for nx in -kmax..=kmax {
                let n = [nx, ny, nz];
                let first = n.iter().copied().find(|&v| v != 0);
                if matches!(first, Some(v) if v > 0) {
                    out.push(n);
                }
            }
        }
    }
    out
}

fn bin(grid: &GridSpec, n: [i64; 3]) -> usize {
    let d = grid.dims();
    let w = |a: usize| n[a].rem_euclid(d[a] as i64) as usize;
    grid.index(w(0), w(1), w(2))
}

fn fill(grid: &GridSpec, kmax: i64, rng: &mut ChaCha8Rng) -> [Vec<Complex64>; 3] {
    let l = grid.lengths();
    let half = grid.len() as f64 / 2.0;
    let mut s: [Vec<Complex64>; 3] =
        std::array::from_fn(|_| vec![Complex64::new(0.0, 0.0); grid.len()]);
    for n in half_modes(kmax) {
        let k: [f64; 3] = std::array::from_fn(|a| n[a] as f64 / l[a]);
        let k2: f64 = k.iter().map(|v| v * v).sum();
        let mut a: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let mut b: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        for v in [&mut a, &mut b] {
            let p: f64 = (0..3).map(|i| v[i] * k[i]).sum::<f64>() / k2;
            for i in 0..3 {
                v[i] -= p * k[i];
            }
        }
        // a cos θ + b sin θ = Re[(a − i b) e^{iθ}]
        let (ip, im) = (bin(grid, n), bin(grid, n.map(|v| -v)));
        for c in 0..3 {
            let z = Complex64::new(a[c], -b[c]) * half;
            s[c][ip] = z;
            s[c][im] = z.conj();
        }
    }
    s
}

/// `Σ_n (a_n cos k·x + b_n sin k·x)` over `0 < |n|∞ ≤ kmax`, with coefficient
/// entries uniform in `[−1, 1)` and projected orthogonal to `k`.
pub fn random_solenoidal_field(grid: &GridSpec, kmax: u32, seed: u64) -> Result<VectorField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    field_from_rng(grid, kmax, &mut rng)
}

fn field_from_rng(grid: &GridSpec, kmax: u32, rng: &mut ChaCha8Rng) -> Result<VectorField> {
    let d = grid.dims();
    if kmax == 0 || d.iter().any(|&n| 2 * kmax as usize >= n) {
        return Err(Error::InvalidArgument(format!(
            "kmax = {kmax} must be positive and below half the node count {d:?}"
        )));
    }
    let fft = Fft3::new(*grid);
    let s = fill(grid, kmax as i64, rng);
    let (x, y) = fft.inverse_real_pair(&s[0], &s[1]);
    let z = fft.inverse_real(&s[2]);
    Ok(VectorField::from_components_unchecked(*grid, [x, y, z]))
}

/// Independent random E and B drawn from one seeded stream, at `t = 0`.
pub fn random_state(grid: &GridSpec, kmax: u32, seed: u64) -> Result<FieldState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let e = field_from_rng(grid, kmax, &mut rng)?;
    let b = field_from_rng(grid, kmax, &mut rng)?;
    FieldState::new(e, b, 0.0)
}
