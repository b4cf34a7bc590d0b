//! Solution-dependent invariants `g = Σ α_i f(x_i)` for `∂t f = R(f)` in 1D.
//!
//! Time derivatives `∂tᵏ f(x_i)` at `t = 0` are measured by central
//! differencing of short forward and backward evolutions; coefficient vectors
//! orthogonal to every measured row make `g` stationary up to order `N_order`.

mod pde;

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;

pub use pde::{evolve_1d, evolve_1d_with, interpolation_weights, Pde1D, PdeKind, GROWTH_LIMIT};

use crate::error::{Error, Result};
use crate::fit::log_log_slope;

/// Highest time derivative the 7-point stencils provide.
pub const MAX_ORDER: usize = 6;
/// Singular values at or below this fraction of the largest span the null space.
pub const DEFAULT_TOLERANCE: f64 = 1e-8;

/// Central weights on offsets `−3..=3` for `∂ᵏ`, `k = 1..=6`.
const STENCIL: [[f64; 7]; 6] = [
    [
        -1.0 / 60.0,
        3.0 / 20.0,
        -3.0 / 4.0,
        0.0,
        3.0 / 4.0,
        -3.0 / 20.0,
        1.0 / 60.0,
    ],
    [
        1.0 / 90.0,
        -3.0 / 20.0,
        3.0 / 2.0,
        -49.0 / 18.0,
        3.0 / 2.0,
        -3.0 / 20.0,
        1.0 / 90.0,
    ],
    [
        1.0 / 8.0,
        -1.0,
        13.0 / 8.0,
        0.0,
        -13.0 / 8.0,
        1.0,
        -1.0 / 8.0,
    ],
    [
        -1.0 / 6.0,
        2.0,
        -13.0 / 2.0,
        28.0 / 3.0,
        -13.0 / 2.0,
        2.0,
        -1.0 / 6.0,
    ],
    [-0.5, 2.0, -2.5, 0.0, 2.5, -2.0, 0.5],
    [1.0, -6.0, 15.0, -20.0, 15.0, -6.0, 1.0],
];
/// Leading truncation order of each stencil.
const STENCIL_ORDER: [i32; 6] = [6, 6, 4, 4, 2, 2];

/// Distinct sample locations on the periodic domain.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSampleSet {
    points: Vec<f64>,
}

impl PointSampleSet {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 points, got {}",
                points.len()
            )));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("sample points"));
        }
        let mut s = points.clone();
        s.sort_by(f64::total_cmp);
        if s.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument(
                "sample points must be distinct".into(),
            ));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Trigonometric interpolant of the node samples `f` at each point.
    pub fn values(&self, pde: &Pde1D, f: &[f64]) -> Vec<f64> {
        self.points
            .iter()
            .map(|&x| dot(&interpolation_weights(pde, x), f))
            .collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `rows[k-1][i] = ∂tᵏ f(x_i)` at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentMatrix {
    pub rows: Vec<Vec<f64>>,
    /// Richardson error estimate per entry (zero for user-supplied matrices).
    pub error_estimate: Vec<Vec<f64>>,
    /// Set when some row's error estimate exceeds a thousandth of its size.
    pub ill_conditioned: bool,
}

impl MomentMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || p == 0 || rows.iter().any(|r| r.len() != p) {
            return Err(Error::InvalidArgument(
                "moment rows must be non-empty and equally long".into(),
            ));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("moment matrix"));
        }
        let error_estimate = vec![vec![0.0; p]; rows.len()];
        Ok(Self {
            rows,
            error_estimate,
            ill_conditioned: false,
        })
    }

    pub fn n_order(&self) -> usize {
        self.rows.len()
    }

    pub fn points(&self) -> usize {
        self.rows[0].len()
    }
}

/// Rate at which data of size `amp` with top wavenumber `k` changes.
fn rate(pde: &Pde1D, amp: f64, k: f64) -> f64 {
    match pde.kind() {
        PdeKind::Advection { c } => c.abs() * k,
        PdeKind::Burgers { nu } => amp * k + nu * k * k,
        PdeKind::Kdv => 6.0 * amp * k + k * k * k,
    }
}

/// Largest wavenumber carrying more than `1e-12` of the peak amplitude (mean included).
fn bandwidth(pde: &Pde1D, f: &[f64]) -> f64 {
    let n = f.len();
    let mut buf: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let peak = buf.iter().fold(0.0f64, |m, c| m.max(c.norm()));
    let top = (1..=n / 2)
        .filter(|&m| buf[m].norm() > 1e-12 * peak)
        .max()
        .unwrap_or(0);
    2.0 * std::f64::consts::PI / pde.length() * top as f64
}

/// Coarsest probe step for `∂tᵏ`, as a fraction of the data's time scale.
const PROBE_FRACTION: [f64; 6] = [0.03, 0.04, 0.06, 0.3, 0.2, 0.4];
/// Steps `h, h/2, …` combined per order.
const LEVELS: usize = 3;

/// Measures `∂tᵏ f(x_i)` for `k = 1..=n_order` with 7-point central
/// differences at steps `h, h/2, h/4`, combined by Richardson extrapolation.
pub fn time_derivative_samples(
    pde: &Pde1D,
    f0: &[f64],
    points: &PointSampleSet,
    n_order: usize,
) -> Result<MomentMatrix> {
    if n_order == 0 || n_order > MAX_ORDER {
        return Err(Error::InvalidArgument(format!(
            "order must be in 1..={MAX_ORDER}, got {n_order}"
        )));
    }
    if f0.len() != pde.nodes() {
        return Err(Error::InvalidArgument(format!(
            "expected {} samples, got {}",
            pde.nodes(),
            f0.len()
        )));
    }
    let amp = f0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let r = rate(pde, amp, bandwidth(pde, f0));
    let tau = if r > 0.0 { 1.0 / r } else { 1.0 };
    // backward viscous runs amplify round-off in the top mode by exp(ν k² t)
    let max_probe = match pde.kind() {
        PdeKind::Burgers { nu } if nu > 0.0 => 10.0 / (3.0 * nu * (PI / pde.spacing()).powi(2)),
        _ => f64::INFINITY,
    };
    let finest = 1 << (LEVELS - 1);
    let probe: Vec<f64> = PROBE_FRACTION[..n_order]
        .iter()
        .map(|fr| (fr * tau).min(max_probe))
        .collect();
    let delta = (probe[0] / (4.0 * finest as f64)).min(0.5 * pde.max_dt(amp));
    // finest step of each order in substeps
    let unit: Vec<usize> = probe
        .iter()
        .map(|h| ((h / (finest as f64 * delta)).round() as usize).max(1))
        .collect();
    let reach = 3 * finest * unit.iter().max().copied().unwrap_or(1);

    let weights: Vec<Vec<f64>> = points
        .points()
        .iter()
        .map(|&x| interpolation_weights(pde, x))
        .collect();
    let record = |dt: f64| -> Result<Vec<Vec<f64>>> {
        let mut out = Vec::with_capacity(reach + 1);
        evolve_1d_with(pde, f0, dt, reach, |_, f| {
            out.push(weights.iter().map(|w| dot(w, f)).collect())
        })?;
        Ok(out)
    };
    let fwd = record(delta)?;
    let bwd = record(-delta)?;
    let at = |s: i64| -> &Vec<f64> {
        if s >= 0 {
            &fwd[s as usize]
        } else {
            &bwd[(-s) as usize]
        }
    };

    let p = points.len();
    let mut rows = Vec::with_capacity(n_order);
    let mut error_estimate = Vec::with_capacity(n_order);
    let mut ill = false;
    for k in 1..=n_order {
        let w = &STENCIL[k - 1];
        // paired about the centre so that constant data gives exact zeros
        let diff = |stride: i64| -> Vec<f64> {
            let s = (stride as f64 * delta).powi(k as i32);
            (0..p)
                .map(|i| {
                    let c = at(0)[i];
                    let d: f64 = (1..=3)
                        .map(|j| {
                            let (a, b) = (at(j * stride)[i], at(-j * stride)[i]);
                            let pair = if k % 2 == 1 { a - b } else { (a - c) + (b - c) };
                            w[3 + j as usize] * pair
                        })
                        .sum();
                    d / s
                })
                .collect()
        };
        // Richardson table, coarsest step first
        let mut table: Vec<Vec<f64>> = (0..LEVELS)
            .map(|l| diff((unit[k - 1] << (LEVELS - 1 - l)) as i64))
            .collect();
        let mut err = vec![0.0; p];
        let mut order = STENCIL_ORDER[k - 1];
        while table.len() > 1 {
            let c = (2f64).powi(order) - 1.0;
            if table.len() == 2 {
                err = table[1]
                    .iter()
                    .zip(&table[0])
                    .map(|(f, g)| (f - g).abs() / c)
                    .collect();
            }
            table = table
                .windows(2)
                .map(|pair| {
                    pair[1]
                        .iter()
                        .zip(&pair[0])
                        .map(|(f, g)| f + (f - g) / c)
                        .collect()
                })
                .collect();
            order += 2;
        }
        let row = table.pop().expect("one entry left");
        let size = row.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let worst = err.iter().fold(0.0f64, |m, v| m.max(*v));
        if worst > 1e-3 * size && worst > 0.0 {
            ill = true;
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::IllConditioned(format!(
                "derivative of order {k} is not finite"
            )));
        }
        rows.push(row);
        error_estimate.push(err);
    }
    Ok(MomentMatrix {
        rows,
        error_estimate,
        ill_conditioned: ill,
    })
}

/// Unit vectors `α` with `M α ≈ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantCoefficients {
    pub basis: Vec<Vec<f64>>,
    pub n_order: usize,
    pub tolerance: f64,
    /// Singular values of the row-normalized matrix over the largest, descending.
    pub singular_values: Vec<f64>,
}

impl InvariantCoefficients {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Number of singular values above the cut.
    pub fn rank(&self) -> usize {
        self.singular_values.len() - self.basis.len()
    }
}

/// Makes the largest-magnitude entry positive.
fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Null space of `M` after scaling each nonzero row to unit length.
pub fn nullspace_invariants(m: &MomentMatrix, tol: f64) -> InvariantCoefficients {
    let p = m.points();
    let nrows = m.n_order().max(p);
    let mut a = DMatrix::<f64>::zeros(nrows, p);
    for (r, row) in m.rows.iter().enumerate() {
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (c, v) in row.iter().enumerate() {
                a[(r, c)] = v / norm;
            }
        }
    }
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("right vectors requested");
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let smax = svd.singular_values[order[0]];
    let scale = if smax > 0.0 { smax } else { 1.0 };
    let singular_values: Vec<f64> = order
        .iter()
        .map(|&i| svd.singular_values[i] / scale)
        .collect();
    let basis = order
        .iter()
        .filter(|&&i| svd.singular_values[i] <= tol * smax)
        .map(|&i| {
            let mut v: Vec<f64> = v_t.row(i).iter().copied().collect();
            fix_sign(&mut v);
            v
        })
        .collect();
    InvariantCoefficients {
        basis,
        n_order: m.n_order(),
        tolerance: tol,
        singular_values,
    }
}

/// Moments and invariants for one `(pde, f0, points)` instance.
#[derive(Debug, Clone)]
pub struct Forged {
    /// Columns follow the caller's point order.
    pub moments: MomentMatrix,
    /// Entries follow the caller's point order.
    pub invariants: InvariantCoefficients,
}

/// Measures moments and extracts invariants with the points processed in
/// sorted order, so permuting the input permutes every output identically.
pub fn forge_invariants(
    pde: &Pde1D,
    f0: &[f64],
    points: &PointSampleSet,
    n_order: usize,
    tol: f64,
) -> Result<Forged> {
    let mut perm: Vec<usize> = (0..points.len()).collect();
    perm.sort_by(|&i, &j| points.points()[i].total_cmp(&points.points()[j]));
    let sorted = PointSampleSet::new(perm.iter().map(|&i| points.points()[i]).collect())?;
    let m = time_derivative_samples(pde, f0, &sorted, n_order)?;
    let inv = nullspace_invariants(&m, tol);
    let unsort = |v: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for (s, &i) in perm.iter().enumerate() {
            out[i] = v[s];
        }
        out
    };
    let moments = MomentMatrix {
        rows: m.rows.iter().map(|r| unsort(r)).collect(),
        error_estimate: m.error_estimate.iter().map(|r| unsort(r)).collect(),
        ill_conditioned: m.ill_conditioned,
    };
    let invariants = InvariantCoefficients {
        basis: inv.basis.iter().map(|v| unsort(v)).collect(),
        ..inv
    };
    Ok(Forged {
        moments,
        invariants,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftOptions {
    /// Exponent is fitted on samples with `t ≤ fit_window`.
    pub fit_window: f64,
    /// Upper bound on the RK4 step.
    pub max_step: f64,
}

impl Default for DriftOptions {
    fn default() -> Self {
        Self {
            fit_window: 0.1,
            max_step: 2.5e-4,
        }
    }
}

/// `g(t) = Σ α_i f(x_i, t)` along an evolution and its drift from `g(0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftReport {
    pub t: Vec<f64>,
    pub g: Vec<f64>,
    pub drift: Vec<f64>,
    pub dt: f64,
    /// Slope of `ln drift` against `ln t` on the fit window; `None` if the drift vanishes there.
    pub exponent: Option<f64>,
}

impl DriftReport {
    pub fn max_drift(&self) -> f64 {
        self.drift.iter().fold(0.0, |m, v| m.max(*v))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("# schema=1\nt,g_value,drift\n");
        for i in 0..self.t.len() {
            let _ = writeln!(
                s,
                "{:.17e},{:.17e},{:.17e}",
                self.t[i], self.g[i], self.drift[i]
            );
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_csv())
    }
}

/// Evolves `f0` to `horizon`, sampling `g` at `nsamples` equally spaced times after `t = 0`.
pub fn verify_invariant_drift(
    pde: &Pde1D,
    f0: &[f64],
    points: &PointSampleSet,
    alpha: &[f64],
    horizon: f64,
    nsamples: usize,
    opts: &DriftOptions,
) -> Result<DriftReport> {
    if alpha.len() != points.len() {
        return Err(Error::InvalidArgument(format!(
            "{} coefficients for {} points",
            alpha.len(),
            points.len()
        )));
    }
    if !(horizon.is_finite() && horizon > 0.0) || nsamples == 0 {
        return Err(Error::InvalidArgument(
            "horizon and sample count must be positive".into(),
        ));
    }
    let amp = f0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let interval = horizon / nsamples as f64;
    let cap = opts.max_step.min(0.5 * pde.max_dt(amp));
    let sub = (interval / cap).ceil().max(1.0) as usize;
    let dt = interval / sub as f64;
    let weights: Vec<Vec<f64>> = points
        .points()
        .iter()
        .map(|&x| interpolation_weights(pde, x))
        .collect();
    let combo: Vec<f64> = (0..pde.nodes())
        .map(|n| weights.iter().zip(alpha).map(|(w, a)| a * w[n]).sum())
        .collect();
    let mut t = Vec::with_capacity(nsamples + 1);
    let mut g = Vec::with_capacity(nsamples + 1);
    evolve_1d_with(pde, f0, dt, nsamples * sub, |n, f| {
        if n % sub == 0 {
            t.push((n / sub) as f64 * interval);
            g.push(dot(&combo, f));
        }
    })?;
    let drift: Vec<f64> = g.iter().map(|v| (v - g[0]).abs()).collect();
    let (wt, wd): (Vec<f64>, Vec<f64>) = t
        .iter()
        .zip(&drift)
        .filter(|(ti, _)| **ti <= opts.fit_window)
        .map(|(a, b)| (*a, *b))
        .unzip();
    let exponent = log_log_slope(&wt, &wd);
    Ok(DriftReport {
        t,
        g,
        drift,
        dt,
        exponent,
    })
}

/// One line per construction: point count, order, null-space size, drift exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForgeSummary {
    pub points: usize,
    pub n_order: usize,
    pub nullspace_dim: usize,
    pub exponent: Option<f64>,
}

impl ForgeSummary {
    pub const CSV_HEADER: &'static str = "points,n_order,nullspace_dim,exponent";

    pub fn csv_row(&self) -> String {
        let e = self
            .exponent
            .map(|v| format!("{v:.17e}"))
            .unwrap_or_default();
        format!(
            "{},{},{},{}",
            self.points, self.n_order, self.nullspace_dim, e
        )
    }
}
