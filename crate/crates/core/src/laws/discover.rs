//! Finding `(W, K)` for a given map from data.
//!
//! Every collocation node of every training trajectory contributes one row of
//! `Σ W_ab ∂t(F_a G_b) + Σ K_iab ∂_i(F_a G_b) = 0`. Time derivatives use the
//! five-point centered difference on stored states and space derivatives are
//! spectral. Near-null right singular vectors are candidate laws.

use nalgebra::DMatrix;

use super::{law_inversion, law_local_energy, law_rotation, TwoPointLawSpec, COEFFICIENTS};
use crate::affine::{AffineMap, Pullback};
use crate::current::CurrentSpec;
use crate::error::{Error, Result};
use crate::fft::Fft3;
use crate::grid::GridSpec;
use crate::maxwell::{evolve, Stepper, Trajectory};
use crate::random::random_state;

/// Smallest ensemble accepted (one member is held out).
pub const MIN_ENSEMBLE: usize = 20;

const D5: [f64; 5] = [1.0, -8.0, 0.0, 8.0, -1.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscoveryOptions {
    /// Singular values at or below this fraction of the largest are null.
    pub null_tolerance: f64,
    /// Use every `node_stride`-th node as a collocation point.
    pub node_stride: usize,
    /// A candidate passes when its held-out residual is at most this multiple
    /// of the shipped law's.
    pub holdout_factor: f64,
}

impl Default for DiscoveryOptions {
    fn default() -> Self {
        Self {
            null_tolerance: 1e-6,
            node_stride: 1,
            holdout_factor: 10.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LawCandidate {
    /// Unit Frobenius norm over `(W, K)`.
    pub law: TwoPointLawSpec,
    /// Singular value relative to the largest.
    pub singular_value: f64,
    /// `max |A u|` over the held-out trajectory's rows.
    pub holdout_residual: f64,
    pub verified: bool,
}

#[derive(Debug, Clone)]
pub struct DiscoveryResult {
    pub candidates: Vec<LawCandidate>,
    /// All singular values relative to the largest, descending.
    pub singular_values: Vec<f64>,
    /// Orthonormal basis of the near-null space, one coefficient vector each.
    pub null_basis: Vec<Vec<f64>>,
    pub rows: usize,
    /// Held-out residual of the normalized hand-written law for this map, when one exists.
    pub reference_residual: Option<f64>,
}

impl DiscoveryResult {
    pub fn nullity(&self) -> usize {
        self.null_basis.len()
    }

    /// `‖P u‖ / ‖u‖` for the orthogonal projector `P` onto the null space.
    pub fn projection(&self, law: &TwoPointLawSpec) -> f64 {
        projection_onto(&self.null_basis, &law.coefficients())
    }

    /// Largest sine of the principal angles between two recovered spaces
    /// (0 for identical spaces, 1 if some direction is orthogonal).
    pub fn subspace_distance(&self, other: &DiscoveryResult) -> f64 {
        if self.nullity() != other.nullity() {
            return 1.0;
        }
        self.null_basis
            .iter()
            .map(|v| {
                (1.0 - projection_onto(&other.null_basis, v).powi(2))
                    .max(0.0)
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }
}

fn projection_onto(basis: &[Vec<f64>], u: &[f64]) -> f64 {
    let n = u.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n == 0.0 {
        return 0.0;
    }
    let p2: f64 = basis
        .iter()
        .map(|b| b.iter().zip(u).map(|(x, y)| x * y).sum::<f64>().powi(2))
        .sum();
    p2.sqrt() / n
}

/// Rows for one trajectory, appended to `rows` (row-major, `COEFFICIENTS` wide).
fn collect_rows(
    traj: &Trajectory,
    pullback: &Pullback,
    fft: &Fft3,
    time_shift: usize,
    node_stride: usize,
    rows: &mut Vec<f64>,
) {
    let c = 2;
    let n = traj.grid().len();
    let prod = |k: usize, a: usize, b: usize, g: &[Vec<f64>; 6]| -> Vec<f64> {
        traj.states[k]
            .stacked(a)
            .iter()
            .zip(&g[b])
            .map(|(x, y)| x * y)
            .collect()
    };
    let partner = |k: usize| -> [Vec<f64>; 6] {
        std::array::from_fn(|a| pullback.apply(traj.states[k + time_shift].stacked(a)))
    };
    let partners: Vec<[Vec<f64>; 6]> = (c - 2..=c + 2).map(partner).collect();
    let inv_dt = 1.0 / (12.0 * traj.dt);
    // time derivative of every product at the centre index
    let mut dt_cols: Vec<Vec<f64>> = Vec::with_capacity(36);
    // products at the centre index, differentiated in space afterwards
    let mut centre: Vec<Vec<f64>> = Vec::with_capacity(36);
    for a in 0..6 {
        for b in 0..6 {
            let mut d = vec![0.0; n];
            for (s, w) in D5.iter().enumerate() {
                if *w == 0.0 {
                    continue;
                }
                let p = prod(c - 2 + s, a, b, &partners[s]);
                for (o, v) in d.iter_mut().zip(&p) {
                    *o += w * inv_dt * v;
                }
            }
            dt_cols.push(d);
            centre.push(prod(c, a, b, &partners[2]));
        }
    }
    let mut dx_cols: Vec<Vec<f64>> = vec![Vec::new(); 108];
    for p in 0..36 {
        let s = fft.forward_real(&centre[p]);
        for i in 0..3 {
            let mut si = s.clone();
            fft.differentiate(&mut si, i);
            dx_cols[36 * i + p] = fft.inverse_real(&si);
        }
    }
    for x in (0..n).step_by(node_stride.max(1)) {
        rows.extend(dt_cols.iter().map(|col| col[x]));
        rows.extend(dx_cols.iter().map(|col| col[x]));
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Orthonormal basis of the same space whose first vector is the projection of `u`
/// (unchanged when `u` is orthogonal to the space).
fn aligned_basis(basis: &[Vec<f64>], u: &[f64]) -> Vec<Vec<f64>> {
    let mut first: Vec<f64> = vec![0.0; u.len()];
    for b in basis {
        let c = dot(b, u);
        first.iter_mut().zip(b).for_each(|(f, x)| *f += c * x);
    }
    let n = dot(&first, &first).sqrt();
    if n <= 1e-12 * dot(u, u).sqrt() {
        return basis.to_vec();
    }
    first.iter_mut().for_each(|f| *f /= n);
    // drop the member most parallel to `first`, Gram–Schmidt the rest against it
    let drop = (0..basis.len())
        .max_by(|&i, &j| {
            dot(&basis[i], &first)
                .abs()
                .total_cmp(&dot(&basis[j], &first).abs())
        })
        .expect("non-empty basis");
    let mut out = vec![first];
    for (i, b) in basis.iter().enumerate() {
        if i == drop {
            continue;
        }
        let mut v = b.clone();
        for _ in 0..2 {
            for q in &out {
                let c = dot(&v, q);
                v.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
        }
        let n = dot(&v, &v).sqrt();
        v.iter_mut().for_each(|x| *x /= n);
        out.push(v);
    }
    out
}

fn shipped_law(map: &AffineMap, time_shift: usize, grid: &GridSpec) -> Option<TwoPointLawSpec> {
    if map.is_identity() && time_shift == 0 {
        return Some(law_local_energy());
    }
    if *map == AffineMap::inversion() && time_shift == 0 {
        return Some(law_inversion());
    }
    if map.alpha() == AffineMap::identity().alpha() {
        let h = grid.spacing();
        let nodes: [i64; 3] = std::array::from_fn(|a| (map.beta()[a] / h[a]).round() as i64);
        let law = super::law_translation(grid, nodes, time_shift);
        return (law.map == *map).then_some(law);
    }
    if time_shift == 0 && map.beta() == [0.0; 3] {
        return law_rotation(map).ok();
    }
    None
}

/// Searches for two-point laws of `map` with partner shifted `time_shift` steps.
///
/// The last trajectory is held out for verification; every trajectory must be
/// source-free, share one grid and step, and hold at least `5 + time_shift` states.
pub fn discover_laws(
    ensemble: &[Trajectory],
    map: &AffineMap,
    time_shift: usize,
    opts: &DiscoveryOptions,
) -> Result<DiscoveryResult> {
    if ensemble.len() < MIN_ENSEMBLE {
        return Err(Error::InsufficientData(format!(
            "need at least {MIN_ENSEMBLE} trajectories, got {}",
            ensemble.len()
        )));
    }
    let grid = *ensemble[0].grid();
    let dt = ensemble[0].dt;
    for tr in ensemble {
        grid.check_same(tr.grid())?;
        if tr.dt != dt {
            return Err(Error::InvalidArgument(
                "ensemble members use different time steps".into(),
            ));
        }
        if tr.source != CurrentSpec::Zero {
            return Err(Error::InvalidArgument(
                "discovery needs source-free trajectories".into(),
            ));
        }
        if tr.len() < 5 + time_shift {
            return Err(Error::HistoryUnderflow {
                needed: 5 + time_shift,
                available: tr.len(),
            });
        }
    }
    let pullback = Pullback::new(map, &grid)?;
    let fft = Fft3::new(grid);
    let (train, held) = ensemble.split_at(ensemble.len() - 1);
    let mut data = Vec::new();
    for tr in train {
        collect_rows(tr, &pullback, &fft, time_shift, opts.node_stride, &mut data);
    }
    let nrows = data.len() / COEFFICIENTS;
    if nrows < COEFFICIENTS {
        return Err(Error::InsufficientData(format!(
            "{nrows} collocation rows for {COEFFICIENTS} unknowns"
        )));
    }
    let a = DMatrix::from_row_slice(nrows, COEFFICIENTS, &data);
    drop(data);
    // the SVD of R from A = QR has the same singular values and right vectors as A
    let r = a.qr().r();
    let svd = r.clone().svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::IllConditioned("SVD did not converge".into()))?;
    let mut order: Vec<usize> = (0..COEFFICIENTS).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let smax = svd.singular_values[order[0]];
    if smax == 0.0 || !smax.is_finite() {
        return Err(Error::InsufficientData(
            "collocation matrix carries no information".into(),
        ));
    }
    let singular_values: Vec<f64> = order
        .iter()
        .map(|&i| svd.singular_values[i] / smax)
        .collect();
    let null_idx: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&i| svd.singular_values[i] <= opts.null_tolerance * smax)
        .collect();
    if null_idx.len() == COEFFICIENTS {
        return Err(Error::InsufficientData("sampling is rank deficient".into()));
    }
    let mut null_basis: Vec<Vec<f64>> = null_idx
        .iter()
        .map(|&i| v_t.row(i).iter().copied().collect())
        .collect();
    let reference = shipped_law(map, time_shift, &grid).map(|l| l.normalized().coefficients());
    if let Some(u) = &reference {
        null_basis = aligned_basis(&null_basis, u);
    }

    let mut held_rows = Vec::new();
    collect_rows(
        &held[0],
        &pullback,
        &fft,
        time_shift,
        opts.node_stride,
        &mut held_rows,
    );
    let h = DMatrix::from_row_slice(held_rows.len() / COEFFICIENTS, COEFFICIENTS, &held_rows);
    let holdout = |u: &[f64]| -> f64 {
        let v = &h * nalgebra::DVector::from_column_slice(u);
        v.amax()
    };
    let reference_residual = reference.as_deref().map(holdout);
    let candidates = null_basis
        .iter()
        .map(|u| {
            let law = TwoPointLawSpec::from_coefficients("discovered", *map, time_shift, u)?;
            let res = holdout(u);
            let verified = reference_residual.is_none_or(|r| res <= opts.holdout_factor * r);
            Ok(LawCandidate {
                law,
                // ‖A u‖ = ‖R u‖ for unit u
                singular_value: (&r * nalgebra::DVector::from_column_slice(u)).norm() / smax,
                holdout_residual: res,
                verified,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DiscoveryResult {
        candidates,
        singular_values,
        null_basis,
        rows: nrows,
        reference_residual,
    })
}

/// `count` source-free spectral runs from seeds `seed, seed + 1, …`.
pub fn random_ensemble(
    grid: &GridSpec,
    kmax: u32,
    count: usize,
    seed: u64,
    dt: f64,
    nsteps: usize,
) -> Result<Vec<Trajectory>> {
    (0..count as u64)
        .map(|i| {
            let s = random_state(grid, kmax, seed.wrapping_add(i))?;
            evolve(&s, &CurrentSpec::Zero, dt, nsteps, Stepper::Spectral)
        })
        .collect()
}
