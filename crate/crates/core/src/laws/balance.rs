//! Streaming global balance and pointwise residual of a law along a trajectory.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::eval::LawEvaluator;
use super::TwoPointLawSpec;
use crate::current::{CurrentSpec, PreparedCurrent};
use crate::error::{Error, Result};
use crate::grid::{FieldState, GridSpec};
use crate::maxwell::{evolve_streaming, Stepper, Trajectory};
use crate::sum::compensated_sum;

/// Finite-difference rule for `∂t ρ` in the pointwise residual.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimeStencil {
    /// Three-point, second order.
    #[default]
    Centered2,
    /// Five-point, fourth order.
    Centered4,
}

impl TimeStencil {
    fn half_width(self) -> usize {
        match self {
            TimeStencil::Centered2 => 1,
            TimeStencil::Centered4 => 2,
        }
    }

    /// Weights for each position in a window of `2w + 1` samples, and their divisor.
    fn rows(self) -> (&'static [&'static [f64]], f64) {
        match self {
            TimeStencil::Centered2 => (
                &[&[-3.0, 4.0, -1.0], &[-1.0, 0.0, 1.0], &[1.0, -4.0, 3.0]],
                2.0,
            ),
            TimeStencil::Centered4 => (
                &[
                    &[-25.0, 48.0, -36.0, 16.0, -3.0],
                    &[-3.0, -10.0, 18.0, -6.0, 1.0],
                    &[1.0, -8.0, 0.0, 8.0, -1.0],
                    &[-1.0, 6.0, -18.0, 10.0, 3.0],
                    &[3.0, -16.0, 36.0, -48.0, 25.0],
                ],
                12.0,
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BalanceOptions {
    /// Also evaluate `r = Dt ρ + ∇·𝒥 − S` at every node.
    pub pointwise: bool,
    pub stencil: TimeStencil,
}

impl BalanceOptions {
    pub fn pointwise(stencil: TimeStencil) -> Self {
        Self {
            pointwise: true,
            stencil,
        }
    }
}

/// The most recent states of a run, newest last.
#[derive(Debug, Clone)]
pub struct HistoryBuffer {
    capacity: usize,
    states: VecDeque<FieldState>,
}

impl HistoryBuffer {
    pub fn new(capacity: usize) -> Self {
        let capacity = capacity.max(1);
        Self {
            capacity,
            states: VecDeque::with_capacity(capacity),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn push(&mut self, s: FieldState) {
        if self.states.len() == self.capacity {
            self.states.pop_front();
        }
        self.states.push_back(s);
    }

    /// State `steps_back` pushes before the newest one.
    pub fn back(&self, steps_back: usize) -> Result<&FieldState> {
        let n = self.states.len();
        if steps_back >= n {
            return Err(Error::HistoryUnderflow {
                needed: steps_back + 1,
                available: n,
            });
        }
        Ok(&self.states[n - 1 - steps_back])
    }

    pub fn clear(&mut self) {
        self.states.clear();
    }
}

/// Time series of one law's balance along a run.
#[derive(Debug, Clone, PartialEq)]
pub struct BalanceReport {
    pub law: String,
    pub dt: f64,
    pub t: Vec<f64>,
    /// `Q = ∫ρ`.
    pub q: Vec<f64>,
    /// `∫₀ᵗ ∫S`.
    pub source_cum: Vec<f64>,
    /// `Q(t) − Q(0) − ∫₀ᵗ∫S`.
    pub defect: Vec<f64>,
    pub r_l2: Option<Vec<f64>>,
    pub r_max: Option<Vec<f64>>,
    /// `max|Dt ρ| + max|∇·𝒥| + max|S|` per step: the size of the cancelling terms.
    pub r_scale: Option<Vec<f64>>,
    /// `‖E‖² + ‖B‖²` of the first state.
    pub energy0: f64,
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

impl BalanceReport {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn max_abs_defect(&self) -> f64 {
        max_abs(&self.defect)
    }

    /// Largest defect relative to the initial field energy (absolute if that is zero).
    pub fn max_relative_defect(&self) -> f64 {
        let d = self.max_abs_defect();
        if self.energy0 > 0.0 {
            d / self.energy0
        } else {
            d
        }
    }

    pub fn max_residual_l2(&self) -> Option<f64> {
        self.r_l2.as_deref().map(max_abs)
    }

    pub fn max_residual(&self) -> Option<f64> {
        self.r_max.as_deref().map(max_abs)
    }

    /// Largest `r_max / r_scale` over the run.
    pub fn max_relative_residual(&self) -> Option<f64> {
        let (r, s) = (self.r_max.as_ref()?, self.r_scale.as_ref()?);
        Some(
            r.iter()
                .zip(s)
                .fold(0.0, |m, (r, s)| m.max(if *s > 0.0 { r / s } else { *r })),
        )
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("# schema=1\nt,Q,source_cum,defect,r_l2,r_max\n");
        for n in 0..self.len() {
            let opt = |v: &Option<Vec<f64>>| {
                v.as_ref()
                    .map(|v| format!("{:.17e}", v[n]))
                    .unwrap_or_default()
            };
            let _ = writeln!(
                out,
                "{:.17e},{:.17e},{:.17e},{:.17e},{},{}",
                self.t[n],
                self.q[n],
                self.source_cum[n],
                self.defect[n],
                opt(&self.r_l2),
                opt(&self.r_max)
            );
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        std::fs::write(path, self.to_csv())
    }
}

/// Fourth-order running integral of uniformly spaced samples.
fn cumulative(s: &[f64], dt: f64) -> Vec<f64> {
    let n = s.len();
    let mut c = vec![0.0; n];
    if n == 2 {
        c[1] = 0.5 * dt * (s[0] + s[1]);
    } else if n >= 3 {
        c[1] = dt * (5.0 * s[0] + 8.0 * s[1] - s[2]) / 12.0;
        for i in 2..n {
            c[i] = if i % 2 == 0 {
                c[i - 2] + dt / 3.0 * (s[i - 2] + 4.0 * s[i - 1] + s[i])
            } else {
                c[i - 1] + dt * (-s[i - 2] + 8.0 * s[i - 1] + 5.0 * s[i]) / 12.0
            };
        }
    }
    c
}

struct Pending {
    rho: Vec<f64>,
    /// `∇·𝒥 − S`.
    rest: Vec<f64>,
    rest_scale: f64,
}

/// Consumes states one at a time and accumulates a [`BalanceReport`].
pub struct BalanceTracker {
    eval: LawEvaluator,
    current: PreparedCurrent,
    dt: f64,
    shift: usize,
    opts: BalanceOptions,
    history: HistoryBuffer,
    pushed: usize,
    t: Vec<f64>,
    q: Vec<f64>,
    s: Vec<f64>,
    energy0: Option<f64>,
    window: VecDeque<Pending>,
    r_l2: Vec<f64>,
    r_max: Vec<f64>,
    r_scale: Vec<f64>,
}

impl BalanceTracker {
    /// States must be pushed at spacing `dt`; the law's shift counts those steps.
    pub fn new(
        law: &TwoPointLawSpec,
        grid: &GridSpec,
        current: &CurrentSpec,
        dt: f64,
        opts: BalanceOptions,
    ) -> Result<Self> {
        Self::with_stride(law, grid, current, dt, 1, opts)
    }

    /// States are pushed every `stride` integration steps of size `dt`.
    pub fn with_stride(
        law: &TwoPointLawSpec,
        grid: &GridSpec,
        current: &CurrentSpec,
        dt: f64,
        stride: usize,
        opts: BalanceOptions,
    ) -> Result<Self> {
        let stride = stride.max(1);
        if !law.time_shift.is_multiple_of(stride) {
            return Err(Error::InvalidArgument(format!(
                "time shift of {} steps is not a multiple of the sampling stride {stride}",
                law.time_shift
            )));
        }
        if !(dt.is_finite() && dt != 0.0) {
            return Err(Error::InvalidArgument(format!("bad time step {dt}")));
        }
        let shift = law.time_shift / stride;
        Ok(Self {
            eval: LawEvaluator::new(law, grid)?,
            current: PreparedCurrent::new(current, grid)?,
            dt: dt * stride as f64,
            shift,
            opts,
            history: HistoryBuffer::new(shift + 1),
            pushed: 0,
            t: Vec::new(),
            q: Vec::new(),
            s: Vec::new(),
            energy0: None,
            window: VecDeque::new(),
            r_l2: Vec::new(),
            r_max: Vec::new(),
            r_scale: Vec::new(),
        })
    }

    pub fn law(&self) -> &TwoPointLawSpec {
        self.eval.law()
    }

    pub fn push(&mut self, state: &FieldState) -> Result<()> {
        if !state.is_finite() {
            return Err(Error::NonFinite("state pushed to balance tracker"));
        }
        if self.energy0.is_none() {
            self.energy0 = Some(state.energy());
        }
        self.history.push(state.clone());
        self.pushed += 1;
        if self.history.len() == self.shift + 1 {
            self.process_pair()?;
        }
        Ok(())
    }

    fn process_pair(&mut self) -> Result<()> {
        let now = self.history.back(self.shift)?;
        let shifted = self.history.back(0)?;
        let grid = *self.eval.grid();
        let dv = grid.cell_volume();
        let g = self.eval.partner(shifted)?;
        let rho = self.eval.density_with(now, &g);
        let src = if self.current.is_zero() {
            None
        } else {
            let (jn, js) = (self.current.sample(now.t), self.current.sample(shifted.t));
            Some(self.eval.source_with(now, &g, &jn, &js))
        };
        self.t.push(now.t);
        self.q.push(dv * compensated_sum(&rho));
        self.s
            .push(src.as_deref().map_or(0.0, |s| dv * compensated_sum(s)));
        if self.opts.pointwise {
            let div = self.eval.flux_divergence_with(now, &g);
            let (rest, rest_scale) = match &src {
                Some(s) => (
                    div.iter().zip(s).map(|(d, s)| d - s).collect(),
                    max_abs(&div) + max_abs(s),
                ),
                None => {
                    let m = max_abs(&div);
                    (div, m)
                }
            };
            self.window.push_back(Pending {
                rho,
                rest,
                rest_scale,
            });
            let w = self.opts.stencil.half_width();
            let size = 2 * w + 1;
            if self.window.len() > size {
                self.window.pop_front();
            }
            if self.window.len() == size {
                if self.t.len() == size {
                    for j in 0..w {
                        self.residual_at(j);
                    }
                }
                self.residual_at(w);
            }
        }
        Ok(())
    }

    /// Residual at window position `j`, appended in order.
    fn residual_at(&mut self, j: usize) {
        let (rows, div) = self.opts.stencil.rows();
        let row = rows[j];
        let h = 1.0 / (div * self.dt);
        let n = self.window[0].rho.len();
        let target = &self.window[j];
        let mut sq = Vec::with_capacity(n);
        let (mut rmax, mut dmax) = (0.0f64, 0.0f64);
        for x in 0..n {
            let mut d = 0.0;
            for (c, p) in row.iter().zip(&self.window) {
                if *c != 0.0 {
                    d += c * p.rho[x];
                }
            }
            d *= h;
            let r = d + target.rest[x];
            dmax = dmax.max(d.abs());
            rmax = rmax.max(r.abs());
            sq.push(r * r);
        }
        let dv = self.eval.grid().cell_volume();
        self.r_l2.push((dv * compensated_sum(&sq)).sqrt());
        self.r_max.push(rmax);
        self.r_scale.push(dmax + target.rest_scale);
    }

    pub fn finish(mut self) -> Result<BalanceReport> {
        let pairs = self.q.len();
        if pairs < 2 {
            return Err(Error::HistoryUnderflow {
                needed: self.shift + 2,
                available: self.pushed,
            });
        }
        if self.opts.pointwise {
            let w = self.opts.stencil.half_width();
            if pairs < 2 * w + 1 {
                return Err(Error::HistoryUnderflow {
                    needed: self.shift + 2 * w + 1,
                    available: self.pushed,
                });
            }
            for j in w + 1..2 * w + 1 {
                self.residual_at(j);
            }
        }
        let source_cum = cumulative(&self.s, self.dt);
        let q0 = self.q[0];
        let defect = self
            .q
            .iter()
            .zip(&source_cum)
            .map(|(q, c)| q - q0 - c)
            .collect();
        let pw = self.opts.pointwise;
        Ok(BalanceReport {
            law: self.eval.law().name.clone(),
            dt: self.dt,
            t: self.t,
            q: self.q,
            source_cum,
            defect,
            r_l2: pw.then_some(self.r_l2),
            r_max: pw.then_some(self.r_max),
            r_scale: pw.then_some(self.r_scale),
            energy0: self.energy0.unwrap_or(0.0),
        })
    }
}

/// Pointwise residual with the second-order time stencil.
pub fn residual(traj: &Trajectory, law: &TwoPointLawSpec) -> Result<BalanceReport> {
    residual_with(traj, law, BalanceOptions::pointwise(TimeStencil::Centered2))
}

pub fn residual_with(
    traj: &Trajectory,
    law: &TwoPointLawSpec,
    opts: BalanceOptions,
) -> Result<BalanceReport> {
    if traj.is_empty() {
        return Err(Error::HistoryUnderflow {
            needed: law.time_shift + 2,
            available: 0,
        });
    }
    let mut tracker = BalanceTracker::new(law, traj.grid(), &traj.source, traj.dt, opts)?;
    for s in &traj.states {
        tracker.push(s)?;
    }
    tracker.finish()
}

/// Evolves once and tracks every law, sampling every `stride` steps.
#[allow(clippy::too_many_arguments)]
pub fn balance_streaming(
    initial: &FieldState,
    current: &CurrentSpec,
    dt: f64,
    nsteps: usize,
    stepper: Stepper,
    laws: &[TwoPointLawSpec],
    opts: BalanceOptions,
    stride: usize,
) -> Result<Vec<BalanceReport>> {
    let stride = stride.max(1);
    if !nsteps.is_multiple_of(stride) {
        return Err(Error::InvalidArgument(format!(
            "{nsteps} steps are not a multiple of the sampling stride {stride}"
        )));
    }
    let mut trackers = laws
        .iter()
        .map(|l| BalanceTracker::with_stride(l, initial.grid(), current, dt, stride, opts))
        .collect::<Result<Vec<_>>>()?;
    evolve_streaming(initial, current, dt, nsteps, stepper, stride, |_, s| {
        trackers.iter_mut().try_for_each(|t| t.push(s))
    })?;
    trackers.into_iter().map(BalanceTracker::finish).collect()
}
