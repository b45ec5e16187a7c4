//! Adaptive explicit RK4 integration with blow-up detection.
//!
//! The step size is the smallest of an advective limit, a slope limit that
//! shrinks as `min u_x` steepens, and the time left to the next output:
//!
//! ```text
//! dt = min( cfl dx / max(|u - gamma|, |u|, 1e-8),
//!           slope_dt_factor / max(|min u_x|, 1),
//!           t_remaining )
//! ```
//!
//! Because the slope limit is inversely proportional to `|m|`, a run
//! approaching wave breaking takes a fixed number of steps per decade of
//! `m`, which is what the rate fit in [`crate::criteria`] relies on.
//!
//! A run is declared blown up when `min u_x` passes `blowup_slope`, when the
//! step underflows while the slope keeps falling, or when
//! [`resolution_loss`] shows that the steepening front has outrun the grid.
//! At desk resolutions the last one is what fires: the slope a grid of size
//! `n` can represent saturates long before `-1e6`.

use serde::{Deserialize, Serialize};

use crate::criteria::{track_slope, SlopeTrace};
use crate::error::{invalid, Error, Result};
use crate::grid::Field;
use crate::model::{rhs, InvariantRecord, ModelParams, State};

/// Speed floor in the advective limit.
const SPEED_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub t_end: f64,
    pub cfl: f64,
    pub slope_dt_factor: f64,
    pub dt_min: f64,
    pub blowup_slope: f64,
    /// Blow-up is also declared once [`resolution_loss`] reaches this value
    /// while the slope is negative and falling; `1` disables the test.
    pub resolution_tol: f64,
    pub record_every: usize,
    pub snapshot_times: Vec<f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n: 256,
            t_end: 1.0,
            cfl: 0.3,
            slope_dt_factor: 0.05,
            dt_min: 1e-12,
            blowup_slope: -1e6,
            resolution_tol: 1e-2,
            record_every: 10,
            snapshot_times: Vec::new(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(invalid("t_end", "must be positive and finite"));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(invalid("cfl", "must lie in (0, 1]"));
        }
        if !(self.slope_dt_factor > 0.0) {
            return Err(invalid("slope_dt_factor", "must be positive"));
        }
        if !(self.dt_min > 0.0) {
            return Err(invalid("dt_min", "must be positive"));
        }
        if !(self.blowup_slope < 0.0) {
            return Err(invalid("blowup_slope", "must be negative"));
        }
        if !(self.resolution_tol > 0.0 && self.resolution_tol <= 1.0) {
            return Err(invalid("resolution_tol", "must lie in (0, 1]"));
        }
        if self.record_every == 0 {
            return Err(invalid("record_every", "must be at least 1"));
        }
        if self.snapshot_times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(invalid("snapshot_times", "must be finite and non-negative"));
        }
        Ok(())
    }
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "cause")]
pub enum Termination {
    ReachedEnd,
    BlowupDetected { t: f64 },
    DtUnderflow { t: f64 },
    NonFiniteState { t: f64 },
}

impl Termination {
    pub fn name(&self) -> &'static str {
        match self {
            Termination::ReachedEnd => "ReachedEnd",
            Termination::BlowupDetected { .. } => "BlowupDetected",
            Termination::DtUnderflow { .. } => "DtUnderflow",
            Termination::NonFiniteState { .. } => "NonFiniteState",
        }
    }

    pub fn time(&self) -> Option<f64> {
        match *self {
            Termination::ReachedEnd => None,
            Termination::BlowupDetected { t }
            | Termination::DtUnderflow { t }
            | Termination::NonFiniteState { t } => Some(t),
        }
    }
}

/// Signal returned by [`adaptive_dt`] when the step falls below `dt_min`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DtUnderflow {
    pub dt: f64,
}

/// Record of one run.
#[derive(Debug, Clone)]
pub struct SimResult {
    pub invariants: Vec<InvariantRecord>,
    /// Index into `slope_trace` of each invariant record.
    pub record_steps: Vec<usize>,
    /// Slope sample after every accepted step (and at `t = 0`).
    pub slope_trace: SlopeTrace,
    /// Step size that produced each slope sample; `0` for the initial one.
    pub dts: Vec<f64>,
    pub snapshots: Vec<(f64, State)>,
    pub final_state: State,
    pub final_time: f64,
    pub termination: Termination,
}

impl SimResult {
    pub fn steps(&self) -> usize {
        self.slope_trace.len() - 1
    }

    /// Last slopes are negative and strictly decreasing over three samples.
    pub fn in_blowup_approach(&self) -> bool {
        let m = &self.slope_trace.m;
        m.len() >= 3 && {
            let k = m.len();
            m[k - 1] < m[k - 2] && m[k - 2] < m[k - 3] && m[k - 1] < 0.0
        }
    }

    pub fn max_e0_drift(&self) -> f64 {
        let e = self.invariants[0].e0;
        self.invariants
            .iter()
            .map(|r| (r.e0 - e).abs() / e.max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }

    pub fn max_mean_drift(&self) -> f64 {
        let m = self.invariants[0].mean_u;
        self.invariants
            .iter()
            .map(|r| (r.mean_u - m).abs())
            .fold(0.0, f64::max)
    }
}

/// Fraction of the `u_x` energy carried by wavenumbers above `n/3`.
///
/// A breaking wave pushes energy into the top of the spectrum. Once a
/// noticeable share sits there the grid no longer resolves the front and
/// the computed slope stops tracking the true one.
pub fn resolution_loss(u: &Field) -> f64 {
    let grid = u.grid();
    let cutoff = grid.n() as f64 / 3.0;
    let (mut total, mut tail) = (0.0, 0.0);
    for (j, c) in u.spectrum().coefficients().iter().enumerate() {
        let k = grid.wavenumber(j) as f64;
        let e = c.norm_sqr() * k * k;
        total += e;
        if k.abs() > cutoff {
            tail += e;
        }
    }
    if total > 0.0 {
        tail / total
    } else {
        0.0
    }
}

/// Step size for the next step starting at time `t`.
pub fn adaptive_dt(
    s: &State,
    p: &ModelParams,
    c: &SimConfig,
    t: f64,
) -> std::result::Result<f64, DtUnderflow> {
    let speed = s
        .u
        .values()
        .iter()
        .map(|&u| (u - p.gamma).abs().max(u.abs()))
        .fold(SPEED_FLOOR, f64::max);
    let min_ux = s.u.derivative(1).min();
    let dt = (c.cfl * s.grid().spacing() / speed)
        .min(c.slope_dt_factor / min_ux.abs().max(1.0))
        .min((c.t_end - t).max(0.0));
    if dt < c.dt_min {
        Err(DtUnderflow { dt })
    } else {
        Ok(dt)
    }
}

/// Extra ODE unknowns integrated with the same RK4 stages as the field.
pub trait Passenger {
    fn derivative(&self, stage: &State, y: &[f64]) -> Vec<f64>;
}

/// No extra unknowns.
pub struct NoPassenger;

impl Passenger for NoPassenger {
    fn derivative(&self, _: &State, _: &[f64]) -> Vec<f64> {
        Vec::new()
    }
}

fn non_finite() -> Error {
    Error::NonFinite { context: "RK4 stage" }
}

/// One classical RK4 step of the coupled field/passenger system.
pub fn step_rk4_coupled<P: Passenger>(
    s: &State,
    y: &[f64],
    p: &ModelParams,
    dt: f64,
    passenger: &P,
) -> Result<(State, Vec<f64>)> {
    let shifted = |h: f64, k: &[f64]| -> Vec<f64> {
        y.iter().zip(k).map(|(a, b)| a + h * b).collect()
    };
    let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());

    let (ku1, kr1) = rhs(s, p)?;
    let ky1 = passenger.derivative(s, y);
    let s2 = s.axpy(0.5 * dt, &ku1, &kr1);
    let y2 = shifted(0.5 * dt, &ky1);
    let (ku2, kr2) = rhs(&s2, p)?;
    let ky2 = passenger.derivative(&s2, &y2);
    let s3 = s.axpy(0.5 * dt, &ku2, &kr2);
    let y3 = shifted(0.5 * dt, &ky2);
    let (ku3, kr3) = rhs(&s3, p)?;
    let ky3 = passenger.derivative(&s3, &y3);
    let s4 = s.axpy(dt, &ku3, &kr3);
    let y4 = shifted(dt, &ky3);
    let (ku4, kr4) = rhs(&s4, p)?;
    let ky4 = passenger.derivative(&s4, &y4);

    let w = dt / 6.0;
    let comb = |a: &[f64], b: &[f64], c: &[f64], d: &[f64]| -> Vec<f64> {
        (0..a.len())
            .map(|i| w * (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i]))
            .collect()
    };
    let du = comb(ku1.values(), ku2.values(), ku3.values(), ku4.values());
    let dr = comb(kr1.values(), kr2.values(), kr3.values(), kr4.values());
    let dy = comb(&ky1, &ky2, &ky3, &ky4);
    let grid = s.grid();
    let next = State {
        u: s.u.zip_with(&crate::grid::Field::from_raw(grid, du), |a, b| a + b),
        rho: s.rho.zip_with(&crate::grid::Field::from_raw(grid, dr), |a, b| a + b),
    };
    let y_next: Vec<f64> = y.iter().zip(&dy).map(|(a, b)| a + b).collect();
    if !next.is_finite() || !finite(&y_next) || !finite(&ky1) {
        return Err(non_finite());
    }
    Ok((next, y_next))
}

/// One classical RK4 step of the field system.
pub fn step_rk4(s: &State, p: &ModelParams, dt: f64) -> Result<State> {
    step_rk4_coupled(s, &[], p, dt, &NoPassenger).map(|(s, _)| s)
}

/// Integrates from `t = 0` to `c.t_end` or until a termination cause fires.
pub fn run(s0: &State, p: &ModelParams, c: &SimConfig) -> Result<SimResult> {
    integrate(s0, p, c, &NoPassenger, Vec::new(), |_, _, _| {})
}

/// Core loop shared by [`run`] and the characteristic tracker. `on_record`
/// is called with `(t, state, passenger)` whenever invariants are recorded.
pub fn integrate<P: Passenger>(
    s0: &State,
    p: &ModelParams,
    c: &SimConfig,
    passenger: &P,
    y0: Vec<f64>,
    mut on_record: impl FnMut(f64, &State, &[f64]),
) -> Result<SimResult> {
    c.validate()?;
    if s0.grid().n() != c.n {
        return Err(Error::GridMismatch {
            left: s0.grid().n(),
            right: c.n,
        });
    }
    if !s0.is_finite() {
        return Err(Error::NonFinite { context: "initial state" });
    }

    let mut snaps: Vec<f64> = c
        .snapshot_times
        .iter()
        .copied()
        .filter(|&t| t <= c.t_end)
        .collect();
    snaps.sort_by(f64::total_cmp);
    snaps.dedup();
    let mut next_snap = 0;

    let mut state = s0.clone();
    let mut y = y0;
    let mut t = 0.0;
    let mut steps = 0usize;
    let mut result = SimResult {
        invariants: Vec::new(),
        record_steps: Vec::new(),
        slope_trace: SlopeTrace::default(),
        dts: Vec::new(),
        snapshots: Vec::new(),
        final_state: s0.clone(),
        final_time: 0.0,
        termination: Termination::ReachedEnd,
    };

    let mut record = |result: &mut SimResult, t: f64, state: &State, y: &[f64], step: usize| {
        if result.invariants.last().is_some_and(|r| r.t >= t) {
            return;
        }
        result.invariants.push(InvariantRecord::measure(t, state, p));
        result.record_steps.push(step);
        on_record(t, state, y);
    };

    result.slope_trace.push(0.0, track_slope(&state));
    result.dts.push(0.0);
    record(&mut result, 0.0, &state, &y, 0);
    while next_snap < snaps.len() && snaps[next_snap] <= 0.0 {
        result.snapshots.push((0.0, state.clone()));
        next_snap += 1;
    }

    let termination = loop {
        if t >= c.t_end {
            break Termination::ReachedEnd;
        }
        let mut dt = match adaptive_dt(&state, p, c, t) {
            Ok(dt) => dt,
            Err(_) => {
                let m = &result.slope_trace.m;
                let k = m.len();
                if k >= 2 && m[k - 1] < 0.0 && m[k - 1] < m[k - 2] {
                    break Termination::BlowupDetected { t };
                }
                break Termination::DtUnderflow { t };
            }
        };
        let mut hits_snapshot = false;
        if let Some(&ts) = snaps.get(next_snap) {
            if t + dt >= ts - 1e-12 * ts.max(1.0) {
                dt = ts - t;
                hits_snapshot = true;
            }
        }
        let hits_end = t + dt >= c.t_end - 1e-12 * c.t_end.max(1.0);

        if dt > 0.0 {
            match step_rk4_coupled(&state, &y, p, dt, passenger) {
                Ok((s, yn)) => {
                    state = s;
                    y = yn;
                }
                Err(_) => break Termination::NonFiniteState { t },
            }
            t = if hits_end { c.t_end.max(t + dt) } else { t + dt };
            if hits_snapshot {
                t = snaps[next_snap].max(t);
            }
            steps += 1;
            let slope = track_slope(&state);
            result.slope_trace.push(t, slope);
            result.dts.push(dt);
            if steps.is_multiple_of(c.record_every) || hits_snapshot {
                record(&mut result, t, &state, &y, steps);
            }
            if slope.m <= c.blowup_slope {
                break Termination::BlowupDetected { t };
            }
            let m = &result.slope_trace.m;
            let falling = slope.m < 0.0 && slope.m < m[m.len() - 2];
            if c.resolution_tol < 1.0 && falling && resolution_loss(&state.u) >= c.resolution_tol {
                break Termination::BlowupDetected { t };
            }
        }
        if hits_snapshot {
            while next_snap < snaps.len() && snaps[next_snap] <= t + 1e-12 * t.max(1.0) {
                result.snapshots.push((snaps[next_snap], state.clone()));
                next_snap += 1;
            }
        }
    };

    record(&mut result, t, &state, &y, steps);
    result.final_state = state;
    result.final_time = t;
    result.termination = termination;
    Ok(result)
}
