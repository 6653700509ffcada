//! Node dynamics `dv_i/dt = rho * sum_{j != i} J_eff[i][j] Q(v_j)`.
//!
//! Voltages are normalized to the supply (rails at 0 and 1, threshold at 0.5)
//! and hard-clamped at the rails. Integration is explicit first order with
//! every derivative sampled from the spins at the start of the step. Because
//! `Q` is binary the derivative is piecewise constant between quantizer
//! transitions, so a step is exact unless a node crosses the threshold.
//!
//! When several nodes would cross the threshold within the same step, only the
//! one that reaches it first (lowest index on exact ties) is allowed to flip.
//! The others stop on their own side of the threshold and are re-evaluated
//! against the updated spins on the next step. Every step therefore holds at
//! most one transition, which keeps two perfectly symmetric nodes from
//! flipping in lockstep forever.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::ising::{energy_unchecked, field_unchecked, ProblemInstance, SpinVector};
use crate::perturbation::{ColumnAction, ColumnStatus, EffectiveMatrix, PerturbationSchedule};
use crate::MAX_SPINS;

/// Switching threshold of the node inverters (`V_DD / 2` normalized).
pub const THRESHOLD: f64 = 0.5;

/// Integration parameters.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DynamicsConfig {
    /// Slew rate per coupling unit, in normalized volts per second (`a / C`).
    pub rho: f64,
    /// Integration step, seconds.
    pub dt: f64,
    /// Total anneal time, seconds.
    pub anneal_time: f64,
    /// Record `(t, H, flips)` at every transition.
    pub trace: bool,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        Self {
            rho: Self::DEFAULT_RHO,
            dt: Self::DEFAULT_DT,
            anneal_time: Self::DEFAULT_ANNEAL_TIME,
            trace: false,
        }
    }
}

impl DynamicsConfig {
    /// 1 V/us per coupling unit: a node driven by a single unit of net field
    /// crosses from a rail to the threshold in 0.5 us, so runs settle into a
    /// local minimum well within the 3 us anneal.
    pub const DEFAULT_RHO: f64 = 1.0e6;
    pub const DEFAULT_DT: f64 = 0.5e-9;
    pub const DEFAULT_ANNEAL_TIME: f64 = 3.0e-6;

    /// Number of integration steps covering the anneal.
    pub fn steps(&self) -> u64 {
        libm::round(self.anneal_time / self.dt) as u64
    }

    pub fn validate(&self, sched: Option<&PerturbationSchedule>) -> Result<()> {
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(invalid("rho", "must be positive and finite"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid("dt", "must be positive and finite"));
        }
        if !(self.anneal_time.is_finite() && self.anneal_time >= self.dt) {
            return Err(invalid("anneal_time", "must be finite and at least dt"));
        }
        let steps = self.anneal_time / self.dt;
        if (steps - libm::round(steps)).abs() > 1e-6 * steps.max(1.0) {
            return Err(invalid("anneal_time", "must be a whole number of steps"));
        }
        if let Some(s) = sched {
            s.validate()?;
            if self.dt > s.column_dwell * (1.0 + 1e-9) {
                return Err(invalid("dt", "must not exceed the column dwell"));
            }
            let per_dwell = s.column_dwell / self.dt;
            if (per_dwell - libm::round(per_dwell)).abs() > 1e-6 {
                return Err(invalid("dt", "must divide the column dwell evenly"));
            }
        }
        Ok(())
    }
}

/// `Q(v)`: -1 below the threshold, +1 at or above it.
pub fn quantize_spin(v: f64) -> Result<i8> {
    if !v.is_finite() {
        return Err(Error::NonFinite("node voltage"));
    }
    Ok(spin_of(v))
}

#[inline]
fn spin_of(v: f64) -> i8 {
    if v >= THRESHOLD {
        1
    } else {
        -1
    }
}

/// `rho * sum_{j != i} row[j] * s_j` for node `i`.
pub fn node_derivative(row: &[f64], spins: &SpinVector, i: usize, rho: f64) -> Result<f64> {
    if row.len() != spins.len() {
        return Err(Error::DimensionMismatch {
            expected: spins.len(),
            actual: row.len(),
        });
    }
    if i >= row.len() {
        return Err(Error::IndexOutOfRange {
            index: i,
            n: row.len(),
        });
    }
    let sum: f64 = row
        .iter()
        .zip(spins.as_slice())
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, (&w, &s))| w * s as f64)
        .sum();
    Ok(rho * sum)
}

/// Voltages, elapsed time and transition count of one machine.
#[derive(Debug, Clone, PartialEq)]
pub struct MachineState {
    pub v: Vec<f64>,
    pub t: f64,
    pub flips: u64,
}

impl MachineState {
    pub fn new(v: Vec<f64>) -> Result<Self> {
        if v.len() > MAX_SPINS {
            return Err(Error::TooManySpins {
                n: v.len(),
                limit: MAX_SPINS,
            });
        }
        if let Some(bad) = v.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(invalid("v", format!("voltage {bad} outside [0, 1]")));
        }
        Ok(Self {
            v,
            t: 0.0,
            flips: 0,
        })
    }

    pub fn spins(&self) -> SpinVector {
        SpinVector::new(self.v.iter().map(|&v| spin_of(v)).collect())
            .expect("quantizer yields only +-1")
    }
}

/// Advances voltages by one step given the effective field of every node
/// (`fields[i] * scale`, in coupling units) and the step-start spins.
///
/// Returns the node that crossed the threshold, if any; `spins` is updated.
fn integrate_step(
    v: &mut [f64],
    spins: &mut [i8],
    fields: &[f64],
    scale: f64,
    rho: f64,
    dt: f64,
) -> Option<usize> {
    let mut first: Option<(usize, f64)> = None;
    let mut held = false;
    for i in 0..v.len() {
        let slope = rho * scale * fields[i];
        let next = (v[i] + dt * slope).clamp(0.0, 1.0);
        if spin_of(next) != spins[i] {
            // fraction of the step needed to reach the threshold
            let when = (THRESHOLD - v[i]) / (dt * slope);
            match first {
                Some((_, w)) if when >= w => held = true,
                Some(_) => {
                    held = true;
                    first = Some((i, when));
                }
                None => first = Some((i, when)),
            }
        }
        v[i] = next;
    }
    let (winner, _) = first?;
    if held {
        for i in 0..v.len() {
            if i != winner && spin_of(v[i]) != spins[i] {
                v[i] = if spins[i] == 1 {
                    THRESHOLD
                } else {
                    THRESHOLD.next_down()
                };
            }
        }
    }
    spins[winner] = -spins[winner];
    Some(winner)
}

/// One explicit step against a dense effective matrix.
///
/// This is the reference form of the update used by [`run_anneal`], which
/// maintains the same fields incrementally.
pub fn euler_step(
    state: &MachineState,
    j_eff: &EffectiveMatrix,
    cfg: &DynamicsConfig,
) -> Result<MachineState> {
    let n = state.v.len();
    if j_eff.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: j_eff.n(),
        });
    }
    let mut spins: Vec<i8> = state.v.iter().map(|&v| spin_of(v)).collect();
    let fields: Vec<f64> = (0..n)
        .map(|i| {
            j_eff
                .row(i)
                .iter()
                .zip(&spins)
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, (&w, &s))| w * s as f64)
                .sum()
        })
        .collect();
    let mut v = state.v.clone();
    let flipped = integrate_step(&mut v, &mut spins, &fields, 1.0, cfg.rho, cfg.dt);
    Ok(MachineState {
        v,
        t: state.t + cfg.dt,
        flips: state.flips + flipped.is_some() as u64,
    })
}

/// One sample of an energy trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TracePoint {
    pub t: f64,
    /// Energy under the programmed couplings.
    pub energy: i64,
    /// Transitions so far.
    pub flips: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub spins: SpinVector,
    /// Final energy under the programmed (unperturbed, unleaked) couplings.
    pub energy: i64,
    pub initial_energy: i64,
    pub flips: u64,
    pub trace: Option<Vec<TracePoint>>,
}

/// Column weights and the field sums built from them.
///
/// With leakage the effective coupling of column `j` at time `t` is
/// `J[i][j] * exp(-(t - r_j) / tau)`, which factors as
/// `exp(-(t - t_ref) / tau) * exp((r_j - t_ref) / tau) * J[i][j]`. The second
/// factor only changes when column `j` is refreshed or zeroed, so the field
/// sums are kept per event and scaled by the first factor at each step.
struct ColumnFields<'a> {
    inst: &'a ProblemInstance,
    sched: &'a PerturbationSchedule,
    status: ColumnStatus,
    t_ref: f64,
    weights: Vec<f64>,
    sums: Vec<f64>,
}

impl<'a> ColumnFields<'a> {
    fn new(inst: &'a ProblemInstance, sched: &'a PerturbationSchedule, spins: &[i8]) -> Self {
        let n = inst.n();
        let mut cf = Self {
            inst,
            sched,
            status: ColumnStatus::programmed(n),
            t_ref: 0.0,
            weights: vec![0.0; n],
            sums: vec![0.0; n],
        };
        cf.rebase(0.0, spins);
        cf
    }

    fn weight(&self, j: usize) -> f64 {
        if self.status.is_zeroed(j) {
            0.0
        } else if self.sched.leak_tau.is_infinite() {
            1.0
        } else {
            libm::exp((self.status.last_refresh(j) - self.t_ref) / self.sched.leak_tau)
        }
    }

    /// Recomputes all weights and sums from scratch relative to `t_ref`.
    fn rebase(&mut self, t_ref: f64, spins: &[i8]) {
        self.t_ref = t_ref;
        let n = self.inst.n();
        for j in 0..n {
            self.weights[j] = self.weight(j);
        }
        for i in 0..n {
            let row = self.inst.row(i);
            self.sums[i] = (0..n)
                .map(|j| row[j] as f64 * self.weights[j] * spins[j] as f64)
                .sum();
        }
    }

    fn scale(&self, t: f64) -> f64 {
        if self.sched.leak_tau.is_infinite() {
            1.0
        } else {
            libm::exp(-(t - self.t_ref) / self.sched.leak_tau)
        }
    }

    fn advance(&mut self, t_from: f64, t_to: f64, anneal_time: f64, spins: &[i8]) -> Result<()> {
        let Some(event) = self.status.advance(t_from, t_to, self.sched, anneal_time)? else {
            return Ok(());
        };
        if event.column == 0 && event.action == ColumnAction::Refresh {
            // once per sweep: re-anchor the exponent and drop accumulated rounding
            self.rebase(event.time, spins);
            return Ok(());
        }
        let j = event.column;
        let w = self.weight(j);
        let delta = (w - self.weights[j]) * spins[j] as f64;
        self.weights[j] = w;
        if delta != 0.0 {
            for i in 0..self.inst.n() {
                self.sums[i] += self.inst.coupling(i, j) as f64 * delta;
            }
        }
        Ok(())
    }

    fn flip(&mut self, m: usize, new_spin: i8) {
        let delta = 2.0 * self.weights[m] * new_spin as f64;
        if delta != 0.0 {
            for i in 0..self.inst.n() {
                self.sums[i] += self.inst.coupling(i, m) as f64 * delta;
            }
        }
    }
}

/// Integrates one anneal from `init` for `cfg.anneal_time`.
///
/// With `sched == None` the programmed couplings drive the nodes unchanged
/// (gradient descent only, no leakage). Otherwise the effective matrix follows
/// the schedule's refresh, gating and leakage.
pub fn run_anneal(
    inst: &ProblemInstance,
    cfg: &DynamicsConfig,
    sched: Option<&PerturbationSchedule>,
    init: &[f64],
) -> Result<RunResult> {
    let n = inst.n();
    if init.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: init.len(),
        });
    }
    if let Some(s) = sched {
        if s.n_columns != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: s.n_columns,
            });
        }
    }
    cfg.validate(sched)?;
    inst.validate()?;
    let mut state = MachineState::new(init.to_vec())?;
    let mut spins: Vec<i8> = state.v.iter().map(|&v| spin_of(v)).collect();

    // programmed fields, kept exact in integers for the energy bookkeeping
    let mut h: Vec<i64> = (0..n).map(|i| field_unchecked(inst, &spins, i)).collect();
    let initial_energy = energy_unchecked(inst, &spins);
    let mut energy = initial_energy;

    let mut columns = sched.map(|s| ColumnFields::new(inst, s, &spins));
    let mut plain: Vec<f64> = h.iter().map(|&x| x as f64).collect();

    let mut trace = cfg.trace.then(|| {
        vec![TracePoint {
            t: 0.0,
            energy,
            flips: 0,
        }]
    });

    let steps = cfg.steps();
    // without a schedule the fields only change on flips, so once every node
    // is pushed towards its own side the remaining steps cannot flip anything
    let settled = |h: &[i64], spins: &[i8]| h.iter().zip(spins).all(|(&f, &s)| f * s as i64 >= 0);
    let mut done = sched.is_none() && settled(&h, &spins);
    for k in 0..steps {
        if done {
            state.t = steps as f64 * cfg.dt;
            break;
        }
        let t = k as f64 * cfg.dt;
        let (fields, scale) = match columns.as_mut() {
            Some(cf) => {
                if k > 0 {
                    cf.advance((k - 1) as f64 * cfg.dt, t, cfg.anneal_time, &spins)?;
                }
                let scale = cf.scale(t);
                (&cf.sums[..], scale)
            }
            None => (&plain[..], 1.0),
        };
        if let Some(bad) = fields.iter().position(|f| !f.is_finite()) {
            return Err(Error::Integration {
                t,
                reason: format!("non-finite field at node {bad}"),
            });
        }
        let flipped = integrate_step(&mut state.v, &mut spins, fields, scale, cfg.rho, cfg.dt);
        state.t = (k + 1) as f64 * cfg.dt;

        if let Some(m) = flipped {
            let new_spin = spins[m];
            // H changes by 2 * s_old * h_m
            energy += -2 * new_spin as i64 * h[m];
            let row = inst.row(m);
            for i in 0..n {
                h[i] += 2 * row[i] as i64 * new_spin as i64;
            }
            match columns.as_mut() {
                Some(cf) => cf.flip(m, new_spin),
                None => {
                    for i in 0..n {
                        plain[i] = h[i] as f64;
                    }
                    done = settled(&h, &spins);
                }
            }
            state.flips += 1;
            if let Some(tr) = trace.as_mut() {
                tr.push(TracePoint {
                    t: state.t,
                    energy,
                    flips: state.flips,
                });
            }
        }
    }

    if let Some(tr) = trace.as_mut() {
        if tr.last().map(|p| p.t) != Some(state.t) {
            tr.push(TracePoint {
                t: state.t,
                energy,
                flips: state.flips,
            });
        }
    }

    let final_spins = SpinVector::new(spins).expect("quantizer yields only +-1");
    debug_assert_eq!(energy, energy_unchecked(inst, final_spins.as_slice()));
    Ok(RunResult {
        spins: final_spins,
        energy,
        initial_energy,
        flips: state.flips,
        trace,
    })
}
