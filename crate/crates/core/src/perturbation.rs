//! Continuous column-wise programming of the coupling array.
//!
//! Row-level DACs visit one coupling column per dwell period and rewrite its
//! programmed values, undoing leakage. While the DACs are gated off the
//! selected column is forced to zero instead; it stays zeroed until a later
//! visit finds the DACs enabled again. Between refreshes every coefficient in
//! a column decays as `exp(-elapsed / leak_tau)`.
//!
//! The resulting effective matrix is column-scaled and therefore asymmetric
//! while a perturbation is in progress. Nodes read it row-wise.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::ising::ProblemInstance;

/// Relative slack used when mapping floating-point times onto dwell and gate
/// boundaries, so that `k * dt` lands on the boundary it is meant to hit.
const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PerturbationSchedule {
    /// Seconds each column stays selected (12.5 ns at an 80 MHz refresh clock).
    pub column_dwell: f64,
    pub n_columns: usize,
    /// Seconds between the starts of consecutive gating cycles.
    pub gate_period: f64,
    /// Trailing fraction of each gate period during which the DACs are off.
    pub gate_off_fraction: f64,
    /// Seconds at the end of the anneal during which gating is suppressed.
    pub quiet_tail: f64,
    /// Leakage time constant in seconds; `f64::INFINITY` disables leakage.
    pub leak_tau: f64,
    /// When false the array is refreshed and leaks but is never gated.
    pub enabled: bool,
}

impl PerturbationSchedule {
    pub const DEFAULT_DWELL: f64 = 12.5e-9;
    pub const DEFAULT_GATE_PERIOD: f64 = 800e-9;
    pub const DEFAULT_OFF_FRACTION: f64 = 0.25;
    pub const DEFAULT_QUIET_TAIL: f64 = 800e-9;
    pub const DEFAULT_LEAK_TAU: f64 = 50e-6;

    /// Default gating and leakage for an `n`-column array.
    pub fn new(n_columns: usize) -> Self {
        Self {
            column_dwell: Self::DEFAULT_DWELL,
            n_columns,
            gate_period: Self::DEFAULT_GATE_PERIOD,
            gate_off_fraction: Self::DEFAULT_OFF_FRACTION,
            quiet_tail: Self::DEFAULT_QUIET_TAIL,
            leak_tau: Self::DEFAULT_LEAK_TAU,
            enabled: true,
        }
    }

    /// Refresh and leakage only, no gating.
    pub fn nominal(n_columns: usize) -> Self {
        Self {
            enabled: false,
            ..Self::new(n_columns)
        }
    }

    pub fn sweep_time(&self) -> f64 {
        self.n_columns as f64 * self.column_dwell
    }

    fn gating_active(&self) -> bool {
        self.enabled && self.gate_off_fraction > 0.0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.column_dwell > 0.0 && self.column_dwell.is_finite()) {
            return Err(invalid("column_dwell", "must be positive and finite"));
        }
        if self.n_columns == 0 {
            return Err(invalid("n_columns", "must be at least 1"));
        }
        if !(self.gate_period > 0.0 && self.gate_period.is_finite()) {
            return Err(invalid("gate_period", "must be positive and finite"));
        }
        if !(0.0..1.0).contains(&self.gate_off_fraction) {
            return Err(invalid("gate_off_fraction", "must lie in [0, 1)"));
        }
        if !(self.quiet_tail >= 0.0 && self.quiet_tail.is_finite()) {
            return Err(invalid("quiet_tail", "must be non-negative and finite"));
        }
        if self.gating_active() && self.quiet_tail < self.sweep_time() * (1.0 - TIME_EPS) {
            return Err(invalid("quiet_tail", "must cover at least one full sweep"));
        }
        if self.leak_tau.is_nan() || self.leak_tau <= 0.0 {
            return Err(invalid("leak_tau", "must be positive (or infinite)"));
        }
        Ok(())
    }
}

/// Number of whole `period`s elapsed at time `t`, tolerant of rounding.
#[inline]
fn ticks(t: f64, period: f64) -> u64 {
    libm::floor(t / period + TIME_EPS) as u64
}

/// Column being refreshed at time `t`.
pub fn selected_column(t: f64, sched: &PerturbationSchedule) -> usize {
    (ticks(t, sched.column_dwell) % sched.n_columns as u64) as usize
}

/// Whether the DACs drive the selected column at time `t`.
pub fn dac_enabled(t: f64, sched: &PerturbationSchedule, anneal_time: f64) -> bool {
    if !sched.gating_active() {
        return true;
    }
    let quiet_start = anneal_time - sched.quiet_tail;
    if t >= quiet_start - TIME_EPS * sched.column_dwell {
        return true;
    }
    let cycles = t / sched.gate_period;
    let phase = (cycles - libm::floor(cycles + TIME_EPS)).max(0.0);
    phase < 1.0 - sched.gate_off_fraction - TIME_EPS
}

/// `exp(-elapsed / leak_tau)`.
pub fn leak_factor(elapsed: f64, leak_tau: f64) -> Result<f64> {
    if elapsed.is_nan() || elapsed < 0.0 {
        return Err(invalid(
            "elapsed",
            "time since refresh must be non-negative",
        ));
    }
    if leak_tau.is_infinite() {
        return Ok(1.0);
    }
    Ok(libm::exp(-elapsed / leak_tau))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnAction {
    /// Column rewritten with its programmed values (also restores a zeroed column).
    Refresh,
    /// Column forced to zero during a DAC disable window.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColumnEvent {
    pub column: usize,
    pub time: f64,
    pub action: ColumnAction,
}

/// Per-column refresh state for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnStatus {
    last_refresh: Vec<f64>,
    zeroed: Vec<bool>,
}

impl ColumnStatus {
    /// Every column freshly programmed at `t = 0`.
    pub fn programmed(n_columns: usize) -> Self {
        Self {
            last_refresh: vec![0.0; n_columns],
            zeroed: vec![false; n_columns],
        }
    }

    pub fn len(&self) -> usize {
        self.zeroed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zeroed.is_empty()
    }

    pub fn last_refresh(&self, column: usize) -> f64 {
        self.last_refresh[column]
    }

    pub fn is_zeroed(&self, column: usize) -> bool {
        self.zeroed[column]
    }

    /// Applies the column-selection event in `(t_from, t_to]`, if any.
    ///
    /// The step may not exceed one dwell, so there is at most one event.
    pub fn advance(
        &mut self,
        t_from: f64,
        t_to: f64,
        sched: &PerturbationSchedule,
        anneal_time: f64,
    ) -> Result<Option<ColumnEvent>> {
        if sched.n_columns != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                actual: sched.n_columns,
            });
        }
        if t_to < t_from || t_to - t_from > sched.column_dwell * (1.0 + TIME_EPS) {
            return Err(Error::StepTooLong {
                from: t_from,
                to: t_to,
            });
        }
        let before = ticks(t_from, sched.column_dwell);
        let after = ticks(t_to, sched.column_dwell);
        if after == before {
            return Ok(None);
        }
        let time = (after as f64 * sched.column_dwell).min(t_to);
        let column = (after % sched.n_columns as u64) as usize;
        let action = if dac_enabled(time, sched, anneal_time) {
            self.last_refresh[column] = time;
            self.zeroed[column] = false;
            ColumnAction::Refresh
        } else {
            self.zeroed[column] = true;
            ColumnAction::Zero
        };
        Ok(Some(ColumnEvent {
            column,
            time,
            action,
        }))
    }

    /// Effective scale of column `j` at time `t`: 0 when zeroed, otherwise the
    /// leakage factor since its last refresh.
    pub fn column_scale(&self, j: usize, t: f64, leak_tau: f64) -> Result<f64> {
        if self.zeroed[j] {
            return Ok(0.0);
        }
        leak_factor(t - self.last_refresh[j], leak_tau)
    }
}

/// Functional form of [`ColumnStatus::advance`].
pub fn advance_schedule(
    status: &ColumnStatus,
    t_from: f64,
    t_to: f64,
    sched: &PerturbationSchedule,
    anneal_time: f64,
) -> Result<ColumnStatus> {
    let mut next = status.clone();
    next.advance(t_from, t_to, sched, anneal_time)?;
    Ok(next)
}

/// Dense real-valued coupling matrix seen by the nodes, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveMatrix {
    n: usize,
    data: Vec<f64>,
}

impl EffectiveMatrix {
    /// The programmed couplings, unscaled.
    pub fn programmed(inst: &ProblemInstance) -> Self {
        Self {
            n: inst.n(),
            data: inst.couplings().iter().map(|&w| w as f64).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }
}

/// `J_eff[i][j] = 0` when column `j` is zeroed, else `J[i][j] * leak_factor(t - last_refresh[j])`.
pub fn effective_matrix(
    inst: &ProblemInstance,
    status: &ColumnStatus,
    t: f64,
    sched: &PerturbationSchedule,
) -> Result<EffectiveMatrix> {
    let n = inst.n();
    if status.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: status.len(),
        });
    }
    let scales = (0..n)
        .map(|j| status.column_scale(j, t, sched.leak_tau))
        .collect::<Result<Vec<_>>>()?;
    let data = (0..n)
        .flat_map(|i| {
            let row = inst.row(i);
            scales.iter().zip(row).map(|(&c, &w)| w as f64 * c)
        })
        .collect();
    Ok(EffectiveMatrix { n, data })
}

#[cfg(test)]
mod tests {
    use super::*;

    const NS: f64 = 1e-9;

    fn sched64() -> PerturbationSchedule {
        PerturbationSchedule::new(64)
    }

    #[test]
    fn selected_column_examples() {
        let s = sched64();
        assert_eq!(selected_column(0.0, &s), 0);
        assert_eq!(selected_column(12.5 * NS, &s), 1);
        assert_eq!(selected_column(800.0 * NS, &s), 0);
        assert_eq!(selected_column(799.0 * NS, &s), 63);
    }

    #[test]
    fn dac_gating_examples() {
        let anneal = 3000.0 * NS;
        let mut s = sched64();
        assert!(!dac_enabled(700.0 * NS, &s, anneal));
        assert!(dac_enabled(599.0 * NS, &s, anneal));
        assert!(!dac_enabled(600.0 * NS, &s, anneal));
        assert!(dac_enabled(800.0 * NS, &s, anneal));
        // 2300 ns is in an off phase but inside the quiet tail
        assert!(dac_enabled(2300.0 * NS, &s, anneal));
        s.enabled = false;
        for k in 0..3000 {
            assert!(dac_enabled(k as f64 * NS, &s, anneal));
        }
    }

    #[test]
    fn dac_gating_on_step_grid() {
        // k * 0.5 ns must land on the same side of 600 ns as the exact time
        let s = sched64();
        let anneal = 3000.0 * NS;
        for k in 0..6000u32 {
            let t = k as f64 * 0.5 * NS;
            let exact_ns = k as f64 * 0.5;
            let phase = exact_ns % 800.0;
            let off = phase >= 600.0 && exact_ns < 2200.0;
            assert_eq!(dac_enabled(t, &s, anneal), !off, "k = {k}");
        }
    }

    #[test]
    fn validation() {
        assert!(sched64().validate().is_ok());
        let mut s = sched64();
        s.quiet_tail = 100.0 * NS;
        assert!(s.validate().is_err());
        s.enabled = false;
        assert!(s.validate().is_ok());
        let mut s = sched64();
        s.gate_off_fraction = 1.0;
        assert!(s.validate().is_err());
        let mut s = sched64();
        s.leak_tau = f64::INFINITY;
        assert!(s.validate().is_ok());
        s.leak_tau = 0.0;
        assert!(s.validate().is_err());
    }

    fn step_through(
        status: &mut ColumnStatus,
        s: &PerturbationSchedule,
        from_ns: f64,
        to_ns: f64,
        anneal: f64,
    ) -> Vec<ColumnEvent> {
        let mut events = Vec::new();
        let dt = 0.5;
        let mut t = from_ns;
        while t < to_ns - 1e-12 {
            if let Some(e) = status.advance(t * NS, (t + dt) * NS, s, anneal).unwrap() {
                events.push(e);
            }
            t += dt;
        }
        events
    }

    #[test]
    fn full_sweep_without_gating_refreshes_everything() {
        let mut s = sched64();
        s.enabled = false;
        let mut st = ColumnStatus::programmed(64);
        let events = step_through(&mut st, &s, 0.0, 800.0, 3000.0 * NS);
        assert_eq!(events.len(), 64);
        assert!(events.iter().all(|e| e.action == ColumnAction::Refresh));
        for j in 0..64 {
            assert!(!st.is_zeroed(j));
        }
        // the event at 800 ns hits column 0 again
        assert_eq!(events.last().unwrap().column, 0);
        assert!((st.last_refresh(0) - 800.0 * NS).abs() < 1e-15);
        assert!((st.last_refresh(5) - 5.0 * 12.5 * NS).abs() < 1e-15);
    }

    #[test]
    fn disable_window_zeroes_selected_column_then_restore() {
        let s = sched64();
        let anneal = 3000.0 * NS;
        let mut st = ColumnStatus::programmed(64);
        step_through(&mut st, &s, 0.0, 599.5, anneal);
        assert!((0..64).all(|j| !st.is_zeroed(j)));
        // one dwell inside the window zeroes exactly column 48
        let events = step_through(&mut st, &s, 599.5, 612.0, anneal);
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].column, 48);
        assert_eq!(events[0].action, ColumnAction::Zero);
        let zeroed: Vec<usize> = (0..64).filter(|&j| st.is_zeroed(j)).collect();
        assert_eq!(zeroed, [48]);

        // still zeroed after the next disable window revisits it, restored in the quiet tail
        step_through(&mut st, &s, 612.0, 2199.5, anneal);
        assert!(st.is_zeroed(48));
        let refresh_before = st.last_refresh(48);
        step_through(&mut st, &s, 2199.5, 2800.0, anneal);
        assert!(!st.is_zeroed(48));
        assert!(st.last_refresh(48) > refresh_before);
        assert!((0..64).all(|j| !st.is_zeroed(j)));
    }

    #[test]
    fn step_longer_than_dwell_rejected() {
        let s = sched64();
        let mut st = ColumnStatus::programmed(64);
        assert!(matches!(
            st.advance(0.0, 20.0 * NS, &s, 3000.0 * NS),
            Err(Error::StepTooLong { .. })
        ));
        assert!(st.advance(0.0, 12.5 * NS, &s, 3000.0 * NS).is_ok());
    }

    #[test]
    fn leak_factor_examples() {
        assert_eq!(leak_factor(0.0, 50e-6).unwrap(), 1.0);
        assert_eq!(leak_factor(1.0, f64::INFINITY).unwrap(), 1.0);
        let e = leak_factor(50e-6, 50e-6).unwrap();
        assert!((e - 0.36787944117144233).abs() < 1e-15);
        assert!((e - 0.3679).abs() < 1e-4);
        assert!(leak_factor(-1e-9, 50e-6).is_err());
    }

    #[test]
    fn effective_matrix_examples() {
        let inst = ProblemInstance::from_edges(8, &[(0, 5, 7), (1, 5, -3), (2, 3, 11), (5, 6, 2)])
            .unwrap();
        let mut s = PerturbationSchedule::new(8);
        s.leak_tau = f64::INFINITY;
        let mut st = ColumnStatus::programmed(8);
        let clean = effective_matrix(&inst, &st, 100.0 * NS, &s).unwrap();
        assert_eq!(clean, EffectiveMatrix::programmed(&inst));

        st.zeroed[5] = true;
        let m = effective_matrix(&inst, &st, 100.0 * NS, &s).unwrap();
        for i in 0..8 {
            assert_eq!(m.get(i, 5), 0.0);
            for j in (0..8).filter(|&j| j != 5) {
                assert_eq!(m.get(i, j), inst.coupling(i, j) as f64);
            }
        }
        // asymmetric while the column is zeroed
        assert_eq!(m.get(5, 0), 7.0);
        assert_eq!(m.get(0, 5), 0.0);

        let s = PerturbationSchedule::new(8);
        let mut st = ColumnStatus::programmed(8);
        st.last_refresh[5] = 2.0e-6;
        let m = effective_matrix(&inst, &st, 3.0e-6, &s).unwrap();
        let expected = 7.0 * libm::exp(-0.02);
        assert!((m.get(0, 5) - expected).abs() < 1e-12);
        assert!((libm::exp(-0.02) - 0.9802).abs() < 1e-4);
    }

    #[test]
    fn restoration_after_quiet_tail() {
        let inst = crate::instances::generate_random_qubo(64, 0.5, 15, 3).unwrap();
        let mut s = sched64();
        s.leak_tau = f64::INFINITY;
        let anneal = 3000.0 * NS;
        let mut st = ColumnStatus::programmed(64);
        step_through(&mut st, &s, 0.0, 1000.0, anneal);
        assert!((0..64).any(|j| st.is_zeroed(j)));
        step_through(&mut st, &s, 1000.0, 3000.0, anneal);
        let m = effective_matrix(&inst, &st, anneal, &s).unwrap();
        assert_eq!(m, EffectiveMatrix::programmed(&inst));
    }

    #[test]
    fn staleness_bounded_by_one_sweep_without_gating() {
        let s = PerturbationSchedule::nominal(16);
        let mut st = ColumnStatus::programmed(16);
        let anneal = 3000.0 * NS;
        let mut t = 0.0;
        while t < 3000.0 {
            st.advance(t * NS, (t + 0.5) * NS, &s, anneal).unwrap();
            t += 0.5;
            for j in 0..16 {
                assert!(!st.is_zeroed(j));
                assert!(t * NS - st.last_refresh(j) <= s.sweep_time() * (1.0 + 1e-9));
            }
        }
    }

    #[test]
    fn leakage_is_monotone_between_refreshes() {
        let inst = crate::instances::generate_random_qubo(10, 0.6, 15, 9).unwrap();
        let s = PerturbationSchedule::new(10);
        let st = ColumnStatus::programmed(10);
        let mut prev = effective_matrix(&inst, &st, 0.0, &s).unwrap();
        for k in 1..50 {
            let m = effective_matrix(&inst, &st, k as f64 * 10.0 * NS, &s).unwrap();
            for i in 0..10 {
                for j in 0..10 {
                    assert!(m.get(i, j).abs() <= prev.get(i, j).abs());
                }
            }
            prev = m;
        }
    }
}
