//! Scenario parameters, time arithmetic and periodic arrival schedules.
//!
//! Time is counted on two scales. A *mini-slot* has the fixed duration
//! `t_slot`; the global clock is a mini-slot counter starting at 0 on a
//! message-cycle boundary. A *slot* is one back-off tick: one mini-slot when
//! the channel is idle, `k_busy` mini-slots when it is busy.

use rand::Rng;

use crate::error::{Error, Result};

pub type VehicleId = usize;

/// Relative tolerance for the `(t_tx + t_difs) / t_slot` integrality test.
const K_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolParams {
    /// Message frequency, Hz.
    pub lambda: f64,
    pub n_vehicles: usize,
    /// Entry-point multiplier of the CIDC rule.
    pub m_param: u32,
    /// Idle slot duration, seconds.
    pub t_slot: f64,
    /// Packet transmission duration, seconds.
    pub t_tx: f64,
    pub t_difs: f64,
    /// Mini-slots per busy slot, `(t_tx + t_difs) / t_slot`.
    pub k_busy: u32,
    /// DCF contention window. Unused by CIDC.
    pub w_window: u32,
    /// Percent of neighbours replaced per message cycle.
    pub delta_churn: f64,
    pub n_cycles: u32,
    pub n_rounds: u32,
    pub rng_seed: u64,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        ProtocolParams {
            lambda: 10.0,
            n_vehicles: 100,
            m_param: 2,
            t_slot: 13e-6,
            t_tx: 254e-6,
            t_difs: 58e-6,
            k_busy: 24,
            w_window: 64,
            delta_churn: 0.0,
            n_cycles: 160,
            n_rounds: 10,
            rng_seed: 1,
        }
    }
}

impl ProtocolParams {
    /// Sets the transmission duration and recomputes `k_busy`.
    pub fn set_t_tx(&mut self, t_tx: f64) -> Result<()> {
        self.k_busy = derive_k(t_tx, self.t_difs, self.t_slot)?;
        self.t_tx = t_tx;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParam(msg));
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be positive, got {}", self.lambda));
        }
        if !(self.t_slot > 0.0) || self.t_tx < 0.0 || self.t_difs < 0.0 {
            return bad("durations must be non-negative and t_slot positive".into());
        }
        if self.n_vehicles == 0 {
            return bad("n_vehicles must be at least 1".into());
        }
        if self.m_param == 0 {
            return bad("m_param must be at least 1".into());
        }
        if self.w_window == 0 {
            return bad("w_window must be at least 1".into());
        }
        if !(0.0..=100.0).contains(&self.delta_churn) {
            return bad(format!("delta_churn must lie in [0, 100], got {}", self.delta_churn));
        }
        if self.lambda * self.t_slot >= 1.0 {
            return bad("lambda * t_slot must be below 1".into());
        }
        if self.n_cycles == 0 || self.n_rounds == 0 {
            return bad("n_cycles and n_rounds must be positive".into());
        }
        let k = derive_k(self.t_tx, self.t_difs, self.t_slot)?;
        if k != self.k_busy {
            return bad(format!("k_busy = {} but timing gives K = {k}", self.k_busy));
        }
        let minis = self.minis_per_cycle();
        if self.n_vehicles as u64 > minis {
            return Err(Error::TooManyVehicles { n_vehicles: self.n_vehicles, minis_per_cycle: minis });
        }
        Ok(())
    }

    /// Message period in mini-slots, `floor((1/λ) / t_slot)`.
    pub fn minis_per_cycle(&self) -> u64 {
        ((1.0 / self.lambda) / self.t_slot + K_TOLERANCE).floor() as u64
    }

    pub fn minis_to_secs(&self, minis: u64) -> f64 {
        minis as f64 * self.t_slot
    }

    /// Number of neighbours each vehicle forgets per cycle under churn.
    pub fn churn_count(&self) -> usize {
        let raw = self.delta_churn * (self.n_vehicles.saturating_sub(1)) as f64 / 100.0;
        // 1.0000000000000002 must not round up to 2
        (raw - 1e-9).ceil().max(0.0) as usize
    }
}

/// `K = (t_tx + t_difs) / t_slot`, which must be a positive integer.
pub fn derive_k(t_tx: f64, t_difs: f64, t_slot: f64) -> Result<u32> {
    let quotient = (t_tx + t_difs) / t_slot;
    let k = quotient.round();
    let ok = t_slot > 0.0 && quotient.is_finite() && k >= 1.0 && (quotient - k).abs() <= K_TOLERANCE * k;
    if ok {
        Ok(k as u32)
    } else {
        Err(Error::NonIntegralK { t_tx, t_difs, t_slot, quotient })
    }
}

/// Position `k[s]`: slot `k`, 1-based mini-slot `s` inside it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TimeIndex {
    pub slot: u64,
    pub mini: u32,
}

impl TimeIndex {
    pub fn new(slot: u64, mini: u32, busy: bool, k_busy: u32) -> Result<Self> {
        let max = if busy { k_busy } else { 1 };
        if mini == 0 || mini > max {
            return Err(Error::InvalidParam(format!(
                "mini-slot {mini} outside 1..={max} for {} slot",
                if busy { "a busy" } else { "an idle" }
            )));
        }
        Ok(TimeIndex { slot, mini })
    }
}

/// Anything that yields packet generations in increasing mini-slot order.
pub trait ArrivalSource {
    /// First generation at or after `mini`. Generations at equal mini-slots
    /// are not allowed.
    fn next_at_or_after(&self, mini: u64) -> Option<(u64, VehicleId)>;
}

/// Fixed per-vehicle offsets repeated every message cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalSchedule {
    cycle_len: u64,
    /// Offset of each vehicle in seconds.
    offsets: Vec<f64>,
    /// Offset of each vehicle in mini-slots within the cycle.
    minis: Vec<u64>,
    /// `(mini, vehicle)` sorted by mini.
    order: Vec<(u64, VehicleId)>,
}

impl ArrivalSchedule {
    /// Builds a schedule from explicit offsets in seconds.
    pub fn from_offsets(params: &ProtocolParams, offsets: Vec<f64>) -> Result<Self> {
        let cycle_len = params.minis_per_cycle();
        let period = 1.0 / params.lambda;
        let mut minis = Vec::with_capacity(offsets.len());
        for &sigma in &offsets {
            if !(0.0..period).contains(&sigma) {
                return Err(Error::InvalidParam(format!("offset {sigma} outside [0, {period})")));
            }
            let q = quantize(sigma, params.t_slot);
            if q >= cycle_len {
                return Err(Error::InvalidParam(format!("offset {sigma} falls past the last mini-slot")));
            }
            minis.push(q);
        }
        let mut order: Vec<(u64, VehicleId)> = minis.iter().copied().zip(0..).collect();
        order.sort_unstable();
        if order.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidParam("two offsets share a mini-slot".into()));
        }
        Ok(ArrivalSchedule { cycle_len, offsets, minis, order })
    }

    pub fn cycle_len(&self) -> u64 {
        self.cycle_len
    }

    pub fn n_vehicles(&self) -> usize {
        self.offsets.len()
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    /// Cycle-relative mini-slot of each vehicle.
    pub fn mini_offsets(&self) -> &[u64] {
        &self.minis
    }

    /// Every generation with `from_mini <= index <= to_mini`, in order.
    pub fn arrivals_in_window(&self, from_mini: u64, to_mini: u64) -> Vec<(VehicleId, u64)> {
        let mut out = Vec::new();
        if from_mini > to_mini || self.order.is_empty() {
            return out;
        }
        for cycle in from_mini / self.cycle_len..=to_mini / self.cycle_len {
            let base = cycle * self.cycle_len;
            for &(q, v) in &self.order {
                let m = base + q;
                if m < from_mini {
                    continue;
                }
                if m > to_mini {
                    break;
                }
                out.push((v, m));
            }
        }
        out
    }
}

impl ArrivalSource for ArrivalSchedule {
    fn next_at_or_after(&self, mini: u64) -> Option<(u64, VehicleId)> {
        if self.order.is_empty() {
            return None;
        }
        let cycle = mini / self.cycle_len;
        let rel = mini % self.cycle_len;
        let idx = self.order.partition_point(|&(q, _)| q < rel);
        let (base, (q, v)) = match self.order.get(idx) {
            Some(&hit) => (cycle * self.cycle_len, hit),
            None => ((cycle + 1) * self.cycle_len, self.order[0]),
        };
        Some((base + q, v))
    }
}

/// Mini-slot index of an offset: `floor(sigma / t_slot)`.
pub fn quantize(sigma: f64, t_slot: f64) -> u64 {
    (sigma / t_slot + K_TOLERANCE).floor() as u64
}

/// Draws one uniform offset in `[0, 1/λ)` per vehicle. A vehicle whose
/// offset lands on an occupied mini-slot redraws.
pub fn draw_offsets<R: Rng + ?Sized>(params: &ProtocolParams, rng: &mut R) -> Result<ArrivalSchedule> {
    let cycle_len = params.minis_per_cycle();
    if params.n_vehicles as u64 > cycle_len {
        return Err(Error::TooManyVehicles { n_vehicles: params.n_vehicles, minis_per_cycle: cycle_len });
    }
    let period = 1.0 / params.lambda;
    let mut taken = std::collections::HashSet::with_capacity(params.n_vehicles);
    let mut offsets = Vec::with_capacity(params.n_vehicles);
    for _ in 0..params.n_vehicles {
        loop {
            let sigma = rng.gen::<f64>() * period;
            let q = quantize(sigma, params.t_slot);
            if q < cycle_len && taken.insert(q) {
                offsets.push(sigma);
                break;
            }
        }
    }
    ArrivalSchedule::from_offsets(params, offsets)
}

/// A scripted list of generations, mostly for tests and golden traces.
#[derive(Debug, Clone, Default)]
pub struct ScriptedArrivals {
    events: Vec<(u64, VehicleId)>,
}

impl ScriptedArrivals {
    pub fn new(mut events: Vec<(u64, VehicleId)>) -> Self {
        events.sort_unstable();
        ScriptedArrivals { events }
    }

    pub fn none() -> Self {
        Self::default()
    }
}

impl ArrivalSource for ScriptedArrivals {
    fn next_at_or_after(&self, mini: u64) -> Option<(u64, VehicleId)> {
        let idx = self.events.partition_point(|&(m, _)| m < mini);
        self.events.get(idx).copied()
    }
}
