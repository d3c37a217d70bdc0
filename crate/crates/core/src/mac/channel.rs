//! Slot-resolution channel engine shared by CIDC and the DCF baseline.
//!
//! Every contending packet is stored with the absolute slot in which its
//! back-off counter reaches zero, so the remaining counter of a packet in
//! slot `k` is `fire_slot - k` and the busy schedule `n_o(k)` is simply the
//! number of packets filed under `k`. A counter therefore drops by exactly one
//! per slot, whether that slot lasts one mini-slot or `K`.

use std::collections::BTreeMap;

use crate::mac::trace::{CycleStats, SlotRecord, TraceSummary};
use crate::mac::{Outcome, PacketRecord, Protocol};
use crate::model::{ArrivalSource, ProtocolParams, VehicleId};

pub type PacketId = usize;

/// A transmission occupying the channel in the current slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OnAir {
    pub vehicle: VehicleId,
    /// Generation mini-slot of the packet on the air.
    pub generation: u64,
}

/// What the MAC of an arriving packet may use to pick its initial counter.
#[derive(Debug, Clone, Copy)]
pub struct ArrivalContext<'a> {
    pub vehicle: VehicleId,
    pub mini: u64,
    pub slot: u64,
    /// 1-based mini-slot within the slot.
    pub within: u32,
    /// `c(k)` at the start of the slot.
    pub c_slot_start: usize,
    /// Earlier generations inside this slot.
    pub arrivals_before: usize,
    /// Expiries inside this slot so far, including one caused by this
    /// generation.
    pub expired_so_far: usize,
    pub on_air: &'a [OnAir],
}

impl ArrivalContext<'_> {
    /// Packets contending right now, as a network observer sees them,
    /// excluding the arriving packet.
    pub fn observer_count(&self) -> usize {
        self.c_slot_start + self.arrivals_before - self.expired_so_far
    }
}

/// How the packet-to-slot ratio is normalised.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RatioMode {
    /// `(c + arrivals) / max{b_max, e_v}` with the virtual entry point.
    VirtualEntry { m: u32 },
    /// `(c + arrivals) / W` for a fixed contention window.
    Window { w: u32 },
}

/// Initial back-off counter selection, the only place where the two
/// protocols differ.
pub trait AccessRule {
    fn protocol(&self) -> Protocol;

    fn ratio_mode(&self) -> RatioMode;

    /// Called once for every message cycle boundary the clock passes.
    fn on_cycle_start(&mut self, _cycle: u64) {}

    fn initial_counter(&mut self, ctx: &ArrivalContext<'_>) -> u32;

    /// Called at the end of every busy slot with the packets that were on
    /// the air. `success` is false for a collision.
    fn on_transmission_end(&mut self, _on_air: &[OnAir], _success: bool) {}
}

/// CIDC entry point with the exact network-observer contention count.
#[derive(Debug, Clone, Copy)]
pub struct ObserverRule {
    pub m: u32,
}

impl AccessRule for ObserverRule {
    fn protocol(&self) -> Protocol {
        Protocol::Cidc
    }

    fn ratio_mode(&self) -> RatioMode {
        RatioMode::VirtualEntry { m: self.m }
    }

    fn initial_counter(&mut self, ctx: &ArrivalContext<'_>) -> u32 {
        crate::mac::entry_point(ctx.observer_count() as u32, self.m)
    }
}

#[derive(Debug, Clone, Copy)]
struct Timing {
    k_busy: u32,
    t_slot: f64,
    t_difs: f64,
}

#[derive(Debug, Clone)]
struct Live {
    vehicle: VehicleId,
    generation: u64,
    gen_slot: u64,
    entry: u32,
    fire_slot: u64,
}

/// Everything that happened in one slot.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SlotEvents {
    pub record: SlotRecord,
    /// `(packet, entry point)` for each generation in the slot.
    pub arrivals: Vec<(PacketId, u32)>,
    pub transmitted: Vec<PacketId>,
    pub collided: bool,
    pub expired: Vec<PacketId>,
}

/// Network-observer view of the channel.
#[derive(Debug, Clone)]
pub struct ChannelState {
    slot: u64,
    start_mini: u64,
    timing: Timing,
    cycle_len: u64,
    /// fire slot -> packets whose counter reaches 0 there.
    schedule: BTreeMap<u64, Vec<PacketId>>,
    contending: usize,
    /// Per vehicle: its packet still backing off, if any.
    pending: Vec<Option<PacketId>>,
    live: Vec<Live>,
    done: Vec<Option<(Outcome, Option<(u64, u64)>, u32)>>,
    next_cycle: u64,
}

impl ChannelState {
    /// Empty, idle channel at slot 0, mini-slot 0.
    pub fn new(params: &ProtocolParams) -> Self {
        ChannelState {
            slot: 0,
            start_mini: 0,
            timing: Timing { k_busy: params.k_busy, t_slot: params.t_slot, t_difs: params.t_difs },
            cycle_len: params.minis_per_cycle(),
            schedule: BTreeMap::new(),
            contending: 0,
            pending: vec![None; params.n_vehicles],
            live: Vec::new(),
            done: Vec::new(),
            next_cycle: 0,
        }
    }

    pub fn slot(&self) -> u64 {
        self.slot
    }

    pub fn start_mini(&self) -> u64 {
        self.start_mini
    }

    /// `c(k)`: contending packets at the start of the current slot.
    pub fn contending(&self) -> usize {
        self.contending
    }

    /// `b_max(k)`: largest remaining counter, 0 when nobody contends.
    pub fn b_max(&self) -> u32 {
        self.schedule.keys().next_back().map_or(0, |&s| (s - self.slot) as u32)
    }

    /// `n_o(slot)`: transmissions currently scheduled for an absolute slot.
    pub fn scheduled(&self, slot: u64) -> usize {
        self.schedule.get(&slot).map_or(0, Vec::len)
    }

    /// `h(k)`: whether the current slot is busy.
    pub fn is_busy(&self) -> bool {
        self.scheduled(self.slot) > 0
    }

    /// Remaining counters of all contending packets, sorted.
    pub fn counters(&self) -> Vec<u32> {
        self.schedule
            .iter()
            .flat_map(|(&s, ids)| std::iter::repeat_n((s - self.slot) as u32, ids.len()))
            .collect()
    }

    /// Places an already contending packet with the given remaining counter.
    /// Used to script initial conditions.
    pub fn seed_packet(&mut self, vehicle: VehicleId, counter: u32) -> PacketId {
        let id = self.live.len();
        self.live.push(Live {
            vehicle,
            generation: self.start_mini,
            gen_slot: self.slot,
            entry: counter,
            fire_slot: self.slot + counter as u64,
        });
        self.done.push(None);
        self.schedule.entry(self.slot + counter as u64).or_default().push(id);
        self.contending += 1;
        if vehicle >= self.pending.len() {
            self.pending.resize(vehicle + 1, None);
        }
        self.pending[vehicle] = Some(id);
        id
    }

    pub fn packet_fire_slot(&self, id: PacketId) -> u64 {
        self.live[id].fire_slot
    }

    fn cycle_of(&self, mini: u64) -> u64 {
        mini / self.cycle_len
    }

    fn announce_cycles(&mut self, rule: &mut dyn AccessRule) {
        let cycle = self.cycle_of(self.start_mini);
        while self.next_cycle <= cycle {
            rule.on_cycle_start(self.next_cycle);
            self.next_cycle += 1;
        }
    }

    /// Jumps over idle slots while nobody contends, up to (not past)
    /// `target`. Returns the number of skipped slots.
    pub fn skip_idle_until(&mut self, target: u64) -> u64 {
        if self.contending > 0 || target <= self.start_mini {
            return 0;
        }
        let skip = target - self.start_mini;
        self.slot += skip;
        self.start_mini = target;
        skip
    }

    /// Runs one slot: decides idle/busy, admits every generation that falls
    /// inside it, resolves transmissions and moves to the next slot.
    ///
    /// Generations at or after `horizon` are ignored.
    pub fn advance_slot(
        &mut self,
        arrivals: &dyn ArrivalSource,
        horizon: u64,
        rule: &mut dyn AccessRule,
        stats: &mut SlotStats,
    ) -> SlotEvents {
        self.announce_cycles(rule);
        let k = self.slot;
        let start = self.start_mini;
        let c = self.contending;
        let b_max = self.b_max();
        let k_busy = self.timing.k_busy as u64;

        let mut tx: Vec<PacketId> = self.schedule.remove(&k).unwrap_or_default();
        let mut on_air: Vec<OnAir> = Vec::with_capacity(tx.len() + 1);
        for &id in &tx {
            let p = &self.live[id];
            if self.pending[p.vehicle] == Some(id) {
                self.pending[p.vehicle] = None;
            }
            on_air.push(OnAir { vehicle: p.vehicle, generation: p.generation });
        }
        let mut busy = !tx.is_empty();
        let mut len = if busy { k_busy } else { 1 };

        let mut events = SlotEvents::default();
        // 0-based offsets of in-slot generations
        let mut arrival_pos: Vec<u64> = Vec::new();
        let mut next = arrivals.next_at_or_after(start).filter(|&(m, _)| m < horizon);
        while let Some((m, v)) = next {
            if m >= start + len {
                break;
            }
            let mut expired_here = 0;
            if let Some(old) = self.pending[v].take() {
                self.expire(old);
                events.expired.push(old);
                expired_here = 1;
            }
            let ctx = ArrivalContext {
                vehicle: v,
                mini: m,
                slot: k,
                within: (m - start) as u32 + 1,
                c_slot_start: c,
                arrivals_before: arrival_pos.len(),
                expired_so_far: events.expired.len(),
                on_air: &on_air,
            };
            debug_assert!(expired_here <= ctx.expired_so_far);
            let counter = rule.initial_counter(&ctx);
            let fire = match counter {
                0 if !busy && m == start => k,
                0 => k + 1,
                n => k + n as u64,
            };
            let id = self.live.len();
            self.live.push(Live { vehicle: v, generation: m, gen_slot: k, entry: counter, fire_slot: fire });
            self.done.push(None);
            self.contending += 1;
            arrival_pos.push(m - start);
            events.arrivals.push((id, counter));
            if fire == k {
                busy = true;
                len = k_busy;
                tx.push(id);
                on_air.push(OnAir { vehicle: v, generation: m });
            } else {
                self.schedule.entry(fire).or_default().push(id);
                self.pending[v] = Some(id);
            }
            next = arrivals.next_at_or_after(m + 1).filter(|&(m, _)| m < horizon);
        }

        stats.observe_slot(
            start,
            len,
            c,
            b_max,
            busy,
            &arrival_pos,
            rule.ratio_mode(),
            self.cycle_len,
        );

        let n_o = tx.len();
        let collided = n_o >= 2;
        for &id in &tx {
            let outcome = if collided { Outcome::Collided } else { Outcome::Sent };
            self.done[id] = Some((outcome, Some((start, k)), n_o as u32 - 1));
        }
        self.contending -= n_o;
        if busy {
            rule.on_transmission_end(&on_air, !collided);
        }

        events.record = SlotRecord {
            slot: k,
            start_mini: start,
            busy,
            n_o: n_o as u32,
            c: c as u32,
            b_max,
            arrivals: arrival_pos.len() as u32,
            expired: events.expired.len() as u32,
        };
        events.transmitted = tx;
        events.collided = collided;

        self.slot += 1;
        self.start_mini += len;
        events
    }

    fn expire(&mut self, id: PacketId) {
        let fire = self.live[id].fire_slot;
        if let Some(ids) = self.schedule.get_mut(&fire) {
            ids.retain(|&x| x != id);
            if ids.is_empty() {
                self.schedule.remove(&fire);
            }
        }
        self.contending -= 1;
        self.done[id] = Some((Outcome::Expired, None, 0));
    }

    /// Whether nothing is contending.
    pub fn is_drained(&self) -> bool {
        self.contending == 0
    }

    /// Records of all packets seen so far. Packets still contending are
    /// skipped.
    pub fn packet_records(&self) -> Vec<PacketRecord> {
        let t = self.timing;
        self.live
            .iter()
            .zip(&self.done)
            .filter_map(|(p, d)| {
                let (outcome, tx, partners) = (*d)?;
                let (start_tx, tx_slot) = match tx {
                    Some((m, s)) => (Some(m), Some(s)),
                    None => (None, None),
                };
                let d_o = start_tx.map(|m| (m + t.k_busy as u64 - p.generation) as f64 * t.t_slot);
                let d_c = start_tx.map(|m| (m - p.generation) as f64 * t.t_slot + t.t_difs);
                Some(PacketRecord {
                    vehicle: p.vehicle,
                    generation: p.generation,
                    gen_slot: p.gen_slot,
                    entry_point: p.entry,
                    start_tx,
                    tx_slot,
                    outcome,
                    d_o,
                    d_c,
                    collision_partner_count: partners,
                })
            })
            .collect()
    }
}

/// Per-mini-slot statistics gathered while the engine runs.
#[derive(Debug, Clone, Default)]
pub struct SlotStats {
    pub cycles: Vec<CycleStats>,
    pub n_cycles: usize,
    pub lemma1_violations: u64,
    pub minis_checked: u64,
    pub max_ratio: f64,
    pub record_slots: bool,
    pub slots: Vec<SlotRecord>,
}

impl SlotStats {
    pub fn new(n_cycles: usize, record_slots: bool) -> Self {
        SlotStats {
            cycles: vec![CycleStats::default(); n_cycles],
            n_cycles,
            record_slots,
            ..Default::default()
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn observe_slot(
        &mut self,
        start: u64,
        len: u64,
        c: usize,
        b_max: u32,
        busy: bool,
        arrival_pos: &[u64],
        mode: RatioMode,
        cycle_len: u64,
    ) {
        let mut through = 0usize;
        for s in 0..len {
            let before = through;
            while through < arrival_pos.len() && arrival_pos[through] == s {
                through += 1;
            }
            let num = (c + through) as u64;
            let (den, bound_ok) = match mode {
                RatioMode::VirtualEntry { m } => {
                    let m = m as u64;
                    let e_v = if busy { m * (c + before + 1) as u64 } else { m * (c as u64 + 1) };
                    let den = e_v.max(b_max as u64);
                    (den, m * num <= den)
                }
                RatioMode::Window { w } => (w as u64, true),
            };
            let ratio = if num == 0 { 0.0 } else { num as f64 / den as f64 };
            self.minis_checked += 1;
            if !bound_ok {
                self.lemma1_violations += 1;
            }
            if ratio > self.max_ratio {
                self.max_ratio = ratio;
            }
            let cycle = ((start + s) / cycle_len) as usize;
            if let Some(cs) = self.cycles.get_mut(cycle) {
                cs.upsilon_sum += ratio;
                cs.contending_sum += c as f64;
            }
        }
    }

    pub fn into_summary(self) -> TraceSummary {
        TraceSummary {
            slots: self.slots,
            cycles: self.cycles,
            lemma1_violations: self.lemma1_violations,
            minis_checked: self.minis_checked,
            max_ratio: self.max_ratio,
        }
    }
}

/// Drives the engine over `n_cycles` message cycles, then keeps running
/// without new generations until every packet has left the channel.
pub fn simulate(
    params: &ProtocolParams,
    arrivals: &dyn ArrivalSource,
    rule: &mut dyn AccessRule,
    record_slots: bool,
) -> (Vec<PacketRecord>, TraceSummary) {
    let mut state = ChannelState::new(params);
    let horizon = params.n_cycles as u64 * params.minis_per_cycle();
    let mut stats = SlotStats::new(params.n_cycles as usize, record_slots);
    loop {
        if state.is_drained() {
            match arrivals.next_at_or_after(state.start_mini()).filter(|&(m, _)| m < horizon) {
                Some((m, _)) => {
                    state.skip_idle_until(m);
                }
                None => break,
            }
        }
        let ev = state.advance_slot(arrivals, horizon, rule, &mut stats);
        if stats.record_slots {
            stats.slots.push(ev.record);
        }
    }
    (state.packet_records(), stats.into_summary())
}
