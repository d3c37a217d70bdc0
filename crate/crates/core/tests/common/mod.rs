//! The four-step collision scenario with M = 3, driven slot by slot.

use cidc_core::mac::channel::{ChannelState, ObserverRule, SlotStats};
use cidc_core::mac::SlotRecord;
use cidc_core::model::ScriptedArrivals;
use cidc_core::ProtocolParams;

pub const M: u32 = 3;

pub struct Run {
    /// (packet id, entry point, arrival slot)
    pub entries: Vec<(usize, u32, u64)>,
    pub state: ChannelState,
    pub slots: Vec<SlotRecord>,
}

/// Slot k = 0 is busy with b1 = 0 while b2 = 2; packet 3 arrives inside it.
/// Packet 4 arrives in slot 3, packet 5 in slot 4.
pub fn run() -> Run {
    let params = ProtocolParams { n_vehicles: 5, m_param: M, ..Default::default() };
    let mut state = ChannelState::new(&params);
    state.seed_packet(0, 0);
    state.seed_packet(1, 2);
    // slot 0 spans minis 0..24, slot 1 is mini 24, slot 2 spans 25..49
    let arrivals = ScriptedArrivals::new(vec![(5, 2), (49, 3), (50, 4)]);
    let mut rule = ObserverRule { m: M };
    let mut stats = SlotStats::new(1, false);
    let mut entries = Vec::new();
    let mut slots = Vec::new();
    for _ in 0..20 {
        let ev = state.advance_slot(&arrivals, u64::MAX, &mut rule, &mut stats);
        for &(id, e) in &ev.arrivals {
            entries.push((id, e, ev.record.slot));
        }
        slots.push(ev.record);
    }
    Run { entries, state, slots }
}

