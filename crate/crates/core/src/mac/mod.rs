//! Channel engine and the CIDC access strategy.

pub mod channel;
pub mod cidc;
pub mod estimate;
pub mod trace;

use std::fmt;
use std::str::FromStr;

use crate::model::VehicleId;

pub use channel::{simulate, AccessRule, ArrivalContext, ChannelState, ObserverRule, OnAir, RatioMode, SlotEvents};
pub use cidc::{run_round_cidc, CidcRule};
pub use estimate::{estimate_intensity, inject_churn, VehicleView};
pub use trace::{verify_collision_condition, CollisionWitness, RoundResult, SlotRecord, TraceSummary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Protocol {
    Cidc,
    Dcf,
}

impl Protocol {
    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::Cidc => "cidc",
            Protocol::Dcf => "dcf",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Protocol {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "cidc" => Ok(Protocol::Cidc),
            "dcf" => Ok(Protocol::Dcf),
            other => Err(format!("unknown protocol `{other}` (expected cidc or dcf)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Sent,
    Collided,
    /// Replaced by the vehicle's next message before it was transmitted.
    Expired,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Sent => "sent",
            Outcome::Collided => "collided",
            Outcome::Expired => "expired",
        }
    }
}

impl FromStr for Outcome {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sent" => Ok(Outcome::Sent),
            "collided" => Ok(Outcome::Collided),
            "expired" => Ok(Outcome::Expired),
            other => Err(format!("unknown outcome `{other}`")),
        }
    }
}

/// Lifecycle of one packet.
#[derive(Debug, Clone, PartialEq)]
pub struct PacketRecord {
    pub vehicle: VehicleId,
    /// Generation mini-slot (global).
    pub generation: u64,
    /// Slot containing the generation mini-slot.
    pub gen_slot: u64,
    /// Initial back-off counter.
    pub entry_point: u32,
    /// First mini-slot of the busy slot carrying the packet.
    pub start_tx: Option<u64>,
    pub tx_slot: Option<u64>,
    pub outcome: Outcome,
    /// Generation to end of transmission, seconds.
    pub d_o: Option<f64>,
    /// Generation to start of transmission, seconds.
    pub d_c: Option<f64>,
    pub collision_partner_count: u32,
}

/// CIDC initial back-off counter: `M` times the contention intensity with
/// the new packet itself included.
pub fn entry_point(estimated_existing: u32, m_param: u32) -> u32 {
    m_param * (estimated_existing + 1)
}

/// Entry point a packet would get if it arrived at mini-slot `within` of the
/// current slot.
pub fn virtual_entry(c: usize, busy: bool, arrivals_before: usize, m_param: u32) -> u32 {
    if busy {
        m_param * (c + arrivals_before + 1) as u32
    } else {
        m_param * (c + 1) as u32
    }
}

/// Packets contending at the end of a mini-slot over the span of counters
/// accommodating them. Zero on an empty channel.
pub fn packet_to_slot_ratio(
    c: usize,
    busy: bool,
    b_max: u32,
    arrivals_before: usize,
    arrivals_through: usize,
    m_param: u32,
) -> f64 {
    let num = c + arrivals_through;
    if num == 0 {
        return 0.0;
    }
    let den = b_max.max(virtual_entry(c, busy, arrivals_before, m_param));
    num as f64 / den as f64
}

impl ChannelState {
    pub fn virtual_entry(&self, arrivals_before: usize, m_param: u32) -> u32 {
        virtual_entry(self.contending(), self.is_busy(), arrivals_before, m_param)
    }
}
