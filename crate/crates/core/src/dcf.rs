//! 802.11p DCF broadcast baseline on the shared channel engine.
//!
//! Broadcast frames are never retransmitted, so there is a single back-off
//! stage and the window never grows.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mac::channel::{simulate, AccessRule, ArrivalContext, RatioMode};
use crate::mac::cidc::{protocol_rng, round_schedule};
use crate::mac::{Protocol, RoundResult};
use crate::model::ProtocolParams;

/// Uniform initial counter in `0..w`.
pub fn draw_initial_counter<R: Rng + ?Sized>(w_window: u32, rng: &mut R) -> Result<u32> {
    if w_window == 0 {
        return Err(Error::InvalidParam("contention window must be at least 1".into()));
    }
    Ok(rng.gen_range(0..w_window))
}

#[derive(Debug, Clone)]
pub struct DcfRule {
    w: u32,
    rng: ChaCha8Rng,
}

impl DcfRule {
    pub fn new(w_window: u32, rng: ChaCha8Rng) -> Result<Self> {
        if w_window == 0 {
            return Err(Error::InvalidParam("contention window must be at least 1".into()));
        }
        Ok(DcfRule { w: w_window, rng })
    }
}

impl AccessRule for DcfRule {
    fn protocol(&self) -> Protocol {
        Protocol::Dcf
    }

    fn ratio_mode(&self) -> RatioMode {
        RatioMode::Window { w: self.w }
    }

    fn initial_counter(&mut self, _ctx: &ArrivalContext<'_>) -> u32 {
        self.rng.gen_range(0..self.w)
    }
}

/// One DCF round. Arrival offsets match the CIDC round with the same seed,
/// round index and `N`.
pub fn run_round_dcf(params: &ProtocolParams, round: u32, record_slots: bool) -> Result<RoundResult> {
    params.validate()?;
    let schedule = round_schedule(params, round)?;
    let mut rule = DcfRule::new(params.w_window, protocol_rng(params, Protocol::Dcf, round))?;
    let (packets, trace) = simulate(params, &schedule, &mut rule, record_slots);
    Ok(RoundResult { protocol: Protocol::Dcf, params: params.clone(), round, packets, trace })
}

/// Runs one round of either protocol.
pub fn run_round(params: &ProtocolParams, protocol: Protocol, round: u32, record_slots: bool) -> Result<RoundResult> {
    match protocol {
        Protocol::Cidc => crate::mac::run_round_cidc(params, round, record_slots),
        Protocol::Dcf => run_round_dcf(params, round, record_slots),
    }
}
