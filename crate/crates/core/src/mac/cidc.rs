//! The CIDC access rule driven by per-vehicle estimates.

use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::mac::channel::{simulate, AccessRule, ArrivalContext, OnAir, RatioMode};
use crate::mac::estimate::{estimate_intensity, inject_churn, VehicleView};
use crate::mac::trace::RoundResult;
use crate::mac::{entry_point, Protocol};
use crate::model::{draw_offsets, ArrivalSchedule, ProtocolParams};
use crate::seed;

/// CIDC with one application-layer view per vehicle.
#[derive(Debug, Clone)]
pub struct CidcRule {
    m: u32,
    cycle_len: u64,
    /// Offsets carried in every message, used to (re)learn neighbours.
    mini_offsets: Vec<u64>,
    views: Vec<VehicleView>,
    churn_count: usize,
    n_cycles: u64,
    rng: ChaCha8Rng,
}

impl CidcRule {
    /// Every vehicle starts out knowing all of its neighbours.
    pub fn new(params: &ProtocolParams, schedule: &ArrivalSchedule, rng: ChaCha8Rng) -> Self {
        let mini_offsets = schedule.mini_offsets().to_vec();
        let views = schedule
            .offsets()
            .iter()
            .enumerate()
            .map(|(i, &sigma)| VehicleView::fully_informed(i, sigma, &mini_offsets))
            .collect();
        CidcRule {
            m: params.m_param,
            cycle_len: schedule.cycle_len(),
            mini_offsets,
            views,
            churn_count: params.churn_count(),
            n_cycles: params.n_cycles as u64,
            rng,
        }
    }

    pub fn views(&self) -> &[VehicleView] {
        &self.views
    }
}

impl AccessRule for CidcRule {
    fn protocol(&self) -> Protocol {
        Protocol::Cidc
    }

    fn ratio_mode(&self) -> RatioMode {
        RatioMode::VirtualEntry { m: self.m }
    }

    fn on_cycle_start(&mut self, cycle: u64) {
        // no churn while the backlog drains past the horizon
        if cycle > 0 && cycle < self.n_cycles {
            inject_churn(&mut self.views, self.churn_count, &self.mini_offsets, &mut self.rng);
        }
    }

    fn initial_counter(&mut self, ctx: &ArrivalContext<'_>) -> u32 {
        let slot_start = ctx.mini + 1 - ctx.within as u64;
        let view = &self.views[ctx.vehicle];
        let est = estimate_intensity(view, ctx.mini, slot_start, self.cycle_len, &self.mini_offsets, ctx.on_air);
        entry_point(est, self.m)
    }

    fn on_transmission_end(&mut self, on_air: &[OnAir], success: bool) {
        for a in on_air {
            let cycle = a.generation / self.cycle_len;
            for view in self.views.iter_mut() {
                if view.vehicle_id == a.vehicle {
                    continue;
                }
                // an undecodable frame still ends the mark but cannot teach
                // an unknown offset
                if success && !view.knows(a.vehicle) {
                    view.learn(a.vehicle, self.mini_offsets[a.vehicle]);
                }
                view.mark_heard(a.vehicle, cycle);
            }
        }
    }
}

/// Offsets for one round. They depend on the seed, the round and `N` only,
/// so every protocol of a grid point sees the same arrival pattern.
pub fn round_schedule(params: &ProtocolParams, round: u32) -> Result<ArrivalSchedule> {
    let mut rng = seed::rng(
        params.rng_seed,
        &[seed::STREAM_OFFSETS, round as u64, params.n_vehicles as u64],
    );
    draw_offsets(params, &mut rng)
}

/// RNG for protocol-side randomness (churn, DCF counters) of one round.
pub fn protocol_rng(params: &ProtocolParams, protocol: Protocol, round: u32) -> ChaCha8Rng {
    let w = match protocol {
        Protocol::Cidc => 0,
        Protocol::Dcf => params.w_window as u64,
    };
    seed::rng(
        params.rng_seed,
        &[
            seed::STREAM_PROTOCOL,
            protocol as u64,
            round as u64,
            params.n_vehicles as u64,
            w,
            params.delta_churn.to_bits(),
            params.k_busy as u64,
        ],
    )
}

/// One CIDC round of `n_cycles` message cycles.
pub fn run_round_cidc(params: &ProtocolParams, round: u32, record_slots: bool) -> Result<RoundResult> {
    params.validate()?;
    let schedule = round_schedule(params, round)?;
    let mut rule = CidcRule::new(params, &schedule, protocol_rng(params, Protocol::Cidc, round));
    let (packets, trace) = simulate(params, &schedule, &mut rule, record_slots);
    Ok(RoundResult { protocol: Protocol::Cidc, params: params.clone(), round, packets, trace })
}
