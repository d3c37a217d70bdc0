//! Engine invariants on randomly drawn small scenarios.

use proptest::prelude::*;

use cidc_core::dcf::run_round;
use cidc_core::mac::channel::{simulate, ObserverRule};
use cidc_core::mac::cidc::round_schedule;
use cidc_core::mac::trace::{check_conservation, replay_lemma1, replay_lemma4};
use cidc_core::mac::{Outcome, PacketRecord, Protocol};
use cidc_core::ProtocolParams;

fn params(n: usize, m: u32, lambda: f64, long_frame: bool, delta: f64, seed: u64) -> ProtocolParams {
    let mut p = ProtocolParams {
        n_vehicles: n,
        m_param: m,
        lambda,
        delta_churn: delta,
        n_cycles: 24,
        rng_seed: seed,
        ..Default::default()
    };
    if long_frame {
        p.set_t_tx(332e-6).unwrap();
    }
    p
}

fn scenario() -> impl Strategy<Value = ProtocolParams> {
    (1usize..60, 1u32..5, prop::sample::select(vec![10.0, 40.0, 100.0]), any::<bool>(), any::<u64>())
        .prop_map(|(n, m, lambda, long, seed)| params(n, m, lambda, long, 0.0, seed))
}

/// A packet expires exactly when its vehicle's next generation finds it
/// still contending.
fn expiry_consistent(packets: &[PacketRecord], cycle_len: u64) -> bool {
    let gens: std::collections::HashSet<(usize, u64)> = packets.iter().map(|p| (p.vehicle, p.generation)).collect();
    packets.iter().all(|p| match p.outcome {
        Outcome::Expired => p.start_tx.is_none() && gens.contains(&(p.vehicle, p.generation + cycle_len)),
        // a transmission starting on the next generation's mini-slot wins;
        // the last generation has no successor and drains past the horizon
        _ => p.start_tx.is_some_and(|s| {
            s <= p.generation + cycle_len || !gens.contains(&(p.vehicle, p.generation + cycle_len))
        }),
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn exact_estimation_invariants(p in scenario()) {
        let r = run_round(&p, Protocol::Cidc, 0, true).unwrap();
        let l = p.minis_per_cycle();
        prop_assert_eq!(r.packets.len(), p.n_vehicles * p.n_cycles as usize);
        prop_assert_eq!(check_conservation(&r.trace.slots), 0);
        prop_assert_eq!(replay_lemma1(&r.trace.slots, &r.packets, p.m_param, p.k_busy).0, 0);
        prop_assert_eq!(r.trace.lemma1_violations, 0);
        let l4 = replay_lemma4(&r.packets, p.m_param, l);
        prop_assert_eq!(l4.violations, 0);
        prop_assert_eq!(l4.off_grid, 0);
        // an expiry inside a slot frees a position a later arrival can take
        if r.packets.iter().all(|pk| pk.outcome != Outcome::Expired) {
            prop_assert_eq!(l4.same_slot_pairs, 0);
        }
        prop_assert!(expiry_consistent(&r.packets, l));
    }

    #[test]
    fn vehicle_views_match_the_observer_without_churn(p in scenario()) {
        let r = run_round(&p, Protocol::Cidc, 3, false).unwrap();
        let schedule = round_schedule(&p, 3).unwrap();
        let (packets, _) = simulate(&p, &schedule, &mut ObserverRule { m: p.m_param }, false);
        prop_assert_eq!(r.packets, packets);
    }

    #[test]
    fn churn_keeps_bookkeeping_exact(p in scenario(), delta in 0.5f64..20.0) {
        let mut p = p;
        p.delta_churn = delta;
        let r = run_round(&p, Protocol::Cidc, 1, true).unwrap();
        prop_assert_eq!(r.packets.len(), p.n_vehicles * p.n_cycles as usize);
        prop_assert_eq!(check_conservation(&r.trace.slots), 0);
        prop_assert!(expiry_consistent(&r.packets, p.minis_per_cycle()));
    }

    #[test]
    fn dcf_bookkeeping_is_exact(p in scenario(), w in prop::sample::select(vec![1u32, 8, 32, 128])) {
        let mut p = p;
        p.w_window = w;
        let r = run_round(&p, Protocol::Dcf, 0, true).unwrap();
        prop_assert_eq!(r.packets.len(), p.n_vehicles * p.n_cycles as usize);
        prop_assert_eq!(check_conservation(&r.trace.slots), 0);
        prop_assert!(expiry_consistent(&r.packets, p.minis_per_cycle()));
    }

    #[test]
    fn rounds_are_reproducible(p in scenario(), delta in prop::sample::select(vec![0.0, 3.0])) {
        let mut p = p;
        p.delta_churn = delta;
        for proto in [Protocol::Cidc, Protocol::Dcf] {
            let a = run_round(&p, proto, 2, false).unwrap();
            let b = run_round(&p, proto, 2, false).unwrap();
            prop_assert_eq!(a.packets, b.packets);
        }
    }
}

#[test]
fn single_vehicle_waits_exactly_m_slots() {
    let p = params(1, 2, 10.0, false, 0.0, 5);
    let r = run_round(&p, Protocol::Cidc, 0, false).unwrap();
    for pk in &r.packets {
        assert_eq!(pk.outcome, Outcome::Sent);
        assert!((pk.d_c.unwrap() - (2.0 * 13e-6 + 58e-6)).abs() < 1e-12);
    }
}

#[test]
fn two_distant_vehicles_never_collide() {
    let p = params(2, 2, 10.0, false, 0.0, 9);
    let schedule = cidc_core::ArrivalSchedule::from_offsets(&p, vec![0.0, 0.05]).unwrap();
    let (packets, _) = simulate(&p, &schedule, &mut ObserverRule { m: 2 }, false);
    assert!(packets.iter().all(|pk| pk.outcome == Outcome::Sent));
}
