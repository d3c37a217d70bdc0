//! Four-step collision scenario with M = 3, driven slot by slot.

mod common;

use cidc_core::mac::trace::{check_conservation, verify_collision_condition, TraceIndex};
use cidc_core::mac::Outcome;
use common::{run, M};

#[test]
fn entry_points_and_scheduled_collision() {
    let r = run();
    let e: Vec<u32> = r.entries.iter().map(|x| x.1).collect();
    assert_eq!(e, vec![9, 6, 9]);
    // step (i): slot 0
    assert_eq!(r.entries[0].2, 0);
    // step (ii): at slot 2, b2 is on the air and packet 3 has counter 7
    assert!(r.slots[2].busy && r.slots[2].n_o == 1);
    // step (iii): at slot 3 a single packet contends; e4 = 6 lands on slot 9
    assert_eq!(r.slots[3].c, 1);
    assert_eq!(r.entries[1].2, 3);
    assert_eq!(r.state.packet_fire_slot(r.entries[1].0), 3 + 6);
    assert_eq!(r.state.packet_fire_slot(r.entries[0].0), 9);
    let s9 = r.slots[9];
    assert!(s9.busy && s9.n_o == 2);
    assert_eq!(check_conservation(&r.slots), 0);
}

#[test]
fn collision_witness_matches_the_scenario() {
    let r = run();
    let packets = r.state.packet_records();
    let collided: Vec<usize> = packets
        .iter()
        .enumerate()
        .filter(|(_, p)| p.outcome == Outcome::Collided)
        .map(|(i, _)| i)
        .collect();
    assert_eq!(collided.len(), 2);
    let idx = TraceIndex::new(&packets, M, 7692);
    assert_eq!(idx.collision_pairs(), vec![(collided[0], collided[1])]);
    let w = verify_collision_condition(&idx, collided[0], collided[1]).unwrap();
    assert_eq!((w.alpha, w.tau, w.eta), (3, 2, 1));
    assert!(w.holds);
    // packet 5 goes out alone
    assert_eq!(packets.iter().filter(|p| p.outcome == Outcome::Sent).count(), 3);
}
