//! Per-vehicle contention-intensity estimation from neighbour offsets.
//!
//! A generated message counts as contending until the transmission carrying
//! it ends. Contention state at slot boundaries is observable by everyone;
//! generations inside the current slot are only visible through the offsets
//! a vehicle has learnt from received messages, so an unknown neighbour's
//! same-slot generation is missed.

use rand::seq::index::sample;
use rand::Rng;

use crate::mac::channel::OnAir;
use crate::model::VehicleId;

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleView {
    pub vehicle_id: VehicleId,
    /// Own offset, seconds.
    pub own_offset: f64,
    /// Cycle-relative mini-slot offset per neighbour id; `None` when unknown
    /// (and always for the vehicle itself).
    pub neighbor_offsets: Vec<Option<u64>>,
    /// Message cycle of the most recent message heard from each neighbour.
    last_heard: Vec<Option<u64>>,
}

impl VehicleView {
    pub fn new(vehicle_id: VehicleId, own_offset: f64, n_vehicles: usize) -> Self {
        VehicleView {
            vehicle_id,
            own_offset,
            neighbor_offsets: vec![None; n_vehicles],
            last_heard: vec![None; n_vehicles],
        }
    }

    /// A view that already knows every other vehicle's offset.
    pub fn fully_informed(vehicle_id: VehicleId, own_offset: f64, mini_offsets: &[u64]) -> Self {
        let mut view = VehicleView::new(vehicle_id, own_offset, mini_offsets.len());
        for (j, &q) in mini_offsets.iter().enumerate() {
            if j != vehicle_id {
                view.neighbor_offsets[j] = Some(q);
            }
        }
        view
    }

    pub fn learn(&mut self, neighbor: VehicleId, mini_offset: u64) {
        if neighbor != self.vehicle_id {
            self.neighbor_offsets[neighbor] = Some(mini_offset);
        }
    }

    pub fn forget(&mut self, neighbor: VehicleId) {
        self.neighbor_offsets[neighbor] = None;
    }

    pub fn knows(&self, neighbor: VehicleId) -> bool {
        self.neighbor_offsets[neighbor].is_some()
    }

    pub fn known_neighbors(&self) -> impl Iterator<Item = VehicleId> + '_ {
        self.neighbor_offsets.iter().enumerate().filter_map(|(j, q)| q.map(|_| j))
    }

    /// Marks the message that `neighbor` generated in `cycle` as received.
    pub fn mark_heard(&mut self, neighbor: VehicleId, cycle: u64) {
        let slot = &mut self.last_heard[neighbor];
        if slot.is_none_or(|c| c < cycle) {
            *slot = Some(cycle);
        }
    }

    /// Whether the message `neighbor` generated in `cycle` has been heard.
    pub fn has_heard(&self, neighbor: VehicleId, cycle: u64) -> bool {
        self.last_heard[neighbor].is_some_and(|c| c >= cycle)
    }
}

/// Number of messages the vehicle believes are contending at mini-slot
/// `now`, excluding the packet it is about to generate. `slot_start` is the
/// first mini-slot of the current slot and `offsets` the true cycle offsets.
///
/// Counts every neighbour whose latest generation (at or before `now`) has
/// not been heard yet, except unknown neighbours that generated inside the
/// current slot. A transmission still on the air that belongs to an older
/// generation than the sender's latest one also counts, as does the
/// vehicle's own previous message when it is on the air.
pub fn estimate_intensity(
    view: &VehicleView,
    now: u64,
    slot_start: u64,
    cycle_len: u64,
    offsets: &[u64],
    on_air: &[OnAir],
) -> u32 {
    let latest = |q: u64| (now >= q).then(|| (now - q) / cycle_len);
    let mut n = 0;
    for (j, &q) in offsets.iter().enumerate() {
        if j == view.vehicle_id {
            continue;
        }
        let Some(g) = latest(q) else { continue };
        let visible = view.knows(j) || q + g * cycle_len < slot_start;
        if visible && !view.has_heard(j, g) {
            n += 1;
        }
    }
    for a in on_air {
        if a.vehicle == view.vehicle_id {
            n += 1;
            continue;
        }
        if latest(offsets[a.vehicle]).is_some_and(|g| a.generation / cycle_len < g) {
            n += 1;
        }
    }
    n
}

/// Starts a new cycle of estimation error. Offsets forgotten in the previous
/// cycle are known again, then each vehicle forgets the offsets of `count`
/// uniformly chosen neighbours. Within the cycle a forgotten offset comes
/// back with that neighbour's first successfully received message; the
/// channel itself is unaffected.
pub fn inject_churn<R: Rng + ?Sized>(views: &mut [VehicleView], count: usize, mini_offsets: &[u64], rng: &mut R) {
    if count == 0 {
        return;
    }
    for view in views.iter_mut() {
        for (j, &q) in mini_offsets.iter().enumerate() {
            view.learn(j, q);
        }
        let known: Vec<VehicleId> = view.known_neighbors().collect();
        let take = count.min(known.len());
        for idx in sample(rng, known.len(), take) {
            view.forget(known[idx]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    const L: u64 = 1000;

    fn view_with(offsets: &[u64]) -> VehicleView {
        VehicleView::fully_informed(0, 0.0, offsets)
    }

    #[test]
    fn figure_one_count() {
        // ten vehicles, vehicle 0 estimates at mini 500 of cycle 0; five
        // neighbours have generated, two of those have been heard
        let offsets = [450, 100, 200, 300, 400, 480, 600, 700, 800, 900];
        let mut v = view_with(&offsets);
        for j in [1, 2] {
            v.mark_heard(j, 0);
        }
        assert_eq!(estimate_intensity(&v, 500, 500, L, &offsets, &[]), 3);
    }

    #[test]
    fn nothing_pending_when_all_heard() {
        let offsets = [0, 10, 20, 30];
        let mut v = view_with(&offsets);
        for j in 1..4 {
            v.mark_heard(j, 0);
        }
        assert_eq!(estimate_intensity(&v, 40, 40, L, &offsets, &[]), 0);
    }

    /// Hand-built trace: marks enumerated directly from the offset table.
    #[test]
    fn scripted_timeline_oracle() {
        let offsets = [999, 50, 120, 260, 330, 410, 700, 850];
        let now = 500;
        let heard = [2usize, 4];
        let mut v = view_with(&offsets);
        for &j in &heard {
            v.mark_heard(j, 0);
        }
        let oracle = (1..offsets.len())
            .filter(|&j| offsets[j] <= now && !heard.contains(&j))
            .count() as u32;
        assert_eq!(oracle, 3);
        assert_eq!(estimate_intensity(&v, now, now, L, &offsets, &[]), oracle);
    }

    #[test]
    fn previous_cycle_backlog_counts_until_heard() {
        // neighbour 1 generated late in cycle 0 and is still waiting
        let offsets = [500, 990];
        let mut v = view_with(&offsets);
        assert_eq!(estimate_intensity(&v, 1005, 1005, L, &offsets, &[]), 1);
        v.mark_heard(1, 0);
        assert_eq!(estimate_intensity(&v, 1005, 1005, L, &offsets, &[]), 0);
    }

    #[test]
    fn on_air_older_generation_counts() {
        // neighbour 1's cycle-0 message is still on the air when it has
        // already generated its cycle-1 message
        let offsets = [500, 10];
        let v = view_with(&offsets);
        let air = [OnAir { vehicle: 1, generation: 10 }];
        assert_eq!(estimate_intensity(&v, 1012, 1012, L, &offsets, &air), 2);
        let own = [OnAir { vehicle: 0, generation: 500 }];
        assert_eq!(estimate_intensity(&v, 5, 5, L, &offsets, &own), 1);
    }

    #[test]
    fn unknown_neighbour_missed_only_inside_the_slot() {
        let offsets = [0, 10, 20];
        let mut v = view_with(&offsets);
        v.forget(2);
        // slot started at 15: neighbour 2 generated inside it
        assert_eq!(estimate_intensity(&v, 30, 15, L, &offsets, &[]), 1);
        // slot started at 25: its generation is part of the slot-start count
        assert_eq!(estimate_intensity(&v, 30, 25, L, &offsets, &[]), 2);
        v.mark_heard(2, 0);
        assert_eq!(estimate_intensity(&v, 30, 25, L, &offsets, &[]), 1);
    }

    #[test]
    fn forgetting_keeps_heard_marks() {
        let offsets = [0, 10];
        let mut v = view_with(&offsets);
        v.mark_heard(1, 0);
        v.forget(1);
        assert!(v.has_heard(1, 0));
        assert_eq!(estimate_intensity(&v, 20, 20, L, &offsets, &[]), 0);
    }

    #[test]
    fn churn_zero_is_noop() {
        let offsets: Vec<u64> = (0..10).collect();
        let mut views: Vec<_> = (0..10).map(|i| VehicleView::fully_informed(i, 0.0, &offsets)).collect();
        let before = views.clone();
        inject_churn(&mut views, 0, &offsets, &mut seed::rng(1, &[]));
        assert_eq!(views, before);
    }

    #[test]
    fn churn_forgets_exact_count() {
        let offsets: Vec<u64> = (0..101).collect();
        let mut views: Vec<_> = (0..101).map(|i| VehicleView::fully_informed(i, 0.0, &offsets)).collect();
        let mut rng = seed::rng(2, &[]);
        for _ in 0..3 {
            inject_churn(&mut views, 3, &offsets, &mut rng);
            for v in &views {
                assert_eq!(v.known_neighbors().count(), 97);
                assert!(!v.knows(v.vehicle_id));
            }
        }
    }
}
