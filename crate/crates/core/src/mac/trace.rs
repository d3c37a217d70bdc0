//! Round results, trace export/import and invariant replay.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::harness::csv_out::fmt_sig;
use crate::mac::{packet_to_slot_ratio, Outcome, PacketRecord, Protocol};
use crate::model::ProtocolParams;

/// One slot as seen by the network observer. Empty idle slots (nothing
/// contending, nothing generated) are not recorded.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SlotRecord {
    pub slot: u64,
    pub start_mini: u64,
    pub busy: bool,
    pub n_o: u32,
    pub c: u32,
    pub b_max: u32,
    pub arrivals: u32,
    pub expired: u32,
}

impl SlotRecord {
    pub fn len(&self, k_busy: u32) -> u64 {
        if self.busy {
            k_busy as u64
        } else {
            1
        }
    }

    /// Contending packets at the start of the next slot.
    pub fn c_after(&self) -> i64 {
        self.c as i64 + self.arrivals as i64 - self.n_o as i64 - self.expired as i64
    }
}

/// Mini-slot sums for one message cycle.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CycleStats {
    pub upsilon_sum: f64,
    pub contending_sum: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TraceSummary {
    /// Per-slot samples, only when recording was requested.
    pub slots: Vec<SlotRecord>,
    pub cycles: Vec<CycleStats>,
    pub lemma1_violations: u64,
    pub minis_checked: u64,
    pub max_ratio: f64,
}

#[derive(Debug, Clone)]
pub struct RoundResult {
    pub protocol: Protocol,
    pub params: ProtocolParams,
    pub round: u32,
    pub packets: Vec<PacketRecord>,
    pub trace: TraceSummary,
}

impl RoundResult {
    pub fn count(&self, outcome: Outcome) -> usize {
        self.packets.iter().filter(|p| p.outcome == outcome).count()
    }

    pub fn meta(&self) -> TraceMeta {
        TraceMeta {
            protocol: self.protocol,
            n_vehicles: self.params.n_vehicles,
            m_param: self.params.m_param,
            k_busy: self.params.k_busy,
            w_window: self.params.w_window,
            delta_churn: self.params.delta_churn,
            cycle_len: self.params.minis_per_cycle(),
            round: self.round,
        }
    }

    /// Writes `<stem>.slots.csv` and `<stem>.packets.csv` into `dir`.
    pub fn write_traces(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let meta = self.meta();
        let stem = meta.file_stem();
        let slots_path = dir.join(format!("{stem}.slots.csv"));
        let packets_path = dir.join(format!("{stem}.packets.csv"));
        write_slots(&slots_path, &meta, &self.trace.slots)?;
        write_packets(&packets_path, &meta, &self.packets)?;
        Ok((slots_path, packets_path))
    }
}

/// Identifies the run a trace file belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceMeta {
    pub protocol: Protocol,
    pub n_vehicles: usize,
    pub m_param: u32,
    pub k_busy: u32,
    pub w_window: u32,
    pub delta_churn: f64,
    pub cycle_len: u64,
    pub round: u32,
}

impl TraceMeta {
    pub fn file_stem(&self) -> String {
        let w = match self.protocol {
            Protocol::Cidc => 0,
            Protocol::Dcf => self.w_window,
        };
        format!(
            "{}_K{}_N{}_W{}_d{}_r{}",
            self.protocol, self.k_busy, self.n_vehicles, w, self.delta_churn, self.round
        )
    }

    fn header_line(&self) -> String {
        format!(
            "# protocol={} n={} m={} k={} w={} delta={} cycle_len={} round={}",
            self.protocol,
            self.n_vehicles,
            self.m_param,
            self.k_busy,
            self.w_window,
            self.delta_churn,
            self.cycle_len,
            self.round
        )
    }

    fn parse(line: &str) -> Result<Self> {
        let bad = |m: &str| Error::TraceIntegrity(format!("bad trace header `{line}`: {m}"));
        let body = line.strip_prefix('#').ok_or_else(|| bad("missing #"))?;
        let mut kv = HashMap::new();
        for tok in body.split_whitespace() {
            let (k, v) = tok.split_once('=').ok_or_else(|| bad("expected key=value"))?;
            kv.insert(k, v);
        }
        let get = |k: &str| kv.get(k).copied().ok_or_else(|| bad(&format!("missing {k}")));
        fn num<T: std::str::FromStr>(s: &str, e: impl Fn(&str) -> Error) -> Result<T> {
            s.parse().map_err(|_| e("not a number"))
        }
        Ok(TraceMeta {
            protocol: get("protocol")?.parse().map_err(|e: String| bad(&e))?,
            n_vehicles: num(get("n")?, bad)?,
            m_param: num(get("m")?, bad)?,
            k_busy: num(get("k")?, bad)?,
            w_window: num(get("w")?, bad)?,
            delta_churn: num(get("delta")?, bad)?,
            cycle_len: num(get("cycle_len")?, bad)?,
            round: num(get("round")?, bad)?,
        })
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

pub fn write_slots(path: &Path, meta: &TraceMeta, slots: &[SlotRecord]) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "{}", meta.header_line()).map_err(io)?;
    writeln!(w, "slot,h,n_o,c,b_max,start_mini,arrivals,expired").map_err(io)?;
    for s in slots {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            s.slot, s.busy as u8, s.n_o, s.c, s.b_max, s.start_mini, s.arrivals, s.expired
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn write_packets(path: &Path, meta: &TraceMeta, packets: &[PacketRecord]) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "{}", meta.header_line()).map_err(io)?;
    writeln!(w, "protocol,vehicle,gen_mini,entry,outcome,start_mini,d_o_us,d_c_us,gen_slot,tx_slot,partners")
        .map_err(io)?;
    let opt = |x: Option<u64>| x.map(|v| v.to_string()).unwrap_or_default();
    let us = |x: Option<f64>| x.map(|v| fmt_sig(v * 1e6)).unwrap_or_default();
    for p in packets {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            meta.protocol,
            p.vehicle,
            p.generation,
            p.entry_point,
            p.outcome.as_str(),
            opt(p.start_tx),
            us(p.d_o),
            us(p.d_c),
            p.gen_slot,
            opt(p.tx_slot),
            p.collision_partner_count
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

fn read_lines(path: &Path) -> Result<(TraceMeta, Vec<(usize, String)>)> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(f).lines().enumerate();
    let (_, first) = lines
        .next()
        .ok_or_else(|| Error::TraceIntegrity(format!("{} is empty", path.display())))?;
    let meta = TraceMeta::parse(&first.map_err(|e| Error::io(path, e))?)?;
    lines.next(); // column header
    let mut out = Vec::new();
    for (i, l) in lines {
        let l = l.map_err(|e| Error::io(path, e))?;
        if !l.trim().is_empty() {
            out.push((i + 1, l));
        }
    }
    Ok((meta, out))
}

fn field<T: std::str::FromStr>(cols: &[&str], i: usize, line: usize) -> Result<T> {
    cols.get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::TraceIntegrity(format!("line {line}: bad column {i}")))
}

fn opt_field(cols: &[&str], i: usize, line: usize) -> Result<Option<u64>> {
    match cols.get(i) {
        Some(&"") => Ok(None),
        _ => field(cols, i, line).map(Some),
    }
}

pub fn read_slots(path: &Path) -> Result<(TraceMeta, Vec<SlotRecord>)> {
    let (meta, lines) = read_lines(path)?;
    let mut out = Vec::with_capacity(lines.len());
    for (n, l) in lines {
        let c: Vec<&str> = l.split(',').collect();
        out.push(SlotRecord {
            slot: field(&c, 0, n)?,
            busy: field::<u8>(&c, 1, n)? == 1,
            n_o: field(&c, 2, n)?,
            c: field(&c, 3, n)?,
            b_max: field(&c, 4, n)?,
            start_mini: field(&c, 5, n)?,
            arrivals: field(&c, 6, n)?,
            expired: field(&c, 7, n)?,
        });
    }
    Ok((meta, out))
}

/// Reads a packet trace. Delays are recomputed from mini-slot indices.
pub fn read_packets(path: &Path, t_slot: f64, t_difs: f64) -> Result<(TraceMeta, Vec<PacketRecord>)> {
    let (meta, lines) = read_lines(path)?;
    let mut out = Vec::with_capacity(lines.len());
    for (n, l) in lines {
        let c: Vec<&str> = l.split(',').collect();
        let generation: u64 = field(&c, 2, n)?;
        let start_tx = opt_field(&c, 5, n)?;
        let outcome: Outcome = c
            .get(4)
            .ok_or_else(|| Error::TraceIntegrity(format!("line {n}: missing outcome")))?
            .parse()
            .map_err(|e: String| Error::TraceIntegrity(format!("line {n}: {e}")))?;
        out.push(PacketRecord {
            vehicle: field(&c, 1, n)?,
            generation,
            gen_slot: field(&c, 8, n)?,
            entry_point: field(&c, 3, n)?,
            start_tx,
            tx_slot: opt_field(&c, 9, n)?,
            outcome,
            d_o: start_tx.map(|m| (m + meta.k_busy as u64 - generation) as f64 * t_slot),
            d_c: start_tx.map(|m| (m - generation) as f64 * t_slot + t_difs),
            collision_partner_count: field(&c, 10, n)?,
        });
    }
    Ok((meta, out))
}

/// Replays `c(k+1) = c(k) + arrivals(k) - n_o(k) - expired(k)` and
/// `h(k) = 1 <=> n_o(k) > 0` over a slot trace. Returns the number of slots
/// that break either rule.
pub fn check_conservation(slots: &[SlotRecord]) -> usize {
    let mut bad = 0;
    for (i, s) in slots.iter().enumerate() {
        if s.busy != (s.n_o > 0) {
            bad += 1;
        }
        let next_c = match slots.get(i + 1) {
            Some(n) if n.slot == s.slot + 1 => n.c as i64,
            // skipped slots are empty, and so is the channel after the run
            _ => 0,
        };
        if s.c_after() != next_c {
            bad += 1;
        }
    }
    bad
}

/// Recomputes the packet-to-slot ratio at the end of every recorded
/// mini-slot and counts values above `1/M`.
pub fn replay_lemma1(slots: &[SlotRecord], packets: &[PacketRecord], m_param: u32, k_busy: u32) -> (u64, f64) {
    let mut by_slot: HashMap<u64, Vec<u64>> = HashMap::new();
    for p in packets {
        by_slot.entry(p.gen_slot).or_default().push(p.generation);
    }
    let mut violations = 0;
    let mut max_ratio: f64 = 0.0;
    for s in slots {
        let mut gens = by_slot.remove(&s.slot).unwrap_or_default();
        gens.sort_unstable();
        for within in 0..s.len(k_busy) {
            let mini = s.start_mini + within;
            let before = gens.iter().filter(|&&g| g < mini).count();
            let through = gens.iter().filter(|&&g| g <= mini).count();
            let r = packet_to_slot_ratio(s.c as usize, s.busy, s.b_max, before, through, m_param);
            // compare as integers to keep the check exact
            let num = (s.c as u64 + through as u64) * m_param as u64;
            let den = (s.b_max as u64).max(crate::mac::virtual_entry(s.c as usize, s.busy, before, m_param) as u64);
            if num > 0 && num > den {
                violations += 1;
            }
            max_ratio = max_ratio.max(r);
        }
    }
    (violations, max_ratio)
}

/// Lemma-style witness for a collision between packets generated in slots
/// `k1 < k2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CollisionWitness {
    /// `k2 - k1`.
    pub alpha: u64,
    /// Departures between the two generations: transmissions in slots
    /// `k1..k2` plus expiries after the first generation up to the second.
    pub tau: u64,
    /// Generations after the first packet up to and including the second.
    pub eta: u64,
    /// Whether `M (tau - eta) = alpha`.
    pub holds: bool,
}

/// Sorted views of a packet trace for counting queries.
#[derive(Debug, Clone)]
pub struct TraceIndex<'a> {
    packets: &'a [PacketRecord],
    gens: Vec<u64>,
    expiries: Vec<u64>,
    tx_slots: Vec<u64>,
    m_param: u32,
}

impl<'a> TraceIndex<'a> {
    pub fn new(packets: &'a [PacketRecord], m_param: u32, cycle_len: u64) -> Self {
        let mut gens: Vec<u64> = packets.iter().map(|p| p.generation).collect();
        // a packet expires exactly when its vehicle generates the next one
        let mut expiries: Vec<u64> = packets
            .iter()
            .filter(|p| p.outcome == Outcome::Expired)
            .map(|p| p.generation + cycle_len)
            .collect();
        let mut tx_slots: Vec<u64> = packets.iter().filter_map(|p| p.tx_slot).collect();
        gens.sort_unstable();
        expiries.sort_unstable();
        tx_slots.sort_unstable();
        TraceIndex { packets, gens, expiries, tx_slots, m_param }
    }

    /// Elements of a sorted vector in `(lo, hi]`.
    fn count_open_closed(v: &[u64], lo: u64, hi: u64) -> u64 {
        (v.partition_point(|&x| x <= hi) - v.partition_point(|&x| x <= lo)) as u64
    }

    /// Pairs `(a, b)` of packets that collided with each other.
    pub fn collision_pairs(&self) -> Vec<(usize, usize)> {
        let mut by_slot: HashMap<u64, Vec<usize>> = HashMap::new();
        for (i, p) in self.packets.iter().enumerate() {
            if p.outcome == Outcome::Collided {
                if let Some(s) = p.tx_slot {
                    by_slot.entry(s).or_default().push(i);
                }
            }
        }
        let mut pairs = Vec::new();
        let mut slots: Vec<_> = by_slot.into_iter().collect();
        slots.sort_unstable();
        for (_, ids) in slots {
            for (x, &a) in ids.iter().enumerate() {
                for &b in &ids[x + 1..] {
                    pairs.push((a, b));
                }
            }
        }
        pairs
    }
}

/// Extracts `(alpha, tau, eta)` for a collision between packets `a` and `b`
/// and checks `M (tau - eta) = alpha`.
///
/// Packets generated in the same slot have no such witness; they come back
/// as [`Error::TraceIntegrity`] just like malformed events.
pub fn verify_collision_condition(index: &TraceIndex<'_>, a: usize, b: usize) -> Result<CollisionWitness> {
    let get = |i: usize| {
        index
            .packets
            .get(i)
            .ok_or_else(|| Error::TraceIntegrity(format!("packet {i} not in trace")))
    };
    let (pa, pb) = (get(a)?, get(b)?);
    if pa.outcome != Outcome::Collided || pb.outcome != Outcome::Collided {
        return Err(Error::TraceIntegrity(format!("packets {a} and {b} are not both collided")));
    }
    if pa.tx_slot.is_none() || pa.tx_slot != pb.tx_slot {
        return Err(Error::TraceIntegrity(format!("packets {a} and {b} were sent in different slots")));
    }
    let (first, second) = if pa.generation <= pb.generation { (pa, pb) } else { (pb, pa) };
    if first.gen_slot == second.gen_slot {
        return Err(Error::TraceIntegrity(format!("packets {a} and {b} were generated in the same slot")));
    }
    let (k1, k2) = (first.gen_slot, second.gen_slot);
    let alpha = k2 - k1;
    let tx = (index.tx_slots.partition_point(|&s| s < k2) - index.tx_slots.partition_point(|&s| s < k1)) as u64;
    let expired = TraceIndex::count_open_closed(&index.expiries, first.generation, second.generation);
    let tau = tx + expired;
    let eta = TraceIndex::count_open_closed(&index.gens, first.generation, second.generation);
    let holds = tau >= eta && index.m_param as u64 * (tau - eta) == alpha;
    Ok(CollisionWitness { alpha, tau, eta, holds })
}

/// Result of replaying every collision of a trace.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Lemma4Report {
    pub pairs: usize,
    pub same_slot_pairs: usize,
    pub violations: usize,
    pub off_grid: usize,
}

pub fn replay_lemma4(packets: &[PacketRecord], m_param: u32, cycle_len: u64) -> Lemma4Report {
    let index = TraceIndex::new(packets, m_param, cycle_len);
    let mut report = Lemma4Report::default();
    for (a, b) in index.collision_pairs() {
        report.pairs += 1;
        match verify_collision_condition(&index, a, b) {
            Ok(w) => {
                if !w.holds {
                    report.violations += 1;
                }
                if w.alpha % m_param as u64 != 0 {
                    report.off_grid += 1;
                }
            }
            Err(_) => report.same_slot_pairs += 1,
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pkt(gen: u64, gen_slot: u64, tx_slot: Option<u64>, outcome: Outcome) -> PacketRecord {
        PacketRecord {
            vehicle: 0,
            generation: gen,
            gen_slot,
            entry_point: 0,
            start_tx: tx_slot,
            tx_slot,
            outcome,
            d_o: None,
            d_c: None,
            collision_partner_count: (outcome == Outcome::Collided) as u32,
        }
    }

    #[test]
    fn conservation_detects_tampering() {
        let ok = [
            SlotRecord { slot: 0, start_mini: 0, busy: false, n_o: 0, c: 0, b_max: 0, arrivals: 1, expired: 0 },
            SlotRecord { slot: 1, start_mini: 1, busy: false, n_o: 0, c: 1, b_max: 1, arrivals: 0, expired: 0 },
            SlotRecord { slot: 2, start_mini: 2, busy: true, n_o: 1, c: 1, b_max: 0, arrivals: 0, expired: 0 },
        ];
        assert_eq!(check_conservation(&ok), 0);
        let mut bad = ok;
        bad[1].c = 2;
        assert!(check_conservation(&bad) > 0);
        let mut bad = ok;
        bad[2].busy = false;
        assert!(check_conservation(&bad) > 0);
    }

    #[test]
    fn malformed_events_are_rejected() {
        let packets = vec![
            pkt(0, 0, Some(9), Outcome::Collided),
            pkt(5, 5, Some(9), Outcome::Sent),
            pkt(6, 6, Some(10), Outcome::Collided),
        ];
        let idx = TraceIndex::new(&packets, 3, 1000);
        assert!(verify_collision_condition(&idx, 0, 1).is_err());
        assert!(verify_collision_condition(&idx, 0, 2).is_err());
        assert!(verify_collision_condition(&idx, 0, 7).is_err());
    }

    #[test]
    fn off_grid_gap_fails_the_check() {
        // two packets four slots apart with M = 3 cannot satisfy the relation
        let packets = vec![pkt(0, 0, Some(12), Outcome::Collided), pkt(4, 4, Some(12), Outcome::Collided)];
        let idx = TraceIndex::new(&packets, 3, 1000);
        let w = verify_collision_condition(&idx, 0, 1).unwrap();
        assert_eq!(w.alpha, 4);
        assert!(!w.holds);
    }

    #[test]
    fn meta_header_round_trips() {
        let meta = TraceMeta {
            protocol: Protocol::Dcf,
            n_vehicles: 50,
            m_param: 2,
            k_busy: 24,
            w_window: 64,
            delta_churn: 1.0,
            cycle_len: 7692,
            round: 3,
        };
        assert_eq!(TraceMeta::parse(&meta.header_line()).unwrap(), meta);
    }
}
