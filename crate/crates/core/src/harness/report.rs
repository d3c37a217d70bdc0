//! CIDC-vs-DCF comparison report over a metrics table.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::harness::csv_out::MetricsRow;
use crate::mac::Protocol;

/// Relative delay-model error allowed for `N <= 150`.
pub const MODEL_TOL_MEDIUM: f64 = 0.10;
/// Relative delay-model error allowed for `150 < N <= 225`.
pub const MODEL_TOL_LARGE: f64 = 0.20;

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub k_busy: u32,
    pub n_vehicles: usize,
    pub w_window: u32,
    /// CIDC collision probability over DCF's.
    pub p_col_ratio: f64,
    /// DCF minus CIDC mean contention delay, seconds.
    pub d_c_gap: f64,
    /// Collision-probability gap in pooled standard errors.
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    /// `None` when the table lacks the rows to decide.
    pub pass: Option<bool>,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub comparisons: Vec<Comparison>,
    /// `(K, N, delta, p_col, bound)` rows where the simulated value exceeds the bound.
    pub bound_violations: Vec<(u32, usize, f64, f64, f64)>,
    /// `(K, N, d_c_sim, d_c_model, relative error)` beyond tolerance.
    pub model_mismatches: Vec<(u32, usize, f64, f64, f64)>,
    pub warnings: Vec<String>,
    pub checks: Vec<Check>,
}

type Key = (u32, usize);

fn key(r: &MetricsRow) -> Key {
    (r.k_busy, r.n_vehicles)
}

fn model_tolerance(n: usize) -> Option<f64> {
    if n <= 150 {
        Some(MODEL_TOL_MEDIUM)
    } else if n <= 225 {
        Some(MODEL_TOL_LARGE)
    } else {
        None
    }
}

fn verdict(name: &str, checked: usize, failures: &[String]) -> Check {
    Check {
        name: name.to_string(),
        pass: (checked > 0).then_some(failures.is_empty()),
        detail: if failures.is_empty() {
            format!("{checked} points checked")
        } else {
            format!("{checked} points checked; failing: {}", failures.join("; "))
        },
    }
}

pub fn build_report(rows: &[MetricsRow]) -> Report {
    let mut rep = Report::default();
    let mut cidc: BTreeMap<Key, BTreeMap<u64, &MetricsRow>> = BTreeMap::new();
    let mut dcf: BTreeMap<Key, BTreeMap<u32, &MetricsRow>> = BTreeMap::new();
    for r in rows {
        match (r.protocol, r.w_window) {
            (Protocol::Cidc, _) => {
                cidc.entry(key(r)).or_default().insert(r.delta.to_bits(), r);
            }
            (Protocol::Dcf, Some(w)) => {
                dcf.entry(key(r)).or_default().insert(w, r);
            }
            (Protocol::Dcf, None) => rep.warnings.push(format!("DCF row K={} N={} has no W", r.k_busy, r.n_vehicles)),
        }
    }
    let base = |k: &Key| cidc.get(k).and_then(|m| m.get(&0f64.to_bits()).copied());

    for k in dcf.keys() {
        if base(k).is_none() {
            rep.warnings.push(format!("K={} N={}: DCF rows without a CIDC (delta=0) counterpart", k.0, k.1));
        }
    }
    for k in cidc.keys() {
        if !dcf.contains_key(k) {
            rep.warnings.push(format!("K={} N={}: CIDC row without DCF counterparts", k.0, k.1));
        }
    }

    let (mut n_order, mut f_order) = (0, Vec::new());
    let (mut n_delay, mut f_delay) = (0, Vec::new());
    for (k, by_w) in &dcf {
        let Some(c) = base(k) else { continue };
        for (&w, d) in by_w {
            let pooled = (c.p_col_stderr.powi(2) + d.p_col_stderr.powi(2)).sqrt();
            let gap = d.p_col_mean - c.p_col_mean;
            let z = if pooled > 0.0 { gap / pooled } else { f64::INFINITY * gap.signum() };
            rep.comparisons.push(Comparison {
                k_busy: k.0,
                n_vehicles: k.1,
                w_window: w,
                p_col_ratio: c.p_col_mean / d.p_col_mean,
                d_c_gap: d.d_c_mean - c.d_c_mean,
                z,
            });
            if k.0 == 24 {
                n_order += 1;
                let ok = gap > 0.0 && (k.1 < 100 || z > 2.0);
                if !ok {
                    f_order.push(format!("N={} W={w} (z={z:.2})", k.1));
                }
            }
            let delay_applies = k.0 != 30 || k.1 <= 200;
            if delay_applies {
                n_delay += 1;
                if !(c.d_c_mean < d.d_c_mean) {
                    f_delay.push(format!("K={} N={} W={w}", k.0, k.1));
                }
            }
        }
    }
    for (k, by_delta) in &cidc {
        if k.0 == 30 && k.1 == 250 {
            if let Some(c) = by_delta.get(&0f64.to_bits()) {
                n_delay += 1;
                if !c.saturated {
                    f_delay.push("K=30 N=250 not flagged saturated".into());
                }
            }
        }
    }
    rep.checks.push(verdict("collision ordering vs DCF (K=24)", n_order, &f_order));
    rep.checks.push(verdict("delay ordering vs DCF", n_delay, &f_delay));

    let (mut n_model, mut f_model) = (0, Vec::new());
    let (mut n_bound, mut f_bound) = (0, Vec::new());
    for (k, by_delta) in &cidc {
        for r in by_delta.values() {
            if let Some(ub) = r.p_col_ub {
                n_bound += 1;
                if r.p_col_mean > ub {
                    rep.bound_violations.push((k.0, k.1, r.delta, r.p_col_mean, ub));
                    f_bound.push(format!("K={} N={} delta={}", k.0, k.1, r.delta));
                }
            }
        }
        let Some(c) = by_delta.get(&0f64.to_bits()) else { continue };
        if let (Some(model), Some(tol)) = (c.d_c_model, model_tolerance(k.1)) {
            if k.0 == 24 {
                n_model += 1;
                let rel = (c.d_c_mean - model).abs() / c.d_c_mean;
                if rel > tol {
                    rep.model_mismatches.push((k.0, k.1, c.d_c_mean, model, rel));
                    f_model.push(format!("N={} ({:.1}%)", k.1, 100.0 * rel));
                }
            }
        }
        if k.0 == 30 && k.1 == 250 {
            n_model += 1;
            if c.d_c_model.is_some() {
                f_model.push("K=30 N=250 has a delay model value".into());
            }
        }
    }
    rep.checks.push(verdict("delay model vs simulation", n_model, &f_model));
    rep.checks.push(verdict("collision bound", n_bound, &f_bound));

    let (mut n_churn, mut f_churn) = (0, Vec::new());
    for (k, by_delta) in &cidc {
        if k.0 != 24 {
            continue;
        }
        let at = |d: f64| by_delta.get(&d.to_bits()).copied();
        if let (Some(c1), Some(d64)) = (at(1.0), dcf.get(k).and_then(|m| m.get(&64))) {
            n_churn += 1;
            if !(c1.p_col_mean < d64.p_col_mean) {
                f_churn.push(format!("N={} delta=1 vs W=64", k.1));
            }
        }
        if let (true, Some(c0), Some(c1), Some(c3)) = (k.1 >= 100, at(0.0), at(1.0), at(3.0)) {
            n_churn += 1;
            if !(c0.p_col_mean < c1.p_col_mean && c1.p_col_mean < c3.p_col_mean) {
                f_churn.push(format!(
                    "N={} order {:.4} / {:.4} / {:.4}",
                    k.1, c0.p_col_mean, c1.p_col_mean, c3.p_col_mean
                ));
            }
        }
    }
    rep.checks.push(verdict("churn ordering (W=64)", n_churn, &f_churn));
    rep
}

impl Report {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "CIDC vs DCF");
        let _ = writeln!(s, "{:>3} {:>4} {:>4} {:>12} {:>14} {:>8}", "K", "N", "W", "p_col ratio", "d_c gap (us)", "z");
        for c in &self.comparisons {
            let _ = writeln!(
                s,
                "{:>3} {:>4} {:>4} {:>12.4} {:>14.2} {:>8.2}",
                c.k_busy,
                c.n_vehicles,
                c.w_window,
                c.p_col_ratio,
                c.d_c_gap * 1e6,
                c.z
            );
        }
        let _ = writeln!(s, "\nbound violations: {}", self.bound_violations.len());
        for (k, n, d, p, ub) in &self.bound_violations {
            let _ = writeln!(s, "  K={k} N={n} delta={d}: p_col {p:.6} > bound {ub:.6}");
        }
        let _ = writeln!(s, "delay model mismatches: {}", self.model_mismatches.len());
        for (k, n, sim, model, rel) in &self.model_mismatches {
            let _ = writeln!(
                s,
                "  K={k} N={n}: simulated {:.2} us, model {:.2} us ({:.1}%)",
                sim * 1e6,
                model * 1e6,
                rel * 100.0
            );
        }
        for w in &self.warnings {
            let _ = writeln!(s, "warning: {w}");
        }
        let _ = writeln!(s, "\nsummary");
        for c in &self.checks {
            let tag = match c.pass {
                Some(true) => "PASS",
                Some(false) => "FAIL",
                None => "N/A ",
            };
            let _ = writeln!(s, "  {tag} {}: {}", c.name, c.detail);
        }
        s
    }
}

/// Text report for a metrics table. Same rows give the same bytes.
pub fn compare_report(rows: &[MetricsRow]) -> String {
    build_report(rows).render()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(protocol: Protocol, n: usize, w: Option<u32>, delta: f64, p_col: f64, d_c: f64) -> MetricsRow {
        MetricsRow {
            protocol,
            n_vehicles: n,
            w_window: w,
            delta,
            k_busy: 24,
            rounds: 10,
            p_col_mean: p_col,
            p_col_stderr: 1e-4,
            d_c_mean: d_c,
            d_o_mean: d_c + 254e-6,
            expiry_rate: 0.0,
            upsilon_avg: 0.1,
            saturated: false,
            c_s_model: None,
            d_c_model: None,
            p_col_ub: None,
            audit: None,
        }
    }

    fn grid() -> Vec<MetricsRow> {
        let mut rows = Vec::new();
        for n in [50, 100] {
            let mut c = row(Protocol::Cidc, n, None, 0.0, 0.01, 100e-6);
            c.p_col_ub = Some(0.05);
            c.d_c_model = Some(102e-6);
            rows.push(c);
            for w in [32, 64, 128] {
                rows.push(row(Protocol::Dcf, n, Some(w), 0.0, 0.1, 500e-6));
            }
        }
        rows
    }

    #[test]
    fn dominating_grid_has_no_violations() {
        let rep = build_report(&grid());
        assert!(rep.bound_violations.is_empty());
        assert!(rep.model_mismatches.is_empty());
        assert!(rep.warnings.is_empty());
        assert_eq!(rep.comparisons.len(), 6);
        assert_eq!(rep.checks[0].pass, Some(true));
    }

    #[test]
    fn injected_bound_violation_is_listed() {
        let mut rows = grid();
        rows[0].p_col_mean = 0.2;
        let rep = build_report(&rows);
        assert_eq!(rep.bound_violations.len(), 1);
        assert!(compare_report(&rows).contains("p_col 0.200000 > bound"));
    }

    #[test]
    fn missing_counterpart_warns() {
        let rows = vec![row(Protocol::Dcf, 75, Some(64), 0.0, 0.1, 1e-4)];
        let rep = build_report(&rows);
        assert_eq!(rep.warnings.len(), 1);
    }

    #[test]
    fn churn_ordering_check() {
        let mut rows = grid();
        rows.push(row(Protocol::Cidc, 100, None, 1.0, 0.02, 1e-4));
        rows.push(row(Protocol::Cidc, 100, None, 3.0, 0.03, 1e-4));
        let rep = build_report(&rows);
        let churn = rep.checks.iter().find(|c| c.name.starts_with("churn")).unwrap();
        assert_eq!(churn.pass, Some(true));
        assert_eq!(compare_report(&rows), compare_report(&rows));
    }
}
