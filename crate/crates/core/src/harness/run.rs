//! Parameter sweeps over parallel Monte Carlo rounds.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::analytics::{self, Regime};
use crate::dcf::run_round;
use crate::error::{Error, Result};
use crate::harness::config::ExperimentConfig;
use crate::harness::csv_out::{fmt_sig, Audit, MetricsRow};
use crate::mac::trace::{replay_lemma4, Lemma4Report};
use crate::mac::{Outcome, Protocol, RoundResult};
use crate::model::ProtocolParams;

/// Expiry rate above which a grid point counts as saturated.
pub const SATURATION_EXPIRY_RATE: f64 = 0.05;
/// Number of final cycles inspected for sustained growth of `c(k)`.
pub const SATURATION_WINDOW: usize = 40;

#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub protocol: Protocol,
    pub params: ProtocolParams,
}

impl GridPoint {
    pub fn w_window(&self) -> Option<u32> {
        (self.protocol == Protocol::Dcf).then_some(self.params.w_window)
    }
}

/// Grid points in output order: transmission time, `N`, protocol, then the
/// protocol's own axis (`delta` for CIDC, `W` for DCF).
pub fn grid(cfg: &ExperimentConfig) -> Result<Vec<GridPoint>> {
    let mut out = Vec::new();
    for &(t_tx, _) in &cfg.tx_values {
        for &n in &cfg.n_values {
            for &protocol in &cfg.protocols {
                let mut p = cfg.base.clone();
                p.set_t_tx(t_tx)?;
                p.n_vehicles = n;
                match protocol {
                    Protocol::Cidc => {
                        for &d in &cfg.delta_values {
                            let mut p = p.clone();
                            p.delta_churn = d;
                            out.push(GridPoint { protocol, params: p });
                        }
                    }
                    Protocol::Dcf => {
                        for &w in &cfg.w_values {
                            let mut p = p.clone();
                            p.w_window = w;
                            p.delta_churn = 0.0;
                            out.push(GridPoint { protocol, params: p });
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Per-round reduction of a [`RoundResult`].
#[derive(Debug, Clone, Default)]
pub struct RoundMetrics {
    pub sent: u64,
    pub collided: u64,
    pub expired: u64,
    pub d_c_sum: f64,
    pub d_o_sum: f64,
    pub delay_count: u64,
    pub upsilon_sum: f64,
    pub minis: u64,
    pub contending_by_cycle: Vec<f64>,
    pub total: [u64; 3],
    pub lemma1_violations: u64,
    pub minis_checked: u64,
    pub lemma4: Lemma4Report,
}

impl RoundMetrics {
    pub fn p_col(&self) -> Option<f64> {
        let d = self.sent + self.collided;
        (d > 0).then(|| self.collided as f64 / d as f64)
    }
}

pub fn reduce_round(r: &RoundResult, warmup_cycles: u32, include_collided_delays: bool) -> RoundMetrics {
    let l = r.params.minis_per_cycle();
    let from = warmup_cycles as u64 * l;
    let mut m = RoundMetrics::default();
    for p in &r.packets {
        let slot = match p.outcome {
            Outcome::Sent => 0,
            Outcome::Collided => 1,
            Outcome::Expired => 2,
        };
        m.total[slot] += 1;
        if p.generation < from {
            continue;
        }
        match p.outcome {
            Outcome::Sent => m.sent += 1,
            Outcome::Collided => m.collided += 1,
            Outcome::Expired => m.expired += 1,
        }
        let counted = p.outcome == Outcome::Sent || (include_collided_delays && p.outcome == Outcome::Collided);
        if let (true, Some(d_c), Some(d_o)) = (counted, p.d_c, p.d_o) {
            m.d_c_sum += d_c;
            m.d_o_sum += d_o;
            m.delay_count += 1;
        }
    }
    for cs in r.trace.cycles.iter().skip(warmup_cycles as usize) {
        m.upsilon_sum += cs.upsilon_sum;
        m.minis += l;
    }
    m.contending_by_cycle = r.trace.cycles.iter().map(|cs| cs.contending_sum / l as f64).collect();
    m.lemma1_violations = r.trace.lemma1_violations;
    m.minis_checked = r.trace.minis_checked;
    if r.protocol == Protocol::Cidc {
        m.lemma4 = replay_lemma4(&r.packets, r.params.m_param, l);
    }
    m
}

/// Saturation rule: expiry rate above 5 %, or a contention intensity that
/// keeps growing over the final cycles.
///
/// Growth means a least-squares slope over the last
/// [`SATURATION_WINDOW`] cycles that is both statistically clear
/// (t > 3) and large enough to add at least 10 % to the window mean.
pub fn is_saturated(contending_by_cycle: &[f64], expiry_rate: f64) -> bool {
    if expiry_rate > SATURATION_EXPIRY_RATE {
        return true;
    }
    let w = SATURATION_WINDOW.min(contending_by_cycle.len() / 4).max(3);
    if contending_by_cycle.len() < w {
        return false;
    }
    let ys = &contending_by_cycle[contending_by_cycle.len() - w..];
    let n = w as f64;
    let x_mean = (n - 1.0) / 2.0;
    let y_mean = ys.iter().sum::<f64>() / n;
    let sxx: f64 = (0..w).map(|i| (i as f64 - x_mean).powi(2)).sum();
    let sxy: f64 = ys.iter().enumerate().map(|(i, y)| (i as f64 - x_mean) * (y - y_mean)).sum();
    let slope = sxy / sxx;
    let resid: f64 = ys
        .iter()
        .enumerate()
        .map(|(i, y)| (y - y_mean - slope * (i as f64 - x_mean)).powi(2))
        .sum();
    let se = (resid / (n - 2.0) / sxx).sqrt();
    let rise = slope * (n - 1.0);
    slope > 0.0 && (se == 0.0 || slope / se > 3.0) && rise > 0.1 * y_mean.max(1e-12)
}

fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Combines the rounds of one grid point into a row.
pub fn aggregate(point: &GridPoint, rounds: &[RoundMetrics], analytics_on: bool) -> MetricsRow {
    let p = &point.params;
    let p_cols: Vec<f64> = rounds.iter().filter_map(RoundMetrics::p_col).collect();
    let (p_col_mean, p_col_stderr) = mean_stderr(&p_cols);
    let sum = |f: fn(&RoundMetrics) -> f64| rounds.iter().map(f).sum::<f64>();
    let sumu = |f: fn(&RoundMetrics) -> u64| rounds.iter().map(f).sum::<u64>();
    let delay_n = sumu(|r| r.delay_count) as f64;
    let generated_post = sumu(|r| r.sent + r.collided + r.expired) as f64;
    let expiry_rate = if generated_post > 0.0 { sumu(|r| r.expired) as f64 / generated_post } else { 0.0 };
    let minis = sumu(|r| r.minis) as f64;
    let n_cycles = rounds.iter().map(|r| r.contending_by_cycle.len()).max().unwrap_or(0);
    let contending_by_cycle: Vec<f64> = (0..n_cycles)
        .map(|c| rounds.iter().filter_map(|r| r.contending_by_cycle.get(c)).sum::<f64>() / rounds.len() as f64)
        .collect();

    let (c_s_model, d_c_model, p_col_ub) = if analytics_on && point.protocol == Protocol::Cidc {
        match analytics::solve_delay_system(p) {
            Ok((c_s, d_o, p0)) => (
                Some(c_s),
                analytics::contention_delay(d_o, p).ok(),
                analytics::collision_upper_bound(p, p0).ok(),
            ),
            Err(_) => (None, None, None),
        }
    } else {
        (None, None, None)
    };

    let total = |i: usize| rounds.iter().map(|r| r.total[i]).sum::<u64>();
    let audit = Audit {
        generated: total(0) + total(1) + total(2),
        sent: total(0),
        collided: total(1),
        expired: total(2),
        lemma1_violations: sumu(|r| r.lemma1_violations),
        minis_checked: sumu(|r| r.minis_checked),
        lemma4: rounds.iter().fold(Lemma4Report::default(), |a, r| Lemma4Report {
            pairs: a.pairs + r.lemma4.pairs,
            same_slot_pairs: a.same_slot_pairs + r.lemma4.same_slot_pairs,
            violations: a.violations + r.lemma4.violations,
            off_grid: a.off_grid + r.lemma4.off_grid,
        }),
        p_col_rounds: p_cols,
        contending_by_cycle,
    };

    MetricsRow {
        protocol: point.protocol,
        n_vehicles: p.n_vehicles,
        w_window: point.w_window(),
        delta: if point.protocol == Protocol::Cidc { p.delta_churn } else { 0.0 },
        k_busy: p.k_busy,
        rounds: rounds.len() as u32,
        p_col_mean,
        p_col_stderr,
        d_c_mean: sum(|r| r.d_c_sum) / delay_n,
        d_o_mean: sum(|r| r.d_o_sum) / delay_n,
        expiry_rate,
        upsilon_avg: if minis > 0.0 { sum(|r| r.upsilon_sum) / minis } else { 0.0 },
        saturated: is_saturated(&audit.contending_by_cycle, expiry_rate),
        c_s_model,
        d_c_model,
        p_col_ub,
        audit: Some(audit),
    }
}

/// Options that do not belong in the config document.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; 0 picks the rayon default.
    pub workers: usize,
    /// Directory for per-round traces, if requested.
    pub trace_dir: Option<PathBuf>,
}

fn run_job(point: &GridPoint, round: u32, cfg: &ExperimentConfig, trace_dir: Option<&Path>) -> Result<RoundMetrics> {
    let r = run_round(&point.params, point.protocol, round, trace_dir.is_some())?;
    if let Some(dir) = trace_dir {
        r.write_traces(dir)?;
    }
    Ok(reduce_round(&r, cfg.warmup_cycles, cfg.include_collided_delays))
}

/// Runs every grid point for `n_rounds` rounds and returns one row per point
/// in grid order. The result does not depend on the worker count.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Vec<MetricsRow>> {
    cfg.validate()?;
    let points = grid(cfg)?;
    let rounds = cfg.base.n_rounds;
    let jobs: Vec<(usize, u32)> = (0..points.len()).flat_map(|i| (0..rounds).map(move |r| (i, r))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers)
        .build()
        .map_err(|e| Error::InvalidParam(format!("thread pool: {e}")))?;
    let trace_dir = opts.trace_dir.as_deref();
    let results: Vec<RoundMetrics> = pool.install(|| {
        jobs.par_iter()
            .map(|&(i, r)| run_job(&points[i], r, cfg, trace_dir))
            .collect::<Result<_>>()
    })?;
    Ok(points
        .iter()
        .zip(results.chunks(rounds as usize))
        .map(|(pt, rs)| aggregate(pt, rs, cfg.analytics))
        .collect())
}

/// Model-only quantities for one `(K, N)` point.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticsRow {
    pub n_vehicles: usize,
    pub k_busy: u32,
    pub status: String,
    pub steady: Option<analytics::SteadyState>,
    pub c_s_small_n: Option<f64>,
    pub c_s_large_n: Option<f64>,
}

pub fn analyze_grid(cfg: &ExperimentConfig) -> Result<Vec<AnalyticsRow>> {
    let mut out = Vec::new();
    for &(t_tx, _) in &cfg.tx_values {
        for &n in &cfg.n_values {
            let mut p = cfg.base.clone();
            p.set_t_tx(t_tx)?;
            p.n_vehicles = n;
            let (status, steady) = match analytics::steady_state(&p) {
                Ok(s) => ("ok".to_string(), Some(s)),
                Err(Error::BeyondSaturation(_)) => ("beyond_saturation".to_string(), None),
                Err(Error::Numeric { .. }) => ("numeric_failure".to_string(), None),
                Err(e) => return Err(e),
            };
            out.push(AnalyticsRow {
                n_vehicles: n,
                k_busy: p.k_busy,
                status,
                steady,
                c_s_small_n: analytics::approx_cs(&p, Regime::SmallN).ok(),
                c_s_large_n: analytics::approx_cs(&p, Regime::LargeN).ok(),
            });
        }
    }
    Ok(out)
}

pub const ANALYTICS_COLUMNS: [&str; 14] = [
    "N",
    "K",
    "status",
    "c_s",
    "c_s_small_n",
    "c_s_large_n",
    "d_o_us",
    "d_c_us",
    "p_ck0",
    "upsilon_s",
    "n_s",
    "p_col",
    "p_col_ub",
    "n_sat",
];

pub fn write_analytics_csv(rows: &[AnalyticsRow], path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(ANALYTICS_COLUMNS)?;
    let opt = |x: Option<f64>| x.map(fmt_sig).unwrap_or_default();
    for r in rows {
        let s = r.steady.as_ref();
        w.write_record([
            r.n_vehicles.to_string(),
            r.k_busy.to_string(),
            r.status.clone(),
            opt(s.map(|s| s.c_s)),
            opt(r.c_s_small_n),
            opt(r.c_s_large_n),
            opt(s.map(|s| s.d_o * 1e6)),
            opt(s.map(|s| s.d_c * 1e6)),
            opt(s.map(|s| s.p_ck0)),
            opt(s.map(|s| s.upsilon_s)),
            opt(s.map(|s| s.n_s)),
            opt(s.map(|s| s.p_col)),
            opt(s.map(|s| s.p_col_ub)),
            opt(s.map(|s| s.n_sat)),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
