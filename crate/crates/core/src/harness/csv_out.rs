//! Metrics table rows and their CSV form.

use std::path::Path;

use crate::error::{Error, Result};
use crate::mac::trace::Lemma4Report;
use crate::mac::Protocol;

pub const COLUMNS: [&str; 16] = [
    "protocol",
    "N",
    "W",
    "delta",
    "K",
    "rounds",
    "p_col_mean",
    "p_col_stderr",
    "d_c_mean_us",
    "d_o_mean_us",
    "expiry_rate",
    "upsilon_avg",
    "saturated",
    "c_s_model",
    "d_c_model_us",
    "p_col_ub",
];

/// Nine significant digits in scientific notation.
pub fn fmt_sig(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.8e}")
    } else {
        x.to_string()
    }
}

/// Exact bookkeeping behind a row. Not part of the CSV.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Audit {
    pub generated: u64,
    pub sent: u64,
    pub collided: u64,
    pub expired: u64,
    pub lemma1_violations: u64,
    pub minis_checked: u64,
    pub lemma4: Lemma4Report,
    /// Per-round collision probabilities.
    pub p_col_rounds: Vec<f64>,
    /// Per-cycle mean contention intensity averaged over rounds.
    pub contending_by_cycle: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub protocol: Protocol,
    pub n_vehicles: usize,
    /// Contention window, DCF only.
    pub w_window: Option<u32>,
    pub delta: f64,
    pub k_busy: u32,
    pub rounds: u32,
    pub p_col_mean: f64,
    pub p_col_stderr: f64,
    /// Seconds.
    pub d_c_mean: f64,
    /// Seconds.
    pub d_o_mean: f64,
    pub expiry_rate: f64,
    pub upsilon_avg: f64,
    pub saturated: bool,
    pub c_s_model: Option<f64>,
    /// Seconds.
    pub d_c_model: Option<f64>,
    pub p_col_ub: Option<f64>,
    pub audit: Option<Audit>,
}

impl MetricsRow {
    pub fn record(&self) -> Vec<String> {
        let opt = |x: Option<f64>| x.map(fmt_sig).unwrap_or_default();
        vec![
            self.protocol.to_string(),
            self.n_vehicles.to_string(),
            self.w_window.map(|w| w.to_string()).unwrap_or_default(),
            fmt_sig(self.delta),
            self.k_busy.to_string(),
            self.rounds.to_string(),
            fmt_sig(self.p_col_mean),
            fmt_sig(self.p_col_stderr),
            fmt_sig(self.d_c_mean * 1e6),
            fmt_sig(self.d_o_mean * 1e6),
            fmt_sig(self.expiry_rate),
            fmt_sig(self.upsilon_avg),
            self.saturated.to_string(),
            opt(self.c_s_model),
            opt(self.d_c_model.map(|d| d * 1e6)),
            opt(self.p_col_ub),
        ]
    }

    fn from_record(rec: &csv::StringRecord, line: usize) -> Result<Self> {
        let bad = |col: &str| Error::Config { line, msg: format!("bad `{col}` value") };
        let get = |i: usize| rec.get(i).ok_or_else(|| bad(COLUMNS[i]));
        let num = |i: usize| -> Result<f64> { get(i)?.parse().map_err(|_| bad(COLUMNS[i])) };
        let opt = |i: usize| -> Result<Option<f64>> {
            let s = get(i)?;
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| bad(COLUMNS[i]))
            }
        };
        Ok(MetricsRow {
            protocol: get(0)?.parse().map_err(|_| bad(COLUMNS[0]))?,
            n_vehicles: get(1)?.parse().map_err(|_| bad(COLUMNS[1]))?,
            w_window: match get(2)? {
                "" => None,
                s => Some(s.parse().map_err(|_| bad(COLUMNS[2]))?),
            },
            delta: num(3)?,
            k_busy: get(4)?.parse().map_err(|_| bad(COLUMNS[4]))?,
            rounds: get(5)?.parse().map_err(|_| bad(COLUMNS[5]))?,
            p_col_mean: num(6)?,
            p_col_stderr: num(7)?,
            d_c_mean: num(8)? * 1e-6,
            d_o_mean: num(9)? * 1e-6,
            expiry_rate: num(10)?,
            upsilon_avg: num(11)?,
            saturated: get(12)?.parse().map_err(|_| bad(COLUMNS[12]))?,
            c_s_model: opt(13)?,
            d_c_model: opt(14)?.map(|d| d * 1e-6),
            p_col_ub: opt(15)?,
            audit: None,
        })
    }
}

/// Header line plus one line per row.
pub fn write_csv_to<W: std::io::Write>(rows: &[MetricsRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS)?;
    for r in rows {
        w.write_record(r.record())?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))
}

pub fn write_csv(rows: &[MetricsRow], path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::InvalidParam("no rows to write".into()));
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv_to(rows, f)
}

/// The rendered table as a string.
pub fn csv_string(rows: &[MetricsRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv_to(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

pub fn read_csv_from<R: std::io::Read>(input: R) -> Result<Vec<MetricsRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(COLUMNS.iter().copied()) {
        return Err(Error::Config { line: 1, msg: "unexpected metrics header".into() });
    }
    r.records()
        .enumerate()
        .map(|(i, rec)| MetricsRow::from_record(&rec?, i + 2))
        .collect()
}

pub fn read_csv(path: &Path) -> Result<Vec<MetricsRow>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv_from(f)
}
