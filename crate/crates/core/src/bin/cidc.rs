use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cidc_core::harness::run::write_analytics_csv;
use cidc_core::harness::{analyze_grid, compare_report, parse_config, read_csv, run_experiment, write_csv};
use cidc_core::harness::{ExperimentConfig, RunOptions};
use cidc_core::mac::trace::{check_conservation, read_packets, read_slots, replay_lemma1, replay_lemma4};
use cidc_core::mac::Protocol;
use cidc_core::{Error, Result};

#[derive(Parser)]
#[command(name = "cidc", version, about = "CIDC / 802.11p broadcast MAC simulator and models")]
struct Cli {
    /// Experiment configuration (flat key = value file).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `out_dir` from the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    /// Base seed; overrides `rng_seed` from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write per-round slot and packet traces.
    #[arg(long, global = true)]
    traces: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the configured sweep and write metrics.csv.
    Simulate,
    /// Evaluate the steady-state models only and write analytics.csv.
    Analyze,
    /// Compare protocols from one or more metrics tables.
    Report { inputs: Vec<PathBuf> },
    /// Replay invariants over trace files or directories.
    Verify { inputs: Vec<PathBuf> },
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Io { path: p.clone(), source: e })?;
            parse_config(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.base.rng_seed = seed;
    }
    Ok(cfg)
}

fn simulate(cli: &Cli) -> Result<bool> {
    let cfg = load_config(cli)?;
    let opts = RunOptions {
        workers: cli.workers,
        trace_dir: cli.traces.then(|| cfg.out_dir.join("traces")),
    };
    let rows = run_experiment(&cfg, &opts)?;
    let path = cfg.out_dir.join("metrics.csv");
    write_csv(&rows, &path)?;
    eprintln!("wrote {} rows to {}", rows.len(), path.display());
    print!("{}", compare_report(&rows));
    Ok(true)
}

fn analyze(cli: &Cli) -> Result<bool> {
    let cfg = load_config(cli)?;
    let rows = analyze_grid(&cfg)?;
    let path = cfg.out_dir.join("analytics.csv");
    write_analytics_csv(&rows, &path)?;
    for r in &rows {
        match &r.steady {
            Some(s) => println!(
                "K={:>2} N={:>3}  c_s={:.5}  d_c={:.2} us  p_col={:.3e}  bound={:.3e}",
                r.k_busy,
                r.n_vehicles,
                s.c_s,
                s.d_c * 1e6,
                s.p_col,
                s.p_col_ub
            ),
            None => println!("K={:>2} N={:>3}  {}", r.k_busy, r.n_vehicles, r.status),
        }
    }
    eprintln!("wrote {}", path.display());
    Ok(true)
}

fn report(inputs: &[PathBuf]) -> Result<bool> {
    if inputs.is_empty() {
        return Err(Error::InvalidParam("report needs at least one metrics CSV".into()));
    }
    let mut rows = Vec::new();
    for p in inputs {
        rows.extend(read_csv(p)?);
    }
    print!("{}", compare_report(&rows));
    Ok(true)
}

fn slot_files(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let entries = std::fs::read_dir(p).map_err(|e| Error::Io { path: p.clone(), source: e })?;
            for e in entries {
                let path = e.map_err(|e| Error::Io { path: p.clone(), source: e })?.path();
                if path.to_string_lossy().ends_with(".slots.csv") {
                    out.push(path);
                }
            }
        } else {
            out.push(p.clone());
        }
    }
    out.sort();
    Ok(out)
}

fn verify_one(slots_path: &Path, cfg: &ExperimentConfig) -> Result<bool> {
    let name = slots_path.to_string_lossy();
    let stem = name.strip_suffix(".slots.csv").ok_or_else(|| {
        Error::TraceIntegrity(format!("{name}: expected a .slots.csv file"))
    })?;
    let packets_path = PathBuf::from(format!("{stem}.packets.csv"));
    let (meta, slots) = read_slots(slots_path)?;
    let (_, packets) = read_packets(&packets_path, cfg.base.t_slot, cfg.base.t_difs)?;
    let conservation = check_conservation(&slots);
    let mut ok = conservation == 0;
    let mut line = format!("{stem}: conservation violations {conservation}");
    if meta.protocol == Protocol::Cidc {
        let (l1, max_ratio) = replay_lemma1(&slots, &packets, meta.m_param, meta.k_busy);
        let l4 = replay_lemma4(&packets, meta.m_param, meta.cycle_len);
        line += &format!(
            ", ratio bound violations {l1} (max {max_ratio:.4}), collision pairs {} with {} violations",
            l4.pairs, l4.violations
        );
        if meta.delta_churn == 0.0 {
            ok &= l1 == 0 && l4.violations == 0 && l4.off_grid == 0;
        }
    }
    println!("{} {line}", if ok { "PASS" } else { "FAIL" });
    Ok(ok)
}

fn verify(cli: &Cli, inputs: &[PathBuf]) -> Result<bool> {
    let cfg = load_config(cli)?;
    let default_dir = [cfg.out_dir.join("traces")];
    let inputs = if inputs.is_empty() { &default_dir[..] } else { inputs };
    let files = slot_files(inputs)?;
    if files.is_empty() {
        return Err(Error::TraceIntegrity("no .slots.csv traces found".into()));
    }
    let mut all = true;
    for f in &files {
        all &= verify_one(f, &cfg)?;
    }
    Ok(all)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.cmd {
        Cmd::Simulate => simulate(&cli),
        Cmd::Analyze => analyze(&cli),
        Cmd::Report { inputs } => report(inputs),
        Cmd::Verify { inputs } => verify(&cli, inputs),
    };
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
