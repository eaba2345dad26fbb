use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use ndn_cec::covert::{calibrate, Message, Symbol, Technique};
use ndn_cec::harness::{
    best_points, emit_csv, privacy_game, read_sweep, render_table, simulate_trial_traced, sweep,
    trial_seed, decode_trial, CsvRecord, ExperimentSpec, HarnessError, TrialPoint,
};
use ndn_cec::netsim::{Preset, RngStreams};

#[derive(Parser, Debug)]
#[command(name = "ndn-cec", version, about = "Covert ephemeral messaging over simulated NDN routers")]
struct Cli {
    /// TOML experiment file laid over the preset defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, env = "NDN_CEC_SEED")]
    seed: Option<u64>,
    #[arg(long, global = true)]
    preset: Option<Preset>,
    #[arg(long, global = true)]
    technique: Option<Technique>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate the hit/miss threshold from probe traffic.
    Calibrate,
    /// Send and decode messages; writes samples.csv and trials.csv.
    Run {
        /// Bit string to send instead of a random message.
        #[arg(long)]
        message: Option<String>,
        #[arg(long, default_value_t = 1)]
        trials: usize,
        /// Also write the first trial's event trace as trace.ndjson.
        #[arg(long)]
        trace: bool,
    },
    /// Error rate over the spacing and threshold grid; writes sweep.csv and rtt_index.csv.
    Sweep {
        /// Trials per point, overriding the config (scales bits per point).
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Compare post-expiry network state for pairs of different messages.
    Privacy {
        #[arg(long, default_value_t = 20)]
        pairs: usize,
    },
    /// Best threshold per spacing from a sweep table.
    Report {
        /// Defaults to <out>/sweep.csv.
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

#[derive(Serialize)]
struct SampleRow {
    trial: usize,
    technique: Technique,
    index: usize,
    name: String,
    issued: f64,
    rtt: Option<f64>,
    decoded: String,
    truth: String,
}

impl CsvRecord for SampleRow {
    const HEADER: &'static [&'static str] =
        &["trial", "technique", "index", "name", "issued", "rtt", "decoded", "truth"];
}

#[derive(Serialize)]
struct CalibrationRow {
    kind: &'static str,
    rtt_ms: f64,
}

impl CsvRecord for CalibrationRow {
    const HEADER: &'static [&'static str] = &["kind", "rtt_ms"];
}

#[derive(Serialize)]
struct PrivacyRow {
    pair: usize,
    technique: Technique,
    indistinguishable: bool,
    pre_expiry_differs: bool,
    compared_at_ms: f64,
}

impl CsvRecord for PrivacyRow {
    const HEADER: &'static [&'static str] =
        &["pair", "technique", "indistinguishable", "pre_expiry_differs", "compared_at_ms"];
}

fn load(cli: &Cli) -> Result<ExperimentSpec, HarnessError> {
    let mut spec = ExperimentSpec::from_path(cli.config.as_deref(), cli.preset, cli.technique)?;
    if let Some(seed) = cli.seed {
        spec.seed = seed;
    }
    Ok(spec)
}

fn out_dir(cli: &Cli) -> Result<&Path, HarnessError> {
    fs::create_dir_all(&cli.out)?;
    Ok(&cli.out)
}

fn calibrated(spec: &mut ExperimentSpec) -> Result<(), HarnessError> {
    if !spec.calibrate {
        return Ok(());
    }
    let seed = RngStreams::new(spec.seed).derive_seed("calibration");
    let est = calibrate(&spec.topology, seed, &spec.namespace_name()?, &spec.calibration)
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    if let Some(w) = &est.warning {
        eprintln!("warning: {w}");
    }
    spec.protocol.t_thresh = est.t_thresh;
    Ok(())
}

fn word(symbols: &[Symbol]) -> String {
    symbols.iter().map(|s| s.as_char()).collect()
}

fn cmd_calibrate(cli: &Cli) -> Result<(), HarnessError> {
    let spec = load(cli)?;
    let seed = RngStreams::new(spec.seed).derive_seed("calibration");
    let est = calibrate(&spec.topology, seed, &spec.namespace_name()?, &spec.calibration)
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let f = &est.fit;
    println!("hit  n={} mean={:.4} ms sd={:.4} ms", f.hit.n, f.hit.mean / 1e6, f.hit.sd / 1e6);
    println!("miss n={} mean={:.4} ms sd={:.4} ms", f.miss.n, f.miss.mean / 1e6, f.miss.sd / 1e6);
    println!("overlap={:.4} disjoint={}", f.overlap, f.disjoint);
    println!("t_thresh_ms={:.6}", est.t_thresh.as_secs_f64() * 1e3);
    if let Some(w) = &est.warning {
        eprintln!("warning: {w}");
    }
    let rows: Vec<CalibrationRow> = est
        .hits_ns
        .iter()
        .map(|v| CalibrationRow { kind: "hit", rtt_ms: v / 1e6 })
        .chain(est.misses_ns.iter().map(|v| CalibrationRow { kind: "miss", rtt_ms: v / 1e6 }))
        .collect();
    emit_csv(&out_dir(cli)?.join("calibration.csv"), &rows)
}

fn cmd_run(cli: &Cli, message: Option<&str>, trials: usize, trace: bool) -> Result<(), HarnessError> {
    let mut spec = load(cli)?;
    let fixed = message
        .map(|m| m.parse::<Message>().map_err(|e| HarnessError::Config(format!("message: {e}"))))
        .transpose()?;
    if let Some(m) = &fixed {
        spec.n = m.len();
    }
    calibrated(&mut spec)?;
    let dir = out_dir(cli)?.to_path_buf();
    let m = spec.protocol.bits_per_word() as usize;
    let mut samples = Vec::new();
    let mut reports = Vec::new();
    for trial in 0..trials {
        let seed = trial_seed(spec.seed, 0, trial);
        let point = match &fixed {
            Some(msg) => TrialPoint::new(&spec, msg.clone(), seed)?,
            None => TrialPoint::random(&spec, seed)?,
        };
        let tr = if trace && trial == 0 {
            let mut f = std::io::BufWriter::new(fs::File::create(dir.join("trace.ndjson"))?);
            simulate_trial_traced(&point, Some(&mut f))?
        } else {
            simulate_trial_traced(&point, None)?
        };
        let report = decode_trial(&tr, spec.protocol.threshold(), 0);
        let truth = tr.truth();
        for (index, s) in tr.samples[0].iter().enumerate() {
            let bits = (s.slot * m)..((s.slot + 1) * m).min(truth.len());
            samples.push(SampleRow {
                trial,
                technique: spec.protocol.technique,
                index,
                name: s.name.to_string(),
                issued: s.issued_at.as_secs_f64() * 1e3,
                rtt: s.rtt.map(|d| d.as_secs_f64() * 1e3),
                decoded: word(&report.decoded[bits.clone()]),
                truth: word(&truth[bits]),
            });
        }
        println!(
            "trial {trial}: {} n={} correct={} write_err={} read_err={} erasures={} error_rate={:.5} eff_bps={:.1}",
            report.technique,
            report.n,
            report.correct,
            report.write_errors,
            report.read_errors,
            report.erasures,
            report.error_rate(),
            report.effective_bit_rate
        );
        reports.push(report);
    }
    emit_csv(&dir.join("samples.csv"), &samples)?;
    emit_csv(&dir.join("trials.csv"), &reports)
}

fn cmd_sweep(cli: &Cli, trials: Option<usize>) -> Result<(), HarnessError> {
    let mut spec = load(cli)?;
    if let Some(t) = trials {
        spec.trials = t;
    }
    let result = sweep(&spec)?;
    let dir = out_dir(cli)?;
    emit_csv(&dir.join("sweep.csv"), &result.rows)?;
    emit_csv(&dir.join("rtt_index.csv"), &result.rtt_index)?;
    print!("{}", render_table(&best_points(&result.rows)));
    Ok(())
}

fn cmd_privacy(cli: &Cli, pairs: usize) -> Result<(), HarnessError> {
    let spec = load(cli)?;
    let mut rng = RngStreams::new(spec.seed).stream("privacy");
    let mut rows = Vec::new();
    for pair in 0..pairs {
        let m0 = Message::random(spec.n, &mut rng).map_err(|e| HarnessError::Config(e.to_string()))?;
        let m1 = Message::random(spec.n, &mut rng).map_err(|e| HarnessError::Config(e.to_string()))?;
        let out = privacy_game(&spec, &m0, &m1, None)?;
        rows.push(PrivacyRow {
            pair,
            technique: spec.protocol.technique,
            indistinguishable: out.indistinguishable,
            pre_expiry_differs: out.pre_expiry_differs,
            compared_at_ms: out.compared_at.as_secs_f64() * 1e3,
        });
    }
    let same = rows.iter().filter(|r| r.indistinguishable).count();
    println!("{}: {same}/{pairs} pairs indistinguishable after expiry", spec.protocol.technique);
    emit_csv(&out_dir(cli)?.join("privacy.csv"), &rows)
}

fn cmd_report(cli: &Cli, input: Option<&Path>) -> Result<(), HarnessError> {
    let path = input.map_or_else(|| cli.out.join("sweep.csv"), Path::to_path_buf);
    let rows = read_sweep(fs::File::open(&path)?)?;
    let best = best_points(&rows);
    print!("{}", render_table(&best));
    emit_csv(&out_dir(cli)?.join("report.csv"), &best)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Calibrate => cmd_calibrate(&cli),
        Command::Run { message, trials, trace } => cmd_run(&cli, message.as_deref(), *trials, *trace),
        Command::Sweep { trials } => cmd_sweep(&cli, *trials),
        Command::Privacy { pairs } => cmd_privacy(&cli, *pairs),
        Command::Report { input } => cmd_report(&cli, input.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
