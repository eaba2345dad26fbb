//! Bit-rate vs error sweeps. Each (t, trial) pair is simulated once and the
//! stored RTTs are decoded at every threshold.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ms;
use super::trial::{decode_trial, simulate_trial, TrialPoint, TrialTrace};
use super::{ExperimentSpec, HarnessError};
use crate::covert::Technique;
use crate::netsim::{Preset, RngStreams};
use crate::stats::{overlap_coefficient, wilson_interval};

const Z95: f64 = 1.959_964;

/// Seed for trial `trial` at sweep point `point`.
pub fn trial_seed(master: u64, point: usize, trial: usize) -> u64 {
    RngStreams::new(master).derive_seed(&format!("trial/{point}/{trial}"))
}

/// A row type with a fixed CSV header, so empty tables still get one.
pub trait CsvRecord: Serialize {
    const HEADER: &'static [&'static str];
}

pub fn write_csv<T: CsvRecord, W: Write>(w: W, rows: &[T]) -> Result<(), HarnessError> {
    let mut wr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    wr.write_record(T::HEADER)?;
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn emit_csv<T: CsvRecord>(path: &Path, rows: &[T]) -> Result<(), HarnessError> {
    let f = std::fs::File::create(path)?;
    write_csv(std::io::BufWriter::new(f), rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub technique: Technique,
    pub preset: Preset,
    pub t_ms: f64,
    pub t_thresh_ms: f64,
    pub trials: usize,
    pub bits: usize,
    pub correct: usize,
    pub write_errors: usize,
    pub read_errors: usize,
    pub erasures: usize,
    pub error_rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub binary_error_rate: f64,
    /// Overlap of the hit and miss RTT histograms at this spacing.
    pub overlap: f64,
    pub sender_bitrate: f64,
    pub receiver_bitrate: f64,
    pub effective_bitrate: f64,
    pub bytes_per_bit: f64,
}

impl CsvRecord for SweepRow {
    const HEADER: &'static [&'static str] = &[
        "technique",
        "preset",
        "t_ms",
        "t_thresh_ms",
        "trials",
        "bits",
        "correct",
        "write_errors",
        "read_errors",
        "erasures",
        "error_rate",
        "ci_low",
        "ci_high",
        "binary_error_rate",
        "overlap",
        "sender_bitrate",
        "receiver_bitrate",
        "effective_bitrate",
        "bytes_per_bit",
    ];
}

/// Mean receiver RTT by position in the read sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RttIndexRow {
    pub technique: Technique,
    pub t_ms: f64,
    pub index: usize,
    pub rtt_ms_mean: f64,
    pub samples: usize,
}

impl CsvRecord for RttIndexRow {
    const HEADER: &'static [&'static str] = &["technique", "t_ms", "index", "rtt_ms_mean", "samples"];
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub rtt_index: Vec<RttIndexRow>,
}

/// RTTs (ms) split by whether the probed name is the one the sender wrote.
pub fn hit_miss_rtts(traces: &[TrialTrace]) -> (Vec<f64>, Vec<f64>) {
    let mut hits = Vec::new();
    let mut misses = Vec::new();
    for tr in traces {
        for s in &tr.samples[0] {
            let Some(rtt) = s.rtt else { continue };
            let v = rtt.as_secs_f64() * 1e3;
            let wrote = tr.sent_names.get(&s.slot) == Some(&s.name) && tr.written[s.slot];
            if wrote {
                hits.push(v);
            } else {
                misses.push(v);
            }
        }
    }
    (hits, misses)
}

fn rtt_index(technique: Technique, t_ms: f64, traces: &[TrialTrace]) -> Vec<RttIndexRow> {
    let mut acc: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for tr in traces {
        for (i, s) in tr.samples[0].iter().enumerate() {
            if let Some(rtt) = s.rtt {
                let e = acc.entry(i).or_default();
                e.0 += rtt.as_secs_f64() * 1e3;
                e.1 += 1;
            }
        }
    }
    acc.into_iter()
        .map(|(index, (sum, n))| RttIndexRow {
            technique,
            t_ms,
            index,
            rtt_ms_mean: sum / n as f64,
            samples: n,
        })
        .collect()
}

fn aggregate(spec: &ExperimentSpec, t_ms: f64, thr_ms: f64, overlap: f64, traces: &[TrialTrace]) -> SweepRow {
    let reports: Vec<_> = traces.iter().map(|tr| decode_trial(tr, ms(thr_ms), 0)).collect();
    let sum = |f: &dyn Fn(&super::TrialReport) -> usize| reports.iter().map(f).sum::<usize>();
    let mean = |f: &dyn Fn(&super::TrialReport) -> f64| reports.iter().map(f).sum::<f64>() / reports.len() as f64;
    let bits = sum(&|r| r.n);
    let correct = sum(&|r| r.correct);
    let errors = bits - correct;
    let (ci_low, ci_high) = wilson_interval(errors as u64, bits as u64, Z95);
    let bytes: u64 = reports.iter().map(|r| r.sender_bytes + r.receiver_bytes).sum();
    SweepRow {
        technique: spec.protocol.technique,
        preset: spec.preset,
        t_ms,
        t_thresh_ms: thr_ms,
        trials: reports.len(),
        bits,
        correct,
        write_errors: sum(&|r| r.write_errors),
        read_errors: sum(&|r| r.read_errors),
        erasures: sum(&|r| r.erasures),
        error_rate: errors as f64 / bits as f64,
        ci_low,
        ci_high,
        binary_error_rate: sum(&|r| r.binary_errors) as f64 / bits as f64,
        overlap,
        sender_bitrate: mean(&|r| r.sender_bit_rate),
        receiver_bitrate: mean(&|r| r.receiver_bit_rate),
        effective_bitrate: mean(&|r| r.effective_bit_rate),
        bytes_per_bit: bytes as f64 / bits as f64,
    }
}

/// Simulates every (t, trial) pair of `spec`, in parallel.
pub fn simulate_sweep(spec: &ExperimentSpec) -> Result<Vec<Vec<TrialTrace>>, HarnessError> {
    spec.validate()?;
    let jobs: Vec<(usize, usize)> = (0..spec.sweep.t_ms.len())
        .flat_map(|i| (0..spec.trials).map(move |j| (i, j)))
        .collect();
    let traces: Vec<TrialTrace> = jobs
        .par_iter()
        .map(|&(i, j)| {
            let mut s = spec.clone();
            s.protocol.t_send = ms(spec.sweep.t_ms[i]);
            s.protocol.t_recv = ms(spec.sweep.t_ms[i]);
            let point = TrialPoint::random(&s, trial_seed(spec.seed, i, j))?;
            simulate_trial(&point)
        })
        .collect::<Result<_, _>>()?;
    let mut out: Vec<Vec<TrialTrace>> = vec![Vec::new(); spec.sweep.t_ms.len()];
    for ((i, _), tr) in jobs.into_iter().zip(traces) {
        out[i].push(tr);
    }
    Ok(out)
}

pub fn sweep(spec: &ExperimentSpec) -> Result<SweepResult, HarnessError> {
    let traces = simulate_sweep(spec)?;
    let mut result = SweepResult::default();
    for (i, per_t) in traces.iter().enumerate() {
        let t_ms = spec.sweep.t_ms[i];
        let (hits, misses) = hit_miss_rtts(per_t);
        let overlap = overlap_coefficient(&hits, &misses, spec.calibration.bins);
        for &thr in &spec.sweep.t_thresh_ms {
            result.rows.push(aggregate(spec, t_ms, thr, overlap, per_t));
        }
        result.rtt_index.extend(rtt_index(spec.protocol.technique, t_ms, per_t));
    }
    Ok(result)
}
