//! Condenses a sweep table into the best operating point per spacing.

use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use super::sweep::{CsvRecord, SweepRow};
use super::HarnessError;
use crate::covert::Technique;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub technique: Technique,
    pub t_ms: f64,
    /// Threshold with the lowest error at this spacing.
    pub t_thresh_ms: f64,
    pub error_rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub overlap: f64,
    pub sender_bitrate: f64,
    pub receiver_bitrate: f64,
    pub effective_bitrate: f64,
}

impl CsvRecord for ReportRow {
    const HEADER: &'static [&'static str] = &[
        "technique",
        "t_ms",
        "t_thresh_ms",
        "error_rate",
        "ci_low",
        "ci_high",
        "overlap",
        "sender_bitrate",
        "receiver_bitrate",
        "effective_bitrate",
    ];
}

pub fn read_sweep<R: Read>(r: R) -> Result<Vec<SweepRow>, HarnessError> {
    let mut rd = csv::Reader::from_reader(r);
    rd.deserialize().collect::<Result<_, _>>().map_err(Into::into)
}

/// Lowest-error row for every (technique, t); earlier thresholds win ties.
pub fn best_points(rows: &[SweepRow]) -> Vec<ReportRow> {
    let mut best: BTreeMap<(Technique, u64), &SweepRow> = BTreeMap::new();
    for r in rows {
        let key = (r.technique, (r.t_ms * 1e6).round() as u64);
        match best.get(&key) {
            Some(b) if b.error_rate <= r.error_rate => {}
            _ => {
                best.insert(key, r);
            }
        }
    }
    best.into_values()
        .map(|r| ReportRow {
            technique: r.technique,
            t_ms: r.t_ms,
            t_thresh_ms: r.t_thresh_ms,
            error_rate: r.error_rate,
            ci_low: r.ci_low,
            ci_high: r.ci_high,
            overlap: r.overlap,
            sender_bitrate: r.sender_bitrate,
            receiver_bitrate: r.receiver_bitrate,
            effective_bitrate: r.effective_bitrate,
        })
        .collect()
}

pub fn render_table(rows: &[ReportRow]) -> String {
    let mut out = format!(
        "{:<10} {:>9} {:>11} {:>9} {:>19} {:>8} {:>12} {:>12} {:>12}\n",
        "technique", "t_ms", "t_thresh_ms", "error", "95% ci", "overlap", "send_bps", "recv_bps", "eff_bps"
    );
    for r in rows {
        out.push_str(&format!(
            "{:<10} {:>9.3} {:>11.3} {:>9.5} {:>19} {:>8.4} {:>12.1} {:>12.1} {:>12.1}\n",
            r.technique.as_str(),
            r.t_ms,
            r.t_thresh_ms,
            r.error_rate,
            format!("[{:.4}, {:.4}]", r.ci_low, r.ci_high),
            r.overlap,
            r.sender_bitrate,
            r.receiver_bitrate,
            r.effective_bitrate
        ));
    }
    out
}
