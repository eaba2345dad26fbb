//! Receiver-side threshold calibration from probe traffic.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::codebook::{derive_codebook, CodebookMode};
use super::CovertError;
use crate::ndn::Name;
use crate::netsim::{build_topology, NodeId, Simulation, TopologySpec};
use crate::node::{RequestId, RequestSpec};
use crate::stats::{fit_threshold, ThresholdFit};
use crate::time::SimTime;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationParams {
    /// Distinct probe names.
    pub probes: usize,
    /// Requests per name: one miss followed by `repeats - 1` hits.
    pub repeats: usize,
    /// Between the first requests of consecutive names.
    #[serde(rename = "spacing_ms", with = "crate::serde_duration::millis")]
    pub spacing: Duration,
    /// Between a satisfied request and its follow-up.
    #[serde(rename = "repeat_gap_ms", with = "crate::serde_duration::millis")]
    pub repeat_gap: Duration,
    pub bins: usize,
}

impl Default for CalibrationParams {
    fn default() -> Self {
        Self {
            probes: 2000,
            repeats: 2,
            spacing: Duration::from_millis(3),
            repeat_gap: Duration::from_micros(500),
            bins: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdEstimate {
    pub t_thresh: Duration,
    pub rtt_hit_mean: Duration,
    pub rtt_miss_mean: Duration,
    /// Fit over RTTs in nanoseconds.
    pub fit: ThresholdFit<f64>,
    pub hits_ns: Vec<f64>,
    pub misses_ns: Vec<f64>,
    pub warning: Option<String>,
}

fn ns(d: Duration) -> f64 {
    d.as_nanos() as f64
}

fn dur(ns: f64) -> Duration {
    Duration::from_nanos(ns.max(0.0).round() as u64)
}

/// Requests each probe name `repeats` times from `receiver`, starting now.
/// First replies are misses; the closely spaced follow-ups come from cache.
pub fn estimate_threshold(
    sim: &mut Simulation,
    receiver: NodeId,
    probe_names: &[Name],
    params: &CalibrationParams,
) -> Result<ThresholdEstimate, CovertError> {
    if params.repeats < 2 {
        return Err(CovertError::InvalidParams("calibration needs at least two requests per name".into()));
    }
    if probe_names.is_empty() {
        return Err(CovertError::NoSamples);
    }
    sim.publish(probe_names);
    let lifetime = sim.spec().interest_lifetime;
    let start = sim.now();
    let local_start = sim.consumer(receiver).clock().local(start);
    let base = 1u64 << 40;
    for (i, name) in probe_names.iter().enumerate() {
        let mut spec = RequestSpec::once(i as u64, name.clone(), lifetime);
        spec.repeats = (params.repeats - 1) as u32;
        spec.repeat_gap = params.repeat_gap;
        let local = local_start + params.spacing * i as u32;
        let at = sim.consumer(receiver).clock().to_true(local).max(start);
        sim.submit(receiver, RequestId(base + i as u64), spec, at)
            .map_err(|e| CovertError::InvalidParams(e.to_string()))?;
    }
    sim.run();
    let mut hits = Vec::new();
    let mut misses = Vec::new();
    for r in sim.consumer(receiver).records() {
        if r.request.0 < base {
            continue;
        }
        let Some(rtt) = r.rtt else { continue };
        if r.repeat == 0 {
            misses.push(ns(rtt));
        } else {
            hits.push(ns(rtt));
        }
    }
    let fit = fit_threshold(&hits, &misses, params.bins).ok_or(CovertError::NoSamples)?;
    let warning = (!fit.separated).then(|| {
        format!(
            "hit and miss means ({:.3} ms, {:.3} ms) are within one standard deviation",
            fit.hit.mean / 1e6,
            fit.miss.mean / 1e6
        )
    });
    Ok(ThresholdEstimate {
        t_thresh: dur(fit.threshold),
        rtt_hit_mean: dur(fit.hit.mean),
        rtt_miss_mean: dur(fit.miss.mean),
        fit,
        hits_ns: hits,
        misses_ns: misses,
        warning,
    })
}

/// Calibrates on a fresh network built from `spec`, probing random names
/// under `namespace`.
pub fn calibrate(
    spec: &TopologySpec,
    seed: u64,
    namespace: &Name,
    params: &CalibrationParams,
) -> Result<ThresholdEstimate, CovertError> {
    let mut sim = build_topology(spec, seed).map_err(|e| CovertError::InvalidParams(e.to_string()))?;
    sim.set_tracing(false);
    let cb = derive_codebook(seed ^ 0x5eed, params.probes, 1, namespace, CodebookMode::Plain)?;
    let names: Vec<Name> = (0..cb.rows()).map(|i| cb.name(i, 0).clone()).collect();
    let rcv = sim.topology().roles.rcv[0];
    sim.run_until(SimTime::from_millis(1));
    estimate_threshold(&mut sim, rcv, &names, params)
}
