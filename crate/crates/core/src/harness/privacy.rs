//! Ephemerality check: two runs that differ only in the message must leave
//! byte-identical network state once every covert entry has expired.

use std::time::Duration;

use serde::Serialize;

use super::trial::{last_planned, stage, Staged, TrialPoint};
use super::{ExperimentSpec, HarnessError};
use crate::covert::{read_start, Message, PlannedRequest};
use crate::netsim::{BackgroundSpec, Simulation};
use crate::time::SimTime;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PrivacyOutcome {
    /// Post-expiry states are identical.
    pub indistinguishable: bool,
    /// States taken right after the send phase differ.
    pub pre_expiry_differs: bool,
    pub compared_at: SimTime,
    pub state_bytes: usize,
}

struct World {
    pre: String,
    post: String,
}

fn prepare(spec: &ExperimentSpec) -> ExperimentSpec {
    let mut s = spec.clone();
    if s.topology.background.is_none() {
        s.topology.background = Some(BackgroundSpec::default());
    }
    s
}

/// Earliest true time at which every entry the exchange could have created
/// is gone: last planned request, all its retries, then the longest of the
/// content and PIT lifetimes.
pub fn expiry_horizon(spec: &ExperimentSpec, sim: &Simulation, plans: &[&[PlannedRequest]]) -> SimTime {
    let retries = spec.protocol.retries.max(1) + 1;
    let lifetime = spec.topology.interest_lifetime * retries;
    let bg = spec.topology.background.as_ref().map_or(Duration::ZERO, |b| b.freshness);
    let hold = spec
        .topology
        .freshness
        .max(spec.topology.router.pit_lifetime)
        .max(bg);
    last_planned(sim, plans) + lifetime + hold + Duration::from_millis(1)
}

fn play(spec: &ExperimentSpec, message: &Message, compare_at: Option<SimTime>) -> Result<(World, SimTime, SimTime), HarnessError> {
    let point = TrialPoint::new(spec, message.clone(), spec.seed)?;
    let Staged {
        mut sim,
        codebook: cb,
        sends,
        reads,
        ..
    } = stage(&point)?;
    let mut plans: Vec<&[PlannedRequest]> = vec![&sends];
    plans.extend(reads.iter().map(Vec::as_slice));
    let required = expiry_horizon(spec, &sim, &plans);
    let at = compare_at.unwrap_or(required);
    sim.set_tracing(false);
    sim.start_background(at + Duration::from_secs(1));

    let rcv = sim.topology().roles.rcv[0];
    let snd = sim.topology().roles.snd;
    let send_end = sim.consumer(rcv).clock().to_true(read_start(&spec.protocol, &cb, 0));
    sim.run_until(send_end.saturating_sub(Duration::from_nanos(1)).min(at));
    let pre = sim.network_state().to_json();

    sim.run_until(at);
    sim.expire_routers();
    sim.consumer_mut(snd).forget();
    for r in sim.topology().roles.rcv.clone() {
        sim.consumer_mut(r).forget();
    }
    let post = sim.network_state().to_json();
    Ok((World { pre, post }, at, required))
}

/// Plays the game with the spec's seed and network: one world sends `m0`,
/// the other `m1`. A background generator is added when none is
/// configured. `compare_at` defaults to the expiry horizon; an earlier
/// time is rejected.
pub fn privacy_game(
    spec: &ExperimentSpec,
    m0: &Message,
    m1: &Message,
    compare_at: Option<SimTime>,
) -> Result<PrivacyOutcome, HarnessError> {
    if m0.len() != m1.len() {
        return Err(HarnessError::Config("privacy game messages must have equal length".into()));
    }
    let spec = prepare(spec);
    let (w0, at, required) = play(&spec, m0, compare_at)?;
    if at < required {
        return Err(HarnessError::NotExpired {
            compare_at_ms: at.as_secs_f64() * 1e3,
            required_ms: required.as_secs_f64() * 1e3,
        });
    }
    let (w1, _, _) = play(&spec, m1, Some(at))?;
    Ok(PrivacyOutcome {
        indistinguishable: w0.post == w1.post,
        pre_expiry_differs: w0.pre != w1.pre,
        compared_at: at,
        state_bytes: w0.post.len(),
    })
}
