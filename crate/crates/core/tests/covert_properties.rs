use std::time::Duration;

use ndn_cec::covert::{Message, Symbol, Technique};
use ndn_cec::harness::{
    decode_trial, multi_recipient_cpc, probe_write_errors, reread_trial, run_trial, simulate_trial,
    ExperimentSpec, TrialPoint,
};
use ndn_cec::netsim::Preset;

fn ideal(technique: Technique, n: usize, m: u8) -> ExperimentSpec {
    let mut s = ExperimentSpec::preset(Preset::Lan, technique);
    s.topology = s.topology.ideal();
    s.n = n;
    s.protocol.m = m;
    s
}

fn lan(technique: Technique, n: usize, m: u8) -> ExperimentSpec {
    let mut s = ExperimentSpec::preset(Preset::Lan, technique);
    s.n = n;
    s.protocol.m = m;
    s
}

#[test]
fn matrix_with_one_bit_words_decodes_like_tdp() {
    let spec = lan(Technique::Tdp, 400, 1);
    for seed in 0..5 {
        let point = TrialPoint::random(&spec, seed).unwrap();
        let mut trace = simulate_trial(&point).unwrap();
        let tdp = decode_trial(&trace, spec.protocol.threshold(), 0);
        trace.protocol.technique = Technique::Matrix;
        let matrix = decode_trial(&trace, spec.protocol.threshold(), 0);
        assert_eq!(tdp.decoded, matrix.decoded);
    }
}

#[test]
fn matrix_rates_scale_with_word_size() {
    let base = {
        let spec = ideal(Technique::Matrix, 1000, 1);
        run_trial(&TrialPoint::random(&spec, 4).unwrap()).unwrap()
    };
    for m in [2u8, 4] {
        let spec = ideal(Technique::Matrix, 1000, m);
        let r = run_trial(&TrialPoint::random(&spec, 4).unwrap()).unwrap();
        assert_eq!(r.sender_bit_rate, base.sender_bit_rate * f64::from(m));
        let rows = 1000 / u64::from(m);
        assert_eq!(r.sender_interests, rows);
        assert_eq!(r.receiver_interests, rows << m);
    }
}

#[test]
fn cpc_decode_ignores_reader_delay() {
    for gap_ms in [5u64, 1_000, 4_000, 8_900] {
        let mut spec = lan(Technique::Cpc, 1000, 4);
        spec.protocol.read_gap = Duration::from_millis(gap_ms);
        let r = run_trial(&TrialPoint::random(&spec, 8).unwrap()).unwrap();
        assert_eq!(r.correct, 1000, "read gap {gap_ms} ms");
    }
}

#[test]
fn cpc_fans_out_to_prompt_readers() {
    let spec = lan(Technique::Cpc, 240, 2);
    let point = TrialPoint::random(&spec, 21).unwrap();
    let reports = multi_recipient_cpc(&point, 3).unwrap();
    assert_eq!(reports.len(), 3);
    for r in &reports {
        assert_eq!(r.correct, 240);
        assert_eq!(r.decoded, reports[0].decoded);
        assert_eq!(r.sender_interests, 120);
    }
}

#[test]
fn cpc_reader_after_expiry_gets_nothing_written() {
    let spec = ideal(Technique::Cpc, 64, 2);
    let point = TrialPoint::random(&spec, 3).unwrap();
    let late = reread_trial(&point, Duration::from_secs(11), 1).unwrap();
    assert!(!late.mentioned_before_reads);
    let other = TrialPoint::new(&spec, complement(&point.message), 3).unwrap();
    let late_other = reread_trial(&other, Duration::from_secs(11), 1).unwrap();
    // The producer's default answer depends on the codebook, not the message.
    assert_eq!(late.passes, late_other.passes);
}

#[test]
fn staggered_readers_outlive_the_original_freshness() {
    // Each reader refreshes the rows it reads; 4 readers 4 s apart finish
    // well after the 10 s freshness of the first write.
    let mut spec = lan(Technique::Cpc, 200, 2);
    spec.protocol.reader_stagger = Duration::from_secs(4);
    let point = TrialPoint::random(&spec, 5).unwrap();
    let reports = multi_recipient_cpc(&point, 4).unwrap();
    for (k, r) in reports.iter().enumerate() {
        assert_eq!(r.correct, 200, "reader {k}");
    }

    // Without refresh the last reader sees nothing the sender wrote.
    let mut spec = spec.clone();
    spec.topology.router.refresh_on_hit = false;
    let point = TrialPoint::random(&spec, 5).unwrap();
    let reports = multi_recipient_cpc(&point, 4).unwrap();
    assert_eq!(reports[0].correct, 200);
    assert!(reports[3].correct < 200);
}

#[test]
fn slow_probe_agrees_with_ground_truth() {
    let mut spec = lan(Technique::Sbtc, 80, 1);
    spec.topology.sender_link.loss_prob = 0.15;
    for seed in 0..4 {
        let point = TrialPoint::random(&spec, seed).unwrap();
        let probe = probe_write_errors(&point, Duration::from_millis(100)).unwrap();
        assert_eq!(probe.probed, probe.unwritten, "seed {seed}");
    }
}

#[test]
fn write_verification_repairs_lost_writes() {
    let mut spec = lan(Technique::Sbtc, 500, 1);
    spec.topology.sender_link.loss_prob = 0.1;
    let point = TrialPoint::random(&spec, 9).unwrap();
    let plain = run_trial(&point).unwrap();
    assert!(plain.write_errors > 0);
    spec.protocol.write_verify = true;
    spec.protocol.retries = 8;
    spec.protocol.read_gap = Duration::from_millis(300);
    let point = TrialPoint::random(&spec, 9).unwrap();
    let verified = run_trial(&point).unwrap();
    assert_eq!(verified.write_errors, 0);
    assert!(verified.sender_interests > point.message.ones() as u64);
}

#[test]
fn scope_two_reads_decode_misses_as_zero() {
    let mut spec = ideal(Technique::Sbtc, 200, 1);
    spec.protocol.scope2 = true;
    let r = run_trial(&TrialPoint::random(&spec, 2).unwrap()).unwrap();
    assert_eq!(r.correct, 200);
    // Zero bits never reach the producer; their reads time out.
    assert_eq!(r.erasures, 0);
}

#[test]
fn pit_reads_without_a_cache() {
    let mut spec = lan(Technique::Sbtp, 500, 1);
    spec.topology.router.cache_capacity = 0;
    let r = run_trial(&TrialPoint::random(&spec, 6).unwrap()).unwrap();
    assert_eq!(r.correct, 500);
}

#[test]
fn late_pit_reads_fall_back_to_cache_state() {
    // Receiver arrives after the data came back: with a cache it still reads
    // ones, without a cache it reads zeros.
    let mut spec = ideal(Technique::Sbtp, 100, 1);
    spec.protocol.sbtp_spacing = Duration::from_millis(3);
    let msg = Message::new(vec![true; 100]).unwrap();
    let cached = run_trial(&TrialPoint::new(&spec, msg.clone(), 1).unwrap()).unwrap();
    assert!(cached.decoded.iter().all(|s| *s == Symbol::One));
    spec.topology.router.cache_capacity = 0;
    let bare = run_trial(&TrialPoint::new(&spec, msg, 1).unwrap()).unwrap();
    assert!(bare.decoded.iter().all(|s| *s == Symbol::Zero));
}

fn complement(m: &Message) -> Message {
    Message::new(m.bits().iter().map(|b| !b).collect()).unwrap()
}

#[test]
fn second_reads_forget_the_bit() {
    for technique in [Technique::Sbtc, Technique::Tdp] {
        let spec = ideal(technique, 48, 1);
        let point = TrialPoint::random(&spec, 12).unwrap();
        let rr = reread_trial(&point, Duration::ZERO, 2).unwrap();
        let sent: Vec<Symbol> = point.message.bits().iter().map(|&b| Symbol::from_bit(b)).collect();
        assert_eq!(rr.passes[0], sent, "{technique}");
        assert!(rr.passes[1].iter().all(|s| *s == Symbol::One), "{technique}");
    }
}
