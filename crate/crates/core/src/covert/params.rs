use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::codebook::{CodebookMode, MAX_BITS_PER_WORD};
use super::{CovertError, Technique};
use crate::netsim::Preset;

/// Smallest spacing between consecutive interests from one host.
pub const T_MIN: Duration = Duration::from_nanos(300);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolParams {
    pub technique: Technique,
    /// Bits per word for MATRIX and CPC; the single-bit techniques use 1.
    pub m: u8,
    /// Spacing between the sender's interests.
    #[serde(rename = "t_send_ms", with = "crate::serde_duration::millis")]
    pub t_send: Duration,
    /// Spacing between the receiver's interests.
    #[serde(rename = "t_recv_ms", with = "crate::serde_duration::millis")]
    pub t_recv: Duration,
    #[serde(rename = "t_thresh_ms", with = "crate::serde_duration::millis")]
    pub t_thresh: Duration,
    /// Guard added to `t_thresh`.
    #[serde(rename = "delta_ms", with = "crate::serde_duration::millis")]
    pub delta: Duration,
    /// Agreed start, on each party's own clock.
    #[serde(rename = "t0_ms", with = "crate::serde_duration::millis")]
    pub t0: Duration,
    /// Pause between the sender's last slot and the receiver's first read.
    #[serde(rename = "read_gap_ms", with = "crate::serde_duration::millis")]
    pub read_gap: Duration,
    /// PIT technique: receiver interest follows the sender slot by this much.
    #[serde(rename = "sbtp_spacing_ms", with = "crate::serde_duration::millis")]
    pub sbtp_spacing: Duration,
    /// Re-issue timed-out interests (honoured for CPC only).
    pub retransmit: bool,
    pub retries: u32,
    /// Sender re-requests content that did not come back.
    pub write_verify: bool,
    /// Receiver probes carry scope 2 so they never leave the first router.
    pub scope2: bool,
    /// Extra delay of receiver k's read phase: k * reader_stagger.
    #[serde(rename = "reader_stagger_ms", with = "crate::serde_duration::millis")]
    pub reader_stagger: Duration,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        Self::for_preset(Preset::Lan, Technique::Sbtc)
    }
}

impl ProtocolParams {
    pub fn for_preset(preset: Preset, technique: Technique) -> Self {
        let base = Self {
            technique,
            m: 1,
            t_send: Duration::from_micros(500),
            t_recv: Duration::from_micros(500),
            t_thresh: Duration::from_micros(1300),
            delta: Duration::ZERO,
            t0: Duration::from_millis(1),
            read_gap: Duration::from_millis(5),
            sbtp_spacing: Duration::from_micros(800),
            retransmit: false,
            retries: 3,
            write_verify: false,
            scope2: false,
            reader_stagger: Duration::ZERO,
        };
        match preset {
            Preset::Lan => base,
            Preset::TestbedLike => Self {
                t_send: Duration::from_millis(3),
                t_recv: Duration::from_millis(3),
                t_thresh: Duration::from_millis(191),
                read_gap: Duration::from_millis(400),
                sbtp_spacing: Duration::from_millis(8),
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<(), CovertError> {
        if !(1..=MAX_BITS_PER_WORD).contains(&self.m) {
            return Err(CovertError::BitsPerWord(self.m));
        }
        if self.t_send < T_MIN || self.t_recv < T_MIN {
            return Err(CovertError::InvalidParams(format!(
                "interest spacing must be at least {} ns",
                T_MIN.as_nanos()
            )));
        }
        Ok(())
    }

    pub fn bits_per_word(&self) -> u8 {
        match self.technique {
            Technique::Matrix | Technique::Cpc => self.m,
            _ => 1,
        }
    }

    pub fn codebook_mode(&self) -> CodebookMode {
        match self.technique {
            Technique::Cpc => CodebookMode::CommonPrefix,
            _ => CodebookMode::Plain,
        }
    }

    /// Decision threshold including the guard.
    pub fn threshold(&self) -> Duration {
        self.t_thresh + self.delta
    }

    pub fn sender_retries(&self) -> u32 {
        if self.write_verify || (self.technique == Technique::Cpc && self.retransmit) {
            self.retries
        } else {
            0
        }
    }

    pub fn receiver_retries(&self) -> u32 {
        if self.technique == Technique::Cpc && self.retransmit {
            self.retries
        } else {
            0
        }
    }
}
