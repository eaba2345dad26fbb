//! One-way link delay and loss.

use std::time::Duration;

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use super::engine::Engine;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinkError {
    #[error("loss_prob must lie in [0, 1], got {0}")]
    LossProb(f64),
    #[error("jitter parameter must be finite and non-negative: {0}")]
    Jitter(String),
}

/// Additive delay noise. Samples that would make the total delay negative
/// are clamped to zero rather than redrawn, which nudges the mean up
/// slightly for wide distributions.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Jitter {
    #[default]
    None,
    Uniform {
        #[serde(rename = "half_width_ms", with = "crate::serde_duration::millis")]
        half_width: Duration,
    },
    Normal {
        #[serde(rename = "sigma_ms", with = "crate::serde_duration::millis")]
        sigma: Duration,
    },
    /// `exp(mu + sigma * Z)` milliseconds, so `exp(mu)` is the median.
    LogNormal { mu: f64, sigma: f64 },
}

fn std_normal_quantile(u: f64) -> f64 {
    // Keep the quantile finite for u == 0.
    let u = u.clamp(1e-15, 1.0 - 1e-15);
    Normal::standard().inverse_cdf(u)
}

impl Jitter {
    pub fn validate(&self) -> Result<(), LinkError> {
        match *self {
            Jitter::LogNormal { mu, sigma } if !mu.is_finite() || !sigma.is_finite() || sigma < 0.0 => {
                Err(LinkError::Jitter(format!("lognormal mu={mu} sigma={sigma}")))
            }
            _ => Ok(()),
        }
    }

    /// Offset in nanoseconds for the uniform draw `u` in `[0, 1)`.
    pub fn offset_nanos(&self, u: f64) -> f64 {
        match *self {
            Jitter::None => 0.0,
            Jitter::Uniform { half_width } => (2.0 * u - 1.0) * half_width.as_nanos() as f64,
            Jitter::Normal { sigma } => {
                if sigma.is_zero() {
                    0.0
                } else {
                    sigma.as_nanos() as f64 * std_normal_quantile(u)
                }
            }
            Jitter::LogNormal { mu, sigma } => (mu + sigma * std_normal_quantile(u)).exp() * 1e6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkModel {
    #[serde(rename = "base_delay_ms", with = "crate::serde_duration::millis")]
    pub base_delay: Duration,
    pub jitter: Jitter,
    pub loss_prob: f64,
}

impl Default for LinkModel {
    fn default() -> Self {
        Self::fixed(Duration::ZERO)
    }
}

impl LinkModel {
    pub fn fixed(base_delay: Duration) -> Self {
        Self {
            base_delay,
            jitter: Jitter::None,
            loss_prob: 0.0,
        }
    }

    pub fn with_jitter(mut self, jitter: Jitter) -> Self {
        self.jitter = jitter;
        self
    }

    pub fn with_loss(mut self, p: f64) -> Self {
        self.loss_prob = p;
        self
    }

    pub fn validate(&self) -> Result<(), LinkError> {
        if !(0.0..=1.0).contains(&self.loss_prob) {
            return Err(LinkError::LossProb(self.loss_prob));
        }
        self.jitter.validate()
    }

    /// Delay for the uniform draw `u`; never negative.
    pub fn delay_for(&self, u: f64) -> Duration {
        let total = self.base_delay.as_nanos() as f64 + self.jitter.offset_nanos(u);
        Duration::from_nanos(total.max(0.0).round() as u64)
    }

    /// Exactly one loss draw then one delay draw. `None` means lost.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<Duration> {
        let u_loss: f64 = rng.random();
        let u_delay: f64 = rng.random();
        if u_loss < self.loss_prob {
            None
        } else {
            Some(self.delay_for(u_delay))
        }
    }
}

/// Per-link accounting; `transmits == deliveries + losses` always holds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct LinkCounters {
    pub transmits: u64,
    pub deliveries: u64,
    pub losses: u64,
}

/// Puts `action` on the wire: lost, or scheduled after the sampled delay
/// plus `hold` (time spent before the packet leaves the sender). Returns the
/// delivery time.
pub fn transmit<A, R: Rng + ?Sized>(
    engine: &mut Engine<A>,
    link: &LinkModel,
    counters: &mut LinkCounters,
    rng: &mut R,
    hold: Duration,
    action: A,
) -> Option<crate::time::SimTime> {
    counters.transmits += 1;
    match link.draw(rng) {
        None => {
            counters.losses += 1;
            None
        }
        Some(delay) => {
            counters.deliveries += 1;
            let at = engine.now() + hold + delay;
            engine.schedule(at, action).expect("delivery is never in the past");
            Some(at)
        }
    }
}
