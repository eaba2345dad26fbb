//! Experiment configuration: a preset supplies every default and a TOML
//! document overrides any subset of it.

use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::covert::{CalibrationParams, ProtocolParams, Technique};
use crate::ndn::{parse_name, Name};
use crate::netsim::{Preset, TopologySpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    /// Interest spacing values; each sets both `t_send` and `t_recv`.
    pub t_ms: Vec<f64>,
    pub t_thresh_ms: Vec<f64>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self::for_preset(Preset::Lan)
    }
}

fn range(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|i| ((lo + step * i as f64) * 1e6).round() / 1e6).collect()
}

impl SweepSpec {
    pub fn for_preset(preset: Preset) -> Self {
        match preset {
            Preset::Lan => Self {
                t_ms: vec![0.01, 0.1, 0.5, 1.0],
                t_thresh_ms: range(0.6, 2.0, 0.1),
            },
            Preset::TestbedLike => Self {
                t_ms: vec![0.005, 0.05, 1.0, 3.0, 10.0],
                t_thresh_ms: range(186.0, 198.0, 0.5),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub preset: Preset,
    pub seed: u64,
    /// Message length in bits.
    pub n: usize,
    /// Trials per sweep point.
    pub trials: usize,
    /// Codebook namespace.
    pub namespace: String,
    /// Replace `protocol.t_thresh_ms` with a calibrated value before running.
    pub calibrate: bool,
    pub topology: TopologySpec,
    pub protocol: ProtocolParams,
    pub calibration: CalibrationParams,
    pub sweep: SweepSpec,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self::preset(Preset::Lan, Technique::Sbtc)
    }
}

fn merge(base: &mut toml::Value, over: toml::Value) {
    match (base, over) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

impl ExperimentSpec {
    pub fn preset(preset: Preset, technique: Technique) -> Self {
        Self {
            preset,
            seed: 1,
            n: 1000,
            trials: 10,
            namespace: "/cec".into(),
            calibrate: true,
            topology: TopologySpec::preset(preset),
            protocol: ProtocolParams::for_preset(preset, technique),
            calibration: CalibrationParams::default(),
            sweep: SweepSpec::for_preset(preset),
        }
    }

    /// Builds a spec from optional TOML text. `preset` and `technique`
    /// override the document's choices and select the defaults it is laid
    /// over.
    pub fn from_toml(
        text: Option<&str>,
        preset: Option<Preset>,
        technique: Option<Technique>,
    ) -> Result<Self, HarnessError> {
        let mut doc: toml::Table = match text {
            Some(t) => toml::from_str(t).map_err(|e| HarnessError::Config(e.to_string()))?,
            None => toml::Table::new(),
        };
        let preset = match (preset, doc.get("preset")) {
            (Some(p), _) => p,
            (None, Some(v)) => v
                .as_str()
                .ok_or_else(|| HarnessError::Config("preset must be a string".into()))?
                .parse()
                .map_err(|e: crate::netsim::TopologyError| HarnessError::Config(e.to_string()))?,
            (None, None) => Preset::Lan,
        };
        let doc_technique = doc
            .get("protocol")
            .and_then(|p| p.get("technique"))
            .and_then(|t| t.as_str())
            .map(str::parse::<Technique>)
            .transpose()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        let technique = technique.or(doc_technique).unwrap_or(Technique::Sbtc);
        doc.insert("preset".into(), toml::Value::String(preset.as_str().into()));
        if let Some(toml::Value::Table(p)) = doc.get_mut("protocol") {
            p.insert("technique".into(), toml::Value::String(technique.as_str().into()));
        }
        let mut base = toml::Value::try_from(Self::preset(preset, technique))
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        merge(&mut base, toml::Value::Table(doc));
        let spec: Self = base
            .try_into()
            .map_err(|e: toml::de::Error| HarnessError::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_path(
        path: Option<&Path>,
        preset: Option<Preset>,
        technique: Option<Technique>,
    ) -> Result<Self, HarnessError> {
        let text = path
            .map(|p| {
                std::fs::read_to_string(p)
                    .map_err(|e| HarnessError::Config(format!("{}: {e}", p.display())))
            })
            .transpose()?;
        Self::from_toml(text.as_deref(), preset, technique)
    }

    pub fn namespace_name(&self) -> Result<Name, HarnessError> {
        parse_name(&self.namespace).map_err(|e| HarnessError::Config(format!("namespace: {e}")))
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let cfg = |e: String| HarnessError::Config(e);
        if self.n == 0 {
            return Err(cfg("n must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(cfg("trials must be at least 1".into()));
        }
        if self.sweep.t_ms.is_empty() || self.sweep.t_thresh_ms.is_empty() {
            return Err(cfg("sweep lists must be non-empty".into()));
        }
        for v in self.sweep.t_ms.iter().chain(&self.sweep.t_thresh_ms) {
            if !(v.is_finite() && *v > 0.0) {
                return Err(cfg(format!("sweep value {v} must be positive")));
            }
        }
        self.topology.validate().map_err(|e| cfg(e.to_string()))?;
        self.protocol.validate().map_err(|e| cfg(e.to_string()))?;
        if self.protocol.scope2 && !self.topology.receiver_hops.is_empty() {
            return Err(cfg("scope2 requires the shared router to be the receiver's first hop".into()));
        }
        let ns = self.namespace_name()?;
        if let Some(bg) = &self.topology.background {
            let pop = bg.namespace_name().map_err(|e| cfg(e.to_string()))?;
            if pop.is_prefix_of(&ns) || ns.is_prefix_of(&pop) {
                return Err(cfg(format!(
                    "codebook namespace {ns} overlaps the popular namespace {pop}"
                )));
            }
        }
        Ok(())
    }

    pub fn sweep_t(&self) -> Vec<Duration> {
        self.sweep.t_ms.iter().map(|v| ms(*v)).collect()
    }

    pub fn sweep_thresholds(&self) -> Vec<Duration> {
        self.sweep.t_thresh_ms.iter().map(|v| ms(*v)).collect()
    }
}

/// Milliseconds to a whole-nanosecond duration.
pub fn ms(v: f64) -> Duration {
    Duration::from_nanos((v * 1e6).round().max(0.0) as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_the_preset() {
        let s = ExperimentSpec::from_toml(None, Some(Preset::TestbedLike), Some(Technique::Tdp)).unwrap();
        assert_eq!(s, ExperimentSpec::preset(Preset::TestbedLike, Technique::Tdp));
    }

    #[test]
    fn partial_overrides_merge() {
        let text = r#"
            preset = "lan"
            seed = 9
            [topology]
            processing_us = 3.0
            [topology.core_link]
            loss_prob = 0.1
            [protocol]
            technique = "cpc"
            m = 4
        "#;
        let s = ExperimentSpec::from_toml(Some(text), None, None).unwrap();
        assert_eq!(s.seed, 9);
        assert_eq!(s.protocol.technique, Technique::Cpc);
        assert_eq!(s.protocol.m, 4);
        assert_eq!(s.topology.processing, Duration::from_micros(3));
        let core = s.topology.core_link.unwrap();
        assert_eq!(core.loss_prob, 0.1);
        assert_eq!(core.base_delay, Duration::from_micros(500));
        // Flags beat the document.
        let s2 = ExperimentSpec::from_toml(Some(text), Some(Preset::TestbedLike), Some(Technique::Sbtp)).unwrap();
        assert_eq!(s2.protocol.technique, Technique::Sbtp);
        assert_eq!(s2.topology.sender_link.base_delay, Duration::from_millis(93));
    }

    #[test]
    fn bad_documents_are_config_errors() {
        for text in [
            "seed = -1",
            "unknown_key = 1",
            "[protocol]\ntechnique = \"morse\"",
            "[protocol]\nm = 9",
            "trials = 0",
            "preset = \"wan\"",
            "[sweep]\nt_ms = []",
            "[protocol]\nscope2 = true\n[[topology.receiver_hops]]\nbase_delay_ms = 1.0",
            "[topology]\nbackground = { namespace = \"/cec/x\" }",
        ] {
            assert!(
                matches!(ExperimentSpec::from_toml(Some(text), None, None), Err(HarnessError::Config(_))),
                "{text}"
            );
        }
    }

    #[test]
    fn sweep_ranges() {
        let s = SweepSpec::for_preset(Preset::Lan);
        assert_eq!(s.t_thresh_ms.len(), 15);
        assert_eq!(s.t_thresh_ms[7], 1.3);
        assert_eq!(ms(0.8), Duration::from_micros(800));
    }
}
