//! Pipeline configuration: one TOML document covering every stage.

use std::path::Path;

use prognos_core::evaluation::PointSchedule;
use prognos_core::hi::HiConfig;
use prognos_core::metrics::MetricConfig;
use prognos_core::rul::{FailureThresholdSet, RulConfig};
use prognos_core::synth::{DegradationSpec, LoadProfile, Trend};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileName {
    Fc1,
    Fc2,
}

impl ProfileName {
    pub fn profile(self) -> LoadProfile {
        match self {
            ProfileName::Fc1 => LoadProfile::fc1(),
            ProfileName::Fc2 => LoadProfile::fc2(),
        }
    }
}

/// Generator settings; the noise seed comes from the top-level `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub profile: ProfileName,
    pub total_hours: f64,
    pub dt_s: f64,
    pub v0: f64,
    pub trend: Trend,
    pub noise_std: f64,
    pub load_sensitivity: f64,
}

impl Default for SynthSection {
    fn default() -> Self {
        let d = DegradationSpec::default();
        Self {
            profile: ProfileName::Fc1,
            total_hours: 1200.0,
            dt_s: 30.0,
            v0: d.v0,
            trend: d.trend,
            noise_std: d.noise_std,
            load_sensitivity: d.load_sensitivity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumSection {
    pub bins: usize,
    /// Also write the full time × frequency matrix as CSV.
    pub dense: bool,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self { bins: 100, dense: false }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// Write each ensemble member's weights and loss curve.
    pub save_models: bool,
}

/// Everything a run needs. Defaults are the reference hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub schema_version: u32,
    /// Drives the generator noise and the mini-batch shuffle. Ensemble
    /// members are always initialised from seeds `1..=n_models`.
    pub seed: u64,
    pub thresholds: FailureThresholdSet,
    pub synth: SynthSection,
    pub hi: HiConfig,
    pub spectrum: SpectrumSection,
    pub rul: RulConfig,
    pub metrics: MetricConfig,
    pub schedule: PointSchedule,
    pub output: OutputSection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            seed: 42,
            thresholds: FailureThresholdSet::default(),
            synth: SynthSection::default(),
            hi: HiConfig::default(),
            spectrum: SpectrumSection::default(),
            rul: RulConfig::default(),
            metrics: MetricConfig::default(),
            schedule: PointSchedule::default(),
            output: OutputSection::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Copies the base seed into the stages that consume it and checks
    /// every section.
    pub fn resolve(mut self) -> Result<Self, CliError> {
        self.rul.train.seed = self.seed;
        self.rul.validate()?;
        self.metrics.validate()?;
        self.schedule.validate()?;
        self.degradation().validate()?;
        self.synth.profile.profile().validate()?;
        if self.spectrum.bins == 0 {
            return Err(CliError::Config("spectrum.bins must be positive".into()));
        }
        Ok(self)
    }

    pub fn degradation(&self) -> DegradationSpec {
        DegradationSpec {
            v0: self.synth.v0,
            trend: self.synth.trend.clone(),
            noise_std: self.synth.noise_std,
            load_sensitivity: self.synth.load_sensitivity,
            seed: self.seed,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config is always representable in TOML")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = PipelineConfig::default();
        assert_eq!(PipelineConfig::from_toml_str(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let cfg = PipelineConfig::from_toml_str("seed = 7\n[rul]\nn_models = 3\n").unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.rul.n_models, 3);
        assert_eq!(cfg.rul.abba_tol, 0.001);
    }

    #[test]
    fn rejects_unknown_keys_and_versions() {
        assert!(PipelineConfig::from_toml_str("sed = 1\n").is_err());
        assert!(PipelineConfig::from_toml_str("schema_version = 2\n").is_err());
        assert!(PipelineConfig::from_toml_str("thresholds = [0.2, 0.1]\n").is_err());
    }

    #[test]
    fn seed_reaches_training() {
        let cfg = PipelineConfig { seed: 9, ..Default::default() }.resolve().unwrap();
        assert_eq!(cfg.rul.train.seed, 9);
        assert_eq!(cfg.degradation().seed, 9);
    }
}
