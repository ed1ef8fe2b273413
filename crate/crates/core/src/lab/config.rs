use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::ModelKind;
use crate::train::TrainConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentId {
    /// Test error against training-set size on stationary data.
    #[default]
    Exp1,
    /// Sensitivity to measurement noise.
    Exp2,
    /// Extrapolation on a depleting reservoir.
    Exp3,
    /// Extrapolation under rising gas-to-oil ratio.
    Exp4,
}

impl ExperimentId {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentId::Exp1 => "exp1",
            ExperimentId::Exp2 => "exp2",
            ExperimentId::Exp3 => "exp3",
            ExperimentId::Exp4 => "exp4",
        }
    }

    pub(crate) fn tag(&self) -> u64 {
        *self as u64 + 1
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exp1" | "1" => Ok(ExperimentId::Exp1),
            "exp2" | "2" => Ok(ExperimentId::Exp2),
            "exp3" | "3" => Ok(ExperimentId::Exp3),
            "exp4" | "4" => Ok(ExperimentId::Exp4),
            _ => Err(Error::Config(format!("unknown experiment `{s}` (expected exp1..exp4)"))),
        }
    }
}

/// Per-model changes to the shared training configuration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainPatch {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub learning_rate_net: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub learning_rate_phys: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_epochs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub patience: Option<usize>,
}

impl TrainPatch {
    pub fn apply(&self, base: &TrainConfig) -> TrainConfig {
        let mut c = base.clone();
        if let Some(v) = self.learning_rate_net {
            c.learning_rate_net = v;
        }
        if let Some(v) = self.learning_rate_phys {
            c.learning_rate_phys = v;
        }
        if let Some(v) = self.batch_size {
            c.batch_size = v;
        }
        if let Some(v) = self.max_epochs {
            c.max_epochs = v;
        }
        if let Some(v) = self.patience {
            c.patience = Some(v);
        }
        c
    }
}

pub const EXP1_N_GRID: [usize; 9] = [2, 4, 8, 20, 40, 80, 800, 4000, 8000];
pub const EXP2_SIGMA_GRID: [f64; 6] = [1.0, 2.0, 3.0, 4.0, 5.0, 10.0];

/// Everything that determines an experiment's numbers. The training seed and
/// `sigma_eps_assumed` of `train` are replaced per run: seeds are derived from
/// `seed`, and the noise scale is the cell's true σ (1.0 when noise-free).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(rename = "experiment")]
    pub id: ExperimentId,
    pub seed: u64,
    pub trials: usize,
    pub models: Vec<ModelKind>,
    /// Hidden layer widths of every network.
    pub hidden: Vec<usize>,
    pub train: TrainConfig,
    pub overrides: BTreeMap<ModelKind, TrainPatch>,
    /// Size of the stationary dataset behind exp1 and exp2.
    pub d1_n: usize,
    pub n_grid: Vec<usize>,
    pub sigma_grid: Vec<f64>,
    /// Rows drawn from the D1 training and validation splits for exp2
    /// (split 80/20); all of them when absent.
    pub exp2_rows: Option<usize>,
    /// Length of the drifting datasets behind exp3 and exp4.
    pub temporal_n: usize,
    /// Keep per-time-step absolute errors for exp3 and exp4.
    pub series: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            id: ExperimentId::Exp1,
            seed: 0,
            trials: 20,
            models: ModelKind::ALL.to_vec(),
            hidden: vec![50, 50],
            train: TrainConfig::default(),
            overrides: BTreeMap::new(),
            d1_n: 10_000,
            n_grid: EXP1_N_GRID.to_vec(),
            sigma_grid: EXP2_SIGMA_GRID.to_vec(),
            exp2_rows: None,
            temporal_n: 5000,
            series: true,
        }
    }
}

impl ExperimentConfig {
    pub fn new(id: ExperimentId) -> Self {
        ExperimentConfig { id, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.models.is_empty() {
            return Err(Error::Config("model list is empty".into()));
        }
        let mut seen = self.models.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.models.len() {
            return Err(Error::Config("model list has duplicates".into()));
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(Error::Config("hidden widths must be a non-empty list of positive sizes".into()));
        }
        self.train.validate()?;
        for kind in &self.models {
            self.train_config(*kind).validate()?;
        }
        let d1_based = matches!(self.id, ExperimentId::Exp1 | ExperimentId::Exp2);
        if d1_based && self.d1_n < 10 {
            return Err(Error::Config("d1_n must be at least 10".into()));
        }
        match self.id {
            ExperimentId::Exp1 => {
                if self.n_grid.is_empty() {
                    return Err(Error::Config("n_grid is empty".into()));
                }
                let pool = self.d1_n - self.d1_test_rows();
                if let Some(&n) = self.n_grid.iter().find(|&&n| n < 2 || n > pool) {
                    return Err(Error::Config(format!("n_grid entry {n} outside [2, {pool}]")));
                }
            }
            ExperimentId::Exp2 => {
                if self.sigma_grid.is_empty() || self.sigma_grid.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
                    return Err(Error::Config("sigma_grid needs positive finite levels".into()));
                }
                if let Some(r) = self.exp2_rows {
                    let avail = self.d1_n - self.d1_test_rows();
                    if r < 2 || r > avail {
                        return Err(Error::Config(format!("exp2_rows {r} outside [2, {avail}]")));
                    }
                }
            }
            ExperimentId::Exp3 | ExperimentId::Exp4 => {
                if self.temporal_n < 10 {
                    return Err(Error::Config("temporal_n must be at least 10".into()));
                }
            }
        }
        Ok(())
    }

    pub(crate) fn d1_test_rows(&self) -> usize {
        ((self.d1_n as f64 * crate::dataset::D1_TEST_FRACTION).round() as usize).clamp(1, self.d1_n.saturating_sub(1))
    }

    /// Training configuration for `kind` before per-run seed and noise scale.
    pub fn train_config(&self, kind: ModelKind) -> TrainConfig {
        self.overrides.get(&kind).map_or_else(|| self.train.clone(), |p| p.apply(&self.train))
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_for_every_experiment() {
        for id in [ExperimentId::Exp1, ExperimentId::Exp2, ExperimentId::Exp3, ExperimentId::Exp4] {
            ExperimentConfig::new(id).validate().unwrap();
            assert_eq!(id.as_str().parse::<ExperimentId>().unwrap(), id);
        }
        assert!("exp9".parse::<ExperimentId>().is_err());
    }

    #[test]
    fn invalid_grids_are_rejected() {
        let mut c = ExperimentConfig::new(ExperimentId::Exp1);
        c.n_grid = vec![8, 9000];
        assert!(c.validate().is_err());
        c.n_grid = vec![1];
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::new(ExperimentId::Exp2);
        c.sigma_grid = vec![0.0];
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::new(ExperimentId::Exp3);
        c.trials = 0;
        assert!(c.validate().is_err());
        c.trials = 1;
        c.models = vec![ModelKind::MechPlain, ModelKind::MechPlain];
        assert!(c.validate().is_err());
    }

    #[test]
    fn overrides_patch_the_shared_config() {
        let mut c = ExperimentConfig::default();
        c.overrides.insert(
            ModelKind::DataDriven,
            TrainPatch { learning_rate_net: Some(0.01), patience: Some(7), ..Default::default() },
        );
        let d = c.train_config(ModelKind::DataDriven);
        assert_eq!((d.learning_rate_net, d.patience, d.batch_size), (0.01, Some(7), 64));
        assert_eq!(c.train_config(ModelKind::MechPlain), c.train);
    }

    #[test]
    fn digest_tracks_content() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        assert_eq!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 64);
        b.seed = 1;
        assert_ne!(a.digest(), b.digest());
    }

    #[test]
    fn json_round_trip_with_overrides() {
        let mut c = ExperimentConfig::new(ExperimentId::Exp2);
        c.overrides.insert(ModelKind::HybridArea, TrainPatch { max_epochs: Some(10), ..Default::default() });
        let text = serde_json::to_string(&c).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
    }
}
