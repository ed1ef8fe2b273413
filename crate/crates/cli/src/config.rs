//! Configuration files. An experiment file is an experiment configuration
//! plus two run settings, `output_dir` and `jobs`, that do not affect results.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use vfm_core::lab::ExperimentConfig;
use vfm_core::train::TrainConfig;

use crate::commands::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct RunFile {
    pub experiment: ExperimentConfig,
    pub output_dir: PathBuf,
    pub jobs: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RunSettings {
    output_dir: Option<PathBuf>,
    jobs: Option<usize>,
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

fn bad(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("{}: {e}", path.display()))
}

pub fn parse_run_file(text: &str, path: &Path) -> Result<RunFile, CliError> {
    let mut table: toml::Table = text.parse().map_err(|e| bad(path, e))?;
    let mut settings = toml::Table::new();
    for key in ["output_dir", "jobs"] {
        if let Some(v) = table.remove(key) {
            settings.insert(key.into(), v);
        }
    }
    let settings: RunSettings = toml::Value::Table(settings).try_into().map_err(|e| bad(path, e))?;
    let experiment: ExperimentConfig = toml::Value::Table(table).try_into().map_err(|e| bad(path, e))?;
    Ok(RunFile {
        experiment,
        output_dir: settings.output_dir.unwrap_or_else(|| PathBuf::from("results")),
        jobs: settings.jobs,
    })
}

pub fn load_run_file(path: &Path) -> Result<RunFile, CliError> {
    parse_run_file(&read(path)?, path)
}

pub fn load_train_config(path: &Path) -> Result<TrainConfig, CliError> {
    toml::from_str(&read(path)?).map_err(|e| bad(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use vfm_core::lab::ExperimentId;
    use vfm_core::model::ModelKind;

    #[test]
    fn run_settings_are_split_from_the_experiment() {
        let text = r#"
experiment = "exp3"
seed = 4
trials = 2
models = ["M", "H-A"]
output_dir = "out"
jobs = 1

[train]
max_epochs = 50

[overrides."H-A"]
learning_rate_net = 0.01
"#;
        let f = parse_run_file(text, Path::new("x.toml")).unwrap();
        assert_eq!(f.output_dir, PathBuf::from("out"));
        assert_eq!(f.jobs, Some(1));
        let e = f.experiment;
        assert_eq!((e.id, e.seed, e.trials), (ExperimentId::Exp3, 4, 2));
        assert_eq!(e.models, vec![ModelKind::MechPlain, ModelKind::HybridArea]);
        assert_eq!(e.train.max_epochs, 50);
        assert_eq!(e.train_config(ModelKind::HybridArea).learning_rate_net, 0.01);
    }

    #[test]
    fn shipped_configs_validate() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
        for (i, id) in
            [ExperimentId::Exp1, ExperimentId::Exp2, ExperimentId::Exp3, ExperimentId::Exp4].into_iter().enumerate()
        {
            let f = load_run_file(&dir.join(format!("exp{}.toml", i + 1))).unwrap();
            assert_eq!(f.experiment.id, id);
            assert_eq!(f.experiment.trials, 20);
            f.experiment.validate().unwrap();
        }
    }

    #[test]
    fn unknown_keys_are_usage_errors() {
        let err = parse_run_file("experiment = \"exp1\"\ntrails = 3\n", Path::new("x.toml")).unwrap_err();
        assert!(matches!(err, CliError::Usage(_)));
    }
}
