//! Versioned, self-describing JSON checkpoints.

use serde::{Deserialize, Serialize};

use super::{build, Model, ModelKind, ModelSetup, ParamSpec, Scaling};
use crate::error::{Error, Result};
use crate::nn::NetSpec;

pub const CHECKPOINT_FORMAT: &str = "vfm-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Record {
    format: String,
    version: u32,
    kind: ModelKind,
    setup: ModelSetup,
    net_spec: Option<NetSpec>,
    scaling: Scaling,
    n_params: usize,
    specs: Vec<ParamSpec>,
    values: Vec<f64>,
}

pub fn checkpoint(model: &Model) -> Result<String> {
    let record = Record {
        format: CHECKPOINT_FORMAT.into(),
        version: CHECKPOINT_VERSION,
        kind: model.kind,
        setup: model.setup,
        net_spec: model.net_spec.clone(),
        scaling: model.scaling,
        n_params: model.params.len(),
        specs: model.params.specs.clone(),
        values: model.params.values.clone(),
    };
    Ok(serde_json::to_string_pretty(&record)?)
}

pub fn restore(text: &str) -> Result<Model> {
    let r: Record = serde_json::from_str(text)?;
    if r.format != CHECKPOINT_FORMAT {
        return Err(Error::Checkpoint(format!("unknown format `{}`", r.format)));
    }
    if r.version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {}", r.version)));
    }
    let mut model = build(r.kind, &r.setup, r.net_spec.as_ref()).map_err(|e| Error::Checkpoint(e.to_string()))?;
    let expected = model.params.len();
    if r.n_params != expected || r.values.len() != expected || r.specs.len() != expected {
        return Err(Error::Checkpoint(format!(
            "shape mismatch: architecture has {expected} parameters, header says {}, payload has {}",
            r.n_params,
            r.values.len()
        )));
    }
    if r.specs.iter().zip(&model.params.specs).any(|(a, b)| a.name != b.name) {
        return Err(Error::Checkpoint("parameter names do not match the architecture".into()));
    }
    model.params = super::ParamVector::new(r.values, r.specs).map_err(|e| Error::Checkpoint(e.to_string()))?;
    model.scaling = r.scaling;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::sample_d1;
    use crate::nn::NetSpec;

    fn trained_looking_model() -> (Model, Vec<crate::dataset::Observation>) {
        let ds = sample_d1(200, 1.0, 3).unwrap();
        let mut m = build(ModelKind::HybridArea, &ModelSetup::default(), Some(&NetSpec::new(6, &[8, 8], 2))).unwrap();
        m.fit_scaling(&ds.observations);
        for (i, v) in m.params.values.iter_mut().enumerate().skip(2) {
            *v += (i as f64 * 0.37).sin() * 0.1;
        }
        (m, ds.observations)
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let (m, rows) = trained_looking_model();
        let back = restore(&checkpoint(&m).unwrap()).unwrap();
        for o in rows.iter().take(100) {
            let x = o.inputs();
            assert_eq!(m.predict(&x).unwrap().to_bits(), back.predict(&x).unwrap().to_bits());
        }
        assert_eq!(back.scaling(), m.scaling());
    }

    #[test]
    fn corrupted_shape_is_rejected() {
        let (m, _) = trained_looking_model();
        let text = checkpoint(&m).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
        let n = v["n_params"].as_u64().unwrap();
        v["n_params"] = serde_json::json!(n - 1);
        assert!(matches!(restore(&v.to_string()), Err(Error::Checkpoint(_))));
        v["n_params"] = serde_json::json!(n);
        v["values"].as_array_mut().unwrap().pop();
        assert!(matches!(restore(&v.to_string()), Err(Error::Checkpoint(_))));

        let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
        v["net_spec"]["layer_sizes"] = serde_json::json!([6, 9, 8, 1]);
        assert!(restore(&v.to_string()).is_err());
        v["version"] = serde_json::json!(99);
        assert!(restore(&v.to_string()).is_err());
    }
}
