use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gaussian prior `N(mean, std²)` on one parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prior {
    pub mean: f64,
    pub std: f64,
}

impl Prior {
    pub const fn new(mean: f64, std: f64) -> Self {
        Prior { mean, std }
    }

    /// `((φ - μ) / σ)²`
    pub fn penalty(&self, value: f64) -> f64 {
        let z = (value - self.mean) / self.std;
        z * z
    }

    pub fn penalty_gradient(&self, value: f64) -> f64 {
        2.0 * (value - self.mean) / (self.std * self.std)
    }
}

/// Which learning rate an entry trains with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamGroup {
    Physical,
    Network,
}

/// Closed box constraint `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lo: f64,
    pub hi: f64,
}

impl Bounds {
    pub fn project(&self, v: f64) -> f64 {
        v.clamp(self.lo, self.hi)
    }
}

/// One named entry of a [`ParamVector`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub prior: Prior,
    pub bounds: Option<Bounds>,
    pub group: ParamGroup,
    /// Multiplies the group learning rate; physical parameters use their
    /// prior width so that one optimizer step is scale-free.
    pub step_scale: f64,
}

/// Flat trainable parameters with per-entry priors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    pub values: Vec<f64>,
    pub specs: Vec<ParamSpec>,
}

impl ParamVector {
    pub fn new(values: Vec<f64>, specs: Vec<ParamSpec>) -> Result<Self> {
        if values.len() != specs.len() {
            return Err(Error::Dimension { expected: specs.len(), got: values.len() });
        }
        for (v, s) in values.iter().zip(&specs) {
            if !(s.prior.std > 0.0) {
                return Err(Error::Config(format!("prior std of `{}` must be positive", s.name)));
            }
            if let Some(b) = s.bounds {
                if !(b.lo..=b.hi).contains(v) {
                    return Err(Error::Config(format!("`{}` = {v} outside its bounds", s.name)));
                }
            }
        }
        Ok(ParamVector { values, specs })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.specs.iter().map(|s| s.name.as_str())
    }

    pub fn priors(&self) -> impl Iterator<Item = &Prior> {
        self.specs.iter().map(|s| &s.prior)
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.specs.iter().position(|s| s.name == name).map(|i| self.values[i])
    }

    /// `Σ ((φ_i - μ_i) / σ_i)²`
    pub fn prior_penalty(&self) -> f64 {
        self.values.iter().zip(&self.specs).map(|(v, s)| s.prior.penalty(*v)).sum()
    }

    /// Clamps every bounded entry into its box.
    pub fn project(&mut self) {
        for (v, s) in self.values.iter_mut().zip(&self.specs) {
            if let Some(b) = s.bounds {
                *v = b.project(*v);
            }
        }
    }

    pub fn set_values(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.values.len() {
            return Err(Error::Dimension { expected: self.values.len(), got: values.len() });
        }
        self.values.copy_from_slice(values);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(name: &str, prior: Prior, bounds: Option<Bounds>) -> ParamSpec {
        ParamSpec { name: name.into(), prior, bounds, group: ParamGroup::Physical, step_scale: 1.0 }
    }

    #[test]
    fn rejects_bad_vectors() {
        assert!(ParamVector::new(vec![1.0], vec![]).is_err());
        assert!(ParamVector::new(vec![1.0], vec![spec("a", Prior::new(0.0, 0.0), None)]).is_err());
        let b = Some(Bounds { lo: 0.0, hi: 1.0 });
        assert!(ParamVector::new(vec![2.0], vec![spec("a", Prior::new(0.0, 1.0), b)]).is_err());
    }

    #[test]
    fn penalty_and_projection() {
        let b = Some(Bounds { lo: 0.0, hi: 1.0 });
        let mut p = ParamVector::new(
            vec![0.5, 3.0],
            vec![spec("a", Prior::new(0.0, 0.5), b), spec("b", Prior::new(1.0, 2.0), None)],
        )
        .unwrap();
        assert!((p.prior_penalty() - (1.0 + 1.0)).abs() < 1e-15);
        p.values[0] = 1.7;
        p.project();
        assert_eq!(p.values[0], 1.0);
        assert_eq!(p.get("b"), Some(3.0));
    }
}
