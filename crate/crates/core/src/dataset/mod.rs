//! Synthetic datasets: stationary i.i.d. operating points (D1), a depleting
//! reservoir (D2) and a rising gas-to-oil ratio (D3).

mod generate;
mod io;
mod split;

pub use generate::{
    d2_p1_profile, d2_u_profile, generate_d2, generate_d3, gor_to_fractions, sample_d1, sample_d1_inputs,
    sample_d1_with, D1_TEST_FRACTION, D1_VAL_FRACTION,
};
pub use io::{file_name, read_csv, write_csv, CSV_COLUMNS};
pub use split::{split_random, split_temporal};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::process::Inputs;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetId {
    D1,
    D2,
    D3,
}

impl fmt::Display for DatasetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DatasetId::D1 => "d1",
            DatasetId::D2 => "d2",
            DatasetId::D3 => "d3",
        })
    }
}

impl FromStr for DatasetId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "d1" => Ok(DatasetId::D1),
            "d2" => Ok(DatasetId::D2),
            "d3" => Ok(DatasetId::D3),
            other => Err(Error::Config(format!("unknown dataset `{other}` (expected d1, d2 or d3)"))),
        }
    }
}

/// One timestamped observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub t: u64,
    pub p1: f64,
    pub p2: f64,
    pub t1: f64,
    pub u: f64,
    pub eta_oil: f64,
    pub eta_water: f64,
    pub eta_gas: f64,
    pub q_true: f64,
    pub y: f64,
}

impl Observation {
    pub fn inputs(&self) -> Inputs {
        Inputs {
            p1_bar: self.p1,
            p2_bar: self.p2,
            t1_c: self.t1,
            u_pct: self.u,
            eta_oil: self.eta_oil,
            eta_water: self.eta_water,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Train,
    Val,
    Test,
}

impl Role {
    pub fn as_str(&self) -> &'static str {
        match self {
            Role::Train => "train",
            Role::Val => "val",
            Role::Test => "test",
        }
    }
}

/// Row indices per role; each list is sorted ascending.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    pub fn role_of(&self, n: usize) -> Vec<Option<Role>> {
        let mut roles = vec![None; n];
        for (role, idx) in [(Role::Train, &self.train), (Role::Val, &self.val), (Role::Test, &self.test)] {
            for &i in idx {
                roles[i] = Some(role);
            }
        }
        roles
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub generator: DatasetId,
    pub n: usize,
    pub sigma_eps: f64,
    pub seed: u64,
    /// Rejected D1 input draws (non-physical p2 or T1).
    pub redraws: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub observations: Vec<Observation>,
    pub split: Split,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn rows(&self, idx: &[usize]) -> Vec<Observation> {
        idx.iter().map(|&i| self.observations[i]).collect()
    }

    pub fn train(&self) -> Vec<Observation> {
        self.rows(&self.split.train)
    }

    pub fn val(&self) -> Vec<Observation> {
        self.rows(&self.split.val)
    }

    pub fn test(&self) -> Vec<Observation> {
        self.rows(&self.split.test)
    }
}
