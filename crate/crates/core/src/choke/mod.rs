//! Physics kernels for multiphase flow through a production choke.
//!
//! Everything here works in SI units (Pa, K, kg, m). Conversion from the
//! bar / °C convention used at the data boundary happens in
//! [`ChokeConditions::from_field_units`].

mod area;
mod critical;
mod flow;
mod props;

pub use area::{area_equal_percentage, area_linear, effective_area};
pub use critical::{critical_pressure_ratio, critical_residual, CriticalSolver};
pub use flow::{mass_flux, mixture_density_throat, sachdeva_mass_flow, slip_ratio, split_volumetric, VolumetricRates};
pub use props::{gas_specific_volume, liquid_density, polytropic_exponent};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PA_PER_BAR: f64 = 1e5;
pub const KELVIN_OFFSET: f64 = 273.15;

/// Fluid constants shared by the process and every model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluidSpec {
    pub rho_oil_sc: f64,
    pub rho_water_sc: f64,
    pub rho_gas_sc: f64,
    /// Gas heat-capacity ratio.
    pub k: f64,
    /// Specific gas constant, J/(kg K).
    pub r_gas: f64,
    pub c_liq: f64,
    pub c_v: f64,
    pub c_p: f64,
}

impl Default for FluidSpec {
    fn default() -> Self {
        FluidSpec {
            rho_oil_sc: 850.0,
            rho_water_sc: 1000.0,
            rho_gas_sc: 0.85,
            k: 1.3,
            r_gas: 500.0,
            c_liq: 2000.0,
            c_v: 1700.0,
            c_p: 2200.0,
        }
    }
}

impl FluidSpec {
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("rho_oil_sc", self.rho_oil_sc),
            ("rho_water_sc", self.rho_water_sc),
            ("rho_gas_sc", self.rho_gas_sc),
            ("c_liq", self.c_liq),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::input(field, format!("must be positive, got {v}")));
            }
        }
        if !(self.k > 1.0) {
            return Err(Error::input("k", format!("must exceed 1, got {}", self.k)));
        }
        if !(self.c_v > 0.0 && self.c_p > self.c_v) {
            return Err(Error::input("c_p", "require c_p > c_v > 0"));
        }
        let r = self.c_p - self.c_v;
        if ((self.r_gas - r) / r).abs() > 1e-9 {
            return Err(Error::input("r_gas", format!("must equal c_p - c_v = {r}")));
        }
        Ok(())
    }
}

/// Phase mass fractions on the unit simplex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseFractions {
    pub eta_oil: f64,
    pub eta_gas: f64,
    pub eta_water: f64,
}

const SIMPLEX_TOL: f64 = 1e-9;

impl PhaseFractions {
    pub fn new(eta_oil: f64, eta_gas: f64, eta_water: f64) -> Result<Self> {
        for (field, v) in [("eta_oil", eta_oil), ("eta_gas", eta_gas), ("eta_water", eta_water)] {
            if !(-SIMPLEX_TOL..=1.0 + SIMPLEX_TOL).contains(&v) {
                return Err(Error::input(field, format!("mass fraction {v} outside [0, 1]")));
            }
        }
        let sum = eta_oil + eta_gas + eta_water;
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::input("eta", format!("fractions sum to {sum}, not 1")));
        }
        Ok(PhaseFractions {
            eta_oil: eta_oil.clamp(0.0, 1.0),
            eta_gas: eta_gas.clamp(0.0, 1.0),
            eta_water: eta_water.clamp(0.0, 1.0),
        })
    }

    /// Completes the simplex from the two measured liquid fractions.
    pub fn from_oil_water(eta_oil: f64, eta_water: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta_oil) {
            return Err(Error::input("eta_oil", format!("mass fraction {eta_oil} outside [0, 1]")));
        }
        if !(0.0..=1.0).contains(&eta_water) {
            return Err(Error::input("eta_water", format!("mass fraction {eta_water} outside [0, 1]")));
        }
        let liquid = eta_oil + eta_water;
        if liquid > 1.0 + 1e-12 {
            return Err(Error::input("eta_water", "fractions exceed one"));
        }
        Ok(PhaseFractions { eta_oil, eta_gas: (1.0 - liquid).max(0.0), eta_water })
    }

    pub fn liquid(&self) -> f64 {
        self.eta_oil + self.eta_water
    }
}

/// Operating point of the choke in SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChokeConditions {
    /// Upstream pressure, Pa.
    pub p1: f64,
    /// Downstream pressure, Pa.
    pub p2: f64,
    /// Upstream temperature, K.
    pub t1: f64,
    /// Opening in percent.
    pub u: f64,
}

impl ChokeConditions {
    pub fn new(p1: f64, p2: f64, t1: f64, u: f64) -> Result<Self> {
        if !(p1 > 0.0 && p1.is_finite()) {
            return Err(Error::input("p1", format!("pressure must be positive, got {p1}")));
        }
        if !(p2 > 0.0 && p2.is_finite()) {
            return Err(Error::input("p2", format!("pressure must be positive, got {p2}")));
        }
        if !(t1 > 0.0 && t1.is_finite()) {
            return Err(Error::input("t1", format!("temperature must be positive, got {t1}")));
        }
        if !(0.0..=100.0).contains(&u) {
            return Err(Error::input("u", format!("opening {u} outside [0, 100]")));
        }
        Ok(ChokeConditions { p1, p2, t1, u })
    }

    /// Builds conditions from bar / °C / percent.
    pub fn from_field_units(p1_bar: f64, p2_bar: f64, t1_c: f64, u_pct: f64) -> Result<Self> {
        Self::new(p1_bar * PA_PER_BAR, p2_bar * PA_PER_BAR, t1_c + KELVIN_OFFSET, u_pct)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AreaKind {
    Linear,
    EqualPercentage,
    /// Linear area rescaled by a learned multiplier; the multiplier is
    /// applied by the model owning the network.
    NeuralScaled,
}

/// Area-function parameters and the slip toggle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChokeParams {
    pub c_d: f64,
    /// Full-open area, m².
    pub a_max: f64,
    /// Equal-percentage rangeability.
    pub rangeability: f64,
    pub area_kind: AreaKind,
    pub slip_enabled: bool,
}

impl ChokeParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c_d > 0.0 && self.c_d <= 2.0) {
            return Err(Error::input("c_d", format!("discharge coefficient {} outside (0, 2]", self.c_d)));
        }
        if !(self.a_max > 0.0) {
            return Err(Error::input("a_max", "area must be positive"));
        }
        if !(self.rangeability > 1.0) {
            return Err(Error::input("rangeability", "must exceed 1"));
        }
        Ok(())
    }
}
