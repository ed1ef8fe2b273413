//! The data-generating choke process: equal-percentage area, slip on, fixed
//! true parameters, additive Gaussian measurement noise.

use std::sync::OnceLock;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::choke::{
    effective_area, mass_flux, split_volumetric, AreaKind, ChokeConditions, ChokeParams, FluidSpec, PhaseFractions,
};
use crate::error::{Error, Result};
use crate::rng::stream_rng;

/// Mean noise-free flow the reporting scale is calibrated to.
pub const TARGET_MEAN_FLOW: f64 = 41.7;
const CALIBRATION_SAMPLES: usize = 100_000;
const CALIBRATION_SEED: u64 = 0x5eed_ca1b;

/// One measured input vector `(p1, p2, T1, u, η_oil, η_water)` in bar / °C / % / fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Inputs {
    pub p1_bar: f64,
    pub p2_bar: f64,
    pub t1_c: f64,
    pub u_pct: f64,
    pub eta_oil: f64,
    pub eta_water: f64,
}

impl Inputs {
    pub const DIM: usize = 6;
    pub const NAMES: [&'static str; 6] = ["p1", "p2", "T1", "u", "eta_oil", "eta_water"];

    pub fn to_array(&self) -> [f64; 6] {
        [self.p1_bar, self.p2_bar, self.t1_c, self.u_pct, self.eta_oil, self.eta_water]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        Inputs { p1_bar: a[0], p2_bar: a[1], t1_c: a[2], u_pct: a[3], eta_oil: a[4], eta_water: a[5] }
    }

    /// Validates the vector and converts it to SI conditions plus fractions.
    pub fn physical(&self) -> Result<(ChokeConditions, PhaseFractions)> {
        let cond = ChokeConditions::from_field_units(self.p1_bar, self.p2_bar, self.t1_c, self.u_pct)?;
        let fr = PhaseFractions::from_oil_water(self.eta_oil, self.eta_water)?;
        Ok((cond, fr))
    }
}

/// Converts a mass flux into reporting-unit flow per unit effective area.
///
/// `q = area * unit_flow_response(..)` for any area, which is how the models
/// reuse the process physics without recomputing the critical ratio.
pub fn unit_flow_response(x: &Inputs, fluid: &FluidSpec, slip: bool, flow_unit_scale: f64) -> Result<f64> {
    let (cond, fr) = x.physical()?;
    let flux = mass_flux(&cond, &fr, fluid, slip)?;
    Ok(flow_unit_scale * split_volumetric(flux, &fr, fluid).q_total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProcessSpec {
    fluid: FluidSpec,
    choke: ChokeParams,
    flow_unit_scale: f64,
}

impl ProcessSpec {
    pub const TRUE_C_D: f64 = 0.9;
    pub const TRUE_A_MAX: f64 = 5e-4;
    pub const TRUE_RANGEABILITY: f64 = 50.0;

    pub fn new(fluid: FluidSpec, choke: ChokeParams, flow_unit_scale: f64) -> Result<Self> {
        fluid.validate()?;
        choke.validate()?;
        if !(flow_unit_scale > 0.0 && flow_unit_scale.is_finite()) {
            return Err(Error::input("flow_unit_scale", "must be positive"));
        }
        Ok(ProcessSpec { fluid, choke, flow_unit_scale })
    }

    pub fn true_choke() -> ChokeParams {
        ChokeParams {
            c_d: Self::TRUE_C_D,
            a_max: Self::TRUE_A_MAX,
            rangeability: Self::TRUE_RANGEABILITY,
            area_kind: AreaKind::EqualPercentage,
            slip_enabled: true,
        }
    }

    /// Process in SI volumetric units (scale 1).
    pub fn uncalibrated() -> Self {
        ProcessSpec { fluid: FluidSpec::default(), choke: Self::true_choke(), flow_unit_scale: 1.0 }
    }

    /// Default process with the reporting scale calibrated on a fixed D1 input
    /// sample. Computed once per program.
    pub fn calibrated() -> Self {
        static CELL: OnceLock<ProcessSpec> = OnceLock::new();
        *CELL.get_or_init(|| {
            let base = Self::uncalibrated();
            let inputs = crate::dataset::sample_d1_inputs(CALIBRATION_SAMPLES, CALIBRATION_SEED).0;
            let scale = calibrate_flow_scale(&base, &inputs).expect("calibration sample is non-empty");
            base.with_flow_unit_scale(scale)
        })
    }

    pub fn with_flow_unit_scale(mut self, scale: f64) -> Self {
        assert!(scale > 0.0, "flow unit scale must be positive");
        self.flow_unit_scale = scale;
        self
    }

    pub fn fluid(&self) -> &FluidSpec {
        &self.fluid
    }

    pub fn choke(&self) -> &ChokeParams {
        &self.choke
    }

    pub fn flow_unit_scale(&self) -> f64 {
        self.flow_unit_scale
    }

    /// Noise-free flow in reporting units.
    pub fn evaluate(&self, x: &Inputs) -> Result<f64> {
        let area = effective_area(x.u_pct, &self.choke);
        let response = unit_flow_response(x, &self.fluid, self.choke.slip_enabled, self.flow_unit_scale)?;
        Ok(area * response)
    }
}

pub fn evaluate_process(spec: &ProcessSpec, x: &Inputs) -> Result<f64> {
    spec.evaluate(x)
}

/// Measurement noise settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub sigma_eps: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(sigma_eps: f64, seed: u64) -> Result<Self> {
        if !(sigma_eps >= 0.0 && sigma_eps.is_finite()) {
            return Err(Error::input("sigma_eps", format!("must be non-negative, got {sigma_eps}")));
        }
        Ok(NoiseSpec { sigma_eps, seed })
    }

    /// Standard-normal draw number `index`; independent of every other index.
    pub fn standard_draw(&self, index: u64) -> f64 {
        StandardNormal.sample(&mut stream_rng(self.seed, index))
    }
}

/// `q + ε`, with ε the `index`-th draw of the noise stream.
pub fn add_noise(q: f64, noise: &NoiseSpec, index: u64) -> f64 {
    if noise.sigma_eps == 0.0 {
        return q;
    }
    q + noise.sigma_eps * noise.standard_draw(index)
}

/// Scale that maps the sample's mean SI flow onto [`TARGET_MEAN_FLOW`].
pub fn calibrate_flow_scale(spec: &ProcessSpec, reference_inputs: &[Inputs]) -> Result<f64> {
    if reference_inputs.is_empty() {
        return Err(Error::Empty("calibration sample"));
    }
    let unit = spec.with_flow_unit_scale(1.0);
    let mut sum = 0.0;
    for x in reference_inputs {
        sum += unit.evaluate(x)?;
    }
    let mean = sum / reference_inputs.len() as f64;
    if !(mean > 0.0) {
        return Err(Error::input("reference_inputs", "mean flow is not positive"));
    }
    Ok(TARGET_MEAN_FLOW / mean)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(u: f64) -> Inputs {
        Inputs { p1_bar: 50.0, p2_bar: 22.0, t1_c: 50.0, u_pct: u, eta_oil: 0.4, eta_water: 0.1 }
    }

    #[test]
    fn closed_valve_gives_zero_flow() {
        let p = ProcessSpec::calibrated();
        assert_eq!(p.evaluate(&x(0.0)).unwrap(), 0.0);
    }

    #[test]
    fn simplex_violation_is_reported() {
        let p = ProcessSpec::calibrated();
        let bad = Inputs { eta_oil: 0.5, eta_water: 0.6, ..x(50.0) };
        let err = p.evaluate(&bad).unwrap_err();
        assert!(err.to_string().contains("fractions exceed one"));
    }

    #[test]
    fn evaluation_is_deterministic_and_linear_in_scale() {
        let p = ProcessSpec::calibrated();
        let a = p.evaluate(&x(60.0)).unwrap();
        assert_eq!(a.to_bits(), p.evaluate(&x(60.0)).unwrap().to_bits());
        let doubled = p.with_flow_unit_scale(2.0 * p.flow_unit_scale());
        let b = doubled.evaluate(&x(60.0)).unwrap();
        assert!((b - 2.0 * a).abs() <= 1e-12 * b);
    }

    #[test]
    fn zero_noise_is_identity() {
        let n = NoiseSpec::new(0.0, 1).unwrap();
        assert_eq!(add_noise(3.25, &n, 17), 3.25);
        assert!(NoiseSpec::new(-1.0, 1).is_err());
    }

    #[test]
    fn noise_draws_are_addressable() {
        let n = NoiseSpec::new(2.0, 11).unwrap();
        assert_eq!(add_noise(1.0, &n, 5).to_bits(), add_noise(1.0, &n, 5).to_bits());
        assert_ne!(add_noise(1.0, &n, 5), add_noise(1.0, &n, 6));
    }

    #[test]
    fn noise_moments() {
        let n = NoiseSpec::new(2.0, 99).unwrap();
        let draws: Vec<f64> = (0..100_000u64).map(|i| add_noise(10.0, &n, i) - 10.0).collect();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (draws.len() - 1) as f64;
        assert!(mean.abs() < 0.02, "{mean}");
        assert!((var.sqrt() - 2.0).abs() < 0.02, "{}", var.sqrt());
    }

    #[test]
    fn calibration_rejects_empty_sample() {
        assert!(calibrate_flow_scale(&ProcessSpec::uncalibrated(), &[]).is_err());
    }
}
