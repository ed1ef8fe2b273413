use serde::{Deserialize, Serialize};

use super::critical::critical_pressure_ratio;
use super::props::{gas_specific_volume, liquid_density, polytropic_exponent};
use super::{ChokeConditions, ChokeParams, FluidSpec, PhaseFractions};
use crate::error::{Error, Result};

const SLIP_MAX: f64 = 10.0;

/// Gas/liquid velocity ratio at the throat, clamped to `[1, 10]`.
pub fn slip_ratio(_x_g: f64, rho_g2: f64, rho_l: f64) -> f64 {
    (rho_l / rho_g2).powf(1.0 / 6.0).clamp(1.0, SLIP_MAX)
}

/// Mixture density at the throat, homogeneous when `slip` is `None`.
pub fn mixture_density_throat(x_g: f64, v_g2: f64, v_l: f64, slip: Option<f64>) -> f64 {
    match slip {
        None => 1.0 / (x_g * v_g2 + (1.0 - x_g) * v_l),
        Some(s) => {
            let gas = x_g * v_g2;
            let alpha = gas / (gas + s * (1.0 - x_g) * v_l);
            alpha / v_g2 + (1.0 - alpha) / v_l
        }
    }
}

/// Mass flux through a unit flow area, kg/(s m²).
///
/// The mass flow of a choke is linear in its effective area, so the models
/// cache this quantity per operating point.
pub fn mass_flux(cond: &ChokeConditions, fr: &PhaseFractions, fluid: &FluidSpec, slip: bool) -> Result<f64> {
    let x_g = fr.eta_gas;
    if x_g <= 0.0 {
        let rho_l = liquid_density(fr, fluid)?;
        let dp = (cond.p1 - cond.p2).max(0.0);
        return Ok((2.0 * rho_l * dp).sqrt());
    }

    let liquid = fr.liquid() > 0.0;
    let rho_l = if liquid { liquid_density(fr, fluid)? } else { fluid.rho_oil_sc };
    let v_l = 1.0 / rho_l;
    let k = fluid.k;
    let v_g1 = gas_specific_volume(cond.p1, cond.t1, fluid)?;
    let n = polytropic_exponent(x_g, fluid);
    let y_c = critical_pressure_ratio(x_g, v_g1, v_l, k, n)?;
    let y = (cond.p2 / cond.p1).max(y_c).min(1.0);
    let v_g2 = v_g1 * y.powf(-1.0 / k);

    let s = (slip && liquid && x_g < 1.0).then(|| slip_ratio(x_g, 1.0 / v_g2, rho_l));
    let rho_m2 = mixture_density_throat(x_g, v_g2, v_l, s);

    let radicand = (1.0 - x_g) * (1.0 - y) * v_l + x_g * (k / (k - 1.0)) * (v_g1 - y * v_g2);
    if radicand <= 0.0 {
        return Ok(0.0);
    }
    Ok(rho_m2 * (2.0 * cond.p1 * radicand).sqrt())
}

/// Total mass flow through the choke, kg/s.
pub fn sachdeva_mass_flow(
    cond: &ChokeConditions,
    fr: &PhaseFractions,
    fluid: &FluidSpec,
    params: &ChokeParams,
    area: f64,
) -> Result<f64> {
    if !(area >= 0.0) {
        return Err(Error::input("area", format!("must be non-negative, got {area}")));
    }
    if area == 0.0 {
        return Ok(0.0);
    }
    Ok(area * mass_flux(cond, fr, fluid, params.slip_enabled)?)
}

/// Volumetric rates at standard conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumetricRates {
    pub q_oil: f64,
    pub q_gas: f64,
    pub q_water: f64,
    pub q_total: f64,
}

pub fn split_volumetric(m_dot: f64, fr: &PhaseFractions, fluid: &FluidSpec) -> VolumetricRates {
    let q_oil = fr.eta_oil * m_dot / fluid.rho_oil_sc;
    let q_gas = fr.eta_gas * m_dot / fluid.rho_gas_sc;
    let q_water = fr.eta_water * m_dot / fluid.rho_water_sc;
    VolumetricRates { q_oil, q_gas, q_water, q_total: q_oil + q_gas + q_water }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choke::AreaKind;

    fn process_params() -> ChokeParams {
        ChokeParams {
            c_d: 0.9,
            a_max: 5e-4,
            rangeability: 50.0,
            area_kind: AreaKind::EqualPercentage,
            slip_enabled: true,
        }
    }

    #[test]
    fn slip_ratio_values() {
        assert_eq!(slip_ratio(0.5, 800.0, 800.0), 1.0);
        assert!((slip_ratio(0.5, 10.0, 640.0) - 2.0).abs() < 1e-12);
        assert_eq!(slip_ratio(0.5, 1e-6, 1e3), 10.0);
    }

    #[test]
    fn mixture_density_cases() {
        assert!((mixture_density_throat(0.0, 0.05, 1e-3, Some(3.0)) - 1000.0).abs() < 1e-9);
        let a = mixture_density_throat(0.3, 0.05, 1.1e-3, None);
        let b = mixture_density_throat(0.3, 0.05, 1.1e-3, Some(1.0));
        assert!(((a - b) / a).abs() < 1e-12);
        let c = mixture_density_throat(0.2, 0.05, 0.00117, Some(2.0));
        assert!((c - 151.6).abs() < 0.1, "{c}");
    }

    #[test]
    fn closed_valve_and_no_driving_pressure() {
        let f = FluidSpec::default();
        let c = ChokeConditions::from_field_units(50.0, 22.0, 50.0, 0.0).unwrap();
        let fr = PhaseFractions::from_oil_water(0.5, 0.1).unwrap();
        assert_eq!(sachdeva_mass_flow(&c, &fr, &f, &process_params(), 0.0).unwrap(), 0.0);

        let eq = ChokeConditions::from_field_units(30.0, 30.0, 50.0, 50.0).unwrap();
        let liquid = PhaseFractions::from_oil_water(0.9, 0.1).unwrap();
        assert_eq!(sachdeva_mass_flow(&eq, &liquid, &f, &process_params(), 1e-4).unwrap(), 0.0);
    }

    #[test]
    fn critical_plateau_in_downstream_pressure() {
        let f = FluidSpec::default();
        let fr = PhaseFractions::from_oil_water(0.4, 0.1).unwrap();
        let a = ChokeConditions::from_field_units(60.0, 10.0, 50.0, 50.0).unwrap();
        let b = ChokeConditions::from_field_units(60.0, 5.0, 50.0, 50.0).unwrap();
        let ma = sachdeva_mass_flow(&a, &fr, &f, &process_params(), 1e-4).unwrap();
        let mb = sachdeva_mass_flow(&b, &fr, &f, &process_params(), 1e-4).unwrap();
        assert!(ma > 0.0);
        assert_eq!(ma, mb);
    }

    #[test]
    fn pure_gas_and_liquid_limits_are_finite() {
        let f = FluidSpec::default();
        let c = ChokeConditions::from_field_units(50.0, 22.0, 50.0, 50.0).unwrap();
        let gas = PhaseFractions::from_oil_water(0.0, 0.0).unwrap();
        let m = mass_flux(&c, &gas, &f, true).unwrap();
        assert!(m.is_finite() && m > 0.0);
        let liquid = PhaseFractions::from_oil_water(0.8, 0.2).unwrap();
        let m0 = mass_flux(&c, &liquid, &f, true).unwrap();
        let near = PhaseFractions::new(0.8 - 1e-9, 1e-9, 0.2).unwrap();
        let m1 = mass_flux(&c, &near, &f, false).unwrap();
        assert!(((m0 - m1) / m0).abs() < 1e-3, "{m0} vs {m1}");
    }

    #[test]
    fn split_conserves_mass() {
        let f = FluidSpec::default();
        let fr = PhaseFractions::from_oil_water(1.0, 0.0).unwrap();
        let q = split_volumetric(8.5, &fr, &f);
        assert!((q.q_oil - 0.01).abs() < 1e-15);
        assert!((q.q_total - 0.01).abs() < 1e-15);
        let z = split_volumetric(0.0, &fr, &f);
        assert_eq!(z.q_total, 0.0);
    }
}
