use super::{FluidSpec, PhaseFractions};
use crate::error::{Error, Result};

/// Density of the oil/water mixture, harmonic in mass fractions.
pub fn liquid_density(fr: &PhaseFractions, fluid: &FluidSpec) -> Result<f64> {
    let liquid = fr.eta_oil + fr.eta_water;
    if liquid <= 0.0 {
        return Err(Error::NoLiquid);
    }
    Ok(liquid / (fr.eta_oil / fluid.rho_oil_sc + fr.eta_water / fluid.rho_water_sc))
}

/// Ideal-gas specific volume (Z = 1).
pub fn gas_specific_volume(p: f64, t: f64, fluid: &FluidSpec) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::input("p", format!("pressure must be positive, got {p}")));
    }
    if !(t > 0.0) {
        return Err(Error::input("t", format!("temperature must be positive, got {t}")));
    }
    Ok(fluid.r_gas * t / p)
}

/// Polytropic expansion exponent of the gas/liquid mixture.
///
/// Tends to 1 as the gas fraction vanishes and to `c_p / c_v` for pure gas.
pub fn polytropic_exponent(x_g: f64, fluid: &FluidSpec) -> f64 {
    1.0 + x_g * (fluid.c_p - fluid.c_v) / (x_g * fluid.c_v + (1.0 - x_g) * fluid.c_liq)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn single_component_liquid() {
        let fr = PhaseFractions { eta_oil: 0.5, eta_gas: 0.5, eta_water: 0.0 };
        let rho = liquid_density(&fr, &FluidSpec::default()).unwrap();
        assert!(rel(rho, 850.0) < 1e-14);
    }

    #[test]
    fn oil_water_mixture() {
        let fr = PhaseFractions { eta_oil: 0.85, eta_gas: 0.13, eta_water: 0.02 };
        let rho = liquid_density(&fr, &FluidSpec::default()).unwrap();
        assert!((rho - 852.94).abs() < 5e-3, "{rho}");
        assert!((850.0..=1000.0).contains(&rho));
    }

    #[test]
    fn no_liquid_is_an_error() {
        let fr = PhaseFractions { eta_oil: 0.0, eta_gas: 1.0, eta_water: 0.0 };
        assert!(matches!(liquid_density(&fr, &FluidSpec::default()), Err(Error::NoLiquid)));
    }

    #[test]
    fn ideal_gas_volume() {
        let f = FluidSpec::default();
        let v = gas_specific_volume(5e6, 323.15, &f).unwrap();
        assert!((v - 0.0323).abs() < 1e-4);
        let v2 = gas_specific_volume(1e7, 323.15, &f).unwrap();
        assert!(rel(v2, v / 2.0) < 1e-15);
        assert!(gas_specific_volume(5e6, 0.0, &f).is_err());
    }

    #[test]
    fn polytropic_limits() {
        let f = FluidSpec::default();
        assert!(rel(polytropic_exponent(1.0, &f), f.c_p / f.c_v) < 1e-14);
        assert!(polytropic_exponent(1e-12, &f) - 1.0 < 1e-12);
        let g = FluidSpec { c_p: 2600.0, c_v: 2100.0, r_gas: 500.0, c_liq: 2000.0, ..f };
        assert!((polytropic_exponent(0.5, &g) - 1.1220).abs() < 1e-4);
        for i in 1..=100 {
            let n = polytropic_exponent(i as f64 / 100.0, &f);
            assert!(n > 1.0 && n <= f.k);
        }
    }
}
