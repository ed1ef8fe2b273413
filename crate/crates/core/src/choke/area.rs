use super::{AreaKind, ChokeParams};

/// Linear characteristic, discharge coefficient included.
pub fn area_linear(u: f64, p: &ChokeParams) -> f64 {
    p.c_d * p.a_max * (u / 100.0)
}

/// Geometric equal-percentage characteristic, shifted so the closed valve has
/// zero area.
pub fn area_equal_percentage(u: f64, p: &ChokeParams) -> f64 {
    let r = p.rangeability;
    p.a_max * (r.powf(u / 100.0) - 1.0) / (r - 1.0)
}

/// Flow area seen by the mass-flow equation.
///
/// `NeuralScaled` resolves to the linear area here; the learned multiplier is
/// applied by the owning model.
pub fn effective_area(u: f64, p: &ChokeParams) -> f64 {
    match p.area_kind {
        AreaKind::Linear | AreaKind::NeuralScaled => area_linear(u, p),
        AreaKind::EqualPercentage => p.c_d * area_equal_percentage(u, p),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(c_d: f64, a_max: f64, r: f64) -> ChokeParams {
        ChokeParams { c_d, a_max, rangeability: r, area_kind: AreaKind::EqualPercentage, slip_enabled: true }
    }

    #[test]
    fn linear_values() {
        assert_eq!(area_linear(0.0, &params(0.84, 1e-3, 50.0)), 0.0);
        assert_eq!(area_linear(100.0, &params(1.0, 1e-3, 50.0)), 1e-3);
        assert!((area_linear(50.0, &params(0.84, 1e-3, 50.0)) - 4.2e-4).abs() < 1e-16);
    }

    #[test]
    fn equal_percentage_values() {
        let p = params(1.0, 1e-3, 50.0);
        assert_eq!(area_equal_percentage(0.0, &p), 0.0);
        assert_eq!(area_equal_percentage(100.0, &p), 1e-3);
        let mid = area_equal_percentage(50.0, &p);
        assert!((mid - 1.238_993_431e-4).abs() < 1e-15, "{mid}");
    }

    #[test]
    fn equal_percentage_is_increasing_and_convex() {
        let p = params(1.0, 5e-4, 50.0);
        let a: Vec<f64> = (0..=1000).map(|i| area_equal_percentage(i as f64 / 10.0, &p)).collect();
        for w in a.windows(3) {
            assert!(w[1] > w[0]);
            assert!(w[2] - w[1] > w[1] - w[0]);
        }
    }

    #[test]
    fn effective_area_applies_discharge_coefficient() {
        let p = params(0.9, 5e-4, 50.0);
        assert!((effective_area(100.0, &p) - 0.9 * 5e-4).abs() < 1e-18);
    }
}
