use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vfm_core::choke::*;
use vfm_core::process::ProcessSpec;

/// Critical-ratio residual written out from the flow model's definition.
fn oracle_residual(y: f64, x: f64, v_g1: f64, v_l: f64, k: f64, n: f64) -> f64 {
    let kk = k / (k - 1.0);
    let v_g2 = v_g1 * y.powf(-1.0 / k);
    let liq = (1.0 - x) * v_l / x;
    let num = kk + liq * (1.0 - y) / v_g1;
    let den = kk + n / 2.0 + n * liq / v_g2 + n / 2.0 * (liq / v_g2).powi(2);
    num / den - y
}

fn bisect(f: impl Fn(f64) -> f64) -> f64 {
    let (mut lo, mut hi) = (1e-12, 1.0);
    assert!(f(lo) > 0.0 && f(hi) < 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

struct Case {
    cond: ChokeConditions,
    fr: PhaseFractions,
}

fn random_case(rng: &mut ChaCha8Rng) -> Case {
    let eta_oil = rng.random_range(0.0..0.8);
    let eta_water = rng.random_range(0.0..0.2);
    Case {
        cond: ChokeConditions::from_field_units(
            rng.random_range(30.0..70.0),
            rng.random_range(15.0..29.0),
            rng.random_range(40.0..60.0),
            rng.random_range(1.0..100.0),
        )
        .unwrap(),
        fr: PhaseFractions::from_oil_water(eta_oil, eta_water).unwrap(),
    }
}

fn fluid() -> FluidSpec {
    FluidSpec::default()
}

fn thermo(case: &Case) -> (f64, f64, f64, f64, f64) {
    let f = fluid();
    let x = case.fr.eta_gas;
    let v_l = 1.0 / liquid_density(&case.fr, &f).unwrap();
    let v_g1 = gas_specific_volume(case.cond.p1, case.cond.t1, &f).unwrap();
    (x, v_g1, v_l, f.k, polytropic_exponent(x, &f))
}

#[test]
fn critical_ratio_matches_bisection_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..500 {
        let case = random_case(&mut rng);
        let (x, v_g1, v_l, k, n) = thermo(&case);
        let y_c = critical_pressure_ratio(x, v_g1, v_l, k, n).unwrap();
        let oracle = bisect(|y| oracle_residual(y, x, v_g1, v_l, k, n));
        assert!((y_c - oracle).abs() < 1e-6, "x_g={x}: {y_c} vs {oracle}");
        assert!(critical_residual(y_c, x, v_g1, v_l, k, n).abs() < 1e-8);
        assert!(y_c > 0.0 && y_c < 1.0);
    }
}

#[test]
fn critical_ratio_is_monotone_in_liquid_loading() {
    let f = fluid();
    let (v_g1, v_l, k, n) = (0.005, 1.0 / 860.0, f.k, 1.15);
    let ratios: Vec<f64> = (0..60)
        .map(|i| 1.0 - i as f64 / 61.0)
        .map(|x| {
            let y = critical_pressure_ratio(x, v_g1, v_l, k, n).unwrap();
            let oracle = bisect(|y| oracle_residual(y, x, v_g1, v_l, k, n));
            assert!((y - oracle).abs() < 1e-6);
            y
        })
        .collect();
    let steps: Vec<f64> = ratios.windows(2).map(|w| w[1] - w[0]).collect();
    assert!(steps.iter().all(|d| *d < 0.0) || steps.iter().all(|d| *d > 0.0), "{ratios:?}");
}

#[test]
fn phase_split_conserves_mass() {
    let f = fluid();
    let params = ProcessSpec::true_choke();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..1000 {
        let case = random_case(&mut rng);
        let area = effective_area(case.cond.u, &params);
        let m = sachdeva_mass_flow(&case.cond, &case.fr, &f, &params, area).unwrap();
        let q = split_volumetric(m, &case.fr, &f);
        let back = f.rho_oil_sc * q.q_oil + f.rho_gas_sc * q.q_gas + f.rho_water_sc * q.q_water;
        assert!(((back - m) / m).abs() < 1e-9);
    }
}

#[test]
fn flow_is_flat_in_p2_below_the_critical_ratio() {
    let f = fluid();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let case = random_case(&mut rng);
        let (x, v_g1, v_l, k, n) = thermo(&case);
        let y_c = critical_pressure_ratio(x, v_g1, v_l, k, n).unwrap();
        let p1 = case.cond.p1;
        let y_hi = y_c - 1e-3;
        let at = |y: f64| {
            let c = ChokeConditions { p2: y * p1, ..case.cond };
            mass_flux(&c, &case.fr, &f, true).unwrap()
        };
        let base = at(y_hi);
        for y in [y_hi - 1e-6, y_hi * 0.9, y_hi * 0.5, 0.05] {
            assert_eq!(at(y), base);
        }
        let h = 1e-6 * p1;
        let c = ChokeConditions { p2: y_hi * p1, ..case.cond };
        let up = mass_flux(&ChokeConditions { p2: c.p2 + h, ..c }, &case.fr, &f, true).unwrap();
        let dn = mass_flux(&ChokeConditions { p2: c.p2 - h, ..c }, &case.fr, &f, true).unwrap();
        assert_eq!((up - dn) / (2.0 * h), 0.0);
    }
}

#[test]
fn flow_is_monotone_on_random_grids() {
    let f = fluid();
    let params = ProcessSpec::true_choke();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let case = random_case(&mut rng);
        let flow = |c: &ChokeConditions, area: f64| sachdeva_mass_flow(c, &case.fr, &f, &params, area).unwrap();
        let area = effective_area(case.cond.u, &params);

        let p1s: Vec<f64> = (0..20).map(|i| case.cond.p2 * (1.01 + 0.2 * i as f64)).collect();
        let by_p1: Vec<f64> = p1s.iter().map(|&p1| flow(&ChokeConditions { p1, ..case.cond }, area)).collect();
        assert!(by_p1.windows(2).all(|w| w[1] >= w[0]), "p1: {by_p1:?}");

        let by_area: Vec<f64> = (0..20).map(|i| flow(&case.cond, area * i as f64 / 10.0)).collect();
        assert!(by_area.windows(2).all(|w| w[1] >= w[0]));

        let p2s: Vec<f64> = (1..20).map(|i| case.cond.p1 * i as f64 / 20.0).collect();
        let by_p2: Vec<f64> = p2s.iter().map(|&p2| flow(&ChokeConditions { p2, ..case.cond }, area)).collect();
        assert!(by_p2.windows(2).all(|w| w[1] <= w[0]), "p2: {by_p2:?}");

        let by_u: Vec<f64> = (0..=20).map(|i| effective_area(5.0 * i as f64, &params)).collect();
        assert!(by_u.windows(2).all(|w| w[1] > w[0]));
    }
}

#[test]
fn unit_slip_reproduces_homogeneous_density() {
    for (x, v_g2, v_l) in [(0.1, 0.01, 1e-3), (0.5, 0.02, 1.2e-3), (0.9, 0.005, 1e-3)] {
        let a = mixture_density_throat(x, v_g2, v_l, Some(1.0));
        let b = mixture_density_throat(x, v_g2, v_l, None);
        assert!(((a - b) / b).abs() < 1e-12);
    }
}

#[test]
fn choke_functions_are_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let case = random_case(&mut rng);
    let a = mass_flux(&case.cond, &case.fr, &fluid(), true).unwrap();
    let b = mass_flux(&case.cond, &case.fr, &fluid(), true).unwrap();
    assert_eq!(a.to_bits(), b.to_bits());
}
