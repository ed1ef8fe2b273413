use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::split::{split_random, split_temporal};
use super::{Dataset, DatasetId, Observation, Provenance, Split};
use crate::choke::FluidSpec;
use crate::error::{Error, Result};
use crate::process::{add_noise, Inputs, NoiseSpec, ProcessSpec};
use crate::rng::{derive_seed, stream_rng};

pub const D1_TEST_FRACTION: f64 = 0.2;
pub const D1_VAL_FRACTION: f64 = 0.2;
const TEMPORAL_TEST_FRACTION: f64 = 0.4;
const TEMPORAL_VAL_FRACTION: f64 = 0.12;

const INPUT_STREAM: u64 = 0;
const NOISE_TAG: u64 = 0x006e_6f69_7365;
const SPLIT_TAG: u64 = 0x0073_706c_6974;

const D2_P2_BAR: f64 = 22.0;
const D2_T1_C: f64 = 50.0;
const D2_ETA_OIL: f64 = 0.85;
const D2_ETA_WATER: f64 = 0.02;
const D2_U_START: f64 = 20.0;
const D2_U_STEP: f64 = 2.5;
const D2_U_STEPS: usize = 33;
const D3_GOR_START: f64 = 200.0;
const D3_GOR_END: f64 = 1000.0;

/// Draws `n` i.i.d. D1 input vectors; also returns the number of rejected draws.
pub fn sample_d1_inputs(n: usize, seed: u64) -> (Vec<Inputs>, u64) {
    let mut rng = stream_rng(seed, INPUT_STREAM);
    let p2 = Normal::new(22.0, 0.5).expect("valid normal");
    let t1 = Normal::new(50.0, 2.0).expect("valid normal");
    let mut redraws = 0;
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let x = Inputs {
            p1_bar: rng.random_range(30.0..70.0),
            p2_bar: p2.sample(&mut rng),
            t1_c: t1.sample(&mut rng),
            u_pct: rng.random_range(0.0..100.0),
            eta_oil: rng.random_range(0.0..0.8),
            eta_water: rng.random_range(0.0..0.2),
        };
        if x.p2_bar <= 0.0 || x.t1_c <= 0.0 || x.p2_bar >= x.p1_bar {
            redraws += 1;
            continue;
        }
        out.push(x);
    }
    (out, redraws)
}

fn observation(process: &ProcessSpec, t: u64, x: &Inputs, noise: &NoiseSpec) -> Result<Observation> {
    let q_true = process.evaluate(x)?;
    Ok(Observation {
        t,
        p1: x.p1_bar,
        p2: x.p2_bar,
        t1: x.t1_c,
        u: x.u_pct,
        eta_oil: x.eta_oil,
        eta_water: x.eta_water,
        eta_gas: 1.0 - x.eta_oil - x.eta_water,
        q_true,
        y: add_noise(q_true, noise, t),
    })
}

pub(crate) fn noise_for(seed: u64, sigma_eps: f64) -> Result<NoiseSpec> {
    NoiseSpec::new(sigma_eps, derive_seed(seed, &[NOISE_TAG]))
}

/// Stationary dataset with a random test/validation split.
pub fn sample_d1(n: usize, sigma_eps: f64, seed: u64) -> Result<Dataset> {
    sample_d1_with(&ProcessSpec::calibrated(), n, sigma_eps, seed)
}

pub fn sample_d1_with(process: &ProcessSpec, n: usize, sigma_eps: f64, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::input("n", "dataset needs at least one row"));
    }
    let noise = noise_for(seed, sigma_eps)?;
    let (inputs, redraws) = sample_d1_inputs(n, seed);
    let observations = inputs
        .iter()
        .enumerate()
        .map(|(t, x)| observation(process, t as u64, x, &noise))
        .collect::<Result<Vec<_>>>()?;
    let mut ds = Dataset {
        observations,
        split: Split::default(),
        provenance: Provenance { generator: DatasetId::D1, n, sigma_eps, seed, redraws },
    };
    if n >= 2 {
        let n_test = ((n as f64 * D1_TEST_FRACTION).round() as usize).clamp(1, n - 1);
        ds = split_random(ds, n_test, D1_VAL_FRACTION, derive_seed(seed, &[SPLIT_TAG]))?;
    } else {
        ds.split.train = vec![0];
    }
    Ok(ds)
}

/// Upstream pressure of a depleting reservoir, bar.
pub fn d2_p1_profile(t: usize, n: usize) -> f64 {
    30.0 + 40.0 * (-3.0 * t as f64 / n as f64).exp()
}

/// Choke opening schedule raised in fixed steps, percent.
pub fn d2_u_profile(t: usize, n: usize) -> f64 {
    let period = (n / D2_U_STEPS).max(1);
    (D2_U_START + D2_U_STEP * (t / period) as f64).min(100.0)
}

fn temporal_sizes(n: usize) -> (usize, usize) {
    let n_test = (n as f64 * TEMPORAL_TEST_FRACTION).round() as usize;
    let n_val = (n as f64 * TEMPORAL_VAL_FRACTION).round() as usize;
    if n_test + n_val >= n {
        (n.saturating_sub(1) / 2, 0)
    } else {
        (n_test, n_val)
    }
}

fn temporal_dataset(id: DatasetId, n: usize, seed: u64, rows: Vec<Inputs>, process: &ProcessSpec) -> Result<Dataset> {
    let noise = noise_for(seed, 0.0)?;
    let observations =
        rows.iter().enumerate().map(|(t, x)| observation(process, t as u64, x, &noise)).collect::<Result<Vec<_>>>()?;
    let ds = Dataset {
        observations,
        split: Split::default(),
        provenance: Provenance { generator: id, n, sigma_eps: 0.0, seed, redraws: 0 },
    };
    let (n_test, n_val) = temporal_sizes(n);
    if n == 1 {
        let mut ds = ds;
        ds.split.train = vec![0];
        return Ok(ds);
    }
    split_temporal(ds, n_test, n_val)
}

/// Depleting reservoir: decaying upstream pressure, stepwise opening of the choke.
pub fn generate_d2(n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::input("n", "dataset needs at least one row"));
    }
    let rows = (0..n)
        .map(|t| Inputs {
            p1_bar: d2_p1_profile(t, n),
            p2_bar: D2_P2_BAR,
            t1_c: D2_T1_C,
            u_pct: d2_u_profile(t, n),
            eta_oil: D2_ETA_OIL,
            eta_water: D2_ETA_WATER,
        })
        .collect();
    temporal_dataset(DatasetId::D2, n, seed, rows, &ProcessSpec::calibrated())
}

/// Oil and gas mass fractions for a standard-condition gas-to-oil ratio.
pub fn gor_to_fractions(gor: f64, eta_water: f64, fluid: &FluidSpec) -> (f64, f64) {
    let r = gor * fluid.rho_gas_sc / fluid.rho_oil_sc;
    let liquid_free = 1.0 - eta_water;
    (liquid_free / (1.0 + r), liquid_free * r / (1.0 + r))
}

/// Rising gas-to-oil ratio at a fully open choke.
pub fn generate_d3(n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::input("n", "dataset needs at least one row"));
    }
    let process = ProcessSpec::calibrated();
    let fluid = *process.fluid();
    let rows = (0..n)
        .map(|t| {
            let frac = if n > 1 { t as f64 / (n - 1) as f64 } else { 0.0 };
            let gor = D3_GOR_START + (D3_GOR_END - D3_GOR_START) * frac;
            let (eta_oil, _) = gor_to_fractions(gor, D2_ETA_WATER, &fluid);
            Inputs {
                p1_bar: d2_p1_profile(t, n),
                p2_bar: D2_P2_BAR,
                t1_c: D2_T1_C,
                u_pct: 100.0,
                eta_oil,
                eta_water: D2_ETA_WATER,
            }
        })
        .collect();
    temporal_dataset(DatasetId::D3, n, seed, rows, &process)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gor_of(eta_oil: f64, eta_gas: f64, fluid: &FluidSpec) -> f64 {
        eta_gas / eta_oil * fluid.rho_oil_sc / fluid.rho_gas_sc
    }

    #[test]
    fn d1_sizes_and_simplex() {
        let ds = sample_d1(10_000, 0.0, 3).unwrap();
        assert_eq!(ds.len(), 10_000);
        assert_eq!(ds.split.test.len(), 2000);
        assert_eq!(ds.split.val.len(), 1600);
        assert_eq!(ds.split.train.len(), 6400);
        for o in &ds.observations {
            assert!((o.eta_oil + o.eta_water + o.eta_gas - 1.0).abs() < 1e-12);
            assert!((30.0..=70.0).contains(&o.p1));
            assert!((0.0..=100.0).contains(&o.u));
            assert!((0.0..=0.8).contains(&o.eta_oil));
            assert!((0.0..=0.2).contains(&o.eta_water));
            assert!(o.q_true >= 0.0);
            assert_eq!(o.q_true, o.y);
        }
        let mean_p1 = ds.observations.iter().map(|o| o.p1).sum::<f64>() / 10_000.0;
        assert!((mean_p1 - 50.0).abs() < 0.7, "{mean_p1}");
    }

    #[test]
    fn d1_is_reproducible() {
        let a = sample_d1(500, 2.0, 9).unwrap();
        let b = sample_d1(500, 2.0, 9).unwrap();
        assert_eq!(a, b);
        let c = sample_d1(500, 2.0, 10).unwrap();
        assert_ne!(a.observations[0], c.observations[0]);
    }

    #[test]
    fn d1_noise_levels_share_inputs() {
        let a = sample_d1(200, 1.0, 4).unwrap();
        let b = sample_d1(200, 5.0, 4).unwrap();
        for (x, y) in a.observations.iter().zip(&b.observations) {
            assert_eq!(x.q_true, y.q_true);
            assert!(((y.y - y.q_true) - 5.0 * (x.y - x.q_true)).abs() < 1e-9);
        }
    }

    #[test]
    fn d2_profiles() {
        let ds = generate_d2(5000, 1).unwrap();
        let obs = &ds.observations;
        assert_eq!(obs[0].p1, 70.0);
        assert!((obs[4999].p1 - 32.0).abs() < 0.05);
        for w in obs.windows(2) {
            assert!(w[1].p1 < w[0].p1);
            let du = w[1].u - w[0].u;
            assert!(du == 0.0 || du == 2.5, "{du}");
        }
        assert_eq!(obs[0].u, 20.0);
        assert_eq!(obs[4999].u, 100.0);
        assert_eq!((ds.split.train.len(), ds.split.val.len(), ds.split.test.len()), (2400, 600, 2000));
        assert!(obs.iter().all(|o| o.y == o.q_true));
    }

    #[test]
    fn d2_flow_decays_once_choke_is_saturated() {
        let ds = generate_d2(5000, 1).unwrap();
        let tail: Vec<_> = ds.observations.iter().filter(|o| o.u == 100.0).collect();
        assert!(tail.len() > 10);
        for w in tail.windows(2) {
            assert!(w[1].q_true < w[0].q_true);
        }
    }

    #[test]
    fn d3_profiles() {
        let ds = generate_d3(5000, 1).unwrap();
        let f = FluidSpec::default();
        let obs = &ds.observations;
        assert!((gor_of(obs[0].eta_oil, obs[0].eta_gas, &f) - 200.0).abs() < 1e-9);
        assert!((gor_of(obs[4999].eta_oil, obs[4999].eta_gas, &f) - 1000.0).abs() < 1e-9);
        for w in obs.windows(2) {
            assert!(w[1].eta_oil < w[0].eta_oil);
            assert!(w[1].eta_gas > w[0].eta_gas);
        }
        assert!(obs.iter().all(|o| o.u == 100.0 && o.eta_water == 0.02));
        let d2 = generate_d2(5000, 1).unwrap();
        assert!(obs.iter().zip(&d2.observations).all(|(a, b)| a.p1 == b.p1));
    }

    #[test]
    fn gor_conversion() {
        let f = FluidSpec::default();
        let (o, g) = gor_to_fractions(0.0, 0.02, &f);
        assert_eq!(g, 0.0);
        assert!((o - 0.98).abs() < 1e-15);
        let (o, g) = gor_to_fractions(200.0, 0.02, &f);
        assert!((o - 0.8167).abs() < 1e-4 && (g - 0.1633).abs() < 1e-4);
        let (o, g) = gor_to_fractions(1000.0, 0.02, &f);
        assert!((o - 0.49).abs() < 1e-12 && (g - 0.49).abs() < 1e-12);
    }
}
