use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use vfm_core::choke::{mass_flux, ChokeConditions, FluidSpec, PhaseFractions};
use vfm_core::dataset::sample_d1;
use vfm_core::model::{build, ModelKind, ModelSetup};
use vfm_core::nn::{self, NetSpec};
use vfm_core::train::{train, TrainConfig};

fn choke(c: &mut Criterion) {
    let fluid = FluidSpec::default();
    let cond = ChokeConditions::from_field_units(60.0, 25.0, 60.0, 50.0).unwrap();
    let fr = PhaseFractions::new(0.6, 0.1, 0.3).unwrap();
    c.bench_function("mass_flux", |b| b.iter(|| mass_flux(black_box(&cond), black_box(&fr), &fluid, true).unwrap()));
}

fn network(c: &mut Criterion) {
    let params = nn::init(&NetSpec::new(6, &[50, 50], 1)).unwrap();
    let x = [0.1, -0.3, 0.5, 0.2, -1.0, 0.7];
    c.bench_function("mlp_gradient_50x50", |b| b.iter(|| nn::gradients(black_box(&params), black_box(&x)).unwrap()));
}

fn epoch(c: &mut Criterion) {
    let ds = sample_d1(1000, 1.0, 2).unwrap();
    let (tr, va) = (ds.train(), ds.val());
    let cfg = TrainConfig { max_epochs: 1, patience: None, ..Default::default() };
    let mut group = c.benchmark_group("train_epoch_d1_720");
    group.sample_size(20);
    for kind in [ModelKind::MechPlain, ModelKind::HybridArea, ModelKind::DataDriven] {
        let m = build(kind, &ModelSetup::default(), kind.has_network().then(|| NetSpec::new(6, &[50, 50], 3)).as_ref())
            .unwrap();
        group.bench_function(kind.label(), |b| b.iter(|| train(&m, &tr, &va, &cfg).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, choke, network, epoch);
criterion_main!(benches);
