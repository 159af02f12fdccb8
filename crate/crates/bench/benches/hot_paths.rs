//! Hot-path timings: one spectral reduction, its quadrature cross-check,
//! the entanglement measures, a sweep batch, and one tomography trial.
//! Everything is measured on the default configuration at the matched
//! 195/195 operating point so numbers stay comparable across runs.

use criterion::{criterion_group, criterion_main, Criterion};
use entrec_core::optics::reduce;
use entrec_core::oracle::{numeric_reduce, QuadratureGrid};
use entrec_core::scenarios::{
    assemble_recovery, make_spectrum, scenario_recovery, sweep, ExperimentConfig, ScenarioKind,
};
use entrec_core::states::{concurrence, maximize_chsh_linear};
use entrec_core::tomo::{linear_reconstruct, simulate_counts, ProjectionSet};
use std::hint::black_box;

fn closed_form_reduction(c: &mut Criterion) {
    let cfg = ExperimentConfig::default();
    let sp = make_spectrum(&cfg).unwrap();
    let state = assemble_recovery(&cfg, 195.0, 195.0).unwrap();
    c.bench_function("reduce closed form, recovery point", |b| {
        b.iter(|| reduce(black_box(&state), &sp, &sp).unwrap())
    });
}

fn quadrature_reduction(c: &mut Criterion) {
    let cfg = ExperimentConfig::default();
    let sp = make_spectrum(&cfg).unwrap();
    let state = assemble_recovery(&cfg, 195.0, 195.0).unwrap();
    let grid = QuadratureGrid::default();
    c.bench_function("reduce by quadrature, recovery point", |b| {
        b.iter(|| numeric_reduce(black_box(&state), &sp, &sp, &grid).unwrap())
    });
}

fn entanglement_measures(c: &mut Criterion) {
    let cfg = ExperimentConfig::default();
    let (rho, _, _) = scenario_recovery(&cfg, 195.0, 195.0).unwrap();
    c.bench_function("concurrence, recovered state", |b| {
        b.iter(|| concurrence(black_box(&rho)).unwrap())
    });
    c.bench_function("chsh maximizer, recovered state", |b| {
        b.iter(|| maximize_chsh_linear(black_box(&rho)))
    });
}

fn sweep_batch(c: &mut Criterion) {
    let cfg = ExperimentConfig {
        l_1: 195.0,
        ..ExperimentConfig::default()
    };
    c.bench_function("sweep 21 recovery rows", |b| {
        b.iter(|| sweep(black_box(&cfg), ScenarioKind::Recovery, 0.0, 100.0, 5.0, false).unwrap())
    });
}

fn tomography_trial(c: &mut Criterion) {
    let cfg = ExperimentConfig::default();
    let (rho, _, _) = scenario_recovery(&cfg, 195.0, 195.0).unwrap();
    let ps = ProjectionSet::canonical();
    c.bench_function("tomography trial, 10^4 pairs", |b| {
        b.iter(|| {
            let record = simulate_counts(black_box(&rho), &ps, 10_000, 7, 0.1);
            linear_reconstruct(&record, &ps).unwrap()
        })
    });
}

criterion_group!(
    benches,
    closed_form_reduction,
    quadrature_reduction,
    entanglement_measures,
    sweep_batch,
    tomography_trial
);
criterion_main!(benches);
