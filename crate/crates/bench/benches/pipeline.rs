use std::hint::black_box;

use cavmag_bench::{axis, default_grid};
use cavmag_core::analysis::{
    extract_peaks, field_linewidth, fit_avoided_crossing, FieldWindow, FitParameter, FreeMask,
};
use cavmag_core::spectra::{add_noise, synthesize_map, vertical_cut};
use cavmag_core::HybridSystem;
use criterion::{criterion_group, criterion_main, Criterion};

fn pipeline(c: &mut Criterion) {
    let sys = HybridSystem::default();
    let (fields, freqs) = default_grid();
    let map = synthesize_map(&fields, &freqs, &sys).unwrap();
    let peaks = extract_peaks(&map, 0.05).unwrap();
    let free = FreeMask::new([FitParameter::Coupling, FitParameter::ZeroFieldFrequency]);

    c.bench_function("synthesize_map 221x1401", |b| {
        b.iter(|| synthesize_map(black_box(&fields), black_box(&freqs), &sys).unwrap())
    });
    c.bench_function("add_noise 0.2 dB", |b| {
        b.iter(|| add_noise(black_box(&map), 0.2, 1).unwrap())
    });
    c.bench_function("extract_peaks", |b| {
        b.iter(|| extract_peaks(black_box(&map), 0.05).unwrap())
    });
    c.bench_function("fit_avoided_crossing G,f_afmr0", |b| {
        b.iter(|| {
            fit_avoided_crossing(
                black_box(&peaks),
                &sys.spins,
                &sys.cavity,
                &free,
                FieldWindow::default(),
            )
            .unwrap()
        })
    });

    let fine = synthesize_map(&axis(0.60, 0.76, 5e-5), &axis(15.5, 15.7, 0.005), &sys).unwrap();
    let cut = vertical_cut(&fine, 15.6).unwrap();
    c.bench_function("field_linewidth 3201 points", |b| {
        b.iter(|| field_linewidth(black_box(&cut.points)).unwrap())
    });
}

criterion_group!(benches, pipeline);
criterion_main!(benches);
