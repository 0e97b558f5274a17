use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use dentalign_bench::{arch_fixture, labelmap_fixture};
use dentalign_core::geom::IntensityVolume;
use dentalign_core::reg::{mutual_information, ncc};
use dentalign_core::registration::{chamfer, icp, svd_solve, Correspondences, IcpConfig};
use dentalign_core::seg::{dice_image, nsd_image};
use dentalign_core::synth::CounterRng;

fn bench_svd_solve(c: &mut Criterion) {
    let (source, _, init) = arch_fixture(1);
    let pairs: Vec<_> = source
        .points()
        .iter()
        .take(500)
        .map(|&p| (p, init.apply_point(&p)))
        .collect();
    let corr = Correspondences::new(pairs).unwrap();
    c.bench_function("svd_solve_500", |b| {
        b.iter(|| svd_solve(black_box(&corr)).unwrap())
    });
}

fn bench_icp(c: &mut Criterion) {
    let (source, target, init) = arch_fixture(1);
    let cfg = IcpConfig::default();
    c.bench_function("icp_arch_2380x2800", |b| {
        b.iter(|| icp(black_box(&source), black_box(&target), &init, &cfg).unwrap())
    });
}

fn bench_chamfer(c: &mut Criterion) {
    let (source, target, _) = arch_fixture(1);
    c.bench_function("chamfer_2380x2800", |b| {
        b.iter(|| chamfer(black_box(&source), black_box(&target)))
    });
}

fn bench_seg_metrics(c: &mut Criterion) {
    let (pred, gt) = labelmap_fixture(32);
    c.bench_function("dice_image_32", |b| {
        b.iter(|| dice_image(black_box(&pred), black_box(&gt)).unwrap())
    });
    c.bench_function("nsd_image_32_tau2", |b| {
        b.iter(|| nsd_image(black_box(&pred), black_box(&gt), 2.0).unwrap())
    });
}

fn bench_intensity(c: &mut Criterion) {
    let mut rng = CounterRng::new(5);
    let n = 64 * 64 * 64;
    let x: Vec<f32> = (0..n).map(|_| rng.next_f64() as f32).collect();
    let y: Vec<f32> = (0..n).map(|_| rng.next_f64() as f32).collect();
    let vx = IntensityVolume::new([64, 64, 64], [1.0; 3], [0.0; 3], x).unwrap();
    let vy = IntensityVolume::new([64, 64, 64], [1.0; 3], [0.0; 3], y).unwrap();
    c.bench_function("mutual_information_64c_64bins", |b| {
        b.iter(|| mutual_information(black_box(&vx), black_box(&vy), 64).unwrap())
    });
    c.bench_function("ncc_64c", |b| {
        b.iter(|| ncc(black_box(&vx), black_box(&vy)).unwrap())
    });
}

criterion_group!(
    benches,
    bench_svd_solve,
    bench_icp,
    bench_chamfer,
    bench_seg_metrics,
    bench_intensity
);
criterion_main!(benches);
