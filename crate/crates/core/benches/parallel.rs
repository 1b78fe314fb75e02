//! Parallel vs sequential throughput of the data-parallel inner loops:
//! per-record energy reductions, gradient assembly, and permutation
//! replicates. The two paths produce bitwise-identical results; these
//! benches measure what the `parallel` feature buys.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use geomreg_core::eval::smoothed_pvalue;
use geomreg_core::exec;
use geomreg_core::manifold::{exp_map, project_tangent, ManifoldKind, ManifoldPoint};
use geomreg_core::regression::{
    energy, fit, grad_v, Dataset, FitConfig, FitMode, GeodesicModel, Record,
};
use geomreg_core::stats::QuadratureConfig;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn sphere_instance(n: usize, ambient: usize) -> (GeodesicModel, Dataset) {
    let manifold = ManifoldKind::sphere(ambient).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let raw: Vec<f64> = (0..ambient).map(|_| rng.sample(StandardNormal)).collect();
    let mu = ManifoldPoint::project(manifold, &raw).unwrap();
    let col = {
        let raw: Vec<f64> = (0..ambient).map(|_| rng.sample(StandardNormal)).collect();
        let t = project_tangent(&mu, &raw).unwrap();
        t.scaled(0.4 / t.norm())
    };
    let model = GeodesicModel::with_columns(mu.clone(), vec![col], 50.0).unwrap();
    let records: Vec<Record> = (0..n)
        .map(|_| {
            let x = rng.random::<f64>();
            let clean = model.predict(&[x]).unwrap();
            let raw: Vec<f64> = (0..ambient).map(|_| rng.sample(StandardNormal)).collect();
            let noise = project_tangent(&clean, &raw).unwrap();
            let noise = noise.scaled(0.1 / noise.norm().max(1e-12));
            Record {
                covariates: vec![x],
                response: exp_map(&clean, &noise).unwrap(),
            }
        })
        .collect();
    let data = Dataset::new(manifold, 1, records).unwrap();
    (model, data)
}

fn bench_chunked_reductions(c: &mut Criterion) {
    let n = 1 << 16;
    let f = |i: usize| ((i as f64) * 0.37).sin() / (1.0 + (i % 97) as f64);
    let mut group = c.benchmark_group("chunked_sum_65536");
    group.bench_function("sequential", |b| {
        b.iter(|| black_box(exec::sum_indexed_seq(n, f)))
    });
    #[cfg(feature = "parallel")]
    group.bench_function("parallel", |b| {
        b.iter(|| black_box(exec::sum_indexed_par(n, f)))
    });
    group.finish();
}

fn bench_energy(c: &mut Criterion) {
    let (model, data) = sphere_instance(20_000, 8);
    let quad = QuadratureConfig::default();
    // warm the normalizing-constant cache so the bench isolates the
    // per-record reduction
    let _ = energy(&model, &data, true, 0.0, quad).unwrap();
    let mut group = c.benchmark_group("energy_20000_records");
    group.bench_function("dispatch", |b| {
        b.iter(|| black_box(energy(&model, &data, true, 0.0, quad).unwrap()))
    });
    group.finish();
}

fn bench_grad_v(c: &mut Criterion) {
    let (model, data) = sphere_instance(20_000, 8);
    let quad = QuadratureConfig::default();
    let mut group = c.benchmark_group("grad_v_20000_records");
    group.bench_function("dispatch", |b| {
        b.iter(|| black_box(grad_v(&model, &data, quad).unwrap()))
    });
    group.finish();
}

fn bench_permutation_replicates(c: &mut Criterion) {
    let (_, data) = sphere_instance(24, 3);
    let cfg = FitConfig {
        max_iter: 10,
        ..FitConfig::default()
    };
    let quad = QuadratureConfig::default();
    let covs: Vec<Vec<f64>> = data
        .records()
        .iter()
        .map(|r| r.covariates.clone())
        .collect();
    let mut group = c.benchmark_group("permutation_64_replicate_fits");
    group.sample_size(10);
    group.bench_function("dispatch", |b| {
        b.iter_batched(
            || covs.clone(),
            |covs| {
                let reps: Vec<f64> = exec::try_map_indexed(64, |rep| {
                    let mut rng = ChaCha8Rng::seed_from_u64(rep as u64);
                    let mut xs = covs.clone();
                    use rand::seq::SliceRandom;
                    xs.shuffle(&mut rng);
                    let shuffled = data.with_covariates(&xs)?;
                    let (m, _) = fit(&shuffled, 1, FitMode::Geodesic, &cfg, quad)?;
                    geomreg_core::eval::r_squared(&m, &shuffled).map(|r| r.raw)
                })
                .unwrap();
                black_box(smoothed_pvalue(0.9, &reps))
            },
            BatchSize::SmallInput,
        )
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_chunked_reductions,
    bench_energy,
    bench_grad_v,
    bench_permutation_replicates
);
criterion_main!(benches);
