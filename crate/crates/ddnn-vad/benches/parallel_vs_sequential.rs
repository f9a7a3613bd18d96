//! Compares the rayon-backed batch gradient accumulation against the
//! sequential fallback. Both paths are always compiled, so a single run
//! covers the comparison; the results are bit-identical by construction.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ddnn_vad::features::NormStats;
use ddnn_vad::network::{classifier_grad_single, DdnnModel, ModelGrad, NetworkConfig};
use ddnn_vad::par::{batch_sum, batch_sum_seq};

fn bench_batch_gradient(c: &mut Criterion) {
    let input_dim = 273;
    let model = DdnnModel::random(
        NetworkConfig {
            input_dim,
            hidden_sizes: vec![54, 7, 7],
            seed: 42,
        },
        NormStats::unit(input_dim),
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut group = c.benchmark_group("batch_gradient");
    for &n in &[512usize, 2048] {
        let batch: Vec<(Vec<f64>, u8)> = (0..n)
            .map(|_| {
                (
                    (0..input_dim).map(|_| rng.gen_range(0.0..1.0)).collect(),
                    rng.gen_range(0..2) as u8,
                )
            })
            .collect();
        let grad = |ex: &(Vec<f64>, u8)| -> ddnn_vad::Result<ModelGrad> {
            classifier_grad_single(&model, &ex.0, ex.1)
        };
        group.bench_with_input(BenchmarkId::new("parallel", n), &batch, |b, batch| {
            b.iter(|| batch_sum(batch, grad).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("sequential", n), &batch, |b, batch| {
            b.iter(|| batch_sum_seq(batch, grad).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_batch_gradient);
criterion_main!(benches);
