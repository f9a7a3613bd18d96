//! Data-parallel helpers. With the `parallel` feature (default) the inner
//! loops run on rayon; without it they fall back to sequential code.
//!
//! Batch gradients are accumulated per fixed-size chunk and the chunk
//! partials are combined in index order, so the parallel and sequential
//! paths produce bit-identical sums.

use crate::Result;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Chunk size for deterministic partial-sum accumulation.
pub const GRAD_CHUNK: usize = 64;

/// Something that can absorb another partial sum of the same shape.
pub trait Accum: Send {
    fn accum(&mut self, other: &Self) -> Result<()>;
}

fn chunk_sum<T, U, F>(items: &[T], f: &F) -> Result<U>
where
    U: Accum,
    F: Fn(&T) -> Result<U> + Sync,
{
    let mut iter = items.iter();
    let mut acc = f(iter.next().expect("chunk is nonempty"))?;
    for item in iter {
        acc.accum(&f(item)?)?;
    }
    Ok(acc)
}

fn combine<U: Accum>(partials: Vec<U>) -> Result<U> {
    let mut iter = partials.into_iter();
    let mut acc = iter.next().expect("batch is nonempty");
    for p in iter {
        acc.accum(&p)?;
    }
    Ok(acc)
}

/// Sum of `f` over all items, sequential path. Identical chunking to the
/// parallel path so the result is bit-identical.
pub fn batch_sum_seq<T, U, F>(items: &[T], f: F) -> Result<U>
where
    T: Sync,
    U: Accum,
    F: Fn(&T) -> Result<U> + Sync,
{
    let partials: Vec<U> = items
        .chunks(GRAD_CHUNK)
        .map(|chunk| chunk_sum(chunk, &f))
        .collect::<Result<_>>()?;
    combine(partials)
}

#[cfg(feature = "parallel")]
pub fn batch_sum<T, U, F>(items: &[T], f: F) -> Result<U>
where
    T: Sync,
    U: Accum,
    F: Fn(&T) -> Result<U> + Send + Sync,
{
    let partials: Vec<U> = items
        .par_chunks(GRAD_CHUNK)
        .map(|chunk| chunk_sum(chunk, &f))
        .collect::<Result<_>>()?;
    combine(partials)
}

#[cfg(not(feature = "parallel"))]
pub fn batch_sum<T, U, F>(items: &[T], f: F) -> Result<U>
where
    T: Sync,
    U: Accum,
    F: Fn(&T) -> Result<U> + Sync,
{
    batch_sum_seq(items, f)
}

/// Map a fallible function over items, in parallel when enabled. Output order
/// matches input order either way.
#[cfg(feature = "parallel")]
pub fn try_map_indexed<T, U, F>(items: &[T], f: F) -> Result<Vec<U>>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> Result<U> + Send + Sync,
{
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn try_map_indexed<T, U, F>(items: &[T], f: F) -> Result<Vec<U>>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> Result<U> + Sync,
{
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::NormStats;
    use crate::network::{classifier_grad_single, DdnnModel, NetworkConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn parallel_and_sequential_sums_are_bit_identical() {
        let model = DdnnModel::random(
            NetworkConfig {
                input_dim: 6,
                hidden_sizes: vec![4, 3],
                seed: 77,
            },
            NormStats::unit(6),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let examples: Vec<(Vec<f64>, u8)> = (0..300)
            .map(|_| {
                (
                    (0..6).map(|_| rng.gen_range(0.0..1.0)).collect(),
                    rng.gen_range(0..2) as u8,
                )
            })
            .collect();
        let f = |(x, y): &(Vec<f64>, u8)| classifier_grad_single(&model, x, *y);
        let seq = batch_sum_seq(&examples, f).unwrap();
        let par = batch_sum(&examples, f).unwrap();
        assert_eq!(seq.loss.to_bits(), par.loss.to_bits());
        for (a, b) in seq.encoder_layers.iter().zip(&par.encoder_layers) {
            for (x, y) in a.weights.data().iter().zip(b.weights.data()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
        for (x, y) in seq
            .classifier
            .weights
            .data()
            .iter()
            .zip(par.classifier.weights.data())
        {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }
}
