//! Deterministic data-parallel reductions.
//!
//! Sums are computed per fixed-size chunk and the chunk partials are combined
//! in index order, so the result is bitwise identical whether the chunks run
//! on one thread or many. The `parallel` feature (default) dispatches chunk
//! work to rayon; without it everything runs sequentially over the same
//! chunk structure.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Chunk width for all reductions. Fixed so that the partial-sum structure
/// never depends on thread count.
pub const CHUNK: usize = 256;

fn chunk_count(n: usize) -> usize {
    n.div_ceil(CHUNK)
}

fn chunk_range(c: usize, n: usize) -> std::ops::Range<usize> {
    let lo = c * CHUNK;
    lo..((lo + CHUNK).min(n))
}

/// Sequential scalar reduction over `f(0..n)` with the shared chunk structure.
pub fn sum_indexed_seq<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    (0..chunk_count(n))
        .map(|c| chunk_range(c, n).map(&f).sum::<f64>())
        .sum()
}

/// Parallel scalar reduction; bitwise equal to [`sum_indexed_seq`].
#[cfg(feature = "parallel")]
pub fn sum_indexed_par<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let partials: Vec<f64> = (0..chunk_count(n))
        .into_par_iter()
        .map(|c| chunk_range(c, n).map(&f).sum::<f64>())
        .collect();
    partials.iter().sum()
}

/// Scalar reduction over `f(0..n)`; parallel when the feature is enabled.
pub fn sum_indexed<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    #[cfg(feature = "parallel")]
    {
        sum_indexed_par(n, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        sum_indexed_seq(n, f)
    }
}

/// Sequential vector accumulation: `f(i, buf)` adds record i's contribution
/// into a `dim`-wide buffer; chunk buffers are combined in index order.
pub fn accumulate_vec_seq<F>(n: usize, dim: usize, f: F) -> Vec<f64>
where
    F: Fn(usize, &mut [f64]) + Sync,
{
    let mut out = vec![0.0; dim];
    for c in 0..chunk_count(n) {
        let mut buf = vec![0.0; dim];
        for i in chunk_range(c, n) {
            f(i, &mut buf);
        }
        for (o, b) in out.iter_mut().zip(&buf) {
            *o += *b;
        }
    }
    out
}

/// Parallel vector accumulation; bitwise equal to [`accumulate_vec_seq`].
#[cfg(feature = "parallel")]
pub fn accumulate_vec_par<F>(n: usize, dim: usize, f: F) -> Vec<f64>
where
    F: Fn(usize, &mut [f64]) + Sync,
{
    let partials: Vec<Vec<f64>> = (0..chunk_count(n))
        .into_par_iter()
        .map(|c| {
            let mut buf = vec![0.0; dim];
            for i in chunk_range(c, n) {
                f(i, &mut buf);
            }
            buf
        })
        .collect();
    let mut out = vec![0.0; dim];
    for buf in &partials {
        for (o, b) in out.iter_mut().zip(buf) {
            *o += *b;
        }
    }
    out
}

/// Vector accumulation; parallel when the feature is enabled.
pub fn accumulate_vec<F>(n: usize, dim: usize, f: F) -> Vec<f64>
where
    F: Fn(usize, &mut [f64]) + Sync,
{
    #[cfg(feature = "parallel")]
    {
        accumulate_vec_par(n, dim, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        accumulate_vec_seq(n, dim, f)
    }
}

/// Order-preserving map over `0..n`; each element may fail. Used for
/// independent replicates (permutation fits), where the per-index work is
/// heavy and owns its state.
pub fn try_map_indexed<T, E, F>(n: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}
