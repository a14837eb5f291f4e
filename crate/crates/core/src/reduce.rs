//! Deterministic reductions and element-wise loops.
//!
//! Every reduction is split into fixed-size chunks; chunk partials are then
//! folded left to right. The chunk layout depends only on the input length, so
//! the floating-point result is the same whether the chunks run sequentially
//! or on any number of rayon workers.

use alloc::vec::Vec;

/// Number of elements per reduction chunk.
pub const CHUNK: usize = 4096;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

fn chunk_partial<F: Fn(usize) -> f64>(n: usize, c: usize, f: &F) -> f64 {
    let lo = c * CHUNK;
    let hi = core::cmp::min(n, lo + CHUNK);
    let mut s = 0.0;
    for i in lo..hi {
        s += f(i);
    }
    s
}

/// `sum_{i < n} f(i)` with a fixed chunked summation order.
pub fn sum_by<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let chunks = n.div_ceil(CHUNK);
    if chunks <= 1 {
        return chunk_partial(n, 0, &f);
    }
    #[cfg(feature = "parallel")]
    let partials: Vec<f64> = (0..chunks).into_par_iter().map(|c| chunk_partial(n, c, &f)).collect();
    #[cfg(not(feature = "parallel"))]
    let partials: Vec<f64> = (0..chunks).map(|c| chunk_partial(n, c, &f)).collect();
    partials.iter().fold(0.0, |acc, x| acc + x)
}

/// `max_{i < n} f(i)`, or `0.0` when `n == 0`.
pub fn max_by<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if n > CHUNK {
            return (0..n).into_par_iter().map(f).reduce(|| 0.0, f64::max);
        }
    }
    (0..n).map(f).fold(0.0, f64::max)
}

/// `out[i] = f(i)` for every index.
pub fn fill<F>(out: &mut [f64], f: F)
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if out.len() > CHUNK {
            out.par_iter_mut().enumerate().for_each(|(i, o)| *o = f(i));
            return;
        }
    }
    for (i, o) in out.iter_mut().enumerate() {
        *o = f(i);
    }
}

/// Collects `f(i)` for `i < n`.
pub fn map_vec<F>(n: usize, f: F) -> Vec<f64>
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let mut out = alloc::vec![0.0; n];
    fill(&mut out, f);
    out
}

/// Deterministic dot product.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    sum_by(a.len(), |i| a[i] * b[i])
}
