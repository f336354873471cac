//! Thin dispatch layer between rayon and plain loops.
//!
//! Every helper here distributes *independent* per-item work. Each item is
//! computed by the same scalar code in the same order regardless of how the
//! items are scheduled, so enabling the `parallel` feature cannot change
//! results bit-wise.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Apply `f` to every `chunk_len`-sized chunk of `data`, passing the chunk
/// index. `data.len()` must be a multiple of `chunk_len`.
#[cfg(feature = "parallel")]
pub(crate) fn for_each_chunk_mut<F>(data: &mut [f64], chunk_len: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync,
{
    data.par_chunks_mut(chunk_len)
        .enumerate()
        .for_each(|(i, chunk)| f(i, chunk));
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn for_each_chunk_mut<F>(data: &mut [f64], chunk_len: usize, f: F)
where
    F: Fn(usize, &mut [f64]),
{
    for (i, chunk) in data.chunks_mut(chunk_len).enumerate() {
        f(i, chunk);
    }
}

/// Collect `f(0), f(1), ..., f(n - 1)` in index order.
#[cfg(feature = "parallel")]
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}
