//! Thin switch between rayon and plain iterators.
//!
//! Everything here produces identical results with or without the
//! `parallel` feature: reductions are over `max`, and per-item work is
//! independent.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Runs `f(row_index, row)` over every `width`-sized row of `data` and
/// returns the maximum of the per-row results (or `0.0` for empty input).
pub(crate) fn rows_max<F>(data: &mut [f64], width: usize, f: F) -> f64
where
    F: Fn(usize, &mut [f64]) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        data.par_chunks_mut(width)
            .enumerate()
            .map(|(y, row)| f(y, row))
            .reduce(|| 0.0, f64::max)
    }
    #[cfg(not(feature = "parallel"))]
    {
        data.chunks_mut(width)
            .enumerate()
            .map(|(y, row)| f(y, row))
            .fold(0.0, f64::max)
    }
}

/// Order-preserving map over a slice.
pub fn map_ordered<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Whether the crate was built with rayon support.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
