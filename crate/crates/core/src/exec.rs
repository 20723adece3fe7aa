//! Execution strategy for embarrassingly parallel batches.
//!
//! With the `parallel` feature (default), indexed batches run on the rayon
//! pool; without it the same code compiles to a plain sequential loop. Output
//! order always matches index order, so downstream aggregation is a single
//! deterministic sequential pass and results are bit-identical regardless of
//! worker count.

/// Applies `f` to every index in `0..n`, returning results in index order.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

/// Applies `f` to every index in `0..n`, returning results in index order.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Sequential variant, always available. Used by the bench suite to compare
/// against the parallel path and by callers that need a strictly serial run.
pub fn map_indexed_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}
