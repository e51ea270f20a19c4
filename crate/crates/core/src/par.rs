//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (on by default) the maps below run on the
//! rayon global pool; without it, or when `Execution::Sequential` is passed
//! explicitly, they run as plain iterators. Results are identical either
//! way: maps preserve order and reductions are max/sum over independent
//! items.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[cfg_attr(not(feature = "parallel"), default)]
    Sequential,
    #[cfg(feature = "parallel")]
    #[default]
    Parallel,
}

/// Order-preserving map over `0..n`.
pub fn map_indices<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        Execution::Sequential => (0..n).map(f).collect(),
        #[cfg(feature = "parallel")]
        Execution::Parallel => (0..n).into_par_iter().map(f).collect(),
    }
}

/// Maximum of `f` over `0..n`; `0.0` for an empty range.
///
/// NaN values propagate (a NaN anywhere yields NaN) so that broken
/// numerics never masquerade as a small residual.
pub fn max_over<F>(exec: Execution, n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let fold = |a: f64, b: f64| if a.is_nan() || b.is_nan() { f64::NAN } else { a.max(b) };
    match exec {
        Execution::Sequential => (0..n).map(f).fold(0.0, fold),
        #[cfg(feature = "parallel")]
        Execution::Parallel => (0..n).into_par_iter().map(f).reduce(|| 0.0, fold),
    }
}
