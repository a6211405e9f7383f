//! Execution strategy: data-parallel inner loops via rayon when the
//! `parallel` feature is enabled, plain loops otherwise.
//!
//! Both paths must produce bit-identical results; callers guarantee that by
//! deriving per-index rng substreams (see [`crate::rng`]) instead of sharing
//! a sequential generator.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Bound the global worker pool. A no-op (beyond validation) in the
/// sequential build; zero means "use the default".
#[cfg(feature = "parallel")]
pub fn configure_threads(jobs: usize) -> Result<(), String> {
    if jobs == 0 {
        return Ok(());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build_global()
        .map_err(|e| e.to_string())
}

/// Bound the global worker pool. A no-op (beyond validation) in the
/// sequential build; zero means "use the default".
#[cfg(not(feature = "parallel"))]
pub fn configure_threads(_jobs: usize) -> Result<(), String> {
    Ok(())
}

/// Apply `f(index, &mut item)` to every element of `items`.
#[cfg(feature = "parallel")]
pub fn for_each_indexed<T, F>(items: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut T) + Sync + Send,
{
    items
        .par_iter_mut()
        .enumerate()
        .for_each(|(i, item)| f(i, item));
}

/// Apply `f(index, &mut item)` to every element of `items`.
#[cfg(not(feature = "parallel"))]
pub fn for_each_indexed<T, F>(items: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut T) + Sync + Send,
{
    for (i, item) in items.iter_mut().enumerate() {
        f(i, item);
    }
}

/// Map `f(index)` over `0..n`, collecting results in index order.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Map `f(index)` over `0..n`, collecting results in index order.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Apply `f(chunk_index, chunk)` to consecutive `chunk_size` windows.
#[cfg(feature = "parallel")]
pub fn for_each_indexed_chunks<F>(items: &mut [f64], chunk_size: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    items
        .par_chunks_mut(chunk_size)
        .enumerate()
        .for_each(|(i, chunk)| f(i, chunk));
}

/// Apply `f(chunk_index, chunk)` to consecutive `chunk_size` windows.
#[cfg(not(feature = "parallel"))]
pub fn for_each_indexed_chunks<F>(items: &mut [f64], chunk_size: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    for (i, chunk) in items.chunks_mut(chunk_size).enumerate() {
        f(i, chunk);
    }
}

/// Sequential reference implementation of [`for_each_indexed`], kept
/// unconditionally so benchmarks can compare both execution strategies.
pub fn for_each_indexed_seq<T, F>(items: &mut [T], f: F)
where
    F: Fn(usize, &mut T),
{
    for (i, item) in items.iter_mut().enumerate() {
        f(i, item);
    }
}
