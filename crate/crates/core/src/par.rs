//! Data-parallel dispatch.
//!
//! The heavy loops in this crate (per-source connectivity rows, per-subject
//! cohort work, per-sample gradients) are all embarrassingly parallel maps
//! over an index range. This module funnels them through one helper that is
//! backed by rayon when the `parallel` feature is enabled (the default) and
//! by a plain sequential loop otherwise, so results are identical either way.

/// Map `f` over `0..n`, preserving index order in the output.
#[cfg(feature = "parallel")]
pub(crate) fn map_indices<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

/// Map `f` over `0..n`, preserving index order in the output.
#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indices<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Cap the global worker pool at `n` threads.
///
/// Call once, early, before any parallel work; later calls are ignored
/// (rayon's global pool is build-once). Without the `parallel` feature this
/// is a no-op, since everything runs sequentially anyway.
pub fn set_global_threads(n: usize) {
    #[cfg(feature = "parallel")]
    {
        // An Err means the pool already exists; the run proceeds with the
        // earlier configuration, which is the documented call-once contract.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = n;
    }
}

/// Run `f` with parallelism confined to a single thread.
///
/// Used by the benchmark suite to compare the rayon-backed path against a
/// sequential execution of the same code without recompiling. With the
/// `parallel` feature disabled this is a plain call.
pub fn run_sequential<R, F>(f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .expect("single-thread pool")
            .install(f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        f()
    }
}
