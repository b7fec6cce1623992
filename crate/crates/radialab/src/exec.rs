//! Execution strategy: data-parallel maps with a sequential fallback.
//!
//! Everything downstream (sampling, experiment replicates, table cells)
//! funnels through `map_indexed`, so builds without the `parallel` feature
//! swap in plain loops and produce bit-identical results. Thread counts only
//! change scheduling, never values, because all work is a pure function of
//! the index.

use crate::error::{Error, Result};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Environment variable selecting the worker thread count. Unset or `0`
/// means the library default (one worker per core).
pub const THREADS_ENV: &str = "RADIALAB_THREADS";

/// Maps `f` over `0..n`, in parallel when the `parallel` feature is enabled.
/// Output order matches index order regardless of scheduling.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
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

/// Always-sequential variant, kept as the benchmark baseline and as a
/// cross-check that parallel scheduling does not affect results.
pub fn map_indexed_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Reads the thread-count override from the environment. `None` means no
/// override was requested.
pub fn configured_threads() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(std::env::VarError::NotUnicode(_)) => Err(Error::Config(format!(
            "{THREADS_ENV} is not valid unicode"
        ))),
        Ok(s) if s.is_empty() => Ok(None),
        Ok(s) => match s.parse::<usize>() {
            Ok(n) => Ok(Some(n)),
            Err(_) => Err(Error::Config(format!(
                "{THREADS_ENV} must be a nonnegative integer, got {s:?}"
            ))),
        },
    }
}

/// Runs `f` with a worker pool of `n` threads (0 = library default). With
/// the `parallel` feature off, or n = 0, this is a plain call.
pub fn with_threads<R, F>(n: usize, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    #[cfg(feature = "parallel")]
    {
        if n == 0 {
            f()
        } else {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .expect("failed to build worker pool");
            pool.install(f)
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = n;
        f()
    }
}
