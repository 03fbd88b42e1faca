//! Trajectory-level parallel map with a sequential fallback.
//!
//! Results always come back in index order, so reductions over them are
//! independent of the worker count.

/// Worker count used by [`map_indexed`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    /// Single thread, in index order.
    Sequential,
    /// Rayon pool with the given number of threads; `0` means the global pool.
    #[default]
    Auto,
    Threads(usize),
}

impl Execution {
    /// Reads `OPO_THREADS` (`0` or unset means automatic).
    pub fn from_env() -> Self {
        match std::env::var("OPO_THREADS")
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
        {
            None | Some(0) => Execution::Auto,
            Some(1) => Execution::Sequential,
            Some(n) => Execution::Threads(n),
        }
    }
}

/// Applies `f` to `0..n` and returns the results in index order.
pub fn map_indexed<T, F>(n: usize, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        Execution::Sequential => (0..n).map(f).collect(),
        #[cfg(feature = "parallel")]
        Execution::Auto => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(f).collect()
        }
        #[cfg(feature = "parallel")]
        Execution::Threads(k) => {
            use rayon::prelude::*;
            match rayon::ThreadPoolBuilder::new().num_threads(k).build() {
                Ok(pool) => pool.install(|| (0..n).into_par_iter().map(&f).collect()),
                Err(e) => {
                    log::warn!("failed to build a {k}-thread pool ({e}); running sequentially");
                    (0..n).map(f).collect()
                }
            }
        }
        #[cfg(not(feature = "parallel"))]
        Execution::Auto | Execution::Threads(_) => (0..n).map(f).collect(),
    }
}
