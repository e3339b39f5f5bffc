//! Execution policy for data-parallel kernels and sweeps.

use serde::{Deserialize, Serialize};

/// How independent work items are executed. `Parallel` falls back to sequential
/// execution when the crate is built without the `parallel` feature.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Maps `f` over `items`, preserving order.
pub fn map<T: Sync, R: Send>(exec: Execution, items: &[T], f: impl Fn(usize, &T) -> R + Sync + Send) -> Vec<R> {
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().enumerate().map(|(i, x)| f(i, x)).collect();
    }
    let _ = exec;
    items.iter().enumerate().map(|(i, x)| f(i, x)).collect()
}

/// Applies `f` to each mutable chunk, preserving chunk identity.
pub fn for_each_mut<T: Send>(exec: Execution, chunks: &mut [T], f: impl Fn(usize, &mut T) + Sync + Send) {
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        chunks.par_iter_mut().enumerate().for_each(|(i, c)| f(i, c));
        return;
    }
    let _ = exec;
    for (i, c) in chunks.iter_mut().enumerate() {
        f(i, c);
    }
}

/// Runs `f` inside a pool of `jobs` threads (global pool when `None` or without the
/// `parallel` feature).
pub fn with_jobs<R: Send>(jobs: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    if let Some(n) = jobs {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
            return pool.install(f);
        }
    }
    let _ = jobs;
    f()
}
