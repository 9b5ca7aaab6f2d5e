//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) [`Execution::Parallel`] dispatches to
//! rayon; without it every call runs on the current thread. Results are always
//! returned in input order so that downstream reductions are deterministic.

use std::sync::atomic::{AtomicBool, Ordering};

/// How batch work is scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    pub fn from_threads(threads: usize) -> Self {
        if threads == 1 {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }

    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

static SEQUENTIAL: AtomicBool = AtomicBool::new(false);

/// Process-wide default used by entry points that take no explicit
/// [`Execution`] (the CLI sets it from `--threads`).
pub fn set_default_execution(exec: Execution) {
    SEQUENTIAL.store(exec == Execution::Sequential, Ordering::Relaxed);
}

pub fn default_execution() -> Execution {
    if SEQUENTIAL.load(Ordering::Relaxed) {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

/// Order-preserving map over `0..n`.
pub fn map_range<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Order-preserving map over a slice.
pub fn map_slice<S, T, F>(exec: Execution, items: &[S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

/// Fill consecutive chunks of `out` in place; `f` receives the chunk index.
pub fn for_each_chunk_mut<T, F>(exec: Execution, out: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    let chunk = chunk.max(1);
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        out.par_chunks_mut(chunk)
            .enumerate()
            .for_each(|(i, c)| f(i, c));
        return;
    }
    let _ = exec;
    for (i, c) in out.chunks_mut(chunk).enumerate() {
        f(i, c);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree() {
        let a = map_range(Execution::Sequential, 100, |i| (i as f64).sqrt());
        let b = map_range(Execution::Parallel, 100, |i| (i as f64).sqrt());
        assert_eq!(a, b);
        let mut x = vec![0usize; 37];
        for_each_chunk_mut(Execution::Parallel, &mut x, 8, |c, s| {
            for (k, v) in s.iter_mut().enumerate() {
                *v = c * 8 + k;
            }
        });
        assert!(x.iter().enumerate().all(|(i, v)| i == *v));
    }
}
