//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature off every [`Execution`] runs sequentially, so call
//! sites never need their own `cfg` switches. Results are collected in input
//! order either way, which keeps outputs bit-identical across modes.

/// How a batch of independent work items is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

/// Grids smaller than this are evaluated sequentially even in parallel mode.
pub const CELL_PARALLEL_THRESHOLD: usize = 8192;

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// Parallel only when the per-cell work is large enough to amortize scheduling.
    pub fn for_cells(self, n_cells: usize) -> Execution {
        if n_cells >= CELL_PARALLEL_THRESHOLD {
            self
        } else {
            Execution::Sequential
        }
    }
}

/// `(0..len).map(f).collect()`, possibly in parallel.
pub fn map_range<T, F>(exec: Execution, len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..len).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..len).map(f).collect()
}

/// `items.iter().map(f).collect()`, possibly in parallel.
pub fn map_slice<S, T, F>(exec: Execution, items: &[S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
{
    map_range(exec, items.len(), |i| f(&items[i]))
}

/// Runs `job` inside a pool capped at `threads` workers (global pool when `None`).
pub fn with_threads<R: Send>(threads: Option<usize>, job: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    if let Some(n) = threads {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
            return pool.install(job);
        }
    }
    let _ = threads;
    job()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree_and_keep_order() {
        let f = |i: usize| (i as f64).sqrt().sin();
        let a = map_range(Execution::Sequential, 1000, f);
        let b = map_range(Execution::Parallel, 1000, f);
        assert_eq!(a, b);
        assert_eq!(with_threads(Some(2), || map_slice(Execution::Parallel, &a, |x| x * 2.0)).len(), 1000);
    }

    #[test]
    fn small_grids_stay_sequential() {
        assert_eq!(Execution::Parallel.for_cells(64), Execution::Sequential);
        assert_eq!(Execution::Parallel.for_cells(1 << 14), Execution::Parallel);
    }
}
