//! Item-level execution. Results always come back in input order, so the
//! choice of strategy never changes an output.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Execution {
    Sequential,
    /// Data-parallel over items. `jobs == 0` uses every core. Without the
    /// `parallel` feature this runs sequentially.
    Parallel { jobs: usize },
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel { jobs: 0 }
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// `--jobs` semantics: 1 is sequential, 0 is all cores.
    pub fn from_jobs(jobs: usize) -> Self {
        if jobs == 1 {
            Execution::Sequential
        } else {
            Execution::Parallel { jobs }
        }
    }
}

#[cfg(feature = "parallel")]
fn in_pool<R: Send>(jobs: usize, op: impl FnOnce() -> R + Send) -> R {
    if jobs == 0 {
        return op();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(op),
        Err(e) => {
            log::warn!("could not build a {jobs}-thread pool ({e}); using the global pool");
            op()
        }
    }
}

pub fn map_ordered<T, R, F>(items: &[T], exec: Execution, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match exec {
        Execution::Sequential => items.iter().map(f).collect(),
        #[cfg(feature = "parallel")]
        Execution::Parallel { jobs } => {
            use rayon::prelude::*;
            in_pool(jobs, || items.par_iter().map(f).collect())
        }
        #[cfg(not(feature = "parallel"))]
        Execution::Parallel { .. } => items.iter().map(f).collect(),
    }
}

/// Like [`map_ordered`], stopping at an error. When several items fail the
/// parallel path may report any one of them.
pub fn try_map_ordered<T, R, E, F>(items: &[T], exec: Execution, f: F) -> Result<Vec<R>, E>
where
    T: Sync,
    R: Send,
    E: Send,
    F: Fn(&T) -> Result<R, E> + Sync + Send,
{
    match exec {
        Execution::Sequential => items.iter().map(f).collect(),
        #[cfg(feature = "parallel")]
        Execution::Parallel { jobs } => {
            use rayon::prelude::*;
            in_pool(jobs, || items.par_iter().map(f).collect())
        }
        #[cfg(not(feature = "parallel"))]
        Execution::Parallel { .. } => items.iter().map(f).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let xs: Vec<u64> = (0..1000).collect();
        let seq = map_ordered(&xs, Execution::Sequential, |x| x * x);
        for exec in [Execution::Parallel { jobs: 0 }, Execution::Parallel { jobs: 3 }] {
            assert_eq!(map_ordered(&xs, exec, |x| x * x), seq);
        }
        let r: Result<Vec<u64>, u64> = try_map_ordered(&xs, Execution::Parallel { jobs: 2 }, |&x| if x == 500 { Err(x) } else { Ok(x) });
        assert_eq!(r, Err(500));
        assert_eq!(Execution::from_jobs(1), Execution::Sequential);
    }
}
