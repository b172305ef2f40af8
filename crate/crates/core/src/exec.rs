//! Execution strategy for the data-parallel loops (per-n sweep cells,
//! random-instance batches, exhaustive partition search).
//!
//! With the `parallel` feature the [`Execution::Parallel`] strategy runs on
//! rayon's pool; without it every strategy falls back to a plain sequential
//! loop. Results are always returned in input order, so output is identical
//! across strategies.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// Ordered map over a slice.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    /// Ordered map over `0..len`.
    pub fn map_range<R, F>(self, len: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            return (0..len).into_par_iter().map(f).collect();
        }
        (0..len).map(f).collect()
    }

    /// Minimum of `key(i)` over `0..len`, ties resolved to the smallest index.
    /// Returns `None` for an empty range.
    pub fn min_by_key_range<F>(self, len: u64, key: F) -> Option<(u64, f64)>
    where
        F: Fn(u64) -> f64 + Sync + Send,
    {
        let better = |a: (u64, f64), b: (u64, f64)| match a.1.total_cmp(&b.1) {
            std::cmp::Ordering::Less => a,
            std::cmp::Ordering::Greater => b,
            std::cmp::Ordering::Equal => {
                if a.0 <= b.0 {
                    a
                } else {
                    b
                }
            }
        };
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            return (0..len)
                .into_par_iter()
                .map(|i| (i, key(i)))
                .reduce_with(better);
        }
        (0..len).map(|i| (i, key(i))).reduce(better)
    }
}
