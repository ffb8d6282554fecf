//! Sequential or rayon-backed evaluation of document-partitioned work.
//!
//! Parallel runs split documents into fixed-size chunks and merge the chunk
//! results in chunk order, so their output does not depend on the number of
//! worker threads. Sequential runs process the whole range as one chunk.

use std::ops::Range;

/// Documents per parallel work item.
pub const CHUNK_DOCS: usize = 128;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Execution {
    #[default]
    Sequential,
    /// Runs on the current rayon pool. Without the `parallel` feature this
    /// falls back to chunked sequential evaluation with the same result.
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

    /// Applies `f` to consecutive ranges covering `0..n` and returns the
    /// results in range order.
    pub fn map_ranges<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(Range<usize>) -> T + Sync + Send,
    {
        match self {
            Execution::Sequential => vec![f(0..n)],
            Execution::Parallel => {
                let ranges: Vec<Range<usize>> = (0..n)
                    .step_by(CHUNK_DOCS)
                    .map(|s| s..(s + CHUNK_DOCS).min(n))
                    .collect();
                #[cfg(feature = "parallel")]
                {
                    use rayon::prelude::*;
                    ranges.into_par_iter().map(f).collect()
                }
                #[cfg(not(feature = "parallel"))]
                {
                    ranges.into_iter().map(f).collect()
                }
            }
        }
    }

    /// Maps `f` over `items`, in parallel when enabled.
    pub fn map<I, T, F>(self, items: Vec<I>, f: F) -> Vec<T>
    where
        I: Send,
        T: Send,
        F: Fn(I) -> T + Sync + Send,
    {
        match self {
            Execution::Sequential => items.into_iter().map(f).collect(),
            Execution::Parallel => {
                #[cfg(feature = "parallel")]
                {
                    use rayon::prelude::*;
                    items.into_par_iter().map(f).collect()
                }
                #[cfg(not(feature = "parallel"))]
                {
                    items.into_iter().map(f).collect()
                }
            }
        }
    }
}
