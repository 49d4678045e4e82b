//! Execution strategy for embarrassingly parallel maps.

use alloc::vec::Vec;

/// Maps `f` over `0..n` and returns the results in index order.
///
/// Implementations may evaluate out of order and concurrently; callers
/// reduce the returned vector sequentially, so results never depend on the
/// implementation.
pub trait Executor: Sync {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Runs everything on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).map(f).collect()
    }
}
