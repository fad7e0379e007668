//! Execution policy for the data-parallel inner loops.
//!
//! Every parallel path in the crate goes through [`Exec::map_indexed`], which
//! collects results in index order. Reductions are done afterwards on the
//! collected vector, so parallel and sequential runs are bit-identical.
//!
//! Without the `parallel` feature, [`Exec::Parallel`] silently runs
//! sequentially.

/// How to run an indexed batch of independent jobs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    #[default]
    Sequential,
    Parallel,
}

impl Exec {
    /// Evaluate `f(0), .., f(n-1)` and return the results in index order.
    pub fn map_indexed<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Exec::Sequential => (0..n).map(f).collect(),
            Exec::Parallel => par_map(n, f),
        }
    }

    /// `Parallel` when the `parallel` feature is compiled in, else `Sequential`.
    pub fn best_available() -> Exec {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

#[cfg(feature = "parallel")]
fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Run `f` with at most `threads` worker threads.
///
/// `threads <= 1` runs `f` with [`Exec::Sequential`] on the calling thread.
/// Otherwise a dedicated pool is built and `f` receives [`Exec::Parallel`].
pub fn with_threads<R, F>(threads: usize, f: F) -> R
where
    R: Send,
    F: FnOnce(Exec) -> R + Send,
{
    if threads <= 1 {
        return f(Exec::Sequential);
    }
    run_in_pool(threads, f)
}

#[cfg(feature = "parallel")]
fn run_in_pool<R, F>(threads: usize, f: F) -> R
where
    R: Send,
    F: FnOnce(Exec) -> R + Send,
{
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(|| f(Exec::Parallel)),
        Err(_) => f(Exec::Sequential),
    }
}

#[cfg(not(feature = "parallel"))]
fn run_in_pool<R, F>(_threads: usize, f: F) -> R
where
    R: Send,
    F: FnOnce(Exec) -> R + Send,
{
    f(Exec::Sequential)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_preserves_order() {
        let seq = Exec::Sequential.map_indexed(1000, |i| (i as f64).sqrt());
        let par = Exec::Parallel.map_indexed(1000, |i| (i as f64).sqrt());
        assert_eq!(seq, par);
    }

    #[test]
    fn with_threads_single_is_sequential() {
        let exec = with_threads(1, |e| e);
        assert_eq!(exec, Exec::Sequential);
    }
}
