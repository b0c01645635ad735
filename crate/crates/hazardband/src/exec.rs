//! Index-parallel execution of embarrassingly parallel Monte Carlo work.
//!
//! Each work item is a pure function of its index (seeding included), so the
//! collected output is identical whether it is produced sequentially or on a
//! rayon pool of any size. With the `parallel` feature disabled the crate
//! falls back to the sequential path everywhere.

/// Map `f` over `0..n`, in parallel when the `parallel` feature is enabled.
pub fn run_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        run_indexed_par(n, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        run_indexed_seq(n, f)
    }
}

/// Sequential reference path; always available for benchmarking against the
/// parallel path.
pub fn run_indexed_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Rayon path; output order matches the index order.
#[cfg(feature = "parallel")]
pub fn run_indexed_par<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

/// Like [`run_indexed`], with a per-worker scratch value to avoid repeated
/// allocation in tight loops. The scratch must not influence the result.
pub fn run_indexed_scratch<T, S, I, F>(n: usize, init: I, f: F) -> Vec<T>
where
    T: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n)
            .into_par_iter()
            .map_init(&init, |scratch, i| f(scratch, i))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let mut scratch = init();
        (0..n).map(|i| f(&mut scratch, i)).collect()
    }
}
