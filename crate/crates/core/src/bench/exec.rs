//! Work-unit execution.
//!
//! Units are mapped in index order and collected into a `Vec`, so the
//! reduction that follows sees the same sequence whatever the thread count.

use crate::{Error, Result};

/// Map `f` over `0..n`. `threads == Some(1)` runs on the calling thread;
/// anything else uses the rayon pool when the `parallel` feature is on.
pub fn map_units<T, F>(n: usize, threads: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    if threads == Some(1) {
        return Ok((0..n).map(f).collect());
    }
    parallel_map(n, threads, f)
}

#[cfg(feature = "parallel")]
fn parallel_map<T, F>(n: usize, threads: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    match threads {
        None => Ok((0..n).into_par_iter().map(f).collect()),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(|| (0..n).into_par_iter().map(f).collect()))
        }
    }
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T, F>(n: usize, threads: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    if threads == Some(0) {
        return Err(Error::Config("threads must be positive".into()));
    }
    Ok((0..n).map(f).collect())
}
