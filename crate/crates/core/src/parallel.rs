//! Deterministic data parallelism: results are collected by index, so the
//! output never depends on the number of workers or on scheduling.

use rayon::prelude::*;

use crate::{Error, Result};

/// Runs `f(i)` for `i in 0..n` on `threads` workers (0 = rayon default) and
/// returns the results in index order.
pub fn map_indexed<T, F>(n: usize, threads: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    let run = || (0..n).into_par_iter().map(&f).collect::<Result<Vec<T>>>();
    if threads == 1 {
        return (0..n).map(&f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Argument(format!("thread pool: {e}")))?;
    pool.install(run)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_independent_of_workers() {
        let f = |i: usize| Ok((i as f64).sqrt().sin());
        let a = map_indexed(1000, 1, f).unwrap();
        let b = map_indexed(1000, 4, f).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn errors_propagate() {
        let r: Result<Vec<u32>> =
            map_indexed(10, 2, |i| if i == 7 { Err(Error::Argument("x".into())) } else { Ok(1) });
        assert!(r.is_err());
    }
}
