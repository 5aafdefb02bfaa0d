//! Fan-out of independent samples to a fixed-size worker pool.

use rayon::prelude::*;

use crate::{CliError, Result};

/// `f(0), ..., f(n-1)` on `workers` threads, returned in index order.
pub fn map_samples<T, F>(workers: usize, n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::usage(format!("cannot start {workers} workers: {e}")))?;
    pool.install(|| (0..n).into_par_iter().map(&f).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_canonical() {
        let a = map_samples(1, 100, |i| Ok(i * i)).unwrap();
        let b = map_samples(4, 100, |i| Ok(i * i)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[7], 49);
    }
}
