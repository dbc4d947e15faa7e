//! Order-preserving data parallelism.
//!
//! Sweeps and Monte Carlo batches go through [`map_indexed`]. With the
//! `parallel` feature the work is spread over the rayon pool; without it, or
//! with [`Execution::Sequential`], it runs in a plain loop. Results are always
//! returned in input order, so outputs never depend on scheduling.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    /// Parallel when the feature is compiled in, otherwise sequential.
    #[default]
    Auto,
    Sequential,
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && !matches!(self, Execution::Sequential)
    }
}

pub fn map_indexed<T, R, F>(items: &[T], exec: Execution, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return items.par_iter().enumerate().map(|(i, x)| f(i, x)).collect();
    }
    let _ = exec;
    items.iter().enumerate().map(|(i, x)| f(i, x)).collect()
}

/// Like [`map_indexed`] but fallible. The first error in input order wins,
/// whichever finished first.
pub fn try_map_indexed<T, R, E, F>(items: &[T], exec: Execution, f: F) -> Result<Vec<R>, E>
where
    T: Sync,
    R: Send,
    E: Send,
    F: Fn(usize, &T) -> Result<R, E> + Sync + Send,
{
    map_indexed(items, exec, f).into_iter().collect()
}

/// Sizes the global pool. `0` keeps rayon's default. Only the first call has
/// an effect; later calls return `false`.
pub fn set_threads(n: usize) -> bool {
    #[cfg(feature = "parallel")]
    {
        if n == 0 {
            return true;
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_ok()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = n;
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let xs: Vec<u64> = (0..1000).collect();
        let seq = map_indexed(&xs, Execution::Sequential, |i, x| (i as u64) * x);
        let par = map_indexed(&xs, Execution::Parallel, |i, x| (i as u64) * x);
        assert_eq!(seq, par);
    }

    #[test]
    fn first_error_in_order() {
        let xs: Vec<i32> = (0..100).collect();
        let r: Result<Vec<i32>, i32> =
            try_map_indexed(&xs, Execution::Parallel, |_, &x| if x % 7 == 6 { Err(x) } else { Ok(x) });
        assert_eq!(r, Err(6));
    }
}
