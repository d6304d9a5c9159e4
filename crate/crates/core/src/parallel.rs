//! Data-parallel helpers. With the `parallel` feature these fan out on the
//! rayon pool; without it they run sequentially. Results always come back in
//! input order, so output never depends on scheduling.

#[cfg(feature = "parallel")]
mod imp {
    use rayon::prelude::*;

    pub fn map_indexed<R, F>(n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        (0..n).into_par_iter().map(f).collect()
    }

    pub fn map_slice<T, R, F>(items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        items.par_iter().map(f).collect()
    }

    pub fn count_indexed<F>(n: usize, f: F) -> usize
    where
        F: Fn(usize) -> bool + Sync + Send,
    {
        (0..n).into_par_iter().filter(|&k| f(k)).count()
    }
}

#[cfg(not(feature = "parallel"))]
mod imp {
    pub fn map_indexed<R, F>(n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        (0..n).map(f).collect()
    }

    pub fn map_slice<T, R, F>(items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        items.iter().map(f).collect()
    }

    pub fn count_indexed<F>(n: usize, f: F) -> usize
    where
        F: Fn(usize) -> bool + Sync + Send,
    {
        (0..n).filter(|&k| f(k)).count()
    }
}

pub use imp::{count_indexed, map_indexed, map_slice};

/// Whether this build fans out across threads.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
