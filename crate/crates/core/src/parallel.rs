//! Index-parallel map with a sequential fallback.
//!
//! With the `parallel` feature, work is spread over a rayon pool of the
//! requested size (`0` means one thread per core). Output order always
//! follows the index, and each task must derive its own RNG stream from the
//! index, so results do not depend on the worker count.

/// Applies `f` to `0..n` on up to `workers` threads.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: usize, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    if workers == 1 || n <= 1 {
        return map_indexed_sequential(n, f);
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(|| (0..n).into_par_iter().map(&f).collect()),
        Err(_) => map_indexed_sequential(n, f),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: usize, _workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    map_indexed_sequential(n, f)
}

pub fn map_indexed_sequential<T, F: Fn(usize) -> T>(n: usize, f: F) -> Vec<T> {
    (0..n).map(f).collect()
}

/// Worker count actually used for a request of `workers`.
pub fn effective_workers(workers: usize) -> usize {
    #[cfg(feature = "parallel")]
    {
        if workers == 0 {
            return rayon::current_num_threads();
        }
        workers
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = workers;
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree_in_order() {
        let f = |i: usize| (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) >> 7;
        let seq = map_indexed_sequential(257, f);
        assert_eq!(map_indexed(257, 3, f), seq);
        assert_eq!(map_indexed(257, 0, f), seq);
        assert!(map_indexed(0, 4, f).is_empty());
    }
}
