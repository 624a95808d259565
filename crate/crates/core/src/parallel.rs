//! Ordered parallel map over task indices.
//!
//! With the `parallel` feature (default) work runs on a rayon pool of the
//! requested size; without it, or with one worker, it runs on the calling
//! thread. Output order always follows task index, so results never depend
//! on scheduling.

/// Maps `f` over `0..n`; `workers == 0` means one worker per available core.
pub fn map_indexed<T, F>(n: usize, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if workers != 1 {
            use rayon::prelude::*;
            match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
                Ok(pool) => return pool.install(|| (0..n).into_par_iter().map(&f).collect()),
                Err(e) => log::warn!("could not start worker pool ({e}); running sequentially"),
            }
        }
    }
    #[cfg(not(feature = "parallel"))]
    if workers > 1 {
        log::debug!("built without the `parallel` feature; ignoring workers = {workers}");
    }
    (0..n).map(f).collect()
}

/// Whether this build can run tasks on more than one thread.
pub fn parallel_available() -> bool {
    cfg!(feature = "parallel")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        for workers in [0, 1, 3] {
            let v = map_indexed(100, workers, |i| i * i);
            assert_eq!(v, (0..100).map(|i| i * i).collect::<Vec<_>>());
        }
    }
}
