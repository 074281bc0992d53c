use rayon::prelude::*;

/// Map `f` over `jobs` on `threads` workers, keeping input order. One
/// thread or fewer runs on the caller's thread.
pub(crate) fn map_ordered<J, T, F>(jobs: &[J], threads: usize, f: F) -> Vec<T>
where
    J: Sync,
    T: Send,
    F: Fn(&J) -> T + Sync + Send,
{
    if threads <= 1 {
        return jobs.iter().map(f).collect();
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool")
        .install(|| jobs.par_iter().map(f).collect())
}
