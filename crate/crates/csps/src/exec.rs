//! Worker plumbing: data-parallel map over independent tasks with a
//! sequential fallback when the `parallel` feature is disabled.

/// Map `f` over `items`, preserving order. With the `parallel` feature the
/// work is spread across a rayon pool of `workers` threads (0 means rayon's
/// default, the available parallelism); without it the map is sequential.
/// Outputs are identical either way.
#[cfg(feature = "parallel")]
pub fn parallel_map<T, U, F>(items: Vec<T>, workers: usize, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    if workers == 1 {
        return items.into_iter().map(f).collect();
    }
    let run = || items.into_par_iter().map(&f).collect();
    if workers == 0 {
        run()
    } else {
        match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
            Ok(pool) => pool.install(run),
            Err(_) => run(),
        }
    }
}

#[cfg(not(feature = "parallel"))]
pub fn parallel_map<T, U, F>(items: Vec<T>, _workers: usize, f: F) -> Vec<U>
where
    F: Fn(T) -> U,
{
    items.into_iter().map(f).collect()
}

/// Always-sequential map, kept available in every build so benches can
/// compare the two execution paths.
pub fn sequential_map<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    F: Fn(T) -> U,
{
    items.into_iter().map(f).collect()
}
