//! Order-preserving map over independent samples, parallel when the `parallel`
//! feature is enabled and sequential otherwise.

/// How a sweep is executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    #[default]
    Parallel,
    Sequential,
}

/// Maps `f` over `items`, preserving order. `Exec::Parallel` falls back to a
/// sequential loop when the crate is built without the `parallel` feature.
pub fn map<T, R, F>(exec: Exec, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => {
            use rayon::prelude::*;
            items.par_iter().map(f).collect()
        }
        _ => items.iter().map(f).collect(),
    }
}

/// Sums `f` over `items` in a fixed order so results do not depend on thread count.
pub fn sum_ordered<T, F, V>(exec: Exec, items: &[T], f: F) -> V
where
    T: Sync,
    V: Send + Default + std::ops::AddAssign,
    F: Fn(&T) -> V + Sync + Send,
{
    let mut acc = V::default();
    for v in map(exec, items, f) {
        acc += v;
    }
    acc
}

/// Number of worker threads a parallel sweep would use.
pub fn current_num_threads() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}
