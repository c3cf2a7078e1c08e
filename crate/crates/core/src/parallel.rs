//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) these dispatch to rayon; without it
//! they run on the calling thread. Output order is always the input order, so
//! callers that reduce the returned vector sequentially get bitwise-identical
//! results regardless of thread count.

#[cfg(feature = "parallel")]
pub fn is_parallel_available() -> bool {
    true
}

#[cfg(not(feature = "parallel"))]
pub fn is_parallel_available() -> bool {
    false
}

/// Map `f` over `0..count`, preserving index order.
#[cfg(feature = "parallel")]
pub fn map_indexed<U, F>(count: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    use rayon::prelude::*;
    (0..count).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<U, F>(count: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U,
{
    (0..count).map(f).collect()
}

/// Sequential reference implementation, available in every build.
pub fn map_indexed_seq<U, F>(count: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U,
{
    (0..count).map(f).collect()
}

/// Apply `f` to every element in place, preserving index order of results.
#[cfg(feature = "parallel")]
pub fn map_mut<T, U, F>(items: &mut [T], f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(usize, &mut T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter_mut().enumerate().map(|(i, t)| f(i, t)).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_mut<T, U, F>(items: &mut [T], f: F) -> Vec<U>
where
    F: Fn(usize, &mut T) -> U,
{
    map_mut_seq(items, f)
}

pub fn map_mut_seq<T, U, F>(items: &mut [T], f: F) -> Vec<U>
where
    F: Fn(usize, &mut T) -> U,
{
    items.iter_mut().enumerate().map(|(i, t)| f(i, t)).collect()
}

/// Run `op` inside a pool of `threads` workers (`None` = global pool).
#[cfg(feature = "parallel")]
pub fn with_threads<R, F>(threads: Option<usize>, op: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    match threads {
        Some(k) => match rayon::ThreadPoolBuilder::new().num_threads(k.max(1)).build() {
            Ok(pool) => pool.install(op),
            Err(_) => op(),
        },
        None => op(),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn with_threads<R, F>(_threads: Option<usize>, op: F) -> R
where
    F: FnOnce() -> R,
{
    op()
}
