//! Data-parallel helpers. With the `parallel` feature these fan out over
//! rayon's pool; without it they run the same closures sequentially. Every
//! helper returns results in input order so outputs are bit-identical
//! regardless of thread count.

use std::ops::Range;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Fixed chunk length for reductions; partial sums are merged in chunk order.
pub const REDUCE_CHUNK: usize = 64;

/// Number of independent jobs worth launching at once.
pub fn batch_size() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads().max(1)
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

pub fn map_range<U, F>(range: Range<usize>, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        range.into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        range.map(f).collect()
    }
}

pub fn map_slice<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Folds `items` in fixed-size chunks, then merges the chunk accumulators
/// left to right. The association order depends only on `items.len()`.
pub fn chunked_fold<T, A, I, F, M>(items: &[T], init: I, fold: F, merge: M) -> A
where
    T: Sync,
    A: Send,
    I: Fn() -> A + Sync + Send,
    F: Fn(&mut A, &T) + Sync + Send,
    M: Fn(&mut A, A),
{
    let run = |chunk: &[T]| {
        let mut acc = init();
        for item in chunk {
            fold(&mut acc, item);
        }
        acc
    };
    #[cfg(feature = "parallel")]
    let partials: Vec<A> = items.par_chunks(REDUCE_CHUNK).map(run).collect();
    #[cfg(not(feature = "parallel"))]
    let partials: Vec<A> = items.chunks(REDUCE_CHUNK).map(run).collect();

    let mut total = init();
    for p in partials {
        merge(&mut total, p);
    }
    total
}
