//! Data-parallel helpers with a deterministic sequential fallback.
//!
//! Parallelism is over disjoint output blocks only; reductions combine block
//! partials in index order, so results are bitwise identical regardless of
//! thread count, and identical between the `parallel` feature and the
//! sequential build. [`set_parallel`] provides a runtime switch used by the
//! benches to compare both execution modes in one process.

use std::sync::atomic::{AtomicBool, Ordering};

static PAR_ENABLED: AtomicBool = AtomicBool::new(true);

/// Enable or disable the rayon execution path at runtime. No-op without the
/// `parallel` feature.
pub fn set_parallel(enabled: bool) {
    PAR_ENABLED.store(enabled, Ordering::Relaxed);
}

pub fn parallel_enabled() -> bool {
    #[cfg(feature = "parallel")]
    {
        PAR_ENABLED.load(Ordering::Relaxed) && rayon::current_num_threads() > 1
    }
    #[cfg(not(feature = "parallel"))]
    {
        false
    }
}

/// Apply `f(block_index, block)` to consecutive chunks of `data`.
pub fn for_each_chunk_mut<T, F>(data: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    debug_assert!(chunk > 0);
    #[cfg(feature = "parallel")]
    if parallel_enabled() {
        use rayon::prelude::*;
        data.par_chunks_mut(chunk)
            .enumerate()
            .for_each(|(i, c)| f(i, c));
        return;
    }
    for (i, c) in data.chunks_mut(chunk).enumerate() {
        f(i, c);
    }
}

/// Map fixed-size blocks of `0..n_blocks` to partials and fold them in block
/// order. The fold is sequential, so the result does not depend on thread
/// scheduling.
pub fn map_fold_blocks<P, M, F>(n_blocks: usize, map: M, init: P, fold: F) -> P
where
    P: Send,
    M: Fn(usize) -> P + Sync + Send,
    F: Fn(P, P) -> P,
{
    #[cfg(feature = "parallel")]
    if parallel_enabled() {
        use rayon::prelude::*;
        let partials: Vec<P> = (0..n_blocks).into_par_iter().map(&map).collect();
        return partials.into_iter().fold(init, fold);
    }
    (0..n_blocks).map(map).fold(init, fold)
}
