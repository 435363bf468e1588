//! Data-parallel row loops with a sequential fallback.
//!
//! Work is split across disjoint chunks of the output buffer; every chunk is
//! filled by the same scalar code in the same order as the sequential path,
//! so results are bitwise identical whether or not rayon is engaged and for
//! any thread count. Reductions (norms, objectives) stay sequential for the
//! same reason.
//!
//! The `parallel` cargo feature compiles the rayon path in; the runtime
//! switch below decides whether it is used, which lets a single binary run
//! single-threaded by default and turn parallelism on via flag.

use std::sync::atomic::{AtomicBool, Ordering};

static ENABLED: AtomicBool = AtomicBool::new(false);

/// Turn the rayon path on or off at runtime. No-op unless the crate was
/// built with the `parallel` feature.
pub fn set_enabled(enabled: bool) {
    ENABLED.store(enabled, Ordering::Relaxed);
}

pub fn is_enabled() -> bool {
    cfg!(feature = "parallel") && ENABLED.load(Ordering::Relaxed)
}

/// Apply `f` to each `chunk`-sized slice of `out`, indexed by chunk number.
pub fn for_each_chunk<T, F>(out: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync,
{
    #[cfg(feature = "parallel")]
    if is_enabled() {
        use rayon::prelude::*;
        out.par_chunks_mut(chunk)
            .enumerate()
            .for_each(|(i, c)| f(i, c));
        return;
    }
    for_each_chunk_seq(out, chunk, f);
}

/// Sequential twin of [`for_each_chunk`], exposed so benchmarks can compare
/// both paths in one build.
pub fn for_each_chunk_seq<T, F>(out: &mut [T], chunk: usize, f: F)
where
    F: Fn(usize, &mut [T]),
{
    for (i, c) in out.chunks_mut(chunk).enumerate() {
        f(i, c);
    }
}
