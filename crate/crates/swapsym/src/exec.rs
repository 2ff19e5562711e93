//! Execution-strategy dispatch for the data-parallel kernels.
//!
//! With the default `parallel` feature the per-path work is spread over the
//! rayon pool; without it the same kernels run on one thread. Both paths
//! produce bit-identical results because all randomness is keyed per path
//! (see [`crate::rng`]) and reductions happen in index order afterwards.

/// How to run a per-path kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecMode {
    /// Single-threaded loop; always available.
    Sequential,
    /// Rayon work-stealing loop.
    #[cfg(feature = "parallel")]
    Parallel,
}

impl Default for ExecMode {
    #[cfg(feature = "parallel")]
    fn default() -> Self {
        ExecMode::Parallel
    }
    #[cfg(not(feature = "parallel"))]
    fn default() -> Self {
        ExecMode::Sequential
    }
}

/// Map `f` over `0..n`, collecting results in index order.
pub fn map_indexed<T, F>(n: usize, mode: ExecMode, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match mode {
        ExecMode::Sequential => (0..n).map(f).collect(),
        #[cfg(feature = "parallel")]
        ExecMode::Parallel => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(f).collect()
        }
    }
}

/// Split `data` into disjoint consecutive chunks of `chunk` elements and call
/// `f(chunk_index, chunk_slice)` for each.
pub fn fill_chunks<T, F>(data: &mut [T], chunk: usize, mode: ExecMode, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    assert!(chunk > 0 && data.len() % chunk == 0, "uneven chunking");
    match mode {
        ExecMode::Sequential => {
            for (i, c) in data.chunks_mut(chunk).enumerate() {
                f(i, c);
            }
        }
        #[cfg(feature = "parallel")]
        ExecMode::Parallel => {
            use rayon::prelude::*;
            data.par_chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
        }
    }
}

/// Cap the rayon worker count (first call wins). No-op without the
/// `parallel` feature or when `n` is `None`.
pub fn configure_threads(n: Option<usize>) {
    #[cfg(feature = "parallel")]
    if let Some(k) = n {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = n;
}
