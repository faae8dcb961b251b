//! Data-parallel sweep helpers with a sequential fallback.
//!
//! The hot loops (nodal PDE updates, lattice layers, batched inner solves)
//! are expressed through these helpers. With the `parallel` feature enabled
//! they dispatch to rayon when the caller asks for it; without the feature
//! the crate builds with no rayon dependency and every sweep is sequential.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Fill `out[i] = f(i)` for every index.
pub(crate) fn fill_indexed<F>(out: &mut [f64], parallel: bool, f: F)
where
    F: Fn(usize) -> f64 + Sync,
{
    #[cfg(feature = "parallel")]
    if parallel {
        out.par_iter_mut().enumerate().for_each(|(i, v)| *v = f(i));
        return;
    }
    let _ = parallel;
    for (i, v) in out.iter_mut().enumerate() {
        *v = f(i);
    }
}

/// Apply `f` to disjoint row chunks of a row-major matrix buffer.
/// `f(first_row, chunk)` sees `chunk.len() = rows_in_chunk * row_len`.
pub(crate) fn for_each_row_chunk<F>(
    buf: &mut [f64],
    row_len: usize,
    rows_per_chunk: usize,
    parallel: bool,
    f: F,
) where
    F: Fn(usize, &mut [f64]) + Sync,
{
    assert!(row_len > 0 && rows_per_chunk > 0);
    let chunk = row_len * rows_per_chunk;
    #[cfg(feature = "parallel")]
    if parallel {
        buf.par_chunks_mut(chunk).enumerate().for_each(|(ci, c)| {
            f(ci * rows_per_chunk, c);
        });
        return;
    }
    let _ = parallel;
    for (ci, c) in buf.chunks_mut(chunk).enumerate() {
        f(ci * rows_per_chunk, c);
    }
}
