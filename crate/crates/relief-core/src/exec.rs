//! Row-wise execution helpers.
//!
//! Every data-parallel kernel in this crate is expressed as "fill each output
//! row independently" or "reduce each row to one partial, then fold partials
//! in row order". A whole row is always produced by a single closure call with
//! the same arithmetic as the sequential path, so results are bit-identical
//! for any thread count, and identical between the `parallel` feature and the
//! sequential fallback.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Exec {
    Seq,
    #[cfg(feature = "parallel")]
    Par,
}

impl Exec {
    /// Default execution mode: parallel when the feature is enabled.
    pub(crate) fn auto() -> Exec {
        #[cfg(feature = "parallel")]
        {
            Exec::Par
        }
        #[cfg(not(feature = "parallel"))]
        {
            Exec::Seq
        }
    }
}

/// Fill `out` row by row; `f(row_index, row_slice)`.
pub(crate) fn fill_rows<F>(exec: Exec, out: &mut [f64], width: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync,
{
    match exec {
        Exec::Seq => {
            for (v, row) in out.chunks_mut(width).enumerate() {
                f(v, row);
            }
        }
        #[cfg(feature = "parallel")]
        Exec::Par => {
            out.par_chunks_mut(width)
                .enumerate()
                .for_each(|(v, row)| f(v, row));
        }
    }
}

/// Fill two same-shape buffers row by row; `f(row_index, row_a, row_b)`.
pub(crate) fn fill_rows2<F>(exec: Exec, a: &mut [f64], b: &mut [f64], width: usize, f: F)
where
    F: Fn(usize, &mut [f64], &mut [f64]) + Sync,
{
    match exec {
        Exec::Seq => {
            for (v, (ra, rb)) in a.chunks_mut(width).zip(b.chunks_mut(width)).enumerate() {
                f(v, ra, rb);
            }
        }
        #[cfg(feature = "parallel")]
        Exec::Par => {
            a.par_chunks_mut(width)
                .zip(b.par_chunks_mut(width))
                .enumerate()
                .for_each(|(v, (ra, rb))| f(v, ra, rb));
        }
    }
}

/// Fill three same-shape buffers row by row.
pub(crate) fn fill_rows3<F>(
    exec: Exec,
    a: &mut [f64],
    b: &mut [f64],
    c: &mut [f64],
    width: usize,
    f: F,
) where
    F: Fn(usize, &mut [f64], &mut [f64], &mut [f64]) + Sync,
{
    match exec {
        Exec::Seq => {
            for (v, ((ra, rb), rc)) in a
                .chunks_mut(width)
                .zip(b.chunks_mut(width))
                .zip(c.chunks_mut(width))
                .enumerate()
            {
                f(v, ra, rb, rc);
            }
        }
        #[cfg(feature = "parallel")]
        Exec::Par => {
            a.par_chunks_mut(width)
                .zip(b.par_chunks_mut(width))
                .zip(c.par_chunks_mut(width))
                .enumerate()
                .for_each(|(v, ((ra, rb), rc))| f(v, ra, rb, rc));
        }
    }
}

/// Reduce: one partial per row (each row summed left to right inside `f`),
/// partials folded in row order. The fold order is fixed regardless of
/// thread count.
pub(crate) fn sum_rows<F>(exec: Exec, height: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let partials: Vec<f64> = match exec {
        Exec::Seq => (0..height).map(&f).collect(),
        #[cfg(feature = "parallel")]
        Exec::Par => (0..height).into_par_iter().map(&f).collect(),
    };
    partials.iter().sum()
}

/// Fill two buffers row by row while collecting one partial per row;
/// returns the partials folded in row order.
pub(crate) fn fill_rows2_sum<F>(exec: Exec, a: &mut [f64], b: &mut [f64], width: usize, f: F) -> f64
where
    F: Fn(usize, &mut [f64], &mut [f64]) -> f64 + Sync,
{
    let partials: Vec<f64> = match exec {
        Exec::Seq => a
            .chunks_mut(width)
            .zip(b.chunks_mut(width))
            .enumerate()
            .map(|(v, (ra, rb))| f(v, ra, rb))
            .collect(),
        #[cfg(feature = "parallel")]
        Exec::Par => a
            .par_chunks_mut(width)
            .zip(b.par_chunks_mut(width))
            .enumerate()
            .map(|(v, (ra, rb))| f(v, ra, rb))
            .collect(),
    };
    partials.iter().sum()
}
