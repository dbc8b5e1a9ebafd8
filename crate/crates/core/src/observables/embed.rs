use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::SeriesMatrix;
use crate::error::{Error, Result};

/// Delay embedding with `delays` rows per input row and a dual shifted
/// `dual_shift` samples into the past.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingPlan {
    pub delays: usize,
    pub dual_shift: usize,
}

impl EmbeddingPlan {
    /// Snapshot count `m = N − k − s` for a source of length `source_len`.
    pub fn column_count(&self, source_len: usize) -> Result<usize> {
        if self.delays == 0 {
            return Err(Error::invalid("delay count must be ≥ 1"));
        }
        let needed = self.delays + self.dual_shift + 1;
        if source_len < needed {
            return Err(Error::InsufficientLength { needed, available: source_len });
        }
        Ok(source_len - self.delays - self.dual_shift)
    }
}

/// Builds the Hankel data matrices `(X, Y, Z)`.
///
/// With `k` delays, shift `s` and `m = N − k − s`, the columns are indexed by
/// `t = s..s+m` (offset by the series' own `t_start`):
/// X column t is `f(t..t+k)`, Y column t is `f(t+1..t+k+1)` and Z column t is
/// `f(t−s..t−s+k)`. Multi-row series stack one delay block per row.
pub fn hankel_embed(
    series: &SeriesMatrix,
    plan: &EmbeddingPlan,
) -> Result<(SeriesMatrix, SeriesMatrix, SeriesMatrix)> {
    let n = series.ncols();
    let m = plan.column_count(n)?;
    let k = plan.delays;
    let s = plan.dual_shift;
    let src = series.view();
    let p = series.nrows();
    let h = DMatrix::from_fn(p * k, n - k + 1, |row, c| src[(row / k, c + row % k)]);
    let h = Arc::new(h);
    let label = format!("{}-hankel{k}", series.label());
    let t0 = series.t_start();
    let x = SeriesMatrix::from_parts(Arc::clone(&h), s, m, t0 + s, label.clone())?;
    let y = x.advanced(1)?;
    let z = SeriesMatrix::from_parts(h, 0, m, t0 + s, label)?;
    Ok((x, y, z))
}

/// Plain snapshot pair: X holds samples `0..N−1`, Y holds `1..N`, both labelled
/// with X's times.
pub fn snapshot_pair(series: &SeriesMatrix) -> Result<(SeriesMatrix, SeriesMatrix)> {
    let n = series.ncols();
    if n < 2 {
        return Err(Error::InsufficientLength { needed: 2, available: n });
    }
    let x = series.window(series.t_start(), n - 1)?;
    let y = x.advanced(1)?;
    Ok((x, y))
}

/// Pointwise map applied to a dual observable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DualTransform {
    Identity,
    Power(i32),
}

impl DualTransform {
    fn apply(self, z: Complex64) -> Complex64 {
        match self {
            Self::Identity => z,
            Self::Power(p) => z.powi(p),
        }
    }
}

/// Builds a dual observable from past values of `series`.
///
/// Column t stacks `φ(f(t − shift − j))` for `j = extra_shifts, …, 0` (oldest
/// first), each `φ` in `augment` (identity when empty), and each row of
/// `series`. The result covers `t = t_start + shift + extra_shifts ..`.
pub fn build_dual(
    series: &SeriesMatrix,
    shift: usize,
    augment: &[DualTransform],
    extra_shifts: usize,
) -> Result<SeriesMatrix> {
    let n = series.ncols();
    let lag = shift + extra_shifts;
    if n <= lag {
        return Err(Error::InsufficientLength { needed: lag + 1, available: n });
    }
    let transforms: &[DualTransform] = if augment.is_empty() { &[DualTransform::Identity] } else { augment };
    let p = series.nrows();
    let q = transforms.len();
    let src = series.view();
    let cols = n - lag;
    let rows = (extra_shifts + 1) * q * p;
    let z = DMatrix::from_fn(rows, cols, |row, c| {
        let block = row / (q * p);
        let phi = transforms[(row / p) % q];
        let i = row % p;
        let j = extra_shifts - block;
        // Local column c is time t_start + lag + c.
        phi.apply(src[(i, c + lag - shift - j)])
    });
    SeriesMatrix::new(z, series.t_start() + lag, format!("{}-dual{shift}", series.label()))
}
