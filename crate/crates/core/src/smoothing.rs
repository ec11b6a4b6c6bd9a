//! Forward-only (FOSS) and forward-backward (FBSS) spatial smoothing.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::numerics::ComplexMatrix;
use crate::{Error, Result};

/// Smoothing applied before subspace extraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Smoothing {
    None,
    Foss,
    Fbss,
}

impl Smoothing {
    pub fn as_str(self) -> &'static str {
        match self {
            Smoothing::None => "none",
            Smoothing::Foss => "foss",
            Smoothing::Fbss => "fbss",
        }
    }
}

impl fmt::Display for Smoothing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Smoothing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" | "plain" => Ok(Smoothing::None),
            "foss" => Ok(Smoothing::Foss),
            "fbss" => Ok(Smoothing::Fbss),
            _ => Err(Error::InvalidConfig("smoothing must be none, foss or fbss")),
        }
    }
}

/// Horizontally stacked subarray blocks.
#[derive(Debug, Clone)]
pub struct SmoothedStack {
    pub mode: Smoothing,
    pub m: usize,
    pub p: usize,
    pub snapshots: usize,
    pub stack: ComplexMatrix,
}

fn subarrays(y: &ComplexMatrix, m: usize) -> Result<Vec<ComplexMatrix>> {
    let n = y.rows();
    if m == 0 || m > n {
        return Err(Error::SubarrayTooLarge { m, n });
    }
    Ok((0..=n - m).map(|p| y.row_block(p, p + m)).collect())
}

/// `[Y(1), …, Y(P)]` where `Y(p)` holds rows `p..p+M-1`.
pub fn foss_stack(y: &ComplexMatrix, m: usize) -> Result<SmoothedStack> {
    let blocks = subarrays(y, m)?;
    Ok(SmoothedStack {
        mode: Smoothing::Foss,
        m,
        p: blocks.len(),
        snapshots: y.cols(),
        stack: ComplexMatrix::hstack(&blocks)?,
    })
}

/// `(1/√2) [Y(1), …, Y(P), J conj(Y(1)), …, J conj(Y(P))]` with `J` the
/// exchange matrix.
pub fn fbss_stack(y: &ComplexMatrix, m: usize) -> Result<SmoothedStack> {
    let mut blocks = subarrays(y, m)?;
    let p = blocks.len();
    let backward: Vec<ComplexMatrix> = blocks
        .iter()
        .map(|b| ComplexMatrix::from_fn(m, b.cols(), |i, j| b[(m - 1 - i, j)].conj()))
        .collect();
    blocks.extend(backward);
    let stack = ComplexMatrix::hstack(&blocks)?.scale(core::f64::consts::FRAC_1_SQRT_2);
    Ok(SmoothedStack {
        mode: Smoothing::Fbss,
        m,
        p,
        snapshots: y.cols(),
        stack,
    })
}

/// Builds the stack for `mode`; `None` returns the data itself as a
/// single-block stack.
pub fn smoothed_stack(y: &ComplexMatrix, mode: Smoothing, m: usize) -> Result<SmoothedStack> {
    match mode {
        Smoothing::None => Ok(SmoothedStack {
            mode,
            m: y.rows(),
            p: 1,
            snapshots: y.cols(),
            stack: y.clone(),
        }),
        Smoothing::Foss => foss_stack(y, m),
        Smoothing::Fbss => fbss_stack(y, m),
    }
}

/// `(1/(L P)) stack stackᴴ`.
pub fn smoothed_sample_covariance(stack: &SmoothedStack) -> ComplexMatrix {
    let norm = (stack.snapshots * stack.p) as f64;
    stack.stack.gram_rows().scale(1.0 / norm).hermitian_part()
}

/// `J conj(R) J`.
pub fn persymmetric_flip(r: &ComplexMatrix) -> ComplexMatrix {
    let (rows, cols) = r.shape();
    ComplexMatrix::from_fn(rows, cols, |i, j| r[(rows - 1 - i, cols - 1 - j)].conj())
}
