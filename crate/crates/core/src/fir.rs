//! Weighted least-squares FIR design for polynomial tracking in coloured
//! noise.
//!
//! The taps minimize the coloured-noise variance gain subject to moment
//! constraints that make the filter reproduce any polynomial of degree
//! below `k1` evaluated `q` samples before the newest one. `q = (M-1)/2`
//! gives the centred smoother, `q = -1` the one-step predictor.

use crate::noise::{coloured_covariance, MAX_DIFF_STAGES};
use nalgebra::{Cholesky, DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FirError {
    #[error("window length must be at least 1, got {0}")]
    BadWindow(usize),
    #[error("constraint order {k1} must be 1..={m} for an {m}-tap window")]
    BadOrder { k1: usize, m: usize },
    #[error("noise colouring order must be at most {limit}, got {0}", limit = MAX_DIFF_STAGES)]
    BadColouring(usize),
    #[error("reference delay must be finite, got {0}")]
    BadDelay(f64),
    #[error("normal equations are numerically singular")]
    IllConditioned,
}

/// Designed FIR filter: taps (newest sample first), reference delay, and
/// the design orders.
#[derive(Clone, Debug, PartialEq)]
pub struct FirFilter {
    pub taps: Vec<f64>,
    pub q: f64,
    pub k1: usize,
    pub k0: usize,
}

impl FirFilter {
    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    /// `Σ_m h[m] m^k`, the k-th design moment. Equals `q^k` by
    /// construction for `k < k1`.
    pub fn moment(&self, k: usize) -> f64 {
        self.taps
            .iter()
            .enumerate()
            .map(|(m, &h)| h * powk(m as f64, k))
            .sum()
    }
}

#[inline]
fn powk(base: f64, k: usize) -> f64 {
    if k == 0 {
        1.0
    } else {
        base.powi(k as i32)
    }
}

/// Whitened moment system for an `m`-tap window: the constraint Gram
/// matrix `Xᵀ P⁻¹ X` and the whitened regressors `P⁻¹ X`, where `X` holds
/// the monomials `m^k` and `P` the coloured-noise covariance.
pub fn whitened_moments(
    m: usize,
    k1: usize,
    k0: usize,
) -> Result<(DMatrix<f64>, DMatrix<f64>), FirError> {
    if m == 0 {
        return Err(FirError::BadWindow(m));
    }
    if k1 == 0 || k1 > m {
        return Err(FirError::BadOrder { k1, m });
    }
    if k0 > MAX_DIFF_STAGES {
        return Err(FirError::BadColouring(k0));
    }
    let p = coloured_covariance(k0, m);
    let chol = Cholesky::new(p).ok_or(FirError::IllConditioned)?;
    let x = DMatrix::from_fn(m, k1, |i, k| powk(i as f64, k));
    let y = chol.solve(&x);
    let gram = x.transpose() * &y;
    Ok((gram, y))
}

/// Design the minimum coloured-noise-gain FIR filter of length `m` that
/// reproduces polynomials of degree `< k1` at delay `q`, assuming the
/// input noise went through `k0` difference stages.
pub fn design_fir(m: usize, k1: usize, k0: usize, q: f64) -> Result<FirFilter, FirError> {
    if !q.is_finite() {
        return Err(FirError::BadDelay(q));
    }
    let (gram, y) = whitened_moments(m, k1, k0)?;
    let d = DVector::from_fn(k1, |k, _| powk(q, k));
    let chol = Cholesky::new(gram).ok_or(FirError::IllConditioned)?;
    let mut taps = &y * chol.solve(&d);
    // one refinement pass against the exact moment conditions
    let resid = DVector::from_fn(k1, |k, _| {
        powk(q, k)
            - taps
                .iter()
                .enumerate()
                .map(|(i, &h)| h * powk(i as f64, k))
                .sum::<f64>()
    });
    taps += &y * chol.solve(&resid);
    // With only the dc constraint the requested delay never enters the
    // solve, so record the delay the taps actually realize.
    let q = if k1 == 1 {
        taps.iter().enumerate().map(|(i, &h)| i as f64 * h).sum::<f64>()
            / taps.iter().sum::<f64>()
    } else {
        q
    };
    Ok(FirFilter {
        taps: taps.iter().copied().collect(),
        q,
        k1,
        k0,
    })
}

/// Centre delay of an `m`-tap window.
#[inline]
pub fn centred_delay(m: usize) -> f64 {
    (m as f64 - 1.0) / 2.0
}
