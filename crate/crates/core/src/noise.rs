//! First-difference colouring chains and the second-order statistics they
//! impose on white measurement noise.
//!
//! A chain of `k0` backward differences has impulse response given by
//! alternating binomial weights. White noise passed through it becomes
//! coloured with a short triangular-band autocorrelation; both the raw
//! sequence and its unit-diagonal covariance are provided here.

use crate::poly::binomial;
use nalgebra::DMatrix;

/// Largest supported number of difference stages.
pub const MAX_DIFF_STAGES: usize = 12;

#[inline]
fn alt_sign(m: u64) -> f64 {
    if m % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Impulse response of a cascade of `k0` backward-difference stages,
/// `(1 - z^{-1})^{k0}` expanded into `k0 + 1` alternating binomial taps.
pub fn diff_chain_impulse(k0: usize) -> Vec<f64> {
    assert!(k0 <= MAX_DIFF_STAGES);
    (0..=k0 as u64)
        .map(|m| alt_sign(m) * binomial(k0 as u64, m))
        .collect()
}

/// Raw autocorrelation of unit-variance white noise after `k0` difference
/// stages. Lag zero carries the full variance amplification of the chain;
/// lags beyond `k0` vanish.
pub fn autocorrelation(k0: usize, lag: i64) -> f64 {
    assert!(k0 <= MAX_DIFF_STAGES);
    let l = lag.unsigned_abs();
    if l > k0 as u64 {
        return 0.0;
    }
    alt_sign(l) * binomial(2 * k0 as u64, k0 as u64 + l)
}

/// Covariance of chain-coloured noise across an `m`-sample window,
/// normalized to a unit diagonal.
pub fn coloured_covariance(k0: usize, m: usize) -> DMatrix<f64> {
    let r0 = autocorrelation(k0, 0);
    DMatrix::from_fn(m, m, |i, j| autocorrelation(k0, i as i64 - j as i64) / r0)
}

/// Power spectral density of the colouring chain at angular frequency
/// `omega`, for unit-variance white input.
pub fn chain_psd(k0: usize, omega: f64) -> f64 {
    (4.0 * (0.5 * omega).sin().powi(2)).powi(k0 as i32)
}
