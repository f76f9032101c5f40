//! Streaming realization of a smoother-predictor pair on one shared
//! state.
//!
//! Raw phase readings live on the principal branch, so consecutive
//! samples can jump by near 2 pi. Each incoming value is moved to the
//! branch closest to a one-step-ahead prediction before it enters the
//! filter state; the smoothed estimate and the next prediction then come
//! from the same state vector through two output maps.

use crate::fir::FirFilter;
use crate::iir::IirFilter;
use crate::signal::wrap;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RealizeError {
    #[error("numerator must contain at least one nonzero coefficient")]
    EmptyNumerator,
    #[error("denominator must start with a nonzero leading coefficient")]
    BadDenominator,
    #[error("estimator and predictor must share one denominator")]
    MismatchedDenominators,
    #[error("steady-state system is singular (pole at z = 1)")]
    SteadyStateSingular,
}

/// Which output feeds the next branch decision.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnwrapSource {
    /// One-step-ahead prediction, the intended configuration.
    #[default]
    Predictor,
    /// Delayed smoothed estimate, kept for degradation studies.
    Estimator,
}

/// One processed sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrackStep {
    /// Input after relocation to the predicted branch.
    pub unwrapped: f64,
    /// Smoothed output, valid for the sample `q` steps back.
    pub estimate: f64,
    /// One-step-ahead prediction used to unwrap the next input.
    pub prediction: f64,
}

fn trim_trailing_zeros(c: &[f64]) -> &[f64] {
    let mut n = c.len();
    while n > 0 && c[n - 1] == 0.0 {
        n -= 1;
    }
    &c[..n]
}

/// Shared-state tandem filter with predictor-assisted branch tracking.
///
/// The state follows the companion recurrence of the common denominator;
/// an FIR pair is the special case of an all-zero feedback row. Before
/// the first sample the state is held at its steady-state response to
/// that sample, so a constant input passes through with no transient.
#[derive(Clone, Debug)]
pub struct Tracker {
    a_tail: Vec<f64>,
    c_est: Vec<f64>,
    c_prd: Vec<f64>,
    w0: Vec<f64>,
    w: Vec<f64>,
    predicted: f64,
    prev_unwrapped: f64,
    started: bool,
    unwrap_from: UnwrapSource,
    corrections: u64,
}

impl Tracker {
    /// Build from explicit transfer-function coefficients in powers of
    /// `z^-1`. Both numerators are taken over `a`; trailing zero
    /// coefficients are ignored.
    pub fn from_coefficients(
        b_est: &[f64],
        b_prd: &[f64],
        a: &[f64],
        unwrap_from: UnwrapSource,
    ) -> Result<Self, RealizeError> {
        let a = trim_trailing_zeros(a);
        if a.is_empty() || a[0] == 0.0 {
            return Err(RealizeError::BadDenominator);
        }
        let a0 = a[0];
        let be = trim_trailing_zeros(b_est);
        let bp = trim_trailing_zeros(b_prd);
        if be.is_empty() || bp.is_empty() {
            return Err(RealizeError::EmptyNumerator);
        }
        let dim = be.len().max(bp.len()).max(a.len() - 1);
        let a_tail: Vec<f64> = a[1..].iter().map(|&v| v / a0).collect();
        let c_est: Vec<f64> = be.iter().map(|&v| v / a0).collect();
        let c_prd: Vec<f64> = bp.iter().map(|&v| v / a0).collect();

        let w0 = if a_tail.is_empty() {
            vec![1.0; dim]
        } else {
            let mut m = DMatrix::<f64>::identity(dim, dim);
            for (j, &aj) in a_tail.iter().enumerate() {
                m[(0, j)] += aj;
            }
            for i in 1..dim {
                m[(i, i - 1)] -= 1.0;
            }
            let mut rhs = DVector::zeros(dim);
            rhs[0] = 1.0;
            let sol = m
                .lu()
                .solve(&rhs)
                .ok_or(RealizeError::SteadyStateSingular)?;
            if !sol.iter().all(|v| v.is_finite()) {
                return Err(RealizeError::SteadyStateSingular);
            }
            sol.iter().copied().collect()
        };

        Ok(Self {
            a_tail,
            c_est,
            c_prd,
            w0,
            w: vec![0.0; dim],
            predicted: 0.0,
            prev_unwrapped: 0.0,
            started: false,
            unwrap_from,
            corrections: 0,
        })
    }

    /// Pair of window designs sharing one delay line.
    pub fn from_fir(
        est: &FirFilter,
        prd: &FirFilter,
        unwrap_from: UnwrapSource,
    ) -> Result<Self, RealizeError> {
        Self::from_coefficients(&est.taps, &prd.taps, &[1.0], unwrap_from)
    }

    /// Pair of rational designs; the denominators must agree.
    pub fn from_iir(
        est: &IirFilter,
        prd: &IirFilter,
        unwrap_from: UnwrapSource,
    ) -> Result<Self, RealizeError> {
        if est.a.len() != prd.a.len() {
            return Err(RealizeError::MismatchedDenominators);
        }
        let scale = est.a.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for (x, y) in est.a.iter().zip(&prd.a) {
            if (x - y).abs() > 1e-12 * scale {
                return Err(RealizeError::MismatchedDenominators);
            }
        }
        Self::from_coefficients(&est.b, &prd.b, &est.a, unwrap_from)
    }

    /// State dimension.
    pub fn order(&self) -> usize {
        self.w.len()
    }

    /// Number of 2 pi discontinuities inserted into the unwrapped input
    /// sequence. Zero while the prediction stays within half a turn of
    /// each incoming sample; a nonzero count marks lost branch lock.
    pub fn corrections(&self) -> u64 {
        self.corrections
    }

    /// Forget all history; the next sample primes the state again.
    pub fn reset(&mut self) {
        self.started = false;
        self.corrections = 0;
    }

    /// Process one raw principal-branch reading.
    pub fn step(&mut self, raw: f64) -> TrackStep {
        if !self.started {
            for (w, &w0) in self.w.iter_mut().zip(&self.w0) {
                *w = w0 * raw;
            }
            self.predicted = raw;
            self.prev_unwrapped = raw;
            self.started = true;
        }
        let unwrapped = self.predicted + wrap(raw - self.predicted);
        if (unwrapped - self.prev_unwrapped).abs() > PI {
            self.corrections += 1;
        }
        self.prev_unwrapped = unwrapped;

        let mut head = unwrapped;
        for (&aj, &wj) in self.a_tail.iter().zip(self.w.iter()) {
            head -= aj * wj;
        }
        for i in (1..self.w.len()).rev() {
            self.w[i] = self.w[i - 1];
        }
        self.w[0] = head;

        let estimate: f64 = self.c_est.iter().zip(&self.w).map(|(c, w)| c * w).sum();
        let prediction: f64 = self.c_prd.iter().zip(&self.w).map(|(c, w)| c * w).sum();
        self.predicted = match self.unwrap_from {
            UnwrapSource::Predictor => prediction,
            UnwrapSource::Estimator => estimate,
        };
        TrackStep {
            unwrapped,
            estimate,
            prediction,
        }
    }

    /// Process a whole record in order.
    pub fn run(&mut self, raw: &[f64]) -> Vec<TrackStep> {
        raw.iter().map(|&r| self.step(r)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fir::design_fir;
    use crate::iir::{design_iir, BasisSet, DelayPolicy};
    use approx::assert_relative_eq;
    use std::f64::consts::TAU;

    fn fir_pair(m: usize, k1: usize, k0: usize) -> (FirFilter, FirFilter) {
        let est = design_fir(m, k1, k0, (m as f64 - 1.0) / 2.0).unwrap();
        let prd = design_fir(m, k1, k0, -1.0).unwrap();
        (est, prd)
    }

    fn iir_pair(k1: usize, k0: usize) -> (IirFilter, IirFilter) {
        let basis = BasisSet::bessel(5, 1.0 / 64.0).unwrap();
        let est = design_iir(&basis, k1, k0, DelayPolicy::Optimal).unwrap();
        let prd = design_iir(&basis, k1, k0, DelayPolicy::Explicit(-1.0)).unwrap();
        (est, prd)
    }

    #[test]
    fn constant_input_passes_through_immediately() {
        let (est, prd) = fir_pair(16, 2, 1);
        let mut t = Tracker::from_fir(&est, &prd, UnwrapSource::Predictor).unwrap();
        for _ in 0..40 {
            let out = t.step(0.7);
            assert_relative_eq!(out.estimate, 0.7, epsilon = 1e-12);
            assert_relative_eq!(out.prediction, 0.7, epsilon = 1e-12);
        }
        assert_eq!(t.corrections(), 0);
    }

    #[test]
    fn iir_constant_input_passes_through_immediately() {
        let (est, prd) = iir_pair(2, 3);
        let mut t = Tracker::from_iir(&est, &prd, UnwrapSource::Predictor).unwrap();
        for _ in 0..40 {
            let out = t.step(-2.9);
            assert_relative_eq!(out.estimate, -2.9, epsilon = 1e-9);
            assert_relative_eq!(out.prediction, -2.9, epsilon = 1e-9);
        }
    }

    #[test]
    fn fir_matches_direct_convolution_on_smooth_input() {
        let (est, prd) = fir_pair(8, 2, 0);
        let mut t = Tracker::from_fir(&est, &prd, UnwrapSource::Predictor).unwrap();
        let xs: Vec<f64> = (0..30).map(|n| 0.05 * n as f64 + 0.3).collect();
        let out = t.run(&xs);
        let padded = |i: i64| -> f64 {
            if i < 0 {
                xs[0]
            } else {
                xs[i as usize]
            }
        };
        for (j, o) in out.iter().enumerate() {
            let direct: f64 = est
                .taps
                .iter()
                .enumerate()
                .map(|(m, &h)| h * padded(j as i64 - m as i64))
                .sum();
            assert_relative_eq!(o.estimate, direct, epsilon = 1e-10);
        }
    }

    #[test]
    fn iir_matches_direct_difference_equation() {
        let (est, prd) = iir_pair(2, 3);
        let mut t = Tracker::from_iir(&est, &prd, UnwrapSource::Predictor).unwrap();
        let xs: Vec<f64> = (0..200).map(|n| 0.01 * n as f64 - 1.0).collect();
        let out = t.run(&xs);
        let k = est.order();
        let x_at = |i: i64| if i < 0 { xs[0] } else { xs[i as usize] };
        let mut y_hist = vec![xs[0]; xs.len() + k];
        for j in 0..xs.len() {
            let mut y = 0.0;
            for (i, &bi) in est.b.iter().enumerate() {
                y += bi * x_at(j as i64 - i as i64);
            }
            for (i, &ai) in est.a.iter().enumerate().skip(1) {
                y -= ai * y_hist[j + k - i];
            }
            y_hist[j + k] = y;
            assert_relative_eq!(out[j].estimate, y, epsilon = 1e-9, max_relative = 1e-9);
        }
    }

    #[test]
    fn wrapped_ramp_is_tracked_exactly_after_transient() {
        let (est, prd) = fir_pair(64, 2, 0);
        let q = est.q;
        let mut t = Tracker::from_fir(&est, &prd, UnwrapSource::Predictor).unwrap();
        let step = 0.3;
        let mut hit_wraps = 0;
        for n in 0..400 {
            let truth = step * n as f64;
            let out = t.step(wrap(truth));
            if n >= 64 {
                assert_relative_eq!(
                    out.estimate,
                    step * (n as f64 - q),
                    epsilon = 1e-9,
                    max_relative = 1e-9
                );
            }
            if (out.unwrapped - truth).abs() < 1e-9 && out.unwrapped != wrap(truth) {
                hit_wraps += 1;
            }
        }
        assert!(hit_wraps > 0);
    }

    #[test]
    fn quadratic_phase_is_reproduced_by_third_order_window() {
        let (est, prd) = fir_pair(32, 3, 1);
        let q = est.q;
        let mut t = Tracker::from_fir(&est, &prd, UnwrapSource::Predictor).unwrap();
        let theta = |n: f64| 1e-3 * n * n / 2.0;
        for n in 0..300 {
            let out = t.step(wrap(theta(n as f64)));
            if n >= 32 {
                assert_relative_eq!(out.estimate, theta(n as f64 - q), epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn iir_ramp_settles_to_designed_delay() {
        let (est, prd) = iir_pair(2, 3);
        let q = est.q;
        let mut t = Tracker::from_iir(&est, &prd, UnwrapSource::Predictor).unwrap();
        let step = 0.01 * TAU;
        let mut last = f64::NAN;
        for n in 0..8000 {
            last = t.step(wrap(step * n as f64)).estimate - step * (n as f64 - q);
        }
        assert!(last.abs() < 1e-6, "residual {last}");
        assert_eq!(t.corrections(), 0);
    }

    #[test]
    fn estimator_unwrap_mode_differs_on_fast_chirp() {
        let (est, prd) = fir_pair(64, 2, 0);
        let mut a = Tracker::from_fir(&est, &prd, UnwrapSource::Predictor).unwrap();
        let mut b = Tracker::from_fir(&est, &prd, UnwrapSource::Estimator).unwrap();
        let mut differs = false;
        for n in 0..500 {
            let raw = wrap(0.004 * (n as f64) * (n as f64) / 2.0);
            let ya = a.step(raw).estimate;
            let yb = b.step(raw).estimate;
            if (ya - yb).abs() > 1e-6 {
                differs = true;
            }
        }
        assert!(differs);
    }

    #[test]
    fn reset_restores_cold_start() {
        let (est, prd) = fir_pair(16, 2, 0);
        let mut t = Tracker::from_fir(&est, &prd, UnwrapSource::Predictor).unwrap();
        let first: Vec<TrackStep> = (0..50).map(|n| t.step(wrap(0.4 * n as f64))).collect();
        t.reset();
        assert_eq!(t.corrections(), 0);
        let second: Vec<TrackStep> = (0..50).map(|n| t.step(wrap(0.4 * n as f64))).collect();
        assert_eq!(first, second);
    }

    #[test]
    fn rejects_inconsistent_pairs() {
        let (est, _) = iir_pair(2, 3);
        let other = design_iir(
            &BasisSet::bessel(5, 2.0 / 64.0).unwrap(),
            2,
            3,
            DelayPolicy::Explicit(-1.0),
        )
        .unwrap();
        assert!(matches!(
            Tracker::from_iir(&est, &other, UnwrapSource::Predictor),
            Err(RealizeError::MismatchedDenominators)
        ));
        assert!(matches!(
            Tracker::from_coefficients(&[], &[1.0], &[1.0], UnwrapSource::Predictor),
            Err(RealizeError::EmptyNumerator)
        ));
        assert!(matches!(
            Tracker::from_coefficients(&[1.0], &[1.0], &[0.0], UnwrapSource::Predictor),
            Err(RealizeError::BadDenominator)
        ));
        // integrator has a pole at z = 1, no steady state
        assert!(matches!(
            Tracker::from_coefficients(&[1.0], &[1.0], &[1.0, -1.0], UnwrapSource::Predictor),
            Err(RealizeError::SteadyStateSingular)
        ));
    }

    #[test]
    fn tracked_ramp_inserts_no_jumps() {
        let (est, prd) = fir_pair(64, 2, 0);
        let mut t = Tracker::from_fir(&est, &prd, UnwrapSource::Predictor).unwrap();
        for i in 0..2000 {
            t.step(wrap(0.02 * i as f64));
        }
        assert_eq!(t.corrections(), 0);
    }

    #[test]
    fn zeroth_order_predictor_loses_lock_on_fast_ramp() {
        // a constant-only window cannot shift its passband phase, so a
        // fast ramp outruns the prediction and branch lock breaks
        let (est, prd) = fir_pair(64, 1, 0);
        let mut t = Tracker::from_fir(&est, &prd, UnwrapSource::Predictor).unwrap();
        for i in 0..1000 {
            t.step(wrap(0.5 * i as f64));
        }
        assert!(t.corrections() > 0);
    }
}
