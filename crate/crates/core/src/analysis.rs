//! Frequency-domain and noise-gain analysis of designed filters.

use crate::fir::FirFilter;
use crate::iir::{truncation_horizon, IirFilter};
use crate::noise::{chain_psd, diff_chain_impulse, MAX_DIFF_STAGES};
use crate::poly;
use num_complex::Complex64;
use std::f64::consts::TAU;
use thiserror::Error;

/// Uniform grid size for spectral integrals over a full turn.
const SPECTRAL_GRID: usize = 1 << 16;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("noise colouring order must be at most {limit}, got {0}", limit = MAX_DIFF_STAGES)]
    BadColouring(usize),
    #[error("band edge must lie in (0, 0.5] cycles per sample, got {0}")]
    BadBand(f64),
}

/// Either designed filter kind under one analysis interface.
#[derive(Clone, Debug, PartialEq)]
pub enum Filter {
    Fir(FirFilter),
    Iir(IirFilter),
}

impl Filter {
    /// Reference delay the design aimed at.
    pub fn q(&self) -> f64 {
        match self {
            Filter::Fir(f) => f.q,
            Filter::Iir(f) => f.q,
        }
    }

    /// Number of moment constraints (degree of reproduced polynomials
    /// plus one).
    pub fn constraint_order(&self) -> usize {
        match self {
            Filter::Fir(f) => f.k1,
            Filter::Iir(f) => f.k1,
        }
    }

    /// Difference-chain order the design weighted noise against.
    pub fn colouring_order(&self) -> usize {
        match self {
            Filter::Fir(f) => f.k0,
            Filter::Iir(f) => f.k0,
        }
    }

    /// Numerator coefficients in powers of `z^-1`.
    pub fn numerator(&self) -> &[f64] {
        match self {
            Filter::Fir(f) => &f.taps,
            Filter::Iir(f) => &f.b,
        }
    }

    /// Denominator coefficients in powers of `z^-1`.
    pub fn denominator(&self) -> &[f64] {
        match self {
            Filter::Fir(_) => &[1.0],
            Filter::Iir(f) => &f.a,
        }
    }

    /// Samples after which the impulse response is negligible.
    pub fn settling_len(&self) -> usize {
        match self {
            Filter::Fir(f) => f.taps.len(),
            Filter::Iir(f) => {
                let r = f.poles.iter().fold(0.0f64, |m, p| m.max(p.norm()));
                truncation_horizon(r, 2 * f.order() + 1, 0)
            }
        }
    }

    /// Impulse response over `0..len`.
    pub fn impulse(&self, len: usize) -> Vec<f64> {
        match self {
            Filter::Fir(f) => {
                let mut h = f.taps.clone();
                h.resize(len, 0.0);
                h
            }
            Filter::Iir(f) => impulse_response(&f.b, &f.a, len),
        }
    }

    /// Complex response at angular frequency `omega` (radians per
    /// sample).
    pub fn frequency_response(&self, omega: f64) -> Complex64 {
        let u = Complex64::from_polar(1.0, -omega);
        poly::eval_c(self.numerator(), u) / poly::eval_c(self.denominator(), u)
    }

    /// Group delay at dc, from the derivative of the response phase.
    pub fn dc_group_delay(&self) -> f64 {
        let first = |c: &[f64]| {
            let s: f64 = c.iter().sum();
            let m: f64 = c.iter().enumerate().map(|(i, &v)| i as f64 * v).sum();
            m / s
        };
        first(self.numerator()) - first(self.denominator())
    }

    /// Variance gain against white angle noise.
    pub fn white_noise_gain(&self) -> f64 {
        noise_gain(self, 0).unwrap()
    }
}

/// Impulse response of a rational filter given in powers of `z^-1`.
pub fn impulse_response(b: &[f64], a: &[f64], len: usize) -> Vec<f64> {
    assert!(!a.is_empty() && a[0] != 0.0, "denominator must be monic-able");
    let a0 = a[0];
    let mut h = vec![0.0; len];
    for n in 0..len {
        let mut y = if n < b.len() { b[n] } else { 0.0 };
        for (j, &aj) in a.iter().enumerate().skip(1) {
            if j > n {
                break;
            }
            y -= aj * h[n - j];
        }
        h[n] = y / a0;
    }
    h
}

/// Variance gain of `filter` against angle noise that passed a
/// `colouring`-stage difference chain, from the time-domain impulse
/// response.
pub fn noise_gain(filter: &Filter, colouring: usize) -> Result<f64, AnalysisError> {
    if colouring > MAX_DIFF_STAGES {
        return Err(AnalysisError::BadColouring(colouring));
    }
    let h = filter.impulse(filter.settling_len());
    Ok(impulse_noise_gain(&h, colouring))
}

/// Same gain from an explicit impulse response.
pub fn impulse_noise_gain(h: &[f64], colouring: usize) -> f64 {
    let g = poly::convolve(&diff_chain_impulse(colouring), h);
    g.iter().map(|v| v * v).sum()
}

/// The same gain evaluated spectrally: the mean of the squared response
/// magnitude weighted by the difference-chain power spectrum over a full
/// turn.
pub fn spectral_noise_gain(filter: &Filter, colouring: usize) -> Result<f64, AnalysisError> {
    if colouring > MAX_DIFF_STAGES {
        return Err(AnalysisError::BadColouring(colouring));
    }
    let n = SPECTRAL_GRID;
    let mut acc = 0.0;
    for k in 0..n {
        let omega = -std::f64::consts::PI + TAU * k as f64 / n as f64;
        let hmag = filter.frequency_response(omega).norm_sqr();
        acc += hmag * chain_psd(colouring, omega);
    }
    Ok(acc / n as f64)
}

/// Small-noise error variance in dB for a filter with the given variance
/// gain at the given signal-to-noise ratio.
pub fn expected_variance_db(gain: f64, snr_db: f64) -> f64 {
    10.0 * (gain / 10f64.powf(snr_db / 10.0)).log10()
}

/// Largest deviation (degrees) of the response phase from the ideal
/// linear phase `-q omega`, over 256 frequencies spanning
/// `(0, f_upper]` cycles per sample.
pub fn phase_deviation_deg(filter: &Filter, f_upper: f64) -> Result<f64, AnalysisError> {
    if !(f_upper > 0.0 && f_upper <= 0.5) {
        return Err(AnalysisError::BadBand(f_upper));
    }
    let q = filter.q();
    let points = 256;
    let lo = 1e-9;
    let hi = TAU * f_upper;
    let mut worst = 0.0f64;
    for i in 0..points {
        let omega = lo + (hi - lo) * i as f64 / (points - 1) as f64;
        let lifted = filter.frequency_response(omega) * Complex64::from_polar(1.0, q * omega);
        worst = worst.max(lifted.arg().abs());
    }
    Ok(worst.to_degrees())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fir::design_fir;
    use crate::iir::{design_iir, BasisSet, DelayPolicy};
    use approx::assert_relative_eq;

    fn d2() -> Filter {
        Filter::Iir(
            design_iir(
                &BasisSet::bessel(5, 1.0 / 64.0).unwrap(),
                2,
                3,
                DelayPolicy::Optimal,
            )
            .unwrap(),
        )
    }

    #[test]
    fn geometric_impulse_response() {
        let h = impulse_response(&[1.0], &[1.0, -0.5], 6);
        for (n, &v) in h.iter().enumerate() {
            assert_relative_eq!(v, 0.5f64.powi(n as i32), epsilon = 1e-15);
        }
    }

    #[test]
    fn boxcar_response_has_unit_dc_and_known_null() {
        let f = Filter::Fir(design_fir(16, 1, 0, 7.5).unwrap());
        assert_relative_eq!(f.frequency_response(0.0).norm(), 1.0, epsilon = 1e-12);
        assert!(f.frequency_response(TAU / 16.0).norm() < 1e-12);
    }

    #[test]
    fn dc_group_delay_equals_design_delay() {
        let f = Filter::Fir(design_fir(32, 2, 1, 9.25).unwrap());
        assert_relative_eq!(f.dc_group_delay(), 9.25, epsilon = 1e-8);
        let g = d2();
        assert_relative_eq!(g.dc_group_delay(), 39.625831365, max_relative = 1e-6);
    }

    #[test]
    fn white_gain_of_boxcar_is_reciprocal_length() {
        let f = Filter::Fir(design_fir(64, 1, 0, 31.5).unwrap());
        assert_relative_eq!(f.white_noise_gain(), 1.0 / 64.0, max_relative = 1e-12);
    }

    #[test]
    fn gains_match_design_metadata() {
        let f = d2();
        let (white, coloured) = match &f {
            Filter::Iir(ff) => (ff.white_noise_gain, ff.coloured_noise_gain),
            _ => unreachable!(),
        };
        assert_relative_eq!(noise_gain(&f, 0).unwrap(), white, max_relative = 1e-9);
        assert_relative_eq!(noise_gain(&f, 3).unwrap(), coloured, max_relative = 1e-6);
    }

    #[test]
    fn spectral_and_time_gains_agree() {
        let fir = Filter::Fir(design_fir(64, 2, 1, 31.5).unwrap());
        for k in 0..3 {
            assert_relative_eq!(
                spectral_noise_gain(&fir, k).unwrap(),
                noise_gain(&fir, k).unwrap(),
                max_relative = 1e-8
            );
        }
        let iir = d2();
        assert_relative_eq!(
            spectral_noise_gain(&iir, 3).unwrap(),
            noise_gain(&iir, 3).unwrap(),
            max_relative = 1e-6
        );
    }

    #[test]
    fn analytical_variance_is_gain_over_snr() {
        assert_relative_eq!(
            expected_variance_db(0.015625, 10.0),
            10.0 * (0.015625f64 / 10.0).log10(),
            epsilon = 1e-12
        );
        // 0 dB gain at 0 dB snr
        assert_relative_eq!(expected_variance_db(1.0, 0.0), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn bessel_designs_have_nearly_linear_phase() {
        let f = d2();
        let dev = phase_deviation_deg(&f, 0.95 / 64.0).unwrap();
        assert!(dev < 3.0, "deviation {dev} deg");
        // far outside the band linearity is lost
        let wide = phase_deviation_deg(&f, 0.45).unwrap();
        assert!(wide > dev);
    }

    #[test]
    fn rejects_out_of_range_arguments() {
        let f = Filter::Fir(design_fir(8, 1, 0, 3.5).unwrap());
        assert!(matches!(
            noise_gain(&f, MAX_DIFF_STAGES + 1),
            Err(AnalysisError::BadColouring(_))
        ));
        assert!(matches!(
            phase_deviation_deg(&f, 0.0),
            Err(AnalysisError::BadBand(_))
        ));
        assert!(matches!(
            phase_deviation_deg(&f, 0.6),
            Err(AnalysisError::BadBand(_))
        ));
    }
}
