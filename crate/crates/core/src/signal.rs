//! Polynomial-phase signal synthesis and angle measurement utilities.
//!
//! A signal is `x[n] = A exp(i θ[n]) + ε[n]` where the phase follows a
//! polynomial law `θ[n] = Σ_k θ_k n^k / k!`. The instantaneous frequency is
//! the exact analytic derivative of that law, which keeps delayed reference
//! values meaningful at fractional sample positions.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use thiserror::Error;

/// Highest supported polynomial degree of the phase law.
pub const MAX_PHASE_DEGREE: usize = 3;

#[derive(Debug, Error)]
pub enum SignalError {
    #[error("amplitude must be positive and finite, got {0}")]
    BadAmplitude(f64),
    #[error("phase law needs 1..={limit} coefficients, got {0}", limit = MAX_PHASE_DEGREE + 1)]
    BadPhaseLaw(usize),
    #[error("phase coefficient {0} is not finite")]
    NonFiniteCoefficient(usize),
    #[error("signal needs at least {need} samples, got {got}")]
    TooShort { need: usize, got: usize },
    #[error("frequency anchor is not finite")]
    NonFiniteFrequency,
    #[error("noise variance must be finite and non-negative, got {0}")]
    BadVariance(f64),
    #[error("sample {0} has zero magnitude, angle undefined")]
    ZeroSample(usize),
}

/// Instantaneous frequency in cycles/sample anchored at the first sample,
/// the window centre `(N-1)/2`, and the last sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrequencyTriplet {
    pub start: f64,
    pub mid: f64,
    pub end: f64,
}

impl FrequencyTriplet {
    pub fn new(start: f64, mid: f64, end: f64) -> Self {
        Self { start, mid, end }
    }
}

/// Phase law, amplitude, and length of a synthetic signal.
///
/// `theta[k]` multiplies `n^k / k!`, so `theta[1]` is the angular frequency
/// at `n = 0` and `theta[2]` its per-sample rate of change.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseSignalSpec {
    amplitude: f64,
    theta: Vec<f64>,
    n_samples: usize,
}

impl PhaseSignalSpec {
    pub fn new(
        amplitude: f64,
        theta: Vec<f64>,
        n_samples: usize,
    ) -> Result<Self, SignalError> {
        if !(amplitude.is_finite() && amplitude > 0.0) {
            return Err(SignalError::BadAmplitude(amplitude));
        }
        if theta.is_empty() || theta.len() > MAX_PHASE_DEGREE + 1 {
            return Err(SignalError::BadPhaseLaw(theta.len()));
        }
        if let Some(k) = theta.iter().position(|c| !c.is_finite()) {
            return Err(SignalError::NonFiniteCoefficient(k));
        }
        if n_samples == 0 {
            return Err(SignalError::TooShort {
                need: 1,
                got: 0,
            });
        }
        Ok(Self {
            amplitude,
            theta,
            n_samples,
        })
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Degree of the phase polynomial.
    pub fn degree(&self) -> usize {
        self.theta.len() - 1
    }

    /// Phase at (possibly fractional) sample position `t`.
    pub fn theta_at(&self, t: f64) -> f64 {
        let mut fact = 1.0;
        let mut acc = 0.0;
        let mut pw = 1.0;
        for (k, &c) in self.theta.iter().enumerate() {
            if k > 0 {
                fact *= k as f64;
                pw *= t;
            }
            acc += c * pw / fact;
        }
        acc
    }

    /// Instantaneous angular frequency at sample position `t`.
    pub fn omega_at(&self, t: f64) -> f64 {
        let mut fact = 1.0;
        let mut acc = 0.0;
        let mut pw = 1.0;
        for (k, &c) in self.theta.iter().enumerate().skip(1) {
            if k > 1 {
                fact *= (k - 1) as f64;
                pw *= t;
            }
            acc += c * pw / fact;
        }
        acc
    }

    /// Same law with the phase offset replaced.
    pub fn with_theta0(&self, theta0: f64) -> Self {
        let mut out = self.clone();
        out.theta[0] = theta0;
        out
    }
}

/// Convert a frequency triplet into phase-law coefficients.
///
/// Exact equality of all three anchors selects a constant-frequency law,
/// an exactly collinear triplet selects a linear chirp, and anything else a
/// quadratic law; the anchors sit at `n = 0`, `(N-1)/2`, and `N-1`.
pub fn triplet_to_spec(
    trip: &FrequencyTriplet,
    n_samples: usize,
    amplitude: f64,
) -> Result<PhaseSignalSpec, SignalError> {
    if !(trip.start.is_finite() && trip.mid.is_finite() && trip.end.is_finite()) {
        return Err(SignalError::NonFiniteFrequency);
    }
    if n_samples < 3 {
        return Err(SignalError::TooShort {
            need: 3,
            got: n_samples,
        });
    }
    let (f0, f1, f2) = (trip.start, trip.mid, trip.end);
    let m = (n_samples - 1) as f64 / 2.0;
    let theta = if f0 == f1 && f1 == f2 {
        vec![0.0, TAU * f0]
    } else if f0 - 2.0 * f1 + f2 == 0.0 {
        let c1 = (f2 - f0) / (n_samples - 1) as f64;
        vec![0.0, TAU * f0, TAU * c1]
    } else {
        let c2 = (f2 - 2.0 * f1 + f0) / (2.0 * m * m);
        let c1 = (4.0 * f1 - 3.0 * f0 - f2) / (2.0 * m);
        vec![0.0, TAU * f0, TAU * c1, 2.0 * TAU * c2]
    };
    PhaseSignalSpec::new(amplitude, theta, n_samples)
}

/// How measurement noise perturbs the clean signal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseMode {
    /// Independent Gaussian noise of variance `variance` on each of the
    /// real and imaginary parts.
    #[default]
    ComplexGaussian,
    /// Independent uniform noise of the same per-part variance.
    ComplexUniform,
    /// Gaussian noise of variance `variance / A^2` added to the angle
    /// itself; sample magnitude stays exactly `A`.
    AngleGaussian,
}

/// Noise mode, per-part variance, and generator seed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec {
    pub mode: NoiseMode,
    pub variance: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(mode: NoiseMode, variance: f64, seed: u64) -> Self {
        Self {
            mode,
            variance,
            seed,
        }
    }
}

/// Synthesize the signal with a generator seeded from `noise.seed`.
pub fn synthesize(
    spec: &PhaseSignalSpec,
    noise: &NoiseSpec,
) -> Result<Vec<Complex64>, SignalError> {
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    synthesize_with(spec, noise.mode, noise.variance, &mut rng)
}

/// Synthesize the signal drawing noise from a caller-owned generator.
///
/// Draw order is fixed: two values per sample for the complex modes
/// (real part first), one per sample for angle noise, none when the
/// variance is zero.
pub fn synthesize_with<R: Rng + ?Sized>(
    spec: &PhaseSignalSpec,
    mode: NoiseMode,
    variance: f64,
    rng: &mut R,
) -> Result<Vec<Complex64>, SignalError> {
    if !(variance.is_finite() && variance >= 0.0) {
        return Err(SignalError::BadVariance(variance));
    }
    let a = spec.amplitude;
    let n = spec.n_samples;
    let mut out = Vec::with_capacity(n);
    if variance == 0.0 {
        for i in 0..n {
            out.push(Complex64::from_polar(a, spec.theta_at(i as f64)));
        }
        return Ok(out);
    }
    match mode {
        NoiseMode::ComplexGaussian => {
            let s = variance.sqrt();
            for i in 0..n {
                let base = Complex64::from_polar(a, spec.theta_at(i as f64));
                let er: f64 = StandardNormal.sample(rng);
                let ei: f64 = StandardNormal.sample(rng);
                out.push(base + Complex64::new(s * er, s * ei));
            }
        }
        NoiseMode::ComplexUniform => {
            let w = (3.0 * variance).sqrt();
            let dist = Uniform::new_inclusive(-w, w);
            for i in 0..n {
                let base = Complex64::from_polar(a, spec.theta_at(i as f64));
                let er = dist.sample(rng);
                let ei = dist.sample(rng);
                out.push(base + Complex64::new(er, ei));
            }
        }
        NoiseMode::AngleGaussian => {
            let s = variance.sqrt() / a;
            for i in 0..n {
                let e: f64 = StandardNormal.sample(rng);
                out.push(Complex64::from_polar(a, spec.theta_at(i as f64) + s * e));
            }
        }
    }
    Ok(out)
}

/// Wrap an angle into `(-π, π]`. Propagates non-finite input as NaN.
#[inline]
pub fn wrap(angle: f64) -> f64 {
    let r = angle.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Principal angles of the samples.
pub fn angles(x: &[Complex64]) -> Result<Vec<f64>, SignalError> {
    if let Some(i) = x.iter().position(|v| v.norm_sqr() == 0.0) {
        return Err(SignalError::ZeroSample(i));
    }
    Ok(x.iter().map(|v| v.arg()).collect())
}

/// Angles of one-sample-delayed conjugate products.
///
/// Output `j` is `arg(x[j+1] x*[j])`, the wrapped first difference of the
/// signal phase, so the `N-1` values correspond to sample indices
/// `1..N-1`.
pub fn conjugate_product_angles(x: &[Complex64]) -> Result<Vec<f64>, SignalError> {
    if x.len() < 2 {
        return Err(SignalError::TooShort {
            need: 2,
            got: x.len(),
        });
    }
    if let Some(i) = x.iter().position(|v| v.norm_sqr() == 0.0) {
        return Err(SignalError::ZeroSample(i));
    }
    Ok(x.windows(2).map(|w| (w[1] * w[0].conj()).arg()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn clean(spec: &PhaseSignalSpec) -> Vec<Complex64> {
        let noise = NoiseSpec::new(NoiseMode::ComplexGaussian, 0.0, 0);
        synthesize(spec, &noise).unwrap()
    }

    #[test]
    fn wrap_principal_range() {
        assert_eq!(wrap(0.0), 0.0);
        assert_eq!(wrap(PI), PI);
        assert_relative_eq!(wrap(-PI), PI);
        assert_relative_eq!(wrap(-3.0 * PI), PI);
        assert_relative_eq!(wrap(PI + 0.1), -PI + 0.1, max_relative = 1e-12);
        assert_relative_eq!(wrap(7.0 * TAU + 0.25), 0.25, epsilon = 1e-12);
    }

    #[test]
    fn triplet_degree_detection() {
        let n = 1000;
        let c = triplet_to_spec(&FrequencyTriplet::new(0.01, 0.01, 0.01), n, 1.0).unwrap();
        assert_eq!(c.degree(), 1);
        assert_relative_eq!(c.theta()[1], TAU * 0.01);

        let l = triplet_to_spec(&FrequencyTriplet::new(0.0, 0.125, 0.25), n, 1.0).unwrap();
        assert_eq!(l.degree(), 2);
        assert_relative_eq!(l.theta()[2], TAU * 0.25 / 999.0, max_relative = 1e-14);

        let q = triplet_to_spec(&FrequencyTriplet::new(0.0, 4.0, 16.0), n, 1.0).unwrap();
        assert_eq!(q.degree(), 3);
        assert_relative_eq!(
            q.theta()[2],
            TAU * (4.0 * 4.0 - 16.0) / 999.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            q.theta()[3],
            2.0 * TAU * 16.0 / (999.0 * 0.5 * 999.0 * 2.0),
            max_relative = 1e-12
        );
    }

    #[test]
    fn triplet_anchors_are_reproduced() {
        let trip = FrequencyTriplet::new(0.013, 0.021, 0.009);
        let n = 501;
        let spec = triplet_to_spec(&trip, n, 1.0).unwrap();
        let m = (n - 1) as f64 / 2.0;
        assert_relative_eq!(spec.omega_at(0.0), TAU * trip.start, max_relative = 1e-12);
        assert_relative_eq!(spec.omega_at(m), TAU * trip.mid, max_relative = 1e-12);
        assert_relative_eq!(
            spec.omega_at(2.0 * m),
            TAU * trip.end,
            max_relative = 1e-12
        );
    }

    #[test]
    fn clean_samples_carry_wrapped_phase() {
        let spec = PhaseSignalSpec::new(2.0, vec![0.4, 0.3, 0.001], 64).unwrap();
        let x = clean(&spec);
        assert_eq!(x.len(), 64);
        for (n, v) in x.iter().enumerate() {
            assert_relative_eq!(v.norm(), 2.0, max_relative = 1e-12);
            assert_relative_eq!(
                v.arg(),
                wrap(spec.theta_at(n as f64)),
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn conjugate_products_recover_constant_frequency() {
        let spec = PhaseSignalSpec::new(1.0, vec![1.1, 0.3], 32).unwrap();
        let x = clean(&spec);
        let d = conjugate_product_angles(&x).unwrap();
        assert_eq!(d.len(), 31);
        for v in d {
            assert_relative_eq!(v, 0.3, epsilon = 1e-12);
        }
    }

    #[test]
    fn conjugate_products_near_wrap_boundary() {
        let spec = PhaseSignalSpec::new(1.0, vec![0.0, PI - 0.01], 16).unwrap();
        let x = clean(&spec);
        for v in conjugate_product_angles(&x).unwrap() {
            assert_relative_eq!(v, PI - 0.01, epsilon = 1e-12);
        }
    }

    #[test]
    fn second_difference_recovers_chirp_rate() {
        let trip = FrequencyTriplet::new(0.0, 0.125, 0.25);
        let spec = triplet_to_spec(&trip, 1000, 1.0).unwrap();
        let x = clean(&spec);
        let d1 = conjugate_product_angles(&x).unwrap();
        for w in d1.windows(2) {
            assert_relative_eq!(w[1] - w[0], spec.theta()[2], epsilon = 1e-10);
        }
    }

    #[test]
    fn angle_noise_keeps_magnitude() {
        let spec = PhaseSignalSpec::new(3.0, vec![0.0, 0.2], 128).unwrap();
        let noise = NoiseSpec::new(NoiseMode::AngleGaussian, 0.05, 7);
        let x = synthesize(&spec, &noise).unwrap();
        for v in x {
            assert_relative_eq!(v.norm(), 3.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn seeded_synthesis_is_reproducible() {
        let spec = PhaseSignalSpec::new(1.0, vec![0.1, 0.02], 64).unwrap();
        let noise = NoiseSpec::new(NoiseMode::ComplexGaussian, 0.3, 99);
        assert_eq!(synthesize(&spec, &noise).unwrap(), synthesize(&spec, &noise).unwrap());
        let other = NoiseSpec::new(NoiseMode::ComplexGaussian, 0.3, 100);
        assert_ne!(synthesize(&spec, &noise).unwrap(), synthesize(&spec, &other).unwrap());
    }

    #[test]
    fn uniform_noise_variance_matches() {
        let spec = PhaseSignalSpec::new(1.0, vec![0.0, 0.0], 40000).unwrap();
        let noise = NoiseSpec::new(NoiseMode::ComplexUniform, 0.04, 11);
        let x = synthesize(&spec, &noise).unwrap();
        let mean_re: f64 = x.iter().map(|v| v.re - 1.0).sum::<f64>() / x.len() as f64;
        let var_re: f64 =
            x.iter().map(|v| (v.re - 1.0 - mean_re).powi(2)).sum::<f64>() / x.len() as f64;
        assert_relative_eq!(var_re, 0.04, max_relative = 0.05);
    }

    #[test]
    fn zero_sample_rejected() {
        let x = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        assert!(matches!(
            conjugate_product_angles(&x),
            Err(SignalError::ZeroSample(1))
        ));
        assert!(matches!(angles(&x), Err(SignalError::ZeroSample(1))));
    }

    proptest! {
        #[test]
        fn wrap_stays_in_principal_range(a in -50.0f64..50.0) {
            let w = wrap(a);
            prop_assert!(w > -PI && w <= PI);
        }

        #[test]
        fn wrap_is_periodic(a in -6.0f64..6.0, k in -5i64..=5) {
            let w1 = wrap(a);
            let w2 = wrap(a + k as f64 * TAU);
            prop_assert!((w1 - w2).abs() < 1e-9);
        }

        #[test]
        fn wrap_preserves_principal_values(a in -3.1f64..=3.1) {
            prop_assert!((wrap(a) - a).abs() < 1e-12);
        }
    }
}
