//! Maximally-flat-delay prototypes built from reverse Bessel polynomials,
//! scaled to a cutoff and mapped to discrete poles.
//!
//! The degree-`k` reverse Bessel polynomial follows the recurrence
//! `θ_k(s) = (2k-1) θ_{k-1}(s) + s² θ_{k-2}(s)` with `θ_0 = 1` and
//! `θ_1 = s + 1`. Its roots are the continuous prototype poles; scaling
//! them by `2π f_c` over a normalization frequency and exponentiating
//! yields the discrete poles (matched-z transform).

use crate::poly;
use num_complex::Complex64;
use std::f64::consts::TAU;
use thiserror::Error;

/// Largest supported prototype order.
pub const MAX_ORDER: usize = 8;

#[derive(Debug, Error)]
pub enum BesselError {
    #[error("prototype order must be 1..={limit}, got {0}", limit = MAX_ORDER)]
    BadOrder(usize),
    #[error("cutoff must lie strictly inside (0, 0.5) cycles/sample, got {0}")]
    BadCutoff(f64),
}

/// Scale convention mapping the prototype to a target cutoff.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PrototypeNorm {
    /// Divide the poles by the natural frequency `a0^(1/k)` (the k-th root
    /// of the polynomial's constant term). Keeps the delay profile of the
    /// scaled prototype flat through the widest band and is the convention
    /// used by every bundled catalog design.
    #[default]
    Phase,
    /// Divide by the frequency where the prototype magnitude response has
    /// fallen 3 dB below dc.
    Mag3Db,
}

/// Coefficients of the degree-`k` reverse Bessel polynomial, ascending.
pub fn reverse_bessel(k: usize) -> Vec<f64> {
    if k == 0 {
        return vec![1.0];
    }
    let mut prev = vec![1.0];
    let mut cur = vec![1.0, 1.0];
    for n in 2..=k {
        let mut next = vec![0.0; n + 1];
        for (i, &c) in cur.iter().enumerate() {
            next[i] += (2 * n - 1) as f64 * c;
        }
        for (i, &c) in prev.iter().enumerate() {
            next[i + 2] += c;
        }
        prev = cur;
        cur = next;
    }
    cur
}

/// Natural normalization frequency `a0^(1/k)`.
pub fn natural_frequency(k: usize) -> f64 {
    reverse_bessel(k)[0].powf(1.0 / k as f64)
}

/// Frequency where the prototype magnitude drops 3 dB below its dc value,
/// found by bisection.
pub fn magnitude_3db_frequency(k: usize) -> f64 {
    let c = reverse_bessel(k);
    let target = c[0] * 2.0f64.sqrt();
    let gain = |w: f64| poly::eval_c(&c, Complex64::new(0.0, w)).norm();
    let mut lo = 0.0;
    let mut hi = 2.0 + 0.5 * k as f64;
    while gain(hi) < target {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gain(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Continuous prototype poles: roots of the reverse Bessel polynomial,
/// forced into exact conjugate pairs and sorted by real part.
pub fn prototype_poles(k: usize) -> Result<Vec<Complex64>, BesselError> {
    if k == 0 || k > MAX_ORDER {
        return Err(BesselError::BadOrder(k));
    }
    let rts = poly::roots(&reverse_bessel(k));
    let mut real: Vec<f64> = Vec::new();
    let mut upper: Vec<Complex64> = Vec::new();
    let mut lower: Vec<Complex64> = Vec::new();
    for r in rts {
        if r.im.abs() <= 1e-8 * (1.0 + r.re.abs()) {
            real.push(r.re);
        } else if r.im > 0.0 {
            upper.push(r);
        } else {
            lower.push(r);
        }
    }
    let mut out: Vec<Complex64> = real.into_iter().map(|re| Complex64::new(re, 0.0)).collect();
    for u in upper {
        let (j, _) = lower
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                (u - a.conj()).norm().total_cmp(&(u - b.conj()).norm())
            })
            .expect("conjugate partner exists for a real-coefficient polynomial");
        let l = lower.swap_remove(j);
        let avg = 0.5 * (u + l.conj());
        out.push(avg);
        out.push(avg.conj());
    }
    out.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(out)
}

/// Discrete poles for order `k` at cutoff `f_c` (cycles/sample) under the
/// default normalization.
pub fn bessel_poles(k: usize, f_c: f64) -> Result<Vec<Complex64>, BesselError> {
    bessel_poles_with(k, f_c, PrototypeNorm::default())
}

/// Discrete poles under an explicit normalization convention.
pub fn bessel_poles_with(
    k: usize,
    f_c: f64,
    norm: PrototypeNorm,
) -> Result<Vec<Complex64>, BesselError> {
    if !(f_c.is_finite() && f_c > 0.0 && f_c < 0.5) {
        return Err(BesselError::BadCutoff(f_c));
    }
    let div = match norm {
        PrototypeNorm::Phase => natural_frequency(k),
        PrototypeNorm::Mag3Db => magnitude_3db_frequency(k),
    };
    let scale = TAU * f_c / div;
    Ok(prototype_poles(k)?
        .into_iter()
        .map(|s| (s * scale).exp())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomial_recurrence_values() {
        assert_eq!(reverse_bessel(0), vec![1.0]);
        assert_eq!(reverse_bessel(1), vec![1.0, 1.0]);
        assert_eq!(reverse_bessel(2), vec![3.0, 3.0, 1.0]);
        assert_eq!(reverse_bessel(3), vec![15.0, 15.0, 6.0, 1.0]);
        assert_eq!(
            reverse_bessel(5),
            vec![945.0, 945.0, 420.0, 105.0, 15.0, 1.0]
        );
    }

    #[test]
    fn normalization_frequencies() {
        let natural = [
            1.0,
            1.732050807568877,
            2.466212074330470,
            3.201085872943680,
            3.936283427035352,
            4.671654850946757,
            5.407130298648436,
            6.142672879678742,
        ];
        let mag = [
            1.0,
            1.361654128716140,
            1.755672368681218,
            2.113917674904229,
            2.427410702152628,
            2.703395061202940,
            2.951722147038737,
            3.179617237510655,
        ];
        for k in 1..=8usize {
            assert_relative_eq!(natural_frequency(k), natural[k - 1], max_relative = 1e-12);
            assert_relative_eq!(
                magnitude_3db_frequency(k),
                mag[k - 1],
                max_relative = 1e-10
            );
        }
    }

    #[test]
    fn fifth_order_prototype_poles() {
        let want = [
            (-3.646738595329642, 0.0),
            (-3.351956399153538, -1.742661416183200),
            (-3.351956399153538, 1.742661416183200),
            (-2.324674303181638, -3.571022920337975),
            (-2.324674303181638, 3.571022920337975),
        ];
        let got = prototype_poles(5).unwrap();
        assert_eq!(got.len(), 5);
        for (g, (re, im)) in got.iter().zip(want) {
            assert_relative_eq!(g.re, re, max_relative = 1e-10);
            if im == 0.0 {
                assert_eq!(g.im, 0.0);
            } else {
                assert_relative_eq!(g.im, im, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn poles_are_exact_conjugate_pairs() {
        for k in 1..=8usize {
            let ps = prototype_poles(k).unwrap();
            assert_eq!(ps.len(), k);
            let mut pool = ps.clone();
            while let Some(p) = pool.pop() {
                if p.im == 0.0 {
                    continue;
                }
                let j = pool
                    .iter()
                    .position(|o| o.re == p.re && o.im == -p.im)
                    .expect("conjugate present bitwise");
                pool.swap_remove(j);
            }
        }
    }

    #[test]
    fn discrete_poles_fifth_order() {
        let want = [
            (0.913060406194956, 0.0),
            (0.918929452941665, -0.039965229802232),
            (0.918929452941665, 0.039965229802232),
            (0.939928769885653, -0.083936643132750),
            (0.939928769885653, 0.083936643132750),
        ];
        let got = bessel_poles(5, 1.0 / 64.0).unwrap();
        for (g, (re, im)) in got.iter().zip(want) {
            assert_relative_eq!(g.re, re, max_relative = 1e-10);
            assert_relative_eq!(g.im, im, epsilon = 1e-10);
            assert!(g.norm() < 1.0);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(prototype_poles(0), Err(BesselError::BadOrder(0))));
        assert!(matches!(prototype_poles(9), Err(BesselError::BadOrder(9))));
        assert!(matches!(
            bessel_poles(3, 0.5),
            Err(BesselError::BadCutoff(_))
        ));
        assert!(matches!(
            bessel_poles(3, 0.0),
            Err(BesselError::BadCutoff(_))
        ));
    }

    #[test]
    fn discrete_poles_stay_inside_unit_circle() {
        for k in 1..=8usize {
            for f_c in [0.001, 0.05, 0.2, 0.49] {
                for norm in [PrototypeNorm::Phase, PrototypeNorm::Mag3Db] {
                    for p in bessel_poles_with(k, f_c, norm).unwrap() {
                        assert!(p.norm() < 1.0, "k={k} fc={f_c} pole {p}");
                    }
                }
            }
        }
    }
}
