//! Dense polynomial helpers shared by the design code.
//!
//! Coefficients are stored in ascending powers: `c[0] + c[1] x + c[2] x^2 + ...`.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Linear convolution of two real coefficient sequences.
pub fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// Linear convolution of two complex coefficient sequences.
pub fn convolve_c(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// Evaluate a real-coefficient polynomial at a real point.
pub fn eval(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ck| acc * x + ck)
}

/// Evaluate a real-coefficient polynomial at a complex point.
pub fn eval_c(c: &[f64], z: Complex64) -> Complex64 {
    c.iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &ck| acc * z + ck)
}

/// First derivative, ascending coefficients. Empty input yields empty output.
pub fn derivative(c: &[f64]) -> Vec<f64> {
    c.iter()
        .enumerate()
        .skip(1)
        .map(|(k, &ck)| k as f64 * ck)
        .collect()
}

/// All roots of a real-coefficient polynomial.
///
/// Uses companion-matrix eigenvalues refined by a few Newton steps.
/// Leading coefficients that are negligible against the largest one are
/// dropped before factoring.
///
/// # Panics
///
/// Panics when every coefficient is zero.
pub fn roots(c: &[f64]) -> Vec<Complex64> {
    let scale = c.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    assert!(scale > 0.0, "zero polynomial has no roots");
    let mut deg = c.len() - 1;
    while deg > 0 && c[deg].abs() <= scale * 1e-13 {
        deg -= 1;
    }
    if deg == 0 {
        return Vec::new();
    }
    let lead = c[deg];
    let mut m = DMatrix::<f64>::zeros(deg, deg);
    for j in 0..deg {
        m[(0, j)] = -c[deg - 1 - j] / lead;
    }
    for i in 1..deg {
        m[(i, i - 1)] = 1.0;
    }
    let mut rts: Vec<Complex64> = m.complex_eigenvalues().iter().copied().collect();
    for r in &mut rts {
        *r = newton_polish(&c[..=deg], *r);
    }
    rts
}

fn newton_polish(c: &[f64], mut z: Complex64) -> Complex64 {
    let d = derivative(c);
    for _ in 0..3 {
        let f = eval_c(c, z);
        let fp = eval_c(&d, z);
        if fp.norm_sqr() == 0.0 {
            break;
        }
        let step = f / fp;
        if !step.re.is_finite() || !step.im.is_finite() {
            break;
        }
        z -= step;
    }
    z
}

/// Real roots among `rts`, ascending. A root counts as real when its
/// imaginary part is negligible against its magnitude.
pub fn real_roots(rts: &[Complex64]) -> Vec<f64> {
    let mut out: Vec<f64> = rts
        .iter()
        .filter(|r| r.im.abs() <= 1e-8 * (1.0 + r.re.abs()))
        .map(|r| r.re)
        .collect();
    out.sort_by(f64::total_cmp);
    out
}

/// Binomial coefficient as a float, exact for the small arguments used here.
pub fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for j in 1..=k {
        acc = acc * (n - k + j) as f64 / j as f64;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn convolve_squares_binomial() {
        assert_eq!(convolve(&[1.0, 1.0], &[1.0, 1.0]), vec![1.0, 2.0, 1.0]);
        assert_eq!(convolve(&[2.0], &[3.0, 4.0]), vec![6.0, 8.0]);
    }

    #[test]
    fn derivative_shifts_down() {
        assert_eq!(derivative(&[5.0, 3.0, 2.0]), vec![3.0, 4.0]);
        assert!(derivative(&[7.0]).is_empty());
    }

    #[test]
    fn roots_of_cubic() {
        // (x - 1)(x - 2)(x - 3)
        let rts = roots(&[-6.0, 11.0, -6.0, 1.0]);
        let mut re = real_roots(&rts);
        assert_eq!(re.len(), 3);
        for (got, want) in re.drain(..).zip([1.0, 2.0, 3.0]) {
            assert_relative_eq!(got, want, max_relative = 1e-10);
        }
    }

    #[test]
    fn roots_trim_negligible_leading_terms() {
        let rts = roots(&[-2.0, 1.0, 1e-300]);
        assert_eq!(rts.len(), 1);
        assert_relative_eq!(rts[0].re, 2.0, max_relative = 1e-12);
    }

    #[test]
    fn complex_pair_detected() {
        // x^2 + 1
        let rts = roots(&[1.0, 0.0, 1.0]);
        assert_eq!(rts.len(), 2);
        assert!(real_roots(&rts).is_empty());
        for r in rts {
            assert_relative_eq!(r.im.abs(), 1.0, max_relative = 1e-10);
        }
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(5, 2), 10.0);
        assert_eq!(binomial(16, 8), 12870.0);
        assert_eq!(binomial(3, 5), 0.0);
        assert_eq!(binomial(7, 0), 1.0);
    }

    #[test]
    fn eval_matches_horner() {
        let c = [1.0, -2.0, 0.5];
        assert_relative_eq!(eval(&c, 3.0), 1.0 - 6.0 + 4.5);
        let z = Complex64::new(0.0, 1.0);
        let v = eval_c(&c, z);
        assert_relative_eq!(v.re, 0.5, max_relative = 1e-14);
        assert_relative_eq!(v.im, -2.0, max_relative = 1e-14);
    }
}
