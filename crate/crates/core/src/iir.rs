//! Steady-state IIR smoother and predictor design over rational basis
//! families.
//!
//! The estimator is a weighted sum of basis impulse responses. Weights
//! minimize the coloured-noise variance gain subject to dc moment
//! constraints that force exact tracking of polynomials of degree below
//! `k1` at a reference delay `q`. The minimized gain is itself a
//! polynomial in `q`, so the delay can be chosen at a stationary point
//! instead of being imposed.

use crate::bessel::{self, BesselError, PrototypeNorm};
use crate::noise::{diff_chain_impulse, MAX_DIFF_STAGES};
use crate::poly;
use nalgebra::{Cholesky, DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

/// Largest supported origin-basis size (equivalent FIR window length).
pub const MAX_ORIGIN_ORDER: usize = 4096;

#[derive(Debug, Error)]
pub enum IirError {
    #[error(transparent)]
    Prototype(#[from] BesselError),
    #[error("basis order must be 1..={max}, got {got}")]
    BadBasisOrder { got: usize, max: usize },
    #[error("basis pole must lie strictly inside the unit circle, |p| = {0}")]
    UnstablePole(f64),
    #[error("constraint order {k1} must be 1..=basis order {k_phi}")]
    BadOrder { k1: usize, k_phi: usize },
    #[error("noise colouring order must be at most {limit}, got {0}", limit = MAX_DIFF_STAGES)]
    BadColouring(usize),
    #[error("reference delay must be finite, got {0}")]
    BadDelay(f64),
    #[error("constraint system is numerically singular (condition estimate {0:.3e})")]
    IllConditioned(f64),
    #[error("gain polynomial has no real stationary point")]
    NoStationaryPoint,
    #[error("weight vector length {got} does not match basis order {want}")]
    BadWeights { got: usize, want: usize },
    #[error("realized coefficients have non-negligible imaginary residue {0:.3e}")]
    ComplexResidue(f64),
}

/// Family of basis impulse responses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisKind {
    /// Damped complex exponentials `p_k^m` on distinct poles.
    Bessel,
    /// Unit impulses at delays `0..order`; reproduces the FIR design.
    Origin,
    /// Repeated-pole responses `C(m, k) p^(m-k)` sharing one pole.
    Laguerre,
}

/// A concrete basis: the family tag plus its pole multiset.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisSet {
    kind: BasisKind,
    poles: Vec<Complex64>,
}

impl BasisSet {
    /// Maximally-flat-delay basis of `order` poles at cutoff `f_c` under
    /// the default prototype normalization.
    pub fn bessel(order: usize, f_c: f64) -> Result<Self, IirError> {
        Self::bessel_with(order, f_c, PrototypeNorm::default())
    }

    /// Same with an explicit prototype normalization.
    pub fn bessel_with(
        order: usize,
        f_c: f64,
        norm: PrototypeNorm,
    ) -> Result<Self, IirError> {
        let poles = bessel::bessel_poles_with(order, f_c, norm)?;
        Ok(Self {
            kind: BasisKind::Bessel,
            poles,
        })
    }

    /// Unit-impulse basis of the given size.
    pub fn origin(order: usize) -> Result<Self, IirError> {
        if order == 0 || order > MAX_ORIGIN_ORDER {
            return Err(IirError::BadBasisOrder {
                got: order,
                max: MAX_ORIGIN_ORDER,
            });
        }
        Ok(Self {
            kind: BasisKind::Origin,
            poles: vec![Complex64::new(0.0, 0.0); order],
        })
    }

    /// Repeated-pole basis of the given size on one shared pole.
    pub fn laguerre(order: usize, pole: Complex64) -> Result<Self, IirError> {
        if order == 0 || order > bessel::MAX_ORDER {
            return Err(IirError::BadBasisOrder {
                got: order,
                max: bessel::MAX_ORDER,
            });
        }
        if !(pole.norm() < 1.0) {
            return Err(IirError::UnstablePole(pole.norm()));
        }
        Ok(Self {
            kind: BasisKind::Laguerre,
            poles: vec![pole; order],
        })
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn order(&self) -> usize {
        self.poles.len()
    }

    pub fn poles(&self) -> &[Complex64] {
        &self.poles
    }

    pub fn max_pole_magnitude(&self) -> f64 {
        self.poles.iter().fold(0.0, |m, p| m.max(p.norm()))
    }

    /// Value of basis response `k` at sample `m`.
    pub fn response(&self, k: usize, m: usize) -> Complex64 {
        assert!(k < self.order());
        match self.kind {
            BasisKind::Bessel => self.poles[k].powu(m as u32),
            BasisKind::Origin => Complex64::new(if m == k { 1.0 } else { 0.0 }, 0.0),
            BasisKind::Laguerre => {
                if m < k {
                    Complex64::new(0.0, 0.0)
                } else {
                    poly::binomial(m as u64, k as u64)
                        * self.poles[k].powu((m - k) as u32)
                }
            }
        }
    }

    /// All basis responses over `0..len`, one row per basis element.
    fn response_rows(&self, len: usize) -> Vec<Vec<Complex64>> {
        let k_phi = self.order();
        let mut rows = vec![vec![Complex64::new(0.0, 0.0); len]; k_phi];
        match self.kind {
            BasisKind::Bessel => {
                for (k, row) in rows.iter_mut().enumerate() {
                    let p = self.poles[k];
                    let mut pw = Complex64::new(1.0, 0.0);
                    for v in row.iter_mut() {
                        *v = pw;
                        pw *= p;
                    }
                }
            }
            BasisKind::Origin => {
                for (k, row) in rows.iter_mut().enumerate() {
                    if k < len {
                        row[k] = Complex64::new(1.0, 0.0);
                    }
                }
            }
            BasisKind::Laguerre => {
                let p = self.poles[0];
                for (k, row) in rows.iter_mut().enumerate() {
                    let mut pw = Complex64::new(1.0, 0.0);
                    for (m, v) in row.iter_mut().enumerate().skip(k) {
                        *v = poly::binomial(m as u64, k as u64) * pw;
                        pw *= p;
                    }
                }
            }
        }
        rows
    }

    /// Sample count after which every basis response (times a slow
    /// polynomial of degree tied to the family and constraint order) has
    /// decayed below 1e-14 of its peak.
    pub fn horizon(&self, k0: usize) -> usize {
        match self.kind {
            BasisKind::Origin => self.order() + k0 + 1,
            BasisKind::Bessel => {
                truncation_horizon(self.max_pole_magnitude(), self.order() + 2, k0)
            }
            BasisKind::Laguerre => {
                truncation_horizon(self.max_pole_magnitude(), 2 * self.order() + 1, k0)
            }
        }
    }

    /// Real impulse response of the weighted basis sum, with the largest
    /// relative imaginary residue encountered.
    fn weighted_impulse(&self, c: &[Complex64], len: usize) -> (Vec<f64>, f64) {
        let rows = self.response_rows(len);
        let mut h = vec![Complex64::new(0.0, 0.0); len];
        for (ck, row) in c.iter().zip(&rows) {
            for (acc, &v) in h.iter_mut().zip(row) {
                *acc += ck * v;
            }
        }
        let scale = h.iter().fold(0.0f64, |m, v| m.max(v.re.abs())).max(1e-300);
        let resid = h.iter().fold(0.0f64, |m, v| m.max(v.im.abs())) / scale;
        (h.into_iter().map(|v| v.re).collect(), resid)
    }
}

/// Number of samples needed before a tail `m^d r^m` drops below 1e-14,
/// plus `k0` slack for the difference chain, capped at one million.
pub fn truncation_horizon(max_abs_pole: f64, poly_degree: usize, k0: usize) -> usize {
    if max_abs_pole <= 0.0 {
        return poly_degree + k0 + 2;
    }
    if max_abs_pole >= 1.0 {
        return 1_000_000;
    }
    let target = 1e-14f64.ln();
    let lr = max_abs_pole.ln();
    let d = poly_degree as f64;
    let mut n = (target / lr).max(4.0);
    for _ in 0..4 {
        n = ((target - d * n.max(2.0).ln()) / lr).max(4.0);
    }
    (n.ceil() as usize + k0).min(1_000_000)
}

/// How the reference delay of an IIR design is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DelayPolicy {
    /// Stationary point of the noise-gain polynomial: the single one when
    /// unique, the middle one when three are real, otherwise the smallest.
    Optimal,
    /// Real stationary point with the smallest gain value.
    MinGain,
    /// Smallest real stationary point.
    MinDelay,
    /// Caller-supplied delay; `-1.0` yields the one-step predictor.
    Explicit(f64),
}

/// Moment-constraint system for one basis and colouring order.
pub struct ConstraintSystem {
    basis: BasisSet,
    k1: usize,
    k0: usize,
    horizon: usize,
    s: DMatrix<Complex64>,
    phi: DMatrix<Complex64>,
    s_inv_phi_h: DMatrix<Complex64>,
    gram_inv: DMatrix<Complex64>,
}

#[inline]
fn neg_i_pow(r: usize) -> Complex64 {
    match r % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, -1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, 1.0),
    }
}

#[inline]
fn i_pow(e: i64) -> Complex64 {
    match e.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
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

fn op_norm_estimate<F>(n: usize, mul: F) -> f64
where
    F: Fn(&DVector<Complex64>) -> DVector<Complex64>,
{
    let mut v = DVector::from_element(n, Complex64::new(1.0, 0.0));
    v /= Complex64::new(v.norm(), 0.0);
    let mut lam = 0.0;
    for _ in 0..24 {
        let w = mul(&v);
        lam = w.norm();
        if !(lam > 0.0) {
            return 0.0;
        }
        v = w / Complex64::new(lam, 0.0);
    }
    lam
}

impl ConstraintSystem {
    /// Build the coloured Gram matrix and dc-derivative constraints for
    /// `basis` under `k0` difference stages and `k1` moment conditions.
    pub fn new(basis: &BasisSet, k1: usize, k0: usize) -> Result<Self, IirError> {
        let k_phi = basis.order();
        if k1 == 0 || k1 > k_phi {
            return Err(IirError::BadOrder { k1, k_phi });
        }
        if k0 > MAX_DIFF_STAGES {
            return Err(IirError::BadColouring(k0));
        }
        let horizon = basis.horizon(k0);
        let rows = basis.response_rows(horizon);
        let hpf = diff_chain_impulse(k0);

        // coloured responses g_k = hpf * phi_k
        let glen = horizon + k0;
        let mut g = vec![vec![Complex64::new(0.0, 0.0); glen]; k_phi];
        for (gk, row) in g.iter_mut().zip(&rows) {
            for (j, &hj) in hpf.iter().enumerate() {
                for (m, &v) in row.iter().enumerate() {
                    gk[j + m] += hj * v;
                }
            }
        }

        // Gram of the coloured responses, mirrored to be exactly Hermitian
        let mut s = DMatrix::from_element(k_phi, k_phi, Complex64::new(0.0, 0.0));
        for j in 0..k_phi {
            for k in j..k_phi {
                let mut acc = Complex64::new(0.0, 0.0);
                for (a, b) in g[j].iter().zip(&g[k]) {
                    acc += a.conj() * b;
                }
                s[(j, k)] = acc;
                if k != j {
                    s[(k, j)] = acc.conj();
                } else {
                    s[(j, j)] = Complex64::new(acc.re, 0.0);
                }
            }
        }

        // dc derivatives of the basis responses: Phi[r][k] = sum (-i m)^r phi_k[m]
        let mut phi = DMatrix::from_element(k1, k_phi, Complex64::new(0.0, 0.0));
        for r in 0..k1 {
            let ir = neg_i_pow(r);
            for (k, row) in rows.iter().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for (m, &v) in row.iter().enumerate() {
                    acc += powk(m as f64, r) * v;
                }
                phi[(r, k)] = ir * acc;
            }
        }

        let chol = Cholesky::new(s.clone())
            .ok_or(IirError::IllConditioned(f64::INFINITY))?;
        let cond_s = op_norm_estimate(k_phi, |v| &s * v)
            * op_norm_estimate(k_phi, |v| chol.solve(v));
        if cond_s > 1e12 {
            return Err(IirError::IllConditioned(cond_s));
        }

        let s_inv_phi_h = chol.solve(&phi.adjoint());
        let gram = &phi * &s_inv_phi_h;
        let gram_inv = gram
            .clone()
            .lu()
            .try_inverse()
            .ok_or(IirError::IllConditioned(f64::INFINITY))?;
        let cond_g = op_norm_estimate(k1, |v| &gram * v)
            * op_norm_estimate(k1, |v| &gram_inv * v);
        if cond_g > 1e12 {
            return Err(IirError::IllConditioned(cond_g));
        }

        Ok(Self {
            basis: basis.clone(),
            k1,
            k0,
            horizon,
            s,
            phi,
            s_inv_phi_h,
            gram_inv,
        })
    }

    pub fn basis(&self) -> &BasisSet {
        &self.basis
    }

    pub fn constraint_order(&self) -> usize {
        self.k1
    }

    pub fn colouring_order(&self) -> usize {
        self.k0
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Coloured Gram matrix of the basis responses.
    pub fn gram(&self) -> &DMatrix<Complex64> {
        &self.s
    }

    /// dc-derivative constraint matrix, one row per moment order.
    pub fn constraints(&self) -> &DMatrix<Complex64> {
        &self.phi
    }

    fn delay_vector(&self, q: f64) -> DVector<Complex64> {
        DVector::from_fn(self.k1, |r, _| neg_i_pow(r) * powk(q, r))
    }

    /// Basis weights meeting the moment constraints at delay `q` with
    /// minimum coloured-noise gain.
    pub fn weights(&self, q: f64) -> Result<Vec<Complex64>, IirError> {
        if !q.is_finite() {
            return Err(IirError::BadDelay(q));
        }
        let d = self.delay_vector(q);
        let lam = &self.gram_inv * &d;
        let mut c = &self.s_inv_phi_h * lam;
        // one refinement pass against the exact constraint values
        let resid = &d - &self.phi * &c;
        c += &self.s_inv_phi_h * (&self.gram_inv * resid);
        Ok(c.iter().copied().collect())
    }

    /// Minimized coloured-noise gain as a polynomial in the delay,
    /// ascending coefficients of degree `2 (k1 - 1)`.
    pub fn gain_polynomial(&self) -> Result<Vec<f64>, IirError> {
        let deg = 2 * (self.k1 - 1);
        let mut vc = vec![Complex64::new(0.0, 0.0); deg + 1];
        for j in 0..self.k1 {
            for k in 0..self.k1 {
                vc[j + k] += self.gram_inv[(j, k)] * i_pow(j as i64 - k as i64);
            }
        }
        let scale = vc.iter().fold(1.0f64, |m, v| m.max(v.re.abs()));
        let resid = vc.iter().fold(0.0f64, |m, v| m.max(v.im.abs()));
        if resid > 1e-8 * scale {
            return Err(IirError::ComplexResidue(resid / scale));
        }
        Ok(vc.into_iter().map(|v| v.re).collect())
    }

    /// Minimized coloured-noise gain at delay `q`.
    pub fn gain_at(&self, q: f64) -> Result<f64, IirError> {
        let d = self.delay_vector(q);
        let lam = &self.gram_inv * &d;
        Ok(d.dotc(&lam).re)
    }

    /// Realize the weighted design as a single rational filter.
    pub fn realize(&self, weights: &[Complex64], q: f64) -> Result<IirFilter, IirError> {
        let k_phi = self.basis.order();
        if weights.len() != k_phi {
            return Err(IirError::BadWeights {
                got: weights.len(),
                want: k_phi,
            });
        }
        let one = Complex64::new(1.0, 0.0);
        let (b_c, a_c) = match self.basis.kind {
            BasisKind::Origin => {
                (weights.to_vec(), vec![one])
            }
            BasisKind::Bessel => {
                let mut a = vec![one];
                for &p in &self.basis.poles {
                    a = poly::convolve_c(&a, &[one, -p]);
                }
                let mut b = vec![Complex64::new(0.0, 0.0); k_phi];
                for (k, &ck) in weights.iter().enumerate() {
                    let mut num = vec![ck];
                    for (j, &p) in self.basis.poles.iter().enumerate() {
                        if j != k {
                            num = poly::convolve_c(&num, &[one, -p]);
                        }
                    }
                    for (i, v) in num.into_iter().enumerate() {
                        b[i] += v;
                    }
                }
                (b, a)
            }
            BasisKind::Laguerre => {
                let p = self.basis.poles[0];
                let factor = [one, -p];
                let mut a = vec![one];
                for _ in 0..k_phi {
                    a = poly::convolve_c(&a, &factor);
                }
                let mut b = vec![Complex64::new(0.0, 0.0); k_phi];
                for (k, &ck) in weights.iter().enumerate() {
                    let mut num = vec![ck];
                    for _ in 0..(k_phi - 1 - k) {
                        num = poly::convolve_c(&num, &factor);
                    }
                    for (i, v) in num.into_iter().enumerate() {
                        b[i + k] += v;
                    }
                }
                (b, a)
            }
        };
        let scale = b_c
            .iter()
            .chain(&a_c)
            .fold(0.0f64, |m, v| m.max(v.re.abs()))
            .max(1.0);
        let resid = b_c
            .iter()
            .chain(&a_c)
            .fold(0.0f64, |m, v| m.max(v.im.abs()))
            / scale;
        if resid > 1e-8 {
            return Err(IirError::ComplexResidue(resid));
        }
        let mut b: Vec<f64> = b_c.iter().map(|v| v.re).collect();
        let mut a: Vec<f64> = a_c.iter().map(|v| v.re).collect();
        b.resize(k_phi + 1, 0.0);
        a.resize(k_phi + 1, 0.0);

        // With only the dc constraint the requested delay never enters
        // the solve; record the delay the filter actually realizes.
        let q = if self.k1 == 1 {
            let log_slope = |c: &[f64]| {
                let m1: f64 = c.iter().enumerate().map(|(i, &v)| i as f64 * v).sum();
                m1 / c.iter().sum::<f64>()
            };
            log_slope(&b) - log_slope(&a)
        } else {
            q
        };

        let (h, h_resid) = self.basis.weighted_impulse(weights, self.horizon);
        let white = h.iter().map(|v| v * v).sum();
        let coloured = self.gain_at(q)?;
        Ok(IirFilter {
            b,
            a,
            poles: self.basis.poles.clone(),
            weights: weights.to_vec(),
            q,
            k1: self.k1,
            k0: self.k0,
            white_noise_gain: white,
            coloured_noise_gain: coloured,
            imag_residue: resid.max(h_resid),
        })
    }
}

/// Choose the reference delay from the gain polynomial per `policy`.
pub fn select_delay(gain_poly: &[f64], policy: DelayPolicy) -> Result<f64, IirError> {
    if let DelayPolicy::Explicit(q) = policy {
        if !q.is_finite() {
            return Err(IirError::BadDelay(q));
        }
        return Ok(q);
    }
    let der = poly::derivative(gain_poly);
    if der.iter().all(|&c| c == 0.0) {
        return Err(IirError::NoStationaryPoint);
    }
    let stationary = poly::real_roots(&poly::roots(&der));
    if stationary.is_empty() {
        return Err(IirError::NoStationaryPoint);
    }
    Ok(match policy {
        DelayPolicy::Optimal => match stationary.len() {
            1 => stationary[0],
            3 => stationary[1],
            _ => stationary[0],
        },
        DelayPolicy::MinGain => stationary
            .iter()
            .copied()
            .min_by(|&x, &y| poly::eval(gain_poly, x).total_cmp(&poly::eval(gain_poly, y)))
            .unwrap(),
        DelayPolicy::MinDelay => stationary[0],
        DelayPolicy::Explicit(_) => unreachable!(),
    })
}

/// Designed IIR filter in direct-form coefficients plus design metadata.
///
/// `b` and `a` both have `order + 1` entries with `a[0] = 1`; the final
/// numerator entry is structurally zero. `white_noise_gain` is the sum of
/// squared impulse-response samples, `coloured_noise_gain` the variance
/// gain against noise that passed the `k0`-stage difference chain.
#[derive(Clone, Debug, PartialEq)]
pub struct IirFilter {
    pub b: Vec<f64>,
    pub a: Vec<f64>,
    pub poles: Vec<Complex64>,
    pub weights: Vec<Complex64>,
    pub q: f64,
    pub k1: usize,
    pub k0: usize,
    pub white_noise_gain: f64,
    pub coloured_noise_gain: f64,
    pub imag_residue: f64,
}

impl IirFilter {
    pub fn order(&self) -> usize {
        self.poles.len()
    }
}

/// Full design pass: constraints, delay selection, weights, realization.
pub fn design_iir(
    basis: &BasisSet,
    k1: usize,
    k0: usize,
    policy: DelayPolicy,
) -> Result<IirFilter, IirError> {
    let sys = ConstraintSystem::new(basis, k1, k0)?;
    let q = match policy {
        DelayPolicy::Explicit(q) => {
            if !q.is_finite() {
                return Err(IirError::BadDelay(q));
            }
            q
        }
        // A single dc constraint leaves the gain independent of the
        // delay, so there is nothing to optimize over.
        _ if k1 == 1 => 0.0,
        _ => select_delay(&sys.gain_polynomial()?, policy)?,
    };
    let c = sys.weights(q)?;
    sys.realize(&c, q)
}
