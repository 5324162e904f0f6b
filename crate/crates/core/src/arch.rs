//! Archimedean special functions, Gaussian orbital integrals and the refined
//! invariant of a regular semisimple pair.
//!
//! Numerical kernels are generic over the float type; every value carries an
//! absolute error bound that is propagated through arithmetic.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::{Complex, Complex64};
use num_traits::{Float, FloatConst, One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{Mat, Poly, Vector};
use crate::orbit::InvariantVector;
use crate::padic::{int, QuadExtElem, Rat};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ArchError {
    #[error("tolerance not met: achieved {achieved:e}, requested {requested:e}")]
    ToleranceNotMet { achieved: f64, requested: f64 },
    #[error("argument outside the domain: {0}")]
    Domain(String),
    #[error("characteristic polynomial is reducible over F")]
    ReduciblePolynomial,
    #[error("trace form is singular")]
    SingularTraceForm,
    #[error("inconsistent invariant vector: {0}")]
    Inconsistent(String),
}

fn cst<T: Float>(x: f64) -> T {
    T::from(x).expect("float constant")
}

fn to_f64<T: Float>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Default absolute tolerance for quadratures: a thousand ulps at 1.
pub fn default_tol<T: Float>() -> T {
    T::epsilon() * cst(1000.0)
}

/// A real number with an absolute error bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArchValue<T> {
    pub value: T,
    pub err: T,
}

impl<T: Float> ArchValue<T> {
    pub fn new(value: T, err: T) -> Self {
        Self { value, err: err.abs() }
    }
    /// A floating-point number with its representation error.
    pub fn from_float(value: T) -> Self {
        Self { value, err: T::epsilon() * value.abs() }
    }
    pub fn zero() -> Self {
        Self { value: T::zero(), err: T::zero() }
    }
    pub fn contains(&self, x: T) -> bool {
        (x - self.value).abs() <= self.err
    }
    pub fn distance(&self, x: T) -> T {
        (x - self.value).abs()
    }
    /// Multiplication by an exact constant.
    pub fn scale(self, c: T) -> Self {
        let v = self.value * c;
        Self { value: v, err: self.err * c.abs() + T::epsilon() * v.abs() }
    }
    /// `exp` of an interval, with the bound taken at the upper endpoint.
    pub fn exp(self) -> Self {
        let v = self.value.exp();
        let hi = (self.value + self.err).exp();
        Self { value: v, err: (hi - v).abs() + T::epsilon() * v }
    }
}

impl<T: Float> Add for ArchValue<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let v = self.value + o.value;
        Self { value: v, err: self.err + o.err + T::epsilon() * v.abs() }
    }
}

impl<T: Float> Sub for ArchValue<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        let v = self.value - o.value;
        Self { value: v, err: self.err + o.err + T::epsilon() * v.abs() }
    }
}

impl<T: Float> Mul for ArchValue<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let v = self.value * o.value;
        let err = self.value.abs() * o.err + o.value.abs() * self.err + self.err * o.err;
        Self { value: v, err: err + T::epsilon() * v.abs() }
    }
}

impl<T: Float> Neg for ArchValue<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self { value: -self.value, err: self.err }
    }
}

/// A complex number with an absolute error bound on its modulus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArchComplex<T> {
    pub value: Complex<T>,
    pub err: T,
}

impl<T: Float> ArchComplex<T> {
    pub fn from_real(x: ArchValue<T>) -> Self {
        Self { value: Complex::new(x.value, T::zero()), err: x.err }
    }
    /// Multiplication by an exactly known complex constant.
    pub fn times(self, c: Complex<T>) -> Self {
        let v = self.value * c;
        Self { value: v, err: self.err * c.norm() + T::epsilon() * cst::<T>(4.0) * v.norm() }
    }
    pub fn distance(&self, z: Complex<T>) -> T {
        (z - self.value).norm()
    }
}

impl<T: Float> Add for ArchComplex<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let v = self.value + o.value;
        Self { value: v, err: self.err + o.err + T::epsilon() * v.norm() }
    }
}

impl<T: Float> Mul for ArchComplex<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let v = self.value * o.value;
        let err = self.value.norm() * o.err + o.value.norm() * self.err + self.err * o.err;
        Self { value: v, err: err + T::epsilon() * cst::<T>(4.0) * v.norm() }
    }
}

/// Integral over the real line of a smooth function with at least
/// exponential decay at both ends, by the trapezoidal rule with step
/// halving. Non-finite samples are read as zero (overflowed tails).
/// `tol` bounds the absolute error for results of modulus at most one and the
/// relative error beyond.
pub fn integrate_line<T: Float, F: Fn(T) -> T>(f: F, tol: T) -> Result<ArchValue<T>, ArchError> {
    let eval = |t: T| {
        let v = f(t);
        if v.is_finite() {
            v
        } else {
            T::zero()
        }
    };
    let half_width: T = cst(40.0);
    let coarse: T = cst(0.25);
    let n0 = 320usize;
    let mut samples = Vec::with_capacity(n0 + 1);
    let mut fmax = T::zero();
    for i in 0..=n0 {
        let t = -half_width + coarse * cst(i as f64);
        let v = eval(t);
        fmax = fmax.max(v.abs());
        samples.push(v);
    }
    if fmax.is_zero() {
        return Ok(ArchValue::zero());
    }
    let thresh = fmax * T::epsilon() * cst(1e-4);
    let first = samples.iter().position(|v| v.abs() > thresh).unwrap_or(0);
    let last = samples.iter().rposition(|v| v.abs() > thresh).unwrap_or(n0);
    let lo = first.saturating_sub(1);
    let hi = (last + 1).min(n0);
    let a = -half_width + coarse * cst(lo as f64);
    let b = -half_width + coarse * cst(hi as f64);
    let trunc = samples[lo].abs() + samples[hi].abs() + thresh * (b - a);

    let mut n = (hi - lo).max(1);
    let mut h = (b - a) / cst(n as f64);
    let mut sum = T::zero();
    let mut abssum = T::zero();
    for i in 0..=n {
        let v = eval(a + h * cst(i as f64));
        sum = sum + v;
        abssum = abssum + v.abs();
    }
    let mut est = sum * h;
    let mut diff = T::infinity();
    for level in 0..10 {
        let mut mid = T::zero();
        let mut absmid = T::zero();
        for i in 0..n {
            let v = eval(a + h * (cst::<T>(i as f64) + cst(0.5)));
            mid = mid + v;
            absmid = absmid + v.abs();
        }
        sum = sum + mid;
        abssum = abssum + absmid;
        n *= 2;
        h = h / cst(2.0);
        let next = sum * h;
        diff = (next - est).abs();
        est = next;
        let rounding = T::epsilon() * abssum * h * cst(4.0);
        let target = tol * est.abs().max(T::one());
        if level >= 1 && (diff <= target / cst(2.0) || diff <= rounding * cst(8.0)) {
            let err = diff + rounding + trunc;
            if err > target {
                return Err(ArchError::ToleranceNotMet { achieved: to_f64(err), requested: to_f64(tol) });
            }
            return Ok(ArchValue::new(est, err));
        }
    }
    Err(ArchError::ToleranceNotMet { achieved: to_f64(diff + trunc), requested: to_f64(tol) })
}

/// `K_s(c) = 1/2 ∫_0^∞ exp(-c(u + 1/u)/2) u^s du/u`.
pub fn bessel_k<T: Float>(s: T, c: T, tol: T) -> Result<ArchValue<T>, ArchError> {
    if !(c > T::zero()) {
        return Err(ArchError::Domain("bessel_k needs c > 0".into()));
    }
    let half: T = cst(0.5);
    integrate_line(|t| half * (s * t - c * t.cosh()).exp(), tol)
}

/// Derivative of `K_s(c)` in the order `s`.
pub fn bessel_k_dorder<T: Float>(s: T, c: T, tol: T) -> Result<ArchValue<T>, ArchError> {
    if !(c > T::zero()) {
        return Err(ArchError::Domain("bessel_k needs c > 0".into()));
    }
    let half: T = cst(0.5);
    integrate_line(|t| half * t * (s * t - c * t.cosh()).exp(), tol)
}

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

fn check_negative<T: Float>(x: T) -> Result<T, ArchError> {
    if x < T::zero() {
        Ok(-x)
    } else {
        Err(ArchError::Domain("Ei is evaluated at negative arguments only".into()))
    }
}

/// `Ei(-r) = γ + log r + Σ (-r)^n / (n·n!)`.
pub fn expint_ei_series<T: Float>(x: T) -> Result<ArchValue<T>, ArchError> {
    let r = check_negative(x)?;
    let mut term = T::one();
    let mut sum = T::zero();
    let mut abssum = T::zero();
    let mut n = 1usize;
    loop {
        term = term * (-r) / cst(n as f64);
        let c = term / cst(n as f64);
        sum = sum + c;
        abssum = abssum + c.abs();
        if (n as f64) > to_f64(r) && c.abs() <= T::epsilon() * sum.abs().max(T::min_positive_value()) {
            break;
        }
        n += 1;
        if n > 1000 {
            return Err(ArchError::ToleranceNotMet { achieved: to_f64(c.abs()), requested: to_f64(T::epsilon()) });
        }
    }
    let head = cst::<T>(EULER_GAMMA) + r.ln();
    let value = head + sum;
    let err = T::epsilon() * (abssum + head.abs() + cst(2.0)) * cst(4.0);
    Ok(ArchValue::new(value, err))
}

/// `Ei(-r) = -E_1(r)` from the continued fraction of `E_1`.
pub fn expint_ei_cf<T: Float>(x: T) -> Result<ArchValue<T>, ArchError> {
    let r = check_negative(x)?;
    let tiny = T::min_positive_value() / T::epsilon();
    let mut b = r + T::one();
    let mut c = T::one() / tiny;
    let mut d = T::one() / b;
    let mut h = d;
    for i in 1..10_000usize {
        let an = -cst::<T>((i * i) as f64);
        b = b + cst(2.0);
        d = T::one() / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h = h * del;
        if (del - T::one()).abs() <= T::epsilon() {
            let value = -h * (-r).exp();
            let err = value.abs() * T::epsilon() * cst::<T>(16.0) * cst::<T>(i as f64).sqrt().max(T::one());
            return Ok(ArchValue::new(value, err));
        }
    }
    Err(ArchError::ToleranceNotMet { achieved: f64::NAN, requested: to_f64(T::epsilon()) })
}

/// `Ei(x)` for `x < 0`: series for `|x| <= 2`, continued fraction beyond.
pub fn expint_ei<T: Float>(x: T) -> Result<ArchValue<T>, ArchError> {
    let r = check_negative(x)?;
    if r <= cst(2.0) {
        expint_ei_series(x)
    } else {
        expint_ei_cf(x)
    }
}

/// `Ei(-r) = -∫_r^∞ e^{-t}/t dt` by quadrature in `t = r + e^y`.
pub fn expint_ei_quadrature<T: Float>(x: T, tol: T) -> Result<ArchValue<T>, ArchError> {
    let r = check_negative(x)?;
    let v = integrate_line(
        |y| {
            let e = y.exp();
            (-r - e).exp() * e / (r + e)
        },
        tol,
    )?;
    Ok(-v)
}

/// Iwasawa coordinates `h = n(b) m(a^{1/2}) κ_θ` of an element of `SL_2(R)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Iwasawa<T> {
    pub a: T,
    pub b: T,
    pub theta: T,
}

impl<T: Float> Iwasawa<T> {
    pub fn identity() -> Self {
        Self { a: T::one(), b: T::zero(), theta: T::zero() }
    }
    pub fn new(a: T, b: T, theta: T) -> Result<Self, ArchError> {
        if !(a > T::zero()) {
            return Err(ArchError::Domain("Iwasawa coordinate a must be positive".into()));
        }
        Ok(Self { a, b, theta })
    }
}

/// `χ_k(κ_θ) = e^{ikθ}`.
pub fn chi<T: Float>(k: i64, theta: T) -> Complex<T> {
    Complex::from_polar(T::one(), cst::<T>(k as f64) * theta)
}

fn sign<T: Float>(x: T) -> T {
    if x < T::zero() {
        -T::one()
    } else {
        T::one()
    }
}

/// Orbital integral of the Gaussian on `V'_1` translated by `h`, at the
/// orbit with invariant `xi`, or its derivative in `s` when `deriv` is set:
/// `χ_1(κ_θ) e^{πiξb} a^{(1+s)/2} 2^{-1/2} X^{(1-s)/2} (K_{(1-s)/2}(πX) + η(ξ) K_{(1+s)/2}(πX))`,
/// `X = a|ξ|`.
pub fn orb_arch<T: Float + FloatConst>(
    xi: T,
    s: T,
    deriv: bool,
    h: Iwasawa<T>,
) -> Result<ArchComplex<T>, ArchError> {
    orb_arch_tol(xi, s, deriv, h, default_tol())
}

pub fn orb_arch_tol<T: Float + FloatConst>(
    xi: T,
    s: T,
    deriv: bool,
    h: Iwasawa<T>,
    tol: T,
) -> Result<ArchComplex<T>, ArchError> {
    if xi.is_zero() || !xi.is_finite() {
        return Err(ArchError::Domain("orb_arch needs a nonzero invariant".into()));
    }
    let h = Iwasawa::new(h.a, h.b, h.theta)?;
    let half: T = cst(0.5);
    let eta = sign(xi);
    let x = h.a * xi.abs();
    let arg = T::PI() * x;
    let nu_m = (T::one() - s) * half;
    let nu_p = (T::one() + s) * half;
    let km = bessel_k(nu_m, arg, tol)?;
    let kp = bessel_k(nu_p, arg, tol)?;
    let pref = half.sqrt() * h.a.powf(nu_p) * x.powf(nu_m);
    let pref = ArchValue::from_float(pref);
    let sum = km + kp.scale(eta);
    let real = if deriv {
        let dkm = bessel_k_dorder(nu_m, arg, tol)?;
        let dkp = bessel_k_dorder(nu_p, arg, tol)?;
        let logs = ArchValue::from_float(half * (h.a.ln() - x.ln()));
        pref * (logs * sum - dkm.scale(half) + dkp.scale(half * eta))
    } else {
        pref * sum
    };
    let phase = chi(1, h.theta) * Complex::from_polar(T::one(), T::PI() * xi * h.b);
    Ok(ArchComplex::from_real(real).times(phase))
}

/// Value and `s`-derivative at `s = 0` in closed form:
/// for `ξ > 0` the value is `χ_1 a^{1/2} e^{πiξ(b+ia)}` and the derivative
/// `-1/2 log ξ` times it; for `ξ < 0` the value vanishes and the derivative
/// is `1/2 χ_1 a^{1/2} e^{πiξ(b+ia)} Ei(-2πa|ξ|)`.
pub fn orb_arch_special<T: Float + FloatConst>(
    xi: T,
    h: Iwasawa<T>,
) -> Result<(ArchComplex<T>, ArchComplex<T>), ArchError> {
    if xi.is_zero() || !xi.is_finite() {
        return Err(ArchError::Domain("orb_arch needs a nonzero invariant".into()));
    }
    let h = Iwasawa::new(h.a, h.b, h.theta)?;
    let half: T = cst(0.5);
    let mut base = chi(1, h.theta) * Complex::from_polar(T::one(), T::PI() * xi * h.b);
    base = base * (h.a.sqrt() * (-T::PI() * xi * h.a).exp());
    let exact = |z: Complex<T>| ArchComplex { value: z, err: T::epsilon() * cst::<T>(8.0) * z.norm() };
    if xi > T::zero() {
        let value = exact(base);
        let d = exact(base * (-half * xi.ln()));
        Ok((value, d))
    } else {
        let ei = expint_ei(-cst::<T>(2.0) * T::PI() * h.a * xi.abs())?;
        let value = ArchComplex { value: Complex::zero(), err: T::zero() };
        let d = ArchComplex::from_real(ei).times(base * half);
        Ok((value, d))
    }
}

/// `2^{-1/2} ∫_0^∞ (t + η|ξ|/t) e^{-π(t² + ξ²/t²)/2} t^{-s} dt/t`, or its
/// `s`-derivative, by quadrature.
pub fn orb_arch_quadrature<T: Float + FloatConst>(xi: T, s: T, deriv: bool) -> Result<ArchValue<T>, ArchError> {
    orb_arch_quadrature_tol(xi, s, deriv, default_tol())
}

pub fn orb_arch_quadrature_tol<T: Float + FloatConst>(
    xi: T,
    s: T,
    deriv: bool,
    tol: T,
) -> Result<ArchValue<T>, ArchError> {
    if xi.is_zero() || !xi.is_finite() {
        return Err(ArchError::Domain("orb_arch needs a nonzero invariant".into()));
    }
    let half: T = cst(0.5);
    let c = half.sqrt();
    let eta = sign(xi);
    let ax = xi.abs();
    integrate_line(
        |y| {
            let t = y.exp();
            let ti = (-y).exp();
            let expo = -T::PI() * half * (t * t + ax * ax * ti * ti) - s * y;
            let v = c * (t + eta * ax * ti) * expo.exp();
            if deriv {
                -y * v
            } else {
                v
            }
        },
        tol,
    )
}

/// Product of rank-one orbital integrals over the given per-factor
/// invariants, all translated by the same `h`; with `deriv` the
/// `s`-derivative by the product rule.
pub fn orb_arch_product<T: Float + FloatConst>(
    xis: &[T],
    s: T,
    deriv: bool,
    h: Iwasawa<T>,
) -> Result<ArchComplex<T>, ArchError> {
    if xis.is_empty() {
        return Err(ArchError::Domain("empty invariant list".into()));
    }
    let vals: Vec<ArchComplex<T>> = xis.iter().map(|&x| orb_arch(x, s, false, h)).collect::<Result<_, _>>()?;
    let one = ArchComplex { value: Complex::new(T::one(), T::zero()), err: T::zero() };
    if !deriv {
        return Ok(vals.into_iter().fold(one, |acc, v| acc * v));
    }
    let ders: Vec<ArchComplex<T>> = xis.iter().map(|&x| orb_arch(x, s, true, h)).collect::<Result<_, _>>()?;
    let zero = ArchComplex { value: Complex::zero(), err: T::zero() };
    let mut total = zero;
    for i in 0..xis.len() {
        let mut term = ders[i];
        for (j, v) in vals.iter().enumerate() {
            if j != i {
                term = term * *v;
            }
        }
        total = total + term;
    }
    Ok(total)
}

/// Nilpotent orbital integral of the Gaussian, `2^{s/2 - 1}`.
pub fn nilpotent_arch<T: Float>(s: T) -> ArchValue<T> {
    let two: T = cst(2.0);
    ArchValue::from_float(two.powf(s / two - T::one())).scale(T::one())
}

/// The nilpotent orbital integral translated by `h`:
/// `χ_1(κ_θ) a^{(1-s)/2} 2^{s/2 - 1}`.
pub fn nilpotent_arch_at<T: Float>(s: T, h: Iwasawa<T>) -> ArchComplex<T> {
    let half: T = cst(0.5);
    let v = nilpotent_arch(s).scale(h.a.powf((T::one() - s) * half));
    ArchComplex::from_real(v).times(chi(1, h.theta))
}

/// `Γ(z) = ∫_R exp(z y - e^y) dy` for `z > 0`.
pub fn gamma_quadrature<T: Float>(z: T, tol: T) -> Result<ArchValue<T>, ArchError> {
    if !(z > T::zero()) {
        return Err(ArchError::Domain("gamma_quadrature needs z > 0".into()));
    }
    // y = x - e^{-x} turns the e^{zy} decay at -∞ into a double exponential.
    integrate_line(
        |x| {
            let e = (-x).exp();
            let y = x - e;
            (z * y - y.exp()).exp() * (T::one() + e)
        },
        tol,
    )
}

/// Tate integral `2^{-3/2} · 2 ∫_0^∞ e^{-πx²/2} x^{s+1} dx/x` divided by the
/// local factor `π^{-(s+1)/2} Γ((s+1)/2)`, both by quadrature.
pub fn nilpotent_arch_tate<T: Float + FloatConst>(s: T, tol: T) -> Result<ArchValue<T>, ArchError> {
    if !(s > -T::one()) {
        return Err(ArchError::Domain("the Tate integral converges for s > -1".into()));
    }
    let half: T = cst(0.5);
    let num = integrate_line(|y| half.sqrt() * (-T::PI() * half * (y + y).exp() + (s + T::one()) * y).exp(), tol)?;
    let z = (s + T::one()) * half;
    let g = gamma_quadrature(z, tol)?;
    let l = g.scale(T::PI().powf(-z));
    let q = num.value / l.value;
    let err = q.abs() * (num.err / num.value.abs() + l.err / l.value.abs()) + T::epsilon() * q.abs();
    Ok(ArchValue::new(q, err))
}

/// Whittaker function `|a|^{k/2} e^{2πiξ(b+ai)} χ_k(κ_θ)`.
pub fn whittaker<T: Float + FloatConst>(k: i64, xi: T, h: Iwasawa<T>) -> Result<ArchComplex<T>, ArchError> {
    let h = Iwasawa::new(h.a, h.b, h.theta)?;
    let two: T = cst(2.0);
    let modulus = h.a.abs().powf(cst::<T>(k as f64) / two) * (-two * T::PI() * xi * h.a).exp();
    let z = Complex::from_polar(modulus, two * T::PI() * xi * h.b) * chi(k, h.theta);
    Ok(ArchComplex { value: z, err: T::epsilon() * cst::<T>(8.0) * z.norm() })
}

/// Roots of a complex polynomial (coefficients low to high) by
/// Durand-Kerner iteration followed by Newton polishing.
pub fn poly_roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut c: Vec<Complex64> = coeffs.to_vec();
    while c.last().is_some_and(|z| z.norm() == 0.0) {
        c.pop();
    }
    let n = c.len().saturating_sub(1);
    if n == 0 {
        return Vec::new();
    }
    let lead = c[n];
    for z in c.iter_mut() {
        *z /= lead;
    }
    let eval = |z: Complex64| c.iter().rev().fold(Complex64::zero(), |acc, a| acc * z + a);
    let deriv = |z: Complex64| {
        (1..=n).rev().fold(Complex64::zero(), |acc, i| acc * z + c[i] * i as f64)
    };
    let radius = 1.0 + c[..n].iter().map(|z| z.norm()).fold(0.0, f64::max);
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..n).map(|k| seed.powu(k as u32) * radius).collect();
    for _ in 0..2000 {
        let mut change: f64 = 0.0;
        for k in 0..n {
            let mut den = Complex64::one();
            for j in 0..n {
                if j != k {
                    den *= roots[k] - roots[j];
                }
            }
            if den.norm() == 0.0 {
                den = Complex64::new(1e-300, 0.0);
            }
            let step = eval(roots[k]) / den;
            roots[k] -= step;
            change = change.max(step.norm() / (1.0 + roots[k].norm()));
        }
        if change < 1e-15 {
            break;
        }
    }
    for r in roots.iter_mut() {
        for _ in 0..3 {
            let d = deriv(*r);
            if d.norm() > 0.0 {
                *r -= eval(*r) / d;
            }
        }
    }
    roots
}

/// The refined invariant `ξ'` of a regular semisimple pair: the value of the
/// hermitian form on `u` when `V` is viewed as a line over `F' = F[δ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RefinedInvariant {
    /// Monic minimal polynomial over `Q` of the generator `t` of `F_0'`
    /// (coefficients low to high), so `F_0' = Q[T]/(α_0)`.
    pub alpha0: Vec<Rat>,
    /// `t = δ + δ^{-1} + k·sqrt(d)(δ - δ^{-1})` with this `k`.
    pub generator_shift: i64,
    /// `ξ'` as a polynomial in `t` with rational coefficients.
    pub xi_prime: Vec<Rat>,
    /// `ξ'` in the basis `1, δ, ..., δ^{m-1}` of `F'` over `F`.
    pub xi_prime_delta: Vector,
    /// Values of `ξ'` at the real roots of `α_0`, in increasing root order.
    pub embeddings: Vec<ArchValue<f64>>,
}

impl RefinedInvariant {
    /// `tr_{F_0'/Q}(ξ')`, which equals the coarse invariant.
    pub fn trace(&self) -> Rat {
        let m = self.alpha0.len() - 1;
        let d = -1;
        let a0 = Poly::from_rats(&self.alpha0, d);
        let c = Mat::companion(&a0);
        let mut acc = Rat::zero();
        let mut pw = Mat::identity(m, d);
        for e in &self.xi_prime {
            acc += e * pw.trace().a;
            pw = pw.mul(&c);
        }
        acc
    }
    /// Number of real places where `ξ'` is negative.
    pub fn negative_places(&self) -> usize {
        self.embeddings.iter().filter(|e| e.value < 0.0).count()
    }
}

fn is_squarefree_poly(p: &Poly) -> bool {
    p.gcd(&p.derivative()).degree() == Some(0)
}

fn lcm(a: &num_bigint::BigInt, b: &num_bigint::BigInt) -> num_bigint::BigInt {
    use num_integer::Integer;
    a.lcm(b)
}

/// Whether a squarefree monic `alpha` over `F = Q(sqrt d)`, `d < 0`, has a
/// proper monic factor over `F`. Candidate factors are built from subsets of
/// numerical roots, rounded to `O_F` after clearing denominators, and tested
/// by exact division.
fn has_factor_over_f(alpha: &Poly) -> bool {
    let m = alpha.degree().unwrap_or(0);
    if m < 2 {
        return false;
    }
    let d = alpha.d;
    let mut den = num_bigint::BigInt::one();
    for c in alpha.coeffs() {
        den = lcm(&den, c.a.denom());
        den = lcm(&den, c.b.denom());
    }
    let dr = Rat::from_integer(den.clone());
    // beta(T) = D^m alpha(T / D) is monic with coefficients in Z[sqrt d].
    let beta = Poly::new(
        (0..=m).map(|i| alpha.coeff(i).scale(&num_traits::pow(dr.clone(), m - i))).collect(),
        d,
    );
    let roots = poly_roots(&beta.coeffs().iter().map(|c| c.to_complex()).collect::<Vec<_>>());
    let sq = ((-d) as f64).sqrt();
    for mask in 1u32..(1 << m) - 1 {
        let k = mask.count_ones() as usize;
        if k > m / 2 {
            continue;
        }
        let mut prod = vec![Complex64::one()];
        for (j, r) in roots.iter().enumerate() {
            if mask & (1 << j) != 0 {
                let mut next = vec![Complex64::zero(); prod.len() + 1];
                for (i, c) in prod.iter().enumerate() {
                    next[i + 1] += c;
                    next[i] -= c * r;
                }
                prod = next;
            }
        }
        let cand = Poly::new(
            prod.iter()
                .map(|z| {
                    let a = (2.0 * z.re).round() as i64;
                    let b = (2.0 * z.im / sq).round() as i64;
                    QuadExtElem::new(Rat::new(a.into(), 2.into()), Rat::new(b.into(), 2.into()), d)
                })
                .collect(),
            d,
        );
        if cand.degree() == Some(k) && beta.divrem(&cand).1.is_zero() {
            return true;
        }
    }
    false
}

/// Solves `A x = b` exactly.
fn solve(a: &Mat, b: &[QuadExtElem]) -> Option<Vector> {
    a.inverse().map(|inv| inv.mul_vec(b))
}

/// Recovers `ξ' ∈ F_0'` from the moments `a_i = tr_{F'/F}(δ^i ξ')`.
pub fn refined_invariant(iv: &InvariantVector) -> Result<RefinedInvariant, ArchError> {
    let alpha = iv.charpoly.monic();
    let d = alpha.d;
    if d >= 0 {
        return Err(ArchError::Domain("F must be imaginary quadratic".into()));
    }
    let m = alpha.degree().ok_or_else(|| ArchError::Domain("zero characteristic polynomial".into()))?;
    if m == 0 || iv.moments.len() != m {
        return Err(ArchError::Inconsistent("moment count differs from the degree".into()));
    }
    if alpha.coeff(0).is_zero() {
        return Err(ArchError::Inconsistent("delta is not invertible".into()));
    }
    if !is_squarefree_poly(&alpha) || has_factor_over_f(&alpha) {
        return Err(ArchError::ReduciblePolynomial);
    }
    let c = Mat::companion(&alpha);
    let cinv = c.inverse().expect("invertible companion");
    let mut powers = vec![Mat::identity(m, d)];
    for _ in 1..(2 * m - 1).max(1) {
        let next = powers.last().unwrap().mul(&c);
        powers.push(next);
    }
    let mut tr = Mat::zeros(m, m, d);
    for i in 0..m {
        for j in 0..m {
            tr[(i, j)] = powers[i + j].trace();
        }
    }
    let coef = solve(&tr, &iv.moments).ok_or(ArchError::SingularTraceForm)?;
    let xi_mat = (0..m).fold(Mat::zeros(m, m, d), |acc, j| acc.add(&powers[j].scale(&coef[j])));
    let mut inv_pow = Mat::identity(m, d);
    let mut bar = Mat::zeros(m, m, d);
    for cj in &coef {
        bar = bar.add(&inv_pow.scale(&cj.conj()));
        inv_pow = inv_pow.mul(&cinv);
    }
    if bar != xi_mat {
        return Err(ArchError::Inconsistent("xi' is not fixed by the involution".into()));
    }

    let sq = QuadExtElem::sqrt_d(d);
    for shift in 0..(2 * m as i64 + 4) {
        let t = c.add(&cinv).add(&c.sub(&cinv).scale(&sq.scale(&int(shift))));
        let chi_t = t.charpoly();
        if !chi_t.coeffs().iter().all(|x| x.is_rational()) || !is_squarefree_poly(&chi_t) {
            continue;
        }
        let mut cols = Vec::with_capacity(m);
        let mut v = crate::linalg::unit_vector(m, 0, d);
        for _ in 0..m {
            cols.push(v.clone());
            v = t.mul_vec(&v);
        }
        let basis = Mat::from_cols(&cols, d);
        let e = solve(&basis, &coef).ok_or(ArchError::SingularTraceForm)?;
        if !e.iter().all(|x| x.is_rational()) {
            return Err(ArchError::Inconsistent("xi' does not lie in F_0'".into()));
        }
        let alpha0: Vec<Rat> = chi_t.coeffs().iter().map(|x| x.a.clone()).collect();
        let xi_prime: Vec<Rat> = e.iter().map(|x| x.a.clone()).collect();
        let embeddings = real_embeddings(&alpha0, &xi_prime)?;
        let out = RefinedInvariant {
            alpha0,
            generator_shift: shift,
            xi_prime,
            xi_prime_delta: coef,
            embeddings,
        };
        if out.trace() != iv.moments[0].a || !iv.moments[0].is_rational() {
            return Err(ArchError::Inconsistent("trace of xi' differs from the coarse invariant".into()));
        }
        return Ok(out);
    }
    Err(ArchError::Inconsistent("no rational generator of F_0' found".into()))
}

fn rat_f64(r: &Rat) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

fn real_embeddings(alpha0: &[Rat], xi: &[Rat]) -> Result<Vec<ArchValue<f64>>, ArchError> {
    let cs: Vec<Complex64> = alpha0.iter().map(|r| Complex64::new(rat_f64(r), 0.0)).collect();
    let roots = poly_roots(&cs);
    let scale = 1.0 + cs.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut reals = Vec::with_capacity(roots.len());
    for r in &roots {
        if r.im.abs() > 1e-7 * scale {
            return Err(ArchError::Domain("F_0' is not totally real".into()));
        }
        reals.push(r.re);
    }
    reals.sort_by(f64::total_cmp);
    let p = |x: f64| cs.iter().rev().fold(0.0, |acc, c| acc * x + c.re);
    let dp = |x: f64| (1..cs.len()).rev().fold(0.0, |acc, i| acc * x + cs[i].re * i as f64);
    let xf: Vec<f64> = xi.iter().map(rat_f64).collect();
    let val = |x: f64| xf.iter().rev().fold(0.0, |acc, c| acc * x + c);
    let dval = |x: f64| (1..xf.len()).rev().fold(0.0, |acc, i| acc * x + xf[i] * i as f64);
    Ok(reals
        .into_iter()
        .map(|x| {
            let dx = (p(x) / dp(x)).abs() + f64::EPSILON * x.abs() * 16.0;
            let mag: f64 = xf.iter().enumerate().map(|(i, c)| c.abs() * x.abs().powi(i as i32)).sum();
            ArchValue::new(val(x), dval(x).abs() * dx + f64::EPSILON * mag * 8.0)
        })
        .collect())
}
