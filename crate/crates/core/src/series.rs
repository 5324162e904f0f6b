//! Log-linear coefficients, q-expansions, Fourier-coefficient support checks
//! and the rank-one global functional equation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::arch::{self, ArchError, ArchValue, Iwasawa};
use crate::linalg::Poly;
use crate::orbit::InvariantVector;
use crate::orbital::{fl_verify, special_values, LaurentX, OrbitalError, SpecialValues};
use crate::padic::{fmt_rat, int, is_prime, legendre, pow_p_rat, vp, LocalFieldCtx, QuadExtElem, Rat};

#[derive(Debug, Error)]
pub enum SeriesError {
    #[error("more than one place is flagged as the derivative place")]
    MultipleDerivativePlaces,
    #[error("exponent {0} is negative or not in (1/N)Z")]
    BadExponent(String),
    #[error("q-expansions have different weight or level")]
    Incompatible,
    #[error("unsupported discriminant {0}: need a fundamental discriminant divisible by one prime")]
    UnsupportedDiscriminant(i64),
    #[error("s = {0} is outside (-1, 1)")]
    OutOfRange(f64),
    #[error("tolerance not met: numerical error {achieved:e} exceeds {requested:e}")]
    ToleranceNotMet { achieved: f64, requested: f64 },
    #[error(transparent)]
    Arch(#[from] ArchError),
    #[error(transparent)]
    Orbital(#[from] OrbitalError),
}

/// `constant + Σ_p c_p log p` with rational coefficients; equality is exact
/// because the `log p` are linearly independent over `Q`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LogLinear {
    pub constant: Rat,
    pub logs: BTreeMap<u64, Rat>,
}

impl LogLinear {
    pub fn zero() -> Self {
        Self::default()
    }
    pub fn constant(c: Rat) -> Self {
        Self { constant: c, logs: BTreeMap::new() }
    }
    /// `c log p`.
    pub fn log_term(p: u64, c: Rat) -> Self {
        let mut out = Self::zero();
        out.add_log(p, c);
        out
    }
    fn add_log(&mut self, p: u64, c: Rat) {
        let e = self.logs.entry(p).or_insert_with(Rat::zero);
        *e += c;
        if e.is_zero() {
            self.logs.remove(&p);
        }
    }
    pub fn is_zero(&self) -> bool {
        self.constant.is_zero() && self.logs.is_empty()
    }
    pub fn add(&self, o: &LogLinear) -> LogLinear {
        let mut out = self.clone();
        out.constant += &o.constant;
        for (p, c) in &o.logs {
            out.add_log(*p, c.clone());
        }
        out
    }
    pub fn neg(&self) -> LogLinear {
        self.scale(&int(-1))
    }
    pub fn sub(&self, o: &LogLinear) -> LogLinear {
        self.add(&o.neg())
    }
    pub fn scale(&self, r: &Rat) -> LogLinear {
        if r.is_zero() {
            return LogLinear::zero();
        }
        LogLinear {
            constant: &self.constant * r,
            logs: self.logs.iter().map(|(p, c)| (*p, c * r)).collect(),
        }
    }
    pub fn to_f64(&self) -> f64 {
        self.constant.to_f64().unwrap_or(f64::NAN)
            + self.logs.iter().map(|(p, c)| c.to_f64().unwrap_or(f64::NAN) * (*p as f64).ln()).sum::<f64>()
    }
}

impl fmt::Display for LogLinear {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if !self.constant.is_zero() || self.logs.is_empty() {
            parts.push(fmt_rat(&self.constant));
        }
        for (p, c) in &self.logs {
            parts.push(format!("({}) log {}", fmt_rat(c), p));
        }
        write!(f, "{}", parts.join(" + "))
    }
}

/// Formal q-expansion `Σ_{ξ ≥ 0, ξ ∈ (1/N)Z} A_ξ q^ξ` with log-linear
/// coefficients. Zero coefficients are not stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QExp {
    pub weight: i64,
    pub level: u64,
    coeffs: BTreeMap<Rat, LogLinear>,
}

impl QExp {
    pub fn new(weight: i64, level: u64) -> Self {
        Self { weight, level: level.max(1), coeffs: BTreeMap::new() }
    }
    fn check_exponent(&self, xi: &Rat) -> Result<(), SeriesError> {
        let scaled = xi * int(self.level as i64);
        if xi.is_negative() || !scaled.is_integer() {
            return Err(SeriesError::BadExponent(fmt_rat(xi)));
        }
        Ok(())
    }
    /// Adds `c q^ξ`.
    pub fn add_term(&mut self, xi: Rat, c: &LogLinear) -> Result<(), SeriesError> {
        self.check_exponent(&xi)?;
        let e = self.coeffs.entry(xi.clone()).or_default();
        *e = e.add(c);
        if e.is_zero() {
            self.coeffs.remove(&xi);
        }
        Ok(())
    }
    pub fn coeff(&self, xi: &Rat) -> LogLinear {
        self.coeffs.get(xi).cloned().unwrap_or_default()
    }
    pub fn coeffs(&self) -> &BTreeMap<Rat, LogLinear> {
        &self.coeffs
    }
    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }
    pub fn add(&self, o: &QExp) -> Result<QExp, SeriesError> {
        if self.weight != o.weight || self.level != o.level {
            return Err(SeriesError::Incompatible);
        }
        let mut out = self.clone();
        for (xi, c) in &o.coeffs {
            out.add_term(xi.clone(), c)?;
        }
        Ok(out)
    }
    pub fn scale(&self, r: &Rat) -> QExp {
        let mut out = QExp::new(self.weight, self.level);
        if !r.is_zero() {
            out.coeffs = self.coeffs.iter().map(|(k, c)| (k.clone(), c.scale(r))).collect();
        }
        out
    }
    pub fn sub(&self, o: &QExp) -> Result<QExp, SeriesError> {
        self.add(&o.scale(&int(-1)))
    }
}

/// Contribution of one place to a Fourier coefficient.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlaceDatum {
    /// A place contributing the special value of its orbital integral.
    Value(SpecialValues),
    /// The place at which the derivative is taken; contributes `dvalue0 · log p`.
    Derivative { p: u64, special: SpecialValues },
    /// A place contributing a plain rational factor.
    Rational(Rat),
}

impl PlaceDatum {
    /// Datum of an orbital integral `omega · P(X)` at `p`.
    pub fn from_orbital(p: u64, orbital: &LaurentX, omega: i8, derivative: bool) -> Self {
        let special = special_values(orbital, omega);
        if derivative {
            PlaceDatum::Derivative { p, special }
        } else {
            PlaceDatum::Value(special)
        }
    }
}

/// `arch · Π_v value_v`, where the derivative place (if any) contributes
/// `dvalue0 · log q_v` in place of its value.
pub fn assemble_coefficient(places: &[PlaceDatum], arch: &Rat) -> Result<LogLinear, SeriesError> {
    let mut factor = arch.clone();
    let mut deriv_place = None;
    for pl in places {
        match pl {
            PlaceDatum::Value(sv) => factor *= &sv.value0,
            PlaceDatum::Rational(r) => factor *= r,
            PlaceDatum::Derivative { p, special } => {
                if deriv_place.is_some() {
                    return Err(SeriesError::MultipleDerivativePlaces);
                }
                deriv_place = Some((*p, special.dvalue0.clone()));
            }
        }
    }
    Ok(match deriv_place {
        None => LogLinear::constant(factor),
        Some((p, d)) => LogLinear::log_term(p, factor * d),
    })
}

/// Result of [`support_check`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportReport {
    pub all_coprime_vanish: bool,
    /// Exponents coprime to `B` with a nonzero coefficient.
    pub witnesses: Vec<Rat>,
}

/// Whether every coefficient at an exponent `ξ` with `v_p(ξ) = 0` for all
/// `p ∈ B` vanishes.
pub fn support_check(f: &QExp, b: &BTreeSet<u64>) -> SupportReport {
    let witnesses: Vec<Rat> = f
        .coeffs
        .iter()
        .filter(|(xi, c)| !xi.is_zero() && !c.is_zero() && b.iter().all(|&p| vp(xi, p) == Some(0)))
        .map(|(xi, _)| xi.clone())
        .collect();
    SupportReport { all_coprime_vanish: witnesses.is_empty(), witnesses }
}

/// The rank-one fundamental-lemma difference series: the coefficient of
/// `q^ξ`, `1 <= ξ <= max_xi`, is
/// `Σ_p (ω Orb_p(ξ, 0) - #_p(ξ)) · Π_{ℓ ≠ p} ω Orb_ℓ(ξ, 0)`, where `#_p` is
/// the unitary lattice count (zero on the nonsplit side).
pub fn fl_difference_series(primes: &[u64], max_xi: u64) -> Result<QExp, SeriesError> {
    let ctxs: Vec<LocalFieldCtx> = primes
        .iter()
        .map(|&p| LocalFieldCtx::with_default_d(p))
        .collect::<Result<_, _>>()
        .map_err(|e| SeriesError::Orbital(OrbitalError::PreconditionFailed(e.to_string())))?;
    let rows: Vec<(u64, LogLinear)> = (1..=max_xi)
        .into_par_iter()
        .map(|xi| -> Result<(u64, LogLinear), SeriesError> {
            let mut diffs = Vec::with_capacity(ctxs.len());
            let mut values = Vec::with_capacity(ctxs.len());
            for ctx in &ctxs {
                let d = ctx.d;
                let charpoly = Poly::new(vec![QuadExtElem::from_int(-1, d), QuadExtElem::one(d)], d);
                let iv = InvariantVector::new(charpoly, vec![QuadExtElem::from_int(xi as i64, d)]);
                let r = fl_verify(&iv, ctx)?;
                let count = int(r.orb_u.unwrap_or(0) as i64);
                diffs.push(&r.orb_gl_special.value0 - count);
                values.push(r.orb_gl_special.value0.clone());
            }
            let mut total = LogLinear::zero();
            for i in 0..ctxs.len() {
                let mut places = vec![PlaceDatum::Rational(diffs[i].clone())];
                for (j, v) in values.iter().enumerate() {
                    if j != i {
                        places.push(PlaceDatum::Rational(v.clone()));
                    }
                }
                total = total.add(&assemble_coefficient(&places, &Rat::one())?);
            }
            Ok((xi, total))
        })
        .collect::<Result<_, _>>()?;
    let mut out = QExp::new(0, 1);
    for (xi, c) in rows {
        out.add_term(int(xi as i64), &c)?;
    }
    Ok(out)
}

/// Prime discriminant data: `D` with conductor `f = p^c` and the odd real
/// character `χ_D = (D/·)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrimeDiscriminant {
    pub disc: i64,
    pub p: u64,
    pub c: u32,
}

impl PrimeDiscriminant {
    /// Accepts `-4`, `-8` and `-p` with `p ≡ 3 mod 4` prime.
    pub fn new(disc: i64) -> Result<Self, SeriesError> {
        match disc {
            -4 => Ok(Self { disc, p: 2, c: 2 }),
            -8 => Ok(Self { disc, p: 2, c: 3 }),
            d if d < 0 && (-d) % 4 == 3 && is_prime((-d) as u64) => Ok(Self { disc, p: (-d) as u64, c: 1 }),
            _ => Err(SeriesError::UnsupportedDiscriminant(disc)),
        }
    }
    pub fn conductor(&self) -> u64 {
        self.p.pow(self.c)
    }
    /// Kronecker symbol `(D/n)`.
    pub fn chi(&self, n: i64) -> i8 {
        match self.disc {
            -4 => match n.rem_euclid(4) {
                1 => 1,
                3 => -1,
                _ => 0,
            },
            -8 => match n.rem_euclid(8) {
                1 | 3 => 1,
                5 | 7 => -1,
                _ => 0,
            },
            _ => legendre(&BigInt::from(n), self.p),
        }
    }
    /// `χ_D` of a rational prime to `p`.
    pub fn chi_rat(&self, r: &Rat) -> i8 {
        let n = r.numer() % BigInt::from(self.conductor() as i64 * 8);
        let d = r.denom() % BigInt::from(self.conductor() as i64 * 8);
        self.chi(n.to_i64().unwrap_or(0)) * self.chi(d.to_i64().unwrap_or(0))
    }
}

/// Ramified test function `φ_p(x, y) = η_p(x) 1_{Z_p^×}(x) 1_{Z_p}(y)`.
pub fn ramified_datum(pd: &PrimeDiscriminant, x: &Rat, y: &Rat) -> f64 {
    if vp(x, pd.p) != Some(0) || vp(y, pd.p).is_some_and(|v| v < 0) {
        return 0.0;
    }
    pd.chi_rat(x) as f64
}

/// Fourier transform of [`ramified_datum`] for the pairing
/// `((x, y), (x', y')) -> xy' + x'y`, `ψ_p(t) = e^{-2πi{t}_p}` and the
/// self-dual measure: `-i f^{-1/2} 1_{Z_p}(x) 1_{v(y) = -c}(y) η_p(p^c y)`.
pub fn ramified_fourier(pd: &PrimeDiscriminant, x: &Rat, y: &Rat) -> Complex64 {
    let c = pd.c as i64;
    if vp(x, pd.p).is_some_and(|v| v < 0) || vp(y, pd.p) != Some(-c) {
        return Complex64::new(0.0, 0.0);
    }
    let unit = y * pow_p_rat(pd.p, c);
    Complex64::new(0.0, -(pd.chi_rat(&unit) as f64) / (pd.conductor() as f64).sqrt())
}

const BERNOULLI_EVEN: [f64; 12] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
    -236364091.0 / 2730.0,
];

/// Hurwitz zeta `ζ(s, a)` for real `s != 1`, `a > 0`, by Euler-Maclaurin
/// summation with `N = 30` direct terms and ten Bernoulli corrections; the
/// error bound is twice the first omitted correction.
pub fn hurwitz_zeta(s: f64, a: f64) -> ArchValue<f64> {
    let n = 30usize;
    let mut sum = 0.0;
    let mut abssum = 0.0;
    for k in 0..n {
        let t = (k as f64 + a).powf(-s);
        sum += t;
        abssum += t.abs();
    }
    let x = n as f64 + a;
    sum += x.powf(1.0 - s) / (s - 1.0) + 0.5 * x.powf(-s);
    let mut rising = s;
    let mut fact = 2.0;
    let mut last = 0.0;
    for (k, b) in BERNOULLI_EVEN.iter().enumerate() {
        let kk = k + 1;
        let term = b / fact * rising * x.powf(-s - 2.0 * kk as f64 + 1.0);
        if kk <= 10 {
            sum += term;
            abssum += term.abs();
        } else {
            last = term.abs();
            break;
        }
        rising *= (s + 2.0 * kk as f64 - 1.0) * (s + 2.0 * kk as f64);
        fact *= (2.0 * kk as f64 + 1.0) * (2.0 * kk as f64 + 2.0);
    }
    ArchValue::new(sum, 2.0 * last + 8.0 * f64::EPSILON * (abssum + x.powf(1.0 - s).abs()))
}

/// Dirichlet `L(s, χ_D) = f^{-s} Σ_{a=1}^{f} χ(a) ζ(s, a/f)`.
pub fn dirichlet_l(s: f64, pd: &PrimeDiscriminant) -> ArchValue<f64> {
    let f = pd.conductor();
    let mut acc = ArchValue::zero();
    for a in 1..f {
        let c = pd.chi(a as i64);
        if c != 0 {
            acc = acc + hurwitz_zeta(s, a as f64 / f as f64).scale(c as f64);
        }
    }
    acc.scale((f as f64).powf(-s))
}

/// Complete `L(s, η) = π^{-(s+1)/2} Γ((s+1)/2) L(s, χ_D)` for `s > -1`.
pub fn complete_l(s: f64, pd: &PrimeDiscriminant) -> ArchValue<f64> {
    let z = (s + 1.0) / 2.0;
    let g = statrs::function::gamma::gamma(z);
    let gamma = ArchValue::new(g, g.abs() * 1e-14);
    gamma.scale(std::f64::consts::PI.powf(-z)) * dirichlet_l(s, pd)
}

/// Unramified local orbital integral of `1_{Z_ℓ²}` at `ξ` with `v_ℓ(ξ) = v`:
/// `Σ_{j=0}^{v} (χ(ℓ) X)^j`, `X = ℓ^{-s}`.
pub fn unramified_orbital(chi_l: i8, v: i64) -> LaurentX {
    let mut out = LaurentX::zero();
    for j in 0..=v.max(-1) {
        out.add_term(j, int((chi_l as i64).pow(j as u32)));
    }
    out
}

fn small_factor(n: u64) -> Vec<(u64, i64)> {
    let mut out = Vec::new();
    let mut n = n;
    let mut d = 2u64;
    while d * d <= n {
        let mut e = 0;
        while n % d == 0 {
            n /= d;
            e += 1;
        }
        if e > 0 {
            out.push((d, e));
        }
        d += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Product of unramified local orbital integrals at an integer `n != 0`,
/// skipping the ramified prime.
fn unramified_product(n: u64, s: f64, pd: &PrimeDiscriminant) -> f64 {
    small_factor(n)
        .into_iter()
        .filter(|(l, _)| *l != pd.p)
        .map(|(l, v)| unramified_orbital(pd.chi(l as i64), v).eval_f64(l as f64, s))
        .product()
}

/// Both sides of the functional equation with their ingredients.
#[derive(Debug, Clone, PartialEq)]
pub struct TateFeReport {
    pub disc: i64,
    pub s: f64,
    pub truncation: u64,
    pub j: ArchValue<f64>,
    pub jhat: ArchValue<f64>,
    pub diff: f64,
    /// Bound on the omitted terms `|ξ| > X` of both sums.
    pub tail_bound: f64,
    pub tolerance: f64,
    pub terms: usize,
    pub pass: bool,
}

/// Upper bound for `|Orb_∞(ξ, φ', σ)|` when `|σ| < 1`: from
/// `K_ν(x) <= K_1(x) <= sqrt(π/(2x)) e^{-x} (1 + 1/x)` for `|ν| <= 1`.
fn arch_bound(xi: f64, sigma: f64) -> f64 {
    let x = std::f64::consts::PI * xi.abs();
    let k1 = (std::f64::consts::PI / (2.0 * x)).sqrt() * (-x).exp() * (1.0 + 1.0 / x);
    2f64.sqrt() * xi.abs().powf((1.0 - sigma) / 2.0).max(xi.abs().powf((1.0 + sigma.abs()) / 2.0)) * k1
}

/// Tail of `Σ_{|n| > start} bound(n)` summed until the terms are negligible.
fn tail_sum(start: u64, term: impl Fn(u64) -> f64) -> f64 {
    let mut total = 0.0;
    let mut n = start + 1;
    loop {
        let t = 2.0 * term(n);
        total += t;
        if t < 1e-300 || t < total * 1e-17 || n > start + 100_000 {
            break;
        }
        n += 1;
    }
    total
}

/// Evaluates `J(φ', s)` and `J(φ̂', s)` for `F = Q(sqrt D)` with the
/// Gaussian at infinity, `1_{Z_ℓ²}` at every `ℓ ∤ D`, and at the ramified
/// prime `p` the odd function `φ_p(x, y) = η_p(x) 1_{Z_p^×}(x) 1_{Z_p}(y)`
/// (an even function there would make every orbital integral vanish).
///
/// With `u' = (1, ξ)` and `G'` acting by `g^{-1}·(x, y) = (gx, g^{-1}y)`:
/// * `J(φ') = L(s, η) 2^{s/2-1} + Σ_{n ∈ Z, 0 < |n| <= X} Orb_∞(n, -s) Π_ℓ Orb_ℓ(n, s)`;
/// * `φ̂_∞ = 2i φ'(2·)`, `φ̂_p(x, y) = -i f^{-1/2} 1_{Z_p}(x) 1_{v(y) = -c}(y) η_p(p^c y)`, so
///   `J(φ̂') = L(-s, η) 2 f^{-1/2} 2^{s/2-1} p^{-cs} + Σ_{ξ ∈ f^{-1}Z, 0 < |ξ| <= X} 2 f^{-1/2} 2^{-s}
///   Orb_∞(4ξ, -s) η_p(ξ_0) p^{-(c + v_p(ξ)) s} Π_ℓ Orb_ℓ(ξ, s)`.
///
/// Here `Orb_∞(ξ, s)` is [`arch::orb_arch`] at `h = 1`, whose integrand is
/// `φ'(t, ξ/t) t^{-s}`, hence the argument `-s`.
pub fn tate_fe_check(disc: i64, s: f64, truncation: u64, tolerance: f64) -> Result<TateFeReport, SeriesError> {
    if !(s > -1.0 && s < 1.0) {
        return Err(SeriesError::OutOfRange(s));
    }
    let pd = PrimeDiscriminant::new(disc)?;
    let f = pd.conductor();
    let ff = f as f64;
    let p = pd.p as f64;
    let c = pd.c as i64;
    let id = Iwasawa::identity();
    let orb = |xi: f64| -> Result<ArchValue<f64>, SeriesError> {
        let v = arch::orb_arch(xi, -s, false, id)?;
        Ok(ArchValue::new(v.value.re, v.err + v.value.im.abs()))
    };

    let nil = complete_l(s, &pd) * arch::nilpotent_arch(s);
    let x = truncation as i64;
    let j_terms: Vec<ArchValue<f64>> = (-x..=x)
        .into_par_iter()
        .filter(|n| *n != 0)
        .map(|n| -> Result<ArchValue<f64>, SeriesError> {
            let a = orb(n as f64)?;
            // The ramified factor is 1 whenever v_p(n) >= 0.
            let fin = unramified_product(n.unsigned_abs(), s, &pd);
            Ok(a.scale(fin))
        })
        .collect::<Result<_, _>>()?;
    let j = j_terms.iter().fold(nil, |acc, t| acc + *t);

    let a2 = 2.0 / ff.sqrt();
    let nil_hat = complete_l(-s, &pd) * arch::nilpotent_arch(-s);
    let nil_hat = nil_hat.scale(a2 * 2f64.powf(s) * p.powf(-(c as f64) * s));
    let xm = x * f as i64;
    let jhat_terms: Vec<ArchValue<f64>> = (-xm..=xm)
        .into_par_iter()
        .filter(|m| *m != 0)
        .map(|m| -> Result<ArchValue<f64>, SeriesError> {
            let xi = Rat::new(BigInt::from(m), BigInt::from(f));
            let v = vp(&xi, pd.p).expect("nonzero");
            let unit = &xi / pow_p_rat(pd.p, v);
            let eta = pd.chi_rat(&unit) as f64;
            let num = xi.numer().abs().to_u64().expect("small numerator");
            let a = orb(4.0 * m as f64 / ff)?;
            let fin = eta * p.powf(-((c + v) as f64) * s) * unramified_product(num, s, &pd);
            Ok(a.scale(a2 * 2f64.powf(-s) * fin))
        })
        .collect::<Result<_, _>>()?;
    let jhat = jhat_terms.iter().fold(nil_hat, |acc, t| acc + *t);

    let sa = s.abs();
    let tail_j = tail_sum(truncation, |n| arch_bound(n as f64, -s) * (n as f64).powf(sa + 1.0));
    let tail_hat = tail_sum(truncation * f, |m| {
        let xi = m as f64 / ff;
        a2 * 2f64.powf(sa) * arch_bound(4.0 * xi, -s) * p.powf(c as f64 * sa) * (m as f64).powf(2.0 * sa + 1.0)
    });
    let tail_bound = tail_j + tail_hat;
    let numeric = j.err + jhat.err;
    if numeric > tolerance {
        return Err(SeriesError::ToleranceNotMet { achieved: numeric, requested: tolerance });
    }
    let diff = (j.value - jhat.value).abs();
    Ok(TateFeReport {
        disc,
        s,
        truncation,
        j,
        jhat,
        diff,
        tail_bound,
        tolerance,
        terms: j_terms.len() + jhat_terms.len(),
        pass: diff <= tolerance + tail_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ll(c: i64, logs: &[(u64, i64)]) -> LogLinear {
        let mut out = LogLinear::constant(int(c));
        for (p, x) in logs {
            out = out.add(&LogLinear::log_term(*p, int(*x)));
        }
        out
    }

    #[test]
    fn loglinear_equality_is_componentwise() {
        let a = ll(1, &[(3, 2)]);
        let b = ll(1, &[(3, 2), (5, 0)]);
        assert_eq!(a, b);
        assert_ne!(a, ll(1, &[(5, 2)]));
        assert!(a.sub(&b).is_zero());
    }

    #[test]
    fn assemble_examples() {
        let one = SpecialValues { value0: int(1), dvalue0: int(0) };
        let der = SpecialValues { value0: int(0), dvalue0: int(-1) };
        let places = vec![PlaceDatum::Value(one.clone()), PlaceDatum::Derivative { p: 3, special: der.clone() }];
        assert_eq!(assemble_coefficient(&places, &int(1)).unwrap(), ll(0, &[(3, -1)]));
        let zero = SpecialValues { value0: int(0), dvalue0: int(5) };
        let places = vec![PlaceDatum::Value(zero), PlaceDatum::Derivative { p: 3, special: der.clone() }];
        assert!(assemble_coefficient(&places, &int(1)).unwrap().is_zero());
        let two = vec![
            PlaceDatum::Derivative { p: 3, special: der.clone() },
            PlaceDatum::Derivative { p: 5, special: der },
        ];
        assert!(matches!(assemble_coefficient(&two, &int(1)), Err(SeriesError::MultipleDerivativePlaces)));
    }

    #[test]
    fn qexp_rejects_negative_exponents() {
        let mut f = QExp::new(1, 3);
        assert!(f.add_term(int(-1), &ll(1, &[])).is_err());
        assert!(f.add_term(Rat::new(1.into(), 2.into()), &ll(1, &[])).is_err());
        f.add_term(Rat::new(2.into(), 3.into()), &ll(1, &[])).unwrap();
        let g = f.scale(&int(-1));
        assert!(f.add(&g).unwrap().is_zero());
    }

    #[test]
    fn support_examples() {
        let mut f = QExp::new(1, 1);
        for xi in [3, 9, 12] {
            f.add_term(int(xi), &ll(1, &[])).unwrap();
        }
        let b: BTreeSet<u64> = [3].into_iter().collect();
        assert!(support_check(&f, &b).all_coprime_vanish);
        f.add_term(int(5), &ll(0, &[(3, 1)])).unwrap();
        let r = support_check(&f, &b);
        assert!(!r.all_coprime_vanish);
        assert_eq!(r.witnesses, vec![int(5)]);
    }

    #[test]
    fn kronecker_characters() {
        let d4 = PrimeDiscriminant::new(-4).unwrap();
        assert_eq!((d4.chi(1), d4.chi(3), d4.chi(5), d4.chi(-1)), (1, -1, 1, -1));
        let d3 = PrimeDiscriminant::new(-3).unwrap();
        assert_eq!((d3.chi(1), d3.chi(2), d3.chi(-1), d3.chi(7)), (1, -1, -1, 1));
        let d8 = PrimeDiscriminant::new(-8).unwrap();
        assert_eq!((d8.chi(3), d8.chi(5), d8.chi(-1)), (1, -1, -1));
        assert!(PrimeDiscriminant::new(-15).is_err());
        assert!(PrimeDiscriminant::new(-5).is_err());
    }

    #[test]
    fn dirichlet_values() {
        // L(2, χ_{-4}) = Catalan's constant, L(0, χ_{-4}) = 1/2, L(0, χ_{-3}) = 1/3, L(-1, χ_{-4}) = 0.
        let d4 = PrimeDiscriminant::new(-4).unwrap();
        let d3 = PrimeDiscriminant::new(-3).unwrap();
        assert!(dirichlet_l(2.0, &d4).distance(0.915_965_594_177_219) < 1e-12);
        assert!(dirichlet_l(0.0, &d4).distance(0.5) < 1e-12);
        assert!(dirichlet_l(0.0, &d3).distance(1.0 / 3.0) < 1e-12);
        assert!(dirichlet_l(-1.0, &d4).distance(0.0) < 1e-12);
        let z2 = hurwitz_zeta(2.0, 1.0);
        assert!(z2.distance(std::f64::consts::PI.powi(2) / 6.0) < 1e-13);
        assert!(z2.err < 1e-12);
    }

    #[test]
    fn functional_equation_small() {
        for disc in [-4, -3, -7, -8] {
            for s in [0.0, 0.3, -0.45] {
                let r = tate_fe_check(disc, s, 20, 1e-6).unwrap();
                assert!(r.pass, "D={disc} s={s}: {} vs {}", r.j.value, r.jhat.value);
                assert!(r.diff < 1e-10, "D={disc} s={s}: diff {}", r.diff);
            }
        }
    }

    /// `∫∫ (x + y) e^{-π(x² + y²)/2} e^{2πi(ay + bx)} dx dy = 2i φ(2a, 2b)` for
    /// `φ(x, y) = (x + y) e^{-π(x² + y²)/2}`, by a 2D trapezoidal sum.
    #[test]
    fn gaussian_transform_is_a_dilation() {
        let phi = |x: f64, y: f64| (x + y) * (-std::f64::consts::PI * (x * x + y * y) / 2.0).exp();
        let h = 0.04;
        let n = 200;
        for (a, b) in [(0.3, -0.2), (0.5, 0.5), (-0.7, 0.1)] {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in -n..=n {
                for j in -n..=n {
                    let (x, y) = (i as f64 * h, j as f64 * h);
                    acc += Complex64::from_polar(phi(x, y), 2.0 * std::f64::consts::PI * (a * y + b * x));
                }
            }
            acc *= h * h;
            let expected = Complex64::new(0.0, 2.0 * phi(2.0 * a, 2.0 * b));
            assert!((acc - expected).norm() < 1e-10, "{acc} vs {expected}");
        }
    }
}
