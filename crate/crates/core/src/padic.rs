//! Capped relative-precision arithmetic in Q_p.
//!
//! A nonzero [`PadicNumber`] is stored as `p^v * u` where `u` is a unit known
//! modulo `p^r`, `1 <= r <= N`, so the value itself is known modulo
//! `p^(v + r)`. Every operation records the absolute precision it can
//! actually vouch for, which makes norm comparisons on computed values sound:
//! a nonzero result has its true valuation, and a zero result only claims
//! `|x|_p <= p^-abs_precision`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;

use crate::error::{Error, Result};

/// Absolute precision of an exactly known zero.
const EXACT: i64 = i64::MAX / 4;

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d.saturating_mul(d) <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

fn sat_add(a: i64, b: i64) -> i64 {
    if a >= EXACT || b >= EXACT {
        EXACT
    } else {
        a + b
    }
}

/// Sum of the base-`p` digits of `n`.
fn digit_sum(mut n: u64, p: u64) -> u64 {
    let mut s = 0;
    while n > 0 {
        s += n % p;
        n /= p;
    }
    s
}

/// `v_p(n!)` by Legendre's formula.
pub fn factorial_valuation(n: u64, p: u64) -> u64 {
    (n - digit_sum(n, p)) / (p - 1)
}

/// The prime and the number of significant digits carried.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PadicContext {
    prime: u64,
    precision: u32,
}

impl PadicContext {
    pub fn new(prime: u64, precision: u32) -> Result<Self> {
        if !is_prime(prime) {
            return Err(Error::NotPrime(prime));
        }
        if precision == 0 {
            return Err(Error::ZeroPrecision);
        }
        Ok(Self { prime, precision })
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    /// Smallest valuation inside the disc `|x|_p < p^(-1/(p-1))` where
    /// `exp_p` converges: 1 for odd primes, 2 for `p = 2`.
    pub fn exp_domain_valuation(&self) -> i64 {
        if self.prime == 2 {
            2
        } else {
            1
        }
    }

    fn p_pow(&self, e: i64) -> BigUint {
        debug_assert!(e >= 0);
        BigUint::from(self.prime).pow(e as u32)
    }

    pub fn zero(&self) -> PadicNumber {
        PadicNumber::zero_at(*self, EXACT)
    }

    /// Zero known only modulo `p^abs_precision`.
    pub fn zero_at(&self, abs_precision: i64) -> PadicNumber {
        PadicNumber::zero_at(*self, abs_precision)
    }

    pub fn one(&self) -> PadicNumber {
        self.integer(1)
    }

    pub fn integer(&self, n: i64) -> PadicNumber {
        self.from_bigint(&BigInt::from(n))
    }

    pub fn from_bigint(&self, n: &BigInt) -> PadicNumber {
        PadicNumber::from_scaled(*self, 0, n.clone(), EXACT)
    }

    /// The rational `num/den`: strip `p` from both, then invert the unit
    /// denominator modulo `p^N`.
    pub fn rational(&self, num: i64, den: i64) -> Result<PadicNumber> {
        self.from_ratio(&BigRational::new_raw(num.into(), den.into()))
    }

    pub fn from_ratio(&self, r: &BigRational) -> Result<PadicNumber> {
        if r.denom().is_zero() {
            return Err(Error::DivisionByZero);
        }
        let num = self.from_bigint(r.numer());
        let den = self.from_bigint(r.denom());
        num.checked_div(&den)
    }

    /// `p^e` exactly.
    pub fn p_power(&self, e: i64) -> PadicNumber {
        PadicNumber {
            ctx: *self,
            valuation: e,
            unit: BigUint::one(),
            abs_precision: e + self.precision as i64,
        }
    }

    /// Sum of an iterator; an empty sum is the exact zero.
    pub fn sum<'a, I>(&self, items: I) -> PadicNumber
    where
        I: IntoIterator<Item = &'a PadicNumber>,
    {
        items.into_iter().fold(self.zero(), |acc, x| &acc + x)
    }

    pub fn product<'a, I>(&self, items: I) -> PadicNumber
    where
        I: IntoIterator<Item = &'a PadicNumber>,
    {
        items.into_iter().fold(self.one(), |acc, x| &acc * x)
    }

    /// Uniformly random element `p^v * u` with a full-precision random unit.
    pub fn random_with_valuation<R: Rng + ?Sized>(&self, valuation: i64, rng: &mut R) -> PadicNumber {
        let p = self.prime;
        let mut unit = BigUint::from(rng.gen_range(1..p));
        let mut scale = BigUint::from(p);
        for _ in 1..self.precision {
            unit += &scale * BigUint::from(rng.gen_range(0..p));
            scale *= p;
        }
        PadicNumber {
            ctx: *self,
            valuation,
            unit,
            abs_precision: valuation + self.precision as i64,
        }
    }

    /// Random element with valuation drawn from `min_valuation..=max_valuation`.
    pub fn random_in_ball<R: Rng + ?Sized>(
        &self,
        min_valuation: i64,
        max_valuation: i64,
        rng: &mut R,
    ) -> PadicNumber {
        let v = rng.gen_range(min_valuation..=max_valuation);
        self.random_with_valuation(v, rng)
    }

    /// Parse the canonical serialization or a rational literal `a/b`.
    pub fn parse(&self, s: &str) -> Result<PadicNumber> {
        parse_literal(*self, s.trim())
    }
}

/// A p-adic norm `p^-v`, or zero. Ordered by size, so `Norm::Pow(3) <
/// Norm::Pow(1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Norm {
    Zero,
    /// `p^-v` for the contained `v`.
    Pow(i64),
}

impl Norm {
    pub const ONE: Norm = Norm::Pow(0);

    pub fn from_valuation(v: i64) -> Self {
        Norm::Pow(v)
    }

    pub fn valuation(self) -> Option<i64> {
        match self {
            Norm::Zero => None,
            Norm::Pow(v) => Some(v),
        }
    }

    pub fn is_zero(self) -> bool {
        matches!(self, Norm::Zero)
    }

    pub fn pow(self, e: u32) -> Self {
        match self {
            Norm::Zero if e == 0 => Norm::ONE,
            Norm::Zero => Norm::Zero,
            Norm::Pow(v) => Norm::Pow(v * e as i64),
        }
    }

    /// `self / other`; `None` when `other` is zero.
    pub fn ratio(self, other: Norm) -> Option<Norm> {
        match (self, other) {
            (_, Norm::Zero) => None,
            (Norm::Zero, _) => Some(Norm::Zero),
            (Norm::Pow(a), Norm::Pow(b)) => Some(Norm::Pow(a - b)),
        }
    }

    /// Render as `p^-t`.
    pub fn display(self, prime: u64) -> String {
        match self {
            Norm::Zero => "0".to_string(),
            Norm::Pow(v) if v >= 0 => format!("{prime}^-{v}"),
            Norm::Pow(v) => format!("{prime}^{}", -v),
        }
    }

    /// Inverse of [`Norm::display`].
    pub fn parse(s: &str, prime: u64) -> Result<Norm> {
        let s = s.trim();
        if s == "0" {
            return Ok(Norm::Zero);
        }
        let bad = || Error::Parse(format!("bad norm `{s}`"));
        let (base, exp) = s.split_once('^').ok_or_else(bad)?;
        if base.trim().parse::<u64>().map_err(|_| bad())? != prime {
            return Err(bad());
        }
        let e: i64 = exp.trim().parse().map_err(|_| bad())?;
        Ok(Norm::Pow(-e))
    }
}

impl Ord for Norm {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Norm::Zero, Norm::Zero) => Ordering::Equal,
            (Norm::Zero, _) => Ordering::Less,
            (_, Norm::Zero) => Ordering::Greater,
            (Norm::Pow(a), Norm::Pow(b)) => b.cmp(a),
        }
    }
}

impl PartialOrd for Norm {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Mul for Norm {
    type Output = Norm;

    fn mul(self, rhs: Norm) -> Norm {
        match (self, rhs) {
            (Norm::Pow(a), Norm::Pow(b)) => Norm::Pow(a + b),
            _ => Norm::Zero,
        }
    }
}

/// An element of Q_p carried to `N` significant digits.
///
/// Structural equality (`==`) compares representation including precision;
/// use [`PadicNumber::eq_at_precision`] to compare values.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PadicNumber {
    ctx: PadicContext,
    valuation: i64,
    /// Zero iff the number is zero; otherwise coprime to p and below p^r.
    unit: BigUint,
    abs_precision: i64,
}

impl PadicNumber {
    fn zero_at(ctx: PadicContext, abs_precision: i64) -> Self {
        Self {
            ctx,
            valuation: 0,
            unit: BigUint::zero(),
            abs_precision: abs_precision.min(EXACT),
        }
    }

    /// Normalize `p^valuation * value (mod p^abs_precision)`.
    fn from_scaled(ctx: PadicContext, valuation: i64, value: BigInt, abs_precision: i64) -> Self {
        let n = ctx.precision as i64;
        let p = BigInt::from(ctx.prime);
        let mut value = value;
        if abs_precision < EXACT {
            let room = abs_precision - valuation;
            if room <= 0 {
                return Self::zero_at(ctx, abs_precision);
            }
            value = value.mod_floor(&BigInt::from(ctx.p_pow(room)));
        }
        if value.is_zero() {
            return Self::zero_at(ctx, abs_precision);
        }
        let mut v = valuation;
        loop {
            let (q, r) = value.div_rem(&p);
            if !r.is_zero() {
                break;
            }
            value = q;
            v += 1;
        }
        let rel = if abs_precision >= EXACT {
            n
        } else {
            (abs_precision - v).min(n)
        };
        let unit = value.mod_floor(&BigInt::from(ctx.p_pow(rel)));
        Self {
            ctx,
            valuation: v,
            unit: unit.to_biguint().expect("mod_floor is non-negative"),
            abs_precision: v + rel,
        }
    }

    pub fn context(&self) -> PadicContext {
        self.ctx
    }

    pub fn prime(&self) -> u64 {
        self.ctx.prime
    }

    pub fn is_zero(&self) -> bool {
        self.unit.is_zero()
    }

    /// `v_p(x)`, or `None` for zero.
    pub fn valuation(&self) -> Option<i64> {
        (!self.is_zero()).then_some(self.valuation)
    }

    /// The value is known modulo `p^m` for the returned `m`; `None` for an
    /// exactly known zero.
    pub fn abs_precision(&self) -> Option<i64> {
        (self.abs_precision < EXACT).then_some(self.abs_precision)
    }

    /// Significant digits carried (0 for zero).
    pub fn relative_precision(&self) -> i64 {
        if self.is_zero() {
            0
        } else {
            self.abs_precision - self.valuation
        }
    }

    pub fn unit(&self) -> &BigUint {
        &self.unit
    }

    /// Little-endian base-p digits of the unit part, one per significant digit.
    pub fn digits(&self) -> Vec<u64> {
        let p = BigUint::from(self.ctx.prime);
        let mut u = self.unit.clone();
        (0..self.relative_precision())
            .map(|_| {
                let (q, r) = u.div_rem(&p);
                u = q;
                r.to_u64().unwrap_or(0)
            })
            .collect()
    }

    pub fn norm(&self) -> Norm {
        if self.is_zero() {
            Norm::Zero
        } else {
            Norm::Pow(self.valuation)
        }
    }

    /// Certified upper bound on the true norm: the norm itself when nonzero,
    /// `p^-m` for a zero known modulo `p^m`.
    pub fn norm_bound(&self) -> Norm {
        if !self.is_zero() {
            Norm::Pow(self.valuation)
        } else if self.abs_precision >= EXACT {
            Norm::Zero
        } else {
            Norm::Pow(self.abs_precision)
        }
    }

    /// True iff `|x|_p <= p^-m` is certified by the carried digits.
    pub fn is_within(&self, m: i64) -> bool {
        if self.is_zero() {
            self.abs_precision >= m
        } else {
            self.valuation >= m
        }
    }

    /// Library-wide "equal at precision m": `|x - y|_p <= p^-m`.
    pub fn eq_at_precision(&self, other: &Self, m: i64) -> bool {
        match self.checked_sub_lossy(other) {
            Ok(d) => d.is_within(m),
            Err(_) => false,
        }
    }

    /// Forget digits beyond absolute precision `m`.
    pub fn truncate(&self, m: i64) -> Self {
        if m >= self.abs_precision {
            return self.clone();
        }
        if self.is_zero() {
            return Self::zero_at(self.ctx, m);
        }
        Self::from_scaled(self.ctx, self.valuation, self.unit.clone().into(), m)
    }

    /// `x mod p^m` as an integer in `[0, p^m)`; needs `v >= 0` and enough
    /// absolute precision.
    pub fn residue(&self, m: i64) -> Option<BigUint> {
        if self.abs_precision < m {
            return None;
        }
        if self.is_zero() {
            return Some(BigUint::zero());
        }
        if self.valuation < 0 {
            return None;
        }
        if self.valuation >= m {
            return Some(BigUint::zero());
        }
        let modulus = self.ctx.p_pow(m);
        Some((&self.unit * self.ctx.p_pow(self.valuation)) % modulus)
    }

    /// A rational representative `p^v * u`.
    pub fn to_ratio(&self) -> BigRational {
        let u = BigInt::from(self.unit.clone());
        let pv = BigInt::from(self.ctx.prime).pow(self.valuation.unsigned_abs() as u32);
        if self.valuation >= 0 {
            BigRational::from_integer(u * pv)
        } else {
            BigRational::new(u, pv)
        }
    }

    fn same_ctx(&self, other: &Self) -> Result<()> {
        if self.ctx == other.ctx {
            Ok(())
        } else {
            Err(Error::ContextMismatch)
        }
    }

    fn scaled_unit(&self, base: i64) -> BigInt {
        BigInt::from(&self.unit * self.ctx.p_pow(self.valuation - base))
    }

    fn add_impl(&self, other: &Self) -> Self {
        let abs = self.abs_precision.min(other.abs_precision);
        match (self.is_zero(), other.is_zero()) {
            (true, true) => Self::zero_at(self.ctx, abs),
            (true, false) => other.truncate(abs),
            (false, true) => self.truncate(abs),
            (false, false) => {
                let v = self.valuation.min(other.valuation);
                let sum = self.scaled_unit(v) + other.scaled_unit(v);
                Self::from_scaled(self.ctx, v, sum, abs)
            }
        }
    }

    fn mul_impl(&self, other: &Self) -> Self {
        match (self.is_zero(), other.is_zero()) {
            (true, true) => Self::zero_at(self.ctx, sat_add(self.abs_precision, other.abs_precision)),
            (true, false) => Self::zero_at(self.ctx, sat_add(self.abs_precision, other.valuation)),
            (false, true) => Self::zero_at(self.ctx, sat_add(other.abs_precision, self.valuation)),
            (false, false) => {
                let rel = self.relative_precision().min(other.relative_precision());
                let modulus = self.ctx.p_pow(rel);
                let v = self.valuation + other.valuation;
                Self {
                    ctx: self.ctx,
                    valuation: v,
                    unit: (&self.unit * &other.unit) % modulus,
                    abs_precision: v + rel,
                }
            }
        }
    }

    fn div_impl(&self, other: &Self) -> Result<Self> {
        if other.is_zero() {
            return Err(Error::DivisionByZero);
        }
        if self.is_zero() {
            let abs = if self.abs_precision >= EXACT {
                EXACT
            } else {
                self.abs_precision - other.valuation
            };
            return Ok(Self::zero_at(self.ctx, abs));
        }
        let rel = self.relative_precision().min(other.relative_precision());
        let modulus = self.ctx.p_pow(rel);
        let inv = (&other.unit % &modulus)
            .modinv(&modulus)
            .expect("units are invertible modulo p^r");
        let v = self.valuation - other.valuation;
        Ok(Self {
            ctx: self.ctx,
            valuation: v,
            unit: (&self.unit * inv) % modulus,
            abs_precision: v + rel,
        })
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.same_ctx(other)?;
        Ok(self.add_impl(other))
    }

    /// Subtraction that reports total cancellation of two nonzero operands
    /// as [`Error::PrecisionExhausted`].
    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        let d = self.checked_sub_lossy(other)?;
        if d.is_zero() && !self.is_zero() && !other.is_zero() {
            return Err(Error::PrecisionExhausted);
        }
        Ok(d)
    }

    fn checked_sub_lossy(&self, other: &Self) -> Result<Self> {
        self.same_ctx(other)?;
        Ok(self.add_impl(&other.neg_impl()))
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.same_ctx(other)?;
        Ok(self.mul_impl(other))
    }

    pub fn checked_div(&self, other: &Self) -> Result<Self> {
        self.same_ctx(other)?;
        self.div_impl(other)
    }

    fn neg_impl(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let modulus = self.ctx.p_pow(self.relative_precision());
        Self {
            unit: modulus - &self.unit,
            ..self.clone()
        }
    }

    pub fn inverse(&self) -> Result<Self> {
        self.ctx.one().checked_div(self)
    }

    /// Integer power; negative exponents need a nonzero base.
    pub fn pow(&self, e: i64) -> Result<Self> {
        let base = if e < 0 { self.inverse()? } else { self.clone() };
        let mut e = e.unsigned_abs();
        let mut acc = self.ctx.one();
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul_impl(&sq);
            }
            e >>= 1;
            if e > 0 {
                sq = sq.mul_impl(&sq);
            }
        }
        Ok(acc)
    }

    /// `exp_p(x) = sum x^n / n!`, defined for `|x|_p < p^(-1/(p-1))`.
    ///
    /// Summation stops once every remaining term has valuation at least the
    /// target absolute precision `min(N, abs(x))`; the bound
    /// `n v - (n-1)/(p-1) <= v(x^n/n!)` is increasing in `n` on the domain.
    pub fn exp(&self) -> Result<Self> {
        let ctx = self.ctx;
        let n_digits = ctx.precision as i64;
        if self.is_zero() {
            return Ok(ctx.one().truncate(self.abs_precision.min(n_digits)));
        }
        let v = self.valuation;
        if v < ctx.exp_domain_valuation() {
            return Err(Error::Domain("exp_p"));
        }
        let target = self.abs_precision.min(n_digits);
        let pm1 = ctx.prime as i64 - 1;
        let mut sum = ctx.one();
        let mut term = ctx.one();
        let mut n: i64 = 1;
        loop {
            term = term.mul_impl(self).div_impl(&ctx.integer(n))?;
            sum = sum.add_impl(&term);
            // lower bound for the next term's valuation, scaled by (p - 1)
            if (n + 1) * v * pm1 - n >= target * pm1 {
                break;
            }
            n += 1;
        }
        Ok(sum)
    }

    /// `log_p(x) = sum (-1)^(n+1) (x-1)^n / n`, defined for `|x - 1|_p < 1`.
    pub fn log(&self) -> Result<Self> {
        let ctx = self.ctx;
        let y = self.add_impl(&ctx.one().neg_impl());
        if y.is_zero() {
            return Ok(y);
        }
        let v = y.valuation;
        if v < 1 {
            return Err(Error::Domain("log_p"));
        }
        let target = y.abs_precision;
        let p = ctx.prime as i64;
        let mut sum = ctx.zero();
        let mut power = ctx.one();
        let mut n: i64 = 1;
        loop {
            power = power.mul_impl(&y);
            let term = power.div_impl(&ctx.integer(n))?;
            sum = if n % 2 == 1 {
                sum.add_impl(&term)
            } else {
                sum.add_impl(&term.neg_impl())
            };
            // m v - floor(log_p m) is non-decreasing for v >= 1
            let next = n + 1;
            if next * v - floor_log(next, p) >= target {
                break;
            }
            n += 1;
        }
        Ok(sum)
    }
}

fn floor_log(n: i64, p: i64) -> i64 {
    let mut k = 0;
    let mut m = n;
    while m >= p {
        m /= p;
        k += 1;
    }
    k
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $body:expr) => {
        impl $trait<&PadicNumber> for &PadicNumber {
            type Output = PadicNumber;
            fn $method(self, rhs: &PadicNumber) -> PadicNumber {
                assert_eq!(self.ctx, rhs.ctx, "p-adic context mismatch");
                $body(self, rhs)
            }
        }
        impl $trait<PadicNumber> for PadicNumber {
            type Output = PadicNumber;
            fn $method(self, rhs: PadicNumber) -> PadicNumber {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&PadicNumber> for PadicNumber {
            type Output = PadicNumber;
            fn $method(self, rhs: &PadicNumber) -> PadicNumber {
                (&self).$method(rhs)
            }
        }
        impl $trait<PadicNumber> for &PadicNumber {
            type Output = PadicNumber;
            fn $method(self, rhs: PadicNumber) -> PadicNumber {
                self.$method(&rhs)
            }
        }
    };
}

forward_binop!(Add, add, |a: &PadicNumber, b: &PadicNumber| a.add_impl(b));
forward_binop!(Sub, sub, |a: &PadicNumber, b: &PadicNumber| a.add_impl(&b.neg_impl()));
forward_binop!(Mul, mul, |a: &PadicNumber, b: &PadicNumber| a.mul_impl(b));
forward_binop!(Div, div, |a: &PadicNumber, b: &PadicNumber| a
    .div_impl(b)
    .expect("p-adic division by zero"));

impl Neg for &PadicNumber {
    type Output = PadicNumber;
    fn neg(self) -> PadicNumber {
        self.neg_impl()
    }
}

impl Neg for PadicNumber {
    type Output = PadicNumber;
    fn neg(self) -> PadicNumber {
        self.neg_impl()
    }
}

impl fmt::Display for PadicNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = self.ctx.prime;
        let m = match self.abs_precision() {
            Some(m) => m.to_string(),
            None => "inf".to_string(),
        };
        if self.is_zero() {
            return write!(f, "0 + O({p}^{m})");
        }
        let digits: Vec<String> = self.digits().iter().map(u64::to_string).collect();
        write!(f, "{p}^{} * [{}] + O({p}^{m})", self.valuation, digits.join(","))
    }
}

impl fmt::Debug for PadicNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

fn parse_literal(ctx: PadicContext, s: &str) -> Result<PadicNumber> {
    let bad = |why: &str| Error::Parse(format!("{why} in `{s}`"));
    let Some((body, big_o)) = s.rsplit_once("+ O(").or_else(|| s.rsplit_once("+O(")) else {
        return parse_rational(ctx, s);
    };
    let big_o = big_o.trim().strip_suffix(')').ok_or_else(|| bad("unclosed O("))?;
    let abs = match parse_power(ctx, big_o)? {
        PowerExp::Inf => EXACT,
        PowerExp::Finite(m) => m,
    };
    let body = body.trim();
    if body == "0" {
        return Ok(PadicNumber::zero_at(ctx, abs));
    }
    let (power, digits) = body.split_once('*').ok_or_else(|| bad("missing `*`"))?;
    let PowerExp::Finite(v) = parse_power(ctx, power.trim())? else {
        return Err(bad("infinite valuation"));
    };
    let digits = digits
        .trim()
        .strip_prefix('[')
        .and_then(|d| d.strip_suffix(']'))
        .ok_or_else(|| bad("digit list must be bracketed"))?;
    let p = BigUint::from(ctx.prime);
    let mut value = BigUint::zero();
    let mut scale = BigUint::one();
    for d in digits.split(',').map(str::trim).filter(|d| !d.is_empty()) {
        let d: u64 = d.parse().map_err(|_| bad("bad digit"))?;
        if d >= ctx.prime {
            return Err(bad("digit out of range"));
        }
        value += &scale * d;
        scale *= &p;
    }
    if abs >= EXACT {
        return Err(bad("nonzero value with infinite precision"));
    }
    Ok(PadicNumber::from_scaled(ctx, v, value.into(), abs))
}

enum PowerExp {
    Finite(i64),
    Inf,
}

fn parse_power(ctx: PadicContext, s: &str) -> Result<PowerExp> {
    let bad = || Error::Parse(format!("bad power `{s}`"));
    let (base, exp) = s.split_once('^').ok_or_else(bad)?;
    let base: u64 = base.trim().parse().map_err(|_| bad())?;
    if base != ctx.prime {
        return Err(Error::Parse(format!("prime {base} does not match context prime {}", ctx.prime)));
    }
    let exp = exp.trim();
    if exp == "inf" {
        return Ok(PowerExp::Inf);
    }
    exp.parse().map(PowerExp::Finite).map_err(|_| bad())
}

fn parse_rational(ctx: PadicContext, s: &str) -> Result<PadicNumber> {
    let bad = || Error::Parse(format!("not a rational literal: `{s}`"));
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let num: BigInt = num.parse().map_err(|_| bad())?;
    let den: BigInt = den.parse().map_err(|_| bad())?;
    if den.is_zero() {
        return Err(Error::DivisionByZero);
    }
    let (num, den) = if den.sign() == Sign::Minus {
        (-num, -den)
    } else {
        (num, den)
    };
    debug_assert!(den.is_positive());
    ctx.from_ratio(&BigRational::new_raw(num, den))
}
