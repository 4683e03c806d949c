//! Weights `lambda: {0, 1, 2, ...} -> Q_p` with `lambda(0) = 1` and
//! `|lambda(n)|_p -> 0`, together with a certificate for the decay rate.

use std::fmt;
use std::str::FromStr;

use num_rational::BigRational;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::padic::{Norm, PadicContext, PadicNumber};
use crate::recursion::ModelParams;

const NEVER: i64 = i64::MAX / 4;

/// `d(i) = slope * i + intercept`, certifying `|lambda(i)|_p <= p^-d(i)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AffineValuation {
    pub slope: i64,
    pub intercept: i64,
}

impl AffineValuation {
    pub fn new(slope: i64, intercept: i64) -> Self {
        Self { slope, intercept }
    }

    /// Every index is exactly zero.
    fn never() -> Self {
        Self {
            slope: 0,
            intercept: NEVER,
        }
    }

    pub fn at(&self, i: usize) -> i64 {
        if self.intercept >= NEVER {
            return NEVER;
        }
        self.slope.saturating_mul(i as i64).saturating_add(self.intercept).min(NEVER)
    }

    /// Smallest `i >= from` with `d(j) >= precision` for every `j >= i`.
    fn reaches(&self, precision: i64, from: usize) -> Option<usize> {
        if self.at(from) >= precision {
            return Some(from);
        }
        if self.slope <= 0 {
            return None;
        }
        let need = precision - self.intercept;
        let i = (need + self.slope - 1).div_euclid(self.slope);
        Some((i.max(0) as usize).max(from))
    }
}

impl fmt::Display for AffineValuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.intercept {
            0 => write!(f, "{}*i", self.slope),
            b if b < 0 => write!(f, "{}*i - {}", self.slope, -b),
            b => write!(f, "{}*i + {}", self.slope, b),
        }
    }
}

impl FromStr for AffineValuation {
    type Err = Error;

    /// Accepts affine expressions such as `i`, `2*i + 1`, `3i-2`, `40`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("not an affine expression in i: `{s}`"));
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let compact = compact
            .strip_prefix("tail_valuation(i)=")
            .unwrap_or(&compact)
            .to_string();
        if compact.is_empty() {
            return Err(bad());
        }
        // split into signed terms
        let mut terms = Vec::new();
        let mut start = 0;
        for (idx, c) in compact.char_indices() {
            if (c == '+' || c == '-') && idx > 0 {
                terms.push(&compact[start..idx]);
                start = idx;
            }
        }
        terms.push(&compact[start..]);
        let (mut slope, mut intercept) = (0i64, 0i64);
        for term in terms {
            let (sign, body) = match term.strip_prefix('-') {
                Some(b) => (-1, b),
                None => (1, term.strip_prefix('+').unwrap_or(term)),
            };
            if let Some(coef) = body.strip_suffix('i') {
                let coef = coef.strip_suffix('*').unwrap_or(coef);
                let c: i64 = if coef.is_empty() { 1 } else { coef.parse().map_err(|_| bad())? };
                slope += sign * c;
            } else {
                intercept += sign * body.parse::<i64>().map_err(|_| bad())?;
            }
        }
        Ok(Self { slope, intercept })
    }
}

/// How a weight is generated; the `Display`/`FromStr` names are the config
/// file family names.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightSpec {
    /// Listed rationals for indices `0..len`, normalized by `lambda(0)`;
    /// indices past the list are certified by the affine tail rule.
    Explicit {
        values: Vec<BigRational>,
        tail: AffineValuation,
    },
    /// `lambda(n) = ratio^n` with `|ratio|_p < 1`.
    Geometric { ratio: BigRational },
    /// The weight whose translation-invariant boundary field is exactly
    /// `h_i = p^i`:
    /// `lambda(n) = p^n ((p(1-theta)+theta) / ((theta-1) p^n (1-p) + 1))^k`.
    PowerField,
}

impl WeightSpec {
    pub fn family_name(&self) -> &'static str {
        match self {
            WeightSpec::Explicit { .. } => "explicit",
            WeightSpec::Geometric { .. } => "geometric",
            WeightSpec::PowerField => "paper-example",
        }
    }
}

/// `paper-example`, `geometric:<ratio>` or
/// `explicit:<l0>,<l1>,...;tail=<affine in i>`.
impl fmt::Display for WeightSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightSpec::PowerField => f.write_str("paper-example"),
            WeightSpec::Geometric { ratio } => write!(f, "geometric:{ratio}"),
            WeightSpec::Explicit { values, tail } => {
                f.write_str("explicit:")?;
                for (i, v) in values.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, ";tail={tail}")
            }
        }
    }
}

fn parse_rational(s: &str) -> Result<BigRational> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad rational `{}`", s.trim())))
}

impl FromStr for WeightSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (family, rest) = s.split_once(':').unwrap_or((s, ""));
        match family.trim() {
            "paper-example" => Ok(WeightSpec::PowerField),
            "geometric" => Ok(WeightSpec::Geometric {
                ratio: parse_rational(rest)?,
            }),
            "explicit" => {
                let (list, tail) = rest
                    .split_once(';')
                    .ok_or_else(|| Error::Parse("explicit weight needs `;tail=<rule>`".into()))?;
                let tail = tail.trim();
                let rule = tail
                    .strip_prefix("tail")
                    .map(|t| t.trim_start().trim_start_matches('=').trim_start_matches(':'))
                    .unwrap_or(tail);
                Ok(WeightSpec::Explicit {
                    values: list.split(',').map(parse_rational).collect::<Result<_>>()?,
                    tail: rule.parse()?,
                })
            }
            other => Err(Error::Parse(format!("unknown weight family `{other}`"))),
        }
    }
}

#[derive(Clone, PartialEq)]
pub struct Weight {
    ctx: PadicContext,
    values: Vec<PadicNumber>,
    decay: Vec<i64>,
    tail: AffineValuation,
}

fn decay_of(x: &PadicNumber) -> i64 {
    match x.norm_bound() {
        Norm::Zero => NEVER,
        Norm::Pow(v) => v,
    }
}

impl Weight {
    /// Materialize a weight for `params`, listing every index whose
    /// certified decay is still above the working precision.
    pub fn from_spec(spec: &WeightSpec, params: &ModelParams) -> Result<Self> {
        let ctx = params.context();
        let n = ctx.precision() as i64;
        match spec {
            WeightSpec::Explicit { values, tail } => {
                let first = values
                    .first()
                    .ok_or_else(|| Error::InvalidWeight("explicit weight needs lambda(0)".into()))?;
                if first.is_zero() {
                    return Err(Error::InvalidWeight("lambda(0) must be nonzero".into()));
                }
                let vals = values
                    .iter()
                    .map(|r| ctx.from_ratio(&(r / first)))
                    .collect::<Result<Vec<_>>>()?;
                Self::new(ctx, vals, *tail)
            }
            WeightSpec::Geometric { ratio } => {
                let r = ctx.from_ratio(ratio)?;
                let s = match r.valuation() {
                    Some(s) if s >= 1 => s,
                    _ => return Err(Error::InvalidWeight("geometric ratio needs |ratio|_p < 1".into())),
                };
                let count = ((n + s - 1) / s).max(1) as usize;
                let mut vals = Vec::with_capacity(count);
                let mut term = ctx.one();
                for _ in 0..count {
                    vals.push(term.clone());
                    term = &term * &r;
                }
                Self::new(ctx, vals, AffineValuation::new(s, 0))
            }
            WeightSpec::PowerField => {
                let theta = params.theta();
                let one = ctx.one();
                let p = ctx.integer(ctx.prime() as i64);
                let numer = &(&p * &(&one - theta)) + theta;
                let mut vals = vec![one.clone()];
                for i in 1..n.max(1) {
                    let pi = ctx.p_power(i);
                    let denom = &(&(theta - &one) * &(&pi * &(&one - &p))) + &one;
                    let base = numer.checked_div(&denom)?;
                    vals.push(&pi * &base.pow(params.order() as i64)?);
                }
                Self::new(ctx, vals, AffineValuation::new(1, 0))
            }
        }
    }

    /// A weight from already normalized values (`values[0]` must be 1).
    pub fn new(ctx: PadicContext, values: Vec<PadicNumber>, tail: AffineValuation) -> Result<Self> {
        match values.first() {
            Some(v0) if v0.eq_at_precision(&ctx.one(), ctx.precision() as i64) => {}
            _ => return Err(Error::InvalidWeight("lambda(0) must equal 1".into())),
        }
        if values.iter().any(|v| v.context() != ctx) {
            return Err(Error::ContextMismatch);
        }
        let w = Self {
            ctx,
            decay: values.iter().map(decay_of).collect(),
            values,
            tail,
        };
        if w.tail.reaches(ctx.precision() as i64, w.values.len()).is_none() {
            return Err(Error::InvalidWeight(format!(
                "tail certificate {tail} never reaches the working precision"
            )));
        }
        Ok(w)
    }

    pub fn context(&self) -> PadicContext {
        self.ctx
    }

    /// Number of explicitly materialized indices.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn tail(&self) -> AffineValuation {
        self.tail
    }

    /// `lambda(i)`; past the materialized range this is a zero known to the
    /// certified decay.
    pub fn value(&self, i: usize) -> PadicNumber {
        match self.values.get(i) {
            Some(v) => v.clone(),
            None => match self.tail.at(i) {
                NEVER => self.ctx.zero(),
                d => self.ctx.zero_at(d),
            },
        }
    }

    pub fn values(&self) -> &[PadicNumber] {
        &self.values
    }

    /// Certified decay exponent `d(i)` with `|lambda(i)|_p <= p^-d(i)`.
    pub fn decay(&self, i: usize) -> i64 {
        self.decay.get(i).copied().unwrap_or_else(|| self.tail.at(i))
    }

    /// `q = min{i : d(j) >= precision for all j >= i}`.
    pub fn cutoff(&self, precision: i64) -> Result<usize> {
        let tail_from = self.tail.reaches(precision, self.values.len()).ok_or_else(|| {
            Error::InvalidWeight(format!("tail never reaches precision {precision}"))
        })?;
        if tail_from > self.values.len() {
            return Ok(tail_from);
        }
        let last_fat = self.decay.iter().rposition(|&d| d < precision);
        Ok(last_fat.map_or(0, |i| i + 1))
    }

    /// The cutoff at the working precision.
    pub fn working_cutoff(&self) -> usize {
        self.cutoff(self.ctx.precision() as i64)
            .expect("tail certificate checked at construction")
    }

    /// Bound on `max_{i >= q} |lambda(i)|_p`.
    pub fn truncation_bound(&self, q: usize) -> Norm {
        let listed = self.decay.iter().skip(q).copied().min().unwrap_or(NEVER);
        let tail = self.tail.at(q.max(self.values.len()));
        match listed.min(tail) {
            NEVER => Norm::Zero,
            d => Norm::Pow(d),
        }
    }

    /// The weight with every state `>= q` set exactly to zero.
    pub fn truncated(&self, q: usize) -> Self {
        let q = q.max(1);
        let mut values: Vec<_> = (0..q).map(|i| self.value(i)).collect();
        for v in values.iter_mut() {
            if v.is_zero() {
                *v = self.ctx.zero();
            }
        }
        Self {
            ctx: self.ctx,
            decay: values.iter().map(decay_of).collect(),
            values,
            tail: AffineValuation::never(),
        }
    }

    /// Copy with `lambda(i)` replaced.
    pub fn with_value(&self, i: usize, value: PadicNumber) -> Result<Self> {
        if i == 0 {
            return Err(Error::InvalidWeight("lambda(0) is pinned to 1".into()));
        }
        let mut values = self.values.clone();
        while values.len() <= i {
            values.push(self.value(values.len()));
        }
        values[i] = value;
        Self::new(self.ctx, values, self.tail)
    }

    /// `max_{i >= 1} |lambda(i)/lambda(0)|_p`, tail certificate included.
    pub fn l1_norm(&self) -> Norm {
        let listed = self.values.iter().skip(1).map(PadicNumber::norm_bound).max();
        let tail = match self.tail.at(self.values.len().max(1)) {
            NEVER => Norm::Zero,
            d => Norm::Pow(d),
        };
        listed.unwrap_or(Norm::Zero).max(tail)
    }

    /// The strict contraction condition `max_i |lambda(i)/lambda(0)|_p < 1`.
    pub fn satisfies_l1(&self) -> bool {
        self.l1_norm() < Norm::ONE
    }

    /// `||lambda - kappa||_W = max_n |lambda(n) - kappa(n)|_p` over the
    /// materialized indices of either weight.
    pub fn distance(&self, other: &Self) -> Result<Norm> {
        if self.ctx != other.ctx {
            return Err(Error::ContextMismatch);
        }
        let len = self.values.len().max(other.values.len());
        Ok((0..len)
            .map(|i| (&self.value(i) - &other.value(i)).norm())
            .max()
            .unwrap_or(Norm::Zero))
    }

    /// `||lambda||_W = max_n |lambda(n)|_p`.
    pub fn norm(&self) -> Norm {
        self.values.iter().map(PadicNumber::norm).max().unwrap_or(Norm::Zero)
    }
}

impl fmt::Debug for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Weight")
            .field("values", &self.values)
            .field("tail", &self.tail)
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(p: u64, k: usize, j: i64) -> ModelParams {
        let ctx = PadicContext::new(p, 32).unwrap();
        ModelParams::new(ctx, k, ctx.integer(j)).unwrap()
    }

    #[test]
    fn spec_text_round_trip() {
        for text in ["paper-example", "geometric:9/2", "explicit:1,5,-1/3;tail=i + 30"] {
            let spec: WeightSpec = text.parse().unwrap();
            assert_eq!(spec.to_string().parse::<WeightSpec>().unwrap(), spec);
        }
        assert_eq!(
            "explicit:2,10;tail=40".parse::<WeightSpec>().unwrap().family_name(),
            "explicit"
        );
        assert!("explicit:1,2".parse::<WeightSpec>().is_err());
        assert!("gaussian".parse::<WeightSpec>().is_err());
    }

    #[test]
    fn affine_parsing() {
        assert_eq!("i".parse::<AffineValuation>().unwrap(), AffineValuation::new(1, 0));
        assert_eq!("2*i + 1".parse::<AffineValuation>().unwrap(), AffineValuation::new(2, 1));
        assert_eq!("3i-2".parse::<AffineValuation>().unwrap(), AffineValuation::new(3, -2));
        assert_eq!("40".parse::<AffineValuation>().unwrap(), AffineValuation::new(0, 40));
        assert_eq!(
            "tail_valuation(i) = i + 4".parse::<AffineValuation>().unwrap(),
            AffineValuation::new(1, 4)
        );
        assert!("i*i".parse::<AffineValuation>().is_err());
        let a = AffineValuation::new(2, -3);
        assert_eq!(a.to_string().parse::<AffineValuation>().unwrap(), a);
    }

    #[test]
    fn power_field_weight_has_exact_decay() {
        let pr = params(5, 2, 5);
        let w = Weight::from_spec(&WeightSpec::PowerField, &pr).unwrap();
        assert_eq!(w.len(), 32);
        for i in 0..32 {
            assert_eq!(w.value(i).norm(), Norm::Pow(i as i64));
        }
        assert_eq!(w.working_cutoff(), 32);
        assert!(w.satisfies_l1());
        assert_eq!(w.truncation_bound(3), Norm::Pow(3));
    }

    #[test]
    fn geometric_weight() {
        let pr = params(3, 2, 3);
        let ratio = BigRational::new(9.into(), 2.into());
        let w = Weight::from_spec(&WeightSpec::Geometric { ratio }, &pr).unwrap();
        assert_eq!(w.len(), 16);
        assert_eq!(w.value(3).norm(), Norm::Pow(6));
        assert_eq!(w.working_cutoff(), 16);
        let unit = BigRational::new(2.into(), 1.into());
        assert!(Weight::from_spec(&WeightSpec::Geometric { ratio: unit }, &pr).is_err());
    }

    #[test]
    fn explicit_weight_normalizes_and_checks_tail() {
        let pr = params(5, 2, 5);
        let values = vec![
            BigRational::from_integer(2.into()),
            BigRational::from_integer(10.into()),
        ];
        let spec = WeightSpec::Explicit {
            values,
            tail: "i + 30".parse().unwrap(),
        };
        let w = Weight::from_spec(&spec, &pr).unwrap();
        assert!(w.value(0).eq_at_precision(&pr.context().one(), 32));
        assert!(w.value(1).eq_at_precision(&pr.context().integer(5), 33));
        assert_eq!(w.decay(2), 32);
        assert_eq!(w.working_cutoff(), 2);
        let never = WeightSpec::Explicit {
            values: vec![BigRational::from_integer(1.into())],
            tail: AffineValuation::new(0, 3),
        };
        assert!(Weight::from_spec(&never, &pr).is_err());
    }

    #[test]
    fn l1_violation_detected() {
        let pr = params(5, 2, 5);
        let spec = WeightSpec::Explicit {
            values: vec![BigRational::from_integer(1.into()), BigRational::from_integer(3.into())],
            tail: "40".parse().unwrap(),
        };
        let w = Weight::from_spec(&spec, &pr).unwrap();
        assert!(!w.satisfies_l1());
        assert_eq!(w.l1_norm(), Norm::ONE);
    }

    #[test]
    fn truncation_and_distance() {
        let pr = params(5, 2, 5);
        let w = Weight::from_spec(&WeightSpec::PowerField, &pr).unwrap();
        let t = w.truncated(3);
        assert_eq!(t.len(), 3);
        assert!(t.value(7).is_zero());
        assert_eq!(t.truncation_bound(3), Norm::Zero);
        assert_eq!(w.distance(&w).unwrap(), Norm::Zero);
        let ctx = pr.context();
        let kappa = w.with_value(1, &w.value(1) + &ctx.p_power(3)).unwrap();
        assert_eq!(w.distance(&kappa).unwrap(), Norm::Pow(3));
        assert_eq!(w.norm(), Norm::ONE);
    }
}
