//! The space c0 of null sequences over Q_p with the sup norm.
//!
//! A sequence is stored as finitely many explicit entries (indices start at 1)
//! plus a certified bound `|x_i|_p <= p^-t` for every index outside the
//! explicit support.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::padic::{Norm, PadicContext, PadicNumber};

#[derive(Clone, PartialEq, Eq)]
pub struct C0Vector {
    ctx: PadicContext,
    entries: BTreeMap<usize, PadicNumber>,
    tail_exponent: i64,
}

impl C0Vector {
    /// Build a vector; the explicit sup norm must dominate the tail bound
    /// unless every explicit entry vanishes.
    pub fn new(
        ctx: PadicContext,
        entries: impl IntoIterator<Item = (usize, PadicNumber)>,
        tail_exponent: i64,
    ) -> Result<Self> {
        let v = Self::from_parts(ctx, entries, tail_exponent)?;
        let sup = v.sup_norm();
        if !sup.is_zero() && sup < Norm::Pow(tail_exponent) {
            return Err(Error::TailAboveSupport { tail: tail_exponent });
        }
        Ok(v)
    }

    /// Like [`C0Vector::new`] without the sup-versus-tail check.
    pub(crate) fn from_parts(
        ctx: PadicContext,
        entries: impl IntoIterator<Item = (usize, PadicNumber)>,
        tail_exponent: i64,
    ) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, x) in entries {
            if i == 0 {
                return Err(Error::BadIndex(i));
            }
            if x.context() != ctx {
                return Err(Error::ContextMismatch);
            }
            map.insert(i, x);
        }
        Ok(Self {
            ctx,
            entries: map,
            tail_exponent,
        })
    }

    /// The zero sequence with tail bound `p^-tail_exponent`.
    pub fn zero(ctx: PadicContext, tail_exponent: i64) -> Self {
        Self {
            ctx,
            entries: BTreeMap::new(),
            tail_exponent,
        }
    }

    pub fn context(&self) -> PadicContext {
        self.ctx
    }

    pub fn tail_exponent(&self) -> i64 {
        self.tail_exponent
    }

    pub fn tail_bound(&self) -> Norm {
        Norm::Pow(self.tail_exponent)
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, &PadicNumber)> {
        self.entries.iter().map(|(&i, x)| (i, x))
    }

    pub fn get(&self, i: usize) -> Option<&PadicNumber> {
        self.entries.get(&i)
    }

    /// Entry `i`, reading unset indices as zero known to the tail precision.
    pub fn value(&self, i: usize) -> PadicNumber {
        self.entries
            .get(&i)
            .cloned()
            .unwrap_or_else(|| self.ctx.zero_at(self.tail_exponent))
    }

    /// One past the largest explicit index.
    pub fn support_end(&self) -> usize {
        self.entries.keys().next_back().map_or(1, |&i| i + 1)
    }

    /// `max_i |x_i|_p` over the explicit support.
    pub fn sup_norm(&self) -> Norm {
        self.entries
            .values()
            .map(PadicNumber::norm)
            .max()
            .unwrap_or(Norm::Zero)
    }

    /// Like [`C0Vector::sup_norm`] but reading precision-limited zeros as
    /// their certified bound.
    pub fn sup_norm_bound(&self) -> Norm {
        self.entries
            .values()
            .map(PadicNumber::norm_bound)
            .max()
            .unwrap_or(Norm::Zero)
    }

    /// Membership in the ball `B = {x : ||x|| <= 1/p}`.
    pub fn in_unit_ball(&self) -> bool {
        self.sup_norm() <= Norm::Pow(1) && self.tail_bound() <= Norm::Pow(1)
    }

    /// True iff `||x|| <= p^-m` is certified, tail included.
    pub fn is_within(&self, m: i64) -> bool {
        self.tail_exponent >= m && self.entries.values().all(|x| x.is_within(m))
    }

    /// `X = sum_j x_j`, known modulo `p^t` where `p^-t` is the tail bound.
    pub fn tail_sum(&self, precision: i64) -> Result<PadicNumber> {
        if self.tail_exponent < precision {
            return Err(Error::TailTooFat {
                tail: self.tail_exponent,
                precision,
            });
        }
        Ok(self.ctx.sum(self.entries.values()).truncate(self.tail_exponent))
    }

    /// Entrywise difference; the tail bound is the larger of the two.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.ctx != other.ctx {
            return Err(Error::ContextMismatch);
        }
        let mut out = BTreeMap::new();
        for &i in self.entries.keys().chain(other.entries.keys()) {
            if out.contains_key(&i) {
                continue;
            }
            out.insert(i, &self.value(i) - &other.value(i));
        }
        Ok(Self {
            ctx: self.ctx,
            entries: out,
            tail_exponent: self.tail_exponent.min(other.tail_exponent),
        })
    }

    /// `||x - y||` over the union of the explicit supports.
    pub fn distance(&self, other: &Self) -> Result<Norm> {
        Ok(self.sub(other)?.sup_norm())
    }

    /// Parse the text form produced by `Display`.
    pub fn parse(ctx: PadicContext, s: &str) -> Result<Self> {
        let mut entries = Vec::new();
        let mut tail = None;
        for line in s.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let (key, val) = line
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("expected `index: value`, got `{line}`")))?;
            let key = key.trim();
            if key == "tail" {
                match Norm::parse(val, ctx.prime())? {
                    Norm::Pow(t) => tail = Some(t),
                    Norm::Zero => return Err(Error::Parse("tail bound must be p^-t".into())),
                }
            } else {
                let i: usize = key
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad index `{key}`")))?;
                entries.push((i, ctx.parse(val)?));
            }
        }
        let tail = tail.ok_or_else(|| Error::Parse("missing `tail:` line".into()))?;
        Self::new(ctx, entries, tail)
    }
}

impl fmt::Display for C0Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, x) in &self.entries {
            writeln!(f, "{i}: {x}")?;
        }
        write!(f, "tail: {}", self.tail_bound().display(self.ctx.prime()))
    }
}

impl fmt::Debug for C0Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigUint;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ctx() -> PadicContext {
        PadicContext::new(5, 32).unwrap()
    }

    fn powers(c: PadicContext, upto: usize) -> C0Vector {
        C0Vector::new(c, (1..upto).map(|i| (i, c.p_power(i as i64))), upto as i64).unwrap()
    }

    #[test]
    fn sup_norm_examples() {
        let c = ctx();
        assert_eq!(C0Vector::zero(c, 32).sup_norm(), Norm::Zero);
        assert_eq!(powers(c, 40).sup_norm(), Norm::Pow(1));
        assert!(powers(c, 40).in_unit_ball());
    }

    #[test]
    fn sup_norm_matches_scan() {
        let c = ctx();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let len = rng.gen_range(1..12);
            let xs: Vec<_> = (1..=len).map(|i| (i, c.random_in_ball(1, 8, &mut rng))).collect();
            let mut scan = Norm::Zero;
            for (_, x) in &xs {
                if x.norm() > scan {
                    scan = x.norm();
                }
            }
            let v = C0Vector::new(c, xs, 40).unwrap();
            assert_eq!(v.sup_norm(), scan);
        }
    }

    #[test]
    fn tail_sum_of_powers() {
        let c = ctx();
        let x = powers(c, 40);
        let s = x.tail_sum(32).unwrap();
        // -5/4 mod 125; 4 * 19 = 76 = 1 (mod 25), -5 * 19 = -95 = 30 (mod 125)
        assert_eq!(s.residue(3).unwrap(), BigUint::from(30u32));
        assert!(s.eq_at_precision(&c.rational(5, -4).unwrap(), 32));
        assert!(C0Vector::zero(c, 32).tail_sum(32).unwrap().is_zero());
        let single = C0Vector::new(c, [(1, c.integer(5))], 40).unwrap();
        assert!(single.tail_sum(32).unwrap().eq_at_precision(&c.integer(5), 33));
    }

    #[test]
    fn tail_too_fat() {
        let c = ctx();
        let x = C0Vector::new(c, [(1, c.integer(5))], 3).unwrap();
        assert_eq!(
            x.tail_sum(32),
            Err(Error::TailTooFat {
                tail: 3,
                precision: 32
            })
        );
    }

    #[test]
    fn construction_checks() {
        let c = ctx();
        assert_eq!(C0Vector::new(c, [(0, c.one())], 5), Err(Error::BadIndex(0)));
        assert_eq!(
            C0Vector::new(c, [(1, c.p_power(10))], 5),
            Err(Error::TailAboveSupport { tail: 5 })
        );
        let other = PadicContext::new(7, 32).unwrap();
        assert_eq!(C0Vector::new(c, [(1, other.one())], 5), Err(Error::ContextMismatch));
    }

    #[test]
    fn distance_examples() {
        let c = ctx();
        let x = C0Vector::new(c, [(1, c.integer(5))], 40).unwrap();
        let y = C0Vector::new(c, [(1, c.integer(5)), (2, c.integer(25))], 40).unwrap();
        assert_eq!(x.distance(&x).unwrap(), Norm::Zero);
        assert_eq!(x.distance(&y).unwrap(), Norm::Pow(2));
    }

    #[test]
    fn sums_are_one_lipschitz() {
        let c = ctx();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let len = rng.gen_range(1..=12);
            let x: Vec<_> = (1..=len).map(|i| (i, c.random_in_ball(1, 10, &mut rng))).collect();
            let y: Vec<_> = (1..=len).map(|i| (i, c.random_in_ball(1, 10, &mut rng))).collect();
            let (x, y) = (C0Vector::new(c, x, 40).unwrap(), C0Vector::new(c, y, 40).unwrap());
            let lhs = (&x.tail_sum(32).unwrap() - &y.tail_sum(32).unwrap()).norm();
            assert!(lhs <= x.distance(&y).unwrap());
        }
    }

    #[test]
    fn text_round_trip() {
        let c = PadicContext::new(5, 4).unwrap();
        let x = C0Vector::new(c, [(1, c.integer(5)), (3, c.rational(1, 25).unwrap())], 6);
        // entry 3 has norm 25 > 1/5: allowed, the ball is a separate check
        let x = x.unwrap();
        assert!(!x.in_unit_ball());
        let text = x.to_string();
        assert!(text.ends_with("tail: 5^-6"));
        assert_eq!(C0Vector::parse(c, &text).unwrap(), x);
    }
}
