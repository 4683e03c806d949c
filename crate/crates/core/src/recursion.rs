//! The boundary-field recursion of the countable-state Potts model.
//!
//! For a sequence `x` in the ball `B` of c0 and `theta = exp_p(J)`, the local
//! maps are
//!
//! ```text
//! F_i(x; theta) = ((theta - 1) x_i + X + 1) / (X + theta),   X = sum_j x_j,
//! ```
//!
//! and a boundary field `h` is admissible at a vertex `x` iff
//! `h_{i,x} = lambda(i) prod_{y in S(x)} F_i(h_y; theta_{x,y})`. On the
//! homogeneous tree this collapses to the fixed-point equation of the global
//! map `(G x)_i = lambda(i) F_i(x; theta)^k`, a contraction of `B` with
//! Lipschitz constant `|theta - 1|_p`.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::padic::{Norm, PadicContext, PadicNumber};
use crate::sequence::C0Vector;
use crate::tree::{CayleyTree, Vertex};
use crate::weight::{AffineValuation, Weight};

/// Check `0 < |J|_p < p^(-1/(p-1))`.
pub fn validate_coupling(j: &PadicNumber) -> Result<()> {
    match j.valuation() {
        Some(v) if v >= j.context().exp_domain_valuation() => Ok(()),
        _ => Err(Error::CouplingOutOfRange),
    }
}

/// Homogeneous model: prime context, tree order `k`, coupling `J` and the
/// cached `theta = exp_p(J)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    ctx: PadicContext,
    order: usize,
    coupling: PadicNumber,
    theta: PadicNumber,
}

impl ModelParams {
    pub fn new(ctx: PadicContext, order: usize, coupling: PadicNumber) -> Result<Self> {
        if order == 0 {
            return Err(Error::BadOrder);
        }
        if coupling.context() != ctx {
            return Err(Error::ContextMismatch);
        }
        validate_coupling(&coupling)?;
        let theta = coupling.exp()?;
        Ok(Self {
            ctx,
            order,
            coupling,
            theta,
        })
    }

    pub fn context(&self) -> PadicContext {
        self.ctx
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coupling(&self) -> &PadicNumber {
        &self.coupling
    }

    pub fn theta(&self) -> &PadicNumber {
        &self.theta
    }

    /// `|theta - 1|_p`, which equals `|J|_p`.
    pub fn contraction(&self) -> Norm {
        (&self.theta - &self.ctx.one()).norm()
    }
}

/// Per-edge couplings `J_{x,y}` over a finite tree, keyed by the child
/// vertex, with `theta_{x,y}` cached.
#[derive(Debug, Clone)]
pub struct EdgeCouplings {
    ctx: PadicContext,
    edges: Vec<Option<(PadicNumber, PadicNumber)>>,
}

impl EdgeCouplings {
    pub fn homogeneous(tree: &CayleyTree, coupling: &PadicNumber) -> Result<Self> {
        Self::from_fn(tree, |_, _| coupling.clone())
    }

    /// `coupling(parent, child)` for every edge of the tree.
    pub fn from_fn(
        tree: &CayleyTree,
        mut coupling: impl FnMut(Vertex, Vertex) -> PadicNumber,
    ) -> Result<Self> {
        let mut edges = vec![None];
        let mut ctx = None;
        for (x, y) in tree.edges(tree.depth())? {
            let j = coupling(x, y);
            validate_coupling(&j)?;
            if *ctx.get_or_insert(j.context()) != j.context() {
                return Err(Error::ContextMismatch);
            }
            let theta = j.exp()?;
            edges.push(Some((j, theta)));
        }
        let ctx = ctx.ok_or(Error::DepthOutOfRange {
            requested: 1,
            depth: 0,
        })?;
        Ok(Self { ctx, edges })
    }

    pub fn context(&self) -> PadicContext {
        self.ctx
    }

    fn edge(&self, child: Vertex) -> &(PadicNumber, PadicNumber) {
        self.edges[child].as_ref().expect("the root has no parent edge")
    }

    /// `J` on the edge into `child`.
    pub fn coupling(&self, child: Vertex) -> &PadicNumber {
        &self.edge(child).0
    }

    pub fn theta(&self, child: Vertex) -> &PadicNumber {
        &self.edge(child).1
    }

    /// `|theta - 1|_p` on the edge into `child`.
    pub fn contraction(&self, child: Vertex) -> Norm {
        self.coupling(child).norm()
    }
}

/// The sequence `h_i = exp_p(h_i - h_0) lambda(i)/lambda(0)`, `i >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryField {
    hat: C0Vector,
}

impl BoundaryField {
    pub fn new(hat: C0Vector) -> Self {
        Self { hat }
    }

    pub fn hat(&self) -> &C0Vector {
        &self.hat
    }

    pub fn into_hat(self) -> C0Vector {
        self.hat
    }

    pub fn value(&self, i: usize) -> PadicNumber {
        if i == 0 {
            return self.hat.context().one();
        }
        self.hat.value(i)
    }
}

/// Differences `h_i - h_0`, with `h_0 = 0`; unset indices read as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct LogField {
    ctx: PadicContext,
    values: BTreeMap<usize, PadicNumber>,
}

impl LogField {
    pub fn new(ctx: PadicContext, values: impl IntoIterator<Item = (usize, PadicNumber)>) -> Self {
        Self {
            ctx,
            values: values.into_iter().filter(|(i, _)| *i != 0).collect(),
        }
    }

    pub fn zero(ctx: PadicContext) -> Self {
        Self::new(ctx, [])
    }

    pub fn context(&self) -> PadicContext {
        self.ctx
    }

    pub fn value(&self, i: usize) -> PadicNumber {
        self.values.get(&i).cloned().unwrap_or_else(|| self.ctx.zero())
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, &PadicNumber)> {
        self.values.iter().map(|(&i, h)| (i, h))
    }

    /// `max_i |h_i|_p`.
    pub fn sup_norm(&self) -> Norm {
        self.values.values().map(PadicNumber::norm).max().unwrap_or(Norm::Zero)
    }

    /// Copy with `h_i` replaced.
    pub fn with_value(&self, i: usize, h: PadicNumber) -> Self {
        let mut values = self.values.clone();
        values.insert(i, h);
        Self { ctx: self.ctx, values }
    }
}

fn sequence_sum(x: &C0Vector) -> Result<PadicNumber> {
    x.tail_sum(x.context().precision() as i64)
}

/// `F_i` given the coordinate `x_i` and the precomputed sum `X`.
pub fn local_map_with_sum(x_i: &PadicNumber, sum: &PadicNumber, theta: &PadicNumber) -> Result<PadicNumber> {
    LocalMap::new(sum, theta)?.at(x_i)
}

/// `F_i(x; theta)` for one `x`, with the shared denominator inverted once.
struct LocalMap {
    slope: PadicNumber,
    offset: PadicNumber,
    inv_denom: PadicNumber,
}

impl LocalMap {
    fn new(sum: &PadicNumber, theta: &PadicNumber) -> Result<Self> {
        let one = theta.context().one();
        let denom = sum + theta;
        if denom.norm_bound() < Norm::ONE {
            return Err(Error::SingularDenominator);
        }
        Ok(Self {
            slope: theta - &one,
            offset: sum + &one,
            inv_denom: denom.inverse()?,
        })
    }

    fn at(&self, x_i: &PadicNumber) -> Result<PadicNumber> {
        Ok(&(&(&self.slope * x_i) + &self.offset) * &self.inv_denom)
    }
}

/// `F_i(x; theta) = ((theta - 1) x_i + X + 1) / (X + theta)`.
pub fn local_map(i: usize, x: &C0Vector, theta: &PadicNumber) -> Result<PadicNumber> {
    if i == 0 {
        return Err(Error::BadIndex(0));
    }
    let sum = sequence_sum(x)?;
    local_map_with_sum(&x.value(i), &sum, theta)
}

fn weight_tail(w: &Weight, q: usize) -> i64 {
    match w.truncation_bound(q) {
        Norm::Zero => i64::MAX / 4,
        Norm::Pow(t) => t,
    }
}

/// `(G x)_i = (lambda(i)/lambda(0)) F_i(x; theta)^k` for `1 <= i < q`, where
/// `q` is the weight's working cutoff; coordinates past `q` are certified
/// below precision by the weight's decay (`|F_i^k|_p = 1`).
pub fn global_map(x: &C0Vector, w: &Weight, params: &ModelParams) -> Result<C0Vector> {
    let q = w.working_cutoff();
    let f_x = LocalMap::new(&sequence_sum(x)?, params.theta())?;
    let k = params.order() as i64;
    let mut entries = Vec::with_capacity(q);
    for i in 1..q {
        let f = f_x.at(&x.value(i))?;
        entries.push((i, &w.value(i) * &f.pow(k)?));
    }
    C0Vector::from_parts(params.context(), entries, weight_tail(w, q))
}

/// Result of [`fixed_point_solve`].
#[derive(Debug, Clone)]
pub struct FixedPoint {
    pub field: BoundaryField,
    pub iterations: usize,
    /// Certified bound on the last step `||x_t - x_{t-1}||`.
    pub residual: Norm,
    /// Step norms `||x_t - x_{t-1}||`, one per iteration.
    pub steps: Vec<Norm>,
}

/// Upper bound on the iterations needed to reach `target`.
pub fn iteration_bound(params: &ModelParams, target: i64) -> usize {
    let c = params.contraction().valuation().unwrap_or(1).max(1);
    ((target.max(0) + c - 1) / c) as usize
}

/// Banach iteration of the global map from `x_i = lambda(i)/lambda(0)` until
/// successive iterates agree to `p^-target`.
pub fn fixed_point_solve(w: &Weight, params: &ModelParams, target: i64) -> Result<FixedPoint> {
    fixed_point_solve_from(start_vector(w, params)?, w, params, target)
}

fn start_vector(w: &Weight, params: &ModelParams) -> Result<C0Vector> {
    let q = w.working_cutoff();
    C0Vector::from_parts(params.context(), (1..q).map(|i| (i, w.value(i))), weight_tail(w, q))
}

/// [`fixed_point_solve`] from an arbitrary starting point in `B`.
pub fn fixed_point_solve_from(
    start: C0Vector,
    w: &Weight,
    params: &ModelParams,
    target: i64,
) -> Result<FixedPoint> {
    if !w.satisfies_l1() {
        return Err(Error::ConditionL1Violated);
    }
    let max_iter = iteration_bound(params, target) + 2;
    let mut x = start;
    let mut steps = Vec::new();
    for t in 1..=max_iter {
        let next = global_map(&x, w, params)?;
        let step = next.sub(&x)?;
        steps.push(step.sup_norm_bound());
        x = next;
        if step.is_within(target) {
            return Ok(FixedPoint {
                field: BoundaryField::new(x),
                iterations: t,
                residual: *steps.last().expect("one step taken"),
                steps,
            });
        }
    }
    Err(Error::NonConvergence(max_iter))
}

/// Recover the weight for which `target` is the translation-invariant
/// fixed point: `lambda(i) = h_i / F_i(h; theta)^k`, `lambda(0) = 1`.
pub fn invert_weight(target: &BoundaryField, params: &ModelParams) -> Result<Weight> {
    let ctx = params.context();
    let hat = target.hat();
    let sum = sequence_sum(hat)?;
    let k = params.order() as i64;
    let mut values = vec![ctx.one()];
    for i in 1..hat.support_end() {
        let f = local_map_with_sum(&hat.value(i), &sum, params.theta())?;
        values.push(hat.value(i).checked_div(&f.pow(k)?)?);
    }
    Weight::new(ctx, values, AffineValuation::new(0, hat.tail_exponent()))
}

/// `h_i = exp_p(h_i) lambda(i)/lambda(0)` over the weight's working cutoff.
pub fn hat_from_log(h: &LogField, w: &Weight) -> Result<BoundaryField> {
    let q = w.working_cutoff();
    let entries = (1..q)
        .map(|i| Ok((i, &h.value(i).exp()? * &w.value(i))))
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundaryField::new(C0Vector::from_parts(
        w.context(),
        entries,
        weight_tail(w, q),
    )?))
}

/// `h_i = log_p(lambda(0)/lambda(i) h_i)`; indices where `lambda(i)`
/// vanishes carry no information and are skipped.
pub fn log_from_hat(field: &BoundaryField, w: &Weight) -> Result<LogField> {
    let mut values = Vec::new();
    for (i, h) in field.hat().entries() {
        let l = w.value(i);
        if l.is_zero() {
            continue;
        }
        let ratio = h.checked_div(&l)?;
        values.push((i, ratio.log()?));
    }
    Ok(LogField::new(w.context(), values))
}

/// The field at a vertex from the fields at its direct successors:
/// `h_{i,x} = lambda(i) prod_m F_i(h_{x_m}; theta_{x,x_m})`.
pub fn backward_step(successors: &[(&C0Vector, &PadicNumber)], w: &Weight) -> Result<C0Vector> {
    let ctx = w.context();
    let q = w.working_cutoff();
    let maps = successors
        .iter()
        .map(|(h, theta)| LocalMap::new(&sequence_sum(h)?, theta))
        .collect::<Result<Vec<_>>>()?;
    let mut entries = Vec::with_capacity(q);
    for i in 1..q {
        let mut prod = w.value(i);
        for ((h, _), f) in successors.iter().zip(&maps) {
            prod = &prod * &f.at(&h.value(i))?;
        }
        entries.push((i, prod));
    }
    C0Vector::from_parts(ctx, entries, weight_tail(w, q))
}

/// Push leaf fields at depth `d` up to the root with [`backward_step`],
/// returning the fields on every level (index 0 is the root).
pub fn propagate_to_root(
    tree: &CayleyTree,
    leaves: &[C0Vector],
    couplings: &EdgeCouplings,
    w: &Weight,
) -> Result<Vec<Vec<C0Vector>>> {
    let depth = tree.depth();
    let leaf_range = tree.level(depth);
    if leaves.len() != leaf_range.len() {
        return Err(Error::DepthOutOfRange {
            requested: leaves.len(),
            depth: leaf_range.len(),
        });
    }
    let mut levels = vec![leaves.to_vec()];
    for n in (0..depth).rev() {
        let below = levels.last().expect("leaf level present");
        let offset = tree.level(n + 1).start;
        let current = tree
            .level(n)
            .collect::<Vec<_>>()
            .par_iter()
            .map(|&x| {
                let succ = tree.successors(x)?;
                let inputs: Vec<_> = succ
                    .map(|y| (&below[y - offset], couplings.theta(y)))
                    .collect();
                backward_step(&inputs, w)
            })
            .collect::<Result<Vec<_>>>()?;
        levels.push(current);
    }
    levels.reverse();
    Ok(levels)
}

/// Outcome of [`uniqueness_cascade`].
#[derive(Debug, Clone)]
pub struct CascadeReport {
    pub depth: usize,
    /// `max` over leaves of `||a_x - b_x||`, exact zero when the seeds agree.
    pub initial_difference: Norm,
    /// Certified bound on `||a_root - b_root||`.
    pub root_difference: Norm,
    /// `root_difference / initial_difference` (zero when the seeds agree).
    pub ratio: Norm,
    /// `prod` over levels of the weakest edge contraction on that level.
    pub per_level_bound: Norm,
    /// `(max_edge |theta - 1|_p)^depth`.
    pub uniform_bound: Norm,
    /// `p^-depth`, the coarse per-level factor `1/p`.
    pub coarse_bound: Norm,
    /// Largest certified difference on each level, root first.
    pub level_differences: Vec<Norm>,
}

impl CascadeReport {
    pub fn within_bounds(&self) -> bool {
        self.ratio <= self.per_level_bound
            && self.ratio <= self.uniform_bound
            && self.ratio <= self.coarse_bound
    }
}

/// Recurse two boundary assignments at depth `d` to the root and compare the
/// contraction they experience against the per-edge bounds.
pub fn uniqueness_cascade(
    tree: &CayleyTree,
    seeds_a: &[C0Vector],
    seeds_b: &[C0Vector],
    couplings: &EdgeCouplings,
    w: &Weight,
) -> Result<CascadeReport> {
    if !w.satisfies_l1() {
        return Err(Error::ConditionL1Violated);
    }
    let a = propagate_to_root(tree, seeds_a, couplings, w)?;
    let b = propagate_to_root(tree, seeds_b, couplings, w)?;
    let level_differences = a
        .iter()
        .zip(&b)
        .map(|(la, lb)| {
            la.iter()
                .zip(lb)
                .map(|(x, y)| Ok(x.sub(y)?.sup_norm_bound()))
                .collect::<Result<Vec<_>>>()
                .map(|v| v.into_iter().max().unwrap_or(Norm::Zero))
        })
        .collect::<Result<Vec<_>>>()?;
    let depth = tree.depth();
    let initial = seeds_a
        .iter()
        .zip(seeds_b)
        .map(|(x, y)| x.distance(y))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .max()
        .unwrap_or(Norm::Zero);
    let root = level_differences[0];
    let ratio = if initial.is_zero() {
        Norm::Zero
    } else {
        root.ratio(initial).expect("nonzero denominator")
    };
    let mut per_level = Norm::ONE;
    let mut weakest = Norm::Zero;
    for n in 1..=depth {
        let level_max = tree
            .level(n)
            .map(|y| couplings.contraction(y))
            .max()
            .unwrap_or(Norm::Zero);
        per_level = per_level * level_max;
        weakest = weakest.max(level_max);
    }
    Ok(CascadeReport {
        depth,
        initial_difference: initial,
        root_difference: root,
        ratio,
        per_level_bound: per_level,
        uniform_bound: weakest.pow(depth as u32),
        coarse_bound: Norm::Pow(depth as i64),
        level_differences,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weight::WeightSpec;
    use num_bigint::BigUint;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(p: u64, k: usize, j: i64) -> (ModelParams, Weight) {
        let ctx = PadicContext::new(p, 32).unwrap();
        let params = ModelParams::new(ctx, k, ctx.integer(j)).unwrap();
        let w = Weight::from_spec(&WeightSpec::PowerField, &params).unwrap();
        (params, w)
    }

    fn random_ball_vector(ctx: PadicContext, rng: &mut impl Rng) -> C0Vector {
        let len = rng.gen_range(1..=12);
        let entries: Vec<_> = (1..=len).map(|i| (i, ctx.random_in_ball(1, 6, rng))).collect();
        C0Vector::new(ctx, entries, 40).unwrap()
    }

    #[test]
    fn coupling_gate() {
        let ctx = PadicContext::new(5, 16).unwrap();
        assert_eq!(ModelParams::new(ctx, 2, ctx.zero()), Err(Error::CouplingOutOfRange));
        assert_eq!(ModelParams::new(ctx, 2, ctx.integer(2)), Err(Error::CouplingOutOfRange));
        let p = ModelParams::new(ctx, 2, ctx.integer(10)).unwrap();
        assert_eq!(p.contraction(), Norm::Pow(1));
        assert_eq!(p.theta().norm(), Norm::ONE);
        let two = PadicContext::new(2, 16).unwrap();
        assert_eq!(ModelParams::new(two, 2, two.integer(2)), Err(Error::CouplingOutOfRange));
        assert!(ModelParams::new(two, 2, two.integer(4)).is_ok());
    }

    #[test]
    fn local_map_at_zero_is_inverse_theta() {
        let (params, _) = setup(5, 2, 5);
        let ctx = params.context();
        let zero = C0Vector::zero(ctx, 40);
        let f = local_map(1, &zero, params.theta()).unwrap();
        assert!(f.eq_at_precision(&params.theta().inverse().unwrap(), 32));
        // theta = 6 (mod 25) and 6 * 21 = 126 = 1 (mod 25)
        assert_eq!(f.residue(2).unwrap(), BigUint::from(21u32));
    }

    #[test]
    fn local_map_boundary_identity_and_contraction() {
        let (params, _) = setup(5, 2, 5);
        let ctx = params.context();
        let theta = params.theta();
        let c = params.contraction();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let x = random_ball_vector(ctx, &mut rng);
            let y = random_ball_vector(ctx, &mut rng);
            let i = rng.gen_range(1..=12);
            let fx = local_map(i, &x, theta).unwrap();
            let fy = local_map(i, &y, theta).unwrap();
            assert_eq!((&fx - &ctx.one()).norm(), c);
            assert!((&fx - &fy).norm() <= c * x.distance(&y).unwrap());
        }
    }

    #[test]
    fn singular_denominator_outside_ball() {
        let (params, _) = setup(5, 2, 5);
        let ctx = params.context();
        // X = -theta makes the denominator vanish
        let x = C0Vector::new(ctx, [(1, -params.theta())], 40).unwrap();
        assert_eq!(local_map(1, &x, params.theta()), Err(Error::SingularDenominator));
    }

    #[test]
    fn global_map_at_zero() {
        let (params, w) = setup(5, 2, 5);
        let ctx = params.context();
        let g = global_map(&C0Vector::zero(ctx, 40), &w, &params).unwrap();
        let inv_theta_k = params.theta().pow(-2).unwrap();
        for i in 1..w.working_cutoff() {
            assert!(g.value(i).eq_at_precision(&(&w.value(i) * &inv_theta_k), 30));
        }
        assert!(g.in_unit_ball());
    }

    #[test]
    fn power_field_is_a_fixed_point() {
        for p in [3u64, 5, 7] {
            for k in [2usize, 3] {
                let (params, w) = setup(p, k, p as i64);
                let fp = fixed_point_solve(&w, &params, 28).unwrap();
                assert!(fp.iterations <= 40);
                for i in 1..w.working_cutoff() {
                    let got = fp.field.value(i);
                    assert!(got.eq_at_precision(&params.context().p_power(i as i64), 20), "p={p} k={k} i={i}");
                }
            }
        }
    }

    #[test]
    fn l1_gate() {
        let (params, _) = setup(5, 2, 5);
        let ctx = params.context();
        let w = Weight::new(ctx, vec![ctx.one(), ctx.integer(2)], AffineValuation::new(0, 40)).unwrap();
        assert_eq!(fixed_point_solve(&w, &params, 28).unwrap_err(), Error::ConditionL1Violated);
    }

    #[test]
    fn steps_contract_geometrically() {
        let ctx = PadicContext::new(3, 32).unwrap();
        let params = ModelParams::new(ctx, 2, ctx.integer(3)).unwrap();
        let ratio = num_rational::BigRational::from_integer(3.into());
        let w = Weight::from_spec(&WeightSpec::Geometric { ratio }, &params).unwrap();
        let fp = fixed_point_solve(&w, &params, 28).unwrap();
        assert!(fp.iterations <= iteration_bound(&params, 28));
        for pair in fp.steps.windows(2) {
            if let (Norm::Pow(_), Norm::Pow(_)) = (pair[0], pair[1]) {
                assert!(pair[1].ratio(pair[0]).unwrap() <= params.contraction());
            }
        }
    }

    #[test]
    fn invert_then_solve_round_trip() {
        for p in [3u64, 5, 7] {
            let ctx = PadicContext::new(p, 32).unwrap();
            let params = ModelParams::new(ctx, 2, ctx.integer(p as i64)).unwrap();
            let target = C0Vector::new(ctx, (1..32).map(|i| (i, ctx.p_power(i as i64))), 32).unwrap();
            let target = BoundaryField::new(target);
            let w = invert_weight(&target, &params).unwrap();
            let reference = Weight::from_spec(&WeightSpec::PowerField, &params).unwrap();
            for i in 0..32 {
                assert!(w.value(i).eq_at_precision(&reference.value(i), 28));
            }
            let fp = fixed_point_solve(&w, &params, 28).unwrap();
            for i in 1..32 {
                assert!(fp.field.value(i).eq_at_precision(&target.value(i), 28));
            }
        }
    }

    #[test]
    fn invert_recovers_generating_weight() {
        let ctx = PadicContext::new(5, 32).unwrap();
        let params = ModelParams::new(ctx, 3, ctx.integer(10)).unwrap();
        let ratio = num_rational::BigRational::new(5.into(), 7.into());
        let w = Weight::from_spec(&WeightSpec::Geometric { ratio }, &params).unwrap();
        let fp = fixed_point_solve(&w, &params, 28).unwrap();
        let back = invert_weight(&fp.field, &params).unwrap();
        for i in 0..w.len() {
            assert!(back.value(i).eq_at_precision(&w.value(i), 27), "i={i}");
        }
    }

    #[test]
    fn log_hat_round_trip() {
        let (params, w) = setup(5, 2, 5);
        let ctx = params.context();
        let fp = fixed_point_solve(&w, &params, 28).unwrap();
        let h = log_from_hat(&fp.field, &w).unwrap();
        assert!(h.sup_norm() <= params.contraction());
        let back = hat_from_log(&h, &w).unwrap();
        for i in 1..w.working_cutoff() {
            assert!(back.value(i).eq_at_precision(&fp.field.value(i), 28));
        }
        let zero = hat_from_log(&LogField::zero(ctx), &w).unwrap();
        for i in 1..w.working_cutoff() {
            assert!(zero.value(i).eq_at_precision(&w.value(i), 32));
        }
    }

    #[test]
    fn fixed_point_norm_profile() {
        let (params, w) = setup(7, 3, 7);
        let fp = fixed_point_solve(&w, &params, 28).unwrap();
        for i in 1..w.working_cutoff() {
            assert_eq!(fp.field.value(i).norm(), w.value(i).norm());
        }
        let again = global_map(fp.field.hat(), &w, &params).unwrap();
        assert!(again.sub(fp.field.hat()).unwrap().is_within(28));
    }

    #[test]
    fn backward_step_reduces_to_global_map() {
        let (params, w) = setup(5, 2, 5);
        let ctx = params.context();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = random_ball_vector(ctx, &mut rng);
        let inputs = [(&x, params.theta()), (&x, params.theta())];
        let step = backward_step(&inputs, &w).unwrap();
        let g = global_map(&x, &w, &params).unwrap();
        assert!(step.sub(&g).unwrap().is_within(30));

        let zero = C0Vector::zero(ctx, 40);
        let t2 = ctx.integer(25).exp().unwrap();
        let inputs = [(&zero, params.theta()), (&zero, &t2)];
        let step = backward_step(&inputs, &w).unwrap();
        let expected = &w.value(1) / &(params.theta() * &t2);
        assert!(step.value(1).eq_at_precision(&expected, 30));
    }

    #[test]
    fn cascade_with_identical_and_distinct_seeds() {
        let ctx = PadicContext::new(5, 32).unwrap();
        let params = ModelParams::new(ctx, 2, ctx.integer(5)).unwrap();
        let w = Weight::from_spec(&WeightSpec::PowerField, &params).unwrap();
        let tree = CayleyTree::new(2, 4).unwrap();
        let couplings = EdgeCouplings::homogeneous(&tree, params.coupling()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let leaves: Vec<_> = tree.level(4).map(|_| random_ball_vector(ctx, &mut rng)).collect();
        let same = uniqueness_cascade(&tree, &leaves, &leaves, &couplings, &w).unwrap();
        assert_eq!(same.ratio, Norm::Zero);
        let other: Vec<_> = tree.level(4).map(|_| random_ball_vector(ctx, &mut rng)).collect();
        let r = uniqueness_cascade(&tree, &leaves, &other, &couplings, &w).unwrap();
        assert!(r.within_bounds(), "{r:?}");
        assert!(r.ratio <= Norm::Pow(4));
    }

    #[test]
    fn cascade_inhomogeneous_couplings() {
        let ctx = PadicContext::new(5, 32).unwrap();
        let params = ModelParams::new(ctx, 2, ctx.integer(5)).unwrap();
        let w = Weight::from_spec(&WeightSpec::PowerField, &params).unwrap();
        let tree = CayleyTree::new(2, 4).unwrap();
        // level n edges get valuation (n mod 3) + 1
        let couplings = EdgeCouplings::from_fn(&tree, |_, y| {
            let v = (tree.level_of(y) % 3) as i64 + 1;
            &ctx.p_power(v) * &ctx.integer(1 + y as i64 % 4)
        })
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let a: Vec<_> = tree.level(4).map(|_| random_ball_vector(ctx, &mut rng)).collect();
        let b: Vec<_> = tree.level(4).map(|_| random_ball_vector(ctx, &mut rng)).collect();
        let r = uniqueness_cascade(&tree, &a, &b, &couplings, &w).unwrap();
        // levels 1..4 carry valuations 2, 3, 1, 2
        assert_eq!(r.per_level_bound, Norm::Pow(8));
        assert_eq!(r.uniform_bound, Norm::Pow(4));
        assert!(r.within_bounds(), "{r:?}");
    }
}
