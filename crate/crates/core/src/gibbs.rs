//! Finite-volume p-adic Gibbs measures of the Potts model on `V_n`.
//!
//! ```text
//! mu_n(sigma) = exp_p{ H_n(sigma) + sum_{x in W_n} h_{sigma(x)} } prod_{x in V_n} lambda(sigma(x)) / Z_n
//! ```
//!
//! The countable alphabet is cut at `q`: the model is the one with the
//! weight [`Weight::truncated`] at `q`, and the mass the full weight would put
//! on states `>= q` is carried as a truncation bound.
//!
//! Configurations are indexed big-endian over breadth-first vertex ids, so the
//! configurations extending a fixed `sigma_{n-1}` form one contiguous block of
//! `q^|W_n|` indices.

use std::collections::HashMap;
use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::padic::{Norm, PadicNumber};
use crate::recursion::{fixed_point_solve, log_from_hat, BoundaryField, EdgeCouplings, LogField, ModelParams};
use crate::tree::{ball_size, CayleyTree};
use crate::weight::Weight;

pub const DEFAULT_BUDGET: u64 = 1_000_000;

/// A spin assignment `sigma: V_n -> {0, .., q-1}` in breadth-first order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Configuration {
    states: Vec<u32>,
}

impl Configuration {
    pub fn new(tree: &CayleyTree, states: Vec<u32>) -> Result<Self> {
        if states.len() != tree.vertex_count() {
            return Err(Error::DepthOutOfRange {
                requested: states.len(),
                depth: tree.vertex_count(),
            });
        }
        Ok(Self { states })
    }

    /// The `index`-th configuration over `len` vertices and `q` states.
    pub fn from_index(mut index: u64, len: usize, q: usize) -> Self {
        let mut states = vec![0u32; len];
        for s in states.iter_mut().rev() {
            *s = (index % q as u64) as u32;
            index /= q as u64;
        }
        Self { states }
    }

    pub fn index(&self, q: usize) -> u64 {
        self.states.iter().fold(0, |acc, &s| acc * q as u64 + s as u64)
    }

    pub fn states(&self) -> &[u32] {
        &self.states
    }

    pub fn state(&self, x: usize) -> u32 {
        self.states[x]
    }

    /// `sigma|_{V_m}`.
    pub fn restrict(&self, tree: &CayleyTree, m: usize) -> Self {
        Self {
            states: self.states[tree.ball(m)].to_vec(),
        }
    }

    /// `sigma v omega`: extend by an assignment on the next sphere.
    pub fn concat(&self, outer: &[u32]) -> Self {
        let mut states = self.states.clone();
        states.extend_from_slice(outer);
        Self { states }
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.states.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

/// Number of edges `<x,y>` of the tree with `sigma(x) = sigma(y)`.
pub fn monochromatic_edges(tree: &CayleyTree, states: &[u32]) -> usize {
    (1..tree.vertex_count())
        .filter(|&y| states[y] == states[tree.parent(y).expect("non-root")])
        .count()
}

/// `H_n(sigma) = sum_{<x,y>} J_{x,y} delta_{sigma(x), sigma(y)}`.
pub fn hamiltonian(tree: &CayleyTree, sigma: &Configuration, couplings: &EdgeCouplings) -> PadicNumber {
    let ctx = couplings.context();
    let mut h = ctx.zero();
    for y in 1..tree.vertex_count() {
        if sigma.state(y) == sigma.state(tree.parent(y).expect("non-root")) {
            h = &h + couplings.coupling(y);
        }
    }
    h
}

/// `q^|V_n|`, or `None` past `u64`.
pub fn configuration_count(k: usize, n: usize, q: usize) -> Option<u64> {
    let v = u32::try_from(ball_size(k, n)).ok()?;
    (q as u64).checked_pow(v)
}

fn check_budget(k: usize, n: usize, q: usize, budget: u64) -> Result<u64> {
    match configuration_count(k, n, q) {
        Some(c) if c <= budget => Ok(c),
        _ => Err(Error::StateSpaceTooLarge(format!("{q}^{}", ball_size(k, n)), budget)),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MeasureOptions {
    pub budget: u64,
    pub parallel: bool,
}

impl Default for MeasureOptions {
    fn default() -> Self {
        Self {
            budget: DEFAULT_BUDGET,
            parallel: false,
        }
    }
}

/// The exhaustive table of `mu_n` over `Omega_{V_n}`.
#[derive(Debug, Clone)]
pub struct FiniteVolumeMeasure {
    tree: CayleyTree,
    alphabet: usize,
    table: Vec<PadicNumber>,
    partition: PadicNumber,
    truncation_bound: Norm,
}

impl FiniteVolumeMeasure {
    pub fn depth(&self) -> usize {
        self.tree.depth()
    }

    pub fn tree(&self) -> &CayleyTree {
        &self.tree
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    /// `Z_n`.
    pub fn partition(&self) -> &PadicNumber {
        &self.partition
    }

    /// `max_{i >= q} |lambda(i)|_p` for the weight the model was cut from.
    pub fn truncation_bound(&self) -> Norm {
        self.truncation_bound
    }

    /// Measure values in configuration-index order.
    pub fn table(&self) -> &[PadicNumber] {
        &self.table
    }

    pub fn get(&self, sigma: &Configuration) -> Option<&PadicNumber> {
        if sigma.states.len() != self.tree.vertex_count() || sigma.states.iter().any(|&s| s as usize >= self.alphabet) {
            return None;
        }
        self.table.get(sigma.index(self.alphabet) as usize)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Configuration, &PadicNumber)> + '_ {
        let len = self.tree.vertex_count();
        self.table
            .iter()
            .enumerate()
            .map(move |(c, m)| (Configuration::from_index(c as u64, len, self.alphabet), m))
    }

    /// Independent re-summation of the table.
    pub fn total(&self) -> PadicNumber {
        self.partition.context().sum(&self.table)
    }

    /// `max_sigma |mu(sigma)|_p`.
    pub fn max_norm(&self) -> Norm {
        self.table.iter().map(PadicNumber::norm).max().unwrap_or(Norm::Zero)
    }
}

struct Enumeration {
    /// Per configuration: (exponent key id, weight key id).
    keys: Vec<(u32, u32)>,
    exponent_keys: Vec<(usize, Vec<u32>)>,
    weight_keys: Vec<Vec<u32>>,
}

fn counts(states: &[u32], q: usize) -> Vec<u32> {
    let mut c = vec![0u32; q];
    for &s in states {
        c[s as usize] += 1;
    }
    c
}

/// Group configurations by what their measure depends on: the monochromatic
/// edge count with the leaf state counts, and the state counts on all of `V_n`.
fn enumerate(tree: &CayleyTree, q: usize, total: u64) -> Enumeration {
    let len = tree.vertex_count();
    let leaves = tree.level(tree.depth());
    let mut exp_ids: HashMap<(usize, Vec<u32>), u32> = HashMap::new();
    let mut w_ids: HashMap<Vec<u32>, u32> = HashMap::new();
    let mut exponent_keys = Vec::new();
    let mut weight_keys = Vec::new();
    let mut keys = Vec::with_capacity(total as usize);
    for c in 0..total {
        let sigma = Configuration::from_index(c, len, q);
        let ek = (monochromatic_edges(tree, &sigma.states), counts(&sigma.states[leaves.clone()], q));
        let e = *exp_ids.entry(ek.clone()).or_insert_with(|| {
            exponent_keys.push(ek);
            exponent_keys.len() as u32 - 1
        });
        let wk = counts(&sigma.states, q);
        let w = *w_ids.entry(wk.clone()).or_insert_with(|| {
            weight_keys.push(wk);
            weight_keys.len() as u32 - 1
        });
        keys.push((e, w));
    }
    Enumeration {
        keys,
        exponent_keys,
        weight_keys,
    }
}

fn map_maybe_par<T: Sync, U: Send>(items: &[T], parallel: bool, f: impl Fn(&T) -> Result<U> + Sync + Send) -> Result<Vec<U>> {
    if parallel {
        items.par_iter().map(f).collect()
    } else {
        items.iter().map(f).collect()
    }
}

/// `J m + sum_i c_i h_i`.
fn exponent(params: &ModelParams, h: &LogField, mono: usize, leaf_counts: &[u32]) -> PadicNumber {
    let ctx = params.context();
    let mut e = params.coupling() * &ctx.integer(mono as i64);
    for (i, &c) in leaf_counts.iter().enumerate() {
        if c > 0 && i > 0 {
            e = &e + &(&h.value(i) * &ctx.integer(c as i64));
        }
    }
    e
}

/// Build `mu_n` over the alphabet `{0, .., q-1}`.
pub fn build_measure(
    params: &ModelParams,
    w: &Weight,
    h: &LogField,
    n: usize,
    q: usize,
    opts: MeasureOptions,
) -> Result<FiniteVolumeMeasure> {
    let ctx = params.context();
    if q == 0 {
        return Err(Error::InvalidWeight("alphabet cutoff must be at least 1".into()));
    }
    let total = check_budget(params.order(), n, q, opts.budget)?;
    let tree = CayleyTree::new(params.order(), n)?;
    let lambdas: Vec<_> = (0..q).map(|i| w.value(i)).collect();
    let en = enumerate(&tree, q, total);

    let exps = map_maybe_par(&en.exponent_keys, opts.parallel, |(mono, leaf)| {
        exponent(params, h, *mono, leaf).exp()
    })?;
    let prods = map_maybe_par(&en.weight_keys, opts.parallel, |c| {
        let mut prod = ctx.one();
        for (l, &e) in lambdas.iter().zip(c) {
            if e > 0 {
                prod = &prod * &l.pow(e as i64)?;
            }
        }
        Ok(prod)
    })?;
    let unnormalized = map_maybe_par(&en.keys, opts.parallel, |&(e, w)| {
        Ok(&exps[e as usize] * &prods[w as usize])
    })?;
    let partition = ctx.sum(&unnormalized);
    let inv = partition.inverse()?;
    let table = map_maybe_par(&unnormalized, opts.parallel, |u| Ok(u * &inv))?;
    Ok(FiniteVolumeMeasure {
        tree,
        alphabet: q,
        table,
        partition,
        truncation_bound: w.truncation_bound(q),
    })
}

/// A weight cut at `q`, its translation-invariant fixed point and the
/// corresponding log field `h` (with `h_0 = 0`).
#[derive(Debug, Clone)]
pub struct SolvedModel {
    pub params: ModelParams,
    pub weight: Weight,
    pub field: BoundaryField,
    pub log_field: LogField,
    pub iterations: usize,
    /// `max_{i >= q} |lambda(i)|_p` of the uncut weight.
    pub truncation_bound: Norm,
}

impl SolvedModel {
    pub fn new(params: &ModelParams, w: &Weight, q: usize) -> Result<Self> {
        let cut = w.truncated(q);
        let target = params.context().precision() as i64;
        let fp = fixed_point_solve(&cut, params, target)?;
        let log_field = log_from_hat(&fp.field, &cut)?;
        Ok(Self {
            params: params.clone(),
            truncation_bound: w.truncation_bound(q),
            weight: cut,
            field: fp.field,
            log_field,
            iterations: fp.iterations,
        })
    }

    pub fn alphabet(&self) -> usize {
        self.weight.len()
    }

    pub fn measure(&self, n: usize, opts: MeasureOptions) -> Result<FiniteVolumeMeasure> {
        let mut m = build_measure(&self.params, &self.weight, &self.log_field, n, self.alphabet(), opts)?;
        m.truncation_bound = self.truncation_bound;
        Ok(m)
    }
}

/// Outcome of [`compatibility_check`].
#[derive(Debug, Clone)]
pub struct CompatibilityReport {
    pub depth: usize,
    pub alphabet: usize,
    /// Certified bound on `max_{sigma_{n-1}} |sum_omega mu_n(sigma_{n-1} v omega) - mu_{n-1}(sigma_{n-1})|_p`.
    pub residual: Norm,
    pub truncation_bound: Norm,
    pub identities: usize,
}

/// Marginalize `mu_n` over `W_n` and compare with `mu_{n-1}`.
pub fn marginal_residual(outer: &FiniteVolumeMeasure, inner: &FiniteVolumeMeasure) -> Result<Norm> {
    let q = outer.alphabet();
    if inner.alphabet() != q || inner.depth() + 1 != outer.depth() {
        return Err(Error::CompatibilityDepth(outer.depth()));
    }
    let block = outer.table.len() / inner.table.len();
    let ctx = outer.partition.context();
    Ok(inner
        .table
        .iter()
        .enumerate()
        .map(|(c, m)| {
            let s = ctx.sum(&outer.table[c * block..(c + 1) * block]);
            (&s - m).norm_bound()
        })
        .max()
        .unwrap_or(Norm::Zero))
}

pub fn compatibility_check(
    params: &ModelParams,
    w: &Weight,
    h: &LogField,
    n: usize,
    q: usize,
    opts: MeasureOptions,
) -> Result<CompatibilityReport> {
    if n < 2 {
        return Err(Error::CompatibilityDepth(n));
    }
    let outer = build_measure(params, w, h, n, q, opts)?;
    let inner = build_measure(params, w, h, n - 1, q, opts)?;
    Ok(CompatibilityReport {
        depth: n,
        alphabet: q,
        residual: marginal_residual(&outer, &inner)?,
        truncation_bound: outer.truncation_bound,
        identities: inner.len(),
    })
}

/// `X = sum_{j >= 1} h_j` of a solved field.
fn field_sum(field: &BoundaryField) -> Result<PadicNumber> {
    let hat = field.hat();
    hat.tail_sum(hat.tail_exponent().min(hat.context().precision() as i64))
}

/// `Z_n = a^|V_{n-1}|` with `a = (theta + sum_j h_j)^k`.
#[derive(Debug, Clone)]
pub struct PartitionClosedForm {
    pub a: PadicNumber,
    pub exponent: u64,
    pub value: PadicNumber,
}

pub fn closed_form_partition(field: &BoundaryField, params: &ModelParams, n: usize) -> Result<PartitionClosedForm> {
    let base = &field_sum(field)? + params.theta();
    let a = base.pow(params.order() as i64)?;
    let exponent = if n == 0 { 0 } else { ball_size(params.order(), n - 1) };
    let value = a.pow(exponent as i64)?;
    Ok(PartitionClosedForm { a, exponent, value })
}

/// `Z_1` directly: the root has `k + 1` successors,
/// `Z_1 = sum_i lambda(i) (sum_j exp_p(J delta_ij) h_j)^(k+1)` with `h_0 = 1`.
pub fn first_partition(field: &BoundaryField, w: &Weight, params: &ModelParams) -> Result<PadicNumber> {
    let ctx = params.context();
    let s = &ctx.one() + &field_sum(field)?;
    let k1 = params.order() as i64 + 1;
    let theta_minus_one = params.theta() - &ctx.one();
    let mut z = (&s + &theta_minus_one).pow(k1)?;
    for (i, hi) in field.hat().entries() {
        let l = w.value(i);
        if l.is_zero() {
            continue;
        }
        let inner = &s + &(&theta_minus_one * hi);
        z = &z + &(&l * &inner.pow(k1)?);
    }
    Ok(z)
}

/// `Z_n = Z_1 a^(|V_{n-1}| - 1)`, from `Z_{m+1} = a^|W_m| Z_m` for `m >= 1`.
pub fn recursive_partition(field: &BoundaryField, w: &Weight, params: &ModelParams, n: usize) -> Result<PadicNumber> {
    if n == 0 {
        return Err(Error::DepthOutOfRange { requested: 0, depth: 1 });
    }
    let z1 = first_partition(field, w, params)?;
    let a = closed_form_partition(field, params, 1)?.a;
    Ok(&z1 * &a.pow(ball_size(params.order(), n - 1) as i64 - 1)?)
}

/// `|V_n| - k |V_{n-1}|`, the exponent of `|lambda(0)|_p` in the boundedness bound.
pub fn boundary_exponent(k: usize, n: usize) -> i64 {
    ball_size(k, n) as i64 - k as i64 * ball_size(k, n - 1) as i64
}

#[derive(Debug, Clone, Copy)]
pub struct BoundednessReport {
    pub max_norm: Norm,
    /// `|lambda(0)|_p^(|V_n| - k|V_{n-1}|)`, which is 1 for normalized weights.
    pub bound: Norm,
    pub bounded: bool,
}

pub fn boundedness_check(measure: &FiniteVolumeMeasure, w: &Weight) -> BoundednessReport {
    let e = boundary_exponent(measure.tree.order(), measure.depth().max(1));
    let bound = w.value(0).norm().pow(e as u32);
    let max_norm = measure.max_norm();
    BoundednessReport {
        max_norm,
        bound,
        bounded: max_norm <= bound,
    }
}

/// `max_sigma |mu(sigma) - nu(sigma)|_p` over tables of equal shape, read at
/// working precision.
pub fn gibbs_norm_diff(a: &[FiniteVolumeMeasure], b: &[FiniteVolumeMeasure]) -> Result<Norm> {
    let mut worst = Norm::Zero;
    for (x, y) in a.iter().zip(b) {
        if x.table.len() != y.table.len() {
            return Err(Error::DepthOutOfRange {
                requested: y.depth(),
                depth: x.depth(),
            });
        }
        for (u, v) in x.table.iter().zip(&y.table) {
            worst = worst.max((u - v).norm());
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone)]
pub struct ContinuityReport {
    pub weight_distance: Norm,
    /// `||h_lambda - h_kappa||` for the uncut weights.
    pub field_distance: Norm,
    pub measure_distance: Norm,
    pub depth_cap: usize,
    pub field_within: bool,
    pub field_equal: bool,
    pub measures_within: bool,
}

/// Compare `lambda -> mu_lambda` at two weights: fields of the uncut weights,
/// and per-configuration measures over depths `1..=depth_cap` at cutoff `q`.
pub fn continuity_check(
    lambda: &Weight,
    kappa: &Weight,
    params: &ModelParams,
    depth_cap: usize,
    q: usize,
    opts: MeasureOptions,
) -> Result<ContinuityReport> {
    let target = params.context().precision() as i64;
    let weight_distance = lambda.distance(kappa)?;
    let hl = fixed_point_solve(lambda, params, target)?;
    let hk = fixed_point_solve(kappa, params, target)?;
    let field_distance = hl.field.hat().distance(hk.field.hat())?;
    let ml = SolvedModel::new(params, lambda, q)?;
    let mk = SolvedModel::new(params, kappa, q)?;
    let mut a = Vec::new();
    let mut b = Vec::new();
    for n in 1..=depth_cap {
        a.push(ml.measure(n, opts)?);
        b.push(mk.measure(n, opts)?);
    }
    let measure_distance = gibbs_norm_diff(&a, &b)?;
    Ok(ContinuityReport {
        weight_distance,
        field_distance,
        measure_distance,
        depth_cap,
        field_within: field_distance <= weight_distance,
        field_equal: field_distance == weight_distance,
        measures_within: measure_distance <= weight_distance,
    })
}

/// `lambda^(x)n(sigma) = prod_{x in V_n} lambda(sigma(x)) / Z_n`.
#[derive(Debug, Clone)]
pub struct ProductMeasure {
    table: Vec<PadicNumber>,
}

impl ProductMeasure {
    pub fn new(w: &Weight, measure: &FiniteVolumeMeasure) -> Result<Self> {
        let inv = measure.partition.inverse()?;
        let ctx = w.context();
        let lambdas: Vec<_> = (0..measure.alphabet).map(|i| w.value(i)).collect();
        let table = measure
            .iter()
            .map(|(sigma, _)| &ctx.product(sigma.states.iter().map(|&s| &lambdas[s as usize])) * &inv)
            .collect();
        Ok(Self { table })
    }

    pub fn table(&self) -> &[PadicNumber] {
        &self.table
    }
}

#[derive(Debug, Clone)]
pub struct LimitReport {
    pub depth: usize,
    pub configurations: usize,
    /// `|A_n|`.
    pub members: usize,
    /// `max_{sigma in A_n} |mu(sigma)/lambda^(x)n(sigma) - 1|_p`, certified.
    pub max_deviation: Norm,
    pub bound: Norm,
}

impl LimitReport {
    pub fn vacuous(&self) -> bool {
        self.members == 0
    }

    pub fn holds(&self) -> bool {
        self.max_deviation <= self.bound
    }
}

/// Classify `sigma in A_n` by `v_p(E(sigma)) >= n` and compare `mu` with the
/// product measure there.
pub fn limit_check(model: &SolvedModel, n: usize, opts: MeasureOptions) -> Result<LimitReport> {
    let measure = model.measure(n, opts)?;
    let product = ProductMeasure::new(&model.weight, &measure)?;
    let one = model.params.context().one();
    let leaves = measure.tree.level(n);
    let q = measure.alphabet;
    let mut members = 0;
    let mut worst = Norm::Zero;
    for ((sigma, mu), prod) in measure.iter().zip(&product.table) {
        let mono = monochromatic_edges(&measure.tree, &sigma.states);
        let e = exponent(&model.params, &model.log_field, mono, &counts(&sigma.states[leaves.clone()], q));
        if !e.is_within(n as i64) {
            continue;
        }
        members += 1;
        let ratio = mu.checked_div(prod)?;
        worst = worst.max((&ratio - &one).norm_bound());
    }
    Ok(LimitReport {
        depth: n,
        configurations: measure.len(),
        members,
        max_deviation: worst,
        bound: Norm::Pow(n as i64),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::PadicContext;
    use crate::weight::{AffineValuation, WeightSpec};

    fn model(p: u64, k: usize, j: i64, q: usize) -> SolvedModel {
        let ctx = PadicContext::new(p, 32).unwrap();
        let params = ModelParams::new(ctx, k, ctx.integer(j)).unwrap();
        let w = Weight::from_spec(&WeightSpec::PowerField, &params).unwrap();
        SolvedModel::new(&params, &w, q).unwrap()
    }

    #[test]
    fn hamiltonian_examples() {
        let ctx = PadicContext::new(5, 16).unwrap();
        let j = ctx.integer(5);
        let tree = CayleyTree::new(2, 1).unwrap();
        let couplings = EdgeCouplings::homogeneous(&tree, &j).unwrap();
        let same = Configuration::new(&tree, vec![1, 1, 1, 1]).unwrap();
        assert_eq!(hamiltonian(&tree, &same, &couplings), &j * &ctx.integer(3));
        let apart = Configuration::new(&tree, vec![0, 1, 2, 1]).unwrap();
        assert!(hamiltonian(&tree, &apart, &couplings).is_zero());
    }

    #[test]
    fn hamiltonian_matches_edge_scan() {
        let ctx = PadicContext::new(3, 16).unwrap();
        let tree = CayleyTree::new(2, 2).unwrap();
        let couplings = EdgeCouplings::from_fn(&tree, |x, y| ctx.integer(3 * (1 + x as i64 + 2 * y as i64))).unwrap();
        for c in (0..3u64.pow(10)).step_by(97) {
            let sigma = Configuration::from_index(c, 10, 3);
            let mut scan = ctx.zero();
            for (x, y) in tree.edges(2).unwrap() {
                if sigma.state(x) == sigma.state(y) {
                    scan = &scan + couplings.coupling(y);
                }
            }
            assert_eq!(hamiltonian(&tree, &sigma, &couplings), scan);
        }
    }

    #[test]
    fn configuration_index_round_trip() {
        for c in [0u64, 1, 17, 80] {
            let s = Configuration::from_index(c, 4, 3);
            assert_eq!(s.index(3), c);
        }
        assert_eq!(Configuration::from_index(5, 4, 3).to_string(), "0.0.1.2");
        let tree = CayleyTree::new(2, 2).unwrap();
        let s = Configuration::from_index(12345, 10, 3);
        let inner = s.restrict(&tree, 1);
        assert_eq!(inner.concat(&s.states()[4..]), s);
        assert_eq!(inner.index(3), 12345 / 3u64.pow(6));
    }

    #[test]
    fn single_surviving_configuration() {
        let ctx = PadicContext::new(5, 16).unwrap();
        let params = ModelParams::new(ctx, 2, ctx.integer(5)).unwrap();
        let w = Weight::new(ctx, vec![ctx.one(), ctx.zero()], AffineValuation::new(0, 40)).unwrap();
        let m = build_measure(&params, &w, &LogField::zero(ctx), 1, 2, MeasureOptions::default()).unwrap();
        assert_eq!(m.len(), 16);
        assert!(m.table()[0].eq_at_precision(&ctx.one(), 16));
        assert!(m.table()[1..].iter().all(PadicNumber::is_zero));
    }

    #[test]
    fn normalization_and_unit_partition() {
        let m = model(5, 2, 5, 3);
        for n in 1..=2 {
            let mu = m.measure(n, MeasureOptions::default()).unwrap();
            let ctx = mu.partition().context();
            assert!(mu.total().eq_at_precision(&ctx.one(), 28));
            assert_eq!(mu.partition().norm(), Norm::ONE);
        }
    }

    #[test]
    fn parallel_build_is_identical() {
        let m = model(5, 2, 5, 3);
        let a = m.measure(2, MeasureOptions::default()).unwrap();
        let b = m
            .measure(2, MeasureOptions { parallel: true, ..Default::default() })
            .unwrap();
        assert_eq!(a.table(), b.table());
        assert_eq!(a.partition(), b.partition());
    }

    #[test]
    fn budget_gate() {
        let ctx = PadicContext::new(5, 16).unwrap();
        let params = ModelParams::new(ctx, 3, ctx.integer(5)).unwrap();
        let w = Weight::from_spec(&WeightSpec::PowerField, &params).unwrap();
        let err = build_measure(&params, &w, &LogField::zero(ctx), 2, 5, MeasureOptions::default()).unwrap_err();
        assert_eq!(err, Error::StateSpaceTooLarge("5^17".into(), DEFAULT_BUDGET));
        assert_eq!(configuration_count(2, 2, 3), Some(59049));
    }

    #[test]
    fn compatibility_at_solved_field() {
        let m = model(5, 2, 5, 3);
        let r = compatibility_check(&m.params, &m.weight, &m.log_field, 2, 3, MeasureOptions::default()).unwrap();
        assert_eq!(r.identities, 81);
        assert!(r.residual <= Norm::Pow(28), "{r:?}");
        let ctx = m.params.context();
        let bad = m.log_field.with_value(1, &m.log_field.value(1) + &ctx.integer(5));
        let r = compatibility_check(&m.params, &m.weight, &bad, 2, 3, MeasureOptions::default()).unwrap();
        assert!(r.residual >= Norm::Pow(2), "{r:?}");
        assert_eq!(
            compatibility_check(&m.params, &m.weight, &m.log_field, 1, 3, MeasureOptions::default()).unwrap_err(),
            Error::CompatibilityDepth(1)
        );
    }

    #[test]
    fn compatibility_single_state() {
        let m = model(3, 2, 3, 1);
        let r = compatibility_check(&m.params, &m.weight, &m.log_field, 2, 1, MeasureOptions::default()).unwrap();
        assert!(r.residual <= Norm::Pow(32));
    }

    #[test]
    fn partition_recursion_matches_brute_force() {
        for (p, k) in [(3u64, 2usize), (5, 2), (3, 3)] {
            let m = model(p, k, p as i64, 2);
            for n in 1..=2 {
                let mu = m.measure(n, MeasureOptions::default()).unwrap();
                let rec = recursive_partition(&m.field, &m.weight, &m.params, n).unwrap();
                assert!(mu.partition().eq_at_precision(&rec, 28), "p={p} k={k} n={n}");
                let closed = closed_form_partition(&m.field, &m.params, n).unwrap();
                assert_eq!(closed.value.norm(), Norm::ONE);
            }
        }
    }

    #[test]
    fn closed_form_exponent() {
        let m = model(5, 2, 5, 3);
        let c1 = closed_form_partition(&m.field, &m.params, 1).unwrap();
        assert_eq!(c1.exponent, 1);
        assert_eq!(c1.value, c1.a);
        assert_eq!(closed_form_partition(&m.field, &m.params, 3).unwrap().exponent, 10);
    }

    #[test]
    fn boundedness_and_exponent_identity() {
        for k in 2..=5 {
            for n in 1..=10 {
                assert_eq!(boundary_exponent(k, n), 2);
            }
        }
        let m = model(5, 2, 5, 3);
        let mu = m.measure(2, MeasureOptions::default()).unwrap();
        let r = boundedness_check(&mu, &m.weight);
        assert!(r.bounded);
        assert_eq!(r.bound, Norm::ONE);
        let point = model(5, 2, 5, 1);
        let mu = point.measure(1, MeasureOptions::default()).unwrap();
        assert_eq!(boundedness_check(&mu, &point.weight).max_norm, Norm::ONE);
    }

    #[test]
    fn continuity_identical_and_perturbed() {
        let ctx = PadicContext::new(5, 32).unwrap();
        let params = ModelParams::new(ctx, 2, ctx.integer(5)).unwrap();
        let w = Weight::from_spec(&WeightSpec::PowerField, &params).unwrap();
        let same = continuity_check(&w, &w, &params, 1, 3, MeasureOptions::default()).unwrap();
        assert_eq!(same.weight_distance, Norm::Zero);
        assert_eq!(same.measure_distance, Norm::Zero);
        let kappa = w.with_value(1, &w.value(1) + &ctx.integer(2 * 125)).unwrap();
        let r = continuity_check(&w, &kappa, &params, 1, 3, MeasureOptions::default()).unwrap();
        assert_eq!(r.weight_distance, Norm::Pow(3));
        assert!(r.field_within && r.measures_within, "{r:?}");
    }

    #[test]
    fn limit_with_small_coupling() {
        for n in 1..=2 {
            let m = model(5, 2, 5i64.pow(n as u32), 3);
            let r = limit_check(&m, n, MeasureOptions::default()).unwrap();
            assert_eq!(r.members, r.configurations);
            assert!(r.holds(), "{r:?}");
        }
    }

    #[test]
    fn limit_membership_can_be_partial() {
        let m = model(5, 2, 5, 3);
        let r = limit_check(&m, 2, MeasureOptions::default()).unwrap();
        assert!(r.members < r.configurations);
        assert!(r.holds());
    }
}
