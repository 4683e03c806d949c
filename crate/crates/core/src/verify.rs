//! Verification suites. Each suite runs a family of exact checks and returns
//! one [`CheckRecord`] per check.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gibbs::{
    boundary_exponent, boundedness_check, closed_form_partition, compatibility_check, continuity_check, limit_check,
    recursive_partition, MeasureOptions, SolvedModel, DEFAULT_BUDGET,
};
use crate::padic::{Norm, PadicContext, PadicNumber};
use crate::recursion::{
    fixed_point_solve, global_map, iteration_bound, local_map_with_sum, uniqueness_cascade, EdgeCouplings, ModelParams,
};
use crate::sequence::C0Vector;
use crate::tree::CayleyTree;
use crate::weight::{Weight, WeightSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    ExpLog,
    Contraction,
    Example,
    Compatibility,
    Partition,
    Boundedness,
    Continuity,
    Limit,
    Cascade,
    All,
}

impl Suite {
    pub const EACH: [Suite; 9] = [
        Suite::ExpLog,
        Suite::Contraction,
        Suite::Example,
        Suite::Compatibility,
        Suite::Partition,
        Suite::Boundedness,
        Suite::Continuity,
        Suite::Limit,
        Suite::Cascade,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::ExpLog => "exp-log",
            Suite::Contraction => "contraction",
            Suite::Example => "example",
            Suite::Compatibility => "compatibility",
            Suite::Partition => "partition",
            Suite::Boundedness => "boundedness",
            Suite::Continuity => "continuity",
            Suite::Limit => "limit",
            Suite::Cascade => "cascade",
            Suite::All => "all",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::EACH
            .into_iter()
            .chain([Suite::All])
            .find(|suite| suite.name() == s)
            .ok_or_else(|| Error::UnknownSuite(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Parameters {
    pub p: u64,
    pub k: usize,
    #[serde(rename = "J")]
    pub coupling: String,
    pub n: Option<usize>,
    pub q: Option<usize>,
    #[serde(rename = "N")]
    pub precision: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub check_name: String,
    pub suite: String,
    pub anchor: String,
    pub parameters: Parameters,
    pub residual_norm: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    pub wall_time_ms: f64,
}

impl fmt::Display for CheckRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = &self.parameters;
        write!(
            f,
            "[{}] {} ({}; p={} k={} J={}",
            if self.pass { "PASS" } else { "FAIL" },
            self.check_name,
            self.anchor,
            p.p,
            p.k,
            p.coupling
        )?;
        if let Some(n) = p.n {
            write!(f, " n={n}")?;
        }
        if let Some(q) = p.q {
            write!(f, " q={q}")?;
        }
        write!(f, " N={}) residual {}", p.precision, self.residual_norm)?;
        if let Some(d) = &self.detail {
            write!(f, " | {d}")?;
        }
        Ok(())
    }
}

/// Knobs shared by the suites. Suites that sweep primes use `sweep_primes`;
/// the others use `prime`.
#[derive(Debug, Clone)]
pub struct VerifyConfig {
    pub prime: u64,
    pub sweep_primes: Vec<u64>,
    pub order: usize,
    /// Rational or p-adic literal; `None` means `J = p`.
    pub coupling: Option<String>,
    pub weight: WeightSpec,
    pub precision: u32,
    pub depth: usize,
    pub cutoff: Option<usize>,
    pub guard: u32,
    pub cases: usize,
    pub pairs: usize,
    pub cascade_depth: usize,
    pub cascade_pairs: usize,
    pub perturb: bool,
    pub parallel: bool,
    pub budget: u64,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            prime: 5,
            sweep_primes: vec![3, 5, 7],
            order: 2,
            coupling: None,
            weight: WeightSpec::PowerField,
            precision: 32,
            depth: 2,
            cutoff: Some(3),
            guard: 4,
            cases: 1000,
            pairs: 500,
            cascade_depth: 6,
            cascade_pairs: 50,
            perturb: false,
            parallel: false,
            budget: DEFAULT_BUDGET,
            seed: 0x5eed,
        }
    }
}

impl VerifyConfig {
    pub fn context(&self, p: u64) -> Result<PadicContext> {
        PadicContext::new(p, self.precision)
    }

    fn coupling_at(&self, ctx: PadicContext) -> Result<PadicNumber> {
        match &self.coupling {
            Some(j) => ctx.parse(j),
            None => Ok(ctx.integer(ctx.prime() as i64)),
        }
    }

    pub fn params(&self, p: u64) -> Result<ModelParams> {
        let ctx = self.context(p)?;
        ModelParams::new(ctx, self.order, self.coupling_at(ctx)?)
    }

    fn options(&self) -> MeasureOptions {
        MeasureOptions {
            budget: self.budget,
            parallel: self.parallel,
        }
    }

    /// The alphabet cutoff: explicit, or the first `q` past which the weight
    /// is below working precision.
    pub fn resolve_cutoff(&self, w: &Weight) -> usize {
        self.cutoff.unwrap_or_else(|| w.working_cutoff())
    }

    fn check_precision(&self) -> i64 {
        self.precision as i64 - self.guard as i64
    }
}

struct Recorder<'a> {
    cfg: &'a VerifyConfig,
    suite: Suite,
    records: Vec<CheckRecord>,
}

struct Check {
    name: String,
    anchor: &'static str,
    params: Parameters,
    residual: String,
    pass: bool,
    detail: Option<String>,
}

impl Recorder<'_> {
    fn params(&self, p: u64, k: usize, j: &PadicNumber, n: Option<usize>, q: Option<usize>) -> Parameters {
        Parameters {
            p,
            k,
            coupling: display_literal(j),
            n,
            q,
            precision: self.cfg.precision,
        }
    }

    fn run(&mut self, f: impl FnOnce() -> Result<Check>) -> Result<()> {
        let start = Instant::now();
        let c = f()?;
        self.records.push(CheckRecord {
            check_name: c.name,
            suite: self.suite.name().to_string(),
            anchor: c.anchor.to_string(),
            parameters: c.params,
            residual_norm: c.residual,
            pass: c.pass,
            detail: c.detail,
            wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
        });
        Ok(())
    }
}

/// Short form of a p-adic literal for reports: the rational it reduces to.
fn display_literal(x: &PadicNumber) -> String {
    x.to_ratio().to_string()
}

fn show(norm: Norm, p: u64) -> String {
    norm.display(p)
}

/// Run one suite, or every suite for [`Suite::All`].
pub fn run_suite(suite: Suite, cfg: &VerifyConfig) -> Result<Vec<CheckRecord>> {
    if suite == Suite::All {
        let mut out = Vec::new();
        for s in Suite::EACH {
            out.extend(run_suite(s, cfg)?);
        }
        return Ok(out);
    }
    let mut rec = Recorder {
        cfg,
        suite,
        records: Vec::new(),
    };
    match suite {
        Suite::ExpLog => exp_log(&mut rec)?,
        Suite::Contraction => contraction(&mut rec)?,
        Suite::Example => example(&mut rec)?,
        Suite::Compatibility => compatibility(&mut rec)?,
        Suite::Partition => partition(&mut rec)?,
        Suite::Boundedness => boundedness(&mut rec)?,
        Suite::Continuity => continuity(&mut rec)?,
        Suite::Limit => limit(&mut rec)?,
        Suite::Cascade => cascade(&mut rec)?,
        Suite::All => unreachable!(),
    }
    Ok(rec.records)
}

const EXP_LOG: &str = "exp/log lemma on the ball |x| < p^(-1/(p-1))";

fn exp_log(rec: &mut Recorder) -> Result<()> {
    let cfg = rec.cfg;
    for &p in &cfg.sweep_primes {
        let ctx = cfg.context(p)?;
        let m = cfg.check_precision();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ p);
        let lo = ctx.exp_domain_valuation();
        let xs: Vec<_> = (0..cfg.cases)
            .map(|_| ctx.random_in_ball(lo, lo + 10, &mut rng))
            .collect();
        let one = ctx.one();
        let params = Parameters {
            p,
            k: cfg.order,
            coupling: "-".into(),
            n: None,
            q: None,
            precision: cfg.precision,
        };

        type Identity = fn(&PadicNumber, &PadicNumber) -> Result<(bool, Norm)>;
        let identities: [(&str, Identity); 5] = [
            ("|exp(x)| = 1", |x, _| {
                let e = x.exp()?;
                Ok((e.norm() == Norm::ONE, Norm::Zero))
            }),
            ("|exp(x) - 1| = |x|", |x, one| {
                let e = x.exp()?;
                Ok(((&e - one).norm() == x.norm(), Norm::Zero))
            }),
            ("|log(1 + x)| = |x|", |x, one| {
                let l = (one + x).log()?;
                Ok((l.norm() == x.norm(), Norm::Zero))
            }),
            ("log(exp(x)) = x", |x, _| {
                let d = (&x.exp()?.log()? - x).norm_bound();
                Ok((true, d))
            }),
            ("exp(log(1 + x)) = 1 + x", |x, one| {
                let y = one + x;
                let d = (&y.log()?.exp()? - &y).norm_bound();
                Ok((true, d))
            }),
        ];
        for (name, check) in identities {
            rec.run(|| {
                let mut ok = true;
                let mut worst = Norm::Zero;
                for x in &xs {
                    let (holds, residual) = check(x, &one)?;
                    ok &= holds;
                    worst = worst.max(residual);
                }
                Ok(Check {
                    name: format!("exp-log: {name}"),
                    anchor: EXP_LOG,
                    params: params.clone(),
                    residual: show(worst, p),
                    pass: ok && worst <= Norm::Pow(m),
                    detail: Some(format!("{} random x, checked at p^-{m}", xs.len())),
                })
            })?;
        }
    }
    Ok(())
}

const CONTRACTION: &str = "local-map contraction lemma";

fn random_ball_vector(ctx: PadicContext, rng: &mut impl Rng) -> C0Vector {
    let len = rng.gen_range(1..=12);
    let entries: Vec<_> = (1..=len).map(|i| (i, ctx.random_in_ball(1, 8, rng))).collect();
    C0Vector::new(ctx, entries, ctx.precision() as i64 + 8).expect("entries dominate the tail")
}

fn contraction(rec: &mut Recorder) -> Result<()> {
    let cfg = rec.cfg;
    let params = cfg.params(cfg.prime)?;
    let ctx = params.context();
    let p = ctx.prime();
    let c = params.contraction();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let pairs: Vec<_> = (0..cfg.pairs)
        .map(|_| {
            let x = random_ball_vector(ctx, &mut rng);
            let y = random_ball_vector(ctx, &mut rng);
            let i = rng.gen_range(1..=12);
            (x, y, i)
        })
        .collect();
    let pp = rec.params(p, cfg.order, params.coupling(), None, None);

    rec.run(|| {
        // largest observed |F_i(x) - F_i(y)| / (|theta - 1| ||x - y||)
        let mut worst = Norm::Zero;
        let mut ok = true;
        for (x, y, i) in &pairs {
            let sx = x.tail_sum(ctx.precision() as i64)?;
            let sy = y.tail_sum(ctx.precision() as i64)?;
            let fx = local_map_with_sum(&x.value(*i), &sx, params.theta())?;
            let fy = local_map_with_sum(&y.value(*i), &sy, params.theta())?;
            let lhs = (&fx - &fy).norm_bound();
            let rhs = c * x.distance(y)?;
            ok &= lhs <= rhs;
            if let Some(r) = lhs.ratio(rhs) {
                worst = worst.max(r);
            }
        }
        Ok(Check {
            name: "contraction: |F_i(x) - F_i(y)| <= |theta - 1| ||x - y||".into(),
            anchor: CONTRACTION,
            params: pp.clone(),
            residual: show(worst, p),
            pass: ok,
            detail: Some(format!("{} random pairs; residual is the largest lhs/rhs ratio", pairs.len())),
        })
    })?;

    rec.run(|| {
        let mut ok = true;
        for (x, _, i) in &pairs {
            let sx = x.tail_sum(ctx.precision() as i64)?;
            let fx = local_map_with_sum(&x.value(*i), &sx, params.theta())?;
            ok &= (&fx - &ctx.one()).norm() == c;
        }
        Ok(Check {
            name: "contraction: |F_i(x) - 1| = |theta - 1|".into(),
            anchor: CONTRACTION,
            params: pp.clone(),
            residual: show(c, p),
            pass: ok,
            detail: Some(format!("{} random x", pairs.len())),
        })
    })?;

    rec.run(|| {
        let w = Weight::from_spec(&cfg.weight, &params)?;
        let mut ok = true;
        for (x, y, _) in pairs.iter().take(100) {
            let gx = global_map(x, &w, &params)?;
            let gy = global_map(y, &w, &params)?;
            ok &= gx.in_unit_ball() && gy.in_unit_ball();
            ok &= gx.sub(&gy)?.sup_norm_bound() <= c * x.distance(y)?;
        }
        Ok(Check {
            name: "contraction: global map keeps B and contracts by |theta - 1|".into(),
            anchor: CONTRACTION,
            params: pp.clone(),
            residual: show(c, p),
            pass: ok,
            detail: Some(format!("weight {}", cfg.weight.family_name())),
        })
    })
}

const EXAMPLE: &str = "worked example h_i = p^i";

fn example(rec: &mut Recorder) -> Result<()> {
    let cfg = rec.cfg;
    for &p in &cfg.sweep_primes {
        for k in [2usize, 3] {
            let ctx = cfg.context(p)?;
            let params = ModelParams::new(ctx, k, ctx.integer(p as i64))?;
            let pp = rec.params(p, k, params.coupling(), None, None);
            rec.run(|| {
                let w = Weight::from_spec(&WeightSpec::PowerField, &params)?;
                let fp = fixed_point_solve(&w, &params, cfg.check_precision())?;
                let worst = (1..w.working_cutoff())
                    .map(|i| (&fp.field.value(i) - &ctx.p_power(i as i64)).norm_bound())
                    .max()
                    .unwrap_or(Norm::Zero);
                Ok(Check {
                    name: "example: solver returns h_i = p^i".into(),
                    anchor: EXAMPLE,
                    params: pp,
                    residual: show(worst, p),
                    pass: worst <= Norm::Pow(20) && fp.iterations <= 40,
                    detail: Some(format!("{} iterations, {} coordinates", fp.iterations, w.working_cutoff() - 1)),
                })
            })?;
        }
    }

    let params = cfg.params(cfg.prime)?;
    let p = cfg.prime;
    let pp = rec.params(p, cfg.order, params.coupling(), None, None);
    rec.run(|| {
        let w = Weight::from_spec(&cfg.weight, &params)?;
        let target = cfg.precision as i64;
        let fp = fixed_point_solve(&w, &params, target)?;
        let c = params.contraction();
        let ratios: Vec<Norm> = fp
            .steps
            .windows(2)
            .filter(|s| !s[0].is_zero() && !s[1].is_zero())
            .filter_map(|s| s[1].ratio(s[0]))
            .collect();
        let within = ratios.iter().all(|&r| r <= c);
        let exact = ratios.iter().all(|&r| r == c);
        let bound = iteration_bound(&params, target);
        Ok(Check {
            name: "example: fixed-point steps shrink by at least |theta - 1|".into(),
            anchor: CONTRACTION,
            params: pp,
            residual: show(ratios.iter().copied().max().unwrap_or(Norm::Zero), p),
            pass: within && fp.iterations <= bound,
            detail: Some(format!(
                "weight {}, {} iterations (bound {bound}); ratio exactly |theta - 1| at every step: {}",
                cfg.weight.family_name(),
                fp.iterations,
                if exact { "yes" } else { "no" }
            )),
        })
    })
}

const COMPATIBILITY: &str = "compatibility theorem";

fn compatibility(rec: &mut Recorder) -> Result<()> {
    let cfg = rec.cfg;
    let params = cfg.params(cfg.prime)?;
    let ctx = params.context();
    let p = ctx.prime();
    let w = Weight::from_spec(&cfg.weight, &params)?;
    let q = cfg.resolve_cutoff(&w);
    let n = cfg.depth;
    let model = SolvedModel::new(&params, &w, q)?;
    let perturbed = model
        .log_field
        .with_value(1, &model.log_field.value(1) + &ctx.integer(p as i64));
    let pp = rec.params(p, cfg.order, params.coupling(), Some(n), Some(q));
    let tol = Norm::Pow(cfg.check_precision());

    rec.run(|| {
        let h = if cfg.perturb { &perturbed } else { &model.log_field };
        let r = compatibility_check(&params, &model.weight, h, n, q, cfg.options())?;
        Ok(Check {
            name: format!(
                "compatibility: marginal of mu_n equals mu_(n-1){}",
                if cfg.perturb { " (perturbed field)" } else { "" }
            ),
            anchor: COMPATIBILITY,
            params: pp.clone(),
            residual: show(r.residual, p),
            pass: r.residual <= tol,
            detail: Some(format!(
                "{} identities, tolerance {}, truncation bound {}",
                r.identities,
                show(tol, p),
                show(r.truncation_bound, p)
            )),
        })
    })?;

    if !cfg.perturb {
        rec.run(|| {
            let r = compatibility_check(&params, &model.weight, &perturbed, n, q, cfg.options())?;
            Ok(Check {
                name: "compatibility: perturbed field breaks the marginals".into(),
                anchor: COMPATIBILITY,
                params: pp.clone(),
                residual: show(r.residual, p),
                pass: r.residual >= Norm::Pow(2),
                detail: Some("h_1 shifted by p; expected residual >= p^-2".into()),
            })
        })?;
    }
    Ok(())
}

const PARTITION: &str = "partition function closed form";
const PARTITION_REC: &str = "partition function recursion";

fn partition(rec: &mut Recorder) -> Result<()> {
    let cfg = rec.cfg;
    let params = cfg.params(cfg.prime)?;
    let p = cfg.prime;
    let w = Weight::from_spec(&cfg.weight, &params)?;
    let q = cfg.resolve_cutoff(&w);
    let model = SolvedModel::new(&params, &w, q)?;
    let m = cfg.check_precision();
    let mut brute = Vec::new();
    for n in 1..=cfg.depth {
        brute.push(model.measure(n, cfg.options())?.partition().clone());
    }
    for (idx, z) in brute.iter().enumerate() {
        let n = idx + 1;
        let pp = rec.params(p, cfg.order, params.coupling(), Some(n), Some(q));
        rec.run(|| {
            let cf = closed_form_partition(&model.field, &params, n)?;
            let d = (z - &cf.value).norm_bound();
            Ok(Check {
                name: "partition: brute-force Z_n = a^|V_(n-1)|".into(),
                anchor: PARTITION,
                params: pp.clone(),
                residual: show(d, p),
                pass: d <= Norm::Pow(m),
                detail: Some(format!("a = (theta + sum h_j)^k, exponent {}", cf.exponent)),
            })
        })?;
        rec.run(|| {
            let r = recursive_partition(&model.field, &model.weight, &params, n)?;
            let d = (z - &r).norm_bound();
            Ok(Check {
                name: "partition: brute-force Z_n = Z_1 a^(|V_(n-1)| - 1)".into(),
                anchor: PARTITION_REC,
                params: pp.clone(),
                residual: show(d, p),
                pass: d <= Norm::Pow(m),
                detail: Some("root has k + 1 successors, so Z_1 is computed directly".into()),
            })
        })?;
        rec.run(|| {
            Ok(Check {
                name: "partition: |Z_n| = 1".into(),
                anchor: PARTITION,
                params: pp.clone(),
                residual: show(z.norm(), p),
                pass: z.norm() == Norm::ONE,
                detail: None,
            })
        })?;
    }
    Ok(())
}

const BOUNDED: &str = "boundedness theorem";

fn boundedness(rec: &mut Recorder) -> Result<()> {
    let cfg = rec.cfg;
    let params = cfg.params(cfg.prime)?;
    let p = cfg.prime;
    let w = Weight::from_spec(&cfg.weight, &params)?;
    let q = cfg.resolve_cutoff(&w);
    let pp = rec.params(p, cfg.order, params.coupling(), Some(cfg.depth), Some(q));
    rec.run(|| {
        let model = SolvedModel::new(&params, &w, q)?;
        let mu = model.measure(cfg.depth, cfg.options())?;
        let r = boundedness_check(&mu, &model.weight);
        Ok(Check {
            name: "boundedness: max |mu(sigma)| <= |lambda(0)|^2".into(),
            anchor: BOUNDED,
            params: pp.clone(),
            residual: show(r.max_norm, p),
            pass: r.bounded,
            detail: Some(format!("{} configurations, bound {}", mu.len(), show(r.bound, p))),
        })
    })?;
    rec.run(|| {
        let mut ok = true;
        for k in 2..=5 {
            for n in 1..=10 {
                ok &= boundary_exponent(k, n) == 2;
            }
        }
        Ok(Check {
            name: "boundedness: |V_n| - k |V_(n-1)| = 2".into(),
            anchor: BOUNDED,
            params: pp.clone(),
            residual: "0".into(),
            pass: ok,
            detail: Some("k in 2..=5, n in 1..=10".into()),
        })
    })
}

const CONTINUITY: &str = "continuity theorem";

fn continuity(rec: &mut Recorder) -> Result<()> {
    let cfg = rec.cfg;
    let params = cfg.params(cfg.prime)?;
    let ctx = params.context();
    let p = cfg.prime;
    let w = Weight::from_spec(&cfg.weight, &params)?;
    let q = cfg.resolve_cutoff(&w);
    let kappa = w.with_value(1, &w.value(1) + &ctx.p_power(3))?;
    let r = continuity_check(&w, &kappa, &params, cfg.depth, q, cfg.options())?;
    let pp = rec.params(p, cfg.order, params.coupling(), Some(cfg.depth), Some(q));
    rec.run(|| {
        Ok(Check {
            name: "continuity: ||h_lambda - h_kappa|| <= ||lambda - kappa||".into(),
            anchor: CONTINUITY,
            params: pp.clone(),
            residual: show(r.field_distance, p),
            pass: r.field_within,
            detail: Some(format!(
                "lambda(1) shifted by p^3; weight distance {}; equality holds: {}",
                show(r.weight_distance, p),
                if r.field_equal { "yes" } else { "no" }
            )),
        })
    })?;
    rec.run(|| {
        Ok(Check {
            name: "continuity: |mu_lambda(sigma) - mu_kappa(sigma)| <= ||lambda - kappa||".into(),
            anchor: CONTINUITY,
            params: pp.clone(),
            residual: show(r.measure_distance, p),
            pass: r.measures_within,
            detail: Some(format!("all configurations at depth 1..={}", r.depth_cap)),
        })
    })
}

const LIMIT: &str = "limit theorem on A_n";

fn limit(rec: &mut Recorder) -> Result<()> {
    let cfg = rec.cfg;
    let p = cfg.prime;
    for n in 1..=cfg.depth {
        let ctx = cfg.context(p)?;
        let params = ModelParams::new(ctx, cfg.order, ctx.p_power(n as i64))?;
        let w = Weight::from_spec(&cfg.weight, &params)?;
        let q = cfg.resolve_cutoff(&w);
        let pp = rec.params(p, cfg.order, params.coupling(), Some(n), Some(q));
        rec.run(|| {
            let model = SolvedModel::new(&params, &w, q)?;
            let r = limit_check(&model, n, cfg.options())?;
            Ok(Check {
                name: "limit: |mu/lambda^(x)n - 1| <= p^-n on A_n".into(),
                anchor: LIMIT,
                params: pp,
                residual: show(r.max_deviation, p),
                pass: r.holds(),
                detail: Some(format!(
                    "|A_n| = {} of {}{}",
                    r.members,
                    r.configurations,
                    if r.vacuous() { " (vacuous)" } else { "" }
                )),
            })
        })?;
    }
    Ok(())
}

const CASCADE: &str = "uniqueness cascade";

fn cascade(rec: &mut Recorder) -> Result<()> {
    let cfg = rec.cfg;
    let params = cfg.params(cfg.prime)?;
    let ctx = params.context();
    let p = cfg.prime;
    let d = cfg.cascade_depth;
    let w = Weight::from_spec(&cfg.weight, &params)?;
    let tree = CayleyTree::new(cfg.order, d)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let leaves = tree.level(d).len();
    let seeds = |rng: &mut ChaCha8Rng| -> Vec<C0Vector> { (0..leaves).map(|_| random_ball_vector(ctx, rng)).collect() };
    let pp = rec.params(p, cfg.order, params.coupling(), Some(d), None);

    let homogeneous = EdgeCouplings::homogeneous(&tree, params.coupling())?;
    let pairs: Vec<_> = (0..cfg.cascade_pairs).map(|_| (seeds(&mut rng), seeds(&mut rng))).collect();
    rec.run(|| {
        let mut worst = Norm::Zero;
        let mut bounds_ok = true;
        let mut uniform = Norm::Zero;
        for (a, b) in &pairs {
            let r = uniqueness_cascade(&tree, a, b, &homogeneous, &w)?;
            worst = worst.max(r.ratio);
            bounds_ok &= r.within_bounds();
            uniform = r.uniform_bound;
        }
        Ok(Check {
            name: "cascade: root difference <= p^-d times boundary difference".into(),
            anchor: CASCADE,
            params: pp.clone(),
            residual: show(worst, p),
            pass: worst <= Norm::Pow(d as i64) && bounds_ok,
            detail: Some(format!(
                "{} seed pairs, depth {d}; uniform bound {}, coarse bound {}",
                pairs.len(),
                show(uniform, p),
                show(Norm::Pow(d as i64), p)
            )),
        })
    })?;

    rec.run(|| {
        let r = uniqueness_cascade(&tree, &pairs[0].0, &pairs[0].0, &homogeneous, &w)?;
        Ok(Check {
            name: "cascade: identical seeds give ratio 0".into(),
            anchor: CASCADE,
            params: pp.clone(),
            residual: show(r.ratio, p),
            pass: r.ratio.is_zero(),
            detail: None,
        })
    })?;

    rec.run(|| {
        let v0 = params.coupling().valuation().unwrap_or(1);
        let mixed = EdgeCouplings::from_fn(&tree, |_, y| {
            let v = v0 + (tree.level_of(y) % 3) as i64;
            &ctx.p_power(v) * &ctx.integer(1 + (y % (p as usize - 1)) as i64)
        })?;
        let mut worst_gap = Norm::Zero;
        let mut ok = true;
        let mut per_level = Norm::Zero;
        for (a, b) in pairs.iter().take(10) {
            let r = uniqueness_cascade(&tree, a, b, &mixed, &w)?;
            ok &= r.within_bounds();
            per_level = r.per_level_bound;
            if let Some(g) = r.ratio.ratio(r.per_level_bound) {
                worst_gap = worst_gap.max(g);
            }
        }
        Ok(Check {
            name: "cascade: mixed couplings contract by the per-level product".into(),
            anchor: CASCADE,
            params: pp.clone(),
            residual: show(worst_gap, p),
            pass: ok,
            detail: Some(format!(
                "per-level bound {}; residual is the largest ratio / bound",
                show(per_level, p)
            )),
        })
    })
}
