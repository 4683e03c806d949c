//! Run configuration: defaults, then the TOML file, then command-line flags
//! (which clap also fills from `PADIC_POTTS_*` environment variables).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use padic_potts::verify::{Suite, VerifyConfig};
use padic_potts::weight::AffineValuation;
use padic_potts::WeightSpec;
use serde::Deserialize;

use crate::ConfigError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cutoff {
    Auto,
    Fixed(usize),
}

impl std::str::FromStr for Cutoff {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "auto" => Ok(Cutoff::Auto),
            n => n
                .parse()
                .map(Cutoff::Fixed)
                .map_err(|_| format!("cutoff must be a positive integer or `auto`, got `{n}`")),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum CutoffValue {
    Number(usize),
    Text(String),
}

impl CutoffValue {
    fn resolve(&self) -> Result<Cutoff, ConfigError> {
        match self {
            CutoffValue::Number(n) => Ok(Cutoff::Fixed(*n)),
            CutoffValue::Text(s) => s.parse().map_err(ConfigError),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Literal {
    Int(i64),
    Text(String),
}

impl Literal {
    fn text(&self) -> String {
        match self {
            Literal::Int(n) => n.to_string(),
            Literal::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightTable {
    family: String,
    ratio: Option<Literal>,
    values: Option<Vec<Literal>>,
    tail_valuation: Option<String>,
}

impl WeightTable {
    fn spec(&self) -> Result<WeightSpec, ConfigError> {
        let text = match self.family.as_str() {
            "geometric" => {
                let r = self.ratio.as_ref().ok_or_else(|| ConfigError("geometric weight needs `ratio`".into()))?;
                format!("geometric:{}", r.text())
            }
            "explicit" => {
                let v = self.values.as_ref().ok_or_else(|| ConfigError("explicit weight needs `values`".into()))?;
                let tail = self
                    .tail_valuation
                    .as_deref()
                    .ok_or_else(|| ConfigError("explicit weight needs `tail_valuation`".into()))?;
                tail.parse::<AffineValuation>().map_err(|e| ConfigError(e.to_string()))?;
                let list: Vec<_> = v.iter().map(Literal::text).collect();
                format!("explicit:{};tail={tail}", list.join(","))
            }
            other => other.to_string(),
        };
        text.parse().map_err(|e: padic_potts::Error| ConfigError(e.to_string()))
    }
}

/// Keys allowed both at the top level and inside `[suites.<name>]`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Section {
    prime: Option<u64>,
    primes: Option<Vec<u64>>,
    order: Option<usize>,
    coupling: Option<Literal>,
    precision: Option<u32>,
    depth: Option<usize>,
    cutoff: Option<CutoffValue>,
    cases: Option<usize>,
    pairs: Option<usize>,
    perturb: Option<bool>,
    parallel: Option<bool>,
    seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    #[serde(flatten)]
    top: Section,
    suite: Option<String>,
    out: Option<PathBuf>,
    weight: Option<WeightTable>,
    #[serde(default)]
    suites: BTreeMap<String, Section>,
}

/// Values given on the command line (or through the environment).
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub prime: Option<u64>,
    pub order: Option<usize>,
    pub coupling: Option<String>,
    pub weight: Option<String>,
    pub precision: Option<u32>,
    pub depth: Option<usize>,
    pub cutoff: Option<Cutoff>,
    pub suite: Option<String>,
    pub out: Option<PathBuf>,
    pub parallel: bool,
    pub perturb: bool,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub prime: u64,
    pub primes: Option<Vec<u64>>,
    pub order: usize,
    pub coupling: Option<String>,
    pub weight: WeightSpec,
    pub precision: u32,
    pub depth: Option<usize>,
    pub cutoff: Cutoff,
    pub cases: Option<usize>,
    pub pairs: Option<usize>,
    pub suite: Suite,
    pub out: Option<PathBuf>,
    pub parallel: bool,
    pub perturb: bool,
    pub seed: Option<u64>,
    suites: BTreeMap<String, Section>,
    prime_from_user: bool,
}

impl RunConfig {
    pub fn load(path: Option<&Path>, o: Overrides) -> Result<Self, ConfigError> {
        let file = match path {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| ConfigError(format!("{}: {e}", p.display())))?;
                toml::from_str::<FileConfig>(&text).map_err(|e| ConfigError(format!("{}: {e}", p.display())))?
            }
            None => FileConfig::default(),
        };
        for name in file.suites.keys() {
            name.parse::<Suite>().map_err(|e| ConfigError(e.to_string()))?;
        }
        let top = &file.top;
        let weight = match (&o.weight, &file.weight) {
            (Some(s), _) => s.parse().map_err(|e: padic_potts::Error| ConfigError(e.to_string()))?,
            (None, Some(t)) => t.spec()?,
            (None, None) => WeightSpec::PowerField,
        };
        let suite = o
            .suite
            .as_deref()
            .or(file.suite.as_deref())
            .unwrap_or("all")
            .parse()
            .map_err(|e: padic_potts::Error| ConfigError(e.to_string()))?;
        let cutoff = match (o.cutoff, &top.cutoff) {
            (Some(c), _) => c,
            (None, Some(c)) => c.resolve()?,
            (None, None) => Cutoff::Fixed(3),
        };
        if cutoff == Cutoff::Fixed(0) {
            return Err(ConfigError("cutoff must be at least 1".into()));
        }
        Ok(Self {
            prime_from_user: o.prime.is_some() || top.prime.is_some(),
            prime: o.prime.or(top.prime).unwrap_or(5),
            primes: top.primes.clone(),
            order: o.order.or(top.order).unwrap_or(2),
            coupling: o.coupling.or_else(|| top.coupling.as_ref().map(Literal::text)),
            weight,
            precision: o.precision.or(top.precision).unwrap_or(32),
            depth: o.depth.or(top.depth),
            cutoff,
            cases: top.cases,
            pairs: top.pairs,
            suite,
            out: o.out.or(file.out),
            parallel: o.parallel || top.parallel.unwrap_or(false),
            perturb: o.perturb || top.perturb.unwrap_or(false),
            seed: o.seed.or(top.seed),
            suites: file.suites,
        })
    }

    /// The verification settings for one suite: file section values apply
    /// unless the same knob was set on the command line.
    pub fn verify_config(&self, suite: Suite, o: &Overrides) -> Result<VerifyConfig, ConfigError> {
        let mut v = VerifyConfig {
            prime: self.prime,
            order: self.order,
            coupling: self.coupling.clone(),
            weight: self.weight.clone(),
            precision: self.precision,
            parallel: self.parallel,
            perturb: self.perturb,
            cutoff: match self.cutoff {
                Cutoff::Auto => None,
                Cutoff::Fixed(q) => Some(q),
            },
            ..VerifyConfig::default()
        };
        if let Some(p) = &self.primes {
            v.sweep_primes = p.clone();
        } else if self.prime_from_user {
            v.sweep_primes = vec![self.prime];
        }
        if let Some(d) = self.depth {
            v.depth = d;
        }
        if let Some(c) = self.cases {
            v.cases = c;
        }
        if let Some(p) = self.pairs {
            v.pairs = p;
            v.cascade_pairs = p;
        }
        if let Some(s) = self.seed {
            v.seed = s;
        }
        if suite == Suite::Cascade {
            if let Some(d) = o.depth {
                v.cascade_depth = d;
            }
        }
        if let Some(sec) = self.suites.get(suite.name()) {
            apply_section(&mut v, sec, suite, o)?;
        }
        Ok(v)
    }
}

fn apply_section(v: &mut VerifyConfig, sec: &Section, suite: Suite, o: &Overrides) -> Result<(), ConfigError> {
    if o.prime.is_none() {
        if let Some(p) = sec.prime {
            v.prime = p;
            v.sweep_primes = vec![p];
        }
        if let Some(p) = &sec.primes {
            v.sweep_primes = p.clone();
        }
    }
    if o.order.is_none() {
        if let Some(k) = sec.order {
            v.order = k;
        }
    }
    if o.coupling.is_none() {
        if let Some(j) = &sec.coupling {
            v.coupling = Some(j.text());
        }
    }
    if o.precision.is_none() {
        if let Some(n) = sec.precision {
            v.precision = n;
        }
    }
    if o.depth.is_none() {
        if let Some(d) = sec.depth {
            if suite == Suite::Cascade {
                v.cascade_depth = d;
            } else {
                v.depth = d;
            }
        }
    }
    if o.cutoff.is_none() {
        if let Some(c) = &sec.cutoff {
            v.cutoff = match c.resolve()? {
                Cutoff::Auto => None,
                Cutoff::Fixed(q) => Some(q),
            };
        }
    }
    if let Some(c) = sec.cases {
        v.cases = c;
    }
    if let Some(p) = sec.pairs {
        v.pairs = p;
        v.cascade_pairs = p;
    }
    if !o.perturb {
        if let Some(b) = sec.perturb {
            v.perturb = b;
        }
    }
    if !o.parallel {
        if let Some(b) = sec.parallel {
            v.parallel = b;
        }
    }
    if o.seed.is_none() {
        if let Some(s) = sec.seed {
            v.seed = s;
        }
    }
    Ok(())
}
