//! Disorder-replica experiments and their bookkeeping.
//!
//! Every experiment reads an [`ExperimentConfig`], fans replicas out over a
//! rayon pool with one derived seed per replica, and collects results in
//! replica order, so outputs do not depend on the thread count.

mod clt;
mod decay;
mod output;
mod variance;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::disorder::{sample_weights, DisorderSample, WeightDistribution};
use crate::error::{Error, Result};
use crate::exact::Engine;
use crate::graph::{GraphSpec, SiteIndex, WeightedGraph, UNREACHABLE};
use crate::seed::derive_seed;
use crate::stats::{ks_statistic, mean, standardize, variance, ExpFit};

pub use clt::{run_dimer_clt, run_free_energy_clt, CltRun, CrossCheck};
pub use decay::{
    chatterjee_derivative_locality, correlation_decay_curve, coupling_curve, two_point_decay, CouplingRow, DecayRow,
    DecayTable, LocalityRow, LocalityTable,
};
pub use output::{content_hash, write_csv, write_summary, RunManifest, RunSummary};
pub use variance::{
    dimer_variance_lower_bound_check, truncation_comparison, variance_scan, DimerBoundRow, TruncationRow, VarScanRow,
};

/// Seed-derivation tags. Experiments sharing a tag see the same disorder for
/// the same replica index.
pub const TAG_DISORDER: u64 = 1;
pub const TAG_RESAMPLE: u64 = 2;
pub const TAG_CHAIN: u64 = 3;

/// Settings shared by all experiments. Fields an experiment does not use are
/// ignored by it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(with = "as_text")]
    pub graph: GraphSpec,
    #[serde(with = "as_text")]
    pub edge_law: WeightDistribution,
    #[serde(with = "as_text")]
    pub vertex_law: WeightDistribution,
    pub replicas: usize,
    pub master_seed: u64,
    pub engine: Engine,
    /// Ball radii for decay and locality runs.
    pub radii: Vec<usize>,
    /// Edge distances for the two-point decay run.
    pub distances: Vec<usize>,
    /// Size ladder for scans (strip length, or grid side).
    pub sizes: Vec<usize>,
    /// Truncation exponent: `L = |V|^kappa`.
    pub kappa: f64,
    /// Interpolation parameter of the truncated weights.
    pub truncation_t: f64,
    /// Target edge; defaults to the most central edge.
    pub edge: Option<usize>,
    pub mcmc_sweeps: usize,
    pub mcmc_burn_in: usize,
    /// Lower bound asserted for `Var(F)/|E|` in variance scans.
    pub var_floor: f64,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            graph: GraphSpec::Grid {
                width: 9,
                height: 9,
                periodic: false,
            },
            edge_law: WeightDistribution::Gaussian { mean: 0.0, stddev: 1.0 },
            vertex_law: WeightDistribution::Gaussian { mean: 0.0, stddev: 1.0 },
            replicas: 100,
            master_seed: 0,
            engine: Engine::Recursion,
            radii: vec![1, 2, 3, 4],
            distances: vec![1, 2, 3, 4],
            sizes: Vec::new(),
            kappa: 0.1,
            truncation_t: 0.0,
            edge: None,
            mcmc_sweeps: 2000,
            mcmc_burn_in: 200,
            var_floor: 0.0,
            threads: None,
            out: None,
        }
    }
}

mod as_text {
    use std::fmt::Display;
    use std::str::FromStr;

    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<T: Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(v)
    }

    pub fn deserialize<'de, T, D>(d: D) -> Result<T, D::Error>
    where
        T: FromStr,
        T::Err: Display,
        D: Deserializer<'de>,
    {
        let text = String::deserialize(d)?;
        text.parse().map_err(de::Error::custom)
    }
}

fn parse_list(field: &str, value: &str) -> Result<Vec<usize>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            // ranges like 1..4 are inclusive
            if let Some((a, b)) = t.split_once("..") {
                let a: usize = parse_num(field, a)?;
                let b: usize = parse_num(field, b)?;
                Ok((a..=b).collect::<Vec<_>>())
            } else {
                Ok(vec![parse_num(field, t)?])
            }
        })
        .collect::<Result<Vec<_>>>()
        .map(|v| v.concat())
}

fn parse_num<N: FromStr>(field: &str, value: &str) -> Result<N> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::validation(field, format!("cannot parse {value:?}")))
}

impl ExperimentConfig {
    /// Recognized keys of the `key=value` format.
    pub const KEYS: [&'static str; 18] = [
        "graph",
        "edge_law",
        "vertex_law",
        "replicas",
        "seed",
        "engine",
        "radii",
        "distances",
        "sizes",
        "kappa",
        "truncation_t",
        "edge",
        "sweeps",
        "burn_in",
        "var_floor",
        "threads",
        "out",
        "master_seed",
    ];

    /// Sets one field from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "graph" => self.graph = value.parse()?,
            "edge_law" => self.edge_law = value.parse()?,
            "vertex_law" => self.vertex_law = value.parse()?,
            "replicas" => self.replicas = parse_num(key, value)?,
            "seed" | "master_seed" => self.master_seed = parse_num(key, value)?,
            "engine" => self.engine = value.parse()?,
            "radii" => self.radii = parse_list(key, value)?,
            "distances" => self.distances = parse_list(key, value)?,
            "sizes" => self.sizes = parse_list(key, value)?,
            "kappa" => self.kappa = parse_num(key, value)?,
            "truncation_t" => self.truncation_t = parse_num(key, value)?,
            "edge" => self.edge = Some(parse_num(key, value)?),
            "sweeps" => self.mcmc_sweeps = parse_num(key, value)?,
            "burn_in" => self.mcmc_burn_in = parse_num(key, value)?,
            "var_floor" => self.var_floor = parse_num(key, value)?,
            "threads" => self.threads = Some(parse_num(key, value)?),
            "out" => self.out = Some(PathBuf::from(value)),
            _ => return Err(Error::validation(key, "unknown configuration key")),
        }
        Ok(())
    }

    /// Applies a `key=value` text: one pair per line, `#` starts a comment.
    pub fn apply_kv(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::validation("config", format!("line {}: expected key=value", n + 1)))?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.edge_law.validate()?;
        self.vertex_law.validate()?;
        if self.replicas == 0 {
            return Err(Error::validation("replicas", "must be at least 1"));
        }
        if !(self.kappa > 0.0) {
            return Err(Error::validation("kappa", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.truncation_t) {
            return Err(Error::validation("truncation_t", "must lie in [0, 1]"));
        }
        if self.threads == Some(0) {
            return Err(Error::validation("threads", "must be at least 1"));
        }
        Ok(())
    }

    pub(crate) fn require_radii(&self) -> Result<()> {
        if self.radii.is_empty() {
            return Err(Error::validation("radii", "must not be empty"));
        }
        Ok(())
    }

    pub(crate) fn require_exact(&self, what: &str) -> Result<()> {
        if !self.engine.is_exact() {
            return Err(Error::EngineMismatch {
                engine: self.engine.to_string(),
                what: what.into(),
            });
        }
        Ok(())
    }

    /// Seed of replica `i`'s disorder.
    pub fn replica_seed(&self, i: usize) -> u64 {
        derive_seed(self.master_seed, TAG_DISORDER, i as u64)
    }

    pub fn sample(&self, g: &WeightedGraph, i: usize) -> Result<DisorderSample<f64>> {
        sample_weights(g, self.edge_law, self.vertex_law, self.replica_seed(i))
    }
}

impl fmt::Display for ExperimentConfig {
    /// The `key=value` form accepted by [`ExperimentConfig::apply_kv`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        writeln!(f, "graph={}", self.graph)?;
        writeln!(f, "edge_law={}", self.edge_law)?;
        writeln!(f, "vertex_law={}", self.vertex_law)?;
        writeln!(f, "replicas={}", self.replicas)?;
        writeln!(f, "seed={}", self.master_seed)?;
        writeln!(f, "engine={}", self.engine)?;
        writeln!(f, "radii={}", list(&self.radii))?;
        writeln!(f, "distances={}", list(&self.distances))?;
        writeln!(f, "sizes={}", list(&self.sizes))?;
        writeln!(f, "kappa={}", self.kappa)?;
        writeln!(f, "truncation_t={}", self.truncation_t)?;
        if let Some(e) = self.edge {
            writeln!(f, "edge={e}")?;
        }
        writeln!(f, "sweeps={}", self.mcmc_sweeps)?;
        writeln!(f, "burn_in={}", self.mcmc_burn_in)?;
        writeln!(f, "var_floor={}", self.var_floor)?;
        if let Some(t) = self.threads {
            writeln!(f, "threads={t}")?;
        }
        if let Some(out) = &self.out {
            writeln!(f, "out={}", out.display())?;
        }
        Ok(())
    }
}

/// The graph family of `spec` at size `n`: strip length, grid side, or
/// path/cycle length.
pub fn resize_graph(spec: &GraphSpec, n: usize) -> Result<GraphSpec> {
    Ok(match spec {
        GraphSpec::Strip {
            rung_width,
            periodic_rung,
            ..
        } => GraphSpec::Strip {
            length: n,
            rung_width: *rung_width,
            periodic_rung: *periodic_rung,
        },
        GraphSpec::Grid { periodic, .. } => GraphSpec::Grid {
            width: n,
            height: n,
            periodic: *periodic,
        },
        GraphSpec::Path(_) => GraphSpec::Path(n),
        GraphSpec::Cycle(_) => GraphSpec::Cycle(n),
        GraphSpec::Json(_) => return Err(Error::validation("sizes", "a JSON graph cannot be resized")),
    })
}

/// Edge whose farthest vertex is nearest; ties go to the lowest index.
pub fn central_edge(g: &WeightedGraph) -> Result<usize> {
    if g.edge_count() == 0 {
        return Err(Error::validation("graph", "has no edges"));
    }
    let mut best = (UNREACHABLE, 0);
    for e in 0..g.edge_count() {
        let ecc = (0..g.vertex_count())
            .map(|x| g.site_distance(SiteIndex::Edge(e), SiteIndex::Vertex(x)))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .max()
            .unwrap_or(0);
        if ecc < best.0 {
            best = (ecc, e);
        }
    }
    Ok(best.1)
}

pub(crate) fn target_edge(cfg: &ExperimentConfig, g: &WeightedGraph) -> Result<usize> {
    match cfg.edge {
        Some(e) if e < g.edge_count() => Ok(e),
        Some(e) => Err(Error::validation("edge", format!("e{e} out of range"))),
        None => central_edge(g),
    }
}

/// Runs `f` for replicas `0..n` on `threads` workers (default: all cores),
/// returning results in replica order.
pub fn map_replicas<R, F>(threads: Option<usize>, n: usize, f: F) -> Result<Vec<R>>
where
    R: Send,
    F: Fn(usize) -> Result<R> + Sync + Send,
{
    let run = || (0..n).into_par_iter().map(&f).collect::<Result<Vec<R>>>();
    match threads {
        None => run(),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::validation("threads", e.to_string()))?
            .install(run),
    }
}

/// Per-replica statistic as written to CLT CSVs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicaRecord {
    pub replica: usize,
    pub seed: u64,
    pub statistic: f64,
}

/// Summary of a replica sample. Absent fields do not apply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatSummary {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    /// Centered by the sample mean and scaled by the sample standard
    /// deviation (Lilliefors form).
    pub standardized_samples: Option<Vec<f64>>,
    pub ks_distance: Option<f64>,
    /// Set when the sample variance is zero; standardization is refused.
    pub degenerate: bool,
    pub fit_slope: Option<f64>,
    pub fit_intercept: Option<f64>,
    pub fit_r2: Option<f64>,
}

impl StatSummary {
    pub fn from_samples(xs: &[f64]) -> Self {
        let var = variance(xs);
        let standardized = standardize(xs).ok();
        let degenerate = standardized.is_none();
        let ks = if degenerate { None } else { ks_statistic(xs).ok() };
        StatSummary {
            n: xs.len(),
            mean: mean(xs),
            variance: var,
            standardized_samples: standardized,
            ks_distance: ks,
            degenerate,
            fit_slope: None,
            fit_intercept: None,
            fit_r2: None,
        }
    }

    pub fn with_fit(mut self, fit: &ExpFit) -> Self {
        self.fit_slope = Some(fit.slope);
        self.fit_intercept = Some(fit.intercept);
        self.fit_r2 = Some(fit.r2);
        self
    }
}
