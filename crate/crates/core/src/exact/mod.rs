//! Exact Gibbs computations for the monomer-dimer measure
//!
//! `mu(M) ∝ exp(sum_{e in M} w_e + sum_{x unmatched} nu_x)`
//!
//! on a finite graph. The recursion engine is the workhorse; enumeration is
//! kept as an independent oracle for small graphs.

mod conditional;
mod enumerate;
mod recursion;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::disorder::DisorderSample;
use crate::error::{Error, Result};
use crate::graph::{SiteIndex, WeightedGraph};
use crate::scalar::Scalar;

pub use conditional::{conditional_summary, BoundaryCondition, ConditionalRegion};
pub use enumerate::{enumerate_matchings, enumerate_within, EnumeratedMeasure, MatchingIter, ENUMERATION_LIMIT};
pub use recursion::{Recursion, VertexSet};

/// A set of pairwise vertex-disjoint edges, stored as sorted edge indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Matching {
    edges: Vec<usize>,
}

impl Matching {
    /// Validates that `edges` is a matching of `g`.
    pub fn new(g: &WeightedGraph, mut edges: Vec<usize>) -> Result<Self> {
        edges.sort_unstable();
        edges.dedup();
        let m = Matching { edges };
        if !m.is_valid(g) {
            return Err(Error::validation("matching", "edges share a vertex or are out of range"));
        }
        Ok(m)
    }

    pub(crate) fn from_sorted(edges: Vec<usize>) -> Self {
        Matching { edges }
    }

    pub fn empty() -> Self {
        Matching::default()
    }

    pub fn edges(&self) -> &[usize] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains(&self, e: usize) -> bool {
        self.edges.binary_search(&e).is_ok()
    }

    pub fn is_valid(&self, g: &WeightedGraph) -> bool {
        let mut used = vec![false; g.vertex_count()];
        for &e in &self.edges {
            if e >= g.edge_count() {
                return false;
            }
            let (u, v) = g.endpoints(e);
            if used[u] || used[v] {
                return false;
            }
            used[u] = true;
            used[v] = true;
        }
        true
    }

    /// Whether `x` is covered by an edge of the matching.
    pub fn covers(&self, g: &WeightedGraph, x: usize) -> bool {
        self.edges.iter().any(|&e| {
            let (u, v) = g.endpoints(e);
            u == x || v == x
        })
    }

    /// Unmatched vertices, sorted.
    pub fn unmatched(&self, g: &WeightedGraph) -> Vec<usize> {
        let mut used = vec![false; g.vertex_count()];
        for &e in &self.edges {
            let (u, v) = g.endpoints(e);
            used[u] = true;
            used[v] = true;
        }
        (0..g.vertex_count()).filter(|&x| !used[x]).collect()
    }

    /// `sum_{e in M} w_e + sum_{x unmatched} nu_x`.
    pub fn log_weight<T: Scalar>(&self, g: &WeightedGraph, s: &DisorderSample<T>) -> T {
        let edges: T = self.edges.iter().map(|&e| s.edge_weights[e]).sum();
        let vertices: T = self.unmatched(g).into_iter().map(|x| s.vertex_weights[x]).sum();
        edges + vertices
    }

    /// Symmetric difference, sorted.
    pub fn symmetric_difference(&self, other: &Matching) -> Vec<usize> {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.edges.len() || j < other.edges.len() {
            match (self.edges.get(i), other.edges.get(j)) {
                (Some(&a), Some(&b)) if a == b => {
                    i += 1;
                    j += 1;
                }
                (Some(&a), Some(&b)) if a < b => {
                    out.push(a);
                    i += 1;
                }
                (Some(_), Some(&b)) => {
                    out.push(b);
                    j += 1;
                }
                (Some(&a), None) => {
                    out.push(a);
                    i += 1;
                }
                (None, Some(&b)) => {
                    out.push(b);
                    j += 1;
                }
                (None, None) => unreachable!(),
            }
        }
        out
    }
}

/// Gibbs quantities for one disorder sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GibbsSummary<T> {
    pub log_z: T,
    /// `<1{e in M}>` per edge.
    pub edge_marginals: Vec<T>,
    /// `<1{x not in M}>` per vertex.
    pub vertex_unmatched: Vec<T>,
    /// `<|M|>`.
    pub dimer_mean: T,
    /// Gibbs variance of `|M|`.
    pub dimer_gibbs_variance: T,
}

impl<T: Scalar> GibbsSummary<T> {
    /// Largest violation of `unmatched(x) + sum_{e ∋ x} marginal(e) = 1`.
    pub fn vertex_balance_error(&self, g: &WeightedGraph) -> T {
        (0..g.vertex_count())
            .map(|x| {
                let s: T = g.neighbors(x).iter().map(|&(_, e)| self.edge_marginals[e]).sum();
                (s + self.vertex_unmatched[x] - T::one()).abs()
            })
            .fold(T::zero(), T::max)
    }

    /// CSV header for [`Self::csv_rows`].
    pub const CSV_HEADER: [&'static str; 3] = ["site", "index", "value"];

    /// Long-form rows `(site, index, value)`: `logZ`, `dimer_mean`,
    /// `dimer_var`, then one `edge`/`vertex` row per marginal.
    pub fn csv_rows(&self) -> Vec<(String, usize, f64)> {
        let mut rows = vec![
            ("logZ".to_string(), 0, self.log_z.as_f64()),
            ("dimer_mean".to_string(), 0, self.dimer_mean.as_f64()),
            ("dimer_var".to_string(), 0, self.dimer_gibbs_variance.as_f64()),
        ];
        rows.extend(
            self.edge_marginals
                .iter()
                .enumerate()
                .map(|(e, v)| ("edge".to_string(), e, v.as_f64())),
        );
        rows.extend(
            self.vertex_unmatched
                .iter()
                .enumerate()
                .map(|(x, v)| ("vertex".to_string(), x, v.as_f64())),
        );
        rows
    }
}

/// Computation scheme for Gibbs quantities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    /// Brute-force enumeration (at most 24 edges).
    Enum,
    /// Memoized vertex elimination.
    Recursion,
    /// Column transfer matrix (strip graphs only).
    Transfer,
    /// Heat-bath Glauber estimates.
    Mcmc,
}

impl Engine {
    pub fn is_exact(self) -> bool {
        !matches!(self, Engine::Mcmc)
    }
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "enum" => Ok(Engine::Enum),
            "recursion" => Ok(Engine::Recursion),
            "transfer" => Ok(Engine::Transfer),
            "mcmc" => Ok(Engine::Mcmc),
            _ => Err(Error::validation(
                "engine",
                format!("expected enum|recursion|transfer|mcmc, got {s:?}"),
            )),
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Engine::Enum => "enum",
            Engine::Recursion => "recursion",
            Engine::Transfer => "transfer",
            Engine::Mcmc => "mcmc",
        })
    }
}

/// `log Z_G`.
pub fn log_partition<T: Scalar>(g: &WeightedGraph, s: &DisorderSample<T>) -> Result<T> {
    Ok(Recursion::new(g, s)?.log_z_full())
}

fn check_edge(g: &WeightedGraph, e: usize) -> Result<()> {
    if e < g.edge_count() {
        Ok(())
    } else {
        Err(Error::validation("edge", format!("e{e} out of range")))
    }
}

fn check_vertex(g: &WeightedGraph, x: usize) -> Result<()> {
    if x < g.vertex_count() {
        Ok(())
    } else {
        Err(Error::validation("vertex", format!("v{x} out of range")))
    }
}

/// `<1{e in M}> = beta_e e^{w_e} / Z` with `beta_e = Z(G - x - y)`.
pub fn edge_marginal<T: Scalar>(g: &WeightedGraph, s: &DisorderSample<T>, e: usize) -> Result<T> {
    check_edge(g, e)?;
    let mut r = Recursion::new(g, s)?;
    let log_z = r.log_z_full();
    let (x, y) = g.endpoints(e);
    Ok((r.log_z_without(&[x, y]) + s.edge_weights[e] - log_z).exp())
}

/// `<1{x not in M}> = e^{nu_x} Z(G - x) / Z`.
pub fn vertex_unmatched_marginal<T: Scalar>(g: &WeightedGraph, s: &DisorderSample<T>, x: usize) -> Result<T> {
    check_vertex(g, x)?;
    let mut r = Recursion::new(g, s)?;
    let log_z = r.log_z_full();
    Ok((r.log_z_without(&[x]) + s.vertex_weights[x] - log_z).exp())
}

/// Joint Gibbs probability of two sites: both edges present, both vertices
/// unmatched, or (mixed) the edge present and the vertex unmatched.
pub fn two_point<T: Scalar>(g: &WeightedGraph, s: &DisorderSample<T>, a: SiteIndex, b: SiteIndex) -> Result<T> {
    let mut r = Recursion::new(g, s)?;
    two_point_with(&mut r, g, s, a, b)
}

/// [`two_point`] reusing an existing recursion memo.
pub fn two_point_with<T: Scalar>(
    r: &mut Recursion<'_, T>,
    g: &WeightedGraph,
    s: &DisorderSample<T>,
    a: SiteIndex,
    b: SiteIndex,
) -> Result<T> {
    if a == b {
        return Err(Error::validation("sites", "two-point function needs distinct sites"));
    }
    let mut removed = Vec::with_capacity(4);
    let mut log_factor = T::zero();
    for site in [a, b] {
        match site {
            SiteIndex::Edge(e) => {
                check_edge(g, e)?;
                let (x, y) = g.endpoints(e);
                removed.extend([x, y]);
                log_factor = log_factor + s.edge_weights[e];
            }
            SiteIndex::Vertex(x) => {
                check_vertex(g, x)?;
                removed.push(x);
                log_factor = log_factor + s.vertex_weights[x];
            }
        }
    }
    let mut dedup = removed.clone();
    dedup.sort_unstable();
    dedup.dedup();
    if dedup.len() != removed.len() {
        // the two constraints compete for a vertex
        return Ok(T::zero());
    }
    let log_z = r.log_z_full();
    Ok((r.log_z_without(&removed) + log_factor - log_z).exp())
}

/// All Gibbs quantities of the free measure, from the recursion engine.
pub fn gibbs_summary<T: Scalar>(g: &WeightedGraph, s: &DisorderSample<T>) -> Result<GibbsSummary<T>> {
    let mut r = Recursion::new(g, s)?;
    let full = r.full_set();
    Ok(summary_of(&mut r, full))
}

pub(crate) fn summary_of<T: Scalar>(r: &mut Recursion<'_, T>, key: VertexSet) -> GibbsSummary<T> {
    let log_z = r.log_z(key.clone());
    let (dimer_mean, dimer_var) = r.dimer_moments(key.clone());
    let (edge_marginals, vertex_unmatched) = r.marginals(key);
    GibbsSummary {
        log_z,
        edge_marginals,
        vertex_unmatched,
        dimer_mean,
        dimer_gibbs_variance: dimer_var.max(T::zero()),
    }
}

/// Gibbs summary by the chosen exact engine.
pub fn gibbs_summary_with<T: Scalar>(engine: Engine, g: &WeightedGraph, s: &DisorderSample<T>) -> Result<GibbsSummary<T>> {
    match engine {
        Engine::Enum => Ok(EnumeratedMeasure::new(g, s)?.summary(g)),
        Engine::Recursion => gibbs_summary(g, s),
        Engine::Transfer => crate::transfer::strip_gibbs_summary(g, s),
        Engine::Mcmc => Err(Error::EngineMismatch {
            engine: engine.to_string(),
            what: "an exact Gibbs summary".into(),
        }),
    }
}

/// `log Z` by the chosen exact engine.
pub fn log_partition_with<T: Scalar>(engine: Engine, g: &WeightedGraph, s: &DisorderSample<T>) -> Result<T> {
    match engine {
        Engine::Enum => Ok(EnumeratedMeasure::new(g, s)?.log_z),
        Engine::Recursion => log_partition(g, s),
        Engine::Transfer => crate::transfer::strip_log_partition(g, s),
        Engine::Mcmc => Err(Error::EngineMismatch {
            engine: engine.to_string(),
            what: "the free energy".into(),
        }),
    }
}

/// `Delta_i F = F(s) - F(s with site i set to new_value)`.
pub fn discrete_derivative<T: Scalar>(
    g: &WeightedGraph,
    s: &DisorderSample<T>,
    site: SiteIndex,
    new_value: T,
) -> Result<T> {
    let before = log_partition(g, s)?;
    let after = log_partition(g, &s.with_site(site, new_value))?;
    Ok(before - after)
}

/// Free energy of the radius-`radius` ball around `site`, with weights
/// inherited from `s`.
pub fn local_free_energy<T: Scalar>(g: &WeightedGraph, s: &DisorderSample<T>, site: SiteIndex, radius: usize) -> Result<T> {
    s.check_graph(g)?;
    let ball = g.ball(site, radius)?.materialize();
    log_partition(&ball.graph, &s.restrict(&ball))
}

/// Absorbs vertex weights into edges: `w~_e = w_e - nu_x - nu_y`, `nu ≡ 0`.
/// Leaves every Gibbs probability unchanged and shifts `log Z` by `-sum nu_x`.
pub fn gauge_transform<T: Scalar>(g: &WeightedGraph, s: &DisorderSample<T>) -> Result<DisorderSample<T>> {
    s.check_graph(g)?;
    let mut out = s.clone();
    for (e, w) in out.edge_weights.iter_mut().enumerate() {
        let (x, y) = g.endpoints(e);
        *w = *w - s.vertex_weights[x] - s.vertex_weights[y];
    }
    out.vertex_weights.iter_mut().for_each(|v| *v = T::zero());
    Ok(out)
}

/// Gauge edge weights `w~_e = w_e - nu_x - nu_y`.
pub fn gauge_edge_weight<T: Scalar>(g: &WeightedGraph, s: &DisorderSample<T>, e: usize) -> T {
    let (x, y) = g.endpoints(e);
    s.edge_weights[e] - s.vertex_weights[x] - s.vertex_weights[y]
}

/// Smallest slack of `Var(|M|) - (1 + e^K)^{-1} sum_{e in F} <1{e in M}>`
/// over all matchings `F` of the edges with gauge weight below `k`, together
/// with the number of matchings `F` checked.
pub fn variance_claim_slack<T: Scalar>(
    g: &WeightedGraph,
    summary: &GibbsSummary<T>,
    s: &DisorderSample<T>,
    k: T,
) -> Result<(T, usize)> {
    let allowed: Vec<bool> = (0..g.edge_count()).map(|e| gauge_edge_weight(g, s, e) < k).collect();
    let factor = T::one() / (T::one() + k.exp());
    let mut worst = T::infinity();
    let mut count = 0;
    for f in enumerate_within(g, allowed)? {
        let mass: T = f.edges().iter().map(|&e| summary.edge_marginals[e]).sum();
        worst = worst.min(summary.dimer_gibbs_variance - factor * mass);
        count += 1;
    }
    Ok((worst, count))
}
