//! Heat-bath Glauber dynamics, exact conditional sampling, and the
//! independent coupling of two boundary conditions with its paths of
//! disagreement.

use std::collections::VecDeque;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::disorder::DisorderSample;
use crate::error::{Error, Result};
use crate::exact::{
    enumerate_matchings, gauge_edge_weight, BoundaryCondition, ConditionalRegion, Matching, Recursion,
    ENUMERATION_LIMIT,
};
use crate::graph::{SiteIndex, WeightedGraph};
use crate::scalar::{sigmoid, Scalar};
use crate::seed::{derive_seed, stream_rng};
use crate::stats::batch_means_tau;

const FREE: usize = usize::MAX;

/// Current matching of a chain, with its boundary condition.
#[derive(Debug, Clone)]
pub struct ChainState {
    /// Edge covering each vertex, or `FREE`.
    cover: Vec<usize>,
    present: Vec<bool>,
    /// Edges the dynamics may flip.
    updatable: Vec<bool>,
    scan: Vec<usize>,
    pub sweep_count: u64,
    boundary: Option<BoundaryCondition>,
}

impl ChainState {
    /// Empty matching plus the forced boundary dimers. Without a boundary
    /// every edge is updatable; with one, exactly the region's edges are.
    pub fn new(g: &WeightedGraph, bc: Option<&BoundaryCondition>) -> Result<Self> {
        let mut state = ChainState {
            cover: vec![FREE; g.vertex_count()],
            present: vec![false; g.edge_count()],
            updatable: vec![bc.is_none(); g.edge_count()],
            scan: Vec::new(),
            sweep_count: 0,
            boundary: bc.cloned(),
        };
        if let Some(bc) = bc {
            bc.validate(g)?;
            for &e in bc.region() {
                state.updatable[e] = true;
            }
            for e in bc.forced_edges() {
                state.insert(g, e);
            }
        }
        state.scan = (0..g.edge_count()).filter(|&e| state.updatable[e]).collect();
        Ok(state)
    }

    fn insert(&mut self, g: &WeightedGraph, e: usize) {
        let (x, y) = g.endpoints(e);
        self.cover[x] = e;
        self.cover[y] = e;
        self.present[e] = true;
    }

    fn remove(&mut self, g: &WeightedGraph, e: usize) {
        let (x, y) = g.endpoints(e);
        self.cover[x] = FREE;
        self.cover[y] = FREE;
        self.present[e] = false;
    }

    pub fn contains(&self, e: usize) -> bool {
        self.present[e]
    }

    pub fn boundary(&self) -> Option<&BoundaryCondition> {
        self.boundary.as_ref()
    }

    /// Edges visited by one systematic sweep, in index order.
    pub fn scan_edges(&self) -> &[usize] {
        &self.scan
    }

    pub fn dimer_count(&self) -> usize {
        self.present.iter().filter(|&&p| p).count()
    }

    pub fn matching(&self) -> Matching {
        Matching::from_sorted((0..self.present.len()).filter(|&e| self.present[e]).collect())
    }

    /// Heat-bath update of `e` with threshold `p = sigmoid(w~_e)`.
    #[inline]
    fn update(&mut self, g: &WeightedGraph, e: usize, p: f64, u: f64) {
        if !self.updatable[e] {
            return;
        }
        let (x, y) = g.endpoints(e);
        let blocked = (self.cover[x] != FREE && self.cover[x] != e) || (self.cover[y] != FREE && self.cover[y] != e);
        let want = !blocked && u < p;
        if want != self.present[e] {
            if want {
                self.insert(g, e);
            } else {
                self.remove(g, e);
            }
        }
    }

    /// Resamples edge `e` from its conditional law given the rest: absent if
    /// an endpoint is covered by another edge, otherwise present iff
    /// `u < e^{w~}/(1+e^{w~})` with `w~_e = w_e - nu_x - nu_y`. Edges outside
    /// the chain's region (including forced ones) are left as they are.
    pub fn heat_bath_step<T: Scalar>(&mut self, g: &WeightedGraph, s: &DisorderSample<T>, e: usize, u: f64) {
        let p = sigmoid(gauge_edge_weight(g, s, e)).as_f64();
        self.update(g, e, p, u);
    }
}

/// Systematic-scan heat-bath chain.
pub struct Chain<'g> {
    g: &'g WeightedGraph,
    state: ChainState,
    thresholds: Vec<f64>,
    rng: ChaCha8Rng,
}

impl<'g> Chain<'g> {
    pub fn new<T: Scalar>(
        g: &'g WeightedGraph,
        s: &DisorderSample<T>,
        bc: Option<&BoundaryCondition>,
        seed: u64,
    ) -> Result<Self> {
        s.check_graph(g)?;
        let state = ChainState::new(g, bc)?;
        let thresholds = (0..g.edge_count())
            .map(|e| sigmoid(gauge_edge_weight(g, s, e)).as_f64())
            .collect();
        Ok(Chain {
            g,
            state,
            thresholds,
            rng: stream_rng(seed, 0),
        })
    }

    pub fn sweep(&mut self) {
        for k in 0..self.state.scan.len() {
            let e = self.state.scan[k];
            let u: f64 = self.rng.random();
            self.state.update(self.g, e, self.thresholds[e], u);
        }
        self.state.sweep_count += 1;
    }

    pub fn state(&self) -> &ChainState {
        &self.state
    }
}

/// Post-burn-in states of a chain, one per sweep.
pub struct ChainRun<'g> {
    chain: Chain<'g>,
    remaining: usize,
}

impl Iterator for ChainRun<'_> {
    type Item = Matching;

    fn next(&mut self) -> Option<Matching> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        self.chain.sweep();
        Some(self.chain.state.matching())
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining, Some(self.remaining))
    }
}

/// Runs `burn_in` sweeps, then yields the matching after each of `sweeps`
/// further sweeps. Deterministic in `seed`.
pub fn run_chain<'g, T: Scalar>(
    g: &'g WeightedGraph,
    s: &DisorderSample<T>,
    bc: Option<&BoundaryCondition>,
    sweeps: usize,
    burn_in: usize,
    seed: u64,
) -> Result<ChainRun<'g>> {
    if sweeps == 0 {
        return Err(Error::validation("sweeps", "must be at least 1"));
    }
    let mut chain = Chain::new(g, s, bc, seed)?;
    for _ in 0..burn_in {
        chain.sweep();
    }
    Ok(ChainRun {
        chain,
        remaining: sweeps,
    })
}

/// Ten times the batch-means autocorrelation time of the dimer count,
/// measured on a pilot run.
pub fn suggested_burn_in<T: Scalar>(
    g: &WeightedGraph,
    s: &DisorderSample<T>,
    bc: Option<&BoundaryCondition>,
    pilot_sweeps: usize,
    seed: u64,
) -> Result<usize> {
    let mut chain = Chain::new(g, s, bc, seed)?;
    let series: Vec<f64> = (0..pilot_sweeps.max(200))
        .map(|_| {
            chain.sweep();
            chain.state.dimer_count() as f64
        })
        .collect();
    let tau = batch_means_tau(&series, 20).unwrap_or(1.0);
    Ok((10.0 * tau).ceil() as usize)
}

/// Exact sampler for a conditional measure small enough to enumerate.
pub struct ConditionalSampler<T> {
    region: ConditionalRegion,
    local: Vec<Vec<usize>>,
    cdf: Vec<T>,
}

impl<T: Scalar> ConditionalSampler<T> {
    pub fn new(g: &WeightedGraph, s: &DisorderSample<T>, bc: &BoundaryCondition) -> Result<Self> {
        s.check_graph(g)?;
        let region = ConditionalRegion::new(g, bc)?;
        let free = &region.free.graph;
        if free.edge_count() > ENUMERATION_LIMIT {
            return Err(Error::TooLarge {
                edges: free.edge_count(),
                limit: ENUMERATION_LIMIT,
            });
        }
        let local_s = s.restrict(&region.free);
        let mut local = Vec::new();
        let mut log_w = Vec::new();
        for m in enumerate_matchings(free)? {
            log_w.push(m.log_weight(free, &local_s));
            local.push(m.edges().to_vec());
        }
        let top = log_w.iter().copied().fold(T::neg_infinity(), T::max);
        let mut acc = T::zero();
        let mut cdf: Vec<T> = log_w
            .iter()
            .map(|&l| {
                acc = acc + (l - top).exp();
                acc
            })
            .collect();
        let total = acc;
        cdf.iter_mut().for_each(|c| *c = *c / total);
        Ok(ConditionalSampler { region, local, cdf })
    }

    /// Inverse-CDF draw, lifted to parent edge indices with the forced
    /// boundary dimers included.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Matching {
        let u = T::of(rng.random::<f64>());
        let k = self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1);
        Matching::from_sorted(self.region.lift(&self.local[k]))
    }

    /// Number of matchings in the support.
    pub fn support_size(&self) -> usize {
        self.local.len()
    }
}

/// One exact draw from the conditional measure given `bc` (enumeration and
/// inverse CDF; at most [`ENUMERATION_LIMIT`] unforced edges).
pub fn exact_conditional_sample<T: Scalar>(
    g: &WeightedGraph,
    s: &DisorderSample<T>,
    bc: &BoundaryCondition,
    seed: u64,
) -> Result<Matching> {
    let sampler = ConditionalSampler::new(g, s, bc)?;
    Ok(sampler.draw(&mut stream_rng(seed, 0)))
}

/// Connected piece of `M1 ⊕ M2`, edges listed in walking order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisagreementComponent {
    pub edges: Vec<usize>,
    pub cycle: bool,
    pub touches_boundary: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DisagreementReport {
    pub components: Vec<DisagreementComponent>,
    pub reached_boundary: bool,
    pub max_path_length: usize,
}

/// Splits `M1 ⊕ M2` into self-avoiding alternating paths and even cycles.
/// `boundary` marks the edges whose presence in a component sets
/// `reached_boundary`.
pub fn symmetric_difference_paths(
    g: &WeightedGraph,
    m1: &Matching,
    m2: &Matching,
    boundary: &[usize],
) -> Result<DisagreementReport> {
    if !m1.is_valid(g) || !m2.is_valid(g) {
        return Err(Error::validation("matching", "not a matching of the graph"));
    }
    let diff = m1.symmetric_difference(m2);
    let mut at: Vec<Vec<usize>> = vec![Vec::new(); g.vertex_count()];
    for &e in &diff {
        let (x, y) = g.endpoints(e);
        at[x].push(e);
        at[y].push(e);
    }
    let mut on_boundary = vec![false; g.edge_count()];
    for &e in boundary {
        if e < g.edge_count() {
            on_boundary[e] = true;
        }
    }
    let mut seen = vec![false; g.edge_count()];
    let mut report = DisagreementReport::default();

    let walk = |start_vertex: usize, first: usize, seen: &mut Vec<bool>| -> Vec<usize> {
        let mut edges = Vec::new();
        let (mut v, mut e) = (start_vertex, first);
        loop {
            seen[e] = true;
            edges.push(e);
            let (x, y) = g.endpoints(e);
            v = if x == v { y } else { x };
            match at[v].iter().find(|&&f| !seen[f]) {
                Some(&f) => e = f,
                None => break,
            }
        }
        edges
    };

    // paths start at vertices of degree 1 in the difference; what is left are cycles
    let mut pieces = Vec::new();
    for v in 0..g.vertex_count() {
        if at[v].len() == 1 && !seen[at[v][0]] {
            pieces.push((walk(v, at[v][0], &mut seen), false));
        }
    }
    for &e in &diff {
        if !seen[e] {
            let (x, _) = g.endpoints(e);
            pieces.push((walk(x, e, &mut seen), true));
        }
    }
    for (edges, cycle) in pieces {
        let alternates = edges.windows(2).all(|w| m1.contains(w[0]) != m1.contains(w[1]))
            && (!cycle || edges.len() % 2 == 0);
        if !alternates {
            return Err(Error::CheckFailed("symmetric difference component does not alternate".into()));
        }
        let touches_boundary = edges.iter().any(|&e| on_boundary[e]);
        report.reached_boundary |= touches_boundary;
        report.max_path_length = report.max_path_length.max(edges.len());
        report.components.push(DisagreementComponent {
            edges,
            cycle,
            touches_boundary,
        });
    }
    Ok(report)
}

/// Whether there are edges `e = e_0 ~ e_1 ~ ... ~ e_l` with every `e_i`
/// (`i >= 1`) in `M1 ⊕ M2` and `e_l` on the boundary.
pub fn has_disagreement_path(
    g: &WeightedGraph,
    m1: &Matching,
    m2: &Matching,
    e: usize,
    on_boundary: &[bool],
) -> bool {
    let mut in_diff = vec![false; g.edge_count()];
    for f in m1.symmetric_difference(m2) {
        in_diff[f] = true;
    }
    let mut seen = vec![false; g.edge_count()];
    seen[e] = true;
    let mut queue = VecDeque::from([e]);
    while let Some(f) = queue.pop_front() {
        for h in g.incident_edges(f) {
            if in_diff[h] && !seen[h] {
                if on_boundary[h] {
                    return true;
                }
                seen[h] = true;
                queue.push_back(h);
            }
        }
    }
    false
}

/// How the two conditional measures are sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SamplerChoice {
    /// Enumeration when the free region is small enough, else recursion.
    Auto,
    Enumeration,
    /// Exact draws by walking the recursion's elimination graph.
    Recursion,
    /// Heat-bath chains, one per boundary condition, thinned.
    Chain { burn_in: usize, thin: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CouplingOptions {
    pub sampler: SamplerChoice,
    /// Drive both samplers from one random stream (variance reduction only;
    /// not the product coupling).
    pub common_random_numbers: bool,
}

impl Default for CouplingOptions {
    fn default() -> Self {
        CouplingOptions {
            sampler: SamplerChoice::Auto,
            common_random_numbers: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisagreementEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub replicas: usize,
    pub hits: usize,
}

impl DisagreementEstimate {
    fn from_hits(hits: usize, replicas: usize) -> Self {
        let p = hits as f64 / replicas as f64;
        DisagreementEstimate {
            estimate: p,
            stderr: (p * (1.0 - p) / replicas as f64).sqrt(),
            replicas,
            hits,
        }
    }
}

#[allow(clippy::large_enum_variant)]
enum Draws<'a, T> {
    Enum(ConditionalSampler<T>),
    Dag {
        region: &'a ConditionalRegion,
        rec: Recursion<'a, T>,
    },
    Chain {
        chain: Chain<'a>,
        thin: usize,
    },
}

impl<T: Scalar> Draws<'_, T> {
    fn draw(&mut self, rng: &mut ChaCha8Rng) -> Matching {
        match self {
            Draws::Enum(s) => s.draw(rng),
            Draws::Dag { region, rec } => {
                let full = rec.full_set();
                let local = rec.sample(full, rng);
                Matching::from_sorted(region.lift(&local))
            }
            Draws::Chain { chain, thin } => {
                for _ in 0..*thin {
                    chain.sweep();
                }
                chain.state.matching()
            }
        }
    }
}

/// Estimates `Π(∃ a path of disagreement from e to ∂F)` where `F` is the edge
/// set of `ball(e, radius)` and `Π` couples the conditional measures under
/// `bc1` and `bc2` independently.
#[allow(clippy::too_many_arguments)]
pub fn disagreement_probability<T: Scalar>(
    g: &WeightedGraph,
    s: &DisorderSample<T>,
    e: usize,
    radius: usize,
    bc1: &BoundaryCondition,
    bc2: &BoundaryCondition,
    replicas: usize,
    seed: u64,
) -> Result<DisagreementEstimate> {
    disagreement_probability_with(g, s, e, radius, bc1, bc2, replicas, seed, &CouplingOptions::default())
}

#[allow(clippy::too_many_arguments)]
pub fn disagreement_probability_with<T: Scalar>(
    g: &WeightedGraph,
    s: &DisorderSample<T>,
    e: usize,
    radius: usize,
    bc1: &BoundaryCondition,
    bc2: &BoundaryCondition,
    replicas: usize,
    seed: u64,
    opts: &CouplingOptions,
) -> Result<DisagreementEstimate> {
    s.check_graph(g)?;
    if replicas == 0 {
        return Err(Error::validation("replicas", "must be at least 1"));
    }
    let ball_edges = g.ball(SiteIndex::Edge(e), radius)?.edges();
    for bc in [bc1, bc2] {
        if bc.region() != ball_edges.as_slice() {
            return Err(Error::validation("boundary", "region is not the edge set of ball(e, R)"));
        }
        bc.validate(g)?;
    }
    let boundary = bc1.boundary();
    if boundary.is_empty() {
        return Ok(DisagreementEstimate::from_hits(0, replicas));
    }
    let mut on_boundary = vec![false; g.edge_count()];
    for &f in boundary {
        on_boundary[f] = true;
    }

    let regions = [ConditionalRegion::new(g, bc1)?, ConditionalRegion::new(g, bc2)?];
    let locals = [s.restrict(&regions[0].free), s.restrict(&regions[1].free)];
    let small = regions.iter().all(|r| r.free.graph.edge_count() <= ENUMERATION_LIMIT);
    let mut draws: Vec<Draws<'_, T>> = Vec::with_capacity(2);
    for (k, bc) in [bc1, bc2].into_iter().enumerate() {
        let d = match opts.sampler {
            SamplerChoice::Enumeration => Draws::Enum(ConditionalSampler::new(g, s, bc)?),
            SamplerChoice::Auto if small => Draws::Enum(ConditionalSampler::new(g, s, bc)?),
            SamplerChoice::Auto | SamplerChoice::Recursion => Draws::Dag {
                region: &regions[k],
                rec: Recursion::new(&regions[k].free.graph, &locals[k])?,
            },
            SamplerChoice::Chain { burn_in, thin } => {
                let mut chain = Chain::new(g, s, Some(bc), derive_seed(seed, 0xC4A1, k as u64))?;
                for _ in 0..burn_in {
                    chain.sweep();
                }
                Draws::Chain {
                    chain,
                    thin: thin.max(1),
                }
            }
        };
        draws.push(d);
    }

    let mut hits = 0;
    for i in 0..replicas as u64 {
        let (m1, m2) = if opts.common_random_numbers {
            let m1 = draws[0].draw(&mut stream_rng(seed, i));
            let m2 = draws[1].draw(&mut stream_rng(seed, i));
            (m1, m2)
        } else {
            let m1 = draws[0].draw(&mut stream_rng(seed, 2 * i));
            let m2 = draws[1].draw(&mut stream_rng(seed, 2 * i + 1));
            (m1, m2)
        };
        if has_disagreement_path(g, &m1, &m2, e, &on_boundary) {
            hits += 1;
        }
    }
    Ok(DisagreementEstimate::from_hits(hits, replicas))
}
