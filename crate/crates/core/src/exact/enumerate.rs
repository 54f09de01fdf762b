//! Brute-force enumeration of all matchings.

use crate::disorder::DisorderSample;
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::scalar::{log_sum_exp, Scalar};

use super::{GibbsSummary, Matching};

/// Largest edge count accepted by the enumeration routines.
pub const ENUMERATION_LIMIT: usize = 24;

/// Yields every matching of a graph exactly once, starting with the empty one,
/// in lexicographic order of sorted edge lists.
pub struct MatchingIter<'g> {
    graph: &'g WeightedGraph,
    allowed: Vec<bool>,
    stack: Vec<usize>,
    used: Vec<bool>,
    started: bool,
}

impl<'g> MatchingIter<'g> {
    fn fits(&self, e: usize) -> bool {
        let (u, v) = self.graph.endpoints(e);
        self.allowed[e] && !self.used[u] && !self.used[v]
    }

    fn next_fit(&self, from: usize) -> Option<usize> {
        (from..self.graph.edge_count()).find(|&e| self.fits(e))
    }

    fn push(&mut self, e: usize) {
        let (u, v) = self.graph.endpoints(e);
        self.used[u] = true;
        self.used[v] = true;
        self.stack.push(e);
    }

    fn current(&self) -> Matching {
        Matching::from_sorted(self.stack.clone())
    }
}

impl Iterator for MatchingIter<'_> {
    type Item = Matching;

    fn next(&mut self) -> Option<Matching> {
        if !self.started {
            self.started = true;
            return Some(self.current());
        }
        let from = self.stack.last().map_or(0, |&l| l + 1);
        if let Some(e) = self.next_fit(from) {
            self.push(e);
            return Some(self.current());
        }
        loop {
            let last = self.stack.pop()?;
            let (u, v) = self.graph.endpoints(last);
            self.used[u] = false;
            self.used[v] = false;
            if let Some(e) = self.next_fit(last + 1) {
                self.push(e);
                return Some(self.current());
            }
        }
    }
}

/// Every matching of `g`. Fails when `g` has more than [`ENUMERATION_LIMIT`] edges.
pub fn enumerate_matchings(g: &WeightedGraph) -> Result<MatchingIter<'_>> {
    let allowed = vec![true; g.edge_count()];
    enumerate_within(g, allowed)
}

/// Matchings using only edges flagged in `allowed`; the guard counts allowed edges.
pub fn enumerate_within(g: &WeightedGraph, allowed: Vec<bool>) -> Result<MatchingIter<'_>> {
    let edges = allowed.iter().filter(|&&a| a).count();
    if edges > ENUMERATION_LIMIT {
        return Err(Error::TooLarge {
            edges,
            limit: ENUMERATION_LIMIT,
        });
    }
    Ok(MatchingIter {
        graph: g,
        allowed,
        stack: Vec::new(),
        used: vec![false; g.vertex_count()],
        started: false,
    })
}

/// Gibbs measure tabulated over all matchings.
pub struct EnumeratedMeasure<T> {
    pub matchings: Vec<Matching>,
    /// Unnormalized log-weights, aligned with `matchings`.
    pub log_weights: Vec<T>,
    pub log_z: T,
}

impl<T: Scalar> EnumeratedMeasure<T> {
    pub fn new(g: &WeightedGraph, s: &DisorderSample<T>) -> Result<Self> {
        s.check_graph(g)?;
        let matchings: Vec<Matching> = enumerate_matchings(g)?.collect();
        let log_weights: Vec<T> = matchings.iter().map(|m| m.log_weight(g, s)).collect();
        let log_z = log_sum_exp(&log_weights);
        Ok(EnumeratedMeasure {
            matchings,
            log_weights,
            log_z,
        })
    }

    pub fn probabilities(&self) -> Vec<T> {
        self.log_weights
            .iter()
            .map(|&lw| (lw - self.log_z).exp())
            .collect()
    }

    /// Gibbs expectation of `f`.
    pub fn expect(&self, f: impl Fn(&Matching) -> T) -> T {
        self.matchings
            .iter()
            .zip(&self.log_weights)
            .map(|(m, &lw)| (lw - self.log_z).exp() * f(m))
            .sum()
    }

    pub fn summary(&self, g: &WeightedGraph) -> GibbsSummary<T> {
        let probs = self.probabilities();
        let mut edge = vec![T::zero(); g.edge_count()];
        let mut unmatched = vec![T::zero(); g.vertex_count()];
        let mut mean = T::zero();
        let mut second = T::zero();
        for (m, &p) in self.matchings.iter().zip(&probs) {
            let mut covered = vec![false; g.vertex_count()];
            for &e in m.edges() {
                edge[e] = edge[e] + p;
                let (u, v) = g.endpoints(e);
                covered[u] = true;
                covered[v] = true;
            }
            for (x, c) in covered.iter().enumerate() {
                if !c {
                    unmatched[x] = unmatched[x] + p;
                }
            }
            let k = T::from_usize(m.len()).unwrap();
            mean = mean + p * k;
            second = second + p * k * k;
        }
        GibbsSummary {
            log_z: self.log_z,
            edge_marginals: edge,
            vertex_unmatched: unmatched,
            dimer_mean: mean,
            dimer_gibbs_variance: (second - mean * mean).max(T::zero()),
        }
    }
}
