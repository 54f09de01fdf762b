//! Vertex-elimination recursion
//!
//! `Z(S) = e^{nu_x} Z(S - x) + sum_{y ~ x, y in S} e^{w_xy} Z(S - x - y)`
//!
//! with `x` the lowest-index vertex of `S`. Subproblems are memoized by the
//! remaining vertex set and form a DAG; every node stores `log Z(S)` and the
//! mean and variance of the dimer count under the Gibbs measure on `S`.
//! Marginals come from propagating path probabilities down the DAG.

use rand::Rng;
use rustc_hash::FxHashMap;

use crate::disorder::DisorderSample;
use crate::error::Result;
use crate::graph::WeightedGraph;
use crate::scalar::{log_sum_exp, Scalar};

const LEAF: u32 = u32::MAX;

/// Bitset over vertices used as the memo key.
pub type VertexSet = Box<[u64]>;

#[derive(Debug, Clone)]
struct Node<T> {
    log_z: T,
    dimer_mean: T,
    dimer_var: T,
    size: u32,
    /// Eliminated vertex, or `LEAF` for the empty set.
    vertex: u32,
    unmatched_child: u32,
    terms_start: u32,
    terms_len: u32,
}

/// Memoized partition-function DAG over vertex subsets of one graph.
pub struct Recursion<'a, T> {
    graph: &'a WeightedGraph,
    edge_w: &'a [T],
    vertex_w: &'a [T],
    words: usize,
    memo: FxHashMap<VertexSet, u32>,
    nodes: Vec<Node<T>>,
    /// `(edge, child)` pairs for the edge terms of each node.
    terms: Vec<(u32, u32)>,
}

impl<'a, T: Scalar> Recursion<'a, T> {
    pub fn new(graph: &'a WeightedGraph, sample: &'a DisorderSample<T>) -> Result<Self> {
        sample.check_graph(graph)?;
        Ok(Self::from_weights(graph, &sample.edge_weights, &sample.vertex_weights))
    }

    pub fn from_weights(graph: &'a WeightedGraph, edge_w: &'a [T], vertex_w: &'a [T]) -> Self {
        Recursion {
            graph,
            edge_w,
            vertex_w,
            words: graph.vertex_count().div_ceil(64).max(1),
            memo: FxHashMap::default(),
            nodes: Vec::new(),
            terms: Vec::new(),
        }
    }

    pub fn full_set(&self) -> VertexSet {
        let n = self.graph.vertex_count();
        let mut set = vec![0u64; self.words];
        for (w, word) in set.iter_mut().enumerate() {
            let lo = w * 64;
            let count = n.saturating_sub(lo).min(64);
            *word = if count == 64 { u64::MAX } else { (1u64 << count) - 1 };
        }
        set.into_boxed_slice()
    }

    /// All vertices except `removed`.
    pub fn set_without(&self, removed: &[usize]) -> VertexSet {
        let mut set = self.full_set();
        for &v in removed {
            set[v / 64] &= !(1u64 << (v % 64));
        }
        set
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    fn intern(&mut self, key: VertexSet, work: &mut Vec<(u32, VertexSet)>) -> u32 {
        if let Some(&id) = self.memo.get(&key) {
            return id;
        }
        let id = self.nodes.len() as u32;
        let size = key.iter().map(|w| w.count_ones()).sum();
        self.nodes.push(Node {
            log_z: T::zero(),
            dimer_mean: T::zero(),
            dimer_var: T::zero(),
            size,
            vertex: LEAF,
            unmatched_child: LEAF,
            terms_start: 0,
            terms_len: 0,
        });
        self.memo.insert(key.clone(), id);
        work.push((id, key));
        id
    }

    /// Node id for the vertex set `key`, building any missing subproblems.
    pub fn ensure(&mut self, key: VertexSet) -> u32 {
        let mut work = Vec::new();
        let first_new = self.nodes.len();
        let root = self.intern(key, &mut work);
        while let Some((id, key)) = work.pop() {
            let Some(x) = lowest_vertex(&key) else {
                continue;
            };
            let mut rest = key;
            rest[x / 64] &= !(1u64 << (x % 64));
            let unmatched = self.intern(rest.clone(), &mut work);
            let start = self.terms.len() as u32;
            for &(y, e) in self.graph.neighbors(x) {
                if rest[y / 64] >> (y % 64) & 1 == 1 {
                    let mut child = rest.clone();
                    child[y / 64] &= !(1u64 << (y % 64));
                    let c = self.intern(child, &mut work);
                    self.terms.push((e as u32, c));
                }
            }
            let node = &mut self.nodes[id as usize];
            node.vertex = x as u32;
            node.unmatched_child = unmatched;
            node.terms_start = start;
            node.terms_len = self.terms.len() as u32 - start;
        }
        let mut fresh: Vec<u32> = (first_new as u32..self.nodes.len() as u32).collect();
        fresh.sort_by_key(|&id| self.nodes[id as usize].size);
        let mut scratch = Vec::new();
        for id in fresh {
            self.evaluate(id, &mut scratch);
        }
        root
    }

    fn evaluate(&mut self, id: u32, scratch: &mut Vec<T>) {
        let node = self.nodes[id as usize].clone();
        if node.vertex == LEAF {
            return;
        }
        let x = node.vertex as usize;
        scratch.clear();
        scratch.push(self.vertex_w[x] + self.nodes[node.unmatched_child as usize].log_z);
        let terms = &self.terms[node.terms_start as usize..(node.terms_start + node.terms_len) as usize];
        for &(e, c) in terms {
            scratch.push(self.edge_w[e as usize] + self.nodes[c as usize].log_z);
        }
        let log_z = log_sum_exp(scratch);

        // mean and variance of the dimer count by total expectation/variance
        // over the first branching
        let mut mean = T::zero();
        let branch = |k: T, child: &Node<T>, lw: T| ((lw - log_z).exp(), k + child.dimer_mean, child.dimer_var);
        let mut parts = Vec::with_capacity(terms.len() + 1);
        parts.push(branch(
            T::zero(),
            &self.nodes[node.unmatched_child as usize],
            scratch[0],
        ));
        for (k, &(_, c)) in terms.iter().enumerate() {
            parts.push(branch(T::one(), &self.nodes[c as usize], scratch[k + 1]));
        }
        for &(p, m, _) in &parts {
            mean = mean + p * m;
        }
        let mut var = T::zero();
        for &(p, m, v) in &parts {
            let d = m - mean;
            var = var + p * (v + d * d);
        }
        let slot = &mut self.nodes[id as usize];
        slot.log_z = log_z;
        slot.dimer_mean = mean;
        slot.dimer_var = var;
    }

    pub fn log_z(&mut self, key: VertexSet) -> T {
        let id = self.ensure(key);
        self.nodes[id as usize].log_z
    }

    pub fn log_z_full(&mut self) -> T {
        let key = self.full_set();
        self.log_z(key)
    }

    /// `log Z` of the graph with `removed` deleted.
    pub fn log_z_without(&mut self, removed: &[usize]) -> T {
        let key = self.set_without(removed);
        self.log_z(key)
    }

    /// `(mean, variance)` of the dimer count on the subgraph induced by `key`.
    pub fn dimer_moments(&mut self, key: VertexSet) -> (T, T) {
        let id = self.ensure(key) as usize;
        (self.nodes[id].dimer_mean, self.nodes[id].dimer_var)
    }

    /// Edge marginals and vertex-unmatched marginals of the measure on `key`,
    /// indexed by the full graph's edges and vertices (zero outside `key`).
    pub fn marginals(&mut self, key: VertexSet) -> (Vec<T>, Vec<T>) {
        let root = self.ensure(key);
        let mut order = self.reachable(root);
        order.sort_by_key(|&id| std::cmp::Reverse(self.nodes[id as usize].size));
        let mut flow = vec![T::zero(); self.nodes.len()];
        flow[root as usize] = T::one();
        let mut edge = vec![T::zero(); self.graph.edge_count()];
        let mut unmatched = vec![T::zero(); self.graph.vertex_count()];
        for id in order {
            let node = &self.nodes[id as usize];
            let f = flow[id as usize];
            if node.vertex == LEAF || f == T::zero() {
                continue;
            }
            let x = node.vertex as usize;
            let c0 = node.unmatched_child as usize;
            let p0 = f * (self.vertex_w[x] + self.nodes[c0].log_z - node.log_z).exp();
            unmatched[x] = unmatched[x] + p0;
            flow[c0] = flow[c0] + p0;
            let start = node.terms_start as usize;
            for &(e, c) in &self.terms[start..start + node.terms_len as usize] {
                let p = f * (self.edge_w[e as usize] + self.nodes[c as usize].log_z - node.log_z).exp();
                edge[e as usize] = edge[e as usize] + p;
                flow[c as usize] = flow[c as usize] + p;
            }
        }
        (edge, unmatched)
    }

    fn reachable(&self, root: u32) -> Vec<u32> {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![root];
        let mut out = Vec::new();
        seen[root as usize] = true;
        while let Some(id) = stack.pop() {
            out.push(id);
            let node = &self.nodes[id as usize];
            if node.vertex == LEAF {
                continue;
            }
            let start = node.terms_start as usize;
            let children = std::iter::once(node.unmatched_child)
                .chain(self.terms[start..start + node.terms_len as usize].iter().map(|&(_, c)| c));
            for c in children {
                if !seen[c as usize] {
                    seen[c as usize] = true;
                    stack.push(c);
                }
            }
        }
        out
    }

    /// Exact draw from the Gibbs measure on `key`; returns sorted edge indices.
    pub fn sample<R: Rng + ?Sized>(&mut self, key: VertexSet, rng: &mut R) -> Vec<usize> {
        let mut id = self.ensure(key);
        let mut edges = Vec::new();
        loop {
            let node = &self.nodes[id as usize];
            if node.vertex == LEAF {
                break;
            }
            let x = node.vertex as usize;
            let u = T::of(rng.random::<f64>());
            let c0 = node.unmatched_child;
            let mut acc = (self.vertex_w[x] + self.nodes[c0 as usize].log_z - node.log_z).exp();
            let mut next = c0;
            if u >= acc {
                let start = node.terms_start as usize;
                let terms = &self.terms[start..start + node.terms_len as usize];
                // falls back to the last term when rounding leaves u >= total
                for (k, &(e, c)) in terms.iter().enumerate() {
                    acc = acc + (self.edge_w[e as usize] + self.nodes[c as usize].log_z - node.log_z).exp();
                    if u < acc || k + 1 == terms.len() {
                        edges.push(e as usize);
                        next = c;
                        break;
                    }
                }
            }
            id = next;
        }
        edges.sort_unstable();
        edges
    }
}

fn lowest_vertex(key: &[u64]) -> Option<usize> {
    key.iter()
        .enumerate()
        .find(|(_, &w)| w != 0)
        .map(|(i, &w)| i * 64 + w.trailing_zeros() as usize)
}
