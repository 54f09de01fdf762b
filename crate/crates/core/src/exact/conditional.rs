//! Gibbs measures conditioned on a boundary assignment.
//!
//! For an edge region `F` with outer boundary `∂F`, the conditional measure
//! lives on matchings of `(V, F ∪ ∂F)` that agree with the assignment on
//! `∂F`. It is computed by graph surgery: endpoints of forced boundary
//! dimers are deleted, all other boundary edges are dropped, and the free
//! engine runs on what is left of `F`.

use serde::{Deserialize, Serialize};

use crate::disorder::DisorderSample;
use crate::error::{Error, Result};
use crate::graph::{Restriction, WeightedGraph};
use crate::scalar::Scalar;

use super::recursion::Recursion;
use super::{summary_of, GibbsSummary};

/// Admissible 0/1 assignment on the outer edge boundary of a region.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryCondition {
    region: Vec<usize>,
    boundary: Vec<usize>,
    /// Aligned with `boundary`.
    assignment: Vec<bool>,
}

impl BoundaryCondition {
    /// Assignment given as `(boundary edge, value)` pairs; must cover `∂F`
    /// exactly.
    pub fn new(g: &WeightedGraph, region: &[usize], assignment: &[(usize, bool)]) -> Result<Self> {
        let region = normalize_region(g, region)?;
        let boundary = g.edge_boundary(&region);
        let mut values = vec![None; boundary.len()];
        for &(e, v) in assignment {
            let k = boundary
                .binary_search(&e)
                .map_err(|_| Error::validation("boundary", format!("e{e} is not on the region boundary")))?;
            values[k] = Some(v);
        }
        let assignment = values
            .into_iter()
            .zip(&boundary)
            .map(|(v, e)| v.ok_or_else(|| Error::validation("boundary", format!("no value for boundary edge e{e}"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(BoundaryCondition {
            region,
            boundary,
            assignment,
        })
    }

    pub fn from_fn(g: &WeightedGraph, region: &[usize], f: impl Fn(usize) -> bool) -> Result<Self> {
        let region = normalize_region(g, region)?;
        let boundary = g.edge_boundary(&region);
        let assignment = boundary.iter().map(|&e| f(e)).collect();
        Ok(BoundaryCondition {
            region,
            boundary,
            assignment,
        })
    }

    /// Whole edge set as the region; no boundary.
    pub fn free(g: &WeightedGraph) -> Self {
        let region: Vec<usize> = (0..g.edge_count()).collect();
        BoundaryCondition {
            region,
            boundary: Vec::new(),
            assignment: Vec::new(),
        }
    }

    /// Every boundary edge absent.
    pub fn all_zero(g: &WeightedGraph, region: &[usize]) -> Result<Self> {
        Self::from_fn(g, region, |_| false)
    }

    /// Boundary edges added greedily in index order while they stay disjoint;
    /// the result is a maximal admissible assignment.
    pub fn greedy_maximal(g: &WeightedGraph, region: &[usize]) -> Result<Self> {
        let mut bc = Self::all_zero(g, region)?;
        let mut used = vec![false; g.vertex_count()];
        for (k, &e) in bc.boundary.iter().enumerate() {
            let (u, v) = g.endpoints(e);
            if !used[u] && !used[v] {
                used[u] = true;
                used[v] = true;
                bc.assignment[k] = true;
            }
        }
        Ok(bc)
    }

    pub fn region(&self) -> &[usize] {
        &self.region
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn assignment(&self) -> &[bool] {
        &self.assignment
    }

    pub fn value(&self, e: usize) -> Option<bool> {
        self.boundary.binary_search(&e).ok().map(|k| self.assignment[k])
    }

    /// Boundary edges assigned 1.
    pub fn forced_edges(&self) -> Vec<usize> {
        self.boundary
            .iter()
            .zip(&self.assignment)
            .filter_map(|(&e, &v)| v.then_some(e))
            .collect()
    }

    /// The forced boundary edges form a matching.
    pub fn is_admissible(&self, g: &WeightedGraph) -> bool {
        let mut used = vec![false; g.vertex_count()];
        for e in self.forced_edges() {
            let (u, v) = g.endpoints(e);
            if used[u] || used[v] {
                return false;
            }
            used[u] = true;
            used[v] = true;
        }
        true
    }

    pub fn validate(&self, g: &WeightedGraph) -> Result<()> {
        if self.region.iter().any(|&e| e >= g.edge_count()) || self.boundary != g.edge_boundary(&self.region) {
            return Err(Error::validation("boundary", "does not match the graph's region boundary"));
        }
        if !self.is_admissible(g) {
            return Err(Error::Inadmissible(
                "forced boundary edges share a vertex".into(),
            ));
        }
        Ok(())
    }
}

fn normalize_region(g: &WeightedGraph, region: &[usize]) -> Result<Vec<usize>> {
    let mut r = region.to_vec();
    r.sort_unstable();
    r.dedup();
    if let Some(&e) = r.iter().find(|&&e| e >= g.edge_count()) {
        return Err(Error::validation("region", format!("e{e} out of range")));
    }
    Ok(r)
}

/// Result of the surgery for one boundary condition.
#[derive(Debug, Clone)]
pub struct ConditionalRegion {
    /// Free part: vertices touched by `F` minus blocked ones, and the `F`
    /// edges between them.
    pub free: Restriction,
    pub forced: Vec<usize>,
    /// Endpoints of forced edges.
    pub blocked: Vec<bool>,
    /// Vertices outside the free part that are not blocked; always unmatched.
    pub idle: Vec<usize>,
}

impl ConditionalRegion {
    pub fn new(g: &WeightedGraph, bc: &BoundaryCondition) -> Result<Self> {
        bc.validate(g)?;
        let forced = bc.forced_edges();
        let mut blocked = vec![false; g.vertex_count()];
        for &e in &forced {
            let (u, v) = g.endpoints(e);
            blocked[u] = true;
            blocked[v] = true;
        }
        let mut vertex_mask = vec![false; g.vertex_count()];
        let mut edge_mask = vec![false; g.edge_count()];
        for &e in bc.region() {
            let (u, v) = g.endpoints(e);
            if !blocked[u] {
                vertex_mask[u] = true;
            }
            if !blocked[v] {
                vertex_mask[v] = true;
            }
            if !blocked[u] && !blocked[v] {
                edge_mask[e] = true;
            }
        }
        let idle = (0..g.vertex_count())
            .filter(|&x| !vertex_mask[x] && !blocked[x])
            .collect();
        Ok(ConditionalRegion {
            free: Restriction::from_masks(g, &vertex_mask, &edge_mask),
            forced,
            blocked,
            idle,
        })
    }

    /// `log` of the weight contributed by forced dimers and idle monomers.
    pub fn log_offset<T: Scalar>(&self, s: &DisorderSample<T>) -> T {
        let forced: T = self.forced.iter().map(|&e| s.edge_weights[e]).sum();
        let idle: T = self.idle.iter().map(|&x| s.vertex_weights[x]).sum();
        forced + idle
    }

    /// Lifts a matching of the free part to parent edge indices, adding the
    /// forced boundary dimers.
    pub fn lift(&self, local_edges: &[usize]) -> Vec<usize> {
        let mut out: Vec<usize> = local_edges.iter().map(|&e| self.free.edge_map[e]).collect();
        out.extend(&self.forced);
        out.sort_unstable();
        out
    }
}

/// Gibbs quantities of the conditional measure on `(V, F ∪ ∂F)`. Marginals
/// are indexed by the parent graph: forced edges have marginal 1, edges
/// outside `F` that are not forced have 0, and so on.
pub fn conditional_summary<T: Scalar>(
    g: &WeightedGraph,
    s: &DisorderSample<T>,
    bc: &BoundaryCondition,
) -> Result<GibbsSummary<T>> {
    s.check_graph(g)?;
    let region = ConditionalRegion::new(g, bc)?;
    let local_s = s.restrict(&region.free);
    let mut r = Recursion::new(&region.free.graph, &local_s)?;
    let full = r.full_set();
    let local = summary_of(&mut r, full);

    let mut edge_marginals = vec![T::zero(); g.edge_count()];
    for (k, &e) in region.free.edge_map.iter().enumerate() {
        edge_marginals[e] = local.edge_marginals[k];
    }
    for &e in &region.forced {
        edge_marginals[e] = T::one();
    }
    let mut vertex_unmatched = vec![T::zero(); g.vertex_count()];
    for (k, &x) in region.free.vertex_map.iter().enumerate() {
        vertex_unmatched[x] = local.vertex_unmatched[k];
    }
    for &x in &region.idle {
        vertex_unmatched[x] = T::one();
    }
    Ok(GibbsSummary {
        log_z: local.log_z + region.log_offset(s),
        edge_marginals,
        vertex_unmatched,
        dimer_mean: local.dimer_mean + T::from_usize(region.forced.len()).unwrap(),
        dimer_gibbs_variance: local.dimer_gibbs_variance,
    })
}
