//! Finite simple graphs with the geometric queries used by the model:
//! balls around sites, graph distance, volume growth and edge boundaries.

use std::collections::VecDeque;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Distance between sites in different connected components.
pub const UNREACHABLE: usize = usize::MAX;

/// A site of the graph: either a vertex or an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SiteIndex {
    Vertex(usize),
    Edge(usize),
}

impl SiteIndex {
    pub fn index(self) -> usize {
        match self {
            SiteIndex::Vertex(i) | SiteIndex::Edge(i) => i,
        }
    }
}

impl fmt::Display for SiteIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SiteIndex::Vertex(i) => write!(f, "v{i}"),
            SiteIndex::Edge(i) => write!(f, "e{i}"),
        }
    }
}

/// Column structure of a strip `P_length x H`, where `H` is a path or a cycle
/// on `rung_width` vertices. Vertex `(column, row)` has index
/// `column * rung_width + row`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StripLayout {
    pub length: usize,
    pub rung_width: usize,
    pub periodic_rung: bool,
}

impl StripLayout {
    #[inline]
    pub fn vertex(&self, column: usize, row: usize) -> usize {
        column * self.rung_width + row
    }

    #[inline]
    pub fn column_row(&self, v: usize) -> (usize, usize) {
        (v / self.rung_width, v % self.rung_width)
    }

    /// Whether the rung carries a wrap-around edge. A 2-cycle would duplicate
    /// the path edge, so wrapping needs at least three rows.
    pub fn has_wrap(&self) -> bool {
        self.periodic_rung && self.rung_width >= 3
    }
}

/// Finite simple graph with dense vertex and edge indices.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    vertex_count: usize,
    edges: Vec<(usize, usize)>,
    /// `adjacency[x]` lists `(neighbor, edge index)` in edge-index order.
    adjacency: Vec<Vec<(usize, usize)>>,
    max_degree: usize,
    strip: Option<StripLayout>,
}

impl WeightedGraph {
    /// Builds a graph from an edge list, rejecting self-loops, duplicates and
    /// out-of-range endpoints. Endpoints of each edge are stored as `(min, max)`.
    pub fn from_edges(vertex_count: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut seen = rustc_hash::FxHashSet::default();
        let mut normalized = Vec::with_capacity(edges.len());
        for (k, &(u, v)) in edges.iter().enumerate() {
            if u >= vertex_count || v >= vertex_count {
                return Err(Error::validation(
                    format!("edges[{k}]"),
                    format!("endpoint out of range for {vertex_count} vertices"),
                ));
            }
            if u == v {
                return Err(Error::validation(format!("edges[{k}]"), "self-loop"));
            }
            let e = (u.min(v), u.max(v));
            if !seen.insert(e) {
                return Err(Error::validation(format!("edges[{k}]"), "duplicate edge"));
            }
            normalized.push(e);
        }
        Ok(Self::from_normalized(vertex_count, normalized))
    }

    fn from_normalized(vertex_count: usize, edges: Vec<(usize, usize)>) -> Self {
        let mut adjacency = vec![Vec::new(); vertex_count];
        for (i, &(u, v)) in edges.iter().enumerate() {
            adjacency[u].push((v, i));
            adjacency[v].push((u, i));
        }
        let max_degree = adjacency.iter().map(Vec::len).max().unwrap_or(0);
        WeightedGraph {
            vertex_count,
            edges,
            adjacency,
            max_degree,
            strip: None,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    #[inline]
    pub fn endpoints(&self, e: usize) -> (usize, usize) {
        self.edges[e]
    }

    #[inline]
    pub fn neighbors(&self, x: usize) -> &[(usize, usize)] {
        &self.adjacency[x]
    }

    pub fn degree(&self, x: usize) -> usize {
        self.adjacency[x].len()
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn strip_layout(&self) -> Option<StripLayout> {
        self.strip
    }

    /// Edge index of `{u, v}`, if present.
    pub fn find_edge(&self, u: usize, v: usize) -> Option<usize> {
        self.adjacency
            .get(u)?
            .iter()
            .find(|&&(w, _)| w == v)
            .map(|&(_, e)| e)
    }

    /// Whether two distinct edges share an endpoint.
    pub fn edges_adjacent(&self, a: usize, b: usize) -> bool {
        if a == b {
            return false;
        }
        let (x, y) = self.edges[a];
        let (u, v) = self.edges[b];
        x == u || x == v || y == u || y == v
    }

    /// Edges sharing an endpoint with `e`, excluding `e`.
    pub fn incident_edges(&self, e: usize) -> impl Iterator<Item = usize> + '_ {
        let (x, y) = self.edges[e];
        self.adjacency[x]
            .iter()
            .chain(self.adjacency[y].iter())
            .map(|&(_, f)| f)
            .filter(move |&f| f != e)
    }

    fn check_site(&self, site: SiteIndex) -> Result<()> {
        let ok = match site {
            SiteIndex::Vertex(i) => i < self.vertex_count,
            SiteIndex::Edge(i) => i < self.edges.len(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::validation("site", format!("{site} out of range")))
        }
    }

    fn site_vertices(&self, site: SiteIndex) -> Vec<usize> {
        match site {
            SiteIndex::Vertex(x) => vec![x],
            SiteIndex::Edge(e) => {
                let (x, y) = self.edges[e];
                vec![x, y]
            }
        }
    }

    /// Multi-source BFS distances, stopping after `limit` layers.
    fn bfs(&self, sources: &[usize], limit: usize) -> Vec<usize> {
        let mut dist = vec![UNREACHABLE; self.vertex_count];
        let mut queue = VecDeque::new();
        for &s in sources {
            if dist[s] != 0 {
                dist[s] = 0;
                queue.push_back(s);
            }
        }
        while let Some(x) = queue.pop_front() {
            let d = dist[x];
            if d >= limit {
                continue;
            }
            for &(y, _) in &self.adjacency[x] {
                if dist[y] == UNREACHABLE {
                    dist[y] = d + 1;
                    queue.push_back(y);
                }
            }
        }
        dist
    }

    /// Graph distance between two sites. For edges the distance is the
    /// minimum over endpoint pairs; [`UNREACHABLE`] across components.
    pub fn site_distance(&self, i: SiteIndex, j: SiteIndex) -> Result<usize> {
        self.check_site(i)?;
        self.check_site(j)?;
        let dist = self.bfs(&self.site_vertices(i), UNREACHABLE);
        Ok(self
            .site_vertices(j)
            .into_iter()
            .map(|v| dist[v])
            .min()
            .unwrap_or(UNREACHABLE))
    }

    /// Induced subgraph on every vertex within distance `radius` of the
    /// center (of either endpoint, for an edge center).
    pub fn ball(&self, center: SiteIndex, radius: usize) -> Result<SubgraphView<'_>> {
        self.check_site(center)?;
        let dist = self.bfs(&self.site_vertices(center), radius);
        let mask = dist.iter().map(|&d| d <= radius).collect();
        Ok(SubgraphView::induced(self, mask))
    }

    /// `max_x |V(ball(x, radius))|`.
    pub fn volume_growth(&self, radius: usize) -> usize {
        (0..self.vertex_count)
            .map(|x| {
                self.bfs(&[x], radius)
                    .iter()
                    .filter(|&&d| d <= radius)
                    .count()
            })
            .max()
            .unwrap_or(0)
    }

    /// Largest finite eccentricity, or `None` when the graph is disconnected.
    pub fn diameter(&self) -> Option<usize> {
        let mut diam = 0;
        for x in 0..self.vertex_count {
            let dist = self.bfs(&[x], UNREACHABLE);
            let ecc = *dist.iter().max()?;
            if ecc == UNREACHABLE {
                return None;
            }
            diam = diam.max(ecc);
        }
        Some(diam)
    }

    /// Outer edge boundary: edges outside `region` sharing a vertex with
    /// some edge of `region`. Returned sorted.
    pub fn edge_boundary(&self, region: &[usize]) -> Vec<usize> {
        let mut in_region = vec![false; self.edges.len()];
        for &e in region {
            in_region[e] = true;
        }
        let mut mark = vec![false; self.edges.len()];
        for &e in region {
            for f in self.incident_edges(e) {
                if !in_region[f] {
                    mark[f] = true;
                }
            }
        }
        mark.iter()
            .enumerate()
            .filter_map(|(f, &m)| m.then_some(f))
            .collect()
    }

    /// Induced subgraph on the vertices flagged in `mask`.
    pub fn induced(&self, mask: Vec<bool>) -> SubgraphView<'_> {
        SubgraphView::induced(self, mask)
    }

    /// Number of connected components.
    pub fn component_count(&self) -> usize {
        let mut seen = vec![false; self.vertex_count];
        let mut count = 0;
        for s in 0..self.vertex_count {
            if seen[s] {
                continue;
            }
            count += 1;
            for (v, d) in self.bfs(&[s], UNREACHABLE).into_iter().enumerate() {
                if d != UNREACHABLE {
                    seen[v] = true;
                }
            }
        }
        count
    }

    /// Disjoint union; vertices and edges of `other` are shifted past ours.
    pub fn disjoint_union(&self, other: &WeightedGraph) -> WeightedGraph {
        let n = self.vertex_count;
        let mut edges = self.edges.clone();
        edges.extend(other.edges.iter().map(|&(u, v)| (u + n, v + n)));
        Self::from_normalized(n + other.vertex_count, edges)
    }

    pub fn to_json(&self) -> GraphJson {
        GraphJson {
            vertices: self.vertex_count,
            edges: self.edges.iter().map(|&(u, v)| [u, v]).collect(),
        }
    }

    pub fn from_json(json: &GraphJson) -> Result<Self> {
        let edges: Vec<_> = json.edges.iter().map(|e| (e[0], e[1])).collect();
        Self::from_edges(json.vertices, &edges)
    }
}

/// JSON form `{"vertices": n, "edges": [[u, v], ...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphJson {
    pub vertices: usize,
    pub edges: Vec<[usize; 2]>,
}

/// Path `P_n` on vertices `0..n`.
pub fn build_path(n: usize) -> Result<WeightedGraph> {
    if n == 0 {
        return Err(Error::validation("n", "path needs at least one vertex"));
    }
    build_strip(n, 1, false)
}

/// Cycle `C_n`, `n >= 3`.
pub fn build_cycle(n: usize) -> Result<WeightedGraph> {
    if n < 3 {
        return Err(Error::validation("n", "cycle needs at least three vertices"));
    }
    let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    WeightedGraph::from_edges(n, &edges)
}

/// Cartesian product `P_length x H` with `H` a path (or a cycle when
/// `periodic_rung`) on `rung_width` vertices. Column structure is kept for
/// the transfer-matrix engine.
pub fn build_strip(length: usize, rung_width: usize, periodic_rung: bool) -> Result<WeightedGraph> {
    if length == 0 {
        return Err(Error::validation("length", "must be at least 1"));
    }
    if rung_width == 0 {
        return Err(Error::validation("rung_width", "must be at least 1"));
    }
    let layout = StripLayout {
        length,
        rung_width,
        periodic_rung,
    };
    let mut edges = Vec::new();
    for c in 0..length {
        for r in 0..rung_width.saturating_sub(1) {
            edges.push((layout.vertex(c, r), layout.vertex(c, r + 1)));
        }
        if layout.has_wrap() {
            edges.push((layout.vertex(c, 0), layout.vertex(c, rung_width - 1)));
        }
        if c + 1 < length {
            for r in 0..rung_width {
                edges.push((layout.vertex(c, r), layout.vertex(c + 1, r)));
            }
        }
    }
    let mut g = WeightedGraph::from_normalized(length * rung_width, edges);
    g.strip = Some(layout);
    Ok(g)
}

/// `width x height` square lattice with 4-neighbor edges, wrapping in both
/// directions when `periodic`. Vertex `(x, y)` has index `y * width + x`.
///
/// The open lattice is the strip with `height` columns of `width` rows and
/// keeps that layout.
pub fn build_grid(width: usize, height: usize, periodic: bool) -> Result<WeightedGraph> {
    if width == 0 {
        return Err(Error::validation("width", "must be at least 1"));
    }
    if height == 0 {
        return Err(Error::validation("height", "must be at least 1"));
    }
    if !periodic {
        return build_strip(height, width, false);
    }
    let idx = |x: usize, y: usize| y * width + x;
    let mut edges = rustc_hash::FxHashSet::default();
    let mut ordered = Vec::new();
    for y in 0..height {
        for x in 0..width {
            for (nx, ny) in [((x + 1) % width, y), (x, (y + 1) % height)] {
                let (a, b) = (idx(x, y), idx(nx, ny));
                if a != b && edges.insert((a.min(b), a.max(b))) {
                    ordered.push((a.min(b), a.max(b)));
                }
            }
        }
    }
    Ok(WeightedGraph::from_normalized(width * height, ordered))
}

/// Read-only induced subgraph of a parent graph.
#[derive(Debug, Clone)]
pub struct SubgraphView<'g> {
    parent: &'g WeightedGraph,
    vertex_mask: Vec<bool>,
    edge_mask: Vec<bool>,
}

impl<'g> SubgraphView<'g> {
    fn induced(parent: &'g WeightedGraph, vertex_mask: Vec<bool>) -> Self {
        let edge_mask = parent
            .edges
            .iter()
            .map(|&(u, v)| vertex_mask[u] && vertex_mask[v])
            .collect();
        SubgraphView {
            parent,
            vertex_mask,
            edge_mask,
        }
    }

    pub fn parent(&self) -> &'g WeightedGraph {
        self.parent
    }

    pub fn contains_vertex(&self, x: usize) -> bool {
        self.vertex_mask[x]
    }

    pub fn contains_edge(&self, e: usize) -> bool {
        self.edge_mask[e]
    }

    pub fn vertex_mask(&self) -> &[bool] {
        &self.vertex_mask
    }

    pub fn edge_mask(&self) -> &[bool] {
        &self.edge_mask
    }

    pub fn vertices(&self) -> Vec<usize> {
        mask_indices(&self.vertex_mask)
    }

    pub fn edges(&self) -> Vec<usize> {
        mask_indices(&self.edge_mask)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_mask.iter().filter(|&&b| b).count()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_mask.iter().filter(|&&b| b).count()
    }

    /// Standalone copy with vertices and edges renumbered in parent order.
    /// A view covering the whole parent yields an identical graph.
    pub fn materialize(&self) -> Restriction {
        Restriction::from_masks(self.parent, &self.vertex_mask, &self.edge_mask)
    }
}

/// A materialized subgraph with maps from its indices back to the parent.
#[derive(Debug, Clone)]
pub struct Restriction {
    pub graph: WeightedGraph,
    /// `vertex_map[new] = parent vertex`.
    pub vertex_map: Vec<usize>,
    /// `edge_map[new] = parent edge`.
    pub edge_map: Vec<usize>,
}

impl Restriction {
    /// Subgraph of `parent` keeping the flagged vertices and edges. Every kept
    /// edge must have both endpoints kept.
    pub fn from_masks(parent: &WeightedGraph, vertex_mask: &[bool], edge_mask: &[bool]) -> Restriction {
        let vertex_map = mask_indices(vertex_mask);
        let mut new_index = vec![usize::MAX; parent.vertex_count];
        for (i, &v) in vertex_map.iter().enumerate() {
            new_index[v] = i;
        }
        let edge_map = mask_indices(edge_mask);
        let edges = edge_map
            .iter()
            .map(|&e| {
                let (u, v) = parent.edges[e];
                debug_assert!(vertex_mask[u] && vertex_mask[v]);
                (new_index[u], new_index[v])
            })
            .collect();
        let mut graph = WeightedGraph::from_normalized(vertex_map.len(), edges);
        if vertex_map.len() == parent.vertex_count && edge_map.len() == parent.edge_count() {
            graph.strip = parent.strip;
        }
        Restriction {
            graph,
            vertex_map,
            edge_map,
        }
    }

    /// Local index of a parent edge, if kept.
    pub fn local_edge(&self, parent_edge: usize) -> Option<usize> {
        self.edge_map.binary_search(&parent_edge).ok()
    }

    pub fn local_vertex(&self, parent_vertex: usize) -> Option<usize> {
        self.vertex_map.binary_search(&parent_vertex).ok()
    }

    pub fn local_site(&self, site: SiteIndex) -> Option<SiteIndex> {
        match site {
            SiteIndex::Vertex(x) => self.local_vertex(x).map(SiteIndex::Vertex),
            SiteIndex::Edge(e) => self.local_edge(e).map(SiteIndex::Edge),
        }
    }
}

fn mask_indices(mask: &[bool]) -> Vec<usize> {
    mask.iter()
        .enumerate()
        .filter_map(|(i, &b)| b.then_some(i))
        .collect()
}

/// Graph shorthand accepted on the command line: `grid:WxH`, `torus:WxH`,
/// `strip:LxW`, `cylinder:LxW`, `cycle:N`, `path:N`, or a path to a JSON
/// graph file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum GraphSpec {
    Grid { width: usize, height: usize, periodic: bool },
    Strip { length: usize, rung_width: usize, periodic_rung: bool },
    Cycle(usize),
    Path(usize),
    Json(String),
}

impl GraphSpec {
    pub fn build(&self) -> Result<WeightedGraph> {
        match self {
            GraphSpec::Grid {
                width,
                height,
                periodic,
            } => build_grid(*width, *height, *periodic),
            GraphSpec::Strip {
                length,
                rung_width,
                periodic_rung,
            } => build_strip(*length, *rung_width, *periodic_rung),
            GraphSpec::Cycle(n) => build_cycle(*n),
            GraphSpec::Path(n) => build_path(*n),
            GraphSpec::Json(path) => {
                let text = std::fs::read_to_string(Path::new(path))?;
                let json: GraphJson = serde_json::from_str(&text)?;
                WeightedGraph::from_json(&json)
            }
        }
    }
}

fn parse_dims(field: &str, names: [&str; 2], text: &str) -> Result<(usize, usize)> {
    let (a, b) = text
        .split_once(['x', 'X'])
        .ok_or_else(|| Error::validation(field, format!("expected AxB, got {text:?}")))?;
    let a = parse_positive(&format!("{field}.{}", names[0]), a)?;
    let b = parse_positive(&format!("{field}.{}", names[1]), b)?;
    Ok((a, b))
}

fn parse_positive(field: &str, text: &str) -> Result<usize> {
    let v: usize = text
        .trim()
        .parse()
        .map_err(|_| Error::validation(field, format!("not an integer: {text:?}")))?;
    if v == 0 {
        return Err(Error::validation(field, "must be at least 1"));
    }
    Ok(v)
}

impl FromStr for GraphSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let Some((kind, rest)) = s.split_once(':') else {
            if s.ends_with(".json") {
                return Ok(GraphSpec::Json(s.to_string()));
            }
            return Err(Error::validation("graph", format!("unknown graph spec {s:?}")));
        };
        match kind {
            "grid" | "torus" => {
                let (width, height) = parse_dims("graph.grid", ["width", "height"], rest)?;
                Ok(GraphSpec::Grid {
                    width,
                    height,
                    periodic: kind == "torus",
                })
            }
            "strip" | "cylinder" => {
                let (length, rung_width) = parse_dims("graph.strip", ["length", "rung_width"], rest)?;
                Ok(GraphSpec::Strip {
                    length,
                    rung_width,
                    periodic_rung: kind == "cylinder",
                })
            }
            "cycle" => {
                let n = parse_positive("graph.cycle", rest)?;
                if n < 3 {
                    return Err(Error::validation("graph.cycle", "needs at least 3 vertices"));
                }
                Ok(GraphSpec::Cycle(n))
            }
            "path" => Ok(GraphSpec::Path(parse_positive("graph.path", rest)?)),
            "json" => Ok(GraphSpec::Json(rest.to_string())),
            _ => Err(Error::validation("graph", format!("unknown graph kind {kind:?}"))),
        }
    }
}

impl fmt::Display for GraphSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphSpec::Grid {
                width,
                height,
                periodic,
            } => write!(f, "{}:{width}x{height}", if *periodic { "torus" } else { "grid" }),
            GraphSpec::Strip {
                length,
                rung_width,
                periodic_rung,
            } => write!(
                f,
                "{}:{length}x{rung_width}",
                if *periodic_rung { "cylinder" } else { "strip" }
            ),
            GraphSpec::Cycle(n) => write!(f, "cycle:{n}"),
            GraphSpec::Path(n) => write!(f, "path:{n}"),
            GraphSpec::Json(p) => write!(f, "json:{p}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p5() -> WeightedGraph {
        build_path(5).unwrap()
    }

    #[test]
    fn grid_counts() {
        let c4 = build_grid(2, 2, false).unwrap();
        assert_eq!((c4.vertex_count(), c4.edge_count()), (4, 4));
        assert!((0..4).all(|x| c4.degree(x) == 2));
        let p = build_grid(1, 5, false).unwrap();
        assert_eq!((p.vertex_count(), p.edge_count()), (5, 4));
        let g = build_grid(3, 3, false).unwrap();
        assert_eq!((g.vertex_count(), g.edge_count()), (9, 12));
        assert_eq!(g.max_degree(), 4);
        let t = build_grid(4, 4, true).unwrap();
        assert_eq!((t.vertex_count(), t.edge_count()), (16, 32));
        assert!((0..16).all(|x| t.degree(x) == 4));
    }

    #[test]
    fn grid_index_is_row_major() {
        let g = build_grid(4, 3, false).unwrap();
        // (x=1, y=2) and its right neighbor (x=2, y=2)
        assert!(g.find_edge(9, 10).is_some());
        // vertical neighbor (x=1, y=1)
        assert!(g.find_edge(5, 9).is_some());
        assert!(g.find_edge(3, 4).is_none());
    }

    #[test]
    fn strip_counts() {
        let p = build_strip(7, 1, false).unwrap();
        assert_eq!((p.vertex_count(), p.edge_count()), (7, 6));
        let c4 = build_strip(2, 2, false).unwrap();
        assert_eq!((c4.vertex_count(), c4.edge_count()), (4, 4));
        let cyl = build_strip(10, 4, true).unwrap();
        assert_eq!((cyl.vertex_count(), cyl.edge_count()), (40, 76));
        let two = build_strip(3, 2, true).unwrap();
        assert_eq!(two.edge_count(), 3 + 4);
    }

    #[test]
    fn ball_examples() {
        let g = p5();
        let b = g.ball(SiteIndex::Vertex(2), 0).unwrap();
        assert_eq!(b.vertices(), vec![2]);
        assert!(b.edges().is_empty());

        let e = g.find_edge(1, 2).unwrap();
        let b = g.ball(SiteIndex::Edge(e), 0).unwrap();
        assert_eq!(b.vertices(), vec![1, 2]);
        assert_eq!(b.edges(), vec![e]);

        let b = g.ball(SiteIndex::Vertex(2), 1).unwrap();
        assert_eq!(b.vertices(), vec![1, 2, 3]);
        let ends: Vec<_> = b.edges().iter().map(|&e| g.endpoints(e)).collect();
        assert_eq!(ends, vec![(1, 2), (2, 3)]);
    }

    #[test]
    fn distances() {
        let g = p5();
        assert_eq!(g.site_distance(SiteIndex::Vertex(3), SiteIndex::Vertex(3)).unwrap(), 0);
        assert_eq!(g.site_distance(SiteIndex::Vertex(0), SiteIndex::Vertex(4)).unwrap(), 4);
        let a = g.find_edge(0, 1).unwrap();
        let b = g.find_edge(3, 4).unwrap();
        assert_eq!(g.site_distance(SiteIndex::Edge(a), SiteIndex::Edge(b)).unwrap(), 2);
        assert_eq!(g.site_distance(SiteIndex::Edge(a), SiteIndex::Vertex(4)).unwrap(), 3);

        let two = g.disjoint_union(&g);
        assert_eq!(
            two.site_distance(SiteIndex::Vertex(0), SiteIndex::Vertex(7)).unwrap(),
            UNREACHABLE
        );
        assert_eq!(two.diameter(), None);
        assert_eq!(two.component_count(), 2);
        assert!(g.site_distance(SiteIndex::Vertex(9), SiteIndex::Vertex(0)).is_err());
    }

    #[test]
    fn volume_growth_examples() {
        let g = p5();
        assert_eq!(g.volume_growth(0), 1);
        assert_eq!(g.volume_growth(1), 3);
        let c4 = build_cycle(4).unwrap();
        assert_eq!(c4.volume_growth(2), 4);
        assert_eq!(c4.diameter(), Some(2));
    }

    #[test]
    fn edge_boundary_examples() {
        let g = p5();
        let all: Vec<_> = (0..g.edge_count()).collect();
        assert!(g.edge_boundary(&all).is_empty());
        let e = g.find_edge(1, 2).unwrap();
        let expect = vec![g.find_edge(0, 1).unwrap(), g.find_edge(2, 3).unwrap()];
        let mut got = g.edge_boundary(&[e]);
        got.sort();
        let mut expect = expect;
        expect.sort();
        assert_eq!(got, expect);

        let c4 = build_cycle(4).unwrap();
        let b = c4.edge_boundary(&[0]);
        assert_eq!(b.len(), 2);
        assert!(b.iter().all(|&f| c4.edges_adjacent(0, f)));
    }

    #[test]
    fn rejects_bad_edges() {
        assert!(WeightedGraph::from_edges(3, &[(0, 0)]).is_err());
        assert!(WeightedGraph::from_edges(3, &[(0, 1), (1, 0)]).is_err());
        assert!(WeightedGraph::from_edges(3, &[(0, 3)]).is_err());
    }

    #[test]
    fn full_ball_materializes_identically() {
        let g = build_grid(3, 4, false).unwrap();
        let b = g.ball(SiteIndex::Vertex(0), 100).unwrap();
        let r = b.materialize();
        assert_eq!(r.graph, g);
    }

    #[test]
    fn spec_strings() {
        assert_eq!(
            "grid:3x4".parse::<GraphSpec>().unwrap(),
            GraphSpec::Grid { width: 3, height: 4, periodic: false }
        );
        assert_eq!(
            "strip:100x4".parse::<GraphSpec>().unwrap(),
            GraphSpec::Strip { length: 100, rung_width: 4, periodic_rung: false }
        );
        assert_eq!("path:3".parse::<GraphSpec>().unwrap(), GraphSpec::Path(3));
        assert_eq!("cycle:5".parse::<GraphSpec>().unwrap(), GraphSpec::Cycle(5));
        let err = "grid:0x5".parse::<GraphSpec>().unwrap_err();
        assert!(err.to_string().contains("graph.grid.width"), "{err}");
        assert!("blob:3".parse::<GraphSpec>().is_err());
        for s in ["grid:3x4", "torus:5x5", "strip:10x3", "cylinder:10x4", "cycle:7", "path:2"] {
            assert_eq!(s.parse::<GraphSpec>().unwrap().to_string(), s);
        }
    }

    #[test]
    fn json_round_trip() {
        let g = build_grid(3, 2, false).unwrap();
        let text = serde_json::to_string(&g.to_json()).unwrap();
        assert!(text.starts_with("{\"vertices\":6,\"edges\":[["));
        let back = WeightedGraph::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back.edges(), g.edges());
    }
}
