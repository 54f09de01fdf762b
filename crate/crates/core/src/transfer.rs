//! Transfer-matrix engine for strips `P_length x H`.
//!
//! The column operator is applied one site at a time. The state is a bitmask
//! over the rung: before site `(c, r)` is processed, bits `r..w` describe
//! column `c` (1 = vertex already covered by a dimer from the left or from
//! above) and bits `0..r` describe column `c + 1` (1 = covered by a dimer
//! crossing from column `c`). Each edge is decided at exactly one site, which
//! makes forced-edge passes and forward/backward marginals straightforward.

use crate::disorder::DisorderSample;
use crate::error::{Error, Result};
use crate::exact::GibbsSummary;
use crate::graph::{StripLayout, WeightedGraph};
use crate::scalar::Scalar;

/// Widest rung accepted (2^20 states).
pub const MAX_RUNG_WIDTH: usize = 20;

/// How the state vector is renormalized along the sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rescaling {
    /// Divide by the max entry after every site and shift option weights by
    /// their max, accumulating both in log space.
    EverySite,
    /// Raw products; overflows on long strips or large weights.
    Never,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Move {
    /// Vertex already covered.
    Covered,
    Monomer,
    /// Dimer to the same row of the next column.
    Rail,
    /// Dimer to the next row of the same column.
    Rung,
    /// Wrap-around dimer from row 0 to the last row.
    Wrap,
}

#[derive(Debug, Clone, Copy)]
struct Site {
    vertex: usize,
    row: usize,
    rail: Option<usize>,
    rung: Option<usize>,
    wrap: Option<usize>,
}

/// Where an edge is decided: site position and move.
fn locate(sites: &[Site], e: usize) -> Option<(usize, Move)> {
    sites.iter().enumerate().find_map(|(k, s)| {
        if s.rail == Some(e) {
            Some((k, Move::Rail))
        } else if s.rung == Some(e) {
            Some((k, Move::Rung))
        } else if s.wrap == Some(e) {
            Some((k, Move::Wrap))
        } else {
            None
        }
    })
}

fn build_sites(g: &WeightedGraph) -> Result<(StripLayout, Vec<Site>)> {
    let layout = g
        .strip_layout()
        .ok_or_else(|| Error::Structure("graph was not built as a strip".into()))?;
    let w = layout.rung_width;
    if w > MAX_RUNG_WIDTH {
        return Err(Error::Structure(format!("rung width {w} exceeds {MAX_RUNG_WIDTH}")));
    }
    let mut sites = Vec::with_capacity(g.vertex_count());
    let mut found = 0;
    for c in 0..layout.length {
        for r in 0..w {
            let v = layout.vertex(c, r);
            let lookup = |u: usize| g.find_edge(v, u);
            let rail = (c + 1 < layout.length).then(|| lookup(layout.vertex(c + 1, r))).flatten();
            let rung = (r + 1 < w).then(|| lookup(layout.vertex(c, r + 1))).flatten();
            let wrap = (r == 0 && layout.has_wrap())
                .then(|| lookup(layout.vertex(c, w - 1)))
                .flatten();
            found += [rail, rung, wrap].iter().filter(|e| e.is_some()).count();
            sites.push(Site {
                vertex: v,
                row: r,
                rail,
                rung,
                wrap,
            });
        }
    }
    if found != g.edge_count() || sites.len() != g.vertex_count() {
        return Err(Error::Structure("edge set does not match the strip layout".into()));
    }
    Ok((layout, sites))
}

/// Calls `f(move, next_state)` for every move available at `site` from `state`.
#[inline]
fn moves(site: &Site, width: usize, state: usize, mut f: impl FnMut(Move, usize)) {
    let r = site.row;
    let bit = 1 << r;
    if state & bit != 0 {
        f(Move::Covered, state & !bit);
        return;
    }
    f(Move::Monomer, state);
    if site.rail.is_some() {
        f(Move::Rail, state | bit);
    }
    if site.rung.is_some() && state & (1 << (r + 1)) == 0 {
        f(Move::Rung, state | (1 << (r + 1)));
    }
    if site.wrap.is_some() && state & (1 << (width - 1)) == 0 {
        f(Move::Wrap, state | (1 << (width - 1)));
    }
}

/// Log-weights of the moves at one site, plus the shift subtracted from them.
#[derive(Clone, Copy)]
struct MoveWeights<T> {
    monomer: T,
    rail: T,
    rung: T,
    wrap: T,
    shift: T,
}

impl<T: Scalar> MoveWeights<T> {
    fn new(site: &Site, s: &DisorderSample<T>, rescale: Rescaling) -> Self {
        let lw = |e: Option<usize>| e.map_or(T::neg_infinity(), |e| s.edge_weights[e]);
        let (monomer, rail, rung, wrap) = (s.vertex_weights[site.vertex], lw(site.rail), lw(site.rung), lw(site.wrap));
        let shift = match rescale {
            Rescaling::EverySite => monomer.max(rail).max(rung).max(wrap).max(T::zero()),
            Rescaling::Never => T::zero(),
        };
        MoveWeights {
            monomer: (monomer - shift).exp(),
            rail: (rail - shift).exp(),
            rung: (rung - shift).exp(),
            wrap: (wrap - shift).exp(),
            shift,
        }
    }

    #[inline]
    fn of(&self, m: Move) -> T {
        match m {
            // a covered vertex contributes no factor, but the shift applies to every move
            Move::Covered => (-self.shift).exp(),
            Move::Monomer => self.monomer,
            Move::Rail => self.rail,
            Move::Rung => self.rung,
            Move::Wrap => self.wrap,
        }
    }
}

fn renormalize<T: Scalar>(v: &mut [T], rescale: Rescaling) -> T {
    if rescale == Rescaling::Never {
        return T::zero();
    }
    let max = v.iter().copied().fold(T::zero(), T::max);
    if max > T::zero() {
        let inv = max.recip();
        v.iter_mut().for_each(|x| *x = *x * inv);
        max.ln()
    } else {
        T::zero()
    }
}

/// Prepared strip with its disorder sample.
pub struct StripEngine<'a, T> {
    width: usize,
    sites: Vec<Site>,
    sample: &'a DisorderSample<T>,
    weights: Vec<MoveWeights<T>>,
    rescale: Rescaling,
}

impl<'a, T: Scalar> StripEngine<'a, T> {
    pub fn new(g: &WeightedGraph, sample: &'a DisorderSample<T>) -> Result<Self> {
        Self::with_rescaling(g, sample, Rescaling::EverySite)
    }

    pub fn with_rescaling(g: &WeightedGraph, sample: &'a DisorderSample<T>, rescale: Rescaling) -> Result<Self> {
        sample.check_graph(g)?;
        let (layout, sites) = build_sites(g)?;
        let limit = Self::weight_limit();
        let widest = sample
            .edge_weights
            .iter()
            .chain(&sample.vertex_weights)
            .fold(T::zero(), |m, w| m.max(w.abs()));
        if widest > limit {
            return Err(Error::validation(
                "weights",
                format!("|weight| {widest} exceeds the transfer engine's range {limit}; use the recursion engine"),
            ));
        }
        let weights = sites.iter().map(|s| MoveWeights::new(s, sample, rescale)).collect();
        Ok(StripEngine {
            width: layout.rung_width,
            sites,
            sample,
            weights,
            rescale,
        })
    }

    /// Largest `|w|` for which per-site factors stay representable.
    pub fn weight_limit() -> T {
        T::max_value().ln() / T::of(2.0)
    }

    fn states(&self) -> usize {
        1 << self.width
    }

    /// One site of the forward sweep. With `only`, every other move is dropped.
    fn step(&self, k: usize, src: &[T], dst: &mut [T], only: Option<Move>) {
        dst.iter_mut().for_each(|x| *x = T::zero());
        let site = &self.sites[k];
        let wts = &self.weights[k];
        for (state, &a) in src.iter().enumerate() {
            if a == T::zero() {
                continue;
            }
            moves(site, self.width, state, |m, next| {
                if only.is_none_or(|o| o == m) {
                    dst[next] = dst[next] + a * wts.of(m);
                }
            });
        }
    }

    /// Sweep from site `start` with vector `init` (log scale `log_scale`).
    fn sweep_from(&self, start: usize, init: Vec<T>, log_scale: T, forced: Option<(usize, Move)>) -> T {
        let mut cur = init;
        let mut next = vec![T::zero(); self.states()];
        let mut log_scale = log_scale;
        for k in start..self.sites.len() {
            let only = forced.and_then(|(fk, m)| (fk == k).then_some(m));
            self.step(k, &cur, &mut next, only);
            std::mem::swap(&mut cur, &mut next);
            log_scale = log_scale + self.weights[k].shift + renormalize(&mut cur, self.rescale);
        }
        log_scale + cur[0].ln()
    }

    fn initial(&self) -> Vec<T> {
        let mut v = vec![T::zero(); self.states()];
        v[0] = T::one();
        v
    }

    pub fn log_partition(&self) -> T {
        self.sweep_from(0, self.initial(), T::zero(), None)
    }

    /// Forward vectors before every site, with their log scales.
    fn prefixes(&self) -> Vec<(Vec<T>, T)> {
        let mut out = Vec::with_capacity(self.sites.len() + 1);
        let mut cur = self.initial();
        let mut log_scale = T::zero();
        let mut next = vec![T::zero(); self.states()];
        for k in 0..self.sites.len() {
            out.push((cur.clone(), log_scale));
            self.step(k, &cur, &mut next, None);
            std::mem::swap(&mut cur, &mut next);
            log_scale = log_scale + self.weights[k].shift + renormalize(&mut cur, self.rescale);
        }
        out.push((cur, log_scale));
        out
    }

    /// Backward vectors after every site: `suffix[k][state]` sums completions
    /// from site `k` on.
    fn suffixes(&self) -> Vec<(Vec<T>, T)> {
        let n = self.sites.len();
        let mut out = vec![(Vec::new(), T::zero()); n + 1];
        let mut cur = vec![T::zero(); self.states()];
        cur[0] = T::one();
        let mut log_scale = T::zero();
        out[n] = (cur.clone(), log_scale);
        let mut prev = vec![T::zero(); self.states()];
        for k in (0..n).rev() {
            let site = &self.sites[k];
            let wts = &self.weights[k];
            for (state, slot) in prev.iter_mut().enumerate() {
                let mut acc = T::zero();
                moves(site, self.width, state, |m, next| acc = acc + wts.of(m) * cur[next]);
                *slot = acc;
            }
            std::mem::swap(&mut cur, &mut prev);
            log_scale = log_scale + wts.shift + renormalize(&mut cur, self.rescale);
            out[k] = (cur.clone(), log_scale);
        }
        out
    }

    /// `exp(log Z_{e forced} - log Z)`, resuming from a cached prefix vector.
    pub fn edge_marginal_with(&self, prefixes: &[(Vec<T>, T)], log_z: T, e: usize) -> Result<T> {
        let (k, m) = locate(&self.sites, e).ok_or_else(|| Error::validation("edge", format!("e{e} out of range")))?;
        let (v, scale) = &prefixes[k];
        let forced = self.sweep_from(k, v.clone(), *scale, Some((k, m)));
        Ok((forced - log_z).exp())
    }

    /// All edge marginals and vertex-unmatched marginals from a forward and a
    /// backward sweep.
    pub fn marginals(&self) -> (T, Vec<T>, Vec<T>) {
        let pre = self.prefixes();
        let suf = self.suffixes();
        let n = self.sites.len();
        let log_z = pre[n].1 + pre[n].0[0].ln();
        let mut edge = vec![T::zero(); self.sample.edge_weights.len()];
        let mut unmatched = vec![T::zero(); self.sample.vertex_weights.len()];
        for k in 0..n {
            let site = &self.sites[k];
            let wts = &self.weights[k];
            let (alpha, a_scale) = &pre[k];
            let (beta, b_scale) = &suf[k + 1];
            let mut acc = [T::zero(); 5];
            for (state, &a) in alpha.iter().enumerate() {
                if a == T::zero() {
                    continue;
                }
                moves(site, self.width, state, |m, next| {
                    acc[m as usize] = acc[m as usize] + a * wts.of(m) * beta[next];
                });
            }
            let factor = (*a_scale + *b_scale + wts.shift - log_z).exp();
            unmatched[site.vertex] = acc[Move::Monomer as usize] * factor;
            for (slot, m) in [(site.rail, Move::Rail), (site.rung, Move::Rung), (site.wrap, Move::Wrap)] {
                if let Some(e) = slot {
                    edge[e] = acc[m as usize] * factor;
                }
            }
        }
        (log_z, edge, unmatched)
    }

    /// Mean and Gibbs variance of the dimer count by forward-mode
    /// differentiation in a global edge-weight shift.
    pub fn dimer_moments(&self) -> (T, T) {
        let states = self.states();
        let mut z = self.initial();
        let mut d1 = vec![T::zero(); states];
        let mut d2 = vec![T::zero(); states];
        let mut nz = vec![T::zero(); states];
        let mut n1 = vec![T::zero(); states];
        let mut n2 = vec![T::zero(); states];
        let two = T::one() + T::one();
        for k in 0..self.sites.len() {
            let site = &self.sites[k];
            let wts = &self.weights[k];
            nz.iter_mut().chain(n1.iter_mut()).chain(n2.iter_mut()).for_each(|x| *x = T::zero());
            for state in 0..states {
                let (a, b, c) = (z[state], d1[state], d2[state]);
                if a == T::zero() {
                    continue;
                }
                moves(site, self.width, state, |m, next| {
                    let w = wts.of(m);
                    let dimer = matches!(m, Move::Rail | Move::Rung | Move::Wrap);
                    nz[next] = nz[next] + w * a;
                    if dimer {
                        n1[next] = n1[next] + w * (b + a);
                        n2[next] = n2[next] + w * (c + two * b + a);
                    } else {
                        n1[next] = n1[next] + w * b;
                        n2[next] = n2[next] + w * c;
                    }
                });
            }
            std::mem::swap(&mut z, &mut nz);
            std::mem::swap(&mut d1, &mut n1);
            std::mem::swap(&mut d2, &mut n2);
            let max = z.iter().copied().fold(T::zero(), T::max);
            if max > T::zero() {
                let inv = max.recip();
                for v in z.iter_mut().chain(d1.iter_mut()).chain(d2.iter_mut()) {
                    *v = *v * inv;
                }
            }
        }
        let mean = d1[0] / z[0];
        let second = d2[0] / z[0];
        (mean, (second - mean * mean).max(T::zero()))
    }
}

/// Exact `log Z` of a strip by column contraction.
pub fn strip_log_partition<T: Scalar>(g: &WeightedGraph, s: &DisorderSample<T>) -> Result<T> {
    Ok(StripEngine::new(g, s)?.log_partition())
}

/// `log Z` with an explicit rescaling schedule.
pub fn strip_log_partition_with<T: Scalar>(g: &WeightedGraph, s: &DisorderSample<T>, rescale: Rescaling) -> Result<T> {
    Ok(StripEngine::with_rescaling(g, s, rescale)?.log_partition())
}

/// `<1{e in M}>` on a strip.
pub fn strip_edge_marginal<T: Scalar>(g: &WeightedGraph, s: &DisorderSample<T>, e: usize) -> Result<T> {
    let engine = StripEngine::new(g, s)?;
    let pre = engine.prefixes();
    let n = pre.len() - 1;
    let log_z = pre[n].1 + pre[n].0[0].ln();
    engine.edge_marginal_with(&pre, log_z, e)
}

/// Full Gibbs summary of a strip.
pub fn strip_gibbs_summary<T: Scalar>(g: &WeightedGraph, s: &DisorderSample<T>) -> Result<GibbsSummary<T>> {
    let engine = StripEngine::new(g, s)?;
    let (log_z, edge_marginals, vertex_unmatched) = engine.marginals();
    let (dimer_mean, dimer_gibbs_variance) = engine.dimer_moments();
    Ok(GibbsSummary {
        log_z,
        edge_marginals,
        vertex_unmatched,
        dimer_mean,
        dimer_gibbs_variance,
    })
}
