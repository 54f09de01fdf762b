//! Locality experiments: how much of a Gibbs quantity is determined by a
//! ball around the site.

use serde::{Deserialize, Serialize};

use crate::coupling::disagreement_probability;
use crate::disorder::resample_subset;
use crate::error::{Error, Result};
use crate::exact::{conditional_summary, log_partition, BoundaryCondition, Recursion};
use crate::graph::{Restriction, SiteIndex, WeightedGraph};
use crate::seed::derive_seed;
use crate::stats::{exp_fit, mean, non_increasing_within, std_error, strictly_decreasing, ExpFit, FIT_FLOOR};

use super::{map_replicas, target_edge, ExperimentConfig, TAG_CHAIN, TAG_RESAMPLE};

/// One row of a decay CSV: `(R, mean, stderr, n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    #[serde(rename = "R")]
    pub r: usize,
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayTable {
    pub edge: usize,
    pub rows: Vec<DecayRow>,
    pub fit: Option<ExpFit>,
    /// Why no fit was produced, if none was.
    pub fit_error: Option<String>,
}

impl DecayTable {
    fn new(edge: usize, rows: Vec<DecayRow>) -> Self {
        let table: Vec<(f64, f64)> = rows.iter().map(|r| (r.r as f64, r.mean)).collect();
        let (fit, fit_error) = match exp_fit(&table, FIT_FLOOR) {
            Ok(f) => (Some(f), None),
            Err(e) => (None, Some(e.to_string())),
        };
        DecayTable {
            edge,
            rows,
            fit,
            fit_error,
        }
    }

    pub fn means(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.mean).collect()
    }

    pub fn strictly_decreasing(&self) -> bool {
        strictly_decreasing(&self.means())
    }

    /// Non-increasing up to `z` combined standard errors per step.
    pub fn decreasing_within(&self, z: f64) -> bool {
        let se: Vec<f64> = self.rows.iter().map(|r| r.stderr).collect();
        non_increasing_within(&self.means(), &se, z)
    }
}

fn rows_from(columns: &[usize], per_replica: &[Vec<f64>]) -> Vec<DecayRow> {
    columns
        .iter()
        .enumerate()
        .map(|(k, &r)| {
            let xs: Vec<f64> = per_replica.iter().map(|v| v[k]).collect();
            DecayRow {
                r,
                mean: mean(&xs),
                stderr: std_error(&xs),
                n: xs.len(),
            }
        })
        .collect()
}

/// Materialized ball around an edge, with the edge's local index.
struct Ball {
    sub: Restriction,
    local_edge: usize,
    whole: bool,
}

fn balls(g: &WeightedGraph, e: usize, radii: &[usize]) -> Result<Vec<Ball>> {
    radii
        .iter()
        .map(|&r| {
            let sub = g.ball(SiteIndex::Edge(e), r)?.materialize();
            let local_edge = sub.local_edge(e).expect("the center edge lies in its ball");
            let whole = sub.graph.edge_count() == g.edge_count() && sub.graph.vertex_count() == g.vertex_count();
            Ok(Ball { sub, local_edge, whole })
        })
        .collect()
}

fn edge_prob(g: &WeightedGraph, s: &crate::DisorderSample<f64>, e: usize) -> Result<f64> {
    let mut r = Recursion::new(g, s)?;
    let log_z = r.log_z_full();
    let (x, y) = g.endpoints(e);
    Ok((r.log_z_without(&[x, y]) + s.edge_weights[e] - log_z).exp())
}

/// `E |<1_e>_G - <1_e>_{ball(e, R)}|` per radius, with a log-linear fit.
pub fn correlation_decay_curve(cfg: &ExperimentConfig) -> Result<DecayTable> {
    cfg.validate()?;
    cfg.require_exact("correlation decay")?;
    cfg.require_radii()?;
    let g = cfg.graph.build()?;
    let e = target_edge(cfg, &g)?;
    let balls = balls(&g, e, &cfg.radii)?;
    let gaps = map_replicas(cfg.threads, cfg.replicas, |i| {
        let s = cfg.sample(&g, i)?;
        let full = edge_prob(&g, &s, e)?;
        balls
            .iter()
            .map(|b| {
                if b.whole {
                    return Ok(0.0);
                }
                Ok((full - edge_prob(&b.sub.graph, &s.restrict(&b.sub), b.local_edge)?).abs())
            })
            .collect::<Result<Vec<f64>>>()
    })?;
    Ok(DecayTable::new(e, rows_from(&cfg.radii, &gaps)))
}

/// `E |<1_e 1_e'> - <1_e><1_e'>|` averaged over the edges `e'` at each
/// distance from `e`. Uses `<1_e 1_e'> = <1_e> <1_e'>_{G - x - y}`.
pub fn two_point_decay(cfg: &ExperimentConfig) -> Result<DecayTable> {
    cfg.validate()?;
    cfg.require_exact("two-point decay")?;
    if cfg.distances.is_empty() {
        return Err(Error::validation("distances", "must not be empty"));
    }
    let g = cfg.graph.build()?;
    let e = target_edge(cfg, &g)?;
    let mut shells: Vec<Vec<usize>> = Vec::new();
    for &d in &cfg.distances {
        if d == 0 {
            return Err(Error::validation("distances", "must be positive"));
        }
        let shell: Vec<usize> = (0..g.edge_count())
            .filter(|&f| g.site_distance(SiteIndex::Edge(e), SiteIndex::Edge(f)).ok() == Some(d))
            .collect();
        if shell.is_empty() {
            return Err(Error::validation("distances", format!("no edge at distance {d}")));
        }
        shells.push(shell);
    }
    let (x, y) = g.endpoints(e);
    let gaps = map_replicas(cfg.threads, cfg.replicas, |i| {
        let s = cfg.sample(&g, i)?;
        let mut r = Recursion::new(&g, &s)?;
        let full = r.full_set();
        let (p, _) = r.marginals(full);
        let without = r.set_without(&[x, y]);
        let (q, _) = r.marginals(without);
        Ok(shells
            .iter()
            .map(|shell| shell.iter().map(|&f| (p[e] * (q[f] - p[f])).abs()).sum::<f64>() / shell.len() as f64)
            .collect::<Vec<f64>>())
    })?;
    Ok(DecayTable::new(e, rows_from(&cfg.distances, &gaps)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalityRow {
    #[serde(rename = "R")]
    pub r: usize,
    pub mean: f64,
    pub stderr: f64,
    /// Mean and standard error of the fourth power of the error.
    pub mean_fourth: f64,
    pub stderr_fourth: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalityTable {
    pub edge: usize,
    pub rows: Vec<LocalityRow>,
    /// Largest `|Delta_e F| / |w_e - w_e'|` over replicas.
    pub worst_ratio: f64,
}

impl LocalityTable {
    pub fn as_decay(&self) -> DecayTable {
        DecayTable::new(
            self.edge,
            self.rows
                .iter()
                .map(|r| DecayRow {
                    r: r.r,
                    mean: r.mean,
                    stderr: r.stderr,
                    n: r.n,
                })
                .collect(),
        )
    }
}

/// Per radius, `E |Delta_e F - Delta_e F_[e,R]|` (and its fourth power)
/// where `Delta_e F = F(w) - F(w with w_e resampled)`. Also asserts
/// `|Delta_e F| <= |w_e - w_e'|` on every replica, up to rounding in the two
/// log-partition evaluations.
pub fn chatterjee_derivative_locality(cfg: &ExperimentConfig) -> Result<LocalityTable> {
    cfg.validate()?;
    cfg.require_exact("derivative locality")?;
    cfg.require_radii()?;
    let g = cfg.graph.build()?;
    let e = target_edge(cfg, &g)?;
    let balls = balls(&g, e, &cfg.radii)?;
    let site = SiteIndex::Edge(e);
    let per = map_replicas(cfg.threads, cfg.replicas, |i| {
        let s = cfg.sample(&g, i)?;
        let s2 = resample_subset(&s, &[site], derive_seed(cfg.master_seed, TAG_RESAMPLE, i as u64))?;
        let (f1, f2) = (log_partition(&g, &s)?, log_partition(&g, &s2)?);
        let delta = f1 - f2;
        let dw = (s.edge_weights[e] - s2.edge_weights[e]).abs();
        let tol = 64.0 * f64::EPSILON * (f1.abs() + f2.abs() + 1.0);
        if delta.abs() > dw + tol {
            return Err(Error::CheckFailed(format!(
                "replica {i}: |Delta_e F| = {} exceeds |w_e - w_e'| = {dw}",
                delta.abs()
            )));
        }
        let ratio = if dw > 0.0 { delta.abs() / dw } else { 0.0 };
        let errors = balls
            .iter()
            .map(|b| {
                if b.whole {
                    return Ok(0.0);
                }
                let local = s.restrict(&b.sub);
                let local2 = s2.restrict(&b.sub);
                let d_local = log_partition(&b.sub.graph, &local)? - log_partition(&b.sub.graph, &local2)?;
                Ok((delta - d_local).abs())
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok((ratio, errors))
    })?;
    let worst_ratio = per.iter().map(|p| p.0).fold(0.0, f64::max);
    let rows = cfg
        .radii
        .iter()
        .enumerate()
        .map(|(k, &r)| {
            let xs: Vec<f64> = per.iter().map(|p| p.1[k]).collect();
            let fourth: Vec<f64> = xs.iter().map(|x| x.powi(4)).collect();
            LocalityRow {
                r,
                mean: mean(&xs),
                stderr: std_error(&xs),
                mean_fourth: mean(&fourth),
                stderr_fourth: std_error(&fourth),
                n: xs.len(),
            }
        })
        .collect();
    Ok(LocalityTable { edge: e, rows, worst_ratio })
}

/// One row of a coupling CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingRow {
    #[serde(rename = "R")]
    pub r: usize,
    pub estimate: f64,
    pub stderr: f64,
    pub replicas: usize,
    pub seed: u64,
    /// Exact `|<1_e>^{η1} - <1_e>^{η2}|`; kept out of the CSV.
    #[serde(skip_serializing, default)]
    pub gap: f64,
}

/// Disagreement probability per radius between the all-zero boundary and a
/// greedy maximal boundary on `ball(e, R)`, for the disorder of replica 0.
/// `cfg.replicas` is the number of coupled draws per radius.
pub fn coupling_curve(cfg: &ExperimentConfig) -> Result<Vec<CouplingRow>> {
    cfg.validate()?;
    cfg.require_radii()?;
    let g = cfg.graph.build()?;
    let e = target_edge(cfg, &g)?;
    let s = cfg.sample(&g, 0)?;
    map_replicas(cfg.threads, cfg.radii.len(), |k| {
        let r = cfg.radii[k];
        let region = g.ball(SiteIndex::Edge(e), r)?.edges();
        let b1 = BoundaryCondition::all_zero(&g, &region)?;
        let b2 = BoundaryCondition::greedy_maximal(&g, &region)?;
        let gap = (conditional_summary(&g, &s, &b1)?.edge_marginals[e]
            - conditional_summary(&g, &s, &b2)?.edge_marginals[e])
            .abs();
        let seed = derive_seed(cfg.master_seed, TAG_CHAIN, r as u64);
        let est = disagreement_probability(&g, &s, e, r, &b1, &b2, cfg.replicas, seed)?;
        Ok(CouplingRow {
            r,
            estimate: est.estimate,
            stderr: est.stderr,
            replicas: est.replicas,
            seed,
            gap,
        })
    })
}
