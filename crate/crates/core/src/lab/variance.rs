//! Size scans: variance of the free energy and of the dimer count, and the
//! effect of truncating heavy-tailed weights.

use serde::{Deserialize, Serialize};

use crate::disorder::{truncate_weights, truncation_level};
use crate::error::{Error, Result};
use crate::exact::{gibbs_summary_with, log_partition_with};
use crate::stats::{jackknife_variance, mean, std_error};

use super::{map_replicas, resize_graph, ExperimentConfig};

fn require_sizes(cfg: &ExperimentConfig) -> Result<()> {
    if cfg.sizes.is_empty() {
        return Err(Error::validation("sizes", "must not be empty"));
    }
    Ok(())
}

/// One row of a variance-scan CSV: `(size, var, stderr, upper_bound)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarScanRow {
    pub size: usize,
    pub var: f64,
    pub stderr: f64,
    pub upper_bound: f64,
    #[serde(skip_serializing, default)]
    pub edges: usize,
    #[serde(skip_serializing, default)]
    pub vertices: usize,
}

impl VarScanRow {
    pub fn per_edge(&self) -> f64 {
        if self.edges == 0 {
            0.0
        } else {
            self.var / self.edges as f64
        }
    }
}

/// `Var(F)` per size with jackknife errors. Fails if the Efron-Stein bound
/// `Var(F) <= 2 (E w^2 |E| + E nu^2 |V|)` or the configured floor on
/// `Var(F)/|E|` is violated at any size.
pub fn variance_scan(cfg: &ExperimentConfig) -> Result<Vec<VarScanRow>> {
    cfg.validate()?;
    cfg.require_exact("the free energy")?;
    require_sizes(cfg)?;
    let mut rows = Vec::with_capacity(cfg.sizes.len());
    for &n in &cfg.sizes {
        let g = resize_graph(&cfg.graph, n)?.build()?;
        let values = map_replicas(cfg.threads, cfg.replicas, |i| log_partition_with(cfg.engine, &g, &cfg.sample(&g, i)?))?;
        let (var, stderr) = jackknife_variance(&values);
        let upper_bound = 2.0
            * (cfg.edge_law.second_moment() * g.edge_count() as f64
                + cfg.vertex_law.second_moment() * g.vertex_count() as f64);
        let row = VarScanRow {
            size: n,
            var,
            stderr,
            upper_bound,
            edges: g.edge_count(),
            vertices: g.vertex_count(),
        };
        if var > upper_bound {
            return Err(Error::CheckFailed(format!(
                "size {n}: Var(F) = {var} exceeds the Efron-Stein bound {upper_bound}"
            )));
        }
        if row.per_edge() < cfg.var_floor {
            return Err(Error::CheckFailed(format!(
                "size {n}: Var(F)/|E| = {} is below the floor {}",
                row.per_edge(),
                cfg.var_floor
            )));
        }
        rows.push(row);
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimerBoundRow {
    pub size: usize,
    pub edges: usize,
    /// Disorder variance of `Λ = <|M|>` and its jackknife error.
    pub var_lambda: f64,
    pub var_lambda_stderr: f64,
    /// Disorder mean of the Gibbs variance of `|M|`.
    pub mean_gibbs_var: f64,
    pub mean_gibbs_var_stderr: f64,
    /// `|E|^{-1} (E GibbsVar)^2`.
    pub bound: f64,
    /// Combined standard error of `var_lambda - bound`.
    pub stderr: f64,
}

impl DimerBoundRow {
    /// `Var(Λ) >= bound - z * stderr`.
    pub fn holds(&self, z: f64) -> bool {
        self.var_lambda >= self.bound - z * self.stderr
    }
}

/// Lower bound on the disorder variance of the mean dimer count, per size.
/// Only defined for Gaussian edge weights. Fails if `Var(Λ)/|E|` drops
/// below the configured floor at any size.
pub fn dimer_variance_lower_bound_check(cfg: &ExperimentConfig) -> Result<Vec<DimerBoundRow>> {
    cfg.validate()?;
    cfg.require_exact("Gibbs variances")?;
    require_sizes(cfg)?;
    if !cfg.edge_law.is_gaussian() {
        return Err(Error::validation(
            "edge_law",
            format!("the dimer variance bound needs Gaussian edge weights, got {}", cfg.edge_law),
        ));
    }
    let mut rows = Vec::with_capacity(cfg.sizes.len());
    for &n in &cfg.sizes {
        let g = resize_graph(&cfg.graph, n)?.build()?;
        let pairs = map_replicas(cfg.threads, cfg.replicas, |i| {
            let sum = gibbs_summary_with(cfg.engine, &g, &cfg.sample(&g, i)?)?;
            Ok((sum.dimer_mean, sum.dimer_gibbs_variance))
        })?;
        let (lambda, gvar): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let (var_lambda, var_lambda_stderr) = jackknife_variance(&lambda);
        let (mg, mg_se) = (mean(&gvar), std_error(&gvar));
        let edges = g.edge_count();
        let (bound, bound_se) = if edges == 0 {
            (0.0, 0.0)
        } else {
            (mg * mg / edges as f64, 2.0 * mg * mg_se / edges as f64)
        };
        if edges > 0 && var_lambda / (edges as f64) < cfg.var_floor {
            return Err(Error::CheckFailed(format!(
                "size {n}: Var(Lambda)/|E| = {} is below the floor {}",
                var_lambda / edges as f64,
                cfg.var_floor
            )));
        }
        rows.push(DimerBoundRow {
            size: n,
            edges,
            var_lambda,
            var_lambda_stderr,
            mean_gibbs_var: mg,
            mean_gibbs_var_stderr: mg_se,
            bound,
            stderr: var_lambda_stderr.hypot(bound_se),
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationRow {
    pub size: usize,
    pub vertices: usize,
    /// Truncation level `|V|^kappa`.
    pub level: f64,
    /// `|V|^{-1} mean (F_t - mean F_t - (F - mean F))^2`.
    pub value: f64,
    pub stderr: f64,
}

/// Compares the free energy with original weights to the one with weights
/// truncated at `L = |V|^kappa` (interpolation parameter `truncation_t`),
/// both centered by their sample means.
pub fn truncation_comparison(cfg: &ExperimentConfig) -> Result<Vec<TruncationRow>> {
    cfg.validate()?;
    cfg.require_exact("the free energy")?;
    require_sizes(cfg)?;
    let mut rows = Vec::with_capacity(cfg.sizes.len());
    for &n in &cfg.sizes {
        let g = resize_graph(&cfg.graph, n)?.build()?;
        let v = g.vertex_count();
        let level = truncation_level(v, cfg.kappa);
        let pairs = map_replicas(cfg.threads, cfg.replicas, |i| {
            let s = cfg.sample(&g, i)?;
            let cut = truncate_weights(&s, level, cfg.truncation_t)?;
            Ok((log_partition_with(cfg.engine, &g, &s)?, log_partition_with(cfg.engine, &g, &cut)?))
        })?;
        let (orig, cut): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let (mo, mc) = (mean(&orig), mean(&cut));
        let sq: Vec<f64> = orig
            .iter()
            .zip(&cut)
            .map(|(a, b)| ((b - mc) - (a - mo)).powi(2) / v as f64)
            .collect();
        rows.push(TruncationRow {
            size: n,
            vertices: v,
            level,
            value: mean(&sq),
            stderr: std_error(&sq),
        });
    }
    Ok(rows)
}
