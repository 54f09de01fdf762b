//! Free-energy and dimer-count fluctuations over disorder replicas.

use serde::{Deserialize, Serialize};

use crate::coupling::Chain;
use crate::disorder::DisorderSample;
use crate::error::{Error, Result};
use crate::exact::{gibbs_summary, gibbs_summary_with, log_partition, log_partition_with, Engine};
use crate::graph::{GraphSpec, WeightedGraph};
use crate::seed::derive_seed;
use crate::stats::{batch_means_tau, mean, variance};

use super::{map_replicas, ExperimentConfig, ReplicaRecord, StatSummary, TAG_CHAIN};

/// Engine value against the recursion on one cross-check replica.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub replica: usize,
    pub engine_value: f64,
    pub reference: f64,
    /// Allowed absolute difference.
    pub tolerance: f64,
}

impl CrossCheck {
    pub fn holds(&self) -> bool {
        (self.engine_value - self.reference).abs() <= self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltRun {
    pub summary: StatSummary,
    pub records: Vec<ReplicaRecord>,
    /// Per-replica Gibbs variance of `|M|` (dimer runs only).
    pub gibbs_variances: Vec<f64>,
    pub cross_checks: Vec<CrossCheck>,
}

/// Replicas checked against the recursion engine.
const CROSS_CHECK_REPLICAS: usize = 5;

/// Smaller member of the same family, cheap enough for the recursion.
fn shrunken(spec: &GraphSpec) -> GraphSpec {
    match spec {
        GraphSpec::Strip {
            length,
            rung_width,
            periodic_rung,
        } => GraphSpec::Strip {
            length: (*length).min(8),
            rung_width: *rung_width,
            periodic_rung: *periodic_rung,
        },
        GraphSpec::Grid {
            width,
            height,
            periodic,
        } => GraphSpec::Grid {
            width: (*width).min(4),
            height: (*height).min(4),
            periodic: *periodic,
        },
        other => other.clone(),
    }
}

fn check_engine_fits(engine: Engine, g: &WeightedGraph) -> Result<()> {
    if engine == Engine::Transfer && g.strip_layout().is_none() {
        return Err(Error::EngineMismatch {
            engine: engine.to_string(),
            what: "a graph that is not a strip".into(),
        });
    }
    Ok(())
}

fn records(cfg: &ExperimentConfig, values: &[f64]) -> Vec<ReplicaRecord> {
    values
        .iter()
        .enumerate()
        .map(|(replica, &statistic)| ReplicaRecord {
            replica,
            seed: cfg.replica_seed(replica),
            statistic,
        })
        .collect()
}

fn fail_on_mismatch(checks: &[CrossCheck], what: &str) -> Result<()> {
    if let Some(bad) = checks.iter().find(|c| !c.holds()) {
        return Err(Error::CheckFailed(format!(
            "{what} on replica {}: engine {} vs reference {}",
            bad.replica, bad.engine_value, bad.reference
        )));
    }
    Ok(())
}

/// Free energy `F = log Z` per replica, standardized by the sample mean and
/// standard deviation, with the Kolmogorov distance to the standard normal.
/// The first replicas are recomputed on a smaller graph of the same family
/// by the recursion engine and must agree to 1e-9 relative.
pub fn run_free_energy_clt(cfg: &ExperimentConfig) -> Result<CltRun> {
    cfg.validate()?;
    cfg.require_exact("the free energy")?;
    let g = cfg.graph.build()?;
    check_engine_fits(cfg.engine, &g)?;
    let values = map_replicas(cfg.threads, cfg.replicas, |i| log_partition_with(cfg.engine, &g, &cfg.sample(&g, i)?))?;

    let mut cross_checks = Vec::new();
    if cfg.engine != Engine::Recursion {
        let small = shrunken(&cfg.graph).build()?;
        for i in 0..cfg.replicas.min(CROSS_CHECK_REPLICAS) {
            let s = cfg.sample(&small, i)?;
            let reference = log_partition(&small, &s)?;
            cross_checks.push(CrossCheck {
                replica: i,
                engine_value: log_partition_with(cfg.engine, &small, &s)?,
                reference,
                tolerance: 1e-9 * reference.abs().max(1.0),
            });
        }
        fail_on_mismatch(&cross_checks, "free-energy cross-check")?;
    }
    Ok(CltRun {
        summary: StatSummary::from_samples(&values),
        records: records(cfg, &values),
        gibbs_variances: Vec::new(),
        cross_checks,
    })
}

/// Chain estimate of `<|M|>` with a batch-means standard error.
fn chain_dimer_mean(g: &WeightedGraph, s: &DisorderSample<f64>, cfg: &ExperimentConfig, i: usize) -> Result<(f64, f64)> {
    let sweeps = cfg.mcmc_sweeps.max(20);
    let mut chain = Chain::new(g, s, None, derive_seed(cfg.master_seed, TAG_CHAIN, i as u64))?;
    for _ in 0..cfg.mcmc_burn_in {
        chain.sweep();
    }
    let series: Vec<f64> = (0..sweeps)
        .map(|_| {
            chain.sweep();
            chain.state().dimer_count() as f64
        })
        .collect();
    let tau = batch_means_tau(&series, 20).unwrap_or(1.0);
    Ok((mean(&series), (tau * variance(&series) / sweeps as f64).sqrt()))
}

/// `Λ = <|M|>` per replica, standardized, with its Kolmogorov distance to
/// the normal. Exact engines also record the Gibbs variance of `|M|`. The
/// chain engine is cross-checked against exact values on a small grid.
pub fn run_dimer_clt(cfg: &ExperimentConfig) -> Result<CltRun> {
    cfg.validate()?;
    let g = cfg.graph.build()?;
    check_engine_fits(cfg.engine, &g)?;
    let (values, gibbs_variances, cross_checks) = if cfg.engine == Engine::Mcmc {
        let values = map_replicas(cfg.threads, cfg.replicas, |i| Ok(chain_dimer_mean(&g, &cfg.sample(&g, i)?, cfg, i)?.0))?;
        let small = shrunken(&cfg.graph).build()?;
        let checks = map_replicas(cfg.threads, cfg.replicas.min(CROSS_CHECK_REPLICAS), |i| {
            let s = cfg.sample(&small, i)?;
            let (estimate, se) = chain_dimer_mean(&small, &s, cfg, i)?;
            Ok(CrossCheck {
                replica: i,
                engine_value: estimate,
                reference: gibbs_summary(&small, &s)?.dimer_mean,
                tolerance: 5.0 * se + 1e-3 * small.edge_count() as f64,
            })
        })?;
        fail_on_mismatch(&checks, "chain dimer-count cross-check")?;
        (values, Vec::new(), checks)
    } else {
        let pairs = map_replicas(cfg.threads, cfg.replicas, |i| {
            let sum = gibbs_summary_with(cfg.engine, &g, &cfg.sample(&g, i)?)?;
            Ok((sum.dimer_mean, sum.dimer_gibbs_variance))
        })?;
        let (values, vars) = pairs.into_iter().unzip();
        (values, vars, Vec::new())
    };
    Ok(CltRun {
        summary: StatSummary::from_samples(&values),
        records: records(cfg, &values),
        gibbs_variances,
        cross_checks,
    })
}
