//! `mdm`: command-line driver for the disordered monomer-dimer experiments.

use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use mdm_core::coupling::run_chain;
use mdm_core::lab::{self, CltRun, CrossCheck, ExperimentConfig, RunManifest, RunSummary, StatSummary};
use mdm_core::{gibbs_summary_with, Error, Result};

#[derive(Parser, Debug)]
#[command(name = "mdm", version, about = "Disordered monomer-dimer model: exact Gibbs engines and experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact log-partition function and marginals for one disorder sample.
    Gibbs(Common),
    /// Draw one disorder sample, and optionally a matching from the chain.
    Sample {
        #[command(flatten)]
        common: Common,
        /// Also run the heat-bath chain and print its final matching.
        #[arg(long)]
        matching: bool,
    },
    /// Disagreement probability of coupled chains per ball radius.
    Couple(Common),
    /// Decay of boundary influence on an edge marginal per ball radius.
    Decay {
        #[command(flatten)]
        common: Common,
        /// Decay of edge-edge covariances by distance instead.
        #[arg(long)]
        two_point: bool,
    },
    /// Fluctuations of log Z over disorder replicas.
    CltFreeEnergy(Common),
    /// Fluctuations of the mean dimer count over disorder replicas.
    CltDimer(Common),
    /// Var(log Z) along a size ladder against its upper bound.
    Varscan {
        #[command(flatten)]
        common: Common,
        /// Check the lower bound on the dimer-count variance instead.
        #[arg(long)]
        dimer_bound: bool,
    },
    /// Effect of truncating the weights at |V|^kappa on log Z.
    Truncate(Common),
    /// Locality of the single-edge discrete derivative of log Z.
    DerivativeLocality(Common),
}

/// Flags shared by every subcommand. Each overrides the same key of
/// `--config`.
#[derive(Args, Debug, Default)]
struct Common {
    /// key=value file, one pair per line.
    #[arg(long)]
    config: Option<PathBuf>,
    /// grid:WxH, torus:WxH, strip:LxW, cylinder:LxW, cycle:N, path:N or a JSON file.
    #[arg(long)]
    graph: Option<String>,
    /// Edge weight law, e.g. gaussian:0,1, uniform:-1,1, twopoint:0.5,-1,1, const:0, pareto:1,3.
    #[arg(long)]
    edge_law: Option<String>,
    /// Vertex weight law.
    #[arg(long)]
    vertex_law: Option<String>,
    /// enum, recursion, transfer or mcmc.
    #[arg(long)]
    engine: Option<String>,
    /// Master seed. A fresh one is drawn and recorded when absent.
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    replicas: Option<String>,
    /// Ball radii, e.g. 1,2,3 or 1..4.
    #[arg(long)]
    radii: Option<String>,
    /// Edge distances for two-point decay.
    #[arg(long)]
    distances: Option<String>,
    /// Size ladder for scans.
    #[arg(long)]
    sizes: Option<String>,
    /// Truncation exponent.
    #[arg(long)]
    kappa: Option<String>,
    /// Truncation interpolation parameter in [0, 1].
    #[arg(long)]
    truncation_t: Option<String>,
    /// Target edge index.
    #[arg(long)]
    edge: Option<String>,
    /// Chain sweeps per replica.
    #[arg(long)]
    sweeps: Option<String>,
    #[arg(long)]
    burn_in: Option<String>,
    /// Floor asserted for Var(log Z)/|E|.
    #[arg(long)]
    var_floor: Option<String>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    threads: Option<String>,
    /// CSV output; a JSON summary and a manifest are written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn flags(&self) -> [(&'static str, Option<&String>); 16] {
        [
            ("graph", self.graph.as_ref()),
            ("edge_law", self.edge_law.as_ref()),
            ("vertex_law", self.vertex_law.as_ref()),
            ("engine", self.engine.as_ref()),
            ("seed", self.seed.as_ref()),
            ("replicas", self.replicas.as_ref()),
            ("radii", self.radii.as_ref()),
            ("distances", self.distances.as_ref()),
            ("sizes", self.sizes.as_ref()),
            ("kappa", self.kappa.as_ref()),
            ("truncation_t", self.truncation_t.as_ref()),
            ("edge", self.edge.as_ref()),
            ("sweeps", self.sweeps.as_ref()),
            ("burn_in", self.burn_in.as_ref()),
            ("var_floor", self.var_floor.as_ref()),
            ("threads", self.threads.as_ref()),
        ]
    }

    /// Defaults, then the config file, then flags.
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();
        let mut seeded = false;
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)?;
            cfg.apply_kv(&text)?;
            seeded = text.lines().any(|l| {
                let key = l.split('#').next().unwrap_or("").split('=').next().unwrap_or("").trim();
                key == "seed" || key == "master_seed"
            });
        }
        for (key, value) in self.flags() {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        if let Some(out) = &self.out {
            cfg.out = Some(out.clone());
        }
        if !(seeded || self.seed.is_some()) {
            cfg.master_seed = rand::random();
            eprintln!("no seed given; using seed={}", cfg.master_seed);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn summary_path(out: &Path) -> PathBuf {
    let p = out.with_extension("json");
    if p == out {
        out.with_extension("summary.json")
    } else {
        p
    }
}

fn manifest_path(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

/// Writes the CSV, summary and manifest when `--out` is set.
fn write_outputs<R: Serialize>(cfg: &ExperimentConfig, rows: &[R], summary: &RunSummary) -> Result<()> {
    let subcommand = summary.experiment.as_str();
    if let Some(out) = &cfg.out {
        let json = summary_path(out);
        lab::write_csv(out, rows)?;
        lab::write_summary(&json, summary)?;
        let manifest = RunManifest {
            subcommand: subcommand.to_string(),
            config: cfg.clone(),
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            outputs: vec![out.display().to_string(), json.display().to_string()],
            content_hash: summary.content_hash.clone(),
        };
        let path = manifest_path(out);
        std::fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")?;
        eprintln!("wrote {}, {} and {}", out.display(), json.display(), path.display());
    }
    Ok(())
}

/// Writes outputs and prints the summary to stdout.
fn emit<R: Serialize, T: Serialize>(
    subcommand: &str,
    cfg: &ExperimentConfig,
    rows: &[R],
    results: &T,
    notes: &[(&str, &str)],
) -> Result<()> {
    let mut summary = RunSummary::new(subcommand, cfg, results)?;
    for (k, v) in notes {
        summary = summary.note(k, v);
    }
    write_outputs(cfg, rows, &summary)?;
    say(&serde_json::to_string_pretty(&summary)?)
}

/// Prints a line to stdout; a closed pipe is not an error.
fn say(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{text}") {
        Err(e) if e.kind() != ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

/// CLT results without the per-replica rows, which go to the CSV.
#[derive(Serialize)]
struct CltResults<'a> {
    summary: &'a StatSummary,
    cross_checks: &'a [CrossCheck],
    mean_gibbs_variance: Option<f64>,
}

impl<'a> From<&'a CltRun> for CltResults<'a> {
    fn from(run: &'a CltRun) -> Self {
        let v = &run.gibbs_variances;
        CltResults {
            summary: &run.summary,
            cross_checks: &run.cross_checks,
            mean_gibbs_variance: (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64),
        }
    }
}

#[derive(Serialize)]
struct SiteRow {
    site: &'static str,
    index: usize,
    value: f64,
}

fn site_rows(edges: &[f64], vertices: &[f64]) -> Vec<SiteRow> {
    let e = edges.iter().enumerate().map(|(index, &value)| SiteRow {
        site: "edge",
        index,
        value,
    });
    let v = vertices.iter().enumerate().map(|(index, &value)| SiteRow {
        site: "vertex",
        index,
        value,
    });
    e.chain(v).collect()
}

fn gibbs(c: &Common) -> Result<()> {
    let cfg = c.resolve()?;
    let g = cfg.graph.build()?;
    let s = cfg.sample(&g, 0)?;
    let sum = gibbs_summary_with(cfg.engine, &g, &s)?;
    let mut lines = vec![
        format!("logZ = {}", sum.log_z),
        format!("dimer mean = {}", sum.dimer_mean),
        format!("dimer variance = {}", sum.dimer_gibbs_variance),
    ];
    for (e, p) in sum.edge_marginals.iter().enumerate() {
        let (x, y) = g.endpoints(e);
        lines.push(format!("edge {e} ({x},{y}) marginal = {p}"));
    }
    for (x, p) in sum.vertex_unmatched.iter().enumerate() {
        lines.push(format!("vertex {x} unmatched = {p}"));
    }
    say(&lines.join("\n"))?;
    let summary = RunSummary::new("gibbs", &cfg, &sum)?;
    write_outputs(&cfg, &site_rows(&sum.edge_marginals, &sum.vertex_unmatched), &summary)
}

fn sample(c: &Common, matching: bool) -> Result<()> {
    let cfg = c.resolve()?;
    let g = cfg.graph.build()?;
    let s = cfg.sample(&g, 0)?;
    let mut notes = vec![("replica_seed", s.provenance.seed.to_string())];
    if matching {
        let m = run_chain(&g, &s, None, 1, cfg.mcmc_burn_in, cfg.master_seed)?
            .last()
            .expect("one sweep yields one state");
        let edges: Vec<String> = m.edges().iter().map(|e| e.to_string()).collect();
        notes.push(("matching", edges.join(",")));
    }
    let notes: Vec<(&str, &str)> = notes.iter().map(|(k, v)| (*k, v.as_str())).collect();
    let rows = site_rows(&s.edge_weights, &s.vertex_weights);
    emit("sample", &cfg, &rows, &rows, &notes)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gibbs(c) => gibbs(&c),
        Command::Sample { common, matching } => sample(&common, matching),
        Command::Couple(c) => {
            let cfg = c.resolve()?;
            let rows = lab::coupling_curve(&cfg)?;
            emit("couple", &cfg, &rows, &rows, &[("boundary_pair", "all-zero vs greedy maximal")])
        }
        Command::Decay { common, two_point } => {
            let cfg = common.resolve()?;
            let (name, table) = if two_point {
                ("decay-two-point", lab::two_point_decay(&cfg)?)
            } else {
                ("decay", lab::correlation_decay_curve(&cfg)?)
            };
            emit(name, &cfg, &table.rows, &table, &[])
        }
        Command::CltFreeEnergy(c) => {
            let cfg = c.resolve()?;
            eprintln!("{} replicas of log Z on {}", cfg.replicas, cfg.graph);
            let run = lab::run_free_energy_clt(&cfg)?;
            emit("clt-free-energy", &cfg, &run.records, &CltResults::from(&run), &[("centering", "sample mean and sd")])
        }
        Command::CltDimer(c) => {
            let cfg = c.resolve()?;
            eprintln!("{} replicas of <|M|> on {}", cfg.replicas, cfg.graph);
            let run = lab::run_dimer_clt(&cfg)?;
            emit("clt-dimer", &cfg, &run.records, &CltResults::from(&run), &[("centering", "sample mean and sd")])
        }
        Command::Varscan { common, dimer_bound } => {
            let cfg = common.resolve()?;
            if dimer_bound {
                let rows = lab::dimer_variance_lower_bound_check(&cfg)?;
                emit("varscan-dimer-bound", &cfg, &rows, &rows, &[])
            } else {
                let rows = lab::variance_scan(&cfg)?;
                emit("varscan", &cfg, &rows, &rows, &[])
            }
        }
        Command::Truncate(c) => {
            let cfg = c.resolve()?;
            let rows = lab::truncation_comparison(&cfg)?;
            emit("truncate", &cfg, &rows, &rows, &[])
        }
        Command::DerivativeLocality(c) => {
            let cfg = c.resolve()?;
            let table = lab::chatterjee_derivative_locality(&cfg)?;
            emit("derivative-locality", &cfg, &table.rows, &table, &[])
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_validation() || matches!(e, Error::TooLarge { .. }) {
        1
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
