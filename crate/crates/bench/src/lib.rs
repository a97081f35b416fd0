//! Batch runner for the solver: instances from movingai files, random agents or built-in
//! fixtures, one CSV row per (instance, configuration).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use clap::Parser;
use mapf_core::grid::parse_map;
use mapf_core::instance::parse_scen;
use mapf_core::{fixtures, solve, GridMap, Instance, SolverConfig, SymmetryClass};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Input { path: String, source: mapf_core::Error },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Parser, Debug, Clone)]
#[command(name = "mapf-bench", about = "Run MAPF solver configurations and write per-run statistics as CSV")]
pub struct BenchArgs {
    /// Movingai map file, or `empty-W-H` for an open grid.
    #[arg(long)]
    pub map: Option<String>,
    /// Movingai scenario files; each is one instance per agent count.
    #[arg(long, num_args = 1..)]
    pub scen: Vec<PathBuf>,
    /// Agent counts, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub agents: Vec<usize>,
    /// Solver configurations, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "none,rtc")]
    pub configs: Vec<String>,
    /// Seconds per solve.
    #[arg(long)]
    pub time_limit: Option<f64>,
    /// Expanded CT nodes per solve.
    #[arg(long)]
    pub node_limit: Option<u64>,
    /// Output CSV; standard output if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Built-in instance instead of a map.
    #[arg(long)]
    pub fixture: Option<String>,
    /// Size of the fixture (corridor length, grid side).
    #[arg(long)]
    pub k: Option<usize>,
    /// Distance parameter of the target fixture.
    #[arg(long)]
    pub d: Option<usize>,
    /// Random instances per agent count when no scenario file is given.
    #[arg(long, default_value_t = 1)]
    pub instances: u64,
    /// First seed for random instances.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Write 0 in the runtime column so repeated runs give identical files.
    #[arg(long)]
    pub no_runtime: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Row {
    pub map: String,
    pub agents: usize,
    pub seed: u64,
    pub config: String,
    pub solved: bool,
    #[serde(rename = "SOC")]
    pub soc: Option<u64>,
    pub expanded: u64,
    pub generated: u64,
    pub runtime_ms: f64,
    pub pct_rectangle: f64,
    pub pct_target: f64,
    pub pct_corridor: f64,
    pub pct_vertex_edge: f64,
}

/// One solve to perform.
#[derive(Clone, Debug)]
pub struct Job {
    pub map: String,
    pub seed: u64,
    pub instance: Instance,
}

fn load_map(spec: &str) -> Result<(String, Arc<GridMap>), BenchError> {
    let p = Path::new(spec);
    if !p.exists() {
        if let Some(rest) = spec.strip_prefix("empty-") {
            let dims: Vec<usize> = rest.split('-').filter_map(|s| s.parse().ok()).collect();
            if let [w, h] = dims[..] {
                if w > 0 && h > 0 {
                    return Ok((spec.to_string(), Arc::new(GridMap::open(w, h))));
                }
            }
        }
    }
    let text = fs::read_to_string(p).map_err(|source| BenchError::Io { path: spec.into(), source })?;
    let map = parse_map(&text).map_err(|source| BenchError::Input { path: spec.into(), source })?;
    let name = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| spec.into());
    Ok((name, Arc::new(map)))
}

/// Expands the arguments into the list of instances to solve, in output order.
pub fn build_jobs(args: &BenchArgs) -> Result<Vec<Job>, BenchError> {
    if let Some(name) = &args.fixture {
        let param = args.d.or(args.k);
        let instance =
            fixtures::by_name(name, param).map_err(|source| BenchError::Input { path: name.clone(), source })?;
        let label = match param {
            Some(p) => format!("{name}-{p}"),
            None => name.clone(),
        };
        return Ok(vec![Job { map: label, seed: 0, instance }]);
    }
    let spec = args.map.as_deref().ok_or_else(|| BenchError::Usage("either --map or --fixture is required".into()))?;
    let (name, map) = load_map(spec)?;
    if args.agents.is_empty() {
        return Err(BenchError::Usage("--agents is required with --map".into()));
    }
    let mut jobs = Vec::new();
    if args.scen.is_empty() {
        for &n in &args.agents {
            for seed in args.seed..args.seed + args.instances {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let instance = fixtures::random_agents(&mut rng, &map, n).ok_or_else(|| {
                    BenchError::Usage(format!("cannot place {n} agents on {name}"))
                })?;
                jobs.push(Job { map: name.clone(), seed, instance });
            }
        }
        return Ok(jobs);
    }
    for &n in &args.agents {
        for (offset, path) in args.scen.iter().enumerate() {
            let shown = path.display().to_string();
            let text = fs::read_to_string(path).map_err(|source| BenchError::Io { path: shown.clone(), source })?;
            let agents = parse_scen(&text, &map).map_err(|source| BenchError::Input { path: shown.clone(), source })?;
            if agents.len() < n {
                return Err(BenchError::Usage(format!("{shown} has {} agents, {n} requested", agents.len())));
            }
            let instance = Instance::new(map.clone(), agents[..n].to_vec())
                .map_err(|source| BenchError::Input { path: shown.clone(), source })?;
            jobs.push(Job { map: name.clone(), seed: offset as u64, instance });
        }
    }
    Ok(jobs)
}

fn solve_row(job: &Job, cfg: &SolverConfig, no_runtime: bool) -> Row {
    let r = solve(&job.instance, cfg);
    let s = &r.stats;
    Row {
        map: job.map.clone(),
        agents: job.instance.num_agents(),
        seed: job.seed,
        config: cfg.name.clone(),
        solved: s.solved,
        soc: s.cost,
        expanded: s.expanded,
        generated: s.generated,
        runtime_ms: if no_runtime { 0.0 } else { s.runtime.as_secs_f64() * 1e3 },
        pct_rectangle: s.branch_pct(SymmetryClass::Rectangle),
        pct_target: s.branch_pct(SymmetryClass::Target),
        pct_corridor: s.branch_pct(SymmetryClass::Corridor),
        pct_vertex_edge: s.branch_pct(SymmetryClass::VertexEdge),
    }
}

/// Solves every job under every configuration. Rows come out in job order, then
/// configuration order, regardless of `--jobs`.
pub fn run_benchmark(args: &BenchArgs) -> Result<Vec<Row>, BenchError> {
    let mut configs = Vec::new();
    for name in &args.configs {
        let mut cfg = SolverConfig::named(name).map_err(|source| BenchError::Input { path: "--configs".into(), source })?;
        if let Some(t) = args.time_limit {
            if !(t.is_finite() && t > 0.0) {
                return Err(BenchError::Usage(format!("bad --time-limit {t}")));
            }
            cfg = cfg.with_time_limit(Duration::from_secs_f64(t));
        }
        if let Some(n) = args.node_limit {
            cfg = cfg.with_node_limit(n);
        }
        configs.push(cfg);
    }
    let jobs = build_jobs(args)?;
    let tasks: Vec<(usize, usize)> = (0..jobs.len()).flat_map(|j| (0..configs.len()).map(move |c| (j, c))).collect();
    let results: Mutex<Vec<Option<Row>>> = Mutex::new(vec![None; tasks.len()]);
    let next = AtomicUsize::new(0);
    let workers = args.jobs.clamp(1, tasks.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(j, c)) = tasks.get(k) else { break };
                let row = solve_row(&jobs[j], &configs[c], args.no_runtime);
                results.lock().unwrap()[k] = Some(row);
            });
        }
    });
    Ok(results.into_inner().unwrap().into_iter().map(|r| r.expect("every task ran")).collect())
}

/// Header plus one record per row.
pub fn write_stats_csv<W: Write>(rows: &[Row], out: W) -> Result<(), BenchError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record([
        "map",
        "agents",
        "seed",
        "config",
        "solved",
        "SOC",
        "expanded",
        "generated",
        "runtime_ms",
        "pct_rectangle",
        "pct_target",
        "pct_corridor",
        "pct_vertex_edge",
    ])?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|source| BenchError::Io { path: "<csv>".into(), source })?;
    Ok(())
}

pub fn emit_stats_csv(rows: &[Row], path: &Path) -> Result<(), BenchError> {
    let f = fs::File::create(path).map_err(|source| BenchError::Io { path: path.display().to_string(), source })?;
    write_stats_csv(rows, f)
}
