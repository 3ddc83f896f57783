//! Configuration, argument parsing, experiment sweeps, and table emission
//! for the sparse-grid DG drivers.
//!
//! The output format is RFC-4180 CSV with a header row; convergence columns
//! (`order`, `r_eps`, `r_dof`) are log-ratios between successive sweep rows,
//! matching the layout of the benchmark tables. Timing columns are wall
//! clock and excluded from any determinism guarantee.

use std::fmt::Write as FmtWrite;

use mwdg::pde::hj::{run_hj, HJProblem};
use mwdg::pde::transport::{run_transport, TransportProblem};
use mwdg::pde::wave::{run_wave, WaveProblem};
use mwdg::pde::RunStats;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Equation {
    Transport,
    Hj,
    Wave,
}

impl Equation {
    fn parse(s: &str) -> Result<Self, String> {
        match s {
            "transport" => Ok(Equation::Transport),
            "hj" => Ok(Equation::Hj),
            "wave" => Ok(Equation::Wave),
            other => Err(format!(
                "unknown equation '{other}' (expected transport, hj, or wave)"
            )),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Equation::Transport => "transport",
            Equation::Hj => "hj",
            Equation::Wave => "wave",
        }
    }
}

/// Fully resolved run configuration; every field has a printed default.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub equation: Equation,
    pub dim: usize,
    pub degree: usize,
    pub max_level: usize,
    pub sparse: bool,
    pub epsilon: f64,
    /// Defaults to 0.1 epsilon when not given.
    pub eta: Option<f64>,
    pub cfl: Option<f64>,
    pub final_time: Option<f64>,
    pub sigma: Option<f64>,
    pub out: Option<String>,
    pub manifest: Option<String>,
    pub seed: u64,
    pub sweep_levels: Vec<usize>,
    pub sweep_eps: Vec<f64>,
    pub parallel: bool,
    pub trace: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            equation: Equation::Transport,
            dim: 2,
            degree: 1,
            max_level: 4,
            sparse: true,
            epsilon: 1e-3,
            eta: None,
            cfl: None,
            final_time: None,
            sigma: None,
            out: None,
            manifest: None,
            seed: 0,
            sweep_levels: Vec::new(),
            sweep_eps: Vec::new(),
            parallel: false,
            trace: false,
        }
    }
}

impl RunConfig {
    pub fn eta(&self) -> f64 {
        self.eta.unwrap_or(0.1 * self.epsilon)
    }

    pub fn final_time(&self) -> f64 {
        self.final_time.unwrap_or(match self.equation {
            Equation::Transport => 1.0,
            Equation::Hj => 0.1,
            Equation::Wave => 0.01,
        })
    }

    /// Resolved options, one per line, the way a run prints them.
    pub fn describe(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "equation        = {}", self.equation.name());
        let _ = writeln!(s, "dimension       = {}", self.dim);
        let _ = writeln!(s, "degree          = {}", self.degree);
        let _ = writeln!(s, "max-mesh-level  = {}", self.max_level);
        let _ = writeln!(s, "sparse-grid     = {}", if self.sparse { 1 } else { 0 });
        let _ = writeln!(s, "epsilon         = {:e}", self.epsilon);
        let _ = writeln!(s, "eta             = {:e}", self.eta());
        let _ = writeln!(
            s,
            "cfl             = {}",
            self.cfl.map_or("default".into(), |v| format!("{v}"))
        );
        let _ = writeln!(s, "final-time      = {}", self.final_time());
        let _ = writeln!(
            s,
            "sigma           = {}",
            self.sigma.map_or("default".into(), |v| format!("{v}"))
        );
        let _ = writeln!(
            s,
            "out             = {}",
            self.out.as_deref().unwrap_or("-")
        );
        let _ = writeln!(s, "seed            = {}", self.seed);
        if !self.sweep_levels.is_empty() {
            let _ = writeln!(s, "sweep-N         = {:?}", self.sweep_levels);
        }
        if !self.sweep_eps.is_empty() {
            let _ = writeln!(s, "sweep-eps       = {:?}", self.sweep_eps);
        }
        s
    }

    /// Config echo plus library version as a small JSON document.
    pub fn manifest_json(&self) -> String {
        format!(
            concat!(
                "{{\n",
                "  \"version\": \"{}\",\n",
                "  \"equation\": \"{}\",\n",
                "  \"dim\": {},\n",
                "  \"degree\": {},\n",
                "  \"max_level\": {},\n",
                "  \"sparse\": {},\n",
                "  \"epsilon\": {:e},\n",
                "  \"eta\": {:e},\n",
                "  \"final_time\": {},\n",
                "  \"seed\": {}\n",
                "}}\n"
            ),
            VERSION,
            self.equation.name(),
            self.dim,
            self.degree,
            self.max_level,
            self.sparse,
            self.epsilon,
            self.eta(),
            self.final_time(),
            self.seed,
        )
    }
}

pub const USAGE: &str = "\
usage: mwdg [options]

options:
  --equation <transport|hj|wave>   equation to solve (default transport)
  -d <int>                         spatial dimension (default 2)
  -k <int>                         polynomial degree of the Alpert basis (default 1)
  -N, --max-mesh-level <int>       maximum mesh level (default 4)
  -s, --sparse-grid <1|0>          sparse grid (1) or full grid (0) (default 1)
  -tf, --final-time <real>         final time; start time is 0
  -e, --epsilon <real>             refinement threshold (default 1e-3)
  --eta <real>                     coarsening threshold (default 0.1 epsilon)
  --cfl <real>                     time-step factor (default per equation)
  --sigma <real>                   interior-penalty constant (default 20 (k+1)^2)
  --out <path>                     write the sweep table as CSV to this path
  --manifest <path>                write a JSON run manifest to this path
  --seed <int>                     seed echoed into the manifest (default 0)
  --sweep-N <n1,n2,...>            sweep the mesh level, one row per value
  --sweep-eps <e1,e2,...>          sweep the refinement threshold
  --parallel                       run sweep points in parallel (untimed)
  --trace                          log per-step refinement activity
  -h, --help                       print this message

The thread count of --parallel sweeps honors the MWDG_THREADS variable.
";

/// Parses the command line; errors carry a message for stderr and imply a
/// nonzero exit.
pub fn parse_args<S: AsRef<str>>(argv: &[S]) -> Result<RunConfig, String> {
    let mut cfg = RunConfig::default();
    let mut it = argv.iter().map(|s| s.as_ref());
    let need = |it: &mut dyn Iterator<Item = &str>, flag: &str| -> Result<String, String> {
        it.next()
            .map(|s| s.to_string())
            .ok_or_else(|| format!("flag {flag} expects a value"))
    };
    while let Some(arg) = it.next() {
        match arg {
            "--equation" => cfg.equation = Equation::parse(&need(&mut it, arg)?)?,
            "-d" => cfg.dim = parse_num(&need(&mut it, arg)?, arg)?,
            "-k" => cfg.degree = parse_num(&need(&mut it, arg)?, arg)?,
            "-N" | "--max-mesh-level" => cfg.max_level = parse_num(&need(&mut it, arg)?, arg)?,
            "-s" | "--sparse-grid" => {
                let v = need(&mut it, arg)?;
                cfg.sparse = match v.as_str() {
                    "1" => true,
                    "0" => false,
                    other => return Err(format!("sparse flag must be 0 or 1, got '{other}'")),
                };
            }
            "-tf" | "--final-time" => cfg.final_time = Some(parse_num(&need(&mut it, arg)?, arg)?),
            "-e" | "--epsilon" => cfg.epsilon = parse_num(&need(&mut it, arg)?, arg)?,
            "--eta" => cfg.eta = Some(parse_num(&need(&mut it, arg)?, arg)?),
            "--cfl" => cfg.cfl = Some(parse_num(&need(&mut it, arg)?, arg)?),
            "--sigma" => cfg.sigma = Some(parse_num(&need(&mut it, arg)?, arg)?),
            "--out" => cfg.out = Some(need(&mut it, arg)?),
            "--manifest" => cfg.manifest = Some(need(&mut it, arg)?),
            "--seed" => cfg.seed = parse_num(&need(&mut it, arg)?, arg)?,
            "--sweep-N" => {
                cfg.sweep_levels = split_list(&need(&mut it, arg)?, arg)?;
            }
            "--sweep-eps" => {
                cfg.sweep_eps = split_list(&need(&mut it, arg)?, arg)?;
            }
            "--parallel" => cfg.parallel = true,
            "--trace" => cfg.trace = true,
            "-h" | "--help" => return Err(String::new()),
            other => return Err(format!("unknown flag '{other}'\n\n{USAGE}")),
        }
    }
    if cfg.dim == 0 {
        return Err("dimension must be positive".into());
    }
    if !cfg.sweep_levels.is_empty() && !cfg.sweep_eps.is_empty() {
        return Err("choose one sweep axis: --sweep-N or --sweep-eps".into());
    }
    Ok(cfg)
}

fn parse_num<T: std::str::FromStr>(s: &str, flag: &str) -> Result<T, String> {
    s.parse::<T>()
        .map_err(|_| format!("flag {flag}: malformed value '{s}'"))
}

fn split_list<T: std::str::FromStr>(s: &str, flag: &str) -> Result<Vec<T>, String> {
    s.split(',')
        .map(|p| parse_num(p.trim(), flag))
        .collect::<Result<Vec<T>, String>>()
        .and_then(|v| {
            if v.is_empty() {
                Err(format!("flag {flag}: empty list"))
            } else {
                Ok(v)
            }
        })
}

/// One finished sweep point.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub level: usize,
    pub epsilon: f64,
    pub stats: Result<RunStats<f64>, String>,
}

/// Executes one driver run for the given config point.
pub fn run_point(cfg: &RunConfig, level: usize, epsilon: f64) -> Result<RunStats<f64>, String> {
    match cfg.equation {
        Equation::Transport => {
            let mut p = TransportProblem::<f64>::new(cfg.dim, cfg.degree, level);
            p.sparse = cfg.sparse;
            if let Some(c) = cfg.cfl {
                p.cfl = c;
            }
            if let Some(t) = cfg.final_time {
                p.final_time = t;
            }
            run_transport(&p).map_err(|e| e.to_string())
        }
        Equation::Hj => {
            let mut p = HJProblem::<f64>::new(cfg.dim, cfg.degree, epsilon);
            p.level = level;
            p.coarsen_eta = cfg.eta.unwrap_or(0.1 * epsilon);
            if let Some(c) = cfg.cfl {
                p.cfl = c;
            }
            if let Some(t) = cfg.final_time {
                p.final_time = t;
            }
            run_hj(&p).map_err(|e| e.to_string())
        }
        Equation::Wave => {
            let mut p = WaveProblem::<f64>::new(cfg.dim, cfg.degree, epsilon);
            p.level = level;
            p.coarsen_eta = cfg.eta.unwrap_or(0.1 * epsilon);
            p.cfl = cfg.cfl;
            p.sigma = cfg.sigma;
            if let Some(t) = cfg.final_time {
                p.final_time = t;
            }
            run_wave(&p).map_err(|e| e.to_string())
        }
    }
}

/// Runs every point of the sweep (a single point when no axis is given) and
/// collects the rows; failures are recorded and the sweep continues.
pub fn run_sweep(cfg: &RunConfig) -> Vec<SweepRow> {
    let points: Vec<(usize, f64)> = if !cfg.sweep_levels.is_empty() {
        cfg.sweep_levels.iter().map(|&n| (n, cfg.epsilon)).collect()
    } else if !cfg.sweep_eps.is_empty() {
        cfg.sweep_eps.iter().map(|&e| (cfg.max_level, e)).collect()
    } else {
        vec![(cfg.max_level, cfg.epsilon)]
    };
    let run_all = |points: &[(usize, f64)]| -> Vec<SweepRow> {
        points
            .iter()
            .map(|&(level, epsilon)| SweepRow {
                level,
                epsilon,
                stats: run_point(cfg, level, epsilon),
            })
            .collect()
    };
    if cfg.parallel && points.len() > 1 {
        let threads = std::env::var("MWDG_THREADS")
            .ok()
            .and_then(|v| v.parse::<usize>().ok())
            .filter(|&t| t > 0)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
            .min(points.len());
        let chunks: Vec<&[(usize, f64)]> = points.chunks(points.len().div_ceil(threads)).collect();
        let mut out: Vec<Vec<SweepRow>> = Vec::new();
        std::thread::scope(|scope| {
            let handles: Vec<_> = chunks
                .into_iter()
                .map(|chunk| scope.spawn(move || run_all(chunk)))
                .collect();
            for h in handles {
                out.push(h.join().expect("sweep worker panicked"));
            }
        });
        out.into_iter().flatten().collect()
    } else {
        run_all(&points)
    }
}

/// Formats the sweep as CSV: one row per point with DOF, error, the
/// log-ratio convergence columns, and mean wall time per step.
pub fn sweep_csv(cfg: &RunConfig, rows: &[SweepRow]) -> String {
    let mut csv = String::new();
    csv.push_str("equation,dim,degree,level,sparse,epsilon,eta,dof,l2_error,order,r_eps,r_dof,sec_per_step,status\n");
    let mut prev_ok: Option<(&SweepRow, &RunStats<f64>)> = None;
    for row in rows {
        let base = format!(
            "{},{},{},{},{},{:e},{:e}",
            cfg.equation.name(),
            cfg.dim,
            cfg.degree,
            row.level,
            if cfg.sparse { 1 } else { 0 },
            row.epsilon,
            cfg.eta.unwrap_or(0.1 * row.epsilon),
        );
        match &row.stats {
            Ok(stats) => {
                let (mut order, mut r_eps, mut r_dof) =
                    (String::new(), String::new(), String::new());
                if let Some((prow, pstats)) = prev_ok {
                    let ratio = pstats.l2_error / stats.l2_error;
                    if ratio > 0.0 && pstats.l2_error > 0.0 && stats.l2_error > 0.0 {
                        if row.level != prow.level {
                            order = format!("{:.2}", ratio.log2());
                        }
                        if row.epsilon != prow.epsilon {
                            r_eps =
                                format!("{:.2}", ratio.ln() / (prow.epsilon / row.epsilon).ln());
                        }
                        if stats.dof != pstats.dof {
                            r_dof = format!(
                                "{:.2}",
                                ratio.ln() / (stats.dof as f64 / pstats.dof as f64).ln()
                            );
                        }
                    }
                }
                csv.push_str(&format!(
                    "{base},{},{:.6e},{order},{r_eps},{r_dof},{:.6e},ok\n",
                    stats.dof, stats.l2_error, stats.seconds_per_step
                ));
                prev_ok = Some((row, stats));
            }
            Err(message) => {
                let quoted = message.replace('"', "\"\"");
                csv.push_str(&format!("{base},,,,,,,\"failed: {quoted}\"\n"));
            }
        }
    }
    csv
}

/// CSV with the wall-clock column blanked, for determinism comparisons.
pub fn csv_without_timing(csv: &str) -> String {
    let mut out = String::new();
    for (i, line) in csv.lines().enumerate() {
        if i == 0 {
            out.push_str(line);
        } else {
            let fields: Vec<&str> = line.split(',').collect();
            for (j, f) in fields.iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                // sec_per_step is the penultimate field
                if j + 2 == fields.len() {
                    out.push_str("");
                } else {
                    out.push_str(f);
                }
            }
        }
        out.push('\n');
    }
    out
}
