//! Experiment driver behind the `timedd` binary: runs solver configurations and
//! writes residual histories, summary rows and iteration tables as CSV.

use serde::Serialize;
use std::fs::{self, OpenOptions};
use std::path::{Path, PathBuf};
use std::time::Instant;
use timedd::discretize::{assemble_system, residual, BlockSystem};
use timedd::linalg::{lu_factor, norm2, IterationReport, KrylovConfig, Status};
use timedd::partition::CoarseSolver;
use timedd::problems::{error_norms, example1, example2, ManufacturedCase};
use timedd::schwarz::{gmres_solve, LocalForm, Schwarz, SchwarzConfig, SubdomainSolver, Variant};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Solver(#[from] timedd::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0} run(s) did not converge")]
    NotConverged(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Problem {
    Example1,
    Example2,
}

impl Problem {
    pub fn case(self) -> ManufacturedCase {
        match self {
            Problem::Example1 => example1(),
            Problem::Example2 => example2(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Problem::Example1 => "example1",
            Problem::Example2 => "example2",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Stationary,
    Gmres,
    Direct,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Stationary => "stationary",
            Mode::Gmres => "gmres",
            Mode::Direct => "direct",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub problem: Problem,
    pub m: usize,
    /// Time subdivisions; defaults to the smallest N ≥ T·M that every K divides.
    pub n: Option<usize>,
    pub gamma: Option<f64>,
    pub variant: Variant,
    pub levels: usize,
    pub ks: Vec<usize>,
    /// Defaults to 1 for overlapping variants, 0 otherwise.
    pub overlap: Option<usize>,
    pub mode: Mode,
    pub rel_tol: f64,
    pub max_iters: usize,
    pub seed: u64,
    pub out: PathBuf,
    /// GMRES without Schwarz preconditioning.
    pub unpreconditioned: bool,
    pub form: LocalForm,
}

impl ExperimentConfig {
    pub fn new(problem: Problem, m: usize, out: impl Into<PathBuf>) -> Self {
        Self {
            problem,
            m,
            n: None,
            gamma: None,
            variant: Variant::Asn,
            levels: 1,
            ks: vec![2],
            overlap: None,
            mode: Mode::Stationary,
            rel_tol: 1e-7,
            max_iters: 500,
            seed: 0,
            out: out.into(),
            unpreconditioned: false,
            form: LocalForm::Closure,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        if self.m == 0 || self.ks.is_empty() || self.ks.contains(&0) {
            return bad("M and every K must be positive");
        }
        if self.rel_tol.is_nan() || self.rel_tol <= 0.0 || self.max_iters == 0 {
            return bad("tolerance and iteration cap must be positive");
        }
        if let Some(g) = self.gamma {
            if g.is_nan() || g <= 0.0 {
                return bad("gamma must be positive");
            }
        }
        Ok(())
    }

    fn case(&self) -> ManufacturedCase {
        let case = self.problem.case();
        match self.gamma {
            Some(g) => case.with_gamma(g),
            None => case,
        }
    }

    fn schwarz_config(&self, k: usize, dim: usize) -> SchwarzConfig {
        let mut cfg = SchwarzConfig::new(self.variant, self.levels, k);
        if let Some(ov) = self.overlap {
            cfg.overlap = ov;
        }
        cfg.rel_tol = self.rel_tol;
        cfg.max_iters = self.max_iters;
        cfg.seed = self.seed;
        cfg.form = self.form;
        if dim == 2 {
            cfg.subdomain_solver = SubdomainSolver::IluBicgstab;
            cfg.coarse_solver = CoarseSolver::IluBicgstab;
        }
        cfg
    }
}

/// Smallest N ≥ T·M for which N − 1 is a multiple of every K.
pub fn choose_n(t_final: f64, m: usize, ks: &[usize]) -> usize {
    let mut n = ((t_final * m as f64).round() as usize).max(5);
    while ks.iter().any(|&k| !(n - 1).is_multiple_of(k)) {
        n += 1;
    }
    n
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub problem: String,
    pub variant: String,
    pub levels: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub gamma: f64,
    pub mode: String,
    pub iters: usize,
    pub status: String,
    pub wall_seconds: f64,
    pub err_y: f64,
    pub err_p: f64,
}

#[derive(Serialize)]
struct HistoryRow {
    iter: usize,
    abs_residual: f64,
    rel_residual: f64,
}

pub fn write_history(path: &Path, report: &IterationReport) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?;
    for (i, (rel, abs)) in report.history.iter().zip(report.absolute_history()).enumerate() {
        w.serialize(HistoryRow {
            iter: i,
            abs_residual: abs,
            rel_residual: *rel,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Appends to `summary.csv` in `dir`, writing the header for a new file.
pub fn append_summary(dir: &Path, rows: &[SummaryRow]) -> Result<(), CliError> {
    let path = dir.join("summary.csv");
    let fresh = !path.exists() || fs::metadata(&path)?.len() == 0;
    let file = OpenOptions::new().create(true).append(true).open(&path)?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(fresh)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn direct_report(sys: &BlockSystem, x: &[f64], secs: f64) -> Result<IterationReport, CliError> {
    let r0 = norm2(&sys.b);
    let r1 = norm2(&residual(sys, x)?);
    Ok(IterationReport {
        history: vec![1.0, if r0 > 0.0 { r1 / r0 } else { 0.0 }],
        initial_residual: r0,
        iterations: 1,
        status: Status::Converged,
        wall_seconds: secs,
        seed: None,
    })
}

/// Result of one configuration: the summary row plus the full history.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub row: SummaryRow,
    pub report: IterationReport,
}

/// Runs one K of an experiment on an already assembled system.
pub fn run_single(
    cfg: &ExperimentConfig,
    case: &ManufacturedCase,
    sys: &BlockSystem,
    k: usize,
) -> Result<RunOutcome, CliError> {
    let start = Instant::now();
    let (w, report) = match cfg.mode {
        Mode::Direct => {
            let x = lu_factor(&sys.l)?.solve(&sys.b);
            let rep = direct_report(sys, &x, start.elapsed().as_secs_f64())?;
            (x, rep)
        }
        Mode::Stationary => {
            let schwarz = Schwarz::new(sys, cfg.schwarz_config(k, sys.grid.dim))?;
            match schwarz.solve() {
                Ok(out) => out,
                Err(timedd::Error::MaxItersExceeded(rep)) => (Vec::new(), *rep),
                Err(e) => return Err(e.into()),
            }
        }
        Mode::Gmres => {
            let kcfg = KrylovConfig::new(cfg.rel_tol, cfg.max_iters);
            if cfg.unpreconditioned {
                gmres_solve(sys, None, &kcfg, cfg.seed)?
            } else {
                let schwarz = Schwarz::new(sys, cfg.schwarz_config(k, sys.grid.dim))?;
                gmres_solve(sys, Some(&schwarz), &kcfg, cfg.seed)?
            }
        }
    };
    let (err_y, err_p) = if w.is_empty() {
        (f64::NAN, f64::NAN)
    } else {
        error_norms(case, sys, &w)?
    };
    let variant = match (cfg.mode, cfg.unpreconditioned) {
        (Mode::Direct, _) => "none".to_string(),
        (Mode::Gmres, true) => "none".to_string(),
        _ => cfg.variant.to_string(),
    };
    let row = SummaryRow {
        problem: cfg.problem.as_str().into(),
        variant,
        levels: if cfg.mode == Mode::Direct { 0 } else { cfg.levels },
        k: if cfg.mode == Mode::Direct { 1 } else { k },
        m: sys.grid.m,
        n: sys.grid.n,
        gamma: sys.gamma,
        mode: cfg.mode.as_str().into(),
        iters: report.iterations,
        status: report.status.as_str().into(),
        wall_seconds: start.elapsed().as_secs_f64(),
        err_y,
        err_p,
    };
    Ok(RunOutcome { row, report })
}

fn history_name(row: &SummaryRow) -> String {
    format!(
        "history_{}_{}_{}_L{}_K{}_M{}_g{:e}.csv",
        row.problem, row.mode, row.variant, row.levels, row.k, row.m, row.gamma
    )
}

/// Runs every K of the configuration, writing one history CSV per run and
/// appending to `summary.csv`. Runs that hit the iteration cap are still
/// written; they turn the overall result into `NotConverged`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<RunOutcome>, CliError> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.out)?;
    let case = cfg.case();
    let ks: Vec<usize> = if cfg.mode == Mode::Direct {
        vec![1]
    } else {
        cfg.ks.clone()
    };
    let n = cfg.n.unwrap_or_else(|| choose_n(case.spec.t_final, cfg.m, &ks));
    let grid = case.grid(cfg.m, n)?;
    let sys = assemble_system(&case.spec, &grid)?;
    let mut outcomes = Vec::with_capacity(ks.len());
    for &k in &ks {
        let out = run_single(cfg, &case, &sys, k)?;
        write_history(&cfg.out.join(history_name(&out.row)), &out.report)?;
        append_summary(&cfg.out, std::slice::from_ref(&out.row))?;
        outcomes.push(out);
    }
    let failed = outcomes.iter().filter(|o| o.report.status != Status::Converged).count();
    if failed > 0 {
        return Err(CliError::NotConverged(failed));
    }
    Ok(outcomes)
}

pub const TABLE_KS: [usize; 6] = [2, 4, 8, 16, 32, 64];

/// Iteration counts indexed as `[levels − 1][variant][K]` in the order of
/// `Variant::ALL` and `TABLE_KS`, plus the rows that produced them.
#[derive(Clone, Debug)]
pub struct Tables {
    pub iterations: [[[usize; 6]; 4]; 2],
    pub converged: [[[bool; 6]; 4]; 2],
    pub rows: Vec<SummaryRow>,
}

/// The stand-alone Example 1 sweep over variants, levels and K at h = 1/M,
/// written as `table_level{1,2}.csv` (K rows, one iteration and one wall-time
/// column per variant) next to the usual summary and histories.
pub fn reproduce_tables(out: &Path, m: usize, seed: u64) -> Result<Tables, CliError> {
    fs::create_dir_all(out)?;
    let case = example1();
    let n = choose_n(case.spec.t_final, m, &TABLE_KS);
    let sys = assemble_system(&case.spec, &case.grid(m, n)?)?;
    let mut tables = Tables {
        iterations: [[[0; 6]; 4]; 2],
        converged: [[[false; 6]; 4]; 2],
        rows: Vec::new(),
    };
    let mut wall = [[[0.0f64; 6]; 4]; 2];
    for levels in 1..=2 {
        for (vi, &variant) in Variant::ALL.iter().enumerate() {
            for (ki, &k) in TABLE_KS.iter().enumerate() {
                let mut cfg = ExperimentConfig::new(Problem::Example1, m, out);
                cfg.variant = variant;
                cfg.levels = levels;
                cfg.seed = seed;
                let o = run_single(&cfg, &case, &sys, k)?;
                write_history(&out.join(history_name(&o.row)), &o.report)?;
                tables.iterations[levels - 1][vi][ki] = o.report.iterations;
                tables.converged[levels - 1][vi][ki] = o.report.converged();
                wall[levels - 1][vi][ki] = o.row.wall_seconds;
                tables.rows.push(o.row);
            }
        }
        let path = out.join(format!("table_level{levels}.csv"));
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(path)?;
        let mut header = vec!["K".to_string()];
        for v in Variant::ALL {
            header.push(format!("{v}_iters"));
            header.push(format!("{v}_local_wall_s_noncomparable"));
        }
        w.write_record(&header)?;
        for (ki, k) in TABLE_KS.iter().enumerate() {
            let mut rec = vec![k.to_string()];
            for (iters, secs) in tables.iterations[levels - 1].iter().zip(&wall[levels - 1]) {
                rec.push(iters[ki].to_string());
                rec.push(format!("{:.3}", secs[ki]));
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
    }
    append_summary(out, &tables.rows)?;
    Ok(tables)
}

/// Caps the rayon pool at `TIMEDD_THREADS` when set.
pub fn init_threads() {
    #[cfg(feature = "parallel")]
    if let Some(n) = std::env::var("TIMEDD_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}
