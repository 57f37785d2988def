use clap::{Parser, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;
use timedd::schwarz::{LocalForm, Variant};
use timedd_cli::{init_threads, reproduce_tables, run_experiment, CliError, ExperimentConfig, Mode, Problem};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ProblemArg {
    Example1,
    Example2,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum VariantArg {
    Msn,
    Asn,
    Mso,
    Aso,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Stationary,
    Gmres,
    Direct,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormArg {
    Closure,
    Restricted,
}

/// Schwarz time-domain decomposition experiments for parabolic optimal control.
#[derive(Debug, Parser)]
#[command(name = "timedd", version)]
struct Args {
    #[arg(long, value_enum, default_value = "example1")]
    problem: ProblemArg,
    /// Spatial subdivisions per axis (h = 1/M).
    #[arg(long = "M", default_value_t = 32)]
    m: usize,
    /// Time subdivisions; default is the smallest N >= T*M divisible for every K.
    #[arg(long = "N")]
    n: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, value_enum, default_value = "asn")]
    variant: VariantArg,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    levels: u8,
    /// Comma-separated subdomain counts.
    #[arg(long = "K", value_delimiter = ',', default_value = "2")]
    k: Vec<usize>,
    /// Overlap in time steps (defaults to 1 for MSO/ASO, 0 otherwise).
    #[arg(long)]
    overlap: Option<usize>,
    #[arg(long, value_enum, default_value = "stationary")]
    mode: ModeArg,
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Plain GMRES without a Schwarz preconditioner.
    #[arg(long)]
    no_precond: bool,
    #[arg(long, value_enum, default_value = "closure")]
    form: FormArg,
    /// Run the full Example 1 table sweep instead of a single experiment.
    #[arg(long)]
    tables: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    init_threads();
    let result = if args.tables {
        reproduce_tables(&args.out, args.m, args.seed).map(|t| {
            for (l, level) in t.iterations.iter().enumerate() {
                for (v, row) in Variant::ALL.iter().zip(level) {
                    println!("{}-level {v}: {row:?}", l + 1);
                }
            }
        })
    } else {
        let mut cfg = ExperimentConfig::new(
            match args.problem {
                ProblemArg::Example1 => Problem::Example1,
                ProblemArg::Example2 => Problem::Example2,
            },
            args.m,
            args.out,
        );
        cfg.n = args.n;
        cfg.gamma = args.gamma;
        cfg.variant = match args.variant {
            VariantArg::Msn => Variant::Msn,
            VariantArg::Asn => Variant::Asn,
            VariantArg::Mso => Variant::Mso,
            VariantArg::Aso => Variant::Aso,
        };
        cfg.levels = args.levels as usize;
        cfg.ks = args.k;
        cfg.overlap = args.overlap;
        cfg.mode = match args.mode {
            ModeArg::Stationary => Mode::Stationary,
            ModeArg::Gmres => Mode::Gmres,
            ModeArg::Direct => Mode::Direct,
        };
        cfg.rel_tol = args.tol;
        cfg.max_iters = args.max_iters;
        cfg.seed = args.seed;
        cfg.unpreconditioned = args.no_precond;
        cfg.form = match args.form {
            FormArg::Closure => LocalForm::Closure,
            FormArg::Restricted => LocalForm::Restricted,
        };
        run_experiment(&cfg).map(|outs| {
            for o in outs {
                let r = &o.row;
                println!(
                    "K={} iters={} status={} err_y={:.3e} err_p={:.3e}",
                    r.k, r.iters, r.status, r.err_y, r.err_p
                );
            }
        })
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::NotConverged(n)) => {
            eprintln!("timedd: {n} run(s) hit the iteration cap");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("timedd: {e}");
            ExitCode::FAILURE
        }
    }
}
