mod commands;
mod output;
mod svg;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lqreturn::words::DEFAULT_ENUMERATION_BUDGET;

use crate::output::Failure;

#[derive(Parser, Debug)]
#[command(name = "lqreturn", version, about = "Return-time and hitting-time L^q spectra of finite-memory Gibbs processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Model file (JSON).
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Output path; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; all cores when absent.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Cap on the number of enumerated words.
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_BUDGET)]
    pub budget: u128,
    /// Print the normalized model and exit.
    #[arg(long)]
    pub dump_model: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// M, H, R and W curves on a q grid.
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = -4.0, allow_negative_numbers = true)]
        q_min: f64,
        #[arg(long, default_value_t = 4.0, allow_negative_numbers = true)]
        q_max: f64,
        #[arg(long, default_value_t = 401)]
        points: usize,
        /// Also write an SVG plot of R, M and W.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Exact finite-n return spectra and Lambda^(n).
    Exact {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        n_min: usize,
        #[arg(long, default_value_t = 8)]
        n_max: usize,
        /// Comma-separated orders.
        #[arg(long, default_value = "-2,-1,-0.5,0,0.5,1", allow_hyphen_values = true)]
        q: String,
    },
    /// Monte Carlo return times, hitting times or the exponential law.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 10_000)]
        replicas: usize,
        #[arg(long, default_value_t = 1_000_000)]
        t_max: u64,
        #[arg(long, value_enum, default_value_t = Mode::Return)]
        mode: Mode,
        /// Word for `explaw`; defaults to 0 followed by n-1 ones.
        #[arg(long)]
        word: Option<String>,
        /// Also write the per-replica values to this file.
        #[arg(long)]
        raw: Option<PathBuf>,
    },
    /// Rate functions I and J, or exact tail rates with --ldp-n.
    Rate {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_negative_numbers = true)]
        u_min: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        u_max: Option<f64>,
        #[arg(long, default_value_t = 101)]
        points: usize,
        /// Comma-separated word lengths for the exact comparison table.
        #[arg(long)]
        ldp_n: Option<String>,
        #[arg(long, default_value_t = 0.1)]
        ldp_u: f64,
        #[arg(long, value_enum, default_value_t = TailArg::Upper)]
        tail: TailArg,
    },
    /// Incomplete-gamma inequalities on an (s, x) grid.
    GammaCheck {
        #[command(flatten)]
        common: Common,
        /// Comma-separated s values (default grid when absent).
        #[arg(long, allow_hyphen_values = true)]
        s: Option<String>,
        /// Comma-separated x values.
        #[arg(long)]
        x: Option<String>,
    },
    /// Runs the invariant suite; exits 0 only if every check passes.
    Verify {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Return,
    Hitting,
    Explaw,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum TailArg {
    Upper,
    Lower,
}

fn common(command: &Command) -> &Common {
    match command {
        Command::Spectrum { common, .. }
        | Command::Exact { common, .. }
        | Command::Simulate { common, .. }
        | Command::Rate { common, .. }
        | Command::GammaCheck { common, .. }
        | Command::Verify { common } => common,
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let c = common(&cli.command);
    if let Some(threads) = c.threads {
        if threads == 0 {
            return Err(Failure::input("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Failure::input(format!("cannot start thread pool: {e}")))?;
    }
    if c.dump_model {
        return commands::dump_model(c);
    }
    match &cli.command {
        Command::Spectrum {
            common,
            q_min,
            q_max,
            points,
            svg,
        } => commands::spectrum(common, *q_min, *q_max, *points, svg.as_deref()),
        Command::Exact {
            common,
            n_min,
            n_max,
            q,
        } => commands::exact(common, *n_min, *n_max, q),
        Command::Simulate {
            common,
            n,
            replicas,
            t_max,
            mode,
            word,
            raw,
        } => commands::simulate(common, *n, *replicas, *t_max, *mode, word.as_deref(), raw.as_deref()),
        Command::Rate {
            common,
            u_min,
            u_max,
            points,
            ldp_n,
            ldp_u,
            tail,
        } => match ldp_n {
            Some(ns) => commands::ldp(common, ns, *ldp_u, *tail),
            None => commands::rate(common, *u_min, *u_max, *points),
        },
        Command::GammaCheck { common, s, x } => commands::gamma_check(common, s.as_deref(), x.as_deref()),
        Command::Verify { common } => verify::run(common),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("lqreturn: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
