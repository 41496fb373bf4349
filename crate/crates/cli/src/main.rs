//! Command-line front end: simulations, `G` profiles and region analysis.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use entropy_rk::{AxisRange, RegionFamily};

use crate::commands::{ConditionCase, ConditionRequest, RegionRequest};
use crate::config::{Origin, RunConfig};
pub use crate::error::CliError;

macro_rules! key_args {
    ($($field:ident: $doc:literal),* $(,)?) => {
        /// Overrides for configuration keys; each beats the config file.
        #[derive(Args, Debug, Default)]
        struct KeyArgs {
            $(
                #[doc = $doc]
                #[arg(long, value_name = "VALUE", help_heading = "Configuration keys")]
                $field: Option<String>,
            )*
        }

        impl KeyArgs {
            fn pairs(&self) -> Vec<(&'static str, &str)> {
                let mut v = Vec::new();
                $( if let Some(x) = &self.$field { v.push((stringify!($field), x.as_str())); } )*
                v
            }
        }
    };
}

key_args! {
    problem: "pme, diffusion, system or dlss",
    beta: "Porous-medium exponent",
    rho1: "Diffusivity of species 1",
    rho2: "Diffusivity of species 2",
    mu: "Coupling rate of the linear system",
    diffusion_k: "Scalar diffusion a(u) = k u^m: k",
    diffusion_m: "Scalar diffusion a(u) = k u^m: m",
    scheme: "Scheme name for simulate",
    schemes: "Comma-separated schemes for gprofile, or all",
    n: "Number of cells",
    length: "Domain length",
    tau: "Time step",
    t_end: "Final time",
    newton_tol: "Newton tolerance",
    newton_max_iter: "Newton iteration cap",
    entropy: "power, log, experiment or first_order",
    alpha: "Entropy exponent",
    ic: "barenblatt, cosine or file",
    t0: "Barenblatt start time",
    x_r: "Barenblatt support edge",
    mean: "Cosine mean",
    amplitude: "Cosine amplitude",
    ic_file: "Initial state file",
    snapshots: "Comma-separated snapshot times",
    base_times: "Comma-separated base times for gprofile",
    tau_max: "Largest tau of a G profile",
    m: "Number of tau intervals of a G profile",
    q_exponent: "equation or text",
}

#[derive(Args, Debug)]
struct RunArgs {
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[command(flatten)]
    keys: KeyArgs,
}

impl RunArgs {
    fn load(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_path(path)?,
            None => RunConfig::default(),
        };
        for (key, value) in self.keys.pairs() {
            cfg.set(key, value, Origin::Flag)?;
        }
        Ok(cfg.finish()?)
    }
}

fn parse_range(s: &str) -> Result<AxisRange, String> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|x| x.trim().parse::<f64>().map_err(|_| format!("`{x}` is not a number")))
        .collect::<Result<_, _>>()?;
    let [lo, hi, step] = parts[..] else {
        return Err(format!("expected lo:hi:step, got `{s}`"));
    };
    AxisRange::new(lo, hi, step).map_err(|e| e.to_string())
}

fn parse_family(s: &str) -> Result<RegionFamily, String> {
    RegionFamily::from_str(s).map_err(|e| e.to_string())
}

#[derive(Args, Debug)]
struct RegionArgs {
    /// pme0 or pme1.
    #[arg(long, value_parser = parse_family)]
    family: RegionFamily,
    /// Alpha axis as lo:hi:step.
    #[arg(long, value_parser = parse_range, default_value = "0.5:4:0.125")]
    alpha: AxisRange,
    /// Beta axis as lo:hi:step.
    #[arg(long, value_parser = parse_range, default_value = "0.5:4:0.125")]
    beta: AxisRange,
    /// Space dimension.
    #[arg(long, default_value_t = 1)]
    d: usize,
    /// Scheme constant C_RK.
    #[arg(long = "c-rk", default_value_t = 1.0)]
    c_rk: f64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CaseName {
    /// Heat equation, logarithmic entropy.
    HeatLog,
    /// Porous medium with a power entropy.
    Pme,
}

#[derive(Args, Debug)]
struct ConditionArgs {
    #[arg(long, value_enum)]
    case: CaseName,
    /// Entropy exponent (pme case).
    #[arg(long, default_value_t = 2.0)]
    alpha: f64,
    /// Porous-medium exponent (pme case).
    #[arg(long, default_value_t = 2.0)]
    beta: f64,
    #[arg(long, default_value_t = 0.1)]
    u_min: f64,
    #[arg(long, default_value_t = 10.0)]
    u_max: f64,
    #[arg(long, default_value_t = 100)]
    points: usize,
    #[arg(long, default_value_t = 1)]
    d: usize,
    #[arg(long = "c-rk", default_value_t = 1.0)]
    c_rk: f64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct DlssArgs {
    /// c3, as a decimal or p/q.
    #[arg(long, default_value = "-0.029", allow_hyphen_values = true)]
    c3: String,
    /// c8, as a decimal or p/q; defaults to the stationary point 17/172.
    #[arg(long, allow_hyphen_values = true)]
    c8: Option<String>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate one scheme and record the entropy history.
    Simulate(RunArgs),
    /// Profile G(tau) for each scheme at each base time.
    Gprofile(RunArgs),
    /// Admissibility mask of a porous-medium region over an (alpha, beta) grid.
    Region(RegionArgs),
    /// Evaluate the scalar-diffusion conditions on a u grid.
    CheckConditions(ConditionArgs),
    /// Exact constants of the DLSS computation.
    DlssConstants(DlssArgs),
}

#[derive(Parser, Debug)]
#[command(name = "entropy-rk", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn dispatch(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Simulate(args) => commands::simulate(&args.load()?, &args.out),
        Command::Gprofile(args) => commands::gprofile(&args.load()?, &args.out),
        Command::Region(args) => commands::region(
            &RegionRequest {
                family: args.family,
                alpha: args.alpha,
                beta: args.beta,
                d: args.d,
                c_rk: args.c_rk,
            },
            &args.out,
        ),
        Command::CheckConditions(args) => commands::check_conditions(
            &ConditionRequest {
                case: match args.case {
                    CaseName::HeatLog => ConditionCase::HeatLog,
                    CaseName::Pme => ConditionCase::Pme {
                        alpha: args.alpha,
                        beta: args.beta,
                    },
                },
                u_min: args.u_min,
                u_max: args.u_max,
                points: args.points,
                d: args.d,
                c_rk: args.c_rk,
            },
            &args.out,
        ),
        Command::DlssConstants(args) => commands::dlss_constants(&args.c3, args.c8.as_deref(), &args.out),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error[{}]: {err}", err.category());
            ExitCode::FAILURE
        }
    }
}
