use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use conformal_spectra::cli::{parse_measure, run, CapacitorSpec, Command, CommandOptions, RunConfig};

#[derive(Parser)]
#[command(name = "confspec", version, about = "Laplace eigenvalues of measures on triangulated surfaces")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Args)]
struct Common {
    /// Mesh file (OFF or OBJ), or gen:icosphere:L, gen:torus:N, gen:disk:R, gen:square:N.
    #[arg(long)]
    mesh: Option<String>,
    /// uniform, boundary, atomic:v:m,v:m,... or a measure file.
    #[arg(long, default_value = "uniform")]
    measure: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    output: PathBuf,
    /// Read the whole run configuration from a JSON file instead.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Sub {
    /// Smallest eigenvalues and their clusters.
    Eigs {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long)]
        dump_eigenfunctions: bool,
    },
    /// Maximize the normalized first eigenvalue under a density-cap schedule.
    Maximize {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "10,100")]
        caps: Vec<f64>,
        #[arg(long, default_value_t = 60)]
        budget: usize,
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Capacity of a ball capacitor, with its fundamental tone.
    Capacity {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        center: usize,
        #[arg(long)]
        r: f64,
        #[arg(long)]
        big_r: f64,
    },
    /// Hersch and annuli upper bounds.
    Bounds {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        degree: usize,
    },
    /// Extremality certificate or separating direction.
    Extremality {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 1e-2)]
        tol: f64,
    },
    /// Heuristic regularity diagnostics of a measure.
    Diagnose {
        #[command(flatten)]
        common: Common,
    },
}

fn config(sub: Sub) -> Result<RunConfig, conformal_spectra::Error> {
    let (command, common, options) = match sub {
        Sub::Eigs { common, k, dump_eigenfunctions } => {
            (Command::Eigs, common, CommandOptions { k: Some(k), dump_eigenfunctions, ..Default::default() })
        }
        Sub::Maximize { common, caps, budget, resume } => {
            (Command::Maximize, common, CommandOptions { caps: Some(caps), budget: Some(budget), resume, ..Default::default() })
        }
        Sub::Capacity { common, center, r, big_r } => {
            let capacitor = CapacitorSpec { center: Some(center), r: Some(r), big_r: Some(big_r), f: None, g: None };
            (Command::Capacity, common, CommandOptions { capacitor: Some(capacitor), ..Default::default() })
        }
        Sub::Bounds { common, k, degree } => {
            (Command::Bounds, common, CommandOptions { k: Some(k), degree: Some(degree), ..Default::default() })
        }
        Sub::Extremality { common, k, tol } => {
            (Command::Extremality, common, CommandOptions { k: Some(k), tol: Some(tol), ..Default::default() })
        }
        Sub::Diagnose { common } => (Command::Diagnose, common, CommandOptions::default()),
    };
    if let Some(path) = &common.config {
        let mut c: RunConfig = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        c.command = command;
        return Ok(c);
    }
    let mesh = common.mesh.ok_or_else(|| conformal_spectra::Error::invalid("--mesh or --config is required"))?;
    Ok(RunConfig { command, mesh, measure: parse_measure(&common.measure)?, options, seed: common.seed, output_dir: common.output })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = config(cli.command).and_then(|c| run(&c));
    match outcome {
        Ok(o) => {
            println!("{}", o.summary);
            ExitCode::from(o.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
