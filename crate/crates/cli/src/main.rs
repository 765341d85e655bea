//! `ksnest`: fractal inspection, fixed-point solving, p-harmonic extension,
//! Korevaar-Schoen profiles and the NE / Hoelder / convergence experiments.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ksnest::ks::Estimator;

#[derive(Parser, Debug)]
#[command(
    name = "ksnest",
    version,
    about = "Korevaar-Schoen experiments on nested fractals"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Geometry summary: N, ratio, alpha, |V_n|, V_0, symmetry order, Condition (H).
    Info(Common),
    /// Scaling factor and critical exponent for each p of a comma list.
    Sigma(Common),
    /// p-harmonic extension of boundary data, tabulated on V_level.
    Extend(Common),
    /// Phi_u^sigma(r) over a radius grid.
    Phi(Common),
    /// NE ratios for the standard test suite.
    Ne(Common),
    /// Empirical Hoelder constant of a p-harmonic extension across probe levels.
    Hoelder(Common),
    /// Uniform gap between H_p(u_hat_n) and u as n grows.
    Converge(Common),
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Built-in fractal: sierpinski-gasket or vicsek.
    #[arg(long, default_value = "sierpinski-gasket")]
    pub fractal: String,
    /// TOML or JSON file with name, dimension, ratio and anchors; overrides --fractal.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Exponent p > 1; `sigma` accepts a comma-separated list.
    #[arg(long, default_value = "2")]
    pub p: String,
    /// Smoothness index; defaults to the critical exponent for p.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Level n: output level for extend, energy level for hoelder, largest n for converge.
    #[arg(long)]
    pub level: Option<usize>,
    /// Finest quadrature or probe level.
    #[arg(long)]
    pub m_max: Option<usize>,
    /// `default`, `geom:K` (3 rho^k for k <= K), `log:R_MAX:R_MIN:COUNT` or a comma list of radii.
    #[arg(long, default_value = "default")]
    pub r_grid: String,
    #[arg(long, default_value = "cell", value_parser = parse_estimator)]
    pub estimator: Estimator,
    /// Monte Carlo sample count.
    #[arg(long, default_value_t = 20_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Comma-separated boundary values on V_0 for extend, phi, hoelder and converge.
    #[arg(long)]
    pub boundary: Option<String>,
    /// Test function for phi: harmonic, constant or coordinate-D.
    #[arg(long, default_value = "harmonic")]
    pub function: String,
    /// Number of random p-harmonic extensions in the NE suite.
    #[arg(long, default_value_t = 20)]
    pub suite_size: usize,
    /// JSON fixed-point cache.
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Ignore cached fixed points and overwrite them.
    #[arg(long)]
    pub refresh_cache: bool,
    /// Output directory; CSV goes to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_estimator(s: &str) -> Result<Estimator, String> {
    s.parse().map_err(|e: ksnest::Error| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Info(c) => commands::info(c),
        Command::Sigma(c) => commands::sigma(c),
        Command::Extend(c) => commands::extend(c),
        Command::Phi(c) => commands::phi(c),
        Command::Ne(c) => commands::ne(c),
        Command::Hoelder(c) => commands::hoelder(c),
        Command::Converge(c) => commands::converge(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
