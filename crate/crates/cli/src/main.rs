use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use orthomean_cli::{
    cmd_check, cmd_moments, cmd_roots_hist, cmd_sigma_table, exit_code, path_cap_from_env, prepare, Overrides,
    RunConfig, EXIT_OK,
};

/// Weighted means of orthogonal-polynomial root distributions and their
/// equilibrium limits.
#[derive(Parser, Debug)]
#[command(name = "orthomean", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Moment tables for μ̄_n, λ_n and ν_{n+1} next to the equilibrium moments
    Moments,
    /// Weighted root histograms, equilibrium density curve and KS distances
    RootsHist,
    /// Σ partial sums against their closed forms
    SigmaTable,
    /// Run the invariant suite; exit 1 if anything fails
    Check,
    /// Print the effective configuration as JSON
    ShowConfig,
}

#[derive(Args, Debug)]
struct Flags {
    /// JSON run configuration; other flags override its fields
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// ultraspherical | jacobi_shift | legendre | chebyshev_t | chebyshev_u
    #[arg(long, global = true)]
    family: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    lambda: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    lambda1: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    lambda2: Option<f64>,
    /// identity | arithmetic | legendre | cesaro | gegenbauer | custom
    #[arg(long, global = true)]
    method: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    nu: Option<f64>,
    /// comma-separated list of n, ascending
    #[arg(long, global = true, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// highest moment order
    #[arg(long = "L", global = true)]
    max_l: Option<usize>,
    /// histogram bins
    #[arg(long, global = true)]
    bins: Option<usize>,
    /// output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

impl Flags {
    fn overrides(&self) -> Overrides {
        Overrides {
            family: self.family.clone(),
            lambda: self.lambda,
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            method: self.method.clone(),
            alpha: self.alpha,
            nu: self.nu,
            n: self.n.clone(),
            max_l: self.max_l,
            bins: self.bins,
            out: self.out.clone(),
        }
    }
}

fn run(cli: &Cli) -> orthomean::Result<i32> {
    let base = match &cli.flags.config {
        Some(path) => RunConfig::from_json_file(path)?,
        None => RunConfig::default(),
    };
    let cfg = cli.flags.overrides().apply(base)?;
    let cap = path_cap_from_env()?;
    if let Command::ShowConfig = cli.command {
        cfg.validate(cap)?;
        writeln!(std::io::stdout().lock(), "{}", serde_json::to_string_pretty(&cfg)?)?;
        return Ok(EXIT_OK);
    }
    let prep = prepare(&cfg, cap)?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let code = match cli.command {
        Command::Moments => {
            for path in cmd_moments(&prep)? {
                eprintln!("wrote {}", path.display());
            }
            EXIT_OK
        }
        Command::RootsHist => {
            cmd_roots_hist(&prep, &mut out)?;
            EXIT_OK
        }
        Command::SigmaTable => {
            eprintln!("wrote {}", cmd_sigma_table(&prep)?.display());
            EXIT_OK
        }
        Command::Check => {
            let report = cmd_check(&prep)?;
            report.write_table(&mut out)?;
            report.exit_code()
        }
        Command::ShowConfig => unreachable!(),
    };
    out.flush()?;
    Ok(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
