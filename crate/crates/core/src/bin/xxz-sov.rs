use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use xxz_sov::cli::{self, CliError, Command, RunConfig};

/// SOV toolkit for the antiperiodic XXZ chain.
#[derive(Parser, Debug)]
#[command(name = "xxz-sov", version)]
struct Args {
    /// spectrum | scalar-product | form-factor | hamiltonian | verify
    command: String,
    /// JSON parameter document.
    #[arg(long)]
    config: PathBuf,
    /// Output file; the extension (.json or .csv) selects the format. Defaults to JSON on stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Seed for every random choice in the run.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Pass threshold of the command's main comparison.
    #[arg(long)]
    tol: Option<f64>,
    /// Write T̄(λ) to transfer_operator.json; λ as `re` or `re,im`.
    #[arg(long, value_name = "LAMBDA", allow_hyphen_values = true)]
    dump_operator: Option<String>,
    /// Write the left and right SOV bases to sov_basis.json.
    #[arg(long)]
    dump_sov_basis: bool,
    /// Directory for the dump files.
    #[arg(long, default_value = ".")]
    dump_dir: PathBuf,
    /// Operator for form-factor: sigma_minus or sigma_z.
    #[arg(long)]
    operator: Option<String>,
    /// Comma-separated sites for form-factor (default: all).
    #[arg(long, value_delimiter = ',')]
    sites: Option<Vec<usize>>,
    /// Allow chains longer than the default cap.
    #[arg(long)]
    allow_large: bool,
}

fn build(args: &Args) -> Result<RunConfig, CliError> {
    let command: Command = args.command.parse()?;
    let mut config = RunConfig::load(command, &args.config)?.with_output(args.output.clone())?;
    config.seed = args.seed;
    config.tol = args.tol;
    config.allow_large = args.allow_large;
    if let Some(op) = &args.operator {
        config.operator = Some(cli::parse_operator(op)?);
    }
    if let Some(sites) = &args.sites {
        config.sites = sites.clone();
    }
    config.validate()?;
    if let Some(threads) = cli::threads_from_env()? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    if let Some(l) = &args.dump_operator {
        cli::dump_operator(&config.params, cli::parse_complex(l)?, &args.dump_dir)?;
    }
    if args.dump_sov_basis {
        cli::dump_sov_basis(&config.params, &args.dump_dir)?;
    }
    Ok(config)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    let code = match build(&args) {
        Ok(config) => cli::execute(&config),
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
