use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use stochclifford::calculus::fixture_registry;
use stochclifford_cli::experiments::to_json;
use stochclifford_cli::{
    reproduce_all_observed, run, write_report, write_summary, CliError, ExperimentSpec, Result, Scale, DEFAULT_SEED,
    EXIT_CHECK_FAILURE, EXIT_PASS, EXIT_USAGE,
};

#[derive(Parser)]
#[command(name = "stochclifford", version, about = "Stochastic Clifford analysis experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment described by a TOML file.
    Run {
        #[arg(long, env = "STOCHCLIFFORD_SPEC")]
        spec: PathBuf,
        /// Overrides the seed in the file.
        #[arg(long, env = "STOCHCLIFFORD_SEED")]
        seed: Option<u64>,
        /// Report directory; overrides `output` in the file.
        #[arg(long, env = "STOCHCLIFFORD_OUT")]
        out: Option<PathBuf>,
        #[arg(long, env = "STOCHCLIFFORD_THREADS")]
        threads: Option<usize>,
        /// What to print on stdout. Files are always JSON, plus CSV where the kind has a table.
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// List the named test fields and whether each is monogenic.
    ListFixtures {
        /// Only names containing this substring.
        #[arg(long)]
        filter: Option<String>,
    },
    /// Run the full acceptance suite and write summary.json and summary.txt.
    ReproduceAll {
        #[arg(long, env = "STOCHCLIFFORD_SEED", default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, env = "STOCHCLIFFORD_OUT", default_value = "reports")]
        out: PathBuf,
        #[arg(long, env = "STOCHCLIFFORD_THREADS")]
        threads: Option<usize>,
        /// Reduced problem sizes, same code paths.
        #[arg(long)]
        smoke: bool,
    },
}

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match threads {
        None => f(),
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Pool(e.to_string()))?
            .install(f),
    }
}

fn execute(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Run {
            spec,
            seed,
            out,
            threads,
            format,
        } => {
            let mut spec = ExperimentSpec::load(&spec)?;
            if let Some(seed) = seed {
                spec.seed = seed;
            }
            let (report, csv) = with_pool(threads, || run(&spec))?;
            if let Some(dir) = out.or_else(|| spec.output.clone()) {
                for path in write_report(&dir, &report, csv.as_deref())? {
                    eprintln!("wrote {}", path.display());
                }
            }
            match format {
                Format::Json => print!("{}", to_json(&report)?),
                Format::Csv => match &csv {
                    Some(csv) => print!("{csv}"),
                    None => {
                        return Err(CliError::Usage(format!("kind `{}` has no CSV output", report.kind)));
                    }
                },
            }
            for failure in &report.failures {
                eprintln!("FAIL {failure}");
            }
            Ok(if report.passed { EXIT_PASS } else { EXIT_CHECK_FAILURE })
        }
        Command::ListFixtures { filter } => {
            println!("{:<10} {:<15} {:<8} {:<28} description", "name", "monogenic", "min n", "provenance");
            for e in fixture_registry() {
                if filter.as_deref().is_some_and(|f| !e.name.contains(f)) {
                    continue;
                }
                println!(
                    "{:<10} {:<15} {:<8} {:<28} {}",
                    e.name,
                    if e.monogenic { "monogenic" } else { "non-monogenic" },
                    e.min_dim,
                    e.provenance,
                    e.description
                );
            }
            Ok(EXIT_PASS)
        }
        Command::ReproduceAll {
            seed,
            out,
            threads,
            smoke,
        } => {
            let scale = if smoke { Scale::Smoke } else { Scale::Full };
            let registry = fixture_registry();
            let summary = with_pool(threads, || {
                reproduce_all_observed(seed, scale, &registry, &mut |r, elapsed| {
                    eprintln!(
                        "criterion {:>2} {} ({:.1} s): {}",
                        r.id,
                        if r.passed { "PASS" } else { "FAIL" },
                        elapsed.as_secs_f64(),
                        r.title
                    );
                })
            })?;
            write_summary(&out, &summary)?;
            print!("{}", summary.table());
            Ok(if summary.passed { EXIT_PASS } else { EXIT_CHECK_FAILURE })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
