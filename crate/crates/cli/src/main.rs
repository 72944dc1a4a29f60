use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use envyfree::measure::{Rat, ValueMeasure};
use envyfree_cli::commands::{self, CliError, Mode};
use envyfree_cli::valuation::Valuation;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Exact envy-free cake cutting.
///
/// Exit codes: 0 success, 2 input error, 3 violated guarantee or internal
/// contradiction.
#[derive(Parser)]
#[command(name = "envyfree", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Text,
    Machine,
}

#[derive(Subcommand)]
enum Command {
    /// Divide the cake described by a valuation file.
    Divide {
        /// Valuation file: `agents: <n>` then `agent <name>: b0 d1 b1 ... bk`.
        #[arg(long, required_unless_present = "seed")]
        input: Option<String>,
        /// Algorithm to run.
        #[arg(long, value_enum)]
        mode: Mode,
        /// Accuracy for disconnected-n, as `p/q`.
        #[arg(long, value_parser = commands::parse_epsilon)]
        epsilon: Option<Rat>,
        /// Name of the favoured agent (default: the first one).
        #[arg(long)]
        vip: Option<String>,
        /// Report layout.
        #[arg(long, value_enum, default_value = "text")]
        report: ReportFormat,
        /// Rescale densities to total one instead of rejecting them.
        #[arg(long)]
        normalize: bool,
        /// Generate a random valuation with this seed instead of reading
        /// `--input`; the valuation is printed before the report.
        #[arg(long, conflicts_with = "input", requires = "agents")]
        seed: Option<u64>,
        /// Number of agents for `--seed`.
        #[arg(long)]
        agents: Option<usize>,
    },
    /// Print the case-by-case proof for the four-agent algorithm.
    Prove4 {
        /// Print only this case (1 to 24).
        #[arg(long)]
        case: Option<usize>,
    },
    /// Search ordinal profiles on which every branch of a template fails.
    Search5 {
        /// Template file, one branch per line such as `b:2 c:3 d:2`.
        #[arg(long)]
        template_file: Option<String>,
        /// Check only this profile, e.g. `12345/12345/13245` (orders of
        /// b, c, ... from worst to best).
        #[arg(long)]
        profile: Option<String>,
        /// Search nodes per profile.
        #[arg(long)]
        budget: Option<usize>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Divide { input, mode, epsilon, vip, report, normalize, seed, agents } => {
            let valuation = match (input, seed) {
                (Some(path), _) => Valuation::parse(&commands::read_file(&path)?, normalize)?,
                (None, Some(seed)) => {
                    let n = agents.ok_or_else(|| CliError::Usage("--seed needs --agents".into()))?;
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let v = Valuation {
                        names: (0..n).map(|i| format!("agent{}", i + 1)).collect(),
                        measures: (0..n).map(|_| ValueMeasure::random(&mut rng, 6)).collect(),
                    };
                    print!("{}", v.render());
                    println!();
                    v
                }
                (None, None) => return Err(CliError::Usage("give --input or --seed".into())),
            };
            let r = commands::divide(&valuation, mode, vip.as_deref(), epsilon)?;
            match report {
                ReportFormat::Text => print!("{}", r.render_text()),
                ReportFormat::Machine => print!("{}", r.render_machine()),
            }
            if let Some(g) = r.guarantees.iter().find(|g| !g.holds()) {
                return Err(CliError::Violated(format!("{} (actual {})", g.label(), commands::show(&g.actual))));
            }
            Ok(())
        }
        Command::Prove4 { case } => {
            print!("{}", commands::prove4(case)?);
            Ok(())
        }
        Command::Search5 { template_file, profile, budget } => {
            let text = template_file.as_deref().map(commands::read_file).transpose()?;
            print!("{}", commands::search5(text.as_deref(), profile.as_deref(), budget)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
