use clap::{Parser, Subcommand};
use dacsim_cli::{cmd_check, cmd_design, cmd_run, RunOverrides};
use std::path::PathBuf;
use std::process::ExitCode;

/// Simulator for dynamic average consensus networks with link-fault
/// detection and accommodation.
///
/// SCENARIO is either a builtin name (for example
/// `example1_isac_fault_accommodated`) or the path of a scenario TOML
/// file. Builtin names are checked first.
#[derive(Parser)]
#[command(name = "dacsim", version, disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write trajectory.csv and metrics.txt.
    Run {
        scenario: String,
        /// Output directory (created if needed).
        #[arg(long)]
        out: PathBuf,
        /// Override the integration step size.
        #[arg(long)]
        dt: Option<f64>,
        /// Override the end time.
        #[arg(long)]
        t_end: Option<f64>,
    },
    /// Verify the tracking-design and observer-existence conditions.
    Check { scenario: String },
    /// Print the designed observer matrices and their spectrum.
    Design { scenario: String },
}

fn main() -> ExitCode {
    // Usage errors must exit 1 (clap's default is 2, which this tool
    // reserves for divergence).
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    let mut stdout = std::io::stdout();
    let result = match &cli.command {
        Command::Run { scenario, out, dt, t_end } => cmd_run(
            scenario,
            out,
            RunOverrides { dt: *dt, t_end: *t_end },
            &mut stdout,
        ),
        Command::Check { scenario } => cmd_check(scenario, &mut stdout),
        Command::Design { scenario } => cmd_design(scenario, &mut stdout),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
