use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use stpa_workbench::behavior::DEFAULT_NODE_CAP;
use stpa_workbench::harness::commands::{self, parse_criteria, Common, RunAllOptions};
use stpa_workbench::harness::pipeline::{Mode, TestgenOptions};
use stpa_workbench::harness::{exit, HarnessError};

/// STPA safety workbench: context analysis, model checking and test generation.
#[derive(Parser)]
#[command(name = "stpa-workbench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Project file (.stpa).
    project: PathBuf,
    /// Root directory for all outputs.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl CommonArgs {
    fn common(&self) -> Common {
        Common {
            project: self.project.clone(),
            out: self.out.clone(),
            seed: self.seed,
        }
    }
}

#[derive(Args)]
struct TestgenArgs {
    /// Comma-separated subset of states, transitions, pairs, actions.
    #[arg(long, default_value = "states,transitions,pairs,actions")]
    criteria: String,
    /// Maximum number of tests before deduplication.
    #[arg(long, default_value_t = 5000)]
    budget: usize,
    /// Add minimum and maximum concrete values for every step.
    #[arg(long)]
    boundary: bool,
    /// Also write concrete test scripts.
    #[arg(long)]
    concrete: bool,
}

impl TestgenArgs {
    fn options(&self, seed: u64) -> Result<TestgenOptions, HarnessError> {
        Ok(TestgenOptions {
            criteria: parse_criteria(&self.criteria)?,
            seed,
            budget: self.budget,
            boundary: self.boundary,
            concrete: self.concrete,
            node_cap: DEFAULT_NODE_CAP,
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Build, filter and evaluate context tables; refine requirements.
    Analyze {
        #[command(flatten)]
        common: CommonArgs,
        /// full, pairwise or t=<n>.
        #[arg(long, default_value = "full")]
        mode: String,
    },
    /// Model-check every requirement against the state machine.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = DEFAULT_NODE_CAP)]
        node_cap: usize,
    },
    /// Generate, deduplicate and trace test cases.
    Testgen {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        testgen: TestgenArgs,
        /// Fail when some coverage obligation is left uncovered.
        #[arg(long)]
        strict: bool,
    },
    /// Run a suite against a system under test.
    Execute {
        #[command(flatten)]
        common: CommonArgs,
        /// Suite file; defaults to the testgen output under --out.
        suite: Option<PathBuf>,
        #[arg(long)]
        sut: String,
        #[arg(long)]
        boundary: bool,
    },
    /// Consolidate the stage outputs under --out into one report.
    Report {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// All stages in order.
    RunAll {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value = "pairwise")]
        mode: String,
        #[arg(long, default_value_t = DEFAULT_NODE_CAP)]
        node_cap: usize,
        #[command(flatten)]
        testgen: TestgenArgs,
        #[arg(long, default_value = "acc-ref")]
        sut: String,
    },
}

fn run(cli: Cli) -> Result<i32, HarnessError> {
    match cli.command {
        Command::Analyze { common, mode } => commands::cmd_analyze(&common.common(), mode.parse()?),
        Command::Verify { common, node_cap } => commands::cmd_verify(&common.common(), node_cap),
        Command::Testgen {
            common,
            testgen,
            strict,
        } => commands::cmd_testgen(&common.common(), &testgen.options(common.seed)?, strict),
        Command::Execute {
            common,
            suite,
            sut,
            boundary,
        } => commands::cmd_execute(&common.common(), suite.as_deref(), &sut, boundary),
        Command::Report { common } => commands::cmd_report(&common.common()),
        Command::RunAll {
            common,
            mode,
            node_cap,
            testgen,
            sut,
        } => {
            let opts = RunAllOptions {
                mode: mode.parse::<Mode>()?,
                node_cap,
                boundary: testgen.boundary,
                testgen: testgen.options(common.seed)?,
                sut,
            };
            commands::cmd_run_all(&common.common(), &opts)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::INPUT } else { exit::OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
