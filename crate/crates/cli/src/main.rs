use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

const SETTINGS_HELP: &str = "Settings are read from `--config FILE.toml` and then overridden by \
`--key value` pairs; dotted keys reach nested tables (`--mcem.n_iters 5`). \
`--show-config` prints the resolved settings, defaults included, and exits. \
The resolved settings are written to `<out>/config.toml`, and rerunning \
with `--config <out>/config.toml` reproduces the outputs. \
EBMC_RNG_MODE selects `sequential` (default) or `substream` sampling.";

#[derive(Parser)]
#[command(name = "ebmc", version, about = "Empirical Bayes 1-bit matrix completion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
#[command(after_help = SETTINGS_HELP)]
struct Settings {
    /// --config FILE, --key value overrides, --show-config
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "SETTINGS")]
    args: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Replicated synthetic benchmark over a parameter grid (KL, Hellinger)
    SynthBench(Settings),
    /// Write one synthetic instance with its true probabilities
    Synth(Settings),
    /// Fit the prior by Monte Carlo EM and predict held-out cells
    Fit(Settings),
    /// Predict from the hyperparameters of a previous fit
    Predict(Settings),
    /// Accuracy, cross-entropy, ECE and truth-based metrics
    Eval(Settings),
    /// Reliability diagram as CSV and SVG
    Reliability(Settings),
    /// Frobenius risk study of the Efron-Morris estimator
    EmReference(Settings),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, settings) = match cli.command {
        Command::SynthBench(s) => ("synth-bench", s),
        Command::Synth(s) => ("synth", s),
        Command::Fit(s) => ("fit", s),
        Command::Predict(s) => ("predict", s),
        Command::Eval(s) => ("eval", s),
        Command::Reliability(s) => ("reliability", s),
        Command::EmReference(s) => ("em-reference", s),
    };
    match ebmc_cli::run(name, &settings.args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
