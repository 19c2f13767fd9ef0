//! Command implementations behind the `ebmc` binary.

pub mod commands;
pub mod config;
pub mod tables;

use anyhow::Result;

use config::RawArgs;

pub const COMMANDS: [&str; 7] = [
    "synth-bench",
    "synth",
    "fit",
    "predict",
    "eval",
    "reliability",
    "em-reference",
];

/// Runs `command` with its raw `--key value` arguments. `Ok(false)` means
/// the command completed but some requested unit of work failed.
pub fn run(command: &str, args: &[String]) -> Result<bool> {
    let args = RawArgs::parse(args)?;
    match command {
        "synth-bench" => commands::synth_bench::run(&args),
        "synth" => commands::synth::run(&args),
        "fit" => commands::fit::run(&args),
        "predict" => commands::predict::run(&args),
        "eval" => commands::eval::run(&args),
        "reliability" => commands::reliability::run(&args),
        "em-reference" => commands::em_reference::run(&args),
        other => anyhow::bail!("unknown command `{other}`"),
    }
}
