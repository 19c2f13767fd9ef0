//! Writes one synthetic instance plus `truth.csv`, the true probabilities
//! of its unobserved cells.

use std::path::PathBuf;

use anyhow::Result;
use ebmc_core::synth::{generate, SynthConfig};
use serde::{Deserialize, Serialize};

use super::rng_mode;
use crate::config::{self, RawArgs};
use crate::tables::write_predictions;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthCommandConfig {
    pub out: PathBuf,
    pub synth: SynthConfig,
}

impl Default for SynthCommandConfig {
    fn default() -> Self {
        Self {
            out: PathBuf::from("synth-out"),
            synth: SynthConfig::default(),
        }
    }
}

pub fn run(args: &RawArgs) -> Result<bool> {
    let cfg: SynthCommandConfig = config::resolve(args)?;
    if args.show_config {
        print!("{}", config::to_toml(&cfg)?);
        return Ok(true);
    }
    let inst = generate(&cfg.synth)?;
    config::echo(&cfg.out, "synth", &cfg, rng_mode()?)?;
    inst.write_dir(&cfg.out)?;
    let (cells, probs) = inst.unobserved_truth();
    write_predictions(&cfg.out.join("truth.csv"), &cells, &probs)?;
    eprintln!(
        "wrote a {}x{} instance with {} observed cells to {}",
        cfg.synth.p,
        cfg.synth.q,
        inst.y.n_observed(),
        cfg.out.display()
    );
    Ok(true)
}
