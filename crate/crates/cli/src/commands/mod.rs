pub mod em_reference;
pub mod eval;
pub mod fit;
pub mod predict;
pub mod reliability;
pub mod synth;
pub mod synth_bench;

use anyhow::{anyhow, Result};
use ebmc_core::RngMode;

pub(crate) fn rng_mode() -> Result<RngMode> {
    RngMode::from_env().map_err(|e| anyhow!("{}: {e}", ebmc_core::RNG_MODE_ENV))
}
