//! `theory`, `simulate`, `analyze` and `sweep`. Each writes its products
//! and a manifest into the output directory and returns the manifest.

mod analyze;
mod simulate;
mod sweep;
mod theory;

pub use analyze::analyze;
pub use simulate::{equipartition_check, simulate, SelfCheck};
pub use sweep::{point_configs, sweep, SweepRow};
pub use theory::theory;
