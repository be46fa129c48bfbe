//! The guide's chapters as modules, so `cargo test` runs every listing.

#[doc = include_str!("src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("src/pulses.md")]
pub mod pulses {}
#[doc = include_str!("src/master-equation.md")]
pub mod master_equation {}
#[doc = include_str!("src/correlation.md")]
pub mod correlation {}
#[doc = include_str!("src/spectrum.md")]
pub mod spectrum {}
#[doc = include_str!("src/phonons.md")]
pub mod phonons {}
#[doc = include_str!("src/analysis.md")]
pub mod analysis {}
#[doc = include_str!("src/cli.md")]
pub mod cli {}
