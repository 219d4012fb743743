//! Simulator and analysis toolkit for time-bin entanglement experiments built
//! around a reconfigurable switch-plus-interferometer receiver.
//!
//! The crate is organized bottom-up:
//!
//! - [`quantum`]: qubit/biphoton states, receiver effects, Born rule and
//!   entanglement measures.
//! - [`device`]: maps a receiver configuration (superpose, overlap, reverse)
//!   to timed detection effects.
//! - [`source`]: pair-generation statistics and the prepared biphoton state.
//! - [`sim`]: Monte Carlo time-tag generation with losses, jitter, dark
//!   counts, dead time and PRBS-driven basis selection.
//! - [`analysis`]: coincidences, joint temporal intensity, fringe fits, CHSH.
//! - [`tomography`]: 36-outcome measurement set and maximum-likelihood
//!   reconstruction.
//! - [`qkd`]: BBM92 sifting, QBERs and finite-key secret-key lengths.
//! - [`cli`]: the batch front-end behind the `tbq` binary.
//!
//! Runnable walkthroughs live in `examples/`.

pub mod analysis;
pub mod cli;
pub mod device;
pub mod error;
pub mod qkd;
pub mod quantum;
pub mod sim;
pub mod source;
pub mod tomography;

pub use error::{Error, Result};
