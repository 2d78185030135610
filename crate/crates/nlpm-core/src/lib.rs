//! Numerical core for the porous medium equation with a fractional potential
//! pressure, `u_t = div(u^{m-1} grad K_s[u])` in one space dimension.
//!
//! Everything here is `no_std` + `alloc` and deterministic. File output,
//! configuration and the CLI live in the `nlpm` crate.

#![no_std]

extern crate alloc;

pub mod barriers;
pub mod diagnostics;
pub mod error;
pub mod evolve;
pub mod fft;
pub mod fracops;
pub mod grid;
pub mod integrated;
pub mod math;
pub mod validate;

pub use error::{Error, Result};
pub use grid::{Field, Grid};
