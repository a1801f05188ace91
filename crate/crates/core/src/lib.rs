//! Slope data for U_p acting on overconvergent quaternionic forms near the
//! boundary of weight space: truncated compact operators from double-coset
//! data, two-variable Fredholm series, Newton polygons, and halo structure
//! checks.

pub mod classical;
pub mod cli;
pub mod coset;
pub mod dist;
pub mod fredholm;
pub mod lambda;
pub mod padic;
pub mod rat;
pub mod weight;

pub use padic::{binom_coeffs, exp_p, ExtKind, Padic, PadicError, PadicRing};
pub use rat::{PrecVal, Rat, ValQ};

/// CLI entry point; returns the process exit code.
pub fn run() -> i32 {
    cli::run()
}
