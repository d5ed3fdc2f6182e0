//! Gray-box optimization for Max3Sat.
//!
//! The crate is organised bottom-up:
//!
//! - [`instance`]: clauses, assignments, DIMACS I/O, generators and the
//!   reference full-scan evaluation.
//! - [`vig`]: the variable interaction graph.
//! - [`mmst`]: per-variable multi-satisfiability counters with O(1)
//!   single-flip fitness and clause-satisfiability deltas.
//! - [`operators`]: hill climbers, perturbation masks, iterated local search
//!   and the long-connection drift.
//! - [`px`]: partition crossover.
//! - [`pyramid`]: the leveled population and the three optimizer drivers.
//! - [`analysis`]: backbones, overlap statistics, the difficulty measure
//!   and rank correlation.
//!
//! All randomness comes from [`RunRng`], ChaCha with 8 rounds seeded from a
//! `u64`. The stream is portable, so instances and runs reproduce
//! bit-for-bit across platforms.

pub mod analysis;
pub mod error;
pub mod instance;
pub mod mmst;
pub mod operators;
pub mod px;
pub mod pyramid;
pub mod vig;

pub use error::{Error, ParseError, ParseErrorKind, Result};
pub use instance::{
    clause_sat_count, parse_dimacs, write_dimacs, Assignment, Clause, GeneratorConfig,
    GeneratorKind, Instance, Literal, SatProfile,
};
pub use mmst::{f_cf, Mmst, Tally};
pub use pyramid::{Algorithm, RunConfig, RunResult, StopCriteria};
pub use vig::Vig;

use rand::SeedableRng;

/// The random number generator used for generation and for runs.
pub type RunRng = rand_chacha::ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> RunRng {
    RunRng::seed_from_u64(seed)
}
