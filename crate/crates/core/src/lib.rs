//! Cohen–Lenstra measures on integer partitions for the p-parts of sandpile
//! groups of random graphs.
//!
//! - [`partition`]: partitions and their statistics.
//! - [`rational`], [`bounded`], [`qseries`]: exact rationals, rigorous
//!   enclosures, q-Pochhammer products and infinite-product constants.
//! - [`measures`]: the limiting measure, its size and parts-count marginals,
//!   the u-deformed and at-most-r-parts measures, and tabulation.
//! - [`sampler`]: the column-by-column Markov chain generator.
//! - [`sandpile`], [`snf`]: Erdős–Rényi graphs, Smith normal form and the
//!   empirical comparison.
//! - [`verify`]: identity, recursion and chain verification suites.

pub mod bounded;
pub mod error;
pub mod measures;
pub mod partition;
pub mod prime;
pub mod qseries;
pub mod rational;
pub mod sampler;
pub mod sandpile;
pub mod snf;
pub mod verify;

pub use bounded::BoundedReal;
pub use error::{Error, Result};
pub use measures::{ConstantTag, MassValue, Measure, PartitionDistribution};
pub use partition::Partition;
pub use prime::Prime;
pub use rational::ExactRational;
