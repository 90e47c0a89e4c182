//! Entropy of multiplicative shifts of finite type.
//!
//! A configuration `x: ℕ → {0, …, N−1}` is admissible when, for every `m`,
//! the product `x_m · x_{γ₁m} ⋯ x_{γ_dm}` lies in a fixed set `C`. The
//! integers split into independent lattices generated by the prime base of
//! `Γ`; counting labelings of finite lattices gives the entropy as a rapidly
//! converging series. Coupling with an additive shift on consecutive
//! coordinates is handled by bracketing bounds from generation graphs.

pub mod analysis;
pub mod coupled;
pub mod entropy;
pub mod error;
pub mod frontier;
pub mod pattern;
pub mod relation;

pub use error::{Error, Result};
pub use pattern::{ConstraintSystem, Convention, PatternCount, TransitionMatrix};
pub use relation::GammaSet;
