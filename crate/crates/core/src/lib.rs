//! Construction and exact verification of monogamy relations for a chained
//! family of Bell inequalities over the no-signaling polytope.
//!
//! Everything here is computed in exact rational arithmetic ([`Rational`] is
//! an arbitrary-precision `num::BigRational`); no floating point enters any
//! result. The crate is organized as:
//!
//! * [`scenario`] / [`behavior`] — Bell scenarios `(N, M, d)` and behaviors
//!   (conditional probability tables) with validation, no-signaling checks,
//!   and marginals.
//! * [`bell`] — Bell functionals as coefficient vectors over behavior tables,
//!   built from modular-expectation terms `<[sum ± outcomes + shift] mod d>`,
//!   including the chained functional `I^{M,d}`, its multipartite extension
//!   `I^{N,M,d}`, the CGLMP decomposition, and the `I'` and `I3322`
//!   functionals used as counterexample material.
//! * [`boxes`] — canonical behaviors: the extremal no-signaling boxes that
//!   reach `I = 0`, deterministic and uniform boxes, mixtures, and extension
//!   by an uncorrelated deterministic party.
//! * [`lp`] — a dense two-phase simplex solver over rationals with Bland's
//!   rule, dual certificates, and the no-signaling constraint system.
//! * [`monogamy`] — the verified tradeoff relations: linear-programming
//!   minima of sums of lifted functionals, tightness witnesses, the
//!   counterexamples showing the relations do not extend, guessing-probability
//!   bounds, and a correlation-monogamy identity.
//!
//! All optimization results carry exact dual certificates that are re-checked
//! independently of the solver (see [`lp::verify_certificate`]).

pub mod behavior;
pub mod bell;
pub mod boxes;
pub mod error;
pub mod lp;
pub mod monogamy;
pub mod rational;
pub mod scenario;

pub use behavior::{Behavior, NsViolation, ValidationFailure};
pub use bell::{BellFunctional, ModularTerm, Sign, TermOperand};
pub use error::Error;
pub use rational::Rational;
pub use scenario::Scenario;
