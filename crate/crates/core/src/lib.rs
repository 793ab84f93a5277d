//! Game-theoretic analysis and Monte Carlo simulation of a block-withholding
//! betting game between a miner and a betting user.
//!
//! The miner can skew which of two outcomes (`D` or its complement `N`) a
//! published block reports by privately discarding freshly mined blocks and
//! re-mining until a favourable one appears. A user may bet on either outcome
//! at odds tilted by a house edge. This crate provides:
//!
//! - exact expected payoffs for both players ([`payoffs`]),
//! - closed-form best-response sets and Nash equilibria for every parameter
//!   regime ([`best_response`], [`equilibrium`]),
//! - an independent brute-force grid oracle that double-checks the closed
//!   forms ([`oracle`]),
//! - a seeded, reproducible block-level simulator with an aggregation
//!   experiment and best-response learning dynamics ([`sim`]).
//!
//! # Example
//!
//! ```
//! use blockbet::model::GameParameters;
//! use blockbet::equilibrium::{solve_equilibrium, Regime};
//!
//! let params = GameParameters::builder()
//!     .p(0.4)
//!     .epsilon(0.05)
//!     .b_d(6.0)
//!     .r_w(10.0)
//!     .c_d(1.2)
//!     .c_n(0.6)
//!     .build()?;
//! let eq = solve_equilibrium(&params, 1e-9)?;
//! assert_eq!(eq.regime, Regime::Mixed);
//! // The miner withholds a small fraction of blocks; the user bets part-time.
//! assert!((eq.miner_box.d.lo - 0.047619).abs() < 1e-6);
//! assert!((eq.user_box.d.lo - 0.571428).abs() < 1e-6);
//! # Ok::<(), blockbet::Error>(())
//! ```

pub mod best_response;
pub mod equilibrium;
pub mod model;
pub mod oracle;
pub mod payoffs;
pub mod sim;

/// Unified error type: input validation, closed forms used outside their
/// domain of validity, and simulation resource caps.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// One or more numeric inputs violated a documented bound. Every violated
    /// bound is named.
    #[error("invalid input: {}", .0.join("; "))]
    Domain(Vec<String>),
    /// The requested closed form does not cover this input; the grid oracle
    /// handles the general case.
    #[error("unsupported input: {0}")]
    Unsupported(String),
    /// A simulation exceeded a configured resource cap.
    #[error("resource limit exceeded: {0}")]
    Resource(String),
}

impl Error {
    /// Convenience constructor for a single-violation domain error.
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(vec![msg.into()])
    }
}
