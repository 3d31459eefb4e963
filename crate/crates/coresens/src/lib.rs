//! Tight per-point sensitivities and weighted coresets for low-rank
//! subspace costs.
//!
//! Given weighted points `p₁ … pₙ ⊂ ℝᵈ`, the central quantity is each
//! point's *sensitivity*: the largest fraction of the total projection cost
//! that point can be responsible for, over every rank-`k` subspace (and,
//! in the affine variant, every translate of one).  Sensitivities upper-bound
//! the sample complexity of coreset constructions: sampling points with
//! probability proportional to sensitivity and reweighting by its inverse
//! yields a small weighted subset whose subspace costs approximate the full
//! set's uniformly over all candidate subspaces.
//!
//! The crate provides:
//!
//! * [`sensitivity`]: exact leverage scores when the complement is a single
//!   direction, a trace-ratio iteration with certified accuracy `eps` for
//!   general `k`, and an affine variant that augments each point with a large
//!   constant coordinate so translations reduce to the linear case.
//! * [`coreset`]: sensitivity-weighted importance sampling with the
//!   standard `(t/ε²)(dim·ln t + ln(1/δ))` size rule.
//! * [`stream`]: merge-and-reduce composition of coresets over a stream,
//!   with memory logarithmic in the stream length.
//! * [`eval`]: optimal subspace solvers, relative-error measurement of a
//!   coreset against the full data, comparison experiments against uniform
//!   and projection-based sampling, and brute-force oracles used to verify
//!   the fast paths.
//! * [`io`] / [`cli`]: CSV and MatrixMarket ingestion and the `coresens`
//!   command-line tool.
//!
//! Each capability has a runnable walkthrough under `examples/`:
//!
//! * `leverage_scores`: exact sensitivities for hyperplane costs
//! * `tight_sensitivities`: the trace-ratio iteration and its certificate
//! * `affine_sensitivities`: sensitivities for translated subspaces
//! * `build_coreset`: sampling a coreset and measuring its error
//! * `streaming`: merge-and-reduce over a one-pass stream
//! * `experiment`: coreset quality versus uniform sampling baselines
//! * `lift_check`: the augmentation's distance-distortion guarantees

pub mod cli;
pub mod coreset;
pub mod error;
pub mod eval;
pub mod io;
pub mod linalg;
pub mod points;
pub mod query;
pub mod sensitivity;
pub mod stream;

pub use error::{Error, Result};
pub use points::WeightedPointSet;
