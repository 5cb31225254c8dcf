//! Generalized hysteresis toolkit.
//!
//! * [`geometry`]: open convex continuation sets, switching facets, piecewise-linear signals.
//! * [`relay`]: multi-state vector-input non-ideal relays and their event-driven evolution.
//! * [`hysteresis`]: weighted superpositions of relays (Preisach-type operators) and
//!   monotropy / local wiping-out analysis.
//! * [`markov`]: stochastic relays driven by impulsive forward Kolmogorov equations,
//!   with product-formula and convolution-series fundamental matrices.
//! * [`game`]: discrete-time minimax dynamic programming with relay-profile augmentation.
//! * [`scenario`]: scenario files, CSV traces and reports behind the `hystk` CLI.

// `!(a < b)` is used on purpose so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod game;
pub mod geometry;
pub mod hysteresis;
pub mod markov;
pub mod relay;
pub mod scenario;
