//! Numerical laboratory for reflected processes with inert drift: processes
//! whose drift is a function of their own local time at a reflecting barrier.
//!
//! The crate provides
//!
//! - deterministic solvers for the classic Skorohod map and its extension
//!   with local-time-driven drift ([`skorohod`]), plus a d-dimensional
//!   version on graph domains ([`multidim`]),
//! - estimators and closed-form laws for the resulting processes: local
//!   time by occupation, excursion decomposition, escape probabilities,
//!   level-crossing intensities ([`observables`]),
//! - simulators for two particle configurations: a Brownian particle in a
//!   moving interval attached to an inert pair ([`interval`]) and two
//!   Brownian particles separated by an inert particle ([`three_particle`]),
//! - statistical comparison utilities ([`stats`]) and the experiment
//!   runners behind the verification suite and the CLI ([`lab`]).
//!
//! Monte Carlo work is replica-parallel via [`replicas`]; every replica is
//! keyed by `(master_seed, replica_index)` so results are independent of
//! thread count.

// `!(x > 0.0)` rejects NaN along with nonpositive values; keep the idiom.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop, clippy::type_complexity)]

pub mod error;
pub mod interval;
pub mod lab;
pub mod multidim;
pub mod numeric;
pub mod observables;
pub mod path;
pub mod replicas;
pub mod skorohod;
pub mod stats;
pub mod three_particle;

pub use error::{Error, Result};
pub use path::{generate_brownian_path, DriftSpec, Monotone, RngConfig, SampledPath};
pub use skorohod::{classic_map, extended_solve, refine_until, ReflectedSolution};
