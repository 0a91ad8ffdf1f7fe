//! Exact computation of torsion in the first homology of congruence subgroups
//! of Bianchi groups SL2(O_D), with even symmetric-power lattice coefficients,
//! together with a geodesic-side Ruelle zeta evaluator and tower growth
//! reports.
//!
//! The crate is organized along the pipeline:
//! `quadfield` (field/ideal arithmetic) -> `congruence` (finite quotients,
//! indices, cusps) -> `symreps` (integral symmetric-power matrices) ->
//! `homology` (presentations, Fox calculus, Smith normal form) -> `zeta`
//! (geodesic tables and zeta values) -> `tower` (growth reports).

pub mod congruence;
pub mod error;
pub mod fox;
pub mod homology;
pub mod mat2;
pub mod presentation;
pub mod quadfield;
pub mod schreier;
pub mod snf;
pub mod symreps;
pub mod words;

pub use error::{Error, Result};
