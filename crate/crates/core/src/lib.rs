//! Numerical core for compound Poisson (summable Lévy measure) processes
//! killed on leaving a finite union of segments.
//!
//! The crate is `no_std` + `alloc`. Parallel drivers, file formats and the
//! command line live in the companion `qlab` crate.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(a < b)` also rejects NaN

extern crate alloc;

pub mod atoms;
pub mod bilateral;
pub mod discretize;
pub mod error;
pub mod measure;
pub mod quadrature;
pub mod quasipotential;
pub mod simulate;
pub mod spectral;

pub use error::{Error, Result};
pub use measure::{Atom, Bump, CompactFn, Density, DensityTable, LevyMeasure, Plateau};
