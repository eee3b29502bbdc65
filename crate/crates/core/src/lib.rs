//! Potential-theoretic toolkit for disc domains: subharmonic test
//! functions, gluing and truncation constructions, Riesz measures and a
//! numerical audit of a Jensen-type inequality over zero sets of bounded
//! holomorphic functions.

pub mod audit;
pub mod error;
pub mod geometry;
pub mod holo;
pub mod kernels;
pub mod measures;
pub mod scenario;
pub mod testfn;

pub use audit::{AuditReport, AuditRow};
pub use error::{Error, Result};
pub use geometry::{GridField, PlanarDomain, Point, PolarGrid};
pub use holo::{HoloFunction, ZeroSet};
pub use kernels::Kernel;
pub use measures::{Majorant, WeightedMeasure};
pub use testfn::{SignClass, TestFunction};
