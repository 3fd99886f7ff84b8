//! The lemma convergence experiment, orbit density walks, and the check
//! suite.

pub mod check;
pub mod density;
pub mod lemma;

pub use check::{check_suite, check_suite_with, CheckReport, CheckResult, Tolerances};
pub use density::{orbit_density, AbelianLattice, DensityConfig, DensityReport, WalkMode, WalkState};
pub use lemma::{lemma_experiment, lemma_with_retry, LemmaConfig, LemmaReport, LemmaRow};
