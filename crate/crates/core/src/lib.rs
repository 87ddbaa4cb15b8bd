//! Branching particle systems read off one-sided Lévy processes of bounded
//! variation.
//!
//! A spectrally positive process with negative drift, killed when it first
//! reaches zero, encodes a single-birth branching system: every upward jump
//! straddling a level `t` contributes one particle to the measure `X_t`.
//! The spectrally negative process with positive drift encodes the
//! time-reversed system `X*`. This crate
//!
//! * simulates the killed paths exactly ([`path_sim`]),
//! * reads the atom measures, occupation functionals and genealogy off a
//!   path ([`branching_extract`]),
//! * solves the evolution equations for the Laplace functional, the first
//!   moment and the weighted occupation time ([`semigroup_solver`]),
//! * simulates the branching systems directly as a Crump-Mode-Jagers
//!   population ([`cmj_sim`]),
//! * evaluates the closed-form fluctuation identities ([`formulas`]), and
//! * compares all of the above statistically ([`verify`]).

pub mod branching_extract;
pub mod cmj_sim;
pub mod error;
pub mod formulas;
pub mod io;
pub mod levy_model;
pub mod path_sim;
pub mod quad;
pub mod rng;
pub mod semigroup_solver;
pub mod verify;

pub use branching_extract::{extract_x, extract_xstar, genealogy, occupation, AtomMeasure, GenealogyTree};
pub use cmj_sim::{simulate_cmj, CmjOptions, CmjRun};
pub use error::{Error, Result};
pub use formulas::{InitialLaw, Prediction, SubordinatorFormulas, XStarFormulas};
pub use levy_model::{JumpMeasure, LevyModel, Orientation, ScaleTable};
pub use path_sim::{batch_simulate, simulate_path, PathRecord, PathSimulator};
pub use rng::StreamRng;
pub use semigroup_solver::{OffspringLaw, SolverOptions, TestFunction};
pub use verify::{run_suite, McReport, Suite, SuiteConfig};

