//! Reduction of the intuitionistic modal logics FS and MIPC to their positive
//! one-variable fragments, with finite Kripke semantics and a bounded
//! countermodel search to test the reduction against.

pub mod audit;
pub mod corpus;
pub mod formula;
pub mod reduction;
pub mod search;
pub mod semantics;
pub mod syntax;

pub use formula::{Formula, Kind, VarIndex, VarSet};
pub use semantics::{FiniteFSModel, Frame, LogicKind};
pub use syntax::{parse_formula, print_formula};
