//! Ordinal-indexed trees on ω, tree derivatives and ranks, leaf-scheme and
//! Suslin-scheme representations, broom sets and finite topological spaces.

pub mod broom;
pub mod coding;
pub mod derive;
pub mod fintop;
pub mod leafscheme;
pub mod ordinal;
pub mod seqtree;
pub mod sets;
pub mod suslin;
pub mod verify;

pub use ordinal::Ordinal;
pub use seqtree::{FiniteTree, Seq, TreeExpr, TreeFamily};
