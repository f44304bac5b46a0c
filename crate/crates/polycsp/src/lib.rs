//! Polymorphism conditions on finite digraphs: homomorphism search, core tree
//! generation, minor conditions via indicator structures, pp-constructions and
//! the arithmetic of disjoint unions of directed cycles.

pub mod conditions;
pub mod cycles;
pub mod digraph;
pub mod hom_search;
pub mod indicator;
pub mod ppdef;
pub mod tree_gen;

pub use digraph::{Digraph, DigraphError, LevelMap, RootedTree};
pub use hom_search::DomainLists;
