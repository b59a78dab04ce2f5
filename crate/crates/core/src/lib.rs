//! Local invariants of quadratic forms, Schreier graphs of the free group on
//! two generators, and graph-of-spaces assembly of manifold descriptors.

pub mod exact_arith;
pub mod form_families;
pub mod local_invariants;
pub mod free_groups;
pub mod decorated_graphs;
pub mod assembler;
pub mod selftest;
