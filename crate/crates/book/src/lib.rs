//! Compiles the guide's Rust snippets as doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/special-functions.md")]
pub mod special_functions {}

#[doc = include_str!("../../../book/src/geometry.md")]
pub mod geometry {}

#[doc = include_str!("../../../book/src/media.md")]
pub mod media {}

#[doc = include_str!("../../../book/src/solver.md")]
pub mod solver {}

#[doc = include_str!("../../../book/src/three-sphere.md")]
pub mod three_sphere {}

#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}
