//! Geometrically and thermodynamically compatible finite volume solver for a
//! unified first-order hyperbolic model of continuum mechanics on 2D
//! unstructured polygonal meshes.

pub mod cli;
pub mod diagnostics;
pub mod mesh;
pub mod numerics;
pub mod physics;
pub mod reference;
pub mod solver;
