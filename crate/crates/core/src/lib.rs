//! Fixed-point analysis of degenerate nonlocal elliptic equations
//! `-a(g(u)) Δu = λ f(u)` on intervals and rectangles.

pub mod analyzer;
pub mod aux_solver;
pub mod bounds;
pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod linalg;
pub mod mesh;
pub mod model;
pub mod numeric;
pub mod powerlike;
pub mod qmap;

pub use error::{AtlasError, Result};
