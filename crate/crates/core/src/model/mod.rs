//! Structural data of the equation: `f`, `a` and `g`.

pub mod coefficient;
pub mod functional;
pub mod nonlinearity;

pub use coefficient::{Coefficient, CoefficientKind, CoefficientRange, CustomCoefficient, Window};
pub use functional::{NonlocalFunctional, Phi};
pub use nonlinearity::{catalogue, Nonlinearity, NonlinearityKind, SublinearTail};
