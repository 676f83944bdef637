//! Numerical synthesis of parabolic germs in spherical normal form.
//!
//! Given a horn-map modulus `(ψ⁰, ψ∞)` the library solves a non-linear
//! Cousin problem by a Cauchy–Heine fixed point, assembles the sectorial
//! vector fields `X± = X₀/(1 + X₀·f±)` and their time-1 map `Δ`, and checks
//! the quantitative claims attached to the construction.

pub mod cauchyheine;
pub mod flow;
pub mod germs;
pub mod globalize;
pub mod model;
pub mod portrait;
pub mod quadrature;
pub mod renorm;
pub mod series;
pub mod synthesis;
pub mod verify;

mod par;

pub use num_complex::Complex64 as C;

use thiserror::Error;

/// Top-level error used by front ends; groups module errors by kind.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] model::ModelError),
    #[error(transparent)]
    Flow(#[from] flow::FlowError),
    #[error(transparent)]
    Germ(#[from] germs::GermError),
    #[error(transparent)]
    Transform(#[from] cauchyheine::TransformError),
    #[error(transparent)]
    Synthesis(#[from] synthesis::SynthesisError),
    #[error(transparent)]
    Globalize(#[from] globalize::GlobalizeError),
    #[error(transparent)]
    Renorm(#[from] renorm::RenormError),
}

/// Whether an error stems from invalid input rather than a numerical failure.
pub trait InputError {
    fn is_input_error(&self) -> bool;
}

impl InputError for Error {
    fn is_input_error(&self) -> bool {
        match self {
            Error::Model(e) => e.is_input_error(),
            Error::Germ(e) => e.is_input_error(),
            Error::Synthesis(e) => e.is_input_error(),
            Error::Renorm(e) => e.is_input_error(),
            _ => false,
        }
    }
}

pub(crate) fn i() -> C {
    C::new(0.0, 1.0)
}

pub(crate) fn re(x: f64) -> C {
    C::new(x, 0.0)
}
