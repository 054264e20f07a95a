pub mod assembly;
pub mod conjugate;
pub mod element;
pub mod error;
pub mod field;
pub mod geometry;
pub mod io;
pub mod layout;
pub mod mesh;
pub mod oracles;
pub mod permeability;
pub mod quadrature;
pub mod solver;
pub mod sparse;
pub mod taylor;
pub mod validation;
pub mod viscosity;

pub use error::{Error, Result};
