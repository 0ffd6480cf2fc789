//! Construction and verification of quantum averaging sets: projective,
//! unitary, simplex and channel t-designs, Weingarten averages, random
//! channel ensembles and effective-environment-dimension estimation.

pub mod channel;
pub mod error;
pub mod gates;
pub mod kstar;
pub mod linalg;
pub mod projective;
pub mod random;
pub mod simplex;
pub mod tensor;
pub mod tomography;
pub mod unitary;
pub mod weingarten;

pub use error::{Error, Result};
pub use tensor::{ComplexMatrix, SubsystemShape, C64};
