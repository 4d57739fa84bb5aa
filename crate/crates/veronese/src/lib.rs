//! Multigraded Koszul cohomology of the modules S(b;d) = ⊕ S_{di+b} on P^n.
pub mod analysis;
pub mod betti;
pub mod error;
pub mod golden;
pub mod hilbert;
pub mod jobs;
pub mod koszul;
pub mod monomial;
pub mod rank;
pub mod schur;
pub mod syzygies;
pub use error::{Error, Result};
