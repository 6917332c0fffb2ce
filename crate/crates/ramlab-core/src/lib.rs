//! ramlab-core: exact symbolic toolkit for deciding tame p-ramification of
//! Kummer elements over cyclotomic-polynomial base rings, and for building
//! explicitly verified free algebras (small Cohen-Macaulay covers) with
//! structure-constant certificates.

pub mod cyclo;
pub mod polyring;
pub mod algebra;
pub mod ramification;
pub mod scenarios;
pub mod valuation;

pub use cyclo::{cyclo_ring, CycElt, CycRing, RingDesc};
