//! Worked boundary problems: a degenerate diffusion with Wentzell conditions and
//! a reaction-diffusion equation with boundary delay.

pub mod rde;
pub mod wentzell;

pub use wentzell::Coefficient;
