// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod config;
pub mod dhw;
pub mod field;
pub mod io;
pub mod ode;
pub mod quadrature;
pub mod qve;
pub mod semianalytic;
pub mod sweep;
pub mod vec3;
