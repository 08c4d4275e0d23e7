//! Multimodal diffusion sampling, Feynman-Kac steering and protein design
//! evaluation, checked against analytic oracle models.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod denoise;
pub mod error;
pub mod exec;
pub mod fkc;
pub mod forward;
pub mod filter;
pub mod geometry;
pub mod io;
pub mod losses;
pub mod residue;
pub mod rewards;
pub mod rng;
pub mod sampler;
pub mod schedule;
pub mod state;

pub use error::{Error, Result};
