//! Hopf max-formula solutions of `u_t + H(Du) = 0`, `u(0, ·) = σ`, for a
//! continuous (possibly nonconvex) Hamiltonian and convex Lipschitz initial data:
//!
//! ```text
//! u(t, x) = max_q ⟨x, q⟩ − σ*(q) − t H(q)
//! ```
//!
//! The crate evaluates `u` and its maximizer set `ℓ(t, x)`, builds and
//! classifies straight-line characteristics, probes strips of `C¹`
//! regularity, and traces singular points forward in time.

pub mod characteristics;
pub mod cli;
pub mod config;
pub mod conjugate;
pub mod error;
pub mod expr;
pub mod hopf;
pub mod numeric;
pub mod problem;
pub mod regularity;
pub mod singularity;

pub use error::{Error, Result};
