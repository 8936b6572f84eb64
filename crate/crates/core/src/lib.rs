//! Desk-scale laboratory for slot-structured additive autoencoders.
//!
//! The crate is organized around a small define-by-run autodiff engine
//! ([`tape`]), a synthetic 1-D multi-object scene generator ([`scene`]),
//! exact bipartite assignment ([`assignment`]), MLP autoencoders with
//! additive and masked decoders ([`model`]), the reconstruction and
//! compositional-consistency training objectives ([`objectives`]), and an
//! evaluation suite measuring slot identifiability in and out of
//! distribution ([`metrics`]).

pub mod assignment;
pub mod checkpoint;
pub mod dataset;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod numdiff;
pub mod objectives;
pub mod optim;
pub mod rng;
pub mod scene;
pub mod tape;
pub mod tensor;

pub use tensor::Tensor;
