//! List privacy amplification toolkit.
//!
//! Extracts a list of `L` candidate keys from a partially compromised raw
//! string, together with a secret index naming the list element that is
//! meant to be used. The crate is split into:
//!
//! * [`gf2m`]: arithmetic in `GF(2^m)` for `1 <= m <= 64`.
//! * [`bitconv`]: packed bit strings and exact binary (Toeplitz) convolution.
//! * [`listhash`]: the inner-product and Toeplitz list hashes, seed sampling,
//!   secret index selection and the seed/key file formats.
//! * [`bounds`]: closed-form key lengths, BB84 finite-key quantities and
//!   security-parameter accounting.
//! * [`seclab`]: exact verification on small classical sources (min-entropy,
//!   universality, real-vs-ideal distance).
//! * [`qkdsim`]: a BB84 post-processing pipeline simulation.
//!
//! The `parallel` feature (on by default) runs the data-parallel loops
//! (per-list-index hashing, seed enumeration, Monte-Carlo shards) on rayon.
//! Without it every [`Exec`] mode runs sequentially.
//!
//! Seeds drawn from [`RandomStream`] are deterministic and meant for
//! reproducible experiments. Information-theoretic guarantees only hold for
//! truly uniform seeds, so deployments must feed seeds from a physical
//! randomness source.

pub mod bitconv;
pub mod bounds;
mod error;
pub mod gf2m;
pub mod listhash;
mod ntt;
mod par;
pub mod qkdsim;
mod rng;
pub mod seclab;

pub use bitconv::BitString;
pub use error::{Error, Result};
pub use par::Exec;
pub use rng::{MasterSeed, RandomStream};
