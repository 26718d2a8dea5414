//! Matrix-polynomial public-key exchange.
//!
//! Two parties publish random complex matrices `U` and `V`, combine them
//! with secret coefficient vectors into normalized matrix polynomials, and
//! agree on a secret matrix whose significands become a shared key. The
//! crate covers the numerical kernel, a seeded SHA-256 stream for
//! reproducible key material, the key file format, a framed TCP handshake
//! with key confirmation, and a linearization attack that recovers the
//! secret from public values.
//!
//! This is a research and teaching implementation. The attack module shows
//! the exchange is not secure.

pub mod cli;
pub mod cryptanalysis;
pub mod error;
pub mod keycodec;
pub mod numkernel;
pub mod protocol;
pub mod randgen;
pub mod wire;

pub use error::{Error, Result};
pub use numkernel::{normalized_power_stream, CMatrix, Cplx};
pub use protocol::{
    canonical_order, compute_public_key, compute_secret_matrix, eval_poly_normalized,
    extract_secret, gen_matrix_public_key, gen_private_key, secrets_equal, CoeffVector, KeyPair,
    MatrixPublicKey, PrivateKey, SharedSecret,
};
pub use randgen::SeededStream;
