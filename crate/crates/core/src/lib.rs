//! Algorithmic core for simulating generative semantic communication links.
//!
//! Everything here needs only `alloc`: semantic graphs and subgraph
//! induction, PCA and scalar quantization of semantic vectors, the payload
//! and tensor wire formats, a block-DCT reference codec, QC-LDPC coding over
//! AWGN, and the quality metrics used to score reconstructions.

#![no_std]
extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod ber;
pub mod bits;
pub mod channel;
pub mod dct;
pub mod flops;
pub mod image;
pub mod ldpc;
mod linalg;
pub mod metrics;
pub mod modem;
pub mod payload;
pub mod pca;
pub mod piqe;
pub mod quant;
pub mod semgraph;
pub mod tensor;
