//! # ncdkit
//!
//! Compression-based text classification.
//!
//! The crate bundles everything needed to compare a Normalized Compression
//! Distance kernel against classical bag-of-words kernels on labelled text:
//!
//! - [`compressor`]: compressed lengths `C(x)` from a built-in PPM model
//!   (ideal arithmetic-code length or a real arithmetic coder) or from an
//!   external compressor executable.
//! - [`ncd`]: NCD, the symmetrised `K_NCD` kernel and parallel Gram matrices.
//! - [`textprep`]: corpus loading and the four preprocessing stages
//!   (normalisation, short-term removal, stopwords, Porter stemming).
//! - [`vectorize`]: term counting and `[-1, 1]` min-max scaling.
//! - [`svm`]: soft-margin SMO solver, kernels and one-vs-one / one-vs-rest
//!   multiclass composition.
//! - [`eval`]: stratified k-fold splits, grid search, accuracy and reports.
//! - [`cli`]: the `ncdkit` command-line surface.

pub mod cli;
pub mod compressor;
pub mod error;
pub mod eval;
pub mod matrix;
pub mod ncd;
pub mod svm;
pub mod textprep;
pub mod vectorize;

pub use error::{Error, Result};
