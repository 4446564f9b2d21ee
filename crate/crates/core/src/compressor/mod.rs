//! Compressed lengths `C(x)`.
//!
//! The default backend is a PPM model (escape method C, full exclusion,
//! order 5) whose compressed length is the ideal arithmetic-code length of
//! the adaptive probabilities. The same model can also drive a real
//! arithmetic encoder, and any external compressor reading stdin and writing
//! stdout can be plugged in instead.
//!
//! Every built-in length is `HEADER_BITS` plus a payload. The payload is the
//! model's code length rounded up, or `8·|x|` when storing the bytes verbatim
//! is cheaper, so `C(x) ≤ 8·|x| + HEADER_BITS` always holds.

mod arith;
mod external;
mod ppm;
mod vomm;

use std::fmt;

use crate::error::{Error, Result};

pub use vomm::{train_vomm, VommModel};

/// Fixed header overhead of every built-in compressed length, in bits.
pub const HEADER_BITS: u64 = 16;

pub const DEFAULT_ORDER: usize = 5;

/// Largest supported model order.
pub const MAX_ORDER: usize = 1000;

/// Probability estimator used by the built-in context model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Estimator {
    /// PPM, escape method C, full exclusion, uniform order −1 fallback.
    PpmC,
    /// Add-one estimate in the longest available context:
    /// `(n(s, x) + 1) / (n(s) + 256)`.
    Laplace,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Backend {
    Ppm { order: usize, estimator: Estimator },
    /// Program and arguments; the program reads stdin and writes stdout.
    External { command: Vec<String> },
}

/// How the built-in model turns probabilities into a length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LengthMode {
    /// `ceil(Σ −log2 p)`.
    IdealBits,
    /// Size of an actual arithmetic-coded stream, in whole bytes.
    EncodedBytes,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CompressorSpec {
    pub backend: Backend,
    pub length_mode: LengthMode,
}

impl Default for CompressorSpec {
    fn default() -> Self {
        CompressorSpec::ppm(DEFAULT_ORDER)
    }
}

impl CompressorSpec {
    pub fn ppm(order: usize) -> Self {
        CompressorSpec {
            backend: Backend::Ppm {
                order,
                estimator: Estimator::PpmC,
            },
            length_mode: LengthMode::IdealBits,
        }
    }

    pub fn laplace(order: usize) -> Self {
        CompressorSpec {
            backend: Backend::Ppm {
                order,
                estimator: Estimator::Laplace,
            },
            length_mode: LengthMode::IdealBits,
        }
    }

    /// External compressor from a whitespace-separated command line,
    /// e.g. `"bzip2 -c -9"`.
    pub fn external(command_line: &str) -> Self {
        CompressorSpec {
            backend: Backend::External {
                command: command_line.split_whitespace().map(str::to_owned).collect(),
            },
            length_mode: LengthMode::EncodedBytes,
        }
    }

    pub fn with_length_mode(mut self, mode: LengthMode) -> Self {
        self.length_mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match &self.backend {
            Backend::Ppm { order, estimator } => {
                let min = match estimator {
                    Estimator::PpmC => 1,
                    Estimator::Laplace => 0,
                };
                if *order < min || *order > MAX_ORDER {
                    return Err(Error::Config(format!(
                        "model order {order} outside {min}..={MAX_ORDER}"
                    )));
                }
            }
            Backend::External { command } => {
                if command.is_empty() {
                    return Err(Error::Config(
                        "external compressor command is empty".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Canonical one-line description, stored in Gram matrix headers.
impl fmt::Display for CompressorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mode = match self.length_mode {
            LengthMode::IdealBits => "ideal_bits",
            LengthMode::EncodedBytes => "encoded_bytes",
        };
        match &self.backend {
            Backend::Ppm { order, estimator } => {
                let name = match estimator {
                    Estimator::PpmC => "ppmc",
                    Estimator::Laplace => "laplace",
                };
                write!(f, "{name} order={order} length={mode}")
            }
            Backend::External { command } => write!(f, "external cmd={}", command.join(" ")),
        }
    }
}

/// Result of compressing one sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompressedLength {
    /// Total length in bits, header included.
    pub bits: u64,
    pub source_bytes: u64,
    /// Unrounded payload length in bits as produced by the model or
    /// compressor, before the verbatim fallback.
    pub code_length: f64,
}

impl CompressedLength {
    /// Payload bits actually charged (`bits` minus the header for built-in
    /// backends).
    pub fn payload_bits(&self) -> u64 {
        self.bits.saturating_sub(HEADER_BITS)
    }
}

pub fn compressed_length(data: &[u8], spec: &CompressorSpec) -> Result<CompressedLength> {
    spec.validate()?;
    let source_bytes = data.len() as u64;
    match &spec.backend {
        Backend::Ppm { order, estimator } => {
            let code_length = match spec.length_mode {
                LengthMode::IdealBits => {
                    let mut sink = ppm::IdealLength::default();
                    ppm::code_sequence(data, *order, *estimator, &mut sink);
                    sink.bits
                }
                LengthMode::EncodedBytes => {
                    if data.len() as u64 >= u64::from(arith::MAX_TOTAL / 2 - 256) {
                        return Err(Error::Config(format!(
                            "{} bytes is too long for the arithmetic coder",
                            data.len()
                        )));
                    }
                    let mut encoder = arith::ArithmeticEncoder::new();
                    ppm::code_sequence(data, *order, *estimator, &mut encoder);
                    (encoder.finish().len() * 8) as f64
                }
            };
            let payload = if data.is_empty() {
                0
            } else {
                (code_length.ceil() as u64).min(8 * source_bytes)
            };
            Ok(CompressedLength {
                bits: HEADER_BITS + payload,
                source_bytes,
                code_length: if data.is_empty() { 0.0 } else { code_length },
            })
        }
        Backend::External { command } => {
            let size = external::compressed_size(command, data)?;
            Ok(CompressedLength {
                bits: 8 * size,
                source_bytes,
                code_length: (8 * size) as f64,
            })
        }
    }
}

/// Length of `x‖y`, plain byte concatenation without separator.
pub fn concat_length(x: &[u8], y: &[u8], spec: &CompressorSpec) -> Result<CompressedLength> {
    let mut joined = Vec::with_capacity(x.len() + y.len());
    joined.extend_from_slice(x);
    joined.extend_from_slice(y);
    compressed_length(&joined, spec)
}
