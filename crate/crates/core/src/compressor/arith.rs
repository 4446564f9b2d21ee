//! Binary arithmetic encoder (Witten–Neal–Cleary, 32-bit registers).
//!
//! Symbols are given as integer intervals `[low, low + freq)` out of `total`.
//! `total` must stay below [`MAX_TOTAL`].

const TOP: u64 = (1 << 32) - 1;
const HALF: u64 = 1 << 31;
const QUARTER: u64 = 1 << 30;

pub(crate) const MAX_TOTAL: u32 = 1 << 29;

#[derive(Debug, Default)]
struct BitWriter {
    bytes: Vec<u8>,
    bits: u64,
}

impl BitWriter {
    fn push(&mut self, bit: bool) {
        if self.bits % 8 == 0 {
            self.bytes.push(0);
        }
        if bit {
            let last = self.bytes.len() - 1;
            self.bytes[last] |= 0x80 >> (self.bits % 8);
        }
        self.bits += 1;
    }
}

#[derive(Debug)]
pub(crate) struct ArithmeticEncoder {
    low: u64,
    high: u64,
    pending: u64,
    out: BitWriter,
}

impl ArithmeticEncoder {
    pub(crate) fn new() -> Self {
        ArithmeticEncoder {
            low: 0,
            high: TOP,
            pending: 0,
            out: BitWriter::default(),
        }
    }

    fn emit(&mut self, bit: bool) {
        self.out.push(bit);
        for _ in 0..self.pending {
            self.out.push(!bit);
        }
        self.pending = 0;
    }

    pub(crate) fn encode(&mut self, low: u32, freq: u32, total: u32) {
        debug_assert!(freq > 0 && low + freq <= total && total < MAX_TOTAL);
        let range = self.high - self.low + 1;
        let total = u64::from(total);
        self.high = self.low + range * u64::from(low + freq) / total - 1;
        self.low += range * u64::from(low) / total;
        loop {
            if self.high < HALF {
                self.emit(false);
            } else if self.low >= HALF {
                self.emit(true);
                self.low -= HALF;
                self.high -= HALF;
            } else if self.low >= QUARTER && self.high < HALF + QUARTER {
                self.pending += 1;
                self.low -= QUARTER;
                self.high -= QUARTER;
            } else {
                break;
            }
            self.low <<= 1;
            self.high = (self.high << 1) | 1;
        }
    }

    /// Flushes the final interval and returns the encoded stream.
    pub(crate) fn finish(mut self) -> Vec<u8> {
        self.pending += 1;
        let bit = self.low >= QUARTER;
        self.emit(bit);
        self.out.bytes
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Matching decoder; only needed to prove the encoder is lossless.
    pub(crate) struct ArithmeticDecoder<'a> {
        data: &'a [u8],
        next_bit: usize,
        low: u64,
        high: u64,
        value: u64,
    }

    impl<'a> ArithmeticDecoder<'a> {
        pub(crate) fn new(data: &'a [u8]) -> Self {
            let mut d = ArithmeticDecoder {
                data,
                next_bit: 0,
                low: 0,
                high: TOP,
                value: 0,
            };
            for _ in 0..32 {
                d.value = (d.value << 1) | d.read_bit();
            }
            d
        }

        fn read_bit(&mut self) -> u64 {
            let i = self.next_bit;
            self.next_bit += 1;
            self.data
                .get(i / 8)
                .map_or(0, |b| u64::from((b >> (7 - i % 8)) & 1))
        }

        pub(crate) fn target(&self, total: u32) -> u32 {
            let range = self.high - self.low + 1;
            (((self.value - self.low + 1) * u64::from(total) - 1) / range) as u32
        }

        pub(crate) fn consume(&mut self, low: u32, freq: u32, total: u32) {
            let range = self.high - self.low + 1;
            let total = u64::from(total);
            self.high = self.low + range * u64::from(low + freq) / total - 1;
            self.low += range * u64::from(low) / total;
            loop {
                if self.high < HALF {
                } else if self.low >= HALF {
                    self.low -= HALF;
                    self.high -= HALF;
                    self.value -= HALF;
                } else if self.low >= QUARTER && self.high < HALF + QUARTER {
                    self.low -= QUARTER;
                    self.high -= QUARTER;
                    self.value -= QUARTER;
                } else {
                    break;
                }
                self.low <<= 1;
                self.high = (self.high << 1) | 1;
                self.value = (self.value << 1) | self.read_bit();
            }
        }
    }

    #[test]
    fn round_trips_skewed_static_model() {
        // Frequencies for a 4-symbol alphabet.
        let freqs = [1u32, 5, 100, 20];
        let total: u32 = freqs.iter().sum();
        let cum: Vec<u32> = freqs
            .iter()
            .scan(0, |acc, &f| {
                let start = *acc;
                *acc += f;
                Some(start)
            })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let symbols: Vec<usize> = (0..5000).map(|_| rng.gen_range(0..4)).collect();

        let mut enc = ArithmeticEncoder::new();
        let mut ideal = 0.0;
        for &s in &symbols {
            enc.encode(cum[s], freqs[s], total);
            ideal -= (f64::from(freqs[s]) / f64::from(total)).log2();
        }
        let bytes = enc.finish();
        assert!((bytes.len() * 8) as f64 <= ideal + 16.0 + 8.0);

        let mut dec = ArithmeticDecoder::new(&bytes);
        for &s in &symbols {
            let t = dec.target(total);
            let got = cum.iter().rposition(|&c| c <= t).unwrap();
            assert_eq!(got, s);
            dec.consume(cum[got], freqs[got], total);
        }
    }

    #[test]
    fn empty_stream_is_tiny() {
        let bytes = ArithmeticEncoder::new().finish();
        assert_eq!(bytes.len(), 1);
    }
}
