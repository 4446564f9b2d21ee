//! Adaptive context-mixing cost of a byte sequence.
//!
//! Every symbol is turned into one or more integer coding intervals which are
//! fed to an [`IntervalSink`]: either an ideal code-length accumulator or the
//! arithmetic encoder. Both therefore see exactly the same probabilities.

use super::arith::ArithmeticEncoder;
use super::vomm::VommModel;
use super::Estimator;

pub(crate) trait IntervalSink {
    fn code(&mut self, low: u32, freq: u32, total: u32);
}

/// Accumulates `-log2(freq / total)` over all coded intervals.
#[derive(Debug, Default)]
pub(crate) struct IdealLength {
    pub(crate) bits: f64,
}

impl IntervalSink for IdealLength {
    #[inline]
    fn code(&mut self, _low: u32, freq: u32, total: u32) {
        self.bits -= (f64::from(freq) / f64::from(total)).log2();
    }
}

impl IntervalSink for ArithmeticEncoder {
    #[inline]
    fn code(&mut self, low: u32, freq: u32, total: u32) {
        self.encode(low, freq, total);
    }
}

/// Codes `data` symbol by symbol with an adaptive model of the given order,
/// updating every context of length `0..=order` after each symbol.
pub(crate) fn code_sequence<S: IntervalSink>(
    data: &[u8],
    order: usize,
    estimator: Estimator,
    sink: &mut S,
) {
    let mut model = VommModel::new(order);
    let mut chain = Vec::with_capacity(order + 1);
    let mut excluded = [false; 256];
    let mut excluded_list: Vec<u8> = Vec::with_capacity(256);

    for pos in 0..data.len() {
        model.context_chain(data, pos, &mut chain);
        let symbol = data[pos];
        match estimator {
            Estimator::PpmC => {
                code_ppmc(&model, &chain, symbol, &mut excluded, &mut excluded_list, sink);
                for &s in &excluded_list {
                    excluded[s as usize] = false;
                }
                excluded_list.clear();
            }
            Estimator::Laplace => {
                let depth = order.min(pos);
                match chain.get(depth) {
                    Some(&id) => {
                        let node = model.node(id);
                        let mut low = u32::from(symbol);
                        let mut freq = 1;
                        for &(s, c) in &node.symbols {
                            if s < symbol {
                                low += c;
                            } else if s == symbol {
                                freq += c;
                            }
                        }
                        sink.code(low, freq, node.total + 256);
                    }
                    None => sink.code(u32::from(symbol), 1, 256),
                }
            }
        }
        model.update(data, pos, &chain);
    }
}

/// PPM with escape method C and full exclusion.
///
/// Starting from the longest stored context, a symbol seen in the context
/// costs `c / (T + q)`; otherwise an escape costs `q / (T + q)` and every
/// symbol of that context is excluded from the shorter ones. `T` and `q` are
/// the total count and number of distinct symbols left after exclusion.
/// Below the empty context, the remaining bytes are equiprobable.
fn code_ppmc<S: IntervalSink>(
    model: &VommModel,
    chain: &[u32],
    symbol: u8,
    excluded: &mut [bool; 256],
    excluded_list: &mut Vec<u8>,
    sink: &mut S,
) {
    for &id in chain.iter().rev() {
        let node = model.node(id);
        let (mut total, mut distinct, mut low, mut freq) = (0u32, 0u32, 0u32, 0u32);
        for &(s, c) in &node.symbols {
            if excluded[s as usize] {
                continue;
            }
            if s == symbol {
                low = total;
                freq = c;
            }
            total += c;
            distinct += 1;
        }
        if distinct == 0 {
            continue;
        }
        if freq > 0 {
            sink.code(low, freq, total + distinct);
            return;
        }
        sink.code(total, distinct, total + distinct);
        for &(s, _) in &node.symbols {
            if !excluded[s as usize] {
                excluded[s as usize] = true;
                excluded_list.push(s);
            }
        }
    }
    let below = excluded_list.iter().filter(|&&s| s < symbol).count() as u32;
    sink.code(
        u32::from(symbol) - below,
        1,
        256 - excluded_list.len() as u32,
    );
}
