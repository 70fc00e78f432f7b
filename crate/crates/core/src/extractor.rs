//! Seeded Toeplitz hashing over GF(2): compresses a partially random
//! bitstring to the length the noise model admits.
//!
//! The Toeplitz matrix `T` (out x in) is defined by a seed of
//! `in + out - 1` bits: the first column is `seed[0..out)` read upward
//! from the corner and the first row is `seed[out-1..)`, i.e.
//! `T[i][j] = seed[out - 1 - i + j]`. The product is computed as a
//! shifted-XOR cross-correlation over 64-bit words rather than per bit.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::bits::BitString;
use crate::photon_stats::{self, ExtractionParams, PhotonStatsError};
use crate::real::Real;
use crate::NoiseModel;

/// Input block size for message extraction.
pub const DEFAULT_BLOCK_SIZE: usize = 1 << 16;

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("input has {got} bits, seed expects {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid seed: {0}")]
    InvalidSeed(String),
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error(transparent)]
    PhotonStats(#[from] PhotonStatsError),
}

/// Seed bits plus the matrix dimensions they encode.
#[derive(Debug, Clone, PartialEq)]
pub struct ToeplitzSeed {
    bits: BitString,
    in_len: usize,
    out_len: usize,
}

impl ToeplitzSeed {
    pub fn new(bits: BitString, in_len: usize, out_len: usize) -> Result<Self, ExtractError> {
        if out_len == 0 || in_len == 0 {
            return Err(ExtractError::InvalidSeed(
                "matrix dimensions must be positive".into(),
            ));
        }
        if out_len > in_len {
            return Err(ExtractError::InvalidSeed(format!(
                "out_len {out_len} exceeds in_len {in_len}"
            )));
        }
        let expected = in_len + out_len - 1;
        if bits.len() != expected {
            return Err(ExtractError::InvalidSeed(format!(
                "seed has {} bits, {in_len}x{out_len} needs {expected}",
                bits.len()
            )));
        }
        Ok(Self {
            bits,
            in_len,
            out_len,
        })
    }

    /// Fresh uniformly random seed.
    pub fn generate<R: rand::Rng>(
        rng: &mut R,
        in_len: usize,
        out_len: usize,
    ) -> Result<Self, ExtractError> {
        if out_len == 0 || in_len == 0 || out_len > in_len {
            return Err(ExtractError::InvalidSeed(format!(
                "invalid dimensions {in_len}x{out_len}"
            )));
        }
        let bits = BitString::random(rng, in_len + out_len - 1);
        Self::new(bits, in_len, out_len)
    }

    pub fn bits(&self) -> &BitString {
        &self.bits
    }

    pub fn in_len(&self) -> usize {
        self.in_len
    }

    pub fn out_len(&self) -> usize {
        self.out_len
    }

    /// Matrix entry `T[row][col]`.
    pub fn entry(&self, row: usize, col: usize) -> bool {
        self.bits.get(self.out_len - 1 - row + col)
    }
}

/// `T x` over GF(2).
pub fn extract(bits: &BitString, seed: &ToeplitzSeed) -> Result<BitString, ExtractError> {
    if bits.len() != seed.in_len {
        return Err(ExtractError::Dimension {
            expected: seed.in_len,
            got: bits.len(),
        });
    }
    let out_len = seed.out_len;
    let seed_words = to_words_lsb(&seed.bits);
    let input_words = to_words_lsb(bits);

    // Cross-correlation c[s] = XOR_j seed[s + j] x[j]; output row i reads
    // c[out - 1 - i].
    let mut corr = vec![0u64; out_len.div_ceil(64)];
    for (word_index, &word) in input_words.iter().enumerate() {
        let mut remaining = word;
        while remaining != 0 {
            let j = word_index * 64 + remaining.trailing_zeros() as usize;
            remaining &= remaining - 1;
            xor_shifted(&mut corr, &seed_words, j);
        }
    }

    let mut out = BitString::with_capacity(out_len);
    for i in 0..out_len {
        out.push(word_bit(&corr, out_len - 1 - i));
    }
    Ok(out)
}

/// LSB-first word packing: bit `i` lives in word `i / 64`, position `i % 64`.
fn to_words_lsb(bits: &BitString) -> Vec<u64> {
    let mut words = vec![0u64; bits.len().div_ceil(64)];
    for (i, byte) in bits.as_bytes().iter().enumerate() {
        let mut b = *byte;
        for k in 0..8 {
            if b & 0x80 != 0 {
                let bit = i * 8 + k;
                if bit < bits.len() {
                    words[bit / 64] |= 1 << (bit % 64);
                }
            }
            b <<= 1;
        }
    }
    words
}

fn word_bit(words: &[u64], index: usize) -> bool {
    words[index / 64] >> (index % 64) & 1 == 1
}

/// `acc ^= src >> shift`, truncated to `acc`'s length.
fn xor_shifted(acc: &mut [u64], src: &[u64], shift: usize) {
    let word_shift = shift / 64;
    let bit_shift = shift % 64;
    for (wi, slot) in acc.iter_mut().enumerate() {
        let lo = src.get(wi + word_shift).copied().unwrap_or(0) >> bit_shift;
        let hi = if bit_shift == 0 {
            0
        } else {
            src.get(wi + word_shift + 1).copied().unwrap_or(0) << (64 - bit_shift)
        };
        *slot ^= lo | hi;
    }
}

/// Per-block input/output widths of a planned extraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockPlan {
    pub in_len: usize,
    pub out_len: usize,
}

/// Message-level extraction layout: the security penalty is paid once for
/// the whole message, then output bits are assigned to fixed-size input
/// blocks at the admitted rate until the budget is spent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionPlan {
    pub raw_len: u64,
    pub qber: f64,
    pub epsilon: f64,
    /// Whole-message extractable length from the entropy bound.
    pub l_q: u64,
    /// Actually planned output, `<= l_q` after block rounding.
    pub total_output: u64,
    pub rate: f64,
    pub block_size: usize,
    pub blocks: Vec<BlockPlan>,
}

/// Plans extraction for a noise model by computing its error ratio first.
pub fn plan_extraction(
    raw_len: u64,
    model: &NoiseModel,
    epsilon: f64,
    block_size: usize,
) -> Result<ExtractionPlan, ExtractError> {
    let qber = photon_stats::qber(model)?;
    plan_with_qber(raw_len, qber, epsilon, block_size)
}

pub fn plan_with_qber(
    raw_len: u64,
    qber: f64,
    epsilon: f64,
    block_size: usize,
) -> Result<ExtractionPlan, ExtractError> {
    if block_size == 0 {
        return Err(ExtractError::InvalidPlan("block_size must be positive".into()));
    }
    let params = ExtractionParams::new(raw_len, qber, epsilon)?;
    let l_q = photon_stats::extractable_length(&params)?;
    let keep = 1.0 - qber;

    let mut blocks = Vec::new();
    let mut remaining_in = raw_len;
    let mut budget = l_q;
    while remaining_in > 0 {
        let in_len = remaining_in.min(block_size as u64) as usize;
        let by_rate = (in_len as f64 * keep).floor() as u64;
        let out_len = budget.min(by_rate).min(in_len as u64) as usize;
        blocks.push(BlockPlan { in_len, out_len });
        budget -= out_len as u64;
        remaining_in -= in_len as u64;
    }
    let total_output: u64 = blocks.iter().map(|b| b.out_len as u64).sum();

    Ok(ExtractionPlan {
        raw_len,
        qber,
        epsilon,
        l_q,
        total_output,
        rate: l_q as f64 / raw_len as f64,
        block_size,
        blocks,
    })
}

/// Record of one extraction: everything needed to regenerate the seeds and
/// reproduce the output from the raw input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionManifest {
    pub extractor_seed: u64,
    pub plan: ExtractionPlan,
    pub output_len: u64,
}

/// Extracted output plus its manifest.
#[derive(Debug, Clone)]
pub struct ExtractedMessage {
    pub bits: BitString,
    pub manifest: ExtractionManifest,
}

/// Runs the planned extraction, drawing one Toeplitz seed per block from a
/// dedicated stream. Seeds are public after use; only their independence
/// from the data matters.
pub fn extract_message(
    bits: &BitString,
    plan: &ExtractionPlan,
    extractor_seed: u64,
) -> Result<ExtractedMessage, ExtractError> {
    if bits.len() as u64 != plan.raw_len {
        return Err(ExtractError::Dimension {
            expected: plan.raw_len as usize,
            got: bits.len(),
        });
    }
    let mut rng = ChaCha12Rng::seed_from_u64(extractor_seed);
    let mut out = BitString::with_capacity(plan.total_output as usize);
    let mut offset = 0usize;
    for block in &plan.blocks {
        let chunk = bits.slice(offset, block.in_len);
        offset += block.in_len;
        if block.out_len == 0 {
            continue;
        }
        let seed = ToeplitzSeed::generate(&mut rng, block.in_len, block.out_len)?;
        out.extend_from(&extract(&chunk, &seed)?);
    }
    debug_assert_eq!(out.len() as u64, plan.total_output);
    Ok(ExtractedMessage {
        manifest: ExtractionManifest {
            extractor_seed,
            plan: plan.clone(),
            output_len: out.len() as u64,
        },
        bits: out,
    })
}
