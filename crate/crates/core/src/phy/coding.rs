//! Rate-5/6 punctured convolutional code and its soft-input Viterbi decoder.
//!
//! Mother code: constraint length 7, generators 133 and 171 (octal), rate
//! 1/2, terminated with six zero tail bits. Mother outputs are serialized as
//! A0 B0 A1 B1 ... and punctured with a period of 10 bits (five trellis
//! steps), keeping
//!
//! ```text
//! A: 1 1 0 1 0
//! B: 1 0 1 0 1
//! ```
//!
//! i.e. serialized keep mask `1 1 1 0 0 1 1 0 0 1`, six of every ten bits.
//!
//! LLRs follow the convention that positive values favor bit 1.

use thiserror::Error;

pub const CONSTRAINT_LENGTH: usize = 7;
pub const TAIL_BITS: usize = CONSTRAINT_LENGTH - 1;
pub const GENERATORS: [u32; 2] = [0o133, 0o171];
pub const PUNCTURE_KEEP: [bool; 10] = [true, true, true, false, false, true, true, false, false, true];
/// Trellis steps per puncturing period.
pub const PERIOD_STEPS: usize = 5;
/// Transmitted bits per puncturing period.
pub const PERIOD_KEPT: usize = 6;

const STATES: usize = 1 << TAIL_BITS;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodingError {
    #[error("{len} info bits plus {TAIL_BITS} tail bits is not a multiple of {PERIOD_STEPS} trellis steps")]
    InfoLength { len: usize },
    #[error("{len} coded values is not a multiple of the puncturing period {PERIOD_KEPT}")]
    CodedLength { len: usize },
}

fn branch_bits(reg: u32) -> [u8; 2] {
    GENERATORS.map(|g| ((reg & g).count_ones() & 1) as u8)
}

/// Unpunctured rate-1/2 encoding of `info` followed by the zero tail.
pub fn conv_encode(info: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(2 * (info.len() + TAIL_BITS));
    let mut state = 0u32;
    for &u in info.iter().chain(std::iter::repeat(&0).take(TAIL_BITS)) {
        let reg = ((u as u32 & 1) << TAIL_BITS) | state;
        out.extend(branch_bits(reg));
        state = reg >> 1;
    }
    out
}

pub fn puncture<T: Copy>(mother: &[T]) -> Vec<T> {
    mother.iter().enumerate().filter(|(i, _)| PUNCTURE_KEEP[i % PUNCTURE_KEEP.len()]).map(|(_, &b)| b).collect()
}

/// Reinserts zero LLRs at punctured positions.
pub fn depuncture(llrs: &[f64]) -> Result<Vec<f64>, CodingError> {
    if llrs.len() % PERIOD_KEPT != 0 {
        return Err(CodingError::CodedLength { len: llrs.len() });
    }
    let mut out = Vec::with_capacity(llrs.len() / PERIOD_KEPT * PUNCTURE_KEEP.len());
    let mut it = llrs.iter();
    for _ in 0..llrs.len() / PERIOD_KEPT {
        for &keep in &PUNCTURE_KEEP {
            out.push(if keep { *it.next().expect("length checked") } else { 0.0 });
        }
    }
    Ok(out)
}

/// Number of info bits that fill `steps` trellis steps.
pub fn info_len_for_steps(steps: usize) -> Option<usize> {
    (steps % PERIOD_STEPS == 0 && steps >= TAIL_BITS).then(|| steps - TAIL_BITS)
}

/// Encodes and punctures to rate 5/6.
pub fn encode(info: &[u8]) -> Result<Vec<u8>, CodingError> {
    if (info.len() + TAIL_BITS) % PERIOD_STEPS != 0 {
        return Err(CodingError::InfoLength { len: info.len() });
    }
    Ok(puncture(&conv_encode(info)))
}

/// Max-log Viterbi decoding of punctured LLRs; returns the info bits with
/// the tail removed. The path is forced to end in the all-zero state.
pub fn viterbi_decode_soft(llrs: &[f64]) -> Result<Vec<u8>, CodingError> {
    let mother = depuncture(llrs)?;
    Ok(viterbi_decode_mother(&mother))
}

/// Decodes unpunctured rate-1/2 LLRs (two per trellis step, tail included).
///
/// Both generators tap the newest and the oldest register bit, so in the
/// butterfly of predecessors 2j, 2j+1 and successors j, j+32 the four branch
/// labels are c, !c, !c, c for a single label c = c(j). One correlation
/// m_j per butterfly covers all four branches.
pub fn viterbi_decode_mother(llrs: &[f64]) -> Vec<u8> {
    const HALF: usize = STATES / 2;
    let steps = llrs.len() / 2;
    // sign of each output bit on the (u = 0, lsb = 0) branch into state j
    let mut sign = [[0f64; HALF]; 2];
    for j in 0..HALF {
        let bits = branch_bits((j as u32) << 1);
        sign[0][j] = if bits[0] == 1 { 1.0 } else { -1.0 };
        sign[1][j] = if bits[1] == 1 { 1.0 } else { -1.0 };
    }

    let mut metric = [f64::NEG_INFINITY; STATES];
    metric[0] = 0.0;
    let mut next = [0f64; STATES];
    let mut decisions = vec![[0u8; STATES]; steps];
    for (t, dec) in decisions.iter_mut().enumerate() {
        let (l0, l1) = (llrs[2 * t], llrs[2 * t + 1]);
        for j in 0..HALF {
            let m = sign[0][j] * l0 + sign[1][j] * l1;
            let (a, b) = (metric[2 * j], metric[2 * j + 1]);
            let (lo0, lo1) = (a + m, b - m);
            let (hi0, hi1) = (a - m, b + m);
            next[j] = if lo1 > lo0 { lo1 } else { lo0 };
            dec[j] = (lo1 > lo0) as u8;
            next[j + HALF] = if hi1 > hi0 { hi1 } else { hi0 };
            dec[j + HALF] = (hi1 > hi0) as u8;
        }
        std::mem::swap(&mut metric, &mut next);
        if t % 64 == 63 {
            let top = metric[0];
            if top.is_finite() {
                metric.iter_mut().for_each(|m| *m -= top);
            }
        }
    }

    let mut bits = vec![0u8; steps];
    let mut ns = 0usize;
    for t in (0..steps).rev() {
        bits[t] = (ns >> (TAIL_BITS - 1)) as u8;
        ns = ((ns & (HALF - 1)) << 1) | decisions[t][ns] as usize;
    }
    bits.truncate(steps.saturating_sub(TAIL_BITS));
    bits
}
