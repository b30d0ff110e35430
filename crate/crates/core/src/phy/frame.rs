//! Frame layout: one user's coded block over all subcarriers of one OFDM
//! symbol.
//!
//! With N_c = subcarriers * bits_per_symbol coded slots, the code runs
//! S = floor(N_c / 6) * 5 trellis steps, carrying S - 6 info bits and
//! S * 6 / 5 coded bits. Any remaining slots are zero padding. Coded bits are
//! interleaved over all N_c slots and mapped to symbols slot-by-slot, so
//! symbol n carries slots n*bps .. (n+1)*bps.

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use super::coding::{self, CodingError, PERIOD_KEPT, PERIOD_STEPS};
use super::constellation::Constellation;
use crate::linalg::C64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FrameError {
    #[error("{bits} bits do not fill whole symbols of {bps} bits")]
    Ragged { bits: usize, bps: usize },
    #[error("frame too short: {slots} coded slots")]
    TooShort { slots: usize },
    #[error("expected {expected} values, got {got}")]
    Length { expected: usize, got: usize },
    #[error(transparent)]
    Coding(#[from] CodingError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameLayout {
    pub subcarriers: usize,
    pub bits_per_symbol: usize,
    pub info_bits: usize,
    pub coded_bits: usize,
    pub slots: usize,
}

impl FrameLayout {
    pub fn new(subcarriers: usize, bits_per_symbol: usize) -> Result<Self, FrameError> {
        let slots = subcarriers * bits_per_symbol;
        let steps = slots / PERIOD_KEPT * PERIOD_STEPS;
        let info_bits = coding::info_len_for_steps(steps).filter(|&n| n > 0).ok_or(FrameError::TooShort { slots })?;
        Ok(FrameLayout { subcarriers, bits_per_symbol, info_bits, coded_bits: steps / PERIOD_STEPS * PERIOD_KEPT, slots })
    }

    pub fn padding(&self) -> usize {
        self.slots - self.coded_bits
    }
}

/// A permutation of coded-bit slots: slot i carries input bit `perm[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interleaver {
    perm: Vec<usize>,
}

impl Interleaver {
    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut perm: Vec<usize> = (0..len).collect();
        perm.shuffle(rng);
        Interleaver { perm }
    }

    pub fn identity(len: usize) -> Self {
        Interleaver { perm: (0..len).collect() }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn interleave<T: Copy>(&self, input: &[T]) -> Vec<T> {
        assert_eq!(input.len(), self.perm.len());
        self.perm.iter().map(|&p| input[p]).collect()
    }

    pub fn deinterleave<T: Copy + Default>(&self, input: &[T]) -> Vec<T> {
        assert_eq!(input.len(), self.perm.len());
        let mut out = vec![T::default(); input.len()];
        for (&p, &v) in self.perm.iter().zip(input) {
            out[p] = v;
        }
        out
    }
}

/// Maps a bit string onto symbols, `bits_per_symbol` bits at a time.
pub fn map_bits(bits: &[u8], constellation: &Constellation) -> Result<Vec<C64>, FrameError> {
    let bps = constellation.bits_per_symbol();
    if bits.len() % bps != 0 {
        return Err(FrameError::Ragged { bits: bits.len(), bps });
    }
    Ok(bits.chunks(bps).map(|c| constellation.map(c)).collect())
}

/// Hard nearest-point demapping, the inverse of [`map_bits`] without noise.
pub fn hard_demap(symbols: &[C64], constellation: &Constellation) -> Vec<u8> {
    let bps = constellation.bits_per_symbol();
    symbols
        .iter()
        .flat_map(|&z| {
            let l = constellation.nearest(z);
            (0..bps).map(move |b| ((l >> (bps - 1 - b)) & 1) as u8)
        })
        .collect()
}

/// Encoded and mapped frame for one user.
#[derive(Debug, Clone)]
pub struct CodedFrame {
    pub info_bits: Vec<u8>,
    pub coded_bits: Vec<u8>,
    /// one symbol per subcarrier
    pub symbols: Vec<C64>,
}

pub fn frame_assemble(
    info: &[u8],
    layout: &FrameLayout,
    interleaver: &Interleaver,
    constellation: &Constellation,
) -> Result<CodedFrame, FrameError> {
    if info.len() != layout.info_bits {
        return Err(FrameError::Length { expected: layout.info_bits, got: info.len() });
    }
    if interleaver.len() != layout.slots {
        return Err(FrameError::Length { expected: layout.slots, got: interleaver.len() });
    }
    let coded = coding::encode(info)?;
    let mut slots = coded.clone();
    slots.resize(layout.slots, 0);
    let symbols = map_bits(&interleaver.interleave(&slots), constellation)?;
    Ok(CodedFrame { info_bits: info.to_vec(), coded_bits: coded, symbols })
}

/// Deinterleaves per-slot LLRs (symbol-major) and strips the padding,
/// returning the punctured LLR stream for the decoder.
pub fn frame_disassemble(llrs: &[f64], layout: &FrameLayout, interleaver: &Interleaver) -> Result<Vec<f64>, FrameError> {
    if llrs.len() != layout.slots {
        return Err(FrameError::Length { expected: layout.slots, got: llrs.len() });
    }
    let mut out = interleaver.deinterleave(llrs);
    out.truncate(layout.coded_bits);
    Ok(out)
}
