//! Packed bit sequences and the key-to-mask map.

use crate::codec::{Constellation, KeySpace, Keystream};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BitSeq {
    len: usize,
    words: Vec<u64>,
}

impl BitSeq {
    pub fn zeros(len: usize) -> Self {
        BitSeq {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    /// Packs a slice of 0/1 values (only the low bit of each is used).
    pub fn from_bits(bits: &[u8]) -> Self {
        let mut seq = BitSeq::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            seq.set(i, b);
        }
        seq
    }

    pub fn to_bits(&self) -> Vec<u8> {
        (0..self.len).map(|i| self.get(i)).collect()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> u8 {
        ((self.words[i / 64] >> (i % 64)) & 1) as u8
    }

    pub fn set(&mut self, i: usize, bit: u8) {
        let mask = 1u64 << (i % 64);
        if bit & 1 == 1 {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn xor_assign(&mut self, other: &BitSeq) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn xor(&self, other: &BitSeq) -> BitSeq {
        let mut out = self.clone();
        out.xor_assign(other);
        out
    }

    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn distance(&self, other: &BitSeq) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    fn leading_index(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .rev()
            .find(|(_, w)| **w != 0)
            .map(|(i, w)| i * 64 + 63 - w.leading_zeros() as usize)
    }
}

/// First `n` label masks `parity(k_t) xor s_t` produced by a keystream.
pub fn label_mask(ks: &mut Keystream, n: usize) -> BitSeq {
    let mut mask = BitSeq::zeros(n);
    for t in 0..n {
        let d = ks.next_draw();
        mask.set(t, d.parity ^ d.osk_bit);
    }
    mask
}

/// The label masks of every key in a key space.
///
/// LFSR output is linear in the register and registers are affine in the key,
/// so `mask(key) = offset xor sum_{i: key_i = 1} basis_i`.
#[derive(Clone, Debug)]
pub struct MaskFamily {
    key_bits: u32,
    offset: BitSeq,
    basis: Vec<BitSeq>,
}

impl MaskFamily {
    pub fn new(space: &KeySpace, c: &Constellation, n: usize) -> Result<Self> {
        let seq = |register: u64| -> Result<BitSeq> {
            let mut ks = Keystream::new(space.poly, register, c.key_width(), c.osk())?;
            Ok(label_mask(&mut ks, n))
        };
        let base_register = space.register_seed(0);
        let offset = seq(base_register)?;
        let basis = (0..space.key_bits)
            .map(|i| {
                let register = space.register_seed(1 << i) ^ base_register;
                seq(register)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MaskFamily {
            key_bits: space.key_bits,
            offset,
            basis,
        })
    }

    pub fn len(&self) -> usize {
        self.offset.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offset.is_empty()
    }

    pub fn mask(&self, key: u64) -> BitSeq {
        let mut m = self.offset.clone();
        for (i, b) in self.basis.iter().enumerate() {
            if (key >> i) & 1 == 1 {
                m.xor_assign(b);
            }
        }
        m
    }

    /// GF(2) rank of the key-to-mask map; `2^rank` distinct masks exist.
    pub fn rank(&self) -> u32 {
        let mut pivots: Vec<(usize, BitSeq)> = Vec::new();
        for v in &self.basis {
            let mut v = v.clone();
            while let Some(lead) = v.leading_index() {
                match pivots.iter().find(|(p, _)| *p == lead) {
                    Some((_, row)) => v.xor_assign(row),
                    None => {
                        pivots.push((lead, v));
                        break;
                    }
                }
            }
        }
        pivots.len() as u32
    }

    /// Calls `f(key, mask)` for every key, in Gray-code order.
    pub fn for_each(&self, mut f: impl FnMut(u64, &BitSeq)) {
        let mut mask = self.offset.clone();
        let mut key = 0u64;
        f(key, &mask);
        for step in 1..(1u64 << self.key_bits) {
            let bit = step.trailing_zeros() as usize;
            key ^= 1 << bit;
            mask.xor_assign(&self.basis[bit]);
            f(key, &mask);
        }
    }
}

pub(crate) fn check_length(name: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::invalid(
            name,
            format!("length {found}, expected {expected}"),
        ));
    }
    Ok(())
}
