//! Fibonacci LFSR keystream.
//!
//! The register holds `degree` cells; cell 0 is the output. Each step emits
//! cell 0, shifts right and feeds `parity(state & taps)` into the top cell, so
//! the bit sequence obeys `s[t+d] = sum_i a_i s[t+i]` for the feedback
//! polynomial `x^d + sum_i a_i x^i`. Polynomials are written as bitmasks that
//! include the leading `x^d` term, e.g. `x^4 + x + 1 = 0x13`.
//!
//! Running keys are assembled from `log2(M)` consecutive output bits, most
//! significant bit first; the OSK bit, when enabled, is the next bit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One primitive polynomial per degree 2..=32.
const PRIMITIVE_POLYS: [u64; 31] = [
    0x7,         // x^2+x+1
    0xb,         // x^3+x+1
    0x13,        // x^4+x+1
    0x25,        // x^5+x^2+1
    0x43,        // x^6+x+1
    0x83,        // x^7+x+1
    0x11d,       // x^8+x^4+x^3+x^2+1
    0x211,       // x^9+x^4+1
    0x409,       // x^10+x^3+1
    0x805,       // x^11+x^2+1
    0x1053,      // x^12+x^6+x^4+x+1
    0x201b,      // x^13+x^4+x^3+x+1
    0x4443,      // x^14+x^10+x^6+x+1
    0x8003,      // x^15+x+1
    0x1100b,     // x^16+x^12+x^3+x+1
    0x20009,     // x^17+x^3+1
    0x40081,     // x^18+x^7+1
    0x80027,     // x^19+x^5+x^2+x+1
    0x100009,    // x^20+x^3+1
    0x200005,    // x^21+x^2+1
    0x400003,    // x^22+x+1
    0x800021,    // x^23+x^5+1
    0x1000087,   // x^24+x^7+x^2+x+1
    0x2000009,   // x^25+x^3+1
    0x4000047,   // x^26+x^6+x^2+x+1
    0x8000027,   // x^27+x^5+x^2+x+1
    0x10000009,  // x^28+x^3+1
    0x20000005,  // x^29+x^2+1
    0x40000053,  // x^30+x^6+x^4+x+1
    0x80000009,  // x^31+x^3+1
    0x1000000af, // x^32+x^7+x^5+x^3+x^2+x+1
];

/// A primitive feedback polynomial of the given degree (2..=32).
pub fn primitive_poly(degree: u32) -> Result<u64> {
    if !(2..=32).contains(&degree) {
        return Err(Error::invalid(
            "degree",
            format!("no tabulated polynomial for degree {degree}"),
        ));
    }
    Ok(PRIMITIVE_POLYS[degree as usize - 2])
}

/// Serialized keystream description: `{poly_bitmask_hex, seed_hex, bits_per_symbol}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeystreamSpec {
    pub poly_bitmask_hex: String,
    pub seed_hex: String,
    pub bits_per_symbol: u32,
}

/// One symbol's worth of keystream.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KeyDraw {
    /// Running key in `[0, M)`.
    pub running_key: usize,
    /// `running_key mod 2`.
    pub parity: u8,
    /// OSK swap bit, always 0 without OSK.
    pub osk_bit: u8,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Keystream {
    state: u64,
    taps: u64,
    degree: u32,
    key_width: u32,
    osk: bool,
}

pub(crate) fn parse_hex(name: &'static str, text: &str) -> Result<u64> {
    let digits = text
        .trim()
        .trim_start_matches("0x")
        .trim_start_matches("0X");
    u64::from_str_radix(digits, 16)
        .map_err(|e| Error::invalid(name, format!("bad hex `{text}`: {e}")))
}

impl Keystream {
    /// Keystream for `M = 2^key_width` bases (plus one OSK bit per symbol when
    /// `osk`).
    pub fn new(poly: u64, seed: u64, key_width: u32, osk: bool) -> Result<Self> {
        if poly < 0b100 {
            return Err(Error::invalid(
                "poly",
                format!("degree must be >= 2, got {poly:#x}"),
            ));
        }
        let degree = 63 - poly.leading_zeros();
        if degree > 63 {
            return Err(Error::invalid("poly", "degree must be <= 63"));
        }
        let mask = (1u64 << degree) - 1;
        if seed & !mask != 0 {
            return Err(Error::invalid(
                "seed",
                format!("{seed:#x} does not fit a {degree}-cell register"),
            ));
        }
        if seed == 0 {
            return Err(Error::ZeroRegister);
        }
        if key_width > 16 {
            return Err(Error::invalid("key_width", "at most 16 running-key bits"));
        }
        Ok(Keystream {
            state: seed,
            taps: poly & mask,
            degree,
            key_width,
            osk,
        })
    }

    pub fn from_spec(spec: &KeystreamSpec, osk: bool) -> Result<Self> {
        let poly = parse_hex("poly_bitmask_hex", &spec.poly_bitmask_hex)?;
        let seed = parse_hex("seed_hex", &spec.seed_hex)?;
        let width = spec
            .bits_per_symbol
            .checked_sub(u32::from(osk))
            .ok_or_else(|| {
                Error::invalid(
                    "bits_per_symbol",
                    "must count the OSK bit when OSK is enabled",
                )
            })?;
        Keystream::new(poly, seed, width, osk)
    }

    pub fn spec(&self) -> KeystreamSpec {
        KeystreamSpec {
            poly_bitmask_hex: format!("{:#x}", self.taps | (1u64 << self.degree)),
            seed_hex: format!("{:#x}", self.state),
            bits_per_symbol: self.bits_per_symbol(),
        }
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn state(&self) -> u64 {
        self.state
    }

    pub fn bits_per_symbol(&self) -> u32 {
        self.key_width + u32::from(self.osk)
    }

    /// Emits the output cell and advances the register one step.
    pub fn next_bit(&mut self) -> u8 {
        let out = (self.state & 1) as u8;
        let feedback = (self.state & self.taps).count_ones() as u64 & 1;
        self.state = (self.state >> 1) | (feedback << (self.degree - 1));
        out
    }

    /// Advances by `bits_per_symbol` steps and returns the symbol's keys.
    pub fn next_draw(&mut self) -> KeyDraw {
        let mut running_key = 0usize;
        for _ in 0..self.key_width {
            running_key = (running_key << 1) | self.next_bit() as usize;
        }
        let osk_bit = if self.osk { self.next_bit() } else { 0 };
        KeyDraw {
            running_key,
            parity: (running_key & 1) as u8,
            osk_bit,
        }
    }

    /// Number of steps until the register state repeats (brute force).
    pub fn state_period(&self) -> u64 {
        let mut probe = self.clone();
        let start = probe.state;
        let mut steps = 0u64;
        loop {
            probe.next_bit();
            steps += 1;
            if probe.state == start {
                return steps;
            }
        }
    }
}

/// Maps `|K|`-bit keys onto registers of a `(|K| + 1)`-cell maximal-length
/// LFSR as `key << 1 | 1`, so every key (including 0) yields a distinct,
/// non-zero register.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeySpace {
    pub key_bits: u32,
    pub poly: u64,
}

impl KeySpace {
    pub fn new(key_bits: u32) -> Result<Self> {
        if !(1..=31).contains(&key_bits) {
            return Err(Error::invalid(
                "key_bits",
                format!("must lie in 1..=31, got {key_bits}"),
            ));
        }
        Ok(KeySpace {
            key_bits,
            poly: primitive_poly(key_bits + 1)?,
        })
    }

    pub fn with_poly(key_bits: u32, poly: u64) -> Result<Self> {
        let space = KeySpace { key_bits, poly };
        if poly.checked_ilog2() != Some(key_bits + 1) {
            return Err(Error::invalid(
                "poly",
                format!(
                    "key space of {key_bits} bits needs a degree-{} polynomial",
                    key_bits + 1
                ),
            ));
        }
        Ok(space)
    }

    pub fn size(&self) -> u64 {
        1u64 << self.key_bits
    }

    pub fn register_seed(&self, key: u64) -> u64 {
        (key << 1) | 1
    }

    pub fn keystream(&self, key: u64, key_width: u32, osk: bool) -> Result<Keystream> {
        if key >= self.size() {
            return Err(Error::invalid(
                "key",
                format!("{key:#x} exceeds {} bits", self.key_bits),
            ));
        }
        Keystream::new(self.poly, self.register_seed(key), key_width, osk)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn degree4_period_15() {
        let ks = Keystream::new(0x13, 0b0001, 2, false).unwrap();
        assert_eq!(ks.state_period(), 15);
        // the output bit sequence repeats with the same period
        let mut gen = ks.clone();
        let bits: Vec<u8> = (0..45).map(|_| gen.next_bit()).collect();
        assert_eq!(bits[..15], bits[15..30]);
        assert!((1..15).all(|p| bits[..15] != bits[p..p + 15]));
        assert_eq!(bits[..15].iter().filter(|&&b| b == 1).count(), 8);
    }

    #[test]
    fn parity_is_low_bit() {
        let mut ks = Keystream::new(0x11d, 0x5a, 3, true).unwrap();
        for _ in 0..200 {
            let d = ks.next_draw();
            assert!(d.running_key < 8);
            assert_eq!(d.parity as usize, d.running_key % 2);
            assert!(d.osk_bit <= 1);
        }
    }

    #[test]
    fn msb_first_assembly() {
        let mut bits = Keystream::new(0x11d, 0x5a, 3, false).unwrap();
        let mut keys = bits.clone();
        for _ in 0..20 {
            let expected = (0..3).fold(0usize, |k, _| (k << 1) | bits.next_bit() as usize);
            assert_eq!(keys.next_draw().running_key, expected);
        }
    }

    /// Over one period the degree-8 register visits each nonzero state once.
    #[test]
    fn degree8_visits_every_state() {
        let mut ks = Keystream::new(0x11d, 0x01, 3, false).unwrap();
        let mut seen = HashSet::new();
        for _ in 0..255 {
            assert!(seen.insert(ks.state()));
            ks.next_bit();
        }
        assert_eq!(seen.len(), 255);
        assert!(!seen.contains(&0));
        assert_eq!(ks.state(), 0x01);
    }

    #[test]
    fn tabulated_polys_are_maximal() {
        for degree in 2..=16 {
            let poly = primitive_poly(degree).unwrap();
            let ks = Keystream::new(poly, 1, 0, false).unwrap();
            assert_eq!(ks.state_period(), (1u64 << degree) - 1, "degree {degree}");
        }
    }

    #[test]
    #[ignore = "slow: exhaustive periods up to degree 24"]
    fn tabulated_polys_are_maximal_large() {
        for degree in 17..=24 {
            let ks = Keystream::new(primitive_poly(degree).unwrap(), 1, 0, false).unwrap();
            assert_eq!(ks.state_period(), (1u64 << degree) - 1, "degree {degree}");
        }
    }

    #[test]
    fn zero_register_rejected() {
        assert!(matches!(
            Keystream::new(0x13, 0, 2, false),
            Err(Error::ZeroRegister)
        ));
        assert!(Keystream::new(0x13, 0x10, 2, false).is_err());
    }

    #[test]
    fn spec_round_trip() {
        let ks = Keystream::new(0x211, 0x1ab, 4, true).unwrap();
        let spec = ks.spec();
        assert_eq!(spec.poly_bitmask_hex, "0x211");
        assert_eq!(spec.bits_per_symbol, 5);
        assert_eq!(Keystream::from_spec(&spec, true).unwrap(), ks);
    }

    #[test]
    fn key_space_registers_distinct_and_nonzero() {
        let space = KeySpace::new(8).unwrap();
        let seeds: HashSet<u64> = (0..space.size()).map(|k| space.register_seed(k)).collect();
        assert_eq!(seeds.len(), 256);
        assert!(!seeds.contains(&0));
        assert!(space.keystream(256, 3, false).is_err());
        assert!(KeySpace::with_poly(8, 0x11d).is_err());
    }
}
