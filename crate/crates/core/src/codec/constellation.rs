use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fockspace::Amplitude;

/// Angular tolerance for deciding that a phase sits on the labeling axis.
pub const AXIS_TIE_TOL: f64 = 1e-12;

/// Side of the labeling axis a phase falls on. `Up` encodes bit 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Down = 0,
    Up = 1,
}

impl Label {
    pub fn from_bit(bit: u8) -> Label {
        if bit & 1 == 1 {
            Label::Up
        } else {
            Label::Down
        }
    }

    pub fn bit(self) -> u8 {
        self as u8
    }
}

/// Half-plane of `phase` relative to `axis`: up iff `sin(phase - axis) > 0`.
/// On-axis phases count as up, anti-axis phases as down.
pub fn halfplane_label(phase: f64, axis: f64) -> Label {
    let d = (phase - axis).rem_euclid(TAU);
    if d < AXIS_TIE_TOL || TAU - d < AXIS_TIE_TOL {
        Label::Up
    } else if (d - PI).abs() < AXIS_TIE_TOL {
        Label::Down
    } else if d < PI {
        Label::Up
    } else {
        Label::Down
    }
}

/// The 2M-phase signal set: `theta_j = phase_offset + shift + pi j / M`,
/// basis `b` pairing states `b` and `b + M`.
///
/// With `half_step` the phases are shifted by `pi / (2M)` so that no state
/// sits on the labeling axis (which stays at `phase_offset`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constellation {
    bases: usize,
    energy: f64,
    phase_offset: f64,
    half_step: bool,
    osk: bool,
}

impl Constellation {
    pub fn new(bases: usize, energy: f64) -> Result<Self> {
        if bases == 0 || !bases.is_power_of_two() {
            return Err(Error::invalid(
                "M",
                format!("must be a power of two, got {bases}"),
            ));
        }
        if !(energy >= 0.0 && energy.is_finite()) {
            return Err(Error::invalid(
                "S",
                format!("must be finite and >= 0, got {energy}"),
            ));
        }
        Ok(Constellation {
            bases,
            energy,
            phase_offset: 0.0,
            half_step: false,
            osk: false,
        })
    }

    pub fn with_osk(mut self, osk: bool) -> Self {
        self.osk = osk;
        self
    }

    pub fn with_phase_offset(mut self, offset: f64) -> Self {
        self.phase_offset = offset;
        self
    }

    pub fn with_half_step(mut self, half_step: bool) -> Self {
        self.half_step = half_step;
        self
    }

    /// Number of bases M.
    pub fn bases(&self) -> usize {
        self.bases
    }

    /// Number of signal states 2M.
    pub fn states(&self) -> usize {
        2 * self.bases
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn osk(&self) -> bool {
        self.osk
    }

    pub fn half_step(&self) -> bool {
        self.half_step
    }

    pub fn phase_offset(&self) -> f64 {
        self.phase_offset
    }

    /// The axis Alice and Bob use for half-plane labels.
    pub fn axis(&self) -> f64 {
        self.phase_offset
    }

    /// `log2(M)`, the running-key width in bits.
    pub fn key_width(&self) -> u32 {
        self.bases.trailing_zeros()
    }

    /// Keystream bits consumed per symbol (running key plus the OSK bit).
    pub fn bits_per_symbol(&self) -> u32 {
        self.key_width() + u32::from(self.osk)
    }

    pub fn phase(&self, index: usize) -> f64 {
        let shift = if self.half_step {
            PI / (2.0 * self.bases as f64)
        } else {
            0.0
        };
        self.phase_offset + shift + PI * index as f64 / self.bases as f64
    }

    pub fn amplitude(&self, index: usize) -> Amplitude {
        Amplitude::from_energy_phase(self.energy, self.phase(index))
    }

    pub fn amplitudes(&self) -> Vec<Amplitude> {
        (0..self.states()).map(|j| self.amplitude(j)).collect()
    }

    /// The two state indices of basis `b`.
    pub fn pair(&self, basis: usize) -> (usize, usize) {
        (basis, basis + self.bases)
    }

    /// Label of state `index` relative to the codec axis.
    pub fn label(&self, index: usize) -> Label {
        halfplane_label(self.phase(index), self.axis())
    }

    /// The member of basis `b` lying in half-plane `label`.
    pub fn member_with_label(&self, basis: usize, label: Label) -> usize {
        let (first, second) = self.pair(basis);
        if self.label(first) == label {
            first
        } else {
            second
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halfplane_examples() {
        assert_eq!(halfplane_label(PI / 2.0, 0.0), Label::Up);
        assert_eq!(halfplane_label(3.0 * PI / 2.0, 0.0), Label::Down);
        assert_eq!(halfplane_label(0.0, 0.0), Label::Up);
        assert_eq!(halfplane_label(PI, 0.0), Label::Down);
        assert_eq!(halfplane_label(TAU, 0.0), Label::Up);
        assert_eq!(halfplane_label(-PI / 2.0, 0.0), Label::Down);
        assert_eq!(halfplane_label(1.0, 0.9), Label::Up);
        assert_eq!(halfplane_label(0.8, 0.9), Label::Down);
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert!(Constellation::new(3, 1.0).is_err());
        assert!(Constellation::new(0, 1.0).is_err());
        assert!(Constellation::new(4, -1.0).is_err());
        assert!(Constellation::new(4, f64::NAN).is_err());
    }

    #[test]
    fn phases_distinct_and_uniform() {
        for half in [false, true] {
            let c = Constellation::new(8, 4.0)
                .unwrap()
                .with_half_step(half)
                .with_phase_offset(0.3);
            let step = PI / 8.0;
            for j in 0..c.states() {
                let next = c.phase((j + 1) % c.states());
                let gap = (next - c.phase(j)).rem_euclid(TAU);
                assert!((gap - step).abs() < 1e-12);
                assert!((c.amplitude(j).energy() - 4.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn each_pair_has_one_up_member() {
        for half in [false, true] {
            let c = Constellation::new(16, 1.0).unwrap().with_half_step(half);
            for b in 0..c.bases() {
                let (x, y) = c.pair(b);
                assert_ne!(c.label(x), c.label(y));
                assert_eq!(c.label(c.member_with_label(b, Label::Up)), Label::Up);
                assert_eq!(c.label(c.member_with_label(b, Label::Down)), Label::Down);
            }
        }
    }
}
