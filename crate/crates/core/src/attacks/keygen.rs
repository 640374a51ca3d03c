//! Bob-versus-Eve error comparison behind advantage distillation.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::detection::{helstrom_pure, homodyne_antipodal_error};
use crate::error::{Error, Result};
use crate::fockspace::Amplitude;

/// `h2(p)` in bits, with `h2(0) = h2(1) = 0`.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeygenRow {
    /// Grid value (S, or S' in the randomized mode).
    pub energy: f64,
    /// Keyed receiver: Helstrom bound on the antipodal pair.
    pub pe_bob: f64,
    /// Eve: homodyne threshold decision without the key.
    pub pe_eve: f64,
    /// `h2(pe_eve) - h2(pe_bob)`.
    pub advantage: f64,
}

fn row(label: f64, energy: f64) -> Result<KeygenRow> {
    if !(energy >= 0.0 && energy.is_finite()) {
        return Err(Error::invalid(
            "S",
            format!("must be finite and >= 0, got {energy}"),
        ));
    }
    let plus = Amplitude::from_energy_phase(energy, 0.0);
    let minus = Amplitude::from_energy_phase(energy, PI);
    let pe_bob = helstrom_pure(plus, minus, 0.5)?.p_error;
    let pe_eve = homodyne_antipodal_error(energy);
    Ok(KeygenRow {
        energy: label,
        pe_bob,
        pe_eve,
        advantage: binary_entropy(pe_eve) - binary_entropy(pe_bob),
    })
}

pub fn keygen_advantage(energies: &[f64]) -> Result<Vec<KeygenRow>> {
    energies.iter().map(|&s| row(s, s)).collect()
}

/// Rows over an `S'` grid evaluated at effective energy `energy_scale * S'`.
pub fn randomized_keygen(s_prime: &[f64], energy_scale: f64) -> Result<Vec<KeygenRow>> {
    if !(energy_scale > 0.0 && energy_scale.is_finite()) {
        return Err(Error::invalid(
            "energy_scale",
            format!("must be finite and > 0, got {energy_scale}"),
        ));
    }
    s_prime.iter().map(|&s| row(s, energy_scale * s)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::{exponent_fit, normal_cdf};

    #[test]
    fn vacuum_has_no_advantage() {
        let r = keygen_advantage(&[0.0]).unwrap()[0];
        assert_eq!((r.pe_bob, r.pe_eve, r.advantage), (0.5, 0.5, 0.0));
    }

    #[test]
    fn closed_forms_at_four() {
        let r = keygen_advantage(&[4.0]).unwrap()[0];
        let bob = (1.0 - (1.0 - (-16.0f64).exp()).sqrt()) / 2.0;
        assert!((r.pe_bob - bob).abs() < 1e-15);
        assert_eq!(r.pe_eve, normal_cdf(-4.0));
        assert!(r.advantage > 0.0);
    }

    #[test]
    fn bob_beats_eve_for_positive_energy() {
        for r in keygen_advantage(&[0.01, 0.5, 1.0, 3.0, 8.0]).unwrap() {
            assert!(r.pe_bob < r.pe_eve && r.advantage > 0.0, "{r:?}");
        }
    }

    #[test]
    fn randomized_slopes_are_two_to_one() {
        let grid = [4.0, 6.0, 8.0, 10.0, 12.0];
        let rows = randomized_keygen(&grid, 0.5).unwrap();
        let b = exponent_fit(
            &rows
                .iter()
                .map(|r| (r.energy, r.pe_bob))
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let e = exponent_fit(
            &rows
                .iter()
                .map(|r| (r.energy, r.pe_eve))
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let ratio = b.slope / e.slope;
        assert!((1.6..=2.4).contains(&ratio), "{ratio}");
        assert!(randomized_keygen(&grid, 0.0).is_err());
    }

    #[test]
    fn entropy_edges() {
        assert_eq!(binary_entropy(0.5), 1.0);
        assert_eq!(binary_entropy(0.0), 0.0);
        assert_eq!(binary_entropy(1.0), 0.0);
    }
}
