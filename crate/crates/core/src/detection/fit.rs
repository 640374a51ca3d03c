use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Least-squares line through `(S, ln p)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Unweighted least-squares fit of `ln p_error` against `S`. Needs at least
/// four points with `p_error` in `(0, 0.5)`.
pub fn exponent_fit(points: &[(f64, f64)]) -> Result<ExponentFit> {
    if points.len() < 4 {
        return Err(Error::invalid(
            "points",
            format!("need >= 4 points, got {}", points.len()),
        ));
    }
    if let Some((s, p)) = points
        .iter()
        .find(|(s, p)| !(*p > 0.0 && *p < 0.5) || !s.is_finite())
    {
        return Err(Error::invalid(
            "points",
            format!("p_error {p} at S = {s} is outside (0, 0.5)"),
        ));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("points", "all S values coincide"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r2 = if ss_tot == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok(ExponentFit {
        slope,
        intercept,
        r2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::{helstrom_pure, homodyne_antipodal_error};
    use crate::fockspace::Amplitude;

    #[test]
    fn exact_exponential() {
        let pts: Vec<(f64, f64)> = (1..=5)
            .map(|s| (s as f64, (-3.0 * s as f64).exp()))
            .collect();
        let fit = exponent_fit(&pts).unwrap();
        assert!((fit.slope + 3.0).abs() < 1e-9);
        assert!(fit.intercept.abs() < 1e-9);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bob_and_eve_slopes() {
        let grid = [2.0, 3.0, 4.0, 5.0, 6.0];
        let bob: Vec<(f64, f64)> = grid
            .iter()
            .map(|&s| {
                let (a, b) = (
                    Amplitude::from_energy_phase(s, 0.0),
                    Amplitude::from_energy_phase(s, std::f64::consts::PI),
                );
                (s, helstrom_pure(a, b, 0.5).unwrap().p_error)
            })
            .collect();
        let eve: Vec<(f64, f64)> = grid
            .iter()
            .map(|&s| (s, homodyne_antipodal_error(s)))
            .collect();
        let fb = exponent_fit(&bob).unwrap().slope;
        let fe = exponent_fit(&eve).unwrap().slope;
        assert!((-4.5..=-3.5).contains(&fb), "{fb}");
        assert!((-2.5..=-1.5).contains(&fe), "{fe}");
    }

    #[test]
    fn rejects_bad_points() {
        assert!(exponent_fit(&[(1.0, 0.1), (2.0, 0.01), (3.0, 0.001)]).is_err());
        assert!(exponent_fit(&[(1.0, 0.1), (2.0, 0.0), (3.0, 0.001), (4.0, 1e-4)]).is_err());
        assert!(exponent_fit(&[(1.0, 0.1), (1.0, 0.2), (1.0, 0.3), (1.0, 0.4)]).is_err());
    }
}
