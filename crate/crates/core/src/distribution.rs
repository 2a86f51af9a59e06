//! Discrete energy distributions of a state with respect to a Hamiltonian.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{DensityMatrix, HermitianSpectrum, Operator};

/// Levels closer than this (relative to the spectral spread) are merged.
pub const DEGENERACY_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyDistribution {
    pub energies: Vec<f64>,
    pub probabilities: Vec<f64>,
}

impl EnergyDistribution {
    pub fn new(energies: Vec<f64>, probabilities: Vec<f64>) -> Result<Self> {
        if energies.len() != probabilities.len() {
            return Err(Error::DimensionMismatch("energies vs probabilities".into()));
        }
        Ok(EnergyDistribution {
            energies,
            probabilities,
        })
    }

    /// Probabilities of the eigenvalues of `h` in `state`, degenerate levels merged.
    pub fn of(h: &Operator, state: &DensityMatrix) -> Result<Self> {
        if h.dim() != state.dim() {
            return Err(Error::DimensionMismatch("Hamiltonian vs state".into()));
        }
        let spec = HermitianSpectrum::of(h)?;
        let vecs = spec.vectors();
        let rho = state.matrix();
        let mut levels: Vec<(f64, f64)> = spec
            .values()
            .iter()
            .enumerate()
            .map(|(j, &e)| {
                let col = vecs.column(j);
                let p = (col.adjoint() * rho * col)[(0, 0)].re;
                (e, p.max(0.0))
            })
            .collect();
        levels.sort_by(|a, b| a.0.total_cmp(&b.0));
        let spread = levels
            .iter()
            .fold(0.0_f64, |m, (e, _)| m.max(e.abs()))
            .max(1.0);
        let mut energies: Vec<f64> = Vec::new();
        let mut probabilities: Vec<f64> = Vec::new();
        for (e, p) in levels {
            match energies.last() {
                Some(&last) if (e - last).abs() <= DEGENERACY_TOL * spread => {
                    *probabilities.last_mut().expect("paired") += p;
                }
                _ => {
                    energies.push(e);
                    probabilities.push(p);
                }
            }
        }
        Ok(EnergyDistribution {
            energies,
            probabilities,
        })
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.energies
            .iter()
            .zip(&self.probabilities)
            .map(|(e, p)| e * p)
            .sum::<f64>()
            / self.total()
    }

    pub fn std_dev(&self) -> f64 {
        let m = self.mean();
        let var = self
            .energies
            .iter()
            .zip(&self.probabilities)
            .map(|(e, p)| (e - m).powi(2) * p)
            .sum::<f64>()
            / self.total();
        var.max(0.0).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merges_degenerate_levels() {
        let h = Operator::from_real_diagonal(&[1.0, 0.0, 1.0]);
        let rho = DensityMatrix::diagonal(&[0.2, 0.3, 0.5]).unwrap();
        let d = EnergyDistribution::of(&h, &rho).unwrap();
        assert_eq!(d.energies.len(), 2);
        assert!((d.probabilities[0] - 0.3).abs() < 1e-14);
        assert!((d.probabilities[1] - 0.7).abs() < 1e-14);
        assert!((d.mean() - 0.7).abs() < 1e-14);
        assert!((d.std_dev() - (0.21f64).sqrt()).abs() < 1e-14);
    }
}
