//! Finite probability spaces, densities and random variables.
//!
//! Random variables and densities are plain value vectors indexed by atom;
//! every operation takes the space explicitly and checks lengths.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for the unit-mass conditions.
pub const MASS_TOL: f64 = 1e-12;

/// Random variable on a finite space: one value per atom.
pub type RandomVariable = Vec<f64>;

/// Atoms with strictly positive reference weights summing to one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FiniteSpace {
    weights: Vec<f64>,
}

impl FiniteSpace {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidSpace("no atoms".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidSpace(format!("weight {w} is not strictly positive")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidSpace(format!("weights sum to {total}")));
        }
        Ok(FiniteSpace { weights })
    }

    /// Normalizes positive masses to a probability.
    pub fn from_masses(masses: &[f64]) -> Result<Self> {
        let total: f64 = masses.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::InvalidSpace(format!("total mass {total}")));
        }
        let mut weights: Vec<f64> = masses.iter().map(|m| m / total).collect();
        // push the rounding residue onto the largest atom
        let residue = 1.0 - weights.iter().sum::<f64>();
        let imax = argmax(&weights);
        weights[imax] += residue;
        Self::new(weights)
    }

    pub fn uniform(m: usize) -> Result<Self> {
        Self::from_masses(&vec![1.0; m])
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn check_len(&self, got: usize) -> Result<()> {
        if got == self.len() {
            Ok(())
        } else {
            Err(Error::SpaceMismatch { expected: self.len(), got })
        }
    }

    /// `E[x]` under the reference measure, summed in atom order.
    pub fn expect(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum()
    }

    /// `E[x·y]`.
    pub fn pairing(&self, x: &[f64], y: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(x.iter().zip(y))
            .map(|(w, (a, b))| w * a * b)
            .sum()
    }

    /// `E_Q[x]` with `0·(+∞) = 0` on atoms where `Q` has no mass.
    pub fn expect_under(&self, q: &Density, x: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(q.values.iter().zip(x))
            .map(|(w, (psi, v))| if *psi == 0.0 { 0.0 } else { w * psi * v })
            .sum()
    }

    /// `E[|x|]`.
    pub fn l1_norm(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v.abs()).sum()
    }
}

impl TryFrom<Vec<f64>> for FiniteSpace {
    type Error = Error;
    fn try_from(w: Vec<f64>) -> Result<Self> {
        FiniteSpace::new(w)
    }
}

impl From<FiniteSpace> for Vec<f64> {
    fn from(s: FiniteSpace) -> Self {
        s.weights
    }
}

/// Density `dQ/dP` of a probability `Q ≪ P`: nonnegative with unit mean.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Density {
    values: Vec<f64>,
}

impl Density {
    pub fn new(space: &FiniteSpace, values: Vec<f64>) -> Result<Self> {
        space.check_len(values.len())?;
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidDensity(format!("value {v} is not a nonnegative real")));
        }
        let mass = space.expect(&values);
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidDensity(format!("mean {mass} differs from 1")));
        }
        Ok(Density { values })
    }

    /// The reference measure itself.
    pub fn reference(space: &FiniteSpace) -> Self {
        Density { values: vec![1.0; space.len()] }
    }

    /// Density of the probability vector `probs`, renormalized against
    /// rounding.
    pub fn from_probabilities(space: &FiniteSpace, probs: &[f64]) -> Result<Self> {
        space.check_len(probs.len())?;
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::InvalidDensity(format!("probability {p} is negative")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDensity(format!("probabilities sum to {total}")));
        }
        let values = probs
            .iter()
            .zip(space.weights())
            .map(|(p, w)| p / total / w)
            .collect();
        Ok(Density { values })
    }

    /// Unchecked constructor for solver internals that keep the invariants.
    pub(crate) fn from_values_unchecked(values: Vec<f64>) -> Self {
        Density { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn probabilities(&self, space: &FiniteSpace) -> Vec<f64> {
        self.values.iter().zip(space.weights()).map(|(v, w)| v * w).collect()
    }

    /// True when every atom carries mass.
    pub fn is_equivalent(&self) -> bool {
        self.values.iter().all(|v| *v > 0.0)
    }

    pub fn max_abs_diff(&self, other: &Density) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Index of the first largest entry.
pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_zero_weight_and_bad_mass() {
        assert!(FiniteSpace::new(vec![0.5, 0.5, 0.0]).is_err());
        assert!(FiniteSpace::new(vec![0.5, 0.6]).is_err());
        let s = FiniteSpace::uniform(3).unwrap();
        assert!((s.weights().iter().sum::<f64>() - 1.0).abs() <= MASS_TOL);
    }

    #[test]
    fn density_mass_checked() {
        let s = FiniteSpace::new(vec![0.5, 0.5]).unwrap();
        assert!(Density::new(&s, vec![1.5, 0.5]).is_ok());
        assert!(Density::new(&s, vec![1.5, 0.6]).is_err());
        assert!(Density::new(&s, vec![2.5, -0.5]).is_err());
        assert!(matches!(Density::new(&s, vec![1.0]), Err(Error::SpaceMismatch { .. })));
    }

    #[test]
    fn probabilities_round_trip() {
        let s = FiniteSpace::new(vec![0.25, 0.75]).unwrap();
        let q = Density::from_probabilities(&s, &[0.5, 0.5]).unwrap();
        assert_eq!(q.values(), &[2.0, 2.0 / 3.0]);
        let p = q.probabilities(&s);
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn expectation_ignores_infinity_on_null_atoms() {
        let s = FiniteSpace::new(vec![0.5, 0.5]).unwrap();
        let q = Density::new(&s, vec![2.0, 0.0]).unwrap();
        assert_eq!(s.expect_under(&q, &[1.0, f64::INFINITY]), 1.0);
    }
}
