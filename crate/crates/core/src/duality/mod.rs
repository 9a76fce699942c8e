//! Conjugation, Fenchel duality and the regularity battery for robust
//! integral functionals on finite spaces.

pub mod battery;
pub mod conjugate;
pub mod dlvp;
pub mod fenchel;
pub mod minimax;
pub mod transform;
pub mod utility;

pub use battery::{battery, BatteryConfig, BatteryItem, BatteryReport};
pub use conjugate::{
    conjugate_on_l1, dual_representation_check, grid_conjugate, subdifferential, ConjugateComparison,
    DualRepresentation, Subgradient,
};
pub use dlvp::{dlvp_certificate, family_bound, spike_family, DlvpCertificate};
pub use fenchel::{fenchel_solve, ConeSpec, DualityReport, DualityStatus, SolverConfig};
pub use minimax::{minimax_check, MinimaxLevel, MinimaxReport};
pub use transform::{
    scaling_condition, shift_identity_check, transform_scaling, transform_shift, ScalingCondition,
    ShiftIdentity,
};
pub use utility::{robust_utility_solve, UtilitySpec};

use serde::{Deserialize, Serialize};

use crate::convex1d::PiecewiseConvexFn;
use crate::penalty::Penalty;
use crate::space::FiniteSpace;

/// Dyadic per-atom grids on `[−radius, radius]` intersected with each
/// section's domain. Level `ℓ` has `2^ℓ + 1` points per atom and contains
/// every coarser level.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub radius: f64,
    pub level: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { radius: 8.0, level: 4 }
    }
}

impl GridSpec {
    pub fn at_level(self, level: usize) -> GridSpec {
        GridSpec { level, ..self }
    }

    /// The interval covered on an atom whose section is `f`.
    pub fn interval(&self, f: &PiecewiseConvexFn) -> (f64, f64) {
        let (lo, hi) = f.domain();
        let a = lo.max(-self.radius);
        let b = hi.min(self.radius);
        if a <= b {
            (a, b)
        } else if lo > self.radius {
            (lo, lo)
        } else {
            (hi, hi)
        }
    }

    /// Grid points on one atom at this level.
    pub fn points(&self, f: &PiecewiseConvexFn) -> Vec<f64> {
        let (a, b) = self.interval(f);
        if a == b {
            return vec![a];
        }
        let n = 1usize << self.level;
        let step = (b - a) / n as f64;
        (0..=n).map(|k| if k == n { b } else { a + step * k as f64 }).collect()
    }
}

/// Calls `visit` on every point of the product grid, in lexicographic order.
pub(crate) fn for_each_point(grids: &[Vec<f64>], mut visit: impl FnMut(&[f64])) {
    if grids.iter().any(|g| g.is_empty()) {
        return;
    }
    let m = grids.len();
    let mut idx = vec![0usize; m];
    let mut point: Vec<f64> = grids.iter().map(|g| g[0]).collect();
    loop {
        visit(&point);
        let mut k = m;
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < grids[k].len() {
                point[k] = grids[k][idx[k]];
                break;
            }
            idx[k] = 0;
            point[k] = grids[k][0];
        }
    }
}

/// Atoms that some measure in the penalty domain charges.
pub(crate) fn charged_atoms(space: &FiniteSpace, p: &Penalty) -> Vec<bool> {
    match p {
        Penalty::Dirac(q) => q.values().iter().map(|v| *v > 0.0).collect(),
        Penalty::Polyhedral(vs) => (0..space.len()).map(|i| vs.iter().any(|v| v.values()[i] > 0.0)).collect(),
        Penalty::Entropic | Penalty::Custom(_) => vec![true; space.len()],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_are_nested() {
        let f = PiecewiseConvexFn::indicator(-1.0, 20.0).unwrap();
        let g = GridSpec { radius: 8.0, level: 3 };
        let fine = g.points(&f);
        assert_eq!(fine.len(), 9);
        assert_eq!((fine[0], fine[8]), (-1.0, 8.0));
        for x in g.at_level(2).points(&f) {
            assert!(fine.contains(&x));
        }
        let far = PiecewiseConvexFn::indicator(10.0, 12.0).unwrap();
        assert_eq!(g.points(&far), vec![10.0]);
    }

    #[test]
    fn product_grid_visits_every_point() {
        let grids = vec![vec![0.0, 1.0], vec![5.0, 6.0, 7.0]];
        let mut seen = Vec::new();
        for_each_point(&grids, |p| seen.push(p.to_vec()));
        assert_eq!(seen.len(), 6);
        assert_eq!(seen[1], vec![0.0, 6.0]);
        assert_eq!(seen[5], vec![1.0, 7.0]);
    }
}
