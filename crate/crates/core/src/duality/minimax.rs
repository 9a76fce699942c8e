//! Both iterated optima of `L(Q, ξ) = E[νξ] − E_Q[f(·, ξ)] − γ(Q)` with `ξ`
//! ranging over a product grid.

use serde::Serialize;

use super::conjugate::grid_conjugate;
use super::GridSpec;
use crate::convex1d::{Extension, PiecewiseConvexFn};
use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::functional::{robust_divergence, DivergenceConfig, Integrand};
use crate::penalty::Penalty;
use crate::space::FiniteSpace;

#[derive(Clone, Debug, Serialize)]
pub struct MinimaxLevel {
    pub level: usize,
    pub inf_sup: ExtReal,
    pub sup_inf: ExtReal,
    /// `inf_sup − sup_inf`; `0` when both are `+∞`.
    pub gap: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MinimaxReport {
    pub levels: Vec<MinimaxLevel>,
    /// Gap at the finest level.
    pub gap: f64,
    /// Every gap is at least `−1e-12`.
    pub nonnegative: bool,
    /// The finest gap does not exceed the coarsest one.
    pub decaying: bool,
}

/// The inner supremum over grid points of an atom is the conjugate of the
/// piecewise-linear interpolant of `f` through them.
fn grid_section_conjugate(f: &PiecewiseConvexFn, points: &[f64]) -> Result<PiecewiseConvexFn> {
    let samples: Vec<(f64, f64)> =
        points.iter().map(|x| (*x, f.eval_f64(*x))).filter(|(_, y)| y.is_finite()).collect();
    PiecewiseConvexFn::from_samples(&samples, Extension::Restrict)?.legendre()
}

/// Computes `inf_Q sup_ξ L` and `sup_ξ inf_Q L` at levels `1..=grid.level`.
/// The first is the robust divergence of the grid-restricted conjugates at
/// `ν`, the second the brute-force grid conjugate of `I_{f,γ}`.
pub fn minimax_check(
    f: &Integrand,
    space: &FiniteSpace,
    p: &Penalty,
    nu: &[f64],
    grid: GridSpec,
) -> Result<MinimaxReport> {
    space.check_len(nu.len())?;
    if grid.level == 0 {
        return Err(Error::Precondition("grid level must be at least 1".into()));
    }
    let mut levels = Vec::with_capacity(grid.level);
    for level in 1..=grid.level {
        let g = grid.at_level(level);
        let conjugates = f
            .sections()
            .iter()
            .map(|s| grid_section_conjugate(s, &g.points(s)))
            .collect::<Result<Vec<_>>>()?;
        let inf_sup = robust_divergence(space, &conjugates, p, nu, DivergenceConfig::default())?.value;
        let (sup_inf, _) = grid_conjugate(f, space, p, nu, g)?;
        let gap = if inf_sup.is_pos_inf() && sup_inf.is_pos_inf() {
            0.0
        } else {
            inf_sup.value() - sup_inf.value()
        };
        levels.push(MinimaxLevel { level, inf_sup, sup_inf, gap });
    }
    let gap = levels.last().unwrap().gap;
    let nonnegative = levels.iter().all(|l| l.gap >= -1e-12);
    let decaying = gap <= levels[0].gap + 1e-9;
    Ok(MinimaxReport { levels, gap, nonnegative, decaying })
}
