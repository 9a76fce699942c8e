//! Fenchel duality over a finitely generated cone `C`:
//! `inf_{ξ∈C} I_{f,γ}(ξ) = −min_{η∈C°} H_{f*,γ}(−η)`.
//!
//! The polar of a cone is its dual cone `{η : E[ξη] ≤ 0 ∀ξ ∈ C}`; the
//! one-sided normalization `E[ξη] ≤ 1` describes the same set because `C` is
//! closed under positive scaling.

use serde::{Deserialize, Serialize};

use super::charged_atoms;
use crate::convex1d::PiecewiseConvexFn;
use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::functional::joint::{JointConfig, JointProblem, MeasureParam};
use crate::functional::{subgradient_of_robust, Integrand};
use crate::penalty::Penalty;
use crate::solver::cone::{polyhedral_cone_vrep, ConeVRep};
use crate::solver::ellipsoid::{self, EllipsoidConfig, Oracle};
use crate::space::{Density, FiniteSpace};

/// A polyhedral convex cone in `L^∞`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConeSpec {
    /// `{Σ t_j g_j : t ≥ 0}`; an empty list is `{0}`.
    Generators(Vec<Vec<f64>>),
    /// `{ξ : a_j · ξ ≤ 0 for all j}` with the plain dot product.
    Halfspaces(Vec<Vec<f64>>),
}

impl ConeSpec {
    pub fn zero() -> ConeSpec {
        ConeSpec::Generators(vec![])
    }

    /// The whole space `L^∞`.
    pub fn whole(m: usize) -> ConeSpec {
        ConeSpec::Halfspaces(vec![vec![0.0; m]])
    }

    fn check(&self, space: &FiniteSpace) -> Result<()> {
        let rows = match self {
            ConeSpec::Generators(g) | ConeSpec::Halfspaces(g) => g,
        };
        for r in rows {
            space.check_len(r.len())?;
            if r.iter().any(|v| !v.is_finite()) {
                return Err(Error::Precondition("cone data must be finite".into()));
            }
        }
        Ok(())
    }

    /// A finite generating set (lines contribute both directions).
    pub fn generators(&self, space: &FiniteSpace) -> Result<Vec<Vec<f64>>> {
        self.check(space)?;
        match self {
            ConeSpec::Generators(g) => Ok(g.clone()),
            ConeSpec::Halfspaces(rows) => {
                let rows: Vec<Vec<f64>> = rows.iter().filter(|r| r.iter().any(|v| *v != 0.0)).cloned().collect();
                let rep = polyhedral_cone_vrep(&rows, space.len());
                let mut gens = rep.rays;
                for l in rep.lineality {
                    gens.push(l.iter().map(|v| -v).collect());
                    gens.push(l);
                }
                Ok(gens)
            }
        }
    }

    /// Generator description of the polar cone `{η : E[gη] ≤ 0}`.
    pub fn polar(&self, space: &FiniteSpace) -> Result<ConeVRep> {
        let gens = self.generators(space)?;
        let rows: Vec<Vec<f64>> = gens
            .iter()
            .filter(|g| g.iter().any(|v| *v != 0.0))
            .map(|g| g.iter().zip(space.weights()).map(|(a, w)| a * w).collect())
            .collect();
        Ok(polyhedral_cone_vrep(&rows, space.len()))
    }

    /// `max_j E[g_j η]⁺`, zero exactly on the polar cone.
    pub fn polar_violation(&self, space: &FiniteSpace, eta: &[f64]) -> Result<f64> {
        let gens = self.generators(space)?;
        Ok(gens.iter().map(|g| space.pairing(g, eta).max(0.0)).fold(0.0, f64::max))
    }
}

/// Ellipsoid settings shared by the primal and dual cone solvers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    /// Initial search radius for cone coordinates; grown by 8× while the
    /// solution sits near the boundary.
    pub radius: f64,
    pub max_restarts: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { tol: 1e-9, max_iter: 40_000, radius: 4.0, max_restarts: 6 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DualityStatus {
    Solved,
    /// The dual is infeasible, so the primal infimum is `−∞`.
    PrimalUnbounded,
    /// Utility problems: no finite dual point, both sides are `+∞`.
    BothInfinite,
}

/// Both sides of a duality statement with solver diagnostics.
#[derive(Clone, Debug, Serialize)]
pub struct DualityReport {
    pub status: DualityStatus,
    pub primal_value: ExtReal,
    /// The right-hand side of the duality equation.
    pub dual_value: ExtReal,
    /// Upper side minus lower side; nonnegative by weak duality.
    pub gap: f64,
    pub primal_point: Option<Vec<f64>>,
    /// Minimizer `η̂` of the dual problem.
    pub dual_point: Option<Vec<f64>>,
    /// Density of the measure attaining the dual objective.
    pub measure: Option<Vec<f64>>,
    /// `max_j E[g_j η̂]⁺`.
    pub polar_violation: f64,
    /// Weak-duality slack of the worst primal/dual iterate pair.
    pub weak_duality_min_slack: f64,
    pub primal_lower_bound: f64,
    pub dual_lower_bound: f64,
    pub primal_iterations: usize,
    pub dual_iterations: usize,
    pub converged: bool,
    pub notes: Vec<String>,
}

pub(crate) struct PrimalRun {
    pub value: f64,
    pub lower_bound: f64,
    pub xi: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub min_iterate: f64,
    pub at_boundary: bool,
}

/// `min_{t ≥ 0} I_{f,γ}(Σ t_j g_j)` by the ellipsoid method with growing
/// search balls.
pub(crate) fn minimize_over_cone(
    f: &Integrand,
    space: &FiniteSpace,
    p: &Penalty,
    gens: &[Vec<f64>],
    cfg: SolverConfig,
) -> Result<PrimalRun> {
    let k = gens.len();
    let m = space.len();
    let charged = charged_atoms(space, p);
    let combine = |t: &[f64]| -> Vec<f64> {
        let mut xi = vec![0.0; m];
        for (tj, g) in t.iter().zip(gens) {
            for i in 0..m {
                xi[i] += tj * g[i];
            }
        }
        xi
    };
    let oracle = |t: &[f64]| -> Oracle {
        let unit = |j: usize, s: f64| {
            let mut c = vec![0.0; k];
            c[j] = s;
            c
        };
        if let Some(j) = (0..k).find(|&j| t[j] < 0.0) {
            return Oracle::Infeasible { cut: unit(j, -1.0) };
        }
        let xi = combine(t);
        if let Some(i) = (0..m).find(|&i| charged[i] && !f.sections()[i].in_domain(xi[i])) {
            let (lo, _) = f.sections()[i].domain();
            let sign = if xi[i] < lo { -1.0 } else { 1.0 };
            return Oracle::Infeasible { cut: gens.iter().map(|g| sign * g[i]).collect() };
        }
        match subgradient_of_robust(f, space, p, &xi) {
            Ok((v, _, Some(eta))) if v.is_finite() => Oracle::Feasible {
                value: v.value(),
                subgradient: gens.iter().map(|g| space.pairing(g, &eta)).collect(),
            },
            _ => Oracle::Infeasible { cut: vec![0.0; k] },
        }
    };
    if k == 0 {
        let (v, _, _) = subgradient_of_robust(f, space, p, &vec![0.0; m])?;
        return Ok(PrimalRun {
            value: v.value(),
            lower_bound: v.value(),
            xi: vec![0.0; m],
            iterations: 1,
            converged: true,
            min_iterate: v.value(),
            at_boundary: false,
        });
    }
    let mut radius = cfg.radius;
    let mut best: Option<PrimalRun> = None;
    let mut min_iterate = f64::INFINITY;
    let mut iterations = 0;
    for _ in 0..=cfg.max_restarts {
        let res = ellipsoid::minimize(
            vec![0.0; k],
            radius,
            oracle,
            EllipsoidConfig { max_iter: cfg.max_iter, tol: cfg.tol },
        );
        iterations += res.iterations;
        min_iterate = res.feasible_values.iter().cloned().fold(min_iterate, f64::min);
        let Some(t) = res.x else {
            radius *= 8.0;
            continue;
        };
        let norm = t.iter().map(|v| v * v).sum::<f64>().sqrt();
        let at_boundary = norm > 0.5 * radius;
        let run = PrimalRun {
            value: res.value,
            lower_bound: res.lower_bound,
            xi: combine(&t),
            iterations,
            converged: res.converged,
            min_iterate,
            at_boundary,
        };
        if best.as_ref().is_none_or(|b| run.value <= b.value) {
            best = Some(run);
        }
        if !at_boundary {
            break;
        }
        radius *= 8.0;
    }
    let mut run = best.ok_or_else(|| Error::NonConvergence("no point of the cone has finite value".into()))?;
    run.iterations = iterations;
    run.min_iterate = min_iterate;
    Ok(run)
}

pub(crate) struct DualRun {
    pub value: f64,
    pub lower_bound: f64,
    /// The optimal point in the original (unsigned) cone coordinates.
    pub eta: Vec<f64>,
    pub q: Density,
    pub iterations: usize,
    pub converged: bool,
    pub min_iterate: f64,
}

/// `min Σ_i w_i g̃_i(A_i ζ_i, ψ_i) + Σ_i c_i ζ_i + γ(Q)` jointly over
/// `ζ = sign · η`, `η` in the polar cone, and the penalty's measures.
/// `None` when the linear relaxation of the domain is infeasible.
pub(crate) fn minimize_dual(
    space: &FiniteSpace,
    sections: &[PiecewiseConvexFn],
    p: &Penalty,
    polar: &ConeVRep,
    sign: f64,
    scale: Vec<f64>,
    linear: Vec<f64>,
    cfg: SolverConfig,
) -> Result<Option<DualRun>> {
    let m = space.len();
    let measure = MeasureParam::for_penalty(space, p, &vec![false; m])?;
    let mut dirs: Vec<Vec<f64>> = polar.rays.iter().map(|r| r.iter().map(|v| sign * v).collect()).collect();
    dirs.extend(polar.lineality.iter().cloned());
    let problem = JointProblem {
        space,
        sections,
        penalty: p,
        measure,
        scale,
        eta0: vec![0.0; m],
        eta_dirs: dirs,
        rays: polar.rays.len(),
        linear,
        mu_center: None,
    };
    if !problem.domain_is_feasible() {
        return Ok(None);
    }
    let sol = problem.solve(JointConfig {
        tol: cfg.tol,
        max_iter: cfg.max_iter,
        radius: cfg.radius,
        max_restarts: cfg.max_restarts,
    });
    if !sol.value.is_finite() {
        return Err(Error::NonConvergence("dual solver found no point of finite value".into()));
    }
    let probs: Vec<f64> = sol.psi.iter().zip(space.weights()).map(|(a, w)| (a * w).max(0.0)).collect();
    let q = Density::from_probabilities(space, &probs)?;
    let at_q = problem.value_at_point(&sol.eta, q.values())?;
    let value = if at_q.is_finite() { at_q } else { sol.value };
    let min_iterate = sol.iterate_values.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(Some(DualRun {
        value,
        lower_bound: sol.lower_bound,
        eta: sol.eta.iter().map(|v| sign * v).collect(),
        q,
        iterations: sol.iterations,
        converged: sol.converged,
        min_iterate: min_iterate.min(value),
    }))
}

/// Solves `inf_{ξ∈C} I_{f,γ}(ξ)` and `−min_{η∈C°} H_{f*,γ}(−η)`
/// independently and reports the gap.
pub fn fenchel_solve(
    f: &Integrand,
    space: &FiniteSpace,
    p: &Penalty,
    cone: &ConeSpec,
    cfg: SolverConfig,
) -> Result<DualityReport> {
    space.check_len(f.len())?;
    let gens = cone.generators(space)?;
    let polar = cone.polar(space)?;
    let mut notes = Vec::new();
    let dual = minimize_dual(space, f.conjugates(), p, &polar, -1.0, vec![1.0; space.len()], vec![0.0; space.len()], cfg)?;
    let Some(dual) = dual else {
        notes.push("the polar cone misses the domain of the divergence; the primal is unbounded below".into());
        return Ok(DualityReport {
            status: DualityStatus::PrimalUnbounded,
            primal_value: ExtReal::NEG_INFINITY,
            dual_value: ExtReal::NEG_INFINITY,
            gap: 0.0,
            primal_point: None,
            dual_point: None,
            measure: None,
            polar_violation: 0.0,
            weak_duality_min_slack: 0.0,
            primal_lower_bound: f64::NEG_INFINITY,
            dual_lower_bound: f64::INFINITY,
            primal_iterations: 0,
            dual_iterations: 0,
            converged: true,
            notes,
        });
    };
    let primal = minimize_over_cone(f, space, p, &gens, cfg)?;
    if primal.at_boundary {
        notes.push("primal minimizer not bracketed: the infimum may be unattained".into());
    }
    let gap = primal.value + dual.value;
    Ok(DualityReport {
        status: DualityStatus::Solved,
        primal_value: ExtReal::from_f64(primal.value),
        dual_value: ExtReal::from_f64(-dual.value),
        gap,
        primal_point: Some(primal.xi),
        polar_violation: cone.polar_violation(space, &dual.eta)?,
        dual_point: Some(dual.eta),
        measure: Some(dual.q.into_values()),
        weak_duality_min_slack: primal.min_iterate + dual.min_iterate,
        primal_lower_bound: primal.lower_bound,
        dual_lower_bound: dual.lower_bound,
        primal_iterations: primal.iterations,
        dual_iterations: dual.iterations,
        converged: primal.converged && dual.converged,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::{H_fstar_gamma, I_f_gamma};

    fn instance() -> (FiniteSpace, Integrand) {
        let s = FiniteSpace::new(vec![0.2, 0.3, 0.5]).unwrap();
        let f = Integrand::new(
            &s,
            vec![
                PiecewiseConvexFn::quadratic(0.5, -1.0, 0.0).unwrap(),
                PiecewiseConvexFn::quadratic(1.0, 0.5, 0.2).unwrap(),
                PiecewiseConvexFn::kinked(-1.0, 2.0, 0.5).unwrap(),
            ],
        )
        .unwrap();
        (s, f)
    }

    #[test]
    fn zero_cone_gives_value_at_zero() {
        let (s, f) = instance();
        for p in [Penalty::reference(&s), Penalty::Entropic] {
            let r = fenchel_solve(&f, &s, &p, &ConeSpec::zero(), SolverConfig::default()).unwrap();
            let i0 = I_f_gamma(&f, &s, &p, &[0.0; 3]).unwrap().value();
            assert_eq!(r.primal_value.value(), i0);
            assert!(r.gap.abs() < 1e-7, "{} {}", p.kind_name(), r.gap);
        }
    }

    #[test]
    fn whole_space_gives_minus_divergence_at_zero() {
        let (s, f) = instance();
        let p = Penalty::Entropic;
        let r = fenchel_solve(&f, &s, &p, &ConeSpec::whole(3), SolverConfig::default()).unwrap();
        let (h0, _) = H_fstar_gamma(&f, &s, &p, &[0.0; 3]).unwrap();
        assert!((r.dual_value.value() + h0.value()).abs() < 1e-8);
        assert!(r.gap.abs() < 1e-6 && r.gap > -1e-9, "{}", r.gap);
    }

    #[test]
    fn two_generator_cone_closes_gap() {
        let (s, f) = instance();
        let cone = ConeSpec::Generators(vec![vec![1.0, -1.0, 0.5], vec![0.0, 1.0, -2.0]]);
        for p in [
            Penalty::reference(&s),
            Penalty::Entropic,
            Penalty::polyhedral(
                &s,
                vec![Density::reference(&s), Density::from_probabilities(&s, &[0.5, 0.2, 0.3]).unwrap()],
            )
            .unwrap(),
        ] {
            let r = fenchel_solve(&f, &s, &p, &cone, SolverConfig::default()).unwrap();
            assert_eq!(r.status, DualityStatus::Solved);
            assert!(r.gap < 1e-6 && r.gap > -1e-9, "{}: gap {}", p.kind_name(), r.gap);
            assert!(r.weak_duality_min_slack > -1e-9);
            assert!(r.polar_violation < 1e-9);
        }
    }

    #[test]
    fn unbounded_primal_is_certified() {
        // f(x) = x on every atom and C = ℝ₊·1: I(t·1) = t·c + ... → −∞ along −1
        let s = FiniteSpace::uniform(2).unwrap();
        let f = Integrand::uniform(&s, PiecewiseConvexFn::affine(1.0, 0.0).unwrap()).unwrap();
        let cone = ConeSpec::Generators(vec![vec![-1.0, -1.0]]);
        let r = fenchel_solve(&f, &s, &Penalty::reference(&s), &cone, SolverConfig::default()).unwrap();
        assert_eq!(r.status, DualityStatus::PrimalUnbounded);
        assert!(r.primal_value.is_neg_inf());
    }

    #[test]
    fn halfspace_cone_matches_generators() {
        let s = FiniteSpace::uniform(2).unwrap();
        let c = ConeSpec::Halfspaces(vec![vec![1.0, 0.0]]);
        let gens = c.generators(&s).unwrap();
        // {ξ₁ ≤ 0}: ray −e₁ and the line through e₂
        assert_eq!(gens.len(), 3);
        let polar = c.polar(&s).unwrap();
        assert_eq!(polar.rays.len(), 1);
        assert!(polar.lineality.is_empty());
        assert!(polar.rays[0][0] > 0.0 && polar.rays[0][1].abs() < 1e-12);
    }
}
