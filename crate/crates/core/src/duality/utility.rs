//! Robust utility maximization over a cone and its dual
//! `sup_{ξ∈C} u(ξ) = min_{η∈C°} (H_{V,γ}(Dη) + E[DBη])` with
//! `u(ξ) = inf_Q (E_Q[U(ξ/D + B)] + γ(Q))` and `V(y) = sup_x (U(x) − xy)`.

use serde::{Deserialize, Serialize};

use super::fenchel::{minimize_dual, minimize_over_cone, ConeSpec, DualityReport, DualityStatus, SolverConfig};
use crate::convex1d::{Extension, PiecewiseConvexFn};
use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::functional::{I_f_gamma, Integrand};
use crate::penalty::Penalty;
use crate::space::FiniteSpace;

/// A utility `U` stored through its convex mirror `Ũ(x) = −U(−x)`, a
/// discount `D > 0` and a claim `B`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UtilitySpec {
    pub mirrored_utility: PiecewiseConvexFn,
    pub discount: Vec<f64>,
    pub claim: Vec<f64>,
}

impl UtilitySpec {
    pub fn new(
        space: &FiniteSpace,
        mirrored_utility: PiecewiseConvexFn,
        discount: Vec<f64>,
        claim: Vec<f64>,
    ) -> Result<Self> {
        let u = UtilitySpec { mirrored_utility, discount, claim };
        u.validate(space)?;
        Ok(u)
    }

    pub fn validate(&self, space: &FiniteSpace) -> Result<()> {
        space.check_len(self.discount.len())?;
        space.check_len(self.claim.len())?;
        if self.discount.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(Error::Precondition("discount must be finite and strictly positive".into()));
        }
        if self.claim.iter().any(|b| !b.is_finite()) {
            return Err(Error::Precondition("claim must be finite".into()));
        }
        if !self.mirrored_utility.is_finite_everywhere() {
            return Err(Error::Precondition("utility must be finite on the real line".into()));
        }
        if self.mirrored_utility.recession_slopes().0.value() < 0.0 {
            return Err(Error::Precondition("utility must be nondecreasing".into()));
        }
        Ok(())
    }

    /// Exponential utility `U(x) = −e^{−x}`, interpolated on `knots` equally
    /// spaced points of `[−half_width, half_width]` and continued with slope
    /// `0` on the left and `e^{half_width}` on the right.
    pub fn exponential(
        space: &FiniteSpace,
        discount: Vec<f64>,
        claim: Vec<f64>,
        half_width: f64,
        knots: usize,
    ) -> Result<Self> {
        let pts = PiecewiseConvexFn::uniform_knots(-half_width, half_width, knots);
        let mirrored = PiecewiseConvexFn::sample(
            f64::exp,
            &pts,
            Extension::Slopes { left: 0.0, right: half_width.exp() },
        )?;
        Self::new(space, mirrored, discount, claim)
    }

    /// `U(x) = −Ũ(−x)`.
    pub fn utility(&self, x: f64) -> f64 {
        -self.mirrored_utility.eval_f64(-x)
    }

    /// `V = Ũ*`.
    pub fn conjugate_utility(&self) -> Result<PiecewiseConvexFn> {
        self.mirrored_utility.legendre()
    }

    /// The integrand `f_{D,B}(·, x) = Ũ(x/D − B)`.
    pub fn integrand(&self, space: &FiniteSpace) -> Result<Integrand> {
        let sections = self
            .discount
            .iter()
            .zip(&self.claim)
            .map(|(d, b)| self.mirrored_utility.shift_argument(-b)?.scale_argument(1.0 / d))
            .collect::<Result<Vec<_>>>()?;
        Integrand::new(space, sections)
    }

    /// `u(ξ) = −I_{f_{D,B},γ}(−ξ)`.
    pub fn robust_utility(&self, space: &FiniteSpace, p: &Penalty, xi: &[f64]) -> Result<f64> {
        let f = self.integrand(space)?;
        let neg: Vec<f64> = xi.iter().map(|v| -v).collect();
        Ok(-I_f_gamma(&f, space, p, &neg)?.value())
    }
}

/// Relative width of the warning band at the ends of `dom V`.
pub const NEAR_BOUNDARY: f64 = 1e-8;

/// First atom where `D_i η_i / ψ_i` lies within [`NEAR_BOUNDARY`] of a
/// finite end of `dom V`.
fn near_domain_edge(v: &PiecewiseConvexFn, discount: &[f64], eta: &[f64], psi: &[f64]) -> Option<usize> {
    let (lo, hi) = v.domain();
    (0..eta.len()).find(|&i| {
        if psi[i] <= 0.0 {
            return false;
        }
        let y = discount[i] * eta[i] / psi[i];
        [lo, hi].iter().any(|e| e.is_finite() && (y - e).abs() <= NEAR_BOUNDARY * e.abs().max(1.0))
    })
}

/// Solves the robust utility problem and its dual independently. When no
/// point of the polar cone has finite dual value both sides are `+∞`; this is
/// reported, not raised.
pub fn robust_utility_solve(
    u: &UtilitySpec,
    space: &FiniteSpace,
    p: &Penalty,
    cone: &ConeSpec,
    cfg: SolverConfig,
) -> Result<DualityReport> {
    u.validate(space)?;
    let f = u.integrand(space)?;
    let v = u.conjugate_utility()?;
    let sections = vec![v.clone(); space.len()];
    let polar = cone.polar(space)?;
    let linear: Vec<f64> = space
        .weights()
        .iter()
        .zip(&u.discount)
        .zip(&u.claim)
        .map(|((w, d), b)| w * d * b)
        .collect();
    let mut notes = Vec::new();
    let dual = minimize_dual(space, &sections, p, &polar, 1.0, u.discount.clone(), linear, cfg)?;
    let Some(dual) = dual else {
        notes.push("no point of the polar cone has finite dual value; both sides are +inf".into());
        return Ok(DualityReport {
            status: DualityStatus::BothInfinite,
            primal_value: ExtReal::INFINITY,
            dual_value: ExtReal::INFINITY,
            gap: 0.0,
            primal_point: None,
            dual_point: None,
            measure: None,
            polar_violation: 0.0,
            weak_duality_min_slack: 0.0,
            primal_lower_bound: f64::INFINITY,
            dual_lower_bound: f64::INFINITY,
            primal_iterations: 0,
            dual_iterations: 0,
            converged: true,
            notes,
        });
    };
    let neg_gens: Vec<Vec<f64>> =
        cone.generators(space)?.iter().map(|g| g.iter().map(|v| -v).collect()).collect();
    let primal = minimize_over_cone(&f, space, p, &neg_gens, cfg)?;
    if primal.at_boundary {
        notes.push("primal maximizer not bracketed: the supremum may be unattained".into());
    }
    if let Some(i) = near_domain_edge(&v, &u.discount, &dual.eta, dual.q.values()) {
        notes.push(format!(
            "dual point is within {NEAR_BOUNDARY:e} of the boundary of the domain of V at atom {i}; \
             membership in the dual cone domain is tolerance-based there"
        ));
    }
    let sup_u = -primal.value;
    Ok(DualityReport {
        status: DualityStatus::Solved,
        primal_value: ExtReal::from_f64(sup_u),
        dual_value: ExtReal::from_f64(dual.value),
        gap: dual.value - sup_u,
        primal_point: Some(primal.xi.iter().map(|v| -v).collect()),
        polar_violation: cone.polar_violation(space, &dual.eta)?,
        dual_point: Some(dual.eta),
        measure: Some(dual.q.into_values()),
        weak_duality_min_slack: dual.min_iterate + primal.min_iterate,
        primal_lower_bound: -primal.value,
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

    #[test]
    fn zero_cone_classical_value_is_utility_at_zero() {
        let s = FiniteSpace::new(vec![0.4, 0.6]).unwrap();
        let u = UtilitySpec::exponential(&s, vec![1.0, 1.0], vec![0.0, 0.0], 10.0, 801).unwrap();
        let r = robust_utility_solve(&u, &s, &Penalty::reference(&s), &ConeSpec::zero(), SolverConfig::default())
            .unwrap();
        assert!((r.primal_value.value() - u.utility(0.0)).abs() < 1e-12);
        assert!(r.gap.abs() < 1e-7, "gap {}", r.gap);
    }

    #[test]
    fn sampled_exponential_utility_error() {
        let s = FiniteSpace::new(vec![0.5, 0.5]).unwrap();
        let u = UtilitySpec::exponential(&s, vec![1.0, 1.0], vec![0.0, 0.0], 10.0, 801).unwrap();
        let worst = (0..=4000)
            .map(|k| -10.0 + k as f64 * 0.005)
            .map(|x| (u.utility(x) + (-x).exp()).abs() / (-x).exp())
            .fold(0.0, f64::max);
        // chord error of eˣ at spacing 0.025 is 0.025²/8 relative
        assert!(worst <= 0.025f64.powi(2) / 8.0 * 1.01, "{worst}");
    }

    #[test]
    fn shifted_and_discounted_integrand() {
        let s = FiniteSpace::new(vec![0.5, 0.5]).unwrap();
        let u = UtilitySpec::new(
            &s,
            PiecewiseConvexFn::quadratic(0.5, 1.0, 0.0).unwrap(),
            vec![2.0, 0.5],
            vec![1.0, -1.0],
        );
        // x²/2 + x is not nondecreasing
        assert!(u.is_err());
        let mirrored = PiecewiseConvexFn::sample(f64::exp, &[-2.0, 0.0, 2.0], Extension::Slopes { left: 0.0, right: 8.0 })
            .unwrap();
        let u = UtilitySpec::new(&s, mirrored.clone(), vec![2.0, 0.5], vec![1.0, -1.0]).unwrap();
        let f = u.integrand(&s).unwrap();
        for x in [-3.0, 0.0, 0.7] {
            assert!((f.sections()[0].eval_f64(x) - mirrored.eval_f64(x / 2.0 - 1.0)).abs() < 1e-12);
            assert!((f.sections()[1].eval_f64(x) - mirrored.eval_f64(x / 0.5 + 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn entropic_exponential_utility_closes_gap() {
        let s = FiniteSpace::new(vec![0.3, 0.3, 0.4]).unwrap();
        let u = UtilitySpec::exponential(&s, vec![1.0, 1.2, 0.8], vec![0.2, -0.1, 0.0], 10.0, 801).unwrap();
        let cone = ConeSpec::Generators(vec![vec![1.0, -1.0, 0.5]]);
        let r = robust_utility_solve(&u, &s, &Penalty::Entropic, &cone, SolverConfig::default()).unwrap();
        assert_eq!(r.status, DualityStatus::Solved);
        assert!(r.gap.abs() < 1e-6, "gap {}", r.gap);
    }

    #[test]
    fn infeasible_dual_reports_both_infinite() {
        // U grows at least linearly, so V has domain [1, …] and every dual
        // point needs η ≥ ψ > 0, which the polar {E[η] ≤ 0} of ℝ₊·1 excludes
        let s = FiniteSpace::new(vec![0.5, 0.5]).unwrap();
        let knots = PiecewiseConvexFn::uniform_knots(-5.0, 5.0, 101);
        let mirrored =
            PiecewiseConvexFn::sample(|x| x + x.exp(), &knots, Extension::Slopes { left: 1.0, right: 1.0 + 5f64.exp() })
                .unwrap();
        let u = UtilitySpec::new(&s, mirrored, vec![1.0, 1.0], vec![0.0, 0.0]).unwrap();
        let cone = ConeSpec::Generators(vec![vec![1.0, 1.0]]);
        let r = robust_utility_solve(&u, &s, &Penalty::reference(&s), &cone, SolverConfig::default()).unwrap();
        assert_eq!(r.status, DualityStatus::BothInfinite);
    }

    #[test]
    fn boundary_band_flags_domain_ends() {
        let v = PiecewiseConvexFn::indicator(0.0, 2.0).unwrap();
        assert_eq!(near_domain_edge(&v, &[1.0, 1.0], &[1.0, 2.0], &[1.0, 1.0]), Some(1));
        assert_eq!(near_domain_edge(&v, &[1.0, 1.0], &[1.0, 1.5], &[1.0, 1.0]), None);
        assert_eq!(near_domain_edge(&v, &[1.0, 1.0], &[1e-12, 1.0], &[1.0, 1.0]), Some(0));
    }
}
