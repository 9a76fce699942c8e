//! The robust integral functional `I_{f,γ}(ξ) = ρ_γ(f(·, ξ))`, the
//! divergence `H_{f*}(η | Q) = E[f̃*(·, η, dQ/dP)]` and the robust divergence
//! `H_{f*,γ}(η) = inf_Q (H_{f*}(η | Q) + γ(Q))`.

pub mod joint;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::convex1d::{perspective, perspective_z_domain, PiecewiseConvexFn};
use crate::error::{Error, Result};
use crate::ext::{checked_sum, ExtReal};
use crate::penalty::Penalty;
use crate::solver::scalar::golden_section_min;
use crate::space::{Density, FiniteSpace};

use joint::{AffineHull, JointConfig, JointProblem, MeasureParam};

/// One convex section per atom, with cached conjugates.
#[derive(Clone, Debug, PartialEq)]
pub struct Integrand {
    sections: Vec<PiecewiseConvexFn>,
    conjugates: Vec<PiecewiseConvexFn>,
}

impl Integrand {
    pub fn new(space: &FiniteSpace, sections: Vec<PiecewiseConvexFn>) -> Result<Self> {
        space.check_len(sections.len())?;
        let conjugates = sections.iter().map(|f| f.legendre()).collect::<Result<Vec<_>>>()?;
        Ok(Integrand { sections, conjugates })
    }

    /// The same section on every atom.
    pub fn uniform(space: &FiniteSpace, f: PiecewiseConvexFn) -> Result<Self> {
        Self::new(space, vec![f; space.len()])
    }

    pub fn sections(&self) -> &[PiecewiseConvexFn] {
        &self.sections
    }

    pub fn conjugates(&self) -> &[PiecewiseConvexFn] {
        &self.conjugates
    }

    pub fn len(&self) -> usize {
        self.sections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sections.is_empty()
    }

    /// The integrand `f*` with conjugate `f**` = `f`.
    pub fn conjugate_integrand(&self) -> Integrand {
        Integrand { sections: self.conjugates.clone(), conjugates: self.sections.clone() }
    }

    /// `ω ↦ f(ω, x(ω))`, `+∞` where `x` leaves the domain.
    pub fn image(&self, x: &[f64]) -> Vec<f64> {
        self.sections.iter().zip(x).map(|(f, v)| f.eval_f64(*v)).collect()
    }
}

/// `I_{f,γ}(x)`.
#[allow(non_snake_case)]
pub fn I_f_gamma(f: &Integrand, space: &FiniteSpace, p: &Penalty, x: &[f64]) -> Result<ExtReal> {
    Ok(robust_value_with_maximizer(f, space, p, x)?.0)
}

/// `I_{f,γ}(x)` and a measure attaining the supremum.
pub fn robust_value_with_maximizer(
    f: &Integrand,
    space: &FiniteSpace,
    p: &Penalty,
    x: &[f64],
) -> Result<(ExtReal, Density)> {
    space.check_len(x.len())?;
    f.len().eq(&space.len()).then_some(()).ok_or(Error::SpaceMismatch { expected: space.len(), got: f.len() })?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Precondition("random variable must be finite".into()));
    }
    let image = f.image(x);
    let (value, q) = p.rho_with_maximizer(space, &image)?;
    if value.is_neg_inf() {
        return Err(Error::IllPosed("robust functional equals -inf".into()));
    }
    Ok((value, q))
}

/// A subgradient of `I_{f,γ}` at `x` in `L¹`: `ψ̂ · f′(·, x)` for a
/// maximizing measure `Q̂`. `None` when `I_{f,γ}(x) = +∞`.
pub fn subgradient_of_robust(
    f: &Integrand,
    space: &FiniteSpace,
    p: &Penalty,
    x: &[f64],
) -> Result<(ExtReal, Density, Option<Vec<f64>>)> {
    let (value, q) = robust_value_with_maximizer(f, space, p, x)?;
    if !value.is_finite() {
        return Ok((value, q, None));
    }
    let eta = f
        .sections()
        .iter()
        .zip(x)
        .zip(q.values())
        .map(|((sec, xi), psi)| if *psi == 0.0 { 0.0 } else { psi * sec.subgradient(*xi).unwrap_or(0.0) })
        .collect();
    Ok((value, q, Some(eta)))
}

/// `H_{f*}(η | Q) = Σ_i w_i f̃*_i(η_i, ψ_i)`.
#[allow(non_snake_case)]
pub fn H_fstar(f: &Integrand, space: &FiniteSpace, eta: &[f64], q: &Density) -> Result<ExtReal> {
    space.check_len(eta.len())?;
    space.check_len(q.values().len())?;
    let terms = f
        .conjugates()
        .iter()
        .zip(space.weights())
        .zip(eta.iter().zip(q.values()))
        .map(|((g, w), (y, z))| perspective(g, *y, *z).scale_nonneg(*w));
    checked_sum(terms)
}

/// Solver settings for the robust divergence.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DivergenceConfig {
    /// Target certified gap.
    pub tol: f64,
    pub max_iter: usize,
    /// Randomizes the starting point; `None` starts at the center.
    pub seed: Option<u64>,
}

impl Default for DivergenceConfig {
    fn default() -> Self {
        DivergenceConfig { tol: 1e-10, max_iter: 40_000, seed: None }
    }
}

/// Value, attaining measure and certificate of a robust divergence solve.
#[derive(Clone, Debug)]
pub struct DivergenceSolution {
    pub value: ExtReal,
    pub q: Density,
    /// Certified lower bound on the infimum.
    pub lower_bound: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl DivergenceSolution {
    pub fn gap(&self) -> f64 {
        if self.value.is_pos_inf() {
            0.0
        } else {
            self.value.value() - self.lower_bound
        }
    }
}

/// `H_{f*,γ}(η)` with an attaining measure.
#[allow(non_snake_case)]
pub fn H_fstar_gamma(f: &Integrand, space: &FiniteSpace, p: &Penalty, eta: &[f64]) -> Result<(ExtReal, Density)> {
    let sol = robust_divergence(space, f.conjugates(), p, eta, DivergenceConfig::default())?;
    Ok((sol.value, sol.q))
}

/// `inf_Q Σ_i w_i g̃_i(y_i, ψ_i) + γ(Q)` for conjugate-side sections `g`.
pub fn robust_divergence(
    space: &FiniteSpace,
    conjugates: &[PiecewiseConvexFn],
    p: &Penalty,
    y: &[f64],
    cfg: DivergenceConfig,
) -> Result<DivergenceSolution> {
    space.check_len(y.len())?;
    space.check_len(conjugates.len())?;
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Precondition("divergence argument must be finite".into()));
    }
    match p {
        Penalty::Dirac(p0) => {
            let terms = conjugates
                .iter()
                .zip(space.weights())
                .zip(y.iter().zip(p0.values()))
                .map(|((g, w), (yi, z))| perspective(g, *yi, *z).scale_nonneg(*w));
            let value = checked_sum(terms)?;
            let lb = value.value();
            Ok(DivergenceSolution { value, q: p0.clone(), lower_bound: lb, converged: true, iterations: 1 })
        }
        Penalty::Entropic => entropic_divergence(space, conjugates, y, cfg),
        Penalty::Polyhedral(_) | Penalty::Custom(_) => joint_divergence(space, conjugates, p, y, cfg),
    }
}

fn infeasible_solution(space: &FiniteSpace, p: &Penalty) -> DivergenceSolution {
    let q = match p {
        Penalty::Dirac(p0) => p0.clone(),
        Penalty::Polyhedral(v) => v[0].clone(),
        _ => Density::reference(space),
    };
    DivergenceSolution {
        value: ExtReal::INFINITY,
        q,
        lower_bound: f64::INFINITY,
        converged: true,
        iterations: 0,
    }
}

fn joint_divergence(
    space: &FiniteSpace,
    conjugates: &[PiecewiseConvexFn],
    p: &Penalty,
    y: &[f64],
    cfg: DivergenceConfig,
) -> Result<DivergenceSolution> {
    let m = space.len();
    let mut null_atoms = vec![false; m];
    for i in 0..m {
        match perspective_z_domain(&conjugates[i], y[i]) {
            None => return Ok(infeasible_solution(space, p)),
            Some((0.0, 0.0)) => null_atoms[i] = true,
            Some(_) => {}
        }
    }
    let measure = match MeasureParam::for_penalty(space, p, &null_atoms) {
        Ok(mp) => mp,
        Err(Error::Infeasible(_)) => return Ok(infeasible_solution(space, p)),
        Err(e) => return Err(e),
    };
    let mut problem = JointProblem {
        space,
        sections: conjugates,
        penalty: p,
        measure,
        scale: vec![1.0; m],
        eta0: y.to_vec(),
        eta_dirs: vec![],
        rays: 0,
        linear: vec![0.0; m],
        mu_center: None,
    };
    if !problem.domain_is_feasible() {
        return Ok(infeasible_solution(space, p));
    }
    if let Some(seed) = cfg.seed {
        let d = problem.measure.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw: Vec<f64> = (0..=d).map(|_| -(rng.random::<f64>().max(1e-300)).ln()).collect();
        let total: f64 = raw.iter().sum();
        problem.mu_center = Some(raw[..d].iter().map(|r| r / total).collect());
    }
    let jcfg = JointConfig { tol: cfg.tol, max_iter: cfg.max_iter, ..JointConfig::default() };
    let mut sol = problem.solve(jcfg);
    if !sol.value.is_finite() {
        // a feasible relaxation with no finite iterate: the domain is thin
        match problem.affine_hull() {
            Some(AffineHull::Point(mu)) => {
                let psi = problem.measure.psi(&mu);
                let value = problem.value_at_point(y, &psi)?;
                if value.is_finite() {
                    let probs: Vec<f64> = psi.iter().zip(space.weights()).map(|(a, w)| (a * w).max(0.0)).collect();
                    return Ok(DivergenceSolution {
                        value: ExtReal::from_f64(value),
                        q: Density::from_probabilities(space, &probs)?,
                        lower_bound: value,
                        converged: true,
                        iterations: sol.iterations,
                    });
                }
            }
            Some(AffineHull::Face(mp)) => {
                problem.measure = mp;
                problem.mu_center = None;
                sol = problem.solve(jcfg);
            }
            None => {}
        }
    }
    if !sol.value.is_finite() {
        return Ok(DivergenceSolution {
            converged: false,
            iterations: sol.iterations,
            ..infeasible_solution(space, p)
        });
    }
    let probs: Vec<f64> = sol.psi.iter().zip(space.weights()).map(|(a, w)| (a * w).max(0.0)).collect();
    let q = Density::from_probabilities(space, &probs)?;
    // report the objective at the renormalized measure
    let value = problem.value_at_point(y, q.values())?;
    let value = if value.is_finite() { value.min(sol.value.max(value)) } else { sol.value };
    Ok(DivergenceSolution {
        value: ExtReal::from_f64(value),
        q,
        lower_bound: sol.lower_bound,
        converged: sol.converged,
        iterations: sol.iterations,
    })
}

/// Separable solver for the entropic penalty: with `π_i = w_i ψ_i` the
/// objective is `Σ_i φ_i(π_i)` with
/// `φ_i(π) = w_i g̃_i(y_i, π/w_i) + π log(π/w_i)` on the simplex, and the
/// Lagrange multiplier of `Σ π_i = 1` is found by bisection.
fn entropic_divergence(
    space: &FiniteSpace,
    conjugates: &[PiecewiseConvexFn],
    y: &[f64],
    cfg: DivergenceConfig,
) -> Result<DivergenceSolution> {
    let m = space.len();
    let w = space.weights();
    let mut lo = vec![0.0; m];
    let mut hi = vec![0.0; m];
    let mut zdom = vec![(0.0, 0.0); m];
    for i in 0..m {
        match perspective_z_domain(&conjugates[i], y[i]) {
            None => return Ok(infeasible_solution(space, &Penalty::Entropic)),
            Some((a, b)) => {
                zdom[i] = (a, b);
                lo[i] = w[i] * a;
                hi[i] = (w[i] * b).min(1.0);
                if lo[i] > hi[i] {
                    return Ok(infeasible_solution(space, &Penalty::Entropic));
                }
            }
        }
    }
    let sum_lo: f64 = lo.iter().sum();
    let sum_hi: f64 = hi.iter().sum();
    if sum_lo > 1.0 + 1e-15 || sum_hi < 1.0 - 1e-15 {
        return Ok(infeasible_solution(space, &Penalty::Entropic));
    }
    let phi = |i: usize, pi: f64| -> f64 {
        // clamping absorbs the rounding in π/w when the z-domain is a point
        let per = perspective(&conjugates[i], y[i], (pi / w[i]).clamp(zdom[i].0, zdom[i].1));
        if per.is_pos_inf() {
            return f64::INFINITY;
        }
        let ent = if pi > 0.0 { pi * (pi / w[i]).ln() } else { 0.0 };
        w[i] * per.value() + ent
    };
    // argmin and min of φ_i(π) − μπ over [lo_i, hi_i]
    let inner = |i: usize, mu: f64| -> (f64, f64) {
        if hi[i] - lo[i] <= 0.0 {
            return (lo[i], phi(i, lo[i]) - mu * lo[i]);
        }
        let tol = 1e-15 * (1.0 + hi[i]);
        golden_section_min(|pi| phi(i, pi) - mu * pi, lo[i], hi[i], tol, 400)
    };
    let sweep = |mu: f64| -> (Vec<f64>, f64, f64) {
        let mut pis = Vec::with_capacity(m);
        let mut total = 0.0;
        let mut dual = mu;
        for i in 0..m {
            let (pi, v) = inner(i, mu);
            pis.push(pi);
            total += pi;
            dual += v;
        }
        (pis, total, dual)
    };

    if sum_hi - sum_lo <= 1e-15 {
        let q = Density::from_probabilities(space, &lo)?;
        let value = (0..m).map(|i| phi(i, lo[i])).sum::<f64>();
        return Ok(DivergenceSolution {
            value: ExtReal::from_f64(value),
            q,
            lower_bound: value,
            converged: true,
            iterations: 0,
        });
    }
    let start = match cfg.seed {
        Some(seed) => ChaCha8Rng::seed_from_u64(seed).random_range(-4.0..4.0),
        None => 0.0,
    };
    let mut mu_lo = start - 1.0;
    let mut mu_hi = start + 1.0;
    let mut low = sweep(mu_lo);
    let mut step = 1.0;
    let mut guard = 0;
    while low.1 > 1.0 {
        step *= 2.0;
        mu_hi = mu_lo;
        mu_lo -= step;
        low = sweep(mu_lo);
        guard += 1;
        if guard > 200 {
            return Err(Error::NonConvergence("multiplier bracket (low side)".into()));
        }
    }
    let mut high = sweep(mu_hi);
    step = 1.0;
    while high.1 < 1.0 {
        step *= 2.0;
        mu_lo = mu_hi;
        low = high.clone();
        mu_hi += step;
        high = sweep(mu_hi);
        guard += 1;
        if guard > 400 {
            return Err(Error::NonConvergence("multiplier bracket (high side)".into()));
        }
    }
    let combine = |low: &(Vec<f64>, f64, f64), high: &(Vec<f64>, f64, f64)| -> Vec<f64> {
        let span = high.1 - low.1;
        let theta = if span > 0.0 { (high.1 - 1.0) / span } else { 0.5 };
        low.0.iter().zip(&high.0).map(|(a, b)| theta * a + (1.0 - theta) * b).collect()
    };
    let objective = |pis: &[f64]| -> f64 { (0..m).map(|i| phi(i, pis[i])).sum() };
    let mut iterations = 0;
    let mut best_pi = combine(&low, &high);
    let mut upper = objective(&best_pi);
    let mut lower = low.2.max(high.2);
    while iterations < 400 && upper - lower > cfg.tol {
        iterations += 1;
        let mid = 0.5 * (mu_lo + mu_hi);
        if mid <= mu_lo || mid >= mu_hi {
            break;
        }
        let s = sweep(mid);
        lower = lower.max(s.2);
        if s.1 <= 1.0 {
            mu_lo = mid;
            low = s;
        } else {
            mu_hi = mid;
            high = s;
        }
        let cand = combine(&low, &high);
        let v = objective(&cand);
        if v < upper {
            upper = v;
            best_pi = cand;
        }
    }
    let q = Density::from_probabilities(space, &best_pi)?;
    let probs = q.probabilities(space);
    let value = objective(&probs).min(upper.max(objective(&probs)));
    Ok(DivergenceSolution {
        value: ExtReal::from_f64(value),
        q,
        lower_bound: lower,
        converged: value - lower <= cfg.tol.max(1e-9),
        iterations,
    })
}

/// Young slack `I_{f,γ}(x) + H_{f*,γ}(η) − E[xη]`.
pub fn young_check(f: &Integrand, space: &FiniteSpace, p: &Penalty, x: &[f64], eta: &[f64]) -> Result<f64> {
    let i = I_f_gamma(f, space, p, x)?;
    let (h, _) = H_fstar_gamma(f, space, p, eta)?;
    let rhs = i.checked_add(h)?;
    Ok(rhs.value() - space.pairing(x, eta))
}

/// Fatou check `I(x) ≤ liminf I(x_n) + 1e-8` for a uniformly bounded
/// sequence; the liminf is approximated by the infimum over the second half
/// of the sequence.
pub fn fatou_check(
    f: &Integrand,
    space: &FiniteSpace,
    p: &Penalty,
    sequence: &[Vec<f64>],
    limit: &[f64],
    bound: f64,
) -> Result<bool> {
    if sequence.is_empty() {
        return Err(Error::Precondition("empty sequence".into()));
    }
    for x in sequence {
        space.check_len(x.len())?;
        if x.iter().any(|v| !v.is_finite() || v.abs() > bound) {
            return Err(Error::Precondition(format!("sequence leaves the sup-norm ball of radius {bound}")));
        }
    }
    let tail = &sequence[sequence.len() / 2..];
    let mut liminf = ExtReal::INFINITY;
    for x in tail {
        liminf = liminf.min(I_f_gamma(f, space, p, x)?);
    }
    let at_limit = I_f_gamma(f, space, p, limit)?;
    Ok(at_limit.is_neg_inf() || liminf.is_pos_inf() || at_limit.value() <= liminf.value() + 1e-8)
}

/// Which integrability conditions hold, with the witnesses found.
///
/// On a finite space the Orlicz spaces `L^ρ`, `M^ρ` and the heart `M^ρ_u`
/// all coincide with the finite vectors, so the heart conditions are equal
/// to the plain ones; they are reported separately for clarity.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntegrabilityReport {
    /// Some bounded `ξ₀` has `f(·, ξ₀)⁺` of finite gauge norm.
    pub primal_finite: bool,
    pub primal_witness: Option<Vec<f64>>,
    pub primal_witness_gauge: Option<f64>,
    /// Same with membership in the heart.
    pub primal_heart: bool,
    /// Some `η₀` has `f*(·, η₀)⁺` of finite gauge norm.
    pub conjugate_finite: bool,
    pub conjugate_witness: Option<Vec<f64>>,
    pub conjugate_witness_gauge: Option<f64>,
    /// Same with membership in the heart.
    pub conjugate_heart: bool,
    /// Some `ξ₀′` has `f(·, ξ₀′)⁻` of finite gauge norm.
    pub negative_part: bool,
    pub negative_witness: Option<Vec<f64>>,
    pub notes: Vec<String>,
}

fn witness_candidates(sections: &[PiecewiseConvexFn]) -> Vec<Vec<f64>> {
    let m = sections.len();
    let mut out = vec![vec![0.0; m]];
    for k in -3..=3 {
        let c = 10f64.powi(k);
        out.push(vec![c; m]);
        out.push(vec![-c; m]);
    }
    out.push(
        sections
            .iter()
            .map(|s| {
                let (lo, hi) = s.domain();
                match (lo.is_finite(), hi.is_finite()) {
                    (true, true) => 0.5 * (lo + hi),
                    (true, false) => lo + 1.0,
                    (false, true) => hi - 1.0,
                    (false, false) => 0.0,
                }
            })
            .collect(),
    );
    out
}

fn find_witness(
    sections: &[PiecewiseConvexFn],
    space: &FiniteSpace,
    p: &Penalty,
) -> Result<Option<(Vec<f64>, f64)>> {
    for cand in witness_candidates(sections) {
        let image: Vec<f64> = sections.iter().zip(&cand).map(|(s, x)| s.eval_f64(*x)).collect();
        if image.iter().all(|v| v.is_finite()) {
            let pos: Vec<f64> = image.iter().map(|v| v.max(0.0)).collect();
            let g = p.gauge_norm(space, &pos)?;
            return Ok(Some((cand, g)));
        }
    }
    Ok(None)
}

/// Searches witnesses for the integrability conditions over constants
/// `±10^k`, `k = −3..3`, zero, and per-atom domain midpoints. A failed search
/// is reported as "not found", not as nonexistence.
pub fn integrability_report(f: &Integrand, space: &FiniteSpace, p: &Penalty) -> Result<IntegrabilityReport> {
    space.check_len(f.len())?;
    let primal = find_witness(f.sections(), space, p)?;
    let conj = find_witness(f.conjugates(), space, p)?;
    let mut notes = vec!["on a finite space the heart coincides with the whole Orlicz space".to_string()];
    if primal.is_none() {
        notes.push("no primal witness found among the candidates".into());
    }
    if conj.is_none() {
        notes.push("no conjugate witness found among the candidates".into());
    }
    // f > −∞ everywhere, so f(·, 0)⁻ is always a finite vector
    let negative_witness = Some(vec![0.0; space.len()]);
    Ok(IntegrabilityReport {
        primal_finite: primal.is_some(),
        primal_heart: primal.is_some(),
        primal_witness_gauge: primal.as_ref().map(|w| w.1),
        primal_witness: primal.map(|w| w.0),
        conjugate_finite: conj.is_some(),
        conjugate_heart: conj.is_some(),
        conjugate_witness_gauge: conj.as_ref().map(|w| w.1),
        conjugate_witness: conj.map(|w| w.0),
        negative_part: true,
        negative_witness,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex1d::Piece;
    use std::sync::Arc;

    fn half_half() -> FiniteSpace {
        FiniteSpace::new(vec![0.5, 0.5]).unwrap()
    }

    #[test]
    fn polyhedral_divergence_on_a_single_admissible_vertex() {
        // y₂ = 1.5 with dom f₂* = [−1, 1] needs ψ₂ ≥ 1.5, which only the
        // second vertex reaches
        let s = half_half();
        let conj = [
            PiecewiseConvexFn::quadratic(0.5, 0.0, 0.0).unwrap(),
            PiecewiseConvexFn::kinked(-1.0, 1.0, 0.0).unwrap().legendre().unwrap(),
        ];
        let p = Penalty::polyhedral(
            &s,
            vec![Density::reference(&s), Density::new(&s, vec![0.5, 1.5]).unwrap()],
        )
        .unwrap();
        let sol = robust_divergence(&s, &conj, &p, &[1.0, 1.5], DivergenceConfig::default()).unwrap();
        assert!((sol.value.value() - 0.5).abs() < 1e-12, "{:?}", sol.value);
        assert!((sol.q.values()[1] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn polyhedral_divergence_on_a_thin_edge() {
        // three atoms; ψ₃ ≥ 1.4 holds exactly on the edge between the last two vertices
        let s = FiniteSpace::uniform(3).unwrap();
        let conj = [
            PiecewiseConvexFn::quadratic(0.5, 0.0, 0.0).unwrap(),
            PiecewiseConvexFn::quadratic(0.5, 0.0, 0.0).unwrap(),
            PiecewiseConvexFn::kinked(-1.0, 1.0, 0.0).unwrap().legendre().unwrap(),
        ];
        let vertices = vec![
            Density::reference(&s),
            Density::new(&s, vec![0.4, 1.2, 1.4]).unwrap(),
            Density::new(&s, vec![1.2, 0.4, 1.4]).unwrap(),
        ];
        let p = Penalty::polyhedral(&s, vertices).unwrap();
        let y = [1.0, 1.0, 1.4];
        let sol = robust_divergence(&s, &conj, &p, &y, DivergenceConfig::default()).unwrap();
        // on the edge ψ = (0.4 + 0.8t, 1.2 − 0.8t, 1.4); the symmetric point minimizes
        // Σ y_i²/(2ψ_i)/3 over the first two atoms
        let expected = (1.0 / (2.0 * 0.8) + 1.0 / (2.0 * 0.8)) / 3.0;
        assert!((sol.value.value() - expected).abs() < 1e-8, "{:?} vs {expected}", sol.value);
    }

    fn half_square() -> PiecewiseConvexFn {
        PiecewiseConvexFn::quadratic(0.5, 0.0, 0.0).unwrap()
    }

    #[test]
    fn dirac_functional_is_expectation() {
        let s = half_half();
        let f = Integrand::uniform(&s, half_square()).unwrap();
        let v = I_f_gamma(&f, &s, &Penalty::reference(&s), &[1.0, 1.0]).unwrap();
        assert_eq!(v.value(), 0.5);
    }

    #[test]
    fn entropic_functional_with_identity_is_log_exp() {
        let s = FiniteSpace::new(vec![0.2, 0.8]).unwrap();
        let f = Integrand::uniform(&s, PiecewiseConvexFn::affine(1.0, 0.0).unwrap()).unwrap();
        let x = [0.7, -0.4];
        let v = I_f_gamma(&f, &s, &Penalty::Entropic, &x).unwrap().value();
        let direct = (0.2 * 0.7f64.exp() + 0.8 * (-0.4f64).exp()).ln();
        assert!((v - direct).abs() < 1e-14);
    }

    #[test]
    fn polyhedral_functional_is_max_over_vertices() {
        let s = half_half();
        let p1 = Density::new(&s, vec![1.5, 0.5]).unwrap();
        let p2 = Density::new(&s, vec![0.2, 1.8]).unwrap();
        let f = Integrand::uniform(&s, half_square()).unwrap();
        let x = [2.0, -1.0];
        let pen = Penalty::polyhedral(&s, vec![p1.clone(), p2.clone()]).unwrap();
        let v = I_f_gamma(&f, &s, &pen, &x).unwrap().value();
        let a = I_f_gamma(&f, &s, &Penalty::Dirac(p1), &x).unwrap().value();
        let b = I_f_gamma(&f, &s, &Penalty::Dirac(p2), &x).unwrap().value();
        assert_eq!(v, a.max(b));
    }

    #[test]
    fn divergence_under_reference_is_classical() {
        let s = half_half();
        let f = Integrand::uniform(&s, half_square()).unwrap();
        let eta = [1.0, -3.0];
        let h = H_fstar(&f, &s, &eta, &Density::reference(&s)).unwrap().value();
        assert_eq!(h, 0.5 * 0.5 + 0.5 * 4.5);
        let (hg, q) = H_fstar_gamma(&f, &s, &Penalty::reference(&s), &eta).unwrap();
        assert_eq!(hg.value(), h);
        assert_eq!(q, Density::reference(&s));
    }

    #[test]
    fn robust_divergence_at_zero_vanishes() {
        let s = FiniteSpace::new(vec![0.2, 0.3, 0.5]).unwrap();
        let f = Integrand::uniform(&s, PiecewiseConvexFn::kinked(-1.0, 2.0, 0.0).unwrap()).unwrap();
        for p in [Penalty::Entropic, Penalty::reference(&s)] {
            let (h, _) = H_fstar_gamma(&f, &s, &p, &[0.0; 3]).unwrap();
            assert!(h.value().abs() < 1e-9, "{}", p.kind_name());
        }
    }

    /// Brute-force minimum over a grid of the mixing weights of two vertices.
    #[test]
    fn polyhedral_divergence_matches_mixing_grid() {
        let s = FiniteSpace::new(vec![0.2, 0.3, 0.5]).unwrap();
        let v1 = Density::from_probabilities(&s, &[0.5, 0.3, 0.2]).unwrap();
        let v2 = Density::from_probabilities(&s, &[0.1, 0.2, 0.7]).unwrap();
        let v3 = Density::from_probabilities(&s, &[0.3, 0.5, 0.2]).unwrap();
        let pen = Penalty::polyhedral(&s, vec![v1.clone(), v2.clone(), v3.clone()]).unwrap();
        let sections = vec![
            half_square(),
            PiecewiseConvexFn::kinked(-0.5, 1.5, 0.3).unwrap(),
            PiecewiseConvexFn::new(
                f64::NEG_INFINITY,
                f64::INFINITY,
                vec![0.0],
                vec![Piece::new(0.0, 0.0, 0.0), Piece::new(1.0, 0.0, 0.0)],
            )
            .unwrap(),
        ];
        let f = Integrand::new(&s, sections).unwrap();
        let eta = [0.8, 1.2, 0.6];
        let (h, q) = H_fstar_gamma(&f, &s, &pen, &eta).unwrap();
        let mut best = f64::INFINITY;
        let n = 400;
        for a in 0..=n {
            for b in 0..=(n - a) {
                let (la, lb) = (a as f64 / n as f64, b as f64 / n as f64);
                let lc = 1.0 - la - lb;
                let psi: Vec<f64> = (0..3)
                    .map(|i| la * v1.values()[i] + lb * v2.values()[i] + lc * v3.values()[i])
                    .collect();
                let v = H_fstar(&f, &s, &eta, &Density::from_values_unchecked(psi)).unwrap().value();
                best = best.min(v);
            }
        }
        assert!(h.value() <= best + 1e-12);
        assert!((h.value() - best).abs() < 1e-5, "{} vs {}", h.value(), best);
        let attained = H_fstar(&f, &s, &eta, &q).unwrap().value();
        assert!(attained <= h.value() + 1e-8);
    }

    #[test]
    fn entropic_divergence_matches_custom_oracle() {
        let s = FiniteSpace::new(vec![0.2, 0.3, 0.5]).unwrap();
        let f = Integrand::new(
            &s,
            vec![half_square(), PiecewiseConvexFn::kinked(-0.5, 1.5, 0.3).unwrap(), half_square()],
        )
        .unwrap();
        let eta = [0.8, 1.2, -0.6];
        let custom = Penalty::custom(&s, Arc::new(crate::penalty::RelativeEntropyOracle)).unwrap();
        let (a, _) = H_fstar_gamma(&f, &s, &Penalty::Entropic, &eta).unwrap();
        let (b, _) = H_fstar_gamma(&f, &s, &custom, &eta).unwrap();
        assert!((a.value() - b.value()).abs() < 1e-7, "{} vs {}", a.value(), b.value());
    }

    #[test]
    fn divergence_value_independent_of_start() {
        let s = FiniteSpace::new(vec![0.2, 0.3, 0.5]).unwrap();
        let f = Integrand::new(
            &s,
            vec![half_square(), PiecewiseConvexFn::kinked(-0.5, 1.5, 0.3).unwrap(), half_square()],
        )
        .unwrap();
        let eta = [0.8, 1.2, -0.6];
        let custom = Penalty::custom(&s, Arc::new(crate::penalty::ChiSquareOracle { scale: 0.7 })).unwrap();
        for p in [Penalty::Entropic, custom] {
            let base = robust_divergence(&s, f.conjugates(), &p, &eta, DivergenceConfig::default()).unwrap();
            for seed in 1..4 {
                let cfg = DivergenceConfig { seed: Some(seed), ..DivergenceConfig::default() };
                let other = robust_divergence(&s, f.conjugates(), &p, &eta, cfg).unwrap();
                assert!((base.value.value() - other.value.value()).abs() < 2e-8);
            }
        }
    }

    #[test]
    fn young_equality_at_gradient_pair() {
        let s = half_half();
        let f = Integrand::uniform(&s, half_square()).unwrap();
        let x = [1.0, -2.0];
        let slack = young_check(&f, &s, &Penalty::reference(&s), &x, &x).unwrap();
        assert!(slack.abs() < 1e-12);
        let zero = young_check(&f, &s, &Penalty::Entropic, &[0.0, 0.0], &[0.0, 0.0]).unwrap();
        assert!(zero.abs() < 1e-9);
    }

    #[test]
    fn fatou_on_perturbed_sequence() {
        let s = half_half();
        let f = Integrand::uniform(&s, PiecewiseConvexFn::kinked(-1.0, 1.0, 0.0).unwrap()).unwrap();
        let limit = [0.5, -0.25];
        let seq: Vec<Vec<f64>> = (1..50).map(|n| vec![0.5 + 1.0 / n as f64, -0.25]).collect();
        assert!(fatou_check(&f, &s, &Penalty::Entropic, &seq, &limit, 10.0).unwrap());
        let constant = vec![limit.to_vec(); 5];
        assert!(fatou_check(&f, &s, &Penalty::Entropic, &constant, &limit, 10.0).unwrap());
        let unbounded: Vec<Vec<f64>> = (1..5).map(|n| vec![10f64.powi(n), 0.0]).collect();
        assert!(matches!(
            fatou_check(&f, &s, &Penalty::Entropic, &unbounded, &limit, 100.0),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn integrability_witnesses_found() {
        let s = half_half();
        let f = Integrand::uniform(&s, half_square()).unwrap();
        let r = integrability_report(&f, &s, &Penalty::reference(&s)).unwrap();
        assert!(r.primal_finite && r.conjugate_finite && r.negative_part);
        assert_eq!(r.primal_witness, Some(vec![0.0, 0.0]));
        let shifted = Integrand::uniform(&s, PiecewiseConvexFn::indicator(5.0, 7.0).unwrap()).unwrap();
        let r = integrability_report(&shifted, &s, &Penalty::Entropic).unwrap();
        assert_eq!(r.primal_witness, Some(vec![6.0, 6.0]));
    }
}
