//! Penalty functions on probability measures, the induced convex risk
//! measure `ρ_γ(ξ) = sup_Q (E_Q[ξ] − γ(Q))` and its gauge norm.

use std::fmt;
use std::sync::Arc;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::solver::lp;
use crate::solver::mirror::{maximize_on_simplex, MirrorConfig};
use crate::space::{Density, FiniteSpace};

/// Membership tolerance for the polyhedral hull test.
pub const HULL_TOL: f64 = 1e-10;
/// Tolerance for recognizing the Dirac point.
pub const DIRAC_TOL: f64 = 1e-12;
/// Bracket factor of the gauge bisection.
pub const GAUGE_BRACKET: f64 = 1e6;

/// User-supplied penalty. Values must be finite and nonnegative on every
/// density of the space, and both methods must be safe to call
/// concurrently.
pub trait PenaltyOracle: Send + Sync + fmt::Debug {
    fn value(&self, space: &FiniteSpace, psi: &[f64]) -> f64;
    /// Gradient with respect to the density values; entries may be `−∞` on
    /// atoms where `ψ` vanishes.
    fn gradient(&self, space: &FiniteSpace, psi: &[f64]) -> Vec<f64>;
}

/// Relative entropy `E[ψ log ψ]` as an oracle, for cross-checking the
/// built-in entropic penalty.
#[derive(Clone, Copy, Debug, Default)]
pub struct RelativeEntropyOracle;

impl PenaltyOracle for RelativeEntropyOracle {
    fn value(&self, space: &FiniteSpace, psi: &[f64]) -> f64 {
        relative_entropy(space, psi)
    }

    fn gradient(&self, space: &FiniteSpace, psi: &[f64]) -> Vec<f64> {
        psi.iter()
            .zip(space.weights())
            .map(|(v, w)| if *v > 0.0 { w * (v.ln() + 1.0) } else { f64::NEG_INFINITY })
            .collect()
    }
}

/// `scale · E[(ψ − 1)²]`.
#[derive(Clone, Copy, Debug)]
pub struct ChiSquareOracle {
    pub scale: f64,
}

impl PenaltyOracle for ChiSquareOracle {
    fn value(&self, space: &FiniteSpace, psi: &[f64]) -> f64 {
        self.scale * psi.iter().zip(space.weights()).map(|(v, w)| w * (v - 1.0) * (v - 1.0)).sum::<f64>()
    }

    fn gradient(&self, space: &FiniteSpace, psi: &[f64]) -> Vec<f64> {
        psi.iter()
            .zip(space.weights())
            .map(|(v, w)| 2.0 * self.scale * w * (v - 1.0))
            .collect()
    }
}

pub(crate) fn relative_entropy(space: &FiniteSpace, psi: &[f64]) -> f64 {
    psi.iter()
        .zip(space.weights())
        .map(|(v, w)| if *v > 0.0 { w * v * v.ln() } else { 0.0 })
        .sum()
}

/// A penalty `γ`.
#[derive(Clone, Debug)]
pub enum Penalty {
    /// `0` at a single measure, `+∞` elsewhere.
    Dirac(Density),
    /// `0` on the convex hull of the vertices, `+∞` elsewhere.
    Polyhedral(Vec<Density>),
    /// Relative entropy with respect to the reference measure.
    Entropic,
    Custom(Arc<dyn PenaltyOracle>),
}

/// Result of [`Penalty::assumption_check`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AssumptionReport {
    /// `inf γ ≤ tol`.
    pub normalization: bool,
    /// Some measure equivalent to the reference has finite penalty.
    pub sensitivity: bool,
    /// Sublevel sets are closed and bounded.
    pub sublevel_bounded: bool,
    pub min_gamma: f64,
    pub notes: Vec<String>,
}

impl AssumptionReport {
    pub fn passed(&self) -> bool {
        self.normalization && self.sensitivity && self.sublevel_bounded
    }
}

impl Penalty {
    pub fn dirac(space: &FiniteSpace, q: Density) -> Result<Self> {
        space.check_len(q.values().len())?;
        Ok(Penalty::Dirac(q))
    }

    /// The reference measure as a Dirac penalty.
    pub fn reference(space: &FiniteSpace) -> Self {
        Penalty::Dirac(Density::reference(space))
    }

    pub fn polyhedral(space: &FiniteSpace, vertices: Vec<Density>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::InvalidPenalty("polyhedral penalty needs a vertex".into()));
        }
        for v in &vertices {
            space.check_len(v.values().len())?;
        }
        Ok(Penalty::Polyhedral(vertices))
    }

    /// Wraps an oracle after checking nonnegativity and finiteness on a
    /// deterministic sample of densities.
    pub fn custom(space: &FiniteSpace, oracle: Arc<dyn PenaltyOracle>) -> Result<Self> {
        for psi in sample_densities(space, 64, 0x5eed) {
            let v = oracle.value(space, &psi);
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidPenalty(format!(
                    "custom penalty returned {v} at a sampled density"
                )));
            }
            let g = oracle.gradient(space, &psi);
            if g.len() != space.len() {
                return Err(Error::InvalidPenalty("custom gradient has the wrong length".into()));
            }
        }
        Ok(Penalty::Custom(oracle))
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Penalty::Dirac(_) => "dirac",
            Penalty::Polyhedral(_) => "polyhedral",
            Penalty::Entropic => "entropic",
            Penalty::Custom(_) => "custom",
        }
    }

    /// `γ(Q)` for the density `q`.
    pub fn gamma_eval(&self, space: &FiniteSpace, q: &Density) -> Result<ExtReal> {
        space.check_len(q.values().len())?;
        Ok(match self {
            Penalty::Dirac(p0) => {
                if p0.max_abs_diff(q) <= DIRAC_TOL {
                    ExtReal::ZERO
                } else {
                    ExtReal::INFINITY
                }
            }
            Penalty::Polyhedral(vertices) => {
                let pts: Vec<Vec<f64>> = vertices.iter().map(|v| v.probabilities(space)).collect();
                if lp::in_convex_hull(&pts, &q.probabilities(space), HULL_TOL) {
                    ExtReal::ZERO
                } else {
                    ExtReal::INFINITY
                }
            }
            Penalty::Entropic => ExtReal::from_f64(relative_entropy(space, q.values())),
            Penalty::Custom(o) => ExtReal::new(o.value(space, q.values()))?,
        })
    }

    /// `ρ_γ(x)`; entries of `x` may be infinite.
    pub fn rho(&self, space: &FiniteSpace, x: &[f64]) -> Result<ExtReal> {
        Ok(self.rho_with_maximizer(space, x)?.0)
    }

    /// `ρ_γ(x)` together with a maximizing measure. For infinite values the
    /// returned measure is one attaining the infinite value.
    pub fn rho_with_maximizer(&self, space: &FiniteSpace, x: &[f64]) -> Result<(ExtReal, Density)> {
        space.check_len(x.len())?;
        if x.iter().any(|v| v.is_nan()) {
            return Err(Error::IllPosed("NaN in random variable".into()));
        }
        match self {
            Penalty::Dirac(p0) => Ok((expect_ext(space, p0, x)?, p0.clone())),
            Penalty::Polyhedral(vertices) => {
                let mut best: Option<(ExtReal, usize)> = None;
                for (k, v) in vertices.iter().enumerate() {
                    let e = expect_ext(space, v, x)?;
                    if best.is_none_or(|(b, _)| e > b) {
                        best = Some((e, k));
                    }
                }
                let (value, k) = best.expect("nonempty vertex list");
                Ok((value, vertices[k].clone()))
            }
            Penalty::Entropic => {
                let w = space.weights();
                if x.contains(&f64::INFINITY) {
                    let i = x.iter().position(|v| *v == f64::INFINITY).unwrap();
                    let mut probs = vec![0.0; x.len()];
                    probs[i] = 1.0;
                    return Ok((ExtReal::INFINITY, Density::from_probabilities(space, &probs)?));
                }
                let m = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                if m == f64::NEG_INFINITY {
                    return Ok((ExtReal::NEG_INFINITY, Density::reference(space)));
                }
                let terms: Vec<f64> = x.iter().zip(w).map(|(v, wi)| wi * (v - m).exp()).collect();
                let total: f64 = terms.iter().sum();
                let value = m + total.ln();
                let psi = x.iter().map(|v| (v - m).exp() / total).collect();
                Ok((ExtReal::from_f64(value), Density::from_values_unchecked(psi)))
            }
            Penalty::Custom(oracle) => {
                if let Some(i) = x.iter().position(|v| *v == f64::INFINITY) {
                    let mut probs = vec![0.0; x.len()];
                    probs[i] = 1.0;
                    return Ok((ExtReal::INFINITY, Density::from_probabilities(space, &probs)?));
                }
                if x.iter().all(|v| *v == f64::NEG_INFINITY) {
                    return Ok((ExtReal::NEG_INFINITY, Density::reference(space)));
                }
                let r = custom_maximize(space, oracle.as_ref(), x, 1.0)?;
                Ok((ExtReal::from_f64(r.0), Density::from_probabilities(space, &r.1)?))
            }
        }
    }

    /// Gauge norm `inf{λ > 0 : ρ_γ(|x|/λ) ≤ 1}` by log-space bisection.
    pub fn gauge_norm(&self, space: &FiniteSpace, x: &[f64]) -> Result<f64> {
        space.check_len(x.len())?;
        let s = x.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        if s == 0.0 {
            return Ok(0.0);
        }
        if !s.is_finite() {
            return Err(Error::Precondition("gauge norm needs a finite random variable".into()));
        }
        let abs: Vec<f64> = x.iter().map(|v| v.abs()).collect();
        let phi = |lambda: f64| -> Result<f64> {
            let scaled: Vec<f64> = abs.iter().map(|v| v / lambda).collect();
            Ok(self.rho(space, &scaled)?.value())
        };
        let mut hi = s * GAUGE_BRACKET;
        let mut guard = 0;
        while phi(hi)? > 1.0 {
            hi *= GAUGE_BRACKET;
            guard += 1;
            if guard > 20 {
                return Err(Error::NonConvergence("gauge bracket does not close".into()));
            }
        }
        let mut lo = s / GAUGE_BRACKET;
        while phi(lo)? <= 1.0 {
            hi = lo;
            lo /= GAUGE_BRACKET;
            if lo < s * 1e-290 {
                return Ok(0.0);
            }
        }
        for _ in 0..400 {
            if hi / lo - 1.0 <= 1e-13 {
                break;
            }
            let mid = (lo * hi).sqrt();
            if phi(mid)? <= 1.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    /// Dual formula `sup_Q E_Q[|x|]/(1 + γ(Q))`, computed by Dinkelbach
    /// iterations over the maximizing measures of the penalized problem.
    pub fn gauge_norm_dual(&self, space: &FiniteSpace, x: &[f64]) -> Result<f64> {
        space.check_len(x.len())?;
        let abs: Vec<f64> = x.iter().map(|v| v.abs()).collect();
        if abs.iter().all(|v| *v == 0.0) {
            return Ok(0.0);
        }
        let ratio = |q: &Density| -> Result<f64> {
            let g = self.gamma_eval_fast(space, q)?;
            Ok(space.expect_under(q, &abs) / (1.0 + g))
        };
        let start = match self {
            Penalty::Dirac(p0) => p0.clone(),
            Penalty::Polyhedral(v) => v[0].clone(),
            _ => Density::reference(space),
        };
        let mut t = ratio(&start)?;
        for _ in 0..200 {
            if t <= 0.0 {
                // the ratio vanished on the starting measure; restart from the
                // unpenalized maximizer
                let (_, q) = self.rho_with_maximizer(space, &abs)?;
                t = ratio(&q)?;
                if t <= 0.0 {
                    return Ok(0.0);
                }
            }
            let scaled: Vec<f64> = abs.iter().map(|v| v / t).collect();
            let (_, q) = self.rho_with_maximizer(space, &scaled)?;
            let next = ratio(&q)?;
            if next <= t * (1.0 + 1e-15) {
                return Ok(t.max(next));
            }
            t = next;
        }
        Ok(t)
    }

    /// `γ(Q)` as a float for measures known to be in the penalty domain.
    fn gamma_eval_fast(&self, space: &FiniteSpace, q: &Density) -> Result<f64> {
        match self {
            Penalty::Dirac(_) | Penalty::Polyhedral(_) => Ok(0.0),
            _ => Ok(self.gamma_eval(space, q)?.value()),
        }
    }

    /// Checks normalization, sensitivity and bounded sublevels.
    pub fn assumption_check(&self, space: &FiniteSpace, tol: f64) -> AssumptionReport {
        let mut notes = Vec::new();
        let (normalization, sensitivity, sublevel_bounded, min_gamma) = match self {
            Penalty::Dirac(p0) => {
                let sens = p0.is_equivalent();
                if !sens {
                    notes.push("the Dirac measure charges only part of the space".into());
                }
                (true, sens, true, 0.0)
            }
            Penalty::Polyhedral(vertices) => {
                let m = space.len();
                let avg: Vec<f64> = (0..m)
                    .map(|i| vertices.iter().map(|v| v.values()[i]).sum::<f64>() / vertices.len() as f64)
                    .collect();
                let sens = avg.iter().all(|v| *v > 0.0);
                if !sens {
                    notes.push("the vertex average is not equivalent to the reference".into());
                }
                (true, sens, true, 0.0)
            }
            Penalty::Entropic => (true, true, true, 0.0),
            Penalty::Custom(oracle) => {
                let zero = vec![0.0; space.len()];
                let min_gamma = match custom_maximize(space, oracle.as_ref(), &zero, 1.0) {
                    Ok((v, _)) => -v,
                    Err(_) => {
                        notes.push("minimizing the custom penalty did not converge".into());
                        f64::INFINITY
                    }
                };
                let sens = oracle.value(space, Density::reference(space).values()).is_finite();
                let samples = sample_densities(space, 256, 0xb0b);
                let bounded = samples.iter().all(|psi| {
                    let v = oracle.value(space, psi);
                    v.is_finite() && v >= 0.0
                });
                notes.push("sublevel boundedness checked on 256 sampled densities".into());
                (min_gamma <= tol, sens, bounded, min_gamma)
            }
        };
        AssumptionReport { normalization, sensitivity, sublevel_bounded, min_gamma, notes }
    }

    /// `γ` and its gradient in probability coordinates at `probs`, for
    /// penalties that are finite on the whole simplex.
    pub(crate) fn smooth_part(&self, space: &FiniteSpace, probs: &[f64]) -> Option<(f64, Vec<f64>)> {
        let w = space.weights();
        match self {
            Penalty::Entropic => {
                let mut value = 0.0;
                let grad = probs
                    .iter()
                    .zip(w)
                    .map(|(p, wi)| {
                        if *p > 0.0 {
                            let r = (p / wi).ln();
                            value += p * r;
                            r + 1.0
                        } else {
                            f64::NEG_INFINITY
                        }
                    })
                    .collect();
                Some((value, grad))
            }
            Penalty::Custom(o) => {
                let psi: Vec<f64> = probs.iter().zip(w).map(|(p, wi)| p / wi).collect();
                let value = o.value(space, &psi);
                let grad = o.gradient(space, &psi).iter().zip(w).map(|(g, wi)| g / wi).collect();
                Some((value, grad))
            }
            _ => None,
        }
    }
}

fn expect_ext(space: &FiniteSpace, q: &Density, x: &[f64]) -> Result<ExtReal> {
    let terms = space
        .weights()
        .iter()
        .zip(q.values().iter().zip(x))
        .map(|(w, (psi, v))| ExtReal::from_f64(*v).scale_nonneg(w * psi));
    crate::ext::checked_sum(terms)
}

/// Maximizes `scale·E_Q[x] − γ(Q)` over the simplex; returns the value and
/// the maximizing probability vector.
fn custom_maximize(
    space: &FiniteSpace,
    oracle: &dyn PenaltyOracle,
    x: &[f64],
    scale: f64,
) -> Result<(f64, Vec<f64>)> {
    let w = space.weights().to_vec();
    let finite_x: Vec<f64> = x.iter().map(|v| if v.is_finite() { *v } else { -1e300 }).collect();
    let obj = |p: &[f64]| {
        let psi: Vec<f64> = p.iter().zip(&w).map(|(pi, wi)| pi / wi).collect();
        let gamma = oracle.value(space, &psi);
        let grad_psi = oracle.gradient(space, &psi);
        let value = p
            .iter()
            .zip(&finite_x)
            .map(|(pi, xi)| if *pi == 0.0 { 0.0 } else { scale * pi * xi })
            .sum::<f64>()
            - gamma;
        let grad = finite_x
            .iter()
            .zip(grad_psi.iter().zip(&w))
            .map(|(xi, (g, wi))| scale * xi - g / wi)
            .collect();
        (value, grad)
    };
    let r = maximize_on_simplex(obj, w.clone(), MirrorConfig::default());
    if !r.converged {
        return Err(Error::NonConvergence(format!(
            "custom penalty maximization stopped with gap {}",
            r.gap
        )));
    }
    Ok((r.value, r.p))
}

/// Deterministic sample of densities: the reference, the vertices pulled
/// slightly inside, and Dirichlet-like random points.
pub(crate) fn sample_densities(space: &FiniteSpace, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let m = space.len();
    let w = space.weights();
    let mut out = vec![vec![1.0; m]];
    for i in 0..m {
        let probs: Vec<f64> = (0..m).map(|j| if j == i { 1.0 } else { 0.0 }).collect();
        out.push(probs.iter().zip(w).map(|(p, wi)| p / wi).collect());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while out.len() < count {
        let raw: Vec<f64> = (0..m).map(|_| -(rng.random::<f64>().max(1e-300)).ln()).collect();
        let total: f64 = raw.iter().sum();
        out.push(raw.iter().zip(w).map(|(r, wi)| r / total / wi).collect());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half_half() -> FiniteSpace {
        FiniteSpace::new(vec![0.5, 0.5]).unwrap()
    }

    #[test]
    fn entropic_gamma_values() {
        let s = half_half();
        assert_eq!(Penalty::Entropic.gamma_eval(&s, &Density::reference(&s)).unwrap(), ExtReal::ZERO);
        let q = Density::new(&s, vec![1.5, 0.5]).unwrap();
        let expect = 0.75 * 1.5f64.ln() + 0.25 * 0.5f64.ln();
        assert!((Penalty::Entropic.gamma_eval(&s, &q).unwrap().value() - expect).abs() < 1e-15);
    }

    #[test]
    fn dirac_gamma_is_indicator() {
        let s = half_half();
        let p = Penalty::reference(&s);
        let q = Density::new(&s, vec![1.5, 0.5]).unwrap();
        assert!(p.gamma_eval(&s, &q).unwrap().is_pos_inf());
        assert_eq!(p.gamma_eval(&s, &Density::reference(&s)).unwrap(), ExtReal::ZERO);
    }

    #[test]
    fn polyhedral_gamma_uses_hull() {
        let s = half_half();
        let p1 = Density::new(&s, vec![1.5, 0.5]).unwrap();
        let p2 = Density::new(&s, vec![0.5, 1.5]).unwrap();
        let pen = Penalty::polyhedral(&s, vec![p1, p2]).unwrap();
        assert_eq!(pen.gamma_eval(&s, &Density::reference(&s)).unwrap(), ExtReal::ZERO);
        let out = Density::new(&s, vec![2.0, 0.0]).unwrap();
        assert!(pen.gamma_eval(&s, &out).unwrap().is_pos_inf());
        let x = [1.0, -2.0];
        assert_eq!(pen.rho(&s, &x).unwrap().value(), 0.25_f64.max(0.25 - 1.5));
    }

    #[test]
    fn entropic_rho_constant_and_closed_form() {
        let s = FiniteSpace::new(vec![0.2, 0.3, 0.5]).unwrap();
        assert!((Penalty::Entropic.rho(&s, &[2.5; 3]).unwrap().value() - 2.5).abs() < 1e-15);
        let x = [0.3, -1.2, 2.0];
        let direct = (0.2 * 0.3f64.exp() + 0.3 * (-1.2f64).exp() + 0.5 * 2f64.exp()).ln();
        assert!((Penalty::Entropic.rho(&s, &x).unwrap().value() - direct).abs() < 1e-14);
    }

    #[test]
    fn custom_relative_entropy_matches_closed_form() {
        let s = FiniteSpace::new(vec![0.2, 0.3, 0.5]).unwrap();
        let custom = Penalty::custom(&s, Arc::new(RelativeEntropyOracle)).unwrap();
        let x = [0.3, -1.2, 2.0];
        let a = custom.rho(&s, &x).unwrap().value();
        let b = Penalty::Entropic.rho(&s, &x).unwrap().value();
        assert!((a - b).abs() < 1e-6);
    }

    #[test]
    fn infinite_entries_propagate_except_on_null_atoms() {
        let s = half_half();
        let x = [1.0, f64::INFINITY];
        assert!(Penalty::Entropic.rho(&s, &x).unwrap().is_pos_inf());
        let p0 = Density::new(&s, vec![2.0, 0.0]).unwrap();
        assert_eq!(Penalty::dirac(&s, p0).unwrap().rho(&s, &x).unwrap().value(), 1.0);
    }

    #[test]
    fn gauge_norm_examples() {
        let s = half_half();
        assert_eq!(Penalty::Entropic.gauge_norm(&s, &[0.0, 0.0]).unwrap(), 0.0);
        let l1 = Penalty::reference(&s).gauge_norm(&s, &[2.0, -1.0]).unwrap();
        assert!((l1 - 1.5).abs() < 1e-9);
        // log((e^{2/λ} + 1)/2) = 1  ⇔  λ = 2 / ln(2e − 1)
        let oracle = 2.0 / (2.0 * std::f64::consts::E - 1.0).ln();
        let g = Penalty::Entropic.gauge_norm(&s, &[2.0, 0.0]).unwrap();
        assert!((g - oracle).abs() < 1e-9 * oracle);
        let d = Penalty::Entropic.gauge_norm_dual(&s, &[2.0, 0.0]).unwrap();
        assert!((d - oracle).abs() < 1e-6);
    }

    #[test]
    fn assumption_reports() {
        let s = half_half();
        assert!(Penalty::Entropic.assumption_check(&s, 1e-9).passed());
        let p0 = Density::new(&s, vec![2.0, 0.0]).unwrap();
        let r = Penalty::dirac(&s, p0.clone()).unwrap().assumption_check(&s, 1e-9);
        assert!(!r.sensitivity && r.normalization);
        let p1 = Density::new(&s, vec![0.0, 2.0]).unwrap();
        assert!(Penalty::polyhedral(&s, vec![p0, p1]).unwrap().assumption_check(&s, 1e-9).sensitivity);
        let custom = Penalty::custom(&s, Arc::new(ChiSquareOracle { scale: 1.0 })).unwrap();
        assert!(custom.assumption_check(&s, 1e-9).passed());
    }

    #[derive(Debug)]
    struct Negative;
    impl PenaltyOracle for Negative {
        fn value(&self, _: &FiniteSpace, _: &[f64]) -> f64 {
            -1.0
        }
        fn gradient(&self, s: &FiniteSpace, _: &[f64]) -> Vec<f64> {
            vec![0.0; s.len()]
        }
    }

    #[test]
    fn negative_custom_penalty_rejected() {
        let s = half_half();
        assert!(matches!(Penalty::custom(&s, Arc::new(Negative)), Err(Error::InvalidPenalty(_))));
    }
}
