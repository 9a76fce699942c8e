//! Integrands built from a base function by a random scaling
//! `f(ω, x) = g(W(ω)x)` or a random shift `f_B(ω, x) = f(ω, x + B(ω))`.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::GridSpec;
use crate::convex1d::PiecewiseConvexFn;
use crate::error::{Error, Result};
use crate::functional::{robust_divergence, DivergenceConfig, Integrand};
use crate::penalty::Penalty;
use crate::space::FiniteSpace;

fn check_positive(w: &[f64]) -> Result<()> {
    if w.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::Precondition("scaling variable must be finite and strictly positive".into()));
    }
    Ok(())
}

/// `f(ω, x) = g(W(ω)x)`.
pub fn transform_scaling(space: &FiniteSpace, g: &PiecewiseConvexFn, w: &[f64]) -> Result<Integrand> {
    space.check_len(w.len())?;
    check_positive(w)?;
    let sections = w.iter().map(|wi| g.scale_argument(*wi)).collect::<Result<Vec<_>>>()?;
    Integrand::new(space, sections)
}

/// Outcome of the witness search for `g(±δW^p)⁺` having finite gauge norm
/// for some `δ > 0`, `p > 1`.
#[derive(Clone, Debug, Serialize)]
pub struct ScalingCondition {
    pub satisfied: bool,
    /// `(δ, p)` of the first witness found.
    pub witness: Option<(f64, f64)>,
    /// `g` is nondecreasing with `g(0)` finite, so the `−δW^p` half holds
    /// for every `(δ, p)`.
    pub negative_side_automatic: bool,
    /// Largest `|f*(ω, y) − g*(y/W(ω))|` over sample points.
    pub conjugate_mismatch: f64,
}

/// Searches `δ ∈ {10⁻³, …, 10}` and `p ∈ {1.5, 2, 3}` for a witness, and
/// compares the conjugate sections with `y ↦ g*(y/W)`.
pub fn scaling_condition(
    space: &FiniteSpace,
    p: &Penalty,
    g: &PiecewiseConvexFn,
    w: &[f64],
) -> Result<ScalingCondition> {
    let f = transform_scaling(space, g, w)?;
    let gstar = g.legendre()?;
    let negative_side_automatic = g.recession_slopes().0.value() >= 0.0 && g.eval(0.0).is_finite();
    let mut witness = None;
    'search: for k in -3..=1 {
        let delta = 10f64.powi(k);
        for pw in [1.5, 2.0, 3.0] {
            let mut ok = true;
            for sign in [-1.0, 1.0] {
                if sign < 0.0 && negative_side_automatic {
                    continue;
                }
                let pos: Vec<f64> = w.iter().map(|wi| g.eval_f64(sign * delta * wi.powf(pw)).max(0.0)).collect();
                if pos.iter().any(|v| !v.is_finite()) || !p.gauge_norm(space, &pos)?.is_finite() {
                    ok = false;
                }
            }
            if ok {
                witness = Some((delta, pw));
                break 'search;
            }
        }
    }
    let mut conjugate_mismatch: f64 = 0.0;
    for (fs, wi) in f.conjugates().iter().zip(w) {
        let expected = gstar.scale_argument(1.0 / wi)?;
        let pts: Vec<f64> = (0..=40).map(|j| -10.0 + 0.5 * j as f64).collect();
        conjugate_mismatch = conjugate_mismatch.max(fs.max_abs_diff(&expected, &pts));
    }
    Ok(ScalingCondition { satisfied: witness.is_some(), witness, negative_side_automatic, conjugate_mismatch })
}

/// `f_B(ω, x) = f(ω, x + B(ω))`.
pub fn transform_shift(space: &FiniteSpace, f: &Integrand, b: &[f64]) -> Result<Integrand> {
    space.check_len(b.len())?;
    space.check_len(f.len())?;
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::Precondition("shift must be finite".into()));
    }
    let sections = f.sections().iter().zip(b).map(|(s, bi)| s.shift_argument(*bi)).collect::<Result<Vec<_>>>()?;
    Integrand::new(space, sections)
}

/// Result of comparing `H_{f*_B,γ}(η)` with `H_{f*,γ}(η) − E[ηB]`.
#[derive(Clone, Debug, Serialize)]
pub struct ShiftIdentity {
    pub samples: usize,
    /// Samples where both divergences are finite.
    pub in_common_domain: usize,
    pub max_error: f64,
    /// Largest `|f*_B(ω, y) − (f*(ω, y) − yB(ω))|` over sample points.
    pub conjugate_mismatch: f64,
    /// Largest violation of the two-sided pointwise bound on `f_B` through
    /// `f(·, εx/(1+ε))`, `f(·, (1+ε)x/ε)` and `f(·, αB)⁺/α`.
    pub sandwich_violation: f64,
}

/// Samples `η = ψ ⊙ y` with `ψ` a density of the penalty domain and `y` in
/// the conjugate domains, so that both sides are finite, and checks the
/// shift identity, the conjugate formula and the pointwise sandwich.
pub fn shift_identity_check(
    f: &Integrand,
    space: &FiniteSpace,
    p: &Penalty,
    b: &[f64],
    samples: usize,
    seed: u64,
) -> Result<ShiftIdentity> {
    let fb = transform_shift(space, f, b)?;
    let m = space.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = GridSpec { radius: 4.0, level: 0 };
    let mut max_error: f64 = 0.0;
    let mut in_common_domain = 0;
    for _ in 0..samples {
        let psi = sample_density(&mut rng, space, p);
        let eta: Vec<f64> = (0..m)
            .map(|i| {
                let (lo, hi) = grid.interval(&f.conjugates()[i]);
                let y = if hi > lo { rng.random_range(lo..=hi) } else { lo };
                psi[i] * y
            })
            .collect();
        let lhs = robust_divergence(space, fb.conjugates(), p, &eta, DivergenceConfig::default())?;
        let rhs = robust_divergence(space, f.conjugates(), p, &eta, DivergenceConfig::default())?;
        if lhs.value.is_finite() && rhs.value.is_finite() {
            in_common_domain += 1;
            let err = (lhs.value.value() - (rhs.value.value() - space.pairing(&eta, b))).abs();
            max_error = max_error.max(err);
        }
    }
    let mut conjugate_mismatch: f64 = 0.0;
    let pts: Vec<f64> = (0..=40).map(|j| -10.0 + 0.5 * j as f64).collect();
    for i in 0..m {
        let expected = f.conjugates()[i].add_linear(-b[i])?;
        conjugate_mismatch = conjugate_mismatch.max(fb.conjugates()[i].max_abs_diff(&expected, &pts));
    }
    let mut sandwich_violation: f64 = 0.0;
    for _ in 0..samples.min(200) {
        let x = rng.random_range(-4.0..4.0);
        let eps = 10f64.powf(rng.random_range(-2.0..1.0));
        for i in 0..m {
            let s = &f.sections()[i];
            let gamma = |alpha: f64, v: f64| s.eval_f64(alpha * v).max(0.0) / alpha;
            let mid = fb.sections()[i].eval_f64(x);
            let lower = (1.0 + eps) / eps * s.eval_f64(eps * x / (1.0 + eps)) - gamma(eps, -b[i]);
            let upper = eps / (1.0 + eps) * s.eval_f64((1.0 + eps) * x / eps) + gamma(1.0 + eps, b[i]);
            if [mid, lower, upper].iter().all(|v| v.is_finite()) {
                let scale = 1.0 + mid.abs();
                sandwich_violation = sandwich_violation.max((lower - mid) / scale).max((mid - upper) / scale);
            }
        }
    }
    Ok(ShiftIdentity { samples, in_common_domain, max_error, conjugate_mismatch, sandwich_violation })
}

fn sample_density(rng: &mut ChaCha8Rng, space: &FiniteSpace, p: &Penalty) -> Vec<f64> {
    match p {
        Penalty::Dirac(q) => q.values().to_vec(),
        Penalty::Polyhedral(vs) => {
            let lam: Vec<f64> = (0..vs.len()).map(|_| rng.random_range(0.0..1.0)).collect();
            let total: f64 = lam.iter().sum();
            (0..space.len())
                .map(|i| vs.iter().zip(&lam).map(|(v, l)| v.values()[i] * l / total).sum())
                .collect()
        }
        Penalty::Entropic | Penalty::Custom(_) => {
            let probs: Vec<f64> = (0..space.len()).map(|_| rng.random_range(0.05..1.0)).collect();
            let total: f64 = probs.iter().sum();
            probs.iter().zip(space.weights()).map(|(p, w)| p / total / w).collect()
        }
    }
}
