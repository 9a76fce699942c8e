//! The sequence-space model `Ω = ℕ` with the integrand `f(n, x) = n x⁺eˣ` and
//! the measures `P_n = (1 − 1/n)δ₁ + (1/n)δ_n`, under which the functional is
//! finite on all of `ℓ^∞` while its regular domain is only
//! `{ξ : limsup ξ(n) ≤ 0}`.
//!
//! `E_{P_n}[f(·, ξ)] = (1 − 1/n)h(ξ(1)) + h(ξ(n))` with `h(x) = x⁺eˣ`, which
//! is what every routine here evaluates; `h` is never approximated.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `h(x) = x⁺eˣ`.
pub fn h(x: f64) -> f64 {
    if x > 0.0 {
        x * x.exp()
    } else {
        0.0
    }
}

/// Width of the explicit enumeration past the prefix. Beyond it the
/// quantities below are convex in `1/n` for the bounded rules, so their
/// supremum is the larger of the last enumerated value and the limit.
pub const ENUMERATION_WINDOW: usize = 100_000;

/// Truncation of the model to atoms `1..=N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceModel {
    pub truncation: usize,
}

impl Default for SequenceModel {
    fn default() -> Self {
        SequenceModel { truncation: 10_000 }
    }
}

impl SequenceModel {
    pub fn new(truncation: usize) -> Result<Self> {
        if truncation == 0 {
            return Err(Error::Precondition("truncation must be at least 1".into()));
        }
        Ok(SequenceModel { truncation })
    }

    /// `P(n) = 2^{−n}` renormalized over `n ≤ N`. Underflows to zero past
    /// `n ≈ 1074`.
    pub fn reference_weights(&self) -> Vec<f64> {
        let raw: Vec<f64> = (1..=self.truncation).map(|n| 0.5f64.powi(n.min(2000) as i32)).collect();
        let total: f64 = raw.iter().sum();
        raw.iter().map(|p| p / total).collect()
    }

    /// Atoms and masses of `P_n`.
    pub fn measure(&self, n: usize) -> Result<Vec<(usize, f64)>> {
        if n == 0 || n > self.truncation {
            return Err(Error::Precondition(format!("measure index {n} outside 1..={}", self.truncation)));
        }
        Ok(if n == 1 { vec![(1, 1.0)] } else { vec![(1, 1.0 - 1.0 / n as f64), (n, 1.0 / n as f64)] })
    }

    /// `f(n, x) = n h(x)`.
    pub fn integrand(n: usize, x: f64) -> f64 {
        n as f64 * h(x)
    }

    /// `E_{P_n}[f(·, ξ)]`.
    pub fn expectation(&self, n: usize, xi: &BoundedSequence) -> Result<f64> {
        Ok(self.measure(n)?.iter().map(|(k, m)| m * Self::integrand(*k, xi.at(*k))).sum())
    }

    /// `ρ(ξ) = sup_{n ≤ N} E_{P_n}[ξ]` for `ξ ≥ 0`.
    pub fn rho(&self, xi: &BoundedSequence) -> Result<f64> {
        let mut best: f64 = 0.0;
        for n in 1..=self.truncation {
            best = best.max(self.measure(n)?.iter().map(|(k, m)| m * xi.at(*k)).sum());
        }
        Ok(best)
    }

    /// `h(ξ(n)) ≤ E_{P_n}[f(·, ξ)] ≤ h(ξ(1)) + h(ξ(n))` for every `n ≤ N`.
    pub fn sandwich_holds(&self, xi: &BoundedSequence) -> Result<bool> {
        for n in 1..=self.truncation {
            let e = self.expectation(n, xi)?;
            let (a, b) = (h(xi.at(1)), h(xi.at(n)));
            if !(b <= e && e <= a + b) {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Named growth profiles for sequence tails.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Growth {
    Linear,
    Sqrt,
    Log,
    Reciprocal,
}

impl Growth {
    fn at(self, n: usize) -> f64 {
        let x = n as f64;
        match self {
            Growth::Linear => x,
            Growth::Sqrt => x.sqrt(),
            Growth::Log => x.ln(),
            Growth::Reciprocal => 1.0 / x,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Tail {
    Constant { value: f64 },
    /// Repeats `values` starting right after the prefix.
    Periodic { values: Vec<f64> },
    /// `offset + scale·φ(n)`.
    Formula { growth: Growth, scale: f64, offset: f64 },
}

/// A sequence given by a finite prefix `ξ(1..=L)` and a tail rule for
/// `n > L`. Suprema, limits and limsups are read off the rule exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundedSequence {
    #[serde(default)]
    pub prefix: Vec<f64>,
    pub tail: Tail,
}

impl BoundedSequence {
    pub fn new(prefix: Vec<f64>, tail: Tail) -> Result<Self> {
        let s = BoundedSequence { prefix, tail };
        s.validate()?;
        Ok(s)
    }

    pub fn constant(c: f64) -> Self {
        BoundedSequence { prefix: vec![], tail: Tail::Constant { value: c } }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |v: &f64| v.is_finite();
        let ok = self.prefix.iter().all(finite)
            && match &self.tail {
                Tail::Constant { value } => value.is_finite(),
                Tail::Periodic { values } => !values.is_empty() && values.iter().all(finite),
                Tail::Formula { scale, offset, .. } => scale.is_finite() && offset.is_finite(),
            };
        if ok {
            Ok(())
        } else {
            Err(Error::Precondition("sequence rule needs finite entries and a nonempty period".into()))
        }
    }

    /// `ξ(n)`, `n ≥ 1`.
    pub fn at(&self, n: usize) -> f64 {
        assert!(n >= 1, "sequences are indexed from 1");
        let l = self.prefix.len();
        if n <= l {
            return self.prefix[n - 1];
        }
        match &self.tail {
            Tail::Constant { value } => *value,
            Tail::Periodic { values } => values[(n - l - 1) % values.len()],
            Tail::Formula { growth, scale, offset } => offset + scale * growth.at(n),
        }
    }

    fn unbounded(&self) -> bool {
        matches!(self.tail, Tail::Formula { growth, scale, .. } if growth != Growth::Reciprocal && scale != 0.0)
    }

    pub fn is_bounded(&self) -> bool {
        !self.unbounded()
    }

    /// Limits of `ξ(n)` along the subsequences the tail rule distinguishes.
    pub fn limit_points(&self) -> Vec<f64> {
        match &self.tail {
            Tail::Constant { value } => vec![*value],
            Tail::Periodic { values } => values.clone(),
            Tail::Formula { growth: Growth::Reciprocal, offset, .. } => vec![*offset],
            Tail::Formula { scale, offset, .. } => {
                if *scale > 0.0 {
                    vec![f64::INFINITY]
                } else if *scale < 0.0 {
                    vec![f64::NEG_INFINITY]
                } else {
                    vec![*offset]
                }
            }
        }
    }

    pub fn limsup(&self) -> f64 {
        self.limit_points().into_iter().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn liminf(&self) -> f64 {
        self.limit_points().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// `sup_n |ξ(n)|`, `+∞` for unbounded rules.
    pub fn sup_norm(&self) -> f64 {
        if self.unbounded() {
            return f64::INFINITY;
        }
        let l = self.prefix.len();
        let pre = self.prefix.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let tail = match &self.tail {
            Tail::Constant { value } => value.abs(),
            Tail::Periodic { values } => values.iter().fold(0.0f64, |a, v| a.max(v.abs())),
            Tail::Formula { offset, .. } => offset.abs().max(self.at(l + 1).abs()),
        };
        pre.max(tail)
    }

    fn require_bounded(&self) -> Result<()> {
        self.validate()?;
        if self.unbounded() {
            return Err(Error::Precondition("sequence is not bounded".into()));
        }
        Ok(())
    }

    /// Indices `1..=upto` at which a supremum of a function of `(n, ξ(n))`
    /// can occur: the prefix, and for constant or periodic tails only the
    /// first and last occurrence of each tail value (the dependence on `n`
    /// is monotone there); every index otherwise.
    fn candidate_indices(&self, upto: usize) -> Vec<usize> {
        let l = self.prefix.len().min(upto);
        let mut out: Vec<usize> = (1..=l).collect();
        if upto <= l {
            return out;
        }
        let first = l + 1;
        match &self.tail {
            Tail::Constant { .. } => {
                out.push(first);
                out.push(upto);
            }
            Tail::Periodic { values } => {
                let p = values.len();
                for phase in 0..p {
                    let start = first + phase;
                    if start > upto {
                        break;
                    }
                    out.push(start);
                    out.push(start + (upto - start) / p * p);
                }
            }
            Tail::Formula { .. } => out.extend(first..=upto),
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

fn sup_over(indices: &[usize], mut g: impl FnMut(usize) -> f64) -> f64 {
    indices.iter().fold(f64::NEG_INFINITY, |a, n| a.max(g(*n)))
}

/// Truncated and untruncated values of the robust functional.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CounterexampleValue {
    /// `sup_{n ≤ N} E_{P_n}[f(·, ξ)]`.
    pub truncated: f64,
    /// The supremum over all `n`.
    pub full: f64,
    /// `2‖ξ‖_∞ e^{‖ξ‖_∞}`.
    pub bound: f64,
}

/// `I(ξ) = sup_n ((1 − 1/n)h(ξ(1)) + h(ξ(n)))`, over `n ≤ N` and over all
/// `n` (exact enumeration of the candidate indices plus the tail limit).
#[allow(non_snake_case)]
pub fn I_counterexample(m: &SequenceModel, xi: &BoundedSequence) -> Result<CounterexampleValue> {
    xi.require_bounded()?;
    let h1 = h(xi.at(1));
    let g = |n: usize| (1.0 - 1.0 / n as f64) * h1 + h(xi.at(n));
    let truncated = sup_over(&xi.candidate_indices(m.truncation), g);
    let reach = xi.prefix.len() + ENUMERATION_WINDOW;
    let limit = xi.limit_points().iter().fold(f64::NEG_INFINITY, |a, p| a.max(h1 + h(*p)));
    let full = sup_over(&xi.candidate_indices(reach), g).max(limit);
    let s = xi.sup_norm();
    Ok(CounterexampleValue { truncated, full, bound: 2.0 * s * s.exp() })
}

/// `sup_n E_{P_n}[f(·, ξ) 1{f(·, ξ) ≥ T}]`
/// `= sup_n ((1 − 1/n)h(ξ(1))1{h(ξ(1)) ≥ T} + h(ξ(n))1{n h(ξ(n)) ≥ T})`
/// over all `n`.
pub fn tail_functional(xi: &BoundedSequence, threshold: f64) -> Result<f64> {
    xi.require_bounded()?;
    if !(threshold > 0.0) {
        return Err(Error::Precondition("threshold must be positive".into()));
    }
    let h1 = h(xi.at(1));
    let a = if h1 >= threshold { h1 } else { 0.0 };
    let g = |n: usize| {
        let v = h(xi.at(n));
        let charged = if n as f64 * v >= threshold { v } else { 0.0 };
        if n == 1 {
            charged
        } else {
            (1.0 - 1.0 / n as f64) * a + charged
        }
    };
    // along a subsequence with ξ(n) → p > 0 the indicator is eventually 1,
    // and for p ≤ 0 the charged term vanishes anyway
    let limit = xi.limit_points().iter().fold(f64::NEG_INFINITY, |acc, p| acc.max(a + h(*p)));
    let reach = xi.prefix.len() + ENUMERATION_WINDOW;
    let mut indices = xi.candidate_indices(reach);
    if !matches!(xi.tail, Tail::Formula { .. }) {
        // the indicator switches where n h(ξ(n)) crosses T, so the
        // first admissible index of each tail value is a candidate too
        let l = xi.prefix.len();
        let values = xi.limit_points();
        for (phase, v) in values.iter().enumerate() {
            let hv = h(*v);
            if hv > 0.0 {
                let need = (threshold / hv).ceil() as usize;
                let p = values.len();
                let start = l + 1 + phase;
                let k = if need > start { (need - start).div_ceil(p) } else { 0 };
                indices.push(start + k * p);
            }
        }
    }
    Ok(sup_over(&indices, g).max(limit))
}

/// Sweep of the tail functional over growing thresholds.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LimitCheck {
    pub thresholds: Vec<f64>,
    pub values: Vec<f64>,
    /// `limsup_n h(ξ(n))`.
    pub limit: f64,
    /// `|value − limit|` at the largest threshold.
    pub error: f64,
    pub converged: bool,
}

/// Evaluates the tail functional at `T = 10^k`, `k = 0..=8`, and compares the
/// last value with `limsup_n h(ξ(n))`.
pub fn limit_check(xi: &BoundedSequence) -> Result<LimitCheck> {
    let thresholds: Vec<f64> = (0..=8).map(|k| 10f64.powi(k)).collect();
    let values = thresholds.iter().map(|t| tail_functional(xi, *t)).collect::<Result<Vec<_>>>()?;
    let limit = h(xi.limsup());
    let error = (values.last().unwrap() - limit).abs();
    Ok(LimitCheck { thresholds, values, limit, error, converged: error <= 1e-6 })
}

/// `limsup_n ξ(n) ≤ 0`, read off the rule.
#[allow(non_snake_case)]
pub fn D_membership(xi: &BoundedSequence) -> Result<bool> {
    xi.require_bounded()?;
    Ok(xi.limsup() <= 0.0)
}

/// `sup_{x ≥ 0} x(w − eˣ)`: zero for `w ≤ 1`, otherwise attained at the
/// root of `eˣ(1 + x) = w`.
pub fn singular_conjugate(w: f64) -> Result<f64> {
    Ok(singular_maximizer(w)?.1)
}

/// Maximizer and value of `x ↦ x(w − eˣ)` on `x ≥ 0`.
pub fn singular_maximizer(w: f64) -> Result<(f64, f64)> {
    if !(w >= 0.0) || !w.is_finite() {
        return Err(Error::Precondition("singular mass must be finite and nonnegative".into()));
    }
    if w <= 1.0 {
        return Ok((0.0, 0.0));
    }
    // eˣ(1 + x) is convex increasing and exceeds w at ln w, so Newton from
    // there decreases monotonically to the root
    let mut x = w.ln();
    for _ in 0..100 {
        let e = x.exp();
        let step = (e * (1.0 + x) - w) / (e * (2.0 + x));
        x -= step;
        if step.abs() <= 1e-15 * (1.0 + x) {
            break;
        }
    }
    let x = x.max(0.0);
    Ok((x, x * (w - x.exp())))
}

/// Lower and upper estimates of the singular conjugate at truncation `N`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TruncationCheck {
    pub w: f64,
    pub truncation: usize,
    pub closed_form: f64,
    /// `max_x (w x − I_N(ξ_x))` over `N` grid points, `ξ_x = (0, x, x, …)`.
    pub lower: f64,
    /// Maximum over grid cells of the tangent-line bound on
    /// `s ↦ s(w − eˢ)`, which is concave.
    pub upper: f64,
    pub gap: f64,
    pub brackets: bool,
}

/// Brackets [`singular_conjugate`] using `N` grid points on `[0, ln w + 1]`:
/// the test vectors `(0, x, x, …)`, on which a singular functional of mass
/// `w` acts as `w x`, give lower bounds through the truncated model, and the
/// concavity of `s(w − eˢ)` gives an upper bound.
pub fn truncation_check(w: f64, truncation: usize) -> Result<TruncationCheck> {
    let closed_form = singular_conjugate(w)?;
    let model = SequenceModel::new(truncation)?;
    if truncation < 2 {
        return Err(Error::Precondition("truncation must be at least 2".into()));
    }
    let top = w.max(1.0).ln() + 1.0;
    let xs: Vec<f64> = (0..truncation).map(|k| top * k as f64 / (truncation - 1) as f64).collect();
    let mut lower = f64::NEG_INFINITY;
    for x in &xs {
        let xi = BoundedSequence { prefix: vec![0.0], tail: Tail::Constant { value: *x } };
        lower = lower.max(w * x - I_counterexample(&model, &xi)?.truncated);
    }
    let phi = |s: f64| s * (w - s.exp());
    let dphi = |s: f64| w - s.exp() * (1.0 + s);
    let mut upper = f64::NEG_INFINITY;
    for c in xs.windows(2) {
        let (a, b) = (c[0], c[1]);
        let (fa, fb, da, db) = (phi(a), phi(b), dphi(a), dphi(b));
        let cell = if da <= 0.0 {
            fa
        } else if db >= 0.0 {
            fb
        } else {
            // tangents at a and b meet inside the cell
            let s = ((fb - db * b) - (fa - da * a)) / (da - db);
            fa + da * (s.clamp(a, b) - a)
        };
        upper = upper.max(cell);
    }
    let gap = upper - lower;
    let slack = 1e-12 * (1.0 + closed_form.abs());
    Ok(TruncationCheck {
        w,
        truncation,
        closed_form,
        lower,
        upper,
        gap,
        brackets: lower <= closed_form + slack && closed_form <= upper + slack,
    })
}

/// `sup_n E_{P_n}[ξ 1{ξ > K}]` over a sweep of `K`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UiScan {
    pub levels: Vec<f64>,
    pub values: Vec<f64>,
    /// Limit of the values as `K → ∞`: `lim ξ(n)/n`, zero for bounded rules.
    pub limit: f64,
    pub uniformly_integrable: bool,
}

/// Tail expectations at `K = 10^k`, `k = 0..=4`, for a nonnegative rule.
pub fn ui_criterion_scan(xi: &BoundedSequence) -> Result<UiScan> {
    xi.validate()?;
    if xi.prefix.iter().any(|v| *v < 0.0) || xi.liminf() < 0.0 || (1..=xi.prefix.len() + 1).any(|n| xi.at(n) < 0.0) {
        return Err(Error::Precondition("scan needs a nonnegative sequence".into()));
    }
    let limit = match xi.tail {
        Tail::Formula { growth: Growth::Linear, scale, .. } => scale.max(0.0),
        _ => 0.0,
    };
    let levels: Vec<f64> = (0..=4).map(|k| 10f64.powi(k)).collect();
    let l = xi.prefix.len();
    let x1 = xi.at(1);
    let mut values = Vec::with_capacity(levels.len());
    for k in &levels {
        let a = if x1 > *k { x1 } else { 0.0 };
        let g = |n: usize| {
            let v = xi.at(n);
            let charged = if v > *k { v / n as f64 } else { 0.0 };
            if n == 1 {
                charged
            } else {
                (1.0 - 1.0 / n as f64) * a + charged
            }
        };
        let mut indices = xi.candidate_indices(l + ENUMERATION_WINDOW);
        if let Tail::Formula { growth, scale, offset } = xi.tail {
            // first index past the level, where ξ(n)/n is largest
            if scale > 0.0 && growth != Growth::Reciprocal {
                let r = (k - offset) / scale;
                let n0 = match growth {
                    Growth::Linear => r,
                    Growth::Sqrt => r.max(0.0).powi(2),
                    Growth::Log => r.exp(),
                    Growth::Reciprocal => unreachable!(),
                };
                if n0.is_finite() && n0 < 1e15 {
                    let n0 = n0.floor().max(1.0) as usize;
                    indices.extend([n0, n0 + 1, n0 + 2].into_iter().filter(|n| *n > l));
                }
            }
        }
        values.push(sup_over(&indices, g).max(a + limit));
    }
    Ok(UiScan { levels, values, limit, uniformly_integrable: limit == 0.0 })
}

/// A named sequence with its membership verdicts.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MembershipRow {
    pub name: String,
    pub limsup: f64,
    pub in_regular_domain: bool,
    pub tail_limit: f64,
    pub value: f64,
}

/// Sequences exercising each tail rule.
pub fn rule_corpus() -> Vec<(String, BoundedSequence)> {
    let formula = |growth, scale, offset| Tail::Formula { growth, scale, offset };
    vec![
        ("zero".into(), BoundedSequence::constant(0.0)),
        ("one".into(), BoundedSequence::constant(1.0)),
        ("minus_one".into(), BoundedSequence::constant(-1.0)),
        ("first_only".into(), BoundedSequence { prefix: vec![2.0], tail: Tail::Constant { value: 0.0 } }),
        ("alternating".into(), BoundedSequence { prefix: vec![], tail: Tail::Periodic { values: vec![0.0, 1.0] } }),
        ("decaying".into(), BoundedSequence { prefix: vec![0.5], tail: formula(Growth::Reciprocal, 3.0, 0.0) }),
        (
            "rising_to_half".into(),
            BoundedSequence { prefix: vec![], tail: formula(Growth::Reciprocal, -1.0, 0.5) },
        ),
        (
            "negative_period".into(),
            BoundedSequence { prefix: vec![1.0, 2.0], tail: Tail::Periodic { values: vec![-1.0, 0.0, -0.5] } },
        ),
    ]
}

pub fn membership_table(m: &SequenceModel, corpus: &[(String, BoundedSequence)]) -> Result<Vec<MembershipRow>> {
    corpus
        .iter()
        .map(|(name, xi)| {
            Ok(MembershipRow {
                name: name.clone(),
                limsup: xi.limsup(),
                in_regular_domain: D_membership(xi)?,
                tail_limit: limit_check(xi)?.values.last().copied().unwrap_or(0.0),
                value: I_counterexample(m, xi)?.full,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tail(growth: Growth, scale: f64, offset: f64) -> Tail {
        Tail::Formula { growth, scale, offset }
    }

    #[test]
    fn measures_are_probabilities() {
        let m = SequenceModel::new(50).unwrap();
        let p = m.reference_weights();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15 && p.iter().all(|v| *v > 0.0));
        for n in 1..=50 {
            assert!((m.measure(n).unwrap().iter().map(|x| x.1).sum::<f64>() - 1.0).abs() < 1e-15);
        }
        assert!(m.measure(51).is_err());
    }

    #[test]
    fn zero_and_constant_values() {
        let m = SequenceModel::new(1000).unwrap();
        let z = I_counterexample(&m, &BoundedSequence::constant(0.0)).unwrap();
        assert_eq!((z.truncated, z.full), (0.0, 0.0));
        let c = 0.7f64;
        let v = I_counterexample(&m, &BoundedSequence::constant(c)).unwrap();
        let hc = c * c.exp();
        assert!((v.truncated - (2.0 - 1e-3) * hc).abs() < 1e-14);
        assert!((v.full - 2.0 * hc).abs() < 1e-14);
        assert!(v.full <= v.bound + 1e-14);
    }

    #[test]
    fn first_coordinate_only_is_attained_by_the_first_measure() {
        // P_1 puts all its mass on atom 1, where f = h
        let m = SequenceModel::new(100).unwrap();
        let xi = BoundedSequence { prefix: vec![1.5], tail: Tail::Constant { value: 0.0 } };
        let v = I_counterexample(&m, &xi).unwrap();
        assert_eq!(v.truncated, h(1.5));
        assert_eq!(v.full, h(1.5));
    }

    #[test]
    fn candidate_indices_match_full_enumeration() {
        let m = SequenceModel::new(300).unwrap();
        let seqs = [
            BoundedSequence { prefix: vec![0.3, -1.0, 2.0], tail: Tail::Periodic { values: vec![0.5, 1.2, -0.4] } },
            BoundedSequence { prefix: vec![1.0], tail: Tail::Constant { value: 0.2 } },
        ];
        for xi in &seqs {
            let brute = (1..=300).map(|n| m.expectation(n, xi).unwrap()).fold(f64::NEG_INFINITY, f64::max);
            // (1/n)·n·h rounds differently from h
            assert!((I_counterexample(&m, xi).unwrap().truncated - brute).abs() < 1e-13 * brute);
        }
    }

    #[test]
    fn truncation_is_monotone_and_sandwiched() {
        let xi = BoundedSequence { prefix: vec![0.4], tail: tail(Growth::Reciprocal, 2.0, 0.3) };
        let mut prev = f64::NEG_INFINITY;
        for n in [10, 100, 1000] {
            let m = SequenceModel::new(n).unwrap();
            let v = I_counterexample(&m, &xi).unwrap();
            assert!(v.truncated >= prev && v.truncated <= v.full);
            prev = v.truncated;
            assert!(m.sandwich_holds(&xi).unwrap());
        }
    }

    #[test]
    fn tail_limits() {
        assert_eq!(limit_check(&BoundedSequence::constant(0.0)).unwrap().values.last(), Some(&0.0));
        let one = limit_check(&BoundedSequence::constant(1.0)).unwrap();
        assert!(one.converged && (one.limit - std::f64::consts::E).abs() < 1e-15);
        let alt = BoundedSequence { prefix: vec![], tail: Tail::Periodic { values: vec![0.0, 1.0] } };
        assert!(limit_check(&alt).unwrap().converged);
        assert!(!D_membership(&alt).unwrap());
        let neg = BoundedSequence { prefix: vec![3.0], tail: tail(Growth::Reciprocal, -1.0, 0.0) };
        assert!(D_membership(&neg).unwrap());
        assert_eq!(limit_check(&neg).unwrap().values.last(), Some(&0.0));
    }

    #[test]
    fn strict_inclusion() {
        let one = BoundedSequence::constant(1.0);
        assert!(!D_membership(&one).unwrap());
        assert!(I_counterexample(&SequenceModel::default(), &one).unwrap().full.is_finite());
        let unbounded = BoundedSequence { prefix: vec![], tail: tail(Growth::Log, 1.0, 0.0) };
        assert!(D_membership(&unbounded).is_err());
    }

    #[test]
    fn singular_conjugate_zero_iff_small_mass() {
        for w in [0.0, 0.5, 1.0] {
            assert_eq!(singular_conjugate(w).unwrap(), 0.0);
        }
        let mut prev = 0.0;
        for w in [1.0 + 1e-9, 2.0, 2.0 * std::f64::consts::E, 10.0, 1e3, 1e6] {
            let v = singular_conjugate(w).unwrap();
            assert!(v > prev);
            prev = v;
        }
        let (x, v) = singular_maximizer(5.0).unwrap();
        assert!((x.exp() * (1.0 + x) - 5.0).abs() < 1e-12);
        assert!((v - x * x * x.exp()).abs() < 1e-12);
    }

    #[test]
    fn truncation_brackets_closed_form() {
        for n in [100, 1000] {
            let c = truncation_check(5.0, n).unwrap();
            assert!(c.brackets, "{c:?}");
        }
        let c = truncation_check(0.5, 100).unwrap();
        assert_eq!(c.closed_form, 0.0);
        assert!(c.brackets);
    }

    #[test]
    fn ui_scan() {
        let one = ui_criterion_scan(&BoundedSequence::constant(1.0)).unwrap();
        assert!(one.uniformly_integrable && one.values[1..].iter().all(|v| *v == 0.0));
        let lin = ui_criterion_scan(&BoundedSequence { prefix: vec![], tail: tail(Growth::Linear, 1.0, 0.0) }).unwrap();
        assert!(!lin.uniformly_integrable);
        assert!(lin.values.iter().all(|v| (*v - 1.0).abs() < 1e-12), "{:?}", lin.values);
        let sq = ui_criterion_scan(&BoundedSequence { prefix: vec![], tail: tail(Growth::Sqrt, 1.0, 0.0) }).unwrap();
        assert!(sq.uniformly_integrable);
        for (k, v) in sq.levels.iter().zip(&sq.values).skip(1) {
            // sup over n > K² of √n/n
            let n = (k * k).floor() + 1.0;
            assert!((v - n.sqrt() / n).abs() < 1e-12, "K={k} v={v}");
        }
    }
}
