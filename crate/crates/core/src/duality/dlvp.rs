//! Uniform-integrability certificates: a coercive convex `g` with
//! `sup_η E_P[g(|η|)] ≤ 1` over a finite family, and the spike family whose
//! truncations defeat every fixed `g`.

use serde::Serialize;

use crate::convex1d::{Piece, PiecewiseConvexFn};
use crate::error::{Error, Result};
use crate::penalty::Penalty;
use crate::space::FiniteSpace;

#[derive(Clone, Debug, Serialize)]
pub struct DlvpCertificate {
    /// Even, convex, superlinear.
    pub g: PiecewiseConvexFn,
    #[serde(skip)]
    pub penalty: Penalty,
    /// `max_η E[g(|η|)]` over the family.
    pub bound: f64,
    /// `a_k`, `k = 1..=K`: the slope of `g` on `[a_k, a_{k+1}]` is `k`.
    pub thresholds: Vec<f64>,
}

/// `max_η E[|η| 1{|η| > a}]`.
fn tail(space: &FiniteSpace, family: &[Vec<f64>], a: f64) -> f64 {
    family
        .iter()
        .map(|eta| {
            let cut: Vec<f64> = eta.iter().map(|v| if v.abs() > a { v.abs() } else { 0.0 }).collect();
            space.expect(&cut)
        })
        .fold(0.0, f64::max)
}

/// `max_η E[g(|η|)]`.
pub fn family_bound(g: &PiecewiseConvexFn, space: &FiniteSpace, family: &[Vec<f64>]) -> Result<f64> {
    let mut best: f64 = f64::NEG_INFINITY;
    for eta in family {
        space.check_len(eta.len())?;
        let vals: Vec<f64> = eta.iter().map(|v| g.eval_f64(v.abs())).collect();
        best = best.max(space.expect(&vals));
    }
    Ok(best)
}

/// Builds `g(x) = Σ_k (|x| − a_k)⁺ + ((|x| − a_K)⁺)²` where `a_k` is the
/// smallest value of `|η|` over the family (or `0`) with tail mass at most
/// `2^{−k}`, and `K` is the first index with `a_K = max |η|`. Each term has
/// expectation at most `2^{−k}`, so the bound is below `1`.
pub fn dlvp_certificate(space: &FiniteSpace, family: &[Vec<f64>]) -> Result<DlvpCertificate> {
    if family.is_empty() {
        return Err(Error::Precondition("empty family".into()));
    }
    let mut candidates = vec![0.0];
    for eta in family {
        space.check_len(eta.len())?;
        if eta.iter().any(|v| !v.is_finite()) {
            return Err(Error::Precondition("family members must be finite".into()));
        }
        candidates.extend(eta.iter().map(|v| v.abs()));
    }
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    let top = *candidates.last().unwrap();
    let mut thresholds = Vec::new();
    let mut k = 1;
    loop {
        let level = 0.5f64.powi(k);
        let a = *candidates.iter().find(|a| tail(space, family, **a) <= level).unwrap();
        thresholds.push(a);
        if a == top {
            break;
        }
        k += 1;
    }
    let g = even_certificate(&thresholds)?;
    let penalty = Penalty::reference(space);
    let bound = family_bound(&g, space, family)?;
    Ok(DlvpCertificate { g, penalty, bound, thresholds })
}

fn even_certificate(thresholds: &[f64]) -> Result<PiecewiseConvexFn> {
    let mut ts: Vec<f64> = thresholds.to_vec();
    ts.dedup();
    // slope just right of ts[j] and the value there
    let mut slopes = Vec::with_capacity(ts.len());
    let mut values = Vec::with_capacity(ts.len());
    let mut value = 0.0;
    for (j, t) in ts.iter().enumerate() {
        if j > 0 {
            value += slopes[j - 1] * (t - ts[j - 1]);
        }
        values.push(value);
        slopes.push(thresholds.iter().filter(|a| *a <= t).count() as f64);
    }
    let last = ts.len() - 1;
    let (tl, sl, vl) = (ts[last], slopes[last], values[last]);
    let mut bps = Vec::new();
    let mut pieces = Vec::new();
    pieces.push(Piece::new(1.0, -sl + 2.0 * tl, vl - sl * tl + tl * tl));
    for j in (0..ts.len()).rev() {
        bps.push(-ts[j]);
        if j > 0 {
            pieces.push(Piece::new(0.0, -slopes[j - 1], values[j - 1] - slopes[j - 1] * ts[j - 1]));
        }
    }
    if ts[0] > 0.0 {
        pieces.push(Piece::new(0.0, 0.0, 0.0));
        bps.push(ts[0]);
    }
    for j in 0..ts.len() {
        if j > 0 {
            bps.push(ts[j]);
        }
        if j < last {
            pieces.push(Piece::new(0.0, slopes[j], values[j] - slopes[j] * ts[j]));
        }
    }
    pieces.push(Piece::new(1.0, sl - 2.0 * tl, vl - sl * tl + tl * tl));
    PiecewiseConvexFn::new(f64::NEG_INFINITY, f64::INFINITY, bps, pieces)
}

/// `P(k) ∝ 2^{−k}` on `k = 1..=n` and `η_k = 1_{k}/P(k)`: each member has
/// mean one, but the mass escapes to ever larger values.
pub fn spike_family(n: usize) -> Result<(FiniteSpace, Vec<Vec<f64>>)> {
    if n == 0 {
        return Err(Error::Precondition("spike family needs at least one atom".into()));
    }
    let masses: Vec<f64> = (1..=n).map(|k| 0.5f64.powi(k as i32)).collect();
    let space = FiniteSpace::from_masses(&masses)?;
    let family = (0..n)
        .map(|k| {
            let mut eta = vec![0.0; n];
            eta[k] = 1.0 / space.weights()[k];
            eta
        })
        .collect();
    Ok((space, family))
}
