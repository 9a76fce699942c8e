//! Seeded random instances: spaces, densities, penalties and convex
//! piecewise-linear-quadratic functions. Used by the property tests and the
//! CLI fuzz suites; every generator is deterministic given the RNG state.

use rand::{Rng, RngExt};

use crate::convex1d::{Piece, PiecewiseConvexFn};
use crate::error::Result;
use crate::penalty::Penalty;
use crate::space::{Density, FiniteSpace};

/// Random space with `m` atoms; weights bounded away from zero.
pub fn space<R: Rng + ?Sized>(rng: &mut R, m: usize) -> FiniteSpace {
    let masses: Vec<f64> = (0..m).map(|_| rng.random_range(0.2..1.0)).collect();
    FiniteSpace::from_masses(&masses).expect("positive masses")
}

/// Random strictly positive density.
pub fn density<R: Rng + ?Sized>(rng: &mut R, s: &FiniteSpace) -> Density {
    let probs: Vec<f64> = (0..s.len()).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = probs.iter().sum();
    let probs: Vec<f64> = probs.iter().map(|p| p / total).collect();
    Density::from_probabilities(s, &probs).expect("valid probabilities")
}

/// Which penalty family a random instance uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Dirac,
    Polyhedral,
    Entropic,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Dirac, Family::Polyhedral, Family::Entropic];

    pub fn name(self) -> &'static str {
        match self {
            Family::Dirac => "dirac",
            Family::Polyhedral => "polyhedral",
            Family::Entropic => "entropic",
        }
    }
}

/// Random penalty of the given family. Polyhedral penalties get two or three
/// vertices, one of which is the reference measure so that sensitivity holds.
pub fn penalty<R: Rng + ?Sized>(rng: &mut R, s: &FiniteSpace, family: Family) -> Penalty {
    match family {
        Family::Dirac => Penalty::Dirac(density(rng, s)),
        Family::Entropic => Penalty::Entropic,
        Family::Polyhedral => {
            let k = rng.random_range(1..=2);
            let mut vertices = vec![Density::reference(s)];
            vertices.extend((0..k).map(|_| density(rng, s)));
            Penalty::polyhedral(s, vertices).expect("valid vertices")
        }
    }
}

/// Shape constraints for random convex functions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlqShape {
    pub max_breakpoints: usize,
    /// Domain is all of `ℝ`.
    pub finite: bool,
    /// `f(x) → ∞` as `|x| → ∞`.
    pub coercive: bool,
    /// Probability that a piece is quadratic rather than affine.
    pub quadratic_prob: f64,
}

impl Default for PlqShape {
    fn default() -> Self {
        PlqShape { max_breakpoints: 4, finite: false, coercive: false, quadratic_prob: 0.5 }
    }
}

/// Random closed convex PLQ function.
pub fn plq<R: Rng + ?Sized>(rng: &mut R, shape: PlqShape) -> PiecewiseConvexFn {
    loop {
        if let Ok(f) = try_plq(rng, shape) {
            return f;
        }
    }
}

fn try_plq<R: Rng + ?Sized>(rng: &mut R, shape: PlqShape) -> Result<PiecewiseConvexFn> {
    let k = rng.random_range(0..=shape.max_breakpoints);
    let mut bps: Vec<f64> = (0..k).map(|_| rng.random_range(-3.0..3.0)).collect();
    bps.sort_by(f64::total_cmp);
    bps.dedup_by(|a, b| (*a - *b).abs() < 1e-2);
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    if !shape.finite {
        if rng.random_bool(0.3) {
            lo = bps.first().copied().unwrap_or(0.0) - rng.random_range(0.2..2.0);
        }
        if rng.random_bool(0.3) {
            hi = bps.last().copied().unwrap_or(0.0) + rng.random_range(0.2..2.0);
        }
    }
    let quad = |rng: &mut R| {
        if rng.random_bool(shape.quadratic_prob) {
            rng.random_range(0.05..1.5)
        } else {
            0.0
        }
    };
    let n = bps.len() + 1;
    let mut pieces = Vec::with_capacity(n);
    let mut a = quad(rng);
    let anchor = bps.first().copied().unwrap_or(0.0);
    // first piece: random slope and value at `anchor`
    let mut slope = rng.random_range(-3.0..1.0);
    if shape.coercive && lo == f64::NEG_INFINITY && a == 0.0 && slope >= 0.0 {
        slope = -rng.random_range(0.2..2.0);
    }
    let mut b = slope - 2.0 * a * anchor;
    let mut c = rng.random_range(-1.0..1.0) - a * anchor * anchor - b * anchor;
    pieces.push(Piece::new(a, b, c));
    for &x in &bps {
        let prev = *pieces.last().unwrap();
        let right_slope = prev.slope(x) + rng.random_range(0.0..2.0);
        a = quad(rng);
        b = right_slope - 2.0 * a * x;
        c = prev.value(x) - a * x * x - b * x;
        pieces.push(Piece::new(a, b, c));
    }
    if shape.coercive && hi == f64::INFINITY {
        let x = bps.last().copied().unwrap_or(anchor);
        let last = pieces.last_mut().unwrap();
        if last.a == 0.0 && last.b <= 0.0 {
            // bend upward, keeping value and slope at `x`
            let old = *last;
            last.a = rng.random_range(0.05..1.0);
            last.b = old.slope(x) - 2.0 * last.a * x;
            last.c = old.value(x) - last.a * x * x - last.b * x;
        }
    }
    PiecewiseConvexFn::new(lo, hi, bps, pieces)
}

/// Random finite, coercive PLQ function with at most `max_breakpoints`
/// kinks: the integrands used by the duality fuzz suites.
pub fn coercive_plq<R: Rng + ?Sized>(rng: &mut R, max_breakpoints: usize) -> PiecewiseConvexFn {
    plq(rng, PlqShape { max_breakpoints, finite: true, coercive: true, quadratic_prob: 0.5 })
}

/// Random vector with entries in `[lo, hi)`.
pub fn vector<R: Rng + ?Sized>(rng: &mut R, m: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..m).map(|_| rng.random_range(lo..hi)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn coercive_functions_grow_both_ways() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let f = coercive_plq(&mut rng, 4);
            assert!(f.is_finite_everywhere());
            let (l, r) = f.recession_slopes();
            assert!(l.value() < 0.0 && r.value() > 0.0, "{f:?}");
        }
    }

    #[test]
    fn generators_are_deterministic() {
        let a = plq(&mut ChaCha8Rng::seed_from_u64(3), PlqShape::default());
        let b = plq(&mut ChaCha8Rng::seed_from_u64(3), PlqShape::default());
        assert_eq!(a, b);
    }
}
