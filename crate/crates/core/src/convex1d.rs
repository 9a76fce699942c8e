//! Closed proper convex functions on the real line with an exact
//! piecewise-linear-quadratic (PLQ) representation.
//!
//! A [`PiecewiseConvexFn`] is `+∞` outside a closed interval `[lo, hi]`
//! (either end may be infinite) and equals `a·x² + b·x + c` on each
//! interval between consecutive breakpoints. Conjugation maps PLQ functions
//! to PLQ functions exactly, so `legendre` involves no discretization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::{deserialize_f64, serialize_f64, ExtReal};

/// Default cap on the number of pieces of a representation.
pub const DEFAULT_PIECE_CAP: usize = 4096;

const CONTINUITY_TOL: f64 = 1e-9;

/// One quadratic piece `a·x² + b·x + c` with `a ≥ 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Piece {
    pub const fn new(a: f64, b: f64, c: f64) -> Piece {
        Piece { a, b, c }
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        if self.a == 0.0 {
            self.b * x + self.c
        } else {
            (self.a * x + self.b) * x + self.c
        }
    }

    #[inline]
    pub fn slope(&self, x: f64) -> f64 {
        if self.a == 0.0 {
            self.b
        } else {
            2.0 * self.a * x + self.b
        }
    }

    /// Conjugate of a strictly convex quadratic piece.
    fn conjugate_quadratic(&self) -> Piece {
        debug_assert!(self.a > 0.0);
        Piece {
            a: 1.0 / (4.0 * self.a),
            b: -self.b / (2.0 * self.a),
            c: self.b * self.b / (4.0 * self.a) - self.c,
        }
    }
}

/// How a sampled function is continued beyond its outermost knots.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Extension {
    /// `+∞` outside the knot range.
    Restrict,
    /// Continue the first and last chords to `±∞`.
    Linear,
    /// Continue with the given slopes; `left` must not exceed the first chord
    /// slope and `right` must not be below the last one.
    Slopes { left: f64, right: f64 },
}

/// A closed proper convex piecewise-linear-quadratic function on `ℝ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PlqJson", into = "PlqJson")]
pub struct PiecewiseConvexFn {
    lo: f64,
    hi: f64,
    breakpoints: Vec<f64>,
    pieces: Vec<Piece>,
}

impl PiecewiseConvexFn {
    /// Validates and builds a function from its domain, interior breakpoints
    /// and one piece per interval.
    pub fn new(lo: f64, hi: f64, breakpoints: Vec<f64>, pieces: Vec<Piece>) -> Result<Self> {
        Self::new_with_cap(lo, hi, breakpoints, pieces, DEFAULT_PIECE_CAP)
    }

    pub fn new_with_cap(
        lo: f64,
        hi: f64,
        breakpoints: Vec<f64>,
        pieces: Vec<Piece>,
        cap: usize,
    ) -> Result<Self> {
        let f = PiecewiseConvexFn { lo, hi, breakpoints, pieces };
        if f.pieces.len() > cap {
            return Err(Error::RepresentationOverflow { pieces: f.pieces.len(), cap });
        }
        f.validate()?;
        Ok(f)
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidFunction(m));
        if self.lo.is_nan() || self.hi.is_nan() {
            return bad("NaN domain endpoint".into());
        }
        if self.lo > self.hi || self.lo == f64::INFINITY || self.hi == f64::NEG_INFINITY {
            return bad(format!("empty domain [{}, {}]", self.lo, self.hi));
        }
        if self.pieces.len() != self.breakpoints.len() + 1 {
            return bad(format!(
                "{} pieces for {} breakpoints",
                self.pieces.len(),
                self.breakpoints.len()
            ));
        }
        if self.lo == self.hi && !self.breakpoints.is_empty() {
            return bad("a singleton domain has no breakpoints".into());
        }
        for p in &self.pieces {
            if !(p.a.is_finite() && p.b.is_finite() && p.c.is_finite()) {
                return bad(format!("non-finite coefficients {p:?}"));
            }
            if p.a < 0.0 {
                return bad(format!("negative quadratic coefficient {}", p.a));
            }
        }
        let mut prev = self.lo;
        for &x in &self.breakpoints {
            if !x.is_finite() || x <= prev || x >= self.hi {
                return bad(format!("breakpoint {x} out of order or outside ({}, {})", self.lo, self.hi));
            }
            prev = x;
        }
        for (j, &x) in self.breakpoints.iter().enumerate() {
            let (l, r) = (&self.pieces[j], &self.pieces[j + 1]);
            let (vl, vr) = (l.value(x), r.value(x));
            if (vl - vr).abs() > CONTINUITY_TOL * (1.0 + vl.abs().max(vr.abs())) {
                return bad(format!("discontinuity at {x}: {vl} vs {vr}"));
            }
            let (sl, sr) = (l.slope(x), r.slope(x));
            if sl > sr + CONTINUITY_TOL * (1.0 + sl.abs().max(sr.abs())) {
                return bad(format!("slope decreases at {x}: {sl} > {sr}"));
            }
        }
        Ok(())
    }

    pub fn quadratic(a: f64, b: f64, c: f64) -> Result<Self> {
        Self::new(f64::NEG_INFINITY, f64::INFINITY, vec![], vec![Piece::new(a, b, c)])
    }

    pub fn affine(slope: f64, intercept: f64) -> Result<Self> {
        Self::quadratic(0.0, slope, intercept)
    }

    /// Indicator of `[lo, hi]`.
    pub fn indicator(lo: f64, hi: f64) -> Result<Self> {
        Self::new(lo, hi, vec![], vec![Piece::new(0.0, 0.0, 0.0)])
    }

    /// `x ↦ max(left_slope·x, right_slope·x)` shifted to kink at `kink`.
    pub fn kinked(left_slope: f64, right_slope: f64, kink: f64) -> Result<Self> {
        Self::new(
            f64::NEG_INFINITY,
            f64::INFINITY,
            vec![kink],
            vec![
                Piece::new(0.0, left_slope, -left_slope * kink),
                Piece::new(0.0, right_slope, -right_slope * kink),
            ],
        )
    }

    /// Piecewise-linear interpolant through `points` (strictly increasing
    /// abscissae), continued according to `ext`.
    pub fn from_samples(points: &[(f64, f64)], ext: Extension) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidFunction("no sample points".into()));
        }
        if points.iter().any(|&(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::InvalidFunction("non-finite sample".into()));
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidFunction("sample abscissae must increase strictly".into()));
        }
        if points.len() == 1 {
            let (x, y) = points[0];
            return match ext {
                Extension::Restrict => Self::new(x, x, vec![], vec![Piece::new(0.0, 0.0, y)]),
                _ => Err(Error::InvalidFunction("a single sample cannot be extended".into())),
            };
        }
        let mut pieces: Vec<Piece> = points
            .windows(2)
            .map(|w| {
                let s = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
                Piece::new(0.0, s, w[0].1 - s * w[0].0)
            })
            .collect();
        let mut breakpoints: Vec<f64> = points[1..points.len() - 1].iter().map(|p| p.0).collect();
        let (first, last) = (points[0], points[points.len() - 1]);
        let (lo, hi) = match ext {
            Extension::Restrict => (first.0, last.0),
            Extension::Linear => (f64::NEG_INFINITY, f64::INFINITY),
            Extension::Slopes { left, right } => {
                if !(left.is_finite() && right.is_finite()) {
                    return Err(Error::InvalidFunction("extension slopes must be finite".into()));
                }
                breakpoints.insert(0, first.0);
                pieces.insert(0, Piece::new(0.0, left, first.1 - left * first.0));
                breakpoints.push(last.0);
                pieces.push(Piece::new(0.0, right, last.1 - right * last.0));
                (f64::NEG_INFINITY, f64::INFINITY)
            }
        };
        Self::new(lo, hi, breakpoints, pieces)
    }

    /// Piecewise-linear sampler: interpolates `f` at `knots`.
    pub fn sample<F: Fn(f64) -> f64>(f: F, knots: &[f64], ext: Extension) -> Result<Self> {
        let pts: Vec<(f64, f64)> = knots.iter().map(|&x| (x, f(x))).collect();
        Self::from_samples(&pts, ext)
    }

    /// `count` equally spaced knots on `[lo, hi]`.
    pub fn uniform_knots(lo: f64, hi: f64, count: usize) -> Vec<f64> {
        assert!(count >= 2 && lo < hi);
        let step = (hi - lo) / (count - 1) as f64;
        (0..count)
            .map(|i| if i + 1 == count { hi } else { lo + step * i as f64 })
            .collect()
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn piece_count(&self) -> usize {
        self.pieces.len()
    }

    pub fn in_domain(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    /// True when the function is finite on all of `ℝ`.
    pub fn is_finite_everywhere(&self) -> bool {
        self.lo == f64::NEG_INFINITY && self.hi == f64::INFINITY
    }

    fn knot(&self, i: usize) -> f64 {
        if i == 0 {
            self.lo
        } else if i == self.pieces.len() {
            self.hi
        } else {
            self.breakpoints[i - 1]
        }
    }

    #[inline]
    fn left_piece_index(&self, x: f64) -> usize {
        self.breakpoints.partition_point(|&b| b < x)
    }

    #[inline]
    fn right_piece_index(&self, x: f64) -> usize {
        self.breakpoints.partition_point(|&b| b <= x)
    }

    /// `f(x)`, `+∞` outside the domain.
    pub fn eval(&self, x: f64) -> ExtReal {
        ExtReal::from_f64(self.eval_f64(x))
    }

    /// `f(x)` as a float (`+∞` outside the domain). NaN input yields `+∞`.
    #[inline]
    pub fn eval_f64(&self, x: f64) -> f64 {
        if !(x >= self.lo && x <= self.hi) {
            return f64::INFINITY;
        }
        if x.is_infinite() {
            // Only reachable for a finite function evaluated at ±∞.
            return f64::INFINITY;
        }
        self.pieces[self.left_piece_index(x)].value(x)
    }

    /// Left derivative at `x ∈ dom f`; `−∞` at a finite lower domain end.
    pub fn left_derivative(&self, x: f64) -> Option<f64> {
        if !self.in_domain(x) || x.is_infinite() {
            return None;
        }
        if x == self.lo {
            return Some(f64::NEG_INFINITY);
        }
        Some(self.pieces[self.left_piece_index(x)].slope(x))
    }

    /// Right derivative at `x ∈ dom f`; `+∞` at a finite upper domain end.
    pub fn right_derivative(&self, x: f64) -> Option<f64> {
        if !self.in_domain(x) || x.is_infinite() {
            return None;
        }
        if x == self.hi {
            return Some(f64::INFINITY);
        }
        Some(self.pieces[self.right_piece_index(x)].slope(x))
    }

    /// Subdifferential `[f'₋(x), f'₊(x)]` at `x ∈ dom f`.
    pub fn subdifferential(&self, x: f64) -> Option<(f64, f64)> {
        Some((self.left_derivative(x)?, self.right_derivative(x)?))
    }

    /// A finite subgradient at `x`, preferring the left derivative.
    pub fn subgradient(&self, x: f64) -> Option<f64> {
        let (l, r) = self.subdifferential(x)?;
        if l.is_finite() {
            Some(l)
        } else if r.is_finite() {
            Some(r)
        } else {
            // singleton domain: every real is a subgradient
            Some(0.0)
        }
    }

    /// Recession slopes `(lim_{k→−∞} f(k)/k, lim_{k→+∞} f(k)/k)`.
    pub fn recession_slopes(&self) -> (ExtReal, ExtReal) {
        let first = self.pieces[0];
        let last = self.pieces[self.pieces.len() - 1];
        let minus = if self.lo > f64::NEG_INFINITY || first.a > 0.0 {
            ExtReal::NEG_INFINITY
        } else {
            ExtReal::from_f64(first.b)
        };
        let plus = if self.hi < f64::INFINITY || last.a > 0.0 {
            ExtReal::INFINITY
        } else {
            ExtReal::from_f64(last.b)
        };
        (minus, plus)
    }

    /// Leftmost maximizer of `x ↦ x·y − f(x)`, or `None` when the supremum
    /// is not attained. When the maximizers form a half-line unbounded to the
    /// left, its right end is returned.
    pub fn conjugate_maximizer(&self, y: f64) -> Option<f64> {
        if self.lo == self.hi {
            return Some(self.lo);
        }
        let k = self.pieces.len();
        if self.lo.is_finite() && self.pieces[0].slope(self.lo) >= y {
            return Some(self.lo);
        }
        for i in 0..k {
            let p = self.pieces[i];
            let (xl, xr) = (self.knot(i), self.knot(i + 1));
            if p.a > 0.0 {
                let x = (y - p.b) / (2.0 * p.a);
                if x <= xr {
                    return Some(x.max(xl));
                }
            } else if p.b >= y {
                return Some(if xl.is_finite() { xl } else { xr }).filter(|x| x.is_finite());
            }
            if i + 1 < k && self.pieces[i + 1].slope(xr) >= y {
                return Some(xr);
            }
        }
        if self.hi.is_finite() {
            Some(self.hi)
        } else {
            None
        }
    }

    /// Exact Legendre–Fenchel conjugate `f*(y) = sup_x (x·y − f(x))`.
    pub fn legendre(&self) -> Result<Self> {
        self.legendre_with_cap(DEFAULT_PIECE_CAP)
    }

    pub fn legendre_with_cap(&self, cap: usize) -> Result<Self> {
        if self.lo == self.hi {
            let v = self.pieces[0].value(self.lo);
            return Self::new_with_cap(
                f64::NEG_INFINITY,
                f64::INFINITY,
                vec![],
                vec![Piece::new(0.0, self.lo, -v)],
                cap,
            );
        }
        let k = self.pieces.len();
        // Derivative at the left/right end of piece i.
        let d_left = |i: usize| -> f64 {
            let p = self.pieces[i];
            let x = self.knot(i);
            if x == f64::NEG_INFINITY {
                if p.a > 0.0 {
                    f64::NEG_INFINITY
                } else {
                    p.b
                }
            } else {
                p.slope(x)
            }
        };
        let d_right = |i: usize| -> f64 {
            let p = self.pieces[i];
            let x = self.knot(i + 1);
            if x == f64::INFINITY {
                if p.a > 0.0 {
                    f64::INFINITY
                } else {
                    p.b
                }
            } else {
                p.slope(x)
            }
        };
        let supporting_line = |i: usize, x: f64| Piece::new(0.0, x, -self.pieces[i].value(x));

        let mut segments: Vec<(f64, f64, Piece)> = Vec::with_capacity(2 * k + 1);
        if self.lo.is_finite() {
            segments.push((f64::NEG_INFINITY, d_left(0), supporting_line(0, self.lo)));
        }
        for i in 0..k {
            let p = self.pieces[i];
            if p.a > 0.0 {
                segments.push((d_left(i), d_right(i), p.conjugate_quadratic()));
            }
            if i + 1 < k {
                let x = self.knot(i + 1);
                segments.push((d_right(i), d_left(i + 1), supporting_line(i, x)));
            }
        }
        if self.hi.is_finite() {
            segments.push((d_right(k - 1), f64::INFINITY, supporting_line(k - 1, self.hi)));
        }

        let mut kept: Vec<(f64, f64, Piece)> = Vec::with_capacity(segments.len());
        for (start, end, piece) in segments {
            let start = match kept.last() {
                Some(&(_, prev_end, _)) => start.max(prev_end),
                None => start,
            };
            if end > start {
                kept.push((start, end, piece));
            }
        }
        if kept.is_empty() {
            // f is affine on ℝ with slope b: f* is the indicator of {b} shifted by −c.
            let y0 = d_left(0);
            let p0 = self.pieces[0];
            return Self::new_with_cap(y0, y0, vec![], vec![Piece::new(0.0, 0.0, -p0.c)], cap);
        }
        if kept.len() > cap {
            return Err(Error::RepresentationOverflow { pieces: kept.len(), cap });
        }
        let lo = kept[0].0;
        let hi = kept[kept.len() - 1].1;
        let breakpoints = kept[1..].iter().map(|s| s.0).collect();
        let pieces = kept.into_iter().map(|s| s.2).collect();
        Self::new_with_cap(lo, hi, breakpoints, pieces, cap)
    }

    /// Merges adjacent pieces with identical coefficients.
    pub fn normalized(&self) -> Self {
        let same = |p: &Piece, q: &Piece| {
            let tol = 1e-14;
            (p.a - q.a).abs() <= tol * (1.0 + p.a.abs())
                && (p.b - q.b).abs() <= tol * (1.0 + p.b.abs())
                && (p.c - q.c).abs() <= tol * (1.0 + p.c.abs())
        };
        let mut breakpoints = Vec::new();
        let mut pieces = vec![self.pieces[0]];
        for (j, &x) in self.breakpoints.iter().enumerate() {
            let next = self.pieces[j + 1];
            if !same(pieces.last().unwrap(), &next) {
                breakpoints.push(x);
                pieces.push(next);
            }
        }
        PiecewiseConvexFn { lo: self.lo, hi: self.hi, breakpoints, pieces }
    }

    /// `x ↦ f(w·x)` for `w > 0`.
    pub fn scale_argument(&self, w: f64) -> Result<Self> {
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::Precondition(format!("argument scale must be positive, got {w}")));
        }
        let pieces = self
            .pieces
            .iter()
            .map(|p| Piece::new(p.a * w * w, p.b * w, p.c))
            .collect();
        let breakpoints = self.breakpoints.iter().map(|b| b / w).collect();
        Self::new(self.lo / w, self.hi / w, breakpoints, pieces)
    }

    /// `x ↦ f(x + s)`.
    pub fn shift_argument(&self, s: f64) -> Result<Self> {
        let pieces = self
            .pieces
            .iter()
            .map(|p| Piece::new(p.a, 2.0 * p.a * s + p.b, p.a * s * s + p.b * s + p.c))
            .collect();
        let breakpoints = self.breakpoints.iter().map(|b| b - s).collect();
        Self::new(self.lo - s, self.hi - s, breakpoints, pieces)
    }

    /// `x ↦ f(x) + s·x`.
    pub fn add_linear(&self, s: f64) -> Result<Self> {
        let pieces = self.pieces.iter().map(|p| Piece::new(p.a, p.b + s, p.c)).collect();
        Self::new(self.lo, self.hi, self.breakpoints.clone(), pieces)
    }

    /// `x ↦ f(x) + c`.
    pub fn add_constant(&self, c: f64) -> Result<Self> {
        let pieces = self.pieces.iter().map(|p| Piece::new(p.a, p.b, p.c + c)).collect();
        Self::new(self.lo, self.hi, self.breakpoints.clone(), pieces)
    }

    /// `x ↦ λ·f(x)` for `λ > 0`.
    pub fn scale_value(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Precondition(format!("value scale must be positive, got {lambda}")));
        }
        let pieces = self
            .pieces
            .iter()
            .map(|p| Piece::new(p.a * lambda, p.b * lambda, p.c * lambda))
            .collect();
        Self::new(self.lo, self.hi, self.breakpoints.clone(), pieces)
    }

    /// `x ↦ f(−x)`.
    pub fn mirror(&self) -> Result<Self> {
        let pieces = self.pieces.iter().rev().map(|p| Piece::new(p.a, -p.b, p.c)).collect();
        let breakpoints = self.breakpoints.iter().rev().map(|b| -b).collect();
        Self::new(-self.hi, -self.lo, breakpoints, pieces)
    }

    /// Largest absolute difference of the two functions over `points`;
    /// points where both are `+∞` count as equal, where exactly one is `+∞`
    /// the difference is infinite.
    pub fn max_abs_diff(&self, other: &PiecewiseConvexFn, points: &[f64]) -> f64 {
        points
            .iter()
            .map(|&x| {
                let (u, v) = (self.eval_f64(x), other.eval_f64(x));
                if u == f64::INFINITY && v == f64::INFINITY {
                    0.0
                } else {
                    (u - v).abs()
                }
            })
            .fold(0.0, f64::max)
    }
}

/// `y/z`, moved onto a finite end of the domain when it misses it by a few
/// units of rounding, as happens for `y = z·b` computed in floating point.
fn ratio_in_domain(fstar: &PiecewiseConvexFn, y: f64, z: f64) -> f64 {
    let t = y / z;
    let (lo, hi) = fstar.domain();
    let near = |edge: f64| (t - edge).abs() <= 8.0 * f64::EPSILON * edge.abs().max(1.0);
    if t > hi && near(hi) {
        hi
    } else if t < lo && near(lo) {
        lo
    } else {
        t
    }
}

/// Perspective of a conjugate section:
/// `z·f*(y/z)` for `z > 0`, `y·a±` for `z = 0, y ≷ 0`, and `0` at the origin.
/// Negative `z` lies outside the domain and yields `+∞`.
pub fn perspective(fstar: &PiecewiseConvexFn, y: f64, z: f64) -> ExtReal {
    if z > 0.0 {
        return fstar.eval(ratio_in_domain(fstar, y, z)).scale_nonneg(z);
    }
    if z < 0.0 || z.is_nan() || y.is_nan() {
        return ExtReal::INFINITY;
    }
    let (a_minus, a_plus) = fstar.recession_slopes();
    if y > 0.0 {
        if a_plus.is_pos_inf() {
            ExtReal::INFINITY
        } else {
            ExtReal::from_f64(y * a_plus.value())
        }
    } else if y < 0.0 {
        if a_minus.is_neg_inf() {
            ExtReal::INFINITY
        } else {
            ExtReal::from_f64(y * a_minus.value())
        }
    } else {
        ExtReal::ZERO
    }
}

/// A subgradient `(s_y, s_z)` of the perspective at a point where it is
/// finite; `None` outside its domain.
pub fn perspective_subgradient(fstar: &PiecewiseConvexFn, y: f64, z: f64) -> Option<(f64, f64)> {
    if z > 0.0 {
        let t = ratio_in_domain(fstar, y, z);
        let s = fstar.subgradient(t)?;
        return Some((s, fstar.eval_f64(t) - t * s));
    }
    if z < 0.0 {
        return None;
    }
    let (lo, hi) = fstar.domain();
    let pieces = fstar.pieces();
    if y > 0.0 {
        let last = pieces[pieces.len() - 1];
        if hi < f64::INFINITY || last.a > 0.0 {
            return None;
        }
        Some((last.b, last.c))
    } else if y < 0.0 {
        let first = pieces[0];
        if lo > f64::NEG_INFINITY || first.a > 0.0 {
            return None;
        }
        Some((first.b, first.c))
    } else {
        let t0 = 0.0_f64.clamp(lo, hi);
        let s = fstar.subgradient(t0)?;
        Some((s, fstar.eval_f64(t0) - t0 * s))
    }
}

/// For a point where the perspective is `+∞`, a normal `(n_y, n_z)` with
/// `n_y(y' − y) + n_z(z' − z) ≤ 0` for every `(y', z')` in its domain.
/// Returns `None` when the perspective is finite at `(y, z)`.
pub fn perspective_cut(fstar: &PiecewiseConvexFn, y: f64, z: f64) -> Option<(f64, f64)> {
    if z < 0.0 {
        return Some((0.0, -1.0));
    }
    let (lo, hi) = fstar.domain();
    if z > 0.0 {
        let t = ratio_in_domain(fstar, y, z);
        if t > hi {
            return Some((1.0, -hi));
        }
        if t < lo {
            return Some((-1.0, lo));
        }
        return None;
    }
    if !perspective(fstar, y, z).is_pos_inf() {
        return None;
    }
    if y > 0.0 {
        Some(if hi.is_finite() { (1.0, -hi) } else { (0.0, -1.0) })
    } else {
        Some(if lo.is_finite() { (-1.0, lo) } else { (0.0, -1.0) })
    }
}

/// Closed interval of `z ≥ 0` on whose interior `z ↦ f̃*(y, z)` is finite.
/// The value at an endpoint may still be `+∞` when the perspective is not
/// closed there. `None` when the perspective is `+∞` for every `z`.
pub fn perspective_z_domain(fstar: &PiecewiseConvexFn, y: f64) -> Option<(f64, f64)> {
    let (a, b) = fstar.domain();
    if y == 0.0 {
        return Some(if fstar.in_domain(0.0) { (0.0, f64::INFINITY) } else { (0.0, 0.0) });
    }
    // z > 0 with a ≤ y/z ≤ b
    let (zlo, zhi) = if y > 0.0 {
        if b <= 0.0 {
            (f64::INFINITY, 0.0)
        } else {
            let zlo = if b.is_finite() { y / b } else { 0.0 };
            let zhi = if a > 0.0 { y / a } else { f64::INFINITY };
            (zlo, zhi)
        }
    } else if a >= 0.0 {
        (f64::INFINITY, 0.0)
    } else {
        let zlo = if a.is_finite() { y / a } else { 0.0 };
        let zhi = if b < 0.0 { y / b } else { f64::INFINITY };
        (zlo, zhi)
    };
    if zlo <= zhi {
        return Some((zlo, zhi));
    }
    if perspective(fstar, y, 0.0).is_finite() {
        return Some((0.0, 0.0));
    }
    None
}

/// Recession slopes of a conjugate section, i.e. the end points of the
/// closed convex hull of the primal domain.
pub fn recession_slopes(fstar: &PiecewiseConvexFn) -> (ExtReal, ExtReal) {
    fstar.recession_slopes()
}

/// Slack of the pointwise Young inequality `z·f(x) + f̃*(y, z) − x·y`,
/// given `f` and its conjugate.
pub fn young_slack(
    f: &PiecewiseConvexFn,
    fstar: &PiecewiseConvexFn,
    x: f64,
    y: f64,
    z: f64,
) -> Result<ExtReal> {
    let fx = f.eval(x);
    if !fx.is_finite() {
        return Err(Error::Precondition(format!("{x} is outside dom f")));
    }
    let lhs = fx.scale_nonneg(z).checked_add(perspective(fstar, y, z))?;
    Ok(ExtReal::from_f64(lhs.value() - x * y))
}

/// Checks `x·y ≤ z·f(x) + f̃*(y, z)` up to an absolute slack of `1e-10`.
pub fn check_young_pointwise(f: &PiecewiseConvexFn, x: f64, y: f64, z: f64) -> Result<bool> {
    let fstar = f.legendre()?;
    Ok(young_slack(f, &fstar, x, y, z)?.value() >= -1e-10)
}

#[derive(Serialize, Deserialize)]
struct DomainJson {
    #[serde(serialize_with = "serialize_f64", deserialize_with = "deserialize_f64")]
    lo: f64,
    #[serde(serialize_with = "serialize_f64", deserialize_with = "deserialize_f64")]
    hi: f64,
}

#[derive(Serialize, Deserialize)]
struct PlqJson {
    breakpoints: Vec<f64>,
    pieces: Vec<Piece>,
    domain: DomainJson,
}

impl TryFrom<PlqJson> for PiecewiseConvexFn {
    type Error = Error;

    fn try_from(j: PlqJson) -> Result<Self> {
        PiecewiseConvexFn::new(j.domain.lo, j.domain.hi, j.breakpoints, j.pieces)
    }
}

impl From<PiecewiseConvexFn> for PlqJson {
    fn from(f: PiecewiseConvexFn) -> Self {
        PlqJson {
            breakpoints: f.breakpoints,
            pieces: f.pieces,
            domain: DomainJson { lo: f.lo, hi: f.hi },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half_square() -> PiecewiseConvexFn {
        PiecewiseConvexFn::quadratic(0.5, 0.0, 0.0).unwrap()
    }

    fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        PiecewiseConvexFn::uniform_knots(lo, hi, n)
    }

    /// Brute-force `sup_x (x·y − f(x))` over a fine grid.
    fn brute_conjugate(f: impl Fn(f64) -> f64, y: f64, lo: f64, hi: f64, n: usize) -> f64 {
        grid(lo, hi, n)
            .into_iter()
            .map(|x| x * y - f(x))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn eval_quadratic_and_indicator() {
        assert_eq!(half_square().eval(2.0).value(), 2.0);
        let ind = PiecewiseConvexFn::indicator(0.0, 1.0).unwrap();
        assert!(ind.eval(2.0).is_pos_inf());
        assert_eq!(ind.eval(1.0).value(), 0.0);
        assert_eq!(ind.eval(0.0).value(), 0.0);
    }

    #[test]
    fn eval_sampled_positive_part_exp() {
        let h = |x: f64| x.max(0.0) * x.exp();
        let mut knots = grid(-2.0, 3.0, 501);
        knots.push(1.0);
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        let f = PiecewiseConvexFn::sample(h, &knots, Extension::Linear).unwrap();
        assert!((f.eval(1.0).value() - std::f64::consts::E).abs() < 1e-12);
        // interpolation error h²/8·max h'' on the sampled range
        let spacing = 5.0 / 500.0;
        let bound = spacing * spacing / 8.0 * (5.0 * 3f64.exp());
        for x in grid(-2.0, 3.0, 977) {
            assert!((f.eval(x).value() - h(x)).abs() <= bound + 1e-12, "x={x}");
        }
    }

    #[test]
    fn half_square_is_self_conjugate() {
        let g = half_square().legendre().unwrap();
        assert_eq!(g.pieces(), &[Piece::new(0.5, 0.0, 0.0)]);
        assert_eq!(g.domain(), (f64::NEG_INFINITY, f64::INFINITY));
    }

    #[test]
    fn conjugate_of_interval_indicator_is_support_function() {
        let (a, b) = (-1.5, 2.0);
        let g = PiecewiseConvexFn::indicator(a, b).unwrap().legendre().unwrap();
        for y in grid(-5.0, 5.0, 41) {
            assert!((g.eval(y).value() - (a * y).max(b * y)).abs() < 1e-12);
        }
    }

    #[test]
    fn conjugate_of_affine_is_point_indicator() {
        let g = PiecewiseConvexFn::affine(2.0, 3.0).unwrap().legendre().unwrap();
        assert_eq!(g.domain(), (2.0, 2.0));
        assert_eq!(g.eval(2.0).value(), -3.0);
        assert!(g.eval(2.1).is_pos_inf());
        let back = g.legendre().unwrap();
        assert_eq!(back.eval(7.0).value(), 17.0);
    }

    #[test]
    fn conjugate_of_sampled_exp_matches_entropy() {
        let knots = grid(-12.0, 4.0, 4001);
        let right = 4f64.exp() * 2.0;
        let f = PiecewiseConvexFn::sample(f64::exp, &knots, Extension::Slopes { left: 0.0, right })
            .unwrap();
        let g = f.legendre().unwrap();
        for y in [0.05, 0.3, 1.0, 2.5, 10.0, 40.0] {
            let oracle = brute_conjugate(|x| f.eval_f64(x), y, -12.0, 4.0, 160_001);
            let exact = y * y.ln() - y;
            assert!((g.eval(y).value() - oracle).abs() < 1e-6, "y={y}");
            assert!((g.eval(y).value() - exact).abs() < 1e-3, "y={y}");
        }
        assert!(g.eval(0.0).value().abs() < 1e-3);
        assert!(g.eval(-0.5).is_pos_inf());
    }

    #[test]
    fn biconjugate_recovers_kinked_quadratic() {
        let f = PiecewiseConvexFn::new(
            -3.0,
            f64::INFINITY,
            vec![-1.0, 0.5, 2.0],
            vec![
                Piece::new(0.0, -2.0, -1.0),
                Piece::new(1.0, 0.0, 0.0),
                Piece::new(0.0, 1.5, -0.5),
                Piece::new(0.25, 1.5, -1.5),
            ],
        )
        .unwrap();
        let ff = f.legendre().unwrap().legendre().unwrap();
        let pts = grid(-4.0, 6.0, 100);
        assert!(f.max_abs_diff(&ff, &pts) < 1e-12);
        assert_eq!(ff.domain().0, -3.0);
    }

    #[test]
    fn conjugate_breakpoints_are_slopes() {
        let f = PiecewiseConvexFn::kinked(-1.0, 2.0, 0.0).unwrap();
        let g = f.legendre().unwrap();
        assert_eq!(g.domain(), (-1.0, 2.0));
        assert_eq!(g.eval(0.5).value(), 0.0);
    }

    #[test]
    fn perspective_cases() {
        let fstar = half_square();
        assert_eq!(perspective(&fstar, 0.0, 0.0), ExtReal::ZERO);
        assert_eq!(perspective(&fstar, 2.0, 4.0).value(), 0.5);
        assert_eq!(perspective(&fstar, 3.0, 1.0), fstar.eval(3.0));
        assert!(perspective(&fstar, 1.0, 0.0).is_pos_inf());
        let support = PiecewiseConvexFn::indicator(0.0, 1.0).unwrap().legendre().unwrap();
        assert_eq!(perspective(&support, 3.0, 0.0).value(), 3.0);
        assert_eq!(perspective(&support, -3.0, 0.0).value(), 0.0);
        assert!(perspective(&fstar, 1.0, -1.0).is_pos_inf());
    }

    #[test]
    fn perspective_at_zero_is_limit() {
        let support = PiecewiseConvexFn::indicator(0.0, 1.0).unwrap().legendre().unwrap();
        let y = 3.0;
        let at_zero = perspective(&support, y, 0.0).value();
        let mut z = 1.0;
        let mut last = f64::NAN;
        for _ in 0..40 {
            last = perspective(&support, y, z).value();
            z /= 2.0;
        }
        assert!((last - at_zero).abs() < 1e-9);
    }

    #[test]
    fn recession_slope_cases() {
        let (m, p) = half_square().recession_slopes();
        assert!(m.is_neg_inf() && p.is_pos_inf());
        let hinge = PiecewiseConvexFn::kinked(0.0, 1.0, 0.0).unwrap();
        assert_eq!(hinge.recession_slopes(), (ExtReal::ZERO, ExtReal::from(1.0)));
    }

    #[test]
    fn young_equality_at_gradient_pair() {
        let f = half_square();
        assert!(check_young_pointwise(&f, 1.0, 1.0, 1.0).unwrap());
        let fstar = f.legendre().unwrap();
        assert_eq!(young_slack(&f, &fstar, 1.0, 1.0, 1.0).unwrap().value(), 0.0);
        // z = 0 branch: x·y ≤ f̃*(y, 0)
        let ind = PiecewiseConvexFn::indicator(-1.0, 2.0).unwrap();
        assert!(check_young_pointwise(&ind, 2.0, 5.0, 0.0).unwrap());
        assert!(check_young_pointwise(&f, 3.0, 1.0, 0.0).unwrap());
    }

    #[test]
    fn young_outside_domain_is_precondition_error() {
        let ind = PiecewiseConvexFn::indicator(0.0, 1.0).unwrap();
        assert!(matches!(check_young_pointwise(&ind, 2.0, 1.0, 1.0), Err(Error::Precondition(_))));
    }

    #[test]
    fn invalid_functions_rejected() {
        // concave kink
        assert!(PiecewiseConvexFn::kinked(1.0, -1.0, 0.0).is_err());
        // negative curvature
        assert!(PiecewiseConvexFn::quadratic(-1.0, 0.0, 0.0).is_err());
        // discontinuity
        assert!(PiecewiseConvexFn::new(
            f64::NEG_INFINITY,
            f64::INFINITY,
            vec![0.0],
            vec![Piece::new(0.0, 0.0, 0.0), Piece::new(0.0, 0.0, 1.0)]
        )
        .is_err());
        // empty domain
        assert!(PiecewiseConvexFn::indicator(1.0, 0.0).is_err());
    }

    #[test]
    fn piece_cap_enforced() {
        let knots = grid(-1.0, 1.0, 50);
        let f = PiecewiseConvexFn::sample(|x| x * x, &knots, Extension::Linear).unwrap();
        assert!(matches!(
            f.legendre_with_cap(10),
            Err(Error::RepresentationOverflow { .. })
        ));
    }

    #[test]
    fn conjugate_maximizer_leftmost() {
        let f = PiecewiseConvexFn::kinked(-1.0, 1.0, 0.0).unwrap();
        assert_eq!(f.conjugate_maximizer(0.3), Some(0.0));
        let g = half_square();
        assert_eq!(g.conjugate_maximizer(1.5), Some(1.5));
        let ind = PiecewiseConvexFn::indicator(-1.0, 2.0).unwrap();
        assert_eq!(ind.conjugate_maximizer(0.0), Some(-1.0));
        assert_eq!(ind.conjugate_maximizer(4.0), Some(2.0));
        // sup of x·2 − x²/2... attained; affine with wrong slope: not attained
        assert_eq!(PiecewiseConvexFn::affine(1.0, 0.0).unwrap().conjugate_maximizer(2.0), None);
    }

    #[test]
    fn argument_transforms_match_definitions() {
        let f = PiecewiseConvexFn::kinked(-1.0, 2.0, 0.5).unwrap();
        let scaled = f.scale_argument(3.0).unwrap();
        let shifted = f.shift_argument(-0.7).unwrap();
        let mirrored = f.mirror().unwrap();
        for x in grid(-3.0, 3.0, 61) {
            assert!((scaled.eval_f64(x) - f.eval_f64(3.0 * x)).abs() < 1e-12);
            assert!((shifted.eval_f64(x) - f.eval_f64(x - 0.7)).abs() < 1e-12);
            assert!((mirrored.eval_f64(x) - f.eval_f64(-x)).abs() < 1e-12);
        }
    }

    #[test]
    fn json_schema_round_trip() {
        let f = PiecewiseConvexFn::indicator(0.0, f64::INFINITY).unwrap();
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(s, r#"{"breakpoints":[],"pieces":[{"a":0.0,"b":0.0,"c":0.0}],"domain":{"lo":0.0,"hi":"inf"}}"#);
        let back: PiecewiseConvexFn = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
        let bad = r#"{"breakpoints":[],"pieces":[{"a":-1.0,"b":0.0,"c":0.0}],"domain":{"lo":"-inf","hi":"inf"}}"#;
        assert!(serde_json::from_str::<PiecewiseConvexFn>(bad).is_err());
    }
    #[test]
    fn perspective_subgradient_supports_the_graph() {
        let fstar = PiecewiseConvexFn::new(
            f64::NEG_INFINITY,
            f64::INFINITY,
            vec![0.0, 1.0],
            vec![Piece::new(0.0, -0.5, 0.0), Piece::new(0.5, -0.5, 0.0), Piece::new(0.0, 0.5, -0.5)],
        )
        .unwrap();
        let pts = [(1.0, 0.5), (-2.0, 1.0), (3.0, 0.0), (-1.0, 0.0), (0.0, 0.0), (0.4, 2.0)];
        for &(y, z) in &pts {
            let base = perspective(&fstar, y, z).value();
            let (sy, sz) = perspective_subgradient(&fstar, y, z).unwrap();
            for &(y2, z2) in &pts {
                let v = perspective(&fstar, y2, z2).value();
                assert!(v >= base + sy * (y2 - y) + sz * (z2 - z) - 1e-12, "({y},{z}) -> ({y2},{z2})");
            }
        }
    }

    #[test]
    fn perspective_cut_and_z_domain() {
        let fstar = PiecewiseConvexFn::indicator(0.5, 2.0).unwrap();
        assert_eq!(perspective_z_domain(&fstar, 1.0), Some((0.5, 2.0)));
        assert_eq!(perspective_z_domain(&fstar, -1.0), None);
        assert_eq!(perspective_z_domain(&fstar, 0.0), Some((0.0, 0.0)));
        assert!(perspective_cut(&fstar, 1.0, 1.0).is_none());
        let (ny, nz) = perspective_cut(&fstar, 1.0, 0.25).unwrap();
        // the feasible point (1, 1) lies on the kept side
        assert!(ny * 0.0 + nz * (1.0 - 0.25) <= 0.0);
    }
}
