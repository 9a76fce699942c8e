//! One-dimensional minimization and root finding.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Minimizes a convex (or unimodal) `f` on the finite interval `[a, b]` by
/// golden-section search. Endpoints are compared at the end so that
/// minimizers on the boundary are returned exactly.
pub fn golden_section_min<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64, max_iter: usize) -> (f64, f64) {
    debug_assert!(a <= b);
    if a == b {
        return (a, f(a));
    }
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..max_iter {
        if hi - lo <= tol {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    let mut best = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    for x in [a, b] {
        let fx = f(x);
        if fx < best.1 || (fx == best.1 && x < best.0) {
            best = (x, fx);
        }
    }
    best
}

/// Root of a nondecreasing `g` on `[lo, hi]` with `g(lo) ≤ 0 ≤ g(hi)`,
/// returned as the bracket `(lo, hi)` after bisection to width `tol`.
pub fn bisect_increasing<G: FnMut(f64) -> f64>(mut g: G, mut lo: f64, mut hi: f64, tol: f64, max_iter: usize) -> (f64, f64) {
    for _ in 0..max_iter {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

/// Newton iteration with bisection safeguard for a root of an increasing
/// `g` with derivative `dg` inside the bracket `[lo, hi]`.
pub fn safeguarded_newton<G, D>(mut g: G, mut dg: D, mut lo: f64, mut hi: f64, start: f64, tol: f64) -> f64
where
    G: FnMut(f64) -> f64,
    D: FnMut(f64) -> f64,
{
    let mut x = start.clamp(lo, hi);
    for _ in 0..200 {
        let gx = g(x);
        if gx == 0.0 {
            return x;
        }
        if gx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let step = gx / dg(x);
        let mut next = x - step;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= tol * (1.0 + x.abs()) || hi - lo <= tol * (1.0 + x.abs()) {
            return next;
        }
        x = next;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_interior_and_boundary_minima() {
        let (x, fx) = golden_section_min(|x| (x - 0.3) * (x - 0.3), 0.0, 1.0, 1e-12, 200);
        assert!((x - 0.3).abs() < 1e-6 && fx < 1e-12);
        let (x, _) = golden_section_min(|x| x, 0.0, 1.0, 1e-12, 200);
        assert_eq!(x, 0.0);
    }

    #[test]
    fn bisection_brackets_root() {
        let (lo, hi) = bisect_increasing(|x| x * x * x - 2.0, 0.0, 2.0, 1e-14, 200);
        assert!(lo <= 2f64.cbrt() && 2f64.cbrt() <= hi && hi - lo < 1e-13);
    }

    #[test]
    fn newton_solves_exp_equation() {
        let w: f64 = 10.0;
        let x = safeguarded_newton(|x| x.exp() * (1.0 + x) - w, |x| x.exp() * (2.0 + x), 0.0, w.ln(), w.ln(), 1e-15);
        assert!((x.exp() * (1.0 + x) - w).abs() < 1e-12);
    }
}
