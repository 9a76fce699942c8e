//! Central-cut ellipsoid method with a certified lower bound.
//!
//! At a feasible center `c` with subgradient `g`, every minimizer inside the
//! current ellipsoid `E = {x : (x−c)ᵀP⁻¹(x−c) ≤ 1}` satisfies
//! `f(x) ≥ f(c) − √(gᵀPg)`, so the largest such bound over the run is a
//! lower bound on the minimum as long as the initial ellipsoid contains a
//! minimizer.

/// Answer of a first-order oracle at a query point.
#[derive(Clone, Debug)]
pub enum Oracle {
    /// The point is feasible with the given value and a subgradient.
    Feasible { value: f64, subgradient: Vec<f64> },
    /// The point is infeasible; every feasible `x` satisfies
    /// `cutᵀ(x − query) ≤ 0`.
    Infeasible { cut: Vec<f64> },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EllipsoidConfig {
    pub max_iter: usize,
    /// Absolute tolerance on `best value − lower bound`.
    pub tol: f64,
}

impl Default for EllipsoidConfig {
    fn default() -> Self {
        EllipsoidConfig { max_iter: 20_000, tol: 1e-9 }
    }
}

#[derive(Clone, Debug)]
pub struct EllipsoidResult {
    /// Best feasible point found, if any.
    pub x: Option<Vec<f64>>,
    pub value: f64,
    pub lower_bound: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective values at the feasible centers, in order.
    pub feasible_values: Vec<f64>,
}

impl EllipsoidResult {
    pub fn gap(&self) -> f64 {
        self.value - self.lower_bound
    }
}

/// Minimizes over `ℝⁿ` starting from the ball of radius `radius` around
/// `center`.
pub fn minimize<F>(center: Vec<f64>, radius: f64, mut oracle: F, cfg: EllipsoidConfig) -> EllipsoidResult
where
    F: FnMut(&[f64]) -> Oracle,
{
    let n = center.len();
    let mut c = center;
    let mut best_x: Option<Vec<f64>> = None;
    let mut best = f64::INFINITY;
    let mut lower = f64::NEG_INFINITY;
    let mut feasible_values = Vec::new();

    if n == 0 {
        if let Oracle::Feasible { value, .. } = oracle(&c) {
            feasible_values.push(value);
            return EllipsoidResult {
                x: Some(c),
                value,
                lower_bound: value,
                iterations: 1,
                converged: true,
                feasible_values,
            };
        }
        return EllipsoidResult {
            x: None,
            value: f64::INFINITY,
            lower_bound: f64::INFINITY,
            iterations: 1,
            converged: true,
            feasible_values,
        };
    }

    // P stored row-major.
    let mut p = vec![0.0; n * n];
    for i in 0..n {
        p[i * n + i] = radius * radius;
    }
    let nf = n as f64;
    let mut pg = vec![0.0; n];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < cfg.max_iter {
        iterations += 1;
        let (g, feasible) = match oracle(&c) {
            Oracle::Feasible { value, subgradient } => {
                feasible_values.push(value);
                if value < best {
                    best = value;
                    best_x = Some(c.clone());
                }
                (subgradient, Some(value))
            }
            Oracle::Infeasible { cut } => (cut, None),
        };
        debug_assert_eq!(g.len(), n);
        for i in 0..n {
            pg[i] = (0..n).map(|j| p[i * n + j] * g[j]).sum();
        }
        let gpg: f64 = (0..n).map(|i| g[i] * pg[i]).sum();
        if !(gpg > 0.0) || !gpg.is_finite() {
            // A zero subgradient certifies optimality; otherwise the
            // ellipsoid has degenerated and no further progress is possible.
            if let Some(value) = feasible {
                if g.iter().all(|v| *v == 0.0) {
                    lower = lower.max(value);
                    converged = true;
                }
            }
            break;
        }
        let root = gpg.sqrt();
        if let Some(value) = feasible {
            lower = lower.max(value - root);
        }
        if best - lower <= cfg.tol {
            converged = true;
            break;
        }
        if n == 1 {
            // Interval halving.
            let half = p[0].sqrt();
            let step = 0.5 * half * g[0].signum();
            c[0] -= step;
            p[0] *= 0.25;
            continue;
        }
        for i in 0..n {
            c[i] -= pg[i] / (root * (nf + 1.0));
        }
        let scale = nf * nf / (nf * nf - 1.0);
        let coef = 2.0 / ((nf + 1.0) * gpg);
        for i in 0..n {
            for j in 0..n {
                p[i * n + j] = scale * (p[i * n + j] - coef * pg[i] * pg[j]);
            }
        }
        // keep P symmetric against drift
        for i in 0..n {
            for j in (i + 1)..n {
                let s = 0.5 * (p[i * n + j] + p[j * n + i]);
                p[i * n + j] = s;
                p[j * n + i] = s;
            }
        }
    }
    EllipsoidResult { x: best_x, value: best, lower_bound: lower, iterations, converged, feasible_values }
}
