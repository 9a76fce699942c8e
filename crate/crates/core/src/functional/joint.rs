//! Convex minimization of
//! `Σ_i w_i f̃*_i(A_i η_i, ψ_i) + Σ_i c_i η_i + γ(Q)`
//! jointly over a parametrized cone of `η` and the measures in the penalty
//! domain, by the ellipsoid method.
//!
//! `η = η₀ + Σ_j θ_j e_j` with `θ_j ≥ 0` for the first `rays` generators and
//! free for the rest. Measures are parametrized affinely as
//! `ψ = ψ₀ + Σ_k μ_k d_k` with `μ ≥ 0`, `Σ μ_k ≤ 1`: mixing weights of the
//! vertices for polyhedral penalties, and probabilities of all atoms but the
//! last for entropic and custom penalties.

use crate::convex1d::{perspective, perspective_cut, perspective_subgradient, PiecewiseConvexFn};
use crate::error::{Error, Result};
use crate::penalty::Penalty;
use crate::solver::cone::null_space;
use crate::solver::ellipsoid::{self, EllipsoidConfig, Oracle};
use crate::solver::lp::{self, Cmp, Row};
use crate::space::{Density, FiniteSpace};

/// Affine parametrization of the admissible measures.
#[derive(Clone, Debug)]
pub struct MeasureParam {
    pub psi0: Vec<f64>,
    /// One direction per parameter, each of length `m`.
    pub dirs: Vec<Vec<f64>>,
    /// Whether the penalty contributes a smooth term (entropic, custom).
    pub smooth: bool,
    /// Atoms held at zero mass (their probabilities are excluded from the
    /// simplex parametrization).
    pub free_atoms: Vec<usize>,
    /// Replaces the simplex `μ ≥ 0, Σ μ ≤ 1` when set.
    pub limits: Option<MeasureLimits>,
}

/// Constraints `g·μ ≤ h` on the measure parameters, with a relative interior
/// starting point and a radius around it that covers the feasible set.
#[derive(Clone, Debug)]
pub struct MeasureLimits {
    pub rows: Vec<(Vec<f64>, f64)>,
    pub start: Vec<f64>,
    pub radius: f64,
}

/// The measure parameters allowed by the domain of the objective when they
/// span a lower-dimensional set.
#[derive(Clone, Debug)]
pub enum AffineHull {
    /// A single admissible parameter point.
    Point(Vec<f64>),
    /// A reparametrization over the affine hull.
    Face(MeasureParam),
}

impl MeasureParam {
    /// Parametrization for `penalty`, with the atoms in `null_atoms` forced to
    /// carry no mass.
    pub fn for_penalty(space: &FiniteSpace, penalty: &Penalty, null_atoms: &[bool]) -> Result<Self> {
        let m = space.len();
        let w = space.weights();
        match penalty {
            Penalty::Dirac(p0) => {
                Ok(MeasureParam { psi0: p0.values().to_vec(), dirs: vec![], smooth: false, free_atoms: vec![], limits: None })
            }
            Penalty::Polyhedral(vertices) => {
                let kept: Vec<&Density> = vertices
                    .iter()
                    .filter(|v| v.values().iter().zip(null_atoms).all(|(x, null)| !*null || *x == 0.0))
                    .collect();
                if kept.is_empty() {
                    return Err(Error::Infeasible("no vertex avoids the forced null atoms".into()));
                }
                let last = kept[kept.len() - 1].values().to_vec();
                let dirs = kept[..kept.len() - 1]
                    .iter()
                    .map(|v| v.values().iter().zip(&last).map(|(a, b)| a - b).collect())
                    .collect();
                Ok(MeasureParam { psi0: last, dirs, smooth: false, free_atoms: vec![], limits: None })
            }
            Penalty::Entropic | Penalty::Custom(_) => {
                let free: Vec<usize> = (0..m).filter(|i| !null_atoms[*i]).collect();
                if free.is_empty() {
                    return Err(Error::Infeasible("every atom is forced to zero mass".into()));
                }
                let last = free[free.len() - 1];
                let mut psi0 = vec![0.0; m];
                psi0[last] = 1.0 / w[last];
                let dirs = free[..free.len() - 1]
                    .iter()
                    .map(|&i| {
                        let mut d = vec![0.0; m];
                        d[i] = 1.0 / w[i];
                        d[last] = -1.0 / w[last];
                        d
                    })
                    .collect();
                Ok(MeasureParam { psi0, dirs, smooth: true, free_atoms: free, limits: None })
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dirs.len()
    }

    pub fn center(&self) -> Vec<f64> {
        if let Some(l) = &self.limits {
            return l.start.clone();
        }
        let d = self.dim();
        vec![1.0 / (d as f64 + 1.0); d]
    }

    pub fn psi(&self, mu: &[f64]) -> Vec<f64> {
        let mut psi = self.psi0.clone();
        for (t, d) in mu.iter().zip(&self.dirs) {
            for (p, v) in psi.iter_mut().zip(d) {
                *p += t * v;
            }
        }
        // clip rounding noise below zero
        psi.iter_mut().for_each(|p| {
            if *p < 0.0 && *p > -1e-14 {
                *p = 0.0
            }
        });
        psi
    }

    /// Probabilities of the free atoms (for the smooth penalty term).
    fn probabilities(&self, space: &FiniteSpace, psi: &[f64]) -> Vec<f64> {
        psi.iter().zip(space.weights()).map(|(p, w)| (p * w).max(0.0)).collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// The objective's data; see the module documentation.
pub struct JointProblem<'a> {
    pub space: &'a FiniteSpace,
    pub sections: &'a [PiecewiseConvexFn],
    pub penalty: &'a Penalty,
    pub measure: MeasureParam,
    pub scale: Vec<f64>,
    pub eta0: Vec<f64>,
    pub eta_dirs: Vec<Vec<f64>>,
    pub rays: usize,
    pub linear: Vec<f64>,
    /// Starting point of the measure parameters; the simplex center if `None`.
    pub mu_center: Option<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct JointSolution {
    pub value: f64,
    pub lower_bound: f64,
    pub eta: Vec<f64>,
    pub psi: Vec<f64>,
    pub theta: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Objective values at all feasible iterates.
    pub iterate_values: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JointConfig {
    pub tol: f64,
    pub max_iter: usize,
    /// Initial radius for the `θ` block.
    pub radius: f64,
    pub max_restarts: usize,
}

impl Default for JointConfig {
    fn default() -> Self {
        JointConfig { tol: 1e-9, max_iter: 40_000, radius: 4.0, max_restarts: 8 }
    }
}

impl<'a> JointProblem<'a> {
    fn eta(&self, theta: &[f64]) -> Vec<f64> {
        let mut eta = self.eta0.clone();
        for (t, d) in theta.iter().zip(&self.eta_dirs) {
            for (e, v) in eta.iter_mut().zip(d) {
                *e += t * v;
            }
        }
        eta
    }

    fn r(&self) -> usize {
        self.eta_dirs.len()
    }

    /// Objective at a parameter point, `+∞` outside the domain.
    pub fn value_at(&self, theta: &[f64], mu: &[f64]) -> f64 {
        match self.evaluate(theta, mu) {
            Oracle::Feasible { value, .. } => value,
            Oracle::Infeasible { .. } => f64::INFINITY,
        }
    }

    /// Objective at explicit `(η, ψ)`.
    pub fn value_at_point(&self, eta: &[f64], psi: &[f64]) -> Result<f64> {
        let w = self.space.weights();
        let mut total = 0.0;
        for i in 0..w.len() {
            let v = perspective(&self.sections[i], self.scale[i] * eta[i], psi[i]);
            if v.is_pos_inf() {
                return Ok(f64::INFINITY);
            }
            total += w[i] * v.value();
        }
        total += self.linear.iter().zip(eta).map(|(c, e)| c * e).sum::<f64>();
        if self.measure.smooth {
            let probs = self.measure.probabilities(self.space, psi);
            let (g, _) = self.penalty.smooth_part(self.space, &probs).expect("smooth penalty");
            total += g;
        }
        Ok(total)
    }

    fn evaluate(&self, theta: &[f64], mu: &[f64]) -> Oracle {
        let r = self.r();
        let d = self.measure.dim();
        let n = r + d;
        let unit = |k: usize, sign: f64| {
            let mut c = vec![0.0; n];
            c[k] = sign;
            c
        };
        for j in 0..self.rays {
            if theta[j] < 0.0 {
                return Oracle::Infeasible { cut: unit(j, -1.0) };
            }
        }
        if let Some(limits) = &self.measure.limits {
            for (g, h) in &limits.rows {
                if dot(g, mu) > *h {
                    let mut c = vec![0.0; n];
                    c[r..].copy_from_slice(g);
                    return Oracle::Infeasible { cut: c };
                }
            }
        } else {
            for k in 0..d {
                if mu[k] < 0.0 {
                    return Oracle::Infeasible { cut: unit(r + k, -1.0) };
                }
            }
            if mu.iter().sum::<f64>() > 1.0 {
                let mut c = vec![0.0; n];
                c[r..].iter_mut().for_each(|v| *v = 1.0);
                return Oracle::Infeasible { cut: c };
            }
        }
        let eta = self.eta(theta);
        let psi = self.measure.psi(mu);
        let w = self.space.weights();
        let m = w.len();
        let mut value = 0.0;
        let mut grad = vec![0.0; n];
        // chain rule helper: adds (gy ∂y_i/∂x + gz ∂ψ_i/∂x) to `out`
        let chain = |i: usize, gy: f64, gz: f64, out: &mut Vec<f64>| {
            for j in 0..r {
                out[j] += gy * self.scale[i] * self.eta_dirs[j][i];
            }
            for k in 0..d {
                out[r + k] += gz * self.measure.dirs[k][i];
            }
        };
        for i in 0..m {
            let y = self.scale[i] * eta[i];
            let z = psi[i];
            if let Some((ny, nz)) = perspective_cut(&self.sections[i], y, z) {
                let mut cut = vec![0.0; n];
                chain(i, ny, nz, &mut cut);
                if cut.iter().all(|v| *v == 0.0) {
                    // the violated constraint does not depend on the parameters
                    return Oracle::Infeasible { cut: vec![0.0; n] };
                }
                return Oracle::Infeasible { cut };
            }
            let v = perspective(&self.sections[i], y, z).value();
            let (sy, sz) = match perspective_subgradient(&self.sections[i], y, z) {
                Some(s) => s,
                None => return Oracle::Infeasible { cut: vec![0.0; n] },
            };
            value += w[i] * v;
            chain(i, w[i] * sy, w[i] * sz, &mut grad);
        }
        for i in 0..m {
            value += self.linear[i] * eta[i];
            for j in 0..r {
                grad[j] += self.linear[i] * self.eta_dirs[j][i];
            }
        }
        if self.measure.smooth {
            let probs = self.measure.probabilities(self.space, &psi);
            let (g, gp) = self.penalty.smooth_part(self.space, &probs).expect("smooth penalty");
            // gradient in ψ is gp_i·w_i; chain through the measure directions
            for &i in &self.measure.free_atoms {
                if !gp[i].is_finite() {
                    // steepest descent into the interior: keep points with more mass on i
                    let mut cut = vec![0.0; n];
                    for k in 0..d {
                        cut[r + k] = -self.measure.dirs[k][i];
                    }
                    return Oracle::Infeasible { cut };
                }
            }
            value += g;
            for k in 0..d {
                grad[r + k] += (0..m).map(|i| gp[i] * w[i] * self.measure.dirs[k][i]).sum::<f64>();
            }
        }
        if !value.is_finite() {
            return Oracle::Infeasible { cut: vec![0.0; n] };
        }
        Oracle::Feasible { value, subgradient: grad }
    }

    /// Linear relaxation of the domain: `θ` sign constraints, the measure
    /// constraints, and `lo·ψ_i ≤ A_i η_i ≤ hi·ψ_i` for each conjugate domain.
    fn domain_rows(&self) -> (Vec<(f64, f64)>, Vec<Row>) {
        let r = self.r();
        let d = self.measure.dim();
        let n = r + d;
        let mut bounds = vec![(f64::NEG_INFINITY, f64::INFINITY); n];
        for b in bounds.iter_mut().take(self.rays) {
            *b = (0.0, f64::INFINITY);
        }
        let mut rows = Vec::new();
        for (g, h) in self.measure_rows() {
            let mut c = vec![0.0; r];
            c.extend(g);
            rows.push(Row::new(c, Cmp::Le, h));
        }
        for i in 0..self.space.len() {
            let (lo, hi) = self.sections[i].domain();
            // y_i = A_i(η0_i + Σ θ_j e_ji), z_i = ψ0_i + Σ μ_k d_ki
            let mut y = vec![0.0; n];
            for j in 0..r {
                y[j] = self.scale[i] * self.eta_dirs[j][i];
            }
            let y0 = self.scale[i] * self.eta0[i];
            let mut z = vec![0.0; n];
            for k in 0..d {
                z[r + k] = self.measure.dirs[k][i];
            }
            let z0 = self.measure.psi0[i];
            if hi.is_finite() {
                // y − hi z ≤ 0
                let c = y.iter().zip(&z).map(|(a, b)| a - hi * b).collect();
                rows.push(Row::new(c, Cmp::Le, hi * z0 - y0));
            }
            if lo.is_finite() {
                let c = y.iter().zip(&z).map(|(a, b)| lo * b - a).collect();
                rows.push(Row::new(c, Cmp::Le, y0 - lo * z0));
            }
        }
        (bounds, rows)
    }

    /// The simplex or the explicit limits, as rows `g·μ ≤ h`.
    fn measure_rows(&self) -> Vec<(Vec<f64>, f64)> {
        if let Some(l) = &self.measure.limits {
            return l.rows.clone();
        }
        let d = self.measure.dim();
        let mut rows: Vec<(Vec<f64>, f64)> = (0..d)
            .map(|k| {
                let mut g = vec![0.0; d];
                g[k] = -1.0;
                (g, 0.0)
            })
            .collect();
        if d > 0 {
            rows.push((vec![1.0; d], 1.0));
        }
        rows
    }

    pub fn domain_is_feasible(&self) -> bool {
        let (bounds, rows) = self.domain_rows();
        lp::is_feasible(&bounds, &rows)
    }

    /// For a problem without an `η` block: finds the constraints of the
    /// linear domain relaxation that hold with equality at every feasible
    /// point and restricts the measure parameters to their affine hull.
    /// `None` when the relaxation is infeasible or full-dimensional.
    pub fn affine_hull(&self) -> Option<AffineHull> {
        if self.r() != 0 {
            return None;
        }
        let d = self.measure.dim();
        let (bounds, rows) = self.domain_rows();
        let mut tight = Vec::new();
        let mut loose = Vec::new();
        let mut mean = vec![0.0; d];
        for row in &rows {
            let (x, min) = lp::minimize(&row.coeffs, &bounds, &rows)?;
            mean.iter_mut().zip(&x).for_each(|(m, v)| *m += v / rows.len() as f64);
            if row.rhs - min <= 1e-9 * (1.0 + row.rhs.abs()) {
                tight.push(row.coeffs.clone());
            } else {
                loose.push(row);
            }
        }
        if tight.is_empty() {
            return None;
        }
        let basis = null_space(&tight, d);
        if basis.is_empty() {
            return Some(AffineHull::Point(mean));
        }
        let m = &self.measure;
        let dirs = basis
            .iter()
            .map(|b| (0..m.psi0.len()).map(|i| b.iter().zip(&m.dirs).map(|(t, dir)| t * dir[i]).sum()).collect())
            .collect();
        // only the measure constraints; the domain rows come back as cuts
        let own = self.measure_rows();
        let rows = own
            .iter()
            .filter(|(g, h)| loose.iter().any(|l| &l.coeffs == g && l.rhs == *h))
            .map(|(g, h)| (basis.iter().map(|b| dot(b, g)).collect(), h - dot(g, &mean)))
            .collect();
        Some(AffineHull::Face(MeasureParam {
            psi0: m.psi(&mean),
            dirs,
            smooth: m.smooth,
            free_atoms: m.free_atoms.clone(),
            // the basis is orthonormal and the simplex has diameter √2
            limits: Some(MeasureLimits { rows, start: vec![0.0; basis.len()], radius: 2.0 }),
        }))
    }

    /// Minimizes the objective; the `θ` block is searched in a ball whose
    /// radius grows until the minimizer sits well inside it.
    pub fn solve(&self, cfg: JointConfig) -> JointSolution {
        let r = self.r();
        let mut radius = cfg.radius;
        let mut all_values = Vec::new();
        let mut last: Option<JointSolution> = None;
        for _ in 0..=cfg.max_restarts {
            let mut center = vec![0.0; r];
            let (mu0, mu_radius) = match (&self.mu_center, &self.measure.limits) {
                (Some(c), _) => (c.clone(), 1.5),
                (None, Some(l)) => (l.start.clone(), l.radius),
                (None, None) => (self.measure.center(), 1.0),
            };
            center.extend(mu0);
            // θ ball plus a ball around the measure simplex
            let total_radius = radius + mu_radius;
            let res = ellipsoid::minimize(
                center,
                total_radius,
                |x| self.evaluate(&x[..r], &x[r..]),
                EllipsoidConfig { max_iter: cfg.max_iter, tol: cfg.tol },
            );
            all_values.extend(res.feasible_values.iter().cloned());
            let (theta, mu) = match &res.x {
                Some(x) => (x[..r].to_vec(), x[r..].to_vec()),
                None => (vec![0.0; r], self.measure.center()),
            };
            let norm = theta.iter().map(|t| t * t).sum::<f64>().sqrt();
            let eta = self.eta(&theta);
            let psi = self.measure.psi(&mu);
            let sol = JointSolution {
                value: res.value,
                lower_bound: res.lower_bound,
                eta,
                psi,
                theta,
                iterations: res.iterations,
                converged: res.converged,
                iterate_values: vec![],
            };
            let inside = r == 0 || norm <= 0.5 * radius;
            let found = res.x.is_some();
            if last.as_ref().is_none_or(|l| sol.value <= l.value) {
                last = Some(sol);
            }
            if found && inside {
                break;
            }
            radius *= 8.0;
        }
        let mut sol = last.expect("at least one ellipsoid run");
        sol.iterate_values = all_values;
        sol
    }
}
