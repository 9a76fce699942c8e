//! Generator (V-) representation of polyhedral cones `{x : Gx ≤ 0}`.

use nalgebra::DMatrix;

/// `cone = cone(rays) + span(lineality)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConeVRep {
    pub rays: Vec<Vec<f64>>,
    pub lineality: Vec<Vec<f64>>,
}

impl ConeVRep {
    /// Number of free parameters: one per ray and one per lineality vector.
    pub fn parameter_count(&self) -> usize {
        self.rays.len() + self.lineality.len()
    }

    /// `Σ θ_j r_j + Σ φ_l ℓ_l` for parameters `(θ, φ)` laid out in that order.
    pub fn combine(&self, params: &[f64], dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        for (t, v) in params.iter().zip(self.rays.iter().chain(&self.lineality)) {
            for i in 0..dim {
                out[i] += t * v[i];
            }
        }
        out
    }
}

/// Orthonormal basis of the null space of a `rows × dim` matrix.
pub fn null_space(rows: &[Vec<f64>], dim: usize) -> Vec<Vec<f64>> {
    if rows.is_empty() {
        return (0..dim)
            .map(|i| {
                let mut e = vec![0.0; dim];
                e[i] = 1.0;
                e
            })
            .collect();
    }
    let k = rows.len().max(dim);
    let mut a = DMatrix::<f64>::zeros(k, dim);
    for (i, r) in rows.iter().enumerate() {
        for j in 0..dim {
            a[(i, j)] = r[j];
        }
    }
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let tol = 1e-10 * smax.max(1.0);
    let mut basis = Vec::new();
    for (idx, s) in svd.singular_values.iter().enumerate() {
        if *s <= tol {
            basis.push((0..dim).map(|j| v_t[(idx, j)]).collect());
        }
    }
    basis
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// V-representation of `{x ∈ ℝ^dim : g·x ≤ 0 for every g in rows}`.
pub fn polyhedral_cone_vrep(rows: &[Vec<f64>], dim: usize) -> ConeVRep {
    let lineality = null_space(rows, dim);
    let d = dim - lineality.len();
    let mut rays: Vec<Vec<f64>> = Vec::new();
    if d == 0 {
        return ConeVRep { rays, lineality };
    }
    let scale = rows
        .iter()
        .map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
        .max(1.0);
    for subset in combinations(rows.len(), d - 1) {
        let mut system: Vec<Vec<f64>> = subset.iter().map(|&i| rows[i].clone()).collect();
        system.extend(lineality.iter().cloned());
        let null = null_space(&system, dim);
        if null.len() != 1 {
            continue;
        }
        for sign in [1.0, -1.0] {
            let r: Vec<f64> = null[0].iter().map(|v| sign * v).collect();
            let ok = rows
                .iter()
                .all(|g| g.iter().zip(&r).map(|(a, b)| a * b).sum::<f64>() <= 1e-10 * scale);
            if ok && !rays.iter().any(|q| q.iter().zip(&r).all(|(a, b)| (a - b).abs() < 1e-9)) {
                rays.push(r);
            }
        }
    }
    ConeVRep { rays, lineality }
}
