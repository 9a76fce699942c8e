//! Exponentiated-gradient ascent for concave maximization over the
//! probability simplex, stopped on the Frank–Wolfe gap.

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MirrorConfig {
    pub max_iter: usize,
    /// Stop once `max_i ∇_i − ⟨p, ∇⟩` is below this value.
    pub gap_tol: f64,
}

impl Default for MirrorConfig {
    fn default() -> Self {
        MirrorConfig { max_iter: 100_000, gap_tol: 1e-9 }
    }
}

#[derive(Clone, Debug)]
pub struct MirrorResult {
    pub p: Vec<f64>,
    pub value: f64,
    /// Frank–Wolfe gap at `p`; an upper bound on `max − value`.
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn fw_gap(p: &[f64], grad: &[f64]) -> f64 {
    let inner: f64 = p.iter().zip(grad).map(|(a, b)| if *a == 0.0 { 0.0 } else { a * b }).sum();
    let gmax = grad.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    gmax - inner
}

/// Maximizes a concave `obj` (returning value and gradient in probability
/// coordinates) from the interior starting point `start`.
pub fn maximize_on_simplex<F>(mut obj: F, start: Vec<f64>, cfg: MirrorConfig) -> MirrorResult
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let mut p = start;
    let (mut value, mut grad) = obj(&p);
    let mut step = 1.0;
    let mut iterations = 0;
    let mut gap = fw_gap(&p, &grad);
    while iterations < cfg.max_iter && !(gap <= cfg.gap_tol) {
        iterations += 1;
        let mut accepted = false;
        for _ in 0..60 {
            let shift = grad.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut cand: Vec<f64> = p
                .iter()
                .zip(&grad)
                .map(|(pi, gi)| pi * (step * (gi - shift)).exp())
                .collect();
            let total: f64 = cand.iter().sum();
            cand.iter_mut().for_each(|c| *c /= total);
            let (cv, cg) = obj(&cand);
            if cv.is_finite() && cv >= value - 1e-15 * (1.0 + value.abs()) {
                p = cand;
                value = cv;
                grad = cg;
                step *= 1.5;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        gap = fw_gap(&p, &grad);
        if !accepted {
            break;
        }
    }
    MirrorResult { p, value, gap, iterations, converged: gap <= cfg.gap_tol }
}
