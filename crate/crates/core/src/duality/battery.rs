//! Checks of the equivalent regularity conditions for `I_{f,γ}`: finiteness of
//! `f(·, x)⁺` in the gauge norm, bounded sublevel sets of the divergence, the
//! Lebesgue property and attainment in the dual representation.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::conjugate::dual_representation_check;
use super::GridSpec;
use crate::error::Result;
use crate::functional::{integrability_report, robust_divergence, DivergenceConfig, I_f_gamma, Integrand, IntegrabilityReport};
use crate::penalty::Penalty;
use crate::space::FiniteSpace;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BatteryConfig {
    pub seed: u64,
    /// Random points and directions per test.
    pub samples: usize,
    /// Level of the `η` grid in the attainment test.
    pub grid_level: usize,
    /// Relative tolerance of the attainment and continuity tests.
    pub tol: f64,
    /// Level the divergence must exceed along every ray.
    pub sublevel: f64,
}

impl Default for BatteryConfig {
    fn default() -> Self {
        BatteryConfig { seed: 0, samples: 4, grid_level: 1, tol: 1e-7, sublevel: 10.0 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BatteryItem {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct BatteryReport {
    /// `I_{f,γ}` is finite at every sampled point.
    pub finite_on_samples: bool,
    pub items: Vec<BatteryItem>,
    /// Sublevel, Lebesgue and attainment tests agree.
    pub consistent: bool,
    pub integrability: IntegrabilityReport,
    pub notes: Vec<String>,
}

impl BatteryReport {
    pub fn item(&self, name: &str) -> Option<&BatteryItem> {
        self.items.iter().find(|i| i.name == name)
    }
}

pub const POSITIVE_PART: &str = "positive_part_finite";
pub const SUBLEVEL: &str = "sublevel_bounded";
pub const CONTINUITY: &str = "sup_norm_continuity";
pub const LEBESGUE: &str = "lebesgue_property";
pub const ATTAINMENT: &str = "attainment";

fn unit_direction(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    let d: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
    let n = d.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-12);
    d.iter().map(|v| v / n).collect()
}

fn constants() -> Vec<f64> {
    let mut out = vec![0.0];
    for k in -2..=2 {
        out.push(10f64.powi(k));
        out.push(-(10f64.powi(k)));
    }
    out
}

/// Runs the battery. When `I_{f,γ}` is infinite somewhere on the samples
/// the equivalences do not apply and only the integrability report is filled.
pub fn battery(f: &Integrand, space: &FiniteSpace, p: &Penalty, cfg: BatteryConfig) -> Result<BatteryReport> {
    space.check_len(f.len())?;
    let m = space.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let integrability = integrability_report(f, space, p)?;
    let mut notes = Vec::new();

    let mut points: Vec<Vec<f64>> = constants().into_iter().map(|c| vec![c; m]).collect();
    points.extend((0..cfg.samples).map(|_| (0..m).map(|_| rng.random_range(-4.0..4.0)).collect()));
    let mut finite_on_samples = true;
    for x in &points {
        if !I_f_gamma(f, space, p, x)?.is_finite() {
            finite_on_samples = false;
            notes.push(format!("functional infinite at {x:?}"));
            break;
        }
    }
    if !finite_on_samples {
        return Ok(BatteryReport { finite_on_samples, items: vec![], consistent: true, integrability, notes });
    }

    let mut items = Vec::new();

    // positive part of each constant section has finite gauge norm
    let mut bad = None;
    for c in constants() {
        let pos: Vec<f64> = f.sections().iter().map(|s| s.eval_f64(c).max(0.0)).collect();
        if pos.iter().any(|v| !v.is_finite()) || !p.gauge_norm(space, &pos)?.is_finite() {
            bad = Some(c);
            break;
        }
    }
    items.push(BatteryItem {
        name: POSITIVE_PART.into(),
        passed: bad.is_none(),
        detail: match bad {
            Some(c) => format!("infinite gauge norm at x = {c}"),
            None => "finite gauge norm at x = 0, ±10^k, k = -2..2".into(),
        },
    });

    // the divergence leaves every sublevel set along each ray
    let mut dirs: Vec<Vec<f64>> = (0..m)
        .flat_map(|i| {
            [1.0, -1.0].map(|sign| {
                let mut e = vec![0.0; m];
                e[i] = sign;
                e
            })
        })
        .collect();
    dirs.extend((0..cfg.samples).map(|_| unit_direction(&mut rng, m)));
    let mut stuck = None;
    'rays: for d in &dirs {
        for k in 0..=20 {
            let s = 2f64.powi(k);
            let eta: Vec<f64> = d.iter().map(|v| s * v).collect();
            let h = robust_divergence(space, f.conjugates(), p, &eta, DivergenceConfig::default())?.value;
            if h.value() > cfg.sublevel {
                continue 'rays;
            }
        }
        stuck = Some(d.clone());
        break;
    }
    items.push(BatteryItem {
        name: SUBLEVEL.into(),
        passed: stuck.is_none(),
        detail: match stuck {
            Some(d) => format!("divergence stays below {} along {d:?} up to scale 2^20", cfg.sublevel),
            None => format!("divergence exceeds {} along {} rays", cfg.sublevel, dirs.len()),
        },
    });

    // continuity in sup norm and along bounded a.s.-convergent sequences
    let base: Vec<Vec<f64>> = points[points.len() - cfg.samples..].to_vec();
    let mut worst_cont: f64 = 0.0;
    let mut worst_seq: f64 = 0.0;
    for x in &base {
        let ix = I_f_gamma(f, space, p, x)?.value();
        let d = unit_direction(&mut rng, m);
        let eps = 1e-7;
        let moved: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + eps * b).collect();
        worst_cont = worst_cont.max((I_f_gamma(f, space, p, &moved)?.value() - ix).abs() / (1.0 + ix.abs()));
        let mut last = 0.0;
        for n in [10.0, 1e3, 1e5, 1e7] {
            let xn: Vec<f64> = x.iter().map(|a| a + rng.random_range(-1.0..1.0) / n).collect();
            last = (I_f_gamma(f, space, p, &xn)?.value() - ix).abs() / (1.0 + ix.abs());
        }
        worst_seq = worst_seq.max(last);
    }
    // a locally Lipschitz functional moves by at most L·1e-7 on these scales
    let cont_tol = 1e-4;
    items.push(BatteryItem {
        name: CONTINUITY.into(),
        passed: worst_cont <= cont_tol,
        detail: format!("max relative change {worst_cont:.3e} under perturbations of size 1e-7"),
    });
    items.push(BatteryItem {
        name: LEBESGUE.into(),
        passed: worst_seq <= cont_tol,
        detail: format!("max relative distance {worst_seq:.3e} at sequence index 1e7"),
    });

    let grid = GridSpec { radius: 4.0, level: cfg.grid_level.max(1) };
    let mut missed = None;
    for x in &base {
        let r = dual_representation_check(f, space, p, x, grid)?;
        if !r.attained || r.slack < -cfg.tol * (1.0 + r.value.value().abs()) {
            missed = Some((x.clone(), r.slack));
            break;
        }
    }
    items.push(BatteryItem {
        name: ATTAINMENT.into(),
        passed: missed.is_none(),
        detail: match missed {
            Some((x, slack)) => format!("no maximizer found at {x:?} (slack {slack:.3e})"),
            None => format!("maximizer attains the value at {} points", base.len()),
        },
    });

    let verdict = |name: &str| items.iter().find(|i| i.name == name).map(|i| i.passed);
    let consistent = verdict(SUBLEVEL) == verdict(LEBESGUE) && verdict(LEBESGUE) == verdict(ATTAINMENT);
    if !consistent {
        notes.push("sublevel, Lebesgue and attainment tests disagree".into());
    }
    Ok(BatteryReport { finite_on_samples, items, consistent, integrability, notes })
}
