//! Property tests over seeded random instances.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rfenchel::convex1d::{check_young_pointwise, perspective};
use rfenchel::duality::{subdifferential, GridSpec};
use rfenchel::functional::{young_check, I_f_gamma, Integrand};
use rfenchel::random::{self, Family, PlqShape};
use rfenchel::{FiniteSpace, Penalty};

fn family(k: u8) -> Family {
    Family::ALL[k as usize % 3]
}

fn instance(seed: u64, m: usize, fam: Family) -> (FiniteSpace, Integrand, Penalty) {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let s = random::space(&mut r, m);
    let sections = (0..m).map(|_| random::coercive_plq(&mut r, 3)).collect();
    let f = Integrand::new(&s, sections).unwrap();
    let p = random::penalty(&mut r, &s, fam);
    (s, f, p)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn legendre_is_an_involution(seed in any::<u64>(), x in -6.0f64..6.0) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let f = random::plq(&mut r, PlqShape::default());
        let back = f.legendre().unwrap().legendre().unwrap();
        let (a, b) = (f.eval_f64(x), back.eval_f64(x));
        prop_assert!(a == b || (a - b).abs() <= 1e-12, "{a} vs {b}");
    }

    #[test]
    fn pointwise_young_inequality(seed in any::<u64>(), t in 0.0f64..1.0, y in -5.0f64..5.0, z in 0.0f64..3.0) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let f = random::plq(&mut r, PlqShape::default());
        let (lo, hi) = f.domain();
        let (a, b) = (lo.max(-4.0), hi.min(4.0));
        let x = a + t * (b - a);
        prop_assert!(check_young_pointwise(&f, x, y, z).unwrap());
    }

    #[test]
    fn perspective_is_positively_homogeneous(seed in any::<u64>(), y in -4.0f64..4.0, z in 0.01f64..3.0, lam in 0.1f64..10.0) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let fstar = random::plq(&mut r, PlqShape::default()).legendre().unwrap();
        let a = perspective(&fstar, lam * y, lam * z);
        let b = perspective(&fstar, y, z).scale_nonneg(lam);
        prop_assert!(a == b || (a.value() - b.value()).abs() <= 1e-9 * (1.0 + b.value().abs()), "{a:?} vs {b:?}");
    }

    #[test]
    fn risk_measure_is_cash_additive_and_monotone(seed in any::<u64>(), fam in any::<u8>(), c in -3.0f64..3.0, bump in 0.0f64..2.0) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let m = 3;
        let s = random::space(&mut r, m);
        let p = random::penalty(&mut r, &s, family(fam));
        let x = random::vector(&mut r, m, -2.0, 2.0);
        let shifted: Vec<f64> = x.iter().map(|v| v + c).collect();
        let raised: Vec<f64> = x.iter().enumerate().map(|(i, v)| if i == 0 { v + bump } else { *v }).collect();
        let base = p.rho(&s, &x).unwrap().value();
        prop_assert!((p.rho(&s, &shifted).unwrap().value() - base - c).abs() < 1e-12);
        prop_assert!(p.rho(&s, &raised).unwrap().value() >= base - 1e-12);
    }

    #[test]
    fn entropic_risk_is_log_mean_exp(seed in any::<u64>()) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let s = random::space(&mut r, 4);
        let x = random::vector(&mut r, 4, -20.0, 20.0);
        let top = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let closed = top + s.weights().iter().zip(&x).map(|(w, v)| w * (v - top).exp()).sum::<f64>().ln();
        prop_assert!((Penalty::Entropic.rho(&s, &x).unwrap().value() - closed).abs() <= 1e-12 * (1.0 + closed.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn robust_young_inequality(seed in any::<u64>(), fam in any::<u8>(), xs in prop::collection::vec(-3.0f64..3.0, 3), etas in prop::collection::vec(-3.0f64..3.0, 3)) {
        let (s, f, p) = instance(seed, 3, family(fam));
        let slack = young_check(&f, &s, &p, &xs, &etas).unwrap();
        prop_assert!(slack >= -1e-8, "{slack}");
    }

    #[test]
    fn subgradients_satisfy_fenchel_equality(seed in any::<u64>(), fam in any::<u8>(), xs in prop::collection::vec(-3.0f64..3.0, 2)) {
        let (s, f, p) = instance(seed, 2, family(fam));
        let g = subdifferential(&f, &s, &p, &xs).unwrap();
        prop_assert!(g.fenchel_residual.abs() <= 1e-7, "{}", g.fenchel_residual);
        // and η is a subgradient: I(x') ≥ I(x) + E[(x' − x)η]
        let probe: Vec<f64> = xs.iter().map(|v| v + 0.5).collect();
        let lhs = I_f_gamma(&f, &s, &p, &probe).unwrap().value();
        let step: Vec<f64> = probe.iter().zip(&xs).map(|(a, b)| a - b).collect();
        prop_assert!(lhs >= g.value + s.pairing(&step, &g.eta) - 1e-7);
    }

    #[test]
    fn grid_points_stay_on_the_grid_under_refinement(level in 1usize..6, radius in 1.0f64..10.0) {
        let f = rfenchel::PiecewiseConvexFn::quadratic(1.0, 0.0, 0.0).unwrap();
        let coarse = GridSpec { radius, level }.points(&f);
        let fine = GridSpec { radius, level: level + 1 }.points(&f);
        for x in coarse {
            prop_assert!(fine.iter().any(|y| (x - y).abs() <= 1e-12 * radius));
        }
    }
}
