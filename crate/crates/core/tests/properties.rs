use proptest::prelude::*;

use dampwave::exponents::{
    admissible_set, classify_regime, fujita_exponent, gamma_poly, lifespan_bound, mu_star, strauss_exponent,
    theta_exponent, CRITICAL_TOL,
};
use dampwave::hypergeom::{hyp2f1_value, pochhammer};
use dampwave::quadrature::{cumulative_trapezoid, trapezoid};
use dampwave::regression::linear_fit;
use dampwave::testfunc::{ConeDomain, TestFunctionFamily};
use dampwave::wavesolver::{parse_snapshots_csv, snapshots_csv, Snapshot};
use dampwave::{HypergeomParams, ProblemClass, RegimeTag};

fn p0(n: f64) -> f64 {
    ((n + 1.0) + ((n + 1.0).powi(2) + 8.0 * (n - 1.0)).sqrt()) / (2.0 * (n - 1.0))
}

/// Largest grid point of the three-interval intersection, or `None`.
fn scan_sup(n: f64, mu: f64, p: f64) -> Option<f64> {
    let hi1 = 1.0 / p;
    let hi2 = (n - (1.0 - mu).abs()) / 2.0;
    let lo3 = ((n - 1.0 + mu) * p - (n + 1.0 + mu)) / 2.0;
    let hi3 = ((n + 1.0 + mu) * p - (n + 3.0 + mu)) / 2.0;
    (1..20_000)
        .map(|k| k as f64 * 1e-4)
        .filter(|&s| s < hi1 && s < hi2 && s > lo3 && s < hi3)
        .last()
}

/// `(N, μ, p)` inside the admissible-set hypotheses.
fn admissible_class() -> impl Strategy<Value = (u32, f64, f64)> {
    (1u32..=4, 0.0..1.0f64, 0.0..0.999f64).prop_map(|(n, mfrac, pfrac)| {
        let mu = if n == 1 {
            0.01 + mfrac * (4.0 / 3.0 - 0.02)
        } else {
            mfrac * mu_star(n) * 0.999
        };
        let pf = fujita_exponent(n);
        let top = if n as f64 + mu > 1.0 {
            p0(n as f64 + mu)
        } else {
            pf + 5.0
        };
        (n, mu, pf + pfrac * (top - pf))
    })
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn strauss_root(n in 1.1..20.0f64) {
        let p = strauss_exponent(n).finite().unwrap();
        prop_assert!((p - p0(n)).abs() <= 1e-12 * p);
        prop_assert!(gamma_poly(n, p).abs() <= 1e-12 * (n + 1.0) * p * p);
        prop_assert!(strauss_exponent(n + 0.05).finite().unwrap() < p);
    }

    #[test]
    fn fujita_below_strauss(n in 1u32..=6, frac in 0.0..0.999f64) {
        let mu = frac * mu_star(n);
        let nmu = n as f64 + mu;
        if nmu > 1.0 {
            prop_assert!(fujita_exponent(n) < p0(nmu));
        }
    }

    #[test]
    fn sup_matches_scan((n, mu, p) in admissible_class()) {
        let pc = ProblemClass::new(n, mu, p).unwrap();
        let sn = admissible_set(&pc).unwrap();
        let scan = scan_sup(n as f64, mu, p);
        prop_assert!(scan.is_some(), "scan finds an empty set");
        prop_assert!((sn.sup_value - scan.unwrap()).abs() < 2e-4, "{} vs {:?}", sn.sup_value, scan);
        prop_assert!((sn.interval.hi - sn.sup_value).abs() < 1e-15);
    }

    #[test]
    fn theta_on_one_over_p_branch((n, mu, p) in admissible_class()) {
        let pc = ProblemClass::new(n, mu, p).unwrap();
        let sn = admissible_set(&pc).unwrap();
        if (sn.sup_value - 1.0 / p).abs() < 1e-15 {
            let expect = 2.0 * p * (p - 1.0) / gamma_poly(n as f64 + mu, p);
            let theta = theta_exponent(&pc).unwrap();
            prop_assert!((theta - expect).abs() <= 1e-12 * expect.abs());
        }
    }

    #[test]
    fn classify_stable_off_boundary((n, mu, p) in admissible_class(), shift in -0.49..0.49f64) {
        let tol = 1e-6;
        let base = classify_regime(&ProblemClass::new(n, mu, p).unwrap(), tol);
        let boundaries = [fujita_exponent(n), p0(n as f64 + mu), p0(n as f64 + 2.0 + mu), 3.0, 2.0 / mu];
        let moved = p * (1.0 + shift * tol / 2.0);
        if boundaries.iter().all(|b| (p - b).abs() > 2.0 * tol * p) {
            let other = classify_regime(&ProblemClass::new(n, mu, moved).unwrap(), tol);
            prop_assert_eq!(base, other);
        }
    }

    #[test]
    fn lifespan_bound_decreases_in_eps((n, mu, p) in admissible_class(), e in 0.05..0.9f64) {
        let pc = ProblemClass::new(n, mu, p).unwrap();
        if classify_regime(&pc, CRITICAL_TOL).tag == RegimeTag::Subcritical {
            let a = lifespan_bound(&pc, e, 0.1, 1.0).unwrap().value();
            let b = lifespan_bound(&pc, e * 1.1, 0.1, 1.0).unwrap().value();
            prop_assume!(a.is_finite());
            prop_assert!(b < a);
        }
    }

    #[test]
    fn pochhammer_recurrence(d in -5.0..5.0f64, n in 0u32..30) {
        let lhs = pochhammer(d, n + 1);
        let rhs = pochhammer(d, n) * (d + n as f64);
        prop_assert!((lhs - rhs).abs() <= 2.0 * f64::EPSILON * rhs.abs());
    }

    #[test]
    fn series_against_direct_sum(a in -2.0..3.0f64, b in -2.0..3.0f64, c in 0.3..4.0f64, z in 0.0..0.5f64) {
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 0..500 {
            let k = k as f64;
            term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z;
            sum += term;
        }
        let v = hyp2f1_value(&HypergeomParams::new(a, b, c), z).unwrap();
        prop_assert!((v - sum).abs() <= 1e-12 * sum.abs().max(1.0));
    }

    #[test]
    fn monotone_in_a(a in 0.0..3.0f64, b in 0.01..3.0f64, c in 0.5..3.0f64, z in 0.01..0.95f64) {
        let lo = hyp2f1_value(&HypergeomParams::new(a, b, c), z).unwrap();
        let hi = hyp2f1_value(&HypergeomParams::new(a + 2.0, b, c), z).unwrap();
        prop_assert!(hi >= lo * (1.0 - 1e-12));
    }

    #[test]
    fn psi_at_least_one(beta in 0.05..4.0f64, mu in 0.0..3.0f64, n in 1u32..=4, z in 0.0..0.98f64) {
        prop_assume!(beta - 1.0 + mu > 0.0);
        let fam = TestFunctionFamily::new(beta, mu, n).unwrap();
        prop_assert!(fam.psi(z).unwrap() >= 1.0 - 1e-12);
    }

    #[test]
    fn phi_positive_in_cone(beta in 0.05..4.0f64, mu in 0.0..3.0f64, n in 1u32..=4, t in 0.0..5.0f64, frac in 0.0..0.98f64) {
        prop_assume!(beta - 1.0 + mu > 0.0);
        let fam = TestFunctionFamily::new(beta, mu, n).unwrap();
        let r = frac * (1.0 + t);
        prop_assert!(ConeDomain::Q1.contains(r, t));
        prop_assert!(fam.phi(r, t).unwrap() > 0.0);
        prop_assert!(fam.phi(1.0 + t, t).is_err());
    }

    #[test]
    fn self_similar_profile(beta in 0.1..3.0f64, mu in 0.0..2.0f64, n in 1u32..=3, lam in 0.2..5.0f64, t in 0.5..4.0f64, frac in 0.0..0.95f64) {
        let fam = TestFunctionFamily::new(beta, mu, n).unwrap();
        let r = frac * t;
        let f = |r: f64, t: f64| t.powf(-beta) * fam.psi(r * r / (t * t)).unwrap();
        let lhs = f(r, t);
        let rhs = lam.powf(beta) * f(lam * r, lam * t);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs());
    }

    #[test]
    fn cumulative_ends_at_total(ys in prop::collection::vec(-10.0..10.0f64, 2..50)) {
        let xs: Vec<f64> = (0..ys.len()).map(|k| (k as f64).powf(1.3)).collect();
        let c = cumulative_trapezoid(&xs, &ys);
        prop_assert_eq!(c[0], 0.0);
        prop_assert!((c[c.len() - 1] - trapezoid(&xs, &ys)).abs() <= 1e-12 * (1.0 + c[c.len() - 1].abs()));
    }

    #[test]
    fn exact_line(slope in -5.0..5.0f64, intercept in -5.0..5.0f64) {
        let xs = [0.0, 0.3, 1.0, 1.7, 2.5];
        let ys: Vec<f64> = xs.iter().map(|x| intercept + slope * x).collect();
        let f = linear_fit(&xs, &ys).unwrap();
        prop_assert!((f.slope - slope).abs() < 1e-12);
        prop_assert!((f.intercept - intercept).abs() < 1e-12);
    }

    #[test]
    fn snapshots_roundtrip(vals in prop::collection::vec(prop::collection::vec(-1e6..1e6f64, 2..20), 1..5), dr in 1e-4..0.1f64) {
        let snaps: Vec<Snapshot> = vals
            .into_iter()
            .enumerate()
            .map(|(k, values)| Snapshot { t: k as f64 * 0.37, values })
            .collect();
        let (back, dr_back) = parse_snapshots_csv(&snapshots_csv(&snaps, dr)).unwrap();
        prop_assert_eq!(back, snaps);
        prop_assert!((dr_back - dr).abs() <= 1e-12 * dr);
    }
}
