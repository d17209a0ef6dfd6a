//! Invariants of the sequence families and of the extreme-problem solvers.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use seqdetect::extreme::supcoord::{b_ratios, c_bounds};
use seqdetect::extreme::{r_of_a, solve_extreme, solve_sup_coordinate, u_piecewise};
use seqdetect::spectra::{classify_regime, ellipsoid_membership, preset, Membership, Preset, Regime};
use seqdetect::{ProblemSpec, SequenceFamily};

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

/// `σ` from one of the three parametric kinds, chosen by `kind`.
fn sigma_family(kind: u8, exponent: f64) -> SequenceFamily {
    match kind % 3 {
        0 => SequenceFamily::polynomial(1.0, 2.0 * exponent).unwrap(),
        1 => SequenceFamily::exponential(1.0, exponent).unwrap(),
        _ => SequenceFamily::power_exponential(1.0, 0.2 * exponent, 1.5).unwrap(),
    }
}

/// Radius `10^{−0.3 − t·min(3.7, 6α − 0.3)}`, so that `m ≈ r^{−1/α} ≤ 10⁶`.
fn radius(alpha: f64, t: f64) -> f64 {
    10f64.powf(-0.3 - t * (6.0 * alpha - 0.3).min(3.7))
}

/// Whether `ln σ_k` stays below `10⁴` up to index `m`.
fn moderate(sigma: &SequenceFamily, m: f64) -> bool {
    m <= 1e7 && sigma.log_value(m.ceil() as usize).unwrap() <= 1e4
}

fn l2_spec(alpha: f64, sigma: SequenceFamily, r: f64, eps: f64) -> ProblemSpec {
    ProblemSpec::new(SequenceFamily::polynomial(1.0, alpha).unwrap(), sigma, 2.0, r, eps, 1000).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn families_increase(kind in 0u8..4, scale in 0.1f64..10.0, exponent in 0.05f64..3.0, power in 1.0f64..2.5) {
        let fam = match kind {
            0 => SequenceFamily::polynomial(scale, exponent).unwrap(),
            1 => SequenceFamily::exponential(scale, exponent).unwrap(),
            2 => SequenceFamily::power_exponential(scale, exponent, power).unwrap(),
            _ => {
                let mut v = vec![scale];
                for i in 1..50 {
                    v.push(v[i - 1] * (1.0 + exponent));
                }
                SequenceFamily::table(v).unwrap()
            }
        };
        let logs = fam.log_values(50).unwrap();
        prop_assert!(logs.windows(2).all(|w| w[1] > w[0]));
        for (k, l) in logs.iter().enumerate().filter(|(_, l)| **l < 700.0) {
            prop_assert!(rel(fam.value(k + 1).unwrap(), l.exp()) < 1e-12);
        }
    }

    #[test]
    fn q_body_embeds_in_l2_body(q in 0.3f64..1.99, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = SequenceFamily::polynomial(1.0, 1.0).unwrap();
        let sigma = SequenceFamily::polynomial(1.0, 0.5).unwrap();
        let k = 20;
        let spec_q = ProblemSpec::new(a.clone(), sigma.clone(), q, 1e-3, 0.1, k).unwrap();
        let spec_2 = ProblemSpec::new(a.clone(), sigma.clone(), 2.0, 1e-3, 0.1, k).unwrap();
        let raw: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0)).collect();
        let weights = |p: f64| -> f64 {
            raw.iter().enumerate().map(|(i, x)| {
                let kk = (i + 1) as f64;
                (kk * kk.sqrt() * x.abs()).powf(p)
            }).sum()
        };
        let scale = (0.999 / weights(q)).powf(1.0 / q);
        let eta: Vec<f64> = raw.iter().map(|x| x * scale).collect();
        prop_assert_ne!(ellipsoid_membership(&eta, &spec_q).unwrap(), Membership::Outside);
        prop_assert_ne!(ellipsoid_membership(&eta, &spec_2).unwrap(), Membership::Outside);
    }

    #[test]
    fn multiplier_round_trip(alpha in 0.5f64..3.0, kind in 0u8..3, exponent in 0.1f64..1.5, t in 0.0f64..1.0) {
        let s = l2_spec(alpha, sigma_family(kind, exponent), 0.1, 1e-3);
        // A₀ log-uniform between a₂⁻² · 10⁻⁵ and a₂⁻².
        let a_max = 2f64.powf(-2.0 * alpha);
        let a0 = a_max * 10f64.powf(-5.0 * t);
        prop_assume!(moderate(&s.sigma, a0.powf(-0.5 / alpha)));
        let r = r_of_a(a0, &s).unwrap();
        if r < 1.0 && a0 < a_max * (1.0 - 1e-9) {
            let sol = solve_extreme(&s.with_radius(r).unwrap()).unwrap();
            if kind < 2 {
                prop_assert!(rel(sol.multiplier, a0) <= 1e-10, "A₀ = {a0}, A = {}", sol.multiplier);
            } else {
                // r(A) is nearly flat in the extreme regime; the round trip holds in r.
                prop_assert!(rel(r_of_a(sol.multiplier, &s).unwrap(), r) <= 1e-12);
            }
        }
    }

    #[test]
    fn residuals_and_closed_form(alpha in 0.5f64..3.0, kind in 0u8..3, exponent in 0.1f64..1.5,
                                 t in 0.0f64..1.0, le in -6.0f64..-1.0) {
        let s = l2_spec(alpha, sigma_family(kind, exponent), radius(alpha, t), 10f64.powf(le));
        prop_assume!(moderate(&s.sigma, s.r.powf(-1.0 / alpha)));
        let sol = solve_extreme(&s).unwrap();
        prop_assert!(sol.residuals[0] <= 1e-8 && sol.residuals[1] <= 1e-8, "{:?}", sol.residuals);
        // |Δ ln u| bounds the relative error in u, also where u is below the f64 range.
        prop_assert!((sol.ln_u_closed_form() - sol.ln_u).abs() <= 1e-8);
        if sol.u.is_normal() {
            prop_assert!((sol.u.ln() - sol.ln_u).abs() <= 1e-12);
            let top = sol.eta_sq.iter().copied().fold(0.0, f64::max);
            let sum = sol.eta_sq.iter().map(|e| (e / top).powi(2)).sum::<f64>();
            let direct = top * (sum / 2.0).sqrt() / (s.eps * s.eps);
            prop_assert!(rel(direct, sol.u) <= 1e-8);
        }
    }

    #[test]
    fn rescaling_identity(alpha in 0.5f64..2.5, beta in 0.0f64..2.0, lc in -1.0f64..1.0, ld in -1.0f64..1.0,
                          lr in -3.0f64..-0.5) {
        let (c, d) = (10f64.powf(lc), 10f64.powf(ld));
        let r = 10f64.powf(lr);
        let mk = |sa: f64, ss: f64, r: f64| ProblemSpec::new(
            SequenceFamily::polynomial(sa, alpha).unwrap(),
            SequenceFamily::polynomial(ss, beta).unwrap(),
            2.0, r, 1e-3, 1000,
        ).unwrap();
        let scaled = solve_extreme(&mk(c, d, r / c)).unwrap().u;
        let base = solve_extreme(&mk(1.0, 1.0, r)).unwrap().u;
        prop_assert!(rel(scaled, base / (c * d).powi(2)) <= 1e-8);
    }

    #[test]
    fn u_increases_with_r(alpha in 0.5f64..3.0, kind in 0u8..3, exponent in 0.1f64..1.5,
                          t in 0.0f64..1.0, step in 0.01f64..0.3) {
        let s = l2_spec(alpha, sigma_family(kind, exponent), radius(alpha, t), 1e-3);
        let u1 = solve_extreme(&s).unwrap().ln_u;
        let u2 = solve_extreme(&s.with_radius(s.r * 10f64.powf(step)).unwrap()).unwrap().ln_u;
        prop_assert!(u2 > u1);
    }

    #[test]
    fn sup_coordinate_invariants(n in 2usize..8, seed in any::<u64>(), t in 0.0f64..=1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut b = vec![rng.random_range(0.5..2.0)];
        for _ in 1..n {
            let last = *b.last().unwrap();
            b.push(last * rng.random_range(1.1..4.0));
        }
        let c: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..3.0)).collect();
        let big_b = b_ratios(&b, &c);
        let big_c = c_bounds(&b, &c);
        let r = big_b[n - 1] + t * (big_b[0] - big_b[n - 1]);
        let sol = solve_sup_coordinate(&b, &c, r).unwrap();
        let m = sol.m;
        prop_assert!(big_b[m - 1] <= r * (1.0 + 1e-12) && r <= big_b[m - 2] * (1.0 + 1e-12));
        prop_assert!(big_c[m - 1] <= sol.w * (1.0 + 1e-9) && sol.w <= big_c[m - 2] * (1.0 + 1e-9));
        prop_assert!(sol.w0 <= sol.w * (1.0 + 1e-12) && sol.w0 >= -1e-15);
        let smooth: f64 = sol.x_star.iter().zip(&b).zip(&c).map(|((x, b), c)| x * b * c).sum();
        let energy: f64 = sol.x_star.iter().zip(&c).map(|(x, c)| x * c).sum();
        prop_assert!((smooth - 1.0).abs() <= 1e-10 && (energy - r).abs() <= 1e-10 * r);
    }
}

#[test]
fn r_equal_to_b_m_gives_uniform_solution() {
    let (b, c) = ([1.0, 4.0, 9.0], [1.0, 1.0, 1.0]);
    let big_b = b_ratios(&b, &c);
    let sol = solve_sup_coordinate(&b, &c, big_b[2]).unwrap();
    assert!(rel(sol.w0, sol.w) < 1e-12);
}

#[test]
fn presets_classify_as_documented() {
    let cases = [
        (Preset::Differentiation(2.0), Regime::Mild),
        (Preset::Dirichlet, Regime::Severe),
        (Preset::Heat, Regime::Extreme),
    ];
    for (p, regime) in cases {
        assert_eq!(classify_regime(&preset(&p).unwrap().sigma), regime, "{p:?}");
    }
}

#[test]
fn w0_vanishes_in_mild_regime_and_stays_positive_when_severe() {
    let a = SequenceFamily::polynomial(1.0, 1.0).unwrap();
    let mild = ProblemSpec::new(a.clone(), SequenceFamily::polynomial(1.0, 1.0).unwrap(), 2.0, 0.1, 1e-3, 1000).unwrap();
    let mut prev = f64::INFINITY;
    for r in [1e-1, 1e-2, 1e-3, 1e-4] {
        let sol = solve_extreme(&mild.with_radius(r).unwrap()).unwrap();
        assert!(sol.w0 * (sol.m as f64).sqrt() <= 2.0, "m = {}, w0 = {}", sol.m, sol.w0);
        assert!(sol.w0 < prev);
        prev = sol.w0;
    }
    let severe = ProblemSpec::new(a, SequenceFamily::exponential(1.0, 1.0).unwrap(), 2.0, 0.1, 1e-3, 1000).unwrap();
    for r in [0.5, 0.2, 0.1, 0.05, 0.02] {
        let sol = solve_extreme(&severe.with_radius(r).unwrap()).unwrap();
        assert!(sol.w0 >= 0.5, "r = {r}, w0 = {}", sol.w0);
    }
}

/// In the extreme regime every alternative has a large coordinate:
/// `max_{k≤m} η_k²/ε² ≥ u_lin/(2√2)·(1 − 0.1)` for sampled `η ∈ Θ₂(r)`.
#[test]
fn sampled_alternatives_have_a_large_coordinate() {
    let spec = ProblemSpec::new(
        SequenceFamily::polynomial(1.0, 1.0).unwrap(),
        SequenceFamily::power_exponential(1.0, 1.0, 2.0).unwrap(),
        2.0,
        0.3,
        1e-3,
        12,
    )
    .unwrap();
    let lin = u_piecewise(&spec).unwrap();
    let m = lin.m;
    let sigma2: Vec<f64> = (1..=12).map(|k| spec.sigma.value(k).unwrap().powi(2)).collect();
    let a2: Vec<f64> = (1..=12).map(|k| spec.a.value(k).unwrap().powi(2)).collect();
    let bound = lin.u_lin / (2.0 * 2f64.sqrt()) * 0.9;
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut checked = 0;
    for _ in 0..200_000 {
        // Energy fractions decaying geometrically in k, mapped to η² = r² y_k / σ_k².
        let y: Vec<f64> = (0..m + 1).map(|k| rng.random::<f64>().powi(3) * 0.25f64.powi(k as i32)).collect();
        let total: f64 = y.iter().sum();
        let x: Vec<f64> = y.iter().zip(&sigma2).map(|(y, s)| spec.r * spec.r * y / (total * s)).collect();
        let smooth: f64 = x.iter().zip(&sigma2).zip(&a2).map(|((x, s), a)| x * s * a).sum();
        if smooth <= 1.0 {
            checked += 1;
            let top = x[..m].iter().copied().fold(0.0, f64::max) / (spec.eps * spec.eps);
            assert!(top >= bound, "max {top} below {bound}");
        }
    }
    assert!(checked > 100, "only {checked} feasible samples");
}
