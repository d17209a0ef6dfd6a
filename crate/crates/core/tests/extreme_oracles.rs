//! Extreme-problem solvers against brute-force oracles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use seqdetect::extreme::{solve_besov_extreme, solve_extreme, solve_sup_coordinate, SparseProblem};
use seqdetect::{BesovSpec, ProblemSpec, SequenceFamily};

/// Per-group `(objective, energy, smoothness, h, z)` on a `(h, z)` grid.
fn group_table(pr: &SparseProblem, g: usize, hs: &[f64], zs: &[f64]) -> Vec<[f64; 5]> {
    let mut out = Vec::with_capacity(hs.len() * zs.len());
    for &h in hs {
        for &z in zs {
            let sh = (z * z / 2.0).sinh();
            let obj = 2.0 * pr.mult[g] * h * h * sh * sh;
            let energy = pr.p[g] * h * z * z;
            let smooth = if h == 0.0 { 0.0 } else { pr.c[g] * h.powf(pr.s) * z.powf(pr.tau) };
            out.push([obj, energy, smooth, h, z]);
        }
    }
    out
}

fn axis(center: f64, half: f64, step: f64, lo: f64, hi: f64) -> Vec<f64> {
    let n = (2.0 * half / step).round() as i64;
    (0..=n)
        .map(|i| center - half + i as f64 * step)
        .filter(|v| *v >= lo - 1e-12 && *v <= hi + 1e-12)
        .map(|v| v.clamp(lo, hi))
        .collect()
}

/// Cheapest third group supplying `need` energy within `budget` smoothness,
/// with `h ≤ 1` and `z ≤ 3`. With the energy equation binding, `h = need/(p z²)`;
/// the objective then increases in `z` and the smoothness decreases, so the
/// answer is the smallest admissible `z`.
fn last_group(pr: &SparseProblem, need: f64, budget: f64) -> Option<f64> {
    if need <= 0.0 {
        return Some(0.0);
    }
    if budget <= 0.0 {
        return None;
    }
    let g = 2;
    let kappa = pr.tau - 2.0 * pr.s;
    let base = need / pr.p[g];
    let z_box = base.sqrt();
    let z_smooth = (budget / (pr.c[g] * base.powf(pr.s))).powf(1.0 / kappa);
    let z = z_box.max(z_smooth);
    if z > 3.0 {
        return None;
    }
    let h = base / (z * z);
    let sh = (z * z / 2.0).sinh();
    Some(2.0 * pr.mult[g] * h * h * sh * sh)
}

/// Minimum of the three-group problem over `(h, z) ∈ ([0, 1] × [0, 3])³`.
/// Groups 1 and 2 run over a grid (steps 0.02 in `h`, 0.05 in `z`, then two
/// tenfold zooms around the incumbent); group 3 is solved in closed form.
fn grid_oracle(pr: &SparseProblem) -> f64 {
    assert_eq!(pr.len(), 3);
    let mut centre = [[0.5, 1.5]; 2];
    let mut half = [0.5, 1.5];
    let mut step = [0.02, 0.05];
    let mut best = f64::INFINITY;
    for _ in 0..3 {
        let tables: Vec<_> = (0..2)
            .map(|g| {
                let hs = axis(centre[g][0], half[0], step[0], 0.0, 1.0);
                let zs = axis(centre[g][1], half[1], step[1], 0.0, 3.0);
                group_table(pr, g, &hs, &zs)
            })
            .collect();
        let mut arg = centre;
        for a in &tables[0] {
            if a[0] >= best || a[2] > pr.e {
                continue;
            }
            for b in &tables[1] {
                let obj = a[0] + b[0];
                if obj >= best {
                    continue;
                }
                if let Some(last) = last_group(pr, pr.r2 - a[1] - b[1], pr.e - a[2] - b[2]) {
                    if obj + last < best {
                        best = obj + last;
                        arg = [[a[3], a[4]], [b[3], b[4]]];
                    }
                }
            }
        }
        centre = arg;
        half = step;
        step = [step[0] / 10.0, step[1] / 10.0];
    }
    best.sqrt()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn sparse_three_coordinates_match_grid() {
    let pr = SparseProblem {
        mult: vec![1.0; 3],
        p: vec![1.0, 2.0, 4.0],
        c: vec![1.0, 4.0, 16.0],
        s: 1.0,
        tau: 1.0,
        r2: 3.0,
        e: 4.0,
    };
    let sol = pr.solve().unwrap();
    assert!(pr.is_feasible(&sol.h, &sol.z, 1e-6));
    let grid = grid_oracle(&pr);
    assert!(rel(sol.u, grid) <= 0.02, "solver {} grid {}", sol.u, grid);
}

#[test]
fn sparse_with_unequal_multiplicities_matches_grid() {
    let pr = SparseProblem {
        mult: vec![1.0, 2.0, 3.0],
        p: vec![1.0, 1.5, 2.0],
        c: vec![1.0, 3.0, 9.0],
        s: 1.0,
        tau: 1.5,
        r2: 4.0,
        e: 6.0,
    };
    let sol = pr.solve().unwrap();
    assert!(pr.is_feasible(&sol.h, &sol.z, 1e-6));
    let grid = grid_oracle(&pr);
    assert!(rel(sol.u, grid) <= 0.02, "solver {} grid {}", sol.u, grid);
}

#[test]
fn besov_three_levels_match_grid() {
    let spec = BesovSpec::new(2.0, 0.5, 1.5, 1.5, 0.02, 0.005, 3).unwrap();
    let pr = SparseProblem::from_besov(&spec).unwrap();
    let sol = solve_besov_extreme(&spec).unwrap();
    assert!(pr.is_feasible(&sol.h, &sol.z, 1e-6));
    let grid = grid_oracle(&pr);
    assert!(rel(sol.u, grid) <= 0.02, "solver {} grid {}", sol.u, grid);
}

/// Minimum of `Σ η_k⁴` over `η² ≥ 0` with `Σ σ²η² = r²` and `Σ a²σ²η² ≤ 1`
/// for three coordinates, by eliminating the last coordinate through the
/// energy equation and zooming a grid over the other two.
fn l2_grid(a: &[f64; 3], s: &[f64; 3], r: f64) -> f64 {
    let c = s.map(|v| v * v);
    let b = a.map(|v| v * v);
    let (mut lo, mut hi) = ([0.0; 2], [r * r / c[0], r * r / c[1]]);
    let mut best = (f64::INFINITY, [0.0; 2]);
    for _ in 0..6 {
        let n = 400;
        for i in 0..=n {
            for j in 0..=n {
                let x = [
                    lo[0] + (hi[0] - lo[0]) * i as f64 / n as f64,
                    lo[1] + (hi[1] - lo[1]) * j as f64 / n as f64,
                ];
                let last = (r * r - x[0] * c[0] - x[1] * c[1]) / c[2];
                if last < 0.0 {
                    continue;
                }
                let smooth = x[0] * c[0] * b[0] + x[1] * c[1] * b[1] + last * c[2] * b[2];
                let obj = x[0] * x[0] + x[1] * x[1] + last * last;
                if smooth <= 1.0 && obj < best.0 {
                    best = (obj, x);
                }
            }
        }
        for d in 0..2 {
            let w = (hi[d] - lo[d]) / 20.0;
            lo[d] = (best.1[d] - w).max(0.0);
            hi[d] = best.1[d] + w;
        }
    }
    best.0
}

#[test]
fn l2_tables_match_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..12 {
        let mut a = [1.0, 0.0, 0.0];
        a[1] = a[0] + rng.random_range(0.2..2.0);
        a[2] = a[1] + rng.random_range(0.2..2.0);
        let mut s = [1.0, 0.0, 0.0];
        s[1] = s[0] * rng.random_range(1.05..3.0);
        s[2] = s[1] * rng.random_range(1.05..3.0);
        let r = rng.random_range(0.3..0.95) / a[0];
        let spec = ProblemSpec::new(
            SequenceFamily::table(a.to_vec()).unwrap(),
            SequenceFamily::table(s.to_vec()).unwrap(),
            2.0,
            r,
            1.0,
            3,
        )
        .unwrap();
        let sol = solve_extreme(&spec).unwrap();
        let u_grid = (l2_grid(&a, &s, r) / 2.0).sqrt();
        assert!(rel(sol.u, u_grid) <= 1e-3, "a {a:?} s {s:?} r {r}: solver {} grid {u_grid}", sol.u);
        assert!(sol.u <= u_grid * (1.0 + 1e-9));
    }
}

#[test]
fn sup_coordinate_is_never_beaten_by_feasible_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    for _ in 0..20 {
        let n = rng.random_range(2..6);
        let mut b = vec![rng.random_range(0.5..2.0)];
        for _ in 1..n {
            let last = *b.last().unwrap();
            b.push(last * rng.random_range(1.2..3.0));
        }
        let c: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
        let ratios = seqdetect::extreme::supcoord::b_ratios(&b, &c);
        let t: f64 = rng.random_range(0.05..0.95);
        let r = ratios[n - 1] + t * (ratios[0] - ratios[n - 1]);
        let sol = solve_sup_coordinate(&b, &c, r).unwrap();
        let smooth: f64 = sol.x_star.iter().zip(&b).zip(&c).map(|((x, b), c)| x * b * c).sum();
        let energy: f64 = sol.x_star.iter().zip(&c).map(|(x, c)| x * c).sum();
        assert!(smooth <= 1.0 + 1e-10 && (energy - r).abs() <= 1e-10 * r);
        for _ in 0..20_000 {
            let dir: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let k = r / dir.iter().zip(&c).map(|(x, c)| x * c).sum::<f64>();
            let x: Vec<f64> = dir.iter().map(|v| v * k).collect();
            if x.iter().zip(&b).zip(&c).map(|((x, b), c)| x * b * c).sum::<f64>() <= 1.0 {
                let sup = x.iter().copied().fold(0.0, f64::max);
                assert!(sup >= sol.w * (1.0 - 1e-12), "sampled {sup} below w {}", sol.w);
            }
        }
    }
}
