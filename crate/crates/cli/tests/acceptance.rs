//! Acceptance gate: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_RED` are expected to fail for reasons that no
//! correct implementation can avoid; they are still run and reported.

use std::f64::consts::E;
use std::process::Command;
use std::time::{Duration, Instant};

use affmin::affine_core::{best_affine, residual_sup, secant_dominance, Dominance};
use affmin::cheb1d::best_line;
use affmin::convexity::{
    canonicalize, classify_regions, component_field, hessian_canonical, semidefinite_class, triangle_admissible,
    Homography, RegionPartition,
};
use affmin::funcspec::{catalog, parse_field, Convexity, ScalarField};
use affmin::geometry::{random_simplex, Simplex};
use affmin::oracle::{solve_discrete_minimax, DiscreteMinimaxProblem};
use affmin::warp::{best_affine_map, taylor_affine, Image};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const KNOWN_RED: &[u32] = &[3];

struct Outcome {
    pass: bool,
    detail: String,
}

type Check = fn() -> Outcome;
type QuadraticInstance = (Simplex, ScalarField, [[f64; 2]; 2], [f64; 2]);

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn main() {
    let criteria: Vec<(u32, &str, Check, Option<Duration>)> = vec![
        (
            1,
            "equioscillation on random convex quadratics",
            equioscillation,
            Some(Duration::from_secs(10)),
        ),
        (
            2,
            "optimality against the discrete oracle",
            oracle_optimality,
            Some(Duration::from_secs(60)),
        ),
        (3, "one-dimensional analytic cases", analytic_1d, None),
        (4, "two-dimensional worked case", worked_2d, None),
        (5, "canonical Hessian against finite differences", hessian_check, None),
        (6, "region consistency", region_consistency, None),
        (7, "minimax dominance over the tangent map", taylor_dominance, None),
        (8, "warp determinism and pipeline", warp_pipeline, None),
        (9, "secant-dominance path for x^4 - x^2", secant_path, None),
    ];
    let mut unexpected = 0;
    for (id, name, check, budget) in criteria {
        let start = Instant::now();
        let mut result = check();
        let elapsed = start.elapsed();
        if let Some(limit) = budget {
            if elapsed > limit {
                result.pass = false;
                result.detail.push_str(&format!("; over time budget {limit:?}"));
            }
        }
        let status = if result.pass { "PASS" } else { "FAIL" };
        let known = !result.pass && KNOWN_RED.contains(&id);
        println!(
            "criterion {id} [{name}]: {status}{} ({:.2?}) {}",
            if known { " (known)" } else { "" },
            elapsed,
            result.detail
        );
        if !result.pass && !known {
            unexpected += 1;
        }
    }
    if unexpected > 0 {
        println!("{unexpected} criteria failed unexpectedly");
        std::process::exit(1);
    }
}

fn quadratic_instances() -> Vec<QuadraticInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    (0..100)
        .map(|_| {
            let s = random_simplex(2, 2.0, 0.05, &mut rng);
            let b_mat: [[f64; 2]; 2] = [
                [rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)],
                [rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)],
            ];
            let q = [
                [
                    b_mat[0][0] * b_mat[0][0] + b_mat[0][1] * b_mat[0][1],
                    b_mat[0][0] * b_mat[1][0] + b_mat[0][1] * b_mat[1][1],
                ],
                [
                    b_mat[0][0] * b_mat[1][0] + b_mat[0][1] * b_mat[1][1],
                    b_mat[1][0] * b_mat[1][0] + b_mat[1][1] * b_mat[1][1],
                ],
            ];
            let b = [rng.gen_range(-2.0..=2.0), rng.gen_range(-2.0..=2.0)];
            let f = catalog::quadratic(&[q[0].to_vec(), q[1].to_vec()], &b, 0.0).with_convexity(Convexity::Convex);
            (s, f, q, b)
        })
        .collect()
}

/// Exact `min_Δ (f − π)` for a quadratic: zero at vertices, `−eᵀQe/4` at
/// edge midpoints, or the interior critical value.
fn exact_gap(s: &Simplex, q: &[[f64; 2]; 2], b: &[f64; 2]) -> f64 {
    let f = |x: [f64; 2]| {
        x[0] * (q[0][0] * x[0] + q[0][1] * x[1]) + x[1] * (q[1][0] * x[0] + q[1][1] * x[1]) + b[0] * x[0] + b[1] * x[1]
    };
    let v: Vec<[f64; 2]> = (0..3).map(|i| [s.vertex(i)[0], s.vertex(i)[1]]).collect();
    // interpolant by Cramer's rule on [x y 1]
    let det3 = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let a = [
        [v[0][0], v[0][1], 1.0],
        [v[1][0], v[1][1], 1.0],
        [v[2][0], v[2][1], 1.0],
    ];
    let rhs = [f(v[0]), f(v[1]), f(v[2])];
    let d = det3(a);
    let coef: Vec<f64> = (0..3)
        .map(|c| {
            let mut m = a;
            for r in 0..3 {
                m[r][c] = rhs[r];
            }
            det3(m) / d
        })
        .collect();
    let gap = |x: [f64; 2]| f(x) - (coef[0] * x[0] + coef[1] * x[1] + coef[2]);
    let mut best = 0.0f64;
    for (i, j) in [(0, 1), (1, 2), (0, 2)] {
        best = best.min(gap([0.5 * (v[i][0] + v[j][0]), 0.5 * (v[i][1] + v[j][1])]));
    }
    let det_q = q[0][0] * q[1][1] - q[0][1] * q[1][0];
    if det_q.abs() > 1e-12 {
        // ∇(f − π) = 2Qx + b − α = 0
        let r = [coef[0] - b[0], coef[1] - b[1]];
        let x = [
            (q[1][1] * r[0] - q[0][1] * r[1]) / (2.0 * det_q),
            (q[0][0] * r[1] - q[1][0] * r[0]) / (2.0 * det_q),
        ];
        if s.contains_with(&x, 0.0).unwrap_or(false) {
            best = best.min(gap(x));
        }
    }
    best
}

fn equioscillation() -> Outcome {
    let mut worst = 0.0f64;
    let mut worst_sup = f64::NEG_INFINITY;
    let mut worst_exact = 0.0f64;
    for (s, f, q, b) in quadratic_instances() {
        let r = match best_affine(&s, &f, Convexity::Convex) {
            Ok(r) => r,
            Err(e) => return outcome(false, format!("best_affine failed: {e}")),
        };
        for res in &r.vertex_residuals {
            worst = worst.max((res - r.d).abs());
        }
        let w = f.eval(&r.witness).unwrap() - r.sigma.eval(&r.witness);
        worst = worst.max((w + r.d).abs());
        let sup = residual_sup(&s, &f, &r.sigma, 64).unwrap().sup_abs_residual;
        worst_sup = worst_sup.max(sup - r.d);
        worst_exact = worst_exact.max((r.d - 0.5 * exact_gap(&s, &q, &b).abs()).abs());
    }
    outcome(
        worst <= 1e-8 && worst_sup <= 1e-7 && worst_exact <= 1e-8,
        format!("max |residual ∓ d| = {worst:.2e}, max sup − d = {worst_sup:.2e}, max |d − exact| = {worst_exact:.2e}"),
    )
}

fn oracle_optimality() -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    for (s, f, _, _) in quadratic_instances() {
        let r = best_affine(&s, &f, Convexity::Convex).unwrap();
        let sup = residual_sup(&s, &f, &r.sigma, 64).unwrap().sup_abs_residual;
        let problem = DiscreteMinimaxProblem::from_lattice(&s, &f, 64, &[]).unwrap();
        let opt = match solve_discrete_minimax(&problem) {
            Ok(o) => o.optimum,
            Err(e) => return outcome(false, format!("oracle failed: {e}")),
        };
        worst = worst.max(sup - opt - 5e-3 * r.d - 1e-9);
    }
    outcome(worst <= 0.0, format!("max excess over lattice gap bound = {worst:.2e}"))
}

fn oracle_1d(f: &ScalarField, p: f64, q: f64) -> f64 {
    let s = Simplex::from_rows(&[[p], [q]]).unwrap();
    let problem = DiscreteMinimaxProblem::from_lattice(&s, f, 4096, &[]).unwrap();
    solve_discrete_minimax(&problem).unwrap().optimum
}

fn analytic_1d() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    let mut check = |ok: bool, msg: String| {
        pass &= ok;
        notes.push(format!("{}{msg}", if ok { "" } else { "✗ " }));
    };

    let sq = parse_field("x1^2", 1).unwrap();
    let l = best_line(-1.0, 1.0, &sq, Convexity::Unknown).unwrap();
    let o = oracle_1d(&sq, -1.0, 1.0);
    check((l.d - 0.5).abs() <= 1e-10, format!("x^2: d = {}", l.d));
    check((o - l.d).abs() <= 1e-10, format!("oracle {o}"));

    let ex = parse_field("exp(x1)", 1).unwrap();
    let l = best_line(0.0, 1.0, &ex, Convexity::Unknown).unwrap();
    let o = oracle_1d(&ex, 0.0, 1.0);
    let y = (E - 1.0).ln();
    check(
        (l.d - 0.105933).abs() <= 1e-6 && (l.m - (E - 1.0)).abs() <= 1e-8 && (l.y - y).abs() <= 1e-8,
        format!(
            "exp: d = {:.9}, slope err {:.1e}, witness err {:.1e}",
            l.d,
            l.m - (E - 1.0),
            l.y - y
        ),
    );
    check(o <= l.d + 1e-12 && l.d - o <= 5e-3 * l.d, format!("oracle {o:.9}"));

    let rc = parse_field("1/x1", 1).unwrap();
    let l = best_line(1.0, 2.0, &rc, Convexity::Unknown).unwrap();
    let o = oracle_1d(&rc, 1.0, 2.0);
    let stated = (3.0 - 2.0 * 2f64.sqrt()) / 2.0;
    check(
        (l.d - stated).abs() <= 1e-10,
        format!("1/x: d = {:.10} vs stated {stated:.10} (2d = {:.10})", l.d, 2.0 * l.d),
    );
    check(o <= l.d + 1e-12 && l.d - o <= 5e-3 * l.d, format!("oracle {o:.10}"));
    outcome(pass, notes.join("; "))
}

fn worked_2d() -> Outcome {
    let s = Simplex::from_rows(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
    let f = catalog::sqnorm(2);
    let r = best_affine(&s, &f, Convexity::Unknown).unwrap();
    let err = [
        r.sigma.alpha[0] - 1.0,
        r.sigma.alpha[1] - 1.0,
        r.sigma.beta + 0.25,
        r.d - 0.25,
        r.witness[0] - 0.5,
        r.witness[1] - 0.5,
    ]
    .iter()
    .fold(0.0f64, |m, e| m.max(e.abs()));
    outcome(err <= 1e-8, format!("max error {err:.2e}"))
}

fn random_homography(rng: &mut ChaCha8Rng) -> Homography {
    loop {
        let mut m = [[0.0; 3]; 3];
        m.iter_mut().flatten().for_each(|v| *v = rng.gen_range(-1.0..1.0));
        if let Ok(h) = Homography::new(m) {
            return h;
        }
    }
}

fn hessian_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let (mut worst_fd, mut worst_det) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let h = random_homography(&mut rng);
        for i in 1..=2 {
            let c = canonicalize(&h, i).unwrap();
            let f = component_field(&h, i);
            let mut done = 0;
            while done < 1000 {
                let x = rng.gen_range(-3.0..3.0);
                let y = rng.gen_range(-3.0..3.0);
                let t = x + c.delta;
                if t.abs() < 0.05 {
                    continue;
                }
                done += 1;
                let an = hessian_canonical(&c, x, y).unwrap();
                // central differences of the original component along the rotated axes
                let hs = 1e-3 * t.abs();
                let g = |dx: f64, dy: f64| f.eval(&c.from_canonical([x + dx, y + dy])).unwrap();
                let f0 = g(0.0, 0.0);
                let fxx = (g(hs, 0.0) - 2.0 * f0 + g(-hs, 0.0)) / (hs * hs);
                let fyy = (g(0.0, hs) - 2.0 * f0 + g(0.0, -hs)) / (hs * hs);
                let fxy = (g(hs, hs) - g(hs, -hs) - g(-hs, hs) + g(-hs, -hs)) / (4.0 * hs * hs);
                let scale = an.p11.abs().max(an.p12.abs()).max(an.p22.abs());
                let err = (fxx - an.p11).abs().max((fxy - an.p12).abs()).max((fyy - an.p22).abs());
                worst_fd = worst_fd.max(err / scale);
                let expected = -c.beta * c.beta / t.powi(4);
                worst_det = worst_det.max((an.det() - expected).abs() / expected.abs());
            }
        }
    }
    outcome(
        worst_fd <= 1e-5 && worst_det <= 1e-10,
        format!("max relative FD error {worst_fd:.2e}, max relative det error {worst_det:.2e}"),
    )
}

fn region_samples(part: &RegionPartition, rng: &mut ChaCha8Rng) -> Vec<Vec<[f64; 2]>> {
    let mut buckets: Vec<Vec<[f64; 2]>> = vec![Vec::new(); part.regions.len()];
    let c = part.canonical.as_ref().unwrap();
    let ys: Vec<f64> = c.iter().filter_map(|k| k.critical_y()).collect();
    let y_mid = ys.iter().sum::<f64>() / ys.len().max(1) as f64;
    let spread = ys.iter().fold(0.0f64, |m, y| m.max((y - y_mid).abs()));
    let center = c[0].from_canonical([-c[0].delta, y_mid]);
    let radius = 4.0 * (1.0 + spread);
    for _ in 0..200_000 {
        if buckets.iter().all(|b| b.len() >= 100) {
            break;
        }
        let p = [
            center[0] + rng.gen_range(-radius..radius),
            center[1] + rng.gen_range(-radius..radius),
        ];
        if let Some(signs) = part.region_of(p) {
            if let Some(i) = part.regions.iter().position(|r| r.signs == signs) {
                if buckets[i].len() < 100 {
                    buckets[i].push(p);
                }
            }
        }
    }
    // thin strips between nearly parallel lines are topped up from inside
    for (i, b) in buckets.iter_mut().enumerate() {
        while b.len() < 100 {
            b.push(part.sample_in(&part.regions[i], rng));
        }
    }
    buckets
}

fn region_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    let mut violations = 0;
    let mut counts = Vec::new();
    for _ in 0..20 {
        let h = random_homography(&mut rng);
        let part = match classify_regions(&h) {
            Ok(p) => p,
            Err(e) => return outcome(false, format!("classify_regions failed: {e}")),
        };
        counts.push(part.regions.len());
        if part.regions.len() != 6 {
            continue;
        }
        let c = part.canonical.unwrap();
        for (region, pts) in part.regions.iter().zip(region_samples(&part, &mut rng)) {
            for p in pts {
                if part.region_of(p).as_ref() != Some(&region.signs) {
                    violations += 1;
                    continue;
                }
                for (i, comp) in c.iter().enumerate() {
                    let q = comp.to_canonical(p);
                    let m = hessian_canonical(comp, q[0], q[1]).unwrap();
                    let curvature_flip =
                        (m.p11 > 0.0) != (region.components[i].curvature == affmin::convexity::Curvature::Positive);
                    if semidefinite_class(&m) != region.components[i].hessian || curvature_flip {
                        violations += 1;
                    }
                }
            }
        }
    }
    let six = counts.iter().all(|&n| n == 6);
    outcome(
        six && violations == 0,
        format!("region counts {counts:?}, {violations} violations over 20×6×100 samples"),
    )
}

fn taylor_dominance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut pairs = 0;
    let mut attempts = 0;
    let mut worst_margin = f64::INFINITY;
    let mut failures = Vec::new();
    while pairs < 20 && attempts < 20_000 {
        attempts += 1;
        let h = random_homography(&mut rng);
        let c = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        let r = rng.gen_range(0.2..1.0);
        let rows: Vec<[f64; 2]> = (0..3)
            .map(|_| {
                let a: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                [c[0] + r * a.cos(), c[1] + r * a.sin()]
            })
            .collect();
        let Ok(tri) = Simplex::from_rows(&rows) else { continue };
        if tri.rcond() < 0.05 || !triangle_admissible(&h, &tri).map(|r| r.admissible).unwrap_or(false) {
            continue;
        }
        pairs += 1;
        let best = match best_affine_map(&h, &tri) {
            Ok(b) => b,
            Err(e) => {
                failures.push(format!("best_affine_map: {e}"));
                continue;
            }
        };
        let centroid = tri.centroid();
        let taylor = taylor_affine(&h, [centroid[0], centroid[1]]).unwrap();
        for i in 0..2 {
            let f = component_field(&h, i + 1);
            let b = residual_sup(&tri, &f, &best.map.components[i], 64)
                .unwrap()
                .sup_abs_residual;
            let t = residual_sup(&tri, &f, &taylor.components[i], 64)
                .unwrap()
                .sup_abs_residual;
            let affine_component = best.d[i] == 0.0;
            let margin = t - b;
            if !affine_component {
                worst_margin = worst_margin.min(margin);
            }
            if margin < if affine_component { -1e-12 } else { 1e-9 } {
                failures.push(format!("component {} margin {margin:.2e}", i + 1));
            }
        }
    }
    outcome(
        pairs == 20 && failures.is_empty(),
        format!("{pairs} pairs from {attempts} draws, min taylor − best = {worst_margin:.2e} {failures:?}"),
    )
}

fn warp_pipeline() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_affmin");
    let img = Image::grid_pattern(512, 512, 32).unwrap();
    let input = dir.path().join("in.ppm");
    img.write_ppm(&input).unwrap();
    let write = |name: &str, text: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p
    };
    let identity = write("id.json", r#"{"matrix": [[1,0,0],[0,1,0],[0,0,1]]}"#);
    let h = write(
        "h.json",
        r#"{"matrix": [[1.0, 0.05, 10.0], [0.02, 0.95, 5.0], [0.0004, 0.0003, 1.0]]}"#,
    );
    let tri = write("tri.json", r#"{"vertices": [[80, 60], [260, 300], [460, 440]]}"#);
    let stats = dir.path().join("stats.csv");

    let out = dir.path().join("id.ppm");
    let status = Command::new(bin)
        .args(["warp", "--method", "exact", "--sampling", "nearest", "--in"])
        .arg(&input)
        .arg("--homography")
        .arg(&identity)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    let identical = status.success() && std::fs::read(&out).unwrap() == std::fs::read(&input).unwrap();

    let start = Instant::now();
    let mut ok = true;
    for method in ["exact", "affine", "taylor"] {
        let out = dir.path().join(format!("{method}.ppm"));
        let status = Command::new(bin)
            .args(["warp", "--method", method, "--in"])
            .arg(&input)
            .arg("--homography")
            .arg(&h)
            .arg("--triangle")
            .arg(&tri)
            .arg("--stats")
            .arg(&stats)
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        ok &= status.success();
    }
    let elapsed = start.elapsed();
    let csv = std::fs::read_to_string(&stats).unwrap_or_default();
    let sup = |method: &str| -> f64 {
        csv.lines()
            .find(|l| l.starts_with(&format!("{method},")))
            .and_then(|l| l.split(',').nth(1))
            .and_then(|v| v.parse().ok())
            .unwrap_or(f64::NAN)
    };
    let (sa, st) = (sup("affine"), sup("taylor"));
    let header_once = csv.lines().filter(|l| l.starts_with("method,")).count() == 1;
    outcome(
        identical && ok && header_once && sa <= st && elapsed < Duration::from_secs(2),
        format!(
            "identity byte-identical: {identical}, three methods in {elapsed:.2?}, sup_px affine {sa:.4} vs taylor {st:.4}"
        ),
    )
}

fn secant_path() -> Outcome {
    let f = parse_field("x1^4 - x1^2", 1).unwrap();
    let s = Simplex::from_rows(&[[-2.0], [2.0]]).unwrap();
    let dom = secant_dominance(&s, &f, 4096).unwrap();
    let r = best_affine(&s, &f, Convexity::Unknown).unwrap();
    let problem = DiscreteMinimaxProblem::from_lattice(&s, &f, 4096, &[]).unwrap();
    let opt = solve_discrete_minimax(&problem).unwrap().optimum;
    let sup = residual_sup(&s, &f, &r.sigma, 4096).unwrap().sup_abs_residual;
    let frozen = (r.d - 6.125).abs() <= 1e-10 && (r.sigma.beta - 5.875).abs() <= 1e-10;
    outcome(
        dom == Dominance::Below && frozen && sup <= opt + 5e-3 * r.d + 1e-9,
        format!("dominance {dom:?}, d = {}, sup {sup:.10}, oracle {opt:.10}", r.d),
    )
}
