//! Acceptance suite: one line per criterion, `PASS` or `FAIL`, with the
//! measured quantity next to its bound. Runs without the libtest harness so
//! the lines print in order; pass criterion numbers to run a subset, e.g.
//! `cargo test --test acceptance -- 1 3 10`.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hypcurv::ctransform::{c_transform, max_change};
use hypcurv::functions::{f_big, f_small, g_big};
use hypcurv::geometry::cost;
use hypcurv::measures::cond_eps;
use hypcurv::quadrature::{integrate_arc, Adaptive};
use hypcurv::{
    build_grid, check_conditions, conjugacy_diagnostics, crofton_compare, double_convexify,
    functional_k, gradient_k, solve, CheckMode, CroftonConfig, Direction, Measure, Polytope,
    Potential, Report, SolverConfig,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(elapsed: Duration, budget_s: f64) -> bool {
    elapsed.as_secs_f64() < budget_s
}

fn random_direction(m: usize, rng: &mut ChaCha8Rng) -> Direction {
    if m == 1 {
        Direction::from_angle(rng.gen_range(0.0..2.0 * PI))
    } else {
        let z: f64 = rng.gen_range(-1.0..1.0);
        Direction::from_spherical(z.acos(), rng.gen_range(0.0..2.0 * PI))
    }
}

/// A random polytope around the origin: `3..=8` vertices for `m = 1`,
/// `6..=10` for `m = 2`, radii in `[0.4, 1.4]`. Bodies whose Klein hull
/// passes within 0.05 of the origin are redrawn, so every sample is a
/// reasonably conditioned member of the valid class.
fn random_body(m: usize, rng: &mut ChaCha8Rng) -> Polytope {
    loop {
        let n = if m == 1 {
            rng.gen_range(3..=8)
        } else {
            rng.gen_range(6..=10)
        };
        let dirs: Vec<Direction> = (0..n).map(|_| random_direction(m, rng)).collect();
        let radii: Vec<f64> = (0..n).map(|_| rng.gen_range(0.4..1.4)).collect();
        if let Ok(p) = Polytope::from_vertices(m, dirs, radii) {
            let depth = p
                .klein_facets()
                .iter()
                .map(|f| f.support)
                .fold(f64::INFINITY, f64::min);
            if depth > 0.05 {
                return p;
            }
        }
    }
}

fn forward(p: &Polytope, level: u32) -> Measure {
    let grid = build_grid(p.dim(), level).unwrap();
    p.curvature_measure_integral(&grid).unwrap()
}

fn c1_ball_m1() -> Outcome {
    let clock = Instant::now();
    let p = Polytope::regular_polygon(256, 1.0).unwrap();
    let total = forward(&p, 6).total_mass();
    let t = clock.elapsed();
    let exact = 2.0 * PI * 1f64.cosh();
    let rel = (total - exact).abs() / exact;
    outcome(
        rel <= 0.01 && within(t, 1.0),
        format!(
            "total {total:.6} vs {exact:.6}, rel {rel:.2e} <= 1e-2, {:.2}s < 1s",
            t.as_secs_f64()
        ),
    )
}

fn c2_ball_m2() -> Outcome {
    let clock = Instant::now();
    let dirs = build_grid::<f64>(2, 4).unwrap().nodes().to_vec();
    let n = dirs.len();
    let p = Polytope::from_vertices(2, dirs, vec![1.0; n]).unwrap();
    let total = forward(&p, 6).total_mass();
    let t = clock.elapsed();
    let exact = 4.0 * PI * 1f64.cosh().powi(2);
    let rel = (total - exact).abs() / exact;
    outcome(
        rel <= 0.02 && within(t, 30.0),
        format!(
            "{n} vertices, total {total:.5} vs {exact:.5}, rel {rel:.2e} <= 2e-2, {:.1}s < 30s",
            t.as_secs_f64()
        ),
    )
}

fn c3_gauss_bonnet() -> Outcome {
    let clock = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let p = random_body(1, &mut rng);
        let sum = p.curvature_measure_angles().unwrap().total_mass();
        worst = worst.max((sum - 2.0 * PI - p.polygon_area_m1().unwrap()).abs());
    }
    let t = clock.elapsed();
    outcome(
        worst <= 1e-6 && within(t, 5.0),
        format!(
            "max |Σα − 2π − area| {worst:.2e} <= 1e-6, {:.2}s < 5s",
            t.as_secs_f64()
        ),
    )
}

/// The 50 random polytopes per dimension of criteria 4 and 5.
fn two_method_bodies(m: usize) -> Vec<Polytope> {
    let mut rng = ChaCha8Rng::seed_from_u64(40 + m as u64);
    (0..50).map(|_| random_body(m, &mut rng)).collect()
}

fn c4_two_methods() -> Outcome {
    let mut worst_abs = 0.0f64;
    for p in two_method_bodies(1) {
        let a = forward(&p, 6);
        let b = p.curvature_measure_angles().unwrap();
        for (x, y) in a.weights().iter().zip(b.weights()) {
            worst_abs = worst_abs.max((x - y).abs());
        }
    }
    let mut worst_rel = 0.0f64;
    for p in two_method_bodies(2) {
        let a = forward(&p, 6);
        let b = p.curvature_measure_angles().unwrap();
        for (x, y) in a.weights().iter().zip(b.weights()) {
            worst_rel = worst_rel.max((x - y).abs() / y);
        }
    }
    outcome(
        worst_abs <= 1e-6 && worst_rel <= 0.02,
        format!("m=1 max abs {worst_abs:.2e} <= 1e-6, m=2 max rel {worst_rel:.2e} <= 2e-2"),
    )
}

fn c5_conditions() -> Outcome {
    let mut failures = 0;
    let mut min_margin = f64::INFINITY;
    for m in [1, 2] {
        let half = if m == 1 { PI } else { 2.0 * PI };
        for p in two_method_bodies(m) {
            for mu in [forward(&p, 6), p.curvature_measure_angles().unwrap()] {
                let r = check_conditions(&mu, CheckMode::Exhaustive).unwrap();
                let vertex_margin = half - r.max_weight;
                let margin = r
                    .total_mass_excess
                    .min(vertex_margin)
                    .min(r.alexandrov_slack);
                min_margin = min_margin.min(margin);
                if !r.all_ok() || margin <= cond_eps(m) {
                    failures += 1;
                }
            }
        }
    }
    outcome(
        failures == 0,
        format!("{failures} failures over 200 measures, smallest margin {min_margin:.3e} > 0"),
    )
}

/// Solver outputs of criterion 6, kept for criterion 8.
struct RoundTrips {
    reports: Vec<Report>,
    grid_level: Vec<u32>,
}

fn round_trips(m: usize, count: usize) -> (Outcome, RoundTrips) {
    let clock = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(60 + m as u64);
    let level = 6;
    let (tol, budget) = if m == 1 {
        (1e-4, 120.0)
    } else {
        (1e-2, 1200.0)
    };
    let mut worst = 0.0f64;
    let mut not_converged = 0;
    let mut reports = Vec::new();
    for _ in 0..count {
        let p = random_body(m, &mut rng);
        let mu = forward(&p, level);
        let cfg = SolverConfig {
            grid_level: level,
            ..Default::default()
        };
        let rep = solve(&mu, &cfg).unwrap();
        match &rep.body {
            Some(b) if rep.converged => {
                for (x, y) in b.radii().iter().zip(p.radii()) {
                    worst = worst.max((x - y).abs() / y);
                }
            }
            _ => not_converged += 1,
        }
        reports.push(rep);
    }
    let t = clock.elapsed();
    let pass = worst <= tol && not_converged == 0 && within(t, budget);
    let o = outcome(
        pass,
        format!(
            "m={m}: {count} bodies, max rel radius error {worst:.2e} <= {tol:.0e}, {not_converged} not converged, {:.1}s < {budget}s",
            t.as_secs_f64()
        ),
    );
    let grid_level = vec![level; reports.len()];
    (
        o,
        RoundTrips {
            reports,
            grid_level,
        },
    )
}

fn c7_gradient() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for k in 0..20 {
        let m = 1 + k % 2;
        let p = random_body(m, &mut rng);
        let mu = forward(&p, 4);
        // a second body on the same directions gives a covering potential
        let values: Vec<f64> = p
            .radii()
            .iter()
            .map(|_| rng.gen_range(0.4f64..1.4).tanh().ln())
            .collect();
        let psi = match Potential::new(p.directions().to_vec(), values.clone()) {
            Ok(psi) if psi.cells().is_ok() => psi,
            _ => continue,
        };
        let grid = build_grid(m, 4).unwrap();
        let g = gradient_k(&psi, &mu, &grid).unwrap();
        let scale = g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let h = 1e-5;
        for i in 0..values.len() {
            let mut a = values.clone();
            let mut b = values.clone();
            a[i] += h;
            b[i] -= h;
            let ka = functional_k(&psi.with_values(a).unwrap(), &mu, &grid).unwrap();
            let kb = functional_k(&psi.with_values(b).unwrap(), &mu, &grid).unwrap();
            let fd = (ka - kb) / (2.0 * h);
            worst = worst.max((fd - g[i]).abs() / scale);
        }
    }
    outcome(
        worst <= 1e-5,
        format!("max |FD − ∇K| / ‖∇K‖∞ {worst:.2e} <= 1e-5"),
    )
}

fn c8_ctransform(runs: &[&RoundTrips]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut conj, mut fixed) = (0.0f64, 0.0f64);
    let mut violations = 0;
    let mut pairs = 0;
    let mut count = 0;
    for rt in runs {
        for (rep, &level) in rt.reports.iter().zip(&rt.grid_level) {
            let psi = &rep.psi;
            let grid = build_grid(psi.dim(), level).unwrap();
            let d = conjugacy_diagnostics(psi, &grid).unwrap();
            conj = conj
                .max(d.max_phi_plus_min_psi.abs())
                .max(d.min_phi_plus_max_psi.abs());
            fixed = fixed.max(max_change(psi, &double_convexify(psi, &grid).unwrap()));
            for _ in 0..200 {
                let eta = random_direction(psi.dim(), &mut rng);
                let (phi, _) = c_transform(psi, &eta).unwrap();
                for (xi, v) in psi.support().iter().zip(psi.values()) {
                    if let Some(c) = cost(&eta, xi).finite() {
                        pairs += 1;
                        if phi + v > c {
                            violations += 1;
                        }
                    }
                }
            }
            count += 1;
        }
    }
    outcome(
        count > 0 && conj <= 1e-4 && fixed <= 1e-4 && violations == 0,
        format!(
            "{count} solver outputs: conjugacy {conj:.2e} <= 1e-4, |ψ^cc − ψ| {fixed:.2e} <= 1e-4, {violations}/{pairs} admissibility violations"
        ),
    )
}

fn c9_closed_forms() -> Outcome {
    let mut fd_err = 0.0f64;
    let mut quad_err = 0.0f64;
    let opts = Adaptive {
        rel_tol: 1e-14,
        ..Default::default()
    };
    for m in [1, 2] {
        for &u in &[0.05, 0.2, 0.7, 1.0, 1.5, 3.0, 6.0] {
            let h = 1e-5 * u;
            let fd: f64 = (f_big(u + h, m).unwrap() - f_big(u - h, m).unwrap()) / (2.0 * h);
            let f: f64 = f_small(u, m).unwrap();
            fd_err = fd_err.max((fd - f).abs() / f.abs());
        }
        for &(a, b) in &[(0.1, 0.5), (0.3, 1.0), (1.0, 2.5), (0.8, 6.0)] {
            let q = integrate_arc(&|u: f64| f_small(u, m).unwrap(), a, b, opts);
            let diff = f_big(b, m).unwrap() - f_big(a, m).unwrap();
            quad_err = quad_err.max((q - diff).abs() / diff.abs());
        }
    }
    let t: f64 = 1e-6;
    let ratio: f64 = g_big(-t).unwrap() / -(2.0 * t).sqrt();
    outcome(
        fd_err <= 1e-8 && quad_err <= 1e-8 && (ratio - 1.0).abs() <= 0.01,
        format!("F' vs f {fd_err:.2e}, ∫f vs ΔF {quad_err:.2e} (both <= 1e-8), G(−t)/(−√(2t)) = {ratio:.5}"),
    )
}

fn c10_crofton() -> Outcome {
    let clock = Instant::now();
    let p1 = Polytope::regular_polygon(256, 0.5).unwrap();
    let p2 = Polytope::regular_polygon(256, 1.0).unwrap();
    let r = crofton_compare(&p1, &p2, &CroftonConfig::default()).unwrap();
    let t = clock.elapsed();
    let lhs = 2.0 * PI * (1f64.cosh() - 0.5f64.cosh());
    let bound = 3.0 * r.stderr + 1e-3;
    let dev = (lhs - r.rhs).abs();
    outcome(
        dev <= bound && r.differences_valid && r.rhs > 0.0 && r.samples + r.unstable == 100_000 && within(t, 60.0),
        format!(
            "LHS {lhs:.5}, RHS {:.5} ± {:.5}, |Δ| {dev:.2e} <= {bound:.2e}, counts in {{0,2}}: {}, {:.1}s < 60s",
            r.rhs,
            r.stderr,
            r.differences_valid,
            t.as_secs_f64()
        ),
    )
}

fn c11_monotonicity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut ordered = 0;
    let mut min_gap = f64::INFINITY;
    for _ in 0..20 {
        let outer = random_body(1, &mut rng);
        // a Klein homothety keeps every vertex extreme and nests the bodies
        let lambda: f64 = rng.gen_range(0.3..0.95);
        let radii = outer
            .radii()
            .iter()
            .map(|r| (lambda * r.tanh()).atanh())
            .collect();
        let inner = Polytope::from_vertices(1, outer.directions().to_vec(), radii).unwrap();
        let a = forward(&inner, 6).total_mass();
        let b = forward(&outer, 6).total_mass();
        min_gap = min_gap.min(b - a);
        if a < b {
            ordered += 1;
        }
    }
    outcome(
        ordered == 20,
        format!("{ordered}/20 pairs strictly ordered, smallest gap {min_gap:.3e}"),
    )
}

fn c12_isometry() -> Outcome {
    let ball = Polytope::regular_polygon(256, 1.0).unwrap();
    let base = forward(&ball, 6).total_mass();
    let dir = Direction::from_angle(0.7);
    let mut worst = 0.0f64;
    for len in [0.3, 0.6] {
        let moved = ball.apply_isometry(&dir, len).unwrap();
        let total = forward(&moved, 6).total_mass();
        worst = worst.max((total - base).abs() / base);
    }
    outcome(worst <= 1e-3, format!("max rel change {worst:.2e} <= 1e-3"))
}

fn c13_rejection() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap().to_string();
    let run = |args: &[&str]| {
        std::process::Command::new(env!("CARGO_BIN_EXE_hypcurv"))
            .args(args)
            .output()
            .map_or(-1, |o| o.status.code().unwrap_or(-1))
    };
    if run(&["demo", "--out", &d]) != 0 {
        return outcome(false, "demo failed");
    }
    let mut notes = Vec::new();
    let mut pass = true;
    let cases: [(&str, fn(&serde_json::Value) -> bool); 2] = [
        ("clustered_four", |r| {
            r["alexandrov_ok"] == false && r["worst_witness"] == serde_json::json!([0, 1, 2, 3])
        }),
        ("vertex_violating", |r| {
            r["vertex_ok"] == false && r["vertex_witness"] == 0
        }),
    ];
    for (name, witness_ok) in cases {
        let out = dir.path().join(name);
        let code = run(&[
            "check",
            &format!("{d}/{name}.json"),
            "--out",
            out.to_str().unwrap(),
        ]);
        let text = std::fs::read_to_string(out.join("check.json")).unwrap_or_default();
        let report: serde_json::Value = serde_json::from_str(&text).unwrap_or_default();
        let ok = code == 2 && witness_ok(&report);
        pass &= ok;
        notes.push(format!(
            "{name}: exit {code}, witness {}",
            if name == "clustered_four" {
                &report["worst_witness"]
            } else {
                &report["vertex_witness"]
            }
        ));
    }
    outcome(pass, notes.join("; "))
}

fn main() {
    let wanted: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let on = |k: usize| wanted.is_empty() || wanted.contains(&k);
    let mut results: Vec<(usize, Outcome)> = Vec::new();
    let mut report = |k: usize, o: Outcome| {
        println!(
            "criterion {k:>2}: {} | {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        results.push((k, o));
    };
    if on(1) {
        report(1, c1_ball_m1());
    }
    if on(2) {
        report(2, c2_ball_m2());
    }
    if on(3) {
        report(3, c3_gauss_bonnet());
    }
    if on(4) {
        report(4, c4_two_methods());
    }
    if on(5) {
        report(5, c5_conditions());
    }
    let mut trips = Vec::new();
    if on(6) || on(8) {
        let (o1, r1) = round_trips(1, 30);
        let (o2, r2) = round_trips(2, 30);
        if on(6) {
            let pass = o1.pass && o2.pass;
            report(6, outcome(pass, format!("{}; {}", o1.detail, o2.detail)));
        }
        trips.push(r1);
        trips.push(r2);
    }
    if on(7) {
        report(7, c7_gradient());
    }
    if on(8) {
        report(8, c8_ctransform(&trips.iter().collect::<Vec<_>>()));
    }
    if on(9) {
        report(9, c9_closed_forms());
    }
    if on(10) {
        report(10, c10_crofton());
    }
    if on(11) {
        report(11, c11_monotonicity());
    }
    if on(12) {
        report(12, c12_isometry());
    }
    if on(13) {
        report(13, c13_rejection());
    }
    let failed: Vec<usize> = results
        .iter()
        .filter(|(_, o)| !o.pass)
        .map(|(k, _)| *k)
        .collect();
    if failed.is_empty() {
        println!("acceptance: {} criteria passed", results.len());
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
