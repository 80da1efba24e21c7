//! Monte-Carlo check of the Cauchy–Crofton formula for the polar boundaries
//! `Σ_i = ∂Ω_i*` in de Sitter space:
//! `|Σ_2| − |Σ_1| = m/|S^{m−1}| ∫ (#(γ∩Σ_1) − #(γ∩Σ_2)) dℓ`.
//!
//! A space-like geodesic is `γ(s) = cos s · c'_{ξ_a}(h_a) + sin s · ξ_b`,
//! the Lorentz-orthogonal complement of the point `p = c_{ξ_a}(h_a)` inside
//! the Minkowski span of `o` and a tangent 2-plane `M ∋ ξ_a, ξ_b` (for `m = 1`
//! the plane is the whole tangent space). It meets `∂Ω*` at the normals of the
//! supporting hyperplanes of `Ω` that contain the dual `(m−1)`-plane of `p`.
//!
//! The constant of the kinematic measure follows the explicit
//! parameterization: hyperbolic area of `p` in `M` times the Grassmannian
//! measure of `M`, with a density `cosh h_a` for `m = 2`. Only `m = 1` is
//! validated; `m = 2` sits behind [`CroftonConfig::experimental`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convex::HyperbolicPolytope;
use crate::error::{check_dim, Error, Result};
use crate::geometry::{
    any_orthogonal3, desitter_point, hyperbolic_point, MinkowskiVec, UnitVector,
};
use crate::quadrature::build_grid;
use crate::scalar::compensated_sum;

/// Sample partition used by [`count_intersections`].
pub const ROOT_SAMPLES: usize = 2048;

/// Bisection tolerance in the curve parameter.
pub const ROOT_TOL: f64 = 1e-10;

/// Relative size below which a tangential contact is called unstable.
const TANGENT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicSample {
    pub dim: usize,
    /// `p = c_{ξ_a}(h_a)` in `H^{m+1}`.
    pub p: MinkowskiVec<f64>,
    pub xi_a: UnitVector<f64>,
    pub xi_b: UnitVector<f64>,
    pub h_a: f64,
    /// Density of the kinematic measure relative to the sampling law.
    pub weight: f64,
}

impl GeodesicSample {
    /// `γ(0) = c'_{ξ_a}(h_a)`.
    pub fn e1(&self) -> MinkowskiVec<f64> {
        desitter_point(&self.xi_a, self.h_a)
    }

    /// `γ(π/2) = ξ_b`.
    pub fn e2(&self) -> MinkowskiVec<f64> {
        MinkowskiVec::from_direction(&self.xi_b)
    }

    pub fn point(&self, s: f64) -> MinkowskiVec<f64> {
        self.e1().scale(s.cos()).add(&self.e2().scale(s.sin()))
    }
}

/// Radial law of area-uniform points in a hyperbolic disk of radius `cap`.
fn area_radius(u: f64, cap: f64) -> f64 {
    (1.0 + u * (cap.cosh() - 1.0)).acosh()
}

/// Total kinematic volume of the sampled set.
pub fn kinematic_volume(m: usize, h_cap: f64) -> f64 {
    let disk = 2.0 * std::f64::consts::PI * (h_cap.cosh() - 1.0);
    if m == 1 {
        disk
    } else {
        // tangent 2-planes of T_o H^3 by their normal line: half of S^2
        disk * 2.0 * std::f64::consts::PI
    }
}

fn one_sample(m: usize, h_cap: f64, rng: &mut ChaCha8Rng) -> GeodesicSample {
    let h_a = area_radius(rng.gen::<f64>(), h_cap);
    let theta = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
    let (xi_a, xi_b, weight) = if m == 1 {
        (
            UnitVector::from_angle(theta),
            UnitVector::from_angle(theta + std::f64::consts::FRAC_PI_2),
            1.0,
        )
    } else {
        let z: f64 = rng.gen_range(-1.0..1.0);
        let phi = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
        let nu = UnitVector::from_spherical(z.acos(), phi);
        let u = any_orthogonal3(nu.coords());
        let v = crate::geometry::cross3(nu.coords(), &u);
        let along = |t: f64| -> UnitVector<f64> {
            UnitVector::normalize(&[
                t.cos() * u[0] + t.sin() * v[0],
                t.cos() * u[1] + t.sin() * v[1],
                t.cos() * u[2] + t.sin() * v[2],
            ])
            .expect("u, v orthonormal")
        };
        (
            along(theta),
            along(theta + std::f64::consts::FRAC_PI_2),
            h_a.cosh(),
        )
    };
    GeodesicSample {
        dim: m,
        p: hyperbolic_point(&xi_a, h_a),
        xi_a,
        xi_b,
        h_a,
        weight,
    }
}

/// `n` geodesics with `p` area-uniform in `B(o, h_cap)`; sample `i` draws
/// from its own ChaCha stream so results do not depend on thread count.
pub fn sample_geodesics(m: usize, n: usize, h_cap: f64, seed: u64) -> Result<Vec<GeodesicSample>> {
    check_dim(m)?;
    if n == 0 || !(h_cap > 0.0) || !h_cap.is_finite() {
        return Err(Error::InvalidArgument("need n > 0 and h_cap > 0".into()));
    }
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            one_sample(m, h_cap, &mut rng)
        })
        .collect())
}

/// Number of intersections of a sample with a boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Count {
    Crossings(usize),
    /// A near-tangential contact that the sign test cannot resolve.
    Unstable,
}

/// Cylinder coordinates `(t, η)` of a de Sitter point, `x = c'_η(t)`.
fn cylinder(x: &MinkowskiVec<f64>) -> (f64, UnitVector<f64>) {
    x.desitter_cylinder().expect("space-like point")
}

/// Roots of `t(s) − h(η(s))` for `s ∈ [0, 2π)` with `η(s) ∈ ω`, bracketed on
/// [`ROOT_SAMPLES`] points and refined by bisection.
pub fn count_intersections<H, W>(gamma: &GeodesicSample, h: H, omega: W) -> Count
where
    H: Fn(&UnitVector<f64>) -> f64,
    W: Fn(&UnitVector<f64>) -> bool,
{
    let gap = |s: f64| {
        let (t, eta) = cylinder(&gamma.point(s));
        t - h(&eta)
    };
    let step = 2.0 * std::f64::consts::PI / ROOT_SAMPLES as f64;
    let vals: Vec<f64> = (0..=ROOT_SAMPLES).map(|k| gap(k as f64 * step)).collect();
    let scale = vals.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let mut count = 0;
    for k in 0..ROOT_SAMPLES {
        let (mut a, mut b) = (k as f64 * step, (k + 1) as f64 * step);
        let (mut fa, fb) = (vals[k], vals[k + 1]);
        if (fa < 0.0) == (fb < 0.0) {
            // a dip to zero inside the panel without a sign change
            let fm = gap(0.5 * (a + b));
            if fm.abs() < 1e-9 * scale && fa.abs().min(fb.abs()) > fm.abs() {
                return Count::Unstable;
            }
            continue;
        }
        while b - a > ROOT_TOL {
            let mid = 0.5 * (a + b);
            let fm = gap(mid);
            if (fm < 0.0) == (fa < 0.0) {
                a = mid;
                fa = fm;
            } else {
                b = mid;
            }
        }
        let (_, eta) = cylinder(&gamma.point(0.5 * (a + b)));
        if omega(&eta) {
            count += 1;
        }
    }
    Count::Crossings(count)
}

/// Exact count for a polytope. With `k_i` the Klein vertices,
/// `t = h(η)` along `γ` reads `max_i ⟨(−1, k_i), γ(s)⟩_E = 0`: the support
/// function of the planar set `Q_i = (⟨q_i, e_1⟩, ⟨q_i, e_2⟩)` vanishes, which
/// happens twice when `0 ∉ conv Q` and never when `0 ∈ int conv Q`.
pub fn count_polytope(gamma: &GeodesicSample, body: &HyperbolicPolytope<f64>) -> Count {
    let (e1, e2) = (gamma.e1(), gamma.e2());
    let q: Vec<[f64; 2]> = body
        .klein_points()
        .iter()
        .map(|k| {
            let pair = |e: &MinkowskiVec<f64>| {
                let c = e.coords();
                -c[0] + k.iter().zip(&c[1..]).map(|(a, b)| a * b).sum::<f64>()
            };
            [pair(&e1), pair(&e2)]
        })
        .collect();
    let scale = q.iter().map(|v| v[0].hypot(v[1])).fold(0.0, f64::max);
    let tol = TANGENT_TOL * scale.max(1.0);
    match origin_depth(q.clone()) {
        Some(s) if s > tol => Count::Crossings(0),
        Some(s) if s < -tol => Count::Crossings(2),
        Some(_) => Count::Unstable,
        // collinear Q: the origin is never strictly inside
        None => {
            if segment_distance(&q) > tol {
                Count::Crossings(2)
            } else {
                Count::Unstable
            }
        }
    }
}

fn cross(o: &[f64; 2], a: &[f64; 2], b: &[f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Signed distance from the origin to the boundary of `conv q`, positive
/// inside; `None` when the points are collinear. Monotone chain hull; this
/// runs once per sample, and the tangency tolerance absorbs rounding.
fn origin_depth(mut q: Vec<[f64; 2]>) -> Option<f64> {
    q.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    q.dedup();
    if q.len() < 3 {
        return None;
    }
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * q.len());
    for pass in 0..2 {
        let start = hull.len();
        let pts: Box<dyn Iterator<Item = &[f64; 2]>> = if pass == 0 {
            Box::new(q.iter())
        } else {
            Box::new(q.iter().rev())
        };
        for p in pts {
            while hull.len() >= start + 2
                && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 0.0
            {
                hull.pop();
            }
            hull.push(*p);
        }
        hull.pop();
    }
    if hull.len() < 3 {
        return None;
    }
    let origin = [0.0, 0.0];
    let depth = (0..hull.len())
        .map(|i| {
            let (a, b) = (&hull[i], &hull[(i + 1) % hull.len()]);
            cross(a, b, &origin) / (b[0] - a[0]).hypot(b[1] - a[1])
        })
        .fold(f64::INFINITY, f64::min);
    Some(depth)
}

/// Distance from the origin to the segment spanned by collinear points.
fn segment_distance(q: &[[f64; 2]]) -> f64 {
    let far = |from: &[f64]| {
        q.iter()
            .max_by(|a, b| {
                let da = (a[0] - from[0]).hypot(a[1] - from[1]);
                let db = (b[0] - from[0]).hypot(b[1] - from[1]);
                da.total_cmp(&db)
            })
            .copied()
            .unwrap()
    };
    let a = far(&q[0]);
    let b = far(&a);
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (-(a[0] * dx + a[1] * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (a[0] + t * dx).hypot(a[1] + t * dy)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CroftonConfig {
    pub samples: usize,
    /// Sampling radius; `None` means largest support value plus 0.5.
    pub h_cap: Option<f64>,
    pub seed: u64,
    /// Grid level for the polar boundary areas.
    pub grid_level: u32,
    /// Allowance for the quadrature error of the left-hand side.
    pub quadrature_tol: f64,
    /// Permit `m = 2`, whose normalization is not validated.
    pub experimental: bool,
}

impl Default for CroftonConfig {
    fn default() -> Self {
        Self {
            samples: 100_000,
            h_cap: None,
            seed: 0,
            grid_level: crate::quadrature::DEFAULT_LEVEL,
            quadrature_tol: 1e-3,
            experimental: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CroftonReport {
    pub dim: usize,
    /// `|Σ_2| − |Σ_1|` by quadrature.
    pub lhs: f64,
    /// Monte-Carlo estimate of the right-hand side.
    pub rhs: f64,
    pub stderr: f64,
    pub samples: usize,
    /// Samples excluded as near-tangential.
    pub unstable: usize,
    pub h_cap: f64,
    pub kinematic_volume: f64,
    pub quadrature_tol: f64,
    /// `|lhs − rhs| ≤ 3 stderr + quadrature_tol`.
    pub agreement: bool,
    /// Every stable sample has `#(γ∩Σ_1) − #(γ∩Σ_2) ∈ {0, 2}`.
    pub differences_valid: bool,
    pub rhs_nonnegative: bool,
}

/// Whether every Klein vertex of `inner` lies in the Klein hull of `outer`.
pub fn is_nested(inner: &HyperbolicPolytope<f64>, outer: &HyperbolicPolytope<f64>) -> bool {
    inner.klein_points().iter().all(|k| {
        outer
            .klein_facets()
            .iter()
            .all(|f| crate::geometry::dot(f.normal.coords(), k) <= f.support + 1e-12)
    })
}

/// Compares `|Σ_2| − |Σ_1|` with its Crofton integral for nested `P1 ⊆ P2`.
/// For nested bodies `ω = {h_1 < h_2}` and the whole sphere give the same
/// two sides, since the boundaries coincide where `h_1 = h_2`.
pub fn crofton_compare(
    p1: &HyperbolicPolytope<f64>,
    p2: &HyperbolicPolytope<f64>,
    cfg: &CroftonConfig,
) -> Result<CroftonReport> {
    let m = p1.dim();
    if p2.dim() != m {
        return Err(Error::InvalidArgument(
            "bodies of different dimension".into(),
        ));
    }
    if m == 2 && !cfg.experimental {
        return Err(Error::InvalidArgument(
            "the m = 2 Crofton check is experimental; enable it explicitly".into(),
        ));
    }
    if !is_nested(p1, p2) {
        return Err(Error::InvalidArgument(
            "the first body must lie inside the second".into(),
        ));
    }
    let grid = build_grid::<f64>(m, cfg.grid_level)?;
    let lhs = p2.polar_boundary_area(&grid)? - p1.polar_boundary_area(&grid)?;
    let h_max = p2
        .klein_facets()
        .iter()
        .map(|f| f.support)
        .chain(p1.klein_facets().iter().map(|f| f.support))
        .fold(0.0, f64::max)
        .atanh();
    let h_cap = cfg.h_cap.unwrap_or(h_max + 0.5);
    let samples = sample_geodesics(m, cfg.samples, h_cap, cfg.seed)?;
    let per: Vec<Option<(f64, i64)>> = samples
        .par_iter()
        .map(|g| match (count_polytope(g, p1), count_polytope(g, p2)) {
            (Count::Crossings(a), Count::Crossings(b)) => {
                let d = a as i64 - b as i64;
                Some((g.weight * d as f64, d))
            }
            _ => None,
        })
        .collect();
    let stable: Vec<(f64, i64)> = per.iter().flatten().copied().collect();
    let unstable = per.len() - stable.len();
    let n = stable.len().max(1) as f64;
    let mean = compensated_sum(stable.iter().map(|s| s.0)) / n;
    let var = compensated_sum(stable.iter().map(|s| (s.0 - mean).powi(2))) / (n - 1.0).max(1.0);
    let factor = m as f64 / crate::scalar::sphere_volume::<f64>(m - 1) * kinematic_volume(m, h_cap);
    let rhs = factor * mean;
    let stderr = factor * (var / n).sqrt();
    let differences_valid = stable.iter().all(|s| s.1 == 0 || s.1 == 2);
    Ok(CroftonReport {
        dim: m,
        lhs,
        rhs,
        stderr,
        samples: stable.len(),
        unstable,
        h_cap,
        kinematic_volume: kinematic_volume(m, h_cap),
        quadrature_tol: cfg.quadrature_tol,
        agreement: (lhs - rhs).abs() <= 3.0 * stderr + cfg.quadrature_tol,
        differences_valid,
        rhs_nonnegative: mean >= 0.0,
    })
}
