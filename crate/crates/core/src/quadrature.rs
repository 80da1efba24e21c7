//! Integration against the uniform measure σ on S^1 and S^2.
//!
//! [`QuadratureGrid`] is the fixed node/weight rule (equally spaced on S^1,
//! vertex-weighted icosphere on S^2). For integrands that are smooth on known
//! pieces, [`integrate_arc`] and [`integrate_spherical_triangle`] give adaptive
//! Gauss–Legendre rules on a single arc or geodesic triangle.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{check_dim, Error, Result};
use crate::geometry::{angle_between, cross3, det3, dot, norm, UnitVector};
use crate::scalar::{compensated_sum, sphere_volume, Scalar};

/// Default refinement level for either dimension: 4096 nodes on S^1, 40962 on S^2.
pub const DEFAULT_LEVEL: u32 = 6;

#[derive(Debug, Clone)]
pub struct QuadratureGrid<S> {
    dim: usize,
    level: u32,
    nodes: Vec<UnitVector<S>>,
    weights: Vec<S>,
    edges: Vec<(u32, u32)>,
    triangles: Vec<[u32; 3]>,
}

/// Builds the grid for `S^m` at refinement `level`.
pub fn build_grid<S: Scalar>(m: usize, level: u32) -> Result<QuadratureGrid<S>> {
    check_dim(m)?;
    if level > 12 {
        return Err(Error::InvalidArgument(format!(
            "grid level {level} is too large"
        )));
    }
    Ok(if m == 1 {
        circle(level)
    } else {
        icosphere(level)
    })
}

fn circle<S: Scalar>(level: u32) -> QuadratureGrid<S> {
    let n = 1usize << (level + 6);
    let step = S::two() * S::PI() / S::lit(n as f64);
    let nodes = (0..n)
        .map(|k| UnitVector::from_angle(step * S::lit(k as f64)))
        .collect();
    let edges = (0..n as u32).map(|k| (k, (k + 1) % n as u32)).collect();
    QuadratureGrid {
        dim: 1,
        level,
        nodes,
        weights: vec![step; n],
        edges,
        triangles: Vec::new(),
    }
}

fn icosphere<S: Scalar>(level: u32) -> QuadratureGrid<S> {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let raw: [[f64; 3]; 12] = [
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ];
    let mut verts: Vec<[f64; 3]> = raw.iter().map(|v| unit3(*v)).collect();
    let mut tris: Vec<[u32; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut cache: HashMap<(u32, u32), u32> = HashMap::new();
        let mut midpoint = |a: u32, b: u32, verts: &mut Vec<[f64; 3]>| {
            let key = (a.min(b), a.max(b));
            *cache.entry(key).or_insert_with(|| {
                let (p, q) = (verts[a as usize], verts[b as usize]);
                verts.push(unit3([p[0] + q[0], p[1] + q[1], p[2] + q[2]]));
                (verts.len() - 1) as u32
            })
        };
        let mut next = Vec::with_capacity(tris.len() * 4);
        for &[a, b, c] in &tris {
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        tris = next;
    }
    let mut w = vec![0.0f64; verts.len()];
    for t in &tris {
        let [a, b, c] = t.map(|i| verts[i as usize]);
        let area = spherical_triangle_area(&a, &b, &c);
        for &i in t {
            w[i as usize] += area / 3.0;
        }
    }
    let total: f64 = compensated_sum(w.iter().copied());
    let scale = 4.0 * std::f64::consts::PI / total;
    let mut edges: Vec<(u32, u32)> = tris
        .iter()
        .flat_map(|t| (0..3).map(move |e| (t[e].min(t[(e + 1) % 3]), t[e].max(t[(e + 1) % 3]))))
        .collect();
    edges.sort_unstable();
    edges.dedup();
    QuadratureGrid {
        dim: 2,
        level,
        nodes: verts
            .iter()
            .map(|v| UnitVector::from_unit_unchecked(v.iter().map(|&c| S::lit(c)).collect()))
            .collect(),
        weights: w.iter().map(|&x| S::lit(x * scale)).collect(),
        edges,
        triangles: tris,
    }
}

fn unit3(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

/// Area of the geodesic triangle with unit vertices `a, b, c`
/// (Van Oosterom–Strackee).
pub fn spherical_triangle_area<S: Scalar>(a: &[S], b: &[S], c: &[S]) -> S {
    let num = det3(a, b, c).abs();
    let den = S::one() + dot(a, b) + dot(b, c) + dot(c, a);
    S::two() * num.atan2(den)
}

impl<S: Scalar> QuadratureGrid<S> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[UnitVector<S>] {
        &self.nodes
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    /// Neighbouring node pairs (consecutive on S^1, icosphere edges on S^2).
    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    /// Icosphere triangles (empty for m = 1).
    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    /// Largest angular distance between neighbouring nodes.
    pub fn spacing(&self) -> S {
        self.edges
            .iter()
            .map(|&(a, b)| self.nodes[a as usize].distance(&self.nodes[b as usize]))
            .fold(S::zero(), S::max)
    }

    pub fn total_weight(&self) -> S {
        compensated_sum(self.weights.iter().copied())
    }
}

/// `Σ_k w_k f(η_k)`; `f` is evaluated in parallel, the sum is taken in index
/// order with compensated summation.
pub fn integrate<S, F>(f: F, grid: &QuadratureGrid<S>) -> Result<S>
where
    S: Scalar,
    F: Fn(&UnitVector<S>) -> S + Sync,
{
    let values: Vec<S> = grid.nodes.par_iter().map(&f).collect();
    if let Some(node) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::IntegrationFailure { node });
    }
    Ok(compensated_sum(
        values.iter().zip(&grid.weights).map(|(&v, &w)| v * w),
    ))
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 {
                1.0
            } else if n == 1 {
                z
            } else {
                p1
            };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * p - pm) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Fixed rule used by the adaptive integrators.
struct Rule {
    x: Vec<f64>,
    w: Vec<f64>,
}

fn rule() -> &'static Rule {
    static RULE: std::sync::OnceLock<Rule> = std::sync::OnceLock::new();
    RULE.get_or_init(|| {
        let (x, w) = gauss_legendre(10);
        Rule { x, w }
    })
}

/// Tolerance and depth limit for the adaptive piecewise rules. A panel is
/// accepted once its two estimates differ by at most
/// `max(rel_tol·|estimate|, abs_tol)`; the absolute floor matters for
/// integrands that change sign.
/// Fraction of `rel_tol · |whole|` below which a sub-panel's discrepancy is
/// accepted regardless of its own size.
pub(crate) const ROUNDING_FLOOR: f64 = 1e-2;

#[derive(Debug, Clone, Copy)]
pub struct Adaptive {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_depth: u32,
}

impl Default for Adaptive {
    fn default() -> Self {
        Self {
            rel_tol: 1e-13,
            abs_tol: 0.0,
            max_depth: 12,
        }
    }
}

pub(crate) fn gl_panel<S: Scalar, F: Fn(S) -> S>(f: &F, a: S, b: S) -> S {
    let r = rule();
    let half = (b - a) * S::lit(0.5);
    let mid = (a + b) * S::lit(0.5);
    let mut acc = S::zero();
    for (&x, &w) in r.x.iter().zip(&r.w) {
        acc = acc + S::lit(w) * f(mid + half * S::lit(x));
    }
    acc * half
}

/// `∫_a^b f(θ) dθ` by adaptive bisection of a 10-point Gauss–Legendre rule.
pub fn integrate_arc<S: Scalar, F: Fn(S) -> S>(f: &F, a: S, b: S, opts: Adaptive) -> S {
    let whole = gl_panel(f, a, b);
    let floor = opts
        .abs_tol
        .max(ROUNDING_FLOOR * opts.rel_tol * whole.abs().to_f64_lossy());
    let opts = Adaptive {
        abs_tol: floor,
        ..opts
    };
    arc_rec(f, a, b, whole, opts, 0)
}

fn arc_rec<S: Scalar, F: Fn(S) -> S>(f: &F, a: S, b: S, whole: S, opts: Adaptive, depth: u32) -> S {
    let mid = (a + b) * S::lit(0.5);
    let left = gl_panel(f, a, mid);
    let right = gl_panel(f, mid, b);
    let split = left + right;
    let scale = split.abs().max(S::lit(1e-300));
    if depth >= opts.max_depth
        || (split - whole).abs() <= (S::lit(opts.rel_tol) * scale).max(S::lit(opts.abs_tol))
    {
        return split;
    }
    arc_rec(f, a, mid, left, opts, depth + 1) + arc_rec(f, mid, b, right, opts, depth + 1)
}

pub(crate) fn triangle_rule<S: Scalar, F: Fn(&[S]) -> S>(
    f: &F,
    a: &[S; 3],
    b: &[S; 3],
    c: &[S; 3],
) -> S {
    // Conical product rule on the flat triangle abc, radially projected.
    let r = rule();
    // det(a, b − a, c − a): the edge vectors are exact differences, so a
    // small triangle keeps its relative accuracy
    let ba = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let ca = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
    let jac = dot(a, &cross3(&ba, &ca)).abs();
    let mut acc = S::zero();
    let mut x = [S::zero(); 3];
    for (&si, &wi) in r.x.iter().zip(&r.w) {
        let s = S::lit(0.5 * (si + 1.0));
        for (&ti, &wj) in r.x.iter().zip(&r.w) {
            let t = S::lit(0.5 * (ti + 1.0));
            let (u, v) = (s * (S::one() - t), s * t);
            for k in 0..3 {
                x[k] = a[k] + u * (b[k] - a[k]) + v * (c[k] - a[k]);
            }
            let n = norm(&x);
            let eta = [x[0] / n, x[1] / n, x[2] / n];
            acc = acc + S::lit(0.25 * wi * wj) * s * f(&eta) / (n * n * n);
        }
    }
    acc * jac
}

fn mid_unit<S: Scalar>(a: &[S; 3], b: &[S; 3]) -> [S; 3] {
    let m = [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
    let n = norm(&m);
    [m[0] / n, m[1] / n, m[2] / n]
}

/// `∫ f dσ` over the geodesic triangle with unit vertices `a, b, c` (all
/// within an open hemisphere), by adaptive four-way subdivision.
pub fn integrate_spherical_triangle<S: Scalar, F: Fn(&[S]) -> S>(
    f: &F,
    a: &[S; 3],
    b: &[S; 3],
    c: &[S; 3],
    opts: Adaptive,
) -> S {
    let whole = triangle_rule(f, a, b, c);
    // sub-panels stop once they are below the rounding level of the whole
    let floor = opts
        .abs_tol
        .max(ROUNDING_FLOOR * opts.rel_tol * whole.abs().to_f64_lossy());
    let opts = Adaptive {
        abs_tol: floor,
        ..opts
    };
    tri_rec(f, a, b, c, whole, opts, 0)
}

fn tri_rec<S: Scalar, F: Fn(&[S]) -> S>(
    f: &F,
    a: &[S; 3],
    b: &[S; 3],
    c: &[S; 3],
    whole: S,
    opts: Adaptive,
    depth: u32,
) -> S {
    let ab = mid_unit(a, b);
    let bc = mid_unit(b, c);
    let ca = mid_unit(c, a);
    let kids = [[*a, ab, ca], [*b, bc, ab], [*c, ca, bc], [ab, bc, ca]];
    let parts: Vec<S> = kids
        .iter()
        .map(|k| triangle_rule(f, &k[0], &k[1], &k[2]))
        .collect();
    let split = parts.iter().fold(S::zero(), |s, &p| s + p);
    let scale = split.abs().max(S::lit(1e-300));
    let tiny = angle_between(a, b).max(angle_between(b, c)) < S::lit(1e-7);
    if tiny
        || depth >= opts.max_depth
        || (split - whole).abs() <= (S::lit(opts.rel_tol) * scale).max(S::lit(opts.abs_tol))
    {
        return split;
    }
    kids.iter().zip(parts).fold(S::zero(), |s, (k, p)| {
        s + tri_rec(f, &k[0], &k[1], &k[2], p, opts, depth + 1)
    })
}

/// `∫ f dσ` over a convex geodesic polygon given by its unit corners in
/// cyclic order, fan-triangulated from the normalized corner centroid.
pub fn integrate_spherical_polygon<S: Scalar, F: Fn(&[S]) -> S>(
    f: &F,
    corners: &[[S; 3]],
    opts: Adaptive,
) -> S {
    if corners.len() < 3 {
        return S::zero();
    }
    let mut c = [S::zero(); 3];
    for q in corners {
        for k in 0..3 {
            c[k] = c[k] + q[k];
        }
    }
    let n = norm(&c);
    let c = [c[0] / n, c[1] / n, c[2] / n];
    let mut acc = S::zero();
    for i in 0..corners.len() {
        let j = (i + 1) % corners.len();
        if norm(&cross3(&corners[i], &corners[j])) == S::zero() {
            continue;
        }
        acc = acc + integrate_spherical_triangle(f, &c, &corners[i], &corners[j], opts);
    }
    acc
}

/// `|S^m|` for the supported dimensions, as the grid scalar.
pub fn sigma_total<S: Scalar>(m: usize) -> S {
    sphere_volume(m)
}
