//! Finitely supported measures on S^m and the three conditions a measure must
//! satisfy to be the curvature measure of a hyperbolic convex body: total
//! mass larger than `|S^m|`, every atom lighter than `|S^m|/2`, and the
//! Alexandrov condition `σ(ω*) < μ(S^m ∖ ω)` for proper convex `ω`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::geometry::{cross3, dot, norm, UnitVector};
use crate::hull::Hull;
use crate::scalar::{compensated_sum, sphere_volume, Scalar};

/// Minimum spherical distance between support points.
pub const MIN_SEPARATION: f64 = 1e-9;

/// Exhaustive subset enumeration is refused above this many points (m = 2).
pub const EXHAUSTIVE_LIMIT: usize = 20;

/// Membership tolerance for points on the boundary of a hull.
const MEMBER_TOL: f64 = 1e-12;

/// A cone whose minimal generator has norm below this is treated as
/// containing a line.
const POINTED_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure<S> {
    dim: usize,
    points: Vec<UnitVector<S>>,
    weights: Vec<S>,
}

impl<S: Scalar> DiscreteMeasure<S> {
    pub fn new(m: usize, points: Vec<UnitVector<S>>, weights: Vec<S>) -> Result<Self> {
        check_dim(m)?;
        if points.is_empty() || points.len() != weights.len() {
            return Err(Error::InvalidArgument(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if let Some(i) = points.iter().position(|p| p.dim() != m) {
            return Err(Error::InvalidArgument(format!("point {i} is not on S^{m}")));
        }
        if let Some(i) = weights
            .iter()
            .position(|w| !(*w > S::zero()) || !w.is_finite())
        {
            return Err(Error::InvalidArgument(format!(
                "weight {i} is not positive"
            )));
        }
        for i in 0..points.len() {
            for j in 0..i {
                if points[i].distance(&points[j]) <= S::lit(MIN_SEPARATION) {
                    return Err(Error::InvalidArgument(format!(
                        "points {j} and {i} coincide"
                    )));
                }
            }
        }
        Ok(Self {
            dim: m,
            points,
            weights,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[UnitVector<S>] {
        &self.points
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    pub fn total_mass(&self) -> S {
        compensated_sum(self.weights.iter().copied())
    }

    /// The same support with every weight multiplied by `k > 0`.
    pub fn scaled(&self, k: S) -> Result<Self> {
        Self::new(
            self.dim,
            self.points.clone(),
            self.weights.iter().map(|&w| w * k).collect(),
        )
    }
}

/// Spherical convex hull of finitely many points.
#[derive(Debug, Clone, PartialEq)]
pub enum SphericalConvexSet<S> {
    FullSphere,
    /// Closed arc of S^1 starting at angle `start`, counter-clockwise.
    Arc {
        start: S,
        length: S,
    },
    /// A single point of S^2.
    Point(UnitVector<S>),
    /// Geodesic segment of S^2 of length `< π`.
    Segment(UnitVector<S>, UnitVector<S>),
    /// Convex polygon of S^2, vertices counter-clockwise seen from outside.
    Polygon(Vec<UnitVector<S>>),
    /// A convex set of S^2 whose cone contains a line but is not all of R^3.
    /// Its polar has measure zero.
    NonPointed,
}

/// The spherical convex hull of `points` (all of one dimension, 1 or 2).
pub fn spherical_hull<S: Scalar>(points: &[UnitVector<S>]) -> Result<SphericalConvexSet<S>> {
    let Some(first) = points.first() else {
        return Err(Error::InvalidArgument("empty point set".into()));
    };
    let m = first.dim();
    check_dim(m)?;
    if m == 1 {
        return Ok(arc_hull(points));
    }
    let coords: Vec<[S; 3]> = points
        .iter()
        .map(|p| [p.coords()[0], p.coords()[1], p.coords()[2]])
        .collect();
    Ok(cone_hull(&coords))
}

fn arc_hull<S: Scalar>(points: &[UnitVector<S>]) -> SphericalConvexSet<S> {
    let two_pi = S::two() * S::PI();
    let mut ang: Vec<S> = points
        .iter()
        .map(|p| {
            let a = p.angle();
            if a < S::zero() {
                a + two_pi
            } else {
                a
            }
        })
        .collect();
    ang.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = ang.len();
    let (mut gap, mut after) = (two_pi - ang[n - 1] + ang[0], 0);
    for k in 1..n {
        let g = ang[k] - ang[k - 1];
        if g > gap {
            gap = g;
            after = k;
        }
    }
    let length = (two_pi - gap).max(S::zero());
    if length < S::PI() {
        SphericalConvexSet::Arc {
            start: ang[after],
            length,
        }
    } else {
        SphericalConvexSet::FullSphere
    }
}

/// Minimum-norm point of the convex hull of `pts` (Wolfe's algorithm).
pub(crate) fn min_norm_point<S: Scalar>(pts: &[[S; 3]]) -> [S; 3] {
    let n = pts.len();
    let scale = pts.iter().map(|p| dot(p, p)).fold(S::zero(), S::max);
    let eps = S::lit(1e-14) * scale;
    let start = (0..n)
        .min_by(|&a, &b| {
            dot(&pts[a], &pts[a])
                .partial_cmp(&dot(&pts[b], &pts[b]))
                .unwrap()
        })
        .unwrap();
    let mut set = vec![start];
    let mut w = vec![S::one()];
    let mut x = pts[start];
    for _ in 0..(50 * n + 50) {
        let j = (0..n)
            .min_by(|&a, &b| dot(&x, &pts[a]).partial_cmp(&dot(&x, &pts[b])).unwrap())
            .unwrap();
        if dot(&x, &x) - dot(&x, &pts[j]) <= eps || set.contains(&j) {
            return x;
        }
        set.push(j);
        w.push(S::zero());
        loop {
            let lam = affine_min_norm(pts, &set);
            if lam.iter().all(|&l| l > S::zero()) {
                w = lam;
                x = combine(pts, &set, &w);
                break;
            }
            let mut theta = S::one();
            for (k, &l) in lam.iter().enumerate() {
                if l <= S::zero() {
                    let d = w[k] - l;
                    if d > S::zero() {
                        theta = theta.min(w[k] / d);
                    }
                }
            }
            for k in 0..w.len() {
                w[k] = theta * lam[k] + (S::one() - theta) * w[k];
            }
            let mut k = 0;
            while k < set.len() {
                if w[k] <= S::lit(1e-15) {
                    set.remove(k);
                    w.remove(k);
                } else {
                    k += 1;
                }
            }
            let total = w.iter().fold(S::zero(), |a, &b| a + b);
            for v in w.iter_mut() {
                *v = *v / total;
            }
            x = combine(pts, &set, &w);
            if set.len() <= 1 {
                break;
            }
        }
    }
    x
}

fn combine<S: Scalar>(pts: &[[S; 3]], set: &[usize], w: &[S]) -> [S; 3] {
    let mut x = [S::zero(); 3];
    for (&i, &wi) in set.iter().zip(w) {
        for k in 0..3 {
            x[k] = x[k] + wi * pts[i][k];
        }
    }
    x
}

/// Barycentric coordinates of the minimum-norm point of the affine hull.
fn affine_min_norm<S: Scalar>(pts: &[[S; 3]], set: &[usize]) -> Vec<S> {
    let k = set.len();
    let mut a = vec![vec![S::zero(); k + 1]; k + 1];
    let mut b = vec![S::zero(); k + 1];
    for r in 0..k {
        for c in 0..k {
            a[r][c] = dot(&pts[set[r]], &pts[set[c]]);
        }
        a[r][k] = S::one();
        a[k][r] = S::one();
    }
    b[k] = S::one();
    solve_dense(a, b)
        .map(|mut v| {
            v.truncate(k);
            v
        })
        .unwrap_or_else(|| vec![S::one() / S::lit(k as f64); k])
}

fn solve_dense<S: Scalar>(mut a: Vec<Vec<S>>, mut b: Vec<S>) -> Option<Vec<S>> {
    let n = b.len();
    for col in 0..n {
        let piv =
            (col..n).max_by(|&x, &y| a[x][col].abs().partial_cmp(&a[y][col].abs()).unwrap())?;
        if a[piv][col].abs() < S::lit(1e-300) {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] = a[r][c] - f * a[col][c];
            }
            b[r] = b[r] - f * b[col];
        }
    }
    let mut x = vec![S::zero(); n];
    for r in (0..n).rev() {
        let mut s = b[r];
        for c in r + 1..n {
            s = s - a[r][c] * x[c];
        }
        x[r] = s / a[r][r];
    }
    if x.iter().all(|v| v.is_finite()) {
        Some(x)
    } else {
        None
    }
}

fn unit_of<S: Scalar>(v: [S; 3]) -> [S; 3] {
    let n = norm(&v);
    [v[0] / n, v[1] / n, v[2] / n]
}

fn to_unit<S: Scalar>(v: &[S; 3]) -> UnitVector<S> {
    UnitVector::from_unit_unchecked(v.iter().copied().collect())
}

fn cone_hull<S: Scalar>(pts: &[[S; 3]]) -> SphericalConvexSet<S> {
    let z = min_norm_point(pts);
    if norm(&z) <= S::lit(POINTED_TOL) {
        // the origin is in the hull: either a line or all of R^3
        let pts64: Vec<Vec<f64>> = pts
            .iter()
            .map(|p| p.iter().map(|c| c.to_f64_lossy()).collect())
            .collect();
        let mut with_origin = pts64.clone();
        with_origin.push(vec![0.0; 3]);
        return match Hull::new(&with_origin) {
            Ok(h) if h.min_support() > 1e-12 => SphericalConvexSet::FullSphere,
            _ => SphericalConvexSet::NonPointed,
        };
    }
    let c = unit_of(z);
    let e1 = {
        let a = crate::geometry::any_orthogonal3(&c);
        [a[0], a[1], a[2]]
    };
    let e2 = cross3(&c, &e1);
    let proj: Vec<Vec<f64>> = pts
        .iter()
        .map(|p| {
            let h = dot(p, &c);
            vec![
                (dot(p, &e1) / h).to_f64_lossy(),
                (dot(p, &e2) / h).to_f64_lossy(),
            ]
        })
        .collect();
    match Hull::new(&proj) {
        Ok(h) => {
            // hull2 stores facets in counter-clockwise order around +c
            let verts: Vec<UnitVector<S>> = h
                .facets()
                .iter()
                .map(|f| to_unit(&pts[f.vertices[0]]))
                .collect();
            SphericalConvexSet::Polygon(verts)
        }
        Err(_) => {
            // collinear or coincident in the gnomonic chart
            let (mut lo, mut hi) = (0, 0);
            let dir = {
                let far = (0..proj.len())
                    .max_by(|&a, &b| {
                        dist2(&proj[a], &proj[0]).total_cmp(&dist2(&proj[b], &proj[0]))
                    })
                    .unwrap();
                [proj[far][0] - proj[0][0], proj[far][1] - proj[0][1]]
            };
            if dir[0] == 0.0 && dir[1] == 0.0 {
                return SphericalConvexSet::Point(to_unit(&pts[0]));
            }
            let key = |i: usize| proj[i][0] * dir[0] + proj[i][1] * dir[1];
            for i in 0..proj.len() {
                if key(i) < key(lo) {
                    lo = i;
                }
                if key(i) > key(hi) {
                    hi = i;
                }
            }
            SphericalConvexSet::Segment(to_unit(&pts[lo]), to_unit(&pts[hi]))
        }
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// `σ(ω*)`, the measure of the set of directions at distance `≥ π/2` from `ω`.
pub fn polar_sigma_area<S: Scalar>(omega: &SphericalConvexSet<S>) -> Result<S> {
    let pi = S::PI();
    match omega {
        SphericalConvexSet::FullSphere => Err(Error::InvalidArgument(
            "the polar of the full sphere is empty".into(),
        )),
        SphericalConvexSet::Arc { length, .. } => Ok((pi - *length).max(S::zero())),
        SphericalConvexSet::Point(_) => Ok(S::two() * pi),
        SphericalConvexSet::Segment(a, b) => Ok(S::two() * (pi - a.distance(b)).max(S::zero())),
        SphericalConvexSet::NonPointed => Ok(S::zero()),
        SphericalConvexSet::Polygon(v) => {
            let n = v.len();
            // outward edge normals are the vertices of the polar polygon
            let mut polar: Vec<[S; 3]> = (0..n)
                .map(|k| {
                    let a = v[k].coords();
                    let b = v[(k + 1) % n].coords();
                    unit_of(cross3(b, a))
                })
                .collect();
            merge_close(&mut polar);
            Ok(polygon_area_by_excess(&polar))
        }
    }
}

fn merge_close<S: Scalar>(poly: &mut Vec<[S; 3]>) {
    let tol = S::lit(1e-9);
    let mut k = 0;
    while poly.len() > 1 && k < poly.len() {
        let next = (k + 1) % poly.len();
        if crate::geometry::angle_between(&poly[k], &poly[next]) < tol {
            poly.remove(next);
        } else {
            k += 1;
        }
    }
}

/// Area of a convex geodesic polygon from its interior angles (the angle at
/// a vertex is measured between tangent directions of its two edges).
pub fn polygon_area_by_excess<S: Scalar>(poly: &[[S; 3]]) -> S {
    let n = poly.len();
    if n < 3 {
        return S::zero();
    }
    let tangent = |at: &[S; 3], to: &[S; 3]| {
        let d = dot(at, to);
        [to[0] - d * at[0], to[1] - d * at[1], to[2] - d * at[2]]
    };
    let mut sum = S::zero();
    for k in 0..n {
        let u = &poly[k];
        let t1 = tangent(u, &poly[(k + n - 1) % n]);
        let t2 = tangent(u, &poly[(k + 1) % n]);
        sum = sum + crate::geometry::angle_between(&t1, &t2);
    }
    sum - S::lit((n - 2) as f64) * S::PI()
}

fn contains<S: Scalar>(omega: &SphericalConvexSet<S>, x: &[S]) -> bool {
    let tol = S::lit(MEMBER_TOL);
    match omega {
        SphericalConvexSet::FullSphere => true,
        SphericalConvexSet::NonPointed => false,
        SphericalConvexSet::Arc { start, length } => {
            let two_pi = S::two() * S::PI();
            let mut d = x[1].atan2(x[0]) - *start;
            while d < -tol {
                d = d + two_pi;
            }
            while d >= two_pi - tol {
                d = d - two_pi;
            }
            d <= *length + tol
        }
        SphericalConvexSet::Point(p) => {
            crate::geometry::angle_between(p.coords(), x) <= S::lit(MIN_SEPARATION)
        }
        SphericalConvexSet::Segment(a, b) => {
            let n = cross3(a.coords(), b.coords());
            let n = unit_of(n);
            dot(&n, x).abs() <= tol
                && dot(&cross3(a.coords(), x), &n) >= -tol
                && dot(&cross3(x, b.coords()), &n) >= -tol
        }
        SphericalConvexSet::Polygon(v) => {
            let k = v.len();
            (0..k).all(|i| dot(&cross3(v[i].coords(), v[(i + 1) % k].coords()), x) >= -tol)
        }
    }
}

/// Mode of the Alexandrov search on S^2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CheckMode {
    Exhaustive,
    Sampled { subsets: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub dim: usize,
    pub total_mass_ok: bool,
    /// `μ(S^m) − σ(S^m)`.
    pub total_mass_excess: f64,
    pub vertex_ok: bool,
    pub max_weight: f64,
    /// Index of the heaviest atom.
    pub vertex_witness: usize,
    pub alexandrov_ok: bool,
    /// Smallest `μ(S^m ∖ ω) − σ(ω*)` over the tested `ω`.
    pub alexandrov_slack: f64,
    /// Support indices contained in the minimizing `ω`.
    pub worst_witness: Vec<usize>,
    pub exhaustive: bool,
    pub candidates_tested: usize,
}

impl ConditionReport {
    pub fn all_ok(&self) -> bool {
        self.total_mass_ok && self.vertex_ok && self.alexandrov_ok
    }
}

/// Strictness margin: conditions pass only with margin above `1e-9 |S^m|`.
pub fn cond_eps(m: usize) -> f64 {
    1e-9 * sphere_volume::<f64>(m)
}

/// Candidate `ω` with its slack; ordering breaks ties by the witness set.
#[derive(Debug, Clone)]
struct Candidate {
    slack: f64,
    key: u64,
    members: Vec<usize>,
}

fn better(a: Candidate, b: Candidate) -> Candidate {
    if b.slack < a.slack || (b.slack == a.slack && b.key < a.key) {
        b
    } else {
        a
    }
}

/// Checks total mass, vertex and Alexandrov conditions.
pub fn check_conditions<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    mode: CheckMode,
) -> Result<ConditionReport> {
    let m = mu.dim();
    check_dim(m)?;
    let sigma = sphere_volume::<f64>(m);
    let eps = cond_eps(m);
    let w: Vec<f64> = mu.weights().iter().map(|w| w.to_f64_lossy()).collect();
    let total = compensated_sum(w.iter().copied());
    let (vertex_witness, max_weight) =
        w.iter()
            .copied()
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |acc, (i, x)| if x > acc.1 { (i, x) } else { acc },
            );
    let pts: Vec<Vec<f64>> = mu.points().iter().map(|p| p.to_f64()).collect();

    let (best, exhaustive, tested) = if m == 1 {
        let (c, t) = alexandrov_circle(&pts, &w);
        (c, true, t)
    } else {
        alexandrov_sphere(&pts, &w, mode)?
    };
    Ok(ConditionReport {
        dim: m,
        total_mass_ok: total - sigma > eps,
        total_mass_excess: total - sigma,
        vertex_ok: 0.5 * sigma - max_weight > eps,
        max_weight,
        vertex_witness,
        alexandrov_ok: best.slack > eps,
        alexandrov_slack: best.slack,
        worst_witness: best.members,
        exhaustive,
        candidates_tested: tested,
    })
}

/// Exact search on S^1: every arc of length `< π` from one support point to
/// another (singletons included) and every closed half-circle ending at a
/// support point.
fn alexandrov_circle(pts: &[Vec<f64>], w: &[f64]) -> (Candidate, usize) {
    use std::f64::consts::PI;
    let n = pts.len();
    let two_pi = 2.0 * PI;
    let mut order: Vec<(f64, usize)> = pts
        .iter()
        .enumerate()
        .map(|(i, p)| (p[1].atan2(p[0]).rem_euclid(two_pi), i))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total = compensated_sum(w.iter().copied());
    let mut best = Candidate {
        slack: f64::INFINITY,
        key: u64::MAX,
        members: Vec::new(),
    };
    let mut tested = 0;
    let ccw = |from: f64, to: f64| (to - from).rem_euclid(two_pi);
    for s in 0..n {
        let mut inside = 0.0;
        let mut members = Vec::new();
        for len in 0..n {
            let k = (s + len) % n;
            let l = ccw(order[s].0, order[k].0);
            if len > 0 && l >= PI - MEMBER_TOL {
                break;
            }
            inside += w[order[k].1];
            members.push(order[k].1);
            tested += 1;
            let slack = (total - inside) - (PI - l);
            let mut sorted = members.clone();
            sorted.sort_unstable();
            best = better(
                best,
                Candidate {
                    slack,
                    key: (s * n + len) as u64,
                    members: sorted,
                },
            );
        }
        // half-circles [θ_s, θ_s + π] and [θ_s − π, θ_s]
        for dir in [1.0, -1.0] {
            let mut inside = 0.0;
            let mut members = Vec::new();
            for &(a, i) in &order {
                let d = if dir > 0.0 {
                    ccw(order[s].0, a)
                } else {
                    ccw(a, order[s].0)
                };
                if d <= PI + MEMBER_TOL {
                    inside += w[i];
                    members.push(i);
                }
            }
            tested += 1;
            members.sort_unstable();
            best = better(
                best,
                Candidate {
                    slack: total - inside,
                    key: (n * n + 2 * s + (dir < 0.0) as usize) as u64,
                    members,
                },
            );
        }
    }
    (best, tested)
}

fn slack_of_subset(
    pts: &[[f64; 3]],
    w: &[f64],
    total: f64,
    subset: &[usize],
) -> Option<(f64, Vec<usize>)> {
    let gen: Vec<[f64; 3]> = subset.iter().map(|&i| pts[i]).collect();
    let omega = cone_hull(&gen);
    match omega {
        SphericalConvexSet::FullSphere | SphericalConvexSet::NonPointed => None,
        _ => {
            let sigma_star = polar_sigma_area(&omega).ok()?;
            let mut inside = 0.0;
            let mut members = Vec::new();
            for (i, p) in pts.iter().enumerate() {
                if subset.contains(&i) || contains(&omega, p) {
                    inside += w[i];
                    members.push(i);
                }
            }
            Some((total - inside - sigma_star, members))
        }
    }
}

fn hemisphere_slack(pts: &[[f64; 3]], w: &[f64], total: f64, n: &[f64; 3]) -> (f64, Vec<usize>) {
    let mut inside = 0.0;
    let mut members = Vec::new();
    for (i, p) in pts.iter().enumerate() {
        if dot(n, p) >= -MEMBER_TOL {
            inside += w[i];
            members.push(i);
        }
    }
    (total - inside, members)
}

fn alexandrov_sphere(
    pts: &[Vec<f64>],
    w: &[f64],
    mode: CheckMode,
) -> Result<(Candidate, bool, usize)> {
    let n = pts.len();
    let p3: Vec<[f64; 3]> = pts.iter().map(|p| [p[0], p[1], p[2]]).collect();
    let total = compensated_sum(w.iter().copied());
    let masks: Vec<u64> = match mode {
        CheckMode::Exhaustive => {
            if n > EXHAUSTIVE_LIMIT {
                return Err(Error::TooManyForExhaustive(n));
            }
            (1..(1u64 << n)).collect()
        }
        CheckMode::Sampled { subsets, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut out: Vec<Vec<usize>> = Vec::new();
            for i in 0..n {
                out.push(vec![i]);
                out.push((0..n).filter(|&j| j != i).collect());
            }
            for _ in 0..subsets {
                let p: f64 = rng.gen_range(0.05..0.95);
                let s: Vec<usize> = (0..n).filter(|_| rng.gen_bool(p)).collect();
                if !s.is_empty() {
                    out.push(s);
                }
            }
            return Ok(sampled_search(&p3, w, total, out));
        }
    };
    let subset_of = |mask: u64| -> Vec<usize> { (0..n).filter(|&i| mask >> i & 1 == 1).collect() };
    let best = masks
        .par_iter()
        .filter_map(|&mask| {
            slack_of_subset(&p3, w, total, &subset_of(mask)).map(|(slack, members)| Candidate {
                slack,
                key: mask,
                members,
            })
        })
        .reduce(
            || Candidate {
                slack: f64::INFINITY,
                key: u64::MAX,
                members: Vec::new(),
            },
            better,
        );
    let (hb, ht) = hemispheres(&p3, w, total, None);
    let tested = masks.len() + ht;
    Ok((better(best, hb), true, tested))
}

fn sampled_search(
    p3: &[[f64; 3]],
    w: &[f64],
    total: f64,
    subsets: Vec<Vec<usize>>,
) -> (Candidate, bool, usize) {
    let tested = subsets.len();
    let best = subsets
        .par_iter()
        .enumerate()
        .filter_map(|(k, s)| {
            slack_of_subset(p3, w, total, s).map(|(slack, members)| Candidate {
                slack,
                key: k as u64,
                members,
            })
        })
        .reduce(
            || Candidate {
                slack: f64::INFINITY,
                key: u64::MAX,
                members: Vec::new(),
            },
            better,
        );
    let cap = if p3.len() > 200 { Some(20_000) } else { None };
    let (hb, ht) = hemispheres(p3, w, total, cap);
    (better(best, hb), false, tested + ht)
}

/// Closed hemispheres whose boundary passes through two support points or
/// whose pole is a support point. Their polars are null sets.
fn hemispheres(p3: &[[f64; 3]], w: &[f64], total: f64, cap: Option<usize>) -> (Candidate, usize) {
    let n = p3.len();
    let mut normals: Vec<[f64; 3]> = Vec::new();
    for i in 0..n {
        normals.push(p3[i]);
        normals.push([-p3[i][0], -p3[i][1], -p3[i][2]]);
        for j in i + 1..n {
            let c = cross3(&p3[i], &p3[j]);
            if norm(&c) > 1e-12 {
                let c = unit_of(c);
                normals.push(c);
                normals.push([-c[0], -c[1], -c[2]]);
            }
        }
    }
    if let Some(cap) = cap {
        let stride = (normals.len() / cap).max(1);
        normals = normals.into_iter().step_by(stride).collect();
    }
    let tested = normals.len();
    let best = normals
        .par_iter()
        .enumerate()
        .map(|(k, nrm)| {
            let (slack, members) = hemisphere_slack(p3, w, total, nrm);
            Candidate {
                slack,
                key: (1u64 << 40) + k as u64,
                members,
            }
        })
        .reduce(
            || Candidate {
                slack: f64::INFINITY,
                key: u64::MAX,
                members: Vec::new(),
            },
            better,
        );
    (best, tested)
}
