//! The normal fan of a Klein-model point set.
//!
//! For points `p_1, …, p_N` with the origin strictly inside their hull, the
//! cells `V_i = {η : p_i·η ≥ p_j·η ∀j}` tile the sphere. `V_i` is the normal
//! cone of `p_i`, empty unless `p_i` is a hull vertex; its corners are the
//! unit normals of the incident facets. These cells serve both as the
//! preimages `T^{-1}(ξ_i)` of a polytope and as the weighted Voronoi cells
//! of a discrete potential.

use rayon::prelude::*;
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::geometry::{dot, Coords};
use crate::hull::Hull;
use crate::quadrature::{
    gl_panel, integrate_arc, integrate_spherical_triangle, triangle_rule, Adaptive, ROUNDING_FLOOR,
};
use crate::scalar::Scalar;

/// Relative tolerance for ties in `max_i p_i·η`.
pub const TIE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell<S> {
    Empty,
    /// Counter-clockwise arc `[start, end]` of S^1 (angles, `end > start`).
    Arc {
        start: S,
        end: S,
    },
    /// Convex geodesic polygon of S^2, corners counter-clockwise from outside.
    Polygon(Vec<[S; 3]>),
}

#[derive(Debug, Clone)]
pub struct CellComplex<S> {
    dim: usize,
    points: Vec<Coords<S>>,
    hull: Hull,
    cells: Vec<Cell<S>>,
    normals: Vec<Coords<S>>,
}

impl<S: Scalar> CellComplex<S> {
    /// Builds the fan of `points` (each of length `m + 1`). Fails with
    /// [`Error::UncoveredDirection`] when the origin is not strictly interior.
    pub fn new(points: Vec<Coords<S>>) -> Result<Self> {
        let dim = points
            .first()
            .map(|p| p.len())
            .unwrap_or(0)
            .saturating_sub(1);
        let pts64: Vec<Vec<f64>> = points
            .iter()
            .map(|p| p.iter().map(|c| c.to_f64_lossy()).collect())
            .collect();
        let hull = Hull::new(&pts64)?;
        let (worst, min_support) = hull
            .facets()
            .iter()
            .enumerate()
            .map(|(k, f)| (k, f.support))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if !(min_support > 0.0) {
            return Err(Error::UncoveredDirection {
                direction: hull.facets()[worst].normal.clone(),
            });
        }
        let normals: Vec<Coords<S>> = hull
            .facets()
            .iter()
            .map(|f| f.normal.iter().map(|&c| S::lit(c)).collect())
            .collect();
        let cells = (0..points.len())
            .map(|i| {
                if !hull.is_extreme(i) {
                    return Cell::Empty;
                }
                let ring = hull.vertex_facets(i);
                if dim == 1 {
                    let a = &normals[ring[0]];
                    let b = &normals[ring[1]];
                    let start = a[1].atan2(a[0]);
                    let mut end = b[1].atan2(b[0]);
                    if end <= start {
                        end = end + S::two() * S::PI();
                    }
                    Cell::Arc { start, end }
                } else {
                    Cell::Polygon(
                        ring.iter()
                            .map(|&k| [normals[k][0], normals[k][1], normals[k][2]])
                            .collect(),
                    )
                }
            })
            .collect();
        Ok(Self {
            dim,
            points,
            hull,
            cells,
            normals,
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

    pub fn points(&self) -> &[Coords<S>] {
        &self.points
    }

    pub fn hull(&self) -> &Hull {
        &self.hull
    }

    pub fn cell(&self, i: usize) -> &Cell<S> {
        &self.cells[i]
    }

    pub fn cells(&self) -> &[Cell<S>] {
        &self.cells
    }

    /// Unit facet normals: the corners of the cells.
    pub fn corners(&self) -> &[Coords<S>] {
        &self.normals
    }

    /// `max_i p_i·η` and every index attaining it within [`TIE_EPS`].
    pub fn locate(&self, eta: &[S]) -> (S, SmallVec<[usize; 4]>) {
        let mut best = S::neg_infinity();
        for p in &self.points {
            best = best.max(dot(p, eta));
        }
        let cut = best - S::lit(TIE_EPS) * best.abs();
        let idx = self
            .points
            .iter()
            .enumerate()
            .filter(|(_, p)| dot(p, eta) >= cut)
            .map(|(i, _)| i)
            .collect();
        (best, idx)
    }

    /// `∫_{V_i} f(i, η) dσ(η)` for every cell. Each cell is first split into
    /// pieces no longer than `panel` radians, then refined adaptively.
    pub fn integrate<F>(&self, f: F, panel: S, opts: Adaptive) -> Vec<S>
    where
        F: Fn(usize, &[S]) -> S + Sync,
    {
        (0..self.cells.len())
            .into_par_iter()
            .map(|i| integrate_cell(&self.cells[i], |eta| f(i, eta), panel, opts))
            .collect()
    }
}

fn integrate_cell<S: Scalar, F: Fn(&[S]) -> S>(
    cell: &Cell<S>,
    f: F,
    panel: S,
    opts: Adaptive,
) -> S {
    match cell {
        Cell::Empty => S::zero(),
        Cell::Arc { start, end } => {
            let len = *end - *start;
            let pieces = (len / panel).ceil().to_usize().unwrap_or(1).max(1);
            let step = len / S::lit(pieces as f64);
            let g = |t: S| f(&[t.cos(), t.sin()]);
            let opts = with_floor(opts, gl_panel(&g, *start, *end));
            let mut acc = S::zero();
            for k in 0..pieces {
                let a = *start + step * S::lit(k as f64);
                let b = if k + 1 == pieces { *end } else { a + step };
                acc = acc + integrate_arc(&g, a, b, opts);
            }
            acc
        }
        Cell::Polygon(corners) => {
            let mut c = [S::zero(); 3];
            for q in corners {
                for k in 0..3 {
                    c[k] = c[k] + q[k];
                }
            }
            let n = dot(&c, &c).sqrt();
            let c = [c[0] / n, c[1] / n, c[2] / n];
            // pieces whose own integral is tiny (slivers of the fan) stop at
            // the rounding level of the whole cell, not their own
            let rough = (0..corners.len()).fold(S::zero(), |acc, i| {
                acc + triangle_rule(&f, &c, &corners[i], &corners[(i + 1) % corners.len()])
            });
            let opts = with_floor(opts, rough);
            let mut acc = S::zero();
            for i in 0..corners.len() {
                let j = (i + 1) % corners.len();
                acc = acc + split_triangle(&f, &c, &corners[i], &corners[j], panel, opts);
            }
            acc
        }
    }
}

fn with_floor<S: Scalar>(opts: Adaptive, estimate: S) -> Adaptive {
    Adaptive {
        abs_tol: opts
            .abs_tol
            .max(ROUNDING_FLOOR * opts.rel_tol * estimate.abs().to_f64_lossy()),
        ..opts
    }
}

fn split_triangle<S: Scalar, F: Fn(&[S]) -> S>(
    f: &F,
    a: &[S; 3],
    b: &[S; 3],
    c: &[S; 3],
    panel: S,
    opts: Adaptive,
) -> S {
    let ang = |x: &[S; 3], y: &[S; 3]| crate::geometry::angle_between(x, y);
    let longest = ang(a, b).max(ang(b, c)).max(ang(c, a));
    if longest == S::zero() {
        return S::zero();
    }
    if longest <= panel {
        return integrate_spherical_triangle(f, a, b, c, opts);
    }
    let mid = |x: &[S; 3], y: &[S; 3]| {
        let m = [x[0] + y[0], x[1] + y[1], x[2] + y[2]];
        let n = dot(&m, &m).sqrt();
        [m[0] / n, m[1] / n, m[2] / n]
    };
    let (ab, bc, ca) = (mid(a, b), mid(b, c), mid(c, a));
    split_triangle(f, a, &ab, &ca, panel, opts)
        + split_triangle(f, b, &bc, &ab, panel, opts)
        + split_triangle(f, c, &ca, &bc, panel, opts)
        + split_triangle(f, &ab, &bc, &ca, panel, opts)
}
