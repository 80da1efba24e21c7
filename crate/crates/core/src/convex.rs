//! Hyperbolic convex polytopes containing the basepoint `o`.
//!
//! A polytope is given by vertex directions `ξ_i` and hyperbolic radii `r_i`;
//! its Klein model is the Euclidean hull of `tanh(r_i) ξ_i`. Support and
//! radial functions follow from `tanh h(η) = max_i tanh(r_i) ⟨η, ξ_i⟩`.

use smallvec::SmallVec;

use crate::cells::CellComplex;
use crate::error::{check_dim, Error, Result};
use crate::geometry::{
    dot, hyperbolic_point, lorentz_dot_slices, Boost, Coords, MinkowskiVec, UnitVector,
};
use crate::measures::DiscreteMeasure;
use crate::quadrature::{Adaptive, QuadratureGrid};
use crate::scalar::{compensated_sum, Scalar};

/// Facets closer than this to the origin (in the Klein model) are rejected.
pub const MIN_FACET_SUPPORT: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct KleinFacet<S> {
    pub normal: UnitVector<S>,
    pub support: S,
    pub vertices: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct HyperbolicPolytope<S> {
    dim: usize,
    directions: Vec<UnitVector<S>>,
    radii: Vec<S>,
    cells: CellComplex<S>,
    facets: Vec<KleinFacet<S>>,
}

impl<S: Scalar> HyperbolicPolytope<S> {
    /// Builds the polytope with vertices `c_{ξ_i}(r_i)`.
    pub fn from_vertices(m: usize, directions: Vec<UnitVector<S>>, radii: Vec<S>) -> Result<Self> {
        check_dim(m)?;
        if directions.len() != radii.len() {
            return Err(Error::InvalidArgument(format!(
                "{} directions but {} radii",
                directions.len(),
                radii.len()
            )));
        }
        if directions.len() < m + 2 {
            return Err(Error::DegenerateHull(format!(
                "{} vertices cannot bound a polytope in dimension {}",
                directions.len(),
                m + 1
            )));
        }
        if let Some(i) = directions.iter().position(|d| d.dim() != m) {
            return Err(Error::InvalidArgument(format!(
                "direction {i} is not on S^{m}"
            )));
        }
        if let Some(i) = radii
            .iter()
            .position(|r| !(*r > S::zero()) || !r.is_finite())
        {
            return Err(Error::InvalidArgument(format!(
                "radius {i} is not positive"
            )));
        }
        let tanh_radii: Vec<S> = radii.iter().map(|r| r.tanh()).collect();
        if let Some(i) = tanh_radii.iter().position(|t| !(*t < S::one())) {
            return Err(Error::InvalidArgument(format!(
                "radius {i} is too large to represent in the Klein model"
            )));
        }
        let points: Vec<Coords<S>> = directions
            .iter()
            .zip(&tanh_radii)
            .map(|(d, &t)| d.coords().iter().map(|&c| c * t).collect())
            .collect();
        let cells = match CellComplex::new(points) {
            Ok(c) => c,
            Err(Error::UncoveredDirection { .. }) => {
                let pts: Vec<Vec<f64>> = directions
                    .iter()
                    .zip(&tanh_radii)
                    .map(|(d, &t)| d.to_f64().iter().map(|c| c * t.to_f64_lossy()).collect())
                    .collect();
                let min_support = crate::hull::Hull::new(&pts)?.min_support();
                return Err(Error::OriginNotInterior { min_support });
            }
            Err(e) => return Err(e),
        };
        if let Some(index) = (0..directions.len()).find(|&i| !cells.hull().is_extreme(i)) {
            return Err(Error::NonExtremeVertex { index });
        }
        let min_support = cells.hull().min_support();
        if min_support < MIN_FACET_SUPPORT {
            return Err(Error::OriginNotInterior { min_support });
        }
        let facets = cells
            .hull()
            .facets()
            .iter()
            .zip(cells.corners())
            .map(|(f, n)| KleinFacet {
                normal: UnitVector::from_unit_unchecked(n.clone()),
                support: S::lit(f.support),
                vertices: f.vertices.clone(),
            })
            .collect();
        Ok(Self {
            dim: m,
            directions,
            radii,
            cells,
            facets,
        })
    }

    /// Regular polygon (m = 1) with `n` vertices at radius `r`, first vertex at angle 0.
    pub fn regular_polygon(n: usize, r: S) -> Result<Self> {
        let dirs = (0..n)
            .map(|k| {
                UnitVector::from_angle(S::two() * S::PI() * S::lit(k as f64) / S::lit(n as f64))
            })
            .collect();
        Self::from_vertices(1, dirs, vec![r; n])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn directions(&self) -> &[UnitVector<S>] {
        &self.directions
    }

    pub fn radii(&self) -> &[S] {
        &self.radii
    }

    pub fn klein_facets(&self) -> &[KleinFacet<S>] {
        &self.facets
    }

    pub fn klein_points(&self) -> &[Coords<S>] {
        self.cells.points()
    }

    /// The normal fan of the Klein vertices: cell `i` is `T^{-1}(ξ_i)`.
    pub fn cells(&self) -> &CellComplex<S> {
        &self.cells
    }

    /// The vertex `c_{ξ_i}(r_i)` in Minkowski space.
    pub fn vertex(&self, i: usize) -> MinkowskiVec<S> {
        hyperbolic_point(&self.directions[i], self.radii[i])
    }

    /// `tanh h(η) = max_i tanh(r_i) ⟨η, ξ_i⟩`.
    pub fn support_tanh(&self, eta: &UnitVector<S>) -> S {
        self.cells.locate(eta.coords()).0
    }

    /// The support function `h(η)`.
    pub fn support_fn(&self, eta: &UnitVector<S>) -> S {
        self.support_tanh(eta).atanh()
    }

    /// The radial function `r(ξ) = artanh(min_{k: ⟨ξ,η_k⟩>0} h_{E,k} / ⟨ξ,η_k⟩)`.
    pub fn radial_fn(&self, xi: &UnitVector<S>) -> S {
        let mut best = S::infinity();
        for f in &self.facets {
            let d = xi.dot(&f.normal);
            if d > S::zero() {
                best = best.min(f.support / d);
            }
        }
        best.atanh()
    }

    /// Indices `i` attaining `max_i tanh(r_i) ⟨η, ξ_i⟩` (relative tolerance [`crate::cells::TIE_EPS`]).
    pub fn t_map(&self, eta: &UnitVector<S>) -> SmallVec<[usize; 4]> {
        self.cells.locate(eta.coords()).1
    }

    /// Curvature measure from the pushforward identity
    /// `T_#(cosh^{m+1}(h) σ) = cosh(r) μ`: `α_i = ∫_{T^{-1}(ξ_i)} cosh^{m+1}(h) dσ / cosh(r_i)`.
    ///
    /// Each preimage cell is integrated with its exact boundary; the grid
    /// only sets the panel size (its node spacing) before adaptive refinement.
    pub fn curvature_measure_integral(
        &self,
        grid: &QuadratureGrid<S>,
    ) -> Result<DiscreteMeasure<S>> {
        let masses = self.pushforward_masses(grid)?;
        let weights = masses
            .iter()
            .zip(&self.radii)
            .map(|(&w, &r)| w / r.cosh())
            .collect();
        DiscreteMeasure::new(self.dim, self.directions.clone(), weights)
    }

    /// `∫_{T^{-1}(ξ_i)} cosh^{m+1}(h) dσ` for every vertex.
    pub fn pushforward_masses(&self, grid: &QuadratureGrid<S>) -> Result<Vec<S>> {
        self.check_grid(grid)?;
        let e = S::lit(-((self.dim + 1) as f64) / 2.0);
        let pts = self.cells.points();
        Ok(self.cells.integrate(
            |i, eta| {
                let x = dot(&pts[i], eta);
                (S::one() - x * x).powf(e)
            },
            panel_for(grid),
            Adaptive::default(),
        ))
    }

    /// The same measure with each grid node's weight assigned to `t_map`
    /// (ties split equally). Weights may vanish for cells missed by the grid.
    pub fn curvature_measure_lumped(&self, grid: &QuadratureGrid<S>) -> Result<Vec<S>> {
        self.check_grid(grid)?;
        let n = self.len();
        let e = ((self.dim + 1) as f64) / 2.0;
        let per_node: Vec<(SmallVec<[usize; 4]>, S)> = {
            use rayon::prelude::*;
            grid.nodes()
                .par_iter()
                .zip(grid.weights().par_iter())
                .map(|(eta, &w)| {
                    let (t, idx) = self.cells.locate(eta.coords());
                    let v = w * (S::one() - t * t).powf(-S::lit(e));
                    (idx, v)
                })
                .collect()
        };
        let mut acc = vec![Vec::new(); n];
        for (idx, v) in per_node {
            let share = v / S::lit(idx.len() as f64);
            for i in idx {
                acc[i].push(share);
            }
        }
        Ok(acc
            .into_iter()
            .zip(&self.radii)
            .map(|(a, &r)| compensated_sum(a) / r.cosh())
            .collect())
    }

    /// Area of the polar boundary `∂Ω*`: `∫ cosh^{m+1}(h) / cosh(r∘T) dσ`, the
    /// total mass of [`Self::curvature_measure_integral`].
    pub fn polar_boundary_area(&self, grid: &QuadratureGrid<S>) -> Result<S> {
        Ok(self.curvature_measure_integral(grid)?.total_mass())
    }

    /// Exterior angles at the vertices, computed intrinsically in `H^{m+1}`.
    pub fn curvature_measure_angles(&self) -> Result<DiscreteMeasure<S>> {
        let w: Result<Vec<S>> = (0..self.len()).map(|i| self.exterior_angle(i)).collect();
        DiscreteMeasure::new(self.dim, self.directions.clone(), w?)
    }

    fn exterior_angle(&self, i: usize) -> Result<S> {
        let ring = self.cells.hull().vertex_facets(i);
        if ring.len() < self.dim.max(2) + (self.dim - 1) {
            return Err(Error::DegenerateVertex { index: i });
        }
        let x = self.vertex(i);
        if self.dim == 1 {
            let fin = &self.facets[ring[0]];
            let fout = &self.facets[ring[1]];
            let prev = other(&fin.vertices, i);
            let next = other(&fout.vertices, i);
            let a = tangent_at(&x, &self.vertex(prev));
            let b = tangent_at(&x, &self.vertex(next));
            Ok(S::PI() - minkowski_angle(&a, &b))
        } else {
            // outward unit normals of the incident facet planes lie in T_x
            let normals: Vec<Coords<S>> = ring
                .iter()
                .map(|&k| {
                    let f = &self.facets[k];
                    let h = f.support;
                    let s = (S::one() - h * h).sqrt();
                    let mut c = Coords::new();
                    c.push(h / s);
                    c.extend(f.normal.coords().iter().map(|&v| v / s));
                    c
                })
                .collect();
            Ok(tangent_polygon_area(x.coords(), &normals))
        }
    }

    /// Hyperbolic area of a polygon (m = 1), by fan triangulation from `o`
    /// and the angle deficit of each triangle.
    pub fn polygon_area_m1(&self) -> Result<S> {
        if self.dim != 1 {
            return Err(Error::UnsupportedDimension(self.dim));
        }
        let o = MinkowskiVec::origin(1);
        let mut parts = Vec::with_capacity(self.facets.len());
        for f in &self.facets {
            let (a, b) = (f.vertices[0], f.vertices[1]);
            let (xa, xb) = (self.vertex(a), self.vertex(b));
            let at_o = self.directions[a].distance(&self.directions[b]);
            let at_a = minkowski_angle(&tangent_at(&xa, &o), &tangent_at(&xa, &xb));
            let at_b = minkowski_angle(&tangent_at(&xb, &o), &tangent_at(&xb, &xa));
            parts.push(S::PI() - at_o - at_a - at_b);
        }
        Ok(compensated_sum(parts))
    }

    /// Image under the boost of translation length `length` along `direction`.
    pub fn apply_isometry(&self, direction: &UnitVector<S>, length: S) -> Result<Self> {
        let boost = Boost::new(direction.clone(), length);
        let mut dirs = Vec::with_capacity(self.len());
        let mut radii = Vec::with_capacity(self.len());
        for i in 0..self.len() {
            let y = boost.apply(&self.vertex(i));
            let (d, r) = y
                .hyperbolic_polar()
                .ok_or(Error::OriginNotInterior { min_support: 0.0 })?;
            dirs.push(d);
            radii.push(r);
        }
        Self::from_vertices(self.dim, dirs, radii)
    }

    fn check_grid(&self, grid: &QuadratureGrid<S>) -> Result<()> {
        if grid.dim() != self.dim {
            return Err(Error::InvalidArgument(format!(
                "grid on S^{} used with a polytope in dimension {}",
                grid.dim(),
                self.dim + 1
            )));
        }
        Ok(())
    }
}

/// Panel length for cell integration derived from a grid.
pub(crate) fn panel_for<S: Scalar>(grid: &QuadratureGrid<S>) -> S {
    // the adaptive rule controls accuracy; this only sets where it starts
    (grid.spacing() * S::lit(32.0)).min(S::lit(0.5))
}

fn other(v: &[usize], i: usize) -> usize {
    if v[0] == i {
        v[1]
    } else {
        v[0]
    }
}

/// Tangent vector at `x ∈ H^{m+1}` pointing along the geodesic towards `y`.
fn tangent_at<S: Scalar>(x: &MinkowskiVec<S>, y: &MinkowskiVec<S>) -> Coords<S> {
    let k = lorentz_dot_slices(x.coords(), y.coords());
    x.coords()
        .iter()
        .zip(y.coords())
        .map(|(&a, &b)| b + k * a)
        .collect()
}

/// Angle between two space-like vectors.
fn minkowski_angle<S: Scalar>(a: &[S], b: &[S]) -> S {
    let aa = lorentz_dot_slices(a, a);
    let bb = lorentz_dot_slices(b, b);
    let ab = lorentz_dot_slices(a, b);
    let c = ab / (aa * bb).sqrt();
    // 1 - c^2 loses digits near 0 and π; use the half-angle form there.
    if c.abs() < S::lit(0.7) {
        c.acos()
    } else {
        let na = aa.sqrt();
        let nb = bb.sqrt();
        let diff: Coords<S> = a.iter().zip(b).map(|(&x, &y)| x / na - y / nb).collect();
        let sum: Coords<S> = a.iter().zip(b).map(|(&x, &y)| x / na + y / nb).collect();
        let d = lorentz_dot_slices(&diff, &diff).max(S::zero()).sqrt();
        let s = lorentz_dot_slices(&sum, &sum).max(S::zero()).sqrt();
        S::two() * d.atan2(s)
    }
}

/// `det` of four vectors of R^4.
fn det4<S: Scalar>(m: [&[S]; 4]) -> S {
    let mut a = [[S::zero(); 4]; 4];
    for r in 0..4 {
        for c in 0..4 {
            a[r][c] = m[r][c];
        }
    }
    let mut det = S::one();
    for col in 0..4 {
        let piv = (col..4)
            .max_by(|&x, &y| a[x][col].abs().partial_cmp(&a[y][col].abs()).unwrap())
            .unwrap();
        if a[piv][col] == S::zero() {
            return S::zero();
        }
        if piv != col {
            a.swap(piv, col);
            det = -det;
        }
        det = det * a[col][col];
        for r in col + 1..4 {
            let f = a[r][col] / a[col][col];
            for c in col..4 {
                a[r][c] = a[r][c] - f * a[col][c];
            }
        }
    }
    det
}

/// Area of the geodesic polygon with unit vertices `u_k` in the unit sphere of
/// `T_x H^3` (x a point of H^3), by fan triangulation from `u_0`.
fn tangent_polygon_area<S: Scalar>(x: &[S], u: &[Coords<S>]) -> S {
    let mut acc = S::zero();
    for k in 1..u.len() - 1 {
        let (a, b, c) = (&u[0], &u[k], &u[k + 1]);
        // {x, e_1, e_2, e_3} orthonormal ⇒ |det(x, a, b, c)| is the volume form of T_x
        let num = det4([x, a, b, c]).abs();
        let den = S::one()
            + lorentz_dot_slices(a, b)
            + lorentz_dot_slices(b, c)
            + lorentz_dot_slices(c, a);
        acc = acc + S::two() * num.atan2(den);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::build_grid;
    use std::f64::consts::PI;

    fn square(r: f64) -> HyperbolicPolytope<f64> {
        HyperbolicPolytope::regular_polygon(4, r).unwrap()
    }

    fn octahedron(r: f64) -> HyperbolicPolytope<f64> {
        let mut d = Vec::new();
        for k in 0..3 {
            d.push(UnitVector::basis(2, k));
            d.push(UnitVector::basis(2, k).neg());
        }
        HyperbolicPolytope::from_vertices(2, d, vec![r; 6]).unwrap()
    }

    #[test]
    fn square_support_and_radial_values() {
        let p = square(1.0);
        assert_eq!(p.klein_facets().len(), 4);
        for i in 0..4 {
            assert!((p.support_fn(&p.directions()[i]) - 1.0).abs() < 1e-14);
            assert!((p.radial_fn(&p.directions()[i]) - 1.0).abs() < 1e-10);
        }
        let mid = UnitVector::from_angle(PI / 4.0);
        let h = (1f64.tanh() * (PI / 4.0).cos()).atanh();
        assert!((p.support_fn(&mid) - h).abs() < 1e-14);
        assert!((h - 0.6020).abs() < 1e-4);
        assert!((p.radial_fn(&mid) - h).abs() < 1e-14);
        let facet_h = p.klein_facets()[0].support.atanh();
        assert!((facet_h - h).abs() < 1e-14);
        assert_eq!(p.t_map(&mid).len(), 2);
    }

    #[test]
    fn octahedron_has_eight_facets() {
        let p = octahedron(1.0);
        assert_eq!(p.klein_facets().len(), 8);
    }

    #[test]
    fn non_extreme_vertex_is_named() {
        let d = vec![
            UnitVector::from_angle(0.0),
            UnitVector::from_angle(2.0 * PI / 3.0),
            UnitVector::from_angle(PI / 3.0),
            UnitVector::from_angle(4.0 * PI / 3.0),
        ];
        let e = HyperbolicPolytope::from_vertices(1, d, vec![1.0, 1.0, 0.01, 1.0]).unwrap_err();
        assert_eq!(e, Error::NonExtremeVertex { index: 2 });
    }

    #[test]
    fn origin_outside_is_rejected() {
        let d = vec![
            UnitVector::from_angle(0.0),
            UnitVector::from_angle(0.5),
            UnitVector::from_angle(1.0),
        ];
        let e = HyperbolicPolytope::from_vertices(1, d, vec![1.0; 3]).unwrap_err();
        assert!(matches!(e, Error::OriginNotInterior { .. }));
    }

    #[test]
    fn small_square_has_right_exterior_angles() {
        let a = square(1e-4).curvature_measure_angles().unwrap();
        for &w in a.weights() {
            assert!((w - PI / 2.0).abs() < 1e-7);
        }
    }

    #[test]
    fn small_octahedron_angles_sum_to_sphere() {
        let a = octahedron(1e-4).curvature_measure_angles().unwrap();
        assert!((a.total_mass() - 4.0 * PI).abs() < 1e-6);
        let b = octahedron(1.0).curvature_measure_angles().unwrap();
        assert!(b.total_mass() > 4.0 * PI);
    }

    #[test]
    fn gauss_bonnet_for_regular_polygons() {
        for (n, r) in [(3, 0.5), (5, 1.2), (8, 2.0)] {
            let p = HyperbolicPolytope::regular_polygon(n, r).unwrap();
            let a = p.curvature_measure_angles().unwrap().total_mass();
            assert!((a - 2.0 * PI - p.polygon_area_m1().unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn ideal_triangle_area_approaches_pi() {
        let a5 = HyperbolicPolytope::regular_polygon(3, 5.0)
            .unwrap()
            .polygon_area_m1()
            .unwrap();
        let a8 = HyperbolicPolytope::regular_polygon(3, 8.0)
            .unwrap()
            .polygon_area_m1()
            .unwrap();
        assert!(a5 < a8 && a8 < PI);
    }

    #[test]
    fn ball_polygon_total_curvature() {
        let p = HyperbolicPolytope::regular_polygon(256, 1.0).unwrap();
        let g = build_grid(1, 6).unwrap();
        let total = p.polar_boundary_area(&g).unwrap();
        assert!((total / (2.0 * PI * 1f64.cosh()) - 1.0).abs() < 0.01);
    }

    #[test]
    fn integral_matches_angles_m1() {
        let p = HyperbolicPolytope::from_vertices(
            1,
            [0.1, 1.3, 2.0, 3.5, 5.0]
                .iter()
                .map(|&a| UnitVector::from_angle(a))
                .collect(),
            vec![0.7, 1.9, 1.0, 1.1, 2.5],
        )
        .unwrap();
        let g = build_grid::<f64>(1, 6).unwrap();
        let a = p.curvature_measure_integral(&g).unwrap();
        let b = p.curvature_measure_angles().unwrap();
        for (x, y) in a.weights().iter().zip(b.weights()) {
            assert!((x - y).abs() < 1e-10, "{x} {y}");
        }
        let lumped = p.curvature_measure_lumped(&g).unwrap();
        for (x, y) in lumped.iter().zip(b.weights()) {
            assert!((x - y).abs() < 1e-2);
        }
    }

    #[test]
    fn integral_matches_angles_m2() {
        let p = octahedron(0.8);
        let g = build_grid::<f64>(2, 3).unwrap();
        let a = p.curvature_measure_integral(&g).unwrap();
        let b = p.curvature_measure_angles().unwrap();
        for (x, y) in a.weights().iter().zip(b.weights()) {
            assert!((x - y).abs() < 1e-10, "{x} {y}");
        }
    }

    #[test]
    fn boost_round_trip_and_zero_boost() {
        let p = square(1.0);
        let v = UnitVector::from_angle(0.4);
        let q = p.apply_isometry(&v, 0.3).unwrap();
        let back = q.apply_isometry(&v, -0.3).unwrap();
        for (a, b) in back.radii().iter().zip(p.radii()) {
            assert!((a - b).abs() < 1e-9);
        }
        let same = p.apply_isometry(&v, 0.0).unwrap();
        assert_eq!(same.radii(), p.radii());
    }
}
