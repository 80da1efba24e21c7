//! Minkowski-space linear algebra: points of the sphere, hyperbolic space and
//! de Sitter space, the transport cost, Klein-model conversions and boosts.
//!
//! Coordinates of `R^{m+2}` are `(x_0, x_1, …, x_{m+1})` with the Lorentzian
//! form `⟨x,y⟩ = -x_0 y_0 + Σ x_k y_k`. Directions in `S^m ⊂ R^{m+1}` are
//! embedded as `(0, ξ)`.

use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dot products at or below this value are treated as `π/2` or further apart.
pub const DOT_FLOOR: f64 = 1e-12;

/// Tolerance on the Euclidean norm of a [`UnitVector`].
pub const UNIT_TOL: f64 = 1e-12;

pub type Coords<S> = SmallVec<[S; 4]>;

/// A point of `S^m`, stored as a unit vector of `R^{m+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitVector<S> {
    coords: Coords<S>,
}

impl<S: Scalar> UnitVector<S> {
    /// Normalizes `coords`; fails on the zero vector or non-finite input.
    pub fn normalize(coords: &[S]) -> Result<Self> {
        let n = norm(coords);
        if !(n > S::zero()) || !n.is_finite() || coords.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "cannot normalize vector of norm {n}"
            )));
        }
        Ok(Self {
            coords: coords.iter().map(|&c| c / n).collect(),
        })
    }

    /// Accepts coordinates whose norm is within `tol` of one, renormalizing
    /// them unless they are already unit to rounding (kept bit for bit).
    pub fn from_nearly_unit(coords: &[S], tol: S) -> Result<Self> {
        let n = norm(coords);
        if !((n - S::one()).abs() <= tol) {
            return Err(Error::InvalidArgument(format!(
                "vector of norm {n} is not a unit vector"
            )));
        }
        if coords.len() >= 2 && (n - S::one()).abs() <= S::lit(64.0) * S::epsilon() {
            return Ok(Self {
                coords: coords.iter().copied().collect(),
            });
        }
        Self::normalize(coords)
    }

    /// Wraps coordinates that are already of unit norm (debug-checked).
    pub(crate) fn from_unit_unchecked(coords: Coords<S>) -> Self {
        debug_assert!((norm(&coords) - S::one()).abs() < S::lit(1e-9));
        Self { coords }
    }

    /// `(cos θ, sin θ)` on `S^1`.
    pub fn from_angle(theta: S) -> Self {
        let mut c = Coords::new();
        c.push(theta.cos());
        c.push(theta.sin());
        Self { coords: c }
    }

    /// `(sin θ cos φ, sin θ sin φ, cos θ)` on `S^2`.
    pub fn from_spherical(polar: S, azimuth: S) -> Self {
        let mut c = Coords::new();
        c.push(polar.sin() * azimuth.cos());
        c.push(polar.sin() * azimuth.sin());
        c.push(polar.cos());
        Self { coords: c }
    }

    /// The standard basis vector `e_k` of `R^{m+1}`.
    pub fn basis(m: usize, k: usize) -> Self {
        let mut c: Coords<S> = std::iter::repeat(S::zero()).take(m + 1).collect();
        c[k] = S::one();
        Self { coords: c }
    }

    /// Sphere dimension `m`.
    #[inline]
    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }

    #[inline]
    pub fn coords(&self) -> &[S] {
        &self.coords
    }

    #[inline]
    pub fn dot(&self, other: &Self) -> S {
        dot(&self.coords, &other.coords)
    }

    /// Spherical (great-circle) distance.
    pub fn distance(&self, other: &Self) -> S {
        angle_between(&self.coords, &other.coords)
    }

    pub fn neg(&self) -> Self {
        Self {
            coords: self.coords.iter().map(|&c| -c).collect(),
        }
    }

    /// Polar angle of a point of `S^1`.
    pub fn angle(&self) -> S {
        self.coords[1].atan2(self.coords[0])
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.coords.iter().map(|c| c.to_f64_lossy()).collect()
    }
}

/// A vector of Minkowski space `R^{m+2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MinkowskiVec<S> {
    coords: Coords<S>,
}

impl<S: Scalar> MinkowskiVec<S> {
    pub fn new(coords: &[S]) -> Self {
        Self {
            coords: coords.iter().copied().collect(),
        }
    }

    /// The basepoint `o = (1, 0, …, 0)` of `H^{m+1}`.
    pub fn origin(m: usize) -> Self {
        let mut c: Coords<S> = std::iter::repeat(S::zero()).take(m + 2).collect();
        c[0] = S::one();
        Self { coords: c }
    }

    /// `(0, ξ)`.
    pub fn from_direction(xi: &UnitVector<S>) -> Self {
        let mut c = Coords::new();
        c.push(S::zero());
        c.extend(xi.coords().iter().copied());
        Self { coords: c }
    }

    #[inline]
    pub fn coords(&self) -> &[S] {
        &self.coords
    }

    #[inline]
    pub fn time(&self) -> S {
        self.coords[0]
    }

    #[inline]
    pub fn spatial(&self) -> &[S] {
        &self.coords[1..]
    }

    /// Sphere dimension `m` (the vector lives in `R^{m+2}`).
    pub fn dim(&self) -> usize {
        self.coords.len() - 2
    }

    pub fn scale(&self, k: S) -> Self {
        Self {
            coords: self.coords.iter().map(|&c| c * k).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            coords: self
                .coords
                .iter()
                .zip(other.coords.iter())
                .map(|(&a, &b)| a + b)
                .collect(),
        }
    }

    /// Klein projection `x ↦ x_spatial / x_0` of a future time-like vector.
    pub fn klein(&self) -> Coords<S> {
        let t = self.coords[0];
        self.coords[1..].iter().map(|&c| c / t).collect()
    }

    /// Euclidean norm `k` of the Klein projection together with `1 - k`, the
    /// latter computed without cancellation from `x_0^2 - |x_s|^2 = 1`.
    pub fn klein_radius(&self) -> (S, S) {
        let s = norm(self.spatial());
        let t = self.coords[0];
        (s / t, S::one() / (t * (t + s)))
    }

    /// Polar coordinates `(ξ, t)` of a point of `H^{m+1}`, `x = c_ξ(t)`.
    /// Returns `None` for the basepoint itself.
    pub fn hyperbolic_polar(&self) -> Option<(UnitVector<S>, S)> {
        let s = norm(self.spatial());
        if !(s > S::zero()) {
            return None;
        }
        let xi = UnitVector::from_unit_unchecked(self.spatial().iter().map(|&c| c / s).collect());
        // t = asinh(|x_spatial|) is better conditioned than acosh(x_0) near o.
        Some((xi, s.asinh()))
    }

    /// Cylinder coordinates `(t, η)` of a point of `dS^{m+1}`, `x = c'_η(t)`.
    pub fn desitter_cylinder(&self) -> Option<(S, UnitVector<S>)> {
        let s = norm(self.spatial());
        if !(s > S::zero()) {
            return None;
        }
        let eta = UnitVector::from_unit_unchecked(self.spatial().iter().map(|&c| c / s).collect());
        Some((self.coords[0].asinh(), eta))
    }
}

/// `artanh(k)` given both `k` and `1 - k`; stays accurate as `k → 1`.
pub fn artanh_with_complement<S: Scalar>(k: S, one_minus_k: S) -> S {
    S::lit(0.5) * (k.ln_1p() - one_minus_k.ln())
}

/// The Lorentzian form `-x_0 y_0 + Σ_k x_k y_k`.
pub fn lorentz_dot<S: Scalar>(x: &MinkowskiVec<S>, y: &MinkowskiVec<S>) -> S {
    lorentz_dot_slices(x.coords(), y.coords())
}

#[inline]
pub(crate) fn lorentz_dot_slices<S: Scalar>(x: &[S], y: &[S]) -> S {
    -x[0] * y[0] + dot(&x[1..], &y[1..])
}

/// Lorentzian norm `sqrt(|⟨x,x⟩|)`.
pub fn lorentz_norm<S: Scalar>(x: &MinkowskiVec<S>) -> S {
    lorentz_dot(x, x).abs().sqrt()
}

/// The geodesic `c_ξ(t) = cosh(t) o + sinh(t) ξ` of `H^{m+1}`.
pub fn hyperbolic_point<S: Scalar>(xi: &UnitVector<S>, t: S) -> MinkowskiVec<S> {
    let mut c = Coords::new();
    c.push(t.cosh());
    let s = t.sinh();
    c.extend(xi.coords().iter().map(|&v| s * v));
    MinkowskiVec { coords: c }
}

/// The time-like geodesic `c'_η(t) = sinh(t) o + cosh(t) η` of `dS^{m+1}`.
pub fn desitter_point<S: Scalar>(eta: &UnitVector<S>, t: S) -> MinkowskiVec<S> {
    let mut c = Coords::new();
    c.push(t.sinh());
    let ch = t.cosh();
    c.extend(eta.coords().iter().map(|&v| ch * v));
    MinkowskiVec { coords: c }
}

/// Value of the transport cost; `Infinite` beyond spherical distance `π/2`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub enum CostValue<S> {
    Finite(S),
    Infinite,
}

impl<S: Scalar> CostValue<S> {
    pub fn is_finite(&self) -> bool {
        matches!(self, CostValue::Finite(_))
    }

    pub fn finite(self) -> Option<S> {
        match self {
            CostValue::Finite(v) => Some(v),
            CostValue::Infinite => None,
        }
    }

    /// The value as a float, `+∞` when infinite.
    pub fn value(self) -> S {
        self.finite().unwrap_or_else(S::infinity)
    }
}

/// `c(η,ξ) = -ln⟨η,ξ⟩` when `⟨η,ξ⟩ > DOT_FLOOR`, infinite otherwise.
pub fn cost<S: Scalar>(eta: &UnitVector<S>, xi: &UnitVector<S>) -> CostValue<S> {
    cost_from_dot(eta.dot(xi))
}

#[inline]
pub fn cost_from_dot<S: Scalar>(d: S) -> CostValue<S> {
    if d > S::lit(DOT_FLOOR) {
        // min(.,1) keeps roundoff from producing a tiny negative cost
        CostValue::Finite(-(d.min(S::one())).ln())
    } else {
        CostValue::Infinite
    }
}

/// The cost as a function of spherical distance: `Λ(d) = -ln cos d`.
pub fn cost_of_distance<S: Scalar>(d: S) -> CostValue<S> {
    cost_from_dot(d.cos())
}

/// Lorentz boost of translation length `length` along `direction`; maps `o`
/// to `c_direction(length)`.
#[derive(Debug, Clone)]
pub struct Boost<S> {
    direction: UnitVector<S>,
    length: S,
}

impl<S: Scalar> Boost<S> {
    pub fn new(direction: UnitVector<S>, length: S) -> Self {
        Self { direction, length }
    }

    pub fn inverse(&self) -> Self {
        Self {
            direction: self.direction.clone(),
            length: -self.length,
        }
    }

    pub fn apply(&self, x: &MinkowskiVec<S>) -> MinkowskiVec<S> {
        let (ch, sh) = (self.length.cosh(), self.length.sinh());
        let v = self.direction.coords();
        let x0 = x.time();
        let vx = dot(v, x.spatial());
        let mut c = Coords::new();
        c.push(ch * x0 + sh * vx);
        let k = (ch - S::one()) * vx + sh * x0;
        c.extend(x.spatial().iter().zip(v).map(|(&xs, &vs)| xs + k * vs));
        MinkowskiVec { coords: c }
    }
}

#[inline]
pub(crate) fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    let mut s = S::zero();
    for (&x, &y) in a.iter().zip(b) {
        s = s + x * y;
    }
    s
}

#[inline]
pub(crate) fn norm<S: Scalar>(a: &[S]) -> S {
    dot(a, a).sqrt()
}

/// Angle between two nonzero vectors, accurate for nearly parallel inputs.
pub(crate) fn angle_between<S: Scalar>(a: &[S], b: &[S]) -> S {
    let d = dot(a, b);
    let c = match a.len() {
        2 => (a[0] * b[1] - a[1] * b[0]).abs(),
        3 => norm(&cross3(a, b)),
        _ => {
            let na2 = dot(a, a);
            let nb2 = dot(b, b);
            (na2 * nb2 - d * d).max(S::zero()).sqrt()
        }
    };
    c.atan2(d)
}

#[inline]
pub(crate) fn cross3<S: Scalar>(a: &[S], b: &[S]) -> [S; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub(crate) fn det3<S: Scalar>(a: &[S], b: &[S], c: &[S]) -> S {
    dot(a, &cross3(b, c))
}

/// Some unit vector orthogonal to the unit vector `a` in `R^3`.
pub(crate) fn any_orthogonal3<S: Scalar>(a: &[S]) -> [S; 3] {
    let pick = if a[0].abs() < S::lit(0.6) {
        [S::one(), S::zero(), S::zero()]
    } else if a[1].abs() < S::lit(0.6) {
        [S::zero(), S::one(), S::zero()]
    } else {
        [S::zero(), S::zero(), S::one()]
    };
    let c = cross3(a, &pick);
    let n = norm(&c);
    [c[0] / n, c[1] / n, c[2] / n]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn unit(v: &[f64]) -> UnitVector<f64> {
        UnitVector::normalize(v).unwrap()
    }

    #[test]
    fn origin_is_on_hyperboloid() {
        let o = MinkowskiVec::<f64>::origin(2);
        assert_eq!(lorentz_dot(&o, &o), -1.0);
    }

    #[test]
    fn geodesic_at_zero_is_origin_and_at_one_has_cosh_time() {
        let xi = unit(&[0.3, -0.4, 0.5]);
        assert_eq!(hyperbolic_point(&xi, 0.0), MinkowskiVec::origin(2));
        let p = hyperbolic_point(&xi, 1.0);
        assert!((p.time() - 1.5430806348152437).abs() < 1e-15);
    }

    #[test]
    fn cost_reference_values() {
        let eta = UnitVector::<f64>::from_angle(0.0);
        assert_eq!(cost(&eta, &eta), CostValue::Finite(0.0));
        let xi = UnitVector::from_angle(PI / 3.0);
        let c = cost(&eta, &xi).finite().unwrap();
        assert!((c - 2f64.ln()).abs() < 1e-12);
        let perp = UnitVector::from_angle(PI / 2.0);
        assert_eq!(cost(&eta, &perp), CostValue::Infinite);
        assert_eq!(cost(&eta, &eta.neg()), CostValue::Infinite);
    }

    #[test]
    fn cost_is_convex_in_distance() {
        let lam = |r: f64| cost_of_distance(r).finite().unwrap();
        let n = 60;
        for i in 0..n {
            for j in 0..n {
                let r1 = (PI / 2.0 - 1e-3) * i as f64 / n as f64;
                let r2 = (PI / 2.0 - 1e-3) * j as f64 / n as f64;
                assert!(lam(r1) + lam(r2) >= 2.0 * lam(0.5 * (r1 + r2)) - 1e-13);
            }
        }
    }

    #[test]
    fn boost_moves_origin_along_geodesic_and_inverts() {
        let v = unit(&[1.0, 2.0, -0.5]);
        let b = Boost::new(v.clone(), 0.7);
        let img = b.apply(&MinkowskiVec::origin(2));
        let target = hyperbolic_point(&v, 0.7);
        for (a, t) in img.coords().iter().zip(target.coords()) {
            assert!((a - t).abs() < 1e-14);
        }
        let x = hyperbolic_point(&unit(&[0.2, 0.1, 0.9]), 1.3);
        let back = b.inverse().apply(&b.apply(&x));
        for (a, t) in back.coords().iter().zip(x.coords()) {
            assert!((a - t).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn hyperbolic_and_desitter_points_have_unit_lorentz_norm(
            a in 0.0..(2.0 * PI), b in 0.01..3.1f64, t in 0.0..5.0f64
        ) {
            let xi = UnitVector::from_spherical(b, a);
            let p = hyperbolic_point(&xi, t);
            prop_assert!((lorentz_dot(&p, &p) + 1.0).abs() < 1e-12 * p.time() * p.time());
            prop_assert!(p.time() > 0.0);
            let q = desitter_point(&xi, t - 2.5);
            prop_assert!((lorentz_dot(&q, &q) - 1.0).abs() < 1e-12 * q.coords()[1..].iter().map(|c| c * c).sum::<f64>().max(1.0));
        }

        #[test]
        fn klein_projection_is_tanh(a in 0.0..(2.0 * PI), t in 1e-3..10.0f64) {
            let xi = UnitVector::from_angle(a);
            let k = hyperbolic_point(&xi, t).klein();
            let rk = norm(&k);
            prop_assert!((rk - t.tanh()).abs() < 1e-15);
            let (kr, km) = hyperbolic_point(&xi, t).klein_radius();
            prop_assert!((artanh_with_complement(kr, km) - t).abs() < 1e-10);
            let (dir, back) = hyperbolic_point(&xi, t).hyperbolic_polar().unwrap();
            prop_assert!((back - t).abs() < 1e-10);
            prop_assert!(dir.distance(&xi) < 1e-12);
        }

        #[test]
        fn cost_is_symmetric(a in 0.0..(2.0 * PI), b in 0.0..(2.0 * PI), c in 0.0..PI, d in 0.0..PI) {
            let x = UnitVector::<f64>::from_spherical(c, a);
            let y = UnitVector::from_spherical(d, b);
            prop_assert_eq!(cost(&x, &y), cost(&y, &x));
        }
    }
}
