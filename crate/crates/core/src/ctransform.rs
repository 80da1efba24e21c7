//! Discrete potentials and their c-transforms for the cost
//! `c(η, ξ) = −ln⟨η, ξ⟩`.
//!
//! For `ψ` supported on `{ξ_i}` the transform is
//! `φ(η) = min_i (c(η, ξ_i) − ψ_i) = −ln max_i e^{ψ_i}⟨η, ξ_i⟩`, so the
//! weighted Voronoi cells of `ψ` are the normal cones of the Klein points
//! `p_i = e^{ψ_i} ξ_i` and `φ = −ln tanh h` for their hull.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::cells::{CellComplex, TIE_EPS};
use crate::error::{check_dim, Error, Result};
use crate::geometry::{angle_between, cost_from_dot, dot, Coords, UnitVector};
use crate::quadrature::QuadratureGrid;
use crate::scalar::Scalar;

/// Potentials are kept at or below `−PSI_FLOOR`.
pub const PSI_FLOOR: f64 = 1e-10;

/// Margin below `π/2` for the density check of the support.
pub const DENSITY_MARGIN: f64 = 1e-6;

/// A potential `ψ` on a finite subset of the sphere.
#[derive(Debug, Clone)]
pub struct PotentialVector<S> {
    support: Vec<UnitVector<S>>,
    values: Vec<S>,
    clamped: Vec<usize>,
}

impl<S: Scalar> PotentialVector<S> {
    /// Values in `[−PSI_FLOOR, 0]` are clamped to `−PSI_FLOOR` with a warning;
    /// positive or non-finite values are rejected.
    pub fn new(support: Vec<UnitVector<S>>, values: Vec<S>) -> Result<Self> {
        if support.is_empty() || support.len() != values.len() {
            return Err(Error::InvalidArgument(format!(
                "{} support points but {} values",
                support.len(),
                values.len()
            )));
        }
        let m = support[0].dim();
        check_dim(m)?;
        if support.iter().any(|s| s.dim() != m) {
            return Err(Error::InvalidArgument(
                "support points of mixed dimension".into(),
            ));
        }
        let floor = -S::lit(PSI_FLOOR);
        let mut clamped = Vec::new();
        let mut vals = Vec::with_capacity(values.len());
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() || v > S::zero() {
                return Err(Error::Domain {
                    function: "psi",
                    value: v.to_f64_lossy(),
                });
            }
            if v > floor {
                log::warn!(
                    "potential {i} = {:e} clamped to -{PSI_FLOOR:e}",
                    v.to_f64_lossy()
                );
                clamped.push(i);
                vals.push(floor);
            } else {
                vals.push(v);
            }
        }
        Ok(Self {
            support,
            values: vals,
            clamped,
        })
    }

    pub fn dim(&self) -> usize {
        self.support[0].dim()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn support(&self) -> &[UnitVector<S>] {
        &self.support
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    /// Indices clamped at construction.
    pub fn clamped(&self) -> &[usize] {
        &self.clamped
    }

    /// Same support, new values.
    pub fn with_values(&self, values: Vec<S>) -> Result<Self> {
        Self::new(self.support.clone(), values)
    }

    /// Klein points `e^{ψ_i} ξ_i`.
    pub fn klein_points(&self) -> Vec<Coords<S>> {
        self.support
            .iter()
            .zip(&self.values)
            .map(|(xi, &v)| {
                let k = v.exp();
                xi.coords().iter().map(|&c| k * c).collect()
            })
            .collect()
    }

    /// The weighted Voronoi cells of `ψ`.
    pub fn cells(&self) -> Result<CellComplex<S>> {
        CellComplex::new(self.klein_points())
    }

    /// Checks that every grid node lies within `π/2 − DENSITY_MARGIN` of
    /// some support point.
    pub fn check_density(&self, grid: &QuadratureGrid<S>) -> Result<()> {
        let lim = S::lit(std::f64::consts::FRAC_PI_2 - DENSITY_MARGIN);
        let bad = grid
            .nodes()
            .par_iter()
            .find_first(|eta| self.support.iter().all(|xi| eta.distance(xi) > lim));
        match bad {
            Some(eta) => Err(Error::UncoveredDirection {
                direction: eta.to_f64(),
            }),
            None => Ok(()),
        }
    }
}

/// `φ(η) = min_i (c(η, ξ_i) − ψ_i)` and the indices attaining it within
/// [`TIE_EPS`] (absolute in `φ`, i.e. relative in `e^{−φ}`).
pub fn c_transform<S: Scalar>(
    psi: &PotentialVector<S>,
    eta: &UnitVector<S>,
) -> Result<(S, SmallVec<[usize; 4]>)> {
    if eta.dim() != psi.dim() {
        return Err(Error::InvalidArgument(
            "direction and potential differ in dimension".into(),
        ));
    }
    let mut best = S::infinity();
    let mut costs: SmallVec<[Option<S>; 16]> = SmallVec::with_capacity(psi.len());
    let mut vals: SmallVec<[S; 16]> = SmallVec::with_capacity(psi.len());
    for (xi, &v) in psi.support.iter().zip(&psi.values) {
        let c = cost_from_dot(eta.dot(xi)).finite();
        let t = c.map_or(S::infinity(), |c| c - v);
        best = best.min(t);
        costs.push(c);
        vals.push(t);
    }
    if !best.is_finite() {
        return Err(Error::UncoveredDirection {
            direction: eta.to_f64(),
        });
    }
    // the rounded minimum can still give fl(φ + ψ_i) one ulp above c_i;
    // step down until admissibility holds exactly in both forms
    while costs
        .iter()
        .zip(&psi.values)
        .any(|(c, &v)| c.is_some_and(|c| best + v > c))
    {
        best = best - best.abs().max(S::min_positive_value()) * S::epsilon();
    }
    let cut = best + S::lit(TIE_EPS);
    let idx = vals
        .iter()
        .enumerate()
        .filter(|(_, &t)| t <= cut)
        .map(|(i, _)| i)
        .collect();
    Ok((best, idx))
}

/// `φ` at every grid node.
pub fn c_transform_on_grid<S: Scalar>(
    psi: &PotentialVector<S>,
    grid: &QuadratureGrid<S>,
) -> Result<Vec<S>> {
    grid.nodes()
        .par_iter()
        .map(|eta| c_transform(psi, eta).map(|r| r.0))
        .collect()
}

/// Directions at which the conjugate quantities are evaluated: grid nodes,
/// cell corners (facet normals of the Klein hull) and the support itself.
/// Corners make the extrema of `φ` and of `ψ^{cc}` exact for a polytope.
fn probe_directions<S: Scalar>(
    psi: &PotentialVector<S>,
    grid: &QuadratureGrid<S>,
) -> Result<Vec<UnitVector<S>>> {
    let cells = psi.cells()?;
    let mut out: Vec<UnitVector<S>> = grid.nodes().to_vec();
    for c in cells.corners() {
        out.push(UnitVector::normalize(c)?);
    }
    out.extend(psi.support.iter().cloned());
    Ok(out)
}

/// Grid c-concavification `ψ″_i = min_η (c(η, ξ_i) − φ(η))`, never below `ψ`.
pub fn double_convexify<S: Scalar>(
    psi: &PotentialVector<S>,
    grid: &QuadratureGrid<S>,
) -> Result<PotentialVector<S>> {
    let probes = probe_directions(psi, grid)?;
    let phis: Vec<S> = probes
        .par_iter()
        .map(|eta| c_transform(psi, eta).map(|r| r.0))
        .collect::<Result<_>>()?;
    let values: Vec<S> = psi
        .support
        .par_iter()
        .zip(psi.values.par_iter())
        .map(|(xi, &v)| {
            let mut lo = S::infinity();
            for (eta, &phi) in probes.iter().zip(&phis) {
                if let Some(c) = cost_from_dot(eta.dot(xi)).finite() {
                    lo = lo.min(c - phi);
                }
            }
            // ψ ≤ ψ^{cc} holds exactly; rounding must not undo it
            lo.max(v)
        })
        .collect();
    Ok(PotentialVector {
        support: psi.support.clone(),
        values,
        clamped: psi.clamped.clone(),
    })
}

/// Numerical checks of the conjugacy identities for a (nearly) c-concave `ψ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConjugacyDiagnostics {
    /// `max φ + min ψ^{cc}`, zero for a conjugate pair.
    pub max_phi_plus_min_psi: f64,
    /// `min φ + max ψ^{cc}`, zero for a conjugate pair.
    pub min_phi_plus_max_psi: f64,
    /// Largest difference quotient of `φ` over grid edges.
    pub lipschitz_estimate: f64,
    /// `tan` of the largest distance from a node to its argmin support point
    /// plus one grid spacing, capped below `π/2`: bounds the slope of `φ`.
    pub lipschitz_bound: f64,
}

/// The extrema of `ψ` are taken over its conjugate extension `ψ^{cc}` to the
/// whole sphere (sampled at the probe directions), which is what the
/// identities concern: a discrete `ψ` alone never sees the minimum of the
/// radial function between support points.
pub fn conjugacy_diagnostics<S: Scalar>(
    psi: &PotentialVector<S>,
    grid: &QuadratureGrid<S>,
) -> Result<ConjugacyDiagnostics> {
    let cells = psi.cells()?;
    let probes = probe_directions(psi, grid)?;
    let phis: Vec<S> = probes
        .par_iter()
        .map(|eta| c_transform(psi, eta).map(|r| r.0))
        .collect::<Result<_>>()?;
    let max_phi = phis.iter().copied().fold(S::neg_infinity(), S::max);
    let min_phi = phis.iter().copied().fold(S::infinity(), S::min);
    let ext: Vec<S> = probes
        .par_iter()
        .map(|xi| extended_psi(&cells, xi.coords()))
        .collect();
    let max_psi = ext.iter().copied().fold(S::neg_infinity(), S::max);
    let min_psi = ext.iter().copied().fold(S::infinity(), S::min);

    let n = grid.len();
    let nodes = grid.nodes();
    let reach = (0..n)
        .into_par_iter()
        .map(|k| -> Result<S> {
            let (_, idx) = c_transform(psi, &nodes[k])?;
            Ok(idx
                .iter()
                .map(|&i| nodes[k].distance(&psi.support[i]))
                .fold(S::zero(), S::max))
        })
        .collect::<Result<Vec<S>>>()?
        .into_iter()
        .fold(S::zero(), S::max);
    let lip = grid
        .edges()
        .par_iter()
        .map(|&(a, b)| {
            let (a, b) = (a as usize, b as usize);
            let d = angle_between(nodes[a].coords(), nodes[b].coords());
            ((phis[a] - phis[b]).abs() / d).to_f64_lossy()
        })
        .reduce(|| 0.0, f64::max);
    let cap = std::f64::consts::FRAC_PI_2 - DENSITY_MARGIN;
    let bound = (reach.to_f64_lossy() + grid.spacing().to_f64_lossy())
        .min(cap)
        .tan();
    Ok(ConjugacyDiagnostics {
        max_phi_plus_min_psi: (max_phi + min_psi).to_f64_lossy(),
        min_phi_plus_max_psi: (min_phi + max_psi).to_f64_lossy(),
        lipschitz_estimate: lip,
        lipschitz_bound: bound,
    })
}

/// `ψ^{cc}(ξ) = ln ρ(ξ)`, the log Klein radial function of the hull, as
/// `min_k ln(s_k / ⟨n_k, ξ⟩)` over facets with `⟨n_k, ξ⟩ > 0`.
fn extended_psi<S: Scalar>(cells: &CellComplex<S>, xi: &[S]) -> S {
    cells
        .corners()
        .iter()
        .zip(cells.hull().facets())
        .filter_map(|(n, f)| {
            let d = dot(n, xi);
            (d > S::zero()).then(|| (S::lit(f.support) / d).ln())
        })
        .fold(S::infinity(), S::min)
}

/// Largest `|ψ′_i − ψ_i|`.
pub fn max_change<S: Scalar>(a: &PotentialVector<S>, b: &PotentialVector<S>) -> S {
    a.values
        .iter()
        .zip(&b.values)
        .map(|(&x, &y)| (x - y).abs())
        .fold(S::zero(), S::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::cost;
    use crate::quadrature::build_grid;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn ngon(n: usize, psi: f64) -> PotentialVector<f64> {
        let s = (0..n)
            .map(|k| UnitVector::from_angle(2.0 * PI * k as f64 / n as f64))
            .collect();
        PotentialVector::new(s, vec![psi; n]).unwrap()
    }

    #[test]
    fn single_point_transform() {
        let xi = UnitVector::from_angle(0.3);
        let p = PotentialVector::new(vec![xi.clone()], vec![-1.0]).unwrap();
        let (phi, idx): (f64, _) = c_transform(&p, &xi).unwrap();
        assert!((phi - 1.0).abs() < 1e-15);
        assert_eq!(idx.as_slice(), &[0]);
        let far = UnitVector::from_angle(0.3 + PI);
        assert!(matches!(
            c_transform(&p, &far),
            Err(Error::UncoveredDirection { .. })
        ));
    }

    #[test]
    fn symmetric_transform_uses_nearest_point() {
        let p = ngon(5, -0.7);
        for t in [0.1, 1.0, 2.5, 4.0] {
            let eta = UnitVector::from_angle(t);
            let (phi, idx) = c_transform(&p, &eta).unwrap();
            let near = p
                .support()
                .iter()
                .map(|x| eta.distance(x))
                .fold(f64::INFINITY, f64::min);
            assert!((phi - (-(near.cos()).ln() + 0.7)).abs() < 1e-13);
            assert_eq!(idx.len(), 1);
        }
    }

    #[test]
    fn clamp_and_reject() {
        let s = vec![UnitVector::<f64>::from_angle(0.0)];
        let p = PotentialVector::new(s.clone(), vec![-1e-12]).unwrap();
        assert_eq!(p.values()[0], -PSI_FLOOR);
        assert_eq!(p.clamped(), &[0]);
        assert!(PotentialVector::new(s.clone(), vec![0.5]).is_err());
        assert!(PotentialVector::new(s, vec![-1.0, -1.0]).is_err());
    }

    #[test]
    fn density_check() {
        let g = build_grid::<f64>(1, 2).unwrap();
        assert!(ngon(4, -1.0).check_density(&g).is_ok());
        assert!(ngon(3, -1.0).check_density(&g).is_ok());
        assert!(matches!(
            ngon(2, -1.0).check_density(&g),
            Err(Error::UncoveredDirection { .. })
        ));
    }

    #[test]
    fn min_phi_is_minus_max_psi() {
        let s: Vec<_> = (0..4)
            .map(|k| UnitVector::from_angle(1.5 * k as f64 + 0.2))
            .collect();
        let p = PotentialVector::new(s, vec![-0.4, -0.9, -0.6, -1.3]).unwrap();
        let g = build_grid::<f64>(1, 4).unwrap();
        let d = conjugacy_diagnostics(&p, &g).unwrap();
        assert!(d.min_phi_plus_max_psi.abs() < 1e-15);
    }

    #[test]
    fn pushed_down_value_is_raised() {
        let g = build_grid::<f64>(2, 3).unwrap();
        let mut s: Vec<_> = (0..3)
            .flat_map(|k| [UnitVector::basis(2, k), UnitVector::basis(2, k).neg()])
            .collect();
        for c in 0..8 {
            let sg = |b: usize| if c >> b & 1 == 1 { -1.0 } else { 1.0 };
            s.push(UnitVector::normalize(&[sg(0), sg(1), sg(2)]).unwrap());
        }
        let p = PotentialVector::new(s.clone(), vec![-0.5; 14]).unwrap();
        let base = double_convexify(&p, &g).unwrap();
        let mut v = base.values().to_vec();
        v[6] -= 10.0;
        let q = double_convexify(&p.with_values(v.clone()).unwrap(), &g).unwrap();
        // the cube corner returns to the octahedron face x + y + z = e^{-1/2}
        let want = ((-0.5f64).exp() / 3f64.sqrt()).ln();
        assert!(q.values()[6] > v[6] + 5.0);
        assert!((q.values()[6] - want).abs() < 1e-12);
        for i in 0..6 {
            assert!((q.values()[i] + 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn conjugate_potential_is_fixed() {
        let g = build_grid::<f64>(1, 3).unwrap();
        let p = ngon(6, -0.3);
        let q = double_convexify(&p, &g).unwrap();
        assert!(max_change(&p, &q) < 1e-14);
        let d = conjugacy_diagnostics(&p, &g).unwrap();
        assert!(d.max_phi_plus_min_psi.abs() < 1e-14);
        assert!(d.lipschitz_estimate <= d.lipschitz_bound);
    }

    fn arb_potential(m: usize) -> impl Strategy<Value = PotentialVector<f64>> {
        let n = if m == 1 { 3..9usize } else { 4..12usize };
        n.prop_flat_map(move |n| {
            (
                prop::collection::vec(prop::collection::vec(-1.0f64..1.0, m + 1), n),
                prop::collection::vec(-3.0f64..-0.01, n),
            )
        })
        .prop_filter_map("bad support", |(pts, vals)| {
            let s: Vec<_> = pts
                .iter()
                .map(|p| UnitVector::normalize(p).ok())
                .collect::<Option<_>>()?;
            let p = PotentialVector::new(s, vals).ok()?;
            p.cells().ok()?;
            Some(p)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn convexify_never_lowers(p in arb_potential(2)) {
            let g = build_grid::<f64>(2, 2).unwrap();
            let q = double_convexify(&p, &g).unwrap();
            for (a, b) in p.values().iter().zip(q.values()) {
                prop_assert!(b >= a);
            }
            // a second pass moves nothing: the corners make it exact
            let r = double_convexify(&q, &g).unwrap();
            prop_assert!(max_change(&q, &r) < 1e-12);
        }

        #[test]
        fn admissible_pairs(p in arb_potential(1), t in 0.0f64..(2.0 * PI)) {
            let eta = UnitVector::from_angle(t);
            let (phi, idx) = c_transform(&p, &eta).unwrap();
            prop_assert!(phi > 0.0);
            for (i, xi) in p.support().iter().enumerate() {
                if let Some(c) = cost(&eta, xi).finite() {
                    prop_assert!(phi <= c - p.values()[i]);
                    prop_assert!(phi + p.values()[i] <= c);
                    if idx.contains(&i) {
                        prop_assert!((phi + p.values()[i] - c).abs() < 1e-8 * c.abs().max(1.0));
                    }
                }
            }
        }

        #[test]
        fn shifting_down_raises_phi_by_at_most_delta(
            p in arb_potential(1), k in 0usize..3, delta in 0.01f64..1.0,
        ) {
            let g = build_grid::<f64>(1, 2).unwrap();
            let mut v = p.values().to_vec();
            v[k] -= delta;
            let q = p.with_values(v).unwrap();
            let a = c_transform_on_grid(&p, &g).unwrap();
            let b = c_transform_on_grid(&q, &g).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!(*y >= *x - 1e-15);
                prop_assert!(*y <= *x + delta + 1e-12);
            }
        }

        #[test]
        fn conjugate_extrema(p in arb_potential(2)) {
            let g = build_grid::<f64>(2, 2).unwrap();
            let q = double_convexify(&p, &g).unwrap();
            let d = conjugacy_diagnostics(&q, &g).unwrap();
            prop_assert!(d.max_phi_plus_min_psi.abs() < 1e-12, "{d:?}");
            prop_assert!(d.min_phi_plus_max_psi.abs() < 1e-12, "{d:?}");
            prop_assert!(d.lipschitz_estimate.is_finite());
            prop_assert!(d.lipschitz_estimate <= d.lipschitz_bound * (1.0 + 1e-9));
        }
    }
}
