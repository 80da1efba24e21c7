//! Euclidean convex hulls of Klein-model points in dimension 2 and 3.
//!
//! Combinatorics are decided with adaptive-precision orientation predicates
//! from the `robust` crate; facet planes are then evaluated in `f64`.
//! A point is extreme only if it is a vertex of the hull in the strict sense
//! (points on edges or in facet interiors are not).

use std::collections::HashMap;

use robust::{orient2d, orient3d, Coord, Coord3D};

use crate::error::{Error, Result};

/// Two facet normals closer than this angle are merged into one facet.
pub const MERGE_ANGLE: f64 = 1e-9;

/// A hull facet: unit outward normal `n`, support `n·x` and its vertices.
/// In 3D the vertices are in counter-clockwise order seen from outside.
#[derive(Debug, Clone, PartialEq)]
pub struct Facet {
    pub normal: Vec<f64>,
    pub support: f64,
    pub vertices: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Hull {
    dim: usize,
    facets: Vec<Facet>,
    extreme: Vec<bool>,
    /// For each input point, incident facets in cyclic order. In 2D this is
    /// `[incoming edge, outgoing edge]` for a counter-clockwise traversal; in
    /// 3D the order is counter-clockwise seen from outside.
    vertex_facets: Vec<Vec<usize>>,
}

impl Hull {
    /// Convex hull of `points`, each of length 2 or 3.
    pub fn new(points: &[Vec<f64>]) -> Result<Self> {
        let d = points.first().map(|p| p.len()).unwrap_or(0);
        if points.iter().any(|p| p.len() != d) {
            return Err(Error::InvalidArgument("mixed point dimensions".into()));
        }
        match d {
            2 => hull2(points),
            3 => hull3(points),
            _ => Err(Error::InvalidArgument(format!(
                "hull of {d}-dimensional points is not supported"
            ))),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn is_extreme(&self, i: usize) -> bool {
        self.extreme[i]
    }

    pub fn extreme_flags(&self) -> &[bool] {
        &self.extreme
    }

    pub fn vertex_facets(&self, i: usize) -> &[usize] {
        &self.vertex_facets[i]
    }

    /// Smallest facet support, i.e. signed distance from the origin to the
    /// boundary; positive iff the origin is strictly interior.
    pub fn min_support(&self) -> f64 {
        self.facets
            .iter()
            .map(|f| f.support)
            .fold(f64::INFINITY, f64::min)
    }
}

fn c2(p: &[f64]) -> Coord<f64> {
    Coord { x: p[0], y: p[1] }
}

fn c3(p: &[f64]) -> Coord3D<f64> {
    Coord3D {
        x: p[0],
        y: p[1],
        z: p[2],
    }
}

fn hull2(points: &[Vec<f64>]) -> Result<Hull> {
    let n = points.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        points[a][0]
            .total_cmp(&points[b][0])
            .then(points[a][1].total_cmp(&points[b][1]))
    });
    order.dedup_by(|a, b| points[*a] == points[*b]);
    if order.len() < 3 {
        return Err(Error::DegenerateHull(
            "fewer than three distinct points".into(),
        ));
    }
    // Andrew's monotone chain; collinear points are dropped.
    let mut chain: Vec<usize> = Vec::with_capacity(2 * order.len());
    for pass in 0..2 {
        let start = chain.len();
        let iter: Box<dyn Iterator<Item = &usize>> = if pass == 0 {
            Box::new(order.iter())
        } else {
            Box::new(order.iter().rev())
        };
        for &i in iter {
            while chain.len() >= start + 2 {
                let a = chain[chain.len() - 2];
                let b = chain[chain.len() - 1];
                if orient2d(c2(&points[a]), c2(&points[b]), c2(&points[i])) <= 0.0 {
                    chain.pop();
                } else {
                    break;
                }
            }
            chain.push(i);
        }
        chain.pop();
    }
    if chain.len() < 3 {
        return Err(Error::DegenerateHull("all points are collinear".into()));
    }
    let mut extreme = vec![false; n];
    let mut vertex_facets = vec![Vec::new(); n];
    let mut facets = Vec::with_capacity(chain.len());
    let k = chain.len();
    for j in 0..k {
        let a = chain[j];
        let b = chain[(j + 1) % k];
        let (pa, pb) = (&points[a], &points[b]);
        let (dx, dy) = (pb[0] - pa[0], pb[1] - pa[1]);
        let len = dx.hypot(dy);
        let normal = vec![dy / len, -dx / len];
        let support = 0.5 * (normal[0] * (pa[0] + pb[0]) + normal[1] * (pa[1] + pb[1]));
        facets.push(Facet {
            normal,
            support,
            vertices: vec![a, b],
        });
    }
    for j in 0..k {
        let v = chain[j];
        extreme[v] = true;
        vertex_facets[v] = vec![(j + k - 1) % k, j];
    }
    Ok(Hull {
        dim: 2,
        facets,
        extreme,
        vertex_facets,
    })
}

struct Mesh<'a> {
    points: &'a [Vec<f64>],
    faces: Vec<Option<[usize; 3]>>,
    edges: HashMap<(usize, usize), usize>,
}

impl Mesh<'_> {
    fn add_face(&mut self, f: [usize; 3]) {
        let id = self.faces.len();
        self.faces.push(Some(f));
        for e in 0..3 {
            self.edges.insert((f[e], f[(e + 1) % 3]), id);
        }
    }

    fn remove_face(&mut self, id: usize) {
        if let Some(f) = self.faces[id].take() {
            for e in 0..3 {
                let key = (f[e], f[(e + 1) % 3]);
                if self.edges.get(&key) == Some(&id) {
                    self.edges.remove(&key);
                }
            }
        }
    }

    fn sees(&self, f: &[usize; 3], p: usize) -> bool {
        let pts = self.points;
        orient3d(c3(&pts[f[0]]), c3(&pts[f[1]]), c3(&pts[f[2]]), c3(&pts[p])) < 0.0
    }

    fn insert(&mut self, p: usize) {
        let visible: Vec<usize> = self
            .faces
            .iter()
            .enumerate()
            .filter_map(|(id, f)| f.filter(|f| self.sees(f, p)).map(|_| id))
            .collect();
        if visible.is_empty() {
            return;
        }
        let mut horizon = Vec::new();
        for &id in &visible {
            let f = self.faces[id].unwrap();
            for e in 0..3 {
                let (a, b) = (f[e], f[(e + 1) % 3]);
                let twin = self.edges.get(&(b, a)).copied();
                let twin_visible = twin.is_some_and(|t| visible.contains(&t));
                if !twin_visible {
                    horizon.push((a, b));
                }
            }
        }
        for &id in &visible {
            self.remove_face(id);
        }
        for (a, b) in horizon {
            self.add_face([a, b, p]);
        }
    }
}

fn sub3(a: &[f64], b: &[f64]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot3(a: &[f64], b: &[f64]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm3(a: [f64; 3]) -> f64 {
    dot3(&a, &a).sqrt()
}

fn initial_simplex(points: &[Vec<f64>]) -> Result<[usize; 4]> {
    let n = points.len();
    let i0 = 0;
    let i1 = (1..n)
        .max_by(|&a, &b| {
            norm3(sub3(&points[a], &points[i0])).total_cmp(&norm3(sub3(&points[b], &points[i0])))
        })
        .filter(|&i| points[i] != points[i0])
        .ok_or_else(|| Error::DegenerateHull("all points coincide".into()))?;
    let d01 = sub3(&points[i1], &points[i0]);
    let i2 = (0..n)
        .max_by(|&a, &b| {
            norm3(cross(d01, sub3(&points[a], &points[i0])))
                .total_cmp(&norm3(cross(d01, sub3(&points[b], &points[i0]))))
        })
        .unwrap();
    let line_o = |i: usize| orient2d_any(&points[i0], &points[i1], &points[i]);
    if !line_o(i2) {
        return Err(Error::DegenerateHull("all points are collinear".into()));
    }
    let o = |i: usize| {
        orient3d(
            c3(&points[i0]),
            c3(&points[i1]),
            c3(&points[i2]),
            c3(&points[i]),
        )
    };
    let nrm = cross(d01, sub3(&points[i2], &points[i0]));
    let i3 = (0..n)
        .max_by(|&a, &b| {
            dot3(&nrm, &sub3(&points[a], &points[i0]))
                .abs()
                .total_cmp(&dot3(&nrm, &sub3(&points[b], &points[i0])).abs())
        })
        .unwrap();
    let i3 = if o(i3) != 0.0 {
        i3
    } else {
        (0..n)
            .find(|&i| o(i) != 0.0)
            .ok_or_else(|| Error::DegenerateHull("all points are coplanar".into()))?
    };
    Ok([i0, i1, i2, i3])
}

/// Whether three 3D points are not collinear, decided exactly on the three
/// coordinate projections.
fn orient2d_any(a: &[f64], b: &[f64], c: &[f64]) -> bool {
    [(0, 1), (1, 2), (0, 2)].iter().any(|&(i, j)| {
        orient2d(
            Coord { x: a[i], y: a[j] },
            Coord { x: b[i], y: b[j] },
            Coord { x: c[i], y: c[j] },
        ) != 0.0
    })
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

fn hull3(points: &[Vec<f64>]) -> Result<Hull> {
    let n = points.len();
    if n < 4 {
        return Err(Error::DegenerateHull("fewer than four points".into()));
    }
    let [a, b, c, d] = initial_simplex(points)?;
    let mut mesh = Mesh {
        points,
        faces: Vec::new(),
        edges: HashMap::new(),
    };
    // orient so that d is on the inner side of abc
    let (b, c) = if orient3d(
        c3(&points[a]),
        c3(&points[b]),
        c3(&points[c]),
        c3(&points[d]),
    ) > 0.0
    {
        (b, c)
    } else {
        (c, b)
    };
    mesh.add_face([a, b, c]);
    mesh.add_face([a, d, b]);
    mesh.add_face([b, d, c]);
    mesh.add_face([c, d, a]);
    for p in 0..n {
        if p != a && p != b && p != c && p != d {
            mesh.insert(p);
        }
    }

    let tris: Vec<[usize; 3]> = mesh.faces.iter().flatten().copied().collect();
    let tri_id: HashMap<(usize, usize), usize> = tris
        .iter()
        .enumerate()
        .flat_map(|(t, f)| (0..3).map(move |e| ((f[e], f[(e + 1) % 3]), t)))
        .collect();
    let tri_normal: Vec<[f64; 3]> = tris
        .iter()
        .map(|f| {
            let nrm = cross(
                sub3(&points[f[1]], &points[f[0]]),
                sub3(&points[f[2]], &points[f[0]]),
            );
            let l = norm3(nrm);
            [nrm[0] / l, nrm[1] / l, nrm[2] / l]
        })
        .collect();

    // Merge adjacent triangles that are exactly coplanar or whose normals
    // differ by less than MERGE_ANGLE.
    let mut uf = UnionFind((0..tris.len()).collect());
    for (t, f) in tris.iter().enumerate() {
        for e in 0..3 {
            let (u, v) = (f[e], f[(e + 1) % 3]);
            let s = tri_id[&(v, u)];
            if s <= t {
                continue;
            }
            let g = tris[s];
            let opposite = g.iter().copied().find(|&x| x != u && x != v).unwrap();
            let coplanar = orient3d(
                c3(&points[f[0]]),
                c3(&points[f[1]]),
                c3(&points[f[2]]),
                c3(&points[opposite]),
            ) == 0.0;
            let angle = norm3(cross(tri_normal[t], tri_normal[s]));
            if coplanar || (angle < MERGE_ANGLE && dot3(&tri_normal[t], &tri_normal[s]) > 0.0) {
                uf.union(t, s);
            }
        }
    }
    let mut facet_of_root = HashMap::new();
    let mut tri_facet = vec![0; tris.len()];
    let mut members: Vec<Vec<usize>> = Vec::new();
    for t in 0..tris.len() {
        let r = uf.find(t);
        let id = *facet_of_root.entry(r).or_insert_with(|| {
            members.push(Vec::new());
            members.len() - 1
        });
        members[id].push(t);
        tri_facet[t] = id;
    }

    let facets: Vec<Facet> = members
        .iter()
        .map(|ts| {
            // plane of the largest-area triangle in the group
            let best = *ts
                .iter()
                .max_by(|&&x, &&y| {
                    tri_area(points, &tris[x]).total_cmp(&tri_area(points, &tris[y]))
                })
                .unwrap();
            let nrm = tri_normal[best];
            let f = tris[best];
            let support =
                (dot3(&nrm, &points[f[0]]) + dot3(&nrm, &points[f[1]]) + dot3(&nrm, &points[f[2]]))
                    / 3.0;
            Facet {
                normal: nrm.to_vec(),
                support,
                vertices: boundary_loop(ts, &tris),
            }
        })
        .collect();

    // Walk the triangles around each vertex counter-clockwise: after [v,b,c]
    // comes the triangle holding the directed edge (v,c).
    let mut start_tri = vec![usize::MAX; n];
    for (t, f) in tris.iter().enumerate() {
        for &v in f {
            if start_tri[v] == usize::MAX {
                start_tri[v] = t;
            }
        }
    }
    let mut extreme = vec![false; n];
    let mut vertex_facets = vec![Vec::new(); n];
    for v in 0..n {
        if start_tri[v] == usize::MAX {
            continue;
        }
        let mut ring = Vec::new();
        let mut t = start_tri[v];
        loop {
            ring.push(tri_facet[t]);
            let f = tris[t];
            let pos = f.iter().position(|&x| x == v).unwrap();
            let next_vertex = f[(pos + 2) % 3];
            t = tri_id[&(v, next_vertex)];
            if t == start_tri[v] {
                break;
            }
        }
        ring.dedup();
        while ring.len() > 1 && ring.first() == ring.last() {
            ring.pop();
        }
        if ring.len() >= 3 {
            extreme[v] = true;
            // rotate to a canonical start for determinism
            let m = (0..ring.len()).min_by_key(|&i| ring[i]).unwrap();
            ring.rotate_left(m);
            vertex_facets[v] = ring;
        }
    }
    Ok(Hull {
        dim: 3,
        facets,
        extreme,
        vertex_facets,
    })
}

fn tri_area(points: &[Vec<f64>], f: &[usize; 3]) -> f64 {
    norm3(cross(
        sub3(&points[f[1]], &points[f[0]]),
        sub3(&points[f[2]], &points[f[0]]),
    ))
}

/// Ordered boundary vertices of a merged group of triangles.
fn boundary_loop(ts: &[usize], tris: &[[usize; 3]]) -> Vec<usize> {
    let mut directed: HashMap<(usize, usize), ()> = HashMap::new();
    for &t in ts {
        let f = tris[t];
        for e in 0..3 {
            directed.insert((f[e], f[(e + 1) % 3]), ());
        }
    }
    let mut next: HashMap<usize, usize> = HashMap::new();
    for &(a, b) in directed.keys() {
        if !directed.contains_key(&(b, a)) {
            next.insert(a, b);
        }
    }
    let Some(&start) = next.keys().min() else {
        return Vec::new();
    };
    let mut out = vec![start];
    let mut cur = next[&start];
    while cur != start && out.len() <= next.len() {
        out.push(cur);
        cur = next[&cur];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Vec<Vec<f64>> {
        vec![
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![-1.0, 0.0],
            vec![0.0, -1.0],
        ]
    }

    #[test]
    fn square_hull_has_four_edges_at_distance_sqrt_half() {
        let h = Hull::new(&square()).unwrap();
        assert_eq!(h.facets().len(), 4);
        for f in h.facets() {
            assert!((f.support - 0.5f64.sqrt()).abs() < 1e-15);
        }
        assert!(h.extreme_flags().iter().all(|&e| e));
    }

    #[test]
    fn point_on_edge_is_not_extreme() {
        let mut pts = square();
        pts.push(vec![0.5, 0.5]);
        pts.push(vec![0.1, 0.0]);
        let h = Hull::new(&pts).unwrap();
        assert!(!h.is_extreme(4));
        assert!(!h.is_extreme(5));
        assert_eq!(h.facets().len(), 4);
    }

    #[test]
    fn cube_merges_triangles_into_squares() {
        let mut pts = Vec::new();
        for i in 0..8 {
            pts.push(vec![
                if i & 1 == 0 { -1.0 } else { 1.0 },
                if i & 2 == 0 { -1.0 } else { 1.0 },
                if i & 4 == 0 { -1.0 } else { 1.0 },
            ]);
        }
        pts.push(vec![0.0, 0.0, 1.0]);
        pts.push(vec![0.2, -0.3, 0.1]);
        let h = Hull::new(&pts).unwrap();
        assert_eq!(h.facets().len(), 6);
        for f in h.facets() {
            assert!((f.support - 1.0).abs() < 1e-15);
        }
        for v in 0..8 {
            assert!(h.is_extreme(v));
            assert_eq!(h.vertex_facets(v).len(), 3);
        }
        assert!(!h.is_extreme(8));
        assert!(!h.is_extreme(9));
    }

    #[test]
    fn vertex_facets_are_counter_clockwise_from_outside() {
        let pts = vec![
            vec![1.0, 0.0, 0.0],
            vec![-1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, -1.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![0.0, 0.0, -1.0],
        ];
        let h = Hull::new(&pts).unwrap();
        assert_eq!(h.facets().len(), 8);
        for v in 0..6 {
            let ring = h.vertex_facets(v);
            assert_eq!(ring.len(), 4);
            for k in 0..4 {
                let a = &h.facets()[ring[k]].normal;
                let b = &h.facets()[ring[(k + 1) % 4]].normal;
                let c = cross([a[0], a[1], a[2]], [b[0], b[1], b[2]]);
                assert!(dot3(&c, &pts[v]) > 0.0);
            }
        }
    }

    #[test]
    fn coplanar_input_is_rejected() {
        let pts = vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![-1.0, 0.0, 0.0],
            vec![0.0, -1.0, 0.0],
        ];
        assert!(matches!(Hull::new(&pts), Err(Error::DegenerateHull(_))));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn points3() -> impl Strategy<Value = Vec<Vec<f64>>> {
            proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64), 5..40)
                .prop_map(|v| v.into_iter().map(|(x, y, z)| vec![x, y, z]).collect())
        }

        proptest! {
            #[test]
            fn hull_contains_all_points_and_vertices_lie_on_facets(pts in points3()) {
                let h = Hull::new(&pts).unwrap();
                for f in h.facets() {
                    for p in &pts {
                        prop_assert!(dot3(&f.normal, p) <= f.support + 1e-12);
                    }
                    for &v in &f.vertices {
                        prop_assert!((dot3(&f.normal, &pts[v]) - f.support).abs() < 1e-12);
                    }
                }
            }

            #[test]
            fn extreme_points_are_outside_the_hull_of_the_rest(pts in points3()) {
                let h = Hull::new(&pts).unwrap();
                for i in 0..pts.len() {
                    let rest: Vec<Vec<f64>> = pts.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, p)| p.clone()).collect();
                    let Ok(hr) = Hull::new(&rest) else { continue };
                    let outside = hr.facets().iter().any(|f| dot3(&f.normal, &pts[i]) > f.support + 1e-12);
                    prop_assert_eq!(outside, h.is_extreme(i));
                }
            }
        }
    }
}
