//! JSON schemas for measures, bodies and reports, plus SVG (m = 1) and OBJ
//! (m = 2) emitters.
//!
//! Schemas are strict: the dimension is explicit and unknown fields are
//! rejected. Floats are written in shortest round-trip form, so reading back
//! a written file reproduces every value bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::convex::HyperbolicPolytope;
use crate::ctransform::{conjugacy_diagnostics, ConjugacyDiagnostics};
use crate::error::{Error, Result};
use crate::geometry::UnitVector;
use crate::measures::{ConditionReport, DiscreteMeasure};
use crate::quadrature::build_grid;
use crate::solver::{SolveReport, SolverConfig};

/// Tolerance on `|ξ| = 1` for directions read from files.
pub const UNIT_READ_TOL: f64 = 1e-6;

/// Failures of file handling, kept apart from the numerical errors.
#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Invalid(#[from] Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureFile {
    pub dim: usize,
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodyFile {
    pub dim: usize,
    pub directions: Vec<Vec<f64>>,
    pub radii: Vec<f64>,
}

fn directions(dim: usize, raw: &[Vec<f64>]) -> Result<Vec<UnitVector<f64>>> {
    raw.iter()
        .enumerate()
        .map(|(i, p)| {
            if p.len() != dim + 1 {
                return Err(Error::InvalidArgument(format!(
                    "entry {i} has {} coordinates, expected {}",
                    p.len(),
                    dim + 1
                )));
            }
            UnitVector::from_nearly_unit(p, UNIT_READ_TOL)
        })
        .collect()
}

impl MeasureFile {
    pub fn from_measure(mu: &DiscreteMeasure<f64>) -> Self {
        Self {
            dim: mu.dim(),
            points: mu.points().iter().map(|p| p.to_f64()).collect(),
            weights: mu.weights().to_vec(),
        }
    }

    pub fn to_measure(&self) -> Result<DiscreteMeasure<f64>> {
        crate::error::check_dim(self.dim)?;
        DiscreteMeasure::new(
            self.dim,
            directions(self.dim, &self.points)?,
            self.weights.clone(),
        )
    }
}

impl BodyFile {
    pub fn from_body(body: &HyperbolicPolytope<f64>) -> Self {
        Self {
            dim: body.dim(),
            directions: body.directions().iter().map(|p| p.to_f64()).collect(),
            radii: body.radii().to_vec(),
        }
    }

    pub fn to_body(&self) -> Result<HyperbolicPolytope<f64>> {
        crate::error::check_dim(self.dim)?;
        HyperbolicPolytope::from_vertices(
            self.dim,
            directions(self.dim, &self.directions)?,
            self.radii.clone(),
        )
    }
}

/// Both curvature measures of a body and how well they agree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForwardReport {
    pub dim: usize,
    pub grid_level: u32,
    pub directions: Vec<Vec<f64>>,
    pub integral: Vec<f64>,
    pub angles: Vec<f64>,
    pub total_integral: f64,
    pub total_angles: f64,
    pub max_abs_diff: f64,
    pub max_rel_diff: f64,
}

impl ForwardReport {
    /// Evaluates both curvature measures of `body` on a grid of `level`.
    pub fn compute(body: &HyperbolicPolytope<f64>, level: u32) -> Result<Self> {
        let grid = build_grid::<f64>(body.dim(), level)?;
        let integral = body.curvature_measure_integral(&grid)?.weights().to_vec();
        let angles = body.curvature_measure_angles()?.weights().to_vec();
        let mut max_abs_diff = 0.0f64;
        let mut max_rel_diff = 0.0f64;
        for (a, b) in integral.iter().zip(&angles) {
            let d = (a - b).abs();
            max_abs_diff = max_abs_diff.max(d);
            max_rel_diff = max_rel_diff.max(d / b.abs());
        }
        Ok(Self {
            dim: body.dim(),
            grid_level: level,
            directions: body.directions().iter().map(|p| p.to_f64()).collect(),
            total_integral: integral.iter().sum(),
            total_angles: angles.iter().sum(),
            integral,
            angles,
            max_abs_diff,
            max_rel_diff,
        })
    }
}

/// The JSON form of a [`SolveReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveReportFile {
    pub dim: usize,
    pub converged: bool,
    pub iterations: usize,
    pub run: usize,
    pub directions: Vec<Vec<f64>>,
    pub psi: Vec<f64>,
    /// Recovered radii, absent when the potential gives no polytope.
    pub radii: Option<Vec<f64>>,
    pub body_error: Option<String>,
    pub k_history: Vec<f64>,
    pub grad_history: Vec<f64>,
    pub gradient: Vec<f64>,
    pub el_residuals: Vec<f64>,
    pub tol_grad: f64,
    pub clamped: Vec<usize>,
    pub conditions: Option<ConditionReport>,
    pub conjugacy: Option<ConjugacyDiagnostics>,
    pub config: SolverConfig,
    pub wall_time: f64,
}

impl SolveReportFile {
    /// Also evaluates the conjugacy diagnostics of the final potential.
    pub fn from_report(r: &SolveReport<f64>) -> Self {
        let conjugacy = build_grid::<f64>(r.psi.dim(), r.config.grid_level)
            .and_then(|g| conjugacy_diagnostics(&r.psi, &g))
            .ok();
        Self {
            dim: r.psi.dim(),
            converged: r.converged,
            iterations: r.iterations,
            run: r.run,
            directions: r.psi.support().iter().map(|p| p.to_f64()).collect(),
            psi: r.psi.values().to_vec(),
            radii: r.body.as_ref().map(|b| b.radii().to_vec()),
            body_error: r.body_error.clone(),
            k_history: r.k_history.clone(),
            grad_history: r.grad_history.clone(),
            gradient: r.gradient.clone(),
            el_residuals: r.el_residuals.clone(),
            tol_grad: r.tol_grad,
            clamped: r.clamped.clone(),
            conditions: r.conditions.clone(),
            conjugacy,
            config: r.config.clone(),
            wall_time: r.wall_time,
        }
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    let text = fs::read_to_string(path).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| IoError::Json {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let text = serde_json::to_string_pretty(value).map_err(|source| IoError::Json {
        path: path.display().to_string(),
        source,
    })?;
    write_text(path, &(text + "\n"))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    fs::write(path, text).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_measure(path: &Path) -> Result<DiscreteMeasure<f64>, IoError> {
    Ok(read_json::<MeasureFile>(path)?.to_measure()?)
}

pub fn read_body(path: &Path) -> Result<HyperbolicPolytope<f64>, IoError> {
    Ok(read_json::<BodyFile>(path)?.to_body()?)
}

/// The Klein disk with the unit circle, the polygon, its vertex directions
/// and the closed curve `η ↦ tanh h(η) η` of the polar support function.
pub fn svg_m1(body: &HyperbolicPolytope<f64>) -> Result<String> {
    if body.dim() != 1 {
        return Err(Error::UnsupportedDimension(body.dim()));
    }
    let size = 400.0;
    let c = size / 2.0;
    let s = 0.45 * size;
    let px = |x: f64, y: f64| (c + s * x, c - s * y);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#
    );
    let _ = writeln!(
        out,
        r##"<circle cx="{c}" cy="{c}" r="{s}" fill="none" stroke="#888" stroke-width="1"/>"##
    );
    let mut ring = Vec::new();
    for k in 0..=360 {
        let eta = UnitVector::from_angle(2.0 * std::f64::consts::PI * k as f64 / 360.0);
        let t = body.support_tanh(&eta);
        let (x, y) = px(t * eta.coords()[0], t * eta.coords()[1]);
        ring.push(format!("{x:.3},{y:.3}"));
    }
    let _ = writeln!(
        out,
        r##"<polyline points="{}" fill="none" stroke="#2a7" stroke-dasharray="4 3"/>"##,
        ring.join(" ")
    );
    let poly: Vec<String> = body
        .klein_points()
        .iter()
        .map(|k| {
            let (x, y) = px(k[0], k[1]);
            format!("{x:.3},{y:.3}")
        })
        .collect();
    let _ = writeln!(
        out,
        r##"<polygon points="{}" fill="#cde" stroke="#135" stroke-width="1.5"/>"##,
        poly.join(" ")
    );
    for d in body.directions() {
        let (x, y) = px(d.coords()[0], d.coords()[1]);
        let _ = writeln!(
            out,
            r##"<line x1="{c}" y1="{c}" x2="{x:.3}" y2="{y:.3}" stroke="#c44" stroke-width="0.6"/>"##
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// The Klein-model polytope as an OBJ mesh; faces are counter-clockwise seen
/// from outside.
pub fn obj_m2(body: &HyperbolicPolytope<f64>) -> Result<String> {
    if body.dim() != 2 {
        return Err(Error::UnsupportedDimension(body.dim()));
    }
    let pts = body.klein_points();
    let mut out = String::from("# Klein model, vertices tanh(r_i) xi_i\n");
    for p in pts {
        let _ = writeln!(out, "v {} {} {}", p[0], p[1], p[2]);
    }
    for f in body.klein_facets() {
        let n = f.normal.coords();
        let mut centre = [0.0; 3];
        for &v in &f.vertices {
            for k in 0..3 {
                centre[k] += pts[v][k] / f.vertices.len() as f64;
            }
        }
        let u = crate::geometry::any_orthogonal3(n);
        let w = crate::geometry::cross3(n, &u);
        let mut ring: Vec<(f64, usize)> = f
            .vertices
            .iter()
            .map(|&v| {
                let d = [
                    pts[v][0] - centre[0],
                    pts[v][1] - centre[1],
                    pts[v][2] - centre[2],
                ];
                let a = crate::geometry::dot(&d, &w).atan2(crate::geometry::dot(&d, &u));
                (a, v)
            })
            .collect();
        // increasing angle about n, with (u, w, n) right-handed, is
        // counter-clockwise when viewed from outside
        ring.sort_by(|a, b| a.0.total_cmp(&b.0));
        let idx: Vec<String> = ring.iter().map(|(_, v)| (v + 1).to_string()).collect();
        let _ = writeln!(out, "f {}", idx.join(" "));
    }
    Ok(out)
}
