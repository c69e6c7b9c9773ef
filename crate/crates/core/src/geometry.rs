//! Simplices in k-space: validation, barycentric coordinates, membership and
//! barycentric lattices.

use std::fmt;
use std::ops::Deref;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ToleranceConfig;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("expected {expected} vertices, found {found}")]
    Arity { expected: usize, found: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("simplex must have dimension at least 1")]
    EmptyDimension,
    #[error("degenerate simplex (reciprocal condition estimate {rcond:.3e})")]
    DegenerateSimplex { rcond: f64 },
    #[error("invalid simplex json: {0}")]
    Json(String),
}

/// A point in k-space with finite coordinates.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self, GeometryError> {
        if coords.is_empty() {
            return Err(GeometryError::EmptyDimension);
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        Ok(Self(coords))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Point {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for Point {
    type Error = GeometryError;

    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        Point::new(v)
    }
}

impl TryFrom<&[f64]> for Point {
    type Error = GeometryError;

    fn try_from(v: &[f64]) -> Result<Self, Self::Error> {
        Point::new(v.to_vec())
    }
}

/// Barycentric coordinates `γ_1..γ_{k+1}` of a point relative to a simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct BarycentricCoords(pub Vec<f64>);

impl BarycentricCoords {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// A k-simplex: `k+1` affinely independent vertices in k-space.
///
/// The inverse of the edge matrix `[a_1 - a_{k+1}, …, a_k - a_{k+1}]` is
/// cached at construction so barycentric queries are a single mat-vec.
#[derive(Debug, Clone)]
pub struct Simplex {
    vertices: Vec<Point>,
    edge_inverse: DMatrix<f64>,
    rcond: f64,
}

#[derive(Serialize, Deserialize)]
struct SimplexJson {
    vertices: Vec<Vec<f64>>,
}

/// Validates `points` as the vertex list of a simplex with the default
/// conditioning threshold.
pub fn validate_simplex(points: Vec<Point>) -> Result<Simplex, GeometryError> {
    Simplex::new(points)
}

impl Simplex {
    pub fn new(points: Vec<Point>) -> Result<Self, GeometryError> {
        Self::with_tolerance(points, &ToleranceConfig::default())
    }

    pub fn with_tolerance(points: Vec<Point>, tol: &ToleranceConfig) -> Result<Self, GeometryError> {
        let k = points
            .first()
            .map(Point::dim)
            .ok_or(GeometryError::Arity { expected: 2, found: 0 })?;
        if points.len() != k + 1 {
            return Err(GeometryError::Arity {
                expected: k + 1,
                found: points.len(),
            });
        }
        if let Some(bad) = points.iter().find(|p| p.dim() != k) {
            return Err(GeometryError::DimensionMismatch {
                expected: k,
                found: bad.dim(),
            });
        }

        let vertex_matrix = DMatrix::from_fn(k + 1, k + 1, |r, c| if c < k { points[r][c] } else { 1.0 });
        let sv = vertex_matrix.singular_values();
        let smax = sv.max();
        let smin = sv.min();
        let rcond = if smax > 0.0 { smin / smax } else { 0.0 };
        if !(rcond >= tol.simplex_rcond_min) {
            return Err(GeometryError::DegenerateSimplex { rcond });
        }

        let last = &points[k];
        let edges = DMatrix::from_fn(k, k, |r, c| points[c][r] - last[r]);
        let edge_inverse = edges.try_inverse().ok_or(GeometryError::DegenerateSimplex { rcond })?;

        Ok(Self {
            vertices: points,
            edge_inverse,
            rcond,
        })
    }

    /// Convenience constructor from raw coordinate rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, GeometryError> {
        let pts = rows
            .iter()
            .map(|r| Point::new(r.as_ref().to_vec()))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(pts)
    }

    /// Parses `{"vertices": [[x…], …]}`.
    pub fn from_json_str(text: &str) -> Result<Self, GeometryError> {
        let raw: SimplexJson = serde_json::from_str(text).map_err(|e| GeometryError::Json(e.to_string()))?;
        Self::from_rows(&raw.vertices)
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(SimplexJson {
            vertices: self.vertices.iter().map(|p| p.coords().to_vec()).collect(),
        })
        .expect("plain numbers serialize")
    }

    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> &[f64] {
        &self.vertices[i]
    }

    pub fn rcond(&self) -> f64 {
        self.rcond
    }

    pub fn centroid(&self) -> Vec<f64> {
        let w = 1.0 / self.vertices.len() as f64;
        self.from_barycentric(&vec![w; self.vertices.len()])
    }

    /// `Σ γ_i a_i` (weights are not required to sum to one).
    pub fn from_barycentric(&self, gamma: &[f64]) -> Vec<f64> {
        let k = self.dim();
        let mut out = vec![0.0; k];
        for (g, v) in gamma.iter().zip(&self.vertices) {
            for (o, c) in out.iter_mut().zip(v.iter()) {
                *o += g * c;
            }
        }
        out
    }

    pub fn barycentric(&self, p: &[f64]) -> Result<BarycentricCoords, GeometryError> {
        let k = self.dim();
        if p.len() != k {
            return Err(GeometryError::DimensionMismatch {
                expected: k,
                found: p.len(),
            });
        }
        let last = &self.vertices[k];
        let mut gamma = vec![0.0; k + 1];
        for (r, g) in gamma.iter_mut().take(k).enumerate() {
            *g = (0..k).map(|c| self.edge_inverse[(r, c)] * (p[c] - last[c])).sum();
        }
        gamma[k] = 1.0 - gamma[..k].iter().sum::<f64>();
        Ok(BarycentricCoords(gamma))
    }

    pub fn contains(&self, p: &[f64]) -> Result<bool, GeometryError> {
        self.contains_with(p, ToleranceConfig::default().boundary)
    }

    pub fn contains_with(&self, p: &[f64], boundary: f64) -> Result<bool, GeometryError> {
        Ok(self.barycentric(p)?.min() >= -boundary)
    }

    /// Barycentric lattice with `n` subdivisions per edge, in lexicographic
    /// order of the integer weight vectors.
    pub fn lattice(&self, n: usize) -> Vec<LatticePoint> {
        lattice_indices(self.dim() + 1, n)
            .into_iter()
            .map(|index| {
                let gamma: Vec<f64> = index.iter().map(|&i| i as f64 / n as f64).collect();
                let point = self.from_barycentric(&gamma);
                LatticePoint { index, gamma, point }
            })
            .collect()
    }

    /// Uniformly distributed point in the simplex.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.from_barycentric(&sample_probability_simplex(self.vertices.len(), rng))
    }
}

impl fmt::Display for Simplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "simplex[")?;
        for (i, v) in self.vertices.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{:?}", v.coords())?;
        }
        write!(f, "]")
    }
}

/// Random simplex with vertices uniform in `[-scale, scale]^k`, redrawn
/// until its conditioning reaches `min_rcond`.
pub fn random_simplex<R: Rng + ?Sized>(k: usize, scale: f64, min_rcond: f64, rng: &mut R) -> Simplex {
    loop {
        let rows: Vec<Vec<f64>> = (0..=k)
            .map(|_| (0..k).map(|_| rng.gen_range(-scale..=scale)).collect())
            .collect();
        if let Ok(s) = Simplex::from_rows(&rows) {
            if s.rcond() >= min_rcond {
                return s;
            }
        }
    }
}

/// Free-function form of [`Simplex::barycentric`].
pub fn barycentric(s: &Simplex, p: &[f64]) -> Result<BarycentricCoords, GeometryError> {
    s.barycentric(p)
}

/// Free-function form of [`Simplex::contains`].
pub fn contains(s: &Simplex, p: &[f64]) -> Result<bool, GeometryError> {
    s.contains(p)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticePoint {
    pub index: Vec<u32>,
    pub gamma: Vec<f64>,
    pub point: Vec<f64>,
}

/// Number of points in a lattice with `n` subdivisions on a k-simplex.
pub fn lattice_size(k: usize, n: usize) -> usize {
    // C(n + k, k)
    (1..=k).fold(1usize, |acc, i| acc * (n + i) / i)
}

fn lattice_indices(parts: usize, n: usize) -> Vec<Vec<u32>> {
    fn rec(parts: usize, remaining: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if parts == 1 {
            prefix.push(remaining);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for i in 0..=remaining {
            prefix.push(i);
            rec(parts - 1, remaining - i, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(parts, n as u32, &mut Vec::with_capacity(parts), &mut out);
    out
}

/// Flat Dirichlet sample on the probability simplex of `m` weights.
pub fn sample_probability_simplex<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Vec<f64> {
    let mut w: Vec<f64> = (0..m).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    w
}

/// Euclidean projection onto `{λ ≥ 0, Σλ = 1}` (sort-based).
pub fn project_probability_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let t = (cumulative - 1.0) / (i + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}
