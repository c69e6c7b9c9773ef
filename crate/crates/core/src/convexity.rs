//! Convexity structure of the two components of a planar homography.
//!
//! Rotating the plane so the first axis points along the denominator
//! gradient `(d, e)` and dividing by `√(d²+e²)` turns each component into
//! `(αX + βY + γ)/(X + δ)`. Its Hessian has determinant `−β²/(X+δ)⁴`, so the
//! component is a genuine convex or concave function only where `β = 0`;
//! otherwise the Hessian is indefinite and only the sign of its `XX` entry
//! changes across the critical line `Y = (αδ − γ)/β`. The pole line and the
//! critical lines split the plane into (generically) six regions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::affine_core::{secant_dominance, ApproxError, Dominance};
use crate::funcspec::{Convexity, EvalError, ScalarField};
use crate::geometry::{GeometryError, Simplex};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConvexityError {
    #[error("homography is singular (|det| = {det:.3e} after normalization)")]
    SingularHomography { det: f64 },
    #[error("invalid homography json: {0}")]
    Json(String),
    #[error("component {0} is affine: the denominator is constant")]
    AffineComponent(usize),
    #[error("point lies on the pole line")]
    PoleEvaluation,
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("secant test failed: {0}")]
    Approx(String),
}

impl From<ApproxError> for ConvexityError {
    fn from(e: ApproxError) -> Self {
        ConvexityError::Approx(e.to_string())
    }
}

/// Row-major 3×3 projective map `[a₁ b₁ c₁; a₂ b₂ c₂; d e j]`, stored with
/// unit Frobenius norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Homography {
    m: [[f64; 3]; 3],
}

#[derive(Serialize, Deserialize)]
struct HomographyJson {
    matrix: Vec<Vec<f64>>,
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

impl Homography {
    pub fn new(m: [[f64; 3]; 3]) -> Result<Self, ConvexityError> {
        let norm = m.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(ConvexityError::SingularHomography { det: 0.0 });
        }
        let mut n = m;
        n.iter_mut().flatten().for_each(|v| *v /= norm);
        let det = det3(&n);
        if !(det.abs() > 1e-12) {
            return Err(ConvexityError::SingularHomography { det });
        }
        Ok(Self { m: n })
    }

    pub fn identity() -> Self {
        Self::new([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).expect("identity is regular")
    }

    /// Parses `{"matrix": [[..],[..],[..]]}`.
    pub fn from_json_str(text: &str) -> Result<Self, ConvexityError> {
        let raw: HomographyJson = serde_json::from_str(text).map_err(|e| ConvexityError::Json(e.to_string()))?;
        if raw.matrix.len() != 3 || raw.matrix.iter().any(|r| r.len() != 3) {
            return Err(ConvexityError::Json("matrix must be 3×3".into()));
        }
        let mut m = [[0.0; 3]; 3];
        for (r, row) in raw.matrix.iter().enumerate() {
            m[r].copy_from_slice(row);
        }
        Self::new(m)
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(HomographyJson {
            matrix: self.m.iter().map(|r| r.to_vec()).collect(),
        })
        .expect("plain numbers serialize")
    }

    pub fn matrix(&self) -> &[[f64; 3]; 3] {
        &self.m
    }

    /// `(d, e)` both zero: the map is affine.
    pub fn is_affine(&self) -> bool {
        self.m[2][0] == 0.0 && self.m[2][1] == 0.0
    }

    pub fn denominator(&self, p: [f64; 2]) -> f64 {
        self.m[2][0] * p[0] + self.m[2][1] * p[1] + self.m[2][2]
    }

    fn numerator(&self, i: usize, p: [f64; 2]) -> f64 {
        self.m[i][0] * p[0] + self.m[i][1] * p[1] + self.m[i][2]
    }

    pub fn apply(&self, p: [f64; 2]) -> Result<[f64; 2], ConvexityError> {
        let den = self.denominator(p);
        if den == 0.0 {
            return Err(ConvexityError::PoleEvaluation);
        }
        Ok([self.numerator(0, p) / den, self.numerator(1, p) / den])
    }

    /// Jacobian rows `∂f_i/∂(x, y)`.
    pub fn jacobian(&self, p: [f64; 2]) -> Result<[[f64; 2]; 2], ConvexityError> {
        let den = self.denominator(p);
        if den == 0.0 {
            return Err(ConvexityError::PoleEvaluation);
        }
        let (d, e) = (self.m[2][0], self.m[2][1]);
        let mut j = [[0.0; 2]; 2];
        for (i, row) in j.iter_mut().enumerate() {
            let num = self.numerator(i, p);
            row[0] = (self.m[i][0] * den - num * d) / (den * den);
            row[1] = (self.m[i][1] * den - num * e) / (den * den);
        }
        Ok(j)
    }

    pub fn inverse(&self) -> Homography {
        let m = &self.m;
        let cof = |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
        let adj = [
            [cof(1, 2, 1, 2), -cof(0, 2, 1, 2), cof(0, 1, 1, 2)],
            [-cof(1, 2, 0, 2), cof(0, 2, 0, 2), -cof(0, 1, 0, 2)],
            [cof(1, 2, 0, 1), -cof(0, 2, 0, 1), cof(0, 1, 0, 1)],
        ];
        Homography::new(adj).expect("adjugate of a regular matrix is regular")
    }
}

/// Component `i ∈ {1, 2}` as a field with analytic gradient and Hessian.
pub fn component_field(h: &Homography, i: usize) -> ScalarField {
    assert!(i == 1 || i == 2, "component index must be 1 or 2");
    let row = h.m[i - 1];
    let den = h.m[2];
    let parts = move |x: &[f64]| -> Result<(f64, f64), EvalError> {
        let dv = den[0] * x[0] + den[1] * x[1] + den[2];
        if dv == 0.0 {
            return Err(EvalError::Pole);
        }
        Ok(((row[0] * x[0] + row[1] * x[1] + row[2]) / dv, dv))
    };
    let grad = move |x: &[f64]| -> Result<[f64; 2], EvalError> {
        let (f, dv) = parts(x)?;
        Ok([(row[0] - f * den[0]) / dv, (row[1] - f * den[1]) / dv])
    };
    ScalarField::new(2, format!("homography component {i}"), move |x| parts(x).map(|p| p.0))
        .with_gradient(move |x| grad(x).map(|g| g.to_vec()))
        .with_hessian(move |x| {
            let (_, dv) = parts(x)?;
            let g = grad(x)?;
            let dd = [den[0], den[1]];
            Ok((0..2)
                .map(|a| (0..2).map(|b| -(dd[a] * g[b] + g[a] * dd[b]) / dv).collect())
                .collect())
        })
}

/// `(αX + βY + γ)/(X + δ)` in coordinates `(X, Y) = O·(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CanonicalRational {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    /// Orthogonal `O` with first row along `(d, e)/√(d²+e²)`.
    pub rotation: [[f64; 2]; 2],
    pub component: usize,
}

impl CanonicalRational {
    pub fn to_canonical(&self, p: [f64; 2]) -> [f64; 2] {
        let o = &self.rotation;
        [o[0][0] * p[0] + o[0][1] * p[1], o[1][0] * p[0] + o[1][1] * p[1]]
    }

    pub fn from_canonical(&self, q: [f64; 2]) -> [f64; 2] {
        let o = &self.rotation;
        [o[0][0] * q[0] + o[1][0] * q[1], o[0][1] * q[0] + o[1][1] * q[1]]
    }

    pub fn eval(&self, x: f64, y: f64) -> Result<f64, ConvexityError> {
        let t = x + self.delta;
        if t == 0.0 {
            return Err(ConvexityError::PoleEvaluation);
        }
        Ok((self.alpha * x + self.beta * y + self.gamma) / t)
    }

    /// `Y` of the critical line, absent when `β = 0`.
    pub fn critical_y(&self) -> Option<f64> {
        (self.beta != 0.0).then(|| (self.alpha * self.delta - self.gamma) / self.beta)
    }

    pub fn hessian(&self, x: f64, y: f64) -> Result<SymmetricMatrix2, ConvexityError> {
        hessian_canonical(self, x, y)
    }
}

pub fn canonicalize(h: &Homography, i: usize) -> Result<CanonicalRational, ConvexityError> {
    assert!(i == 1 || i == 2, "component index must be 1 or 2");
    let [d, e, j] = h.m[2];
    let r = d.hypot(e);
    if r == 0.0 {
        return Err(ConvexityError::AffineComponent(i));
    }
    let (u, v) = (d / r, e / r);
    let [a, b, c] = h.m[i - 1];
    Ok(CanonicalRational {
        alpha: (a * u + b * v) / r,
        beta: (-a * v + b * u) / r,
        gamma: c / r,
        delta: j / r,
        rotation: [[u, v], [-v, u]],
        component: i,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymmetricMatrix2 {
    pub p11: f64,
    pub p12: f64,
    pub p22: f64,
}

impl SymmetricMatrix2 {
    pub fn det(&self) -> f64 {
        self.p11 * self.p22 - self.p12 * self.p12
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let mean = 0.5 * (self.p11 + self.p22);
        let radius = (0.5 * (self.p11 - self.p22)).hypot(self.p12);
        let big = if mean >= 0.0 { mean + radius } else { mean - radius };
        let small = if big != 0.0 { self.det() / big } else { 0.0 };
        if big >= small {
            [small, big]
        } else {
            [big, small]
        }
    }
}

/// `(1/(X+δ)³)·[2(βY − αδ + γ), −β(X+δ); −β(X+δ), 0]`.
pub fn hessian_canonical(c: &CanonicalRational, x: f64, y: f64) -> Result<SymmetricMatrix2, ConvexityError> {
    let t = x + c.delta;
    if t == 0.0 {
        return Err(ConvexityError::PoleEvaluation);
    }
    let t3 = t * t * t;
    Ok(SymmetricMatrix2 {
        p11: 2.0 * (c.beta * y - c.alpha * c.delta + c.gamma) / t3,
        p12: -c.beta / (t * t),
        p22: 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Semidefinite {
    Psd,
    Nsd,
    Indefinite,
    /// Zero matrix: both positive and negative semidefinite.
    Zero,
}

impl Semidefinite {
    /// Convexity implied by a Hessian of this class, if any.
    pub fn convexity(self) -> Option<Convexity> {
        match self {
            Semidefinite::Psd | Semidefinite::Zero => Some(Convexity::Convex),
            Semidefinite::Nsd => Some(Convexity::Concave),
            Semidefinite::Indefinite => None,
        }
    }
}

pub const SEMIDEFINITE_TOL: f64 = 1e-12;

/// Classifies by eigenvalue signs with tolerance `1e-12` relative to the
/// largest entry.
pub fn semidefinite_class(m: &SymmetricMatrix2) -> Semidefinite {
    let scale = m.p11.abs().max(m.p12.abs()).max(m.p22.abs());
    if scale == 0.0 {
        return Semidefinite::Zero;
    }
    let tol = SEMIDEFINITE_TOL * scale;
    let [lo, hi] = m.eigenvalues();
    match (lo >= -tol, hi <= tol) {
        (true, true) => Semidefinite::Zero,
        (true, false) => Semidefinite::Psd,
        (false, true) => Semidefinite::Nsd,
        (false, false) => Semidefinite::Indefinite,
    }
}

/// The one-line signum shortcut: PSD when `sign(p11) = +sign(det)`, NSD when
/// `sign(p11) = −sign(det)`. Only meaningful for `p11 ≠ 0`, `det ≠ 0`.
pub fn signum_shortcut(m: &SymmetricMatrix2) -> Option<Semidefinite> {
    let (s11, sdet) = (m.p11.signum(), m.det().signum());
    if m.p11 == 0.0 || m.det() == 0.0 {
        return None;
    }
    Some(if s11 == sdet {
        Semidefinite::Psd
    } else {
        Semidefinite::Nsd
    })
}

/// Sign of the `XX` curvature: convex-like or concave-like along the
/// denominator gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Curvature {
    Positive,
    Negative,
    Flat,
}

impl Curvature {
    fn of(p11: f64) -> Self {
        if p11 > 0.0 {
            Curvature::Positive
        } else if p11 < 0.0 {
            Curvature::Negative
        } else {
            Curvature::Flat
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LineKind {
    Pole,
    Critical { component: usize },
}

/// `normal · x + offset = 0` in original coordinates, `‖normal‖ = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Line {
    pub kind: LineKind,
    pub normal: [f64; 2],
    pub offset: f64,
    /// Components whose critical line this is (both when they coincide).
    pub components: [bool; 2],
}

impl Line {
    pub fn signed_distance(&self, p: [f64; 2]) -> f64 {
        self.normal[0] * p[0] + self.normal[1] * p[1] + self.offset
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComponentClass {
    pub hessian: Semidefinite,
    pub curvature: Curvature,
}

#[derive(Debug, Clone, Serialize)]
pub struct Region {
    /// Side of each partition line (`±1`), in `RegionPartition::lines` order.
    pub signs: Vec<i8>,
    pub representative: [f64; 2],
    pub components: [ComponentClass; 2],
    /// Canonical-coordinate extent `(lo, hi)` in X and Y; may be infinite.
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
}

#[derive(Debug, Clone, Serialize)]
pub struct RegionPartition {
    pub lines: Vec<Line>,
    pub regions: Vec<Region>,
    /// Explanations for any departure from the generic six-region case.
    pub notes: Vec<String>,
    pub canonical: Option<[CanonicalRational; 2]>,
}

impl RegionPartition {
    pub fn is_generic(&self) -> bool {
        self.notes.is_empty()
    }

    /// Sign vector of `p`; `None` on a partition line.
    pub fn region_of(&self, p: [f64; 2]) -> Option<Vec<i8>> {
        self.lines
            .iter()
            .map(|l| {
                let s = l.signed_distance(p);
                (s != 0.0).then_some(if s > 0.0 { 1 } else { -1 })
            })
            .collect()
    }

    pub fn region(&self, signs: &[i8]) -> Option<&Region> {
        self.regions.iter().find(|r| r.signs == signs)
    }

    /// Random point in the open region, in original coordinates.
    pub fn sample_in<R: Rng + ?Sized>(&self, region: &Region, rng: &mut R) -> [f64; 2] {
        let draw = |rng: &mut R, (lo, hi): (f64, f64)| -> f64 {
            let u: f64 = rng.gen_range(0.02..0.98);
            match (lo.is_finite(), hi.is_finite()) {
                (true, true) => lo + u * (hi - lo),
                (true, false) => lo + 4.0 * u * (1.0 + lo.abs()).min(10.0),
                (false, true) => hi - 4.0 * u * (1.0 + hi.abs()).min(10.0),
                (false, false) => 8.0 * (u - 0.5),
            }
        };
        let q = [draw(rng, region.x_range), draw(rng, region.y_range)];
        match &self.canonical {
            Some(c) => c[0].from_canonical(q),
            None => q,
        }
    }
}

const SAMPLES_PER_REGION: usize = 5;

fn classify_samples(c: &CanonicalRational, pts: &[[f64; 2]]) -> Result<ComponentClass, ConvexityError> {
    let mut classes = Vec::with_capacity(pts.len());
    for q in pts {
        let h = hessian_canonical(c, q[0], q[1])?;
        classes.push(ComponentClass {
            hessian: semidefinite_class(&h),
            curvature: Curvature::of(h.p11),
        });
    }
    let first = classes[0];
    if classes.iter().any(|k| *k != first) {
        return Err(ConvexityError::DegenerateGeometry(format!(
            "component {} changes class inside a region",
            c.component
        )));
    }
    Ok(first)
}

pub fn classify_regions(h: &Homography) -> Result<RegionPartition, ConvexityError> {
    let zero = ComponentClass {
        hessian: Semidefinite::Zero,
        curvature: Curvature::Flat,
    };
    if h.is_affine() {
        return Ok(RegionPartition {
            lines: Vec::new(),
            regions: vec![Region {
                signs: Vec::new(),
                representative: [0.0, 0.0],
                components: [zero, zero],
                x_range: (f64::NEG_INFINITY, f64::INFINITY),
                y_range: (f64::NEG_INFINITY, f64::INFINITY),
            }],
            notes: vec!["denominator is constant: the map is affine, both components are flat".into()],
            canonical: None,
        });
    }
    let c = [canonicalize(h, 1)?, canonicalize(h, 2)?];
    if c.iter()
        .any(|k| ![k.alpha, k.beta, k.gamma, k.delta].iter().all(|v| v.is_finite()))
    {
        return Err(ConvexityError::DegenerateGeometry("non-finite canonical form".into()));
    }
    let o = c[0].rotation;
    let mut notes = Vec::new();
    let mut lines = vec![Line {
        kind: LineKind::Pole,
        normal: o[0],
        offset: c[0].delta,
        components: [true, true],
    }];

    let mut critical: Vec<(f64, [bool; 2])> = Vec::new();
    for (idx, comp) in c.iter().enumerate() {
        let size = comp.alpha.abs() + comp.gamma.abs() + comp.delta.abs() + 1.0;
        if comp.beta.abs() <= 1e-12 * size {
            notes.push(format!(
                "component {}: β = 0, the canonical form depends on X only and has no critical line",
                idx + 1
            ));
            continue;
        }
        let y = comp.critical_y().expect("β ≠ 0");
        if let Some(existing) = critical
            .iter_mut()
            .find(|(cy, _)| (cy - y).abs() <= 1e-12 * (1.0 + y.abs()))
        {
            existing.1[idx] = true;
            notes.push("both components share one critical line".into());
        } else {
            let mut flags = [false; 2];
            flags[idx] = true;
            critical.push((y, flags));
        }
    }
    critical.sort_by(|a, b| a.0.total_cmp(&b.0));
    for &(y, flags) in &critical {
        let component = if flags[0] { 1 } else { 2 };
        lines.push(Line {
            kind: LineKind::Critical { component },
            normal: o[1],
            offset: -y,
            components: flags,
        });
    }

    let x0 = -c[0].delta;
    let mut y_bands: Vec<(f64, f64)> = Vec::new();
    let ys: Vec<f64> = critical.iter().map(|c| c.0).collect();
    let mut lo = f64::NEG_INFINITY;
    for &y in &ys {
        y_bands.push((lo, y));
        lo = y;
    }
    y_bands.push((lo, f64::INFINITY));

    let mut partition = RegionPartition {
        lines,
        regions: Vec::new(),
        notes,
        canonical: Some(c),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0x7e9105);
    for x_range in [(f64::NEG_INFINITY, x0), (x0, f64::INFINITY)] {
        for &y_range in &y_bands {
            let mut region = Region {
                signs: Vec::new(),
                representative: [0.0, 0.0],
                components: [zero, zero],
                x_range,
                y_range,
            };
            let pts: Vec<[f64; 2]> = (0..SAMPLES_PER_REGION)
                .map(|_| partition.sample_in(&region, &mut rng))
                .collect();
            region.representative = pts[0];
            region.signs = partition
                .region_of(pts[0])
                .ok_or_else(|| ConvexityError::DegenerateGeometry("sample landed on a line".into()))?;
            let canon: Vec<[f64; 2]> = pts.iter().map(|p| c[0].to_canonical(*p)).collect();
            region.components = [classify_samples(&c[0], &canon)?, classify_samples(&c[1], &canon)?];
            partition.regions.push(region);
        }
    }
    Ok(partition)
}

#[derive(Debug, Clone, Serialize)]
pub struct ComponentAdmissibility {
    pub component: usize,
    /// Hessian class if constant over all samples on the triangle.
    pub hessian_class: Option<Semidefinite>,
    pub curvature: Option<Curvature>,
    pub dominance: Option<Dominance>,
    /// Side to use for the construction (`convex`: field below its secant).
    pub convexity: Convexity,
    pub ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AdmissibilityReport {
    pub admissible: bool,
    pub pole_free: bool,
    /// Vertices and centroid lie in the closure of a single region.
    pub region_consistent: bool,
    pub crossed: Vec<LineKind>,
    pub components: Vec<ComponentAdmissibility>,
}

impl AdmissibilityReport {
    pub fn reason(&self) -> String {
        if self.admissible {
            return "admissible".into();
        }
        if !self.pole_free {
            return "triangle meets the pole line".into();
        }
        if !self.region_consistent {
            return format!("triangle crosses {:?}", self.crossed);
        }
        let bad: Vec<usize> = self.components.iter().filter(|c| !c.ok).map(|c| c.component).collect();
        format!("components {bad:?} are neither semidefinite on the triangle nor on one side of their secant")
    }
}

const DOMINANCE_GRID: usize = 64;
const TRIANGLE_SAMPLES: usize = 24;

pub fn triangle_admissible(h: &Homography, tri: &Simplex) -> Result<AdmissibilityReport, ConvexityError> {
    if tri.dim() != 2 {
        return Err(ConvexityError::Geometry(GeometryError::DimensionMismatch {
            expected: 2,
            found: tri.dim(),
        }));
    }
    let mut probe: Vec<[f64; 2]> = tri.vertices().iter().map(|v| [v[0], v[1]]).collect();
    let centroid = tri.centroid();
    probe.push([centroid[0], centroid[1]]);

    let dens: Vec<f64> = probe.iter().map(|p| h.denominator(*p)).collect();
    let pole_free = dens.iter().all(|d| *d > 0.0) || dens.iter().all(|d| *d < 0.0);

    let partition = classify_regions(h)?;
    let crossed: Vec<LineKind> = partition
        .lines
        .iter()
        .filter(|l| {
            let s: Vec<f64> = probe.iter().map(|p| l.signed_distance(*p)).collect();
            s.iter().any(|v| *v > 0.0) && s.iter().any(|v| *v < 0.0)
        })
        .map(|l| l.kind)
        .collect();
    let region_consistent = crossed.is_empty();

    let mut components = Vec::new();
    if !pole_free {
        let report = AdmissibilityReport {
            admissible: false,
            pole_free,
            region_consistent,
            crossed,
            components,
        };
        return Ok(report);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0xad0155);
    let mut samples = probe.clone();
    samples.extend((0..TRIANGLE_SAMPLES).map(|_| {
        let p = tri.sample_uniform(&mut rng);
        [p[0], p[1]]
    }));
    for i in 1..=2 {
        let (hessian_class, curvature) = match &partition.canonical {
            None => (Some(Semidefinite::Zero), Some(Curvature::Flat)),
            Some(c) => {
                let comp = &c[i - 1];
                let mut classes = Vec::new();
                for p in &samples {
                    let q = comp.to_canonical(*p);
                    let m = hessian_canonical(comp, q[0], q[1])?;
                    classes.push((semidefinite_class(&m), Curvature::of(m.p11)));
                }
                let same_class = classes.iter().all(|k| k.0 == classes[0].0);
                let same_curv = classes.iter().all(|k| k.1 == classes[0].1);
                (same_class.then_some(classes[0].0), same_curv.then_some(classes[0].1))
            }
        };
        let field = component_field(h, i);
        let dominance = secant_dominance(tri, &field, DOMINANCE_GRID)?;
        let (convexity, ok) = match hessian_class.and_then(Semidefinite::convexity) {
            Some(cv) => (cv, true),
            None => match dominance {
                Dominance::Below => (Convexity::Convex, true),
                Dominance::Above => (Convexity::Concave, true),
                Dominance::Neither => (Convexity::Unknown, false),
            },
        };
        components.push(ComponentAdmissibility {
            component: i,
            hessian_class,
            curvature,
            dominance: Some(dominance),
            convexity,
            ok,
        });
    }
    Ok(AdmissibilityReport {
        admissible: pole_free && region_consistent && components.iter().all(|c| c.ok),
        pole_free,
        region_consistent,
        crossed,
        components,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspec::finite_diff_hessian;

    fn h(m: [[f64; 3]; 3]) -> Homography {
        Homography::new(m).unwrap()
    }

    #[test]
    fn component_examples() {
        let id = Homography::identity();
        assert!((component_field(&id, 1).eval(&[3.0, 4.0]).unwrap() - 3.0).abs() < 1e-15);
        let hp = h([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 0.0, 1.0]]);
        assert!((component_field(&hp, 1).eval(&[1.0, 1.0]).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(
            component_field(&hp, 1).eval(&[-1.0, 0.0]),
            Err(EvalError::Pole)
        ));
        let aff = h([[2.0, 1.0, 3.0], [0.5, -1.0, 2.0], [0.0, 0.0, 1.0]]);
        let f2 = component_field(&aff, 2);
        assert!((f2.eval(&[1.0, 1.0]).unwrap() - 1.5).abs() < 1e-14);
    }

    #[test]
    fn canonical_examples() {
        let hp = h([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 0.0, 1.0]]);
        let c = canonicalize(&hp, 1).unwrap();
        assert_eq!(c.rotation, [[1.0, 0.0], [-0.0, 1.0]]);
        assert!((c.alpha - 1.0).abs() < 1e-15 && c.beta == 0.0 && c.gamma == 0.0 && (c.delta - 1.0).abs() < 1e-15);

        let swap = h([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 1.0]]);
        let c = canonicalize(&swap, 1).unwrap();
        assert_eq!(c.rotation[0], [0.0, 1.0]);
        assert!(
            (c.alpha - 1.0).abs() < 1e-15 && c.beta.abs() < 1e-15 && c.gamma == 0.0 && (c.delta - 1.0).abs() < 1e-15
        );

        let aff = h([[2.0, 1.0, 3.0], [0.5, -1.0, 2.0], [0.0, 0.0, 1.0]]);
        assert_eq!(canonicalize(&aff, 1), Err(ConvexityError::AffineComponent(1)));
    }

    #[test]
    fn canonical_reconstruction() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let mut m = [[0.0; 3]; 3];
            m.iter_mut().flatten().for_each(|v| *v = rng.gen_range(-1.0..1.0));
            let Ok(hm) = Homography::new(m) else { continue };
            for i in 1..=2 {
                let c = canonicalize(&hm, i).unwrap();
                let o = c.rotation;
                let ortho = o[0][0] * o[0][0] + o[1][0] * o[1][0];
                assert!((ortho - 1.0).abs() < 1e-12);
                let f = component_field(&hm, i);
                for _ in 0..100 {
                    let p = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
                    let Ok(v) = f.eval(&p) else { continue };
                    let q = c.to_canonical(p);
                    let w = c.eval(q[0], q[1]).unwrap();
                    assert!((v - w).abs() <= 1e-9 * (1.0 + v.abs()), "{v} vs {w}");
                }
            }
        }
    }

    #[test]
    fn hessian_formula_examples() {
        let c = CanonicalRational {
            alpha: 1.0,
            beta: 0.0,
            gamma: 0.0,
            delta: 1.0,
            rotation: [[1.0, 0.0], [0.0, 1.0]],
            component: 1,
        };
        let m = hessian_canonical(&c, 0.0, 5.0).unwrap();
        assert_eq!((m.p11, m.p12, m.p22), (-2.0, 0.0, 0.0));
        assert_eq!(semidefinite_class(&m), Semidefinite::Nsd);
        let psd = CanonicalRational { gamma: 3.0, ..c };
        assert_eq!(
            semidefinite_class(&hessian_canonical(&psd, 0.0, 0.0).unwrap()),
            Semidefinite::Psd
        );
        let b = CanonicalRational { beta: 1.0, ..c };
        let m = hessian_canonical(&b, 1.0, 0.3).unwrap();
        assert!((m.det() + 1.0 / 16.0).abs() < 1e-15);
        assert_eq!(semidefinite_class(&m), Semidefinite::Indefinite);
        assert_eq!(hessian_canonical(&c, -1.0, 0.0), Err(ConvexityError::PoleEvaluation));
    }

    #[test]
    fn hessian_matches_finite_differences() {
        let hm = h([[0.3, -1.2, 0.5], [0.8, 0.4, -0.7], [0.6, -0.9, 1.1]]);
        for i in 1..=2 {
            let c = canonicalize(&hm, i).unwrap();
            let f = component_field(&hm, i);
            let g = ScalarField::new(2, "canonical", move |q| f.eval(&c.from_canonical([q[0], q[1]])));
            let (x, y) = (1.3 - c.delta, 0.4);
            let fd = finite_diff_hessian(&g, &[x, y], 1e-4).unwrap();
            let an = hessian_canonical(&c, x, y).unwrap();
            let scale = an.p11.abs().max(an.p12.abs());
            assert!((fd[0][0] - an.p11).abs() < 1e-5 * scale);
            assert!((fd[0][1] - an.p12).abs() < 1e-5 * scale);
            assert!(fd[1][1].abs() < 1e-5 * scale);
        }
    }

    #[test]
    fn classification_examples() {
        let m = |p11, p12, p22| SymmetricMatrix2 { p11, p12, p22 };
        assert_eq!(semidefinite_class(&m(1.0, 0.0, 1.0)), Semidefinite::Psd);
        assert_eq!(semidefinite_class(&m(-1.0, 0.0, -1.0)), Semidefinite::Nsd);
        assert_eq!(semidefinite_class(&m(1.0, 2.0, 1.0)), Semidefinite::Indefinite);
        assert_eq!(semidefinite_class(&m(0.0, 0.0, 0.0)), Semidefinite::Zero);
        assert_eq!(semidefinite_class(&m(0.0, 1.0, 0.0)), Semidefinite::Indefinite);
        // signum shortcut agrees whenever p11 ≠ 0 and det > 0
        for (a, b, c) in [(2.0, 1.0, 1.0), (-2.0, 1.0, -1.0), (3.0, -0.5, 0.2)] {
            assert_eq!(signum_shortcut(&m(a, b, c)), Some(semidefinite_class(&m(a, b, c))));
        }
        // with det < 0 the shortcut calls an indefinite matrix semidefinite
        assert_eq!(signum_shortcut(&m(1.0, 2.0, 1.0)), Some(Semidefinite::Nsd));
        assert_eq!(signum_shortcut(&m(0.0, 1.0, 0.0)), None);
    }

    #[test]
    fn generic_partition_has_six_regions() {
        let hm = h([[0.3, -1.2, 0.5], [0.8, 0.4, -0.7], [0.6, -0.9, 1.1]]);
        let part = classify_regions(&hm).unwrap();
        assert!(part.is_generic(), "{:?}", part.notes);
        assert_eq!(part.lines.len(), 3);
        assert_eq!(part.regions.len(), 6);
        let mut signs: Vec<_> = part.regions.iter().map(|r| r.signs.clone()).collect();
        signs.dedup();
        assert_eq!(signs.len(), 6);
        for r in &part.regions {
            assert_eq!(part.region_of(r.representative).as_ref(), Some(&r.signs));
            assert!(r.components.iter().all(|c| c.hessian == Semidefinite::Indefinite));
        }
    }

    #[test]
    fn degenerate_partitions() {
        let aff = h([[2.0, 1.0, 3.0], [0.5, -1.0, 2.0], [0.0, 0.0, 1.0]]);
        let part = classify_regions(&aff).unwrap();
        assert_eq!(part.regions.len(), 1);
        assert!(part.lines.is_empty());
        assert_eq!(part.regions[0].components[0].hessian, Semidefinite::Zero);

        let hp = h([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 0.0, 1.0]]);
        let part = classify_regions(&hp).unwrap();
        assert!(!part.is_generic());
        assert!(part.notes[0].contains("component 1"));
        assert_eq!(part.regions.len(), 4);
        // f1 = x/(x+1): concave right of the pole, convex left of it
        for r in &part.regions {
            let right = r.representative[0] > -1.0;
            let want = if right { Semidefinite::Nsd } else { Semidefinite::Psd };
            assert_eq!(r.components[0].hessian, want);
        }
    }

    #[test]
    fn triangles_around_three_lines() {
        // pole X = 3, component 1 critical at Y = −0.5, component 2 at Y = 3.35
        let hm = h([[0.0, 1.0, 0.5], [0.0, 1.0, -3.35], [1.0, 0.0, -3.0]]);
        let part = classify_regions(&hm).unwrap();
        assert_eq!(part.regions.len(), 6);
        let crossing = Simplex::from_rows(&[[0.0, 4.0], [0.4, 0.0], [2.0, 4.3]]).unwrap();
        let lower = Simplex::from_rows(&[[1.25, -3.5], [1.75, -1.4], [2.5, -3.7]]).unwrap();
        let right = Simplex::from_rows(&[[5.0, 0.0], [8.0, 1.0], [7.7, 3.0]]).unwrap();
        let r = triangle_admissible(&hm, &crossing).unwrap();
        assert!(!r.region_consistent && !r.admissible);
        assert_eq!(r.crossed, vec![LineKind::Critical { component: 2 }]);
        for t in [&lower, &right] {
            let r = triangle_admissible(&hm, t).unwrap();
            assert!(r.pole_free && r.region_consistent);
            assert!(r.components.iter().all(|c| c.curvature.is_some()));
        }
        // component 1 = (Y + 0.5)/(X − 3) crosses its secant on the right triangle
        let r = triangle_admissible(&hm, &right).unwrap();
        assert_eq!(r.components[0].dominance, Some(Dominance::Neither));
        assert!(!r.admissible);

        let across = Simplex::from_rows(&[[2.0, 0.0], [4.0, 0.0], [3.0, 1.0]]).unwrap();
        let r = triangle_admissible(&hm, &across).unwrap();
        assert!(!r.pole_free && !r.admissible);
        assert_eq!(r.reason(), "triangle meets the pole line");
    }

    #[test]
    fn json_and_inverse() {
        let hm = Homography::from_json_str(r#"{"matrix": [[1,0,0],[0,1,0],[1,0,1]]}"#).unwrap();
        let inv = hm.inverse();
        let p = [0.7, -0.2];
        let q = inv.apply(hm.apply(p).unwrap()).unwrap();
        assert!((q[0] - p[0]).abs() < 1e-14 && (q[1] - p[1]).abs() < 1e-14);
        assert!(matches!(
            Homography::from_json_str(r#"{"matrix": [[1,0,0],[0,1,0]]}"#),
            Err(ConvexityError::Json(_))
        ));
        assert!(matches!(
            Homography::from_json_str(r#"{"matrix": [[1,1,0],[1,1,0],[0,0,1]]}"#),
            Err(ConvexityError::SingularHomography { .. })
        ));
    }
}
