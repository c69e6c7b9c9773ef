//! Exact, best-affine and tangent warps of the image plane.

mod image;

pub use image::{Image, ImageError, MAX_SAMPLES};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::affine_core::{best_affine, best_affine_dominated, AffineFunction, ApproxError, ApproximationResult};
use crate::convexity::{component_field, triangle_admissible, AdmissibilityReport, ConvexityError, Homography};
use crate::geometry::{GeometryError, Simplex};
use crate::ToleranceConfig;

#[derive(Debug, Error)]
pub enum WarpError {
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("map is not invertible")]
    SingularMap,
    #[error(transparent)]
    Convexity(#[from] ConvexityError),
    #[error("triangle is not admissible: {}", report.reason())]
    NotAdmissible { report: Box<AdmissibilityReport> },
    #[error(transparent)]
    Approx(#[from] ApproxError),
}

/// `x ↦ (α₁ᵀx + β₁, α₂ᵀx + β₂)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AffineMap2D {
    pub components: [AffineFunction; 2],
}

impl AffineMap2D {
    pub fn new(linear: [[f64; 2]; 2], translation: [f64; 2]) -> Self {
        Self {
            components: [
                AffineFunction::new(linear[0].to_vec(), translation[0]),
                AffineFunction::new(linear[1].to_vec(), translation[1]),
            ],
        }
    }

    pub fn identity() -> Self {
        Self::new([[1.0, 0.0], [0.0, 1.0]], [0.0, 0.0])
    }

    pub fn linear(&self) -> [[f64; 2]; 2] {
        let [a, b] = &self.components;
        [[a.alpha[0], a.alpha[1]], [b.alpha[0], b.alpha[1]]]
    }

    pub fn translation(&self) -> [f64; 2] {
        [self.components[0].beta, self.components[1].beta]
    }

    pub fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        [self.components[0].eval(&p), self.components[1].eval(&p)]
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().all(AffineFunction::is_finite)
    }

    pub fn inverse(&self) -> Result<Self, WarpError> {
        let [[a, b], [c, d]] = self.linear();
        let det = a * d - b * c;
        let scale = a.abs().max(b.abs()).max(c.abs()).max(d.abs());
        if !det.is_finite() || det.abs() <= 1e-12 * scale * scale || scale == 0.0 {
            return Err(WarpError::SingularMap);
        }
        let inv = [[d / det, -b / det], [-c / det, a / det]];
        let t = self.translation();
        let u = [
            -(inv[0][0] * t[0] + inv[0][1] * t[1]),
            -(inv[1][0] * t[0] + inv[1][1] * t[1]),
        ];
        Ok(Self::new(inv, u))
    }
}

/// A map of the plane that [`warp_image`] can pull pixels through.
#[derive(Debug, Clone, PartialEq)]
pub enum PlaneMap {
    Projective(Homography),
    Affine(AffineMap2D),
}

impl PlaneMap {
    /// `None` on the pole line.
    pub fn apply(&self, p: [f64; 2]) -> Option<[f64; 2]> {
        match self {
            PlaneMap::Projective(h) => h.apply(p).ok(),
            PlaneMap::Affine(a) => Some(a.apply(p)),
        }
    }

    pub fn inverse(&self) -> Result<PlaneMap, WarpError> {
        Ok(match self {
            PlaneMap::Projective(h) => PlaneMap::Projective(h.inverse()),
            PlaneMap::Affine(a) => PlaneMap::Affine(a.inverse()?),
        })
    }
}

pub fn apply_homography(h: &Homography, p: [f64; 2]) -> Result<[f64; 2], ConvexityError> {
    h.apply(p)
}

/// Per-component best affine maps on an admissible triangle.
#[derive(Debug, Clone, Serialize)]
pub struct BestAffineMap {
    pub map: AffineMap2D,
    pub d: [f64; 2],
    pub components: Vec<ApproximationResult>,
    pub report: AdmissibilityReport,
}

pub fn best_affine_map(h: &Homography, tri: &Simplex) -> Result<BestAffineMap, WarpError> {
    let report = triangle_admissible(h, tri)?;
    if !report.admissible {
        return Err(WarpError::NotAdmissible {
            report: Box::new(report),
        });
    }
    let tol = ToleranceConfig::default();
    let mut components = Vec::with_capacity(2);
    for c in &report.components {
        let field = component_field(h, c.component);
        let semidefinite = c.hessian_class.and_then(|k| k.convexity()).is_some();
        let result = if semidefinite {
            best_affine(tri, &field, c.convexity)?
        } else {
            best_affine_dominated(tri, &field, &tol)?
        };
        components.push(result);
    }
    let map = AffineMap2D {
        components: [components[0].sigma.clone(), components[1].sigma.clone()],
    };
    Ok(BestAffineMap {
        map,
        d: [components[0].d, components[1].d],
        components,
        report,
    })
}

/// Tangent map `P(c) + J_P(c)(x − c)`.
pub fn taylor_affine(h: &Homography, center: [f64; 2]) -> Result<AffineMap2D, ConvexityError> {
    let p = h.apply(center)?;
    let j = h.jacobian(center)?;
    let t = [
        p[0] - j[0][0] * center[0] - j[0][1] * center[1],
        p[1] - j[1][0] * center[0] - j[1][1] * center[1],
    ];
    Ok(AffineMap2D::new(j, t))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sampling {
    Nearest,
    #[default]
    Bilinear,
}

impl std::str::FromStr for Sampling {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "nearest" => Ok(Sampling::Nearest),
            "bilinear" => Ok(Sampling::Bilinear),
            other => Err(format!("unknown sampling `{other}`")),
        }
    }
}

/// Inverse-mapping warp. Output pixel `(i, j)` has center `(i + ½, j + ½)`;
/// it is pulled back through `map⁻¹` and sampled from `src`. Pixels that
/// land outside `src` or on the pole are black.
pub fn warp_image(
    src: &Image,
    map: &PlaneMap,
    out_width: usize,
    out_height: usize,
    sampling: Sampling,
) -> Result<Image, WarpError> {
    let inverse = map.inverse()?;
    let mut out = Image::blank(out_width, out_height, src.channels())?;
    let ch = src.channels();
    out.data_mut()
        .par_chunks_mut(out_width * ch)
        .enumerate()
        .for_each(|(row, line)| {
            for col in 0..out_width {
                let center = [col as f64 + 0.5, row as f64 + 0.5];
                let Some(q) = inverse.apply(center) else { continue };
                let px = &mut line[col * ch..(col + 1) * ch];
                match sampling {
                    Sampling::Nearest => sample_nearest(src, q, px),
                    Sampling::Bilinear => sample_bilinear(src, q, px),
                }
            }
        });
    Ok(out)
}

fn inside(src: &Image, q: [f64; 2]) -> bool {
    q[0] >= 0.0 && q[1] >= 0.0 && q[0] < src.width() as f64 && q[1] < src.height() as f64
}

fn sample_nearest(src: &Image, q: [f64; 2], px: &mut [u8]) {
    if inside(src, q) {
        px.copy_from_slice(src.pixel(q[0] as usize, q[1] as usize));
    }
}

fn sample_bilinear(src: &Image, q: [f64; 2], px: &mut [u8]) {
    if !inside(src, q) {
        return;
    }
    let (w, h) = (src.width() as isize, src.height() as isize);
    let (u, v) = (q[0] - 0.5, q[1] - 0.5);
    let (x0, y0) = (u.floor(), v.floor());
    let (fx, fy) = (u - x0, v - y0);
    let clamp = |a: f64, hi: isize| (a as isize).clamp(0, hi - 1) as usize;
    let (xa, xb) = (clamp(x0, w), clamp(x0 + 1.0, w));
    let (ya, yb) = (clamp(y0, h), clamp(y0 + 1.0, h));
    for (k, out) in px.iter_mut().enumerate() {
        let s = |x: usize, y: usize| f64::from(src.pixel(x, y)[k]);
        let top = s(xa, ya) * (1.0 - fx) + s(xb, ya) * fx;
        let bottom = s(xa, yb) * (1.0 - fx) + s(xb, yb) * fx;
        *out = (top * (1.0 - fy) + bottom * fy).round().clamp(0.0, 255.0) as u8;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WarpErrorStats {
    pub sup_px: f64,
    pub mean_px: f64,
    pub d1: f64,
    pub d2: f64,
    pub samples: usize,
}

/// Statistics of `‖P(x) − A(x)‖₂` over the barycentric lattice of `tri`.
pub fn displacement_error(
    h: &Homography,
    a: &AffineMap2D,
    tri: &Simplex,
    grid_n: usize,
) -> Result<WarpErrorStats, WarpError> {
    let lattice = tri.lattice(grid_n.max(1));
    let rows: Vec<[f64; 2]> = lattice
        .par_iter()
        .map(|lp| {
            let x = [lp.point[0], lp.point[1]];
            let p = h.apply(x)?;
            let q = a.apply(x);
            Ok([p[0] - q[0], p[1] - q[1]])
        })
        .collect::<Result<_, ConvexityError>>()?;
    let mut stats = WarpErrorStats {
        sup_px: 0.0,
        mean_px: 0.0,
        d1: 0.0,
        d2: 0.0,
        samples: rows.len(),
    };
    for r in &rows {
        let norm = r[0].hypot(r[1]);
        stats.sup_px = stats.sup_px.max(norm);
        stats.mean_px += norm;
        stats.d1 = stats.d1.max(r[0].abs());
        stats.d2 = stats.d2.max(r[1].abs());
    }
    stats.mean_px /= rows.len() as f64;
    Ok(stats)
}
