/// Numerical thresholds shared across the crate.
///
/// Defaults are the values used by the CLI; tests may tighten or loosen
/// individual entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ToleranceConfig {
    /// Smallest accepted reciprocal condition number of the vertex matrix `[a_i^T 1]`.
    pub simplex_rcond_min: f64,
    /// Barycentric coordinates down to `-boundary` still count as inside.
    pub boundary: f64,
    /// Relative residual allowed when interpolating at the vertices.
    pub interpolation: f64,
    /// Lattice subdivisions used to seed the extremal search.
    pub scan_subdivisions: usize,
    /// Number of separated lattice seeds refined by descent.
    pub descent_starts: usize,
    pub descent_max_iter: usize,
    /// Descent stops once one step improves the objective by less than this.
    pub descent_improvement: f64,
    /// Residual on the wrong side of the secant that counts as a convexity violation.
    pub convexity_violation: f64,
    /// Sign tolerance for secant dominance.
    pub dominance: f64,
    /// Extremal shifts below this (relative to vertex values) are treated as zero.
    pub affine_zero: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            simplex_rcond_min: 1e-10,
            boundary: 1e-10,
            interpolation: 1e-9,
            scan_subdivisions: 64,
            descent_starts: 4,
            descent_max_iter: 200,
            descent_improvement: 1e-12,
            convexity_violation: 1e-8,
            dominance: 1e-9,
            affine_zero: 1e-13,
        }
    }
}
