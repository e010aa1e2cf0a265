//! Exact differential geometry of the Lobachevsky plane, modelled as the
//! Poincaré upper half-plane {(x, y) : y > 0} with metric
//!
//! ```text
//! ds² = y⁻² (dx² + dy²)
//! ```
//!
//! All closed forms here are authoritative; the finite-difference curvature
//! is an independent verification instrument, never the primary route.
//! Coordinate indices are 0 ↔ x, 1 ↔ y throughout.

use crate::error::{Error, Result};

/// Smallest admissible y coordinate. Keeps y⁻⁴ finite in f64; violations are
/// domain errors, never silent clamps.
pub const DEFAULT_MIN_Y: f64 = 1e-6;

/// A point on the upper half-plane. Construction enforces the chart bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPlanePoint {
    x: f64,
    y: f64,
}

impl HalfPlanePoint {
    /// Point with the default admissible-y floor.
    pub fn new(x: f64, y: f64) -> Result<Self> {
        Self::with_min_y(x, y, DEFAULT_MIN_Y)
    }

    /// Point with a caller-chosen admissible-y floor (must be > 0).
    pub fn with_min_y(x: f64, y: f64, min_y: f64) -> Result<Self> {
        if !(min_y > 0.0) {
            return Err(Error::DegenerateParameter(format!(
                "min_y must be positive, got {min_y}"
            )));
        }
        if !x.is_finite() || !y.is_finite() || y < min_y {
            return Err(Error::OffChart { x, y, min_y });
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }
}

/// Metric quantities at a point, exact closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSample {
    /// g₁₁ = y⁻²
    pub g11: f64,
    /// g₂₂ = y⁻²
    pub g22: f64,
    /// √det g = y⁻² (equals g11 for this conformal metric, bit for bit)
    pub sqrt_g: f64,
    /// g¹¹ = y²
    pub g_inv11: f64,
    /// g²² = y²
    pub g_inv22: f64,
}

impl MetricSample {
    /// Metric determinant g = y⁻⁴, formed from the stored √g.
    pub fn det(&self) -> f64 {
        self.sqrt_g * self.sqrt_g
    }
}

/// The full Γⁱⱼₖ symbol set. Only three independent components are nonzero:
/// Γ¹₁₂ = Γ²₂₂ = −1/y and Γ²₁₁ = +1/y.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChristoffelSet {
    sym: [[[f64; 2]; 2]; 2],
}

impl ChristoffelSet {
    /// Γⁱⱼₖ with indices 0 ↔ x, 1 ↔ y. Symmetric in (j, k).
    pub fn component(&self, i: usize, j: usize, k: usize) -> f64 {
        self.sym[i][j][k]
    }

    /// Γ¹₁₂ = −1/y
    pub fn gamma_x_xy(&self) -> f64 {
        self.sym[0][0][1]
    }

    /// Γ²₂₂ = −1/y
    pub fn gamma_y_yy(&self) -> f64 {
        self.sym[1][1][1]
    }

    /// Γ²₁₁ = +1/y
    pub fn gamma_y_xx(&self) -> f64 {
        self.sym[1][0][0]
    }

    /// Contracted symbol Γʲₖⱼ (summed over j) for k ∈ {0, 1}.
    /// Equals ∂ₖ ln √g: zero for k = x, −2/y for k = y.
    pub fn contracted(&self, k: usize) -> f64 {
        self.sym[0][k][0] + self.sym[1][k][1]
    }
}

/// Metric quantities at `p`, exact closed form (no differencing).
pub fn metric_at(p: &HalfPlanePoint) -> MetricSample {
    let y2 = p.y() * p.y();
    let inv_y2 = 1.0 / y2;
    MetricSample {
        g11: inv_y2,
        g22: inv_y2,
        sqrt_g: inv_y2,
        g_inv11: y2,
        g_inv22: y2,
    }
}

/// Connection coefficients at `p`, exact closed form.
pub fn christoffel_at(p: &HalfPlanePoint) -> ChristoffelSet {
    let inv_y = 1.0 / p.y();
    let mut sym = [[[0.0; 2]; 2]; 2];
    sym[0][0][1] = -inv_y; // Γ¹₁₂
    sym[0][1][0] = -inv_y; // Γ¹₂₁ (symmetry)
    sym[1][1][1] = -inv_y; // Γ²₂₂
    sym[1][0][0] = inv_y; // Γ²₁₁
    ChristoffelSet { sym }
}

/// ∂_y Γⁱⱼₖ, exact closed form (all x-derivatives vanish). Nonzero entries:
/// ∂_yΓ¹₁₂ = ∂_yΓ²₂₂ = +1/y², ∂_yΓ²₁₁ = −1/y².
pub fn christoffel_dy_at(p: &HalfPlanePoint) -> [[[f64; 2]; 2]; 2] {
    let inv_y2 = 1.0 / (p.y() * p.y());
    let mut d = [[[0.0; 2]; 2]; 2];
    d[0][0][1] = inv_y2;
    d[0][1][0] = inv_y2;
    d[1][1][1] = inv_y2;
    d[1][0][0] = -inv_y2;
    d
}

/// Fully lowered curvature component R₁₂₁₂ = −y⁻⁴.
pub fn riemann_1212_at(p: &HalfPlanePoint) -> f64 {
    let inv_y2 = 1.0 / (p.y() * p.y());
    -(inv_y2 * inv_y2)
}

/// Gaussian curvature K = R₁₂₁₂ / det g. The quotient is formed from the
/// same floating-point factors, so the result is exactly −1 at every point.
pub fn gaussian_curvature_at(p: &HalfPlanePoint) -> f64 {
    let det = metric_at(p).det();
    riemann_1212_at(p) / det
}

/// Independent finite-difference curvature oracle.
///
/// For a conformal metric λ²(dx² + dy²) the curvature is
/// K = −Δ_flat(ln λ) / λ². The flat Laplacian is discretised with the
/// five-point-per-axis central stencil reaching ±2h (the reach matches the
/// `y − 2h > 0` precondition) applied to differences ln λ(p_k) − ln λ(p₀),
/// which are taken as ½·ln(g₁₁(p_k)/g₁₁(p₀)) from metric samples so large
/// common terms never cancel in floating point. Converges at least at
/// second order in h.
pub fn gaussian_curvature_fd(p: &HalfPlanePoint, h: f64) -> Result<f64> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::DegenerateParameter(format!(
            "fd step must be positive, got {h}"
        )));
    }
    let (x, y) = (p.x(), p.y());
    if y - 2.0 * h <= 0.0 {
        return Err(Error::StencilOffChart { y, h });
    }
    let g11 = |xx: f64, yy: f64| -> Result<f64> {
        Ok(metric_at(&HalfPlanePoint::with_min_y(xx, yy, f64::MIN_POSITIVE)?).g11)
    };
    let g0 = g11(x, y)?;
    // Σ w_k [ln λ(p_k) − ln λ(p₀)], the −30·f₀ weight absorbed by Σw = 30
    let mut acc = 0.0;
    for (off, w) in [(-2.0, -1.0), (-1.0, 16.0), (1.0, 16.0), (2.0, -1.0)] {
        acc += w * 0.5 * (g11(x + off * h, y)? / g0).ln();
        acc += w * 0.5 * (g11(x, y + off * h)? / g0).ln();
    }
    let laplacian = acc / (12.0 * h * h);
    // divide by λ² = g₁₁
    Ok(-laplacian / g0)
}
