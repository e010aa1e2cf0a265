//! Closed-form dynamo families on the half-plane, their growth rate and
//! reversal lines, plus the restoring-force residual of the non-geodesic
//! flow equation and the geodesic-deviation solution.
//!
//! Two families are implemented:
//!
//! * force-free (vertical flow Uʸ = V₀y²):
//!   Aˣ = A⁰ e^{γt + K y⁻²}, Aʸ = A⁰ y² e^{−ηλ²t}, γ(η) = V₀K − λ²η
//! * forced (horizontal flow Uˣ = V⁰):
//!   Aˣ = y² e^{x(γy⁻¹ − V₀y⁻²) + γt}, Aʸ ≡ 0
//!
//! The separation constant K is an independent parameter. It is not the
//! Gaussian curvature (which is −1 here): the fast-dynamo threshold
//! V₀ ≥ ηλ²/K only makes sense for K > 0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::HalfPlanePoint;

/// Exponent magnitude beyond which closed-form evaluation refuses to run:
/// the y → 0 behaviour of the exponentials is genuinely singular, and an
/// explicit range error beats a silent infinity.
pub const EXP_ARG_LIMIT: f64 = 700.0;

#[inline]
fn checked_exp(arg: f64) -> Result<f64> {
    if !arg.is_finite() || arg.abs() > EXP_ARG_LIMIT {
        return Err(Error::ExponentRange { arg, limit: EXP_ARG_LIMIT });
    }
    Ok(arg.exp())
}

/// Parameters of the force-free family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForceFreeParams {
    /// Amplitude A⁰.
    pub a0: f64,
    /// Separation constant K in the exponent and the growth rate.
    pub k_sep: f64,
    /// Eigenvalue parameter λ of the −λ² substitution.
    pub lambda: f64,
    /// Diffusivity η ≥ 0 (inverse magnetic Reynolds number).
    pub eta: f64,
    /// Flow amplitude V₀.
    pub v0: f64,
}

impl ForceFreeParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.a0, self.k_sep, self.lambda, self.eta, self.v0];
        if !all.iter().all(|v| v.is_finite()) {
            return Err(Error::DegenerateParameter("non-finite parameter".into()));
        }
        if self.eta < 0.0 {
            return Err(Error::DegenerateParameter(format!(
                "eta must be >= 0, got {}",
                self.eta
            )));
        }
        Ok(())
    }
}

/// Parameters of the forced family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForcedParams {
    /// Growth rate γ (any sign accepted; a decaying dynamo has γ < 0).
    pub gamma: f64,
    /// Flow constant V₀ = V⁰.
    pub v0: f64,
    /// Diffusivity η ≥ 0.
    pub eta: f64,
}

impl ForcedParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma.is_finite() && self.v0.is_finite() && self.eta.is_finite()) {
            return Err(Error::DegenerateParameter("non-finite parameter".into()));
        }
        if self.eta < 0.0 {
            return Err(Error::DegenerateParameter(format!(
                "eta must be >= 0, got {}",
                self.eta
            )));
        }
        Ok(())
    }
}

/// γ(η) = V₀K − λ²η. The dynamo is fast when the η → 0 limit stays ≥ 0.
pub fn growth_rate(p: &ForceFreeParams) -> f64 {
    p.v0 * p.k_sep - p.lambda * p.lambda * p.eta
}

/// Force-free potential (Aˣ, Aʸ) at a point and time.
pub fn force_free_potential(p: &HalfPlanePoint, t: f64, params: &ForceFreeParams) -> Result<(f64, f64)> {
    let y = p.y();
    let gamma = growth_rate(params);
    let ax = params.a0 * checked_exp(gamma * t + params.k_sep / (y * y))?;
    let ay = params.a0 * y * y * checked_exp(-params.eta * params.lambda * params.lambda * t)?;
    Ok((ax, ay))
}

/// Two-form coefficient of the force-free family, as printed:
/// B_z = 2A⁰(−2y⁻³ + y⁻⁴)(sinh + cosh)(Ky⁻²) e^{γt}, with sinh + cosh
/// combined into a single exponential so large negative arguments cannot
/// cancel catastrophically.
pub fn force_free_bz(p: &HalfPlanePoint, t: f64, params: &ForceFreeParams) -> Result<f64> {
    let y = p.y();
    let gamma = growth_rate(params);
    let bracket = -2.0 / y.powi(3) + 1.0 / y.powi(4);
    let expo = checked_exp(params.k_sep / (y * y) + gamma * t)?;
    Ok(2.0 * params.a0 * bracket * expo)
}

/// The force-free reversal line y₀ = 1/2: root of −2y⁻¹ + y⁻² = 0 and of
/// the two-form bracket −2y⁻³ + y⁻⁴.
pub fn reversal_line_force_free() -> f64 {
    0.5
}

/// Forced potential Aˣ (Aʸ vanishes identically in this family).
pub fn forced_potential(p: &HalfPlanePoint, t: f64, params: &ForcedParams) -> Result<f64> {
    let y = p.y();
    let arg = p.x() * (params.gamma / y - params.v0 / (y * y)) + params.gamma * t;
    Ok(y * y * checked_exp(arg)?)
}

/// Two-form coefficient of the forced family:
/// B_z = 2y⁻²·x·Aˣ·(γ − ½V₀y⁻¹), with Aˣ taken directly from
/// [`forced_potential`]. The lowered-component alternative differs by y⁻²
/// and is quantified by the discrepancy harness, not silently adopted.
pub fn forced_bz(p: &HalfPlanePoint, t: f64, params: &ForcedParams) -> Result<f64> {
    let y = p.y();
    let a = forced_potential(p, t, params)?;
    Ok(2.0 / (y * y) * p.x() * a * (params.gamma - 0.5 * params.v0 / y))
}

/// Reversal line of the forced family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForcedReversalLine {
    /// y₀ = V₀/(2γ).
    pub y0: f64,
    /// Whether y₀ lies in the half-plane (y₀ > 0).
    pub physical: bool,
}

/// Solve γ·y₀ = V₀/2 for the forced reversal line; γ = 0 is degenerate.
pub fn reversal_line_forced(params: &ForcedParams) -> Result<ForcedReversalLine> {
    if params.gamma == 0.0 {
        return Err(Error::DegenerateParameter(
            "reversal line undefined for gamma = 0".into(),
        ));
    }
    let y0 = params.v0 / (2.0 * params.gamma);
    Ok(ForcedReversalLine { y0, physical: y0 > 0.0 })
}

/// Vertical flow profile choices for the non-geodesic residual.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerticalFlowProfile {
    /// Vʸ = y², the closed-form dynamo flow.
    Parabolic,
    /// Vʸ ≡ 0 (control case).
    Zero,
}

impl VerticalFlowProfile {
    fn value_and_slope(self, y: f64) -> (f64, f64) {
        match self {
            VerticalFlowProfile::Parabolic => (y * y, 2.0 * y),
            VerticalFlowProfile::Zero => (0.0, 0.0),
        }
    }
}

/// Readings of d/ds in the non-geodesic equation. Neither is asserted to
/// close the published force pairing; the residual is reported as measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowDerivative {
    /// s is the flow parameter: dy/ds = Vʸ, so dVʸ/ds = (dVʸ/dy)·Vʸ.
    FlowParameter,
    /// s is metric arc length: dy/ds = Vʸ/|V|_g with |V|_g = |Vʸ|/y.
    ArcLength,
}

/// Residual of dVʸ/ds + Γ²₂₂(Vʸ)² − F against a claimed force value.
///
/// For the parabolic profile under the flow-parameter reading the left side
/// is y³, so against the claimed F(y) = −y the residual is y³ + y — it is
/// reported, never asserted zero.
pub fn nongeodesic_residual(
    y: f64,
    profile: VerticalFlowProfile,
    mode: FlowDerivative,
    force_claimed: f64,
) -> Result<f64> {
    if !(y > 0.0) || !y.is_finite() {
        return Err(Error::OffChart { x: 0.0, y, min_y: 0.0 });
    }
    let (vy, dvy_dy) = profile.value_and_slope(y);
    let dy_ds = match mode {
        FlowDerivative::FlowParameter => vy,
        FlowDerivative::ArcLength => {
            // |V|_g = sqrt(g_yy)·|Vʸ| = |Vʸ|/y; the zero profile moves nowhere
            if vy == 0.0 {
                0.0
            } else {
                y * vy.signum()
            }
        }
    };
    let gamma_y_yy = -1.0 / y;
    let lhs = dvy_dy * dy_ds + gamma_y_yy * vy * vy;
    Ok(lhs - force_claimed)
}

/// The claimed restoring force F(y) = −y paired with the parabolic profile.
pub fn restoring_force_claimed(y: f64) -> f64 {
    -y
}

/// Geodesic-deviation closed form J(s) = J₀ sinh(s) on the unit-curvature
/// hyperbolic plane (√−K = 1).
pub fn deviation_solution(s: f64, j0: f64) -> f64 {
    j0 * s.sinh()
}
