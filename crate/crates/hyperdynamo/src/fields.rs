//! Field algebra on a truncated half-plane grid: index lowering, the discrete
//! exterior derivative B = dA, the covariant divergence, and the covariant
//! vector Laplacian expanded through the connection coefficients.
//!
//! Discretisation: second-order central differences in the interior,
//! second-order one-sided stencils on the edges. Grids are uniform; storage
//! is row-major with x outer and y inner (`idx = i·ny + j`), which the CSV
//! writer preserves so golden files are portable byte for byte.

use std::io::{self, BufRead, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{christoffel_at, ChristoffelSet, HalfPlanePoint};

/// Below this node count the stencil passes stay sequential; the rayon
/// dispatch overhead would dominate. Results are identical either way.
const PAR_MIN_NODES: usize = 1 << 14;

/// Uniform tensor-product grid on [x_min, x_max] × [y_min, y_max], y_min > 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
    nx: usize,
    ny: usize,
    hx: f64,
    hy: f64,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite() && y_min.is_finite() && y_max.is_finite()) {
            return Err(Error::InvalidGrid("grid bounds must be finite".into()));
        }
        if !(x_min < x_max) {
            return Err(Error::InvalidGrid(format!(
                "x_min must be < x_max, got [{x_min}, {x_max}]"
            )));
        }
        if !(y_min > 0.0 && y_min < y_max) {
            return Err(Error::InvalidGrid(format!(
                "need 0 < y_min < y_max, got [{y_min}, {y_max}]"
            )));
        }
        if nx < 4 || ny < 4 {
            return Err(Error::InvalidGrid(format!(
                "need nx >= 4 and ny >= 4, got {nx}x{ny}"
            )));
        }
        // every node must be a valid chart point
        HalfPlanePoint::new(x_min, y_min)?;
        let hx = (x_max - x_min) / (nx - 1) as f64;
        let hy = (y_max - y_min) / (ny - 1) as f64;
        Ok(Self { x_min, x_max, y_min, y_max, nx, ny, hx, hy })
    }

    pub fn x_min(&self) -> f64 { self.x_min }
    pub fn x_max(&self) -> f64 { self.x_max }
    pub fn y_min(&self) -> f64 { self.y_min }
    pub fn y_max(&self) -> f64 { self.y_max }
    pub fn nx(&self) -> usize { self.nx }
    pub fn ny(&self) -> usize { self.ny }
    pub fn hx(&self) -> f64 { self.hx }
    pub fn hy(&self) -> f64 { self.hy }
    pub fn len(&self) -> usize { self.nx * self.ny }
    pub fn is_empty(&self) -> bool { false }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.ny + j
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.hx
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        self.y_min + j as f64 * self.hy
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let sx = 1e-12 * (self.x_max - self.x_min);
        let sy = 1e-12 * (self.y_max - self.y_min);
        x >= self.x_min - sx && x <= self.x_max + sx && y >= self.y_min - sy && y <= self.y_max + sy
    }

    /// y coordinates of every row, in index order.
    pub fn y_values(&self) -> Vec<f64> {
        (0..self.ny).map(|j| self.y(j)).collect()
    }
}

/// Scalar samples on a grid. Values are immutable after construction and
/// always finite.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        let n = grid.len();
        Self { grid, values: vec![0.0; n] }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidField(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidField("non-finite value".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.nx() {
            let x = grid.x(i);
            for j in 0..grid.ny() {
                values.push(f(x, grid.y(j)));
            }
        }
        Self::from_values(grid, values)
    }

    /// Like `from_fn` for sampled closed forms that can overflow.
    pub fn try_from_fn(grid: Grid, f: impl Fn(f64, f64) -> Result<f64>) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.nx() {
            let x = grid.x(i);
            for j in 0..grid.ny() {
                values.push(f(x, grid.y(j))?);
            }
        }
        Self::from_values(grid, values)
    }

    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    pub fn scaled(&self, c: f64) -> ScalarField {
        ScalarField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Contravariant vector potential (Aˣ, Aʸ) sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorPotentialField {
    ax: ScalarField,
    ay: ScalarField,
}

impl VectorPotentialField {
    pub fn new(ax: ScalarField, ay: ScalarField) -> Result<Self> {
        if ax.grid() != ay.grid() {
            return Err(Error::InvalidField("components on different grids".into()));
        }
        Ok(Self { ax, ay })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { ax: ScalarField::zeros(grid.clone()), ay: ScalarField::zeros(grid) }
    }

    /// Sample a closed-form (Aˣ, Aʸ) that may overflow near y → 0.
    pub fn try_sample(grid: Grid, f: impl Fn(f64, f64) -> Result<(f64, f64)>) -> Result<Self> {
        let mut vx = Vec::with_capacity(grid.len());
        let mut vy = Vec::with_capacity(grid.len());
        for i in 0..grid.nx() {
            let x = grid.x(i);
            for j in 0..grid.ny() {
                let (ax, ay) = f(x, grid.y(j))?;
                vx.push(ax);
                vy.push(ay);
            }
        }
        Ok(Self {
            ax: ScalarField::from_values(grid.clone(), vx)?,
            ay: ScalarField::from_values(grid, vy)?,
        })
    }

    pub fn grid(&self) -> &Grid {
        self.ax.grid()
    }

    pub fn ax(&self) -> &ScalarField {
        &self.ax
    }

    pub fn ay(&self) -> &ScalarField {
        &self.ay
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { ax: self.ax.scaled(c), ay: self.ay.scaled(c) }
    }
}

/// Magnetic 2-form, represented by the coefficient B_z of dx∧dy.
#[derive(Debug, Clone, PartialEq)]
pub struct MagneticTwoForm {
    bz: ScalarField,
}

impl MagneticTwoForm {
    pub fn new(bz: ScalarField) -> Self {
        Self { bz }
    }

    pub fn bz(&self) -> &ScalarField {
        &self.bz
    }

    pub fn grid(&self) -> &Grid {
        self.bz.grid()
    }

    /// The uniform reference form y⁻² dx∧dy.
    pub fn uniform_reference(grid: Grid) -> Self {
        let f = ScalarField::from_fn(grid, |_, y| 1.0 / (y * y)).expect("finite on valid grid");
        Self { bz: f }
    }
}

/// Vector component selector; 0 ↔ x, 1 ↔ y as everywhere in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    X,
    Y,
}

impl Component {
    pub(crate) fn index(self) -> usize {
        match self {
            Component::X => 0,
            Component::Y => 1,
        }
    }
}

// ---------------------------------------------------------------------------
// derivative kernels
// ---------------------------------------------------------------------------

/// d/dx: central interior, second-order one-sided at the x edges.
pub(crate) fn deriv_x_into(v: &[f64], nx: usize, ny: usize, hx: f64, out: &mut [f64]) {
    let inv_two_hx = 1.0 / (2.0 * hx);
    let body = |i: usize, col: &mut [f64]| {
        if i == 0 {
            for j in 0..ny {
                col[j] = (-3.0 * v[j] + 4.0 * v[ny + j] - v[2 * ny + j]) * inv_two_hx;
            }
        } else if i == nx - 1 {
            let b = (nx - 1) * ny;
            for j in 0..ny {
                col[j] = (3.0 * v[b + j] - 4.0 * v[b - ny + j] + v[b - 2 * ny + j]) * inv_two_hx;
            }
        } else {
            let prev = &v[(i - 1) * ny..i * ny];
            let next = &v[(i + 1) * ny..(i + 2) * ny];
            for j in 0..ny {
                col[j] = (next[j] - prev[j]) * inv_two_hx;
            }
        }
    };
    if nx * ny >= PAR_MIN_NODES {
        out.par_chunks_mut(ny).enumerate().for_each(|(i, col)| body(i, col));
    } else {
        out.chunks_mut(ny).enumerate().for_each(|(i, col)| body(i, col));
    }
}

/// d/dx with periodic identification in x (node nx−1 adjacent to node 0).
pub(crate) fn deriv_x_periodic_into(v: &[f64], nx: usize, ny: usize, hx: f64, out: &mut [f64]) {
    let inv_two_hx = 1.0 / (2.0 * hx);
    let body = |i: usize, col: &mut [f64]| {
        let ip = if i + 1 == nx { 0 } else { i + 1 };
        let im = if i == 0 { nx - 1 } else { i - 1 };
        let next = &v[ip * ny..ip * ny + ny];
        let prev = &v[im * ny..im * ny + ny];
        for j in 0..ny {
            col[j] = (next[j] - prev[j]) * inv_two_hx;
        }
    };
    if nx * ny >= PAR_MIN_NODES {
        out.par_chunks_mut(ny).enumerate().for_each(|(i, col)| body(i, col));
    } else {
        out.chunks_mut(ny).enumerate().for_each(|(i, col)| body(i, col));
    }
}

/// d/dy: central interior, second-order one-sided at the y edges.
pub(crate) fn deriv_y_into(v: &[f64], nx: usize, ny: usize, hy: f64, out: &mut [f64]) {
    let inv_two_hy = 1.0 / (2.0 * hy);
    let body = |src: &[f64], col: &mut [f64]| {
        col[0] = (-3.0 * src[0] + 4.0 * src[1] - src[2]) * inv_two_hy;
        for j in 1..ny - 1 {
            col[j] = (src[j + 1] - src[j - 1]) * inv_two_hy;
        }
        col[ny - 1] = (3.0 * src[ny - 1] - 4.0 * src[ny - 2] + src[ny - 3]) * inv_two_hy;
    };
    if nx * ny >= PAR_MIN_NODES {
        out.par_chunks_mut(ny)
            .zip(v.par_chunks(ny))
            .for_each(|(col, src)| body(src, col));
    } else {
        out.chunks_mut(ny).zip(v.chunks(ny)).for_each(|(col, src)| body(src, col));
    }
}

/// d²/dx²: central interior, second-order one-sided at the x edges.
pub(crate) fn deriv2_x_into(v: &[f64], nx: usize, ny: usize, hx: f64, out: &mut [f64]) {
    let inv_hx2 = 1.0 / (hx * hx);
    let body = |i: usize, col: &mut [f64]| {
        if i == 0 {
            for j in 0..ny {
                col[j] =
                    (2.0 * v[j] - 5.0 * v[ny + j] + 4.0 * v[2 * ny + j] - v[3 * ny + j]) * inv_hx2;
            }
        } else if i == nx - 1 {
            let b = (nx - 1) * ny;
            for j in 0..ny {
                col[j] = (2.0 * v[b + j] - 5.0 * v[b - ny + j] + 4.0 * v[b - 2 * ny + j]
                    - v[b - 3 * ny + j])
                    * inv_hx2;
            }
        } else {
            let prev = &v[(i - 1) * ny..i * ny];
            let mid = &v[i * ny..(i + 1) * ny];
            let next = &v[(i + 1) * ny..(i + 2) * ny];
            for j in 0..ny {
                col[j] = (next[j] - 2.0 * mid[j] + prev[j]) * inv_hx2;
            }
        }
    };
    if nx * ny >= PAR_MIN_NODES {
        out.par_chunks_mut(ny).enumerate().for_each(|(i, col)| body(i, col));
    } else {
        out.chunks_mut(ny).enumerate().for_each(|(i, col)| body(i, col));
    }
}

/// d²/dx² with periodic identification in x.
pub(crate) fn deriv2_x_periodic_into(v: &[f64], nx: usize, ny: usize, hx: f64, out: &mut [f64]) {
    let inv_hx2 = 1.0 / (hx * hx);
    let body = |i: usize, col: &mut [f64]| {
        let ip = if i + 1 == nx { 0 } else { i + 1 };
        let im = if i == 0 { nx - 1 } else { i - 1 };
        let next = &v[ip * ny..ip * ny + ny];
        let mid = &v[i * ny..i * ny + ny];
        let prev = &v[im * ny..im * ny + ny];
        for j in 0..ny {
            col[j] = (next[j] - 2.0 * mid[j] + prev[j]) * inv_hx2;
        }
    };
    if nx * ny >= PAR_MIN_NODES {
        out.par_chunks_mut(ny).enumerate().for_each(|(i, col)| body(i, col));
    } else {
        out.chunks_mut(ny).enumerate().for_each(|(i, col)| body(i, col));
    }
}

/// d²/dy²: central interior, second-order one-sided at the y edges.
pub(crate) fn deriv2_y_into(v: &[f64], nx: usize, ny: usize, hy: f64, out: &mut [f64]) {
    let inv_hy2 = 1.0 / (hy * hy);
    let body = |src: &[f64], col: &mut [f64]| {
        col[0] = (2.0 * src[0] - 5.0 * src[1] + 4.0 * src[2] - src[3]) * inv_hy2;
        for j in 1..ny - 1 {
            col[j] = (src[j + 1] - 2.0 * src[j] + src[j - 1]) * inv_hy2;
        }
        col[ny - 1] =
            (2.0 * src[ny - 1] - 5.0 * src[ny - 2] + 4.0 * src[ny - 3] - src[ny - 4]) * inv_hy2;
    };
    if nx * ny >= PAR_MIN_NODES {
        out.par_chunks_mut(ny)
            .zip(v.par_chunks(ny))
            .for_each(|(col, src)| body(src, col));
    } else {
        out.chunks_mut(ny).zip(v.chunks(ny)).for_each(|(col, src)| body(src, col));
    }
}

// ---------------------------------------------------------------------------
// operations
// ---------------------------------------------------------------------------

/// Lower the index with the metric: (A_x, A_y) = (y⁻²Aˣ, y⁻²Aʸ) at `p`,
/// bilinearly interpolated when `p` is not a node.
pub fn lower_index(a: &VectorPotentialField, p: &HalfPlanePoint) -> Result<(f64, f64)> {
    let g = a.grid();
    if !g.contains(p.x(), p.y()) {
        return Err(Error::OutOfGrid { x: p.x(), y: p.y() });
    }
    let interp = |f: &ScalarField| -> f64 {
        let tx = ((p.x() - g.x_min()) / g.hx()).clamp(0.0, (g.nx() - 1) as f64);
        let ty = ((p.y() - g.y_min()) / g.hy()).clamp(0.0, (g.ny() - 1) as f64);
        let i0 = (tx.floor() as usize).min(g.nx() - 2);
        let j0 = (ty.floor() as usize).min(g.ny() - 2);
        let fx = tx - i0 as f64;
        let fy = ty - j0 as f64;
        let v00 = f.value(i0, j0);
        let v10 = f.value(i0 + 1, j0);
        let v01 = f.value(i0, j0 + 1);
        let v11 = f.value(i0 + 1, j0 + 1);
        (1.0 - fx) * ((1.0 - fy) * v00 + fy * v01) + fx * ((1.0 - fy) * v10 + fy * v11)
    };
    let inv_y2 = 1.0 / (p.y() * p.y());
    Ok((inv_y2 * interp(a.ax()), inv_y2 * interp(a.ay())))
}

/// Discrete exterior derivative B = dA on the lowered (covariant) components:
/// B_z = ∂_x A_y − ∂_y A_x with A_i = g_ij Aʲ.
pub fn exterior_derivative(a: &VectorPotentialField) -> MagneticTwoForm {
    let g = a.grid().clone();
    let (nx, ny) = (g.nx(), g.ny());
    let mut ax_low = vec![0.0; g.len()];
    let mut ay_low = vec![0.0; g.len()];
    let inv_y2: Vec<f64> = (0..ny).map(|j| 1.0 / (g.y(j) * g.y(j))).collect();
    for i in 0..nx {
        let base = i * ny;
        for j in 0..ny {
            ax_low[base + j] = inv_y2[j] * a.ax().values()[base + j];
            ay_low[base + j] = inv_y2[j] * a.ay().values()[base + j];
        }
    }
    let mut dx_ay = vec![0.0; g.len()];
    let mut dy_ax = vec![0.0; g.len()];
    deriv_x_into(&ay_low, nx, ny, g.hx(), &mut dx_ay);
    deriv_y_into(&ax_low, nx, ny, g.hy(), &mut dy_ax);
    let bz: Vec<f64> = dx_ay.iter().zip(dy_ax.iter()).map(|(a, b)| a - b).collect();
    MagneticTwoForm::new(ScalarField::from_raw(g, bz))
}

/// Left-hand side of the solenoidal condition, as written:
/// ∂_x(√g Aˣ) + ∂_y(√g Aʸ), reported without a 1/√g prefactor.
pub fn covariant_divergence(a: &VectorPotentialField) -> ScalarField {
    let g = a.grid().clone();
    let (nx, ny) = (g.nx(), g.ny());
    let sqrt_g: Vec<f64> = (0..ny).map(|j| 1.0 / (g.y(j) * g.y(j))).collect();
    let mut p = vec![0.0; g.len()];
    let mut q = vec![0.0; g.len()];
    for i in 0..nx {
        let base = i * ny;
        for j in 0..ny {
            p[base + j] = sqrt_g[j] * a.ax().values()[base + j];
            q[base + j] = sqrt_g[j] * a.ay().values()[base + j];
        }
    }
    let mut dp = vec![0.0; g.len()];
    let mut dq = vec![0.0; g.len()];
    deriv_x_into(&p, nx, ny, g.hx(), &mut dp);
    deriv_y_into(&q, nx, ny, g.hy(), &mut dq);
    let div: Vec<f64> = dp.iter().zip(dq.iter()).map(|(a, b)| a + b).collect();
    ScalarField::from_raw(g, div)
}

/// Per-row contraction coefficients of the covariant Laplacian:
/// ∇²Aᶜ = d2·(Aᶜ,ₓₓ + Aᶜ,ᵧᵧ) + Σ da[l][k]·Aˡ,ₖ + Σ a[l]·Aˡ.
#[derive(Clone, Copy, Default)]
pub(crate) struct RowCoefs {
    pub d2: f64,
    pub da: [[f64; 2]; 2],
    pub a: [f64; 2],
}

/// Scratch buffers for the Laplacian kernel, reusable across steps.
pub(crate) struct LaplacianWorkspace {
    pub dax_dx: Vec<f64>,
    pub dax_dy: Vec<f64>,
    pub day_dx: Vec<f64>,
    pub day_dy: Vec<f64>,
    d2_dx: Vec<f64>,
    d2_dy: Vec<f64>,
    gammas: Vec<ChristoffelSet>,
    gamma_dys: Vec<[[[f64; 2]; 2]; 2]>,
    yv: Vec<f64>,
    y2: Vec<f64>,
}

impl LaplacianWorkspace {
    pub(crate) fn new(grid: &Grid) -> Self {
        let n = grid.len();
        let row_point = |j: usize| {
            HalfPlanePoint::with_min_y(grid.x_min(), grid.y(j), f64::MIN_POSITIVE)
                .expect("grid rows are on the chart")
        };
        let gammas = (0..grid.ny()).map(|j| christoffel_at(&row_point(j))).collect();
        let gamma_dys = (0..grid.ny())
            .map(|j| crate::geometry::christoffel_dy_at(&row_point(j)))
            .collect();
        let yv = (0..grid.ny()).map(|j| grid.y(j)).collect();
        let y2 = (0..grid.ny()).map(|j| grid.y(j) * grid.y(j)).collect();
        Self {
            dax_dx: vec![0.0; n],
            dax_dy: vec![0.0; n],
            day_dx: vec![0.0; n],
            day_dy: vec![0.0; n],
            d2_dx: vec![0.0; n],
            d2_dy: vec![0.0; n],
            gammas,
            gamma_dys,
            yv,
            y2,
        }
    }

    /// Fill the four comma-derivative arrays ∂_k Aⁱ.
    pub(crate) fn first_derivatives(&mut self, ax: &[f64], ay: &[f64], g: &Grid, periodic_x: bool) {
        let (nx, ny, hx, hy) = (g.nx(), g.ny(), g.hx(), g.hy());
        if periodic_x {
            deriv_x_periodic_into(ax, nx, ny, hx, &mut self.dax_dx);
            deriv_x_periodic_into(ay, nx, ny, hx, &mut self.day_dx);
        } else {
            deriv_x_into(ax, nx, ny, hx, &mut self.dax_dx);
            deriv_x_into(ay, nx, ny, hx, &mut self.day_dx);
        }
        deriv_y_into(ax, nx, ny, hy, &mut self.dax_dy);
        deriv_y_into(ay, nx, ny, hy, &mut self.day_dy);
    }

    /// Fold the connection contractions of the three Laplacian terms into
    /// per-row coefficients of the seven input arrays.
    pub(crate) fn row_coefficients(&self, comp: Component) -> Vec<RowCoefs> {
        let c = comp.index();
        (0..self.yv.len())
            .map(|j| {
                let gam = &self.gammas[j];
                let dgam = &self.gamma_dys[j];
                let y2 = self.y2[j];
                let two_y = 2.0 * self.yv[j];
                let mut cf = RowCoefs { d2: y2, ..Default::default() };
                // bracket divergence, product-rule form: Γ on the first
                // derivatives plus the y-derivative of the symbol itself
                for jd in 0..2 {
                    for l in 0..2 {
                        cf.da[l][jd] += y2 * gam.component(c, l, jd);
                        if jd == 1 {
                            cf.a[l] += y2 * dgam[c][l][1];
                        }
                    }
                }
                // gʸʸ,ᵧ = 2y against the y part of the bracket
                cf.da[c][1] += two_y;
                for m in 0..2 {
                    cf.a[m] += two_y * gam.component(c, m, 1);
                }
                // connection-on-derivative term
                for jj in 0..2 {
                    for k in 0..2 {
                        let w = y2 * gam.component(c, k, jj);
                        cf.da[k][jj] += w;
                        for m in 0..2 {
                            cf.a[m] += w * gam.component(k, m, jj);
                        }
                    }
                }
                // contracted-symbol term
                for k in 0..2 {
                    let w = y2 * gam.contracted(k);
                    cf.da[c][k] += w;
                    for m in 0..2 {
                        cf.a[m] += w * gam.component(c, m, k);
                    }
                }
                cf
            })
            .collect()
    }

    /// Covariant Laplacian of one component into `out`, assuming
    /// `first_derivatives` has been filled for the same state.
    ///
    /// Expanded term by term through the connection:
    ///
    /// ```text
    /// ∇²Aᶜ = [gʲᵏ(Aᶜ,ₖ + Γᶜₗₖ Aˡ)],ⱼ                    (divergence of the bracket)
    ///       + gʲˡ Γᶜₖⱼ (Aᵏ,ₗ + Γᵏₗₘ Aᵐ)                  (connection on the derivative)
    ///       + gᵏˡ Γʲₖⱼ (Aᶜ,ₗ + Γᶜₗₘ Aᵐ)                  (contracted-symbol term)
    /// ```
    ///
    /// The bracket divergence is expanded by the product rule before
    /// discretisation,
    ///
    /// ```text
    /// [gʲʲ(Aᶜ,ⱼ + Γᶜₗⱼ Aˡ)],ⱼ = gʲʲ Aᶜ,ⱼⱼ + gʲʲ(Γᶜₗⱼ Aˡ,ⱼ + Γᶜₗⱼ,ⱼ Aˡ) + gʸʸ,ᵧ(Aᶜ,ᵧ + Γᶜₗᵧ Aˡ)
    /// ```
    ///
    /// so second derivatives come from direct stencils. Nested first
    /// differences would lose an order of accuracy next to the one-sided
    /// edge stencils.
    pub(crate) fn laplacian_component_into(
        &mut self,
        ax: &[f64],
        ay: &[f64],
        g: &Grid,
        comp: Component,
        periodic_x: bool,
        out: &mut [f64],
    ) {
        let (nx, ny, hx, hy) = (g.nx(), g.ny(), g.hx(), g.hy());
        let c = comp.index();
        let av = [ax, ay];

        if periodic_x {
            deriv2_x_periodic_into(av[c], nx, ny, hx, &mut self.d2_dx);
        } else {
            deriv2_x_into(av[c], nx, ny, hx, &mut self.d2_dx);
        }
        deriv2_y_into(av[c], nx, ny, hy, &mut self.d2_dy);

        // The three terms contract row-constant geometry against the seven
        // input arrays, so fold the Γ loops into per-row coefficients once
        // and leave the per-node work as seven multiply-adds:
        //   ∇²Aᶜ = y²(Aᶜ,ₓₓ + Aᶜ,ᵧᵧ) + Σ cf_da[l][k]·Aˡ,ₖ + Σ cf_a[l]·Aˡ
        let coefs = self.row_coefficients(comp);

        let dax_dx = &self.dax_dx;
        let dax_dy = &self.dax_dy;
        let day_dx = &self.day_dx;
        let day_dy = &self.day_dy;
        let d2x = &self.d2_dx;
        let d2y = &self.d2_dy;
        let combine = |i: usize, col: &mut [f64]| {
            let base = i * ny;
            let end = base + ny;
            let d2x = &d2x[base..end];
            let d2y = &d2y[base..end];
            let dxx = &dax_dx[base..end];
            let dxy = &dax_dy[base..end];
            let dyx = &day_dx[base..end];
            let dyy = &day_dy[base..end];
            let vx = &av[0][base..end];
            let vy = &av[1][base..end];
            for j in 0..ny {
                let cf = &coefs[j];
                col[j] = cf.d2 * (d2x[j] + d2y[j])
                    + cf.da[0][0] * dxx[j]
                    + cf.da[0][1] * dxy[j]
                    + cf.da[1][0] * dyx[j]
                    + cf.da[1][1] * dyy[j]
                    + cf.a[0] * vx[j]
                    + cf.a[1] * vy[j];
            }
        };
        if nx * ny >= PAR_MIN_NODES {
            out.par_chunks_mut(ny).enumerate().for_each(|(i, col)| combine(i, col));
        } else {
            out.chunks_mut(ny).enumerate().for_each(|(i, col)| combine(i, col));
        }
    }
}

/// Covariant vector Laplacian ∇²Aⁱ of the requested component.
pub fn covariant_laplacian(a: &VectorPotentialField, component: Component) -> ScalarField {
    let mut ws = LaplacianWorkspace::new(a.grid());
    ws.first_derivatives(a.ax().values(), a.ay().values(), a.grid(), false);
    let mut out = vec![0.0; a.grid().len()];
    ws.laplacian_component_into(
        a.ax().values(),
        a.ay().values(),
        a.grid(),
        component,
        false,
        &mut out,
    );
    ScalarField::from_raw(a.grid().clone(), out)
}

/// Residual of the eigenmode substitution ∇²Aⁱ → −λ²Aⁱ, i.e. ∇²Aⁱ + λ²Aⁱ.
/// Near-zero residual means the substitution is valid for this field.
pub fn eigenmode_check(a: &VectorPotentialField, lambda: f64, component: Component) -> ScalarField {
    let lap = covariant_laplacian(a, component);
    let comp = match component {
        Component::X => a.ax(),
        Component::Y => a.ay(),
    };
    let l2 = lambda * lambda;
    let values: Vec<f64> = lap
        .values()
        .iter()
        .zip(comp.values())
        .map(|(l, v)| l + l2 * v)
        .collect();
    ScalarField::from_raw(a.grid().clone(), values)
}

// ---------------------------------------------------------------------------
// quadrature
// ---------------------------------------------------------------------------

/// Trapezoidal quadrature of f(i, j, value) over the grid, sequential fixed
/// order so results are reproducible bit for bit.
pub(crate) fn trapezoid_sum(grid: &Grid, f: impl Fn(usize, usize) -> f64) -> f64 {
    let (nx, ny) = (grid.nx(), grid.ny());
    let mut total = 0.0;
    for i in 0..nx {
        let wx = if i == 0 || i == nx - 1 { 0.5 } else { 1.0 };
        for j in 0..ny {
            let wy = if j == 0 || j == ny - 1 { 0.5 } else { 1.0 };
            total += wx * wy * f(i, j);
        }
    }
    total * grid.hx() * grid.hy()
}

// ---------------------------------------------------------------------------
// CSV serialization: header `x,y,value`, row-major (x outer, y inner),
// 17 significant digits.
// ---------------------------------------------------------------------------

pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_scalar_csv<W: Write>(field: &ScalarField, w: &mut W) -> io::Result<()> {
    let g = field.grid();
    writeln!(w, "x,y,value")?;
    for i in 0..g.nx() {
        let x = g.x(i);
        for j in 0..g.ny() {
            writeln!(w, "{},{},{}", fmt_f64(x), fmt_f64(g.y(j)), fmt_f64(field.value(i, j)))?;
        }
    }
    Ok(())
}

pub fn scalar_csv_string(field: &ScalarField) -> String {
    let mut buf = Vec::new();
    write_scalar_csv(field, &mut buf).expect("write to vec cannot fail");
    String::from_utf8(buf).expect("csv is ascii")
}

/// Read a field back from the CSV written by [`write_scalar_csv`]. Node
/// coordinates must round-trip exactly to the grid's nodes.
pub fn read_scalar_csv<R: BufRead>(grid: &Grid, r: R) -> Result<ScalarField> {
    let mut lines = r.lines();
    match lines.next() {
        Some(Ok(h)) if h.trim() == "x,y,value" => {}
        _ => return Err(Error::InvalidField("missing x,y,value header".into())),
    }
    let mut values = Vec::with_capacity(grid.len());
    for (row, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let (xs, ys, vs) = match (parts.next(), parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), Some(c), None) => (a, b, c),
            _ => return Err(Error::InvalidField(format!("malformed row {row}"))),
        };
        let parse = |s: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::InvalidField(format!("row {row}: {e}")))
        };
        let (x, y, v) = (parse(xs)?, parse(ys)?, parse(vs)?);
        let i = row / grid.ny();
        let j = row % grid.ny();
        if i >= grid.nx() {
            return Err(Error::InvalidField("more rows than grid nodes".into()));
        }
        if x.to_bits() != grid.x(i).to_bits() || y.to_bits() != grid.y(j).to_bits() {
            return Err(Error::InvalidField(format!(
                "row {row}: node ({x}, {y}) does not match grid node ({}, {})",
                grid.x(i),
                grid.y(j)
            )));
        }
        values.push(v);
    }
    ScalarField::from_values(grid.clone(), values)
}
