//! Domain types and the closed-form pieces of the 1D/2D Exner model: the
//! Grass sediment flux, derived flow quantities and the eigenvalues of the
//! 1D quasilinear system.

use std::f64::consts::PI;

use crate::error::{ExnerError, Result};

/// Gravitational acceleration used by every preset (m/s²).
pub const GRAVITY: f64 = 9.81;

/// Cells with `h <= H_DRY` are treated as dry: their velocity is taken as zero.
pub const H_DRY: f64 = 1e-8;

/// Grass closure constants plus gravity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrassParams {
    /// Interaction strength between flow and sediment.
    pub a_g: f64,
    /// Grass exponent.
    pub m_g: f64,
    /// Porosity of the sediment layer.
    pub rho0: f64,
    /// `1 / (1 - rho0)`, kept in sync by the constructors.
    pub xi: f64,
    pub g: f64,
}

impl GrassParams {
    pub fn new(a_g: f64, m_g: f64, rho0: f64) -> Result<Self> {
        Self::with_gravity(a_g, m_g, rho0, GRAVITY)
    }

    /// `a_g = 0` is accepted as the decoupled limit (no sediment transport).
    pub fn with_gravity(a_g: f64, m_g: f64, rho0: f64, g: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&a_g) {
            return Err(ExnerError::invalid("a_g", format!("must lie in [0, 1), got {a_g}")));
        }
        if !(1.0..=4.0).contains(&m_g) {
            return Err(ExnerError::invalid("m_g", format!("must lie in [1, 4], got {m_g}")));
        }
        if !(0.0..1.0).contains(&rho0) {
            return Err(ExnerError::invalid("rho0", format!("porosity must lie in [0, 1), got {rho0}")));
        }
        if !(g > 0.0 && g.is_finite()) {
            return Err(ExnerError::invalid("g", format!("must be positive, got {g}")));
        }
        Ok(Self {
            a_g,
            m_g,
            rho0,
            xi: 1.0 / (1.0 - rho0),
            g,
        })
    }

    /// `ξ·A_g`, the prefactor of the Grass law.
    #[inline]
    pub fn transport_coefficient(&self) -> f64 {
        self.xi * self.a_g
    }

    /// `s^e` with a fast path for integral exponents, which covers every preset.
    #[inline]
    pub(crate) fn pow(s: f64, e: f64) -> f64 {
        if e == 0.0 {
            1.0
        } else if e.fract() == 0.0 && e.abs() <= 8.0 {
            s.powi(e as i32)
        } else {
            s.powf(e)
        }
    }
}

/// Uniform partition of `[x_min, x_max]` into `n` cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
    pub dx: f64,
    pub n_ghost: usize,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(ExnerError::invalid("n", "grid needs at least one cell"));
        }
        if !(x_max > x_min) {
            return Err(ExnerError::invalid("x_max", format!("must exceed x_min ({x_min}), got {x_max}")));
        }
        Ok(Self {
            x_min,
            x_max,
            n,
            dx: (x_max - x_min) / n as f64,
            n_ghost: 2,
        })
    }

    /// Center of cell `i` (0-based).
    #[inline]
    pub fn center(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.dx
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.center(i)).collect()
    }

    /// Same domain with twice the cells.
    pub fn refined(&self) -> Self {
        Self {
            n: 2 * self.n,
            dx: 0.5 * self.dx,
            ..*self
        }
    }
}

/// Uniform Cartesian partition of a rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub n_ghost: usize,
}

impl Grid2D {
    pub fn new(x: (f64, f64), y: (f64, f64), nx: usize, ny: usize) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(ExnerError::invalid("nx/ny", "grid needs at least one cell per direction"));
        }
        if !(x.1 > x.0) || !(y.1 > y.0) {
            return Err(ExnerError::invalid("bounds", "upper bounds must exceed lower bounds"));
        }
        Ok(Self {
            x_min: x.0,
            x_max: x.1,
            y_min: y.0,
            y_max: y.1,
            nx,
            ny,
            dx: (x.1 - x.0) / nx as f64,
            dy: (y.1 - y.0) / ny as f64,
            n_ghost: 2,
        })
    }

    #[inline]
    pub fn x_center(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.dx
    }

    #[inline]
    pub fn y_center(&self, j: usize) -> f64 {
        self.y_min + (j as f64 + 0.5) * self.dy
    }

    /// Row-major index with `x` running fastest.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The 1D grid along `x`.
    pub fn x_grid(&self) -> Grid1D {
        Grid1D {
            x_min: self.x_min,
            x_max: self.x_max,
            n: self.nx,
            dx: self.dx,
            n_ghost: self.n_ghost,
        }
    }
}

/// Velocity with the dry-cell guard.
#[inline]
pub fn velocity(h: f64, q: f64) -> f64 {
    if h > H_DRY {
        q / h
    } else {
        0.0
    }
}

/// Cell averages of the 1D system; the free surface `η = h + b + z_b` is derived.
#[derive(Debug, Clone, PartialEq)]
pub struct State1D {
    pub h: Vec<f64>,
    pub q: Vec<f64>,
    pub z_b: Vec<f64>,
    /// Static bathymetry.
    pub bed: Vec<f64>,
}

impl State1D {
    pub fn new(h: Vec<f64>, q: Vec<f64>, z_b: Vec<f64>, bed: Vec<f64>) -> Result<Self> {
        let n = h.len();
        for len in [q.len(), z_b.len(), bed.len()] {
            if len != n {
                return Err(ExnerError::SizeMismatch { expected: n, found: len });
            }
        }
        Ok(Self { h, q, z_b, bed })
    }

    /// State with constant free surface and no discharge.
    pub fn lake_at_rest(eta: f64, z_b: Vec<f64>, bed: Vec<f64>) -> Result<Self> {
        let h = z_b.iter().zip(&bed).map(|(z, b)| eta - z - b).collect::<Vec<_>>();
        let q = vec![0.0; h.len()];
        Self::new(h, q, z_b, bed)
    }

    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    pub fn eta(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.h[i] + self.bed[i] + self.z_b[i]).collect()
    }

    pub fn velocity(&self, i: usize) -> f64 {
        velocity(self.h[i], self.q[i])
    }

    pub fn velocities(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.velocity(i)).collect()
    }

    pub fn max_abs_velocity(&self) -> f64 {
        (0..self.len()).map(|i| self.velocity(i).abs()).fold(0.0, f64::max)
    }

    /// First cell whose depth is negative or not finite.
    pub fn check_depth(&self) -> Result<()> {
        check_depth(&self.h)?;
        for (cell, v) in self.q.iter().chain(&self.z_b).enumerate() {
            if !v.is_finite() {
                return Err(ExnerError::NegativeDepth { cell: cell % self.len(), h: *v });
            }
        }
        Ok(())
    }
}

pub(crate) fn check_depth(h: &[f64]) -> Result<()> {
    match h.iter().position(|h| !(*h >= 0.0) || !h.is_finite()) {
        Some(cell) => Err(ExnerError::NegativeDepth { cell, h: h[cell] }),
        None => Ok(()),
    }
}

/// Cell averages of the 2D system, stored row-major with `x` fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct State2D {
    pub nx: usize,
    pub ny: usize,
    pub h: Vec<f64>,
    /// x-momentum `h·u`.
    pub m: Vec<f64>,
    /// y-momentum `h·v`.
    pub n: Vec<f64>,
    pub z_b: Vec<f64>,
    pub bed: Vec<f64>,
}

impl State2D {
    pub fn new(
        nx: usize,
        ny: usize,
        h: Vec<f64>,
        m: Vec<f64>,
        n: Vec<f64>,
        z_b: Vec<f64>,
        bed: Vec<f64>,
    ) -> Result<Self> {
        let len = nx * ny;
        for found in [h.len(), m.len(), n.len(), z_b.len(), bed.len()] {
            if found != len {
                return Err(ExnerError::SizeMismatch { expected: len, found });
            }
        }
        Ok(Self { nx, ny, h, m, n, z_b, bed })
    }

    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn eta(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.h[k] + self.bed[k] + self.z_b[k]).collect()
    }

    pub fn max_abs_velocity(&self) -> (f64, f64) {
        (0..self.len()).fold((0.0f64, 0.0f64), |(mu, mv), k| {
            (
                mu.max(velocity(self.h[k], self.m[k]).abs()),
                mv.max(velocity(self.h[k], self.n[k]).abs()),
            )
        })
    }

    pub fn check_depth(&self) -> Result<()> {
        check_depth(&self.h)
    }
}

/// Sorted eigenvalues of the 1D quasilinear matrix plus the coupling and
/// Froude numbers they were computed from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveAnalysis {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub beta: f64,
    pub froude: f64,
    /// Set when the input velocity was negative; `beta` then uses `|u|`.
    pub reversed_flow: bool,
}

impl WaveAnalysis {
    pub fn spectral_radius(&self) -> f64 {
        self.lambda1.abs().max(self.lambda3.abs())
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.lambda1, self.lambda2, self.lambda3]
    }
}

/// Grass solid discharge `q_b = ξ A_g u |u|^(m_g-1)`.
#[inline]
pub fn grass_flux_1d(u: f64, p: &GrassParams) -> f64 {
    p.transport_coefficient() * u * GrassParams::pow(u.abs(), p.m_g - 1.0)
}

/// 2D Grass discharge `(q_xb, q_yb) = ξ A_g (u, v) (u² + v²)^((m_g-1)/2)`.
#[inline]
pub fn grass_flux_2d(u: f64, v: f64, p: &GrassParams) -> (f64, f64) {
    let s = u * u + v * v;
    let e = 0.5 * (p.m_g - 1.0);
    let factor = p.transport_coefficient() * GrassParams::pow(s, e);
    (factor * u, factor * v)
}

/// Coupling coefficient `β = ∂q_b/∂q = m_g ξ A_g |u|^(m_g-1) / h`.
pub fn beta_coefficient(h: f64, u: f64, p: &GrassParams) -> Result<f64> {
    if !(h > 0.0) {
        return Err(ExnerError::Domain {
            what: "beta_coefficient",
            requirement: "h > 0",
            value: h,
        });
    }
    Ok(p.m_g * p.transport_coefficient() * GrassParams::pow(u.abs(), p.m_g - 1.0) / h)
}

/// Coefficients `(a, b, c)` of the monic cubic `λ³ + aλ² + bλ + c = -p_λ(λ)`.
#[inline]
fn cubic_coefficients(h: f64, u: f64, beta: f64, g: f64) -> (f64, f64, f64) {
    let gh = g * h;
    (-2.0 * u, -(gh - u * u + gh * beta), gh * beta * u)
}

/// The characteristic polynomial `p_λ(λ) = -λ((u-λ)² - gh) + ghβ(λ - u)`.
pub fn characteristic_polynomial(lambda: f64, h: f64, u: f64, beta: f64, g: f64) -> f64 {
    let gh = g * h;
    -lambda * ((u - lambda).powi(2) - gh) + gh * beta * (lambda - u)
}

#[inline]
fn newton_polish(x: f64, (a, b, c): (f64, f64, f64)) -> f64 {
    let f = ((x + a) * x + b) * x + c;
    let df = (3.0 * x + 2.0 * a) * x + b;
    if df != 0.0 {
        x - f / df
    } else {
        x
    }
}

/// Exact eigenvalues via the trigonometric cubic formula with one Newton
/// polish per root.
pub fn eigenvalues_exact(h: f64, u: f64, p: &GrassParams) -> Result<WaveAnalysis> {
    let beta = beta_coefficient(h, u, p)?;
    let (a, b, c) = cubic_coefficients(h, u, beta, p.g);
    // Depressed cubic t³ + pt + q with λ = t - a/3.
    let pp = b - a * a / 3.0;
    let qq = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let discriminant = -(4.0 * pp * pp * pp + 27.0 * qq * qq);
    if !(discriminant > 0.0) || !(pp < 0.0) {
        return Err(ExnerError::LossOfHyperbolicity { discriminant });
    }
    let r = 2.0 * (-pp / 3.0).sqrt();
    let arg = (3.0 * qq / (pp * r)).clamp(-1.0, 1.0);
    let phi = arg.acos() / 3.0;
    let shift = -a / 3.0;
    let mut roots = [0.0; 3];
    for (k, root) in roots.iter_mut().enumerate() {
        let t = r * (phi - 2.0 * PI * k as f64 / 3.0).cos();
        *root = newton_polish(t + shift, (a, b, c));
    }
    roots.sort_by(f64::total_cmp);
    Ok(WaveAnalysis {
        lambda1: roots[0],
        lambda2: roots[1],
        lambda3: roots[2],
        beta,
        froude: u.abs() / (p.g * h).sqrt(),
        reversed_flow: u < 0.0,
    })
}

/// First-order-in-β expansion of the three eigenvalues, valid for `F_r < 1`.
pub fn eigenvalues_asymptotic(h: f64, u: f64, p: &GrassParams) -> Result<WaveAnalysis> {
    let beta = beta_coefficient(h, u, p)?;
    let c = (p.g * h).sqrt();
    let froude = u.abs() / c;
    if froude >= 1.0 {
        return Err(ExnerError::Domain {
            what: "eigenvalues_asymptotic",
            requirement: "Froude number < 1",
            value: froude,
        });
    }
    // Signed ratio keeps the expansion valid for either flow direction.
    let fr = u / c;
    Ok(WaveAnalysis {
        lambda1: u - c - beta * c / (2.0 * (1.0 - fr)),
        lambda2: beta * u / (1.0 - fr * fr),
        lambda3: u + c + beta * c / (2.0 * (1.0 + fr)),
        beta,
        froude,
        reversed_flow: u < 0.0,
    })
}

/// Spectral radius of the quasilinear matrix, i.e. `max(|λ1|, |λ3|)`.
///
/// Newton iterations on the outer roots started from the asymptotic guesses;
/// falls back to the trigonometric solver when they do not settle.
pub fn spectral_radius(h: f64, u: f64, p: &GrassParams) -> Result<f64> {
    if h <= H_DRY {
        return Ok(0.0);
    }
    let gh = p.g * h;
    let c = gh.sqrt();
    let fr = u / c;
    let beta = p.m_g * p.transport_coefficient() * GrassParams::pow(u.abs(), p.m_g - 1.0) / h;
    if fr.abs() < 0.9 && beta < 0.5 {
        let coeffs = cubic_coefficients(h, u, beta, p.g);
        let mut l1 = u - c - beta * c / (2.0 * (1.0 - fr));
        let mut l3 = u + c + beta * c / (2.0 * (1.0 + fr));
        let mut settled = false;
        for _ in 0..6 {
            let n1 = newton_polish(l1, coeffs);
            let n3 = newton_polish(l3, coeffs);
            let done = (n1 - l1).abs() <= 1e-14 * c && (n3 - l3).abs() <= 1e-14 * c;
            l1 = n1;
            l3 = n3;
            if done {
                settled = true;
                break;
            }
        }
        if settled {
            return Ok(l1.abs().max(l3.abs()));
        }
    }
    Ok(eigenvalues_exact(h, u, p)?.spectral_radius())
}
