//! Spatial discretization bricks shared by the 1D and 2D integrators.
//!
//! Arrays passed to [`reconstruct`] and [`mean_interfaces`] carry ghost cells;
//! interface arrays have one entry per cell edge (`N + 1` of them), indexed so
//! that interface `j` separates interior cells `j - 1` and `j`.

use crate::error::{ExnerError, Result};

/// Parameter of the generalized MinMod limiter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimiterParams {
    pub theta: f64,
}

impl LimiterParams {
    pub fn new(theta: f64) -> Result<Self> {
        if !(1.0..=2.0).contains(&theta) {
            return Err(ExnerError::invalid("theta", format!("must lie in [1, 2], got {theta}")));
        }
        Ok(Self { theta })
    }
}

impl Default for LimiterParams {
    fn default() -> Self {
        Self { theta: 1.9 }
    }
}

/// Interface reconstruction used by the explicit fluxes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reconstruction {
    /// Cell averages on both sides of each edge (first order).
    PiecewiseConstant,
    /// Conservative linear reconstruction with MinMod-limited slopes.
    Linear(LimiterParams),
}

impl Default for Reconstruction {
    fn default() -> Self {
        Reconstruction::Linear(LimiterParams::default())
    }
}

/// Traces `v⁻` (from the left cell) and `v⁺` (from the right cell) at every
/// interface.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EdgeValues {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

impl EdgeValues {
    pub fn with_interfaces(n: usize) -> Self {
        Self {
            left: vec![0.0; n],
            right: vec![0.0; n],
        }
    }
}

/// `sign(a)·min(|a|,|b|,|c|)` when all three share a strict sign, else 0.
#[inline]
pub fn minmod3(a: f64, b: f64, c: f64) -> f64 {
    if a > 0.0 && b > 0.0 && c > 0.0 {
        a.min(b).min(c)
    } else if a < 0.0 && b < 0.0 && c < 0.0 {
        a.max(b).max(c)
    } else {
        0.0
    }
}

/// Limited slope of the middle value, expressed as a jump per cell.
#[inline]
pub fn limited_jump(prev: f64, cur: f64, next: f64, lim: LimiterParams) -> f64 {
    minmod3(lim.theta * (cur - prev), 0.5 * (next - prev), lim.theta * (next - cur))
}

/// Reconstruct interface traces from cell averages with `n_ghost` ghost
/// cells on each side.
///
/// The slope returned by the limiter is `v′·Δx`, so the mesh size cancels and
/// is not needed here.
pub fn reconstruct(values: &[f64], n_ghost: usize, rec: Reconstruction) -> Result<EdgeValues> {
    if n_ghost == 0 || values.len() < 2 * n_ghost + 1 {
        return Err(ExnerError::invalid(
            "n_ghost",
            format!("need at least one ghost cell per side and one interior cell (len {})", values.len()),
        ));
    }
    let interfaces = values.len() - 2 * n_ghost + 1;
    let mut out = EdgeValues::with_interfaces(interfaces);
    reconstruct_into(values, n_ghost, rec, &mut out);
    Ok(out)
}

/// Allocation-free form of [`reconstruct`]; `out` must hold `N + 1` entries.
pub fn reconstruct_into(values: &[f64], n_ghost: usize, rec: Reconstruction, out: &mut EdgeValues) {
    let len = values.len();
    let interfaces = len - 2 * n_ghost + 1;
    debug_assert!(out.left.len() >= interfaces && out.right.len() >= interfaces);
    match rec {
        Reconstruction::PiecewiseConstant => {
            for j in 0..interfaces {
                out.left[j] = values[n_ghost - 1 + j];
                out.right[j] = values[n_ghost + j];
            }
        }
        Reconstruction::Linear(lim) => {
            // Half-jump of cell k; zero where the stencil leaves the array.
            let half = |k: usize| -> f64 {
                if k == 0 || k + 1 >= len {
                    0.0
                } else {
                    0.5 * limited_jump(values[k - 1], values[k], values[k + 1], lim)
                }
            };
            let mut prev_half = half(n_ghost - 1);
            for j in 0..interfaces {
                let kl = n_ghost - 1 + j;
                let kr = kl + 1;
                let next_half = half(kr);
                out.left[j] = values[kl] + prev_half;
                out.right[j] = values[kr] - next_half;
                prev_half = next_half;
            }
        }
    }
}

/// Rusanov flux `½(F(U_L) + F(U_R) - α(U_R - U_L))`, component-wise.
pub fn rusanov_interface<const K: usize, F>(flux: F, ul: &[f64; K], ur: &[f64; K], alpha: f64) -> [f64; K]
where
    F: Fn(&[f64; K]) -> [f64; K],
{
    let fl = flux(ul);
    let fr = flux(ur);
    let mut out = [0.0; K];
    for k in 0..K {
        out[k] = 0.5 * (fl[k] + fr[k] - alpha * (ur[k] - ul[k]));
    }
    out
}

/// Scalar Rusanov flux from precomputed physical fluxes.
#[inline]
pub fn rusanov(f_left: f64, f_right: f64, v_left: f64, v_right: f64, alpha: f64) -> f64 {
    0.5 * (f_left + f_right - alpha * (v_right - v_left))
}

/// Arithmetic interface means `½(v_{i-1} + v_i)` for the `N + 1` edges of the
/// interior, from an array with `n_ghost` ghosts per side.
pub fn mean_interfaces(values: &[f64], n_ghost: usize) -> Vec<f64> {
    let interfaces = values.len() - 2 * n_ghost + 1;
    (0..interfaces)
        .map(|j| 0.5 * (values[n_ghost - 1 + j] + values[n_ghost + j]))
        .collect()
}

/// Centered operator `D_x`: divided difference of interface values.
pub fn op_dx_centered(interface_values: &[f64], dx: f64) -> Vec<f64> {
    interface_values.windows(2).map(|w| (w[1] - w[0]) / dx).collect()
}

/// Upwinded operator `D̂_x`: divided difference of Rusanov interface fluxes.
pub fn op_dx_upwind(fluxes: &[f64], dx: f64) -> Vec<f64> {
    fluxes.windows(2).map(|w| (w[1] - w[0]) / dx).collect()
}

/// Tridiagonal system; `lower[i]` multiplies `x[i-1]` and `upper[i]`
/// multiplies `x[i+1]` (so `lower[0]` and `upper[n-1]` are ignored).
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalSystem {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl TridiagonalSystem {
    pub fn multiply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.diag.len();
        (0..n)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y += self.lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    y += self.upper[i] * x[i + 1];
                }
                y
            })
            .collect()
    }
}

/// Thomas algorithm.
pub fn solve_tridiagonal(sys: &TridiagonalSystem) -> Result<Vec<f64>> {
    let n = sys.diag.len();
    for len in [sys.lower.len(), sys.upper.len(), sys.rhs.len()] {
        if len != n {
            return Err(ExnerError::SizeMismatch { expected: n, found: len });
        }
    }
    let mut x = sys.rhs.clone();
    let mut scratch = vec![0.0; n];
    thomas_in_place(&sys.lower, &sys.diag, &sys.upper, &mut x, &mut scratch)?;
    Ok(x)
}

/// In-place Thomas sweep: `rhs` is overwritten with the solution.
pub fn thomas_in_place(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &mut [f64],
    scratch: &mut [f64],
) -> Result<()> {
    let n = diag.len();
    if n == 0 {
        return Ok(());
    }
    let mut pivot = diag[0];
    if pivot == 0.0 {
        return Err(ExnerError::SingularSystem { row: 0 });
    }
    rhs[0] /= pivot;
    for i in 1..n {
        scratch[i] = upper[i - 1] / pivot;
        pivot = diag[i] - lower[i] * scratch[i];
        if pivot == 0.0 || !pivot.is_finite() {
            return Err(ExnerError::SingularSystem { row: i });
        }
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= scratch[i + 1] * rhs[i + 1];
    }
    Ok(())
}

/// Five-point stencil on an `nx × ny` grid (row-major, `x` fastest).
/// Couplings that would leave the grid must be zero.
#[derive(Debug, Clone, PartialEq)]
pub struct FivePointSystem {
    pub nx: usize,
    pub ny: usize,
    pub center: Vec<f64>,
    pub west: Vec<f64>,
    pub east: Vec<f64>,
    pub south: Vec<f64>,
    pub north: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl FivePointSystem {
    pub fn zeros(nx: usize, ny: usize) -> Self {
        let z = vec![0.0; nx * ny];
        Self {
            nx,
            ny,
            center: z.clone(),
            west: z.clone(),
            east: z.clone(),
            south: z.clone(),
            north: z.clone(),
            rhs: z,
        }
    }

    pub fn multiply_into(&self, x: &[f64], y: &mut [f64]) {
        let nx = self.nx;
        for j in 0..self.ny {
            let row = j * nx;
            for i in 0..nx {
                let k = row + i;
                let mut acc = self.center[k] * x[k];
                if i > 0 {
                    acc += self.west[k] * x[k - 1];
                }
                if i + 1 < nx {
                    acc += self.east[k] * x[k + 1];
                }
                if j > 0 {
                    acc += self.south[k] * x[k - nx];
                }
                if j + 1 < self.ny {
                    acc += self.north[k] * x[k + nx];
                }
                y[k] = acc;
            }
        }
    }

    pub fn multiply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        self.multiply_into(x, &mut y);
        y
    }

    pub fn is_symmetric(&self) -> bool {
        let nx = self.nx;
        (0..self.ny).all(|j| {
            (0..nx).all(|i| {
                let k = j * nx + i;
                (i == 0 || self.west[k] == self.east[k - 1]) && (j == 0 || self.south[k] == self.north[k - nx])
            })
        })
    }

    pub fn is_diagonally_dominant(&self) -> bool {
        (0..self.center.len()).all(|k| {
            self.center[k] > self.west[k].abs() + self.east[k].abs() + self.south[k].abs() + self.north[k].abs()
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOptions {
    /// Target for `‖r‖₂ / ‖rhs‖₂`.
    pub tol: f64,
    pub max_iter: usize,
    /// Use the diagonal (Jacobi) preconditioner.
    pub jacobi: bool,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 5000,
            jacobi: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Conjugate gradient for the symmetric positive definite five-point system,
/// starting from zero.
pub fn solve_spd(sys: &FivePointSystem, opts: &CgOptions) -> Result<CgSolution> {
    solve_spd_from(sys, opts, None)
}

/// Conjugate gradient with an optional starting guess.
pub fn solve_spd_from(sys: &FivePointSystem, opts: &CgOptions, guess: Option<&[f64]>) -> Result<CgSolution> {
    let len = sys.nx * sys.ny;
    if sys.rhs.len() != len {
        return Err(ExnerError::SizeMismatch { expected: len, found: sys.rhs.len() });
    }
    let b_norm = norm2(&sys.rhs);
    let mut x = match guess {
        Some(g) if g.len() == len => g.to_vec(),
        Some(g) => return Err(ExnerError::SizeMismatch { expected: len, found: g.len() }),
        None => vec![0.0; len],
    };
    if b_norm == 0.0 {
        return Ok(CgSolution { x: vec![0.0; len], iterations: 0, residual: 0.0 });
    }
    let mut r = vec![0.0; len];
    sys.multiply_into(&x, &mut r);
    for (ri, bi) in r.iter_mut().zip(&sys.rhs) {
        *ri = bi - *ri;
    }
    let inv_diag: Option<Vec<f64>> = opts.jacobi.then(|| sys.center.iter().map(|c| 1.0 / c).collect());
    let precondition = |r: &[f64], z: &mut [f64]| match &inv_diag {
        Some(d) => z.iter_mut().zip(r).zip(d).for_each(|((z, r), d)| *z = r * d),
        None => z.copy_from_slice(r),
    };
    let mut z = vec![0.0; len];
    precondition(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; len];
    let mut residual = norm2(&r) / b_norm;
    let mut iterations = 0;
    while residual > opts.tol {
        if iterations == opts.max_iter {
            return Err(ExnerError::NotConverged { iterations, residual });
        }
        sys.multiply_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(ExnerError::NotConverged { iterations, residual });
        }
        let alpha = rz / pap;
        for k in 0..len {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        precondition(&r, &mut z);
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for k in 0..len {
            p[k] = z[k] + beta * p[k];
        }
        iterations += 1;
        residual = norm2(&r) / b_norm;
    }
    Ok(CgSolution { x, iterations, residual })
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
