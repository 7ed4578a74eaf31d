//! Semi-implicit integrators for the 2D system in `(η, m, n, z_b)`:
//!
//! ```text
//! η_t + (m + q_{x,b})_x + (n + q_{y,b})_y = 0
//! m_t + (m u)_x + (m v)_y + g h η_x = 0
//! n_t + (n u)_x + (n v)_y + g h η_y = 0
//! z_b,t + (q_{x,b})_x + (q_{y,b})_y = 0
//! ```
//!
//! Reconstruction and Rusanov fluxes act direction by direction. The
//! implicit free-surface update is a symmetric five-point system solved by
//! conjugate gradients. All four sides use zero-gradient ghost cells.

use crate::error::{ExnerError, Result};
use crate::model::{grass_flux_2d, spectral_radius, velocity, GrassParams, Grid2D, State2D};
use crate::numerics::{limited_jump, rusanov, solve_spd_from, CgOptions, FivePointSystem, Reconstruction};
use crate::solver1d::{CflRule, ImexTableau};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundaryCondition2D {
    /// Zero-gradient ghost cells on every side.
    #[default]
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme2D {
    SemiImplicitO1,
    Imex2,
}

/// Per-step diagnostics.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepReport2D {
    /// CG iterations summed over the implicit stages.
    pub cg_iterations: usize,
    /// Area-integrated net inflow of `z_b` through the boundary.
    pub net_z_b_flux: f64,
    /// Area-integrated net inflow of `η` through the boundary.
    pub net_eta_flux: f64,
}

#[derive(Debug, Clone)]
pub struct Run2D {
    pub state: State2D,
    pub t: f64,
    pub steps: usize,
}

/// Ghosted copies of the explicit state.
#[derive(Debug, Clone)]
struct Ghosted2D {
    width: usize,
    h: Vec<f64>,
    m: Vec<f64>,
    n: Vec<f64>,
    z_b: Vec<f64>,
    eta: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Solver2D {
    pub grid: Grid2D,
    pub params: GrassParams,
    pub bc: BoundaryCondition2D,
    pub reconstruction: Reconstruction,
    pub tableau: ImexTableau,
    pub cg: CgOptions,
    ghost: Ghosted2D,
    last: StepReport2D,
}

impl Solver2D {
    pub fn new(grid: Grid2D, params: GrassParams) -> Self {
        let g = grid.n_ghost;
        let len = (grid.nx + 2 * g) * (grid.ny + 2 * g);
        Self {
            grid,
            params,
            bc: BoundaryCondition2D::Free,
            reconstruction: Reconstruction::default(),
            tableau: ImexTableau::default(),
            cg: CgOptions {
                tol: 1e-15,
                max_iter: 20_000,
                jacobi: true,
            },
            ghost: Ghosted2D {
                width: grid.nx + 2 * g,
                h: vec![0.0; len],
                m: vec![0.0; len],
                n: vec![0.0; len],
                z_b: vec![0.0; len],
                eta: vec![0.0; len],
            },
            last: StepReport2D::default(),
        }
    }

    pub fn with_reconstruction(mut self, rec: Reconstruction) -> Self {
        self.reconstruction = rec;
        self
    }

    pub fn last_report(&self) -> StepReport2D {
        self.last
    }

    fn check_shape(&self, s: &State2D) -> Result<()> {
        if s.nx != self.grid.nx || s.ny != self.grid.ny {
            return Err(ExnerError::SizeMismatch {
                expected: self.grid.len(),
                found: s.len(),
            });
        }
        Ok(())
    }

    /// Step size from a CFL rule. The classical rule bounds each direction
    /// by the 1D spectral radius of the corresponding velocity component.
    pub fn time_step(&self, s: &State2D, rule: CflRule) -> Result<f64> {
        let (dx, dy) = (self.grid.dx, self.grid.dy);
        let (sx, sy) = match rule {
            CflRule::Fixed(dt) => return Ok(dt),
            CflRule::Material(_) => s.max_abs_velocity(),
            CflRule::Classical(_) => {
                let mut sx = 0.0f64;
                let mut sy = 0.0f64;
                for k in 0..s.len() {
                    let h = s.h[k];
                    sx = sx.max(spectral_radius(h, velocity(h, s.m[k]), &self.params)?);
                    sy = sy.max(spectral_radius(h, velocity(h, s.n[k]), &self.params)?);
                }
                (sx, sy)
            }
        };
        let c = match rule {
            CflRule::Material(c) | CflRule::Classical(c) => c,
            CflRule::Fixed(_) => unreachable!(),
        };
        let inv = (sx / dx).max(sy / dy);
        if inv == 0.0 {
            return Err(ExnerError::DryState);
        }
        Ok(c / inv)
    }

    pub fn step(&mut self, scheme: Scheme2D, s: &State2D, dt: f64) -> Result<State2D> {
        match scheme {
            Scheme2D::SemiImplicitO1 => self.step2d_semi_implicit_o1(s, dt),
            Scheme2D::Imex2 => self.step2d_imex2(s, dt),
        }
    }

    pub fn run<F>(&mut self, state: State2D, scheme: Scheme2D, rule: CflRule, t_end: f64, mut observer: F) -> Result<Run2D>
    where
        F: FnMut(f64, &State2D),
    {
        let mut state = state;
        let mut t = 0.0;
        let mut steps = 0;
        while t < t_end {
            let mut dt = self.time_step(&state, rule)?;
            let last = t + dt >= t_end || t_end - (t + dt) < 1e-12 * t_end;
            if last {
                dt = t_end - t;
            }
            state = self.step(scheme, &state, dt)?;
            t = if last { t_end } else { t + dt };
            steps += 1;
            observer(t, &state);
        }
        Ok(Run2D { state, t, steps })
    }

    pub fn step2d_semi_implicit_o1(&mut self, s: &State2D, dt: f64) -> Result<State2D> {
        self.check_shape(s)?;
        let (out, report) = self.stage(s, s, dt)?;
        self.last = report;
        Ok(out)
    }

    pub fn step2d_imex2(&mut self, s: &State2D, dt: f64) -> Result<State2D> {
        self.check_shape(s)?;
        let tab = self.tableau;
        let gamma = tab.gamma;
        let (stage1, r1) = self.stage(s, s, gamma * dt)?;
        let w_i = (1.0 - gamma) / gamma;
        let explicit2 = affine(s, &stage1, tab.c_coeff / gamma);
        let base2 = affine(s, &stage1, w_i);
        let (out, r2) = self.stage(&base2, &explicit2, gamma * dt)?;
        self.last = StepReport2D {
            cg_iterations: r1.cg_iterations + r2.cg_iterations,
            net_z_b_flux: r2.net_z_b_flux + w_i * r1.net_z_b_flux,
            net_eta_flux: r2.net_eta_flux + w_i * r1.net_eta_flux,
        };
        Ok(out)
    }

    fn fill_ghosts(&mut self, s: &State2D) {
        let (nx, ny, g) = (self.grid.nx, self.grid.ny, self.grid.n_ghost);
        let w = self.ghost.width;
        let gh = &mut self.ghost;
        for jj in 0..ny + 2 * g {
            let j = jj.clamp(g, g + ny - 1) - g;
            for ii in 0..nx + 2 * g {
                let i = ii.clamp(g, g + nx - 1) - g;
                let k = j * nx + i;
                let kk = jj * w + ii;
                gh.h[kk] = s.h[k];
                gh.m[kk] = s.m[k];
                gh.n[kk] = s.n[k];
                gh.z_b[kk] = s.z_b[k];
                gh.eta[kk] = s.h[k] + s.bed[k] + s.z_b[k];
            }
        }
    }

    /// One implicit stage `U = base + τ H(explicit, U)`.
    fn stage(&mut self, base: &State2D, explicit: &State2D, tau: f64) -> Result<(State2D, StepReport2D)> {
        let (nx, ny, g) = (self.grid.nx, self.grid.ny, self.grid.n_ghost);
        let (dx, dy) = (self.grid.dx, self.grid.dy);
        let p = self.params;
        let rec = self.reconstruction;
        self.fill_ghosts(explicit);
        let gh = &self.ghost;
        let w = gh.width;
        let half = |v: &[f64], k: usize, stride: usize| -> f64 {
            match rec {
                Reconstruction::PiecewiseConstant => 0.0,
                Reconstruction::Linear(lim) => 0.5 * limited_jump(v[k - stride], v[k], v[k + stride], lim),
            }
        };

        // Interface fluxes: x-faces indexed j*(nx+1)+I, y-faces J*nx+i.
        let nfx = (nx + 1) * ny;
        let nfy = nx * (ny + 1);
        let mut fx = [vec![0.0; nfx], vec![0.0; nfx], vec![0.0; nfx], vec![0.0; nfx]];
        let mut fy = [vec![0.0; nfy], vec![0.0; nfy], vec![0.0; nfy], vec![0.0; nfy]];
        let face = |kl: usize, kr: usize, stride: usize, normal_x: bool| -> [f64; 4] {
            let trace = |v: &[f64]| (v[kl] + half(v, kl, stride), v[kr] - half(v, kr, stride));
            let (hl, hr) = trace(&gh.h);
            let (ml, mr) = trace(&gh.m);
            let (nl, nr) = trace(&gh.n);
            let (el, er) = trace(&gh.eta);
            let (zl, zr) = trace(&gh.z_b);
            let (ul, ur) = (velocity(hl, ml), velocity(hr, mr));
            let (vl, vr) = (velocity(hl, nl), velocity(hr, nr));
            let (bl, br) = (grass_flux_2d(ul, vl, &p), grass_flux_2d(ur, vr, &p));
            let (sl, sr, ql, qr) = if normal_x { (ul, ur, bl.0, br.0) } else { (vl, vr, bl.1, br.1) };
            let alpha = sl.abs().max(sr.abs());
            [
                rusanov(ml * sl, mr * sr, ml, mr, alpha),
                rusanov(nl * sl, nr * sr, nl, nr, alpha),
                rusanov(ql, qr, el, er, alpha),
                rusanov(ql, qr, zl, zr, alpha),
            ]
        };
        for j in 0..ny {
            for ii in 0..=nx {
                let kl = (g + j) * w + g - 1 + ii;
                let f = face(kl, kl + 1, 1, true);
                let idx = j * (nx + 1) + ii;
                for c in 0..4 {
                    fx[c][idx] = f[c];
                }
            }
        }
        for jj in 0..=ny {
            for i in 0..nx {
                let kl = (g - 1 + jj) * w + g + i;
                let f = face(kl, kl + w, w, false);
                let idx = jj * nx + i;
                for c in 0..4 {
                    fy[c][idx] = f[c];
                }
            }
        }
        let div = |c: usize, i: usize, j: usize| -> f64 {
            let ix = j * (nx + 1) + i;
            let iy = j * nx + i;
            (fx[c][ix + 1] - fx[c][ix]) / dx + (fy[c][iy + nx] - fy[c][iy]) / dy
        };

        let len = nx * ny;
        let mut m_star = vec![0.0; len];
        let mut n_star = vec![0.0; len];
        for j in 0..ny {
            for i in 0..nx {
                let k = j * nx + i;
                m_star[k] = base.m[k] - tau * div(0, i, j);
                n_star[k] = base.n[k] - tau * div(1, i, j);
            }
        }

        let kx = p.g * (tau / dx).powi(2);
        let ky = p.g * (tau / dy).powi(2);
        let mut sys = FivePointSystem::zeros(nx, ny);
        let hg = |i: usize, j: usize| gh.h[(g + j) * w + g + i];
        for j in 0..ny {
            for i in 0..nx {
                let k = j * nx + i;
                let im = i.saturating_sub(1);
                let ip = (i + 1).min(nx - 1);
                let jm = j.saturating_sub(1);
                let jp = (j + 1).min(ny - 1);
                let eta_base = base.h[k] + base.bed[k] + base.z_b[k];
                let centered = (m_star[j * nx + ip] - m_star[j * nx + im]) / (2.0 * dx)
                    + (n_star[jp * nx + i] - n_star[jm * nx + i]) / (2.0 * dy);
                sys.rhs[k] = eta_base - tau * div(2, i, j) - tau * centered;
                let mut center = 1.0;
                if i > 0 {
                    let c = -kx * 0.5 * (hg(i - 1, j) + hg(i, j));
                    sys.west[k] = c;
                    center -= c;
                }
                if i + 1 < nx {
                    let c = -kx * 0.5 * (hg(i, j) + hg(i + 1, j));
                    sys.east[k] = c;
                    center -= c;
                }
                if j > 0 {
                    let c = -ky * 0.5 * (hg(i, j - 1) + hg(i, j));
                    sys.south[k] = c;
                    center -= c;
                }
                if j + 1 < ny {
                    let c = -ky * 0.5 * (hg(i, j) + hg(i, j + 1));
                    sys.north[k] = c;
                    center -= c;
                }
                sys.center[k] = center;
            }
        }
        debug_assert!(sys.is_symmetric());
        debug_assert!(sys.is_diagonally_dominant());
        let guess: Vec<f64> = explicit.eta();
        let sol = solve_spd_from(&sys, &self.cg, Some(&guess))?;
        let eta = sol.x;

        let mut out = State2D {
            nx,
            ny,
            h: vec![0.0; len],
            m: vec![0.0; len],
            n: vec![0.0; len],
            z_b: vec![0.0; len],
            bed: base.bed.clone(),
        };
        for j in 0..ny {
            for i in 0..nx {
                let k = j * nx + i;
                let im = i.saturating_sub(1);
                let ip = (i + 1).min(nx - 1);
                let jm = j.saturating_sub(1);
                let jp = (j + 1).min(ny - 1);
                let h = hg(i, j);
                out.m[k] = m_star[k] - 0.5 * p.g * (tau / dx) * h * (eta[j * nx + ip] - eta[j * nx + im]);
                out.n[k] = n_star[k] - 0.5 * p.g * (tau / dy) * h * (eta[jp * nx + i] - eta[jm * nx + i]);
                out.z_b[k] = base.z_b[k] - tau * div(3, i, j);
                out.h[k] = eta[k] - out.z_b[k] - base.bed[k];
            }
        }

        let mut net_zb = 0.0;
        let mut net_eta = 0.0;
        for j in 0..ny {
            let (l, r) = (j * (nx + 1), j * (nx + 1) + nx);
            net_zb += (fx[3][l] - fx[3][r]) * dy;
            net_eta += (fx[2][l] + m_star[j * nx] - fx[2][r] - m_star[j * nx + nx - 1]) * dy;
        }
        for i in 0..nx {
            let (b, t) = (i, ny * nx + i);
            net_zb += (fy[3][b] - fy[3][t]) * dx;
            net_eta += (fy[2][b] + n_star[i] - fy[2][t] - n_star[(ny - 1) * nx + i]) * dx;
        }
        out.check_depth()?;
        Ok((
            out,
            StepReport2D {
                cg_iterations: sol.iterations,
                net_z_b_flux: tau * net_zb,
                net_eta_flux: tau * net_eta,
            },
        ))
    }
}

fn affine(a: &State2D, b: &State2D, w: f64) -> State2D {
    let mix = |x: &[f64], y: &[f64]| -> Vec<f64> { x.iter().zip(y).map(|(x, y)| (1.0 - w) * x + w * y).collect() };
    State2D {
        nx: a.nx,
        ny: a.ny,
        h: mix(&a.h, &b.h),
        m: mix(&a.m, &b.m),
        n: mix(&a.n, &b.n),
        z_b: mix(&a.z_b, &b.z_b),
        bed: a.bed.clone(),
    }
}
