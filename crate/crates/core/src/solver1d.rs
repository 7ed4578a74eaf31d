//! Time integrators for the 1D system written in the free-surface variable
//! `η = h + b + z_b`:
//!
//! ```text
//! η_t + (q + q_b)_x = 0
//! q_t + (q u)_x + g h η_x = 0
//! z_b,t + (q_b)_x = 0
//! ```
//!
//! Three schemes share the same explicit flux machinery: a fully explicit
//! Heun scheme, a first-order semi-implicit scheme in which the free-surface
//! gradient and the discharge divergence are implicit, and a two-stage IMEX
//! scheme built from the first-order one.

use crate::error::{ExnerError, Result};
use crate::model::{grass_flux_1d, spectral_radius, velocity, GrassParams, Grid1D, State1D};
use crate::numerics::{reconstruct_into, rusanov, thomas_in_place, EdgeValues, Reconstruction};

/// Double Butcher tableau of the two-stage IMEX scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImexTableau {
    pub a_explicit: [[f64; 2]; 2],
    pub a_implicit: [[f64; 2]; 2],
    pub b: [f64; 2],
    pub gamma: f64,
    /// Explicit abscissa of the second stage, `1 / (2γ)`.
    pub c_coeff: f64,
}

impl Default for ImexTableau {
    fn default() -> Self {
        let gamma = 1.0 - std::f64::consts::FRAC_1_SQRT_2;
        let c = 1.0 / (2.0 * gamma);
        Self {
            a_explicit: [[0.0, 0.0], [c, 0.0]],
            a_implicit: [[gamma, 0.0], [1.0 - gamma, gamma]],
            b: [1.0 - gamma, gamma],
            gamma,
            c_coeff: c,
        }
    }
}

impl ImexTableau {
    pub fn c_explicit(&self) -> [f64; 2] {
        [self.a_explicit[0].iter().sum(), self.a_explicit[1].iter().sum()]
    }

    pub fn c_implicit(&self) -> [f64; 2] {
        [self.a_implicit[0].iter().sum(), self.a_implicit[1].iter().sum()]
    }

    pub fn is_stiffly_accurate(&self) -> bool {
        self.a_implicit[1] == self.b
    }

    /// Both order-two conditions `Σb = 1` and `b·c = ½` for each half.
    pub fn order2_defect(&self) -> f64 {
        let sum_b = self.b[0] + self.b[1] - 1.0;
        let bc = |c: [f64; 2]| self.b[0] * c[0] + self.b[1] * c[1] - 0.5;
        sum_b.abs().max(bc(self.c_explicit()).abs()).max(bc(self.c_implicit()).abs())
    }
}

/// CFL constants and horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeControls {
    /// Classical CFL constant on the fastest wave.
    pub cfl_explicit: f64,
    /// Material CFL constant on the flow velocity.
    pub cfl_material: f64,
    pub t_end: f64,
    /// Cap returned when the flow is at rest.
    pub dt_max: Option<f64>,
}

impl Default for TimeControls {
    fn default() -> Self {
        Self {
            cfl_explicit: 0.4,
            cfl_material: 0.85,
            t_end: 1.0,
            dt_max: None,
        }
    }
}

/// How each step size is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CflRule {
    /// `Δt = C·Δx / max ρ(A(U))`.
    Classical(f64),
    /// `Δt = C·Δx / max |u|`.
    Material(f64),
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    Free,
    WaveGroup,
}

/// Boundary treatment. The wave group drives the left ghost with the
/// velocity signal `φ(t) = u_base + A sin(ωt)`; the right side stays free.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryCondition1D {
    pub kind: BoundaryKind,
    pub amplitude: f64,
    pub omega: f64,
    pub u_base: f64,
}

impl BoundaryCondition1D {
    pub fn free() -> Self {
        Self {
            kind: BoundaryKind::Free,
            amplitude: 0.01,
            omega: 150.0,
            u_base: 0.15,
        }
    }

    pub fn wave_group(amplitude: f64, omega: f64, u_base: f64) -> Result<Self> {
        if !(amplitude >= 0.0) {
            return Err(ExnerError::invalid("amplitude", "must be non-negative"));
        }
        if !(omega > 0.0) {
            return Err(ExnerError::invalid("omega", "must be positive"));
        }
        Ok(Self {
            kind: BoundaryKind::WaveGroup,
            amplitude,
            omega,
            u_base,
        })
    }

    /// `(φ(t), φ_t(t))`.
    pub fn signal(&self, t: f64) -> (f64, f64) {
        let (s, c) = (self.omega * t).sin_cos();
        (self.u_base + self.amplitude * s, self.amplitude * self.omega * c)
    }

    /// Ghost `(h_0, u_0)` from the first interior cell for the wave group.
    pub fn inflow_ghost(&self, h1: f64, u1: f64, t: f64, dx: f64, g: f64) -> (f64, f64) {
        let (phi, phi_t) = self.signal(t);
        (h1 + (phi_t * dx + 0.5 * (u1 * u1 - phi * phi)) / g, 2.0 * phi - u1)
    }
}

/// Arrays with `n_ghost` ghost cells per side.
#[derive(Debug, Clone, PartialEq)]
pub struct Ghosted1D {
    pub n_ghost: usize,
    pub h: Vec<f64>,
    pub q: Vec<f64>,
    pub z_b: Vec<f64>,
    pub bed: Vec<f64>,
    pub eta: Vec<f64>,
}

impl Ghosted1D {
    fn with_len(n: usize, n_ghost: usize) -> Self {
        let len = n + 2 * n_ghost;
        Self {
            n_ghost,
            h: vec![0.0; len],
            q: vec![0.0; len],
            z_b: vec![0.0; len],
            bed: vec![0.0; len],
            eta: vec![0.0; len],
        }
    }

    pub fn interior_len(&self) -> usize {
        self.h.len() - 2 * self.n_ghost
    }
}

/// Fill the ghost layers of `state` at time `t`.
pub fn apply_boundary(state: &State1D, bc: &BoundaryCondition1D, t: f64, grid: &Grid1D, p: &GrassParams) -> Ghosted1D {
    let mut out = Ghosted1D::with_len(state.len(), grid.n_ghost);
    fill_ghosted(state, bc, t, grid.dx, p.g, &mut out);
    out
}

fn fill_ghosted(state: &State1D, bc: &BoundaryCondition1D, t: f64, dx: f64, g: f64, out: &mut Ghosted1D) {
    let ng = out.n_ghost;
    let n = state.len();
    out.h[ng..ng + n].copy_from_slice(&state.h);
    out.q[ng..ng + n].copy_from_slice(&state.q);
    out.z_b[ng..ng + n].copy_from_slice(&state.z_b);
    out.bed[ng..ng + n].copy_from_slice(&state.bed);
    for k in 0..ng {
        let (l, r) = (k, ng + n + k);
        for arr in [&mut out.h, &mut out.q, &mut out.z_b, &mut out.bed] {
            arr[l] = arr[ng];
            arr[r] = arr[ng + n - 1];
        }
    }
    if bc.kind == BoundaryKind::WaveGroup {
        let u1 = velocity(state.h[0], state.q[0]);
        let (h0, u0) = bc.inflow_ghost(state.h[0], u1, t, dx, g);
        for k in 0..ng {
            out.h[k] = h0;
            out.q[k] = h0 * u0;
        }
    }
    for k in 0..n + 2 * ng {
        out.eta[k] = out.h[k] + out.bed[k] + out.z_b[k];
    }
}

/// `Δt = C_ex·Δx / max_i ρ(A(U_i))`.
pub fn dt_explicit(state: &State1D, grid: &Grid1D, p: &GrassParams, tc: &TimeControls) -> Result<f64> {
    dt_classical(state, grid, p, tc.cfl_explicit)
}

/// Classical CFL step with an arbitrary constant (used for the `CFL_IMEX` convention).
pub fn dt_classical(state: &State1D, grid: &Grid1D, p: &GrassParams, cfl: f64) -> Result<f64> {
    let mut lambda_max = 0.0f64;
    for i in 0..state.len() {
        let u = state.velocity(i);
        lambda_max = lambda_max.max(spectral_radius(state.h[i], u, p)?);
    }
    if lambda_max == 0.0 {
        return Err(ExnerError::DryState);
    }
    Ok(cfl * grid.dx / lambda_max)
}

/// `Δt = C_im·Δx / max_i |u_i|`, or `dt_max` for a fluid at rest.
pub fn dt_material(state: &State1D, grid: &Grid1D, tc: &TimeControls) -> Result<f64> {
    let u_max = state.max_abs_velocity();
    if u_max == 0.0 {
        return tc.dt_max.ok_or(ExnerError::Domain {
            what: "dt_material",
            requirement: "nonzero velocity or a dt_max cap",
            value: 0.0,
        });
    }
    let dt = tc.cfl_material * grid.dx / u_max;
    Ok(tc.dt_max.map_or(dt, |cap| dt.min(cap)))
}

/// Time-integrated flux through each end of the domain during one step
/// (positive = into the domain on the left, out of it on the right).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BoundaryFlux {
    pub eta: (f64, f64),
    pub z_b: (f64, f64),
}

impl BoundaryFlux {
    fn scaled_add(&mut self, other: &BoundaryFlux, w: f64) {
        self.eta.0 += w * other.eta.0;
        self.eta.1 += w * other.eta.1;
        self.z_b.0 += w * other.z_b.0;
        self.z_b.1 += w * other.z_b.1;
    }

    /// Net change of `Σ z_b Δx` implied by the fluxes.
    pub fn net_z_b(&self) -> f64 {
        self.z_b.0 - self.z_b.1
    }

    pub fn net_eta(&self) -> f64 {
        self.eta.0 - self.eta.1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme1D {
    ExplicitRk2,
    SemiImplicitO1,
    Imex2,
}

/// Scratch buffers reused across steps.
#[derive(Debug, Clone)]
struct Workspace {
    ghost: Ghosted1D,
    h_e: EdgeValues,
    q_e: EdgeValues,
    eta_e: EdgeValues,
    zb_e: EdgeValues,
    speed: Vec<f64>,
    f_eta: Vec<f64>,
    f_q: Vec<f64>,
    f_zb: Vec<f64>,
    q_star: Vec<f64>,
    eta_new: Vec<f64>,
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    scratch: Vec<f64>,
}

impl Workspace {
    fn new(n: usize, ng: usize) -> Self {
        let len = n + 2 * ng;
        Self {
            ghost: Ghosted1D::with_len(n, ng),
            h_e: EdgeValues::with_interfaces(n + 1),
            q_e: EdgeValues::with_interfaces(n + 1),
            eta_e: EdgeValues::with_interfaces(n + 1),
            zb_e: EdgeValues::with_interfaces(n + 1),
            speed: vec![0.0; len],
            f_eta: vec![0.0; n + 1],
            f_q: vec![0.0; n + 1],
            f_zb: vec![0.0; n + 1],
            q_star: vec![0.0; n + 2],
            eta_new: vec![0.0; n],
            lower: vec![0.0; n],
            diag: vec![0.0; n],
            upper: vec![0.0; n],
            scratch: vec![0.0; n],
        }
    }
}

/// Output of [`Solver1D::run`].
#[derive(Debug, Clone)]
pub struct Run1D {
    pub state: State1D,
    pub t: f64,
    pub steps: usize,
}

/// 1D integrator bound to a grid, closure parameters and boundary treatment.
#[derive(Debug, Clone)]
pub struct Solver1D {
    pub grid: Grid1D,
    pub params: GrassParams,
    pub bc: BoundaryCondition1D,
    pub reconstruction: Reconstruction,
    pub tableau: ImexTableau,
    last_flux: BoundaryFlux,
    ws: Workspace,
}

impl Solver1D {
    pub fn new(grid: Grid1D, params: GrassParams, bc: BoundaryCondition1D) -> Self {
        Self {
            grid,
            params,
            bc,
            reconstruction: Reconstruction::default(),
            tableau: ImexTableau::default(),
            last_flux: BoundaryFlux::default(),
            ws: Workspace::new(grid.n, grid.n_ghost),
        }
    }

    pub fn with_reconstruction(mut self, rec: Reconstruction) -> Self {
        self.reconstruction = rec;
        self
    }

    /// Boundary fluxes accumulated over the most recent step.
    pub fn last_boundary_flux(&self) -> BoundaryFlux {
        self.last_flux
    }

    pub fn apply_boundary(&self, state: &State1D, t: f64) -> Ghosted1D {
        apply_boundary(state, &self.bc, t, &self.grid, &self.params)
    }

    fn check_len(&self, state: &State1D) -> Result<()> {
        if state.len() != self.grid.n {
            return Err(ExnerError::SizeMismatch { expected: self.grid.n, found: state.len() });
        }
        Ok(())
    }

    pub fn time_step(&self, state: &State1D, rule: CflRule) -> Result<f64> {
        match rule {
            CflRule::Classical(c) => dt_classical(state, &self.grid, &self.params, c),
            CflRule::Material(c) => dt_material(
                state,
                &self.grid,
                &TimeControls { cfl_material: c, ..Default::default() },
            ),
            CflRule::Fixed(dt) => Ok(dt),
        }
    }

    pub fn step(&mut self, scheme: Scheme1D, state: &State1D, t: f64, dt: f64) -> Result<State1D> {
        match scheme {
            Scheme1D::ExplicitRk2 => self.step_explicit_rk2(state, t, dt),
            Scheme1D::SemiImplicitO1 => self.step_semi_implicit_o1(state, t, dt),
            Scheme1D::Imex2 => self.step_imex2(state, t, dt),
        }
    }

    /// Integrate to `t_end`, clamping the last step onto it. `observer` sees
    /// every accepted state.
    pub fn run<F>(&mut self, state: State1D, scheme: Scheme1D, rule: CflRule, t_end: f64, mut observer: F) -> Result<Run1D>
    where
        F: FnMut(f64, &State1D),
    {
        let mut state = state;
        let mut t = 0.0;
        let mut steps = 0;
        while t < t_end {
            let mut dt = self.time_step(&state, rule)?;
            if t + dt >= t_end || t_end - (t + dt) < 1e-12 * t_end {
                dt = t_end - t;
            }
            state = self.step(scheme, &state, t, dt)?;
            t = if dt == t_end - t { t_end } else { t + dt };
            steps += 1;
            observer(t, &state);
        }
        Ok(Run1D { state, t, steps })
    }

    /// Reconstructed traces of the ghosted workspace state.
    fn reconstruct_all(&mut self) {
        let ws = &mut self.ws;
        let ng = ws.ghost.n_ghost;
        reconstruct_into(&ws.ghost.h, ng, self.reconstruction, &mut ws.h_e);
        reconstruct_into(&ws.ghost.q, ng, self.reconstruction, &mut ws.q_e);
        reconstruct_into(&ws.ghost.eta, ng, self.reconstruction, &mut ws.eta_e);
        reconstruct_into(&ws.ghost.z_b, ng, self.reconstruction, &mut ws.zb_e);
    }

    /// Rusanov fluxes of the explicit subsystem with `α = max(|u⁻|, |u⁺|)`:
    /// `qu` for the discharge and `q_b` for both `η` and `z_b`.
    fn material_fluxes(&mut self) {
        self.reconstruct_all();
        let p = self.params;
        let ws = &mut self.ws;
        for j in 0..=self.grid.n {
            let (hl, hr) = (ws.h_e.left[j], ws.h_e.right[j]);
            let (ql, qr) = (ws.q_e.left[j], ws.q_e.right[j]);
            let (ul, ur) = (velocity(hl, ql), velocity(hr, qr));
            let alpha = ul.abs().max(ur.abs());
            let (qbl, qbr) = (grass_flux_1d(ul, &p), grass_flux_1d(ur, &p));
            ws.f_q[j] = rusanov(ql * ul, qr * ur, ql, qr, alpha);
            ws.f_eta[j] = rusanov(qbl, qbr, ws.eta_e.left[j], ws.eta_e.right[j], alpha);
            ws.f_zb[j] = rusanov(qbl, qbr, ws.zb_e.left[j], ws.zb_e.right[j], alpha);
        }
    }

    /// One implicit stage `U = base + τ H(U_E, U)`: explicit fluxes come from
    /// `explicit` (ghosts at `t_explicit`), the free-surface coupling is solved
    /// at `t_implicit`.
    fn semi_implicit_stage(
        &mut self,
        base: &State1D,
        explicit: &State1D,
        t_explicit: f64,
        t_implicit: f64,
        tau: f64,
    ) -> Result<(State1D, BoundaryFlux)> {
        let n = self.grid.n;
        let dx = self.grid.dx;
        let g = self.params.g;
        let ng = self.grid.n_ghost;
        fill_ghosted(explicit, &self.bc, t_explicit, dx, g, &mut self.ws.ghost);
        self.material_fluxes();

        // Ghost jumps η_ghost - η_adjacent for the implicit closure, plus the
        // ghost discharge entering the centered divergence.
        let (jump_left, q_ghost_left) = match self.bc.kind {
            BoundaryKind::Free => (0.0, None),
            BoundaryKind::WaveGroup => {
                let h1 = explicit.h[0];
                let u1 = velocity(h1, explicit.q[0]);
                let (h0, u0) = self.bc.inflow_ghost(h1, u1, t_implicit, dx, g);
                (h0 - h1, Some(h0 * u0))
            }
        };
        let jump_right = 0.0;

        let ws = &mut self.ws;
        let ratio = tau / dx;
        // q* with one ghost per side (index shift 1).
        for i in 0..n {
            ws.q_star[i + 1] = base.q[i] - ratio * (ws.f_q[i + 1] - ws.f_q[i]);
        }
        ws.q_star[0] = q_ghost_left.unwrap_or(ws.q_star[1]);
        ws.q_star[n + 1] = ws.q_star[n];

        // η* on the right-hand side, then the tridiagonal free-surface system.
        let k = g * ratio * ratio;
        let h = &ws.ghost.h;
        for i in 0..n {
            let eta_base = base.h[i] + base.bed[i] + base.z_b[i];
            let eta_star = eta_base
                - ratio * (ws.f_eta[i + 1] - ws.f_eta[i])
                - 0.5 * ratio * (ws.q_star[i + 2] - ws.q_star[i]);
            let hm = 0.5 * (h[ng + i - 1] + h[ng + i]);
            let hp = 0.5 * (h[ng + i] + h[ng + i + 1]);
            let mut diag = 1.0 + k * (hm + hp);
            let mut rhs = eta_star;
            if i == 0 {
                diag -= k * hm;
                rhs += k * hm * jump_left;
            }
            if i + 1 == n {
                diag -= k * hp;
                rhs += k * hp * jump_right;
            }
            ws.lower[i] = -k * hm;
            ws.upper[i] = -k * hp;
            ws.diag[i] = diag;
            ws.eta_new[i] = rhs;
        }
        thomas_in_place(&ws.lower, &ws.diag, &ws.upper, &mut ws.eta_new, &mut ws.scratch)?;

        let eta = &ws.eta_new;
        let eta_at = |i: isize| -> f64 {
            if i < 0 {
                eta[0] + jump_left
            } else if i as usize >= n {
                eta[n - 1] + jump_right
            } else {
                eta[i as usize]
            }
        };
        let mut out = State1D {
            h: vec![0.0; n],
            q: vec![0.0; n],
            z_b: vec![0.0; n],
            bed: base.bed.clone(),
        };
        for i in 0..n {
            let grad = eta_at(i as isize + 1) - eta_at(i as isize - 1);
            out.q[i] = ws.q_star[i + 1] - 0.5 * g * ratio * h[ng + i] * grad;
            out.z_b[i] = base.z_b[i] - ratio * (ws.f_zb[i + 1] - ws.f_zb[i]);
            out.h[i] = eta[i] - out.z_b[i] - base.bed[i];
        }

        let h_left = 0.5 * (h[ng - 1] + h[ng]);
        let h_right = 0.5 * (h[ng + n - 1] + h[ng + n]);
        let flux = BoundaryFlux {
            eta: (
                tau * (ws.f_eta[0] + 0.5 * (ws.q_star[0] + ws.q_star[1])) + dx * k * h_left * jump_left,
                tau * (ws.f_eta[n] + 0.5 * (ws.q_star[n] + ws.q_star[n + 1])) - dx * k * h_right * jump_right,
            ),
            z_b: (tau * ws.f_zb[0], tau * ws.f_zb[n]),
        };
        out.check_depth()?;
        Ok((out, flux))
    }

    /// First-order semi-implicit step.
    pub fn step_semi_implicit_o1(&mut self, state: &State1D, t: f64, dt: f64) -> Result<State1D> {
        self.check_len(state)?;
        let (next, flux) = self.semi_implicit_stage(state, state, t, t + dt, dt)?;
        self.last_flux = flux;
        Ok(next)
    }

    /// Two-stage IMEX step; the result is the last implicit stage.
    pub fn step_imex2(&mut self, state: &State1D, t: f64, dt: f64) -> Result<State1D> {
        self.check_len(state)?;
        let tab = self.tableau;
        let gamma = tab.gamma;
        let (stage1, flux1) = self.semi_implicit_stage(state, state, t, t + gamma * dt, gamma * dt)?;

        let w_e = tab.c_coeff / gamma;
        let w_i = (1.0 - gamma) / gamma;
        let explicit2 = affine(state, &stage1, w_e);
        let base2 = affine(state, &stage1, w_i);
        let (next, flux2) =
            self.semi_implicit_stage(&base2, &explicit2, t + tab.c_coeff * dt, t + dt, gamma * dt)?;

        let mut flux = flux2;
        flux.scaled_add(&flux1, w_i);
        self.last_flux = flux;
        Ok(next)
    }

    /// Explicit right-hand side `L(U)` for the full system, written into
    /// `(dη, dq, dz_b)`. Water fluxes use the spectral radius as Rusanov
    /// speed; the sediment layer uses the flow speed, which keeps a lake at
    /// rest exactly steady.
    fn explicit_rhs(&mut self, state: &State1D, t: f64, out: &mut [Vec<f64>; 3]) -> Result<(f64, f64, f64, f64)> {
        let n = self.grid.n;
        let dx = self.grid.dx;
        let p = self.params;
        let ng = self.grid.n_ghost;
        fill_ghosted(state, &self.bc, t, dx, p.g, &mut self.ws.ghost);
        for k in ng - 1..=ng + n {
            let (h, q) = (self.ws.ghost.h[k], self.ws.ghost.q[k]);
            self.ws.speed[k] = spectral_radius(h, velocity(h, q), &p)?;
        }
        self.reconstruct_all();
        let ws = &mut self.ws;
        for j in 0..=n {
            let alpha = ws.speed[ng - 1 + j].max(ws.speed[ng + j]);
            let (hl, hr) = (ws.h_e.left[j], ws.h_e.right[j]);
            let (ql, qr) = (ws.q_e.left[j], ws.q_e.right[j]);
            let (ul, ur) = (velocity(hl, ql), velocity(hr, qr));
            let (qbl, qbr) = (grass_flux_1d(ul, &p), grass_flux_1d(ur, &p));
            ws.f_eta[j] = rusanov(ql + qbl, qr + qbr, ws.eta_e.left[j], ws.eta_e.right[j], alpha);
            ws.f_q[j] = rusanov(ql * ul, qr * ur, ql, qr, alpha);
            let alpha_bed = ul.abs().max(ur.abs());
            ws.f_zb[j] = rusanov(qbl, qbr, ws.zb_e.left[j], ws.zb_e.right[j], alpha_bed);
        }
        let eta = &ws.ghost.eta;
        let h = &ws.ghost.h;
        for i in 0..n {
            let c = ng + i;
            out[0][i] = -(ws.f_eta[i + 1] - ws.f_eta[i]) / dx;
            out[1][i] = -(ws.f_q[i + 1] - ws.f_q[i]) / dx - p.g * h[c] * (eta[c + 1] - eta[c - 1]) / (2.0 * dx);
            out[2][i] = -(ws.f_zb[i + 1] - ws.f_zb[i]) / dx;
        }
        Ok((ws.f_eta[0], ws.f_eta[n], ws.f_zb[0], ws.f_zb[n]))
    }

    /// Heun (SSP-RK2) step of the full system with every wave explicit.
    pub fn step_explicit_rk2(&mut self, state: &State1D, t: f64, dt: f64) -> Result<State1D> {
        self.check_len(state)?;
        let n = self.grid.n;
        let mut rhs = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        let f1 = self.explicit_rhs(state, t, &mut rhs)?;
        let euler = |s: &State1D, rhs: &[Vec<f64>; 3], dt: f64| -> State1D {
            let mut out = s.clone();
            for i in 0..n {
                let eta = s.h[i] + s.bed[i] + s.z_b[i] + dt * rhs[0][i];
                out.q[i] = s.q[i] + dt * rhs[1][i];
                out.z_b[i] = s.z_b[i] + dt * rhs[2][i];
                out.h[i] = eta - out.z_b[i] - s.bed[i];
            }
            out
        };
        let stage = euler(state, &rhs, dt);
        stage.check_depth()?;
        let f2 = self.explicit_rhs(&stage, t + dt, &mut rhs)?;
        let second = euler(&stage, &rhs, dt);
        let mut out = affine(state, &second, 0.5);
        out.check_depth()?;
        self.last_flux = BoundaryFlux {
            eta: (0.5 * dt * (f1.0 + f2.0), 0.5 * dt * (f1.1 + f2.1)),
            z_b: (0.5 * dt * (f1.2 + f2.2), 0.5 * dt * (f1.3 + f2.3)),
        };
        // Keep η consistent with the averaged components.
        for i in 0..n {
            let eta = 0.5 * (state.h[i] + state.bed[i] + state.z_b[i]) + 0.5 * (second.h[i] + second.bed[i] + second.z_b[i]);
            out.h[i] = eta - out.z_b[i] - out.bed[i];
        }
        Ok(out)
    }
}

/// `(1 - w)·a + w·b` component-wise (bathymetry copied from `a`).
fn affine(a: &State1D, b: &State1D, w: f64) -> State1D {
    let mix = |x: &[f64], y: &[f64]| -> Vec<f64> { x.iter().zip(y).map(|(x, y)| (1.0 - w) * x + w * y).collect() };
    State1D {
        h: mix(&a.h, &b.h),
        q: mix(&a.q, &b.q),
        z_b: mix(&a.z_b, &b.z_b),
        bed: a.bed.clone(),
    }
}
