//! Quasi-stationary scalar reduction of the 1D system.
//!
//! Under weak coupling the water adjusts instantly to the bed, so
//! `q + q_b = Q` and `G(u) + g(h + z_b + b) = C` hold along the channel and
//! the whole state is a function of `u`, which obeys `u_t + λ(u) u_x = 0`.
//! Here the porosity factor is folded into the transport constant:
//! `q_b = A u^m` with `A = ξ A_g`.

use crate::error::{ExnerError, Result};
use crate::model::{GrassParams, State1D};

/// Invariants of the quasi-stationary state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarModelConstants {
    /// Total discharge `q + q_b`.
    pub q_total: f64,
    /// Bernoulli-like constant `G(u) + g(h + z_b + b)`.
    pub c: f64,
    /// Effective Grass constant `ξ A_g`.
    pub a_eff: f64,
    pub m_g: f64,
    pub g: f64,
    /// Velocity at which `G` vanishes.
    pub u_ref: f64,
}

impl ScalarModelConstants {
    pub fn new(q_total: f64, c: f64, a_eff: f64, m_g: f64, g: f64, u_ref: f64) -> Result<Self> {
        if !(q_total > 0.0) {
            return Err(ExnerError::invalid("q_total", format!("must be positive, got {q_total}")));
        }
        if !(a_eff >= 0.0) || !(m_g >= 1.0) || !(g > 0.0) {
            return Err(ExnerError::invalid("a_eff/m_g/g", "need a_eff >= 0, m_g >= 1, g > 0"));
        }
        if !(u_ref > 0.0) {
            return Err(ExnerError::invalid("u_ref", "must be positive"));
        }
        Ok(Self { q_total, c, a_eff, m_g, g, u_ref })
    }

    /// Constants anchored at the left end of the domain:
    /// `Q = q(a) + q_b(a)` and `C = G(u(a)) + g(h(a) + z_b(a) + b(a))`,
    /// with the gauge `G(u(a)) = 0`.
    pub fn from_inflow(p: &GrassParams, u_a: f64, h_a: f64, zb_a: f64, b_a: f64) -> Result<Self> {
        if !(u_a > 0.0) {
            return Err(ExnerError::Domain {
                what: "scalar model",
                requirement: "u > 0",
                value: u_a,
            });
        }
        let a_eff = p.transport_coefficient();
        let q_total = h_a * u_a + a_eff * GrassParams::pow(u_a, p.m_g);
        Self::new(q_total, p.g * (h_a + zb_a + b_a), a_eff, p.m_g, p.g, u_a)
    }

    fn sediment(&self, u: f64) -> f64 {
        self.a_eff * GrassParams::pow(u, self.m_g)
    }
}

fn require_positive(u: f64) -> Result<()> {
    if u > 0.0 {
        Ok(())
    } else {
        Err(ExnerError::Domain {
            what: "scalar model",
            requirement: "u > 0",
            value: u,
        })
    }
}

/// `h(u) = Q/u − A u^{m−1}`.
pub fn h_of_u(u: f64, k: &ScalarModelConstants) -> Result<f64> {
    require_positive(u)?;
    let h = k.q_total / u - k.a_eff * GrassParams::pow(u, k.m_g - 1.0);
    if h <= 0.0 {
        return Err(ExnerError::Consistency(format!("h(u) = {h:e} <= 0 at u = {u}")));
    }
    Ok(h)
}

/// `G′(u) = u (Q − (m+1) A u^m) / (Q − A u^m)`.
pub fn g_prime(u: f64, k: &ScalarModelConstants) -> Result<f64> {
    let qb = k.sediment(u);
    let denom = k.q_total - qb;
    if denom == 0.0 {
        return Err(ExnerError::Domain {
            what: "G'",
            requirement: "q = Q - A u^m nonzero",
            value: u,
        });
    }
    Ok(u * (k.q_total - (k.m_g + 1.0) * qb) / denom)
}

fn g_second(u: f64, k: &ScalarModelConstants) -> f64 {
    let qb = k.sediment(u);
    let denom = k.q_total - qb;
    let r = (k.q_total - (k.m_g + 1.0) * qb) / denom;
    r - k.m_g * k.m_g * k.q_total * qb / (denom * denom)
}

/// `G(u) = ∫_{u_ref}^{u} G′(s) ds` by adaptive Simpson quadrature.
pub fn g_of_u(u: f64, u_ref: f64, k: &ScalarModelConstants) -> Result<f64> {
    if u == u_ref {
        return Ok(0.0);
    }
    if k.a_eff > 0.0 {
        let singular = (k.q_total / k.a_eff).powf(1.0 / k.m_g);
        let (lo, hi) = if u < u_ref { (u, u_ref) } else { (u_ref, u) };
        if lo <= singular && singular <= hi {
            return Err(ExnerError::Domain {
                what: "G",
                requirement: "integration path free of the q = 0 singularity",
                value: singular,
            });
        }
    }
    let f = |s: f64| g_prime(s, k);
    adaptive_simpson(&f, u_ref, u, 1e-12)
}

fn adaptive_simpson<F: Fn(f64) -> Result<f64>>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    fn simpson(a: f64, fa: f64, b: f64, fb: f64, fm: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> Result<f64>>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64> {
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let (flm, frm) = (f(lm)?, f(rm)?);
        let left = simpson(a, fa, m, fm, flm);
        let right = simpson(m, fm, b, fb, frm);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return Ok(left + right + delta / 15.0);
        }
        Ok(recurse(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1)?
            + recurse(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1)?)
    }
    let m = 0.5 * (a + b);
    let (fa, fb, fm) = (f(a)?, f(b)?, f(m)?);
    let whole = simpson(a, fa, b, fb, fm);
    recurse(f, a, fa, b, fb, m, fm, whole, tol, 48)
}

/// `z_b′(u) = −G′(u)/g + (Q + (m−1) A u^m)/u²`.
pub fn zb_prime(u: f64, k: &ScalarModelConstants) -> Result<f64> {
    require_positive(u)?;
    Ok(-g_prime(u, k)? / k.g + (k.q_total + (k.m_g - 1.0) * k.sediment(u)) / (u * u))
}

/// `z_b(u) = (C − G(u))/g − h(u) − b`.
pub fn zb_of_u(u: f64, b: f64, k: &ScalarModelConstants) -> Result<f64> {
    Ok((k.c - g_of_u(u, k.u_ref, k)?) / k.g - h_of_u(u, k)? - b)
}

/// Transport speed `λ(u) = m A u^{m−1} / z_b′(u)`.
pub fn lambda_scalar(u: f64, k: &ScalarModelConstants) -> Result<f64> {
    let denom = zb_prime(u, k)?;
    if denom <= 0.0 {
        return Err(ExnerError::Domain {
            what: "lambda_scalar",
            requirement: "positive denominator (subsonic regime)",
            value: denom,
        });
    }
    Ok(k.m_g * k.a_eff * GrassParams::pow(u, k.m_g - 1.0) / denom)
}

/// `λ = βu / (1 − F² + β(1 + F²))` with `β` and `F` evaluated at `h(u)`.
pub fn lambda_closed_form(u: f64, k: &ScalarModelConstants) -> Result<f64> {
    let h = h_of_u(u, k)?;
    let beta = k.m_g * k.a_eff * GrassParams::pow(u, k.m_g - 1.0) / h;
    let f2 = u * u / (k.g * h);
    let denom = 1.0 - f2 + beta * (1.0 + f2);
    if denom <= 0.0 {
        return Err(ExnerError::Domain {
            what: "lambda_closed_form",
            requirement: "positive denominator (subsonic regime)",
            value: denom,
        });
    }
    Ok(beta * u / denom)
}

/// Analytic `dλ/du`.
pub fn lambda_scalar_derivative(u: f64, k: &ScalarModelConstants) -> Result<f64> {
    let d = zb_prime(u, k)?;
    if d <= 0.0 {
        return Err(ExnerError::Domain {
            what: "lambda_scalar_derivative",
            requirement: "positive denominator (subsonic regime)",
            value: d,
        });
    }
    let (m, a) = (k.m_g, k.a_eff);
    let num = m * a * GrassParams::pow(u, m - 1.0);
    let num_p = m * (m - 1.0) * a * GrassParams::pow(u, m - 2.0);
    let p = k.q_total + (m - 1.0) * k.sediment(u);
    let p_p = m * (m - 1.0) * a * GrassParams::pow(u, m - 1.0);
    let d_p = p_p / (u * u) - 2.0 * p / (u * u * u) - g_second(u, k) / k.g;
    Ok((num_p * d - num * d_p) / (d * d))
}

/// Lax-Wendroff update for `u_t + λ(u) u_x = 0` with a user-supplied
/// `u ↦ (λ, λ′)`; zero-gradient ghosts on both ends.
///
/// The second-order term is `λ(λ u_x)_x + λλ′ u_x²`, so the `λ′` part
/// carries the squared central difference.
pub fn step_lax_wendroff_with<F>(u: &[f64], dt: f64, dx: f64, speed: F) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Result<(f64, f64)>,
{
    let n = u.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let lam: Vec<(f64, f64)> = u.iter().map(|&v| speed(v)).collect::<Result<_>>()?;
    let at = |i: isize| u[i.clamp(0, n as isize - 1) as usize];
    let lam_at = |i: isize| lam[i.clamp(0, n as isize - 1) as usize].0;
    let mut out = vec![0.0; n];
    for i in 0..n {
        let ii = i as isize;
        let (l, lp) = lam[i];
        let (um, u0, up) = (at(ii - 1), at(ii), at(ii + 1));
        let central = (up - um) / (2.0 * dx);
        let l_plus = 0.5 * (l + lam_at(ii + 1));
        let l_minus = 0.5 * (lam_at(ii - 1) + l);
        let second = (l_plus * (up - u0) - l_minus * (u0 - um)) / (dx * dx);
        out[i] = u0 - dt * l * central + 0.5 * dt * dt * l * (lp * central * central + second);
    }
    Ok(out)
}

/// Lax-Wendroff step of the scalar model.
pub fn step_lax_wendroff(u: &[f64], dt: f64, dx: f64, k: &ScalarModelConstants) -> Result<Vec<f64>> {
    step_lax_wendroff_with(u, dt, dx, |v| Ok((lambda_scalar(v, k)?, lambda_scalar_derivative(v, k)?)))
}

/// Largest `|λ(u_i)|`.
pub fn max_speed(u: &[f64], k: &ScalarModelConstants) -> Result<f64> {
    u.iter().try_fold(0.0f64, |acc, &v| Ok(acc.max(lambda_scalar(v, k)?.abs())))
}

/// Integrate to `t_end` with `Δt = CFL·Δx / max|λ|`, landing exactly on `t_end`.
pub fn run_lax_wendroff(u0: &[f64], dx: f64, k: &ScalarModelConstants, cfl: f64, t_end: f64) -> Result<(Vec<f64>, usize)> {
    let mut u = u0.to_vec();
    let mut t = 0.0;
    let mut steps = 0;
    while t < t_end {
        let speed = max_speed(&u, k)?;
        let mut dt = if speed > 0.0 { cfl * dx / speed } else { t_end - t };
        let last = t + dt >= t_end || t_end - (t + dt) < 1e-12 * t_end;
        if last {
            dt = t_end - t;
        }
        u = step_lax_wendroff(&u, dt, dx, k)?;
        t = if last { t_end } else { t + dt };
        steps += 1;
    }
    Ok((u, steps))
}

/// Full-system state consistent with the scalar model for the velocity
/// profile `u` and bathymetry `b`. `Q` and `C` are anchored at the first cell
/// with depth `h_left` and bed `zb_left`; elsewhere `h` follows `h(u)`.
pub fn build_full_state_from_u(
    u: &[f64],
    h_left: f64,
    zb_left: f64,
    b: &[f64],
    p: &GrassParams,
) -> Result<(State1D, ScalarModelConstants)> {
    if u.is_empty() || u.len() != b.len() {
        return Err(ExnerError::SizeMismatch { expected: u.len(), found: b.len() });
    }
    let k = ScalarModelConstants::from_inflow(p, u[0], h_left, zb_left, b[0])?;
    let state = state_from_u(u, b, &k)?;
    Ok((state, k))
}

/// Quasi-stationary state for given constants.
pub fn state_from_u(u: &[f64], b: &[f64], k: &ScalarModelConstants) -> Result<State1D> {
    let n = u.len();
    let (mut h, mut q, mut z_b) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for i in 0..n {
        h[i] = h_of_u(u[i], k).map_err(|e| ExnerError::Consistency(format!("cell {i}: {e}")))?;
        q[i] = h[i] * u[i];
        z_b[i] = zb_of_u(u[i], b[i], k)?;
        if z_b[i] < 0.0 {
            return Err(ExnerError::Consistency(format!("negative sediment layer {:e} in cell {i}", z_b[i])));
        }
    }
    State1D::new(h, q, z_b, b.to_vec())
}
