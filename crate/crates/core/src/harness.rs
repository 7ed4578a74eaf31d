//! Experiment presets, error metrics, convergence and modeling-error studies,
//! the wave-group run, the spread-angle measurement and field dumps.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;
use std::time::Instant;

use crate::error::{ExnerError, Result};
use crate::model::{GrassParams, Grid1D, Grid2D, State1D, State2D};
use crate::scalar::{build_full_state_from_u, run_lax_wendroff, state_from_u};
use crate::solver1d::{BoundaryCondition1D, CflRule, Scheme1D, Solver1D};
use crate::solver2d::{Scheme2D, Solver2D};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    ExplicitO2,
    SemiO1,
    Imex2,
    ScalarLw,
    Semi2dO1,
    Imex2d,
}

impl SolverKind {
    pub const ALL: [SolverKind; 6] = [
        SolverKind::ExplicitO2,
        SolverKind::SemiO1,
        SolverKind::Imex2,
        SolverKind::ScalarLw,
        SolverKind::Semi2dO1,
        SolverKind::Imex2d,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::ExplicitO2 => "explicit_o2",
            SolverKind::SemiO1 => "semi_o1",
            SolverKind::Imex2 => "imex2",
            SolverKind::ScalarLw => "scalar_lw",
            SolverKind::Semi2dO1 => "semi2d_o1",
            SolverKind::Imex2d => "imex2d",
        }
    }

    pub fn is_2d(self) -> bool {
        matches!(self, SolverKind::Semi2dO1 | SolverKind::Imex2d)
    }

    pub fn scheme_1d(self) -> Option<Scheme1D> {
        match self {
            SolverKind::ExplicitO2 => Some(Scheme1D::ExplicitRk2),
            SolverKind::SemiO1 => Some(Scheme1D::SemiImplicitO1),
            SolverKind::Imex2 => Some(Scheme1D::Imex2),
            _ => None,
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = ExnerError;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| ExnerError::invalid("solver", format!("unknown solver `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CflKind {
    /// Relative to the fastest characteristic speed.
    Classical,
    /// Relative to the flow velocity.
    Material,
    /// `cfl` is the step size itself.
    Fixed,
}

impl FromStr for CflKind {
    type Err = ExnerError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classical" => Ok(CflKind::Classical),
            "material" => Ok(CflKind::Material),
            "fixed" => Ok(CflKind::Fixed),
            _ => Err(ExnerError::invalid("cfl_kind", format!("expected classical, material or fixed, got `{s}`"))),
        }
    }
}

impl fmt::Display for CflKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CflKind::Classical => "classical",
            CflKind::Material => "material",
            CflKind::Fixed => "fixed",
        })
    }
}

/// Initial-data families of the presets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialCondition {
    /// Quasi-stationary state built from `u₀ = u_base + δ·exp(−(x−x_c)²/w²)`.
    QuasiStationary { u_base: f64, delta: f64, center: f64, width: f64, h_left: f64, zb_left: f64 },
    /// Uniform flow over the dune `z_b = 0.1 + 0.1·exp(−(x+1)²/0.16)`.
    WaveGroupDune { h: f64, u: f64 },
    /// `η = η₀`, constant discharges, `z_b = 0.1 + δ·exp(−(x−0.4)²/0.16 − s·(y−3)²)`
    /// with `s = 0` for the ridge and `s = 1` for the cone.
    Dune2D { eta0: f64, m0: f64, n0: f64, delta: f64, y_decay: f64 },
}

/// Complete description of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub name: String,
    pub solver: SolverKind,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub n: usize,
    pub ny: usize,
    pub a_g: f64,
    pub m_g: f64,
    pub rho0: f64,
    pub cfl_kind: CflKind,
    pub cfl: f64,
    pub t_end: f64,
    pub initial: InitialCondition,
    pub boundary: BoundaryCondition1D,
    /// Dump a field every `k` steps (0 = only at the end).
    pub output_every: usize,
}

pub const PRESET_NAMES: [&str; 5] = ["test5_1", "test5_2", "test5_3", "test8_1", "test8_2"];

impl ExperimentSpec {
    /// Order-of-accuracy test on `[-2, 4]`.
    pub fn test5_1() -> Self {
        Self {
            name: "test5_1".into(),
            solver: SolverKind::Imex2,
            x_range: (-2.0, 4.0),
            y_range: (0.0, 0.0),
            n: 200,
            ny: 1,
            a_g: 0.1,
            m_g: 3.0,
            rho0: 0.2,
            cfl_kind: CflKind::Classical,
            cfl: 15.0,
            t_end: 1400.0,
            initial: InitialCondition::QuasiStationary {
                u_base: 0.1,
                delta: 0.006,
                center: 0.4,
                width: 0.4,
                h_left: 0.5,
                zb_left: 0.1,
            },
            boundary: BoundaryCondition1D::free(),
            output_every: 0,
        }
    }

    /// Strong-coupling modeling-error test on `[-2.5, 20]`.
    pub fn test5_2() -> Self {
        Self {
            name: "test5_2".into(),
            x_range: (-2.5, 20.0),
            n: 1600,
            a_g: 0.9,
            cfl: 1.0,
            t_end: 1000.0,
            initial: InitialCondition::QuasiStationary {
                u_base: 1.0,
                delta: 0.006,
                center: -1.0,
                width: 0.4,
                h_left: 4.21,
                zb_left: 0.1,
            },
            ..Self::test5_1()
        }
    }

    /// Dune under a wave group entering from the left, on `[-2, 26]`.
    pub fn test5_3() -> Self {
        Self {
            name: "test5_3".into(),
            x_range: (-2.0, 26.0),
            n: 2000,
            cfl: 9.0,
            t_end: 17_500.0,
            initial: InitialCondition::WaveGroupDune { h: 1.0, u: 0.15 },
            boundary: BoundaryCondition1D {
                kind: crate::solver1d::BoundaryKind::WaveGroup,
                amplitude: 0.01,
                omega: 150.0,
                u_base: 0.15,
            },
            ..Self::test5_1()
        }
    }

    /// Parabolic (ridge) sediment in 2D.
    pub fn test8_1() -> Self {
        Self {
            name: "test8_1".into(),
            solver: SolverKind::Imex2d,
            x_range: (-2.0, 6.0),
            y_range: (-2.0, 6.0),
            n: 100,
            ny: 100,
            cfl: 6.0,
            t_end: 450.0,
            initial: InitialCondition::Dune2D { eta0: 0.6, m0: 0.1, n0: 0.01, delta: 0.006, y_decay: 0.0 },
            ..Self::test5_1()
        }
    }

    /// Conical sediment in 2D.
    pub fn test8_2() -> Self {
        Self {
            name: "test8_2".into(),
            n: 300,
            ny: 300,
            cfl: 12.0,
            t_end: 2500.0,
            initial: InitialCondition::Dune2D { eta0: 1.8, m0: 0.3, n0: 0.0, delta: 0.006, y_decay: 1.0 },
            ..Self::test8_1()
        }
    }

    pub fn presets() -> Vec<Self> {
        vec![Self::test5_1(), Self::test5_2(), Self::test5_3(), Self::test8_1(), Self::test8_2()]
    }

    pub fn preset(name: &str) -> Result<Self> {
        Self::presets()
            .into_iter()
            .find(|s| s.name == name)
            .ok_or_else(|| ExnerError::invalid("experiment", format!("unknown preset `{name}`")))
    }

    /// Switch solver, picking the CFL value the order study uses for it.
    pub fn with_solver(mut self, solver: SolverKind) -> Self {
        if self.name == "test5_1" {
            self.cfl = match solver {
                SolverKind::ScalarLw => 0.9,
                SolverKind::ExplicitO2 => 0.4,
                _ => 15.0,
            };
        }
        self.solver = solver;
        self
    }

    pub fn with_n(mut self, n: usize) -> Self {
        if self.solver.is_2d() {
            self.ny = n;
        }
        self.n = n;
        self
    }

    pub fn params(&self) -> Result<GrassParams> {
        GrassParams::new(self.a_g, self.m_g, self.rho0)
    }

    pub fn grid_1d(&self) -> Result<Grid1D> {
        Grid1D::new(self.x_range.0, self.x_range.1, self.n)
    }

    pub fn grid_2d(&self) -> Result<Grid2D> {
        Grid2D::new(self.x_range, self.y_range, self.n, self.ny)
    }

    pub fn cfl_rule(&self) -> CflRule {
        match self.cfl_kind {
            CflKind::Classical => CflRule::Classical(self.cfl),
            CflKind::Material => CflRule::Material(self.cfl),
            CflKind::Fixed => CflRule::Fixed(self.cfl),
        }
    }

    /// Reject inconsistent combinations before anything is allocated.
    pub fn validate(&self) -> Result<()> {
        self.params()?;
        if self.n < 4 || (self.solver.is_2d() && self.ny < 4) {
            return Err(ExnerError::invalid("N", "need at least 4 cells per direction"));
        }
        if !(self.cfl > 0.0 && self.cfl.is_finite()) {
            return Err(ExnerError::invalid("cfl", format!("must be positive, got {}", self.cfl)));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(ExnerError::invalid("t_end", format!("must be positive, got {}", self.t_end)));
        }
        let is_2d_data = matches!(self.initial, InitialCondition::Dune2D { .. });
        if is_2d_data != self.solver.is_2d() {
            return Err(ExnerError::invalid(
                "solver",
                format!("`{}` does not apply to experiment `{}`", self.solver, self.name),
            ));
        }
        if self.solver == SolverKind::ScalarLw && !matches!(self.initial, InitialCondition::QuasiStationary { .. }) {
            return Err(ExnerError::invalid("solver", "scalar_lw needs quasi-stationary initial data"));
        }
        Ok(())
    }

    /// Initial velocity profile of a quasi-stationary preset.
    pub fn initial_velocity(&self) -> Result<Vec<f64>> {
        match self.initial {
            InitialCondition::QuasiStationary { u_base, delta, center, width, .. } => Ok(self
                .grid_1d()?
                .centers()
                .iter()
                .map(|x| u_base + delta * (-((x - center) / width).powi(2)).exp())
                .collect()),
            _ => Err(ExnerError::invalid("initial", "not a quasi-stationary preset")),
        }
    }

    pub fn initial_state_1d(&self) -> Result<State1D> {
        let grid = self.grid_1d()?;
        match self.initial {
            InitialCondition::QuasiStationary { h_left, zb_left, .. } => {
                let u = self.initial_velocity()?;
                Ok(build_full_state_from_u(&u, h_left, zb_left, &vec![0.0; grid.n], &self.params()?)?.0)
            }
            InitialCondition::WaveGroupDune { h, u } => {
                let z_b: Vec<f64> = grid.centers().iter().map(|x| 0.1 + 0.1 * (-((x + 1.0) / 0.4).powi(2)).exp()).collect();
                State1D::new(vec![h; grid.n], vec![h * u; grid.n], z_b, vec![0.0; grid.n])
            }
            InitialCondition::Dune2D { .. } => Err(ExnerError::invalid("initial", "2D preset")),
        }
    }

    pub fn initial_state_2d(&self) -> Result<State2D> {
        let grid = self.grid_2d()?;
        let InitialCondition::Dune2D { eta0, m0, n0, delta, y_decay } = self.initial else {
            return Err(ExnerError::invalid("initial", "1D preset"));
        };
        let len = grid.len();
        let mut z_b = vec![0.0; len];
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let (x, y) = (grid.x_center(i), grid.y_center(j));
                z_b[grid.index(i, j)] = 0.1 + delta * (-((x - 0.4) / 0.4).powi(2) - y_decay * (y - 3.0).powi(2)).exp();
            }
        }
        let h = z_b.iter().map(|z| eta0 - z).collect();
        State2D::new(grid.nx, grid.ny, h, vec![m0; len], vec![n0; len], z_b, vec![0.0; len])
    }
}

/// Outcome of a 1D run.
#[derive(Debug, Clone)]
pub struct RunResult1D {
    pub state: State1D,
    pub steps: usize,
    pub wallclock_s: f64,
}

/// Run a 1D preset to `t_end`.
pub fn run_1d(spec: &ExperimentSpec) -> Result<RunResult1D> {
    run_1d_observed(spec, |_, _| {})
}

pub fn run_1d_observed<F: FnMut(f64, &State1D)>(spec: &ExperimentSpec, observer: F) -> Result<RunResult1D> {
    spec.validate()?;
    let start = Instant::now();
    let grid = spec.grid_1d()?;
    let p = spec.params()?;
    if spec.solver == SolverKind::ScalarLw {
        let u0 = spec.initial_velocity()?;
        let s0 = spec.initial_state_1d()?;
        let InitialCondition::QuasiStationary { h_left, zb_left, .. } = spec.initial else { unreachable!() };
        let (_, k) = build_full_state_from_u(&u0, h_left, zb_left, &s0.bed, &p)?;
        let (u, steps) = run_lax_wendroff(&u0, grid.dx, &k, spec.cfl, spec.t_end)?;
        let state = state_from_u(&u, &s0.bed, &k)?;
        return Ok(RunResult1D { state, steps, wallclock_s: start.elapsed().as_secs_f64() });
    }
    let scheme = spec.solver.scheme_1d().expect("validated 1D solver");
    let mut solver = Solver1D::new(grid, p, spec.boundary);
    let run = solver.run(spec.initial_state_1d()?, scheme, spec.cfl_rule(), spec.t_end, observer)?;
    Ok(RunResult1D { state: run.state, steps: run.steps, wallclock_s: start.elapsed().as_secs_f64() })
}

#[derive(Debug, Clone)]
pub struct RunResult2D {
    pub state: State2D,
    pub steps: usize,
    pub wallclock_s: f64,
    pub cg_iterations: usize,
}

/// Run a 2D preset to `t_end`.
pub fn run_2d(spec: &ExperimentSpec) -> Result<RunResult2D> {
    run_2d_observed(spec, |_, _| {})
}

pub fn run_2d_observed<F: FnMut(f64, &State2D)>(spec: &ExperimentSpec, mut observer: F) -> Result<RunResult2D> {
    spec.validate()?;
    let start = Instant::now();
    let scheme = match spec.solver {
        SolverKind::Semi2dO1 => Scheme2D::SemiImplicitO1,
        _ => Scheme2D::Imex2,
    };
    let mut solver = Solver2D::new(spec.grid_2d()?, spec.params()?);
    let mut cg = 0;
    let mut state = spec.initial_state_2d()?;
    let mut t = 0.0;
    let mut steps = 0;
    while t < spec.t_end {
        let mut dt = solver.time_step(&state, spec.cfl_rule())?;
        let last = t + dt >= spec.t_end || spec.t_end - (t + dt) < 1e-12 * spec.t_end;
        if last {
            dt = spec.t_end - t;
        }
        state = solver.step(scheme, &state, dt)?;
        cg += solver.last_report().cg_iterations;
        t = if last { spec.t_end } else { t + dt };
        steps += 1;
        observer(t, &state);
    }
    Ok(RunResult2D { state, steps, wallclock_s: start.elapsed().as_secs_f64(), cg_iterations: cg })
}

/// Average consecutive blocks of `factor` cells.
pub fn restrict(values: &[f64], factor: usize) -> Vec<f64> {
    values.chunks(factor).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect()
}

/// `Σ|coarse − R(reference)|·dx`, where `R` averages the reference onto the
/// coarse cells (its length must be an integer multiple of the coarse one).
pub fn l1_error(coarse: &[f64], reference: &[f64], dx: f64) -> Result<f64> {
    if coarse.is_empty() || reference.len() % coarse.len() != 0 {
        return Err(ExnerError::SizeMismatch { expected: coarse.len(), found: reference.len() });
    }
    let factor = reference.len() / coarse.len();
    let restricted = restrict(reference, factor);
    Ok(coarse.iter().zip(&restricted).map(|(a, b)| (a - b).abs()).sum::<f64>() * dx)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub error_zb: Option<f64>,
    pub order_zb: Option<f64>,
    pub wallclock_s: f64,
    pub failure: Option<String>,
}

/// Self-convergence table: each grid is compared with the next finer one.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub experiment: String,
    pub solver: SolverKind,
    pub rows: Vec<ConvergenceRow>,
    pub reference_n: usize,
    pub reference_wallclock_s: f64,
}

impl ConvergenceReport {
    pub fn errors(&self) -> Vec<Option<f64>> {
        self.rows.iter().map(|r| r.error_zb).collect()
    }

    pub fn orders(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.order_zb).collect()
    }

    pub fn total_wallclock_s(&self) -> f64 {
        self.reference_wallclock_s + self.rows.iter().map(|r| r.wallclock_s).sum::<f64>()
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# experiment={} solver={} reference=self-convergence (next finer grid, cell-average restriction, finest reference N={})\n",
            self.experiment, self.solver, self.reference_n
        );
        out.push_str("N,error_zb,order_zb,wallclock_s\n");
        let opt = |v: Option<f64>| v.map_or_else(|| "".to_string(), |v| format!("{v:.6e}"));
        for r in &self.rows {
            let error = match (&r.failure, r.error_zb) {
                (Some(_), _) => "failed".to_string(),
                (None, e) => opt(e),
            };
            out.push_str(&format!("{},{},{},{:.3}\n", r.n, error, opt(r.order_zb), r.wallclock_s));
        }
        out
    }
}

/// Errors and observed orders of `z_b` on `grids` (ascending, each twice the
/// previous), with a run at twice the finest grid as the last reference.
/// A failed run becomes a row with `failure` set.
pub fn run_convergence_study(spec: &ExperimentSpec, grids: &[usize]) -> Result<ConvergenceReport> {
    run_convergence_study_jobs(spec, grids, 1)
}

/// As [`run_convergence_study`], running up to `jobs` grids on separate threads.
pub fn run_convergence_study_jobs(spec: &ExperimentSpec, grids: &[usize], jobs: usize) -> Result<ConvergenceReport> {
    if grids.is_empty() || grids.windows(2).any(|w| w[1] != 2 * w[0]) {
        return Err(ExnerError::invalid("grids", "need an ascending sequence of doublings"));
    }
    let reference_n = 2 * grids[grids.len() - 1];
    let mut all: Vec<usize> = grids.to_vec();
    all.push(reference_n);
    let run = |n: usize| (n, run_1d(&spec.clone().with_n(n)));
    let results: Vec<(usize, Result<RunResult1D>)> = if jobs <= 1 {
        all.iter().map(|&n| run(n)).collect()
    } else {
        let mut out = Vec::with_capacity(all.len());
        for chunk in all.chunks(jobs) {
            std::thread::scope(|scope| {
                let handles: Vec<_> = chunk.iter().map(|&n| scope.spawn(move || run(n))).collect();
                out.extend(handles.into_iter().map(|h| h.join().expect("grid run panicked")));
            });
        }
        out
    };

    let mut rows = Vec::with_capacity(grids.len());
    for (k, &n) in grids.iter().enumerate() {
        let dx = (spec.x_range.1 - spec.x_range.0) / n as f64;
        let (row_wall, error, failure) = match (&results[k].1, &results[k + 1].1) {
            (Ok(a), Ok(b)) => (a.wallclock_s, Some(l1_error(&a.state.z_b, &b.state.z_b, dx)?), None),
            (Ok(a), Err(e)) => (a.wallclock_s, None, Some(format!("reference N={} failed: {e}", results[k + 1].0))),
            (Err(e), _) => (0.0, None, Some(e.to_string())),
        };
        rows.push(ConvergenceRow { n, error_zb: error, order_zb: None, wallclock_s: row_wall, failure });
    }
    for k in 1..rows.len() {
        if let (Some(a), Some(b)) = (rows[k - 1].error_zb, rows[k].error_zb) {
            if a > 0.0 && b > 0.0 {
                rows[k].order_zb = Some((a / b).log2());
            }
        }
    }
    let reference_wallclock_s = results.last().and_then(|r| r.1.as_ref().ok()).map_or(0.0, |r| r.wallclock_s);
    Ok(ConvergenceReport { experiment: spec.name.clone(), solver: spec.solver, rows, reference_n, reference_wallclock_s })
}

/// Relative L1 differences between the scalar model and the full system.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelingErrorReport {
    pub a_g: f64,
    pub h: f64,
    pub q: f64,
    pub z_b: f64,
    pub eta: f64,
    pub imex_steps: usize,
    pub scalar_steps: usize,
    pub wallclock_s: f64,
}

impl ModelingErrorReport {
    pub fn to_csv(&self) -> String {
        format!(
            "a_g,err_h,err_q,err_zb,err_eta,imex_steps,scalar_steps,wallclock_s\n{},{:.6e},{:.6e},{:.6e},{:.6e},{},{},{:.3}\n",
            self.a_g, self.h, self.q, self.z_b, self.eta, self.imex_steps, self.scalar_steps, self.wallclock_s
        )
    }
}

fn relative_l1(a: &[f64], reference: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(reference).map(|(a, b)| (a - b).abs()).sum();
    let den: f64 = reference.iter().map(|b| b.abs()).sum();
    num / den
}

/// Scalar Lax-Wendroff versus IMEX2 on the strong-coupling preset.
pub fn run_modeling_error_study(spec: &ExperimentSpec) -> Result<ModelingErrorReport> {
    let start = Instant::now();
    let full = run_1d(&spec.clone().with_solver(SolverKind::Imex2))?;
    let scalar_spec = ExperimentSpec { cfl: 0.9, ..spec.clone().with_solver(SolverKind::ScalarLw) };
    let scalar = run_1d(&scalar_spec)?;
    let (a, b) = (&scalar.state, &full.state);
    Ok(ModelingErrorReport {
        a_g: spec.a_g,
        h: relative_l1(&a.h, &b.h),
        q: relative_l1(&a.q, &b.q),
        z_b: relative_l1(&a.z_b, &b.z_b),
        eta: relative_l1(&a.eta(), &b.eta()),
        imex_steps: full.steps,
        scalar_steps: scalar.steps,
        wallclock_s: start.elapsed().as_secs_f64(),
    })
}

/// `Σ x_i (z_b,i − base) / Σ (z_b,i − base)`.
pub fn dune_centroid(x: &[f64], z_b: &[f64], base: f64) -> f64 {
    let w: Vec<f64> = z_b.iter().map(|z| (z - base).max(0.0)).collect();
    let total: f64 = w.iter().sum();
    x.iter().zip(&w).map(|(x, w)| x * w).sum::<f64>() / total
}

#[derive(Debug, Clone)]
pub struct WaveGroupReport {
    pub cfl: f64,
    pub t_end: f64,
    pub centroid_initial: f64,
    pub centroid_final: f64,
    /// Forcing period over the first time step.
    pub period_over_dt: f64,
    pub steps: usize,
    pub wallclock_s: f64,
    pub state: State1D,
}

impl WaveGroupReport {
    pub fn displacement(&self) -> f64 {
        self.centroid_final - self.centroid_initial
    }
}

/// Full width of the initial dune at `1/e` of its height.
pub const WAVE_GROUP_DUNE_WIDTH: f64 = 0.8;

/// IMEX2 run of the wave-group preset at the given CFL and horizon.
pub fn run_wave_group(spec: &ExperimentSpec, cfl: f64, t_end: f64) -> Result<WaveGroupReport> {
    let spec = ExperimentSpec { cfl, t_end, ..spec.clone().with_solver(SolverKind::Imex2) };
    let grid = spec.grid_1d()?;
    let x = grid.centers();
    let s0 = spec.initial_state_1d()?;
    let solver = Solver1D::new(grid, spec.params()?, spec.boundary);
    let dt0 = solver.time_step(&s0, spec.cfl_rule())?;
    let result = run_1d(&spec)?;
    Ok(WaveGroupReport {
        cfl,
        t_end,
        centroid_initial: dune_centroid(&x, &s0.z_b, 0.1),
        centroid_final: dune_centroid(&x, &result.state.z_b, 0.1),
        period_over_dt: 2.0 * std::f64::consts::PI / spec.boundary.omega / dt0,
        steps: result.steps,
        wallclock_s: result.wallclock_s,
        state: result.state,
    })
}

/// Line segments of the `level` contour by marching squares over cell
/// centres.
pub fn contour_segments(field: &[f64], grid: &Grid2D, level: f64) -> Vec<[(f64, f64); 2]> {
    let (nx, ny) = (grid.nx, grid.ny);
    let mut segs = Vec::new();
    let at = |i: usize, j: usize| field[j * nx + i];
    let lerp = |a: (f64, f64, f64), b: (f64, f64, f64)| -> (f64, f64) {
        let s = (level - a.2) / (b.2 - a.2);
        (a.0 + s * (b.0 - a.0), a.1 + s * (b.1 - a.1))
    };
    for j in 0..ny.saturating_sub(1) {
        for i in 0..nx.saturating_sub(1) {
            let (x0, x1, y0, y1) = (grid.x_center(i), grid.x_center(i + 1), grid.y_center(j), grid.y_center(j + 1));
            let c = [(x0, y0, at(i, j)), (x1, y0, at(i + 1, j)), (x1, y1, at(i + 1, j + 1)), (x0, y1, at(i, j + 1))];
            let crossings: Vec<(f64, f64)> = (0..4)
                .filter_map(|e| {
                    let (a, b) = (c[e], c[(e + 1) % 4]);
                    ((a.2 < level) != (b.2 < level)).then(|| lerp(a, b))
                })
                .collect();
            match crossings.len() {
                2 => segs.push([crossings[0], crossings[1]]),
                4 => {
                    // Saddle: pair by the centre value.
                    let centre = 0.25 * (c[0].2 + c[1].2 + c[2].2 + c[3].2);
                    if (centre < level) == (c[0].2 < level) {
                        segs.push([crossings[0], crossings[3]]);
                        segs.push([crossings[1], crossings[2]]);
                    } else {
                        segs.push([crossings[0], crossings[1]]);
                        segs.push([crossings[2], crossings[3]]);
                    }
                }
                _ => {}
            }
        }
    }
    segs
}

/// Groups contour segments into connected pieces by shared end points.
fn contour_components(segs: &[[(f64, f64); 2]], tol: f64) -> Vec<Vec<(f64, f64)>> {
    let key = |p: (f64, f64)| ((p.0 / tol).round() as i64, (p.1 / tol).round() as i64);
    let mut parent: Vec<usize> = (0..segs.len()).collect();
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let mut owner = std::collections::HashMap::new();
    for (k, seg) in segs.iter().enumerate() {
        for &p in seg {
            if let Some(&other) = owner.get(&key(p)) {
                let (a, b) = (root(&mut parent, k), root(&mut parent, other));
                parent[a] = b;
            } else {
                owner.insert(key(p), k);
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<(f64, f64)>> = std::collections::BTreeMap::new();
    for (k, seg) in segs.iter().enumerate() {
        let r = root(&mut parent, k);
        groups.entry(r).or_default().push((0.5 * (seg[0].0 + seg[1].0), 0.5 * (seg[0].1 + seg[1].1)));
    }
    groups.into_values().collect()
}

/// Spread half-angle (degrees) of a star-shaped sediment pattern.
///
/// Levels span the range of the field away from a thin boundary band, so a
/// scour pit in a corner cannot shift them. On the contour at
/// `min + level_index/n_levels·(max − min)` the piece closest to the crest
/// is kept. Its upstream tip is the apex; a line is fitted to the lateral
/// envelope on each side and the result is half the opening angle.
pub fn measure_spread_angle(zb: &[f64], grid: &Grid2D, n_levels: usize, level_index: usize) -> Result<f64> {
    if zb.len() != grid.len() {
        return Err(ExnerError::SizeMismatch { expected: grid.len(), found: zb.len() });
    }
    if n_levels < 2 || level_index == 0 || level_index >= n_levels {
        return Err(ExnerError::invalid("level_index", "must lie strictly between 0 and n_levels"));
    }
    let band = (grid.nx.min(grid.ny) / 30).max(1);
    let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
    for j in band..grid.ny.saturating_sub(band) {
        for i in band..grid.nx.saturating_sub(band) {
            let z = zb[grid.index(i, j)];
            min = min.min(z);
            max = max.max(z);
        }
    }
    if !(max > min) {
        return Err(ExnerError::Measurement("flat field has no contours".into()));
    }
    let level = min + level_index as f64 / n_levels as f64 * (max - min);
    let segs = contour_segments(zb, grid, level);
    if segs.len() < 8 {
        return Err(ExnerError::Measurement(format!("contour at level {level:e} is empty")));
    }
    let crest = (0..zb.len()).fold(0, |best, k| if zb[k] > zb[best] { k } else { best });
    let (x_crest, y_crest) = (grid.x_center(crest % grid.nx), grid.y_center(crest / grid.nx));
    let dist = |p: &(f64, f64)| (p.0 - x_crest).hypot(p.1 - y_crest);
    let pts = contour_components(&segs, 1e-9 * grid.dx.min(grid.dy))
        .into_iter()
        .min_by(|a, b| {
            let da = a.iter().map(dist).fold(f64::INFINITY, f64::min);
            let db = b.iter().map(dist).fold(f64::INFINITY, f64::min);
            da.total_cmp(&db)
        })
        .unwrap_or_default();

    // A nearly circular contour has no preferred direction.
    let n = pts.len() as f64;
    let (cx, cy) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0 / n, b + p.1 / n));
    let radii: Vec<f64> = pts.iter().map(|p| (p.0 - cx).hypot(p.1 - cy)).collect();
    let mean_r = radii.iter().sum::<f64>() / n;
    let std_r = (radii.iter().map(|r| (r - mean_r).powi(2)).sum::<f64>() / n).sqrt();
    if std_r < 0.05 * mean_r {
        return Err(ExnerError::Measurement("contour is axisymmetric, no flanks to fit".into()));
    }
    let apex = pts.iter().copied().fold((f64::INFINITY, 0.0), |a, p| if p.0 < a.0 { p } else { a });
    let a_up = envelope_angle(&pts, apex, 1.0, grid.dx)?;
    let a_lo = envelope_angle(&pts, apex, -1.0, grid.dx)?;
    if a_up <= 0.0 || a_lo >= 0.0 {
        return Err(ExnerError::Measurement(format!(
            "flanks do not open downstream (upper {a_up:.2}°, lower {a_lo:.2}°)"
        )));
    }
    Ok(0.5 * (a_up - a_lo))
}

/// Angle (degrees) of the lateral envelope on one side (`sign` = ±1): the
/// outermost `y` per `bin`-wide column, from the apex to the column of the
/// lateral extreme, fitted by least squares over the middle 60 %.
fn envelope_angle(pts: &[(f64, f64)], apex: (f64, f64), sign: f64, bin: f64) -> Result<f64> {
    let tip = pts.iter().copied().fold(apex, |a, p| if sign * p.1 > sign * a.1 { p } else { a });
    let length = tip.0 - apex.0;
    let bins = (length / bin).floor() as usize + 1;
    let mut outer = vec![f64::NEG_INFINITY; bins];
    for p in pts {
        if p.0 >= apex.0 && p.0 <= tip.0 {
            let b = (((p.0 - apex.0) / bin) as usize).min(bins - 1);
            outer[b] = outer[b].max(sign * p.1);
        }
    }
    let samples: Vec<(f64, f64)> = outer
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .map(|(b, v)| ((b as f64 + 0.5) * bin, sign * v))
        .filter(|(x, _)| (0.2 * length..=0.8 * length).contains(x))
        .collect();
    if samples.len() < 4 {
        return Err(ExnerError::Measurement("contour has no downstream flanks".into()));
    }
    let n = samples.len() as f64;
    let (mx, my) = samples.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0 / n, b + p.1 / n));
    let (sxy, sxx) = samples.iter().fold((0.0, 0.0), |(a, b), p| (a + (p.0 - mx) * (p.1 - my), b + (p.0 - mx).powi(2)));
    Ok((sxy / sxx).atan().to_degrees())
}

/// Write a 1D field dump with 17 significant digits.
pub fn write_dump_1d<W: Write>(mut w: W, t: f64, grid: &Grid1D, s: &State1D) -> Result<()> {
    writeln!(w, "# t={t:.17e} N={} dx={:.17e}", grid.n, grid.dx)?;
    writeln!(w, "# x h q z_b eta")?;
    for i in 0..s.len() {
        writeln!(
            w,
            "{:.16e} {:.16e} {:.16e} {:.16e} {:.16e}",
            grid.center(i),
            s.h[i],
            s.q[i],
            s.z_b[i],
            s.h[i] + s.bed[i] + s.z_b[i]
        )?;
    }
    Ok(())
}

/// Write a 2D field dump with 17 significant digits, `x` fastest.
pub fn write_dump_2d<W: Write>(mut w: W, t: f64, grid: &Grid2D, s: &State2D) -> Result<()> {
    writeln!(w, "# t={t:.17e} Nx={} Ny={} dx={:.17e} dy={:.17e}", grid.nx, grid.ny, grid.dx, grid.dy)?;
    writeln!(w, "# x y h m n z_b eta")?;
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let k = grid.index(i, j);
            writeln!(
                w,
                "{:.16e} {:.16e} {:.16e} {:.16e} {:.16e} {:.16e} {:.16e}",
                grid.x_center(i),
                grid.y_center(j),
                s.h[k],
                s.m[k],
                s.n[k],
                s.z_b[k],
                s.h[k] + s.bed[k] + s.z_b[k]
            )?;
        }
    }
    Ok(())
}

/// Parsed 2D dump. The bathymetry is recovered as `η − h − z_b`.
#[derive(Debug, Clone)]
pub struct Dump2D {
    pub t: f64,
    pub grid: Grid2D,
    pub state: State2D,
}

/// Parsed 1D dump.
#[derive(Debug, Clone)]
pub struct Dump1D {
    pub t: f64,
    pub grid: Grid1D,
    pub state: State1D,
}

fn header_value<T: FromStr>(header: &str, key: &str, line: usize) -> Result<T> {
    header
        .split_whitespace()
        .find_map(|tok| tok.strip_prefix(key).and_then(|v| v.strip_prefix('=')))
        .ok_or_else(|| ExnerError::Parse { line, message: format!("missing `{key}=` in header") })?
        .parse()
        .map_err(|_| ExnerError::Parse { line, message: format!("bad value for `{key}`") })
}

fn read_rows<R: BufRead>(r: R, columns: usize) -> Result<(String, Vec<Vec<f64>>)> {
    let mut header = None;
    let mut rows = Vec::new();
    for (no, line) in r.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('#') {
            if header.is_none() {
                header = Some(rest.to_string());
            }
            continue;
        }
        let row: Vec<f64> = trimmed
            .split_whitespace()
            .map(|v| v.parse::<f64>().map_err(|_| ExnerError::Parse { line: no + 1, message: format!("bad number `{v}`") }))
            .collect::<Result<_>>()?;
        if row.len() != columns {
            return Err(ExnerError::Parse {
                line: no + 1,
                message: format!("expected {columns} columns, found {}", row.len()),
            });
        }
        rows.push(row);
    }
    let header = header.ok_or(ExnerError::Parse { line: 1, message: "missing header".into() })?;
    Ok((header, rows))
}

pub fn read_dump_1d<R: BufRead>(r: R) -> Result<Dump1D> {
    let (header, rows) = read_rows(r, 5)?;
    let t: f64 = header_value(&header, "t", 1)?;
    let n: usize = header_value(&header, "N", 1)?;
    let dx: f64 = header_value(&header, "dx", 1)?;
    if rows.len() != n {
        return Err(ExnerError::SizeMismatch { expected: n, found: rows.len() });
    }
    let x0 = rows[0][0] - 0.5 * dx;
    let grid = Grid1D::new(x0, x0 + dx * n as f64, n)?;
    let col = |c: usize| rows.iter().map(|r| r[c]).collect::<Vec<f64>>();
    let (h, q, z_b, eta) = (col(1), col(2), col(3), col(4));
    let bed = (0..n).map(|i| eta[i] - h[i] - z_b[i]).collect();
    Ok(Dump1D { t, grid, state: State1D::new(h, q, z_b, bed)? })
}

pub fn read_dump_2d<R: BufRead>(r: R) -> Result<Dump2D> {
    let (header, rows) = read_rows(r, 7)?;
    let t: f64 = header_value(&header, "t", 1)?;
    let nx: usize = header_value(&header, "Nx", 1)?;
    let ny: usize = header_value(&header, "Ny", 1)?;
    let dx: f64 = header_value(&header, "dx", 1)?;
    let dy: f64 = header_value(&header, "dy", 1)?;
    if rows.len() != nx * ny {
        return Err(ExnerError::SizeMismatch { expected: nx * ny, found: rows.len() });
    }
    let (x0, y0) = (rows[0][0] - 0.5 * dx, rows[0][1] - 0.5 * dy);
    let grid = Grid2D::new((x0, x0 + dx * nx as f64), (y0, y0 + dy * ny as f64), nx, ny)?;
    let col = |c: usize| rows.iter().map(|r| r[c]).collect::<Vec<f64>>();
    let (h, m, n, z_b, eta) = (col(2), col(3), col(4), col(5), col(6));
    let bed = (0..nx * ny).map(|k| eta[k] - h[k] - z_b[k]).collect();
    Ok(Dump2D { t, grid, state: State2D::new(nx, ny, h, m, n, z_b, bed)? })
}
