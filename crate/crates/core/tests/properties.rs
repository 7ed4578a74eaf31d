//! Property checks on the public API.

use exner_core::harness::{run_convergence_study, ExperimentSpec, SolverKind};
use exner_core::numerics::{reconstruct, rusanov, solve_tridiagonal, Reconstruction, TridiagonalSystem};
use exner_core::scalar::{lambda_closed_form, lambda_scalar, ScalarModelConstants};
use exner_core::solver1d::{BoundaryCondition1D, Scheme1D, Solver1D};
use exner_core::{eigenvalues_exact, grass_flux_1d, grass_flux_2d, GrassParams, Grid1D, LimiterParams, State1D};
use proptest::prelude::*;

fn params() -> GrassParams {
    GrassParams::new(0.1, 3.0, 0.2).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn grass_flux_odd_and_monotone(u in -3.0..3.0f64, du in 1e-6..1.0f64, a_g in 0.0..1.0f64, m in 1.0..4.0f64) {
        let p = GrassParams::new(a_g, m, 0.2).unwrap();
        prop_assert_eq!(grass_flux_1d(-u, &p), -grass_flux_1d(u, &p));
        prop_assert!(grass_flux_1d(u + du, &p) >= grass_flux_1d(u, &p));
    }

    #[test]
    fn grass_flux_2d_rotation_equivariant(u in -2.0..2.0f64, v in -2.0..2.0f64, k in 0usize..3) {
        let p = params();
        let phi = [std::f64::consts::FRAC_PI_6, std::f64::consts::FRAC_PI_4, std::f64::consts::FRAC_PI_3][k];
        let (c, s) = (phi.cos(), phi.sin());
        let (fx, fy) = grass_flux_2d(u, v, &p);
        let (gx, gy) = grass_flux_2d(c * u - s * v, s * u + c * v, &p);
        let scale = 1.0 + fx.abs() + fy.abs();
        prop_assert!((gx - (c * fx - s * fy)).abs() <= 1e-12 * scale);
        prop_assert!((gy - (s * fx + c * fy)).abs() <= 1e-12 * scale);
    }

    #[test]
    fn eigenvalue_trace_identity(h in 0.1..5.0f64, u in 0.01..1.5f64, a_g in 0.0..0.9f64) {
        let p = GrassParams::new(a_g, 3.0, 0.2).unwrap();
        if let Ok(w) = eigenvalues_exact(h, u, &p) {
            let sum: f64 = w.as_array().iter().sum();
            prop_assert!((sum - 2.0 * u).abs() <= 1e-10 * (2.0 * u).abs().max(1.0));
        }
    }

    #[test]
    fn reconstruction_preserves_means(v in prop::collection::vec(-5.0..5.0f64, 5..40), theta in 1.0..2.0f64) {
        let rec = Reconstruction::Linear(LimiterParams::new(theta).unwrap());
        let e = reconstruct(&v, 1, rec).unwrap();
        for i in 0..v.len() - 2 {
            prop_assert!((0.5 * (e.left[i + 1] + e.right[i]) - v[i + 1]).abs() <= 1e-14 * (1.0 + v[i + 1].abs()));
        }
    }

    #[test]
    fn rusanov_monotone_for_advection(
        a in -2.0..2.0f64,
        data in prop::collection::vec(-1.0..1.0f64, 3),
        k in 0usize..3,
        bump in 0.0..0.5f64,
        extra in 0.0..1.0f64,
    ) {
        // Increasing one input never decreases the updated centre value.
        let alpha = a.abs() + extra;
        let dt_dx = 0.9 / alpha.max(1e-12) * 0.5;
        let update = |w: &[f64]| {
            let fl = rusanov(a * w[0], a * w[1], w[0], w[1], alpha);
            let fr = rusanov(a * w[1], a * w[2], w[1], w[2], alpha);
            w[1] - dt_dx * (fr - fl)
        };
        let mut bumped = data.clone();
        bumped[k] += bump;
        prop_assert!(update(&bumped) >= update(&data) - 1e-14);
    }

    #[test]
    fn tridiagonal_residual(n in 2usize..60, seed in prop::collection::vec(-1.0..1.0f64, 240)) {
        let lower: Vec<f64> = (0..n).map(|i| seed[i]).collect();
        let upper: Vec<f64> = (0..n).map(|i| seed[60 + i]).collect();
        let diag: Vec<f64> = (0..n).map(|i| 2.5 + seed[120 + i]).collect();
        let rhs: Vec<f64> = (0..n).map(|i| seed[180 + i]).collect();
        let sys = TridiagonalSystem { lower, diag, upper, rhs };
        let x = solve_tridiagonal(&sys).unwrap();
        let r = sys.multiply(&x);
        let norm = sys.rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in r.iter().zip(&sys.rhs) {
            prop_assert!((a - b).abs() <= 1e-10 * norm.max(1e-300));
        }
    }

    #[test]
    fn scalar_lambda_forms_agree(u in 0.095..0.11f64) {
        let k = ScalarModelConstants::from_inflow(&params(), 0.1, 0.5, 0.1, 0.0).unwrap();
        let a = lambda_scalar(u, &k).unwrap();
        let b = lambda_closed_form(u, &k).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn lake_at_rest_random_bed(amp in 0.0..0.2f64, freq in 0.5..3.0f64, phase in 0.0..6.0f64, zb_amp in 0.0..0.1f64) {
        let grid = Grid1D::new(0.0, 10.0, 60).unwrap();
        let x = grid.centers();
        let bed: Vec<f64> = x.iter().map(|x| amp * (freq * x + phase).sin()).collect();
        let z_b: Vec<f64> = x.iter().map(|x| 0.1 + zb_amp * (-(x - 5.0).powi(2)).exp()).collect();
        let s0 = State1D::lake_at_rest(1.0, z_b, bed).unwrap();
        for scheme in [Scheme1D::ExplicitRk2, Scheme1D::SemiImplicitO1, Scheme1D::Imex2] {
            let mut solver = Solver1D::new(grid, params(), BoundaryCondition1D::free());
            let mut s = s0.clone();
            for _ in 0..100 {
                s = solver.step(scheme, &s, 0.0, 0.01).unwrap();
            }
            let eta = s.eta();
            for i in 0..s.len() {
                prop_assert!((eta[i] - 1.0).abs() <= 1e-12 && s.q[i].abs() <= 1e-12);
                prop_assert!((s.z_b[i] - s0.z_b[i]).abs() <= 1e-12);
            }
        }
    }
}

/// `L1` difference of `q` between IMEX2 runs with `steps` and `2·steps`
/// steps to `t = 0.4` on `n` cells.
fn imex2_step_halving(n: usize, steps: usize) -> f64 {
    let spec = ExperimentSpec::test5_1().with_n(n);
    let grid = spec.grid_1d().unwrap();
    let s0 = spec.initial_state_1d().unwrap();
    let run = |steps: usize| {
        let mut solver = Solver1D::new(grid, spec.params().unwrap(), spec.boundary);
        let dt = 0.4 / steps as f64;
        let mut s = s0.clone();
        for k in 0..steps {
            s = solver.step(Scheme1D::Imex2, &s, k as f64 * dt, dt).unwrap();
        }
        s
    };
    let (a, b) = (run(steps), run(2 * steps));
    a.q.iter().zip(&b.q).map(|(x, y)| (x - y).abs()).sum::<f64>() * grid.dx
}

/// The printed stage pairs a compact free-surface Laplacian with a wide
/// centred momentum gradient, which leaves an `O(Δt·Δx²)` defect per unit
/// time. At fixed `Δt` the step-halving difference must shrink like `Δx²`.
#[test]
fn imex2_time_defect_scales_with_dx_squared() {
    let coarse = imex2_step_halving(100, 40);
    let fine = imex2_step_halving(200, 40);
    let rate = (coarse / fine).log2();
    assert!(rate > 1.8, "rate {rate:.3}");
}

/// Order in `Δt` on a fixed grid; fails because of the defect above (see
/// the decisions ledger).
#[test]
#[ignore = "known failure: temporal order of the printed IMEX2 stage is one on a fixed grid"]
fn imex2_time_order() {
    let e: Vec<f64> = [40, 80, 160].iter().map(|&s| imex2_step_halving(200, s)).collect();
    let order = (e[1] / e[2]).log2();
    assert!(order >= 1.9, "order {order:.3}");
}

#[test]
fn report_is_deterministic() {
    let mut spec = ExperimentSpec::test5_1().with_solver(SolverKind::Imex2);
    spec.t_end = 30.0;
    let strip = |csv: String| csv.lines().map(|l| l.rsplit_once(',').map_or(l, |(a, _)| a).to_string()).collect::<Vec<_>>();
    let a = run_convergence_study(&spec, &[50, 100]).unwrap();
    let b = run_convergence_study(&spec, &[50, 100]).unwrap();
    // Wall-clock is the last column; everything else must be bit-identical.
    assert_eq!(strip(a.to_csv())[1..], strip(b.to_csv())[1..]);
    assert_eq!(a.errors(), b.errors());
}
