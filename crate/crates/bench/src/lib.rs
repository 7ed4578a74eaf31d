//! Fixtures shared by the step benchmarks.

use exner_core::harness::{ExperimentSpec, SolverKind};
use exner_core::{Solver1D, Solver2D, State1D, State2D};

/// Solver and initial state of the order-study preset on `n` cells.
pub fn order_study(n: usize, solver: SolverKind) -> (Solver1D, State1D, f64) {
    let spec = ExperimentSpec::test5_1().with_solver(solver).with_n(n);
    let state = spec.initial_state_1d().expect("preset state");
    let solver1d = Solver1D::new(spec.grid_1d().expect("grid"), spec.params().expect("params"), spec.boundary);
    let dt = solver1d.time_step(&state, spec.cfl_rule()).expect("time step");
    (solver1d, state, dt)
}

/// Solver and initial state of the conical-dune preset on `n × n` cells.
pub fn conical_dune(n: usize) -> (Solver2D, State2D, f64) {
    let spec = ExperimentSpec::test8_2().with_n(n);
    let state = spec.initial_state_2d().expect("preset state");
    let solver = Solver2D::new(spec.grid_2d().expect("grid"), spec.params().expect("params"));
    let dt = solver.time_step(&state, spec.cfl_rule()).expect("time step");
    (solver, state, dt)
}
