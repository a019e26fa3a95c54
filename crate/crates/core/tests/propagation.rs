use core::f64::consts::PI;

use nlwave_core::nonlinearity::NonlinearitySpec;
use nlwave_core::propagator::{
    forced_step, linear_step, make_weights, picard_step, quadratic_invariant, run, PicardOptions,
    RunOptions, State, StepWeights, Stepper, StopReason,
};
use nlwave_core::spectral::{Grid, RealField, SpectralTransform, Spectrum};
use nlwave_core::symbols::{
    build_symbol_table, KernelSpec, LaplacianSymbol, OperatorSymbol, SmoothingSymbol, SymbolTable,
};
use nlwave_core::{Complex64, Error};
use proptest::prelude::*;

/// Every mode oscillates at the same frequency `eta`.
fn flat_table(eta: f64) -> SymbolTable {
    let grid = Grid::new(1, PI, 8).unwrap();
    let spec = KernelSpec {
        components: 1,
        laplacian: LaplacianSymbol::Constant { c: 0.0 },
        operator: vec![OperatorSymbol::Constant { m2: eta * eta }],
        smoothing: SmoothingSymbol { c_g: 1.0, r: 0.0 },
    };
    build_symbol_table(&grid, &spec).unwrap()
}

fn smooth_table(grid: &Grid) -> SymbolTable {
    let spec = KernelSpec {
        components: 1,
        laplacian: LaplacianSymbol::Constant { c: 1.0 },
        operator: vec![OperatorSymbol::Constant { m2: 1.0 }],
        smoothing: SmoothingSymbol { c_g: 1.0, r: 2.0 },
    };
    build_symbol_table(grid, &spec).unwrap()
}

fn uniform(modes: usize, value: Complex64) -> Spectrum {
    Spectrum::new(1, modes, vec![value; modes]).unwrap()
}

fn scalar_state(u: f64, v: f64) -> State {
    let c = |x: f64| Complex64::new(x, 0.0);
    State::new(0.0, uniform(8, c(u)), uniform(8, c(v))).unwrap()
}

fn smooth_state(grid: &Grid, amplitude: f64) -> State {
    let t = SpectralTransform::new(grid);
    let u = RealField::from_fn(grid, 1, |x, _| {
        amplitude * ((x[0]).sin() + 0.5 * (2.0 * x[0]).cos())
    })
    .unwrap();
    let v = RealField::from_fn(grid, 1, |x, _| amplitude * 0.3 * (3.0 * x[0]).sin()).unwrap();
    State::from_fields(0.0, &u, &v, &t).unwrap()
}

fn max_diff(a: &Spectrum, b: &Spectrum) -> f64 {
    a.coeffs()
        .iter()
        .zip(b.coeffs())
        .fold(0.0f64, |m, (x, y)| m.max((x - y).norm()))
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn weight_examples() {
    let w = make_weights(&flat_table(2.0), PI / 2.0);
    assert!(close(w.cos(0)[1], -1.0, 1e-15));
    assert!(close(w.sin(0)[1], 0.0, 1e-15));

    let w = make_weights(&flat_table(0.0), 0.3);
    assert_eq!(w.cos(0)[2], 1.0);
    assert!(close(w.sin(0)[2], 0.3, 1e-16));
    assert!(close(w.w0(0)[2], 0.045, 1e-16));

    let w = make_weights(&flat_table(1.0), PI);
    assert!(close(w.w0(0)[3], 2.0, 1e-15));
}

#[test]
fn series_branch_matches_closed_form_near_threshold() {
    // just above and below the switch the two evaluations must agree
    for eta in [0.99e-4, 1.01e-4] {
        let table = flat_table(eta);
        let w = make_weights(&table, 1.0);
        let z = table.eta(0)[0];
        assert!(close(w.sin(0)[0], z.sin() / z, 1e-15));
        let w0 = 2.0 * (0.5 * z).sin().powi(2) / (z * z);
        assert!(close(w.w0(0)[0], w0, 1e-15));
    }
}

#[test]
fn linear_step_examples() {
    let w = make_weights(&flat_table(2.0), PI / 2.0);
    let next = linear_step(&scalar_state(1.0, 0.0), &w);
    assert!((next.u_hat.coeffs()[0] - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
    assert!(next.v_hat.coeffs()[0].norm() < 1e-15);
    assert!(close(next.t, PI / 2.0, 0.0));

    let w = make_weights(&flat_table(1.0), PI / 2.0);
    let next = linear_step(&scalar_state(0.0, 1.0), &w);
    assert!((next.u_hat.coeffs()[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    assert!(next.v_hat.coeffs()[0].norm() < 1e-15);

    let w = make_weights(&flat_table(0.0), 0.25);
    let next = linear_step(&scalar_state(1.5, -2.0), &w);
    assert_eq!(next.u_hat.coeffs()[0], Complex64::new(1.0, 0.0));
    assert_eq!(next.v_hat.coeffs()[0], Complex64::new(-2.0, 0.0));
}

#[test]
fn forced_step_examples() {
    let table = flat_table(1.0);
    let dt = 0.37;
    let w = make_weights(&table, dt);
    let zero = |_t: f64| Spectrum::zeros(1, 8);
    let s = scalar_state(0.4, -0.2);
    assert_eq!(forced_step(&s, &w, &zero), linear_step(&s, &w));

    let one = |_t: f64| uniform(8, Complex64::new(1.0, 0.0));
    let next = forced_step(&scalar_state(0.0, 0.0), &w, &one);
    assert!(close(next.u_hat.coeffs()[0].re, 1.0 - dt.cos(), 1e-15));
    assert!(close(next.v_hat.coeffs()[0].re, dt.sin(), 1e-15));
}

#[test]
fn forced_half_steps_agree_with_full_step() {
    let table = flat_table(1.3);
    let force = |_t: f64| uniform(8, Complex64::new(0.7, 0.0));
    let s = scalar_state(0.2, 0.5);
    for dt in [0.2, 0.1, 0.05] {
        let full = forced_step(&s, &make_weights(&table, dt), &force);
        let half = make_weights(&table, dt / 2.0);
        let two = forced_step(&forced_step(&s, &half, &force), &half, &force);
        assert!(max_diff(&full.u_hat, &two.u_hat) <= dt.powi(3));
        assert!(max_diff(&full.v_hat, &two.v_hat) <= dt.powi(3));
    }
}

#[test]
fn linear_picard_step_is_the_linear_step() {
    let grid = Grid::new(1, PI, 32).unwrap();
    let table = smooth_table(&grid);
    let s = smooth_state(&grid, 1.0);
    let w = make_weights(&table, 0.1);
    let nl = NonlinearitySpec::power(0.0, 1);
    let (next, stats) = picard_step(&s, &w, &table, &nl, &PicardOptions::default()).unwrap();
    assert_eq!(next, linear_step(&s, &w));
    assert_eq!(stats.iterations, 1);
}

#[test]
fn small_data_contracts_quickly() {
    let grid = Grid::new(1, PI, 32).unwrap();
    let table = smooth_table(&grid);
    let s = smooth_state(&grid, 1e-3 / 1.5);
    let t = SpectralTransform::new(&grid);
    assert!(t.inverse(&s.u_hat).unwrap().sup_norm() <= 1e-3);
    let w = make_weights(&table, 0.05);
    let (_, stats) = picard_step(
        &s,
        &w,
        &table,
        &NonlinearitySpec::power(1.0, 1),
        &PicardOptions::default(),
    )
    .unwrap();
    assert!(stats.contraction < 0.1, "contraction {}", stats.contraction);
    assert!(stats.residual < 1e-12);
}

#[test]
fn huge_data_does_not_contract() {
    let grid = Grid::new(1, PI, 32).unwrap();
    let table = smooth_table(&grid);
    let s = smooth_state(&grid, 1e6 / 1.5);
    let w = make_weights(&table, 1.0);
    let err = picard_step(
        &s,
        &w,
        &table,
        &NonlinearitySpec::power(1.0, 2),
        &PicardOptions::default(),
    )
    .unwrap_err();
    assert!(matches!(err, Error::NonContraction { .. }), "{err:?}");
}

#[test]
fn picard_rejects_bad_options() {
    let grid = Grid::new(1, PI, 8).unwrap();
    let table = smooth_table(&grid);
    let w = make_weights(&table, 0.1);
    let s = smooth_state(&grid, 0.1);
    let nl = NonlinearitySpec::power(1.0, 1);
    let bad = PicardOptions {
        tol: 0.0,
        ..PicardOptions::default()
    };
    assert!(matches!(
        picard_step(&s, &w, &table, &nl, &bad),
        Err(Error::InvalidArgument(_))
    ));
    let bad = PicardOptions {
        max_iter: 0,
        ..PicardOptions::default()
    };
    assert!(matches!(
        picard_step(&s, &w, &table, &nl, &bad),
        Err(Error::InvalidArgument(_))
    ));
}

#[test]
fn max_iter_cap_is_reported() {
    let grid = Grid::new(1, PI, 32).unwrap();
    let table = smooth_table(&grid);
    let s = smooth_state(&grid, 0.5);
    let w = make_weights(&table, 0.1);
    let opts = PicardOptions {
        max_iter: 2,
        ..PicardOptions::default()
    };
    let err = picard_step(&s, &w, &table, &NonlinearitySpec::power(1.0, 1), &opts).unwrap_err();
    assert!(
        matches!(err, Error::MaxIterExceeded { iterations: 2, .. }),
        "{err:?}"
    );
}

#[test]
fn run_to_initial_time_is_empty() {
    let grid = Grid::new(1, PI, 16).unwrap();
    let table = smooth_table(&grid);
    let stepper = Stepper::new(
        table,
        NonlinearitySpec::power(1.0, 1),
        0.1,
        PicardOptions::default(),
    )
    .unwrap();
    let s = smooth_state(&grid, 0.1);
    let traj = run(&stepper, s.clone(), &RunOptions::until(0.0), |_, _| {}).unwrap();
    assert_eq!(traj.final_state, s);
    assert!(traj.samples.is_empty());
    assert_eq!(traj.steps, 0);
    assert_eq!(traj.stop, StopReason::Completed);
}

#[test]
fn run_lands_on_end_time_and_respects_cadence() {
    let grid = Grid::new(1, PI, 16).unwrap();
    let stepper = Stepper::new(
        smooth_table(&grid),
        NonlinearitySpec::power(0.0, 1),
        0.1,
        PicardOptions::default(),
    )
    .unwrap();
    let opts = RunOptions {
        cadence: 3,
        ..RunOptions::until(1.05)
    };
    let mut seen = Vec::new();
    let traj = run(&stepper, smooth_state(&grid, 1.0), &opts, |s, _| {
        seen.push(s.t)
    })
    .unwrap();
    assert_eq!(traj.steps, 11);
    assert_eq!(traj.final_state.t, 1.05);
    let times: Vec<f64> = traj.samples.iter().map(|s| s.t).collect();
    assert_eq!(times, seen);
    assert_eq!(times.len(), 4);
    assert_eq!(*times.last().unwrap(), 1.05);

    // the shortened final step is still exact
    let exact = linear_step(
        &smooth_state(&grid, 1.0),
        &make_weights(stepper.table(), 1.05),
    );
    assert!(max_diff(&exact.u_hat, &traj.final_state.u_hat) < 1e-12);
}

#[test]
fn linear_run_preserves_per_mode_invariant() {
    let grid = Grid::new(1, PI, 32).unwrap();
    let table = smooth_table(&grid);
    let stepper = Stepper::new(
        table,
        NonlinearitySpec::power(0.0, 1),
        0.07,
        PicardOptions::default(),
    )
    .unwrap();
    let s = smooth_state(&grid, 2.0);
    let q0 = quadratic_invariant(&s, stepper.table());
    let traj = run(&stepper, s, &RunOptions::until(13.0), |_, _| {}).unwrap();
    let q1 = quadratic_invariant(&traj.final_state, stepper.table());
    assert!(((q1 - q0) / q0).abs() < 1e-10);
}

#[test]
fn run_stops_on_norm_threshold() {
    let grid = Grid::new(1, PI, 16).unwrap();
    let spec = KernelSpec {
        components: 1,
        laplacian: LaplacianSymbol::Constant { c: 1.0 },
        operator: vec![OperatorSymbol::Constant { m2: 0.0 }],
        smoothing: SmoothingSymbol { c_g: 1.0, r: 2.0 },
    };
    let table = build_symbol_table(&grid, &spec).unwrap();
    let stepper = Stepper::new(
        table,
        NonlinearitySpec::power(0.0, 1),
        0.1,
        PicardOptions::default(),
    )
    .unwrap();
    let t = SpectralTransform::new(&grid);
    // free drift of the mean mode: u = 1 + t
    let u = RealField::from_fn(&grid, 1, |_, _| 1.0).unwrap();
    let v = RealField::from_fn(&grid, 1, |_, _| 1.0).unwrap();
    let s = State::from_fields(0.0, &u, &v, &t).unwrap();
    let opts = RunOptions {
        sup_factor: Some(3.0),
        ..RunOptions::until(10.0)
    };
    let traj = run(&stepper, s, &opts, |_, _| {}).unwrap();
    assert_eq!(traj.stop, StopReason::SupNormThreshold);
    assert!(traj.final_state.t > 2.0 - 1e-9 && traj.final_state.t < 2.2);
}

#[test]
fn runs_are_bitwise_deterministic() {
    let grid = Grid::new(1, PI, 32).unwrap();
    let go = || {
        let stepper = Stepper::new(
            smooth_table(&grid),
            NonlinearitySpec::power(1.0, 1),
            0.05,
            PicardOptions::default(),
        )
        .unwrap();
        run(
            &stepper,
            smooth_state(&grid, 0.3),
            &RunOptions::until(1.0),
            |_, _| {},
        )
        .unwrap()
    };
    assert_eq!(go(), go());
}

#[test]
fn nonlinear_self_convergence_is_second_order() {
    let grid = Grid::new(1, PI, 32).unwrap();
    let solve = |dt: f64| {
        let stepper = Stepper::new(
            smooth_table(&grid),
            NonlinearitySpec::power(1.0, 1),
            dt,
            PicardOptions::default(),
        )
        .unwrap();
        run(
            &stepper,
            smooth_state(&grid, 0.5),
            &RunOptions::until(1.0),
            |_, _| {},
        )
        .unwrap()
        .final_state
    };
    let (a, b, c) = (solve(0.1), solve(0.05), solve(0.025));
    let e1 = max_diff(&a.u_hat, &b.u_hat);
    let e2 = max_diff(&b.u_hat, &c.u_hat);
    let order = (e1 / e2).log2();
    assert!((1.8..=2.2).contains(&order), "order {order}");
}

fn random_state(values: &[(f64, f64, f64, f64)]) -> State {
    let u: Vec<Complex64> = values.iter().map(|v| Complex64::new(v.0, v.1)).collect();
    let v: Vec<Complex64> = values.iter().map(|v| Complex64::new(v.2, v.3)).collect();
    State::new(
        0.0,
        Spectrum::new(1, 16, u).unwrap(),
        Spectrum::new(1, 16, v).unwrap(),
    )
    .unwrap()
}

fn kg_table(m2: f64) -> SymbolTable {
    let grid = Grid::new(1, 2.0, 16).unwrap();
    let spec = KernelSpec {
        components: 1,
        laplacian: LaplacianSymbol::Gaussian { width: 1.5 },
        operator: vec![OperatorSymbol::Constant { m2 }],
        smoothing: SmoothingSymbol { c_g: 1.0, r: 1.0 },
    };
    build_symbol_table(&grid, &spec).unwrap()
}

fn rel_diff(a: &Spectrum, b: &Spectrum) -> f64 {
    max_diff(a, b) / a.sup_norm().max(b.sup_norm()).max(1e-300)
}

fn repeat(s: &State, w: &StepWeights, n: usize) -> State {
    (0..n).fold(s.clone(), |acc, _| linear_step(&acc, w))
}

proptest! {
    #[test]
    fn weights_lie_on_the_unit_circle(m2 in 0.0f64..50.0, dt in 1e-6f64..3.0) {
        let table = kg_table(m2);
        let w = make_weights(&table, dt);
        for m in 0..16 {
            let eta = table.eta(0)[m];
            let c = w.cos(0)[m];
            let es = eta * w.sin(0)[m];
            prop_assert!((c * c + es * es - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn steps_compose_as_a_semigroup(
        m2 in 0.0f64..10.0,
        dt in 1e-3f64..0.05,
        n in 2usize..100,
        values in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0), 16),
    ) {
        let table = kg_table(m2);
        let s = random_state(&values);
        let many = repeat(&s, &make_weights(&table, dt), n);
        let once = linear_step(&s, &make_weights(&table, n as f64 * dt));
        prop_assert!(rel_diff(&many.u_hat, &once.u_hat) < 1e-11);
        prop_assert!(rel_diff(&many.v_hat, &once.v_hat) < 1e-11);
    }

    #[test]
    fn linear_steps_keep_the_quadratic_invariant(
        m2 in 0.1f64..10.0,
        dt in 1e-3f64..0.5,
        n in 1usize..200,
        values in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0), 16),
    ) {
        let table = kg_table(m2);
        let s = random_state(&values);
        let q0 = quadratic_invariant(&s, &table);
        let q1 = quadratic_invariant(&repeat(&s, &make_weights(&table, dt), n), &table);
        prop_assert!(((q1 - q0) / q0.max(1e-300)).abs() < 1e-11);
    }
}
