use core::f64::consts::PI;

use nlwave_core::diagnostics::{
    apply_b, apply_b_inv, blowup_certify, energy, BlowupMonitor, BlowupSample, Certification,
    CertifyOptions, MeanPolicy,
};
use nlwave_core::nonlinearity::NonlinearitySpec;
use nlwave_core::propagator::{run, PicardOptions, RunOptions, State, Stepper};
use nlwave_core::spectral::{Grid, RealField, SpectralTransform, Spectrum};
use nlwave_core::symbols::{
    build_symbol_table, KernelSpec, LaplacianSymbol, OperatorSymbol, SmoothingSymbol, SymbolTable,
};
use nlwave_core::Complex64;
use proptest::prelude::*;

fn table(grid: &Grid, r: f64) -> SymbolTable {
    let spec = KernelSpec {
        components: 1,
        laplacian: LaplacianSymbol::Constant { c: 1.0 },
        operator: vec![OperatorSymbol::Constant { m2: 1.0 }],
        smoothing: SmoothingSymbol { c_g: 1.5, r },
    };
    build_symbol_table(grid, &spec).unwrap()
}

fn mean_zero_state(grid: &Grid, amplitude: f64) -> State {
    let t = SpectralTransform::new(grid);
    let u = RealField::from_fn(grid, 1, |x, _| {
        amplitude * (x[0].sin() + 0.4 * (2.0 * x[0]).cos())
    })
    .unwrap();
    let v = RealField::from_fn(grid, 1, |x, _| amplitude * 0.5 * (3.0 * x[0]).sin()).unwrap();
    State::from_fields(0.0, &u, &v, &t).unwrap()
}

fn stepper(grid: &Grid, lambda: f64, dt: f64) -> Stepper {
    Stepper::new(
        table(grid, 2.0),
        NonlinearitySpec::power(lambda, 1),
        dt,
        PicardOptions::default(),
    )
    .unwrap()
}

proptest! {
    #[test]
    fn b_and_its_inverse_cancel_on_mean_zero_spectra(
        values in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 32),
        r in 0.0f64..4.0,
    ) {
        let grid = Grid::new(1, 3.0, 32).unwrap();
        let t = table(&grid, r);
        let mut coeffs: Vec<Complex64> = values.iter().map(|&(a, b)| Complex64::new(a, b)).collect();
        coeffs[0] = Complex64::new(0.0, 0.0);
        let s = Spectrum::new(1, 32, coeffs).unwrap();
        let round = apply_b_inv(&apply_b(&s, &t, MeanPolicy::Require).unwrap(), &t);
        for (a, b) in round.coeffs().iter().zip(s.coeffs()) {
            prop_assert!((a - b).norm() <= 1e-12 * b.norm().max(1.0));
        }
        let round = apply_b(&apply_b_inv(&s, &t), &t, MeanPolicy::Require).unwrap();
        for (a, b) in round.coeffs().iter().zip(s.coeffs()) {
            prop_assert!((a - b).norm() <= 1e-12 * b.norm().max(1.0));
        }
    }

    #[test]
    fn inverse_b_squared_is_the_smoothed_laplacian(
        values in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 64),
        r in 0.0f64..4.0,
    ) {
        let grid = Grid::new(2, 2.0, 8).unwrap();
        let t = table(&grid, r);
        let coeffs: Vec<Complex64> = values.iter().map(|&(a, b)| Complex64::new(a, b)).collect();
        let s = Spectrum::new(1, 64, coeffs).unwrap();
        let twice = apply_b_inv(&apply_b_inv(&s, &t), &t);
        for m in 0..64 {
            let want = s.coeffs()[m] * (grid.xi_sq()[m] * t.g_hat()[m]);
            prop_assert!((twice.coeffs()[m] - want).norm() <= 1e-14 * want.norm().max(1.0));
        }
    }
}

#[test]
fn linear_energy_is_conserved_over_many_steps() {
    let grid = Grid::new(1, PI, 32).unwrap();
    let st = stepper(&grid, 0.0, 0.01);
    let nl = NonlinearitySpec::power(0.0, 1);
    let s0 = mean_zero_state(&grid, 1.0);
    let e0 = energy(&s0, st.table(), &nl, st.transform()).unwrap();
    let mut worst = 0.0f64;
    let traj = run(&st, s0, &RunOptions::until(10.0), |s, _| {
        let e = energy(s, st.table(), &nl, st.transform()).unwrap();
        worst = worst.max(((e.e_paper - e0.e_paper) / e0.e_paper).abs());
    })
    .unwrap();
    assert_eq!(traj.steps, 1000);
    assert!(worst < 1e-9, "drift {worst}");
}

#[test]
fn conserved_energy_drift_shrinks_at_second_order() {
    let grid = Grid::new(1, PI, 32).unwrap();
    let nl = NonlinearitySpec::power(1.0, 1);
    let drift = |dt: f64| {
        let st = stepper(&grid, 1.0, dt);
        let s0 = mean_zero_state(&grid, 0.1);
        let e0 = energy(&s0, st.table(), &nl, st.transform())
            .unwrap()
            .e_conserved;
        let mut worst = 0.0f64;
        run(&st, s0, &RunOptions::until(5.0), |s, _| {
            let e = energy(s, st.table(), &nl, st.transform())
                .unwrap()
                .e_conserved;
            worst = worst.max((e - e0).abs());
        })
        .unwrap();
        worst / e0.abs()
    };
    let (a, b) = (drift(0.1), drift(0.05));
    let order = (a / b).log2();
    assert!((1.7..=2.3).contains(&order), "drift {a} {b}, order {order}");
}

#[test]
fn monitor_derivatives_match_finite_differences() {
    let grid = Grid::new(1, PI, 32).unwrap();
    let dt = 1e-3;
    let st = stepper(&grid, -1.0, dt);
    let nl = NonlinearitySpec::power(-1.0, 1);
    let mut monitor = BlowupMonitor::new(0.5, 1.0, 0.0).unwrap();
    let s0 = mean_zero_state(&grid, 0.5);
    monitor
        .update(&s0, st.table(), &nl, st.transform())
        .unwrap();
    run(&st, s0, &RunOptions::until(0.2), |s, _| {
        monitor.update(s, st.table(), &nl, st.transform()).unwrap();
    })
    .unwrap();
    let tr = &monitor.trace;
    for k in 1..tr.len() - 1 {
        let dh = (tr[k + 1].h - tr[k - 1].h) / (2.0 * dt);
        let d2h = (tr[k + 1].dh - tr[k - 1].dh) / (2.0 * dt);
        assert!(
            (dh - tr[k].dh).abs() <= 1e-5 * tr[k].dh.abs().max(1.0),
            "H' at {k}"
        );
        assert!(
            (d2h - tr[k].d2h).abs() <= 1e-4 * tr[k].d2h.abs().max(1.0),
            "H'' at {k}"
        );
    }
}

fn power_trace(k: f64, t_star: f64) -> BlowupMonitor {
    let mut m = BlowupMonitor::new(1.0, 1.0, 0.0).unwrap();
    for i in 0..1000 {
        let t = 0.8 * t_star * i as f64 / 999.0;
        let d = t_star - t;
        m.push(BlowupSample {
            t,
            h: d.powf(-k),
            dh: k * d.powf(-k - 1.0),
            d2h: k * (k + 1.0) * d.powf(-k - 2.0),
            bu_sq: None,
            but_sq: None,
        })
        .unwrap();
    }
    m
}

#[test]
fn certifier_recovers_power_law_exponents() {
    for k in [1.0, 2.0, 3.0] {
        for t_star in [0.5, 1.0, 7.0] {
            let m = power_trace(k, t_star);
            let Certification::Certified(c) =
                blowup_certify(&m, &CertifyOptions::default()).unwrap()
            else {
                panic!("k = {k} not certified");
            };
            assert!(
                ((c.nu - 1.0 / k) * k).abs() <= 0.05,
                "k = {k}: nu = {}",
                c.nu
            );
            assert!(
                c.t1_bound >= t_star && c.t1_bound <= 1.5 * t_star,
                "t1 = {}",
                c.t1_bound
            );
            assert!(c.side_conditions.is_none());
        }
    }
}

#[test]
fn quadratic_growth_is_refuted() {
    let mut m = BlowupMonitor::new(1.0, 1.0, 0.0).unwrap();
    for i in 0..1000 {
        let t = 10.0 * i as f64 / 999.0;
        m.push(BlowupSample {
            t,
            h: 1.0 + t * t,
            dh: 2.0 * t,
            d2h: 2.0,
            bu_sq: None,
            but_sq: None,
        })
        .unwrap();
    }
    assert!(matches!(
        blowup_certify(&m, &CertifyOptions::default()).unwrap(),
        Certification::Refuted(_)
    ));
}
