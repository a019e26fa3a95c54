//! Named experiment presets, some with closed-form oracles.

use std::f64::consts::SQRT_2;

use nlwave_core::nonlinearity::f_eval;
use nlwave_core::spectral::RealField;

use crate::config::{parse_config, RunConfig};
use crate::runner::{RunnerError, Setup};

pub const PRESET_NAMES: [&str; 5] = [
    "klein_gordon_mode",
    "forced_linear",
    "imbq_like",
    "focusing_blowup",
    "dyadic_system_N4",
];

/// Scalar function of `(x, t, component)`.
pub type FieldFn = Box<dyn Fn([f64; 2], f64, usize) -> f64 + Send + Sync>;

/// Closed-form solution together with the external forcing it requires.
pub struct Oracle {
    pub u: FieldFn,
    pub ut: FieldFn,
    pub utt: FieldFn,
    pub forcing: FieldFn,
}

pub struct PresetCase {
    pub name: &'static str,
    pub config: RunConfig,
    pub oracle: Option<Oracle>,
}

const KLEIN_GORDON_MODE: &str = r#"
[grid]
dim = 1
half_period = 3.141592653589793
points = 64

[kernel]
laplacian = { kind = "constant", c = 1.0 }
operator = [{ kind = "constant", m2 = 1.0 }]

[time]
dt = 0.01
t_end = 10.0

[diagnostics]
cadence = 100

[initial]
u = [{ kind = "single_mode", amplitude = 1.0, mode = [1, 0], phase = "cos" }]
"#;

const FORCED_LINEAR: &str = r#"
[grid]
dim = 1
half_period = 3.141592653589793
points = 32

[kernel]
laplacian = { kind = "constant", c = 1.0 }
operator = [{ kind = "constant", m2 = 1.0 }]

[time]
dt = 0.02
t_end = 1.0

[initial]
u = [{ kind = "single_mode", amplitude = 1.0, mode = [1, 0], phase = "sin" }]

[forcing]
kind = "standing_wave"
amplitude = -2.0
mode = [1, 0]
omega = 2.0
phase = "sin"
"#;

const IMBQ_LIKE: &str = r#"
[grid]
dim = 1
half_period = 8.0
points = 128

[kernel]
laplacian = { kind = "constant", c = 0.0 }
operator = [{ kind = "rational" }]
smoothing = { c_g = 1.0, r = 2.0 }

[nonlinearity]
lambda = 1.0
gamma = 1

[time]
dt = 0.05
t_end = 10.0

[diagnostics]
cadence = 10

[initial]
u = [{ kind = "gaussian", amplitude = 0.01, width = 1.0 }]
project_mean = true
"#;

const FOCUSING_BLOWUP: &str = r#"
[grid]
dim = 1
half_period = 3.141592653589793
points = 256

[kernel]
laplacian = { kind = "constant", c = 0.0 }
operator = [{ kind = "rational" }]
smoothing = { c_g = 1.0, r = 2.0 }

[nonlinearity]
lambda = -1.0
gamma = 2

[time]
dt = 0.001
t_end = 5.0

[diagnostics]
cadence = 5
sup_factor = 10.0
blowup = { b = 0.01, t0 = 1.0 }

[initial]
u = [{ kind = "single_mode", amplitude = 3.0, mode = [1, 0], phase = "cos" }]
project_mean = true
"#;

const DYADIC_SYSTEM_N4: &str = r#"
[grid]
dim = 1
half_period = 3.141592653589793
points = 64

[kernel]
components = 4
laplacian = { kind = "constant", c = 1.0 }
operator = [{ kind = "dyadic", profile = "gaussian", sigma = 0.5 }]
smoothing = { c_g = 1.0, r = 2.0 }

[nonlinearity]
lambda = 0.5
gamma = 1

[time]
dt = 0.01
t_end = 2.0

[diagnostics]
cadence = 20

[initial]
u = [
  { kind = "single_mode", amplitude = 0.5, mode = [1, 0], phase = "cos" },
  { kind = "single_mode", amplitude = 0.4, mode = [2, 0], phase = "sin" },
  { kind = "gaussian", amplitude = 0.3, width = 0.7 },
  { kind = "gaussian", amplitude = -0.2, width = 1.2, center = [1.0, 0.0] },
]
ut = [{ kind = "single_mode", amplitude = 0.1, mode = [3, 0], phase = "cos" }]
"#;

fn source(name: &str) -> Option<(&'static str, &'static str)> {
    let text = match name {
        "klein_gordon_mode" => KLEIN_GORDON_MODE,
        "forced_linear" => FORCED_LINEAR,
        "imbq_like" => IMBQ_LIKE,
        "focusing_blowup" => FOCUSING_BLOWUP,
        "dyadic_system_N4" => DYADIC_SYSTEM_N4,
        _ => return None,
    };
    let name = PRESET_NAMES.iter().find(|n| **n == name)?;
    Some((name, text))
}

/// Looks up a preset by name.
pub fn manufactured_case(name: &str) -> Result<PresetCase, RunnerError> {
    let (name, text) = source(name).ok_or_else(|| RunnerError::UnknownPreset(name.to_string()))?;
    let config = parse_config(text, None).expect("built-in presets are valid");
    let oracle = match name {
        // â = Â = 1 so the |ξ| = 1 mode has η = √2
        "klein_gordon_mode" => Some(Oracle {
            u: Box::new(|x, t, _| x[0].cos() * (SQRT_2 * t).cos()),
            ut: Box::new(|x, t, _| -SQRT_2 * x[0].cos() * (SQRT_2 * t).sin()),
            utt: Box::new(|x, t, _| -2.0 * x[0].cos() * (SQRT_2 * t).cos()),
            forcing: Box::new(|_, _, _| 0.0),
        }),
        // u = sin x cos 2t: u_tt + 2u = −2 sin x cos 2t
        "forced_linear" => Some(Oracle {
            u: Box::new(|x, t, _| x[0].sin() * (2.0 * t).cos()),
            ut: Box::new(|x, t, _| -2.0 * x[0].sin() * (2.0 * t).sin()),
            utt: Box::new(|x, t, _| -4.0 * x[0].sin() * (2.0 * t).cos()),
            forcing: Box::new(|x, t, _| -2.0 * x[0].sin() * (2.0 * t).cos()),
        }),
        _ => None,
    };
    Ok(PresetCase {
        name,
        config,
        oracle,
    })
}

/// The preset's configuration as a TOML document.
pub fn preset_document(name: &str) -> Result<&'static str, RunnerError> {
    source(name)
        .map(|(_, text)| text.trim_start())
        .ok_or_else(|| RunnerError::UnknownPreset(name.to_string()))
}

/// Relative sup-norm residual of the discrete equation
/// `û_tt + η²û + |ξ|²ĝ DFT(f(u)) − F̂` for the oracle at time `t`.
pub fn oracle_residual(case: &PresetCase, t: f64) -> Result<f64, RunnerError> {
    let oracle = case
        .oracle
        .as_ref()
        .ok_or_else(|| RunnerError::Invalid(format!("preset {} has no oracle", case.name)))?;
    let setup = Setup::new(&case.config)?;
    let (grid, table, tr) = (&setup.grid, &setup.table, &setup.transform);
    let n = table.components();
    let sample = |f: &FieldFn| RealField::from_fn(grid, n, |x, j| f(x, t, j));
    let u = sample(&oracle.u)?;
    let u_hat = tr.forward(&u)?;
    let utt_hat = tr.forward(&sample(&oracle.utt)?)?;
    let force_hat = tr.forward(&sample(&oracle.forcing)?)?;
    let nl_hat = tr.forward(&f_eval(&u, &setup.nl)?)?;
    let modes = grid.modes();
    let (mut residual, mut scale) = (0.0f64, 0.0f64);
    for j in 0..n {
        for m in 0..modes {
            let i = j * modes + m;
            let elastic = u_hat.coeffs()[i] * table.eta_sq(j)[m];
            let nonlinear = nl_hat.coeffs()[i] * (grid.xi_sq()[m] * table.g_hat()[m]);
            let r = utt_hat.coeffs()[i] + elastic + nonlinear - force_hat.coeffs()[i];
            residual = residual.max(r.norm());
            scale = scale.max(utt_hat.coeffs()[i].norm()).max(elastic.norm());
        }
    }
    Ok(residual / scale.max(f64::MIN_POSITIVE))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_parses() {
        for name in PRESET_NAMES {
            let case = manufactured_case(name).unwrap();
            assert_eq!(case.name, name);
            let doc = preset_document(name).unwrap();
            assert_eq!(parse_config(doc, None).unwrap(), case.config);
        }
    }

    #[test]
    fn unknown_preset_is_rejected() {
        assert!(
            matches!(manufactured_case("nope"), Err(RunnerError::UnknownPreset(n)) if n == "nope")
        );
        assert!(preset_document("nope").is_err());
    }

    #[test]
    fn oracles_satisfy_the_equation() {
        for name in ["klein_gordon_mode", "forced_linear"] {
            let case = manufactured_case(name).unwrap();
            for t in [0.0, 0.3, 1.7] {
                let r = oracle_residual(&case, t).unwrap();
                assert!(r < 1e-8, "{name} at t = {t}: {r}");
            }
        }
        assert!(manufactured_case("imbq_like").unwrap().oracle.is_none());
    }

    #[test]
    fn oracle_derivatives_are_consistent() {
        for name in ["klein_gordon_mode", "forced_linear"] {
            let o = manufactured_case(name).unwrap().oracle.unwrap();
            let (x, t, h) = ([0.4, 0.0], 0.9, 1e-4);
            let du = ((o.u)(x, t + h, 0) - (o.u)(x, t - h, 0)) / (2.0 * h);
            let dut = ((o.ut)(x, t + h, 0) - (o.ut)(x, t - h, 0)) / (2.0 * h);
            assert!((du - (o.ut)(x, t, 0)).abs() < 1e-7);
            assert!((dut - (o.utt)(x, t, 0)).abs() < 1e-7);
        }
    }

    #[test]
    fn blowup_preset_starts_with_negative_energy() {
        let case = manufactured_case("focusing_blowup").unwrap();
        let setup = Setup::new(&case.config).unwrap();
        let state = crate::runner::initial_state(&case.config, &setup).unwrap();
        let e = nlwave_core::diagnostics::energy(&state, &setup.table, &setup.nl, &setup.transform)
            .unwrap();
        assert!(e.e_paper < 0.0, "{e:?}");
        assert!(!e.projected());
    }
}
