use nvsqueeze::dynamics::evolve_dicke_spin_boson;
use nvsqueeze::normal_modes::NormalModeSolution;
use nvsqueeze::spin_algebra::{css_state, DickeBasis};

fn modes(omega_minus: f64, lambda: f64) -> NormalModeSolution {
    NormalModeSolution {
        delta_bd: 0.0,
        omega_a: 1.0,
        coupling: 0.0,
        g: 0.0,
        theta: 0.0,
        omega_minus,
        omega_plus: 2.0,
        lambda_plus: lambda,
        lambda_minus: lambda,
        eta_plus: 0.0,
        eta_minus: 0.0,
        lambda_eff: lambda,
        r: omega_minus / (2.0 * lambda.abs()),
        chi: 4.0 * lambda * lambda / omega_minus,
        amp_factor: 0.0,
    }
}

#[test]
fn dispersive_dicke_model_reduces_to_oat() {
    let r = 50.0;
    let p = modes(1.0, 1.0 / (2.0 * r));
    let basis = DickeBasis::new(6).unwrap();
    let period = 2.0 * std::f64::consts::PI / p.chi;
    let times: Vec<f64> = (1..=40).map(|i| period * i as f64 / 40.0).collect();
    let res = evolve_dicke_spin_boson(&p, 0.0, 8, &css_state(&basis), &times).unwrap();
    let worst = res
        .spin
        .squeezing_trace
        .iter()
        .zip(&res.oat_reference.squeezing_trace)
        .map(|(a, b)| ((a - b) / b).abs())
        .fold(0.0, f64::max);
    assert!(worst < 5.0 / r, "{worst}");
    assert!(res.truncation_change <= 1e-6);
}

#[test]
fn spin_decouples_at_stroboscopic_times() {
    let p = modes(1.0, 0.02);
    let basis = DickeBasis::new(4).unwrap();
    let times: Vec<f64> = (1..=20).map(|k| 2.0 * std::f64::consts::PI * k as f64 * 37.0).collect();
    let res = evolve_dicke_spin_boson(&p, 0.0, 8, &css_state(&basis), &times).unwrap();
    let bound = 10.0 * (0.02f64).powi(2);
    for pur in &res.purity {
        assert!(1.0 - pur < bound, "{pur}");
    }
}

#[test]
fn uncoupled_spin_is_frozen() {
    let p = modes(1.0, 0.0);
    let basis = DickeBasis::new(5).unwrap();
    let css = css_state(&basis);
    let m0 = css.moments();
    let res = evolve_dicke_spin_boson(&p, 0.0, 3, &css, &[0.5, 3.0, 40.0]).unwrap();
    for m in &res.spin.moment_traces {
        assert!(m.max_abs_diff(&m0) < 1e-12);
    }
}

#[test]
fn too_small_cutoff_is_reported() {
    let p = modes(1.0, 0.4);
    let basis = DickeBasis::new(6).unwrap();
    let err = evolve_dicke_spin_boson(&p, 0.0, 1, &css_state(&basis), &[5.0]).unwrap_err();
    assert!(matches!(err, nvsqueeze::Error::Truncation { .. }));
}
