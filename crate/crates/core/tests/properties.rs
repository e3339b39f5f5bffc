use nalgebra::DMatrix;
use nvsqueeze::cumulant::{closed_form_moments, optimal_squeezing, squeezing_asymptotic, squeezing_closed_form, VForm};
use nvsqueeze::dynamics::{evolve_oat_master, NoiseParams, SolverOptions};
use nvsqueeze::experiment::{ExperimentConfig, GridSpec};
use nvsqueeze::fit::fit_scaling;
use nvsqueeze::modulation::bessel_j;
use nvsqueeze::normal_modes::bogoliubov;
use nvsqueeze::spin_algebra::{build_operators, css_state, squeezing_wineland, DickeBasis};
use nvsqueeze::C64;
use proptest::prelude::*;

fn max_norm(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn angular_momentum_algebra(n in 1usize..40) {
        let b = DickeBasis::new(n).unwrap();
        let o = build_operators(&b);
        let (x, y, z) = (&o.jx.matrix, &o.jy.matrix, &o.jz.matrix);
        let i = C64::new(0.0, 1.0);
        prop_assert!(max_norm(&(x * y - y * x - z * i)) < 1e-12 * (n as f64));
        let j = b.j_total();
        let cas = &o.jx2.matrix + &o.jy2.matrix + &o.jz2.matrix;
        let id = DMatrix::<C64>::identity(b.dim(), b.dim()) * C64::new(j * (j + 1.0), 0.0);
        prop_assert!(max_norm(&(cas - id)) < 1e-12 * j * (j + 1.0));
    }

    #[test]
    fn bessel_three_term_recurrence(n in 1i32..30, x in 0.1f64..40.0) {
        let lhs = bessel_j(n - 1, x).unwrap() + bessel_j(n + 1, x).unwrap();
        let rhs = 2.0 * n as f64 / x * bessel_j(n, x).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-12, "{lhs} vs {rhs}");
    }

    #[test]
    fn jacobi_anger(x in 0.0f64..15.0, phi in -3.2f64..3.2) {
        let mut sum = C64::new(0.0, 0.0);
        for n in -60..=60 {
            sum += C64::from_polar(bessel_j(n, x).unwrap(), n as f64 * phi);
        }
        prop_assert!((sum - C64::from_polar(1.0, x * phi.sin())).norm() < 1e-12);
    }

    #[test]
    fn normal_mode_sum_and_product(d in 0.05f64..3.0, frac in 0.0f64..0.999) {
        let wa = 1.0;
        let g = frac * 0.5 * (d * wa).sqrt();
        let s = bogoliubov(d, wa, g, 1e-3).unwrap();
        let (p2, m2) = (s.omega_plus.powi(2), s.omega_minus.powi(2));
        let sum = d * d + wa * wa;
        let prod = d * wa * (d * wa - 4.0 * g * g);
        prop_assert!(((p2 + m2 - sum) / sum).abs() < 1e-10);
        prop_assert!(((p2 * m2 - prod) / prod).abs() < 1e-10);
        prop_assert!(s.omega_minus <= s.omega_plus);
    }

    #[test]
    fn closed_form_matches_its_moments(
        j in 2.0f64..400.0,
        chi in 0.01f64..3.0,
        gamma in 0.0f64..0.1,
        big_gamma in 0.0f64..0.1,
        n_th in 0.0f64..3.0,
        chi0 in 0.0f64..3.0,
    ) {
        let noise = NoiseParams::new(gamma * chi * j, big_gamma * chi * j, n_th).unwrap();
        let t = chi0 / (chi * j);
        let a = squeezing_closed_form(j, chi, &noise, t, VForm::Exact).unwrap();
        let b = squeezing_wineland(&closed_form_moments(j, chi, &noise, t).unwrap(), j).unwrap();
        prop_assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }

    #[test]
    fn optimum_is_time_unit_covariant(s in 0.1f64..10.0, gamma in 0.001f64..0.1, big_gamma in 0.0f64..0.1) {
        let noise = NoiseParams::new(gamma, big_gamma, 1.0).unwrap();
        let (x1, t1) = optimal_squeezing(50.0, 1.0, &noise).unwrap();
        let (xs, ts) = optimal_squeezing(50.0, s, &noise.scaled(s)).unwrap();
        prop_assert!(((x1 - xs) / x1).abs() < 1e-12);
        prop_assert!(((t1 / s - ts) / ts).abs() < 1e-12);
        // At the optimum the noise term is twice the coherent term.
        let coherent = 1.0 / (4.0 * 2500.0 * t1 * t1);
        let total = squeezing_asymptotic(50.0, 1.0, &noise, t1).unwrap();
        prop_assert!(((total - coherent) / coherent - 2.0).abs() < 1e-9);
        prop_assert!((total - x1).abs() < 1e-12 * x1);
    }

    #[test]
    fn power_law_fit_recovers_exponent(k in -3.0f64..3.0, c in 0.01f64..100.0) {
        let x: Vec<f64> = [10.0, 20.0, 40.0, 80.0, 160.0, 320.0].to_vec();
        let y: Vec<f64> = x.iter().map(|v| c * v.powf(k)).collect();
        let f = fit_scaling(&x, &y).unwrap();
        prop_assert!((f.exponent - k).abs() < 1e-10);
        prop_assert!(f.stderr < 1e-8);
    }

    #[test]
    fn grids_are_strictly_increasing(start in -5.0f64..5.0, width in 1e-3f64..10.0, points in 2usize..200) {
        let v = GridSpec::range(start, start + width, points).values("grid").unwrap();
        prop_assert_eq!(v.len(), points);
        prop_assert!(v.windows(2).all(|w| w[1] > w[0]));
        prop_assert!(GridSpec::range(start + width, start, points).values("grid").is_err());
    }

    #[test]
    fn config_canonical_form_round_trips(n in 2usize..300, chi in 0.01f64..5.0, gamma in 0.0f64..1.0) {
        let text = format!(
            "kind = \"oat\"\n[system]\nn_spins = {n}\nchi = {chi:?}\n[noise]\ngamma = {gamma:?}\nGamma = 0.0\nn_th = 0.0\n[grid]\nstart = 0.0\nstop = 1.0\npoints = 5\n"
        );
        let cfg = ExperimentConfig::from_toml(&text).unwrap();
        let again = ExperimentConfig::from_toml(&cfg.canonical()).unwrap();
        prop_assert_eq!(&cfg, &again);
        prop_assert_eq!(cfg.hash(), again.hash());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn master_equation_keeps_trace_and_hermiticity(
        n in 2usize..10,
        chi in 0.2f64..2.0,
        gamma in 0.0f64..0.3,
        big_gamma in 0.0f64..0.3,
        n_th in 0.0f64..2.0,
    ) {
        let noise = NoiseParams::new(gamma, big_gamma, n_th).unwrap();
        let opts = SolverOptions { store_states: true, ..Default::default() };
        let j = n as f64 / 2.0;
        let times = [0.0, 1.0 / (chi * j), 3.0 / (chi * j)];
        let run = evolve_oat_master(&css_state(&DickeBasis::new(n).unwrap()), chi, &noise, &times, &opts).unwrap();
        prop_assert!(run.diagnostics.max_trace_error < 1e-8);
        prop_assert!(run.diagnostics.max_hermiticity_error < 1e-9);
        prop_assert!(run.diagnostics.min_eigenvalue > -1e-6);
        for st in run.states.as_ref().unwrap() {
            prop_assert!((st.trace() - 1.0).norm() < 1e-8);
        }
    }
}
