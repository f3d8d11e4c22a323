use hamalg::quasiclassics::{
    integrate_characteristics, transport_amplitude, transport_residual, Grid, Hamiltonian, Poly,
    HJ_TOLERANCE,
};
use proptest::prelude::*;

/// `S0 = c q^2 / 2`.
fn curvature(c: f64) -> Poly {
    Poly::zero(1).term(c / 2.0, 0, &[0], &[2])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn characteristics_conserve_energy(q0 in -1.5f64..1.5, c in -0.5f64..0.5) {
        let h = Hamiltonian::quartic();
        let tr = integrate_characteristics(&h, &curvature(c), &[q0], 0.3, 1e-3);
        prop_assume!(tr.is_ok());
        let tr = tr.unwrap();
        let energy = |k: usize| {
            let s = &tr.samples[k];
            h.value(s.t, &s.p, &s.q)
        };
        let e0 = energy(0);
        for k in 1..tr.samples.len() {
            prop_assert!((energy(k) - e0).abs() < 1e-10 * e0.abs().max(1.0));
        }
    }

    /// Oscillator with quadratic `S0`: `D(t) = cos t + c sin t` and the amplitude
    /// is `a0(q0) / sqrt(D)`.
    #[test]
    fn oscillator_amplitude_matches_the_closed_form(q0 in -2.0f64..2.0, c in -0.5f64..0.5) {
        let h = Hamiltonian::oscillator();
        let tr = integrate_characteristics(&h, &curvature(c), &[q0], 1.0, 1e-3).unwrap();
        let a = transport_amplitude(&h, &tr, |q| (-q[0] * q[0]).exp()).unwrap();
        for (s, a) in tr.samples.iter().zip(a) {
            let d = s.t.cos() + c * s.t.sin();
            prop_assert!((s.det - d).abs() < 1e-9);
            prop_assert!((a - (-q0 * q0).exp() / d.sqrt()).abs() < 1e-9);
        }
    }

    /// `D(t + s) = A(s) D(t) + B(s) E(t)` with `A = cos`, `B = sin` and
    /// `E(t) = p(t) / q0` for the oscillator.
    #[test]
    fn monodromy_composes(k1 in 1usize..500, k2 in 1usize..500, c in -0.5f64..0.5, q0 in 0.2f64..2.0) {
        let h = Hamiltonian::oscillator();
        let tr = integrate_characteristics(&h, &curvature(c), &[q0], 1.0, 1e-3).unwrap();
        let (at, both) = (&tr.samples[k1], &tr.samples[k1 + k2]);
        let s = both.t - at.t;
        let e = at.p[0] / q0;
        prop_assert!((both.d[(0, 0)] - (s.cos() * at.d[(0, 0)] + s.sin() * e)).abs() < 1e-7);
    }

    /// The closed-form oscillator solution satisfies both transport equations.
    /// `D` stays above 0.3 so the difference quotients remain accurate.
    #[test]
    fn oscillator_solution_passes_the_residual_checks(c in -0.5f64..0.5, t1 in 0.3f64..0.8) {
        let h = Hamiltonian::oscillator();
        let d = move |t: f64| t.cos() + c * t.sin();
        let s = move |t: f64, q: f64| q * q * (c * t.cos() - t.sin()) / (2.0 * d(t));
        let a = move |t: f64, q: f64| (-(q / d(t)).powi(2)).exp() / d(t).sqrt();
        let grid = Grid { t0: 0.05, t1, nt: 11, q0: -1.0, q1: 1.0, nq: 41, dt: 2e-3, dq: 2e-3 };
        let r = transport_residual(&h, &s, &a, &grid).unwrap();
        prop_assert!(r < HJ_TOLERANCE, "{}", r);
    }
}
