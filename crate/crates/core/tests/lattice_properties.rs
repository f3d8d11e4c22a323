use hamalg::lattice::{
    kg_flow, verify_bracket, LatticeConfig, LatticeState, NumericBinding, NOISE_FLOOR,
};
use hamalg::random::{GenConfig, SymbolGen};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn kg_flow_is_a_group(n in prop::sample::select(vec![16usize, 32, 64]), m in 0.0f64..3.0, t in 0.0f64..3.0, s in 0.0f64..3.0) {
        let cfg = LatticeConfig::new(n, 8.0).unwrap();
        let (a, b, ab) = (kg_flow(&cfg, m, t), kg_flow(&cfg, m, s), kg_flow(&cfg, m, t + s));
        let scale = ab.propagator.amax().max(1.0);
        prop_assert!((&a.propagator * &b.propagator - &ab.propagator).amax() < 1e-10 * scale);
    }

    #[test]
    fn kg_flow_is_symplectic_and_conserves_energy(n in prop::sample::select(vec![32usize, 64]), m in 0.0f64..3.0, t in 0.0f64..10.0, seed in any::<u64>()) {
        let cfg = LatticeConfig::new(n, 8.0).unwrap();
        let r = kg_flow(&cfg, m, t);
        prop_assert!(r.symplectic_defect < 1e-10 * r.propagator.amax().max(1.0), "{}", r.symplectic_defect);
        let st = LatticeState::random(&cfg, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert!(r.energy_drift(&cfg, &st) < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// Doubling N cuts the oracle error by about four.
    #[test]
    fn bracket_oracle_converges_at_second_order(seed in any::<u64>()) {
        let mut g = SymbolGen::new(seed, GenConfig { max_deriv: 1, ..GenConfig::default() });
        let (a, b) = (g.quadratic(), g.quadratic());
        let cfgs: Vec<LatticeConfig> = [128, 256].iter().map(|&n| LatticeConfig::new(n, 8.0).unwrap()).collect();
        let bind = NumericBinding::for_names(["f", "g"]);
        let r = verify_bracket(&a, &b, &cfgs, &bind, 2, seed).unwrap();
        let (coarse, fine) = (r.rows[0].error, r.rows[1].error);
        prop_assert!(fine < NOISE_FLOOR || fine < coarse / 3.0, "{:?}", r);
    }
}
