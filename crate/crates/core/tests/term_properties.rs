use hamalg::lattice::{discretize, LatticeConfig, LatticeState, NumericBinding};
use hamalg::random::{GenConfig, SymbolGen};
use hamalg::term::{Factor, Field, MultiIndex, Term, Var};
use hamalg::{Rational, Symbol};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn gen(seed: u64) -> SymbolGen {
    SymbolGen::new(seed, GenConfig::default())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn canonicalize_is_idempotent(seed in any::<u64>()) {
        let mut g = gen(seed);
        let raw = g.symbol().product_raw(&g.symbol()).add(&g.symbol());
        let once = raw.canonicalize().unwrap();
        prop_assert_eq!(once.canonicalize().unwrap(), once);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn multiply_is_commutative_and_associative(seed in any::<u64>()) {
        let mut g = gen(seed);
        let (a, b, c) = (g.symbol(), g.symbol(), g.symbol());
        prop_assert_eq!(a.multiply(&b).unwrap(), b.multiply(&a).unwrap());
        let left = a.multiply(&b).unwrap().multiply(&c).unwrap();
        let right = a.multiply(&b.multiply(&c).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    /// `int d/dx F dx = 0` for a random local integrand `F`.
    #[test]
    fn total_derivatives_vanish(
        fields in prop::collection::vec((any::<bool>(), 0u8..3), 1..4),
        function in prop::option::of(0u8..2),
        c in -3i64..4,
    ) {
        let v = Var::Dummy(0);
        let mut factors: Vec<Factor> = fields
            .iter()
            .map(|&(is_pi, k)| Factor::field(if is_pi { Field::Pi } else { Field::Phi }, MultiIndex::order1(k), v))
            .collect();
        if let Some(k) = function {
            factors.push(Factor::func("f", MultiIndex::order1(k), v));
        }
        let mut terms = Vec::new();
        for i in 0..factors.len() {
            let mut fs = factors.clone();
            let d = fs[i].deriv_mut();
            *d = d.raised(0);
            terms.push(Term::new(Rational::from_integer(c.into()), 1, fs));
        }
        prop_assert!(Symbol::from_terms(terms).canonicalize().unwrap().is_empty());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    /// Lattice values of a raw product and of its canonical form agree.
    #[test]
    fn canonicalize_is_sound_on_the_lattice(seed in any::<u64>()) {
        let mut g = gen(seed);
        let (a, b) = (g.symbol(), g.symbol());
        let raw = a.product_raw(&b).add(&a.scale(&Rational::new(3.into(), 2.into())));
        let canon = raw.canonicalize().unwrap();
        let cfg = LatticeConfig::new(256, 8.0).unwrap();
        let bind = NumericBinding::default();
        let (fr, fc) = (discretize(&raw, &cfg, &bind).unwrap(), discretize(&canon, &cfg, &bind).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..5 {
            let st = LatticeState::random(&cfg, &mut rng);
            let (x, y) = (fr.evaluate(&st), fc.evaluate(&st));
            // Integration by parts holds on the lattice only up to the stencil order.
            prop_assert!((x - y).abs() <= 1e-2 * x.abs().max(y.abs()).max(1.0), "{} vs {}", x, y);
        }
    }
}
