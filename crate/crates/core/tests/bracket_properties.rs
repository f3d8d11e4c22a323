use hamalg::poisson::bracket;
use hamalg::random::{GenConfig, SymbolGen};
use hamalg::variational::check_symbol;
use proptest::prelude::*;

fn gen(seed: u64) -> SymbolGen {
    SymbolGen::new(
        seed,
        GenConfig {
            functions: vec!["f".into(), "g".into(), "j".into()],
            ..GenConfig::default()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn antisymmetric(seed in any::<u64>()) {
        let mut g = gen(seed);
        let (a, b) = (g.symbol(), g.symbol());
        prop_assert!(bracket(&a, &b).unwrap().plus(&bracket(&b, &a).unwrap()).unwrap().is_empty());
    }

    #[test]
    fn bilinear(seed in any::<u64>()) {
        let mut g = gen(seed);
        let (a, b, c) = (g.symbol(), g.symbol(), g.symbol());
        let (p, q) = (g.coefficient(), g.coefficient());
        let lin = a.scale(&p).add(&b.scale(&q)).canonicalize().unwrap();
        let rhs = bracket(&a, &c).unwrap().scale(&p).add(&bracket(&b, &c).unwrap().scale(&q));
        prop_assert!(bracket(&lin, &c).unwrap().minus(&rhs).unwrap().is_empty());
    }

    #[test]
    fn leibniz(seed in any::<u64>()) {
        let mut g = gen(seed);
        let (a, b, c) = (g.symbol(), g.symbol(), g.symbol());
        let lhs = bracket(&a, &b.multiply(&c).unwrap()).unwrap();
        let rhs = bracket(&a, &b).unwrap().product_raw(&c).add(&b.product_raw(&bracket(&a, &c).unwrap()));
        prop_assert!(lhs.minus(&rhs).unwrap().is_empty());
    }

    #[test]
    fn jacobi(seed in any::<u64>()) {
        let mut g = gen(seed);
        let (a, b, c) = (g.symbol(), g.symbol(), g.symbol());
        let cyc = |x, y, z| bracket(x, &bracket(y, z).unwrap()).unwrap();
        let sum = cyc(&a, &b, &c).add(&cyc(&b, &c, &a)).add(&cyc(&c, &a, &b));
        prop_assert!(sum.canonicalize().unwrap().is_empty());
    }

    #[test]
    fn closed_and_graded(seed in any::<u64>(), k in 0u32..4, l in 0u32..4) {
        let mut g = gen(seed);
        let (a, b) = (g.nonzero_homogeneous(k), g.nonzero_homogeneous(l));
        let r = bracket(&a, &b).unwrap();
        prop_assert!(check_symbol(&r).unwrap().is_symbol);
        prop_assert!(r.is_empty() || r.homogeneous_grade() == Some(k + l - 1));
    }
}
