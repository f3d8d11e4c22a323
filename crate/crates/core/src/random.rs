//! Seeded generators of random symbols for the property suites.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scalar::{rational, Rational};
use crate::term::{Factor, Field, MultiIndex, Term, Var};
use crate::Symbol;

#[derive(Clone, Debug)]
pub struct GenConfig {
    pub max_grade: u32,
    pub max_deriv: u8,
    pub max_terms: usize,
    pub max_degree: usize,
    pub functions: Vec<String>,
    /// Probability that a term is a product of two local integrals.
    pub bilocal: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_grade: 3,
            max_deriv: 2,
            max_terms: 2,
            max_degree: 3,
            functions: vec!["f".into(), "g".into()],
            bilocal: 0.15,
        }
    }
}

pub struct SymbolGen {
    rng: ChaCha8Rng,
    pub cfg: GenConfig,
}

const COEFFS: [(i64, i64); 6] = [(1, 1), (-1, 1), (1, 2), (-1, 2), (2, 1), (-2, 1)];

impl SymbolGen {
    pub fn new(seed: u64, cfg: GenConfig) -> Self {
        SymbolGen {
            rng: ChaCha8Rng::seed_from_u64(seed),
            cfg,
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn coefficient(&mut self) -> Rational {
        let (n, d) = *COEFFS.choose(&mut self.rng).expect("nonempty");
        rational(n, d)
    }

    fn deriv(&mut self) -> MultiIndex {
        MultiIndex::order1(self.rng.gen_range(0..=self.cfg.max_deriv))
    }

    /// Factors of one local integrand at `v` with exactly `grade` pi factors.
    fn local_factors(&mut self, grade: u32, v: Var) -> Vec<Factor> {
        let min_degree = (grade as usize).max(1);
        let degree = self
            .rng
            .gen_range(min_degree..=self.cfg.max_degree.max(min_degree));
        let mut fields = vec![Field::Pi; grade as usize];
        fields.resize(degree, Field::Phi);
        fields.shuffle(&mut self.rng);
        let mut factors: Vec<Factor> = fields
            .into_iter()
            .map(|f| Factor::field(f, self.deriv(), v))
            .collect();
        // A single field needs a decaying coefficient to define a symbol.
        let want_function = degree == 1 || self.rng.gen_bool(0.4);
        if want_function && !self.cfg.functions.is_empty() {
            let name = self
                .cfg
                .functions
                .choose(&mut self.rng)
                .expect("nonempty")
                .clone();
            let k = MultiIndex::order1(self.rng.gen_range(0..=self.cfg.max_deriv.min(1)));
            factors.push(Factor::func(&name, k, v));
        }
        factors
    }

    fn term(&mut self, grade: u32) -> Term<Rational> {
        let c = self.coefficient();
        if grade <= 2 && self.rng.gen_bool(self.cfg.bilocal) {
            let g1 = self.rng.gen_range(0..=grade);
            let mut factors = self.local_factors(g1, Var::Dummy(0));
            factors.extend(self.local_factors(grade - g1, Var::Dummy(1)));
            Term::new(c, 2, factors)
        } else {
            Term::new(c, 1, self.local_factors(grade, Var::Dummy(0)))
        }
    }

    /// Random canonical symbol, homogeneous of the given grade; may be zero.
    pub fn homogeneous(&mut self, grade: u32) -> Symbol {
        let n = self.rng.gen_range(1..=self.cfg.max_terms);
        let terms = (0..n).map(|_| self.term(grade)).collect();
        Symbol::from_terms(terms)
            .canonicalize()
            .expect("generated symbols canonicalize")
    }

    /// Random canonical symbol with grades up to `max_grade`; never zero.
    pub fn symbol(&mut self) -> Symbol {
        loop {
            let n = self.rng.gen_range(1..=self.cfg.max_terms);
            let terms = (0..n)
                .map(|_| {
                    let g = self.rng.gen_range(0..=self.cfg.max_grade);
                    self.term(g)
                })
                .collect();
            let s = Symbol::from_terms(terms)
                .canonicalize()
                .expect("generated symbols canonicalize");
            if !s.is_empty() {
                return s;
            }
        }
    }

    /// Nonzero homogeneous symbol.
    pub fn nonzero_homogeneous(&mut self, grade: u32) -> Symbol {
        loop {
            let s = self.homogeneous(grade);
            if !s.is_empty() {
                return s;
            }
        }
    }

    /// Quadratic symbol (total field degree 2).
    pub fn quadratic(&mut self) -> Symbol {
        loop {
            let n = self.rng.gen_range(1..=self.cfg.max_terms);
            let mut terms = Vec::new();
            for _ in 0..n {
                let c = self.coefficient();
                let v = Var::Dummy(0);
                let mut factors = vec![
                    Factor::field(
                        *[Field::Phi, Field::Pi].choose(&mut self.rng).unwrap(),
                        self.deriv(),
                        v,
                    ),
                    Factor::field(
                        *[Field::Phi, Field::Pi].choose(&mut self.rng).unwrap(),
                        self.deriv(),
                        v,
                    ),
                ];
                if self.rng.gen_bool(0.5) && !self.cfg.functions.is_empty() {
                    let name = self.cfg.functions.choose(&mut self.rng).unwrap().clone();
                    factors.push(Factor::func(
                        &name,
                        MultiIndex::order1(self.rng.gen_range(0..=1)),
                        v,
                    ));
                }
                terms.push(Term::new(c, 1, factors));
            }
            let s = Symbol::from_terms(terms)
                .canonicalize()
                .expect("generated symbols canonicalize");
            if !s.is_empty() {
                return s;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::variational::check_symbol;

    #[test]
    fn generator_is_deterministic() {
        let a: Vec<Symbol> = {
            let mut g = SymbolGen::new(7, GenConfig::default());
            (0..5).map(|_| g.symbol()).collect()
        };
        let mut g = SymbolGen::new(7, GenConfig::default());
        let b: Vec<Symbol> = (0..5).map(|_| g.symbol()).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn generated_symbols_satisfy_the_symbol_condition() {
        let mut g = SymbolGen::new(3, GenConfig::default());
        for _ in 0..40 {
            let s = g.symbol();
            let r = check_symbol(&s).unwrap();
            assert!(r.is_symbol, "{:?}", r.witnesses);
        }
    }

    #[test]
    fn homogeneous_has_fixed_grade() {
        let mut g = SymbolGen::new(11, GenConfig::default());
        for k in 0..=3 {
            let s = g.nonzero_homogeneous(k);
            assert_eq!(s.homogeneous_grade(), Some(k));
        }
    }
}
