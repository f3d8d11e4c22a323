use crate::scalar::{is_zero, Rational, Scalar};
use crate::term::{Factor, Field, Formal, Term, Var};

/// One term of an operator expression. `word` holds the field operators in
/// operator order; `rest` holds the commuting factors (named functions and
/// deltas).
#[derive(Clone, PartialEq, Debug)]
pub struct OpTerm<S: Scalar = Rational> {
    pub coeff: S,
    pub formal: Formal,
    pub dummies: u16,
    pub word: Vec<Factor>,
    pub rest: Vec<Factor>,
}

impl<S: Scalar> OpTerm<S> {
    /// Splits an ordered factor list into word and commuting rest.
    pub fn from_ordered(coeff: S, formal: Formal, dummies: u16, factors: Vec<Factor>) -> Self {
        let (word, rest) = factors
            .into_iter()
            .partition(|f| matches!(f, Factor::Field { .. }));
        OpTerm {
            coeff,
            formal,
            dummies,
            word,
            rest,
        }
    }

    /// Number of pi operators.
    pub fn grade(&self) -> u32 {
        self.word.iter().filter(|f| f.is_field(Field::Pi)).count() as u32
    }

    pub fn is_normal_ordered(&self) -> bool {
        let first_pi = self
            .word
            .iter()
            .position(|f| f.is_field(Field::Pi))
            .unwrap_or(self.word.len());
        self.word[first_pi..].iter().all(|f| f.is_field(Field::Pi))
    }

    pub fn involves(&self, v: Var) -> bool {
        self.word
            .iter()
            .chain(self.rest.iter())
            .any(|f| f.involves(v))
    }

    /// The same term with its operators forgotten into commuting factors.
    pub fn to_term(&self) -> Term<S> {
        let mut factors = self.rest.clone();
        factors.extend(self.word.iter().cloned());
        Term {
            coeff: self.coeff.clone(),
            formal: self.formal.clone(),
            dummies: self.dummies,
            factors,
        }
    }

    pub(crate) fn map_vars(&mut self, f: impl Fn(Var) -> Var) {
        for g in self.word.iter_mut().chain(self.rest.iter_mut()) {
            g.map_vars(&f);
        }
    }

    /// Product with disjoint integration variables; words concatenate.
    pub fn product(&self, other: &OpTerm<S>) -> OpTerm<S> {
        let offset = self.dummies;
        let mut b = other.clone();
        b.map_vars(|v| match v {
            Var::Dummy(i) => Var::Dummy(i + offset),
            v => v,
        });
        let mut word = self.word.clone();
        word.extend(b.word);
        let mut rest = self.rest.clone();
        rest.extend(b.rest);
        let (formal, flip) = self.formal.mul(&other.formal);
        let mut coeff = self.coeff.clone() * other.coeff.clone();
        if flip {
            coeff = -coeff;
        }
        OpTerm {
            coeff,
            formal,
            dummies: self.dummies + other.dummies,
            word,
            rest,
        }
    }
}

/// Finite sum of ordered operator terms.
#[derive(Clone, PartialEq, Debug)]
pub struct OperatorExpression<S: Scalar = Rational> {
    pub terms: Vec<OpTerm<S>>,
}

impl<S: Scalar> Default for OperatorExpression<S> {
    fn default() -> Self {
        OperatorExpression { terms: Vec::new() }
    }
}

impl<S: Scalar> OperatorExpression<S> {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_terms(terms: Vec<OpTerm<S>>) -> Self {
        OperatorExpression { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| is_zero(&t.coeff))
    }

    /// True iff some coefficient carries a divergent constant.
    pub fn is_divergent(&self) -> bool {
        self.terms.iter().any(|t| t.formal.is_divergent())
    }

    pub fn grade(&self) -> Option<u32> {
        self.terms.iter().map(OpTerm::grade).max()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        OperatorExpression { terms }
    }

    pub fn scale(&self, c: &S) -> Self {
        OperatorExpression {
            terms: self
                .terms
                .iter()
                .map(|t| OpTerm {
                    coeff: t.coeff.clone() * c.clone(),
                    ..t.clone()
                })
                .collect(),
        }
    }

    pub fn neg(&self) -> Self {
        self.scale(&-S::one())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul_formal(&self, formal: &Formal) -> Self {
        OperatorExpression {
            terms: self
                .terms
                .iter()
                .map(|t| {
                    let (f, flip) = t.formal.mul(formal);
                    let coeff = if flip {
                        -t.coeff.clone()
                    } else {
                        t.coeff.clone()
                    };
                    OpTerm {
                        coeff,
                        formal: f,
                        ..t.clone()
                    }
                })
                .collect(),
        }
    }

    /// Concatenation product without reduction.
    pub fn product_raw(&self, other: &Self) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                terms.push(a.product(b));
            }
        }
        OperatorExpression { terms }
    }

    /// Sorts commuting factors and merges terms with identical words.
    pub fn tidy(&self) -> Self {
        let mut map: std::collections::BTreeMap<(u16, Formal, Vec<Factor>, Vec<Factor>), S> =
            std::collections::BTreeMap::new();
        for t in &self.terms {
            let mut rest = t.rest.clone();
            rest.sort();
            let mut formal = t.formal.clone();
            formal.normalize();
            let key = (t.dummies, formal, rest, t.word.clone());
            match map.get_mut(&key) {
                Some(c) => *c = c.clone() + t.coeff.clone(),
                None => {
                    map.insert(key, t.coeff.clone());
                }
            }
        }
        OperatorExpression {
            terms: map
                .into_iter()
                .filter(|(_, c)| !is_zero(c))
                .map(|((dummies, formal, rest, word), coeff)| OpTerm {
                    coeff,
                    formal,
                    dummies,
                    word,
                    rest,
                })
                .collect(),
        }
    }
}
