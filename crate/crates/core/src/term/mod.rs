//! Polynomial functionals of the field pair (phi, pi): representation,
//! canonical form and the commutative product.

mod canon;
pub mod ibp;

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use smallvec::SmallVec;

use crate::error::Result;
use crate::scalar::{is_zero, Rational, Scalar};

pub use canon::{CanonOptions, Mode, DEFAULT_MAX_DERIVATIVE};

/// Derivative multi-index; its length is the spatial dimension.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(SmallVec<[u8; 4]>);

impl MultiIndex {
    pub fn zero(dim: usize) -> Self {
        MultiIndex(SmallVec::from_elem(0, dim))
    }

    pub fn from_slice(entries: &[u8]) -> Self {
        MultiIndex(SmallVec::from_slice(entries))
    }

    /// Order `k` along the single axis of a one-dimensional session.
    pub fn order1(k: u8) -> Self {
        MultiIndex::from_slice(&[k])
    }

    pub fn unit(dim: usize, axis: usize) -> Self {
        let mut m = MultiIndex::zero(dim);
        m.0[axis] = 1;
        m
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[u8] {
        &self.0
    }

    pub fn order(&self) -> u32 {
        self.0.iter().map(|&e| e as u32).sum()
    }

    pub fn max_entry(&self) -> u32 {
        self.0.iter().copied().max().unwrap_or(0) as u32
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn raised(&self, axis: usize) -> Self {
        let mut m = self.clone();
        m.0[axis] += 1;
        m
    }

    pub fn lowered(&self, axis: usize) -> Option<Self> {
        let mut m = self.clone();
        if m.0[axis] == 0 {
            return None;
        }
        m.0[axis] -= 1;
        Some(m)
    }

    pub fn add(&self, other: &Self) -> Self {
        MultiIndex(
            self.0
                .iter()
                .zip(other.0.iter())
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn sub(&self, other: &Self) -> Option<Self> {
        let mut out = SmallVec::new();
        for (a, b) in self.0.iter().zip(other.0.iter()) {
            out.push(a.checked_sub(*b)?);
        }
        Some(MultiIndex(out))
    }

    /// All `j <= self` componentwise.
    pub fn below(&self) -> Vec<MultiIndex> {
        let mut acc = vec![MultiIndex(SmallVec::new())];
        for &e in self.0.iter() {
            let mut next = Vec::with_capacity(acc.len() * (e as usize + 1));
            for prefix in &acc {
                for v in 0..=e {
                    let mut m = prefix.clone();
                    m.0.push(v);
                    next.push(m);
                }
            }
            acc = next;
        }
        acc
    }

    /// Expands the multi-index into a sequence of single-axis derivatives.
    pub fn axes(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for (axis, &e) in self.0.iter().enumerate() {
            for _ in 0..e {
                out.push(axis);
            }
        }
        out
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0.as_slice())
    }
}

/// Multi-index in source syntax: `k` in one dimension, `(k1,k2)` otherwise.
impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.len() == 1 {
            write!(f, "{}", self.0[0])
        } else {
            let parts: Vec<String> = self.0.iter().map(|e| e.to_string()).collect();
            write!(f, "({})", parts.join(","))
        }
    }
}

/// Spatial point label. Integration dummies sort first, the origin last.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Var {
    Dummy(u16),
    Free(u16),
    Origin,
}

const FREE_NAMES: [&str; 6] = ["x", "y", "z", "w", "u", "v"];

/// Text name of the `i`-th free variable.
pub fn free_name(i: u16) -> String {
    match FREE_NAMES.get(i as usize) {
        Some(n) => n.to_string(),
        None => format!("x{}", i),
    }
}

pub fn free_index(name: &str) -> Option<u16> {
    if let Some(i) = FREE_NAMES.iter().position(|n| *n == name) {
        return Some(i as u16);
    }
    let rest = name.strip_prefix('x')?;
    let i: u16 = rest.parse().ok()?;
    (i as usize >= FREE_NAMES.len()).then_some(i)
}

impl Var {
    pub fn is_dummy(self) -> bool {
        matches!(self, Var::Dummy(_))
    }

    /// Free variable with the given text name (`x`, `y`, ...).
    pub fn named(name: &str) -> Option<Var> {
        free_index(name).map(Var::Free)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Field {
    Phi,
    Pi,
}

impl Field {
    pub fn name(self) -> &'static str {
        match self {
            Field::Phi => "phi",
            Field::Pi => "pi",
        }
    }
}

/// One multiplicative factor of a term.
///
/// Named coefficient functions are stored alongside the field factors; they
/// are constants for the variational calculus but take part in integration by
/// parts like any other function of the integration variable.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Factor {
    Func {
        name: Arc<str>,
        deriv: MultiIndex,
        arg: Var,
    },
    Field {
        field: Field,
        deriv: MultiIndex,
        arg: Var,
    },
    /// `delta^(deriv)(left - right)`; `right == Origin` is the anchored delta.
    Delta {
        deriv: MultiIndex,
        left: Var,
        right: Var,
    },
}

impl Factor {
    pub fn field(field: Field, deriv: MultiIndex, arg: Var) -> Self {
        Factor::Field { field, deriv, arg }
    }

    pub fn func(name: &str, deriv: MultiIndex, arg: Var) -> Self {
        Factor::Func {
            name: Arc::from(name),
            deriv,
            arg,
        }
    }

    pub fn delta(deriv: MultiIndex, left: Var, right: Var) -> Self {
        Factor::Delta { deriv, left, right }
    }

    pub fn deriv(&self) -> &MultiIndex {
        match self {
            Factor::Func { deriv, .. }
            | Factor::Field { deriv, .. }
            | Factor::Delta { deriv, .. } => deriv,
        }
    }

    pub fn deriv_mut(&mut self) -> &mut MultiIndex {
        match self {
            Factor::Func { deriv, .. }
            | Factor::Field { deriv, .. }
            | Factor::Delta { deriv, .. } => deriv,
        }
    }

    fn primary_var(&self) -> Var {
        match self {
            Factor::Func { arg, .. } | Factor::Field { arg, .. } => *arg,
            Factor::Delta { left, .. } => *left,
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Factor::Func { .. } => 0,
            Factor::Field { .. } => 1,
            Factor::Delta { .. } => 2,
        }
    }

    pub fn involves(&self, v: Var) -> bool {
        match self {
            Factor::Func { arg, .. } | Factor::Field { arg, .. } => *arg == v,
            Factor::Delta { left, right, .. } => *left == v || *right == v,
        }
    }

    pub fn map_vars(&mut self, mut f: impl FnMut(Var) -> Var) {
        match self {
            Factor::Func { arg, .. } | Factor::Field { arg, .. } => *arg = f(*arg),
            Factor::Delta { left, right, .. } => {
                *left = f(*left);
                *right = f(*right);
            }
        }
    }

    pub fn substitute(&mut self, from: Var, to: Var) {
        self.map_vars(|v| if v == from { to } else { v });
    }

    pub fn is_field(&self, which: Field) -> bool {
        matches!(self, Factor::Field { field, .. } if *field == which)
    }

    pub fn is_delta(&self) -> bool {
        matches!(self, Factor::Delta { .. })
    }

    /// Derivative of this factor with respect to the point `v` along `axis`,
    /// as a sign and the differentiated factor. `None` if it does not depend on `v`.
    pub(crate) fn differentiate(&self, v: Var, axis: usize) -> Option<(i64, Factor)> {
        match self {
            Factor::Func { arg, .. } | Factor::Field { arg, .. } if *arg == v => {
                let mut g = self.clone();
                let d = g.deriv_mut();
                *d = d.raised(axis);
                Some((1, g))
            }
            Factor::Delta { deriv, left, right } if *left == v && *right != v => {
                Some((1, Factor::delta(deriv.raised(axis), *left, *right)))
            }
            Factor::Delta { deriv, left, right } if *right == v && *left != v => {
                Some((-1, Factor::delta(deriv.raised(axis), *left, *right)))
            }
            _ => None,
        }
    }
}

impl PartialOrd for Factor {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Factor {
    fn cmp(&self, other: &Self) -> Ordering {
        self.primary_var()
            .cmp(&other.primary_var())
            .then(self.rank().cmp(&other.rank()))
            .then_with(|| match (self, other) {
                (
                    Factor::Func {
                        name: a, deriv: da, ..
                    },
                    Factor::Func {
                        name: b, deriv: db, ..
                    },
                ) => a.cmp(b).then(da.order().cmp(&db.order())).then(da.cmp(db)),
                (
                    Factor::Field {
                        field: a,
                        deriv: da,
                        ..
                    },
                    Factor::Field {
                        field: b,
                        deriv: db,
                        ..
                    },
                ) => a.cmp(b).then(da.order().cmp(&db.order())).then(da.cmp(db)),
                (
                    Factor::Delta {
                        deriv: da,
                        right: ra,
                        ..
                    },
                    Factor::Delta {
                        deriv: db,
                        right: rb,
                        ..
                    },
                ) => ra
                    .cmp(rb)
                    .then(da.order().cmp(&db.order()))
                    .then(da.cmp(db)),
                _ => Ordering::Equal,
            })
    }
}

/// Formal, never-evaluated constants produced by coincident-point contractions.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum DivergentConstant {
    /// `delta^(k)(0)`.
    DeltaAtZero(MultiIndex),
    /// `int int delta(x - x')^2 dx dx'`, equivalently `delta(0)` times the volume.
    DeltaSquared,
    /// `int dx` over all of space.
    Volume,
}

/// Formal part of a coefficient: powers of `h`, `i`, `m` and divergent constants.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct Formal {
    pub h: u32,
    /// Whether one factor of the imaginary unit is present; `i^2` is folded into the scalar.
    pub i: bool,
    pub mass: i32,
    pub divergent: Vec<DivergentConstant>,
}

impl Formal {
    pub fn is_divergent(&self) -> bool {
        !self.divergent.is_empty()
    }

    pub fn is_trivial(&self) -> bool {
        *self == Formal::default()
    }

    /// Product of formal parts; the returned flag reports a sign flip from `i * i`.
    pub fn mul(&self, other: &Formal) -> (Formal, bool) {
        let mut divergent = self.divergent.clone();
        divergent.extend(other.divergent.iter().cloned());
        let both_i = self.i && other.i;
        let mut out = Formal {
            h: self.h + other.h,
            i: self.i ^ other.i,
            mass: self.mass + other.mass,
            divergent,
        };
        out.normalize();
        (out, both_i)
    }

    /// Sorts constants and folds `delta(0) * volume` into the delta-squared integral.
    pub fn normalize(&mut self) {
        loop {
            let zero = self
                .divergent
                .iter()
                .position(|d| matches!(d, DivergentConstant::DeltaAtZero(k) if k.is_zero()));
            let vol = self
                .divergent
                .iter()
                .position(|d| *d == DivergentConstant::Volume);
            match (zero, vol) {
                (Some(a), Some(b)) => {
                    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
                    self.divergent.remove(hi);
                    self.divergent.remove(lo);
                    self.divergent.push(DivergentConstant::DeltaSquared);
                }
                _ => break,
            }
        }
        self.divergent.sort();
    }
}

/// One integral term: `coeff * formal * int ... prod(factors) d(dummies)`.
#[derive(Clone, PartialEq, Debug)]
pub struct Term<S: Scalar = Rational> {
    pub coeff: S,
    pub formal: Formal,
    /// Number of integration variables; they are `Var::Dummy(0..dummies)`.
    pub dummies: u16,
    pub factors: Vec<Factor>,
}

impl<S: Scalar> Term<S> {
    pub fn new(coeff: S, dummies: u16, factors: Vec<Factor>) -> Self {
        Term {
            coeff,
            formal: Formal::default(),
            dummies,
            factors,
        }
    }

    pub fn constant(coeff: S) -> Self {
        Term::new(coeff, 0, Vec::new())
    }

    /// Number of pi factors.
    pub fn grade(&self) -> u32 {
        self.factors
            .iter()
            .filter(|f| f.is_field(Field::Pi))
            .count() as u32
    }

    pub fn field_degree(&self) -> u32 {
        self.factors
            .iter()
            .filter(|f| matches!(f, Factor::Field { .. }))
            .count() as u32
    }

    pub fn free_vars(&self) -> Vec<Var> {
        let mut out = Vec::new();
        for f in &self.factors {
            let mut push = |v: Var| {
                if matches!(v, Var::Free(_)) && !out.contains(&v) {
                    out.push(v);
                }
            };
            match f {
                Factor::Func { arg, .. } | Factor::Field { arg, .. } => push(*arg),
                Factor::Delta { left, right, .. } => {
                    push(*left);
                    push(*right);
                }
            }
        }
        out.sort();
        out
    }

    pub fn involves(&self, v: Var) -> bool {
        self.factors.iter().any(|f| f.involves(v))
    }

    pub fn mul_formal(&mut self, formal: &Formal) {
        let (f, flip) = self.formal.mul(formal);
        self.formal = f;
        if flip {
            self.coeff = -self.coeff.clone();
        }
    }

    /// Product with disjoint integration variables.
    pub fn product(&self, other: &Term<S>) -> Term<S> {
        let offset = self.dummies;
        let mut factors = self.factors.clone();
        factors.extend(other.factors.iter().map(|f| {
            let mut g = f.clone();
            g.map_vars(|v| match v {
                Var::Dummy(i) => Var::Dummy(i + offset),
                other => other,
            });
            g
        }));
        let mut t = Term {
            coeff: self.coeff.clone() * other.coeff.clone(),
            formal: self.formal.clone(),
            dummies: self.dummies + other.dummies,
            factors,
        };
        t.mul_formal(&other.formal);
        t
    }

    pub(crate) fn key(&self) -> TermKey {
        TermKey {
            dummies: self.dummies,
            formal: self.formal.clone(),
            factors: self.factors.clone(),
        }
    }

    /// Applies the cheap, purely structural normalizations: factor order and
    /// formal-part order. Does not integrate by parts or contract deltas.
    pub fn tidy(&mut self) {
        self.factors.sort();
        self.formal.normalize();
    }
}

/// Ordering key of a term without its scalar.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub(crate) struct TermKey {
    dummies: u16,
    formal: Formal,
    factors: Vec<Factor>,
}

/// A finite sum of terms: a polynomial functional of (phi, pi).
#[derive(Clone, PartialEq, Debug)]
pub struct Symbol<S: Scalar = Rational> {
    pub terms: Vec<Term<S>>,
}

impl<S: Scalar> Default for Symbol<S> {
    fn default() -> Self {
        Symbol { terms: Vec::new() }
    }
}

impl<S: Scalar> Symbol<S> {
    pub fn zero() -> Self {
        Symbol::default()
    }

    pub fn one() -> Self {
        Symbol::from_term(Term::constant(S::one()))
    }

    pub fn from_term(t: Term<S>) -> Self {
        Symbol { terms: vec![t] }
    }

    pub fn from_terms(terms: Vec<Term<S>>) -> Self {
        Symbol { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| is_zero(&t.coeff))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Highest pi-degree among the terms; `None` for zero.
    pub fn grade(&self) -> Option<u32> {
        self.terms.iter().map(Term::grade).max()
    }

    /// Grade if every term has the same pi-degree.
    pub fn homogeneous_grade(&self) -> Option<u32> {
        let first = self.terms.first()?.grade();
        self.terms
            .iter()
            .all(|t| t.grade() == first)
            .then_some(first)
    }

    pub fn is_divergent(&self) -> bool {
        self.terms.iter().any(|t| t.formal.is_divergent())
    }

    pub fn free_vars(&self) -> Vec<Var> {
        let mut out: Vec<Var> = self.terms.iter().flat_map(|t| t.free_vars()).collect();
        out.sort();
        out.dedup();
        out
    }

    /// First free variable, starting at `start`, unused by any of `symbols`.
    pub fn fresh_free(symbols: &[&Symbol<S>], start: u16) -> Var {
        let mut i = start;
        loop {
            let v = Var::Free(i);
            if symbols
                .iter()
                .all(|s| !s.terms.iter().any(|t| t.involves(v)))
            {
                return v;
            }
            i += 1;
        }
    }

    pub fn add(&self, other: &Symbol<S>) -> Symbol<S> {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Symbol { terms }
    }

    pub fn neg(&self) -> Symbol<S> {
        self.scale(&-S::one())
    }

    pub fn sub(&self, other: &Symbol<S>) -> Symbol<S> {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &S) -> Symbol<S> {
        Symbol {
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    coeff: t.coeff.clone() * c.clone(),
                    ..t.clone()
                })
                .collect(),
        }
    }

    pub fn mul_formal(&self, formal: &Formal) -> Symbol<S> {
        Symbol {
            terms: self
                .terms
                .iter()
                .map(|t| {
                    let mut t = t.clone();
                    t.mul_formal(formal);
                    t
                })
                .collect(),
        }
    }

    /// Product of two symbols without canonicalization.
    pub fn product_raw(&self, other: &Symbol<S>) -> Symbol<S> {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                terms.push(a.product(b));
            }
        }
        Symbol { terms }
    }

    /// Canonical product of the commutative algebra.
    pub fn multiply(&self, other: &Symbol<S>) -> Result<Symbol<S>> {
        self.product_raw(other).canonicalize()
    }

    /// Canonical sum.
    pub fn plus(&self, other: &Symbol<S>) -> Result<Symbol<S>> {
        self.add(other).canonicalize()
    }

    pub fn minus(&self, other: &Symbol<S>) -> Result<Symbol<S>> {
        self.sub(other).canonicalize()
    }

    /// Turns the free variable `v` into a new integration variable of every term.
    pub fn integrate_free(&self, v: Var) -> Symbol<S> {
        Symbol {
            terms: self
                .terms
                .iter()
                .map(|t| {
                    let mut t = t.clone();
                    let d = Var::Dummy(t.dummies);
                    t.dummies += 1;
                    for f in &mut t.factors {
                        f.substitute(v, d);
                    }
                    t
                })
                .collect(),
        }
    }

    pub fn substitute_free(&self, from: Var, to: Var) -> Symbol<S> {
        Symbol {
            terms: self
                .terms
                .iter()
                .map(|t| {
                    let mut t = t.clone();
                    for f in &mut t.factors {
                        f.substitute(from, to);
                    }
                    t
                })
                .collect(),
        }
    }

    /// Sorts factors and terms and merges like terms without any rewriting.
    pub fn tidy(&self) -> Symbol<S> {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let mut t = t.clone();
                t.tidy();
                t
            })
            .collect();
        merge_terms(terms)
    }

    pub fn canonicalize(&self) -> Result<Symbol<S>> {
        self.canonicalize_with(&CanonOptions::default())
    }

    pub fn canonicalize_with(&self, opts: &CanonOptions) -> Result<Symbol<S>> {
        canon::canonicalize(self, opts)
    }

    /// Structural equality of canonical forms.
    pub fn equals(&self, other: &Symbol<S>) -> Result<bool> {
        Ok(self.canonicalize()? == other.canonicalize()?)
    }

    pub fn map_coeffs<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Symbol<T> {
        Symbol {
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    coeff: f(&t.coeff),
                    formal: t.formal.clone(),
                    dummies: t.dummies,
                    factors: t.factors.clone(),
                })
                .collect(),
        }
    }
}

/// Merges like terms, drops zeros and sorts by the canonical term order.
pub(crate) fn merge_terms<S: Scalar>(terms: Vec<Term<S>>) -> Symbol<S> {
    let mut map: std::collections::BTreeMap<TermKey, S> = std::collections::BTreeMap::new();
    for t in terms {
        let key = t.key();
        match map.get_mut(&key) {
            Some(c) => *c = c.clone() + t.coeff,
            None => {
                map.insert(key, t.coeff);
            }
        }
    }
    Symbol {
        terms: map
            .into_iter()
            .filter(|(_, c)| !is_zero(c))
            .map(|(k, coeff)| Term {
                coeff,
                formal: k.formal,
                dummies: k.dummies,
                factors: k.factors,
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rational;

    fn phi(k: u8, v: Var) -> Factor {
        Factor::field(Field::Phi, MultiIndex::order1(k), v)
    }

    #[test]
    fn multi_index_arithmetic() {
        let a = MultiIndex::from_slice(&[1, 2]);
        assert_eq!(a.order(), 3);
        assert_eq!(a.below().len(), 6);
        assert_eq!(a.axes(), vec![0, 1, 1]);
        assert_eq!(a.sub(&MultiIndex::from_slice(&[2, 0])), None);
        assert_eq!(format!("{}", a), "(1,2)");
        assert_eq!(format!("{}", MultiIndex::order1(3)), "3");
    }

    #[test]
    fn free_variable_names() {
        assert_eq!(free_name(0), "x");
        assert_eq!(free_name(1), "y");
        assert_eq!(free_index("y"), Some(1));
        assert_eq!(free_index("x7"), Some(7));
        assert_eq!(free_index("x1"), None);
        assert_eq!(free_name(9), "x9");
    }

    #[test]
    fn formal_i_squared_flips_sign() {
        let i = Formal {
            i: true,
            ..Formal::default()
        };
        let mut t: Term = Term::new(rational(1, 1), 0, vec![]);
        t.mul_formal(&i);
        t.mul_formal(&i);
        assert_eq!(t.coeff, rational(-1, 1));
        assert!(!t.formal.i);
    }

    #[test]
    fn delta_zero_times_volume_is_delta_squared() {
        let mut f = Formal {
            divergent: vec![
                DivergentConstant::Volume,
                DivergentConstant::DeltaAtZero(MultiIndex::order1(0)),
            ],
            ..Formal::default()
        };
        f.normalize();
        assert_eq!(f.divergent, vec![DivergentConstant::DeltaSquared]);
    }

    #[test]
    fn product_offsets_dummies() {
        let a: Term = Term::new(rational(1, 1), 1, vec![phi(0, Var::Dummy(0))]);
        let p = a.product(&a);
        assert_eq!(p.dummies, 2);
        assert!(p.involves(Var::Dummy(1)));
    }

    #[test]
    fn merge_drops_cancelled_terms() {
        let a: Term = Term::new(rational(1, 2), 1, vec![phi(0, Var::Dummy(0))]);
        let b = Term {
            coeff: rational(-1, 2),
            ..a.clone()
        };
        assert!(merge_terms(vec![a, b]).is_empty());
    }
}
