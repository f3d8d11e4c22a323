//! The commutator `[f phi phi', g pi^2]` expanded in two ways.
//!
//! Expanding by the Leibniz rule on the left factor and on the right factor,
//! moving every operator at `y` onto `x` across the delta, and subtracting,
//! leaves only coincident-point commutators. Putting `y = 0` turns them into a
//! relation among anchored deltas and the divergent constants `delta^(k)(0)`.

use serde::Serialize;

use super::expr::{OpTerm, OperatorExpression};
use super::ops::{ccr_reduce_with, normal_symbol};
use crate::error::Result;
use crate::parser::format_symbol;
use crate::scalar::{binomial, sign, Rational, Scalar};
use crate::term::{CanonOptions, Factor, Field, Formal, MultiIndex, Symbol, Term, Var};

const X: Var = Var::Free(0);
const Y: Var = Var::Free(1);

/// `[a, b] / (ih)` for single field operators; zero for equal species.
fn field_commutator(a: &Factor, b: &Factor) -> Option<(Rational, Factor)> {
    match (a, b) {
        (
            Factor::Field {
                field: Field::Phi,
                deriv: beta,
                arg: q,
            },
            Factor::Field {
                field: Field::Pi,
                deriv: alpha,
                arg: p,
            },
        ) => Some((sign(alpha.order()), Factor::delta(alpha.add(beta), *q, *p))),
        (
            Factor::Field {
                field: Field::Pi, ..
            },
            Factor::Field {
                field: Field::Phi, ..
            },
        ) => field_commutator(b, a).map(|(c, d)| (-c, d)),
        _ => None,
    }
}

fn without(word: &[Factor], i: usize) -> Vec<Factor> {
    let mut w = word.to_vec();
    w.remove(i);
    w
}

fn op(coeff: Rational, word: Vec<Factor>, delta: Factor) -> OpTerm {
    OpTerm {
        coeff,
        formal: Formal::default(),
        dummies: 0,
        word,
        rest: vec![delta],
    }
}

/// `[A, B]/(ih)` with the Leibniz rule applied to `A` first:
/// `sum_i A_<i [a_i, B] A_>i`, where `[a_i, B] = sum_j [a_i, b_j] B\b_j`.
pub fn expand_left(a: &[Factor], b: &[Factor]) -> OperatorExpression {
    let mut terms = Vec::new();
    for i in 0..a.len() {
        for j in 0..b.len() {
            if let Some((c, d)) = field_commutator(&a[i], &b[j]) {
                let mut word = a[..i].to_vec();
                word.extend(without(b, j));
                word.extend_from_slice(&a[i + 1..]);
                terms.push(op(c, word, d));
            }
        }
    }
    OperatorExpression::from_terms(terms)
}

/// `[A, B]/(ih)` with the Leibniz rule applied to `B` first:
/// `sum_j B_<j [A, b_j] B_>j`, where `[A, b_j] = sum_i A\a_i [a_i, b_j]`.
pub fn expand_right(a: &[Factor], b: &[Factor]) -> OperatorExpression {
    let mut terms = Vec::new();
    for j in 0..b.len() {
        for i in 0..a.len() {
            if let Some((c, d)) = field_commutator(&a[i], &b[j]) {
                let mut word = b[..j].to_vec();
                word.extend(without(a, i));
                word.extend_from_slice(&b[j + 1..]);
                terms.push(op(c, word, d));
            }
        }
    }
    OperatorExpression::from_terms(terms)
}

/// Moves all operators at `source` onto `target` across the single delta
/// tying them, keeping operator positions:
/// `G(s) delta^(k)(t - s) = sum_j C(k,j) G^(j)(t) delta^(k-j)(t - s)`.
pub fn localize_operators(e: &OperatorExpression, source: Var, target: Var) -> OperatorExpression {
    let mut out = Vec::new();
    for t in &e.terms {
        let Some(pos) = t.rest.iter().position(|f| {
            matches!(f, Factor::Delta { left, right, .. } if (*left == target && *right == source) || (*left == source && *right == target))
        }) else {
            out.push(t.clone());
            continue;
        };
        let Factor::Delta { deriv, left, right } = t.rest[pos].clone() else {
            unreachable!()
        };
        let target_on_left = left == target;
        let slots: Vec<usize> = (0..t.word.len())
            .filter(|&i| t.word[i].involves(source))
            .collect();
        for j in deriv.below() {
            let binom: i64 = deriv
                .entries()
                .iter()
                .zip(j.entries())
                .map(|(&k, &jj)| binomial(k as u32, jj as u32))
                .product();
            let mut c = Rational::from_int(binom);
            if !target_on_left {
                c *= sign::<Rational>(j.order());
            }
            let mut variants = vec![(Rational::from_int(1), t.word.clone())];
            for axis in j.axes() {
                let mut next = Vec::new();
                for (vc, w) in &variants {
                    for &s in &slots {
                        let mut w2 = w.clone();
                        let d = w2[s].deriv_mut();
                        *d = d.raised(axis);
                        next.push((vc.clone(), w2));
                    }
                }
                variants = next;
            }
            for (vc, mut w) in variants {
                for f in &mut w {
                    f.substitute(source, target);
                }
                let mut rest = t.rest.clone();
                rest[pos] = Factor::delta(deriv.sub(&j).expect("j <= k"), left, right);
                out.push(OpTerm {
                    coeff: t.coeff.clone() * c.clone() * vc,
                    formal: t.formal.clone(),
                    dummies: t.dummies,
                    word: w,
                    rest,
                });
            }
        }
    }
    OperatorExpression::from_terms(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualReport {
    pub f: String,
    pub g: String,
    /// Full residual of the two expansions after `y = 0`, including `ih`.
    pub residual: String,
    pub prefactor: String,
    pub combination: String,
    /// The independent path through differentiating `delta(x)^2 = delta(0) delta(x)`.
    pub derivative_path: String,
    pub paths_agree: bool,
}

fn one_dim(k: u8) -> MultiIndex {
    MultiIndex::order1(k)
}

/// Difference of the two Leibniz expansions after localization, reduced
/// with (`ccr = true`) or without the commutation relations, at `y = 0`.
pub fn leibniz_residual_symbol(ccr: bool) -> Result<Symbol> {
    let a = [
        Factor::field(Field::Phi, one_dim(0), X),
        Factor::field(Field::Phi, one_dim(1), X),
    ];
    let b = [
        Factor::field(Field::Pi, one_dim(0), Y),
        Factor::field(Field::Pi, one_dim(0), Y),
    ];
    let left = localize_operators(&expand_left(&a, &b), Y, X);
    let right = localize_operators(&expand_right(&a, &b), Y, X);
    // Each coincident commutator contributes one factor of ih.
    let diff = ccr_reduce_with(&left.sub(&right), ccr)?;
    let at_origin = normal_symbol(&diff).substitute_free(Y, Var::Origin);
    at_origin.canonicalize_with(&CanonOptions::formal())
}

/// Differentiates `delta(x)^2 - delta(0) delta(x)` in `x` and localizes the
/// product of deltas at the origin.
pub fn derivative_path() -> Result<Symbol> {
    let d0 = Factor::delta(one_dim(0), X, Var::Origin);
    let mut zero = Formal::default();
    zero.divergent
        .push(crate::term::DivergentConstant::DeltaAtZero(one_dim(0)));
    let base = Symbol::from_terms(vec![
        Term::new(Rational::from_int(1), 0, vec![d0.clone(), d0.clone()]),
        Term {
            coeff: Rational::from_int(-1),
            formal: zero,
            dummies: 0,
            factors: vec![d0],
        },
    ]);
    let derived = differentiate_free(&base, X, 0);
    derived.canonicalize_with(&CanonOptions {
        localize_distributions: true,
        ..CanonOptions::formal()
    })
}

/// `d/dv` of every term by the product rule.
pub fn differentiate_free<S: Scalar>(s: &Symbol<S>, v: Var, axis: usize) -> Symbol<S> {
    let mut out = Vec::new();
    for t in &s.terms {
        for (i, f) in t.factors.iter().enumerate() {
            if let Some((sg, g)) = f.differentiate(v, axis) {
                let mut factors = t.factors.clone();
                factors[i] = g;
                let c = if sg < 0 {
                    -t.coeff.clone()
                } else {
                    t.coeff.clone()
                };
                out.push(Term {
                    coeff: c,
                    factors,
                    ..t.clone()
                });
            }
        }
    }
    Symbol::from_terms(out)
}

/// Splits off a formal part shared by every term.
fn common_prefactor(s: &Symbol) -> (Formal, Symbol) {
    if s.terms.is_empty() {
        return (Formal::default(), s.clone());
    }
    let shared = Formal {
        h: s.terms.iter().map(|t| t.formal.h).min().unwrap_or(0),
        i: s.terms.iter().all(|t| t.formal.i),
        mass: 0,
        divergent: Vec::new(),
    };
    let stripped = Symbol::from_terms(
        s.terms
            .iter()
            .map(|t| {
                let mut t = t.clone();
                t.formal.h -= shared.h;
                if shared.i {
                    t.formal.i = false;
                }
                t
            })
            .collect(),
    );
    (shared, stripped)
}

pub fn leibniz_residual(f: &str, g: &str) -> Result<ResidualReport> {
    let residual = leibniz_residual_symbol(true)?;
    let (shared, combination) = common_prefactor(&residual);
    let prefactor = format_symbol(&Symbol::from_term(Term {
        formal: shared,
        ..Term::constant(Rational::from_int(1))
    }));
    let derived = derivative_path()?;
    Ok(ResidualReport {
        f: f.to_string(),
        g: g.to_string(),
        residual: format_symbol(&residual),
        prefactor,
        combination: format_symbol(&combination),
        paths_agree: derived == combination,
        derivative_path: format_symbol(&derived),
    })
}
