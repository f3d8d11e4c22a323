use serde::Serialize;

use super::expr::{OpTerm, OperatorExpression};
use crate::error::{Error, Result};
use crate::parser::{format_operator, format_symbol};
use crate::poisson::bracket;
use crate::scalar::{sign, Scalar};
use crate::term::{CanonOptions, Factor, Field, Formal, Symbol, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderingScheme {
    /// All pi operators to the right.
    Normal,
    /// Equal-weight average over all orderings of each word.
    Weyl,
}

impl std::str::FromStr for OrderingScheme {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "normal" => Ok(OrderingScheme::Normal),
            "weyl" => Ok(OrderingScheme::Weyl),
            other => Err(format!("unknown ordering scheme `{}`", other)),
        }
    }
}

fn ih() -> Formal {
    Formal {
        h: 1,
        i: true,
        ..Formal::default()
    }
}

/// `[pi^(a)(p), phi^(b)(q)] = -ih (-1)^|a| delta^(a+b)(q - p)`.
fn swap_commutator<S: Scalar>(pi: &Factor, phi: &Factor) -> (S, Factor) {
    let (
        Factor::Field {
            deriv: a, arg: p, ..
        },
        Factor::Field {
            deriv: b, arg: q, ..
        },
    ) = (pi, phi)
    else {
        unreachable!("swap of non-field factors")
    };
    (-sign::<S>(a.order()), Factor::delta(a.add(b), *q, *p))
}

fn first_inversion(word: &[Factor]) -> Option<usize> {
    word.windows(2)
        .position(|w| w[0].is_field(Field::Pi) && w[1].is_field(Field::Phi))
}

/// Moves every pi to the right. With `ccr` off the operators are treated as commuting.
fn normal_order<S: Scalar>(e: &OperatorExpression<S>, ccr: bool) -> Vec<OpTerm<S>> {
    let mut stack = e.terms.clone();
    let mut done = Vec::new();
    while let Some(t) = stack.pop() {
        let Some(i) = first_inversion(&t.word) else {
            done.push(t);
            continue;
        };
        let mut swapped = t.clone();
        swapped.word.swap(i, i + 1);
        if ccr {
            let (c, delta) = swap_commutator::<S>(&t.word[i], &t.word[i + 1]);
            let mut word = t.word.clone();
            word.drain(i..i + 2);
            let mut rest = t.rest.clone();
            rest.push(delta);
            let (formal, flip) = t.formal.mul(&ih());
            let mut coeff = t.coeff.clone() * c;
            if flip {
                coeff = -coeff;
            }
            stack.push(OpTerm {
                coeff,
                formal,
                dummies: t.dummies,
                word,
                rest,
            });
        }
        stack.push(swapped);
    }
    done
}

/// Normal-ordered expression from a commutative symbol (phi block, then pi block).
pub fn from_normal_symbol<S: Scalar>(s: &Symbol<S>) -> OperatorExpression<S> {
    let terms = s
        .terms
        .iter()
        .map(|t| {
            let mut phis = Vec::new();
            let mut pis = Vec::new();
            let mut rest = Vec::new();
            for f in &t.factors {
                match f {
                    Factor::Field {
                        field: Field::Phi, ..
                    } => phis.push(f.clone()),
                    Factor::Field {
                        field: Field::Pi, ..
                    } => pis.push(f.clone()),
                    _ => rest.push(f.clone()),
                }
            }
            phis.extend(pis);
            OpTerm {
                coeff: t.coeff.clone(),
                formal: t.formal.clone(),
                dummies: t.dummies,
                word: phis,
                rest,
            }
        })
        .collect();
    OperatorExpression::from_terms(terms)
}

/// Commutative symbol of a normal-ordered expression.
pub fn normal_symbol<S: Scalar>(e: &OperatorExpression<S>) -> Symbol<S> {
    debug_assert!(e.terms.iter().all(OpTerm::is_normal_ordered));
    Symbol::from_terms(e.terms.iter().map(OpTerm::to_term).collect())
}

/// Normal form under the commutation relations. Coincident contractions
/// become divergent constants.
pub fn ccr_reduce<S: Scalar>(e: &OperatorExpression<S>) -> Result<OperatorExpression<S>> {
    ccr_reduce_with(e, true)
}

pub fn ccr_reduce_with<S: Scalar>(
    e: &OperatorExpression<S>,
    ccr: bool,
) -> Result<OperatorExpression<S>> {
    let done = OperatorExpression::from_terms(normal_order(e, ccr));
    let canon = normal_symbol(&done).canonicalize_with(&CanonOptions::formal())?;
    Ok(from_normal_symbol(&canon))
}

/// Distinct permutations of `items` in lexicographic order.
fn distinct_permutations(mut items: Vec<Factor>) -> Vec<Vec<Factor>> {
    items.sort();
    let mut out = vec![items.clone()];
    loop {
        let n = items.len();
        if n < 2 {
            return out;
        }
        let Some(i) = (0..n - 1).rev().find(|&i| items[i] < items[i + 1]) else {
            return out;
        };
        let j = (i + 1..n)
            .rev()
            .find(|&j| items[j] > items[i])
            .expect("successor exists");
        items.swap(i, j);
        items[i + 1..].reverse();
        out.push(items.clone());
    }
}

pub fn quantize<S: Scalar>(s: &Symbol<S>, scheme: OrderingScheme) -> OperatorExpression<S> {
    let mut terms = Vec::new();
    for t in &s.terms {
        let (fields, rest): (Vec<Factor>, Vec<Factor>) = t
            .factors
            .iter()
            .cloned()
            .partition(|f| matches!(f, Factor::Field { .. }));
        match scheme {
            OrderingScheme::Normal => {
                let (mut phis, pis): (Vec<Factor>, Vec<Factor>) =
                    fields.into_iter().partition(|f| f.is_field(Field::Phi));
                phis.extend(pis);
                terms.push(OpTerm {
                    coeff: t.coeff.clone(),
                    formal: t.formal.clone(),
                    dummies: t.dummies,
                    word: phis,
                    rest,
                });
            }
            OrderingScheme::Weyl => {
                let perms = distinct_permutations(fields);
                let weight = S::ratio(1, perms.len() as i64);
                for word in perms {
                    terms.push(OpTerm {
                        coeff: t.coeff.clone() * weight.clone(),
                        formal: t.formal.clone(),
                        dummies: t.dummies,
                        word,
                        rest: rest.clone(),
                    });
                }
            }
        }
    }
    OperatorExpression::from_terms(terms).tidy()
}

/// Reduced operator product.
pub fn product<S: Scalar>(
    a: &OperatorExpression<S>,
    b: &OperatorExpression<S>,
) -> Result<OperatorExpression<S>> {
    ccr_reduce(&a.product_raw(b))
}

pub fn commutator<S: Scalar>(
    a: &OperatorExpression<S>,
    b: &OperatorExpression<S>,
) -> Result<OperatorExpression<S>> {
    ccr_reduce(&a.product_raw(b).sub(&b.product_raw(a)))
}

/// Multiplies by `1/(ih) = -i/h`; every term must carry a factor of `h`.
pub fn divide_by_ih<S: Scalar>(e: &OperatorExpression<S>) -> Result<OperatorExpression<S>> {
    let mut terms = Vec::with_capacity(e.terms.len());
    for t in &e.terms {
        if t.formal.h == 0 {
            return Err(Error::Precondition(format!(
                "term without a factor of h: {}",
                format_operator(&OperatorExpression::from_terms(vec![t.clone()]))
            )));
        }
        let mut t = t.clone();
        t.formal.h -= 1;
        if t.formal.i {
            t.formal.i = false;
        } else {
            t.formal.i = true;
            t.coeff = -t.coeff;
        }
        terms.push(t);
    }
    Ok(OperatorExpression::from_terms(terms))
}

/// Lowest h-order with operator order forgotten.
pub fn classical_limit<S: Scalar>(e: &OperatorExpression<S>) -> Result<Symbol<S>> {
    let Some(low) = e
        .terms
        .iter()
        .filter(|t| !crate::scalar::is_zero(&t.coeff))
        .map(|t| t.formal.h)
        .min()
    else {
        return Ok(Symbol::zero());
    };
    let mut terms = Vec::new();
    for t in e.terms.iter().filter(|t| t.formal.h == low) {
        if t.formal.is_divergent() {
            return Err(Error::DivergentLeadingTerm(format_operator(
                &OperatorExpression::from_terms(vec![t.clone()]),
            )));
        }
        let mut term: Term<S> = t.to_term();
        term.formal.h = 0;
        terms.push(term);
    }
    Symbol::from_terms(terms).canonicalize()
}

/// Weyl symbol of an expression: the commutative `w` with `Q_weyl(w)` reducing
/// to the same normal form. Lower-order corrections may carry divergent constants.
pub fn weyl_symbol<S: Scalar>(e: &OperatorExpression<S>) -> Result<Symbol<S>> {
    let mut remaining = ccr_reduce(e)?;
    let mut acc = Symbol::zero();
    for _ in 0..64 {
        if remaining.is_zero() {
            return acc.canonicalize_with(&CanonOptions::formal());
        }
        let top = remaining
            .terms
            .iter()
            .map(|t| t.word.len())
            .max()
            .unwrap_or(0);
        let leading = Symbol::from_terms(
            remaining
                .terms
                .iter()
                .filter(|t| t.word.len() == top)
                .map(OpTerm::to_term)
                .collect(),
        );
        acc = acc.add(&leading);
        remaining = ccr_reduce(&remaining.sub(&quantize(&leading, OrderingScheme::Weyl)))?;
    }
    Err(Error::LocalizationDiverged)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrespondenceReport {
    pub scheme: OrderingScheme,
    pub bracket: String,
    pub noncentral_residual: String,
    pub noncentral_zero: bool,
    pub central: String,
    pub central_divergent: bool,
}

/// `[Q(a), Q(b)] + ih Q({a, b})`, split into operator and central parts.
pub fn correspondence_check<S: Scalar>(
    a: &Symbol<S>,
    b: &Symbol<S>,
    scheme: OrderingScheme,
) -> Result<CorrespondenceReport> {
    let br = bracket(a, b)?;
    let comm = commutator(&quantize(a, scheme), &quantize(b, scheme))?;
    let total = ccr_reduce(&comm.add(&quantize(&br, scheme).mul_formal(&ih())))?;
    let (central, noncentral): (Vec<OpTerm<S>>, Vec<OpTerm<S>>) =
        total.terms.into_iter().partition(|t| t.word.is_empty());
    let central = OperatorExpression::from_terms(central);
    let noncentral = OperatorExpression::from_terms(noncentral);
    Ok(CorrespondenceReport {
        scheme,
        bracket: format_symbol(&br),
        noncentral_zero: noncentral.is_zero(),
        noncentral_residual: format_operator(&noncentral),
        central_divergent: central.is_divergent(),
        central: format_operator(&central),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_operator, parse_symbol, Context};
    use crate::random::{GenConfig, SymbolGen};

    fn sym(src: &str) -> crate::Symbol {
        parse_symbol(src, &Context::default())
            .unwrap()
            .canonicalize()
            .unwrap()
    }

    fn op(src: &str) -> OperatorExpression<crate::Rational> {
        parse_operator(src, &Context::default()).unwrap()
    }

    #[test]
    fn swapping_pi_past_phi() {
        let r = ccr_reduce(&op("qint[](pi(x)*phi(y))")).unwrap();
        assert_eq!(format_operator(&r), "Phi(y)*Pi(x) - i*h*delta(x-y)");
    }

    #[test]
    fn coincident_swap_is_divergent() {
        let r = ccr_reduce(&op("qint[](pi(x)*phi(x))")).unwrap();
        assert!(r.is_divergent());
        assert!(format_operator(&r).contains("delta0(0)"));
    }

    #[test]
    fn square_of_the_oscillator_has_deltasq() {
        let h = quantize(
            &sym("int[x]( (1/2)*phi(x)^2 + (1/2)*pi(x)^2 )"),
            OrderingScheme::Normal,
        );
        let sq = product(&h, &h).unwrap();
        assert!(
            format_operator(&sq).contains("deltasq"),
            "{}",
            format_operator(&sq)
        );
    }

    #[test]
    fn weyl_symbol_of_the_oscillator_commutator() {
        let a = quantize(&sym("int[x](phi(x)^2/2)"), OrderingScheme::Weyl);
        let b = quantize(&sym("int[x](pi(x)^2/2)"), OrderingScheme::Weyl);
        let c = commutator(&a, &b).unwrap();
        assert_eq!(
            format_symbol(&weyl_symbol(&c).unwrap()),
            "int[x]( i*h*phi(x)*pi(x) )"
        );
    }

    #[test]
    fn weyl_and_normal_agree_on_single_fields() {
        let s = sym("int[x](f(x)*pi(x))");
        assert_eq!(
            quantize(&s, OrderingScheme::Weyl),
            quantize(&s, OrderingScheme::Normal)
        );
    }

    #[test]
    fn classical_limit_recovers_the_bracket() {
        let mut gen = SymbolGen::new(5, GenConfig::default());
        for _ in 0..10 {
            let (a, b) = (gen.quadratic(), gen.quadratic());
            let c = commutator(
                &quantize(&a, OrderingScheme::Weyl),
                &quantize(&b, OrderingScheme::Weyl),
            )
            .unwrap();
            let lim = classical_limit(
                &divide_by_ih(&c)
                    .unwrap()
                    .scale(&-crate::scalar::rational(1, 1)),
            )
            .unwrap();
            assert_eq!(lim, bracket(&a, &b).unwrap());
        }
    }

    #[test]
    fn correspondence_for_quadratic_pairs() {
        let a = sym("int[x](phi(x)^2/2)");
        let b = sym("int[x](pi(x)^2/2)");
        let r = correspondence_check(&a, &b, OrderingScheme::Weyl).unwrap();
        assert!(r.noncentral_zero, "{:?}", r);
        let a = sym("int[x](f(x)*phi(x)*D(phi,1)(x))");
        let b = sym("int[y](g(y)*pi(y)^2)");
        assert!(
            correspondence_check(&a, &b, OrderingScheme::Weyl)
                .unwrap()
                .noncentral_zero
        );
        assert!(
            correspondence_check(&a, &a, OrderingScheme::Normal)
                .unwrap()
                .noncentral_zero
        );
    }

    #[test]
    fn divergent_leading_term_is_reported() {
        let e = ccr_reduce(&op("qint[](pi(x)*phi(x))")).unwrap();
        let lead = OperatorExpression::from_terms(
            e.terms.into_iter().filter(|t| t.word.is_empty()).collect(),
        );
        assert!(matches!(
            classical_limit(&lead),
            Err(Error::DivergentLeadingTerm(_))
        ));
    }
}
