//! Canonical form of symbols.
//!
//! Per term, in order:
//! 1. coincident deltas `delta^(k)(a - a)` become the formal constant
//!    `delta^(k)(0)` (formal mode) or are rejected (classical mode);
//! 2. every delta touching an integration variable is contracted after
//!    moving its derivatives onto the rest of the integrand;
//! 3. factors at a point tied to a smaller point (or to the origin) by a
//!    delta are moved onto that point, so the remaining distributions in free
//!    variables have smooth coefficients at a single point;
//! 4. integration variables with an empty integrand become formal volumes
//!    (formal mode) or are rejected;
//! 5. each single-point integrand is brought to its integration-by-parts
//!    normal form;
//! 6. integration variables are renamed by sorted integrand, free deltas
//!    are oriented, factors sorted.
//!
//! Like terms are merged and zero terms dropped at the end.

use super::ibp::{normal_form, Jet, Monomial, Species};
use super::{merge_terms, DivergentConstant, Factor, MultiIndex, Symbol, Term, Var};
use crate::error::{Error, Result};
use crate::scalar::{binomial, is_zero, sign, Scalar};

pub const DEFAULT_MAX_DERIVATIVE: u32 = 8;

const STEP_LIMIT: usize = 200_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Coincident-point products are errors.
    Classical,
    /// Coincident-point products become divergent constants.
    Formal,
}

#[derive(Clone, Debug)]
pub struct CanonOptions {
    pub mode: Mode,
    pub max_derivative: u32,
    /// Also move deltas across a tying delta, e.g. `delta(x)^2 -> delta(0) delta(x)`.
    /// Off by default: it multiplies distributions at a point.
    pub localize_distributions: bool,
}

impl Default for CanonOptions {
    fn default() -> Self {
        CanonOptions {
            mode: Mode::Classical,
            max_derivative: DEFAULT_MAX_DERIVATIVE,
            localize_distributions: false,
        }
    }
}

impl CanonOptions {
    pub fn formal() -> Self {
        CanonOptions {
            mode: Mode::Formal,
            ..CanonOptions::default()
        }
    }
}

pub(super) fn canonicalize<S: Scalar>(s: &Symbol<S>, opts: &CanonOptions) -> Result<Symbol<S>> {
    let mut out = Vec::new();
    for t in &s.terms {
        if is_zero(&t.coeff) {
            continue;
        }
        out.extend(canonical_term(t.clone(), opts)?);
    }
    Ok(merge_terms(out))
}

fn check_bounds<S: Scalar>(t: &Term<S>, max: u32) -> Result<()> {
    for f in &t.factors {
        let m = f.deriv().max_entry();
        if m > max {
            return Err(Error::MaxDerivativeExceeded { order: m, max });
        }
    }
    for d in &t.formal.divergent {
        if let DivergentConstant::DeltaAtZero(k) = d {
            if k.max_entry() > max {
                return Err(Error::MaxDerivativeExceeded {
                    order: k.max_entry(),
                    max,
                });
            }
        }
    }
    Ok(())
}

fn canonical_term<S: Scalar>(t: Term<S>, opts: &CanonOptions) -> Result<Vec<Term<S>>> {
    check_bounds(&t, opts.max_derivative)?;
    let mut stack = vec![t];
    let mut settled = Vec::new();
    let mut steps = 0usize;
    while let Some(t) = stack.pop() {
        steps += 1;
        if steps > STEP_LIMIT {
            return Err(Error::LocalizationDiverged);
        }
        if is_zero(&t.coeff) {
            continue;
        }
        check_bounds(&t, opts.max_derivative)?;
        if let Some(next) = coincident_step(&t, opts.mode)? {
            stack.push(next);
        } else if let Some(next) = contract_step(&t) {
            stack.extend(next);
        } else if let Some(next) = localize_step(&t, opts.localize_distributions) {
            stack.extend(next);
        } else {
            settled.push(t);
        }
    }

    let mut terms = Vec::with_capacity(settled.len());
    for t in settled {
        terms.push(drop_empty_dummies(t, opts.mode)?);
    }

    let max_dummies = terms.iter().map(|t| t.dummies).max().unwrap_or(0);
    for d in 0..max_dummies {
        let mut next = Vec::with_capacity(terms.len());
        for t in terms {
            if d < t.dummies {
                next.extend(ibp_at(t, Var::Dummy(d)));
            } else {
                next.push(t);
            }
        }
        terms = next;
    }

    let mut out = Vec::with_capacity(terms.len());
    for t in terms {
        let t = finish(t);
        check_bounds(&t, opts.max_derivative)?;
        out.push(t);
    }
    Ok(out)
}

fn describe<S: Scalar>(t: &Term<S>) -> String {
    crate::parser::format_term(t)
}

fn coincident_step<S: Scalar>(t: &Term<S>, mode: Mode) -> Result<Option<Term<S>>> {
    let Some(pos) = t
        .factors
        .iter()
        .position(|f| matches!(f, Factor::Delta { left, right, .. } if left == right))
    else {
        return Ok(None);
    };
    if mode == Mode::Classical {
        return Err(Error::CoincidentDelta(describe(t)));
    }
    let mut t = t.clone();
    let f = t.factors.remove(pos);
    t.formal
        .divergent
        .push(DivergentConstant::DeltaAtZero(f.deriv().clone()));
    t.formal.normalize();
    Ok(Some(t))
}

/// All derivative expansions `d^k/dv^k` of a product of factors.
fn differentiate_product<S: Scalar>(
    factors: Vec<Factor>,
    v: Var,
    k: &MultiIndex,
) -> Vec<(S, Vec<Factor>)> {
    let mut products = vec![(S::one(), factors)];
    for axis in k.axes() {
        let mut next = Vec::new();
        for (c, fs) in &products {
            for i in 0..fs.len() {
                if let Some((sg, g)) = fs[i].differentiate(v, axis) {
                    let mut copy = fs.clone();
                    copy[i] = g;
                    let c = if sg < 0 { -c.clone() } else { c.clone() };
                    next.push((c, copy));
                }
            }
        }
        products = next;
    }
    products
}

fn remove_dummy<S: Scalar>(t: &mut Term<S>, idx: u16) {
    for f in &mut t.factors {
        f.map_vars(|v| match v {
            Var::Dummy(j) if j > idx => Var::Dummy(j - 1),
            other => other,
        });
    }
    t.dummies -= 1;
}

/// `int delta^(k)(v - w) R(v) dv = (-1)^|k| R^(k)(w)`.
fn contract_step<S: Scalar>(t: &Term<S>) -> Option<Vec<Term<S>>> {
    let pos = t.factors.iter().position(|f| match f {
        Factor::Delta { left, right, .. } => left.is_dummy() || right.is_dummy(),
        _ => false,
    })?;
    let Factor::Delta { deriv, left, right } = t.factors[pos].clone() else {
        unreachable!()
    };
    let eliminate_right = match (left, right) {
        (Var::Dummy(a), Var::Dummy(b)) => b > a,
        (_, Var::Dummy(_)) => true,
        _ => false,
    };
    let (v, w) = if eliminate_right {
        (right, left)
    } else {
        (left, right)
    };
    // Orienting as delta(v - w) costs (-1)^|k|, which cancels the transfer sign.
    let outer: S = if eliminate_right {
        S::one()
    } else {
        sign(deriv.order())
    };

    let mut depends = Vec::new();
    let mut rest = Vec::new();
    for (i, f) in t.factors.iter().enumerate() {
        if i == pos {
            continue;
        }
        if f.involves(v) {
            depends.push(f.clone());
        } else {
            rest.push(f.clone());
        }
    }

    let Var::Dummy(idx) = v else { unreachable!() };
    let mut out = Vec::new();
    for (c, mut fs) in differentiate_product::<S>(depends, v, &deriv) {
        for f in &mut fs {
            f.substitute(v, w);
        }
        let mut factors = rest.clone();
        factors.extend(fs);
        let mut nt = Term {
            coeff: t.coeff.clone() * outer.clone() * c,
            formal: t.formal.clone(),
            dummies: t.dummies,
            factors,
        };
        remove_dummy(&mut nt, idx);
        out.push(nt);
    }
    Some(out)
}

/// Moves the factors at `source` onto `target` across a delta tying them:
/// `G(s) delta^(k)(t - s) = sum_j C(k,j) G^(j)(t) delta^(k-j)(t - s)` and
/// `G(s) delta^(k)(s - t) = sum_j C(k,j) (-1)^|j| G^(j)(t) delta^(k-j)(s - t)`.
fn localize_step<S: Scalar>(t: &Term<S>, distributions: bool) -> Option<Vec<Term<S>>> {
    let movable = |g: &Factor, source: Var| g.involves(source) && (distributions || !g.is_delta());
    let mut best: Option<(usize, Var, Var, (bool, u32))> = None;
    for (i, f) in t.factors.iter().enumerate() {
        let Factor::Delta { deriv, left, right } = f else {
            continue;
        };
        if left.is_dummy() || right.is_dummy() || left == right {
            continue;
        }
        let (source, target) = if *right == Var::Origin {
            (*left, *right)
        } else if *left == Var::Origin {
            (*right, *left)
        } else if left > right {
            (*left, *right)
        } else {
            (*right, *left)
        };
        if !t
            .factors
            .iter()
            .enumerate()
            .any(|(j, g)| j != i && movable(g, source))
        {
            continue;
        }
        let prio = (target == Var::Origin, deriv.order());
        if best.as_ref().is_none_or(|b| prio > b.3) {
            best = Some((i, source, target, prio));
        }
    }
    let (pos, source, target, _) = best?;
    let Factor::Delta { deriv, left, right } = t.factors[pos].clone() else {
        unreachable!()
    };
    let target_on_left = left == target;

    let mut depends = Vec::new();
    let mut rest = Vec::new();
    for (i, f) in t.factors.iter().enumerate() {
        if i == pos {
            continue;
        }
        if movable(f, source) {
            depends.push(f.clone());
        } else {
            rest.push(f.clone());
        }
    }

    let mut out = Vec::new();
    for j in deriv.below() {
        let binom: i64 = deriv
            .entries()
            .iter()
            .zip(j.entries())
            .map(|(&k, &jj)| binomial(k as u32, jj as u32))
            .product();
        let mut c = S::from_int(binom);
        if !target_on_left {
            c = c * sign::<S>(j.order());
        }
        let remaining = deriv.sub(&j).unwrap();
        for (dc, mut fs) in differentiate_product::<S>(depends.clone(), source, &j) {
            for f in &mut fs {
                f.substitute(source, target);
            }
            let mut factors = rest.clone();
            factors.extend(fs);
            factors.push(Factor::delta(remaining.clone(), left, right));
            out.push(Term {
                coeff: t.coeff.clone() * c.clone() * dc,
                formal: t.formal.clone(),
                dummies: t.dummies,
                factors,
            });
        }
    }
    Some(out)
}

fn drop_empty_dummies<S: Scalar>(mut t: Term<S>, mode: Mode) -> Result<Term<S>> {
    let mut d = t.dummies;
    while d > 0 {
        d -= 1;
        if !t.involves(Var::Dummy(d)) {
            if mode == Mode::Classical {
                return Err(Error::EmptyIntegral(describe(&t)));
            }
            t.formal.divergent.push(DivergentConstant::Volume);
            remove_dummy(&mut t, d);
        }
    }
    t.formal.normalize();
    Ok(t)
}

fn to_jet(f: &Factor) -> Option<Jet> {
    match f {
        Factor::Func { name, deriv, .. } => Some(Jet {
            species: Species::Func(name.clone()),
            deriv: deriv.clone(),
        }),
        Factor::Field { field, deriv, .. } => Some(Jet {
            species: Species::Field(*field),
            deriv: deriv.clone(),
        }),
        Factor::Delta { .. } => None,
    }
}

fn from_jet(j: &Jet, arg: Var) -> Factor {
    match &j.species {
        Species::Func(name) => Factor::Func {
            name: name.clone(),
            deriv: j.deriv.clone(),
            arg,
        },
        Species::Field(field) => Factor::Field {
            field: *field,
            deriv: j.deriv.clone(),
            arg,
        },
    }
}

fn ibp_at<S: Scalar>(t: Term<S>, v: Var) -> Vec<Term<S>> {
    let mut jets = Vec::new();
    let mut rest = Vec::new();
    for f in &t.factors {
        match (f, to_jet(f)) {
            (Factor::Func { arg, .. } | Factor::Field { arg, .. }, Some(j)) if *arg == v => {
                jets.push(j)
            }
            _ => rest.push(f.clone()),
        }
    }
    if jets.is_empty() || jets.iter().all(|j| j.deriv.is_zero()) {
        return vec![t];
    }
    normal_form::<S>(&Monomial::new(jets))
        .into_iter()
        .map(|(mono, c)| {
            let mut factors = rest.clone();
            factors.extend(mono.0.iter().map(|j| from_jet(j, v)));
            Term {
                coeff: t.coeff.clone() * c,
                formal: t.formal.clone(),
                dummies: t.dummies,
                factors,
            }
        })
        .collect()
}

/// Dummy renaming, delta orientation and factor order.
fn finish<S: Scalar>(mut t: Term<S>) -> Term<S> {
    for f in &mut t.factors {
        if let Factor::Delta { deriv, left, right } = f {
            if left > right {
                std::mem::swap(left, right);
                if deriv.order() % 2 == 1 {
                    t.coeff = -t.coeff.clone();
                }
            }
        }
    }
    if t.dummies > 1 {
        let mut sigs: Vec<(Vec<Factor>, u16)> = (0..t.dummies)
            .map(|d| {
                let mut sig: Vec<Factor> = t
                    .factors
                    .iter()
                    .filter(|f| f.involves(Var::Dummy(d)))
                    .map(|f| {
                        let mut g = f.clone();
                        g.substitute(Var::Dummy(d), Var::Dummy(0));
                        g
                    })
                    .collect();
                sig.sort();
                (sig, d)
            })
            .collect();
        sigs.sort();
        let mut map = vec![0u16; t.dummies as usize];
        for (new, (_, old)) in sigs.iter().enumerate() {
            map[*old as usize] = new as u16;
        }
        for f in &mut t.factors {
            f.map_vars(|v| match v {
                Var::Dummy(i) => Var::Dummy(map[i as usize]),
                other => other,
            });
        }
    }
    t.tidy();
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rational, Rational};
    use crate::term::{Field, Formal};

    fn d(k: u8) -> MultiIndex {
        MultiIndex::order1(k)
    }
    fn x(i: u16) -> Var {
        Var::Dummy(i)
    }
    fn phi(k: u8, v: Var) -> Factor {
        Factor::field(Field::Phi, d(k), v)
    }
    fn pi(k: u8, v: Var) -> Factor {
        Factor::field(Field::Pi, d(k), v)
    }
    fn f(k: u8, v: Var) -> Factor {
        Factor::func("f", d(k), v)
    }
    fn term(c: Rational, dummies: u16, factors: Vec<Factor>) -> Symbol {
        Symbol::from_term(Term::new(c, dummies, factors))
    }
    fn one() -> Rational {
        rational(1, 1)
    }

    #[test]
    fn total_derivative_vanishes() {
        let s = term(one(), 1, vec![phi(0, x(0)), phi(1, x(0))]);
        assert!(s.canonicalize().unwrap().is_empty());
    }

    #[test]
    fn delta_contraction() {
        let s = term(
            one(),
            2,
            vec![f(0, x(0)), Factor::delta(d(0), x(0), x(1)), phi(0, x(1))],
        );
        let want = term(one(), 1, vec![f(0, x(0)), phi(0, x(0))]);
        assert_eq!(s.canonicalize().unwrap(), want.canonicalize().unwrap());
    }

    #[test]
    fn delta_prime_contraction_gives_derivative() {
        // int int f(x) delta'(x - y) phi(y) = int f(x) phi'(x)
        let s = term(
            one(),
            2,
            vec![f(0, x(0)), Factor::delta(d(1), x(0), x(1)), phi(0, x(1))],
        );
        let want = term(one(), 1, vec![f(0, x(0)), phi(1, x(0))]);
        assert_eq!(s.canonicalize().unwrap(), want.canonicalize().unwrap());
    }

    #[test]
    fn anchored_contraction_gives_point_value() {
        let s = term(
            one(),
            1,
            vec![Factor::delta(d(0), x(0), Var::Origin), phi(0, x(0))],
        );
        let c = s.canonicalize().unwrap();
        assert_eq!(c, term(one(), 0, vec![phi(0, Var::Origin)]));
    }

    #[test]
    fn integration_by_parts_with_coefficient() {
        let s = term(one(), 1, vec![f(0, x(0)), phi(0, x(0)), phi(1, x(0))]);
        let want = term(
            rational(-1, 2),
            1,
            vec![f(1, x(0)), phi(0, x(0)), phi(0, x(0))],
        );
        assert_eq!(s.canonicalize().unwrap(), want.canonicalize().unwrap());
        assert_eq!(s.canonicalize().unwrap().terms[0].coeff, rational(-1, 2));
    }

    #[test]
    fn dummy_renaming_is_order_independent() {
        let a = term(one(), 2, vec![phi(0, x(0)), pi(0, x(1))]);
        let b = term(one(), 2, vec![pi(0, x(0)), phi(0, x(1))]);
        assert_eq!(a.canonicalize().unwrap(), b.canonicalize().unwrap());
    }

    #[test]
    fn classical_coincidence_is_an_error() {
        let y = Var::Free(1);
        let s = term(one(), 0, vec![Factor::delta(d(0), y, y)]);
        assert!(matches!(s.canonicalize(), Err(Error::CoincidentDelta(_))));
        let c = s.canonicalize_with(&CanonOptions::formal()).unwrap();
        assert_eq!(
            c.terms[0].formal.divergent,
            vec![DivergentConstant::DeltaAtZero(d(0))]
        );
    }

    #[test]
    fn delta_squared_integral() {
        let s = term(
            one(),
            2,
            vec![
                Factor::delta(d(0), x(0), x(1)),
                Factor::delta(d(0), x(0), x(1)),
            ],
        );
        assert!(s.canonicalize().is_err());
        let c = s.canonicalize_with(&CanonOptions::formal()).unwrap();
        assert_eq!(c.terms.len(), 1);
        assert_eq!(
            c.terms[0].formal.divergent,
            vec![DivergentConstant::DeltaSquared]
        );
        assert_eq!(c.terms[0].dummies, 0);
    }

    #[test]
    fn free_delta_localizes_to_smaller_point() {
        // pi(z) delta(y - z) = pi(y) delta(y - z)
        let (y, z) = (Var::Free(1), Var::Free(2));
        let s = term(one(), 0, vec![pi(0, z), Factor::delta(d(0), y, z)]);
        let c = s.canonicalize().unwrap();
        assert_eq!(c, term(one(), 0, vec![pi(0, y), Factor::delta(d(0), y, z)]));
        // g(z) delta'(y - z) = g(y) delta'(y - z) + g'(y) delta(y - z)
        let s = term(one(), 0, vec![pi(0, z), Factor::delta(d(1), y, z)]);
        let c = s.canonicalize().unwrap();
        let want = term(one(), 0, vec![pi(0, y), Factor::delta(d(1), y, z)]).add(&term(
            one(),
            0,
            vec![pi(1, y), Factor::delta(d(0), y, z)],
        ));
        assert_eq!(c, want.canonicalize().unwrap());
    }

    #[test]
    fn anchored_delta_products_stay_unless_requested() {
        let x0 = Var::Free(0);
        let s = term(
            one(),
            0,
            vec![
                Factor::delta(d(0), x0, Var::Origin),
                Factor::delta(d(1), x0, Var::Origin),
            ],
        );
        let formal = CanonOptions::formal();
        assert_eq!(
            s.canonicalize_with(&formal).unwrap().terms[0].factors.len(),
            2
        );
        let opts = CanonOptions {
            localize_distributions: true,
            ..formal
        };
        let c = s.canonicalize_with(&opts).unwrap();
        // delta(x) delta'(x) = delta(0) delta'(x) - delta'(0) delta(x)
        assert_eq!(c.terms.len(), 2);
        assert!(c
            .terms
            .iter()
            .all(|t| t.factors.len() == 1 && t.formal.is_divergent()));
    }

    #[test]
    fn delta_orientation_flip_sign() {
        let (y, z) = (Var::Free(1), Var::Free(2));
        let s = term(one(), 0, vec![Factor::delta(d(1), z, y)]);
        let c = s.canonicalize().unwrap();
        assert_eq!(c, term(rational(-1, 1), 0, vec![Factor::delta(d(1), y, z)]));
    }

    #[test]
    fn max_derivative_is_enforced() {
        let s = term(one(), 1, vec![phi(9, x(0)), phi(0, x(0))]);
        assert!(matches!(
            s.canonicalize(),
            Err(Error::MaxDerivativeExceeded { .. })
        ));
    }

    #[test]
    fn formal_part_survives() {
        let mut t = Term::new(one(), 1, vec![phi(0, x(0)), phi(0, x(0))]);
        t.formal = Formal {
            h: 1,
            mass: 2,
            ..Formal::default()
        };
        let c = Symbol::from_term(t.clone()).canonicalize().unwrap();
        assert_eq!(c.terms[0].formal, t.formal);
    }
}
