use crate::quantum::{OpTerm, OperatorExpression};
use crate::scalar::{is_one, Scalar};
use crate::term::{free_name, DivergentConstant, Factor, Formal, MultiIndex, Symbol, Term, Var};

/// Names for `dummies` integration variables that avoid the given free variables.
pub(crate) fn dummy_names(dummies: u16, free: &[Var]) -> Vec<String> {
    let taken: Vec<String> = free
        .iter()
        .filter_map(|v| match v {
            Var::Free(i) => Some(free_name(*i)),
            _ => None,
        })
        .collect();
    let mut out = Vec::with_capacity(dummies as usize);
    let mut i = 0u16;
    while out.len() < dummies as usize {
        let n = free_name(i);
        if !taken.contains(&n) {
            out.push(n);
        }
        i += 1;
    }
    out
}

pub(crate) fn var_name(v: Var, names: &[String]) -> String {
    match v {
        Var::Dummy(i) => names
            .get(i as usize)
            .cloned()
            .unwrap_or_else(|| format!("_{}", i)),
        Var::Free(i) => free_name(i),
        Var::Origin => "0".to_string(),
    }
}

/// Scalar in source syntax: fractions are parenthesized, the sign stays outside.
pub fn format_scalar<S: Scalar>(c: &S) -> String {
    let s = c.to_string();
    if s.contains('/') {
        match s.strip_prefix('-') {
            Some(rest) => format!("-({})", rest),
            None => format!("({})", s),
        }
    } else {
        s
    }
}

fn deriv_suffix(k: &MultiIndex) -> String {
    if k.is_zero() {
        String::new()
    } else {
        format!(";{}", k)
    }
}

fn format_factor(f: &Factor, names: &[String], ordered: bool) -> String {
    match f {
        Factor::Func { name, deriv, arg } => {
            if deriv.is_zero() {
                format!("{}({})", name, var_name(*arg, names))
            } else {
                format!("D({},{})({})", name, deriv, var_name(*arg, names))
            }
        }
        Factor::Field { field, deriv, arg } => {
            let n = if ordered {
                match field.name() {
                    "phi" => "Phi",
                    _ => "Pi",
                }
            } else {
                field.name()
            };
            if deriv.is_zero() {
                format!("{}({})", n, var_name(*arg, names))
            } else {
                format!("D({},{})({})", n, deriv, var_name(*arg, names))
            }
        }
        Factor::Delta { deriv, left, right } => {
            if *right == Var::Origin {
                format!("delta({}{})", var_name(*left, names), deriv_suffix(deriv))
            } else {
                format!(
                    "delta({}-{}{})",
                    var_name(*left, names),
                    var_name(*right, names),
                    deriv_suffix(deriv)
                )
            }
        }
    }
}

fn format_divergent(d: &DivergentConstant) -> String {
    match d {
        DivergentConstant::DeltaAtZero(k) => format!("delta0({})", k),
        DivergentConstant::DeltaSquared => "deltasq".to_string(),
        DivergentConstant::Volume => "vol".to_string(),
    }
}

fn power(atom: String, n: usize) -> String {
    if n == 1 {
        atom
    } else {
        format!("{}^{}", atom, n)
    }
}

/// Collapses runs of equal atoms into powers.
fn collapse(atoms: Vec<String>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let mut i = 0;
    while i < atoms.len() {
        let mut j = i + 1;
        while j < atoms.len() && atoms[j] == atoms[i] {
            j += 1;
        }
        out.push(power(atoms[i].clone(), j - i));
        i = j;
    }
    out
}

fn formal_atoms(f: &Formal) -> Vec<String> {
    let mut atoms = Vec::new();
    if f.i {
        atoms.push("i".to_string());
    }
    if f.h > 0 {
        atoms.push(power("h".to_string(), f.h as usize));
    }
    if f.mass > 0 {
        atoms.push(power("m".to_string(), f.mass as usize));
    }
    atoms.extend(collapse(f.divergent.iter().map(format_divergent).collect()));
    atoms
}

/// Product body without the scalar.
fn body(formal: &Formal, factors: &[Factor], word: &[Factor], names: &[String]) -> String {
    let mut atoms = formal_atoms(formal);
    atoms.extend(collapse(
        factors
            .iter()
            .map(|f| format_factor(f, names, false))
            .collect(),
    ));
    atoms.extend(collapse(
        word.iter().map(|f| format_factor(f, names, true)).collect(),
    ));
    atoms.join("*")
}

fn with_coeff<S: Scalar>(c: &S, body: &str) -> String {
    if body.is_empty() {
        return format_scalar(c);
    }
    if is_one(c) {
        body.to_string()
    } else if *c == -S::one() {
        format!("-{}", body)
    } else {
        format!("{}*{}", format_scalar(c), body)
    }
}

fn join(parts: &[String]) -> String {
    let mut out = String::new();
    for (k, p) in parts.iter().enumerate() {
        if k == 0 {
            out.push_str(p);
        } else if let Some(rest) = p.strip_prefix('-') {
            out.push_str(" - ");
            out.push_str(rest);
        } else {
            out.push_str(" + ");
            out.push_str(p);
        }
    }
    out
}

/// One integral group: terms sharing a number of integration variables.
struct Group<S: Scalar> {
    dummies: u16,
    coeffs: Vec<S>,
    bodies: Vec<Box<dyn Fn(&[String]) -> String>>,
    free: Vec<Var>,
}

fn render<S: Scalar>(groups: Vec<Group<S>>, binder: &str) -> String {
    let mut parts = Vec::new();
    for g in groups {
        let names = dummy_names(g.dummies, &g.free);
        if g.dummies == 0 {
            for (c, b) in g.coeffs.iter().zip(&g.bodies) {
                parts.push(with_coeff(c, &b(&names)));
            }
            continue;
        }
        let head = format!("{}[{}]", binder, names.join(","));
        if g.coeffs.len() == 1 && g.coeffs[0] != S::one() {
            let b = g.bodies[0](&names);
            let b = if b.is_empty() { "1".to_string() } else { b };
            let c = &g.coeffs[0];
            let prefix = if *c == -S::one() {
                "-".to_string()
            } else {
                format!("{}*", format_scalar(c))
            };
            parts.push(format!("{}{}({})", prefix, head, b));
        } else {
            let inner: Vec<String> = g
                .coeffs
                .iter()
                .zip(&g.bodies)
                .map(|(c, b)| with_coeff(c, &b(&names)))
                .collect();
            parts.push(format!("{}( {} )", head, join(&inner)));
        }
    }
    if parts.is_empty() {
        "0".to_string()
    } else {
        join(&parts)
    }
}

fn group_by<S: Scalar, T>(
    terms: &[T],
    dummies: impl Fn(&T) -> u16,
    coeff: impl Fn(&T) -> S,
    free: impl Fn(&T) -> Vec<Var>,
    body_of: impl Fn(&T) -> Box<dyn Fn(&[String]) -> String>,
) -> Vec<Group<S>> {
    let mut groups: Vec<Group<S>> = Vec::new();
    for t in terms {
        let d = dummies(t);
        let idx = match groups.iter().position(|g| g.dummies == d) {
            Some(i) => i,
            None => {
                groups.push(Group {
                    dummies: d,
                    coeffs: Vec::new(),
                    bodies: Vec::new(),
                    free: Vec::new(),
                });
                groups.len() - 1
            }
        };
        let g = &mut groups[idx];
        g.coeffs.push(coeff(t));
        g.bodies.push(body_of(t));
        for v in free(t) {
            if !g.free.contains(&v) {
                g.free.push(v);
            }
        }
    }
    groups.sort_by_key(|g| g.dummies);
    groups
}

fn term_free<S: Scalar>(t: &Term<S>) -> Vec<Var> {
    t.free_vars()
}

pub fn format_symbol<S: Scalar>(s: &Symbol<S>) -> String {
    let groups = group_by(
        &s.terms,
        |t| t.dummies,
        |t| t.coeff.clone(),
        term_free,
        |t| {
            let (formal, factors) = (t.formal.clone(), t.factors.clone());
            Box::new(move |names: &[String]| body(&formal, &factors, &[], names))
        },
    );
    render(groups, "int")
}

/// A single term in the same syntax as a one-term symbol.
pub fn format_term<S: Scalar>(t: &Term<S>) -> String {
    format_symbol(&Symbol::from_term(t.clone()))
}

fn op_free<S: Scalar>(t: &OpTerm<S>) -> Vec<Var> {
    let mut out = t.to_term().free_vars();
    out.dedup();
    out
}

pub fn format_operator<S: Scalar>(e: &OperatorExpression<S>) -> String {
    let groups = group_by(
        &e.terms,
        |t| t.dummies,
        |t| t.coeff.clone(),
        op_free,
        |t| {
            let (formal, rest, word) = (t.formal.clone(), t.rest.clone(), t.word.clone());
            Box::new(move |names: &[String]| body(&formal, &rest, &word, names))
        },
    );
    render(groups, "qint")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rational, Rational};
    use crate::term::Field;

    fn phi(k: u8, v: Var) -> Factor {
        Factor::field(Field::Phi, MultiIndex::order1(k), v)
    }
    fn pi(k: u8, v: Var) -> Factor {
        Factor::field(Field::Pi, MultiIndex::order1(k), v)
    }

    #[test]
    fn zero_formats_as_zero() {
        assert_eq!(format_symbol(&Symbol::<Rational>::zero()), "0");
    }

    #[test]
    fn oscillator_symbol() {
        let d = Var::Dummy(0);
        let s = Symbol::from_terms(vec![
            Term::new(rational(1, 2), 1, vec![phi(0, d), phi(0, d)]),
            Term::new(rational(1, 2), 1, vec![pi(0, d), pi(0, d)]),
        ]);
        assert_eq!(
            format_symbol(&s),
            "int[x]( (1/2)*phi(x)^2 + (1/2)*pi(x)^2 )"
        );
    }

    #[test]
    fn single_term_with_coefficient() {
        let d = Var::Dummy(0);
        let s = Symbol::from_term(Term::new(rational(-4, 1), 1, vec![phi(0, d), pi(0, d)]));
        assert_eq!(format_symbol(&s), "-4*int[x](phi(x)*pi(x))");
    }

    #[test]
    fn delta_with_derivative() {
        let (a, b) = (Var::Dummy(0), Var::Dummy(1));
        let t = Term::new(
            rational(1, 1),
            2,
            vec![
                Factor::func("f", MultiIndex::order1(0), a),
                Factor::delta(MultiIndex::order1(1), a, b),
                pi(0, b),
            ],
        );
        assert_eq!(format_term(&t), "int[x,y]( f(x)*delta(x-y;1)*pi(y) )");
    }

    #[test]
    fn dummies_avoid_free_names() {
        let t = Term::new(
            rational(2, 1),
            1,
            vec![
                phi(1, Var::Dummy(0)),
                Factor::delta(MultiIndex::order1(0), Var::Dummy(0), Var::Free(0)),
            ],
        );
        assert_eq!(format_term(&t), "2*int[y](D(phi,1)(y)*delta(y-x))");
    }

    #[test]
    fn anchored_and_divergent() {
        let mut a = Term::new(
            rational(1, 1),
            0,
            vec![Factor::delta(
                MultiIndex::order1(1),
                Var::Free(0),
                Var::Origin,
            )],
        );
        a.formal
            .divergent
            .push(DivergentConstant::DeltaAtZero(MultiIndex::order1(0)));
        let mut b = Term::new(
            rational(-2, 1),
            0,
            vec![Factor::delta(
                MultiIndex::order1(0),
                Var::Free(0),
                Var::Origin,
            )],
        );
        b.formal
            .divergent
            .push(DivergentConstant::DeltaAtZero(MultiIndex::order1(1)));
        let s = Symbol::from_terms(vec![a, b]);
        assert_eq!(
            format_symbol(&s),
            "delta0(0)*delta(x;1) - 2*delta0(1)*delta(x)"
        );
    }

    #[test]
    fn operator_words_keep_order() {
        let d = Var::Dummy(0);
        let e = OperatorExpression::from_terms(vec![
            OpTerm::from_ordered(
                rational(1, 2),
                Formal::default(),
                1,
                vec![phi(0, d), pi(0, d)],
            ),
            OpTerm::from_ordered(
                rational(1, 2),
                Formal::default(),
                1,
                vec![pi(0, d), phi(0, d)],
            ),
        ]);
        assert_eq!(
            format_operator(&e),
            "qint[x]( (1/2)*Phi(x)*Pi(x) + (1/2)*Pi(x)*Phi(x) )"
        );
    }
}
