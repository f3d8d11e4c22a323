//! Variational derivatives and the symbol condition.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::parser::format_term;
use crate::scalar::Scalar;
use crate::term::{Factor, Field, Symbol, Term, Var};

/// Free variable conventionally used for variational derivatives (`y`).
pub const VARIATION_POINT: Var = Var::Free(1);

/// `y` if unused by `s`, otherwise the next unused free variable.
pub fn fresh_point<S: Scalar>(symbols: &[&Symbol<S>]) -> Var {
    let Var::Free(start) = VARIATION_POINT else {
        unreachable!()
    };
    Symbol::fresh_free(symbols, start)
}

/// Replaces each occurrence of `field^(a)(x)` by `delta^(a)(x - y)` (Leibniz),
/// without canonicalizing.
pub fn insert_variation<S: Scalar>(s: &Symbol<S>, field: Field, y: Var) -> Symbol<S> {
    let mut out = Vec::new();
    for t in &s.terms {
        for (i, f) in t.factors.iter().enumerate() {
            if let Factor::Field {
                field: which,
                deriv,
                arg,
            } = f
            {
                if *which == field {
                    let mut factors = t.factors.clone();
                    factors[i] = Factor::delta(deriv.clone(), *arg, y);
                    out.push(Term {
                        factors,
                        ..t.clone()
                    });
                }
            }
        }
    }
    Symbol::from_terms(out)
}

/// `delta s / delta field(y)` in canonical form.
pub fn vderiv<S: Scalar>(s: &Symbol<S>, field: Field, y: Var) -> Result<Symbol<S>> {
    if s.terms.iter().any(|t| t.involves(y)) {
        return Err(Error::Precondition(format!(
            "variation point {:?} occurs in the functional",
            y
        )));
    }
    insert_variation(s, field, y).canonicalize()
}

/// `delta^2 s / delta f1(y) delta f2(z)`.
pub fn second_vderiv<S: Scalar>(
    s: &Symbol<S>,
    fields: (Field, Field),
    y: Var,
    z: Var,
) -> Result<Symbol<S>> {
    let first = vderiv(s, fields.0, y)?;
    vderiv(&first, fields.1, z)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub field: &'static str,
    pub term: String,
    pub reason: &'static str,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SymbolReport {
    pub is_symbol: bool,
    pub witnesses: Vec<Witness>,
}

/// Checks that both first variational derivatives are smooth, decaying
/// functions of the variation point: no delta involving it, and no term
/// independent of it.
pub fn check_symbol<S: Scalar>(s: &Symbol<S>) -> Result<SymbolReport> {
    let y = fresh_point(&[s]);
    let mut witnesses = Vec::new();
    for field in [Field::Phi, Field::Pi] {
        let d = vderiv(s, field, y)?;
        for t in &d.terms {
            let reason = if t.factors.iter().any(|f| f.is_delta() && f.involves(y)) {
                Some("distribution in the variation point")
            } else if !t.involves(y) {
                Some("does not decay in the variation point")
            } else {
                None
            };
            if let Some(reason) = reason {
                witnesses.push(Witness {
                    field: field.name(),
                    term: format_term(t),
                    reason,
                });
            }
        }
    }
    Ok(SymbolReport {
        is_symbol: witnesses.is_empty(),
        witnesses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{format_symbol, parse_symbol, Context};
    use crate::Symbol;

    fn sym(src: &str) -> Symbol {
        parse_symbol(src, &Context::default())
            .unwrap()
            .canonicalize()
            .unwrap()
    }

    fn dphi(src: &str) -> String {
        format_symbol(&vderiv(&sym(src), Field::Phi, VARIATION_POINT).unwrap())
    }

    #[test]
    fn quadratic_functional() {
        assert_eq!(dphi("int[x](phi(x)^2)"), "2*phi(y)");
    }

    #[test]
    fn euler_lagrange_form() {
        assert_eq!(dphi("int[x](f(x)*phi(x)*D(phi,1)(x))"), "-D(f,1)(y)*phi(y)");
        let free = "int[x]( (1/2)*pi(x)^2 + (1/2)*D(phi,1)(x)^2 + (1/2)*m^2*phi(x)^2 )";
        assert_eq!(dphi(free), "-D(phi,2)(y) + m^2*phi(y)");
    }

    #[test]
    fn second_variation() {
        let s = sym("int[x](phi(x)^2)");
        let (y, z) = (Var::Free(1), Var::Free(2));
        let d = second_vderiv(&s, (Field::Phi, Field::Phi), y, z).unwrap();
        assert_eq!(format_symbol(&d), "2*delta(y-z)");
        assert!(second_vderiv(&s, (Field::Phi, Field::Pi), y, z)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn symbol_condition() {
        assert!(check_symbol(&sym("int[x](phi(x)^2)")).unwrap().is_symbol);
        let eval = check_symbol(&sym("int[x](delta(x)*phi(x))")).unwrap();
        assert!(!eval.is_symbol);
        assert_eq!(eval.witnesses[0].term, "delta(y)");
        assert!(!check_symbol(&sym("int[x](pi(x))")).unwrap().is_symbol);
        let full = "int[x]( (1/2)*pi(x)^2 + (1/2)*D(phi,1)(x)^2 + (1/2)*m^2*phi(x)^2 + (1/6)*g(x)*phi(x)^3 + j(x)*phi(x) )";
        assert!(check_symbol(&sym(full)).unwrap().is_symbol);
    }

    #[test]
    fn occupied_point_is_rejected() {
        let s = sym("phi(y)");
        assert!(vderiv(&s, Field::Phi, Var::Free(1)).is_err());
        assert_eq!(fresh_point(&[&s]), Var::Free(2));
    }
}
