use super::*;
use crate::scalar::rational;

fn ctx() -> Context {
    Context::default()
}

fn sym(src: &str) -> Symbol {
    parse_symbol(src, &ctx()).unwrap()
}

#[test]
fn reads_local_integrand() {
    let s = sym("int[x]( f(x)*phi(x)*D(phi,1)(x) )");
    assert_eq!(s.terms.len(), 1);
    assert_eq!(s.terms[0].factors.len(), 3);
    assert_eq!(s.terms[0].dummies, 1);
}

#[test]
fn distributes_over_sums() {
    let a = sym("int[x]( (1/2)*(pi(x)^2 + phi(x)^2) )");
    let b = sym("int[x]( (1/2)*phi(x)^2 + (1/2)*pi(x)^2 )");
    assert_eq!(a, b);
    assert_eq!(
        format_symbol(&a),
        "int[x]( (1/2)*phi(x)^2 + (1/2)*pi(x)^2 )"
    );
}

#[test]
fn quantum_words_keep_order() {
    let e = match parse("qint[x]( (1/2)*(phi(x)*pi(x) + pi(x)*phi(x)) )", &ctx()).unwrap() {
        Parsed::Operator(e) => e,
        Parsed::Symbol(_) => panic!("expected operator"),
    };
    assert_eq!(e.terms.len(), 2);
    assert_eq!(
        format_operator(&e),
        "qint[x]( (1/2)*Phi(x)*Pi(x) + (1/2)*Pi(x)*Phi(x) )"
    );
}

#[test]
fn squared_integral_gets_two_variables() {
    let s = sym("int[x](phi(x)^2)^2");
    assert_eq!(s.terms[0].dummies, 2);
    assert_eq!(s.terms[0].field_degree(), 4);
}

#[test]
fn anchored_and_formal_atoms() {
    let s = sym("delta0(0)*delta(x;1) - 2*delta0(1)*delta(x)");
    assert_eq!(s.terms.len(), 2);
    assert_eq!(
        format_symbol(&s),
        "delta0(0)*delta(x;1) - 2*delta0(1)*delta(x)"
    );
    let s = sym("i*h^2*m*deltasq");
    assert_eq!(s.terms[0].formal.h, 2);
    assert!(s.terms[0].formal.i);
}

#[test]
fn division_by_constant() {
    let s = sym("int[x](phi(x)^2)/4");
    assert_eq!(s.terms[0].coeff, rational(1, 4));
    assert!(matches!(
        parse_symbol("phi(x)/phi(x)", &ctx()),
        Err(Error::Syntax { .. })
    ));
}

#[test]
fn undeclared_function_reports_position() {
    match parse_symbol("int[x](\n  q(x)*phi(x))", &ctx()) {
        Err(Error::UndeclaredFunction { name, line, column }) => {
            assert_eq!((name.as_str(), line, column), ("q", 2, 3));
        }
        other => panic!("unexpected {:?}", other),
    }
}

#[test]
fn dimension_mismatch() {
    assert!(matches!(
        parse_symbol("int[x](D(phi,(1,0))(x))", &ctx()),
        Err(Error::DimensionMismatch {
            expected: 1,
            found: 2,
            ..
        })
    ));
    let two = Context::new(2, &["f"]);
    let s = parse_symbol("int[x](D(phi,(1,0))(x)^2)", &two).unwrap();
    assert_eq!(format_symbol(&s), "int[x]( D(phi,(1,0))(x)^2 )");
    assert!(parse_symbol("int[x](D(phi,1)(x))", &two).is_err());
}

#[test]
fn syntax_errors_carry_location() {
    assert!(matches!(
        parse_symbol("int[x](phi(x)", &ctx()),
        Err(Error::Syntax {
            line: 1,
            column: 14,
            ..
        })
    ));
    assert!(matches!(
        parse_symbol("phi(q)", &ctx()),
        Err(Error::Syntax { .. })
    ));
    assert!(matches!(
        parse_symbol("phi(x) phi(x)", &ctx()),
        Err(Error::Syntax { .. })
    ));
}

#[test]
fn zero_and_constants() {
    assert!(sym("0").is_empty());
    assert_eq!(format_symbol(&sym("3/6")), "(1/2)");
    assert_eq!(format_symbol(&sym("-(1/2)")), "-(1/2)");
}

#[test]
fn roundtrip_of_delta_term() {
    let src = "int[x,y]( f(x)*delta(x-y;1)*pi(y) )";
    assert_eq!(format_symbol(&sym(src)), src);
}

#[test]
fn bound_names_shadow_free_names() {
    let s = sym("int[y]( phi(y)*pi(x) )");
    assert_eq!(s.free_vars(), vec![Var::Free(0)]);
    assert_eq!(format_symbol(&s), "int[y]( phi(y)*pi(x) )");
}

#[test]
fn json_shape() {
    let s = sym("int[x](f(x)*phi(x)*delta(x;1))/2");
    let j = symbol_json(&s);
    assert_eq!(j["ordered"], false);
    assert_eq!(j["terms"][0]["coefficient"]["scalar"], "1/2");
    assert_eq!(j["terms"][0]["coefficient"]["functions"][0]["name"], "f");
    assert_eq!(j["terms"][0]["deltas"][0]["right"], "0");
    let e = parse_operator("qint[x](pi(x)*phi(x))", &ctx()).unwrap();
    assert_eq!(operator_json(&e)["ordered"], true);
}
