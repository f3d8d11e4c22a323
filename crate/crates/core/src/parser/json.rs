use serde::Serialize;

use super::format::{dummy_names, format_scalar, var_name};
use crate::quantum::OperatorExpression;
use crate::scalar::Scalar;
use crate::term::{DivergentConstant, Factor, Formal, Symbol, Var};

#[derive(Serialize, Debug, Clone, PartialEq)]
pub struct JsonExpression {
    pub ordered: bool,
    pub terms: Vec<JsonTerm>,
}

#[derive(Serialize, Debug, Clone, PartialEq)]
pub struct JsonTerm {
    pub variables: Vec<String>,
    pub coefficient: JsonCoefficient,
    pub factors: Vec<JsonFactor>,
    pub deltas: Vec<JsonDelta>,
}

#[derive(Serialize, Debug, Clone, PartialEq)]
pub struct JsonCoefficient {
    pub scalar: String,
    pub h: u32,
    pub i: u32,
    pub mass: i32,
    pub divergent: Vec<String>,
    pub functions: Vec<JsonFactor>,
}

#[derive(Serialize, Debug, Clone, PartialEq)]
pub struct JsonFactor {
    pub name: String,
    pub derivative: Vec<u8>,
    pub argument: String,
}

#[derive(Serialize, Debug, Clone, PartialEq)]
pub struct JsonDelta {
    pub derivative: Vec<u8>,
    pub left: String,
    pub right: String,
}

fn divergent_name(d: &DivergentConstant) -> String {
    match d {
        DivergentConstant::DeltaAtZero(k) => format!("delta0({})", k),
        DivergentConstant::DeltaSquared => "deltasq".into(),
        DivergentConstant::Volume => "vol".into(),
    }
}

fn json_term<S: Scalar>(
    coeff: &S,
    formal: &Formal,
    dummies: u16,
    factors: &[Factor],
    free: &[Var],
    ordered: bool,
) -> JsonTerm {
    let names = dummy_names(dummies, free);
    let mut functions = Vec::new();
    let mut fields = Vec::new();
    let mut deltas = Vec::new();
    for f in factors {
        match f {
            Factor::Func { name, deriv, arg } => functions.push(JsonFactor {
                name: name.to_string(),
                derivative: deriv.entries().to_vec(),
                argument: var_name(*arg, &names),
            }),
            Factor::Field { field, deriv, arg } => fields.push(JsonFactor {
                name: if ordered {
                    if field.name() == "phi" {
                        "Phi".into()
                    } else {
                        "Pi".into()
                    }
                } else {
                    field.name().into()
                },
                derivative: deriv.entries().to_vec(),
                argument: var_name(*arg, &names),
            }),
            Factor::Delta { deriv, left, right } => deltas.push(JsonDelta {
                derivative: deriv.entries().to_vec(),
                left: var_name(*left, &names),
                right: var_name(*right, &names),
            }),
        }
    }
    JsonTerm {
        variables: names,
        coefficient: JsonCoefficient {
            scalar: format_scalar(coeff).replace(['(', ')'], ""),
            h: formal.h,
            i: formal.i as u32,
            mass: formal.mass,
            divergent: formal.divergent.iter().map(divergent_name).collect(),
            functions,
        },
        factors: fields,
        deltas,
    }
}

pub fn symbol_json<S: Scalar>(s: &Symbol<S>) -> serde_json::Value {
    let terms = s
        .terms
        .iter()
        .map(|t| {
            json_term(
                &t.coeff,
                &t.formal,
                t.dummies,
                &t.factors,
                &t.free_vars(),
                false,
            )
        })
        .collect();
    serde_json::to_value(JsonExpression {
        ordered: false,
        terms,
    })
    .expect("serializable")
}

pub fn operator_json<S: Scalar>(e: &OperatorExpression<S>) -> serde_json::Value {
    let terms = e
        .terms
        .iter()
        .map(|t| {
            let mut factors = t.rest.clone();
            factors.extend(t.word.iter().cloned());
            json_term(
                &t.coeff,
                &t.formal,
                t.dummies,
                &factors,
                &t.to_term().free_vars(),
                true,
            )
        })
        .collect();
    serde_json::to_value(JsonExpression {
        ordered: true,
        terms,
    })
    .expect("serializable")
}
