//! Poisson bracket, grading, and the randomized law suite.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::parser::format_symbol;
use crate::random::{GenConfig, SymbolGen};
use crate::scalar::Scalar;
use crate::term::{Field, Symbol};
use crate::variational::{check_symbol, fresh_point, vderiv};

fn closure_error(e: Error) -> Error {
    match e {
        Error::CoincidentDelta(s) | Error::EmptyIntegral(s) => Error::ClosureViolation(s),
        other => other,
    }
}

/// `{a, b} = int (da/dpi(y) db/dphi(y) - da/dphi(y) db/dpi(y)) dy`.
pub fn bracket<S: Scalar>(a: &Symbol<S>, b: &Symbol<S>) -> Result<Symbol<S>> {
    let y = fresh_point(&[a, b]);
    let a_pi = vderiv(a, Field::Pi, y)?;
    let a_phi = vderiv(a, Field::Phi, y)?;
    let b_pi = vderiv(b, Field::Pi, y)?;
    let b_phi = vderiv(b, Field::Phi, y)?;
    let integrand = a_pi.product_raw(&b_phi).sub(&a_phi.product_raw(&b_pi));
    let out = integrand
        .integrate_free(y)
        .canonicalize()
        .map_err(closure_error)?;
    if let Some(t) = out
        .terms
        .iter()
        .find(|t| t.factors.iter().any(|f| f.is_delta()))
    {
        return Err(Error::ClosureViolation(crate::parser::format_term(t)));
    }
    Ok(out)
}

/// Components by pi-degree; zero components are omitted.
pub fn grade_decompose<S: Scalar>(s: &Symbol<S>) -> BTreeMap<u32, Symbol<S>> {
    let mut out: BTreeMap<u32, Symbol<S>> = BTreeMap::new();
    for t in &s.terms {
        out.entry(t.grade()).or_default().terms.push(t.clone());
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct AlgebraConfig {
    pub seed: u64,
    pub samples: usize,
    pub max_grade: u32,
    pub max_deriv: u8,
    /// Test fixture: drops one term from every bracket result.
    #[serde(skip)]
    pub fault: bool,
}

impl Default for AlgebraConfig {
    fn default() -> Self {
        AlgebraConfig {
            seed: 42,
            samples: 100,
            max_grade: 3,
            max_deriv: 2,
            fault: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LawResult {
    pub law: String,
    pub passed: bool,
    pub samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlgebraReport {
    pub seed: u64,
    pub laws: Vec<LawResult>,
}

impl AlgebraReport {
    pub fn all_passed(&self) -> bool {
        self.laws.iter().all(|l| l.passed)
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for l in &self.laws {
            out.push_str(&format!(
                "{:<14} {:<4} {:>4} samples\n",
                l.law,
                if l.passed { "pass" } else { "FAIL" },
                l.samples
            ));
            if let Some(c) = &l.counterexample {
                out.push_str(&format!("  counterexample: {}\n", c));
            }
        }
        out
    }
}

struct Suite {
    gen: SymbolGen,
    fault: bool,
}

impl Suite {
    fn bracket(&self, a: &crate::Symbol, b: &crate::Symbol) -> Result<crate::Symbol> {
        let mut r = bracket(a, b)?;
        if self.fault && !r.terms.is_empty() {
            r.terms.pop();
        }
        Ok(r)
    }
}

fn show(parts: &[(&str, &crate::Symbol)]) -> String {
    parts
        .iter()
        .map(|(n, s)| format!("{} = {}", n, format_symbol(s)))
        .collect::<Vec<_>>()
        .join("; ")
}

/// Runs one law over `samples` instances; `check` returns a counterexample on failure.
fn run_law(
    name: &str,
    samples: usize,
    suite: &mut Suite,
    mut check: impl FnMut(&mut Suite) -> Result<Option<String>>,
) -> LawResult {
    for _ in 0..samples {
        match check(suite) {
            Ok(None) => {}
            Ok(Some(c)) => {
                return LawResult {
                    law: name.into(),
                    passed: false,
                    samples,
                    counterexample: Some(c),
                };
            }
            Err(e) => {
                return LawResult {
                    law: name.into(),
                    passed: false,
                    samples,
                    counterexample: Some(e.to_string()),
                };
            }
        }
    }
    LawResult {
        law: name.into(),
        passed: true,
        samples,
        counterexample: None,
    }
}

/// Randomized suite for antisymmetry, bilinearity, Leibniz, Jacobi, closure and grading.
pub fn check_algebra(cfg: &AlgebraConfig) -> AlgebraReport {
    let gen_cfg = GenConfig {
        max_grade: cfg.max_grade,
        max_deriv: cfg.max_deriv,
        ..GenConfig::default()
    };
    let mut suite = Suite {
        gen: SymbolGen::new(cfg.seed, gen_cfg),
        fault: cfg.fault,
    };
    let n = cfg.samples;
    let mut laws = Vec::new();

    laws.push(run_law("antisymmetry", n, &mut suite, |s| {
        let (a, b) = (s.gen.symbol(), s.gen.symbol());
        let r = s.bracket(&a, &b)?.plus(&s.bracket(&b, &a)?)?;
        Ok((!r.is_empty()).then(|| show(&[("a", &a), ("b", &b), ("residual", &r)])))
    }));

    laws.push(run_law("bilinearity", n, &mut suite, |s| {
        let (a, b, c) = (s.gen.symbol(), s.gen.symbol(), s.gen.symbol());
        let (p, q) = (s.gen.coefficient(), s.gen.coefficient());
        let lin = a.scale(&p).add(&b.scale(&q)).canonicalize()?;
        let lhs = s.bracket(&lin, &c)?;
        let rhs = s
            .bracket(&a, &c)?
            .scale(&p)
            .add(&s.bracket(&b, &c)?.scale(&q));
        let r = lhs.minus(&rhs)?;
        Ok((!r.is_empty()).then(|| show(&[("a", &a), ("b", &b), ("c", &c), ("residual", &r)])))
    }));

    laws.push(run_law("leibniz", n, &mut suite, |s| {
        let (a, b, c) = (s.gen.symbol(), s.gen.symbol(), s.gen.symbol());
        let lhs = s.bracket(&a, &b.multiply(&c)?)?;
        let rhs = s
            .bracket(&a, &b)?
            .product_raw(&c)
            .add(&b.product_raw(&s.bracket(&a, &c)?));
        let r = lhs.minus(&rhs)?;
        Ok((!r.is_empty()).then(|| show(&[("a", &a), ("b", &b), ("c", &c), ("residual", &r)])))
    }));

    laws.push(run_law("jacobi", n, &mut suite, |s| {
        let (a, b, c) = (s.gen.symbol(), s.gen.symbol(), s.gen.symbol());
        let t1 = s.bracket(&a, &s.bracket(&b, &c)?)?;
        let t2 = s.bracket(&b, &s.bracket(&c, &a)?)?;
        let t3 = s.bracket(&c, &s.bracket(&a, &b)?)?;
        let r = t1.add(&t2).add(&t3).canonicalize()?;
        Ok((!r.is_empty()).then(|| show(&[("a", &a), ("b", &b), ("c", &c), ("residual", &r)])))
    }));

    laws.push(run_law("closure", n, &mut suite, |s| {
        let (a, b) = (s.gen.symbol(), s.gen.symbol());
        let r = s.bracket(&a, &b)?;
        let report = check_symbol(&r)?;
        Ok((!report.is_symbol).then(|| show(&[("a", &a), ("b", &b), ("bracket", &r)])))
    }));

    let max_grade = cfg.max_grade;
    laws.push(run_law("grading", n, &mut suite, |s| {
        use rand::Rng;
        let k = s.gen.rng().gen_range(0..=max_grade);
        let l = s.gen.rng().gen_range(0..=max_grade);
        let (a, b) = (s.gen.nonzero_homogeneous(k), s.gen.nonzero_homogeneous(l));
        let r = s.bracket(&a, &b)?;
        let ok = r.is_empty() || (k + l >= 1 && r.homogeneous_grade() == Some(k + l - 1));
        Ok((!ok).then(|| show(&[("a", &a), ("b", &b), ("bracket", &r)])))
    }));

    AlgebraReport {
        seed: cfg.seed,
        laws,
    }
}
