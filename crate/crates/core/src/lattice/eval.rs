use std::collections::HashMap;
use std::sync::Arc;

use super::{LatticeConfig, LatticeState, NumericBinding};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::term::{free_name, Factor, Field, MultiIndex, Symbol, Var};

#[derive(Clone, Copy, Debug, PartialEq)]
enum Slot {
    Dummy(usize),
    Fixed(usize),
}

#[derive(Clone, Debug)]
enum Node {
    /// Samples of a bound function (or its derivative) on the grid.
    Func {
        values: Arc<Vec<f64>>,
        at: Slot,
    },
    Field {
        field: Field,
        order: u32,
        at: Slot,
    },
    /// `delta^(k)(x_i - x_j) = kernel[(i - j) mod N]`.
    Delta {
        kernel: Arc<Vec<f64>>,
        left: Slot,
        right: Slot,
    },
}

impl Node {
    fn slots(&self) -> Vec<Slot> {
        match self {
            Node::Func { at, .. } | Node::Field { at, .. } => vec![*at],
            Node::Delta { left, right, .. } => vec![*left, *right],
        }
    }
}

#[derive(Clone, Debug)]
struct CompiledTerm {
    coeff: f64,
    dummies: usize,
    nodes: Vec<Node>,
}

/// A symbol truncated to the lattice: an evaluable map from states to reals.
#[derive(Clone, Debug)]
pub struct Functional {
    cfg: LatticeConfig,
    terms: Vec<CompiledTerm>,
}

fn order_1d(k: &MultiIndex) -> Result<u32> {
    if k.dim() != 1 {
        return Err(Error::UnsupportedDimension(k.dim()));
    }
    Ok(k.order())
}

/// Truncates `s` to the lattice. Free variables are pinned to the grid indices
/// given in `pins`; the origin is pinned to `x = 0`.
pub fn discretize<S: Scalar>(
    s: &Symbol<S>,
    cfg: &LatticeConfig,
    bind: &NumericBinding,
) -> Result<Functional> {
    discretize_at(s, cfg, bind, &[])
}

pub fn discretize_at<S: Scalar>(
    s: &Symbol<S>,
    cfg: &LatticeConfig,
    bind: &NumericBinding,
    pins: &[(Var, usize)],
) -> Result<Functional> {
    let slot = |v: Var| -> Result<Slot> {
        match v {
            Var::Dummy(d) => Ok(Slot::Dummy(d as usize)),
            Var::Origin => Ok(Slot::Fixed(cfg.origin())),
            Var::Free(k) => pins
                .iter()
                .find(|(p, _)| *p == v)
                .map(|&(_, i)| Slot::Fixed(i))
                .ok_or_else(|| Error::UnboundVariable(free_name(k))),
        }
    };
    let mut func_cache: HashMap<(String, u32), Arc<Vec<f64>>> = HashMap::new();
    let mut kernel_cache: HashMap<u32, Arc<Vec<f64>>> = HashMap::new();
    let mut terms = Vec::with_capacity(s.terms.len());
    for t in &s.terms {
        if t.formal.is_divergent() || t.formal.h > 0 || t.formal.i {
            return Err(Error::FormalConstant(crate::parser::format_term(t)));
        }
        let coeff = t.coeff.to_f64() * bind.mass.powi(t.formal.mass);
        let mut nodes = Vec::with_capacity(t.factors.len());
        for f in &t.factors {
            nodes.push(match f {
                Factor::Func { name, deriv, arg } => {
                    let k = order_1d(deriv)?;
                    let profile = bind.function(name)?;
                    let values = func_cache
                        .entry((name.to_string(), k))
                        .or_insert_with(|| {
                            Arc::new(cfg.points().iter().map(|&x| profile.eval(x, k)).collect())
                        })
                        .clone();
                    Node::Func {
                        values,
                        at: slot(*arg)?,
                    }
                }
                Factor::Field { field, deriv, arg } => Node::Field {
                    field: *field,
                    order: order_1d(deriv)?,
                    at: slot(*arg)?,
                },
                Factor::Delta { deriv, left, right } => {
                    let k = order_1d(deriv)?;
                    let kernel = kernel_cache
                        .entry(k)
                        .or_insert_with(|| {
                            let mut e = vec![0.0; cfg.n];
                            e[0] = 1.0 / cfg.spacing();
                            Arc::new(cfg.diff_n(&e, k))
                        })
                        .clone();
                    Node::Delta {
                        kernel,
                        left: slot(*left)?,
                        right: slot(*right)?,
                    }
                }
            });
        }
        terms.push(CompiledTerm {
            coeff,
            dummies: t.dummies as usize,
            nodes,
        });
    }
    Ok(Functional { cfg: *cfg, terms })
}

struct FieldCache<'a> {
    cfg: &'a LatticeConfig,
    state: &'a LatticeState,
    values: HashMap<(Field, u32), Vec<f64>>,
}

impl<'a> FieldCache<'a> {
    fn get(&mut self, field: Field, order: u32) -> &[f64] {
        let (cfg, state) = (self.cfg, self.state);
        self.values.entry((field, order)).or_insert_with(|| {
            let base = match field {
                Field::Phi => &state.phi,
                Field::Pi => &state.pi,
            };
            cfg.diff_n(base, order)
        })
    }
}

fn find(parent: &mut [usize], a: usize) -> usize {
    let mut r = a;
    while parent[r] != r {
        r = parent[r];
    }
    parent[a] = r;
    r
}

impl Functional {
    pub fn config(&self) -> &LatticeConfig {
        &self.cfg
    }

    pub fn evaluate(&self, state: &LatticeState) -> f64 {
        assert_eq!(
            state.len(),
            self.cfg.n,
            "state size does not match the lattice"
        );
        let mut cache = FieldCache {
            cfg: &self.cfg,
            state,
            values: HashMap::new(),
        };
        self.terms
            .iter()
            .map(|t| self.eval_term(t, &mut cache))
            .sum()
    }

    fn eval_term(&self, t: &CompiledTerm, cache: &mut FieldCache) -> f64 {
        let n = self.cfg.n;
        let dx = self.cfg.spacing();
        let mut parent: Vec<usize> = (0..t.dummies).collect();
        for node in &t.nodes {
            if let Node::Delta {
                left: Slot::Dummy(a),
                right: Slot::Dummy(b),
                ..
            } = node
            {
                let (ra, rb) = (find(&mut parent, *a), find(&mut parent, *b));
                parent[ra] = rb;
            }
        }
        let mut total = t.coeff;
        let mut assignment = vec![0usize; t.dummies];
        let fixed_nodes: Vec<&Node> = t
            .nodes
            .iter()
            .filter(|nd| nd.slots().iter().all(|s| matches!(s, Slot::Fixed(_))))
            .collect();
        total *= fixed_nodes
            .iter()
            .map(|nd| node_value(nd, &assignment, cache))
            .product::<f64>();
        for root in 0..t.dummies {
            if find(&mut parent, root) != root {
                continue;
            }
            let vars: Vec<usize> = (0..t.dummies)
                .filter(|&d| find(&mut parent, d) == root)
                .collect();
            let nodes: Vec<&Node> = t
                .nodes
                .iter()
                .filter(|nd| {
                    nd.slots()
                        .iter()
                        .any(|s| matches!(s, Slot::Dummy(d) if vars.contains(d)))
                })
                .collect();
            let mut sum = 0.0;
            let mut odometer = vec![0usize; vars.len()];
            'outer: loop {
                for (v, &i) in vars.iter().zip(&odometer) {
                    assignment[*v] = i;
                }
                sum += nodes
                    .iter()
                    .map(|nd| node_value(nd, &assignment, cache))
                    .product::<f64>();
                for digit in odometer.iter_mut() {
                    *digit += 1;
                    if *digit < n {
                        continue 'outer;
                    }
                    *digit = 0;
                }
                break;
            }
            total *= sum * dx.powi(vars.len() as i32);
        }
        total
    }
}

fn node_value(node: &Node, assignment: &[usize], cache: &mut FieldCache) -> f64 {
    let at = |s: &Slot| match s {
        Slot::Dummy(d) => assignment[*d],
        Slot::Fixed(i) => *i,
    };
    match node {
        Node::Func { values, at: s } => values[at(s)],
        Node::Field {
            field,
            order,
            at: s,
        } => cache.get(*field, *order)[at(s)],
        Node::Delta {
            kernel,
            left,
            right,
        } => {
            let n = kernel.len();
            kernel[(at(left) + n - at(right)) % n]
        }
    }
}
