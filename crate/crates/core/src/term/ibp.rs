//! Integration-by-parts normal form of single-point integrands.
//!
//! An integrand at one integration point is a differential monomial: a
//! multiset of jets (a named function or field together with a derivative
//! multi-index). Two integrands integrate to the same value on Schwartz
//! fields iff they differ by a total derivative, so the normal form is the
//! remainder modulo the image of the total derivatives `D_j`.
//!
//! Monomials are ordered lexicographically on their jets sorted in
//! descending order; jets are ordered by total derivative order, then
//! species, then multi-index. In one dimension the leading monomial of
//! `D(m)` is `m` with its greatest jet raised, which makes the image
//! triangular and gives a direct reduction. Higher dimensions use row
//! reduction of the image in each homogeneous block.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::rc::Rc;
use std::sync::Arc;

use num_traits::{One, Zero};

use super::{Field, MultiIndex};
use crate::scalar::{Rational, Scalar};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Species {
    Func(Arc<str>),
    Field(Field),
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Jet {
    pub species: Species,
    pub deriv: MultiIndex,
}

impl Ord for Jet {
    fn cmp(&self, other: &Self) -> Ordering {
        self.deriv
            .order()
            .cmp(&other.deriv.order())
            .then_with(|| self.species.cmp(&other.species))
            .then_with(|| self.deriv.cmp(&other.deriv))
    }
}

impl PartialOrd for Jet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Jets sorted in descending order.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Monomial(pub Vec<Jet>);

impl Monomial {
    pub fn new(mut jets: Vec<Jet>) -> Self {
        jets.sort_by(|a, b| b.cmp(a));
        Monomial(jets)
    }

    fn weight(&self) -> MultiIndex {
        let dim = self.0.first().map(|j| j.deriv.dim()).unwrap_or(1);
        self.0
            .iter()
            .fold(MultiIndex::zero(dim), |acc, j| acc.add(&j.deriv))
    }

    fn with_replaced(&self, slot: usize, jet: Jet) -> Monomial {
        let mut jets = self.0.clone();
        jets[slot] = jet;
        Monomial::new(jets)
    }

    /// `D_axis(self)` as a list of (monomial, multiplicity).
    fn derivative(&self, axis: usize) -> Vec<(Monomial, i64)> {
        let mut out: BTreeMap<Monomial, i64> = BTreeMap::new();
        for (slot, jet) in self.0.iter().enumerate() {
            let raised = Jet {
                species: jet.species.clone(),
                deriv: jet.deriv.raised(axis),
            };
            *out.entry(self.with_replaced(slot, raised)).or_insert(0) += 1;
        }
        out.into_iter().collect()
    }
}

/// Normal form of `m` modulo total derivatives.
pub fn normal_form<S: Scalar>(m: &Monomial) -> Vec<(Monomial, S)> {
    let dim = m.0.first().map(|j| j.deriv.dim()).unwrap_or(1);
    if dim == 1 {
        reduce_one_dimensional(m)
    } else {
        reduce_by_elimination(m)
            .into_iter()
            .map(|(mono, c)| (mono, S::from_rational(&c)))
            .collect()
    }
}

fn is_reducible_1d(r: &Monomial) -> bool {
    let top = &r.0[0];
    let Some(lower) = top.deriv.lowered(0) else {
        return false;
    };
    let lowered = Jet {
        species: top.species.clone(),
        deriv: lower,
    };
    match r.0.get(1) {
        None => true,
        Some(next) => lowered >= *next,
    }
}

/// Triangular reduction for one spatial dimension.
pub fn reduce_one_dimensional<S: Scalar>(m: &Monomial) -> Vec<(Monomial, S)> {
    let mut work: BTreeMap<Monomial, S> = BTreeMap::new();
    work.insert(m.clone(), S::one());
    let mut done: Vec<(Monomial, S)> = Vec::new();
    while let Some((r, c)) = work.pop_last() {
        if c.is_zero() {
            continue;
        }
        if !is_reducible_1d(&r) {
            done.push((r, c));
            continue;
        }
        let top = &r.0[0];
        let lowered = Jet {
            species: top.species.clone(),
            deriv: top.deriv.lowered(0).unwrap(),
        };
        let base = r.with_replaced(0, lowered.clone());
        let copies = base.0.iter().filter(|j| **j == lowered).count() as i64;
        // r = (D(base) - other raises) / copies, and D(base) is dropped.
        for (mono, mult) in base.derivative(0) {
            if mono == r {
                continue;
            }
            let delta = -(c.clone() * S::from_int(mult)) / S::from_int(copies);
            let entry = work.entry(mono).or_insert_with(S::zero);
            *entry = entry.clone() + delta;
        }
    }
    done.sort_by(|a, b| b.0.cmp(&a.0));
    done
}

type Row = BTreeMap<Monomial, Rational>;
type BlockKey = (Vec<Species>, MultiIndex);

thread_local! {
    static BLOCK_CACHE: RefCell<HashMap<BlockKey, Rc<BTreeMap<Monomial, Row>>>> =
        RefCell::new(HashMap::new());
}

/// All monomials with the given species multiset and total weight.
fn block_monomials(species: &[Species], weight: &MultiIndex) -> BTreeSet<Monomial> {
    fn rec(
        species: &[Species],
        slot: usize,
        remaining: &MultiIndex,
        acc: &mut Vec<Jet>,
        out: &mut BTreeSet<Monomial>,
    ) {
        if slot + 1 == species.len() {
            acc.push(Jet {
                species: species[slot].clone(),
                deriv: remaining.clone(),
            });
            out.insert(Monomial::new(acc.clone()));
            acc.pop();
            return;
        }
        for d in remaining.below() {
            let rest = remaining.sub(&d).unwrap();
            acc.push(Jet {
                species: species[slot].clone(),
                deriv: d,
            });
            rec(species, slot + 1, &rest, acc, out);
            acc.pop();
        }
    }
    let mut out = BTreeSet::new();
    if species.is_empty() {
        return out;
    }
    rec(species, 0, weight, &mut Vec::new(), &mut out);
    out
}

/// Pivot rows (leading monomial -> row normalized to 1 there) spanning the
/// image of the total derivatives inside one block.
fn block_pivots(species: &[Species], weight: &MultiIndex) -> Rc<BTreeMap<Monomial, Row>> {
    let key = (species.to_vec(), weight.clone());
    if let Some(hit) = BLOCK_CACHE.with(|c| c.borrow().get(&key).cloned()) {
        return hit;
    }
    let mut pivots: BTreeMap<Monomial, Row> = BTreeMap::new();
    for axis in 0..weight.dim() {
        let Some(prev) = weight.lowered(axis) else {
            continue;
        };
        for m in block_monomials(species, &prev) {
            let mut row: Row = BTreeMap::new();
            for (mono, mult) in m.derivative(axis) {
                row.insert(mono, Rational::from_integer(mult.into()));
            }
            while let Some((lead, c)) = row.last_key_value().map(|(k, v)| (k.clone(), v.clone())) {
                if let Some(p) = pivots.get(&lead) {
                    for (mono, v) in p {
                        let e = row.entry(mono.clone()).or_insert_with(Rational::zero);
                        *e -= &c * v;
                        if e.is_zero() {
                            row.remove(mono);
                        }
                    }
                } else {
                    let inv = Rational::one() / c;
                    for v in row.values_mut() {
                        *v *= &inv;
                    }
                    pivots.insert(lead, row);
                    break;
                }
            }
        }
    }
    let pivots = Rc::new(pivots);
    BLOCK_CACHE.with(|c| c.borrow_mut().insert(key, pivots.clone()));
    pivots
}

/// Reduction by row elimination; valid in any dimension.
pub fn reduce_by_elimination(m: &Monomial) -> Vec<(Monomial, Rational)> {
    let mut species: Vec<Species> = m.0.iter().map(|j| j.species.clone()).collect();
    species.sort();
    let pivots = block_pivots(&species, &m.weight());
    let mut row: Row = BTreeMap::new();
    row.insert(m.clone(), Rational::one());
    let mut done = Vec::new();
    while let Some((lead, c)) = row.pop_last() {
        if let Some(p) = pivots.get(&lead) {
            for (mono, v) in p.iter().rev().skip(1) {
                let e = row.entry(mono.clone()).or_insert_with(Rational::zero);
                *e -= &c * v;
                if e.is_zero() {
                    row.remove(mono);
                }
            }
        } else {
            done.push((lead, c));
        }
    }
    done
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rational;

    fn jet(s: Species, k: u8) -> Jet {
        Jet {
            species: s,
            deriv: MultiIndex::order1(k),
        }
    }
    fn phi() -> Species {
        Species::Field(Field::Phi)
    }
    fn pi() -> Species {
        Species::Field(Field::Pi)
    }
    fn f() -> Species {
        Species::Func(Arc::from("f"))
    }

    #[test]
    fn phi_phi_prime_is_total_derivative() {
        let m = Monomial::new(vec![jet(phi(), 0), jet(phi(), 1)]);
        assert!(normal_form::<Rational>(&m).is_empty());
    }

    #[test]
    fn single_derivative_is_total_derivative() {
        let m = Monomial::new(vec![jet(pi(), 3)]);
        assert!(normal_form::<Rational>(&m).is_empty());
    }

    #[test]
    fn f_phi_phi_prime_moves_derivative_to_f() {
        let m = Monomial::new(vec![jet(f(), 0), jet(phi(), 0), jet(phi(), 1)]);
        let nf = normal_form::<Rational>(&m);
        assert_eq!(
            nf,
            vec![(
                Monomial::new(vec![jet(f(), 1), jet(phi(), 0), jet(phi(), 0)]),
                rational(-1, 2)
            )]
        );
    }

    #[test]
    fn mixed_first_derivatives_are_irreducible() {
        let m = Monomial::new(vec![jet(phi(), 1), jet(pi(), 1)]);
        assert_eq!(
            normal_form::<Rational>(&m),
            vec![(m.clone(), rational(1, 1))]
        );
    }

    #[test]
    fn elimination_agrees_with_triangular_reduction() {
        let cases = vec![
            vec![jet(f(), 0), jet(phi(), 2), jet(pi(), 1)],
            vec![jet(phi(), 2), jet(phi(), 2), jet(pi(), 0)],
            vec![jet(f(), 1), jet(phi(), 3), jet(phi(), 0), jet(pi(), 1)],
            vec![jet(phi(), 1), jet(phi(), 1), jet(phi(), 1)],
        ];
        for jets in cases {
            let m = Monomial::new(jets);
            let mut a = reduce_one_dimensional::<Rational>(&m);
            let mut b = reduce_by_elimination(&m);
            a.sort();
            b.sort();
            assert_eq!(a, b, "{:?}", m);
        }
    }

    #[test]
    fn two_dimensional_gradient_square_is_irreducible() {
        let g = |a: u8, b: u8| Jet {
            species: phi(),
            deriv: MultiIndex::from_slice(&[a, b]),
        };
        let m = Monomial::new(vec![g(1, 0), g(1, 0)]);
        let nf = normal_form::<Rational>(&m);
        assert_eq!(nf.len(), 1);
        // phi * phi_x is a total derivative in any dimension
        let m = Monomial::new(vec![g(0, 0), g(0, 1)]);
        assert!(normal_form::<Rational>(&m).is_empty());
    }
}
