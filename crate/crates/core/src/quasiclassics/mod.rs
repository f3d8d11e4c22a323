//! Finite-dimensional WKB chain: characteristics, the Hamilton-Jacobi and
//! transport equations, the determinant formula for the amplitude and the
//! h-scaling of the Schrodinger residual.

mod characteristics;
mod wkb;

use serde::Serialize;

pub use characteristics::{
    integrate_characteristics, transport_amplitude, write_trajectory_csv, Sample, Trajectory,
    CAUSTIC_THRESHOLD,
};
pub use wkb::{
    hamilton_jacobi_residual, transport_residual, wkb_residual, Grid, WkbField, WkbReport,
    HJ_TOLERANCE,
};

/// `coeff * t^t * prod p_i^p[i] * prod q_i^q[i]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Monomial {
    pub coeff: f64,
    pub t: u32,
    pub p: Vec<u32>,
    pub q: Vec<u32>,
}

/// Real polynomial `H(t, p, q)` in `dof` degrees of freedom.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Poly {
    pub dof: usize,
    pub terms: Vec<Monomial>,
}

impl Poly {
    pub fn zero(dof: usize) -> Self {
        Poly {
            dof,
            terms: Vec::new(),
        }
    }

    pub fn term(mut self, coeff: f64, t: u32, p: &[u32], q: &[u32]) -> Self {
        assert!(
            p.len() == self.dof && q.len() == self.dof,
            "exponent vectors must have length dof"
        );
        self.terms.push(Monomial {
            coeff,
            t,
            p: p.to_vec(),
            q: q.to_vec(),
        });
        self.merged()
    }

    fn merged(mut self) -> Self {
        let mut out: Vec<Monomial> = Vec::with_capacity(self.terms.len());
        for m in self.terms.drain(..) {
            match out
                .iter_mut()
                .find(|o| o.t == m.t && o.p == m.p && o.q == m.q)
            {
                Some(o) => o.coeff += m.coeff,
                None => out.push(m),
            }
        }
        out.retain(|m| m.coeff != 0.0);
        self.terms = out;
        self
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, t: f64, p: &[f64], q: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|m| {
                let mut v = m.coeff * t.powi(m.t as i32);
                for i in 0..self.dof {
                    v *= p[i].powi(m.p[i] as i32) * q[i].powi(m.q[i] as i32);
                }
                v
            })
            .sum()
    }

    fn derivative(&self, pick: impl Fn(&mut Monomial) -> &mut u32) -> Poly {
        let terms = self
            .terms
            .iter()
            .filter_map(|m| {
                let mut m = m.clone();
                let e = pick(&mut m);
                if *e == 0 {
                    return None;
                }
                let c = *e as f64;
                *e -= 1;
                m.coeff *= c;
                Some(m)
            })
            .collect();
        Poly {
            dof: self.dof,
            terms,
        }
        .merged()
    }

    pub fn d_p(&self, i: usize) -> Poly {
        self.derivative(|m| &mut m.p[i])
    }

    pub fn d_q(&self, i: usize) -> Poly {
        self.derivative(|m| &mut m.q[i])
    }

    pub fn max_p_degree(&self) -> u32 {
        self.terms
            .iter()
            .map(|m| m.p.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Poly {
            dof: self.dof,
            terms,
        }
        .merged()
    }
}

/// Classical Hamiltonian with exact partial derivatives.
#[derive(Clone, Debug, Serialize)]
pub struct Hamiltonian {
    pub name: String,
    pub h: Poly,
    #[serde(skip)]
    h_p: Vec<Poly>,
    #[serde(skip)]
    h_q: Vec<Poly>,
    #[serde(skip)]
    h_pp: Vec<Vec<Poly>>,
    #[serde(skip)]
    h_pq: Vec<Vec<Poly>>,
    #[serde(skip)]
    h_qq: Vec<Vec<Poly>>,
}

impl Hamiltonian {
    pub fn new(name: &str, h: Poly) -> Self {
        let n = h.dof;
        let h_p: Vec<Poly> = (0..n).map(|i| h.d_p(i)).collect();
        let h_q: Vec<Poly> = (0..n).map(|i| h.d_q(i)).collect();
        let h_pp = (0..n)
            .map(|i| (0..n).map(|j| h_p[i].d_p(j)).collect())
            .collect();
        let h_pq = (0..n)
            .map(|i| (0..n).map(|j| h_p[i].d_q(j)).collect())
            .collect();
        let h_qq = (0..n)
            .map(|i| (0..n).map(|j| h_q[i].d_q(j)).collect())
            .collect();
        Hamiltonian {
            name: name.to_string(),
            h,
            h_p,
            h_q,
            h_pp,
            h_pq,
            h_qq,
        }
    }

    /// `(p^2 + q^2)/2`.
    pub fn oscillator() -> Self {
        Self::new(
            "oscillator",
            Poly::zero(1)
                .term(0.5, 0, &[2], &[0])
                .term(0.5, 0, &[0], &[2]),
        )
    }

    /// `p^2/2`.
    pub fn free_particle() -> Self {
        Self::new("free", Poly::zero(1).term(0.5, 0, &[2], &[0]))
    }

    /// `p^2/2 + q^4/4`.
    pub fn quartic() -> Self {
        Self::new(
            "quartic",
            Poly::zero(1)
                .term(0.5, 0, &[2], &[0])
                .term(0.25, 0, &[0], &[4]),
        )
    }

    /// Independent oscillators with frequencies `omega`.
    pub fn oscillators(omega: &[f64]) -> Self {
        let n = omega.len();
        let mut h = Poly::zero(n);
        for (i, w) in omega.iter().enumerate() {
            let mut e = vec![0; n];
            e[i] = 2;
            let z = vec![0; n];
            h = h.term(0.5, 0, &e, &z).term(0.5 * w * w, 0, &z, &e);
        }
        Self::new("oscillators", h)
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "oscillator" => Some(Self::oscillator()),
            "free" => Some(Self::free_particle()),
            "quartic" => Some(Self::quartic()),
            _ => None,
        }
    }

    pub fn dof(&self) -> usize {
        self.h.dof
    }

    pub fn value(&self, t: f64, p: &[f64], q: &[f64]) -> f64 {
        self.h.eval(t, p, q)
    }

    pub fn h_p(&self, t: f64, p: &[f64], q: &[f64]) -> Vec<f64> {
        self.h_p.iter().map(|d| d.eval(t, p, q)).collect()
    }

    pub fn h_q(&self, t: f64, p: &[f64], q: &[f64]) -> Vec<f64> {
        self.h_q.iter().map(|d| d.eval(t, p, q)).collect()
    }

    fn matrix(m: &[Vec<Poly>], t: f64, p: &[f64], q: &[f64]) -> nalgebra::DMatrix<f64> {
        let n = m.len();
        nalgebra::DMatrix::from_fn(n, n, |i, j| m[i][j].eval(t, p, q))
    }

    pub fn h_pp(&self, t: f64, p: &[f64], q: &[f64]) -> nalgebra::DMatrix<f64> {
        Self::matrix(&self.h_pp, t, p, q)
    }

    /// `(H_pq)_ij = d^2 H / dp_i dq_j`.
    pub fn h_pq(&self, t: f64, p: &[f64], q: &[f64]) -> nalgebra::DMatrix<f64> {
        Self::matrix(&self.h_pq, t, p, q)
    }

    pub fn h_qq(&self, t: f64, p: &[f64], q: &[f64]) -> nalgebra::DMatrix<f64> {
        Self::matrix(&self.h_qq, t, p, q)
    }

    /// Whether `sum_i H_{p_i q_i}` vanishes identically.
    pub fn has_zero_mixed_trace(&self) -> bool {
        (0..self.dof())
            .fold(Poly::zero(self.dof()), |acc, i| acc.add(&self.h_pq[i][i]))
            .is_zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_are_exact() {
        let h = Hamiltonian::quartic();
        assert_eq!(h.h_p(0.0, &[2.0], &[3.0]), vec![2.0]);
        assert_eq!(h.h_q(0.0, &[2.0], &[3.0]), vec![27.0]);
        assert_eq!(h.h_qq(0.0, &[2.0], &[3.0])[(0, 0)], 27.0);
        assert_eq!(h.h_pp(0.0, &[2.0], &[3.0])[(0, 0)], 1.0);
        assert!(h.has_zero_mixed_trace());
    }

    #[test]
    fn mixed_trace_flag() {
        let h = Hamiltonian::new("qp", Poly::zero(1).term(1.0, 0, &[1], &[1]));
        assert!(!h.has_zero_mixed_trace());
        assert!(Hamiltonian::oscillators(&[1.0, 2.0]).has_zero_mixed_trace());
        let cancel = Poly::zero(2)
            .term(1.0, 0, &[1, 0], &[1, 0])
            .term(-1.0, 0, &[0, 1], &[0, 1]);
        assert!(Hamiltonian::new("cancel", cancel).has_zero_mixed_trace());
    }
}
