//! Periodic one-dimensional lattice truncation of symbols, used as an
//! independent numeric check of the symbolic layer.
//!
//! Conventions: `x_i = -L + i*dx`, `dx = 2L/N`; integrals become `dx`-weighted
//! sums, derivatives central differences, `delta(x_i - x_j)` the Kronecker
//! symbol over `dx`, and `{phi_i, pi_j} = delta_ij / dx`.

mod bracket;
mod eval;
mod kg;

use std::collections::BTreeMap;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};

pub use bracket::{
    check_on, gradients, numeric_bracket, verify_bracket, write_convergence_csv, BracketCheck,
    ConvergenceReport, ConvergenceRow, NOISE_FLOOR,
};
pub use eval::{discretize, discretize_at, Functional};
pub use kg::{kg_flow, kg_hamiltonian, KgReport};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LatticeConfig {
    pub n: usize,
    pub half_width: f64,
    /// Order of the central difference stencil: 2 or 4.
    pub stencil: u8,
}

impl LatticeConfig {
    pub fn new(n: usize, half_width: f64) -> Result<Self> {
        Self::with_stencil(n, half_width, 2)
    }

    pub fn with_stencil(n: usize, half_width: f64, stencil: u8) -> Result<Self> {
        if n < 8 || !n.is_multiple_of(2) {
            return Err(Error::InvalidLattice(format!(
                "N = {} must be even and at least 8",
                n
            )));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidLattice(format!(
                "L = {} must be positive",
                half_width
            )));
        }
        if stencil != 2 && stencil != 4 {
            return Err(Error::InvalidLattice(format!(
                "stencil order {} (supported: 2, 4)",
                stencil
            )));
        }
        Ok(LatticeConfig {
            n,
            half_width,
            stencil,
        })
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.spacing()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.point(i)).collect()
    }

    /// Grid index of `x = 0`.
    pub fn origin(&self) -> usize {
        self.n / 2
    }

    fn shifted(u: &[f64], i: usize, k: isize) -> f64 {
        let n = u.len() as isize;
        u[(i as isize + k).rem_euclid(n) as usize]
    }

    /// Central first difference with periodic wrap.
    pub fn diff(&self, u: &[f64]) -> Vec<f64> {
        let dx = self.spacing();
        (0..self.n)
            .map(|i| {
                let at = |k| Self::shifted(u, i, k);
                match self.stencil {
                    2 => (at(1) - at(-1)) / (2.0 * dx),
                    _ => (-at(2) + 8.0 * at(1) - 8.0 * at(-1) + at(-2)) / (12.0 * dx),
                }
            })
            .collect()
    }

    /// Central second difference with periodic wrap.
    pub fn diff2(&self, u: &[f64]) -> Vec<f64> {
        let dx2 = self.spacing().powi(2);
        (0..self.n)
            .map(|i| {
                let at = |k| Self::shifted(u, i, k);
                match self.stencil {
                    2 => (at(1) - 2.0 * at(0) + at(-1)) / dx2,
                    _ => {
                        (-at(2) + 16.0 * at(1) - 30.0 * at(0) + 16.0 * at(-1) - at(-2))
                            / (12.0 * dx2)
                    }
                }
            })
            .collect()
    }

    /// `k`-th derivative: second differences, then one first difference for odd `k`.
    pub fn diff_n(&self, u: &[f64], k: u32) -> Vec<f64> {
        let mut out = u.to_vec();
        for _ in 0..k / 2 {
            out = self.diff2(&out);
        }
        if k % 2 == 1 {
            out = self.diff(&out);
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LatticeState {
    pub phi: Vec<f64>,
    pub pi: Vec<f64>,
}

impl LatticeState {
    pub fn from_fns(
        cfg: &LatticeConfig,
        phi: impl Fn(f64) -> f64,
        pi: impl Fn(f64) -> f64,
    ) -> Self {
        let xs = cfg.points();
        LatticeState {
            phi: xs.iter().map(|&x| phi(x)).collect(),
            pi: xs.iter().map(|&x| pi(x)).collect(),
        }
    }

    /// Sum of two random Gaussian bumps per field. Centers stay within 0.5 of
    /// the origin and widths below 1.35, so at `L = 8` the periodic wrap is
    /// below `1e-13`.
    pub fn random(cfg: &LatticeConfig, rng: &mut impl Rng) -> Self {
        let bumps = |rng: &mut dyn rand::RngCore| -> Vec<Profile> {
            (0..2).map(|_| Profile::random(rng)).collect()
        };
        let phi = bumps(rng);
        let pi = bumps(rng);
        let eval = |ps: &[Profile], x: f64| ps.iter().map(|p| p.eval(x, 0)).sum::<f64>();
        Self::from_fns(cfg, |x| eval(&phi, x), |x| eval(&pi, x))
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }
}

/// `p(x - c) * exp(-((x - c)/w)^2)` with `p` given by ascending coefficients.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Profile {
    pub poly: Vec<f64>,
    pub center: f64,
    pub width: f64,
}

impl Profile {
    pub fn gaussian(center: f64, width: f64) -> Self {
        Profile {
            poly: vec![1.0],
            center,
            width,
        }
    }

    pub fn random(rng: &mut dyn rand::RngCore) -> Self {
        let amplitude = rng.gen_range(0.5..1.5) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        Profile {
            poly: vec![amplitude],
            center: rng.gen_range(-0.5..0.5),
            width: rng.gen_range(1.0..1.35),
        }
    }

    /// Polynomial factor of the `k`-th derivative: `(q' - 2u/w^2 q)`, iterated.
    fn derivative_poly(&self, k: u32) -> Vec<f64> {
        let mut q = self.poly.clone();
        let a = 2.0 / (self.width * self.width);
        for _ in 0..k {
            let mut next = vec![0.0; q.len() + 1];
            for (j, &c) in q.iter().enumerate() {
                if j > 0 {
                    next[j - 1] += j as f64 * c;
                }
                next[j + 1] -= a * c;
            }
            q = next;
        }
        q
    }

    pub fn eval(&self, x: f64, k: u32) -> f64 {
        let u = x - self.center;
        let q = self.derivative_poly(k);
        let p = q.iter().rev().fold(0.0, |acc, &c| acc * u + c);
        p * (-(u / self.width).powi(2)).exp()
    }
}

/// Closed-form values for the coefficient functions and the mass.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NumericBinding {
    pub functions: BTreeMap<String, Profile>,
    pub mass: f64,
}

impl NumericBinding {
    pub fn new(mass: f64) -> Self {
        NumericBinding {
            functions: BTreeMap::new(),
            mass,
        }
    }

    pub fn bind(mut self, name: &str, p: Profile) -> Self {
        self.functions.insert(name.to_string(), p);
        self
    }

    /// Fixed catalog entry for the `k`-th declared name.
    pub fn catalog(k: usize) -> Profile {
        const TABLE: [(&[f64], f64, f64); 4] = [
            (&[1.0], 0.0, 1.3),
            (&[0.5, 0.5], 0.3, 1.2),
            (&[1.0, 0.0, -0.3], -0.2, 1.3),
            (&[0.8, -0.4], 0.4, 1.2),
        ];
        let (poly, center, width) = TABLE[k % TABLE.len()];
        Profile {
            poly: poly.to_vec(),
            center: center + 0.1 * (k / TABLE.len()) as f64,
            width,
        }
    }

    /// Binds each name to a catalog profile in order, with unit mass.
    pub fn for_names<'a>(names: impl IntoIterator<Item = &'a str>) -> Self {
        names
            .into_iter()
            .enumerate()
            .fold(NumericBinding::new(1.0), |b, (k, n)| {
                b.bind(n, Self::catalog(k))
            })
    }

    pub fn function(&self, name: &str) -> Result<&Profile> {
        self.functions
            .get(name)
            .ok_or_else(|| Error::UnboundName(name.to_string()))
    }
}

impl Default for NumericBinding {
    fn default() -> Self {
        NumericBinding::for_names(crate::parser::DEFAULT_FUNCTIONS)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(LatticeConfig::new(7, 8.0).is_err());
        assert!(LatticeConfig::new(6, 8.0).is_err());
        assert!(LatticeConfig::new(64, 0.0).is_err());
        let c = LatticeConfig::new(64, 8.0).unwrap();
        assert_eq!(c.spacing(), 0.25);
        assert_eq!(c.point(c.origin()), 0.0);
    }

    #[test]
    fn profile_derivatives_match_finite_differences() {
        let p = Profile {
            poly: vec![0.3, -1.0, 0.5],
            center: 0.2,
            width: 1.1,
        };
        let h = 1e-4;
        for k in 0..3 {
            let fd = (p.eval(0.7 + h, k) - p.eval(0.7 - h, k)) / (2.0 * h);
            assert!((fd - p.eval(0.7, k + 1)).abs() < 1e-6, "k = {}", k);
        }
    }

    #[test]
    fn stencils_have_their_order() {
        for (stencil, expected) in [(2u8, 2.0), (4, 4.0)] {
            for k in 1..=3 {
                let err = |n: usize| {
                    let c = LatticeConfig::with_stencil(n, 8.0, stencil).unwrap();
                    let p = Profile::gaussian(0.0, 1.0);
                    let u: Vec<f64> = c.points().iter().map(|&x| p.eval(x, 0)).collect();
                    let d = c.diff_n(&u, k);
                    c.points()
                        .iter()
                        .zip(&d)
                        .map(|(&x, &v)| (v - p.eval(x, k)).abs())
                        .fold(0.0, f64::max)
                };
                let order = (err(128) / err(256)).log2();
                assert!(
                    (order - expected).abs() < 0.15,
                    "stencil {} k {} order {}",
                    stencil,
                    k,
                    order
                );
            }
        }
    }
}
