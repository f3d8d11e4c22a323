use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{LatticeConfig, LatticeState};

#[derive(Clone, Debug, Serialize)]
pub struct KgReport {
    pub n: usize,
    pub mass: f64,
    pub t: f64,
    /// `max |M^T J M - J|` with `J = dx * J0`.
    pub symplectic_defect: f64,
    #[serde(skip)]
    pub propagator: DMatrix<f64>,
}

/// Orthonormal real Fourier basis (columns) diagonalizing the periodic
/// Laplacian, with eigenvalues `lambda_k = (4/dx^2) sin^2(pi k / N)` of `-Lap`.
fn fourier_basis(cfg: &LatticeConfig) -> (DMatrix<f64>, Vec<f64>) {
    let n = cfg.n;
    let dx = cfg.spacing();
    let mut u = DMatrix::zeros(n, n);
    let mut lambda = Vec::with_capacity(n);
    let tau = 2.0 * std::f64::consts::PI / n as f64;
    let norm = (2.0 / n as f64).sqrt();
    for col in 0..n {
        // Column order: k = 0, then cos/sin pairs for k = 1..N/2-1, then k = N/2.
        let (k, kind) = match col {
            0 => (0, 0),
            c if c == n - 1 => (n / 2, 0),
            c => (c.div_ceil(2), if c % 2 == 1 { 1 } else { 2 }),
        };
        for i in 0..n {
            let arg = tau * (k * i) as f64;
            u[(i, col)] = match kind {
                0 if k == 0 => 1.0 / (n as f64).sqrt(),
                0 => arg.cos() / (n as f64).sqrt(),
                1 => norm * arg.cos(),
                _ => norm * arg.sin(),
            };
        }
        lambda.push(4.0 / (dx * dx) * (std::f64::consts::PI * k as f64 / n as f64).sin().powi(2));
    }
    (u, lambda)
}

fn symplectic_form(n: usize, dx: f64) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = dx;
        j[(n + i, i)] = -dx;
    }
    j
}

/// Exact propagator of `phi' = pi`, `pi' = Lap phi - m^2 phi` on the lattice,
/// acting on `(phi, pi)` stacked into one vector.
pub fn kg_flow(cfg: &LatticeConfig, mass: f64, t: f64) -> KgReport {
    let n = cfg.n;
    let (u, lambda) = fourier_basis(cfg);
    let mut c = DVector::zeros(n);
    let mut s_over = DVector::zeros(n);
    let mut s_times = DVector::zeros(n);
    for k in 0..n {
        let w = (mass * mass + lambda[k]).sqrt();
        c[k] = (w * t).cos();
        s_over[k] = if w == 0.0 { t } else { (w * t).sin() / w };
        s_times[k] = -w * (w * t).sin();
    }
    let conj = |d: &DVector<f64>| &u * DMatrix::from_diagonal(d) * u.transpose();
    let (cm, sm, tm) = (conj(&c), conj(&s_over), conj(&s_times));
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(&cm);
    m.view_mut((0, n), (n, n)).copy_from(&sm);
    m.view_mut((n, 0), (n, n)).copy_from(&tm);
    m.view_mut((n, n), (n, n)).copy_from(&cm);
    let j = symplectic_form(n, cfg.spacing());
    let defect = (m.transpose() * &j * &m - &j).amax();
    KgReport {
        n,
        mass,
        t,
        symplectic_defect: defect,
        propagator: m,
    }
}

/// `dx * sum (pi^2 + ((phi_{i+1} - phi_i)/dx)^2 + m^2 phi^2) / 2`.
pub fn kg_hamiltonian(cfg: &LatticeConfig, mass: f64, s: &LatticeState) -> f64 {
    let n = cfg.n;
    let dx = cfg.spacing();
    let mut e = 0.0;
    for i in 0..n {
        let grad = (s.phi[(i + 1) % n] - s.phi[i]) / dx;
        e += s.pi[i] * s.pi[i] + grad * grad + mass * mass * s.phi[i] * s.phi[i];
    }
    0.5 * dx * e
}

impl KgReport {
    pub fn apply(&self, s: &LatticeState) -> LatticeState {
        let n = self.n;
        let v = DVector::from_iterator(2 * n, s.phi.iter().chain(&s.pi).copied());
        let w = &self.propagator * v;
        LatticeState {
            phi: w.rows(0, n).iter().copied().collect(),
            pi: w.rows(n, n).iter().copied().collect(),
        }
    }

    /// Relative change of the lattice energy along the flow.
    pub fn energy_drift(&self, cfg: &LatticeConfig, s: &LatticeState) -> f64 {
        let e0 = kg_hamiltonian(cfg, self.mass, s);
        let e1 = kg_hamiltonian(cfg, self.mass, &self.apply(s));
        (e1 - e0).abs() / e0.abs()
    }
}
