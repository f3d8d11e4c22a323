use serde::Serialize;

use super::{integrate_characteristics, transport_amplitude, Hamiltonian, Poly};
use crate::error::{Error, Result};

/// Largest Hamilton-Jacobi residual accepted before checking transport.
pub const HJ_TOLERANCE: f64 = 1e-6;

/// Evaluation nodes on `[t0, t1] x [q0, q1]` and the finite-difference steps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Grid {
    pub t0: f64,
    pub t1: f64,
    pub nt: usize,
    pub q0: f64,
    pub q1: f64,
    pub nq: usize,
    pub dt: f64,
    pub dq: f64,
}

impl Grid {
    /// Every node of the lattice with spacings `dt`, `dq`, which are also the
    /// difference steps.
    pub fn uniform(t: (f64, f64), q: (f64, f64), dt: f64, dq: f64) -> Self {
        let count = |a: f64, b: f64, h: f64| ((b - a) / h).round() as usize + 1;
        Grid {
            t0: t.0,
            t1: t.1,
            nt: count(t.0, t.1, dt),
            q0: q.0,
            q1: q.1,
            nq: count(q.0, q.1, dq),
            dt,
            dq,
        }
    }

    fn axis(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
        (0..n).map(move |k| {
            if n == 1 {
                a
            } else {
                a + (b - a) * k as f64 / (n - 1) as f64
            }
        })
    }

    fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        Self::axis(self.t0, self.t1, self.nt)
            .flat_map(move |t| Self::axis(self.q0, self.q1, self.nq).map(move |q| (t, q)))
    }
}

/// Five-point first derivative.
fn d1(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (8.0 * (f(x + h) - f(x - h)) - (f(x + 2.0 * h) - f(x - 2.0 * h))) / (12.0 * h)
}

/// Five-point second derivative.
fn d2(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (16.0 * (f(x + h) + f(x - h)) - (f(x + 2.0 * h) + f(x - 2.0 * h)) - 30.0 * f(x))
        / (12.0 * h * h)
}

fn one_dof(h: &Hamiltonian) -> Result<()> {
    if h.dof() != 1 {
        return Err(Error::Precondition(format!(
            "{} has {} degrees of freedom; one is supported",
            h.name,
            h.dof()
        )));
    }
    Ok(())
}

fn finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Precondition(format!(
            "{} is not finite on the grid",
            what
        )))
    }
}

/// `max |S_t + H(t, S_q, q)|`.
pub fn hamilton_jacobi_residual(
    h: &Hamiltonian,
    s: &dyn Fn(f64, f64) -> f64,
    grid: &Grid,
) -> Result<f64> {
    one_dof(h)?;
    let mut worst = 0.0f64;
    for (t, q) in grid.nodes() {
        let s_t = d1(|u| s(u, q), t, grid.dt);
        let s_q = d1(|x| s(t, x), q, grid.dq);
        worst = worst.max(finite((s_t + h.value(t, &[s_q], &[q])).abs(), "S")?);
    }
    Ok(worst)
}

/// `max |a_t + a_q H_p + (a/2) H_pp S_qq|` with `p = S_q`, after checking
/// that `S` solves the Hamilton-Jacobi equation.
pub fn transport_residual(
    h: &Hamiltonian,
    s: &dyn Fn(f64, f64) -> f64,
    a: &dyn Fn(f64, f64) -> f64,
    grid: &Grid,
) -> Result<f64> {
    let hj = hamilton_jacobi_residual(h, s, grid)?;
    if hj > HJ_TOLERANCE {
        return Err(Error::HamiltonJacobi(hj));
    }
    let mut worst = 0.0f64;
    for (t, q) in grid.nodes() {
        let s_q = d1(|x| s(t, x), q, grid.dq);
        let s_qq = d2(|x| s(t, x), q, grid.dq);
        let a_t = d1(|u| a(u, q), t, grid.dt);
        let a_q = d1(|x| a(t, x), q, grid.dq);
        let (p, x) = ([s_q], [q]);
        let r = a_t + a_q * h.h_p(t, &p, &x)[0] + 0.5 * a(t, q) * h.h_pp(t, &p, &x)[(0, 0)] * s_qq;
        worst = worst.max(finite(r.abs(), "transport residual")?);
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WkbReport {
    pub h: Vec<f64>,
    pub residual: Vec<f64>,
    /// Least-squares slope of `log r` against `log h`.
    pub exponent: Option<f64>,
}

/// `r(h) = max |ih psi_t - H psi| / max |psi|` for `psi = a exp(iS/h)` and the
/// Hamiltonian with every momentum to the right, using the exact expansion
/// `p^n (a e^{iS/h}) = e^{iS/h} (S_q - ih d/dq)^n a` for `n <= 2`.
pub fn wkb_residual(
    h: &Hamiltonian,
    s: &dyn Fn(f64, f64) -> f64,
    a: &dyn Fn(f64, f64) -> f64,
    hs: &[f64],
    grid: &Grid,
) -> Result<WkbReport> {
    one_dof(h)?;
    if h.h.max_p_degree() > 2 {
        return Err(Error::Precondition(format!(
            "{} is more than quadratic in p",
            h.name
        )));
    }
    struct Jet {
        t: f64,
        q: f64,
        a: f64,
        a_t: f64,
        a_q: f64,
        a_qq: f64,
        s_t: f64,
        s_q: f64,
        s_qq: f64,
    }
    let mut jets = Vec::with_capacity(grid.nt * grid.nq);
    let mut max_a = 0.0f64;
    for (t, q) in grid.nodes() {
        let jet = Jet {
            t,
            q,
            a: a(t, q),
            a_t: d1(|u| a(u, q), t, grid.dt),
            a_q: d1(|x| a(t, x), q, grid.dq),
            a_qq: d2(|x| a(t, x), q, grid.dq),
            s_t: d1(|u| s(u, q), t, grid.dt),
            s_q: d1(|x| s(t, x), q, grid.dq),
            s_qq: d2(|x| s(t, x), q, grid.dq),
        };
        for v in [
            jet.a, jet.a_t, jet.a_q, jet.a_qq, jet.s_t, jet.s_q, jet.s_qq,
        ] {
            finite(v, "WKB data")?;
        }
        max_a = max_a.max(jet.a.abs());
        jets.push(jet);
    }
    let mut residual = Vec::with_capacity(hs.len());
    for &hb in hs {
        let mut worst = 0.0f64;
        for j in &jets {
            let mut re = -j.a * j.s_t;
            let mut im = hb * j.a_t;
            for m in &h.h.terms {
                let c = m.coeff * j.t.powi(m.t as i32) * j.q.powi(m.q[0] as i32);
                let (pr, pi) = match m.p[0] {
                    0 => (j.a, 0.0),
                    1 => (j.s_q * j.a, -hb * j.a_q),
                    _ => (
                        j.s_q * j.s_q * j.a - hb * hb * j.a_qq,
                        -hb * (2.0 * j.s_q * j.a_q + j.s_qq * j.a),
                    ),
                };
                re -= c * pr;
                im -= c * pi;
            }
            worst = worst.max(re.hypot(im));
        }
        residual.push(if max_a == 0.0 { 0.0 } else { worst / max_a });
    }
    let pts: Vec<(f64, f64)> = hs
        .iter()
        .zip(&residual)
        .filter(|(_, &r)| r > 0.0)
        .map(|(&hb, &r)| (hb.ln(), r.ln()))
        .collect();
    let exponent = (pts.len() >= 2).then(|| {
        let n = pts.len() as f64;
        let (mx, my) = (
            pts.iter().map(|p| p.0).sum::<f64>() / n,
            pts.iter().map(|p| p.1).sum::<f64>() / n,
        );
        pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
            / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>()
    });
    Ok(WkbReport {
        h: hs.to_vec(),
        residual,
        exponent,
    })
}

/// `S(t, q)` and `a(t, q)` for one degree of freedom, built from a family of
/// characteristics and interpolated (cubic Lagrange) in `q` and in `t`.
#[derive(Clone, Debug)]
pub struct WkbField {
    dt: f64,
    /// Per time level: positions, actions and amplitudes of every characteristic.
    levels: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)>,
}

fn lagrange4(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..4 {
        let mut w = 1.0;
        for j in 0..4 {
            if i != j {
                w *= (x - xs[j]) / (xs[i] - xs[j]);
            }
        }
        acc += w * ys[i];
    }
    acc
}

impl WkbField {
    /// Integrates `count` characteristics with `q0` evenly spaced in `range`.
    pub fn build(
        h: &Hamiltonian,
        s0: &Poly,
        a0: impl Fn(f64) -> f64,
        range: (f64, f64),
        count: usize,
        horizon: f64,
        dt: f64,
    ) -> Result<Self> {
        one_dof(h)?;
        if count < 4 {
            return Err(Error::Precondition(
                "need at least four characteristics".into(),
            ));
        }
        let steps = (horizon / dt).round() as usize;
        let mut levels = vec![
            (
                Vec::with_capacity(count),
                Vec::with_capacity(count),
                Vec::with_capacity(count)
            );
            steps + 1
        ];
        for k in 0..count {
            let q0 = range.0 + (range.1 - range.0) * k as f64 / (count - 1) as f64;
            let tr = integrate_characteristics(h, s0, &[q0], steps as f64 * dt, dt)?;
            let amp = transport_amplitude(h, &tr, |q| a0(q[0]))?;
            for (j, (smp, a)) in tr.samples.iter().zip(amp).enumerate() {
                levels[j].0.push(smp.q[0]);
                levels[j].1.push(smp.action);
                levels[j].2.push(a);
            }
        }
        Ok(WkbField { dt, levels })
    }

    pub fn horizon(&self) -> f64 {
        (self.levels.len() - 1) as f64 * self.dt
    }

    fn at_level(&self, j: usize, q: f64, which: usize) -> f64 {
        let (xs, s, a) = &self.levels[j];
        let ys = if which == 0 { s } else { a };
        let k = xs.partition_point(|&x| x <= q);
        if k < 2 || k + 2 > xs.len() {
            return f64::NAN;
        }
        lagrange4(&xs[k - 2..k + 2], &ys[k - 2..k + 2], q)
    }

    fn eval(&self, t: f64, q: f64, which: usize) -> f64 {
        let u = t / self.dt;
        let j = u.round();
        if (u - j).abs() < 1e-9 {
            return if j < 0.0 || j as usize >= self.levels.len() {
                f64::NAN
            } else {
                self.at_level(j as usize, q, which)
            };
        }
        let base = u.floor() as isize - 1;
        if base < 0 || base as usize + 4 > self.levels.len() {
            return f64::NAN;
        }
        let ts: Vec<f64> = (0..4).map(|i| (base + i) as f64).collect();
        let ys: Vec<f64> = (0..4)
            .map(|i| self.at_level((base + i) as usize, q, which))
            .collect();
        lagrange4(&ts, &ys, u)
    }

    pub fn action(&self, t: f64, q: f64) -> f64 {
        self.eval(t, q, 0)
    }

    pub fn amplitude(&self, t: f64, q: f64) -> f64 {
        self.eval(t, q, 1)
    }
}
