use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{Hamiltonian, Poly};
use crate::error::{Error, Result};

/// Integration stops once `|det D|` falls below this.
pub const CAUSTIC_THRESHOLD: f64 = 1e-8;

#[derive(Clone, Debug, Serialize)]
pub struct Sample {
    pub t: f64,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    /// `D = dq(t)/dq(0)`.
    #[serde(skip)]
    pub d: DMatrix<f64>,
    pub det: f64,
    /// Action along the characteristic, `S0(q0) + int (p H_p - H) dt`.
    pub action: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub q0: Vec<f64>,
    pub samples: Vec<Sample>,
}

impl Trajectory {
    pub fn last(&self) -> &Sample {
        self.samples
            .last()
            .expect("trajectory has the initial sample")
    }
}

/// Phase-space state with the variational matrices `D = dq/dq0`, `E = dp/dq0`.
#[derive(Clone, Debug)]
struct State {
    q: DVector<f64>,
    p: DVector<f64>,
    d: DMatrix<f64>,
    e: DMatrix<f64>,
    s: f64,
}

impl State {
    fn axpy(&self, h: f64, k: &State) -> State {
        State {
            q: &self.q + &k.q * h,
            p: &self.p + &k.p * h,
            d: &self.d + &k.d * h,
            e: &self.e + &k.e * h,
            s: self.s + h * k.s,
        }
    }
}

fn rhs(h: &Hamiltonian, t: f64, y: &State) -> State {
    let (q, p) = (y.q.as_slice(), y.p.as_slice());
    let hp = DVector::from_vec(h.h_p(t, p, q));
    let hq = DVector::from_vec(h.h_q(t, p, q));
    let (hpp, hpq, hqq) = (h.h_pp(t, p, q), h.h_pq(t, p, q), h.h_qq(t, p, q));
    let hqp = hpq.transpose();
    State {
        d: &hpq * &y.d + &hpp * &y.e,
        e: -(&hqq * &y.d) - &hqp * &y.e,
        s: y.p.dot(&hp) - h.value(t, p, q),
        q: hp,
        p: -hq,
    }
}

fn rk4(h: &Hamiltonian, t: f64, y: &State, dt: f64) -> State {
    let k1 = rhs(h, t, y);
    let k2 = rhs(h, t + dt / 2.0, &y.axpy(dt / 2.0, &k1));
    let k3 = rhs(h, t + dt / 2.0, &y.axpy(dt / 2.0, &k2));
    let k4 = rhs(h, t + dt, &y.axpy(dt, &k3));
    State {
        q: &y.q + (&k1.q + &k2.q * 2.0 + &k3.q * 2.0 + &k4.q) * (dt / 6.0),
        p: &y.p + (&k1.p + &k2.p * 2.0 + &k3.p * 2.0 + &k4.p) * (dt / 6.0),
        d: &y.d + (&k1.d + &k2.d * 2.0 + &k3.d * 2.0 + &k4.d) * (dt / 6.0),
        e: &y.e + (&k1.e + &k2.e * 2.0 + &k3.e * 2.0 + &k4.e) * (dt / 6.0),
        s: y.s + (k1.s + 2.0 * k2.s + 2.0 * k3.s + k4.s) * (dt / 6.0),
    }
}

fn sample(t: f64, y: &State) -> Sample {
    Sample {
        t,
        q: y.q.iter().copied().collect(),
        p: y.p.iter().copied().collect(),
        det: y.d.determinant(),
        d: y.d.clone(),
        action: y.s,
    }
}

/// Characteristic from `q0` with `p0 = grad S0(q0)`, integrated by RK4 up to
/// `horizon` with at most `dt` per step (the last step is shortened).
pub fn integrate_characteristics(
    h: &Hamiltonian,
    s0: &Poly,
    q0: &[f64],
    horizon: f64,
    dt: f64,
) -> Result<Trajectory> {
    let n = h.dof();
    if q0.len() != n || s0.dof != n {
        return Err(Error::Precondition(format!(
            "expected {} degrees of freedom",
            n
        )));
    }
    if dt.is_nan() || horizon.is_nan() || dt <= 0.0 || horizon < 0.0 {
        return Err(Error::Precondition(
            "need dt > 0 and a non-negative horizon".into(),
        ));
    }
    let zeros = vec![0.0; n];
    let p0: Vec<f64> = (0..n).map(|i| s0.d_q(i).eval(0.0, &zeros, q0)).collect();
    let hess = DMatrix::from_fn(n, n, |i, j| s0.d_q(i).d_q(j).eval(0.0, &zeros, q0));
    let mut y = State {
        q: DVector::from_column_slice(q0),
        p: DVector::from_vec(p0),
        d: DMatrix::identity(n, n),
        e: hess,
        s: s0.eval(0.0, &zeros, q0),
    };
    let steps = (horizon / dt).ceil() as usize;
    let mut samples = Vec::with_capacity(steps + 1);
    samples.push(sample(0.0, &y));
    for k in 0..steps {
        let t = k as f64 * dt;
        let step = dt.min(horizon - t);
        y = rk4(h, t, &y, step);
        let s = sample(t + step, &y);
        // A sign change means det D passed through zero within the step.
        let prev = samples.last().map_or(1.0, |p: &Sample| p.det);
        if s.det.abs() < CAUSTIC_THRESHOLD || prev * s.det < 0.0 {
            return Err(Error::Caustic { t: s.t, det: s.det });
        }
        samples.push(s);
    }
    Ok(Trajectory {
        q0: q0.to_vec(),
        samples,
    })
}

/// `a(t, q(t)) = a0(q(0)) / sqrt(det D(t))` along the trajectory.
pub fn transport_amplitude(
    h: &Hamiltonian,
    traj: &Trajectory,
    a0: impl Fn(&[f64]) -> f64,
) -> Result<Vec<f64>> {
    if !h.has_zero_mixed_trace() {
        return Err(Error::Precondition(format!(
            "sum of H_(p_i q_i) does not vanish for {}",
            h.name
        )));
    }
    let base = a0(&traj.q0);
    traj.samples
        .iter()
        .map(|s| {
            if s.det.abs() < CAUSTIC_THRESHOLD {
                Err(Error::Caustic { t: s.t, det: s.det })
            } else {
                Ok(base / s.det.sqrt())
            }
        })
        .collect()
}

/// Writes `t, q_i..., p_i..., det, a` rows; `amplitude` may be empty.
pub fn write_trajectory_csv(
    traj: &Trajectory,
    amplitude: &[f64],
    out: impl Write,
) -> Result<(), csv::Error> {
    let n = traj.q0.len();
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    let name = |s: &str, i: usize| {
        if n == 1 {
            s.to_string()
        } else {
            format!("{}{}", s, i)
        }
    };
    header.extend((0..n).map(|i| name("q", i)));
    header.extend((0..n).map(|i| name("p", i)));
    header.push("det".into());
    header.push("a".into());
    w.write_record(&header)?;
    // Adding zero turns -0 into 0.
    let num = |v: f64| (v + 0.0).to_string();
    for (k, s) in traj.samples.iter().enumerate() {
        let mut row = vec![num(s.t)];
        row.extend(s.q.iter().map(|&v| num(v)));
        row.extend(s.p.iter().map(|&v| num(v)));
        row.push(num(s.det));
        row.push(amplitude.get(k).map_or(String::new(), |&a| num(a)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
