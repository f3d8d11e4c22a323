use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{discretize, Functional, LatticeConfig, LatticeState, NumericBinding};
use crate::error::Result;
use crate::parser::format_symbol;
use crate::poisson::bracket;
use crate::Symbol;

/// Relative finite-difference step in state space.
const STEP: f64 = 1e-5;
/// Relative errors below this are indistinguishable from gradient noise.
pub const NOISE_FLOOR: f64 = 1e-9;

/// `(dF/dphi_i, dF/dpi_i)` by the five-point central difference, exact for
/// integrands of degree four or less in each sample.
pub fn gradients(f: &Functional, state: &LatticeState) -> (Vec<f64>, Vec<f64>) {
    let scale = state
        .phi
        .iter()
        .chain(&state.pi)
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1.0);
    let mut work = state.clone();
    let mut grad = |which: fn(&mut LatticeState) -> &mut Vec<f64>| -> Vec<f64> {
        (0..state.len())
            .map(|i| {
                let v = which(&mut work)[i];
                let h = STEP * v.abs().max(scale);
                let mut at = |k: f64| {
                    which(&mut work)[i] = v + k * h;
                    f.evaluate(&work)
                };
                let (p1, m1, p2, m2) = (at(1.0), at(-1.0), at(2.0), at(-2.0));
                let d = 8.0 * (p1 - m1) - (p2 - m2);
                which(&mut work)[i] = v;
                d / (12.0 * h)
            })
            .collect()
    };
    let d_phi = grad(|s| &mut s.phi);
    let d_pi = grad(|s| &mut s.pi);
    (d_phi, d_pi)
}

/// Lattice Poisson bracket and the magnitude of its summands.
fn bracket_with_scale(f: &Functional, g: &Functional, state: &LatticeState) -> (f64, f64) {
    let dx = f.config().spacing();
    let (f_phi, f_pi) = gradients(f, state);
    let (g_phi, g_pi) = gradients(g, state);
    let mut sum = 0.0;
    let mut mag = 0.0;
    for i in 0..state.len() {
        let (p, q) = (f_pi[i] * g_phi[i], f_phi[i] * g_pi[i]);
        sum += p - q;
        mag += p.abs() + q.abs();
    }
    (sum / dx, mag / dx)
}

/// `sum_i (1/dx) (dF/dpi_i dG/dphi_i - dF/dphi_i dG/dpi_i)`.
pub fn numeric_bracket(f: &Functional, g: &Functional, state: &LatticeState) -> f64 {
    bracket_with_scale(f, g, state).0
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BracketCheck {
    pub numeric: f64,
    pub symbolic: f64,
    /// Relative to the larger of the symbolic value and the summed magnitude of the bracket terms.
    pub rel_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub dx: f64,
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub bracket: String,
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of `log error` against `log dx` over rows above
    /// the noise floor; `None` when fewer than two rows remain.
    pub order: Option<f64>,
}

impl ConvergenceReport {
    pub fn max_error(&self) -> f64 {
        self.rows.iter().map(|r| r.error).fold(0.0, f64::max)
    }

    pub fn final_error(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.error)
    }
}

fn fit_order(rows: &[ConvergenceRow]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.error > NOISE_FLOOR)
        .map(|r| (r.dx.ln(), r.error.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let (mx, my) = (
        pts.iter().map(|p| p.0).sum::<f64>() / n,
        pts.iter().map(|p| p.1).sum::<f64>() / n,
    );
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

/// Compares the numeric bracket of the truncated symbols with the truncated
/// symbolic bracket on `states` seeded random states per lattice. The same
/// continuum states are sampled on every lattice.
pub fn verify_bracket(
    a: &Symbol,
    b: &Symbol,
    cfgs: &[LatticeConfig],
    bind: &NumericBinding,
    states: usize,
    seed: u64,
) -> Result<ConvergenceReport> {
    let br = bracket(a, b)?;
    let mut rows = Vec::with_capacity(cfgs.len());
    for cfg in cfgs {
        let (fa, fb, fbr) = (
            discretize(a, cfg, bind)?,
            discretize(b, cfg, bind)?,
            discretize(&br, cfg, bind)?,
        );
        let mut error = 0.0f64;
        for k in 0..states {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
            let st = LatticeState::random(cfg, &mut rng);
            error = error.max(check_on(&fa, &fb, &fbr, &st).rel_error);
        }
        rows.push(ConvergenceRow {
            n: cfg.n,
            dx: cfg.spacing(),
            error,
        });
    }
    let order = fit_order(&rows);
    Ok(ConvergenceReport {
        bracket: format_symbol(&br),
        rows,
        order,
    })
}

/// One numeric-versus-symbolic comparison at a single state.
pub fn check_on(
    f: &Functional,
    g: &Functional,
    symbolic: &Functional,
    state: &LatticeState,
) -> BracketCheck {
    let (numeric, mag) = bracket_with_scale(f, g, state);
    let symbolic = symbolic.evaluate(state);
    let scale = symbolic.abs().max(mag);
    let rel_error = if scale == 0.0 {
        0.0
    } else {
        (numeric - symbolic).abs() / scale
    };
    BracketCheck {
        numeric,
        symbolic,
        rel_error,
    }
}

/// Writes `N,dx,error` rows.
pub fn write_convergence_csv(
    report: &ConvergenceReport,
    out: impl Write,
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["N", "dx", "error"])?;
    for r in &report.rows {
        w.write_record([r.n.to_string(), r.dx.to_string(), format!("{:e}", r.error)])?;
    }
    w.flush()?;
    Ok(())
}
