use std::fs::File;
use std::io::Write;
use std::process::ExitCode;

use hamalg::lattice::{
    kg_flow, verify_bracket, write_convergence_csv, LatticeConfig, LatticeState, NumericBinding,
};
use hamalg::parser::{
    format_operator, format_symbol, operator_json, parse_operator, parse_symbol, symbol_json,
    Context,
};
use hamalg::poisson::{bracket, check_algebra, grade_decompose, AlgebraConfig};
use hamalg::quantum::{
    commutator, correspondence_check, leibniz_residual, quantize, OrderingScheme,
};
use hamalg::quasiclassics::{
    integrate_characteristics, transport_amplitude, transport_residual, wkb_residual,
    write_trajectory_csv, Grid, Hamiltonian, Poly, WkbField,
};
use hamalg::suite::{run_suite, SuiteConfig, SuiteProfile};
use hamalg::term::{free_name, Field, Var};
use hamalg::variational::{check_symbol, fresh_point, vderiv};
use hamalg::{Error, Symbol};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::*;

enum Failure {
    /// Bad input: exit 2.
    Usage(String),
    /// The computation itself could not finish: exit 1.
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Syntax { .. }
            | Error::UndeclaredFunction { .. }
            | Error::DimensionMismatch { .. }
            | Error::WrongMode { .. }
            | Error::InvalidLattice(_)
            | Error::UnboundName(_)
            | Error::Precondition(_) => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

struct Report {
    text: String,
    json: Value,
    ok: bool,
}

impl Report {
    fn ok(text: String, json: Value) -> Self {
        Report {
            text,
            json,
            ok: true,
        }
    }
}

type Outcome = Result<Report, Failure>;

pub fn run(cli: &Cli) -> ExitCode {
    match dispatch(cli) {
        Ok(r) => {
            let mut body = if cli.json {
                serde_json::to_string_pretty(&r.json).expect("serializable")
            } else {
                r.text
            };
            if !body.ends_with('\n') {
                body.push('\n');
            }
            // A closed pipe (`| head`) is not an error worth reporting.
            let _ = std::io::stdout().lock().write_all(body.as_bytes());
            if r.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {}", m);
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {}", m);
            ExitCode::from(1)
        }
    }
}

fn context(cli: &Cli) -> Result<Context, Failure> {
    let dim = match std::env::var("HAMALG_DIM") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(d) if d >= 1 => d,
            _ => {
                return Err(Failure::Usage(format!(
                    "HAMALG_DIM must be a positive integer, got `{}`",
                    v
                )))
            }
        },
        Err(_) => 1,
    };
    let names: Vec<&str> = cli
        .functions
        .iter()
        .map(String::as_str)
        .filter(|s| !s.is_empty())
        .collect();
    Ok(Context::new(dim, &names))
}

fn symbol(src: &str, ctx: &Context) -> Result<Symbol, Failure> {
    Ok(parse_symbol(src, ctx)?.canonicalize()?)
}

fn symbol_out(s: &Symbol) -> (String, Value) {
    let text = format_symbol(s);
    (
        text.clone(),
        json!({ "text": text, "terms": symbol_json(s) }),
    )
}

fn scheme(s: SchemeArg) -> OrderingScheme {
    match s {
        SchemeArg::Normal => OrderingScheme::Normal,
        SchemeArg::Weyl => OrderingScheme::Weyl,
    }
}

fn dispatch(cli: &Cli) -> Outcome {
    let ctx = context(cli)?;
    match &cli.command {
        Command::Vderiv { expr, field } => {
            let s = symbol(expr, &ctx)?;
            let y = fresh_point(&[&s]);
            let field = match field {
                FieldArg::Phi => Field::Phi,
                FieldArg::Pi => Field::Pi,
            };
            let r = vderiv(&s, field, y)?;
            let name = match y {
                Var::Free(i) => free_name(i),
                _ => unreachable!("variation points are free"),
            };
            let (text, j) = symbol_out(&r);
            Ok(Report::ok(
                text,
                json!({ "field": field.name(), "variable": name, "result": j }),
            ))
        }
        Command::Bracket { a, b } => {
            let r = bracket(&symbol(a, &ctx)?, &symbol(b, &ctx)?)?;
            let (text, j) = symbol_out(&r);
            Ok(Report::ok(text, json!({ "bracket": j })))
        }
        Command::Grade { expr } => {
            let parts = grade_decompose(&symbol(expr, &ctx)?);
            let mut text = String::new();
            let mut out = serde_json::Map::new();
            for (k, s) in &parts {
                let (t, j) = symbol_out(s);
                text.push_str(&format!("{}: {}\n", k, t));
                out.insert(k.to_string(), j);
            }
            if parts.is_empty() {
                text.push_str("0\n");
            }
            Ok(Report::ok(text, json!({ "components": out })))
        }
        Command::Multiply { a, b } => {
            let r = symbol(a, &ctx)?.multiply(&symbol(b, &ctx)?)?;
            let (text, j) = symbol_out(&r);
            Ok(Report::ok(text, json!({ "product": j })))
        }
        Command::Equals { a, b } => {
            let eq = symbol(a, &ctx)?.equals(&symbol(b, &ctx)?)?;
            Ok(Report {
                text: eq.to_string(),
                json: json!({ "equal": eq }),
                ok: eq,
            })
        }
        Command::Check { what } => check(cli, what, &ctx),
        Command::Quantize { expr, scheme: sch } => {
            let e = quantize(&symbol(expr, &ctx)?, scheme(*sch));
            let text = format_operator(&e);
            Ok(Report::ok(
                text.clone(),
                json!({ "scheme": scheme(*sch), "text": text, "terms": operator_json(&e) }),
            ))
        }
        Command::Commutator { a, b } => {
            let e = commutator(&parse_operator(a, &ctx)?, &parse_operator(b, &ctx)?)?;
            let text = format_operator(&e);
            let j =
                json!({ "text": text, "divergent": e.is_divergent(), "terms": operator_json(&e) });
            Ok(Report::ok(text, j))
        }
        Command::Correspondence { a, b, scheme: sch } => {
            let r = correspondence_check(&symbol(a, &ctx)?, &symbol(b, &ctx)?, scheme(*sch))?;
            let text = format!(
                "bracket: {}\nnon-central residual: {}\ncentral part: {}{}\n",
                r.bracket,
                r.noncentral_residual,
                r.central,
                if r.central_divergent {
                    " (divergent)"
                } else {
                    ""
                }
            );
            Ok(Report {
                text,
                json: serde_json::to_value(&r).expect("serializable"),
                ok: r.noncentral_zero,
            })
        }
        Command::ResidualIdentity { f, g } => {
            for name in [f, g] {
                if !ctx.is_declared(name) {
                    return Err(Failure::Usage(format!(
                        "`{}` is not a declared function",
                        name
                    )));
                }
            }
            let r = leibniz_residual(f, g)?;
            let text = format!(
                "residual: {}\nprefactor: {}\ncombination: {}\nderivative path: {}\npaths agree: {}\n",
                r.residual, r.prefactor, r.combination, r.derivative_path, r.paths_agree
            );
            Ok(Report {
                text,
                json: serde_json::to_value(&r).expect("serializable"),
                ok: r.paths_agree,
            })
        }
        Command::Lattice {
            what:
                LatticeCommand::Verify {
                    a,
                    b,
                    n,
                    half_width,
                    stencil,
                    states,
                    tolerance,
                    csv,
                },
        } => {
            let (a, b) = (symbol(a, &ctx)?, symbol(b, &ctx)?);
            let cfgs = n
                .iter()
                .map(|&n| LatticeConfig::with_stencil(n, *half_width, *stencil))
                .collect::<Result<Vec<_>, _>>()?;
            let names: Vec<&str> = ctx.functions().collect();
            let r = verify_bracket(
                &a,
                &b,
                &cfgs,
                &NumericBinding::for_names(names),
                *states,
                cli.seed,
            )?;
            if let Some(path) = csv {
                let file = File::create(path)
                    .map_err(|e| Failure::Usage(format!("{}: {}", path.display(), e)))?;
                write_convergence_csv(&r, file).map_err(|e| Failure::Runtime(e.to_string()))?;
            }
            let mut text = format!(
                "bracket: {}\n{:>6} {:>12} {:>12}\n",
                r.bracket, "N", "dx", "error"
            );
            for row in &r.rows {
                text.push_str(&format!(
                    "{:>6} {:>12.6} {:>12.3e}\n",
                    row.n, row.dx, row.error
                ));
            }
            text.push_str(&match r.order {
                Some(p) => format!("order: {:.3}\n", p),
                None => "order: n/a (errors at the noise floor)\n".into(),
            });
            let ok = tolerance.is_none_or(|t| r.final_error() <= t);
            Ok(Report {
                text,
                json: serde_json::to_value(&r).expect("serializable"),
                ok,
            })
        }
        Command::KgFlow {
            n,
            half_width,
            mass,
            t,
            tolerance,
        } => {
            if *mass < 0.0 {
                return Err(Failure::Usage("mass must be non-negative".into()));
            }
            let cfg = LatticeConfig::new(*n, *half_width)?;
            let r = kg_flow(&cfg, *mass, *t);
            let state = LatticeState::random(&cfg, &mut ChaCha8Rng::seed_from_u64(cli.seed));
            let drift = r.energy_drift(&cfg, &state);
            let text = format!(
                "N = {}, m = {}, t = {}\nsymplectic defect: {:.3e}\nrelative energy drift: {:.3e}\n",
                n, mass, t, r.symplectic_defect, drift
            );
            let j = json!({ "n": n, "mass": mass, "t": t, "symplectic_defect": r.symplectic_defect, "energy_drift": drift });
            Ok(Report {
                text,
                json: j,
                ok: r.symplectic_defect < *tolerance && drift < *tolerance,
            })
        }
        Command::Quasiclassics { what } => quasiclassics(what),
        Command::Suite {
            profile,
            criteria,
            inject_fault,
        } => {
            let profile = match profile {
                ProfileArg::Quick => SuiteProfile::Quick,
                ProfileArg::Full => SuiteProfile::Full,
            };
            let r = run_suite(&SuiteConfig {
                profile,
                seed: cli.seed,
                fault: *inject_fault,
                only: criteria.clone(),
            });
            Ok(Report {
                text: r.render_text(),
                json: serde_json::to_value(&r).expect("serializable"),
                ok: r.all_passed(),
            })
        }
    }
}

fn check(cli: &Cli, what: &CheckCommand, ctx: &Context) -> Outcome {
    match what {
        CheckCommand::Algebra {
            samples,
            max_grade,
            max_deriv,
        } => {
            let r = check_algebra(&AlgebraConfig {
                seed: cli.seed,
                samples: *samples,
                max_grade: *max_grade,
                max_deriv: *max_deriv,
                fault: false,
            });
            Ok(Report {
                text: r.render_text(),
                json: serde_json::to_value(&r).expect("serializable"),
                ok: r.all_passed(),
            })
        }
        CheckCommand::Symbol { expr } => {
            let r = check_symbol(&symbol(expr, ctx)?)?;
            let mut text = format!("is symbol: {}\n", r.is_symbol);
            for w in &r.witnesses {
                text.push_str(&format!(
                    "  witness: {}\n",
                    serde_json::to_string(w).expect("serializable")
                ));
            }
            Ok(Report {
                text,
                json: serde_json::to_value(&r).expect("serializable"),
                ok: r.is_symbol,
            })
        }
    }
}

fn system(args: &SystemArgs) -> (Hamiltonian, Poly, fn(f64) -> f64) {
    let h = match args.hamiltonian {
        HamiltonianArg::Oscillator => Hamiltonian::oscillator(),
        HamiltonianArg::Free => Hamiltonian::free_particle(),
        HamiltonianArg::Quartic => Hamiltonian::quartic(),
    };
    let s0 = args
        .s0
        .iter()
        .enumerate()
        .fold(Poly::zero(1), |p, (k, &c)| {
            if c == 0.0 {
                p
            } else {
                p.term(c, 0, &[0], &[k as u32])
            }
        });
    let a0: fn(f64) -> f64 = match args.a0 {
        AmplitudeArg::One => |_| 1.0,
        AmplitudeArg::Gaussian => |q| (-q * q).exp(),
    };
    (h, s0, a0)
}

fn quasiclassics(what: &QuasiCommand) -> Outcome {
    match what {
        QuasiCommand::Characteristics {
            system: args,
            q0,
            horizon,
            dt,
            csv,
        } => {
            let (h, s0, a0) = system(args);
            let tr = integrate_characteristics(&h, &s0, &[*q0], *horizon, *dt)?;
            let amp = transport_amplitude(&h, &tr, |q| a0(q[0]))?;
            if let Some(path) = csv {
                let file = File::create(path)
                    .map_err(|e| Failure::Usage(format!("{}: {}", path.display(), e)))?;
                write_trajectory_csv(&tr, &amp, file)
                    .map_err(|e| Failure::Runtime(e.to_string()))?;
            }
            let end = tr.last();
            let a_end = *amp.last().expect("at least the initial sample");
            let text = format!(
                "{}: q0 = {}, t = {}\nq = {:.12}\np = {:.12}\ndet D = {:.12}\nS = {:.12}\na = {:.12}\n",
                h.name, q0, end.t, end.q[0], end.p[0], end.det, end.action, a_end
            );
            let j = json!({
                "hamiltonian": h.name, "q0": q0, "t": end.t, "q": end.q[0], "p": end.p[0],
                "det": end.det, "action": end.action, "amplitude": a_end, "steps": tr.samples.len() - 1,
            });
            Ok(Report::ok(text, j))
        }
        QuasiCommand::Transport {
            system: args,
            horizon,
            q_max,
            tolerance,
        } => {
            let (h, s0, a0) = system(args);
            let spread = q_max + 1.5;
            let field =
                WkbField::build(&h, &s0, a0, (-spread, spread), 401, *horizon + 2e-3, 1e-3)?;
            let grid = Grid {
                nq: 201,
                ..Grid::uniform((2e-3, *horizon - 2e-3), (-q_max, *q_max), 1e-3, 1e-3)
            };
            let r = transport_residual(
                &h,
                &|t, q| field.action(t, q),
                &|t, q| field.amplitude(t, q),
                &grid,
            )?;
            let text = format!(
                "{}: transport residual {:.3e} on t in [0, {}], |q| <= {}\n",
                h.name, r, horizon, q_max
            );
            let j =
                json!({ "hamiltonian": h.name, "residual": r, "horizon": horizon, "q_max": q_max });
            Ok(Report {
                text,
                json: j,
                ok: r < *tolerance,
            })
        }
        QuasiCommand::Wkb {
            system: args,
            h: hs,
            horizon,
            min_exponent,
        } => {
            let (h, s0, a0) = system(args);
            let field = WkbField::build(&h, &s0, a0, (-1.5, 1.5), 601, *horizon, 1e-3)?;
            let grid = Grid {
                t0: 0.4 * horizon,
                t1: 0.8 * horizon,
                nt: 5,
                q0: -0.8,
                q1: 0.8,
                nq: 33,
                dt: 1e-2,
                dq: 1e-2,
            };
            let r = wkb_residual(
                &h,
                &|t, q| field.action(t, q),
                &|t, q| field.amplitude(t, q),
                hs,
                &grid,
            )?;
            let mut text = format!("{}\n{:>8} {:>12}\n", h.name, "h", "r(h)");
            for (x, y) in r.h.iter().zip(&r.residual) {
                text.push_str(&format!("{:>8} {:>12.4e}\n", x, y));
            }
            text.push_str(&match r.exponent {
                Some(p) => format!("exponent: {:.3}\n", p),
                None => "exponent: n/a\n".into(),
            });
            let ok = match min_exponent {
                Some(m) => r.exponent.is_some_and(|p| p >= *m),
                None => true,
            };
            Ok(Report {
                text,
                json: serde_json::to_value(&r).expect("serializable"),
                ok,
            })
        }
    }
}
