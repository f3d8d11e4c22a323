//! `hamalg`: command-line front end for the symbolic engine and its oracles.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "hamalg",
    version,
    about = "Symbolic Hamiltonian field algebra with numeric oracles"
)]
pub struct Cli {
    /// Print a JSON report instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Declared coefficient functions, comma separated.
    #[arg(long, global = true, value_delimiter = ',', default_value = "f,g,j")]
    pub functions: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Variational derivative with respect to phi or pi.
    Vderiv {
        expr: String,
        #[arg(long, value_enum, default_value_t = FieldArg::Phi)]
        field: FieldArg,
    },
    /// Poisson bracket of two symbols.
    Bracket { a: String, b: String },
    /// Split a symbol by pi-degree.
    Grade { expr: String },
    /// Product of two symbols.
    Multiply { a: String, b: String },
    /// Compare two symbols after canonicalization (exit 1 when different).
    Equals { a: String, b: String },
    /// Property checks.
    Check {
        #[command(subcommand)]
        what: CheckCommand,
    },
    /// Operator expression of a symbol under an ordering scheme.
    Quantize {
        expr: String,
        #[arg(long, value_enum, default_value_t = SchemeArg::Weyl)]
        scheme: SchemeArg,
    },
    /// Commutator of two operator expressions, reduced to normal order.
    Commutator { a: String, b: String },
    /// Compare [Q(a), Q(b)] with -ih Q({a, b}) (exit 1 on a non-central residual).
    Correspondence {
        a: String,
        b: String,
        #[arg(long, value_enum, default_value_t = SchemeArg::Weyl)]
        scheme: SchemeArg,
    },
    /// The two Leibniz expansions of [f phi phi', g pi^2] and their difference.
    ResidualIdentity {
        #[arg(long, default_value = "f")]
        f: String,
        #[arg(long, default_value = "g")]
        g: String,
    },
    /// Lattice oracle.
    Lattice {
        #[command(subcommand)]
        what: LatticeCommand,
    },
    /// Exact Klein-Gordon propagator on the lattice and its symplectic defect.
    KgFlow {
        #[arg(long, default_value_t = 64)]
        n: usize,
        #[arg(long = "half-width", default_value_t = 8.0)]
        half_width: f64,
        #[arg(long, default_value_t = 1.0)]
        mass: f64,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        t: f64,
        /// Largest accepted defect and relative energy drift.
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
    },
    /// Characteristics, transport and WKB residuals in finite dimension.
    Quasiclassics {
        #[command(subcommand)]
        what: QuasiCommand,
    },
    /// Run the acceptance criteria (exit 1 if any fails).
    Suite {
        #[arg(value_enum, default_value_t = ProfileArg::Quick)]
        profile: ProfileArg,
        /// Run only these criteria, e.g. `1,4`.
        #[arg(long, value_delimiter = ',', value_parser = clap::value_parser!(u8).range(1..=9))]
        criteria: Vec<u8>,
        /// Test fixture: corrupt every bracket in the law suite.
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
}

#[derive(Subcommand, Debug)]
pub enum CheckCommand {
    /// Randomized law suite for the Poisson bracket.
    Algebra {
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 3)]
        max_grade: u32,
        #[arg(long, default_value_t = 2)]
        max_deriv: u8,
    },
    /// Whether both first variational derivatives are smooth functions.
    Symbol { expr: String },
}

#[derive(Subcommand, Debug)]
pub enum LatticeCommand {
    /// Numeric against symbolic bracket on a sequence of lattices.
    Verify {
        a: String,
        b: String,
        #[arg(long, value_delimiter = ',', default_value = "128,256,512")]
        n: Vec<usize>,
        #[arg(long = "half-width", default_value_t = 8.0)]
        half_width: f64,
        #[arg(long, default_value_t = 2)]
        stencil: u8,
        #[arg(long, default_value_t = 3)]
        states: usize,
        /// Exit 1 when the error on the finest lattice exceeds this.
        #[arg(long)]
        tolerance: Option<f64>,
        /// Write the convergence table (N, dx, error) as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Clone)]
pub struct SystemArgs {
    #[arg(long, value_enum, default_value_t = HamiltonianArg::Oscillator)]
    pub hamiltonian: HamiltonianArg,
    /// Initial action as ascending coefficients in q, e.g. `0,0,0.5` for q^2/2.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0",
        allow_negative_numbers = true
    )]
    pub s0: Vec<f64>,
    /// Initial amplitude.
    #[arg(long, value_enum, default_value_t = AmplitudeArg::One)]
    pub a0: AmplitudeArg,
}

#[derive(Subcommand, Debug)]
pub enum QuasiCommand {
    /// One characteristic with its monodromy and transported amplitude.
    Characteristics {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        q0: f64,
        #[arg(long, default_value_t = 1.0)]
        horizon: f64,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        /// Write the trajectory (t, q, p, det, a) as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Transport residual of the amplitude built from a family of characteristics.
    Transport {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long, default_value_t = 1.0)]
        horizon: f64,
        /// Half-width of the evaluation interval in q.
        #[arg(long, default_value_t = 1.0)]
        q_max: f64,
        #[arg(long, default_value_t = 1e-6)]
        tolerance: f64,
    },
    /// h-scaling of the Schrodinger residual of the WKB ansatz.
    Wkb {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.05,0.025")]
        h: Vec<f64>,
        #[arg(long, default_value_t = 0.5)]
        horizon: f64,
        /// Exit 1 when the fitted exponent is below this.
        #[arg(long)]
        min_exponent: Option<f64>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum FieldArg {
    Phi,
    Pi,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SchemeArg {
    Normal,
    Weyl,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ProfileArg {
    Quick,
    Full,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum HamiltonianArg {
    /// (p^2 + q^2)/2
    Oscillator,
    /// p^2/2
    Free,
    /// p^2/2 + q^4/4
    Quartic,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum AmplitudeArg {
    One,
    /// exp(-q^2)
    Gaussian,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    commands::run(&cli)
}
