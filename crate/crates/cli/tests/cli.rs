use std::process::{Command, Output};

fn hamalg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hamalg"))
        .args(args)
        .env_remove("HAMALG_DIM")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("valid JSON")
}

#[test]
fn help_lists_every_subcommand() {
    let o = hamalg(&["--help"]);
    let text = stdout(&o);
    for cmd in [
        "vderiv",
        "bracket",
        "grade",
        "multiply",
        "equals",
        "check",
        "quantize",
        "commutator",
        "correspondence",
        "residual-identity",
        "lattice",
        "kg-flow",
        "quasiclassics",
        "suite",
    ] {
        assert!(text.contains(cmd), "{} missing from help", cmd);
    }
}

#[test]
fn bracket_of_the_oscillator_halves() {
    let o = hamalg(&["bracket", "int[x](phi(x)^2)", "int[x](pi(x)^2)"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), "-4*int[x](phi(x)*pi(x))\n");
}

#[test]
fn vderiv_moves_the_derivative_onto_the_function() {
    let o = hamalg(&[
        "vderiv",
        "int[x](f(x)*phi(x)*D(phi,1)(x))",
        "--field",
        "phi",
    ]);
    assert_eq!(stdout(&o), "-D(f,1)(y)*phi(y)\n");
    let o = hamalg(&["--json", "vderiv", "int[x](phi(x)^2)"]);
    let j = json(&o);
    assert_eq!(j["result"]["text"], "2*phi(y)");
    assert_eq!(j["variable"], "y");
}

#[test]
fn grade_splits_by_pi_degree() {
    let o = hamalg(&["grade", "int[x]( (1/2)*pi(x)^2 + (1/2)*D(phi,1)(x)^2 )"]);
    assert_eq!(
        stdout(&o),
        "0: (1/2)*int[x](D(phi,1)(x)^2)\n2: (1/2)*int[x](pi(x)^2)\n"
    );
}

#[test]
fn multiply_and_equals() {
    let o = hamalg(&["multiply", "int[x](phi(x)^2)", "int[y](pi(y))*0"]);
    assert_eq!(stdout(&o), "0\n");
    let o = hamalg(&["equals", "int[x](phi(x)*D(phi,1)(x))", "0"]);
    assert_eq!((code(&o), stdout(&o).as_str()), (0, "true\n"));
    let o = hamalg(&["equals", "int[x](phi(x)^2)", "0"]);
    assert_eq!((code(&o), stdout(&o).as_str()), (1, "false\n"));
}

#[test]
fn check_algebra_prints_the_law_table() {
    let o = hamalg(&["check", "algebra", "--seed", "42", "--samples", "20"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    for law in [
        "antisymmetry",
        "bilinearity",
        "leibniz",
        "jacobi",
        "closure",
        "grading",
    ] {
        assert!(text.contains(law));
    }
    assert!(!text.contains("FAIL"));
}

#[test]
fn check_symbol_reports_witnesses() {
    assert_eq!(code(&hamalg(&["check", "symbol", "int[x](phi(x)^2)"])), 0);
    let o = hamalg(&["check", "symbol", "phi(0)"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("delta(y)"));
}

#[test]
fn quantize_and_commutator() {
    let o = hamalg(&["quantize", "int[x](phi(x)*pi(x))", "--scheme", "weyl"]);
    assert_eq!(
        stdout(&o),
        "qint[x]( (1/2)*Phi(x)*Pi(x) + (1/2)*Pi(x)*Phi(x) )\n"
    );
    let o = hamalg(&["quantize", "int[x](phi(x)*pi(x))", "--scheme", "normal"]);
    assert_eq!(stdout(&o), "qint[x]( Phi(x)*Pi(x) )\n");
    let o = hamalg(&["commutator", "qint[](pi(x))", "qint[](phi(y))"]);
    assert_eq!(stdout(&o), "-i*h*delta(x-y)\n");
    let o = hamalg(&["--json", "commutator", "qint[x](phi(x))", "qint[x](phi(x))"]);
    assert_eq!(json(&o)["text"], "0");
}

#[test]
fn correspondence_in_the_quadratic_sector() {
    let o = hamalg(&["correspondence", "int[x](phi(x)^2/2)", "int[x](pi(x)^2/2)"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("non-central residual: 0"));
}

#[test]
fn residual_identity_prints_the_combination() {
    let o = hamalg(&["residual-identity", "--f", "f", "--g", "g"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.contains("combination: delta0(0)*delta(x;1) - 2*delta0(1)*delta(x)"));
    assert!(text.contains("prefactor: i*h"));
    assert_eq!(code(&hamalg(&["residual-identity", "--f", "q"])), 2);
}

#[test]
fn lattice_verify_writes_the_table() {
    let dir = std::env::temp_dir().join(format!("hamalg-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let csv = dir.join("conv.csv");
    let o = hamalg(&[
        "lattice",
        "verify",
        "int[x](f(x)*phi(x)*D(phi,1)(x)^2)",
        "int[x](g(x)*pi(x)^2)",
        "--n",
        "64,128",
        "--csv",
        csv.to_str().unwrap(),
        "--tolerance",
        "1e-1",
    ]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let table = std::fs::read_to_string(&csv).unwrap();
    assert!(table.starts_with("N,dx,error\n64,"));
    assert_eq!(table.lines().count(), 3);
    let o = hamalg(&["lattice", "verify", "phi(0)", "pi(0)", "--n", "64"]);
    assert_ne!(code(&o), 0);
}

#[test]
fn kg_flow_is_symplectic() {
    let o = hamalg(&[
        "--json", "kg-flow", "--n", "64", "--mass", "1", "--t", "1.7",
    ]);
    assert_eq!(code(&o), 0);
    assert!(json(&o)["symplectic_defect"].as_f64().unwrap() < 1e-10);
    assert_eq!(code(&hamalg(&["kg-flow", "--n", "7"])), 2);
}

#[test]
fn quasiclassics_subcommands() {
    let o = hamalg(&[
        "--json",
        "quasiclassics",
        "characteristics",
        "--q0",
        "1",
        "--horizon",
        "1",
    ]);
    let j = json(&o);
    assert!((j["det"].as_f64().unwrap() - 1f64.cos()).abs() < 1e-8);
    let o = hamalg(&["quasiclassics", "characteristics", "--horizon", "2"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("caustic"));
    let o = hamalg(&[
        "quasiclassics",
        "transport",
        "--hamiltonian",
        "free",
        "--s0",
        "0,0,0.5",
    ]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let o = hamalg(&[
        "--json",
        "quasiclassics",
        "wkb",
        "--hamiltonian",
        "quartic",
        "--a0",
        "gaussian",
        "--min-exponent",
        "1.9",
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["residual"].as_array().unwrap().len(), 3);
}

#[test]
fn usage_and_parse_errors_exit_2() {
    assert_eq!(code(&hamalg(&["bracket", "int[x](phi(x)"])), 2);
    let o = hamalg(&["bracket", "int[x](k(x))", "0"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("1:8"));
    assert_eq!(code(&hamalg(&["frobnicate"])), 2);
}

#[test]
fn declared_functions_and_dimension() {
    assert_eq!(
        code(&hamalg(&[
            "--functions",
            "k",
            "bracket",
            "int[x](k(x)*phi(x))",
            "int[x](pi(x)^2)"
        ])),
        0
    );
    let o = Command::new(env!("CARGO_BIN_EXE_hamalg"))
        .args(["bracket", "int[x](D(phi,(1,0))(x)^2)", "int[x](pi(x)^2)"])
        .env("HAMALG_DIM", "2")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert_eq!(
        code(&hamalg(&["bracket", "int[x](D(phi,(1,0))(x)^2)", "0"])),
        2
    );
}

#[test]
fn json_output_is_deterministic() {
    let args = [
        "--json",
        "--seed",
        "7",
        "check",
        "algebra",
        "--samples",
        "5",
    ];
    assert_eq!(hamalg(&args).stdout, hamalg(&args).stdout);
}

#[test]
fn suite_subset_and_fault_fixture() {
    let o = hamalg(&["--json", "suite", "quick", "--criteria", "4,5,6"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["criteria"].as_array().unwrap().len(), 3);
    let o = hamalg(&["suite", "quick", "--criteria", "1", "--inject-fault"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("counterexample"));
}
