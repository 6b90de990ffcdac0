use saddlekit::config::{KernelSpec, RunConfig};
use saddlekit::kernels::KernelKind;
use saddlekit::Error;
use std::path::Path;

fn parse(text: &str) -> saddlekit::Result<RunConfig> {
    RunConfig::parse(text, Path::new("."))
}

fn config_error(text: &str, needle: &str) {
    match parse(text) {
        Err(Error::Config(m)) => assert!(m.contains(needle), "`{m}` should mention `{needle}`"),
        other => panic!("expected a configuration error for {text:?}, got {other:?}"),
    }
}

#[test]
fn range_errors_name_the_key() {
    config_error("[grid]\nm = 2\n", "grid.m");
    config_error("[grid]\nh = -1\n", "grid.h");
    config_error("[saddle]\nradii = 10, 5\n", "saddle.radii");
    config_error("[saddle]\nradii = 5, 25\n", "saddle.radii");
    config_error("[evolve]\nxi0 = 1.5\n", "evolve.xi0");
    config_error("[nonlinearity]\nname = sine-gordon\n", "nonlinearity.name");
    config_error("[kernel]\nkind = table\nfile = missing.csv\n", "kernel.file");
}

#[test]
fn duplicate_and_stray_keys_are_rejected() {
    assert!(parse("[grid]\nh = 0.1\nh = 0.2\n").is_err());
    assert!(parse("[grid]\nthis line has no equals sign\n").is_err());
}

#[test]
fn table_kernels_need_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("k.csv");
    std::fs::write(&table, "# r, k\nr,k\n0.01,1591.5\n1,0.159155\n100,1.59155e-7\n").unwrap();
    let no_bounds = "[kernel]\nkind = table\nfile = k.csv\n";
    assert!(matches!(RunConfig::parse(no_bounds, dir.path()), Err(Error::Config(_))));
    let text = "[kernel]\nkind = table\nfile = k.csv\nlambda = 0.5\nLambda = 2\n";
    let c = RunConfig::parse(text, dir.path()).unwrap();
    assert!(matches!(c.kernel.spec, KernelSpec::Table { .. }));
    let k = c.build_kernel().unwrap();
    assert_eq!(k.kind(), KernelKind::Table);
    assert!((k.eval(1.0) - 0.159155).abs() < 1e-9);

    // the table contents enter the hash
    let h1 = c.hash();
    std::fs::write(&table, "0.01,1591.5\n1,0.16\n100,1.59155e-7\n").unwrap();
    assert_ne!(RunConfig::parse(text, dir.path()).unwrap().hash(), h1);
}

#[test]
fn canonical_text_round_trips_every_section() {
    let text = "\
[kernel]
kind = expression
form = power-exp
a = 1
b = 0.5
mu = 2
gamma = 0.4
[nonlinearity]
name = peierls
[grid]
h = 0.3
s_max = 12
[saddle]
radii = 4, 8, 12
table_radii = 3, 6
tol = 1e-9
[layer]
half_length = 15
[eigen]
radii = 2, 4, 8
[evolve]
dt = 0.01
[verify]
count = 30
scan_widths = 0.1, 0.2
[torsion]
radii = 1, 3
[run]
seed = 42
";
    let c = parse(text).unwrap();
    assert_eq!(c.seed, 42);
    assert_eq!(c.saddle.radii, vec![4.0, 8.0, 12.0]);
    // canonical text spells out the resolved defaults
    let again = parse(&c.canonical()).unwrap();
    assert_eq!(again.kernel.n, Some(2));
    assert_eq!(again.canonical(), c.canonical());
    assert_eq!(again.hash(), c.hash());
    let k = c.build_kernel().unwrap();
    assert_eq!(k.kind(), KernelKind::Modulated);
    assert_eq!(k.order(), 0.4);
}

#[test]
fn preset_file_matches_the_builtin_preset() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/ac_m1_g05.cfg");
    let c = RunConfig::from_file(&path).unwrap();
    assert_eq!(c.hash(), RunConfig::default().hash());
}
