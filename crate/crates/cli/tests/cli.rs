use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_twopoint");

const PLANE_WAVE: &str = r#"
[grid]
dims = [8, 8, 32]
[run]
t_end = 0.25
[initial]
kind = "planewave"
mode = 2
[[laws]]
kind = "local-energy"
[[laws]]
kind = "translation"
nodes = [0, 0, 16]
[[laws]]
kind = "inversion"
"#;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .current_dir(dir)
        .env_remove("TWOPOINT_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn setup(config: &str) -> TempDir {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("exp.toml"), config).unwrap();
    dir
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn read(dir: &Path, rel: &str) -> String {
    fs::read_to_string(dir.join(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

/// Number in `text` following `key `.
fn field(text: &str, key: &str) -> f64 {
    let at = text
        .find(&format!("{key} "))
        .unwrap_or_else(|| panic!("no {key} in {text}"))
        + key.len()
        + 1;
    text[at..]
        .split_whitespace()
        .next()
        .unwrap()
        .parse()
        .unwrap()
}

#[test]
fn plane_wave_translation_by_one_wavelength_matches_volume_energy() {
    let dir = setup(PLANE_WAVE);
    let out = run(dir.path(), &["verify", "exp.toml", "output.dir=out"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let summary = read(dir.path(), "out/summary.txt");
    let line = summary
        .lines()
        .find(|l| l.starts_with("law translation"))
        .unwrap();
    // unit box, E0 = 1: Vol·E0² = 1
    assert!((field(line, "Q0") - 1.0).abs() <= 1e-8, "{line}");
    assert!((field(line, "analytic_Q0") - 1.0).abs() <= 1e-12);
    for law in ["local-energy", "translation_0_0_16_0", "inversion"] {
        let csv = read(dir.path(), &format!("out/balance_{law}.csv"));
        assert!(csv.starts_with("# schema=1\nt,Q,source_cum,defect,r_l2,r_max\n"));
    }
}

#[test]
fn zero_field_passes() {
    let dir = setup(PLANE_WAVE);
    let out = run(
        dir.path(),
        &["verify", "exp.toml", "initial.kind=zero", "output.dir=out"],
    );
    assert_eq!(code(&out), 0);
    assert!(read(dir.path(), "out/summary.txt").contains("overall PASS"));
}

#[test]
fn law_without_flux_fails_the_residual_check() {
    let w: Vec<String> = (0..36)
        .map(|i| if i % 7 == 0 { "1.0" } else { "0.0" }.to_string())
        .collect();
    let law = format!(
        "name = \"no-flux\"\nW = [{}]\nK = [{}]\n\n[map]\nalpha = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]\nbeta = [0.0, 0.0, 0.0]\n",
        w.join(", "),
        vec!["0.0"; 108].join(", ")
    );
    let dir = setup(
        "[grid]\ndims = [8, 8, 32]\n[run]\nt_end = 0.25\n[initial]\nkind = \"planewave\"\nmode = 2\n\
         [[laws]]\nkind = \"custom\"\nfile = \"noflux.toml\"\n",
    );
    fs::write(dir.path().join("noflux.toml"), law).unwrap();
    let out = run(dir.path(), &["verify", "exp.toml", "output.dir=out"]);
    assert_eq!(code(&out), 1);
    let summary = read(dir.path(), "out/summary.txt");
    assert!(field(&summary, "max_rel_residual") > 0.1, "{summary}");
    // the integrated balance alone cannot see the missing flux
    assert!(field(&summary, "max_rel_defect") <= 1e-7);
}

#[test]
fn single_level_refinement_is_a_config_error() {
    let dir = setup(&format!(
        "{PLANE_WAVE}\n[refinement]\nlevels = 1\nmin_order = 2.0\n"
    ));
    let out = run(dir.path(), &["converge", "exp.toml", "output.dir=out"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn malformed_configs_are_config_errors() {
    let dir = setup(PLANE_WAVE);
    assert_eq!(code(&run(dir.path(), &["verify", "missing.toml"])), 2);
    assert_eq!(
        code(&run(dir.path(), &["verify", "exp.toml", "run.bogus=1"])),
        2
    );
    assert_eq!(
        code(&run(dir.path(), &["verify", "exp.toml", "run.nsteps=10"])),
        2
    );
    assert_eq!(
        code(&run(dir.path(), &["verify", "exp.toml", "novalue"])),
        2
    );
    // step beyond the stability limit
    assert_eq!(
        code(&run(
            dir.path(),
            &["verify", "exp.toml", "run.dt=0.5", "output.dir=out"]
        )),
        2
    );
}

#[test]
fn non_finite_input_reports_divergence() {
    let dir = setup(PLANE_WAVE);
    let out = run(
        dir.path(),
        &[
            "verify",
            "exp.toml",
            "initial.amplitude=nan",
            "output.dir=out",
        ],
    );
    assert_eq!(code(&out), 3);
}

#[test]
fn yee_joint_ladder_is_second_order() {
    let dir = setup(
        r#"
[grid]
dims = [16, 16, 16]
[run]
stepper = "yee"
dt = 0.025
t_end = 0.2
[initial]
kind = "random"
seed = 77
[source]
kind = "plane-wave"
mode = [0, 1, 1]
polarization = [1.0, 0.5, 0.0]
omega = 3.0
[[laws]]
kind = "inversion"
[refinement]
levels = 3
min_order = 1.8
max_order = 2.2
"#,
    );
    let out = run(dir.path(), &["converge", "exp.toml", "output.dir=out"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let csv = read(dir.path(), "out/orders.csv");
    let orders: Vec<f64> = csv
        .lines()
        .skip(2)
        .filter_map(|l| l.rsplit(',').next()?.parse().ok())
        .collect();
    assert_eq!(orders.len(), 2);
    assert!(orders.iter().all(|p| (1.8..=2.2).contains(p)), "{orders:?}");
}

#[test]
fn spectral_step_ladder_is_fourth_order() {
    let dir = setup(
        r#"
[grid]
dims = [16, 16, 16]
[run]
stencil = "centered4"
cfl_fraction = 0.5
t_end = 0.2
[initial]
kind = "random"
seed = 77
[[laws]]
kind = "local-energy"
[[laws]]
kind = "translation"
nodes = [4, 0, 0]
steps = 2
[refinement]
levels = 3
ladder = "dt"
min_order = 3.5
max_order = 4.2
"#,
    );
    let out = run(dir.path(), &["converge", "exp.toml", "output.dir=out"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    // demanding more than the method delivers fails
    let out = run(
        dir.path(),
        &[
            "converge",
            "exp.toml",
            "refinement.min_order=5.0",
            "output.dir=out2",
        ],
    );
    assert_eq!(code(&out), 1);
}

const DISCOVER: &str = r#"
[grid]
dims = [8, 8, 8]
[discover]
map = { kind = "inversion" }
seed = 5
dt = 2e-3
nsteps = 4
"#;

#[test]
fn tiny_ensemble_is_insufficient_data() {
    let dir = setup(DISCOVER);
    let out = run(
        dir.path(),
        &[
            "discover",
            "exp.toml",
            "discover.ensemble=2",
            "output.dir=out",
        ],
    );
    assert_eq!(code(&out), 4);
}

#[test]
fn discovered_laws_contain_the_parity_law_and_verify() {
    let dir = setup(DISCOVER);
    let out = run(dir.path(), &["discover", "exp.toml", "output.dir=out"]);
    assert_eq!(code(&out), 0);
    let summary = read(dir.path(), "out/summary.txt");
    assert!(
        field(&summary, "projection inversion") >= 0.999,
        "{summary}"
    );
    assert!(read(dir.path(), "out/candidates.csv").starts_with("# schema=1\n"));
    let check =
        "[grid]\ndims = [8, 8, 32]\n[run]\nt_end = 0.1\n[initial]\nkind = \"random\"\nseed = 3\n\
                 [[laws]]\nkind = \"custom\"\nfile = \"out/law_0.toml\"\n";
    fs::write(dir.path().join("check.toml"), check).unwrap();
    let out = run(dir.path(), &["verify", "check.toml", "output.dir=verified"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn identity_map_top_candidate_is_local_energy() {
    let dir = setup(DISCOVER);
    let out = run(
        dir.path(),
        &[
            "discover",
            "exp.toml",
            "discover.map={ kind = \"identity\" }",
            "discover.seed=100",
            "output.dir=out",
        ],
    );
    assert_eq!(code(&out), 0);
    let summary = read(dir.path(), "out/summary.txt");
    assert!(
        field(&summary, "top_candidate_overlap local-energy") >= 0.999,
        "{summary}"
    );
}

const FORGE: &str = r#"
[forge]
pde = { kind = "advection", c = 1.0 }
modes = [[1.0, 0.0, 1.0]]
points = [0.0, 1.5707963267948966, 3.141592653589793, 4.71238898038469]
order = 4
horizon = 6.283185307179586
samples = 200
max_drift = 1e-9
"#;

#[test]
fn forge_finds_two_advection_invariants() {
    let dir = setup(FORGE);
    let out = run(dir.path(), &["forge", "exp.toml", "output.dir=out"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let summary = read(dir.path(), "out/forge_summary.csv");
    let row: Vec<&str> = summary.lines().nth(2).unwrap().split(',').collect();
    assert_eq!(&row[..3], &["4", "4", "2"]);
    assert_eq!(
        read(dir.path(), "out/coefficients.csv").lines().count(),
        2 + 8
    );
    for i in 0..2 {
        assert!(read(dir.path(), &format!("out/drift_{i}.csv"))
            .starts_with("# schema=1\nt,g_value,drift\n"));
    }
}

#[test]
fn forge_on_zero_data_returns_the_full_basis() {
    let dir = setup(FORGE);
    let out = run(
        dir.path(),
        &[
            "forge",
            "exp.toml",
            "forge.modes=[]",
            "forge.min_exponent=3.0",
            "output.dir=out",
        ],
    );
    assert_eq!(code(&out), 0);
    let summary = read(dir.path(), "out/forge_summary.csv");
    assert_eq!(summary.lines().nth(2), Some("4,4,4,"));
}

#[test]
fn forge_drift_bound_is_enforced() {
    let dir = setup(FORGE);
    let args = [
        "forge",
        "exp.toml",
        "forge.pde={ kind = \"burgers\", nu = 0.1 }",
        "forge.modes=[[1.0, 0.0, 1.0], [2.0, 0.5, 0.0]]",
        "forge.points=[0.3, 1.1, 2.0, 4.4]",
        "forge.order=3",
        "forge.horizon=0.1",
        "output.dir=out",
    ];
    assert_eq!(
        code(&run(
            dir.path(),
            &[&args[..], &["forge.max_drift=1e-12"]].concat()
        )),
        1
    );
    assert_eq!(
        code(&run(
            dir.path(),
            &[
                &args[..],
                &["forge.max_drift=1.0", "forge.min_exponent=3.5"]
            ]
            .concat()
        )),
        0
    );
}

#[test]
fn planewave_table_matches_closed_form() {
    let dir = setup(PLANE_WAVE);
    let out = run(dir.path(), &["planewave", "exp.toml", "output.dir=out"]);
    assert_eq!(code(&out), 0);
    assert_eq!(
        read(dir.path(), "out/planewave.csv").lines().count(),
        2 + 33
    );
    let dir = setup(DISCOVER);
    assert_eq!(code(&run(dir.path(), &["planewave", "exp.toml"])), 2);
}

#[test]
fn repeated_runs_write_identical_files() {
    let dir = setup(PLANE_WAVE);
    for o in ["a", "b"] {
        assert_eq!(
            code(&run(
                dir.path(),
                &[
                    "verify",
                    "exp.toml",
                    "initial={ kind = \"random\", seed = 9 }",
                    &format!("output.dir={o}")
                ]
            )),
            0
        );
    }
    for f in [
        "balance_local-energy.csv",
        "balance_inversion.csv",
        "summary.txt",
    ] {
        assert_eq!(
            fs::read(dir.path().join("a").join(f)).unwrap(),
            fs::read(dir.path().join("b").join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn output_directory_comes_from_the_environment() {
    let dir = setup(PLANE_WAVE);
    let target = dir.path().join("from-env");
    let out = Command::new(BIN)
        .args(["verify", "exp.toml", "output.dir=ignored"])
        .current_dir(dir.path())
        .env("TWOPOINT_OUT_DIR", &target)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    assert!(target.join("summary.txt").exists());
    assert!(!dir.path().join("ignored").exists());
}
