use std::fs;
use std::process::{Command, Output};

fn fretcav(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fretcav")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn presets_are_listed() {
    let o = fretcav(&["presets"]);
    assert!(o.status.success());
    let names: Vec<String> = stdout(&o).lines().map(String::from).collect();
    assert!(names.contains(&"fig2a_parallel".to_string()));
    assert!(names.contains(&"fig4ef".to_string()));
}

#[test]
fn sweep_writes_csv_to_the_requested_file() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    let out = dir.path().join("out.csv");
    fs::write(&conf, "solver = analytic\nformula = free-space-simple\nsweep.Delta = 0, 10, 3, lin\nOmega = 1\n").unwrap();
    let o = fretcav(&["sweep", conf.to_str().unwrap(), "--out", out.to_str().unwrap(), "--threads", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("# fretcav "));
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 4);
}

#[test]
fn sweep_of_a_preset_goes_to_stdout() {
    let o = fretcav(&["sweep", "--preset", "fig2a_perp", "--threads", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("# preset = fig2a_perp"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 1 + 4 * 2 * 199);
}

#[test]
fn configuration_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("bad.conf");
    fs::write(&conf, "solver = master\nsweep.Delta = 3, 1, 4, lin\n").unwrap();
    let o = fretcav(&["sweep", conf.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
    assert_eq!(fretcav(&["sweep", "--preset", "no_such_preset"]).status.code(), Some(1));
    assert_eq!(fretcav(&["sweep"]).status.code(), Some(1));
    assert_eq!(fretcav(&["sweep", "--preset", "fig2a_perp", "--threads", "0"]).status.code(), Some(1));
    assert_eq!(fretcav(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn failed_points_exit_with_two_but_still_write_the_table() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("bright.conf");
    let out = dir.path().join("bright.csv");
    let text = "solver = master\noutputs = J_D\npump = coherent\neta = 3\ng_D = 5\nkappa = 0.05\nncav = 2\nsweep.Delta = {0, 1}\n";
    fs::write(&conf, text).unwrap();
    let o = fretcav(&["sweep", conf.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let csv = fs::read_to_string(&out).unwrap();
    assert_eq!(csv.matches("master:truncation_not_converged").count(), 2);
}

#[test]
fn oracle_evaluates_a_closed_form() {
    let o = fretcav(&["oracle", "free-space-simple", "--params", "Delta=0,Omega=100,gamma_tot=1"]);
    assert!(o.status.success());
    let line = stdout(&o);
    let value: f64 = line.split('=').nth(1).unwrap().trim().parse().unwrap();
    let expected = 2.0 * 100.0f64.powi(2) / (1.0 + 4.0 * 100.0f64.powi(2));
    assert!((value - expected).abs() < 1e-15, "{line}");
}

#[test]
fn oracle_rejects_unknown_names_and_parameters() {
    assert_eq!(fretcav(&["oracle", "nope"]).status.code(), Some(1));
    assert_eq!(fretcav(&["oracle", "free-space-simple", "--params", "Delta"]).status.code(), Some(1));
    assert_eq!(fretcav(&["oracle", "free-space-simple", "--params", "Delta=x"]).status.code(), Some(1));
    assert_eq!(fretcav(&["oracle", "free-space-simple", "--params", "Delta=1,Delta=2"]).status.code(), Some(1));
    let list = fretcav(&["oracle", "list"]);
    assert!(list.status.success());
    assert_eq!(stdout(&list).lines().count(), 10);
}
