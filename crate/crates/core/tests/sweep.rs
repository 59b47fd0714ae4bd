use approx::assert_relative_eq;
use fretcav::analytic::j_free_space_full;
use fretcav::sweep::{parse_config, presets, run_sweep};

const FREE_SPACE: &str = "
solver = master, analytic
formula = free-space-full
outputs = J, p_D, p_A
Gamma = 0.001
gamma_prime = 0.1
gamma_bar = 0.5
sweep.Delta = 0, 40, 3, lin
sweep.Omega = {0.5, 5}
";

#[test]
fn master_and_closed_form_columns_agree_on_a_free_space_grid() {
    let cfg = parse_config(FREE_SPACE).unwrap();
    let out = run_sweep(&cfg, Some(1)).unwrap();
    assert_eq!(out.rows.len(), 6);
    assert_eq!(out.failures(), 0);
    let (deltas, omegas) = (out.column("Delta").unwrap(), out.column("Omega").unwrap());
    let master = out.column("J_master").unwrap();
    let analytic = out.column("J_analytic").unwrap();
    for i in 0..6 {
        let expected = j_free_space_full(deltas[i], omegas[i], 1.0, 0.1, 0.0, 0.5).value;
        assert_relative_eq!(analytic[i], expected, max_relative = 1e-14);
        assert_relative_eq!(master[i], expected, max_relative = 1e-2);
    }
    assert!(out.column("gap_J").unwrap().iter().all(|g| *g < 1e-2));
}

#[test]
fn axes_iterate_row_major_with_the_last_axis_fastest() {
    let out = run_sweep(&parse_config(FREE_SPACE).unwrap(), Some(1)).unwrap();
    assert_eq!(out.column("Delta").unwrap(), vec![0.0, 0.0, 20.0, 20.0, 40.0, 40.0]);
    assert_eq!(out.column("Omega").unwrap(), vec![0.5, 5.0, 0.5, 5.0, 0.5, 5.0]);
}

#[test]
fn csv_carries_metadata_header_and_status() {
    let csv = run_sweep(&parse_config(FREE_SPACE).unwrap(), Some(1)).unwrap().to_csv_string();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# fretcav "));
    let header = csv.lines().find(|l| !l.starts_with('#')).unwrap();
    assert!(header.starts_with("Delta,Omega,"));
    assert!(header.ends_with(",status"));
    assert!(csv.contains("# points = 6"));
    let data: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(data.len(), 6);
    assert!(data.iter().all(|l| l.ends_with(",ok")));
}

#[test]
fn moment_solver_tracks_the_master_equation_at_weak_pump() {
    let text = "
solver = master, moments
outputs = J, J_D, J_A, n
Gamma = 0.001
Delta = 3
Omega = 0.4
g_D = 2
g_A = 1.5
kappa = 4
sweep.delta = -6, 6, 5, lin
";
    let out = run_sweep(&parse_config(text).unwrap(), Some(1)).unwrap();
    assert_eq!(out.failures(), 0);
    for q in ["J", "J_D", "J_A", "n"] {
        let m = out.column(&format!("{q}_master")).unwrap();
        let c = out.column(&format!("{q}_moments")).unwrap();
        for (a, b) in m.iter().zip(&c) {
            assert_relative_eq!(*a, *b, max_relative = 1e-2);
        }
    }
}

#[test]
fn file_keys_override_the_preset() {
    let base = parse_config("preset = fig2a_parallel").unwrap();
    let narrowed = parse_config("preset = fig2a_parallel\nsweep.gamma_prime = {0.1, 1}\n").unwrap();
    assert_eq!(base.point_count(), 4 * 2 * 199);
    assert_eq!(narrowed.point_count(), 2 * 2 * 199);
    let fixed = parse_config("preset = fig2a_parallel\ngamma_prime = 0.1\n").unwrap();
    assert_eq!(fixed.point_count(), 2 * 199);
}

#[test]
fn every_preset_parses_and_is_nonempty() {
    for name in presets::names() {
        let cfg = parse_config(&format!("preset = {name}")).unwrap();
        assert!(cfg.point_count() > 1, "{name}");
    }
}

#[test]
fn free_space_preset_reverses_the_flow_for_parallel_dipoles() {
    let out = run_sweep(&parse_config("preset = fig2a_parallel").unwrap(), Some(1)).unwrap();
    let (gp, scale, j) = (out.column("gamma_prime").unwrap(), out.column("gamma_bar_scale").unwrap(), out.column("J_analytic").unwrap());
    let negative = |s: f64| (0..j.len()).filter(|&i| gp[i] == 0.1 && scale[i] == s && j[i] < 0.0).count();
    assert!(negative(1.0) > 0);
    assert_eq!(negative(0.0), 0);
}

#[test]
fn bright_cavity_reports_truncation_failure_per_row() {
    let text = "
solver = master
outputs = J_D, n
pump = coherent
eta = 3
omega_L = 0
g_D = 5
kappa = 0.05
ncav = 2
sweep.Delta = {0, 1}
";
    let out = run_sweep(&parse_config(text).unwrap(), Some(1)).unwrap();
    assert_eq!(out.failures(), 2);
    assert!(out.rows.iter().all(|r| r.status.contains("truncation_not_converged")));
    assert!(out.column("J_D_master").unwrap().iter().all(|v| v.is_nan()));
}

#[test]
fn invalid_configurations_are_rejected_with_a_line_number() {
    for (text, line) in [
        ("solver = analytic\noutputs = J\nsweep.Delta = 0, 1, 3, lin\n", 1),
        ("solver = master\nsweep.Delta = 1, 0, 3, lin\n", 2),
        ("solver = master\nsweep.Omega = 0, 1, 3, log\n", 2),
        ("solver = master\nbogus = 3\n", 2),
        ("solver = moments\noutputs = concurrence\nsweep.Delta = {0, 1}\n", 2),
    ] {
        let err = parse_config(text).unwrap_err();
        assert_eq!(err.line, line, "{text:?}: {err}");
    }
}
