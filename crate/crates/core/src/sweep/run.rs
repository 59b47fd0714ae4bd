//! Evaluation of a sweep grid and CSV output.

use std::io::{self, Write};

use rayon::prelude::*;

use crate::analytic::{
    j_a_coherent_cavity, j_cavity_for_spec, j_coherent_free, j_distinct_emitters, j_free_space_full,
    j_free_space_simple, j_intermediate_level, FormulaId,
};
use crate::driver::{default_normalization, solve_converged, Observables};
use crate::error::Result;
use crate::model::SystemSpec;
use crate::moments::moment_steady_state;
use crate::observables::{FlowReport, Normalization};
use crate::polariton::{polariton_modes, ACCEPTOR, CAVITY, DONOR, MIDDLE};
use crate::sweep::config::{ParseError, SolverKind, SweepConfig, POLARITON_OUTPUTS};

/// One CSV field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Cell {
    Real(f64),
    Count(usize),
    /// A value that could not be computed; the row status says why.
    Missing,
}

impl Cell {
    /// The numeric value, with [`Cell::Missing`] as NaN.
    pub fn value(&self) -> f64 {
        match self {
            Cell::Real(v) => *v,
            Cell::Count(n) => *n as f64,
            Cell::Missing => f64::NAN,
        }
    }

    fn render(&self) -> String {
        match self {
            Cell::Real(v) => format!("{v:.16e}"),
            Cell::Count(n) => n.to_string(),
            Cell::Missing => "NaN".to_string(),
        }
    }
}

/// One grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub cells: Vec<Cell>,
    /// `ok`, or `;`-separated `<stage>:<error kind>` entries.
    pub status: String,
}

impl Row {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

/// Table produced by [`run_sweep`].
#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    /// Lines written before the header, without the leading `# `.
    pub metadata: Vec<String>,
    /// Column names, excluding the final `status` column.
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
}

impl SweepResult {
    /// Values of a named column.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r.cells[i].value()).collect())
    }

    /// Number of rows whose status is not `ok`.
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| !r.is_ok()).count()
    }

    /// Writes `#` metadata lines, a header row and one row per point.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        for line in &self.metadata {
            writeln!(w, "# {line}")?;
        }
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(self.columns.iter().map(String::as_str).chain(["status"]))?;
        for row in &self.rows {
            let fields: Vec<String> = row.cells.iter().map(Cell::render).chain([row.status.clone()]).collect();
            csv.write_record(&fields)?;
        }
        csv.flush()
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("CSV output is UTF-8")
    }
}

/// Quantity computed by a closed form, its value and the normalization the
/// value is expressed in.
pub fn analytic_value(formula: FormulaId, spec: &SystemSpec) -> Result<(&'static str, f64, Normalization)> {
    let r = &spec.rates;
    let (d, o) = (spec.delta_da, spec.omega);
    let per_gamma = |v: f64| Ok(("J", v, Normalization::PerGamma));
    match formula {
        FormulaId::FreeSpaceFull => {
            per_gamma(j_free_space_full(d, o, r.gamma_d, r.gamma_prime, r.gamma_phi, spec.gamma_bar).value)
        }
        FormulaId::FreeSpaceSimple => per_gamma(j_free_space_simple(d, o, r.gamma_tot_d()).value),
        FormulaId::DistinctEmitters => per_gamma(j_distinct_emitters(d, o, r.gamma_tot_d(), r.gamma_tot_a()).value),
        FormulaId::CavityCooperativity => per_gamma(j_cavity_for_spec(spec).value),
        FormulaId::IntermediateLevel => per_gamma(j_intermediate_level(o, r.gamma_d, r.gamma_nr).0.value),
        FormulaId::CoherentFree => {
            Ok(("J", j_coherent_free(d, o, r.gamma_d, spec.pump.eta, spec.pump.omega_l).value, Normalization::Raw))
        }
        FormulaId::CoherentCavity => {
            let v = j_a_coherent_cavity(d, spec.delta_c, spec.g_d, spec.g_a, r.gamma_d, spec.pump.eta, spec.pump.omega_l)?;
            Ok(("J_A", v.value, Normalization::Raw))
        }
    }
}

/// Name of the quantity a closed form computes.
pub fn analytic_quantity(formula: FormulaId) -> &'static str {
    match formula {
        FormulaId::CoherentCavity => "J_A",
        _ => "J",
    }
}

fn scale_for(norm: Normalization, spec: &SystemSpec) -> f64 {
    match norm {
        Normalization::PerGamma => spec.pump.gamma_pump,
        Normalization::PerEta => spec.pump.eta,
        Normalization::Raw => 1.0,
    }
}

/// Relative deviation of `value` from `reference`; zero when both vanish.
pub fn relative_gap(value: f64, reference: f64) -> f64 {
    if value == reference {
        0.0
    } else {
        (value - reference).abs() / reference.abs()
    }
}

struct Plan {
    columns: Vec<String>,
    flow_outputs: Vec<&'static str>,
    polariton_outputs: Vec<&'static str>,
    gap: Option<&'static str>,
}

fn plan(cfg: &SweepConfig) -> Plan {
    let mut columns: Vec<String> = cfg.axes.iter().map(|a| a.param.name().to_string()).collect();
    let flow_outputs: Vec<&'static str> =
        cfg.outputs.iter().copied().filter(|o| !POLARITON_OUTPUTS.contains(o)).collect();
    let polariton_outputs: Vec<&'static str> =
        cfg.outputs.iter().copied().filter(|o| POLARITON_OUTPUTS.contains(o)).collect();
    for s in &cfg.solvers {
        match s {
            SolverKind::MasterEquation | SolverKind::Moments => {
                columns.extend(flow_outputs.iter().map(|o| format!("{o}_{}", s.name())));
            }
            SolverKind::Analytic => {
                let q = analytic_quantity(cfg.formula.expect("validated"));
                columns.push(format!("{q}_analytic"));
            }
        }
    }
    columns.extend(polariton_outputs.iter().map(|o| o.to_string()));
    let gap = (cfg.solvers.contains(&SolverKind::MasterEquation) && cfg.solvers.contains(&SolverKind::Analytic))
        .then(|| analytic_quantity(cfg.formula.expect("validated")));
    if let Some(q) = gap {
        columns.push(format!("gap_{q}"));
    }
    if cfg.solvers.contains(&SolverKind::MasterEquation) {
        columns.push("ncav_used".into());
        columns.push("truncation_change".into());
    }
    Plan { columns, flow_outputs, polariton_outputs, gap }
}

fn flow_value(flows: &FlowReport, name: &str) -> f64 {
    Observables { flows: *flows, concurrence: f64::NAN }.get(name).expect("known output")
}

fn evaluate(cfg: &SweepConfig, plan: &Plan, point: &[f64]) -> Row {
    let mut cells: Vec<Cell> = point.iter().map(|&v| Cell::Real(v)).collect();
    let mut status: Vec<String> = Vec::new();
    let spec = match cfg.spec_at(point) {
        Ok(s) => s,
        Err(e) => {
            cells.resize(plan.columns.len(), Cell::Missing);
            return Row { cells, status: format!("spec:{}", e.kind()) };
        }
    };
    let (norm, scale) = match cfg.normalization {
        Some(n) => (n, scale_for(n, &spec)),
        None => default_normalization(&spec),
    };
    let mut master_value = None;
    let mut analytic = None;
    let mut truncation = None;
    for s in &cfg.solvers {
        match s {
            SolverKind::MasterEquation => match solve_converged(&spec) {
                Ok(c) => {
                    let flows = c.observables.flows.normalized(norm, scale);
                    for o in &plan.flow_outputs {
                        let v = if *o == "concurrence" { c.observables.concurrence } else { flow_value(&flows, o) };
                        cells.push(Cell::Real(v));
                    }
                    if let Some(q) = plan.gap {
                        master_value = Some(flow_value(&flows, q));
                    }
                    truncation = Some((c.ncav_used, c.change));
                }
                Err(e) => {
                    cells.extend(plan.flow_outputs.iter().map(|_| Cell::Missing));
                    status.push(format!("master:{}", e.kind()));
                }
            },
            SolverKind::Moments => match moment_steady_state(&spec) {
                Ok(m) => {
                    let flows = m.flows(&spec).normalized(norm, scale);
                    cells.extend(plan.flow_outputs.iter().map(|o| Cell::Real(flow_value(&flows, o))));
                }
                Err(e) => {
                    cells.extend(plan.flow_outputs.iter().map(|_| Cell::Missing));
                    status.push(format!("moments:{}", e.kind()));
                }
            },
            SolverKind::Analytic => match analytic_value(cfg.formula.expect("validated"), &spec) {
                Ok((_, v, native)) => {
                    let v = if native == norm {
                        v
                    } else {
                        let raw = if native == Normalization::PerGamma { v * spec.pump.gamma_pump } else { v };
                        raw / scale
                    };
                    analytic = Some(v);
                    cells.push(Cell::Real(v));
                }
                Err(e) => {
                    cells.push(Cell::Missing);
                    status.push(format!("analytic:{}", e.kind()));
                }
            },
        }
    }
    if !plan.polariton_outputs.is_empty() {
        let h = polariton_modes(spec.delta_da, spec.delta_c, spec.g_d, spec.g_a).hopfield[MIDDLE];
        for o in &plan.polariton_outputs {
            let k = match *o {
                "hopfield_MD" => DONOR,
                "hopfield_MC" => CAVITY,
                _ => ACCEPTOR,
            };
            cells.push(Cell::Real(h[k]));
        }
    }
    if plan.gap.is_some() {
        cells.push(match (master_value, analytic) {
            (Some(m), Some(a)) => Cell::Real(relative_gap(m, a)),
            _ => Cell::Missing,
        });
    }
    if cfg.solvers.contains(&SolverKind::MasterEquation) {
        match truncation {
            Some((n, change)) => cells.extend([Cell::Count(n), Cell::Real(change)]),
            None => cells.extend([Cell::Missing, Cell::Missing]),
        }
    }
    let status = if status.is_empty() { "ok".to_string() } else { status.join(";") };
    Row { cells, status }
}

/// Evaluates every grid point of `cfg`.
///
/// Points are independent and run on `threads` workers (the global pool when
/// `None`). Rows come back in grid order whatever the thread count, and a
/// failing point only marks its own row.
pub fn run_sweep(cfg: &SweepConfig, threads: Option<usize>) -> std::result::Result<SweepResult, ParseError> {
    let plan = plan(cfg);
    let points = cfg.points();
    let compute = || points.par_iter().map(|p| evaluate(cfg, &plan, p)).collect::<Vec<_>>();
    let rows = match threads {
        None => compute(),
        Some(0) => return Err(ParseError { line: 0, key: "threads".into(), message: "need at least one thread".into() }),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| ParseError { line: 0, key: "threads".into(), message: e.to_string() })?
            .install(compute),
    };
    let mut metadata = vec![format!("fretcav {}", env!("CARGO_PKG_VERSION"))];
    if let Some(p) = &cfg.preset {
        metadata.push(format!("preset = {p}"));
    }
    metadata.extend(cfg.render().lines().map(str::to_string));
    metadata.push(format!("points = {}", rows.len()));
    Ok(SweepResult { metadata, columns: plan.columns, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep::config::parse_config;

    #[test]
    fn columns_follow_solvers_and_outputs() {
        let cfg = parse_config(
            "solver = master, analytic\nformula = free-space-full\noutputs = J, p_D\nsweep.Omega = {0.5, 1}",
        )
        .unwrap();
        let r = run_sweep(&cfg, Some(1)).unwrap();
        assert_eq!(r.columns, ["Omega", "J_master", "p_D_master", "J_analytic", "gap_J", "ncav_used", "truncation_change"]);
        assert_eq!(r.rows.len(), 2);
        assert!(r.rows.iter().all(Row::is_ok));
        assert!(r.column("gap_J").unwrap().iter().all(|g| *g < 1e-2));
    }

    #[test]
    fn failures_are_recorded_per_row() {
        let cfg = parse_config(
            "solver = analytic\nformula = coherent-cavity\npump = coherent\neta = 0.01\ng = 1\nsweep.omega_L = {0, 1}",
        )
        .unwrap();
        let r = run_sweep(&cfg, Some(1)).unwrap();
        assert_eq!(r.rows[0].status, "analytic:singular_resonance");
        assert!(r.rows[1].is_ok());
        assert_eq!(r.failures(), 1);
        let csv = r.to_csv_string();
        assert!(csv.contains(",NaN,analytic:singular_resonance\n"), "{csv}");
    }

    #[test]
    fn csv_has_metadata_header_and_full_precision() {
        let cfg = parse_config("solver = moments\noutputs = J, n\nOmega = 1\nsweep.Delta = {0, 3}").unwrap();
        let csv = run_sweep(&cfg, None).unwrap().to_csv_string();
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[0].starts_with("# fretcav "));
        let header = lines.iter().position(|l| !l.starts_with('#')).unwrap();
        assert_eq!(lines[header], "Delta,J_moments,n_moments,status");
        let first: Vec<&str> = lines[header + 1].split(',').collect();
        assert_eq!(first[0], "0.0000000000000000e0");
        let j: f64 = first[1].parse().unwrap();
        assert!((j - 2.0 / (4.0 + 1.001f64.powi(2))).abs() < 1e-3 * j);
    }

    #[test]
    fn thread_count_does_not_change_output() {
        let cfg = parse_config("outputs = J, concurrence\nGamma = 0.5\nsweep.Delta = 0, 4, 5, lin\nsweep.Omega = {1, 2}")
            .unwrap();
        let serial = run_sweep(&cfg, Some(1)).unwrap().to_csv_string();
        let parallel = run_sweep(&cfg, Some(3)).unwrap().to_csv_string();
        assert_eq!(serial, parallel);
    }

    #[test]
    fn explicit_normalization_converts_closed_forms() {
        let cfg = parse_config("solver = analytic\nformula = free-space-simple\nnormalization = raw\nGamma = 0.002\nOmega = 1")
            .unwrap();
        let r = run_sweep(&cfg, Some(1)).unwrap();
        let v = r.column("J_analytic").unwrap()[0];
        assert!((v - 0.002 * j_free_space_simple(0.0, 1.0, 1.0).value).abs() < 1e-18);
    }
}
