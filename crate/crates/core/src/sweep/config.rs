//! Text format of sweep configurations.
//!
//! A configuration is a list of UTF-8 `key = value` lines. `#` starts a
//! comment. Axes are declared as `sweep.<param> = min, max, count, lin|log`
//! or as an explicit list `sweep.<param> = {v1, v2, ...}`. A `preset = name`
//! line loads a shipped configuration first; every other line then overrides
//! it key by key.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use thiserror::Error;

use crate::analytic::FormulaId;
use crate::error::Result;
use crate::geometry::{EmitterRates, GeometrySpec, Orientation};
use crate::model::{PumpMode, PumpSpec, SystemSpec};
use crate::observables::Normalization;
use crate::polariton::optimal_cavity_detuning_or_limit;
use crate::sweep::presets;
use crate::tolerances;

/// A malformed or inconsistent configuration.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: '{key}': {message}")]
pub struct ParseError {
    /// One-based line of the offending entry, or 0 when no line applies.
    pub line: usize,
    pub key: String,
    pub message: String,
}

impl ParseError {
    fn new(line: usize, key: &str, message: impl Into<String>) -> Self {
        Self { line, key: key.to_string(), message: message.into() }
    }
}

/// Numeric parameters that can be fixed or swept.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Param {
    Delta,
    DeltaC,
    Omega,
    GammaBar,
    GammaBarScale,
    GammaD,
    GammaA,
    GammaPrime,
    GammaPhi,
    GammaNr,
    G,
    GD,
    GA,
    Kappa,
    Gamma,
    Eta,
    OmegaL,
    DNm,
    DLambda,
    LambdaNm,
    ThetaDeg,
}

impl Param {
    pub const ALL: [Param; 21] = [
        Param::Delta,
        Param::DeltaC,
        Param::Omega,
        Param::GammaBar,
        Param::GammaBarScale,
        Param::GammaD,
        Param::GammaA,
        Param::GammaPrime,
        Param::GammaPhi,
        Param::GammaNr,
        Param::G,
        Param::GD,
        Param::GA,
        Param::Kappa,
        Param::Gamma,
        Param::Eta,
        Param::OmegaL,
        Param::DNm,
        Param::DLambda,
        Param::LambdaNm,
        Param::ThetaDeg,
    ];

    /// Key used in configuration files and CSV headers.
    pub fn name(self) -> &'static str {
        match self {
            Param::Delta => "Delta",
            Param::DeltaC => "delta",
            Param::Omega => "Omega",
            Param::GammaBar => "gamma_bar",
            Param::GammaBarScale => "gamma_bar_scale",
            Param::GammaD => "gamma_D",
            Param::GammaA => "gamma_A",
            Param::GammaPrime => "gamma_prime",
            Param::GammaPhi => "gamma_phi",
            Param::GammaNr => "gamma_nr",
            Param::G => "g",
            Param::GD => "g_D",
            Param::GA => "g_A",
            Param::Kappa => "kappa",
            Param::Gamma => "Gamma",
            Param::Eta => "eta",
            Param::OmegaL => "omega_L",
            Param::DNm => "d_nm",
            Param::DLambda => "d_lambda",
            Param::LambdaNm => "lambda_nm",
            Param::ThetaDeg => "theta_deg",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }

    /// Value used when the parameter is neither fixed nor swept.
    pub fn default_value(self) -> f64 {
        let spec = SystemSpec::default();
        let rates = EmitterRates::default();
        match self {
            Param::Delta => spec.delta_da,
            Param::DeltaC => spec.delta_c,
            Param::Omega => spec.omega,
            Param::GammaBar => spec.gamma_bar,
            Param::GammaBarScale => 1.0,
            Param::GammaD => rates.gamma_d,
            Param::GammaA => rates.gamma_a,
            Param::GammaPrime => rates.gamma_prime,
            Param::GammaPhi => rates.gamma_phi,
            Param::GammaNr => rates.gamma_nr,
            Param::G | Param::GD | Param::GA => 0.0,
            Param::Kappa => spec.kappa,
            Param::Gamma => spec.pump.gamma_pump,
            Param::Eta => 0.0,
            Param::OmegaL => 0.0,
            Param::DNm | Param::DLambda => 0.0,
            Param::LambdaNm => 500.0,
            Param::ThetaDeg => 0.0,
        }
    }
}

/// Spacing of a range axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AxisScale {
    Linear,
    Log,
}

/// Points of one axis.
#[derive(Clone, Debug, PartialEq)]
pub enum AxisKind {
    Range { min: f64, max: f64, count: usize, scale: AxisScale },
    List(Vec<f64>),
}

/// One swept parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct Axis {
    pub param: Param,
    pub kind: AxisKind,
}

impl Axis {
    /// Grid points in ascending index order. Range end points are exact.
    pub fn values(&self) -> Vec<f64> {
        match &self.kind {
            AxisKind::List(v) => v.clone(),
            AxisKind::Range { min, max, count, scale } => {
                let last = (*count - 1) as f64;
                (0..*count)
                    .map(|i| {
                        if i == 0 {
                            return *min;
                        }
                        if i + 1 == *count {
                            return *max;
                        }
                        let t = i as f64 / last;
                        match scale {
                            AxisScale::Linear => min + (max - min) * t,
                            AxisScale::Log => (min.ln() + (max.ln() - min.ln()) * t).exp(),
                        }
                    })
                    .collect()
            }
        }
    }

    pub fn len(&self) -> usize {
        match &self.kind {
            AxisKind::List(v) => v.len(),
            AxisKind::Range { count, .. } => *count,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn render_value(&self) -> String {
        match &self.kind {
            AxisKind::List(v) => format!("{{{}}}", v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")),
            AxisKind::Range { min, max, count, scale } => {
                let s = if *scale == AxisScale::Log { "log" } else { "lin" };
                format!("{min}, {max}, {count}, {s}")
            }
        }
    }
}

/// Which model evaluates each grid point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverKind {
    /// Full master equation with cutoff convergence.
    MasterEquation,
    /// Linearized second-moment equations.
    Moments,
    /// A closed-form expression selected by `formula`.
    Analytic,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::MasterEquation => "master",
            SolverKind::Moments => "moments",
            SolverKind::Analytic => "analytic",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [SolverKind::MasterEquation, SolverKind::Moments, SolverKind::Analytic].into_iter().find(|s| s.name() == name)
    }
}

/// Observables that a sweep can report.
pub const OUTPUT_NAMES: [&str; 11] =
    ["J", "J_D", "J_A", "J_r", "p_D", "p_A", "n", "concurrence", "hopfield_MD", "hopfield_MC", "hopfield_MA"];

/// Outputs that do not depend on the solver.
pub const POLARITON_OUTPUTS: [&str; 3] = ["hopfield_MD", "hopfield_MC", "hopfield_MA"];

/// A fully resolved sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub preset: Option<String>,
    pub solvers: Vec<SolverKind>,
    pub formula: Option<FormulaId>,
    pub outputs: Vec<&'static str>,
    /// `None` selects the natural normalization of each point's pump.
    pub normalization: Option<Normalization>,
    pub pump: PumpMode,
    pub fixed: BTreeMap<Param, f64>,
    /// Whether the cavity detuning is set to the optimal value at each point.
    pub delta_optimal: bool,
    pub axes: Vec<Axis>,
    pub output_path: Option<PathBuf>,
    /// Starting cavity cutoff of the convergence loop.
    pub n_cav: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            preset: None,
            solvers: vec![SolverKind::MasterEquation],
            formula: None,
            outputs: vec!["J"],
            normalization: None,
            pump: PumpMode::Incoherent,
            fixed: BTreeMap::new(),
            delta_optimal: false,
            axes: Vec::new(),
            output_path: None,
            n_cav: tolerances::DEFAULT_N_CAV,
        }
    }
}

#[derive(Clone, Debug)]
struct Entry {
    line: usize,
    key: String,
    value: String,
    /// 0 for preset lines, 1 for lines of the file itself.
    layer: u8,
}

fn entries(text: &str, layer: u8) -> std::result::Result<Vec<Entry>, ParseError> {
    let mut out: Vec<Entry> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| ParseError::new(line, content, "expected 'key = value'"))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(ParseError::new(line, key, "empty key"));
        }
        if out.iter().any(|e| e.key == key) {
            return Err(ParseError::new(line, key, "duplicate key"));
        }
        out.push(Entry { line, key: key.to_string(), value: value.to_string(), layer });
    }
    Ok(out)
}

fn merged(text: &str) -> std::result::Result<(Option<String>, Vec<Entry>), ParseError> {
    let own = entries(text, 1)?;
    let Some(p) = own.iter().find(|e| e.key == "preset") else {
        return Ok((None, own));
    };
    let name = p.value.clone();
    let base_text =
        presets::preset(&name).ok_or_else(|| ParseError::new(p.line, "preset", format!("unknown preset '{name}'")))?;
    let mut all = entries(base_text, 0)?;
    for e in own.into_iter().filter(|e| e.key != "preset") {
        if let Some(slot) = all.iter_mut().find(|b| b.key == e.key) {
            *slot = e;
        } else {
            all.push(e);
        }
    }
    Ok((Some(name), all))
}

fn number(e: &Entry, s: &str) -> std::result::Result<f64, ParseError> {
    let v: f64 = s.trim().parse().map_err(|_| ParseError::new(e.line, &e.key, format!("'{}' is not a number", s.trim())))?;
    if !v.is_finite() {
        return Err(ParseError::new(e.line, &e.key, "value must be finite"));
    }
    Ok(v)
}

fn list(s: &str) -> Vec<&str> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty()).collect()
}

fn parse_axis(e: &Entry, param: Param) -> std::result::Result<Axis, ParseError> {
    let v = e.value.trim();
    let kind = if let Some(inner) = v.strip_prefix('{') {
        let inner = inner.strip_suffix('}').ok_or_else(|| ParseError::new(e.line, &e.key, "unterminated '{' list"))?;
        let values = list(inner).into_iter().map(|x| number(e, x)).collect::<std::result::Result<Vec<_>, _>>()?;
        AxisKind::List(values)
    } else {
        let parts = list(v);
        if parts.len() != 4 {
            return Err(ParseError::new(e.line, &e.key, "expected 'min, max, count, lin|log' or '{v1, v2, ...}'"));
        }
        let (min, max) = (number(e, parts[0])?, number(e, parts[1])?);
        let count: usize =
            parts[2].parse().map_err(|_| ParseError::new(e.line, &e.key, format!("'{}' is not a point count", parts[2])))?;
        let scale = match parts[3] {
            "lin" => AxisScale::Linear,
            "log" => AxisScale::Log,
            other => return Err(ParseError::new(e.line, &e.key, format!("spacing must be 'lin' or 'log', got '{other}'"))),
        };
        if !(min < max) {
            return Err(ParseError::new(e.line, &e.key, "range needs min < max"));
        }
        if scale == AxisScale::Log && min <= 0.0 {
            return Err(ParseError::new(e.line, &e.key, "log spacing needs a positive range"));
        }
        AxisKind::Range { min, max, count, scale }
    };
    let axis = Axis { param, kind };
    if axis.len() < 2 {
        return Err(ParseError::new(e.line, &e.key, "an axis needs at least 2 points"));
    }
    Ok(axis)
}

/// Parses a configuration, resolving a `preset` line if present.
pub fn parse_config(text: &str) -> std::result::Result<SweepConfig, ParseError> {
    let (preset, all) = merged(text)?;
    let mut cfg = SweepConfig { preset, ..SweepConfig::default() };
    let mut lines: BTreeMap<String, usize> = BTreeMap::new();

    // A fixed value and an axis for the same parameter: the later layer wins.
    let mut keep = vec![true; all.len()];
    for (i, e) in all.iter().enumerate() {
        if let Some(p) = e.key.strip_prefix("sweep.") {
            if let Some(j) = all.iter().position(|f| f.key == p) {
                if all[j].layer == e.layer {
                    return Err(ParseError::new(e.line, &e.key, format!("'{p}' is both fixed and swept")));
                }
                let drop = if all[j].layer > e.layer { i } else { j };
                keep[drop] = false;
            }
        }
    }

    for (e, _) in all.iter().zip(&keep).filter(|(_, k)| **k) {
        lines.insert(e.key.clone(), e.line);
        let key = e.key.as_str();
        match key {
            "solver" => {
                let mut solvers = Vec::new();
                for name in list(&e.value) {
                    let s = SolverKind::from_name(name)
                        .ok_or_else(|| ParseError::new(e.line, key, format!("unknown solver '{name}'")))?;
                    if !solvers.contains(&s) {
                        solvers.push(s);
                    }
                }
                if solvers.is_empty() {
                    return Err(ParseError::new(e.line, key, "at least one solver is required"));
                }
                cfg.solvers = solvers;
            }
            "formula" => {
                cfg.formula = Some(
                    FormulaId::from_name(&e.value)
                        .ok_or_else(|| ParseError::new(e.line, key, format!("unknown formula '{}'", e.value)))?,
                );
            }
            "outputs" => {
                let mut outputs = Vec::new();
                for name in list(&e.value) {
                    let o = OUTPUT_NAMES
                        .into_iter()
                        .find(|o| *o == name)
                        .ok_or_else(|| ParseError::new(e.line, key, format!("unknown output '{name}'")))?;
                    if !outputs.contains(&o) {
                        outputs.push(o);
                    }
                }
                if outputs.is_empty() {
                    return Err(ParseError::new(e.line, key, "at least one output is required"));
                }
                cfg.outputs = outputs;
            }
            "normalization" => {
                cfg.normalization = match e.value.as_str() {
                    "auto" => None,
                    "per_Gamma" => Some(Normalization::PerGamma),
                    "per_eta" => Some(Normalization::PerEta),
                    "raw" => Some(Normalization::Raw),
                    other => {
                        return Err(ParseError::new(
                            e.line,
                            key,
                            format!("expected auto, per_Gamma, per_eta or raw, got '{other}'"),
                        ))
                    }
                };
            }
            "pump" => {
                cfg.pump = match e.value.as_str() {
                    "incoherent" => PumpMode::Incoherent,
                    "coherent" => PumpMode::Coherent,
                    "none" => PumpMode::None,
                    other => {
                        return Err(ParseError::new(e.line, key, format!("expected incoherent, coherent or none, got '{other}'")))
                    }
                };
            }
            "output" => cfg.output_path = Some(PathBuf::from(&e.value)),
            "ncav" => {
                let n: usize =
                    e.value.parse().map_err(|_| ParseError::new(e.line, key, format!("'{}' is not a cutoff", e.value)))?;
                if n < 1 {
                    return Err(ParseError::new(e.line, key, "cutoff must be at least 1"));
                }
                cfg.n_cav = n;
            }
            "delta" if e.value == "optimal" => cfg.delta_optimal = true,
            _ => {
                if let Some(name) = key.strip_prefix("sweep.") {
                    let p = Param::from_name(name)
                        .ok_or_else(|| ParseError::new(e.line, key, format!("unknown parameter '{name}'")))?;
                    cfg.axes.push(parse_axis(e, p)?);
                } else {
                    let p = Param::from_name(key).ok_or_else(|| ParseError::new(e.line, key, "unknown key"))?;
                    cfg.fixed.insert(p, number(e, &e.value)?);
                }
            }
        }
    }
    validate(&cfg, &lines)?;
    Ok(cfg)
}

fn validate(cfg: &SweepConfig, lines: &BTreeMap<String, usize>) -> std::result::Result<(), ParseError> {
    let line = |k: &str| lines.get(k).or_else(|| lines.get(&format!("sweep.{k}"))).copied().unwrap_or(0);
    let err = |k: &str, m: &str| Err(ParseError::new(line(k), k, m));
    let has = |p: Param| cfg.has(p);
    if cfg.solvers.contains(&SolverKind::Analytic) && cfg.formula.is_none() {
        return err("solver", "the analytic solver needs a 'formula'");
    }
    if cfg.solvers.contains(&SolverKind::Moments) {
        if cfg.pump == PumpMode::Coherent {
            return err("solver", "the moment equations do not support a coherent drive");
        }
        if cfg.outputs.contains(&"concurrence") {
            return err("outputs", "concurrence needs the master-equation solver");
        }
    }
    if cfg.outputs.contains(&"concurrence") && !cfg.solvers.contains(&SolverKind::MasterEquation) {
        return err("outputs", "concurrence needs the master-equation solver");
    }
    if has(Param::DNm) && has(Param::DLambda) {
        return err("d_lambda", "give the separation either as d_nm or as d_lambda");
    }
    if has(Param::DNm) || has(Param::DLambda) {
        for p in [Param::Omega, Param::GammaBar] {
            if has(p) {
                return err(p.name(), "set by the separation; remove it or the separation");
            }
        }
    }
    if has(Param::G) && (has(Param::GD) || has(Param::GA)) {
        return err("g", "'g' sets both couplings; do not combine it with g_D or g_A");
    }
    if cfg.delta_optimal && has(Param::DeltaC) {
        return err("delta", "'delta = optimal' cannot be swept");
    }
    Ok(())
}

impl SweepConfig {
    /// Whether a parameter is fixed or swept.
    pub fn has(&self, p: Param) -> bool {
        self.fixed.contains_key(&p) || self.axes.iter().any(|a| a.param == p)
    }

    /// Number of grid points.
    pub fn point_count(&self) -> usize {
        self.axes.iter().map(Axis::len).product()
    }

    /// Every grid point, row-major over the axes in declaration order.
    pub fn points(&self) -> Vec<Vec<f64>> {
        let values: Vec<Vec<f64>> = self.axes.iter().map(Axis::values).collect();
        let mut out = vec![Vec::new()];
        for v in &values {
            out = out.iter().flat_map(|prefix| v.iter().map(move |x| [prefix.as_slice(), &[*x]].concat())).collect();
        }
        out
    }

    /// The physical parameters at one grid point.
    pub fn spec_at(&self, point: &[f64]) -> Result<SystemSpec> {
        let get = |p: Param| {
            self.axes
                .iter()
                .position(|a| a.param == p)
                .map(|i| point[i])
                .or_else(|| self.fixed.get(&p).copied())
                .unwrap_or_else(|| p.default_value())
        };
        let rates = EmitterRates {
            gamma_d: get(Param::GammaD),
            gamma_a: get(Param::GammaA),
            gamma_prime: get(Param::GammaPrime),
            gamma_phi: get(Param::GammaPhi),
            gamma_nr: get(Param::GammaNr),
        };
        let (g_d, g_a) = if self.has(Param::G) { (get(Param::G), get(Param::G)) } else { (get(Param::GD), get(Param::GA)) };
        let pump = match self.pump {
            PumpMode::Incoherent => PumpSpec::incoherent(get(Param::Gamma)),
            PumpMode::Coherent => PumpSpec::coherent(get(Param::Eta), get(Param::OmegaL)),
            PumpMode::None => PumpSpec::none(),
        };
        let mut spec = SystemSpec {
            delta_da: get(Param::Delta),
            delta_c: get(Param::DeltaC),
            omega: get(Param::Omega),
            gamma_bar: get(Param::GammaBar),
            rates,
            g_d,
            g_a,
            kappa: get(Param::Kappa),
            pump,
            n_cav: self.n_cav,
        };
        if self.has(Param::DNm) || self.has(Param::DLambda) {
            let lambda = get(Param::LambdaNm);
            let sep = if self.has(Param::DNm) { get(Param::DNm) } else { get(Param::DLambda) * lambda };
            let orientation = match get(Param::ThetaDeg) {
                0.0 => Orientation::Parallel,
                90.0 => Orientation::Perpendicular,
                t => Orientation::Angle(t),
            };
            spec = spec.with_geometry(&GeometrySpec::oriented(sep, lambda, orientation)?)?;
        }
        spec.gamma_bar *= get(Param::GammaBarScale);
        if self.delta_optimal {
            spec.delta_c = optimal_cavity_detuning_or_limit(spec.delta_da, spec.g_d, spec.g_a)?;
        }
        spec.validate()?;
        Ok(spec)
    }

    /// Canonical text of the resolved configuration. The output path is
    /// omitted so that the text depends only on what is computed.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let names: Vec<&str> = self.solvers.iter().map(|s| s.name()).collect();
        let _ = writeln!(s, "solver = {}", names.join(", "));
        if let Some(f) = self.formula {
            let _ = writeln!(s, "formula = {}", f.name());
        }
        let _ = writeln!(s, "outputs = {}", self.outputs.join(", "));
        let _ = writeln!(s, "normalization = {}", self.normalization.map_or("auto", Normalization::name));
        let _ = writeln!(s, "pump = {}", self.pump.name());
        let _ = writeln!(s, "ncav = {}", self.n_cav);
        if self.delta_optimal {
            let _ = writeln!(s, "delta = optimal");
        }
        for (p, v) in &self.fixed {
            let _ = writeln!(s, "{} = {v}", p.name());
        }
        for a in &self.axes {
            let _ = writeln!(s, "sweep.{} = {}", a.param.name(), a.render_value());
        }
        s
    }
}
