use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fretcav::analytic::{oracle, oracle_parameters, FormulaId, EXTRA_ORACLES};
use fretcav::checks;
use fretcav::sweep::{parse_config, presets, run_sweep};

const EXIT_CONFIG: u8 = 1;
const EXIT_SOLVER: u8 = 2;
const EXIT_TOLERANCE: u8 = 3;

#[derive(Parser)]
#[command(name = "fretcav", version, about = "Donor-acceptor energy transfer in free space and in a cavity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a parameter sweep and write a CSV table.
    Sweep {
        /// Configuration file. Its keys override those of --preset.
        config: Option<PathBuf>,
        /// Start from a shipped preset.
        #[arg(long)]
        preset: Option<String>,
        /// Output file; the configured path, or stdout, by default.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; all cores by default.
        #[arg(long)]
        threads: Option<usize>,
        /// Starting cavity photon cutoff.
        #[arg(long)]
        ncav: Option<usize>,
    },
    /// Evaluate one closed-form expression.
    Oracle {
        /// Formula name; `list` prints every name with its parameters.
        id: String,
        /// Comma-separated `key=value` pairs.
        #[arg(long, default_value = "")]
        params: String,
    },
    /// Run the analytic-versus-numeric cross-validation suite.
    Check,
    /// List the shipped presets.
    Presets,
}

fn fail(code: u8, message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(code)
}

fn sweep(
    config: Option<PathBuf>,
    preset: Option<String>,
    out: Option<PathBuf>,
    threads: Option<usize>,
    ncav: Option<usize>,
) -> ExitCode {
    let mut text = String::new();
    if let Some(name) = &preset {
        text.push_str(&format!("preset = {name}\n"));
    }
    if let Some(path) = &config {
        match fs::read_to_string(path) {
            Ok(body) => {
                if preset.is_some() && body.lines().any(|l| l.split('#').next().unwrap_or("").trim().starts_with("preset")) {
                    return fail(EXIT_CONFIG, "give the preset either on the command line or in the file, not both");
                }
                text.push_str(&body);
            }
            Err(e) => return fail(EXIT_CONFIG, format!("{}: {e}", path.display())),
        }
    }
    if config.is_none() && preset.is_none() {
        return fail(EXIT_CONFIG, "need a configuration file or --preset");
    }
    let mut cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    if let Some(n) = ncav {
        if n == 0 {
            return fail(EXIT_CONFIG, "--ncav must be at least 1");
        }
        cfg.n_cav = n;
    }
    let result = match run_sweep(&cfg, threads) {
        Ok(r) => r,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    let written = match out.or_else(|| cfg.output_path.clone()) {
        Some(path) => fs::File::create(&path)
            .and_then(|f| result.write_csv(io::BufWriter::new(f)))
            .map_err(|e| format!("{}: {e}", path.display())),
        None => result.write_csv(io::stdout().lock()).map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        return fail(EXIT_SOLVER, e);
    }
    let failures = result.failures();
    if failures > 0 {
        eprintln!("{failures} of {} points failed; see the status column", result.rows.len());
        return ExitCode::from(EXIT_SOLVER);
    }
    ExitCode::SUCCESS
}

fn parse_params(text: &str) -> Result<BTreeMap<String, f64>, String> {
    let mut out = BTreeMap::new();
    for pair in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = pair.split_once('=').ok_or_else(|| format!("expected key=value, got '{pair}'"))?;
        let v: f64 = v.trim().parse().map_err(|_| format!("'{}' is not a number", v.trim()))?;
        if out.insert(k.trim().to_string(), v).is_some() {
            return Err(format!("parameter '{}' given twice", k.trim()));
        }
    }
    Ok(out)
}

fn run_oracle(id: &str, params: &str) -> ExitCode {
    let mut stdout = io::stdout().lock();
    if id == "list" {
        let names = FormulaId::ALL.iter().map(|f| f.name()).chain(EXTRA_ORACLES);
        for name in names {
            let table = oracle_parameters(name).unwrap_or(&[]);
            let args: Vec<String> = table.iter().map(|(k, v)| format!("{k}={v}")).collect();
            let _ = writeln!(stdout, "{name} {}", args.join(","));
        }
        return ExitCode::SUCCESS;
    }
    if oracle_parameters(id).is_none() {
        return fail(EXIT_CONFIG, format!("unknown formula '{id}'; try 'oracle list'"));
    }
    let params = match parse_params(params) {
        Ok(p) => p,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    match oracle(id, &params) {
        Ok(values) => {
            for (name, v) in values {
                let _ = writeln!(stdout, "{name} = {v:.16e}");
            }
            ExitCode::SUCCESS
        }
        Err(e @ fretcav::Error::InvalidSpec { .. }) => fail(EXIT_CONFIG, e),
        Err(e) => fail(EXIT_SOLVER, e),
    }
}

fn run_checks() -> ExitCode {
    let reports = checks::cross_validation_suite();
    let mut stdout = io::stdout().lock();
    for r in &reports {
        let _ = writeln!(stdout, "{r}");
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    let _ = writeln!(stdout, "{} passed, {failed} failed", reports.len() - failed);
    if failed > 0 {
        ExitCode::from(EXIT_TOLERANCE)
    } else {
        ExitCode::SUCCESS
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_CONFIG) } else { ExitCode::SUCCESS };
        }
    };
    match cli.command {
        Command::Sweep { config, preset, out, threads, ncav } => sweep(config, preset, out, threads, ncav),
        Command::Oracle { id, params } => run_oracle(&id, &params),
        Command::Check => run_checks(),
        Command::Presets => {
            for name in presets::names() {
                println!("{name}");
            }
            ExitCode::SUCCESS
        }
    }
}
