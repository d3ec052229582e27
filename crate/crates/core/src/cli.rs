//! Command-line front end.
//!
//! Every subcommand writes one document (JSON, or CSV for flat tables) to
//! `--out` or stdout. Failures print a JSON error object on stderr and exit
//! with 2 (bad input), 3 (numerical failure) or 4 (infeasible target).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use crate::algebra::{gate_distance, gates, phase_family, tau, ComplexMat, Su11Element, Unitary};
use crate::direct1d::{find_bound_states, scan, MomentumGrid, PotentialSpec};
use crate::dispersion::{build_scattering_data, reflection_data_from_potential, reflection_grid, GateTarget, ReflectionData};
use crate::fuchsian::{gauge_conjugate, lorentzian_to_fuchsian, monodromy, FuchsianSystem, Loop};
use crate::glm::{invert_reflection_data, recover_pulse, uniform_grid, TwoLevelScatteringData};
use crate::twolevel::{entanglement, f_matrix, scattering_matrix, scattering_scan, DipoleParams, PulseSpec};
use crate::{c64, Error, Result};

#[derive(Debug, Parser)]
#[command(name = "scattergate", version, about = "Quantum gates as scattering matrices")]
pub struct Cli {
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for parallel maps.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    /// Reflection data in the `inverse` input schema.
    Reflection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GateName {
    Hadamard,
    Not,
    Phase,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Scattering coefficients of a line potential on a momentum grid.
    Direct {
        #[arg(long)]
        potential: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        kmin: f64,
        #[arg(long, default_value_t = 5.0)]
        kmax: f64,
        #[arg(long, default_value_t = 64)]
        n: usize,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Potential from reflection data.
    Inverse {
        #[arg(long)]
        data: PathBuf,
        /// Half-width of the x window; chosen from the kernel decay when absent.
        #[arg(long)]
        xmax: Option<f64>,
        #[arg(long, default_value_t = 0.05)]
        step: f64,
    },
    /// Gate constructions and the gate-to-potential pipeline.
    Gate {
        #[arg(long, value_enum)]
        target: Option<GateName>,
        /// Family index for `not` and `phase`.
        #[arg(long, default_value_t = 100.0)]
        n: f64,
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_3)]
        phi: f64,
        /// JSON list of {k, t, r} targets to realize by a potential.
        #[arg(long)]
        targets: Option<PathBuf>,
        /// Realize the named gate at these momenta.
        #[arg(long, value_delimiter = ',')]
        k: Vec<f64>,
        /// Where to write the synthesized potential.
        #[arg(long)]
        potential_out: Option<PathBuf>,
        /// Required agreement of the synthesized potential with the targets.
        #[arg(long, default_value_t = 1e-2)]
        tol: f64,
    },
    /// Two-level atom: scattering matrix of a pulse, or pulse from scattering data.
    Twolevel {
        #[arg(long, conflicts_with = "data")]
        pulse: Option<PathBuf>,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, default_value_t = 0.0)]
        zeta: f64,
        #[arg(long)]
        kmin: Option<f64>,
        #[arg(long)]
        kmax: Option<f64>,
        #[arg(long, default_value_t = 64)]
        n: usize,
        #[arg(long, default_value_t = 10.0)]
        tmax: f64,
        #[arg(long, default_value_t = 0.05)]
        step: f64,
    },
    /// Operator-Schmidt analysis of the two-dipole evolution.
    Entangle {
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Monodromy of a Fuchsian system, or of a resonant Lorentzian pulse.
    Monodromy {
        #[arg(long, requires = "loop_path")]
        system: Option<PathBuf>,
        #[arg(long = "loop", id = "loop_path")]
        loop_path: Option<PathBuf>,
        /// `a,b` of a resonant Lorentzian; reports the gauge-conjugated monodromy.
        #[arg(long, value_delimiter = ',', conflicts_with = "system")]
        lorentzian: Option<Vec<f64>>,
    },
}

/// Exit status for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse(_) | Error::InvalidInput(_) | Error::DimensionMismatch { .. } | Error::Io(_) => 2,
        Error::Infeasible(_) => 4,
        Error::Integration { .. } | Error::Singular(_) => 3,
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Parse(_) => "parse",
        Error::InvalidInput(_) => "invalid_input",
        Error::DimensionMismatch { .. } => "dimension_mismatch",
        Error::Io(_) => "io",
        Error::Infeasible(_) => "infeasible",
        Error::Integration { .. } => "integration",
        Error::Singular(_) => "singular",
    }
}

/// Machine-readable error document.
pub fn error_document(e: &Error) -> Value {
    json!({ "error": { "kind": error_kind(e), "message": e.to_string(), "exit_code": exit_code(e) } })
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv(header: &[&str], rows: impl Iterator<Item = Vec<f64>>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for row in rows {
        s.push_str(&row.into_iter().map(num).collect::<Vec<_>>().join(","));
        s.push('\n');
    }
    s
}

fn run_direct(potential: &Path, kmin: f64, kmax: f64, n: usize, format: Format) -> Result<String> {
    let q: PotentialSpec = read_json(potential)?;
    match format {
        Format::Reflection => {
            let step = if n > 1 { (kmax - kmin).abs() / (n - 1) as f64 } else { 0.05 };
            let grid = reflection_grid(kmax, step.min(kmax / 4.0), (40.0 * kmax).max(2000.0))?;
            let data = reflection_data_from_potential(&q, &grid, 4.0 * kmax)?;
            to_json(&data)
        }
        Format::Csv | Format::Json => {
            let grid = MomentumGrid::linspace(kmin, kmax, n)?;
            let coeffs = scan(&q, &grid)?;
            if format == Format::Csv {
                return Ok(csv(
                    &["k", "re_a", "im_a", "re_b", "im_b", "abs_t2", "abs_r2"],
                    coeffs.iter().map(|c| {
                        vec![c.k, c.m.a().re, c.m.a().im, c.m.b().re, c.m.b().im, c.transmission.norm_sqr(), c.reflection.norm_sqr()]
                    }),
                ));
            }
            let bound = find_bound_states(&q, 4.0 * kmax)?;
            to_json(&json!({ "coefficients": coeffs, "bound_states": bound }))
        }
    }
}

fn run_inverse(data: &Path, xmax: Option<f64>, step: f64) -> Result<String> {
    let d: ReflectionData = read_json(data)?;
    let rec = invert_reflection_data(&d, xmax, step)?;
    let pot = rec.to_potential()?;
    to_json(&pot)
}

fn gate_report(name: GateName, n: f64, phi: f64) -> Result<(Su11Element, Unitary, Value)> {
    let (m, target) = match name {
        GateName::Hadamard => (Su11Element::new(c64(2f64.sqrt(), 0.0), c64(1.0, 0.0))?, gates::hadamard()),
        GateName::Not => (phase_family(n, 0.0), gates::phase(std::f64::consts::PI)),
        GateName::Phase => (phase_family(n, phi), gates::phase(phi + std::f64::consts::PI)),
    };
    let s = tau(&m);
    let d = gate_distance(&s, &target)?;
    let report = json!({
        "gate": format!("{name:?}").to_lowercase(),
        "a": m.a(),
        "b": m.b(),
        "smatrix": s,
        "target": target,
        "distance": d,
    });
    Ok((m, s, report))
}

#[allow(clippy::too_many_arguments)]
fn run_gate(
    target: Option<GateName>,
    n: f64,
    phi: f64,
    targets: Option<&Path>,
    ks: &[f64],
    potential_out: Option<&Path>,
    tol: f64,
) -> Result<String> {
    let mut doc = serde_json::Map::new();
    let mut pipeline_targets: Vec<GateTarget> = Vec::new();
    if let Some(name) = target {
        let (m, _, report) = gate_report(name, n, phi)?;
        doc.insert("construction".into(), report);
        for &k in ks {
            pipeline_targets.push(GateTarget::from_su11(k, &m)?);
        }
    } else if !ks.is_empty() {
        return Err(Error::InvalidInput("--k needs --target".into()));
    }
    if let Some(path) = targets {
        let extra: Vec<GateTarget> = read_json(path)?;
        pipeline_targets.extend(extra);
    }
    if target.is_none() && pipeline_targets.is_empty() {
        return Err(Error::InvalidInput("give --target, --targets or both".into()));
    }
    if !pipeline_targets.is_empty() {
        let data = build_scattering_data(&pipeline_targets)?;
        let rec = invert_reflection_data(&data, None, 0.1)?;
        let pot = rec.to_potential()?;
        let mut checks = Vec::new();
        let mut worst: f64 = 0.0;
        for t in &pipeline_targets {
            let c = crate::direct1d::solve_scattering(&pot, t.k())?;
            let err = (c.transmission - t.t()).norm().max((c.reflection - t.r()).norm());
            worst = worst.max(err);
            checks.push(json!({ "k": t.k(), "t": c.transmission, "r": c.reflection, "target_t": t.t(), "target_r": t.r(), "error": err }));
        }
        if let Some(path) = potential_out {
            fs::write(path, to_json(&pot)?)?;
        }
        doc.insert("pipeline".into(), json!({ "targets": checks, "max_error": worst, "tolerance": tol }));
        if worst > tol {
            return Err(Error::Infeasible(format!(
                "synthesized potential misses the targets by {worst:e} (tolerance {tol:e})"
            )));
        }
    }
    to_json(&Value::Object(doc))
}

#[allow(clippy::too_many_arguments)]
fn run_twolevel(
    pulse: Option<&Path>,
    data: Option<&Path>,
    zeta: f64,
    kmin: Option<f64>,
    kmax: Option<f64>,
    n: usize,
    tmax: f64,
    step: f64,
) -> Result<String> {
    if let Some(path) = data {
        let d: TwoLevelScatteringData = read_json(path)?;
        let rec = recover_pulse(&d, &uniform_grid(-tmax, tmax, step))?;
        return to_json(&rec);
    }
    let path = pulse.ok_or_else(|| Error::InvalidInput("give --pulse or --data".into()))?;
    let p: PulseSpec = read_json(path)?;
    match (kmin, kmax) {
        (Some(lo), Some(hi)) => {
            let zetas = MomentumGrid::linspace(lo, hi, n)?;
            let ss = scattering_scan(&p, zetas.values())?;
            Ok(csv(
                &["zeta", "re_s00", "im_s00", "re_s01", "im_s01", "re_s10", "im_s10", "re_s11", "im_s11"],
                zetas.values().iter().zip(&ss).map(|(&z, s)| {
                    let mut row = vec![z];
                    for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                        row.push(s.get(i, j).re);
                        row.push(s.get(i, j).im);
                    }
                    row
                }),
            ))
        }
        (None, None) => {
            let s = scattering_matrix(&p, zeta)?;
            to_json(&json!({ "zeta": zeta, "smatrix": s, "area": p.area() }))
        }
        _ => Err(Error::InvalidInput("--kmin and --kmax go together".into())),
    }
}

fn run_entangle(params: Option<&Path>) -> Result<String> {
    let p: DipoleParams = match params {
        Some(path) => read_json(path)?,
        None => DipoleParams::default(),
    };
    p.validate()?;
    let f = f_matrix(&p)?;
    let dec = entanglement(&p)?;
    to_json(&json!({
        "schmidt_values": dec.singular_values,
        "verdict": dec.verdict(),
        "f_matrix": f,
    }))
}

fn run_monodromy(system: Option<&Path>, lp: Option<&Path>, lorentzian: Option<&[f64]>) -> Result<String> {
    if let Some(ab) = lorentzian {
        let &[a, b] = ab else {
            return Err(Error::InvalidInput(format!("--lorentzian takes a,b; got {} values", ab.len())));
        };
        let (sys, l) = lorentzian_to_fuchsian(a, b)?;
        let m = monodromy(&sys, &l)?;
        let g = gauge_conjugate(&m)?;
        return to_json(&json!({ "system": sys, "loop": l, "monodromy": m, "gauge_conjugated": g }));
    }
    let (Some(sp), Some(lpath)) = (system, lp) else {
        return Err(Error::InvalidInput("give --system with --loop, or --lorentzian a,b".into()));
    };
    let sys: FuchsianSystem = read_json(sp)?;
    let l: Loop = read_json(lpath)?;
    let m: ComplexMat = monodromy(&sys, &l)?;
    to_json(&json!({ "base_point": l.base_point()?, "monodromy": m }))
}

/// Runs one parsed command and returns the document it produces.
pub fn execute(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Direct { potential, kmin, kmax, n, format } => run_direct(potential, *kmin, *kmax, *n, *format),
        Command::Inverse { data, xmax, step } => run_inverse(data, *xmax, *step),
        Command::Gate { target, n, phi, targets, k, potential_out, tol } => {
            run_gate(*target, *n, *phi, targets.as_deref(), k, potential_out.as_deref(), *tol)
        }
        Command::Twolevel { pulse, data, zeta, kmin, kmax, n, tmax, step } => {
            run_twolevel(pulse.as_deref(), data.as_deref(), *zeta, *kmin, *kmax, *n, *tmax, *step)
        }
        Command::Entangle { params } => run_entangle(params.as_deref()),
        Command::Monodromy { system, loop_path, lorentzian } => {
            run_monodromy(system.as_deref(), loop_path.as_deref(), lorentzian.as_deref())
        }
    }
}

fn emit(cli: &Cli, doc: &str) -> Result<()> {
    match &cli.out {
        Some(path) => fs::write(path, doc)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(doc.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

/// Parses `args`, runs the command and returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or("SCATTERGATE_LOG", "error")).try_init();
    let result = (|| {
        if let Some(t) = cli.threads {
            if t == 0 {
                return Err(Error::InvalidInput("--threads must be positive".into()));
            }
            // Fails harmlessly if a pool already exists in this process.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
        }
        let doc = execute(&cli)?;
        emit(&cli, &doc)
    })();
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", error_document(&e));
            exit_code(&e)
        }
    }
}
