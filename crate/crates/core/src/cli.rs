//! Command-line front end: loads an instance, dispatches on its kind and
//! prints a text or JSON report.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::certificates::{check_hqp, check_ra, check_thm31_cone, check_thm41_cone, check_uniform, Certificate};
use crate::copositivity::CopositivityOptions;
use crate::corpus::{run_corpus, CorpusOutcome};
use crate::error::Error;
use crate::io::{load_instance, to_json, LoadError};
use crate::oracle::{
    hqp_box_radius, membership, solve_miqp_bruteforce, solve_qp_bruteforce, solve_robust_bruteforce, MembershipOptions,
    PrimalResult,
};
use crate::orthant_qp::OrthantOptions;
use crate::qp_model::{Instance, QpInstance};
use crate::reformulate::{build_copositive_relaxation, miqp_to_pd, robust_to_ap, BoundSign};
use crate::semilag_dual::{gap_report, maximize_dual, DualOptions, DualResult, GapReport};
use crate::ExtValue;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_PARSE: i32 = 3;
pub const EXIT_KIND: i32 = 4;
pub const EXIT_TOLERANCE: i32 = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Target {
    /// Quadratic-inequality form of a mixed-integer instance.
    Pd,
    /// Augmented form of a robust instance.
    Ap,
    /// Conic relaxation matrices.
    Cp,
}

#[derive(Debug, Parser)]
#[command(name = "semilag", version, about = "Semi-Lagrangian duality for nonnegative quadratic programs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub config: RunConfig,
}

#[derive(Clone, Debug, clap::Args, Serialize)]
pub struct RunConfig {
    /// Gap below which primal and dual are reported equal.
    #[arg(long, global = true, default_value_t = 1e-4)]
    pub tol_gap: f64,
    /// Copositivity tolerance.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub eps_cop: f64,
    /// Stopping tolerance of the dual cutting-plane method.
    #[arg(long, global = true, default_value_t = 1e-6)]
    pub tol_dual: f64,
    /// Initial multiplier box.
    #[arg(long, global = true, default_value_t = 1e4)]
    pub u_cap: f64,
    /// Box radius searched by the grid oracle.
    #[arg(long, global = true, default_value_t = 10.0)]
    pub grid: f64,
    /// Largest dimension for exhaustive orthant minimization.
    #[arg(long, global = true, default_value_t = 14)]
    pub n_max: usize,
    #[arg(long, global = true, default_value_t = 500)]
    pub max_iter: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[arg(long, global = true, default_value_t = 7)]
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            tol_gap: 1e-4,
            eps_cop: 1e-9,
            tol_dual: 1e-6,
            u_cap: 1e4,
            grid: 10.0,
            n_max: 14,
            max_iter: 500,
            format: Format::Text,
            seed: 7,
        }
    }
}

impl RunConfig {
    fn check(&self) -> Result<(), String> {
        let positive = [("tol-gap", self.tol_gap), ("eps-cop", self.eps_cop), ("tol-dual", self.tol_dual), ("u-cap", self.u_cap), ("grid", self.grid)];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("--{name} must be positive"));
            }
        }
        if self.n_max == 0 || self.max_iter == 0 {
            return Err("caps must be positive".into());
        }
        Ok(())
    }

    pub fn dual_options(&self) -> DualOptions<f64> {
        let orthant = OrthantOptions { n_max: self.n_max, copositivity: CopositivityOptions::with_eps(self.eps_cop), ..OrthantOptions::default() };
        DualOptions { tol_dual: self.tol_dual, u_cap: self.u_cap, max_iter: self.max_iter, orthant, ..DualOptions::default() }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Brute-force primal optimum.
    Solve { path: PathBuf },
    /// Maximize the semi-Lagrangian dual.
    Dual { path: PathBuf },
    /// Primal, dual, certificates and gap classification.
    Gap { path: PathBuf },
    /// Sufficient conditions for a zero duality gap.
    Certify { path: PathBuf },
    /// Emit a transformed instance.
    Reformulate {
        path: PathBuf,
        #[arg(long, value_enum)]
        target: Target,
        /// Use -M on the two bound rows of the augmented system.
        #[arg(long)]
        minus_m: bool,
    },
    /// Membership of (u_0, ..., u_m, r) in the extended image set.
    Member {
        path: PathBuf,
        /// Comma-separated target point.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        point: Vec<f64>,
    },
    /// Run the built-in corpus of worked examples.
    Corpus,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    instance_kind: Option<&'static str>,
    config: &'a RunConfig,
    warnings: &'a [String],
    result: T,
}

/// A failed command with its exit code.
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<LoadError> for Failure {
    fn from(e: LoadError) -> Self {
        let code = match e {
            LoadError::Read { .. } | LoadError::Parse(_) | LoadError::Invalid(_) => EXIT_PARSE,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::WeakDuality { .. } => EXIT_TOLERANCE,
            Error::Infeasible => EXIT_INFEASIBLE,
            _ => EXIT_INTERNAL,
        };
        Failure { code, message: e.to_string() }
    }
}

fn kind_mismatch(command: &str, kind: &str) -> Failure {
    Failure { code: EXIT_KIND, message: format!("{command} does not accept instances of kind {kind}") }
}

/// Primal optimum by the oracle matching the instance kind.
pub fn solve_instance(inst: &Instance<f64>, cfg: &RunConfig) -> Result<PrimalResult<f64>, Error> {
    match inst {
        Instance::Qp(p) => solve_qp_bruteforce(p, cfg.grid),
        Instance::Uniform(p) => solve_qp_bruteforce(&p.to_qp(), cfg.grid),
        Instance::Hqp(h) => {
            // Without strict copositivity of B the feasible set is unbounded;
            // fall back to the configured box.
            let radius = hqp_box_radius(h).unwrap_or(cfg.grid);
            solve_qp_bruteforce(&QpInstance::from(h.clone()), radius)
        }
        Instance::Miqp(p) => solve_miqp_bruteforce(p),
        Instance::RobustMiqp(p) => solve_robust_bruteforce(p),
    }
}

/// The continuous instance whose semi-Lagrangian dual is reported.
pub fn dual_instance(inst: &Instance<f64>) -> Result<QpInstance<f64>, Error> {
    Ok(match inst {
        Instance::Qp(p) => p.clone(),
        Instance::Uniform(p) => p.to_qp(),
        Instance::Hqp(h) => QpInstance::from(h.clone()),
        Instance::Miqp(p) => miqp_to_pd(p).target,
        Instance::RobustMiqp(p) => robust_to_ap(p, BoundSign::Plus)?.target,
    })
}

pub fn certify_instance(inst: &Instance<f64>) -> Result<Vec<Certificate<f64>>, Error> {
    Ok(match inst {
        Instance::Qp(_) => vec![Certificate::none_applicable("no decidable sufficient condition for general instances")],
        Instance::Hqp(h) => vec![check_hqp(h)?],
        Instance::Uniform(p) => vec![check_uniform(p)?],
        Instance::Miqp(p) => vec![check_ra(p)?, check_thm31_cone(p)?],
        Instance::RobustMiqp(p) => vec![check_ra(&p.with_cost(p.c0.clone()))?, check_thm41_cone(p)?],
    })
}

pub fn dual_of(inst: &Instance<f64>, cfg: &RunConfig) -> Result<DualResult<f64>, Error> {
    maximize_dual(&dual_instance(inst)?, &cfg.dual_options())
}

pub fn gap_of(inst: &Instance<f64>, cfg: &RunConfig) -> Result<GapReport<f64>, Error> {
    let primal = solve_instance(inst, cfg)?;
    let dual = dual_of(inst, cfg)?;
    let certs = certify_instance(inst)?;
    gap_report(&primal, &dual, certs, cfg.tol_gap)
}

fn emit<T: Serialize>(
    out: &mut dyn Write,
    cfg: &RunConfig,
    command: &str,
    kind: Option<&'static str>,
    warnings: &[String],
    result: &T,
    text: impl FnOnce() -> String,
) {
    let body = match cfg.format {
        Format::Json => to_json(&Envelope {
            tool: "semilag",
            version: env!("CARGO_PKG_VERSION"),
            command,
            instance_kind: kind,
            config: cfg,
            warnings,
            result,
        }),
        Format::Text => {
            let mut s = String::new();
            for w in warnings {
                s.push_str(&format!("warning: {w}\n"));
            }
            s + &text()
        }
    };
    let _ = writeln!(out, "{}", body.trim_end());
}

/// Serialized name of a unit enum variant, so text and JSON agree.
fn label<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        _ => String::from("?"),
    }
}

fn primal_text(r: &PrimalResult<f64>) -> String {
    let mut s = format!("value: {}\nmethod: {}\n", r.value, label(&r.method));
    if let Some(x) = &r.argmin {
        s += &format!("argmin: {x:?}\n");
    }
    if r.error_bar > 0.0 {
        s += &format!("error bar: {:e}\n", r.error_bar);
    }
    if r.possibly_infeasible {
        s += "no feasible grid point found\n";
    }
    s
}

fn dual_text(d: &DualResult<f64>) -> String {
    format!(
        "dual value: {}\ntermination: {}\niterations: {}\nbest u: {:?}\n",
        d.best_value,
        label(&d.termination),
        d.iterations,
        d.best_u
    )
}

fn gap_text(g: &GapReport<f64>) -> String {
    let gap = g.gap.map_or("undefined".to_string(), |v| v.to_string());
    let mut s = format!(
        "primal: {}\ndual: {}\ngap: {}\nclassification: {}\n",
        g.primal_value,
        g.dual_value,
        gap,
        label(&g.classification)
    );
    for c in &g.certificates {
        s += &format!("certificate {}: {}\n", label(&c.kind), label(&c.verdict));
    }
    s
}

fn corpus_text(rows: &[CorpusOutcome]) -> String {
    let mut s = String::new();
    for r in rows {
        s += &format!("{:<5} {:<20} {}\n", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
    }
    s
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<i32, Failure> {
    let cfg = &cli.config;
    cfg.check().map_err(|message| Failure { code: EXIT_PARSE, message })?;
    let load = |path: &Path| -> Result<(Instance<f64>, Vec<String>), Failure> {
        let (inst, report) = load_instance::<f64>(path)?;
        Ok((inst, report.warnings))
    };
    match &cli.command {
        Command::Solve { path } => {
            let (inst, warnings) = load(path)?;
            let r = solve_instance(&inst, cfg)?;
            emit(out, cfg, "solve", Some(inst.kind()), &warnings, &r, || primal_text(&r));
            Ok(if r.value == ExtValue::PlusInfinity { EXIT_INFEASIBLE } else { EXIT_OK })
        }
        Command::Dual { path } => {
            let (inst, warnings) = load(path)?;
            let d = dual_of(&inst, cfg)?;
            emit(out, cfg, "dual", Some(inst.kind()), &warnings, &d, || dual_text(&d));
            Ok(EXIT_OK)
        }
        Command::Gap { path } => {
            let (inst, warnings) = load(path)?;
            let g = gap_of(&inst, cfg)?;
            emit(out, cfg, "gap", Some(inst.kind()), &warnings, &g, || gap_text(&g));
            Ok(if g.primal_value == ExtValue::PlusInfinity { EXIT_INFEASIBLE } else { EXIT_OK })
        }
        Command::Certify { path } => {
            let (inst, warnings) = load(path)?;
            let certs = certify_instance(&inst)?;
            emit(out, cfg, "certify", Some(inst.kind()), &warnings, &certs, || {
                certs.iter().map(|c| format!("{}: {}\n", label(&c.kind), label(&c.verdict))).collect()
            });
            Ok(EXIT_OK)
        }
        Command::Reformulate { path, target, minus_m } => {
            let (inst, warnings) = load(path)?;
            let sign = if *minus_m { BoundSign::Minus } else { BoundSign::Plus };
            let body = match (target, &inst) {
                (Target::Pd, Instance::Miqp(p)) => serde_json::to_value(reformulated(miqp_to_pd(p))),
                (Target::Ap, Instance::RobustMiqp(p)) => serde_json::to_value(reformulated(robust_to_ap(p, sign)?)),
                (Target::Cp, _) => serde_json::to_value(build_copositive_relaxation(&dual_instance(&inst)?)),
                (Target::Pd, _) | (Target::Ap, _) => return Err(kind_mismatch("reformulate", inst.kind())),
            }
            .expect("reformulations serialize");
            // The instance is printed bare so it can be fed back in; the JSON
            // envelope carries provenance.
            match cfg.format {
                Format::Json => emit(out, cfg, "reformulate", Some(inst.kind()), &warnings, &body, String::new),
                Format::Text => {
                    let _ = writeln!(out, "{}", to_json(body.get("instance").unwrap_or(&body)));
                }
            }
            Ok(EXIT_OK)
        }
        Command::Member { path, point } => {
            let (inst, warnings) = load(path)?;
            let p = match &inst {
                Instance::Qp(p) => p.clone(),
                Instance::Hqp(h) => QpInstance::from(h.clone()),
                Instance::Uniform(p) => p.to_qp(),
                _ => return Err(kind_mismatch("member", inst.kind())),
            };
            let opts = MembershipOptions { seed: cfg.seed, ..MembershipOptions::default() };
            let q = membership(&p, point, &opts).map_err(|e| Failure { code: EXIT_PARSE, message: e.to_string() })?;
            emit(out, cfg, "member", Some(inst.kind()), &warnings, &q, || {
                let mut s = format!("verdict: {}\n", label(&q.verdict));
                if let Some(x) = &q.witness {
                    s += &format!("witness: {x:?}\n");
                }
                s
            });
            Ok(EXIT_OK)
        }
        Command::Corpus => {
            let rows = run_corpus(cfg);
            emit(out, cfg, "corpus", None, &[], &rows, || corpus_text(&rows));
            Ok(if rows.iter().all(|r| r.passed) { EXIT_OK } else { EXIT_INTERNAL })
        }
    }
}

#[derive(Serialize)]
struct Reformulated<S: Serialize> {
    instance: Instance<S>,
    source_kind: String,
    variable_map: Vec<crate::reformulate::VariableBlock>,
    provenance: Vec<crate::reformulate::ConstraintOrigin>,
    notes: Vec<String>,
}

fn reformulated(map: crate::reformulate::ReformulationMap<f64>) -> Reformulated<f64> {
    Reformulated {
        instance: Instance::Qp(map.target),
        source_kind: map.source_kind,
        variable_map: map.variable_map,
        provenance: map.provenance,
        notes: map.notes,
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return EXIT_PARSE;
            }
            let _ = write!(out, "{e}");
            return EXIT_OK;
        }
    };
    match execute(&cli, out) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}
