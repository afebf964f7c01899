//! Command-line front end.
//!
//! Every command resolves its parameters as defaults, then `--config`, then
//! `DIOPH_MAX_DEPTH`, then flags. With `--out DIR` the results and a
//! `manifest.json` are written atomically into `DIR`; otherwise the main
//! result goes to stdout.

pub mod pipeline;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::approx::{best_sequence_with, psi_with, write_csv, ApproxConfig, ApproxSequence, MatrixTheta, DEFAULT_MAX_DEPTH};
use crate::construct::{
    badset_mc, compose_base, extend_random, liouville_column, series_partial_sums, write_badset_csv,
    BadsetConfig, ExtensionSpec, LiouvilleSpec, DEFAULT_PRECISION_BITS,
};
use crate::error::{Error, Result};
use crate::exactnum::{rat, rat_int, rat_to_f64, serde_rat, Rat};
use crate::exponents::{default_window, exponent_report};
use crate::lattice::{
    cert_completely_irrational_with, default_min_tail, estimate_r, int_rank, proof_diagnostics, CertConfig,
};
use pipeline::{run_lemma3, run_lemma4, run_theorem1_sanity, Lemma3Params, Lemma4Params, Theorem1Params};

pub const MAX_DEPTH_ENV: &str = "DIOPH_MAX_DEPTH";

#[derive(Parser, Debug)]
#[command(name = "dioph", version, about = "Best Diophantine approximations and their subspaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// JSON parameter file, or a manifest.json from an earlier run
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print the resolved parameters and exit
    #[arg(long)]
    dump_config: bool,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Best approximation sequence up to T
    Approx(ApproxArgs),
    /// Value of psi(t)
    Psi(PsiArgs),
    /// Exponent estimates from a sequence file
    Exponents(ExponentsArgs),
    /// Tail ranks and the estimated dimension R
    Rank(RankArgs),
    /// Search for a rational relation among the columns of [I; Θ]
    CertIrrational(CertArgs),
    /// Build a Liouville column, a composed base, or a random extension
    Construct(ConstructArgs),
    /// Run a verification pipeline
    Verify(VerifyArgs),
    /// Two-column CSV for plotting
    Plotdata(PlotArgs),
    /// Partial sums of |x_{nu+1}|^m xi_nu^n
    Series(SeriesArgs),
    /// Monte Carlo estimate of the bad set measure
    BadsetMc(BadsetArgs),
}

#[derive(Args, Debug, Serialize)]
struct ApproxArgs {
    #[arg(long)]
    matrix: Option<String>,
    #[arg(long = "T", visible_alias = "t-max")]
    t_max: Option<u64>,
    #[arg(long)]
    max_depth: Option<u32>,
    #[serde(skip)]
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ApproxParams {
    matrix: Option<String>,
    t_max: Option<u64>,
    max_depth: u32,
}

impl Default for ApproxParams {
    fn default() -> Self {
        ApproxParams {
            matrix: None,
            t_max: None,
            max_depth: DEFAULT_MAX_DEPTH,
        }
    }
}

#[derive(Args, Debug, Serialize)]
struct PsiArgs {
    #[arg(long)]
    matrix: Option<String>,
    #[arg(long)]
    t: Option<u64>,
    #[arg(long)]
    max_depth: Option<u32>,
    #[serde(skip)]
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct PsiParams {
    matrix: Option<String>,
    t: Option<u64>,
    max_depth: u32,
}

impl Default for PsiParams {
    fn default() -> Self {
        PsiParams {
            matrix: None,
            t: None,
            max_depth: DEFAULT_MAX_DEPTH,
        }
    }
}

#[derive(Args, Debug, Serialize)]
struct ExponentsArgs {
    #[arg(long)]
    sequence: Option<String>,
    #[arg(long)]
    window: Option<usize>,
    #[serde(skip)]
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ExponentsParams {
    sequence: Option<String>,
    window: Option<usize>,
}

#[derive(Args, Debug, Serialize)]
struct RankArgs {
    #[arg(long)]
    sequence: Option<String>,
    #[arg(long)]
    min_tail: Option<usize>,
    /// Also report the floating-point subspace diagnostics
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    diagnostics: Option<bool>,
    #[serde(skip)]
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RankParams {
    sequence: Option<String>,
    min_tail: Option<usize>,
    diagnostics: bool,
}

#[derive(Args, Debug, Serialize)]
struct CertArgs {
    #[arg(long)]
    matrix: Option<String>,
    #[arg(long = "B")]
    b: Option<u32>,
    #[arg(long)]
    budget: Option<f64>,
    #[arg(long)]
    max_depth: Option<u32>,
    #[serde(skip)]
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct CertParams {
    matrix: Option<String>,
    b: u32,
    budget: f64,
    max_depth: u32,
}

impl Default for CertParams {
    fn default() -> Self {
        CertParams {
            matrix: None,
            b: 1,
            budget: CertConfig::default().budget,
            max_depth: DEFAULT_MAX_DEPTH,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum ConstructKind {
    Liouville,
    Compose,
    Extend,
}

#[derive(Args, Debug, Serialize)]
struct ConstructArgs {
    #[serde(skip)]
    kind: ConstructKind,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    u: Option<String>,
    #[arg(long)]
    q1: Option<u64>,
    #[arg(long = "K")]
    k: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Single-column matrix files to concatenate
    #[arg(long, value_delimiter = ',')]
    cols: Option<Vec<String>>,
    #[arg(long)]
    extra: Option<usize>,
    #[arg(long)]
    base: Option<String>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    precision_bits: Option<u32>,
    #[serde(skip)]
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ConstructParams {
    n: usize,
    #[serde(with = "serde_rat")]
    gamma: Rat,
    #[serde(with = "serde_rat")]
    u: Rat,
    q1: u64,
    k: usize,
    seed: u64,
    cols: Vec<String>,
    extra: usize,
    base: Option<String>,
    m: Option<usize>,
    precision_bits: u32,
}

impl Default for ConstructParams {
    fn default() -> Self {
        ConstructParams {
            n: 3,
            gamma: rat(4, 5),
            u: rat(6, 1),
            q1: 3,
            k: 4,
            seed: 7,
            cols: vec![],
            extra: 0,
            base: None,
            m: None,
            precision_bits: DEFAULT_PRECISION_BITS,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum PipelineKind {
    Lemma3,
    Lemma4,
    #[value(name = "theorem1-sanity")]
    Theorem1Sanity,
}

impl PipelineKind {
    fn name(self) -> &'static str {
        match self {
            PipelineKind::Lemma3 => "lemma3",
            PipelineKind::Lemma4 => "lemma4",
            PipelineKind::Theorem1Sanity => "theorem1-sanity",
        }
    }
}

#[derive(Args, Debug, Serialize)]
struct VerifyArgs {
    #[serde(skip)]
    pipeline: PipelineKind,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    u: Option<String>,
    #[arg(long)]
    q1: Option<u64>,
    #[arg(long = "K")]
    k: Option<usize>,
    #[arg(long = "T", visible_alias = "t-max")]
    t_max: Option<u64>,
    #[arg(long)]
    liouville_seed: Option<u64>,
    #[arg(long)]
    base_seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    precision_bits: Option<u32>,
    #[arg(long)]
    min_tail: Option<usize>,
    #[arg(long)]
    max_depth: Option<u32>,
    #[arg(long = "cert-B")]
    cert_b: Option<u32>,
    #[arg(long)]
    cert_budget: Option<f64>,
    #[arg(long)]
    required_passes: Option<usize>,
    #[arg(long)]
    case: Option<String>,
    #[serde(skip)]
    #[command(flatten)]
    common: Common,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum PlotKind {
    #[value(name = "xi_product")]
    XiProduct,
    Ratios,
    Tailrank,
    Series,
}

#[derive(Args, Debug, Serialize)]
struct PlotArgs {
    #[arg(long)]
    sequence: Option<String>,
    #[arg(long)]
    kind: Option<PlotKind>,
    #[serde(skip)]
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct PlotParams {
    sequence: Option<String>,
    kind: Option<PlotKind>,
}

#[derive(Args, Debug, Serialize)]
struct SeriesArgs {
    #[arg(long)]
    sequence: Option<String>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    count: Option<usize>,
    #[serde(skip)]
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SeriesParams {
    sequence: Option<String>,
    m: Option<usize>,
    n: Option<usize>,
    count: Option<usize>,
}

#[derive(Args, Debug, Serialize)]
struct BadsetArgs {
    /// Base matrix `Θ*`
    #[arg(long)]
    matrix: Option<String>,
    /// Range of the base sequence
    #[arg(long = "T", visible_alias = "t-max")]
    t_max: Option<u64>,
    #[arg(long)]
    nu: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    budget: Option<f64>,
    #[arg(long)]
    y_window: Option<u64>,
    #[arg(long)]
    precision_bits: Option<u32>,
    #[arg(long)]
    max_depth: Option<u32>,
    #[serde(skip)]
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct BadsetParams {
    matrix: Option<String>,
    t_max: Option<u64>,
    nu: Option<usize>,
    m: Option<usize>,
    samples: usize,
    seed: u64,
    budget: f64,
    y_window: Option<u64>,
    precision_bits: u32,
    max_depth: u32,
}

impl Default for BadsetParams {
    fn default() -> Self {
        let c = BadsetConfig::default();
        BadsetParams {
            matrix: None,
            t_max: None,
            nu: None,
            m: None,
            samples: 500,
            seed: 7,
            budget: c.budget,
            y_window: c.y_window,
            precision_bits: c.precision_bits,
            max_depth: c.max_depth,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Value,
    pub inputs: Value,
    pub outputs: Vec<String>,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub started_unix: u64,
    pub finished_unix: u64,
}

/// Parses `args` (including the program name), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}

fn strip_nulls(v: Value) -> Value {
    match v {
        Value::Object(o) => Value::Object(o.into_iter().filter(|(_, v)| !v.is_null()).collect()),
        other => other,
    }
}

/// defaults < config file < DIOPH_MAX_DEPTH < flags.
fn resolve<P: Serialize + DeserializeOwned + Default>(
    command: &str,
    common: &Common,
    flags: &impl Serialize,
) -> Result<P> {
    let mut v = serde_json::to_value(P::default())?;
    if let Some(path) = &common.config {
        let text = fs::read_to_string(path)?;
        let mut c: Value = serde_json::from_str(&text)?;
        if let (Some(cmd), Some(cfg)) = (c.get("command"), c.get("config")) {
            if cmd.as_str() != Some(command) {
                return Err(Error::InvalidParameter(format!(
                    "manifest was written by {cmd}, not {command:?}"
                )));
            }
            c = cfg.clone();
        }
        if !c.is_object() {
            return Err(Error::Parse("config file must hold a JSON object".into()));
        }
        merge(&mut v, c);
    }
    if let Ok(s) = std::env::var(MAX_DEPTH_ENV) {
        if v.get("max_depth").is_some() {
            let d: u32 = s.trim().parse().map_err(|_| {
                Error::InvalidParameter(format!("{MAX_DEPTH_ENV} = {s:?} is not a depth"))
            })?;
            v["max_depth"] = Value::from(d);
        }
    }
    merge(&mut v, strip_nulls(serde_json::to_value(flags)?));
    serde_json::from_value(v).map_err(|e| Error::InvalidParameter(e.to_string()))
}

fn required<T: Clone>(v: &Option<T>, flag: &str) -> Result<T> {
    v.clone()
        .ok_or_else(|| Error::InvalidParameter(format!("missing required --{flag}")))
}

fn read_matrix(path: &str) -> Result<(MatrixTheta, Value)> {
    let text = fs::read_to_string(path).map_err(|e| io_context(e, path))?;
    let raw: Value = serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{path}: {e}")))?;
    let theta: MatrixTheta =
        serde_json::from_value(raw.clone()).map_err(|e| Error::Parse(format!("{path}: {e}")))?;
    Ok((theta, raw))
}

fn read_sequence(path: &str) -> Result<ApproxSequence> {
    let text = fs::read_to_string(path).map_err(|e| io_context(e, path))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{path}: {e}")))
}

fn io_context(e: std::io::Error, path: &str) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{path}: {e}")))
}

fn json_bytes<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(v)?;
    out.push(b'\n');
    Ok(out)
}

fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(dir.join(name)).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

struct Run {
    command: String,
    config: Value,
    inputs: Value,
    seed: Option<u64>,
    started: u64,
}

impl Run {
    fn new(command: &str, config: &impl Serialize, seed: Option<u64>) -> Result<Self> {
        Ok(Run {
            command: command.into(),
            config: serde_json::to_value(config)?,
            inputs: Value::Object(Default::default()),
            seed,
            started: now_unix(),
        })
    }

    fn input(&mut self, key: &str, path: &str, content: Option<Value>) {
        let mut entry = serde_json::json!({ "path": path });
        if let Some(c) = content {
            entry["content"] = c;
        }
        self.inputs[key] = entry;
    }

    /// Writes `files` into `--out` (first file goes to stdout without it).
    fn emit(self, common: &Common, files: Vec<(&str, Vec<u8>)>) -> Result<()> {
        match &common.out {
            None => {
                let mut stdout = std::io::stdout().lock();
                if let Some((_, bytes)) = files.first() {
                    stdout.write_all(bytes)?;
                }
                stdout.flush()?;
            }
            Some(dir) => {
                fs::create_dir_all(dir)?;
                for (name, bytes) in &files {
                    write_atomic(dir, name, bytes)?;
                }
                let manifest = RunManifest {
                    command: self.command,
                    config: self.config,
                    inputs: self.inputs,
                    outputs: files.iter().map(|(n, _)| n.to_string()).collect(),
                    seed: self.seed,
                    tool_version: env!("CARGO_PKG_VERSION").into(),
                    started_unix: self.started,
                    finished_unix: now_unix(),
                };
                write_atomic(dir, "manifest.json", &json_bytes(&manifest)?)?;
            }
        }
        Ok(())
    }
}

/// Prints the resolved parameters when `--dump-config` is set.
fn dumped(common: &Common, p: &impl Serialize) -> Result<bool> {
    if common.dump_config {
        println!("{}", serde_json::to_string_pretty(p)?);
    }
    Ok(common.dump_config)
}

fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Approx(a) => cmd_approx(a),
        Command::Psi(a) => cmd_psi(a),
        Command::Exponents(a) => cmd_exponents(a),
        Command::Rank(a) => cmd_rank(a),
        Command::CertIrrational(a) => cmd_cert(a),
        Command::Construct(a) => cmd_construct(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Plotdata(a) => cmd_plotdata(a),
        Command::Series(a) => cmd_series(a),
        Command::BadsetMc(a) => cmd_badset(a),
    }
    .map(|()| 0)
    .or_else(|e| match e {
        Error::VerificationFailed(msg) => {
            eprintln!("verification failed: {msg}");
            Ok(4)
        }
        other => Err(other),
    })
}

fn cmd_approx(a: ApproxArgs) -> Result<()> {
    let p: ApproxParams = resolve("approx", &a.common, &a)?;
    if dumped(&a.common, &p)? {
        return Ok(());
    }
    let path = required(&p.matrix, "matrix")?;
    let t = required(&p.t_max, "T")?;
    if t == 0 {
        return Err(Error::InvalidParameter("T must be at least 1".into()));
    }
    let (theta, raw) = read_matrix(&path)?;
    let seq = best_sequence_with(&theta, t, &ApproxConfig { max_depth: p.max_depth })?;
    let mut csv = Vec::new();
    write_csv(&seq.records, &mut csv)?;
    let json = json_bytes(&seq)?;
    let mut run = Run::new("approx", &p, None)?;
    run.input("matrix", &path, Some(raw));
    if a.common.out.is_none() {
        return run.emit(&a.common, vec![("sequence.json", json)]);
    }
    run.emit(&a.common, vec![("sequence.csv", csv), ("sequence.json", json)])
}

fn cmd_psi(a: PsiArgs) -> Result<()> {
    let p: PsiParams = resolve("psi", &a.common, &a)?;
    if dumped(&a.common, &p)? {
        return Ok(());
    }
    let path = required(&p.matrix, "matrix")?;
    let t = required(&p.t, "t")?;
    if t == 0 {
        return Err(Error::InvalidParameter("t must be at least 1".into()));
    }
    let (theta, raw) = read_matrix(&path)?;
    let v = psi_with(&theta, t, &ApproxConfig { max_depth: p.max_depth })?;
    let out = serde_json::json!({ "t": t, "psi": v, "psi_f64": rat_to_f64(v.mid()) });
    let mut run = Run::new("psi", &p, None)?;
    run.input("matrix", &path, Some(raw));
    run.emit(&a.common, vec![("psi.json", json_bytes(&out)?)])
}

fn cmd_exponents(a: ExponentsArgs) -> Result<()> {
    let p: ExponentsParams = resolve("exponents", &a.common, &a)?;
    if dumped(&a.common, &p)? {
        return Ok(());
    }
    let path = required(&p.sequence, "sequence")?;
    if p.window == Some(0) {
        return Err(Error::InvalidParameter("window must be positive".into()));
    }
    let seq = read_sequence(&path)?;
    let w = p.window.unwrap_or_else(|| default_window(&seq));
    let rep = exponent_report(&seq, w)?;
    let mut run = Run::new("exponents", &p, None)?;
    run.input("sequence", &path, None);
    run.emit(&a.common, vec![("exponents.json", json_bytes(&rep)?)])
}

fn cmd_rank(a: RankArgs) -> Result<()> {
    let p: RankParams = resolve("rank", &a.common, &a)?;
    if dumped(&a.common, &p)? {
        return Ok(());
    }
    let path = required(&p.sequence, "sequence")?;
    if p.min_tail == Some(0) {
        return Err(Error::InvalidParameter("min_tail must be positive".into()));
    }
    let seq = read_sequence(&path)?;
    let mt = p.min_tail.unwrap_or_else(|| default_min_tail(seq.theta.d()));
    let rep = estimate_r(&seq, mt)?;
    let diag = if p.diagnostics {
        Some(proof_diagnostics(&seq, &rep.witness, &seq.theta)?)
    } else {
        None
    };
    let out = serde_json::json!({ "dimension": rep, "diagnostics": diag });
    let mut run = Run::new("rank", &p, None)?;
    run.input("sequence", &path, None);
    run.emit(&a.common, vec![("rank.json", json_bytes(&out)?)])
}

fn cmd_cert(a: CertArgs) -> Result<()> {
    let p: CertParams = resolve("cert-irrational", &a.common, &a)?;
    if dumped(&a.common, &p)? {
        return Ok(());
    }
    let path = required(&p.matrix, "matrix")?;
    if p.b == 0 || !(p.budget > 0.0) {
        return Err(Error::InvalidParameter("B and budget must be positive".into()));
    }
    let (theta, raw) = read_matrix(&path)?;
    let cert = cert_completely_irrational_with(
        &theta,
        p.b,
        &CertConfig {
            budget: p.budget,
            max_depth: p.max_depth,
        },
    )?;
    let mut run = Run::new("cert-irrational", &p, None)?;
    run.input("matrix", &path, Some(raw));
    run.emit(&a.common, vec![("certificate.json", json_bytes(&cert)?)])
}

fn cmd_construct(a: ConstructArgs) -> Result<()> {
    let name = match a.kind {
        ConstructKind::Liouville => "construct liouville",
        ConstructKind::Compose => "construct compose",
        ConstructKind::Extend => "construct extend",
    };
    let p: ConstructParams = resolve(name, &a.common, &a)?;
    if dumped(&a.common, &p)? {
        return Ok(());
    }
    let mut run = Run::new(name, &p, Some(p.seed))?;
    let theta = match a.kind {
        ConstructKind::Liouville => {
            let spec = LiouvilleSpec::from_seed(p.n, p.gamma.clone(), p.u.clone(), p.q1, p.k, p.seed)?;
            liouville_column(&spec)?
        }
        ConstructKind::Compose => {
            if p.cols.is_empty() {
                return Err(Error::InvalidParameter("missing required --cols".into()));
            }
            let mut cols = Vec::new();
            for (i, c) in p.cols.iter().enumerate() {
                let (t, raw) = read_matrix(c)?;
                if t.m() != 1 {
                    return Err(Error::DimensionMismatch(format!("{c} has {} columns, expected 1", t.m())));
                }
                run.input(&format!("col{i}"), c, Some(raw));
                cols.push(t);
            }
            compose_base(&cols, p.extra, p.seed, p.precision_bits)?
        }
        ConstructKind::Extend => {
            let path = required(&p.base, "base")?;
            let m = required(&p.m, "m")?;
            let (base, raw) = read_matrix(&path)?;
            run.input("base", &path, Some(raw));
            extend_random(&ExtensionSpec {
                base,
                m,
                seed: p.seed,
                precision_bits: p.precision_bits,
            })?
        }
    };
    run.emit(&a.common, vec![("matrix.json", json_bytes(&theta)?)])
}

fn cmd_verify(a: VerifyArgs) -> Result<()> {
    let name = format!("verify {}", a.pipeline.name());
    let (bytes, holds, summary, config, seed) = match a.pipeline {
        PipelineKind::Lemma3 => {
            let p: Lemma3Params = resolve(&name, &a.common, &a)?;
            if dumped(&a.common, &p)? {
                return Ok(());
            }
            let r = run_lemma3(&p)?;
            let s = format!("{} of {} seeds passed", r.passed, r.seeds.len());
            (json_bytes(&r)?, r.policy_holds, s, serde_json::to_value(&p)?, p.liouville_seed)
        }
        PipelineKind::Lemma4 => {
            let p: Lemma4Params = resolve(&name, &a.common, &a)?;
            if dumped(&a.common, &p)? {
                return Ok(());
            }
            let r = run_lemma4(&p)?;
            let s = format!(
                "{} of {} seeds passed, certificate {}",
                r.passed,
                r.seeds.len(),
                if r.certificate_error.is_none() { "ok" } else { "failed" }
            );
            (json_bytes(&r)?, r.policy_holds, s, serde_json::to_value(&p)?, p.liouville_seed)
        }
        PipelineKind::Theorem1Sanity => {
            let p: Theorem1Params = resolve(&name, &a.common, &a)?;
            if dumped(&a.common, &p)? {
                return Ok(());
            }
            let r = run_theorem1_sanity(&p)?;
            let s = format!("{} of {} samples passed", r.passed, r.samples.len());
            let seed = p.seeds.first().copied().unwrap_or(0);
            (json_bytes(&r)?, r.policy_holds, s, serde_json::to_value(&p)?, seed)
        }
    };
    let run = Run::new(&name, &config, Some(seed))?;
    run.emit(&a.common, vec![("report.json", bytes)])?;
    eprintln!("{name}: {summary}");
    if holds {
        Ok(())
    } else {
        Err(Error::VerificationFailed(summary))
    }
}

fn plot_rows(seq: &ApproxSequence, kind: PlotKind) -> Result<Vec<(usize, String)>> {
    let recs = &seq.records;
    if recs.is_empty() {
        return Err(Error::InsufficientData("empty sequence".into()));
    }
    let (m, n) = (seq.theta.m(), seq.theta.n());
    let pairs = || (0..recs.len().saturating_sub(1)).map(|i| (i + 1, &recs[i], &recs[i + 1]));
    let term = |xi: Rat, next: u64| num_traits::pow(rat_int(next), m) * num_traits::pow(xi, n);
    Ok(match kind {
        PlotKind::XiProduct => pairs()
            .map(|(nu, r, s)| (nu, rat_to_f64(&term(r.xi.mid().clone(), s.xnorm)).to_string()))
            .collect(),
        PlotKind::Ratios => pairs()
            .filter(|(_, r, _)| !r.exact_hit && r.xi.mid() > &Rat::from_integer(0.into()))
            .map(|(nu, r, s)| {
                let v = -crate::exactnum::ln_rat(r.xi.mid()) / (s.xnorm as f64).ln();
                (nu, v.to_string())
            })
            .collect(),
        PlotKind::Tailrank => {
            let z = seq.extended_vectors();
            (0..z.len()).map(|i| (i + 1, int_rank(&z[i..]).to_string())).collect()
        }
        PlotKind::Series => {
            let mut acc = Rat::from_integer(0.into());
            pairs()
                .map(|(nu, r, s)| {
                    acc += term(r.xi.hi(), s.xnorm);
                    (nu, rat_to_f64(&acc).to_string())
                })
                .collect()
        }
    })
}

fn cmd_plotdata(a: PlotArgs) -> Result<()> {
    let p: PlotParams = resolve("plotdata", &a.common, &a)?;
    if dumped(&a.common, &p)? {
        return Ok(());
    }
    let path = required(&p.sequence, "sequence")?;
    let kind = required(&p.kind, "kind")?;
    let seq = read_sequence(&path)?;
    let rows = plot_rows(&seq, kind)?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(["index", "value"])?;
    for (i, v) in rows {
        w.write_record([i.to_string(), v])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    let file = match kind {
        PlotKind::XiProduct => "plot_xi_product.csv",
        PlotKind::Ratios => "plot_ratios.csv",
        PlotKind::Tailrank => "plot_tailrank.csv",
        PlotKind::Series => "plot_series.csv",
    };
    let mut run = Run::new("plotdata", &p, None)?;
    run.input("sequence", &path, None);
    run.emit(&a.common, vec![(file, bytes)])
}

fn cmd_series(a: SeriesArgs) -> Result<()> {
    let p: SeriesParams = resolve("series", &a.common, &a)?;
    if dumped(&a.common, &p)? {
        return Ok(());
    }
    let path = required(&p.sequence, "sequence")?;
    let seq = read_sequence(&path)?;
    let m = p.m.unwrap_or(seq.theta.m());
    let n = p.n.unwrap_or(seq.theta.n());
    let count = p.count.unwrap_or(seq.len().saturating_sub(1));
    let rep = series_partial_sums(&seq, m, n, count)?;
    let mut run = Run::new("series", &p, None)?;
    run.input("sequence", &path, None);
    run.emit(&a.common, vec![("series.json", json_bytes(&rep)?)])
}

fn cmd_badset(a: BadsetArgs) -> Result<()> {
    let p: BadsetParams = resolve("badset-mc", &a.common, &a)?;
    if dumped(&a.common, &p)? {
        return Ok(());
    }
    let path = required(&p.matrix, "matrix")?;
    let t = required(&p.t_max, "T")?;
    let nu = required(&p.nu, "nu")?;
    let m = required(&p.m, "m")?;
    if t == 0 || !(p.budget > 0.0) {
        return Err(Error::InvalidParameter("T and budget must be positive".into()));
    }
    if p.samples < crate::construct::MIN_MC_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "samples = {} is below the minimum {}",
            p.samples,
            crate::construct::MIN_MC_SAMPLES
        )));
    }
    let (base, raw) = read_matrix(&path)?;
    let cfg = BadsetConfig {
        budget: p.budget,
        y_window: p.y_window,
        precision_bits: p.precision_bits,
        max_depth: p.max_depth,
    };
    let seq = best_sequence_with(&base, t, &ApproxConfig { max_depth: p.max_depth })?;
    let rep = badset_mc(&base, &seq, nu, m, p.samples, p.seed, &cfg)?;
    let mut csv = Vec::new();
    write_badset_csv(&rep, &mut csv)?;
    let mut summary = rep.clone();
    summary.per_sample.clear();
    let mut run = Run::new("badset-mc", &p, Some(p.seed))?;
    run.input("matrix", &path, Some(raw));
    run.emit(&a.common, vec![("badset.json", json_bytes(&summary)?), ("badset.csv", csv)])
}
