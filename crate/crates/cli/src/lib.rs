//! Front end for the `weakcm` library: parses input documents, dispatches to
//! the library and renders reports as JSON or indented text.
//!
//! Exit codes: 0 ok, 1 invalid input (with the name of the failing
//! condition), 2 internal or unsupported.

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use weakcm::cmfield::{self, CmFieldError, FieldParams};
use weakcm::dodson::enumerate::{classify_conjugacy, enumerate_admissible, DEFAULT_ENUM_BOUND};
use weakcm::dodson::partition::{HodgePartition, PartitionBlock, PartitionPreset};
use weakcm::dodson::presets::{preset_report, weight1_presets};
use weakcm::dodson::reflex::{reflex_from_dodson, AbstractCMType};
use weakcm::dodson::imn2::{parse_bits, ImN2Element};
use weakcm::dodson::DodsonError;
use weakcm::hodgeprod::{
    self, check_disjoint, factor_weak_cm, identification_from_element, k3t2_analyze, level_report,
    level_subspace, tensor_cm, weil_griffiths, HodgeError, Identification, StructureDoc,
};
use weakcm::rational::{squarefree_bound_from_env, RationalStr, SquareFreeError};
use weakcm::tausplit::{split, validate_weak_cm, verify_certificate, PeriodMatrix, PeriodMatrixDoc, SplitError};
use weakcm::tower::{TowerError, TowerHandle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Emit {
    #[default]
    Json,
    Text,
}

#[derive(Debug, Parser)]
#[command(name = "weakcm", version, about = "Weak CM-type abelian varieties, Dodson data and CM Hodge structures")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Emit::Json)]
    pub emit: Emit,
    /// Worker threads for parallel enumeration.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Write the report to this file instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Classify degree 2 or 4 CM field parameters into Deg2/A/B/C.
    ClassifyField(InputArg),
    /// Galois group of the closure and its action on embeddings.
    Galois(InputArg),
    /// Reflex field of a quartic CM type (cases B and C).
    Reflex(InputArg),
    /// Split a weak CM period matrix and verify the certificate.
    Split(InputArg),
    /// Check a period matrix against the weak CM conditions.
    Validate(InputArg),
    /// Enumerate admissible subgroups of Im(N,2).
    DodsonEnum(EnumArgs),
    /// Admissible subgroups up to conjugation by a partition stabilizer.
    DodsonClassify(ClassifyArgs),
    /// Reflex degree and induced Dodson data of an abstract CM type.
    DodsonReflex(ReflexArgs),
    /// The thirteen weight-1 configurations with N = 3.
    Presets(PresetArgs),
    /// Analyse S × E for a K3 surface S and an elliptic curve E.
    K3t2(InputArg),
    /// Tensor product of two CM Hodge structures with factor verdicts.
    Product(InputArg),
    /// Weil and Griffiths weight-1 repackagings of a weight-3 structure.
    WeilGriffiths(InputArg),
}

#[derive(Debug, Clone, clap::Args)]
pub struct InputArg {
    /// Input document (JSON); `-` reads stdin.
    #[arg(long)]
    pub input: PathBuf,
}

#[derive(Debug, Clone, clap::Args)]
pub struct EnumArgs {
    #[arg(long)]
    pub n: usize,
    /// Largest N accepted.
    #[arg(long, default_value_t = DEFAULT_ENUM_BOUND)]
    pub bound: usize,
}

#[derive(Debug, Clone, clap::Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub n: usize,
    /// `abl`, `k3`, `cy3`, or a JSON list of blocks `{"p","q","slots"}`.
    #[arg(long)]
    pub partition: String,
    #[arg(long, default_value_t = DEFAULT_ENUM_BOUND)]
    pub bound: usize,
}

#[derive(Debug, Clone, clap::Args)]
pub struct ReflexArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Level n (defaults to N).
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Clone, clap::Args)]
pub struct PresetArgs {
    /// Only this preset.
    #[arg(long)]
    pub id: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    InvalidInput,
    MathError,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::InvalidInput => 1,
            Status::MathError => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub condition: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<Value>,
    pub diagnostics: Vec<Diagnostic>,
}

/// A failure with its condition name and status.
#[derive(Debug, Clone)]
pub struct Failure {
    pub status: Status,
    pub condition: String,
    pub message: String,
}

impl Failure {
    fn invalid(condition: &str, message: impl ToString) -> Self {
        Failure {
            status: Status::InvalidInput,
            condition: condition.into(),
            message: message.to_string(),
        }
    }
    fn internal(condition: &str, message: impl ToString) -> Self {
        Failure {
            status: Status::MathError,
            condition: condition.into(),
            message: message.to_string(),
        }
    }
}

fn tower_condition(e: &TowerError) -> (&'static str, Status) {
    match e {
        TowerError::NotSquareFree(_) => ("square-free-discriminant", Status::InvalidInput),
        TowerError::BadDiscriminant(_) => ("discriminant", Status::InvalidInput),
        TowerError::WrongSign { .. } => ("sign-condition", Status::InvalidInput),
        TowerError::SquareClassMismatch { .. } => ("square-class", Status::InvalidInput),
        TowerError::DegenerateBiquadratic(_) => ("degenerate-biquadratic", Status::InvalidInput),
        TowerError::SquareFree(SquareFreeError::Inconclusive { .. }) => {
            ("square-free-inconclusive", Status::MathError)
        }
    }
}

impl From<CmFieldError> for Failure {
    fn from(e: CmFieldError) -> Self {
        match &e {
            CmFieldError::Tower(t) => {
                let (c, s) = tower_condition(t);
                Failure {
                    status: s,
                    condition: c.into(),
                    message: e.to_string(),
                }
            }
            CmFieldError::WrongCase(_) => Failure::invalid("wrong-case", e),
        }
    }
}

impl From<SplitError> for Failure {
    fn from(e: SplitError) -> Self {
        match e {
            SplitError::Field(f) => f.into(),
            SplitError::Internal { .. } => Failure::internal(&e.condition(), &e),
            _ => Failure::invalid(&e.condition(), &e),
        }
    }
}

impl From<DodsonError> for Failure {
    fn from(e: DodsonError) -> Self {
        match e {
            DodsonError::BoundExceeded { .. } => Failure::internal(&e.condition(), &e),
            _ => Failure::invalid(&e.condition(), &e),
        }
    }
}

impl From<HodgeError> for Failure {
    fn from(e: HodgeError) -> Self {
        Failure::invalid(&e.condition(), &e)
    }
}

fn read_input(path: &PathBuf) -> Result<String, Failure> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::Read::read_to_string(&mut std::io::stdin(), &mut s)
            .map_err(|e| Failure::invalid("malformed-input", format!("stdin: {e}")))?;
        Ok(s)
    } else {
        std::fs::read_to_string(path)
            .map_err(|e| Failure::invalid("malformed-input", format!("{}: {e}", path.display())))
    }
}

fn parse_doc<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T, Failure> {
    serde_json::from_str(text).map_err(|e| Failure::invalid("malformed-input", e))
}

fn load<T: for<'de> Deserialize<'de>>(path: &PathBuf) -> Result<T, Failure> {
    parse_doc(&read_input(path)?)
}

fn to_value<T: Serialize>(x: &T) -> Result<Value, Failure> {
    serde_json::to_value(x).map_err(|e| Failure::internal("serialization", e))
}

pub fn parse_partition(n: usize, spec: &str) -> Result<HodgePartition, Failure> {
    let spec = spec.trim();
    if spec.starts_with('[') {
        let blocks: Vec<PartitionBlock> = parse_doc(spec)?;
        Ok(HodgePartition::from_blocks(n, &blocks)?)
    } else {
        let preset: PartitionPreset = spec.parse().map_err(|e: String| Failure::invalid("partition", e))?;
        Ok(HodgePartition::preset(preset, n))
    }
}

/// Input of `k3t2`: `tau_e` declares the image of `√p_E` in the closure of
/// `ℚ(Π)` (contained situation); without it the fields are taken disjoint.
/// Slot-based inputs may give `identification` pairs instead.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct K3T2Doc {
    pub ts: StructureDoc,
    pub e: StructureDoc,
    #[serde(default)]
    pub tau_e: Option<ElementDoc>,
    #[serde(default)]
    pub identification: Option<Vec<(Vec<usize>, Vec<usize>)>>,
}

/// A tower element by basis label or by coefficients.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(untagged)]
pub enum ElementDoc {
    Label(String),
    Coeffs(Vec<RationalStr>),
}

/// Input of `dodson-reflex`. `phi` is a sign word like `"000"`; `blocks`
/// lists 1-based slots of each field in a direct sum.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CmTypeDoc {
    pub group: Vec<ImN2Element>,
    #[serde(default)]
    pub phi: Option<String>,
    #[serde(default)]
    pub blocks: Option<Vec<Vec<usize>>>,
}

impl CmTypeDoc {
    pub fn build(&self) -> Result<AbstractCMType, Failure> {
        let n = self
            .group
            .first()
            .map(|g| g.n())
            .ok_or_else(|| Failure::invalid("malformed-input", "empty group"))?;
        let blocks = match &self.blocks {
            None => None,
            Some(bs) => Some(
                bs.iter()
                    .map(|b| {
                        b.iter()
                            .map(|&x| match x.checked_sub(1) {
                                Some(i) if i < n => Ok(i),
                                _ => Err(Failure::invalid("malformed-input", format!("block slot {x} out of range"))),
                            })
                            .collect()
                    })
                    .collect::<Result<_, Failure>>()?,
            ),
        };
        let mut ct = AbstractCMType::new(self.group.clone(), blocks);
        if let Some(w) = &self.phi {
            ct.phi = parse_bits(w)
                .filter(|_| w.len() == n)
                .ok_or_else(|| Failure::invalid("malformed-input", format!("bad sign word {w:?}")))?;
        }
        Ok(ct)
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ProductDoc {
    pub factors: (StructureDoc, StructureDoc),
    #[serde(default)]
    pub identification: Option<Vec<(Vec<usize>, Vec<usize>)>>,
}

fn pairs_ident(pairs: &Option<Vec<(Vec<usize>, Vec<usize>)>>) -> Result<Identification, Failure> {
    let Some(pairs) = pairs else {
        return Ok(Identification::Independent);
    };
    let zb = |p: &Vec<usize>| -> Result<Vec<usize>, Failure> {
        p.iter()
            .map(|&x| x.checked_sub(1).ok_or_else(|| Failure::invalid("malformed-input", "permutations are 1-based")))
            .collect()
    };
    Ok(Identification::Generators(
        pairs.iter().map(|(a, b)| Ok((zb(a)?, zb(b)?))).collect::<Result<_, Failure>>()?,
    ))
}

fn structure_summary(h: &hodgeprod::CMHodgeStructure) -> Value {
    json!({
        "weight": h.weight,
        "dim": h.dim(),
        "slots": h.slots(),
        "group_order": h.group.len(),
        "hodge_numbers": h.hodge_numbers(),
        "is_cm": h.is_cm(),
    })
}

fn run_k3t2(doc: &K3T2Doc, bound: u64) -> Result<Value, Failure> {
    let (ts, fs) = doc.ts.build(bound)?;
    let (e, fe) = doc.e.build(bound)?;
    let ident = match (&doc.tau_e, &fs, &fe, &doc.identification) {
        (Some(_), _, _, Some(_)) => {
            return Err(Failure::invalid("malformed-input", "give either tau_e or identification"))
        }
        (Some(x), Some(fs), Some(fe), None) => {
            let t = &fs.tower;
            let x = match x {
                ElementDoc::Label(l) => t
                    .named(l)
                    .ok_or_else(|| Failure::invalid("malformed-input", format!("unknown element {l:?}")))?,
                ElementDoc::Coeffs(c) if c.len() == t.dim() => t.element(c.iter().map(|q| q.0.clone()).collect()),
                ElementDoc::Coeffs(_) => {
                    return Err(Failure::invalid("malformed-input", "tau_e has the wrong number of coefficients"))
                }
            };
            identification_from_element(fs, fe, &x)?
        }
        (Some(_), _, _, None) => {
            return Err(Failure::invalid("malformed-input", "tau_e needs field-based ts and e"))
        }
        (None, Some(fs), Some(fe), None) => {
            check_disjoint(fs, fe)?;
            Identification::Independent
        }
        (None, _, _, pairs) => pairs_ident(pairs)?,
    };
    to_value(&k3t2_analyze(&ts, &e, &ident)?)
}

fn run_product(doc: &ProductDoc, bound: u64) -> Result<Value, Failure> {
    let (h1, _) = doc.factors.0.build(bound)?;
    let (h2, _) = doc.factors.1.build(bound)?;
    let tp = tensor_cm(&h1, &h2, &pairs_ident(&doc.identification)?)?;
    let level = level_subspace(&tp.structure)?;
    Ok(json!({
        "product": structure_summary(&tp.structure),
        "level": to_value(&level_report(&level))?,
        "verdicts": to_value(&factor_weak_cm(&tp)?)?,
    }))
}

fn run_weil_griffiths(doc: &StructureDoc, bound: u64) -> Result<Value, Failure> {
    let (h, _) = doc.build(bound)?;
    let r = weil_griffiths(&h)?;
    Ok(json!({
        "input": structure_summary(&h),
        "weil": structure_summary(&r.weil),
        "griffiths": structure_summary(&r.griffiths),
        "original_cm": r.original_cm,
        "weil_cm": r.weil_cm,
        "griffiths_cm": r.griffiths_cm,
        "common_algebra_ok": r.common_algebra_ok,
    }))
}

fn run_split(doc: &PeriodMatrixDoc, bound: u64) -> Result<Value, Failure> {
    let pm = PeriodMatrix::from_doc(doc, bound)?;
    let cert = split(&pm)?;
    let v = verify_certificate(&pm, &cert);
    let mut out = json!({
        "verified": v.verified,
        "certificate": to_value(&cert.to_doc())?,
    });
    if let Some(d) = v.diagnostic {
        out["diagnostic"] = json!(d);
    }
    Ok(out)
}

fn dispatch(cmd: &Command) -> Result<Value, Failure> {
    let bound = squarefree_bound_from_env();
    match cmd {
        Command::ClassifyField(a) => {
            let f = cmfield::classify(&load::<FieldParams>(&a.input)?, bound)?;
            to_value(&cmfield::case_report(&f))
        }
        Command::Galois(a) => {
            let f = cmfield::classify(&load::<FieldParams>(&a.input)?, bound)?;
            to_value(&cmfield::galois_report(&f))
        }
        Command::Reflex(a) => {
            let f = cmfield::classify(&load::<FieldParams>(&a.input)?, bound)?;
            to_value(&cmfield::reflex_report(&f)?)
        }
        Command::Split(a) => run_split(&load(&a.input)?, bound),
        Command::Validate(a) => {
            let pm = PeriodMatrix::from_doc(&load(&a.input)?, bound)?;
            let de = validate_weak_cm(&pm)?;
            to_value(&de.report(&pm))
        }
        Command::DodsonEnum(a) => {
            let subs = enumerate_admissible(a.n, a.bound)?;
            let list: Vec<Value> = subs
                .iter()
                .map(|s| {
                    let tag = s.triple.tag();
                    json!({
                        "order": s.elements.len(),
                        "elements": s.elements.iter().map(ToString::to_string).collect::<Vec<_>>(),
                        "tag": tag.to_string(),
                        "triple": s.triple,
                    })
                })
                .collect();
            Ok(json!({ "n": a.n, "count": subs.len(), "subgroups": list }))
        }
        Command::DodsonClassify(a) => {
            let p = parse_partition(a.n, &a.partition)?;
            to_value(&classify_conjugacy(a.n, &p, a.bound)?)
        }
        Command::DodsonReflex(a) => {
            let ct = load::<CmTypeDoc>(&a.input)?.build()?;
            let n = a.n.unwrap_or(ct.n);
            to_value(&reflex_from_dodson(&ct, n)?)
        }
        Command::Presets(a) => {
            let ps = weight1_presets();
            let chosen: Vec<_> = ps.iter().filter(|p| a.id.as_deref().is_none_or(|id| p.id == id)).collect();
            if chosen.is_empty() {
                return Err(Failure::invalid("unknown-preset", format!("no preset {:?}", a.id)));
            }
            let reports = chosen.into_iter().map(preset_report).collect::<Result<Vec<_>, _>>()?;
            to_value(&reports)
        }
        Command::K3t2(a) => run_k3t2(&load(&a.input)?, bound),
        Command::Product(a) => run_product(&load(&a.input)?, bound),
        Command::WeilGriffiths(a) => run_weil_griffiths(&load(&a.input)?, bound),
    }
}

pub fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::ClassifyField(_) => "classify-field",
        Command::Galois(_) => "galois",
        Command::Reflex(_) => "reflex",
        Command::Split(_) => "split",
        Command::Validate(_) => "validate",
        Command::DodsonEnum(_) => "dodson-enum",
        Command::DodsonClassify(_) => "dodson-classify",
        Command::DodsonReflex(_) => "dodson-reflex",
        Command::Presets(_) => "presets",
        Command::K3t2(_) => "k3t2",
        Command::Product(_) => "product",
        Command::WeilGriffiths(_) => "weil-griffiths",
    }
}

/// Runs one subcommand. Panics inside the library are caught and reported as
/// internal errors.
pub fn run_command(cmd: &Command) -> Report {
    let command = command_name(cmd).to_string();
    let outcome = std::panic::catch_unwind(|| dispatch(cmd))
        .unwrap_or_else(|_| Err(Failure::internal("internal-panic", "the computation panicked")));
    match outcome {
        Ok(payload) => Report {
            command,
            status: Status::Ok,
            payload: Some(payload),
            diagnostics: Vec::new(),
        },
        Err(f) => Report {
            command,
            status: f.status,
            payload: None,
            diagnostics: vec![Diagnostic {
                condition: f.condition,
                message: f.message,
            }],
        },
    }
}

pub fn render(report: &Report, emit: Emit) -> String {
    match emit {
        Emit::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
            s.push('\n');
            s
        }
        Emit::Text => render_text(report),
    }
}

fn render_text(report: &Report) -> String {
    let mut out = format!("{}: {}\n", report.command, serde_json::to_value(report.status).unwrap().as_str().unwrap());
    for d in &report.diagnostics {
        out.push_str(&format!("error [{}]: {}\n", d.condition, d.message));
    }
    if let Some(p) = &report.payload {
        text_value(p, 0, &mut out);
    }
    out
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some("-".into()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        Value::Array(a) if a.iter().all(|x| !x.is_array() && !x.is_object()) => {
            Some(format!("[{}]", a.iter().map(|x| scalar(x).unwrap()).collect::<Vec<_>>().join(", ")))
        }
        _ => None,
    }
}

fn text_value(v: &Value, depth: usize, out: &mut String) {
    let pad = "  ".repeat(depth);
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                match scalar(x) {
                    Some(s) => out.push_str(&format!("{pad}{k}: {s}\n")),
                    None => {
                        out.push_str(&format!("{pad}{k}:\n"));
                        text_value(x, depth + 1, out);
                    }
                }
            }
        }
        Value::Array(a) => {
            for x in a {
                match scalar(x) {
                    Some(s) => out.push_str(&format!("{pad}- {s}\n")),
                    None => {
                        out.push_str(&format!("{pad}-\n"));
                        text_value(x, depth + 1, out);
                    }
                }
            }
        }
        _ => out.push_str(&format!("{pad}{}\n", scalar(v).unwrap())),
    }
}

/// Parses arguments, runs, writes output; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("warning: could not configure {t} threads: {e}");
        }
    }
    let report = run_command(&cli.command);
    let text = render(&report, cli.emit);
    match &cli.output {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return 2;
            }
            println!("{}: {}", report.command, summary_line(&report));
        }
        None => print!("{text}"),
    }
    report.status.exit_code()
}

/// One-line summary printed when the report goes to a file.
pub fn summary_line(report: &Report) -> String {
    match (&report.payload, report.diagnostics.first()) {
        (_, Some(d)) => format!("error [{}]", d.condition),
        (Some(p), None) => match p.get("verified") {
            Some(v) => format!("verified: {v}"),
            None => "ok".into(),
        },
        (None, None) => "ok".into(),
    }
}
