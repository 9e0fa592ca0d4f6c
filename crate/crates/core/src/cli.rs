//! Command-line front end. Every subcommand prints a line-oriented report
//! (`key<TAB>value`, one record per line) and maps its outcome to an exit
//! code: 0 for success, 1 for a violated or failed check, 2 for bad input.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::character::{
    alpha_probe, axiom_check, distinctness_probe, enumerate_sign_homomorphisms, gram_matrix, CharacterSpec, Exponent, Factor, Rho,
};
use crate::clopen::{ClopenLiteral, ClopenSet, FinitePath};
use crate::construct::{
    center_involutions, centralize_set, compare_sets, extend_path, move_set_close, rokhlin_tower, split_subset, Verification,
};
use crate::diagram::{BratteliDiagram, DiagramFile};
use crate::error::{Error, Result};
use crate::group::{ElementLiteral, GroupElement};
use crate::linalg::{psd_check, Verdict};
use crate::measure::{InvariantMeasure, MeasureLiteral};
use crate::representation::{diag_trace, product_trace, projector_trace, projector_trace_bruteforce, trace_theorem_check, FiniteRepContext, DEFAULT_BUDGET};
use crate::scalar::Value;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "bratteli", version, about = "Full groups of Bratteli diagrams: checks, probes and constructions")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Diagram file (JSON), or a built-in: odometer[:k], fibonacci, fig1.
    #[arg(long, global = true, default_value = "odometer")]
    pub diagram: String,
    #[arg(long, global = true, default_value_t = 12)]
    pub depth: usize,
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, global = true, value_enum, default_value_t = ArithMode::Exact)]
    pub mode: ArithMode,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Extra measure `NAME=FILE`; `ergodic` is preloaded for stationary diagrams.
    #[arg(long = "measure", global = true)]
    pub measures: Vec<String>,
    /// Measures used by constructions, comma separated (default: all loaded).
    #[arg(long, global = true)]
    pub using: Option<String>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ArithMode {
    Exact,
    Float,
}

#[derive(Args, Debug, Clone)]
pub struct Sample {
    /// JSON file (or inline array) of element literals.
    #[arg(long)]
    pub elements: Option<String>,
    /// Number of seeded random elements when no file is given.
    #[arg(long, default_value_t = 25)]
    pub count: usize,
    #[arg(long, default_value_t = 4)]
    pub level: usize,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check the diagram invariants.
    Validate,
    /// Path counts h_v per level.
    Counts {
        #[arg(long, default_value_t = 5)]
        level: usize,
    },
    /// Simplicity and the group-simplicity criterion within the depth budget.
    Simple,
    /// Weights of every loaded measure.
    Measures {
        #[arg(long, default_value_t = 4)]
        levels: usize,
    },
    /// Character values on a sample.
    Eval {
        #[arg(long = "char")]
        character: String,
        #[command(flatten)]
        sample: Sample,
    },
    /// Gram matrix of a character on a sample.
    Gram {
        #[arg(long = "char")]
        character: String,
        #[command(flatten)]
        sample: Sample,
    },
    /// Positive semidefiniteness of the Gram matrix.
    Psd {
        #[arg(long = "char")]
        character: String,
        #[command(flatten)]
        sample: Sample,
    },
    /// Character axioms on random pairs.
    Axioms {
        #[arg(long = "char")]
        character: String,
        #[arg(long, default_value_t = 100)]
        pairs: usize,
        #[arg(long, default_value_t = 3)]
        level: usize,
    },
    /// Signed sum over coordinate permutations for μ(Fix)^α.
    AlphaProbe {
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 2)]
        k: u64,
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        level: usize,
    },
    /// Sign homomorphisms found within the depth budget.
    SignHoms,
    /// Rokhlin tower inside a clopen set.
    Rokhlin {
        #[arg(long, default_value = "whole")]
        set: String,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        level: Option<usize>,
    },
    /// Subset with a prescribed fraction of the measure.
    Split {
        #[arg(long, default_value = "whole")]
        set: String,
        /// Ratio, as a fraction `p/q` or a decimal.
        #[arg(long)]
        lambda: String,
        #[arg(long)]
        eps: f64,
    },
    /// Involution moving A into B.
    Compare {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
    },
    /// Element moving A close to B.
    MoveClose {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long)]
        eps: f64,
    },
    /// Push an involution to the center with a count certificate.
    CenterInv {
        #[arg(long, default_value = "whole")]
        set: String,
        /// Element literal of the involution.
        #[arg(long)]
        h: String,
        /// Edge ids of the point prefix, JSON array; searched when omitted.
        #[arg(long)]
        point: Option<String>,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        l: usize,
    },
    /// Invariant approximation of a set at a level.
    Centralize {
        #[arg(long)]
        set: String,
        #[arg(long)]
        n: usize,
    },
    /// Finite-level traces of an element.
    Trace {
        #[arg(long)]
        element: String,
        #[arg(long)]
        level: Option<usize>,
    },
    /// Projector trace of a clopen set over a range of levels.
    Projector {
        #[arg(long)]
        set: String,
        #[arg(long)]
        from: usize,
        #[arg(long)]
        to: usize,
        /// Also enumerate the alternating groups where the budget allows.
        #[arg(long)]
        brute: bool,
    },
    /// Projector traces of supp(g) against μ(Fix(g)).
    TraceTheorem {
        #[arg(long)]
        element: String,
        #[arg(long)]
        from: usize,
        #[arg(long)]
        to: usize,
    },
    /// Element separating two characters.
    Distinct {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
    },
}

/// Loaded diagram plus named measures and global settings.
pub struct Workspace {
    pub diagram: Arc<BratteliDiagram>,
    pub measures: BTreeMap<String, InvariantMeasure>,
    pub global: Global,
}

impl Workspace {
    pub fn load(global: &Global) -> Result<Self> {
        let diagram = Arc::new(load_diagram(&global.diagram)?);
        let mut measures = BTreeMap::new();
        if diagram.tail().is_some() {
            if let Ok(mu) = InvariantMeasure::stationary_ergodic(&diagram) {
                measures.insert("ergodic".to_string(), mu);
            }
        }
        for spec in &global.measures {
            let (name, file) = spec.split_once('=').ok_or_else(|| Error::Parse(format!("expected NAME=FILE, got `{spec}`")))?;
            let lit: MeasureLiteral = parse_json(file)?;
            measures.insert(name.to_string(), InvariantMeasure::from_literal(&diagram, &lit)?);
        }
        Ok(Workspace { diagram, measures, global: global.clone() })
    }

    pub fn measure(&self, name: &str) -> Result<&InvariantMeasure> {
        self.measures.get(name).ok_or_else(|| Error::UnknownName(name.to_string()))
    }

    /// Measures selected by `--using`, or all of them.
    pub fn selected(&self) -> Result<Vec<InvariantMeasure>> {
        let out: Vec<InvariantMeasure> = match &self.global.using {
            Some(list) => list.split(',').map(|n| self.measure(n.trim()).cloned()).collect::<Result<_>>()?,
            None => self.measures.values().cloned().collect(),
        };
        if out.is_empty() {
            return Err(Error::EmptyMeasureList);
        }
        Ok(out)
    }

    fn primary(&self) -> Result<InvariantMeasure> {
        Ok(self.selected()?.remove(0))
    }

    pub fn set(&self, arg: &str) -> Result<ClopenSet> {
        match arg.trim() {
            "whole" => Ok(ClopenSet::whole(&self.diagram)),
            "empty" => Ok(ClopenSet::empty(&self.diagram)),
            other => ClopenSet::from_literal(&self.diagram, &parse_json::<ClopenLiteral>(other)?),
        }
    }

    pub fn element(&self, arg: &str) -> Result<GroupElement> {
        GroupElement::from_literal(&self.diagram, &parse_json::<ElementLiteral>(arg)?)
    }

    pub fn sample(&self, s: &Sample) -> Result<Vec<GroupElement>> {
        match &s.elements {
            Some(src) => {
                let lits: Vec<ElementLiteral> = parse_json(src)?;
                lits.iter().map(|l| GroupElement::from_literal(&self.diagram, l)).collect()
            }
            None => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.global.seed);
                (0..s.count).map(|_| GroupElement::random(&self.diagram, s.level, &mut rng)).collect()
            }
        }
    }

    /// Character from a shorthand (`identity`, `regular`, `fix`, `fix^k`),
    /// an inline literal, or a literal file.
    pub fn character(&self, arg: &str) -> Result<CharacterSpec> {
        let arg = arg.trim();
        match arg {
            "identity" => return Ok(CharacterSpec::Identity),
            "regular" => return Ok(CharacterSpec::Regular),
            "fix" => return Ok(CharacterSpec::power(&self.primary()?, 1)),
            _ => {}
        }
        if let Some(k) = arg.strip_prefix("fix^") {
            let k: u32 = k.parse().map_err(|_| Error::Parse(format!("bad exponent in `{arg}`")))?;
            return Ok(CharacterSpec::power(&self.primary()?, k));
        }
        let lit: CharacterLiteral = parse_json(arg)?;
        lit.build(self)
    }
}

/// `{"kind": "identity"|"regular"|"product", "measures": [{"measure_ref", "alpha"}], "rho": {"parity": i}}`.
#[derive(Clone, Debug, Deserialize)]
pub struct CharacterLiteral {
    pub kind: String,
    #[serde(default)]
    pub measures: Vec<FactorLiteral>,
    #[serde(default)]
    pub rho: Option<RhoLiteral>,
}

#[derive(Clone, Debug, Deserialize)]
pub struct FactorLiteral {
    pub measure_ref: String,
    pub alpha: f64,
}

#[derive(Clone, Debug, Deserialize)]
pub struct RhoLiteral {
    /// Index into the sign homomorphisms found within the depth budget.
    pub parity: usize,
}

impl CharacterLiteral {
    pub fn build(&self, ws: &Workspace) -> Result<CharacterSpec> {
        let base = match self.kind.as_str() {
            "identity" => CharacterSpec::Identity,
            "regular" => CharacterSpec::Regular,
            "product" => {
                let factors = self
                    .measures
                    .iter()
                    .map(|f| {
                        let exponent = if f.alpha >= 0.0 && f.alpha.fract() == 0.0 && f.alpha <= u32::MAX as f64 {
                            Exponent::Integer(f.alpha as u32)
                        } else {
                            Exponent::Real(f.alpha)
                        };
                        Ok(Factor { measure: ws.measure(&f.measure_ref)?.clone(), exponent })
                    })
                    .collect::<Result<Vec<_>>>()?;
                CharacterSpec::Product { factors, rho: None }
            }
            other => return Err(Error::UnknownName(other.to_string())),
        };
        match &self.rho {
            None => Ok(base),
            Some(r) => {
                let homs = enumerate_sign_homomorphisms(&ws.diagram, ws.global.depth)?;
                let s = homs.get(r.parity).ok_or_else(|| Error::UnknownName(format!("parity {}", r.parity)))?;
                Ok(base.with_rho(Rho::Parity(s.clone())))
            }
        }
    }
}

pub fn load_diagram(arg: &str) -> Result<BratteliDiagram> {
    match arg {
        "odometer" => return Ok(BratteliDiagram::odometer(2)),
        "fibonacci" => return Ok(BratteliDiagram::fibonacci()),
        "fig1" => return Ok(BratteliDiagram::two_level_example()),
        _ => {}
    }
    if let Some(k) = arg.strip_prefix("odometer:") {
        let k: u64 = k.parse().map_err(|_| Error::Parse(format!("bad odometer base in `{arg}`")))?;
        if k < 2 {
            return Err(Error::InvalidDiagram("odometer base must be at least 2".into()));
        }
        return Ok(BratteliDiagram::odometer(k));
    }
    let file: DiagramFile = parse_json(arg)?;
    file.build()
}

/// Inline JSON when the argument starts like a JSON document, otherwise the
/// contents of the named file.
pub fn parse_json<T: for<'de> Deserialize<'de>>(arg: &str) -> Result<T> {
    let t = arg.trim_start();
    let text = if t.starts_with('{') || t.starts_with('[') {
        t.to_string()
    } else {
        std::fs::read_to_string(Path::new(arg)).map_err(|e| Error::Parse(format!("{arg}: {e}")))?
    };
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{arg}: {e}")))
}

fn parse_value(s: &str) -> Result<Value> {
    s.trim().parse()
}

fn json<T: serde::Serialize>(x: &T) -> String {
    serde_json::to_string(x).expect("literals serialize")
}

fn floatify(v: &Value) -> Value {
    Value::approx(v.to_f64(), v.err())
}

/// Report plus exit code.
pub struct Outcome {
    pub report: String,
    pub code: i32,
}

struct Report(String);

impl Report {
    fn new(op: &str) -> Self {
        let mut r = Report(String::new());
        r.kv("op", op);
        r
    }

    fn kv(&mut self, key: &str, value: impl std::fmt::Display) {
        let _ = writeln!(self.0, "{key}\t{value}");
    }

    fn raw(&mut self, text: &str) {
        self.0.push_str(text);
        if !text.is_empty() && !text.ends_with('\n') {
            self.0.push('\n');
        }
    }

    fn verification(&mut self, v: &Verification) -> i32 {
        self.raw(&v.to_string());
        self.finish(v.passed())
    }

    fn finish(&mut self, ok: bool) -> i32 {
        self.kv("status", if ok { "ok" } else { "violated" });
        if ok {
            EXIT_OK
        } else {
            EXIT_VIOLATED
        }
    }
}

fn error_code(e: &Error) -> i32 {
    match e {
        Error::DepthExhausted { .. } | Error::BudgetExceeded(_) | Error::NotFound(_) | Error::NoCastle { .. } => EXIT_VIOLATED,
        _ => EXIT_INPUT,
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            return Outcome { report: e.to_string(), code };
        }
    };
    execute(&cli)
}

pub fn execute(cli: &Cli) -> Outcome {
    if let Command::Validate = cli.command {
        return validate(&cli.global.diagram);
    }
    let result = Workspace::load(&cli.global).and_then(|ws| dispatch(&ws, &cli.command));
    match result {
        Ok((report, code)) => Outcome { report, code },
        Err(e) => Outcome { report: format!("error\t{e}\n"), code: error_code(&e) },
    }
}

fn validate(arg: &str) -> Outcome {
    let mut r = Report::new("validate");
    let report = match load_diagram(arg) {
        Ok(d) => d.validate(),
        Err(Error::InvalidDiagram(_)) => match parse_json::<DiagramFile>(arg) {
            Ok(f) => f.validate(),
            Err(e) => return Outcome { report: format!("error\t{e}\n"), code: EXIT_INPUT },
        },
        Err(e) => return Outcome { report: format!("error\t{e}\n"), code: EXIT_INPUT },
    };
    r.raw(&report.to_string());
    let code = if report.is_ok() {
        r.finish(true)
    } else {
        r.kv("status", "invalid");
        EXIT_INPUT
    };
    Outcome { report: r.0, code }
}

fn dispatch(ws: &Workspace, cmd: &Command) -> Result<(String, i32)> {
    let g = &ws.global;
    let d = &ws.diagram;
    let mut r;
    let code = match cmd {
        Command::Validate => unreachable!("handled before loading"),
        Command::Counts { level } => {
            r = Report::new("counts");
            for n in 0..=*level {
                let h = d.path_counts(n)?;
                r.kv(&format!("level {n}"), h.iter().map(ToString::to_string).collect::<Vec<_>>().join(" "));
            }
            r.finish(true)
        }
        Command::Simple => {
            r = Report::new("simple");
            r.kv("depth", g.depth);
            r.kv("simple", d.is_simple(g.depth));
            let (decision, chain) = d.group_simplicity_chain(g.depth);
            r.kv("group-simplicity", decision);
            r.kv("chain", format!("{chain:?}"));
            r.finish(true)
        }
        Command::Measures { levels } => {
            r = Report::new("measures");
            for (name, mu) in &ws.measures {
                r.kv("measure", name);
                r.kv("mode", mu.mode());
                if let Some(root) = mu.perron_root() {
                    r.kv("perron-root", root);
                }
                for n in 0..=*levels {
                    let w = mu.weights(n)?;
                    r.kv(&format!("level {n}"), w.iter().map(ToString::to_string).collect::<Vec<_>>().join(" "));
                }
                r.kv("normalization", mu.normalization(*levels)?);
                r.kv("literal", json(&mu.to_literal(*levels + 1)?));
            }
            r.finish(true)
        }
        Command::Eval { character, sample } => {
            r = Report::new("eval");
            let chi = ws.character(character)?;
            r.kv("char", &chi);
            for (i, x) in ws.sample(sample)?.iter().enumerate() {
                let v = chi.evaluate(x)?;
                let v = if g.mode == ArithMode::Float { floatify(&v) } else { v };
                r.kv(&format!("value {i}"), v);
            }
            r.finish(true)
        }
        Command::Gram { character, sample } => {
            r = Report::new("gram");
            let chi = ws.character(character)?;
            r.kv("char", &chi);
            for (i, row) in gram_rows(ws, &chi, sample)?.iter().enumerate() {
                r.kv(&format!("row {i}"), row.iter().map(ToString::to_string).collect::<Vec<_>>().join(" "));
            }
            r.finish(true)
        }
        Command::Psd { character, sample } => {
            r = Report::new("psd");
            let chi = ws.character(character)?;
            r.kv("char", &chi);
            let gram = gram_rows(ws, &chi, sample)?;
            r.kv("size", gram.len());
            let rep = psd_check(&gram, g.tol)?;
            r.kv("method", rep.method);
            r.kv("min-eigenvalue-bound", format!("{:e}", rep.min_eigenvalue_bound));
            r.kv("min-eigenvalue-estimate", format!("{:e}", rep.min_eigenvalue_estimate));
            if let Some(w) = &rep.witness {
                r.kv("witness", w.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(" "));
            }
            r.kv("verdict", json(&rep.verdict).trim_matches('"'));
            r.finish(rep.verdict == Verdict::Psd)
        }
        Command::Axioms { character, pairs, level } => {
            r = Report::new("axioms");
            let chi = ws.character(character)?;
            let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
            let samples = (0..*pairs)
                .map(|_| Ok((GroupElement::random(d, *level, &mut rng)?, GroupElement::random(d, *level, &mut rng)?)))
                .collect::<Result<Vec<_>>>()?;
            let rep = axiom_check(&chi, &samples, g.tol)?;
            r.kv("char", &chi);
            r.kv("checked", rep.checked);
            r.kv("catalog", rep.catalog);
            for f in &rep.failures {
                r.kv("failure", format!("{}\t{}\t{}", f.sample, f.axiom, f.deviation));
            }
            r.finish(rep.passed())
        }
        Command::AlphaProbe { alpha, k, n, level } => {
            r = Report::new("alpha-probe");
            let p = alpha_probe(d, &ws.primary()?, *alpha, *k, *n, *level)?;
            r.kv("alpha", p.alpha);
            r.kv("k", p.k);
            r.kv("n", p.n);
            r.kv("level", p.level);
            r.kv("signed-sum", &p.signed_sum);
            r.kv("signed-sum-decimal", format!("{:.9}", p.signed_sum.to_f64()));
            r.kv("closed-form", &p.closed_form);
            r.kv("rising-factorial", &p.rising_factorial);
            r.kv("r-cov", &p.r_cov);
            r.kv("consistent", p.consistent);
            if p.negative {
                r.kv("certificate", format!("Gram sum of mu(Fix)^{} over the coordinate permutations is negative", p.alpha));
            }
            r.finish(!p.negative && p.consistent)
        }
        Command::SignHoms => {
            r = Report::new("sign-homs");
            let homs = enumerate_sign_homomorphisms(d, g.depth)?;
            r.kv("count", homs.len());
            for (i, s) in homs.iter().enumerate() {
                r.kv(&format!("hom {i}"), s);
            }
            r.finish(true)
        }
        Command::Rokhlin { set, m, eps, level } => {
            r = Report::new("rokhlin");
            let ms = ws.selected()?;
            let w = rokhlin_tower(&ws.set(set)?, *m, *eps, &ms, *level, g.depth)?;
            r.kv("level", w.level);
            r.kv("height", w.height);
            r.kv("base", json(&w.base.to_literal()?));
            r.kv("g", json(&w.g.to_literal()));
            for (i, mu) in ms.iter().enumerate() {
                r.kv(&format!("residual[{i}]"), mu.measure_of(&w.residual)?);
            }
            r.verification(&w.verify(&ms, *eps)?)
        }
        Command::Split { set, lambda, eps } => {
            r = Report::new("split");
            let ms = ws.selected()?;
            let w = split_subset(&ws.set(set)?, &parse_value(lambda)?, *eps, &ms, g.depth)?;
            r.kv("level", w.level);
            r.kv("subset", json(&w.subset.to_literal()?));
            for (i, mu) in ms.iter().enumerate() {
                r.kv(&format!("measure[{i}]"), mu.measure_of(&w.subset)?);
            }
            r.verification(&w.verify(&ms, *eps)?)
        }
        Command::Compare { a, b } => {
            r = Report::new("compare");
            let ms = ws.selected()?;
            let w = compare_sets(&ws.set(a)?, &ws.set(b)?, &ms, g.depth)?;
            r.kv("level", w.level);
            r.kv("g", json(&w.g.to_literal()));
            r.kv("transpositions", w.transpositions.iter().map(ToString::to_string).collect::<Vec<_>>().join(" "));
            r.kv("parity", if w.is_even() { "even" } else { "odd" });
            r.verification(&w.verify()?)
        }
        Command::MoveClose { a, b, eps } => {
            r = Report::new("move-close");
            let ms = ws.selected()?;
            let w = move_set_close(&ws.set(a)?, &ws.set(b)?, *eps, &ms, g.depth)?;
            r.kv("lambda", &w.lambda);
            r.kv("g", json(&w.g.to_literal()));
            r.kv("distance", &w.distance);
            r.verification(&w.verify(&ms)?)
        }
        Command::CenterInv { set, h, point, n, l } => {
            r = Report::new("center-inv");
            let a = ws.set(set)?;
            let h = ws.element(h)?;
            let w = match point {
                Some(p) => {
                    let ids: Vec<u64> = parse_json(p)?;
                    let x = FinitePath(ids);
                    let x = if x.level() < *n { extend_path(d, &x, *n)? } else { x };
                    center_involutions(&a, &h, &x, *n, *l, g.depth)?
                }
                None => search_point(&a, &h, *n, *l, g.depth)?,
            };
            let t = &w.table;
            r.kv("n", t.n);
            r.kv("l", t.l);
            r.kv("point", json(&w.x.0));
            r.kv("K_A", format!("{:?}", t.k_ambient));
            r.kv("K_supp_h", format!("{:?}", t.k_support));
            r.kv("K_vw", format!("{:?}", t.k_between));
            r.kv("N", format!("{:?}", t.n_vw));
            r.kv("M", format!("{:?}", t.m_vw));
            r.kv("t", json(&w.t.to_literal()));
            r.kv("h_n", json(&w.h_n.to_literal()));
            for (wv, (x, y)) in w.certificate.iter().enumerate() {
                r.kv(&format!("certificate w={wv}"), format!("{x} {y}"));
            }
            r.verification(&w.verify()?)
        }
        Command::Centralize { set, n } => {
            r = Report::new("centralize");
            let ms = ws.selected()?;
            let c = centralize_set(&ws.set(set)?, *n, &ms, g.depth)?;
            r.kv("n", c.n);
            if let Some((center, cert)) = c.levels {
                r.kv("center-level", center);
                r.kv("certificate-level", cert);
            }
            r.kv("b_n", json(&c.b_n.to_literal()?));
            r.kv("g", json(&c.g.to_literal()));
            r.kv("distance", &c.distance);
            r.verification(&c.verify(&ms)?)
        }
        Command::Trace { element, level } => {
            r = Report::new("trace");
            let x = ws.element(element)?;
            let n = level.unwrap_or(x.level()).max(x.level());
            let ms = ws.selected()?;
            let ctxs = ms.iter().map(|mu| FiniteRepContext::new(mu, n)).collect::<Result<Vec<_>>>()?;
            let mut ok = true;
            for (i, (mu, ctx)) in ms.iter().zip(&ctxs).enumerate() {
                let t = diag_trace(ctx, &x)?;
                let fix = mu.measure_of(&x.fix_set()?)?;
                ok &= t.close_to(&fix, g.tol);
                r.kv(&format!("diag-trace[{i}]"), &t);
                r.kv(&format!("fix-measure[{i}]"), &fix);
            }
            r.kv("product-trace", product_trace(&ctxs, &x)?);
            r.finish(ok)
        }
        Command::Projector { set, from, to, brute } => {
            r = Report::new("projector");
            let a = ws.set(set)?;
            let mu = ws.primary()?;
            let mut ok = true;
            r.kv("columns", if *brute { "level trace brute" } else { "level trace" });
            for n in (*from).max(a.level())..=*to {
                let ctx = FiniteRepContext::new(&mu, n)?;
                let t = projector_trace(&ctx, &a)?;
                if *brute {
                    match projector_trace_bruteforce(&ctx, &a, DEFAULT_BUDGET) {
                        Ok(b) => {
                            ok &= b == t;
                            r.kv("row", format!("{n} {t} {b}"));
                        }
                        Err(Error::BudgetExceeded(_)) => r.kv("row", format!("{n} {t} -")),
                        Err(e) => return Err(e),
                    }
                } else {
                    r.kv("row", format!("{n} {t}"));
                }
            }
            r.finish(ok)
        }
        Command::TraceTheorem { element, from, to } => {
            r = Report::new("trace-theorem");
            let table = trace_theorem_check(&ws.primary()?, &ws.element(element)?, *from, *to)?;
            r.kv("character", &table.character);
            r.raw(&table.to_string());
            r.kv("monotone", table.is_monotone());
            r.finish(table.is_monotone())
        }
        Command::Distinct { a, b } => {
            r = Report::new("distinct");
            let (ca, cb) = (ws.character(a)?, ws.character(b)?);
            let w = distinctness_probe(&ca, &cb, d, g.depth, g.tol)?;
            r.kv("element", json(&w.element.to_literal()));
            r.kv("cycles", w.element.cycle_string());
            r.kv("value-a", &w.value_a);
            r.kv("value-b", &w.value_b);
            r.kv("gap", w.value_a.sub(&w.value_b).abs());
            r.finish(true)
        }
    };
    Ok((r.0, code))
}

fn gram_rows(ws: &Workspace, chi: &CharacterSpec, sample: &Sample) -> Result<Vec<Vec<Value>>> {
    let m = gram_matrix(chi, &ws.sample(sample)?)?;
    Ok(match ws.global.mode {
        ArithMode::Exact => m,
        ArithMode::Float => m.iter().map(|row| row.iter().map(floatify).collect()).collect(),
    })
}

/// First level-`n` point of `A` outside `supp(h)`, from the last path down,
/// for which the construction goes through.
fn search_point(a: &ClopenSet, h: &GroupElement, n: usize, l: usize, depth: usize) -> Result<crate::construct::CenterWitness> {
    let d = a.diagram();
    let supp = h.support()?;
    let mut last = Error::Precondition("A has no level-n path outside supp(h)".into());
    let level_n = a.at_level(n)?;
    let outside = supp.at_level(n)?;
    for v in (0..level_n.members.len()).rev() {
        for i in (0..level_n.members[v].len()).rev() {
            if !level_n.members[v][i] || outside.members[v][i] {
                continue;
            }
            let x = FinitePath::from_index(d, n, v, i)?;
            match center_involutions(a, h, &x, n, l, depth) {
                Ok(w) => return Ok(w),
                Err(e @ Error::Precondition(_)) => last = e,
                Err(e) => return Err(e),
            }
        }
    }
    Err(last)
}

/// Entry point for the binary: writes the report and returns the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let out_path = Cli::try_parse_from(&args).ok().and_then(|c| c.global.out);
    let outcome = run(args);
    match out_path {
        Some(p) => {
            if let Err(e) = std::fs::write(&p, &outcome.report) {
                eprintln!("error\t{}: {e}", p.display());
                return EXIT_INPUT;
            }
        }
        None if outcome.code == EXIT_INPUT => eprint!("{}", outcome.report),
        None => print!("{}", outcome.report),
    }
    outcome.code
}

#[cfg(test)]
mod tests {
    use super::*;

    fn go(args: &[&str]) -> Outcome {
        run(std::iter::once("bratteli").chain(args.iter().copied()))
    }

    #[test]
    fn alpha_probe_exit_codes() {
        let o = go(&["alpha-probe", "--alpha", "0.5", "--k", "2", "--n", "3", "--level", "3"]);
        assert_eq!(o.code, EXIT_VIOLATED, "{}", o.report);
        assert!(o.report.contains("signed-sum-decimal\t-0.121320"));
        let o = go(&["alpha-probe", "--alpha", "2"]);
        assert_eq!(o.code, EXIT_OK);
        assert!(o.report.contains("signed-sum\t3/8"));
    }

    #[test]
    fn psd_on_catalog_character() {
        let o = go(&["psd", "--char", "fix^2", "--count", "25", "--level", "4"]);
        assert_eq!(o.code, EXIT_OK, "{}", o.report);
        assert!(o.report.contains("verdict\tpsd"));
    }

    #[test]
    fn input_errors_exit_two() {
        assert_eq!(go(&["counts", "--diagram", "/nonexistent/file.json"]).code, EXIT_INPUT);
        assert_eq!(go(&["nonsense"]).code, EXIT_INPUT);
        assert_eq!(go(&["eval", "--char", "{\"kind\": \"product\", \"measures\": [{\"measure_ref\": \"nope\", \"alpha\": 1}]}"]).code, EXIT_INPUT);
        let bad = r#"{"levels": [["r"], ["a"], ["b"]], "edges": [{"level": 1, "src": 0, "dst": 0, "count": 1}]}"#;
        let o = go(&["validate", "--diagram", bad]);
        assert_eq!(o.code, EXIT_INPUT, "{}", o.report);
        assert!(o.report.contains("violation"));
    }

    #[test]
    fn reports_are_deterministic() {
        let args = ["axioms", "--char", "fix^2", "--pairs", "10", "--seed", "7"];
        assert_eq!(go(&args).report, go(&args).report);
    }

    #[test]
    fn construction_commands() {
        let o = go(&["rokhlin", "--m", "3", "--eps", "0.1", "--level", "4"]);
        assert_eq!(o.code, EXIT_OK, "{}", o.report);
        assert!(o.report.contains("residual[0]\t1/16"));
        let o = go(&["split", "--lambda", "1/3", "--eps", "0.1"]);
        assert!(o.report.contains("measure[0]\t5/16"), "{}", o.report);
        let a = r#"{"level": 2, "paths": [[0, 0]]}"#;
        let b = r#"{"level": 2, "paths": [[1, 0]]}"#;
        let o = go(&["move-close", "--a", a, "--b", b, "--eps", "0.05"]);
        assert!(o.report.contains("distance\t0"), "{}", o.report);
        let h = r#"{"level": 2, "perms": {"0": [1, 0, 2, 3]}}"#;
        let o = go(&["center-inv", "--h", h, "--n", "2", "--l", "4"]);
        assert_eq!(o.code, EXIT_OK, "{}", o.report);
        let o = go(&["centralize", "--set", r#"{"level": 2, "paths": [[0, 0], [1, 0]]}"#, "--n", "2"]);
        assert_eq!(o.code, EXIT_OK, "{}", o.report);
    }

    #[test]
    fn trace_commands() {
        let o = go(&["projector", "--set", r#"{"level": 2, "paths": [[0, 0], [1, 0]]}"#, "--from", "3", "--to", "4", "--brute"]);
        assert_eq!(o.code, EXIT_OK, "{}", o.report);
        assert!(o.report.contains("row\t3 5/8 5/8"), "{}", o.report);
        let g = r#"{"level": 2, "perms": {"0": [1, 2, 0, 3]}}"#;
        let o = go(&["trace-theorem", "--element", g, "--from", "3", "--to", "5"]);
        assert_eq!(o.code, EXIT_OK, "{}", o.report);
        let o = go(&["trace", "--element", g]);
        assert!(o.report.contains("diag-trace[0]\t1/4"), "{}", o.report);
        let o = go(&["distinct", "--a", "fix", "--b", "fix^2"]);
        assert!(o.report.contains("gap\t3/16"), "{}", o.report);
    }
}
