//! Command registry: the single path by which both live module evaluation
//! and script replay reach the kernels.
//!
//! A command declares its parameters; a [`Call`] is bound against them
//! (positional then keyword, defaults filled in), type-checked, and run
//! against an [`Env`] holding the active dataset and the files the script
//! may load. Commands that produce a new dataset (`load_data`, `transform`)
//! return it in the [`Outcome`]; [`CommandRegistry::eval`] installs it.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::dataset::{
    apply_transform, parse_csv, CellValue, ColumnType, DataError, Dataset, DatasetSummary, TransformOp, TransformSpec,
};
use crate::dsl::{Call, Value};
use crate::numfmt::{format_number, format_sig};
use crate::stats::{
    self, Alternative, ContingencyResult, HypothesisSpec, NumericSummary, PlotKind, PlotSpec, RegressionFit,
    StatsError, TTestResult, WilcoxonResult,
};

pub const ALTERNATIVES: &[&str] = &["two.sided", "greater", "less"];
pub const PLOT_KINDS: &[&str] = &["histogram", "bar", "scatter", "box", "mosaic"];
pub const TRANSFORM_OPS: &[&str] = &["log", "sqrt", "square", "standardize", "bin"];

/// Evaluation environment.
#[derive(Debug, Clone, Default)]
pub struct Env {
    pub dataset: Option<Arc<Dataset>>,
    /// Files `load_data` may read, by name.
    pub files: HashMap<String, Arc<Vec<u8>>>,
}

impl Env {
    pub fn with_file(name: impl Into<String>, bytes: Vec<u8>) -> Self {
        let mut env = Env::default();
        env.files.insert(name.into(), Arc::new(bytes));
        env
    }

    fn dataset(&self) -> Result<&Dataset, CommandError> {
        self.dataset.as_deref().ok_or(CommandError::NoData)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CommandError {
    #[error("unknown command {0}")]
    UnknownCommand(String),
    #[error("{command}: takes at most {max} arguments, got {found}")]
    Arity { command: String, max: usize, found: usize },
    #[error("{command}: unknown parameter `{param}`")]
    UnknownParam { command: String, param: String },
    #[error("{command}: parameter `{param}` given more than once")]
    DuplicateParam { command: String, param: String },
    #[error("{command}: missing required parameter `{param}`")]
    MissingParam { command: String, param: String },
    #[error("{command}: parameter `{param}` expects {expected}")]
    TypeMismatch { command: String, param: String, expected: String },
    #[error("{command}: `{value}` is not a valid {param}; expected one of {choices}")]
    InvalidChoice { command: String, param: String, value: String, choices: String },
    #[error("no dataset loaded")]
    NoData,
    #[error("no file named `{0}` is available")]
    UnknownFile(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    Number,
    /// Non-negative whole number.
    Count,
    Str,
    Bool,
    /// A `col("...")` reference, optionally restricted to a column type.
    Column(Option<ColumnType>),
    /// One of a fixed set of strings.
    Choice(&'static [&'static str]),
}

impl ParamKind {
    fn describe(self) -> String {
        match self {
            ParamKind::Number => "a number".into(),
            ParamKind::Count => "a non-negative whole number".into(),
            ParamKind::Str => "a string".into(),
            ParamKind::Bool => "true or false".into(),
            ParamKind::Column(None) => "a column reference".into(),
            ParamKind::Column(Some(t)) => format!("a {t} column reference"),
            ParamKind::Choice(c) => format!("one of {}", c.join(", ")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ParamSpec {
    pub name: &'static str,
    pub kind: ParamKind,
    pub required: bool,
    pub default: Option<Value>,
}

fn req(name: &'static str, kind: ParamKind) -> ParamSpec {
    ParamSpec { name, kind, required: true, default: None }
}

fn opt(name: &'static str, kind: ParamKind, default: Option<Value>) -> ParamSpec {
    ParamSpec { name, kind, required: false, default }
}

/// Arguments after binding: every supplied or defaulted parameter by name.
#[derive(Debug, Clone, Default)]
pub struct Args(BTreeMap<&'static str, Value>);

impl Args {
    fn get(&self, name: &str) -> Option<&Value> {
        self.0.get(name)
    }

    fn number(&self, name: &str) -> Option<f64> {
        match self.get(name)? {
            Value::Number(x) => Some(*x),
            _ => None,
        }
    }

    fn count(&self, name: &str) -> Option<usize> {
        self.number(name).map(|x| x as usize)
    }

    fn string(&self, name: &str) -> Option<&str> {
        match self.get(name)? {
            Value::Str(s) => Some(s),
            _ => None,
        }
    }

    fn column(&self, name: &str) -> Option<&str> {
        match self.get(name)? {
            Value::ColumnRef(s) => Some(s),
            _ => None,
        }
    }

    fn boolean(&self, name: &str) -> Option<bool> {
        match self.get(name)? {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }
}

/// What running a command produced.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub result: ResultValue,
    /// Replacement dataset for data-mutating commands.
    pub dataset: Option<Dataset>,
}

type RunFn = fn(&Args, &Env) -> Result<Outcome, CommandError>;

#[derive(Clone)]
pub struct CommandSpec {
    pub name: &'static str,
    pub params: Vec<ParamSpec>,
    /// Whether the command replaces the active dataset.
    pub mutates_data: bool,
    run: RunFn,
}

impl std::fmt::Debug for CommandSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CommandSpec").field("name", &self.name).field("params", &self.params).finish()
    }
}

impl CommandSpec {
    pub fn param(&self, name: &str) -> Option<&ParamSpec> {
        self.params.iter().find(|p| p.name == name)
    }

    /// Binds call arguments to parameters and type-checks them.
    pub fn bind(&self, call: &Call, env: &Env) -> Result<Args, CommandError> {
        let command = || self.name.to_string();
        let mut bound: BTreeMap<&'static str, Value> = BTreeMap::new();
        let mut positional = 0;
        for arg in &call.args {
            let spec = match &arg.keyword {
                None => {
                    let spec = self.params.get(positional).ok_or(CommandError::Arity {
                        command: command(),
                        max: self.params.len(),
                        found: call.args.len(),
                    })?;
                    positional += 1;
                    spec
                }
                Some(k) => {
                    self.param(k).ok_or_else(|| CommandError::UnknownParam { command: command(), param: k.clone() })?
                }
            };
            if bound.insert(spec.name, arg.value.clone()).is_some() {
                return Err(CommandError::DuplicateParam { command: command(), param: spec.name.into() });
            }
        }
        for spec in &self.params {
            match bound.get(spec.name) {
                Some(v) => check_param(self.name, spec, v, env)?,
                None if spec.required => {
                    return Err(CommandError::MissingParam { command: command(), param: spec.name.into() })
                }
                None => {
                    if let Some(d) = &spec.default {
                        bound.insert(spec.name, d.clone());
                    }
                }
            }
        }
        Ok(Args(bound))
    }
}

fn check_param(command: &str, spec: &ParamSpec, v: &Value, env: &Env) -> Result<(), CommandError> {
    let mismatch = || CommandError::TypeMismatch {
        command: command.into(),
        param: spec.name.into(),
        expected: spec.kind.describe(),
    };
    match (spec.kind, v) {
        (ParamKind::Number, Value::Number(_)) => Ok(()),
        (ParamKind::Count, Value::Number(x)) if *x >= 0.0 && x.fract() == 0.0 && *x <= u32::MAX as f64 => Ok(()),
        (ParamKind::Str, Value::Str(_)) => Ok(()),
        (ParamKind::Bool, Value::Bool(_)) => Ok(()),
        (ParamKind::Choice(choices), Value::Str(s)) => {
            if choices.contains(&s.as_str()) {
                Ok(())
            } else {
                Err(CommandError::InvalidChoice {
                    command: command.into(),
                    param: spec.name.into(),
                    value: s.clone(),
                    choices: choices.join(", "),
                })
            }
        }
        (ParamKind::Column(ctype), Value::ColumnRef(name)) => {
            let ds = env.dataset()?;
            match ctype {
                Some(t) => ds.typed_column(name, t).map(|_| ()).map_err(Into::into),
                None if ds.check_variable(name) => Ok(()),
                None => Err(DataError::UnknownColumn(name.clone()).into()),
            }
        }
        _ => Err(mismatch()),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TablePreview {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<CellValue>>,
    pub n_rows: usize,
}

/// Result of one command, as published to the UI and woven into reports.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ResultValue {
    Dataset { description: String, summary: DatasetSummary },
    Table(TablePreview),
    Summary { variable: String, summary: NumericSummary },
    Regression { x: String, y: String, fit: RegressionFit },
    TTest { x: String, y: Option<String>, result: TTestResult },
    Wilcoxon { x: String, y: String, result: WilcoxonResult },
    Contingency { a: String, b: String, result: ContingencyResult },
    Plot(PlotSpec),
}

impl ResultValue {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("results serialize")
    }

    /// Compares two results: integers, strings and flags exactly, floats
    /// within `rel_tol` relative error.
    pub fn approx_eq(&self, other: &ResultValue, rel_tol: f64) -> bool {
        json_approx_eq(&self.to_json(), &other.to_json(), rel_tol)
    }

    pub fn plot(&self) -> Option<&PlotSpec> {
        match self {
            ResultValue::Plot(p) => Some(p),
            _ => None,
        }
    }

    /// Plain-text rendering used for text outputs and reports.
    pub fn to_text(&self) -> String {
        let f = |x: f64| format_sig(x, 6);
        let mut s = String::new();
        match self {
            ResultValue::Dataset { description, summary } => {
                let _ = writeln!(s, "{description}: {} rows, {} columns", summary.n_rows, summary.columns.len());
                for c in &summary.columns {
                    let ctype = match c.ctype {
                        ColumnType::Numeric => "numeric",
                        ColumnType::Categorical => "categorical",
                    };
                    let _ = writeln!(s, "  {:<20} {:<12} missing: {}", c.name, ctype, c.n_missing);
                }
            }
            ResultValue::Table(t) => {
                let cells: Vec<Vec<String>> = t
                    .rows
                    .iter()
                    .map(|r| {
                        r.iter()
                            .map(|c| match c {
                                CellValue::Number(x) => format_number(*x),
                                CellValue::Label(l) => l.clone(),
                                CellValue::Missing => "NA".into(),
                            })
                            .collect()
                    })
                    .collect();
                let widths: Vec<usize> = t
                    .columns
                    .iter()
                    .enumerate()
                    .map(|(j, h)| {
                        cells.iter().map(|r| r[j].chars().count()).chain([h.chars().count()]).max().unwrap_or(0)
                    })
                    .collect();
                let line = |row: &[String]| {
                    row.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect::<Vec<_>>().join("  ")
                };
                let _ = writeln!(s, "{}", line(&t.columns));
                for r in &cells {
                    let _ = writeln!(s, "{}", line(r));
                }
                if t.rows.len() < t.n_rows {
                    let _ = writeln!(s, "... {} of {} rows shown", t.rows.len(), t.n_rows);
                }
            }
            ResultValue::Summary { variable, summary: m } => {
                let _ = writeln!(s, "Summary of {variable}");
                let _ = writeln!(s, "  n = {}, missing = {}", m.n, m.n_missing);
                let _ = writeln!(s, "  mean = {}, sd = {}", f(m.mean), m.sd.map(f).unwrap_or_else(|| "NA".into()));
                let _ = writeln!(
                    s,
                    "  min = {}, q1 = {}, median = {}, q3 = {}, max = {}",
                    f(m.min),
                    f(m.q1),
                    f(m.median),
                    f(m.q3),
                    f(m.max)
                );
            }
            ResultValue::Regression { x, y, fit } => {
                let _ = writeln!(s, "Linear regression of {y} on {x} (n = {})", fit.n);
                let _ = writeln!(s, "  {:<12} {:>12} {:>12}", "", "estimate", "std. error");
                let _ = writeln!(s, "  {:<12} {:>12} {:>12}", "(intercept)", f(fit.intercept), f(fit.intercept_se));
                let _ = writeln!(s, "  {:<12} {:>12} {:>12}", x, f(fit.slope), f(fit.slope_se));
                let _ = writeln!(s, "  t = {}, p-value = {}", f(fit.t_slope), f(fit.p_slope));
                let _ = writeln!(s, "  R-squared = {}", f(fit.r_squared));
            }
            ResultValue::TTest { x, y, result: r } => {
                match y {
                    Some(y) => {
                        let _ = writeln!(s, "Welch two-sample t-test: {x} vs {y}");
                    }
                    None => {
                        let _ = writeln!(s, "One-sample t-test: {x}");
                    }
                }
                let _ = writeln!(s, "  t = {}, df = {}, p-value = {}", f(r.statistic), f(r.df), f(r.p_value));
                let _ = writeln!(
                    s,
                    "  alternative: {}, hypothesized value {}",
                    r.spec.alternative.name(),
                    format_number(r.spec.mu)
                );
                let _ = writeln!(
                    s,
                    "  {}% confidence interval: [{}, {}]",
                    format_sig(r.spec.conf_level * 100.0, 6),
                    f(r.ci_low),
                    f(r.ci_high)
                );
                let _ = writeln!(s, "  estimate = {}", f(r.estimate));
            }
            ResultValue::Wilcoxon { x, y, result: r } => {
                let _ = writeln!(s, "Wilcoxon rank-sum test: {x} vs {y}");
                let _ = writeln!(
                    s,
                    "  W = {}, p-value = {} ({})",
                    f(r.w_statistic),
                    f(r.p_value),
                    if r.exact { "exact" } else { "normal approximation" }
                );
                let _ = writeln!(
                    s,
                    "  alternative: {}, location shift {}",
                    r.spec.alternative.name(),
                    format_number(r.spec.mu)
                );
            }
            ResultValue::Contingency { a, b, result: r } => {
                let _ = writeln!(s, "Contingency table of {a} (rows) by {b} (columns)");
                let w = r.row_levels.iter().chain(&r.col_levels).map(|l| l.chars().count()).max().unwrap_or(1).max(6);
                let _ = write!(s, "  {:<w$}", "");
                for c in &r.col_levels {
                    let _ = write!(s, " {c:>w$}");
                }
                s.push('\n');
                for (i, rl) in r.row_levels.iter().enumerate() {
                    let _ = write!(s, "  {rl:<w$}");
                    for n in &r.observed[i] {
                        let _ = write!(s, " {n:>w$}");
                    }
                    s.push('\n');
                }
                let _ = writeln!(s, "  X-squared = {}, df = {}, p-value = {}", f(r.chi_square), f(r.df), f(r.p_value));
            }
            ResultValue::Plot(p) => {
                let _ = writeln!(s, "{} plot of {}", p.kind().name(), p.x_label);
            }
        }
        s
    }
}

fn json_approx_eq(a: &serde_json::Value, b: &serde_json::Value, rel_tol: f64) -> bool {
    use serde_json::Value as J;
    match (a, b) {
        (J::Number(x), J::Number(y)) => {
            if x.is_f64() || y.is_f64() {
                let (x, y) = (x.as_f64().unwrap_or(f64::NAN), y.as_f64().unwrap_or(f64::NAN));
                x == y || (x - y).abs() <= rel_tol * x.abs().max(y.abs())
            } else {
                x == y
            }
        }
        (J::Array(x), J::Array(y)) => x.len() == y.len() && x.iter().zip(y).all(|(a, b)| json_approx_eq(a, b, rel_tol)),
        (J::Object(x), J::Object(y)) => {
            x.len() == y.len() && x.iter().all(|(k, v)| y.get(k).is_some_and(|w| json_approx_eq(v, w, rel_tol)))
        }
        _ => a == b,
    }
}

/// The compiled command set.
#[derive(Debug, Clone)]
pub struct CommandRegistry {
    commands: BTreeMap<&'static str, CommandSpec>,
}

impl Default for CommandRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

/// Commands every registry carries regardless of enabled modules.
pub const CORE_COMMANDS: &[&str] = &["load_data", "transform"];

impl CommandRegistry {
    /// Every compiled command.
    pub fn builtin() -> Self {
        use ParamKind::*;
        let num = |x: f64| Some(Value::Number(x));
        let s = |x: &str| Some(Value::Str(x.into()));
        let numeric = Column(Some(ColumnType::Numeric));
        let categorical = Column(Some(ColumnType::Categorical));
        let specs = vec![
            CommandSpec { name: "load_data", params: vec![req("file", Str)], mutates_data: true, run: run_load_data },
            CommandSpec {
                name: "transform",
                params: vec![
                    req("source", numeric),
                    req("op", Choice(TRANSFORM_OPS)),
                    opt("bins", Count, num(5.0)),
                    opt("target", Str, None),
                ],
                mutates_data: true,
                run: run_transform,
            },
            CommandSpec {
                name: "preview_data",
                params: vec![opt("rows", Count, num(10.0))],
                mutates_data: false,
                run: run_preview,
            },
            CommandSpec {
                name: "numeric_summary",
                params: vec![req("x", numeric)],
                mutates_data: false,
                run: run_summary,
            },
            CommandSpec {
                name: "ols_fit",
                params: vec![req("x", numeric), req("y", numeric)],
                mutates_data: false,
                run: run_ols,
            },
            CommandSpec {
                name: "t_test",
                params: vec![
                    req("x", numeric),
                    opt("y", numeric, None),
                    opt("two_sample", Bool, None),
                    opt("mu", Number, num(0.0)),
                    opt("alternative", Choice(ALTERNATIVES), s("two.sided")),
                    opt("conf_level", Number, num(0.95)),
                ],
                mutates_data: false,
                run: run_t_test,
            },
            CommandSpec {
                name: "wilcoxon_rank_sum",
                params: vec![
                    req("x", numeric),
                    req("y", numeric),
                    opt("mu", Number, num(0.0)),
                    opt("alternative", Choice(ALTERNATIVES), s("two.sided")),
                    opt("conf_level", Number, num(0.95)),
                ],
                mutates_data: false,
                run: run_wilcoxon,
            },
            CommandSpec {
                name: "contingency",
                params: vec![req("a", categorical), req("b", categorical)],
                mutates_data: false,
                run: run_contingency,
            },
            CommandSpec {
                name: "plot",
                params: vec![
                    req("kind", Choice(PLOT_KINDS)),
                    req("x", Column(None)),
                    opt("y", Column(None), None),
                    opt("bins", Count, None),
                ],
                mutates_data: false,
                run: run_plot,
            },
        ];
        CommandRegistry { commands: specs.into_iter().map(|s| (s.name, s)).collect() }
    }

    /// The core commands plus `names`; unknown names are ignored.
    pub fn restricted<'a>(&self, names: impl IntoIterator<Item = &'a str>) -> Self {
        let keep: BTreeSet<&str> = names.into_iter().chain(CORE_COMMANDS.iter().copied()).collect();
        CommandRegistry {
            commands: self.commands.iter().filter(|(k, _)| keep.contains(*k)).map(|(k, v)| (*k, v.clone())).collect(),
        }
    }

    pub fn get(&self, name: &str) -> Option<&CommandSpec> {
        self.commands.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.commands.keys().copied()
    }

    /// Binds and runs `call` without touching the environment.
    pub fn invoke(&self, call: &Call, env: &Env) -> Result<Outcome, CommandError> {
        let spec = self.get(&call.name).ok_or_else(|| CommandError::UnknownCommand(call.name.clone()))?;
        let args = spec.bind(call, env)?;
        (spec.run)(&args, env)
    }

    /// Runs `call` and installs any dataset it produced.
    pub fn eval(&self, call: &Call, env: &mut Env) -> Result<ResultValue, CommandError> {
        let out = self.invoke(call, env)?;
        if let Some(ds) = out.dataset {
            env.dataset = Some(Arc::new(ds));
        }
        Ok(out.result)
    }
}

fn outcome(result: ResultValue) -> Result<Outcome, CommandError> {
    Ok(Outcome { result, dataset: None })
}

fn run_load_data(args: &Args, env: &Env) -> Result<Outcome, CommandError> {
    let file = args.string("file").expect("bound");
    let bytes = env.files.get(file).ok_or_else(|| CommandError::UnknownFile(file.into()))?;
    let ds = parse_csv(bytes, true)?;
    Ok(Outcome {
        result: ResultValue::Dataset { description: format!("Loaded {file}"), summary: ds.summary() },
        dataset: Some(ds),
    })
}

fn run_transform(args: &Args, env: &Env) -> Result<Outcome, CommandError> {
    let ds = env.dataset()?;
    let source = args.column("source").expect("bound");
    let op_name = args.string("op").expect("bound");
    let bins = args.count("bins").expect("defaulted");
    if op_name == "bin" && bins == 0 {
        return Err(StatsError::Invalid("bins must be at least 1".into()).into());
    }
    let op = TransformOp::from_name(op_name, Some(bins)).expect("choice checked");
    let target = args.string("target").map(str::to_string).unwrap_or_else(|| format!("{op_name}_{source}"));
    let spec = TransformSpec { source: source.into(), op, target: target.clone() };
    let out = apply_transform(ds, &spec)?;
    Ok(Outcome {
        result: ResultValue::Dataset {
            description: format!("Created {target} = {op_name}({source})"),
            summary: out.summary(),
        },
        dataset: Some(out),
    })
}

fn run_preview(args: &Args, env: &Env) -> Result<Outcome, CommandError> {
    let ds = env.dataset()?;
    let n = args.count("rows").expect("defaulted").min(ds.n_rows());
    let rows = (0..n).map(|i| ds.columns().iter().map(|c| c.cells()[i].clone()).collect()).collect();
    outcome(ResultValue::Table(TablePreview { columns: ds.names(), rows, n_rows: ds.n_rows() }))
}

fn numbers(env: &Env, name: &str) -> Result<Vec<Option<f64>>, CommandError> {
    Ok(env.dataset()?.typed_column(name, ColumnType::Numeric)?.numbers())
}

fn hypothesis(args: &Args) -> Result<HypothesisSpec, CommandError> {
    let alternative = Alternative::from_name(args.string("alternative").expect("defaulted")).expect("choice checked");
    Ok(HypothesisSpec::new(
        alternative,
        args.number("conf_level").expect("defaulted"),
        args.number("mu").expect("defaulted"),
    )?)
}

fn run_summary(args: &Args, env: &Env) -> Result<Outcome, CommandError> {
    let x = args.column("x").expect("bound");
    let summary = stats::numeric_summary(&numbers(env, x)?)?;
    outcome(ResultValue::Summary { variable: x.into(), summary })
}

fn run_ols(args: &Args, env: &Env) -> Result<Outcome, CommandError> {
    let (x, y) = (args.column("x").expect("bound"), args.column("y").expect("bound"));
    let fit = stats::ols_fit(&numbers(env, x)?, &numbers(env, y)?)?;
    outcome(ResultValue::Regression { x: x.into(), y: y.into(), fit })
}

fn run_t_test(args: &Args, env: &Env) -> Result<Outcome, CommandError> {
    let x = args.column("x").expect("bound");
    let y = args.column("y");
    let two_sample = args.boolean("two_sample").unwrap_or(y.is_some());
    let y = if two_sample {
        Some(y.ok_or_else(|| CommandError::MissingParam { command: "t_test".into(), param: "y".into() })?)
    } else {
        None
    };
    let spec = hypothesis(args)?;
    let xs = numbers(env, x)?;
    let ys = y.map(|y| numbers(env, y)).transpose()?;
    let result = stats::t_test(&xs, ys.as_deref(), spec)?;
    outcome(ResultValue::TTest { x: x.into(), y: y.map(str::to_string), result })
}

fn run_wilcoxon(args: &Args, env: &Env) -> Result<Outcome, CommandError> {
    let (x, y) = (args.column("x").expect("bound"), args.column("y").expect("bound"));
    let result = stats::wilcoxon_rank_sum(&numbers(env, x)?, &numbers(env, y)?, hypothesis(args)?)?;
    outcome(ResultValue::Wilcoxon { x: x.into(), y: y.into(), result })
}

fn run_contingency(args: &Args, env: &Env) -> Result<Outcome, CommandError> {
    let ds = env.dataset()?;
    let (a, b) = (args.column("a").expect("bound"), args.column("b").expect("bound"));
    let ca = ds.typed_column(a, ColumnType::Categorical)?;
    let cb = ds.typed_column(b, ColumnType::Categorical)?;
    let result = stats::contingency(&ca.labels(), &cb.labels())?;
    outcome(ResultValue::Contingency { a: a.into(), b: b.into(), result })
}

fn run_plot(args: &Args, env: &Env) -> Result<Outcome, CommandError> {
    let ds = env.dataset()?;
    let kind = PlotKind::from_name(args.string("kind").expect("bound")).expect("choice checked");
    let bins = args.count("bins");
    if bins == Some(0) {
        return Err(StatsError::Invalid("bins must be at least 1".into()).into());
    }
    let spec = stats::plot_spec(kind, ds, args.column("x").expect("bound"), args.column("y"), bins)?;
    outcome(ResultValue::Plot(spec))
}
