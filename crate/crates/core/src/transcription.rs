//! Transcription: code templates, the session script, replay and reports.
//!
//! [`interpolate`] renders a template with bound values, parses the text it
//! just produced and evaluates *that*. Live results therefore take exactly
//! the path a later replay takes, which is what makes stored results
//! reproducible.

mod svg;

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use serde::Serialize;
use thiserror::Error;

use crate::commands::{CommandError, CommandRegistry, Env, ResultValue};
use crate::dsl::{self, parse_script, parse_statement, Call, ParseError, ScriptAst, Value};
use crate::par::{self, Parallelism};
use crate::stats::PlotSpec;

pub use svg::render_svg;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("unbalanced brace at byte {0} of template")]
    Unbalanced(usize),
    #[error("invalid placeholder name `{0}`")]
    BadName(String),
    #[error("placeholder `{0}` appears more than once")]
    Repeated(String),
    #[error("no binding for placeholder `{0}`")]
    Missing(String),
    #[error("binding `{0}` matches no placeholder")]
    Extra(String),
    #[error("binding `{0}` given more than once")]
    DuplicateBinding(String),
    #[error("binding `{0}` cannot be rendered: {1}")]
    Unrenderable(String, String),
    #[error("rendered text is not a single statement: {0}")]
    Unparseable(ParseError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Piece {
    Text(String),
    Hole(String),
}

/// A statement skeleton with `{name}` placeholders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeTemplate {
    skeleton: String,
    pieces: Vec<Piece>,
    placeholder_order: Vec<String>,
}

impl CodeTemplate {
    pub fn parse(skeleton: &str) -> Result<Self, TemplateError> {
        let mut pieces = Vec::new();
        let mut order: Vec<String> = Vec::new();
        let mut rest = skeleton;
        let mut offset = 0;
        while let Some(open) = rest.find(['{', '}']) {
            if rest.as_bytes()[open] == b'}' {
                return Err(TemplateError::Unbalanced(offset + open));
            }
            let close = rest[open + 1..]
                .find(['{', '}'])
                .filter(|&i| rest.as_bytes()[open + 1 + i] == b'}')
                .ok_or(TemplateError::Unbalanced(offset + open))?
                + open
                + 1;
            let name = &rest[open + 1..close];
            let valid = name.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
                && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
            if !valid {
                return Err(TemplateError::BadName(name.into()));
            }
            if order.iter().any(|n| n == name) {
                return Err(TemplateError::Repeated(name.into()));
            }
            if open > 0 {
                pieces.push(Piece::Text(rest[..open].into()));
            }
            pieces.push(Piece::Hole(name.into()));
            order.push(name.into());
            offset += close + 1;
            rest = &rest[close + 1..];
        }
        if !rest.is_empty() {
            pieces.push(Piece::Text(rest.into()));
        }
        Ok(CodeTemplate { skeleton: skeleton.into(), pieces, placeholder_order: order })
    }

    pub fn skeleton(&self) -> &str {
        &self.skeleton
    }

    pub fn placeholders(&self) -> &[String] {
        &self.placeholder_order
    }

    /// Substitutes every placeholder; bindings must cover each exactly once.
    pub fn render(&self, bindings: &[Binding]) -> Result<String, TemplateError> {
        let mut values: BTreeMap<&str, &Value> = BTreeMap::new();
        for b in bindings {
            if !self.placeholder_order.contains(&b.name) {
                return Err(TemplateError::Extra(b.name.clone()));
            }
            if values.insert(&b.name, &b.value).is_some() {
                return Err(TemplateError::DuplicateBinding(b.name.clone()));
            }
            check_renderable(&b.name, &b.value)?;
        }
        let mut out = String::with_capacity(self.skeleton.len() + 16 * bindings.len());
        for p in &self.pieces {
            match p {
                Piece::Text(t) => out.push_str(t),
                Piece::Hole(name) => {
                    let v = values.get(name.as_str()).ok_or_else(|| TemplateError::Missing(name.clone()))?;
                    let _ = write!(out, "{v}");
                }
            }
        }
        Ok(out)
    }
}

fn check_renderable(name: &str, v: &Value) -> Result<(), TemplateError> {
    match v {
        Value::Number(x) if !x.is_finite() => {
            Err(TemplateError::Unrenderable(name.into(), format!("{x} is not a finite number")))
        }
        Value::List(items) => items.iter().try_for_each(|i| check_renderable(name, i)),
        Value::Call(_) => Err(TemplateError::Unrenderable(name.into(), "bindings cannot be calls".into())),
        _ => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Binding {
    pub name: String,
    pub value: Value,
}

impl Binding {
    pub fn new(name: impl Into<String>, value: Value) -> Self {
        Binding { name: name.into(), value }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RenderedStatement {
    pub text: String,
    pub module_id: String,
    pub produced_at: u64,
}

/// Renders `template`, parses the rendered text and evaluates it.
///
/// Template problems are errors; evaluation failures come back as an errored
/// result paired with the (valid) statement.
pub fn interpolate<F>(
    template: &CodeTemplate,
    bindings: &[Binding],
    module_id: &str,
    produced_at: u64,
    evaluator: F,
) -> Result<(RenderedStatement, Result<ResultValue, CommandError>), TemplateError>
where
    F: FnOnce(&Call) -> Result<ResultValue, CommandError>,
{
    let text = template.render(bindings)?;
    let call = parse_statement(&text).map_err(TemplateError::Unparseable)?;
    let result = evaluator(&call);
    Ok((RenderedStatement { text, module_id: module_id.into(), produced_at }, result))
}

/// Append-only session transcript.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Script {
    pub preamble: Vec<RenderedStatement>,
    pub stored: Vec<RenderedStatement>,
}

impl Script {
    pub fn with_preamble(preamble: Vec<RenderedStatement>) -> Self {
        Script { preamble, stored: Vec::new() }
    }

    pub fn store_statement(mut self, stmt: RenderedStatement) -> Script {
        self.stored.push(stmt);
        self
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for st in self.preamble.iter().chain(&self.stored) {
            s.push_str(&st.text);
            s.push('\n');
        }
        s
    }

    pub fn parse(&self) -> Result<ScriptAst, ParseError> {
        parse_script(&self.to_text())
    }

    /// File named by the first `load_data` of the preamble.
    pub fn data_file(&self) -> Option<String> {
        let call = parse_statement(&self.preamble.first()?.text).ok()?;
        call.args.iter().find(|a| a.keyword.is_none() || a.keyword.as_deref() == Some("file")).and_then(|a| {
            match &a.value {
                Value::Str(f) => Some(f.clone()),
                _ => None,
            }
        })
    }

    /// Splits script text into preamble (leading `load_data` statements)
    /// and stored statements.
    pub fn from_text(text: &str, module_id: impl Fn(&Call) -> String) -> Result<Script, ParseError> {
        let ast = parse_script(text)?;
        let mut script = Script::default();
        let mut leading = true;
        for (i, call) in ast.statements.iter().enumerate() {
            leading &= call.name == "load_data";
            let stmt = RenderedStatement { text: call.to_string(), module_id: module_id(call), produced_at: i as u64 };
            if leading {
                script.preamble.push(stmt);
            } else {
                script.stored.push(stmt);
            }
        }
        Ok(script)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScriptErrorKind {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Command(#[from] CommandError),
}

/// A replay failure, identifying the statement.
#[derive(Debug, Clone, PartialEq, Error)]
pub struct ScriptError {
    pub line: usize,
    pub statement: String,
    pub kind: Box<ScriptErrorKind>,
}

impl fmt::Display for ScriptError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &*self.kind {
            ScriptErrorKind::Parse(e) => write!(f, "{e}"),
            ScriptErrorKind::Command(e) => write!(f, "line {}: `{}`: {e}", self.line, self.statement),
        }
    }
}

impl From<ParseError> for ScriptError {
    fn from(e: ParseError) -> Self {
        ScriptError { line: e.line, statement: String::new(), kind: Box::new(e.into()) }
    }
}

/// Evaluates statements in order, stopping at the first error.
pub fn eval_script(
    ast: &ScriptAst,
    env: &mut Env,
    registry: &CommandRegistry,
) -> Result<Vec<ResultValue>, ScriptError> {
    ast.statements
        .iter()
        .map(|call| {
            registry.eval(call, env).map_err(|e| ScriptError {
                line: call.span.line,
                statement: call.to_string(),
                kind: Box::new(e.into()),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportResult {
    pub text: String,
    /// Relative path of the rendered image, for plots.
    pub image: Option<String>,
    #[serde(skip)]
    pub value: ResultValue,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportBlock {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub code: Option<String>,
    pub result: ReportResult,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportDocument {
    pub include_code: bool,
    /// Preamble statements, present only when code is included.
    pub setup: Option<Vec<String>>,
    pub blocks: Vec<ReportBlock>,
    /// Image path to SVG text.
    pub images: BTreeMap<String, String>,
}

impl ReportDocument {
    pub fn plot_specs(&self) -> Vec<Option<&PlotSpec>> {
        self.blocks.iter().map(|b| b.result.value.plot()).collect()
    }

    pub fn to_markdown(&self) -> String {
        let mut md = String::from("# Analysis report\n");
        if let Some(setup) = &self.setup {
            md.push_str("\n## Setup\n\n```\n");
            for line in setup {
                md.push_str(line);
                md.push('\n');
            }
            md.push_str("```\n");
        }
        for (i, block) in self.blocks.iter().enumerate() {
            let _ = write!(md, "\n## Result {}\n\n", i + 1);
            if let Some(code) = &block.code {
                let _ = write!(md, "```\n{code}\n```\n\n");
            }
            match &block.result.image {
                Some(path) => {
                    let _ = writeln!(md, "![{}]({path})", block.result.text.trim_end());
                }
                None => {
                    let _ = write!(md, "```text\n{}```\n", block.result.text);
                }
            }
        }
        md
    }
}

/// Replays `script` from a fresh environment seeded with `files` and weaves
/// one block per stored statement.
pub fn render_report(
    script: &Script,
    files: &Env,
    registry: &CommandRegistry,
    include_code: bool,
    mode: Parallelism,
) -> Result<ReportDocument, ScriptError> {
    let ast = script.parse()?;
    let mut env = Env { dataset: None, files: files.files.clone() };
    let results = eval_script(&ast, &mut env, registry)?;
    let stored_results = results.into_iter().skip(script.preamble.len());

    let mut plots = Vec::new();
    let mut blocks = Vec::with_capacity(script.stored.len());
    for (i, (stmt, value)) in script.stored.iter().zip(stored_results).enumerate() {
        let image = value.plot().map(|p| {
            let path = format!("images/plot-{}.svg", i + 1);
            plots.push((path.clone(), p.clone()));
            path
        });
        blocks.push(ReportBlock {
            code: include_code.then(|| stmt.text.clone()),
            result: ReportResult { text: value.to_text(), image, value },
        });
    }
    let images = par::map(mode, plots, |(path, spec)| (path, render_svg(&spec))).into_iter().collect();
    Ok(ReportDocument {
        include_code,
        setup: include_code.then(|| script.preamble.iter().map(|s| s.text.clone()).collect()),
        blocks,
        images,
    })
}

/// Renders `s` as a script string literal.
pub fn dsl_string(s: &str) -> String {
    let mut out = String::new();
    dsl::write_string_literal(&mut out, s);
    out
}
