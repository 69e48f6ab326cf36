//! Declarative analysis modules: manifest schema, validation and discovery.
//!
//! A module lives in `modules/<category>/<name>/manifest.json`. Its sections
//! cover the roles of a module: `bindings` (which kernel computes what),
//! choice sources on `inputs` (how variable selects refresh), `reactives`
//! (derived choice lists), `outputs`, and `inputs`/`layout` for the form.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::commands::{CommandRegistry, ParamKind};
use crate::dataset::ColumnType;
use crate::transcription::CodeTemplate;

pub const CATEGORIES: [&str; 3] = ["data", "summaries", "inference"];
pub const REQUIRED_MODULE: &str = "data/sources";
pub const OPTIONS_WIDTH: u32 = 4;
pub const RESULTS_WIDTH: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Data,
    Summaries,
    Inference,
}

impl Category {
    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "data" => Some(Category::Data),
            "summaries" => Some(Category::Summaries),
            "inference" => Some(Category::Inference),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        CATEGORIES[self as usize]
    }

    pub fn heading(self) -> String {
        let n = self.name();
        n[..1].to_uppercase() + &n[1..]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliderSpec {
    pub min: f64,
    pub max: f64,
    pub step: f64,
    pub default: f64,
}

impl SliderSpec {
    /// Number of decimals needed to print grid points exactly.
    fn decimals(&self) -> usize {
        [self.min, self.step]
            .iter()
            .map(|x| {
                let s = crate::numfmt::format_number(*x);
                match (s.find('.'), s.find('e')) {
                    (_, Some(_)) => 15,
                    (Some(dot), None) => s.len() - dot - 1,
                    (None, None) => 0,
                }
            })
            .max()
            .unwrap_or(0)
            .min(15)
    }

    /// Snaps `v` to the nearest grid point, or `None` if outside the range.
    pub fn snap(&self, v: f64) -> Option<f64> {
        if !v.is_finite() || v < self.min || v > self.max {
            return None;
        }
        let k = ((v - self.min) / self.step).round();
        let raw = (self.min + k * self.step).min(self.max);
        let snapped: f64 = format!("{raw:.*}", self.decimals()).parse().ok()?;
        Some(snapped.clamp(self.min, self.max))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Widget {
    Select,
    MultiSelect,
    NumericField,
    Slider(SliderSpec),
    Checkbox,
    ActionButton,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VariableClass {
    NumericVariables,
    CategoricalVariables,
    AllVariables,
}

impl VariableClass {
    pub fn column_type(self) -> Option<ColumnType> {
        match self {
            VariableClass::NumericVariables => Some(ColumnType::Numeric),
            VariableClass::CategoricalVariables => Some(ColumnType::Categorical),
            VariableClass::AllVariables => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ChoiceSource {
    NumericVariables,
    CategoricalVariables,
    AllVariables,
    Static(Vec<String>),
    /// Choices produced by a derived node declared under `reactives`.
    Reactive(String),
}

impl ChoiceSource {
    pub fn variable_class(&self) -> Option<VariableClass> {
        match self {
            ChoiceSource::NumericVariables => Some(VariableClass::NumericVariables),
            ChoiceSource::CategoricalVariables => Some(VariableClass::CategoricalVariables),
            ChoiceSource::AllVariables => Some(VariableClass::AllVariables),
            _ => None,
        }
    }

    /// Whether the choices are dataset variable names.
    pub fn is_variable(&self) -> bool {
        !matches!(self, ChoiceSource::Static(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputDescriptor {
    pub id: String,
    pub label: String,
    pub widget: Widget,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub choice_source: Option<ChoiceSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<serde_json::Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutputKind {
    Text,
    Table,
    Plot,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputDescriptor {
    pub id: String,
    pub kind: OutputKind,
    pub title: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComputeBinding {
    pub kernel: String,
    /// Input id to kernel parameter.
    pub param_map: BTreeMap<String, String>,
    pub template: String,
    pub output_id: String,
}

/// A derived list of variable names whose class depends on the value of a
/// static select (e.g. the variables a plot kind accepts).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReactiveDescriptor {
    pub id: String,
    pub from_input: String,
    pub cases: BTreeMap<String, VariableClass>,
    pub otherwise: VariableClass,
}

impl ReactiveDescriptor {
    pub fn class_for(&self, selected: &str) -> VariableClass {
        self.cases.get(selected).copied().unwrap_or(self.otherwise)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Layout {
    pub options_width: u32,
    pub results_width: u32,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifest {
    category: String,
    name: String,
    title: String,
    inputs: Vec<InputDescriptor>,
    outputs: Vec<OutputDescriptor>,
    bindings: Vec<ComputeBinding>,
    #[serde(default)]
    reactives: Vec<ReactiveDescriptor>,
    layout: Option<Layout>,
    store_button: Option<String>,
}

/// A validated module manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModuleManifest {
    pub category: Category,
    pub name: String,
    pub title: String,
    pub inputs: Vec<InputDescriptor>,
    pub outputs: Vec<OutputDescriptor>,
    pub bindings: Vec<ComputeBinding>,
    pub reactives: Vec<ReactiveDescriptor>,
    pub layout: Layout,
    pub store_button: String,
    #[serde(skip)]
    templates: Vec<CodeTemplate>,
}

impl ModuleManifest {
    /// `category/name`.
    pub fn id(&self) -> String {
        format!("{}/{}", self.category.name(), self.name)
    }

    pub fn input(&self, id: &str) -> Option<&InputDescriptor> {
        self.inputs.iter().find(|i| i.id == id)
    }

    pub fn template(&self, binding: usize) -> &CodeTemplate {
        &self.templates[binding]
    }

    pub fn binding_for(&self, output_id: &str) -> Option<(usize, &ComputeBinding)> {
        self.bindings.iter().enumerate().find(|(_, b)| b.output_id == output_id)
    }

    pub fn kernels(&self) -> impl Iterator<Item = &str> {
        self.bindings.iter().map(|b| b.kernel.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ErrorCode {
    Schema,
    InvalidCategory,
    StoreButtonMissing,
    StoreButtonNotAction,
    LayoutWidths,
    DuplicateId,
    SliderRange,
    DanglingInput,
    DanglingOutput,
    UnknownKernel,
    UnknownParam,
    TemplateMismatch,
    ParamWidgetMismatch,
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("serializes");
        f.write_str(s.as_str().expect("string"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Issue {
    pub code: ErrorCode,
    pub message: String,
}

/// All problems found in one manifest.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ManifestError {
    pub issues: Vec<Issue>,
}

impl ManifestError {
    pub fn codes(&self) -> Vec<ErrorCode> {
        self.issues.iter().map(|i| i.code).collect()
    }

    pub fn has(&self, code: ErrorCode) -> bool {
        self.issues.iter().any(|i| i.code == code)
    }
}

impl fmt::Display for ManifestError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, i) in self.issues.iter().enumerate() {
            if k > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{}: {}", i.code, i.message)?;
        }
        Ok(())
    }
}

/// Parses and validates a manifest against the compiled kernels.
pub fn load_manifest(bytes: &[u8]) -> Result<ModuleManifest, ManifestError> {
    load_manifest_with(bytes, &CommandRegistry::builtin())
}

pub fn load_manifest_with(bytes: &[u8], kernels: &CommandRegistry) -> Result<ModuleManifest, ManifestError> {
    let raw: RawManifest = serde_json::from_slice(bytes)
        .map_err(|e| ManifestError { issues: vec![Issue { code: ErrorCode::Schema, message: e.to_string() }] })?;
    let mut issues = Vec::new();
    let mut issue = |code, message: String| issues.push(Issue { code, message });

    let category = Category::from_name(&raw.category);
    if category.is_none() {
        issue(
            ErrorCode::InvalidCategory,
            format!("category `{}` is not one of {}", raw.category, CATEGORIES.join(", ")),
        );
    }
    let ident_ok = |s: &str| !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if !ident_ok(&raw.name) {
        issue(ErrorCode::Schema, format!("module name `{}` must be non-empty [A-Za-z0-9_]", raw.name));
    }
    if raw.title.trim().is_empty() {
        issue(ErrorCode::Schema, "title must not be empty".into());
    }

    let store = raw.store_button.clone().filter(|s| !s.is_empty());
    match &store {
        None => issue(ErrorCode::StoreButtonMissing, "a store button is required".into()),
        Some(id) => match raw.inputs.iter().find(|i| &i.id == id) {
            None => issue(ErrorCode::StoreButtonMissing, format!("store button `{id}` is not among the inputs")),
            Some(i) if i.widget != Widget::ActionButton => {
                issue(ErrorCode::StoreButtonNotAction, format!("store button `{id}` must be an ActionButton"))
            }
            Some(_) => {}
        },
    }
    match raw.layout {
        Some(Layout { options_width: OPTIONS_WIDTH, results_width: RESULTS_WIDTH }) => {}
        Some(l) => issue(
            ErrorCode::LayoutWidths,
            format!(
                "layout widths must be {OPTIONS_WIDTH}/{RESULTS_WIDTH}, got {}/{}",
                l.options_width, l.results_width
            ),
        ),
        None => issue(ErrorCode::LayoutWidths, "layout is required".into()),
    }

    let mut ids = BTreeSet::new();
    let all_ids = raw
        .inputs
        .iter()
        .map(|i| &i.id)
        .chain(raw.outputs.iter().map(|o| &o.id))
        .chain(raw.reactives.iter().map(|r| &r.id));
    for id in all_ids {
        if !ident_ok(id) {
            issue(ErrorCode::Schema, format!("id `{id}` must be non-empty [A-Za-z0-9_]"));
        }
        if !ids.insert(id.clone()) {
            issue(ErrorCode::DuplicateId, format!("id `{id}` is used more than once"));
        }
    }
    let reactive_ids: BTreeSet<&str> = raw.reactives.iter().map(|r| r.id.as_str()).collect();

    for input in &raw.inputs {
        let id = &input.id;
        match (&input.widget, &input.choice_source) {
            (Widget::Select | Widget::MultiSelect, None) => {
                issue(ErrorCode::Schema, format!("select `{id}` needs a choice_source"))
            }
            (Widget::Select | Widget::MultiSelect, Some(ChoiceSource::Static(c))) if c.is_empty() => {
                issue(ErrorCode::Schema, format!("select `{id}` has no static choices"))
            }
            (Widget::Select | Widget::MultiSelect, Some(ChoiceSource::Reactive(r)))
                if !reactive_ids.contains(r.as_str()) =>
            {
                issue(ErrorCode::DanglingInput, format!("select `{id}` refers to unknown reactive `{r}`"))
            }
            (Widget::Select | Widget::MultiSelect, Some(_)) => {}
            (_, Some(_)) => issue(ErrorCode::Schema, format!("only selects take a choice_source (`{id}`)")),
            (_, None) => {}
        }
        match (&input.widget, &input.default, &input.choice_source) {
            (_, None, _) => {}
            (Widget::Select, Some(serde_json::Value::String(d)), Some(ChoiceSource::Static(c))) => {
                if !c.contains(d) {
                    issue(ErrorCode::Schema, format!("default `{d}` of `{id}` is not a choice"));
                }
            }
            (Widget::NumericField, Some(d), _) if d.as_f64().is_some_and(f64::is_finite) => {}
            (Widget::Checkbox, Some(serde_json::Value::Bool(_)), _) => {}
            (_, Some(d), _) => issue(ErrorCode::Schema, format!("default {d} does not suit input `{id}`")),
        }
        if let Widget::Slider(s) = &input.widget {
            let finite = [s.min, s.max, s.step, s.default].iter().all(|x| x.is_finite());
            let steps = (s.max - s.min) / s.step;
            if !finite || s.min >= s.max || s.step <= 0.0 {
                issue(ErrorCode::SliderRange, format!("slider `{id}` needs min < max and step > 0"));
            } else if s.default < s.min || s.default > s.max {
                issue(
                    ErrorCode::SliderRange,
                    format!("slider `{id}` default {} lies outside [{}, {}]", s.default, s.min, s.max),
                );
            } else if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
                issue(ErrorCode::SliderRange, format!("slider `{id}` range is not a whole number of steps"));
            } else if s.snap(s.default) != Some(s.default) {
                issue(ErrorCode::SliderRange, format!("slider `{id}` default is not on the step grid"));
            }
        }
    }
    for r in &raw.reactives {
        match raw.inputs.iter().find(|i| i.id == r.from_input) {
            Some(InputDescriptor { widget: Widget::Select, choice_source: Some(ChoiceSource::Static(_)), .. }) => {}
            Some(_) => issue(ErrorCode::Schema, format!("reactive `{}` must derive from a static select", r.id)),
            None => {
                issue(ErrorCode::DanglingInput, format!("reactive `{}` reads unknown input `{}`", r.id, r.from_input))
            }
        }
    }

    let output_ids: BTreeSet<&str> = raw.outputs.iter().map(|o| o.id.as_str()).collect();
    let mut bound_outputs = BTreeSet::new();
    let mut templates = Vec::new();
    for b in &raw.bindings {
        if !output_ids.contains(b.output_id.as_str()) {
            issue(
                ErrorCode::DanglingOutput,
                format!("binding for `{}` targets unknown output `{}`", b.kernel, b.output_id),
            );
        } else if !bound_outputs.insert(b.output_id.clone()) {
            issue(ErrorCode::DanglingOutput, format!("output `{}` has more than one binding", b.output_id));
        }
        let spec = kernels.get(&b.kernel);
        if spec.is_none() {
            issue(ErrorCode::UnknownKernel, format!("unknown kernel `{}`", b.kernel));
        }
        for (input_id, param) in &b.param_map {
            let Some(input) = raw.inputs.iter().find(|i| &i.id == input_id) else {
                issue(ErrorCode::DanglingInput, format!("param_map refers to unknown input `{input_id}`"));
                continue;
            };
            let Some(spec) = spec else { continue };
            match spec.param(param) {
                None => issue(ErrorCode::UnknownParam, format!("kernel `{}` has no parameter `{param}`", b.kernel)),
                Some(p) => {
                    if let Err(why) = widget_feeds(input, p.kind) {
                        issue(
                            ErrorCode::ParamWidgetMismatch,
                            format!("input `{input_id}` cannot supply `{param}`: {why}"),
                        );
                    }
                }
            }
        }
        let params: BTreeSet<&str> = b.param_map.values().map(String::as_str).collect();
        if params.len() != b.param_map.len() {
            issue(ErrorCode::TemplateMismatch, format!("binding for `{}` maps two inputs to one parameter", b.kernel));
        }
        if let Some(spec) = spec {
            for p in spec.params.iter().filter(|p| p.required) {
                if !params.contains(p.name) {
                    issue(
                        ErrorCode::TemplateMismatch,
                        format!("required parameter `{}` of `{}` is not bound", p.name, b.kernel),
                    );
                }
            }
        }
        match CodeTemplate::parse(&b.template) {
            Err(e) => issue(ErrorCode::TemplateMismatch, format!("template for `{}`: {e}", b.kernel)),
            Ok(t) => {
                let holes: BTreeSet<&str> = t.placeholders().iter().map(String::as_str).collect();
                if holes != params {
                    issue(
                        ErrorCode::TemplateMismatch,
                        format!(
                            "template placeholders {{{}}} differ from mapped parameters {{{}}}",
                            holes.iter().copied().collect::<Vec<_>>().join(", "),
                            params.iter().copied().collect::<Vec<_>>().join(", ")
                        ),
                    );
                }
                let head = b.template.trim_start();
                if !(head.starts_with(&b.kernel) && head[b.kernel.len()..].trim_start().starts_with('(')) {
                    issue(ErrorCode::TemplateMismatch, format!("template must call `{}`", b.kernel));
                }
                templates.push(t);
            }
        }
    }
    for o in &raw.outputs {
        if !bound_outputs.contains(&o.id) {
            issue(ErrorCode::DanglingOutput, format!("output `{}` has no binding", o.id));
        }
    }

    if !issues.is_empty() {
        issues.sort_by_key(|i| i.code);
        return Err(ManifestError { issues });
    }
    Ok(ModuleManifest {
        category: category.expect("checked"),
        name: raw.name,
        title: raw.title,
        inputs: raw.inputs,
        outputs: raw.outputs,
        bindings: raw.bindings,
        reactives: raw.reactives,
        layout: raw.layout.expect("checked"),
        store_button: store.expect("checked"),
        templates,
    })
}

fn widget_feeds(input: &InputDescriptor, kind: ParamKind) -> Result<(), String> {
    let source = input.choice_source.as_ref();
    match (kind, &input.widget, source) {
        (ParamKind::Column(want), Widget::Select, Some(src)) if src.is_variable() => {
            match (want, src.variable_class().and_then(VariableClass::column_type)) {
                (Some(w), Some(have)) if w != have => Err(format!("offers {have} variables, needs {w}")),
                _ => Ok(()),
            }
        }
        (ParamKind::Number | ParamKind::Count, Widget::NumericField | Widget::Slider(_), _) => Ok(()),
        (ParamKind::Str, Widget::Select, Some(ChoiceSource::Static(_))) => Ok(()),
        (ParamKind::Choice(allowed), Widget::Select, Some(ChoiceSource::Static(c))) => {
            match c.iter().find(|v| !allowed.contains(&v.as_str())) {
                Some(bad) => Err(format!("choice `{bad}` is not accepted")),
                None => Ok(()),
            }
        }
        (ParamKind::Bool, Widget::Checkbox, _) => Ok(()),
        _ => Err(format!("widget {:?} does not produce {kind:?}", input.widget)),
    }
}

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid manifest {path}: {error}")]
    Manifest { path: PathBuf, error: ManifestError },
    #[error("{path}: manifest declares `{declared}` but lives under `{location}`")]
    Misplaced { path: PathBuf, declared: String, location: String },
    #[error("module `{0}` is enabled but not present")]
    UnknownModule(String),
    #[error("module `{0}` is required but not present")]
    MissingRequired(String),
}

/// The modules served, in navigation order.
#[derive(Debug, Clone, Default)]
pub struct Registry {
    modules: Vec<ModuleManifest>,
}

impl Registry {
    pub fn from_modules(mut modules: Vec<ModuleManifest>) -> Self {
        modules.sort_by(|a, b| (a.category, &a.name).cmp(&(b.category, &b.name)));
        Registry { modules }
    }

    pub fn modules(&self) -> &[ModuleManifest] {
        &self.modules
    }

    pub fn ids(&self) -> Vec<String> {
        self.modules.iter().map(ModuleManifest::id).collect()
    }

    pub fn get(&self, id: &str) -> Option<&ModuleManifest> {
        self.modules.iter().find(|m| m.id() == id)
    }

    /// Kernel vocabulary of the served modules plus the core commands.
    pub fn commands(&self) -> CommandRegistry {
        CommandRegistry::builtin().restricted(self.modules.iter().flat_map(|m| m.kernels()))
    }
}

/// Reads every `<category>/<name>/manifest.json` under `dir`.
///
/// With `enabled`, only those modules plus `data/sources` are kept.
pub fn discover(dir: &Path, enabled: Option<&[String]>) -> Result<Registry, RegistryError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| RegistryError::Io { path, source }
    };
    let mut found = Vec::new();
    for category in CATEGORIES {
        let cat_dir = dir.join(category);
        if !cat_dir.is_dir() {
            continue;
        }
        let mut entries: Vec<PathBuf> = std::fs::read_dir(&cat_dir)
            .map_err(io(&cat_dir))?
            .map(|e| e.map(|e| e.path()))
            .collect::<Result<_, _>>()
            .map_err(io(&cat_dir))?;
        entries.sort();
        for module_dir in entries.into_iter().filter(|p| p.is_dir()) {
            let path = module_dir.join("manifest.json");
            if !path.is_file() {
                continue;
            }
            let bytes = std::fs::read(&path).map_err(io(&path))?;
            let m = load_manifest(&bytes).map_err(|error| RegistryError::Manifest { path: path.clone(), error })?;
            let location = format!("{category}/{}", module_dir.file_name().unwrap_or_default().to_string_lossy());
            if m.id() != location {
                return Err(RegistryError::Misplaced { path, declared: m.id(), location });
            }
            found.push(m);
        }
    }
    if !found.iter().any(|m| m.id() == REQUIRED_MODULE) {
        return Err(RegistryError::MissingRequired(REQUIRED_MODULE.into()));
    }
    if let Some(enabled) = enabled {
        let present: BTreeSet<String> = found.iter().map(ModuleManifest::id).collect();
        if let Some(missing) = enabled.iter().find(|e| !present.contains(e.as_str())) {
            return Err(RegistryError::UnknownModule(missing.clone()));
        }
        found.retain(|m| m.id() == REQUIRED_MODULE || enabled.contains(&m.id()));
    }
    Ok(Registry::from_modules(found))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NavEntry {
    pub id: String,
    pub title: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NavSection {
    pub heading: String,
    pub entries: Vec<NavEntry>,
}

pub fn nav_structure(reg: &Registry) -> Vec<NavSection> {
    let mut out: Vec<NavSection> = Vec::new();
    let mut last = None;
    for m in reg.modules() {
        if last != Some(m.category) {
            out.push(NavSection { heading: m.category.heading(), entries: Vec::new() });
            last = Some(m.category);
        }
        out.last_mut().expect("pushed").entries.push(NavEntry { id: m.id(), title: m.title.clone() });
    }
    out
}
