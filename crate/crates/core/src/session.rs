//! One user's live workbench: a reactive graph wired from the enabled
//! modules, the transcript of stored statements, and the retained upload.
//!
//! Graph layout, for module `cat/name`:
//!
//! * `__dataset` – input holding the active dataset;
//! * `cat.name.<input>` – one input node per form control;
//! * `cat.name/reactive/<id>` – derived choice lists;
//! * `cat.name.<input>/choices` and `.../refresh` – the choice list of a
//!   variable select and the observer keeping its selection valid;
//! * `cat.name/output/<id>` – eagerly pulled outputs that interpolate the
//!   module's template;
//! * `cat.name/store` – observer appending the module's statement when the
//!   store button counter rises.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Arc, Mutex};
use std::time::SystemTime;

use serde::Serialize;
use thiserror::Error;

use crate::commands::{CommandRegistry, Env, ResultValue};
use crate::dataset::{parse_csv, DataError, Dataset, DatasetSummary};
use crate::dsl::{Call, Value};
use crate::par::Parallelism;
use crate::reactive::{Context, NodeError, NodeId, ReactiveError, ReactiveGraph, ReactiveValue};
use crate::registry::{ChoiceSource, Layout, ModuleManifest, OutputKind, Registry, VariableClass, Widget};
use crate::transcription::{
    dsl_string, eval_script, interpolate, render_report, Binding, RenderedStatement, ReportDocument, Script,
    ScriptError,
};

pub const DEMO_FILENAME: &str = "mpg.csv";
pub const DEMO_CSV: &[u8] = include_bytes!("../data/mpg.csv");

const DATASET: &str = "__dataset";

#[derive(Debug, Clone)]
pub struct DataState {
    pub dataset: Arc<Dataset>,
    pub filename: String,
    /// Changes whenever the dataset is replaced.
    pub version: u64,
}

#[derive(Debug, Clone)]
pub struct OutputState {
    pub statement: Option<RenderedStatement>,
    pub result: Result<ResultValue, String>,
    /// Dataset produced by a data-mutating command, applied on store.
    pub dataset: Option<Arc<Dataset>>,
}

/// Values flowing through a session graph.
#[derive(Debug, Clone)]
pub enum SVal {
    Data(Arc<DataState>),
    Text(String),
    Number(f64),
    Bool(bool),
    Texts(Vec<String>),
    Count(u64),
    Choices(Arc<Vec<String>>),
    Output(Arc<OutputState>),
}

impl ReactiveValue for SVal {
    fn same_as(&self, other: &Self) -> bool {
        use SVal::*;
        match (self, other) {
            (Data(a), Data(b)) => a.version == b.version,
            (Text(a), Text(b)) => a == b,
            (Number(a), Number(b)) => a.to_bits() == b.to_bits(),
            (Bool(a), Bool(b)) => a == b,
            (Texts(a), Texts(b)) => a == b,
            (Count(a), Count(b)) => a == b,
            (Choices(a), Choices(b)) => a == b,
            (Output(a), Output(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

impl SVal {
    fn text(&self) -> Option<&str> {
        match self {
            SVal::Text(s) => Some(s),
            _ => None,
        }
    }

    fn choices(&self) -> Option<&[String]> {
        match self {
            SVal::Choices(c) => Some(c),
            _ => None,
        }
    }

    fn to_json(&self) -> serde_json::Value {
        use serde_json::json;
        match self {
            SVal::Text(s) => json!(s),
            SVal::Number(x) => json!(x),
            SVal::Bool(b) => json!(b),
            SVal::Texts(v) => json!(v),
            SVal::Count(n) => json!(n),
            SVal::Choices(c) => json!(c.as_slice()),
            SVal::Data(_) | SVal::Output(_) => serde_json::Value::Null,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SessionError {
    #[error("unknown module `{0}`")]
    UnknownModule(String),
    #[error("module `{0}` is already wired into this session")]
    AlreadyWired(String),
    #[error("unknown input `{0}`")]
    UnknownInput(String),
    #[error("input `{input}`: {message}")]
    InvalidValue { input: String, message: String },
    #[error("input `{input}`: {value} is outside the slider range [{min}, {max}]")]
    SliderRange { input: String, value: f64, min: f64, max: f64 },
    #[error("nothing to store for module `{0}`")]
    NothingToStore(String),
    #[error("module `{module}` has no result to store: {message}")]
    ErroredResult { module: String, message: String },
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("replay failed: {0}")]
    Replay(Box<ScriptError>),
    #[error("internal graph error: {0}")]
    Graph(#[from] ReactiveError),
}

impl From<ScriptError> for SessionError {
    fn from(e: ScriptError) -> Self {
        SessionError::Replay(Box::new(e))
    }
}

#[derive(Debug, Default)]
struct Shared {
    script: Script,
    stored_results: Vec<ResultValue>,
    module_code: BTreeMap<String, RenderedStatement>,
    store_outcome: Option<Result<usize, SessionError>>,
    next_version: u64,
}

/// An output as published to clients.
#[derive(Debug, Clone, Serialize)]
pub struct OutputPayload {
    pub module_id: String,
    pub output_id: String,
    pub kind: OutputKind,
    pub statement: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Response to an input change.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ChangeSet {
    /// `cat/name/output` to payload, for every output recomputed.
    pub outputs: BTreeMap<String, OutputPayload>,
    /// Current statement text of every module whose output changed.
    pub code_panel: BTreeMap<String, String>,
}

impl ChangeSet {
    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InputUi {
    pub id: String,
    pub global_id: String,
    pub label: String,
    pub widget: Widget,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub choices: Option<Vec<String>>,
    pub value: serde_json::Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputUi {
    pub title: String,
    #[serde(flatten)]
    pub payload: OutputPayload,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModuleUi {
    pub id: String,
    pub category: String,
    pub name: String,
    pub title: String,
    pub layout: Layout,
    pub store_button: String,
    pub inputs: Vec<InputUi>,
    pub outputs: Vec<OutputUi>,
}

fn input_node(m: &ModuleManifest, input: &str) -> String {
    format!("{}.{}.{input}", m.category.name(), m.name)
}

fn choices_node(m: &ModuleManifest, input: &str) -> String {
    format!("{}/choices", input_node(m, input))
}

fn reactive_node(m: &ModuleManifest, id: &str) -> String {
    format!("{}.{}/reactive/{id}", m.category.name(), m.name)
}

fn output_node(m: &ModuleManifest, id: &str) -> String {
    format!("{}.{}/output/{id}", m.category.name(), m.name)
}

fn class_names(ds: &Dataset, class: VariableClass) -> Vec<String> {
    match class {
        VariableClass::NumericVariables => ds.numeric_names(),
        VariableClass::CategoricalVariables => ds.categorical_names(),
        VariableClass::AllVariables => ds.names(),
    }
}

fn read_data(cx: &mut Context<'_, SVal>) -> Result<Arc<DataState>, NodeError> {
    match cx.read(DATASET)? {
        SVal::Data(d) => Ok(d),
        _ => Err(NodeError::Compute("dataset node holds a non-dataset value".into())),
    }
}

fn lock(shared: &Mutex<Shared>) -> std::sync::MutexGuard<'_, Shared> {
    shared.lock().unwrap_or_else(|p| p.into_inner())
}

pub struct Session {
    id: String,
    graph: ReactiveGraph<SVal>,
    shared: Arc<Mutex<Shared>>,
    registry: Arc<Registry>,
    commands: Arc<CommandRegistry>,
    code_visible: bool,
    filename: String,
    uploaded: Arc<Vec<u8>>,
    created_at: SystemTime,
    wired: Vec<ModuleManifest>,
}

impl std::fmt::Debug for Session {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Session").field("id", &self.id).field("filename", &self.filename).finish_non_exhaustive()
    }
}

impl Session {
    /// A session on the bundled demo dataset with every registry module wired.
    pub fn new(id: impl Into<String>, registry: Arc<Registry>) -> Result<Self, SessionError> {
        Self::with_data(id, registry, DEMO_FILENAME, DEMO_CSV.to_vec())
    }

    pub fn with_data(
        id: impl Into<String>,
        registry: Arc<Registry>,
        filename: &str,
        bytes: Vec<u8>,
    ) -> Result<Self, SessionError> {
        let ds = parse_csv(&bytes, true)?;
        let preamble = vec![load_statement(filename)];
        Self::build(id.into(), registry, filename, bytes, ds, Script::with_preamble(preamble), Vec::new())
    }

    fn build(
        id: String,
        registry: Arc<Registry>,
        filename: &str,
        bytes: Vec<u8>,
        ds: Dataset,
        script: Script,
        stored_results: Vec<ResultValue>,
    ) -> Result<Self, SessionError> {
        let shared = Arc::new(Mutex::new(Shared { script, stored_results, next_version: 1, ..Shared::default() }));
        let graph = ReactiveGraph::new();
        graph.register_input(
            DATASET,
            SVal::Data(Arc::new(DataState { dataset: Arc::new(ds), filename: filename.into(), version: 0 })),
        )?;
        let mut session = Session {
            id,
            graph,
            shared,
            commands: Arc::new(registry.commands()),
            registry: registry.clone(),
            code_visible: true,
            filename: filename.into(),
            uploaded: Arc::new(bytes),
            created_at: SystemTime::now(),
            wired: Vec::new(),
        };
        for m in registry.modules() {
            session.wire(m)?;
        }
        Ok(session)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn registry(&self) -> &Arc<Registry> {
        &self.registry
    }

    pub fn created_at(&self) -> SystemTime {
        self.created_at
    }

    pub fn filename(&self) -> &str {
        &self.filename
    }

    pub fn uploaded_bytes(&self) -> &[u8] {
        &self.uploaded
    }

    pub fn dataset(&self) -> Arc<Dataset> {
        match self.graph.read(DATASET) {
            Ok(SVal::Data(d)) => d.dataset.clone(),
            _ => unreachable!("dataset input always holds data"),
        }
    }

    pub fn code_visible(&self) -> bool {
        self.code_visible
    }

    pub fn set_code_visibility(&mut self, visible: bool) {
        self.code_visible = visible;
    }

    pub fn script(&self) -> Script {
        lock(&self.shared).script.clone()
    }

    pub fn script_text(&self) -> String {
        lock(&self.shared).script.to_text()
    }

    /// Results captured live for each stored statement.
    pub fn stored_results(&self) -> Vec<ResultValue> {
        lock(&self.shared).stored_results.clone()
    }

    /// Latest statement of every module.
    pub fn module_code(&self) -> BTreeMap<String, String> {
        lock(&self.shared).module_code.iter().map(|(k, v)| (k.clone(), v.text.clone())).collect()
    }

    pub fn modules(&self) -> &[ModuleManifest] {
        &self.wired
    }

    fn module(&self, id: &str) -> Result<&ModuleManifest, SessionError> {
        self.wired.iter().find(|m| m.id() == id).ok_or_else(|| SessionError::UnknownModule(id.into()))
    }

    /// Wires one module into the graph and returns the nodes created.
    ///
    /// Derived nodes are registered before the observers that read them,
    /// because observers run once as soon as they are registered.
    pub fn wire(&mut self, m: &ModuleManifest) -> Result<BTreeSet<NodeId>, SessionError> {
        let module_id = m.id();
        if self.wired.iter().any(|w| w.id() == module_id) {
            return Err(SessionError::AlreadyWired(module_id));
        }
        let g = &self.graph;
        let mut created = BTreeSet::new();

        for input in &m.inputs {
            let initial = match (&input.widget, &input.choice_source, &input.default) {
                (Widget::Select, Some(ChoiceSource::Static(c)), d) => {
                    SVal::Text(d.as_ref().and_then(|d| d.as_str()).unwrap_or(&c[0]).to_string())
                }
                (Widget::Select, _, _) => SVal::Text(String::new()),
                (Widget::MultiSelect, _, _) => SVal::Texts(Vec::new()),
                (Widget::NumericField, _, d) => SVal::Number(d.as_ref().and_then(|d| d.as_f64()).unwrap_or(0.0)),
                (Widget::Slider(s), _, _) => SVal::Number(s.default),
                (Widget::Checkbox, _, d) => SVal::Bool(d.as_ref().and_then(|d| d.as_bool()).unwrap_or(false)),
                (Widget::ActionButton, _, _) => SVal::Count(0),
            };
            created.insert(g.register_input(input_node(m, &input.id), initial)?);
        }

        for r in &m.reactives {
            let from = input_node(m, &r.from_input);
            let r = r.clone();
            created.insert(g.register_computed(reactive_node(m, &r.id), move |cx| {
                let selected = cx.read(&from)?;
                let class = r.class_for(selected.text().unwrap_or_default());
                let data = read_data(cx)?;
                Ok(SVal::Choices(Arc::new(class_names(&data.dataset, class))))
            })?);
        }

        let variable_inputs: Vec<_> =
            m.inputs.iter().filter(|i| i.choice_source.as_ref().is_some_and(ChoiceSource::is_variable)).collect();
        for input in &variable_inputs {
            let node = choices_node(m, &input.id);
            match input.choice_source.clone().expect("filtered") {
                ChoiceSource::Reactive(r) => {
                    let src = reactive_node(m, &r);
                    created.insert(g.register_computed(node, move |cx| cx.read(&src))?);
                }
                other => {
                    let class = other.variable_class().expect("variable source");
                    created.insert(g.register_computed(node, move |cx| {
                        let data = read_data(cx)?;
                        Ok(SVal::Choices(Arc::new(class_names(&data.dataset, class))))
                    })?);
                }
            }
        }
        // Paired selects default to distinct variables: the k-th variable
        // input picks the k-th choice when there is one.
        for (ordinal, input) in variable_inputs.iter().enumerate() {
            let choices = choices_node(m, &input.id);
            let selection = input_node(m, &input.id);
            let multi = input.widget == Widget::MultiSelect;
            created.insert(g.register_observer(format!("{selection}/refresh"), move |cx| {
                let Ok(SVal::Choices(list)) = cx.read(&choices) else { return };
                match cx.peek(&selection) {
                    Ok(SVal::Texts(current)) if multi => {
                        let kept: Vec<String> = current.iter().filter(|c| list.contains(c)).cloned().collect();
                        if kept.len() != current.len() {
                            cx.set_input(&selection, SVal::Texts(kept));
                        }
                    }
                    Ok(SVal::Text(current)) if !list.contains(&current) => {
                        let pick = list.get(ordinal).or(list.first()).cloned().unwrap_or_default();
                        cx.set_input(&selection, SVal::Text(pick));
                    }
                    _ => {}
                }
            })?);
        }

        for output in &m.outputs {
            let (b_idx, binding) = m.binding_for(&output.id).expect("validated");
            let template = m.template(b_idx).clone();
            let params: Vec<(String, String, Widget, bool)> = binding
                .param_map
                .iter()
                .map(|(input, param)| {
                    let d = m.input(input).expect("validated");
                    let variable = d.choice_source.as_ref().is_some_and(ChoiceSource::is_variable);
                    (input_node(m, input), param.clone(), d.widget.clone(), variable)
                })
                .collect();
            let commands = self.commands.clone();
            let shared = self.shared.clone();
            let module_id = module_id.clone();
            created.insert(g.register_output(output_node(m, &output.id), move |cx| {
                let data = read_data(cx)?;
                let mut bindings = Vec::with_capacity(params.len());
                for (node, param, widget, variable) in &params {
                    let value = match (cx.read(node)?, widget) {
                        (SVal::Text(s), _) if *variable => Value::ColumnRef(s),
                        (SVal::Text(s), _) => Value::Str(s),
                        (SVal::Texts(v), _) => Value::List(
                            v.into_iter()
                                .map(|s| if *variable { Value::ColumnRef(s) } else { Value::Str(s) })
                                .collect(),
                        ),
                        (SVal::Number(x), _) => Value::Number(x),
                        (SVal::Bool(b), _) => Value::Bool(b),
                        (other, _) => return Err(NodeError::Compute(format!("input {node} holds {other:?}"))),
                    };
                    bindings.push(Binding::new(param.clone(), value));
                }
                let env = Env { dataset: Some(data.dataset.clone()), files: Default::default() };
                let mut produced = None;
                let state = match interpolate(&template, &bindings, &module_id, cx.epoch(), |call: &Call| {
                    let out = commands.invoke(call, &env)?;
                    produced = out.dataset.map(Arc::new);
                    Ok(out.result)
                }) {
                    Ok((stmt, result)) => {
                        lock(&shared).module_code.insert(module_id.clone(), stmt.clone());
                        OutputState {
                            statement: Some(stmt),
                            result: result.map_err(|e| e.to_string()),
                            dataset: produced,
                        }
                    }
                    Err(e) => OutputState { statement: None, result: Err(e.to_string()), dataset: None },
                };
                Ok(SVal::Output(Arc::new(state)))
            })?);
        }

        let counter = input_node(m, &m.store_button);
        let outputs: Vec<String> = m.outputs.iter().map(|o| output_node(m, &o.id)).collect();
        let shared = self.shared.clone();
        let mut last = 0u64;
        created.insert(g.register_observer(format!("{}.{}/store", m.category.name(), m.name), move |cx| {
            let Ok(SVal::Count(n)) = cx.read(&counter) else { return };
            if n <= last {
                return;
            }
            last = n;
            let mut states = Vec::new();
            for o in &outputs {
                if let Ok(SVal::Output(s)) = cx.peek(o) {
                    states.push(s);
                }
            }
            let outcome = (|| {
                let mut picked = Vec::new();
                for s in &states {
                    let stmt = s.statement.clone().ok_or_else(|| SessionError::NothingToStore(module_id.clone()))?;
                    let result = s
                        .result
                        .clone()
                        .map_err(|message| SessionError::ErroredResult { module: module_id.clone(), message })?;
                    picked.push((stmt, result, s.dataset.clone()));
                }
                if picked.is_empty() {
                    return Err(SessionError::NothingToStore(module_id.clone()));
                }
                Ok(picked)
            })();
            let mut sh = lock(&shared);
            match outcome {
                Err(e) => sh.store_outcome = Some(Err(e)),
                Ok(picked) => {
                    let mut new_data = None;
                    for (stmt, result, dataset) in picked {
                        sh.script.stored.push(stmt);
                        sh.stored_results.push(result);
                        new_data = dataset.or(new_data);
                    }
                    sh.store_outcome = Some(Ok(sh.script.stored.len()));
                    if let Some(ds) = new_data {
                        let version = sh.next_version;
                        sh.next_version += 1;
                        drop(sh);
                        if let Ok(SVal::Data(current)) = cx.peek(DATASET) {
                            cx.set_input(
                                DATASET,
                                SVal::Data(Arc::new(DataState {
                                    dataset: ds,
                                    filename: current.filename.clone(),
                                    version,
                                })),
                            );
                        }
                    }
                }
            }
        })?);

        self.wired.push(m.clone());
        Ok(created)
    }

    /// Replaces the active dataset; stored statements are kept.
    pub fn upload_data(&mut self, filename: &str, bytes: Vec<u8>) -> Result<DatasetSummary, SessionError> {
        let ds = parse_csv(&bytes, true)?;
        let summary = ds.summary();
        let version = {
            let mut sh = lock(&self.shared);
            sh.script.preamble = vec![load_statement(filename)];
            sh.next_version += 1;
            sh.next_version - 1
        };
        self.filename = filename.into();
        self.uploaded = Arc::new(bytes);
        self.graph.set_input(
            DATASET,
            SVal::Data(Arc::new(DataState { dataset: Arc::new(ds), filename: filename.into(), version })),
        )?;
        Ok(summary)
    }

    fn locate_input(
        &self,
        global_id: &str,
    ) -> Result<(&ModuleManifest, &crate::registry::InputDescriptor), SessionError> {
        self.wired
            .iter()
            .find_map(|m| m.inputs.iter().find(|i| input_node(m, &i.id) == global_id).map(|i| (m, i)))
            .ok_or_else(|| SessionError::UnknownInput(global_id.into()))
    }

    /// Current choices of a select, by global input id.
    pub fn choices(&self, global_id: &str) -> Option<Vec<String>> {
        let (m, input) = self.locate_input(global_id).ok()?;
        match input.choice_source.as_ref()? {
            ChoiceSource::Static(c) => Some(c.clone()),
            _ => self.graph.read(&choices_node(m, &input.id)).ok()?.choices().map(<[String]>::to_vec),
        }
    }

    /// Current value of an input, by global id.
    pub fn input_value(&self, global_id: &str) -> Option<serde_json::Value> {
        self.locate_input(global_id).ok()?;
        self.graph.read(global_id).ok().map(|v| v.to_json())
    }

    /// Sets an input (`category.name.input`) and reports what changed.
    pub fn set_input(&mut self, global_id: &str, value: &serde_json::Value) -> Result<ChangeSet, SessionError> {
        let (_, input) = self.locate_input(global_id)?;
        let invalid = |message: &str| SessionError::InvalidValue { input: global_id.into(), message: message.into() };
        let choices = || self.choices(global_id).unwrap_or_default();
        let v = match &input.widget {
            Widget::Select => {
                let s = value.as_str().ok_or_else(|| invalid("expected a string"))?;
                if !choices().iter().any(|c| c == s) {
                    return Err(invalid(&format!("`{s}` is not one of the available choices")));
                }
                SVal::Text(s.into())
            }
            Widget::MultiSelect => {
                let items = value.as_array().ok_or_else(|| invalid("expected a list of strings"))?;
                let available = choices();
                let mut out = Vec::new();
                for item in items {
                    let s = item.as_str().ok_or_else(|| invalid("expected a list of strings"))?;
                    if !available.iter().any(|c| c == s) {
                        return Err(invalid(&format!("`{s}` is not one of the available choices")));
                    }
                    out.push(s.to_string());
                }
                SVal::Texts(out)
            }
            Widget::NumericField => {
                let x = value.as_f64().filter(|x| x.is_finite()).ok_or_else(|| invalid("expected a finite number"))?;
                SVal::Number(x)
            }
            Widget::Slider(s) => {
                let x = value.as_f64().ok_or_else(|| invalid("expected a number"))?;
                let snapped = s.snap(x).ok_or(SessionError::SliderRange {
                    input: global_id.into(),
                    value: x,
                    min: s.min,
                    max: s.max,
                })?;
                SVal::Number(snapped)
            }
            Widget::Checkbox => SVal::Bool(value.as_bool().ok_or_else(|| invalid("expected true or false"))?),
            Widget::ActionButton => return Err(invalid("action buttons are triggered through store")),
        };
        let report = self.graph.set_input(global_id, v)?;
        Ok(self.change_set(&report.all_recomputed()))
    }

    fn change_set(&self, recomputed: &[NodeId]) -> ChangeSet {
        let mut set = ChangeSet::default();
        for m in &self.wired {
            for o in &m.outputs {
                let node = output_node(m, &o.id);
                if recomputed.iter().any(|n| n.0 == node) {
                    let payload = self.output_payload(m, &o.id, o.kind);
                    if let Some(s) = &payload.statement {
                        set.code_panel.insert(m.id(), s.clone());
                    }
                    set.outputs.insert(format!("{}/{}", m.id(), o.id), payload);
                }
            }
        }
        set
    }

    fn output_payload(&self, m: &ModuleManifest, output_id: &str, kind: OutputKind) -> OutputPayload {
        let state = match self.graph.read(&output_node(m, output_id)) {
            Ok(SVal::Output(s)) => Some(s),
            _ => None,
        };
        let mut payload = OutputPayload {
            module_id: m.id(),
            output_id: output_id.into(),
            kind,
            statement: None,
            result: None,
            text: None,
            error: None,
        };
        match state {
            Some(s) => {
                payload.statement = s.statement.as_ref().map(|st| st.text.clone());
                match &s.result {
                    Ok(r) => {
                        payload.result = Some(r.to_json());
                        payload.text = Some(r.to_text());
                    }
                    Err(e) => payload.error = Some(e.clone()),
                }
            }
            None => payload.error = Some("output unavailable".into()),
        }
        payload
    }

    /// Latest result of every output of a module.
    pub fn outputs(&self, module_id: &str) -> Result<Vec<OutputPayload>, SessionError> {
        let m = self.module(module_id)?;
        Ok(m.outputs.iter().map(|o| self.output_payload(m, &o.id, o.kind)).collect())
    }

    /// Appends the module's current statement to the script.
    pub fn store_result(&mut self, module_id: &str) -> Result<usize, SessionError> {
        let m = self.module(module_id)?;
        let counter = input_node(m, &m.store_button);
        let n = match self.graph.read(&counter)? {
            SVal::Count(n) => n,
            _ => unreachable!("store counter"),
        };
        lock(&self.shared).store_outcome = None;
        self.graph.set_input(&counter, SVal::Count(n + 1))?;
        lock(&self.shared).store_outcome.take().unwrap_or_else(|| Err(SessionError::NothingToStore(module_id.into())))
    }

    pub fn replay_env(&self) -> Env {
        Env::with_file(self.filename.clone(), self.uploaded.to_vec())
    }

    /// Re-executes the script from the retained upload.
    pub fn render_report(&self, mode: Parallelism) -> Result<ReportDocument, ScriptError> {
        render_report(&self.script(), &self.replay_env(), &self.commands, self.code_visible, mode)
    }

    pub fn module_ui(&self, module_id: &str) -> Result<ModuleUi, SessionError> {
        let m = self.module(module_id)?;
        let inputs = m
            .inputs
            .iter()
            .map(|i| {
                let global_id = input_node(m, &i.id);
                InputUi {
                    id: i.id.clone(),
                    label: i.label.clone(),
                    widget: i.widget.clone(),
                    choices: self.choices(&global_id),
                    value: self.input_value(&global_id).unwrap_or_default(),
                    global_id,
                }
            })
            .collect();
        let outputs = m
            .outputs
            .iter()
            .map(|o| OutputUi { title: o.title.clone(), payload: self.output_payload(m, &o.id, o.kind) })
            .collect();
        Ok(ModuleUi {
            id: m.id(),
            category: m.category.name().into(),
            name: m.name.clone(),
            title: m.title.clone(),
            layout: m.layout,
            store_button: m.store_button.clone(),
            inputs,
            outputs,
        })
    }

    /// Builds a session by replaying `script_text` against `bytes`.
    ///
    /// The data file name comes from the script's leading `load_data`; a
    /// script without one starts from `default_filename`.
    pub fn resume(
        id: impl Into<String>,
        registry: Arc<Registry>,
        script_text: &str,
        default_filename: &str,
        bytes: Vec<u8>,
    ) -> Result<Self, SessionError> {
        let kernel_owner: BTreeMap<&str, String> =
            registry.modules().iter().rev().flat_map(|m| m.kernels().map(move |k| (k, m.id()))).collect();
        let mut script = Script::from_text(script_text, |c| {
            kernel_owner.get(c.name.as_str()).cloned().unwrap_or_else(|| "script".into())
        })
        .map_err(ScriptError::from)?;
        let filename = script.data_file().unwrap_or_else(|| default_filename.to_string());
        if script.preamble.is_empty() {
            script.preamble.push(load_statement(&filename));
        }
        let commands = registry.commands();
        let mut env = Env::with_file(filename.clone(), bytes.clone());
        let ast = script.parse().map_err(ScriptError::from)?;
        let results = eval_script(&ast, &mut env, &commands)?;
        let stored_results = results.into_iter().skip(script.preamble.len()).collect();
        let ds = env.dataset.map(|d| (*d).clone()).expect("preamble loads data");
        Self::build(id.into(), registry, &filename, bytes, ds, script, stored_results)
    }
}

fn load_statement(filename: &str) -> RenderedStatement {
    RenderedStatement {
        text: format!("load_data({})", dsl_string(filename)),
        module_id: "data/sources".into(),
        produced_at: 0,
    }
}
