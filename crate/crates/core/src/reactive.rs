//! Transactional reactive dependency graph.
//!
//! Three node kinds:
//!
//! * **inputs** hold values set from outside;
//! * **computed** nodes cache the result of a closure and re-learn their
//!   dependencies on every evaluation by logging the reads it performs;
//! * **observers** run a side-effecting closure and are never read.
//!
//! Computed nodes may be registered as *outputs*, which are pulled eagerly at
//! the end of every transaction. Everything else is demand driven: a dirty
//! computed node that no output or observer reads stays dirty.
//!
//! [`ReactiveGraph::set_input`] runs one transaction. All transitive
//! dependents are marked dirty before anything is evaluated, so every read
//! sees post-update values, and each node is evaluated at most once. Inputs
//! written by observers are applied as follow-up transactions once the
//! current one has settled.

use std::cell::RefCell;
use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

/// Node identifier, unique within one graph.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub String);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_string())
    }
}

impl From<String> for NodeId {
    fn from(s: String) -> Self {
        NodeId(s)
    }
}

/// Values stored in a graph. Equality is structural and compares floats
/// bitwise; it decides whether an input update is a no-op.
pub trait ReactiveValue: Clone + Send + 'static {
    fn same_as(&self, other: &Self) -> bool;
}

impl ReactiveValue for f64 {
    fn same_as(&self, other: &Self) -> bool {
        self.to_bits() == other.to_bits()
    }
}

macro_rules! eq_value {
    ($($t:ty),*) => {$(
        impl ReactiveValue for $t {
            fn same_as(&self, other: &Self) -> bool { self == other }
        }
    )*};
}
eq_value!(i64, u64, bool, String, ());

impl<T: ReactiveValue> ReactiveValue for Vec<T> {
    fn same_as(&self, other: &Self) -> bool {
        self.len() == other.len() && self.iter().zip(other).all(|(a, b)| a.same_as(b))
    }
}

impl<T: ReactiveValue> ReactiveValue for Option<T> {
    fn same_as(&self, other: &Self) -> bool {
        match (self, other) {
            (Some(a), Some(b)) => a.same_as(b),
            (None, None) => true,
            _ => false,
        }
    }
}

/// Error stored in (and propagated from) a computed node.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NodeError {
    #[error("{0}")]
    Compute(String),
    #[error("dependency cycle: {}", .0.iter().map(|n| n.0.as_str()).collect::<Vec<_>>().join(" -> "))]
    Cycle(Vec<NodeId>),
    #[error("cannot read observer `{0}`")]
    ReadObserver(NodeId),
    #[error("unknown node `{0}`")]
    Unknown(NodeId),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReactiveError {
    #[error("node `{0}` is already registered")]
    DuplicateId(NodeId),
    #[error("unknown node `{0}`")]
    UnknownId(NodeId),
    #[error("node `{0}` is not an input")]
    NotAnInput(NodeId),
    #[error("cannot read observer `{0}`")]
    ReadObserver(NodeId),
    #[error("observers kept writing inputs for {0} follow-up transactions")]
    Unsettled(usize),
    #[error(transparent)]
    Node(#[from] NodeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Input,
    Computed,
    Observer,
}

type ComputeFn<V> = Box<dyn Fn(&mut Context<'_, V>) -> Result<V, NodeError> + Send>;
type EffectFn<V> = Box<dyn FnMut(&mut Context<'_, V>) + Send>;

struct Node<V: ReactiveValue> {
    id: NodeId,
    kind: NodeKind,
    eager: bool,
    value: Option<Result<V, NodeError>>,
    dirty: bool,
    deps: Vec<usize>,
    dependents: BTreeSet<usize>,
    compute: Option<ComputeFn<V>>,
    effect: Option<EffectFn<V>>,
}

/// Outcome of one [`ReactiveGraph::set_input`] call.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TransactionReport {
    pub epoch: u64,
    /// Computed nodes evaluated, in completion (topological) order.
    pub recomputed: Vec<NodeId>,
    /// Observers run, in registration order.
    pub effects_run: Vec<NodeId>,
    /// Transactions triggered by inputs that observers wrote.
    pub cascaded: Vec<TransactionReport>,
}

impl TransactionReport {
    pub fn is_noop(&self) -> bool {
        self.recomputed.is_empty() && self.effects_run.is_empty() && self.cascaded.is_empty()
    }

    /// Recomputed nodes across this transaction and its follow-ups.
    pub fn all_recomputed(&self) -> Vec<NodeId> {
        let mut out = self.recomputed.clone();
        for c in &self.cascaded {
            out.extend(c.all_recomputed());
        }
        out
    }
}

struct Inner<V: ReactiveValue> {
    nodes: Vec<Node<V>>,
    index: HashMap<NodeId, usize>,
    epoch: u64,
    /// Nodes currently being evaluated, innermost last.
    stack: Vec<usize>,
    /// Reads logged by each evaluation on the stack.
    frames: Vec<Vec<usize>>,
    recomputed: Vec<usize>,
    effects_run: Vec<usize>,
    pending: Vec<(usize, V)>,
}

/// Handle passed to compute and effect closures.
pub struct Context<'g, V: ReactiveValue> {
    graph: &'g ReactiveGraph<V>,
}

impl<V: ReactiveValue> Context<'_, V> {
    /// Reads a node and records it as a dependency of the running closure.
    pub fn read(&mut self, id: &str) -> Result<V, NodeError> {
        let idx = self.graph.lookup(id).ok_or_else(|| NodeError::Unknown(id.into()))?;
        self.graph.read_idx(idx, true)
    }

    /// Reads without recording a dependency.
    pub fn peek(&mut self, id: &str) -> Result<V, NodeError> {
        let idx = self.graph.lookup(id).ok_or_else(|| NodeError::Unknown(id.into()))?;
        self.graph.read_idx(idx, false)
    }

    /// Epoch of the transaction being run.
    pub fn epoch(&self) -> u64 {
        self.graph.epoch()
    }

    /// Queues an input write, applied after the current transaction settles.
    /// Writes to unknown ids or non-inputs are ignored.
    pub fn set_input(&mut self, id: &str, value: V) {
        if let Some(idx) = self.graph.lookup(id) {
            let mut inner = self.graph.inner.borrow_mut();
            if inner.nodes[idx].kind == NodeKind::Input {
                inner.pending.push((idx, value));
            }
        }
    }
}

pub struct ReactiveGraph<V: ReactiveValue> {
    inner: RefCell<Inner<V>>,
    max_cascade: usize,
}

impl<V: ReactiveValue> Default for ReactiveGraph<V> {
    fn default() -> Self {
        Self::new()
    }
}

impl<V: ReactiveValue> ReactiveGraph<V> {
    pub fn new() -> Self {
        ReactiveGraph {
            inner: RefCell::new(Inner {
                nodes: Vec::new(),
                index: HashMap::new(),
                epoch: 0,
                stack: Vec::new(),
                frames: Vec::new(),
                recomputed: Vec::new(),
                effects_run: Vec::new(),
                pending: Vec::new(),
            }),
            max_cascade: 1000,
        }
    }

    pub fn epoch(&self) -> u64 {
        self.inner.borrow().epoch
    }

    pub fn contains(&self, id: &str) -> bool {
        self.lookup(id).is_some()
    }

    pub fn kind(&self, id: &str) -> Option<NodeKind> {
        self.lookup(id).map(|i| self.inner.borrow().nodes[i].kind)
    }

    /// Dependencies logged by the node's most recent evaluation.
    pub fn last_deps(&self, id: &str) -> Option<Vec<NodeId>> {
        let idx = self.lookup(id)?;
        let inner = self.inner.borrow();
        Some(inner.nodes[idx].deps.iter().map(|&d| inner.nodes[d].id.clone()).collect())
    }

    pub fn is_dirty(&self, id: &str) -> Option<bool> {
        self.lookup(id).map(|i| self.inner.borrow().nodes[i].dirty)
    }

    fn lookup(&self, id: &str) -> Option<usize> {
        self.inner.borrow().index.get(&NodeId::from(id)).copied()
    }

    fn add_node(&self, node: Node<V>) -> Result<usize, ReactiveError> {
        let mut inner = self.inner.borrow_mut();
        if inner.index.contains_key(&node.id) {
            return Err(ReactiveError::DuplicateId(node.id));
        }
        let idx = inner.nodes.len();
        inner.index.insert(node.id.clone(), idx);
        inner.nodes.push(node);
        Ok(idx)
    }

    fn blank(id: NodeId, kind: NodeKind) -> Node<V> {
        Node {
            id,
            kind,
            eager: false,
            value: None,
            dirty: kind != NodeKind::Input,
            deps: Vec::new(),
            dependents: BTreeSet::new(),
            compute: None,
            effect: None,
        }
    }

    pub fn register_input(&self, id: impl Into<NodeId>, initial: V) -> Result<NodeId, ReactiveError> {
        let id = id.into();
        let mut node = Self::blank(id.clone(), NodeKind::Input);
        node.value = Some(Ok(initial));
        self.add_node(node)?;
        Ok(id)
    }

    /// Registers a lazily evaluated node.
    pub fn register_computed<F>(&self, id: impl Into<NodeId>, compute: F) -> Result<NodeId, ReactiveError>
    where
        F: Fn(&mut Context<'_, V>) -> Result<V, NodeError> + Send + 'static,
    {
        let id = id.into();
        let mut node = Self::blank(id.clone(), NodeKind::Computed);
        node.compute = Some(Box::new(compute));
        self.add_node(node)?;
        Ok(id)
    }

    /// Registers a computed node that is evaluated immediately and re-pulled
    /// at the end of every transaction that dirties it.
    pub fn register_output<F>(&self, id: impl Into<NodeId>, compute: F) -> Result<NodeId, ReactiveError>
    where
        F: Fn(&mut Context<'_, V>) -> Result<V, NodeError> + Send + 'static,
    {
        let id = id.into();
        let mut node = Self::blank(id.clone(), NodeKind::Computed);
        node.compute = Some(Box::new(compute));
        node.eager = true;
        let idx = self.add_node(node)?;
        // Errors are cached in the node.
        let _ = self.read_idx(idx, false);
        self.flush_pending()?;
        Ok(id)
    }

    /// Registers an observer and runs it once.
    pub fn register_observer<F>(&self, id: impl Into<NodeId>, effect: F) -> Result<NodeId, ReactiveError>
    where
        F: FnMut(&mut Context<'_, V>) + Send + 'static,
    {
        let id = id.into();
        let mut node = Self::blank(id.clone(), NodeKind::Observer);
        node.effect = Some(Box::new(effect));
        let idx = self.add_node(node)?;
        self.run_observer(idx);
        self.inner.borrow_mut().effects_run.clear();
        self.inner.borrow_mut().recomputed.clear();
        self.flush_pending()?;
        Ok(id)
    }

    /// Reads an input or computed node from outside any evaluation.
    pub fn read(&self, id: &str) -> Result<V, ReactiveError> {
        let idx = self.lookup(id).ok_or_else(|| ReactiveError::UnknownId(id.into()))?;
        self.read_idx(idx, false).map_err(|e| match e {
            NodeError::ReadObserver(n) => ReactiveError::ReadObserver(n),
            other => ReactiveError::Node(other),
        })
    }

    /// Runs one transaction setting input `id` to `value`.
    pub fn set_input(&self, id: &str, value: V) -> Result<TransactionReport, ReactiveError> {
        let idx = self.lookup(id).ok_or_else(|| ReactiveError::UnknownId(id.into()))?;
        if self.inner.borrow().nodes[idx].kind != NodeKind::Input {
            return Err(ReactiveError::NotAnInput(id.into()));
        }
        let Some(mut report) = self.transaction(idx, value) else {
            return Ok(TransactionReport::default());
        };
        report.cascaded = self.flush_pending()?;
        Ok(report)
    }

    fn flush_pending(&self) -> Result<Vec<TransactionReport>, ReactiveError> {
        let mut reports = Vec::new();
        loop {
            let next = {
                let mut inner = self.inner.borrow_mut();
                if inner.pending.is_empty() {
                    None
                } else {
                    Some(inner.pending.remove(0))
                }
            };
            let Some((idx, value)) = next else { break };
            if reports.len() >= self.max_cascade {
                self.inner.borrow_mut().pending.clear();
                return Err(ReactiveError::Unsettled(self.max_cascade));
            }
            if let Some(report) = self.transaction(idx, value) {
                reports.push(report);
            }
        }
        Ok(reports)
    }

    fn transaction(&self, idx: usize, value: V) -> Option<TransactionReport> {
        let (outputs, observers) = {
            let mut inner = self.inner.borrow_mut();
            let unchanged = matches!(&inner.nodes[idx].value, Some(Ok(v)) if v.same_as(&value));
            if unchanged {
                return None;
            }
            inner.epoch += 1;
            inner.nodes[idx].value = Some(Ok(value));
            inner.recomputed.clear();
            inner.effects_run.clear();

            // Mark every transitive dependent before evaluating anything.
            let mut queue: Vec<usize> = inner.nodes[idx].dependents.iter().copied().collect();
            let mut seen = BTreeSet::new();
            while let Some(n) = queue.pop() {
                if !seen.insert(n) {
                    continue;
                }
                inner.nodes[n].dirty = true;
                queue.extend(inner.nodes[n].dependents.iter().copied());
            }
            let outputs: Vec<usize> = seen.iter().copied().filter(|&n| inner.nodes[n].eager).collect();
            let observers: Vec<usize> =
                seen.iter().copied().filter(|&n| inner.nodes[n].kind == NodeKind::Observer).collect();
            (outputs, observers)
        };
        // BTreeSet iteration gives registration order.
        for o in outputs {
            if self.inner.borrow().nodes[o].dirty {
                let _ = self.read_idx(o, false);
            }
        }
        for o in observers {
            if self.inner.borrow().nodes[o].dirty {
                self.run_observer(o);
            }
        }
        let mut inner = self.inner.borrow_mut();
        let recomputed = std::mem::take(&mut inner.recomputed);
        let effects_run = std::mem::take(&mut inner.effects_run);
        Some(TransactionReport {
            epoch: inner.epoch,
            recomputed: recomputed.into_iter().map(|n| inner.nodes[n].id.clone()).collect(),
            effects_run: effects_run.into_iter().map(|n| inner.nodes[n].id.clone()).collect(),
            cascaded: Vec::new(),
        })
    }

    fn read_idx(&self, idx: usize, track: bool) -> Result<V, NodeError> {
        {
            let mut inner = self.inner.borrow_mut();
            let node = &inner.nodes[idx];
            if node.kind == NodeKind::Observer {
                return Err(NodeError::ReadObserver(node.id.clone()));
            }
            // Tracked even when it closes a cycle, so the failed reader is
            // invalidated once the cycle is broken.
            if track {
                if let Some(frame) = inner.frames.last_mut() {
                    if !frame.contains(&idx) {
                        frame.push(idx);
                    }
                }
            }
            if let Some(pos) = inner.stack.iter().position(|&s| s == idx) {
                let mut path: Vec<NodeId> = inner.stack[pos..].iter().map(|&s| inner.nodes[s].id.clone()).collect();
                path.push(inner.nodes[idx].id.clone());
                return Err(NodeError::Cycle(path));
            }
            let node = &inner.nodes[idx];
            if !node.dirty {
                if let Some(v) = &node.value {
                    return v.clone();
                }
            }
        }
        self.evaluate(idx)
    }

    fn evaluate(&self, idx: usize) -> Result<V, NodeError> {
        let compute = {
            let mut inner = self.inner.borrow_mut();
            inner.stack.push(idx);
            inner.frames.push(Vec::new());
            inner.nodes[idx].compute.take().expect("computed node has a closure")
        };
        let result = compute(&mut Context { graph: self });
        let mut inner = self.inner.borrow_mut();
        inner.nodes[idx].compute = Some(compute);
        inner.stack.pop();
        let reads = inner.frames.pop().unwrap_or_default();
        Self::relink(&mut inner, idx, reads);
        let node = &mut inner.nodes[idx];
        node.value = Some(result.clone());
        node.dirty = false;
        inner.recomputed.push(idx);
        result
    }

    fn run_observer(&self, idx: usize) {
        let mut effect = {
            let mut inner = self.inner.borrow_mut();
            inner.stack.push(idx);
            inner.frames.push(Vec::new());
            inner.nodes[idx].effect.take().expect("observer has an effect")
        };
        effect(&mut Context { graph: self });
        let mut inner = self.inner.borrow_mut();
        inner.nodes[idx].effect = Some(effect);
        inner.stack.pop();
        let reads = inner.frames.pop().unwrap_or_default();
        Self::relink(&mut inner, idx, reads);
        inner.nodes[idx].dirty = false;
        inner.effects_run.push(idx);
    }

    fn relink(inner: &mut Inner<V>, idx: usize, reads: Vec<usize>) {
        let old = std::mem::replace(&mut inner.nodes[idx].deps, reads);
        for d in old {
            inner.nodes[d].dependents.remove(&idx);
        }
        for d in inner.nodes[idx].deps.clone() {
            inner.nodes[d].dependents.insert(idx);
        }
    }
}
