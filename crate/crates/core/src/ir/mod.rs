//! Hierarchical dataflow graph IR.
//!
//! A tree of container nodes whose children form dataflow graphs. Every
//! node's ports are a function of its kind and payload ([`NodeKind::ports`]);
//! edges connect an out-port to an in-port of a sibling.

mod builder;
mod serialize;
mod validate;

use std::collections::{BTreeMap, BTreeSet};

pub use builder::{BuildError, Builder};
pub use serialize::{deserialize, serialize, DeserializeError};
pub use validate::{validate, Violation};

use crate::constant::ConstValue;
use crate::frontend::ast::CmpOp;
use crate::ops::{ArithOp, QuantumOp};
use crate::types::Type;

pub type NodeId = usize;
/// `(node, port index)`.
pub type Port = (NodeId, usize);

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PortType {
    Value(Type),
    /// Tagged union over rows of values.
    Sum(Vec<Vec<Type>>),
    Control,
}

impl PortType {
    /// A sum carrying a linear value in any row is itself linear.
    pub fn is_linear(&self) -> bool {
        match self {
            PortType::Value(t) => t.is_linear(),
            PortType::Sum(rows) => rows.iter().flatten().any(Type::is_linear),
            PortType::Control => false,
        }
    }

    /// Rows selectable by this port when used as a branch predicate.
    /// `bool` acts as the two-variant unit sum: `False` is variant 0.
    pub fn variants(&self) -> Option<Vec<Vec<Type>>> {
        match self {
            PortType::Sum(rows) => Some(rows.clone()),
            PortType::Value(Type::Bool) => Some(vec![vec![], vec![]]),
            _ => None,
        }
    }
}

impl std::fmt::Display for PortType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PortType::Value(t) => write!(f, "{}", t.tag()),
            PortType::Sum(rows) => {
                let rows: Vec<String> = rows
                    .iter()
                    .map(|r| format!("[{}]", r.iter().map(Type::tag).collect::<Vec<_>>().join(",")))
                    .collect();
                write!(f, "sum[{}]", rows.join(","))
            }
            PortType::Control => write!(f, "control"),
        }
    }
}

fn values(types: &[Type]) -> Vec<PortType> {
    types.iter().cloned().map(PortType::Value).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BlockKind {
    Entry,
    Exit,
    Dataflow,
}

impl BlockKind {
    pub fn name(self) -> &'static str {
        match self {
            BlockKind::Entry => "entry",
            BlockKind::Exit => "exit",
            BlockKind::Dataflow => "dataflow",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ListOpKind {
    /// `[] -> [list]`
    Nil,
    /// Appends: `[list, elem] -> [list]`.
    Cons,
    /// Linear: `[list, int] -> [elem, list]` with the element removed;
    /// classical: `[list, int] -> [elem]`.
    Get,
    /// Linear: `[list] -> [int, list]`; classical: `[list] -> [int]`.
    Len,
    /// `[list, fn, tuple[int * k]] -> [list]`: calls `fn` on the elements at
    /// the given distinct indices and stores the results back.
    ApplyIdx(usize),
    /// Consumes an exhausted linear list: `[list] -> []`.
    Free,
}

impl ListOpKind {
    pub fn name(self) -> &'static str {
        match self {
            ListOpKind::Nil => "nil",
            ListOpKind::Cons => "cons",
            ListOpKind::Get => "get",
            ListOpKind::Len => "len",
            ListOpKind::ApplyIdx(_) => "apply-idx",
            ListOpKind::Free => "free",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum NodeKind {
    Module,
    FuncDefn { name: String, sig: Type },
    Input { types: Vec<PortType> },
    Output { types: Vec<PortType> },
    Const { value: ConstValue },
    Call { target: NodeId, sig: Type },
    CallIndirect { sig: Type },
    LoadFunction { target: NodeId, sig: Type },
    Quantum(QuantumOp),
    IntOp(ArithOp),
    FloatOp(ArithOp),
    Compare { op: CmpOp, ty: Type },
    Not,
    Convert { from: Type, to: Type },
    MakeTuple { types: Vec<Type> },
    UnpackTuple { types: Vec<Type> },
    ListOp { op: ListOpKind, elem: Type },
    Tag { variant: usize, rows: Vec<Vec<Type>> },
    /// Inputs are the predicate followed by `others`; case `i` receives
    /// the predicate's row `i` followed by `others`.
    Conditional { pred: PortType, others: Vec<Type>, outputs: Vec<PortType> },
    Case { index: usize },
    /// Body maps `carried` to `sum[carried, exits]`; variant 0 iterates.
    TailLoop { carried: Vec<Type>, exits: Vec<Type> },
    Cfg { inputs: Vec<Type>, outputs: Vec<Type> },
    /// Output of a non-exit block is `[pred] ++ extras`; successor `i`
    /// receives row `i` of `pred` followed by `extras`.
    BasicBlock { block: BlockKind, inputs: Vec<Type>, pred: Option<PortType>, extras: Vec<Type> },
}

/// Splits a function type into parameters and result.
pub fn fn_parts(sig: &Type) -> (&[Type], &Type) {
    match sig {
        Type::Function(p, r) => (p, r),
        other => panic!("not a function type: {other}"),
    }
}

impl NodeKind {
    pub fn name(&self) -> &'static str {
        match self {
            NodeKind::Module => "Module",
            NodeKind::FuncDefn { .. } => "FuncDefn",
            NodeKind::Input { .. } => "Input",
            NodeKind::Output { .. } => "Output",
            NodeKind::Const { .. } => "Const",
            NodeKind::Call { .. } => "Call",
            NodeKind::CallIndirect { .. } => "CallIndirect",
            NodeKind::LoadFunction { .. } => "LoadFunction",
            NodeKind::Quantum(_) => "QuantumOp",
            NodeKind::IntOp(_) => "IntOp",
            NodeKind::FloatOp(_) => "FloatOp",
            NodeKind::Compare { .. } => "CmpOp",
            NodeKind::Not => "Not",
            NodeKind::Convert { .. } => "Convert",
            NodeKind::MakeTuple { .. } => "MakeTuple",
            NodeKind::UnpackTuple { .. } => "UnpackTuple",
            NodeKind::ListOp { .. } => "ListOp",
            NodeKind::Tag { .. } => "Tag",
            NodeKind::Conditional { .. } => "Conditional",
            NodeKind::Case { .. } => "Case",
            NodeKind::TailLoop { .. } => "TailLoop",
            NodeKind::Cfg { .. } => "CFG",
            NodeKind::BasicBlock { .. } => "BasicBlock",
        }
    }

    /// In- and out-port types implied by the payload.
    pub fn ports(&self) -> (Vec<PortType>, Vec<PortType>) {
        use PortType::Value as V;
        match self {
            NodeKind::Module | NodeKind::FuncDefn { .. } | NodeKind::Case { .. } => (vec![], vec![]),
            NodeKind::Input { types } => (vec![], types.clone()),
            NodeKind::Output { types } => (types.clone(), vec![]),
            NodeKind::Const { value } => (vec![], vec![V(value.ty())]),
            NodeKind::Call { sig, .. } => {
                let (p, r) = fn_parts(sig);
                (values(p), vec![V(r.clone())])
            }
            NodeKind::CallIndirect { sig } => {
                let (p, r) = fn_parts(sig);
                let mut ins = vec![V(sig.clone())];
                ins.extend(values(p));
                (ins, vec![V(r.clone())])
            }
            NodeKind::LoadFunction { sig, .. } => (vec![], vec![V(sig.clone())]),
            NodeKind::Quantum(op) => (values(&op.inputs()), values(&op.outputs())),
            NodeKind::IntOp(op) => (vec![V(Type::Int); op.arity()], vec![V(Type::Int)]),
            NodeKind::FloatOp(op) => (vec![V(Type::Float); op.arity()], vec![V(Type::Float)]),
            NodeKind::Compare { ty, .. } => (vec![V(ty.clone()), V(ty.clone())], vec![V(Type::Bool)]),
            NodeKind::Not => (vec![V(Type::Bool)], vec![V(Type::Bool)]),
            NodeKind::Convert { from, to } => (vec![V(from.clone())], vec![V(to.clone())]),
            NodeKind::MakeTuple { types } => (values(types), vec![V(Type::Tuple(types.clone()))]),
            NodeKind::UnpackTuple { types } => (vec![V(Type::Tuple(types.clone()))], values(types)),
            NodeKind::ListOp { op, elem } => {
                let list = V(Type::list(elem.clone()));
                let linear = elem.is_linear();
                match op {
                    ListOpKind::Nil => (vec![], vec![list]),
                    ListOpKind::Cons => (vec![list.clone(), V(elem.clone())], vec![list]),
                    ListOpKind::Get if linear => (vec![list.clone(), V(Type::Int)], vec![V(elem.clone()), list]),
                    ListOpKind::Get => (vec![list, V(Type::Int)], vec![V(elem.clone())]),
                    ListOpKind::Len if linear => (vec![list.clone()], vec![V(Type::Int), list]),
                    ListOpKind::Len => (vec![list], vec![V(Type::Int)]),
                    ListOpKind::ApplyIdx(k) => {
                        let k = *k;
                        let ret = if k == 1 { elem.clone() } else { Type::Tuple(vec![elem.clone(); k]) };
                        let f = Type::function(vec![elem.clone(); k], ret);
                        (vec![list.clone(), V(f), V(Type::Tuple(vec![Type::Int; k]))], vec![list])
                    }
                    ListOpKind::Free => (vec![list], vec![]),
                }
            }
            NodeKind::Tag { variant, rows } => (values(&rows[*variant]), vec![PortType::Sum(rows.clone())]),
            NodeKind::Conditional { pred, others, outputs } => {
                let mut ins = vec![pred.clone()];
                ins.extend(values(others));
                (ins, outputs.clone())
            }
            NodeKind::TailLoop { carried, exits } => (values(carried), values(exits)),
            NodeKind::Cfg { inputs, outputs } => (values(inputs), values(outputs)),
            NodeKind::BasicBlock { block, pred, .. } => {
                let succ = match block {
                    BlockKind::Exit => 0,
                    _ => pred.as_ref().and_then(PortType::variants).map_or(0, |v| v.len()),
                };
                (vec![PortType::Control], vec![PortType::Control; succ])
            }
        }
    }

    /// Ports of the Input and Output children of a dataflow container.
    pub fn boundary(&self) -> Option<(Vec<PortType>, Vec<PortType>)> {
        use PortType::Value as V;
        match self {
            NodeKind::FuncDefn { sig, .. } => {
                let (p, r) = fn_parts(sig);
                Some((values(p), vec![V(r.clone())]))
            }
            NodeKind::TailLoop { carried, exits } => Some((
                values(carried),
                vec![PortType::Sum(vec![carried.clone(), exits.clone()])],
            )),
            NodeKind::BasicBlock { block: BlockKind::Exit, .. } => None,
            NodeKind::BasicBlock { inputs, pred, extras, .. } => {
                let mut outs = vec![pred.clone().expect("non-exit block has a predicate")];
                outs.extend(values(extras));
                Some((values(inputs), outs))
            }
            _ => None,
        }
    }

    /// Case boundaries depend on the parent Conditional.
    pub fn case_boundary(cond: &NodeKind, index: usize) -> Option<(Vec<PortType>, Vec<PortType>)> {
        let NodeKind::Conditional { pred, others, outputs } = cond else { return None };
        let rows = pred.variants()?;
        let mut ins = values(rows.get(index)?);
        ins.extend(values(others));
        Some((ins, outputs.clone()))
    }

    /// Containers whose children form a dataflow graph.
    pub fn is_dataflow_container(&self) -> bool {
        matches!(
            self,
            NodeKind::FuncDefn { .. }
                | NodeKind::Case { .. }
                | NodeKind::TailLoop { .. }
                | NodeKind::BasicBlock { block: BlockKind::Entry | BlockKind::Dataflow, .. }
        )
    }

    pub fn is_container(&self) -> bool {
        self.is_dataflow_container() || matches!(self, NodeKind::Module | NodeKind::Conditional { .. } | NodeKind::Cfg { .. })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub parent: Option<NodeId>,
    pub kind: NodeKind,
    pub inputs: Vec<PortType>,
    pub outputs: Vec<PortType>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub src: Port,
    pub dst: Port,
}

/// A graph. Node ids are dense as built; rewriting may leave holes but
/// never renumbers surviving nodes.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Graph {
    nodes: BTreeMap<NodeId, Node>,
    children: BTreeMap<NodeId, BTreeSet<NodeId>>,
    edges: BTreeSet<Edge>,
    by_src: BTreeMap<Port, BTreeSet<Port>>,
    by_dst: BTreeMap<Port, BTreeSet<Port>>,
    next_id: NodeId,
}

impl Graph {
    pub fn root(&self) -> NodeId {
        0
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[&id]
    }

    pub fn get(&self, id: NodeId) -> Option<&Node> {
        self.nodes.get(&id)
    }

    pub fn kind(&self, id: NodeId) -> &NodeKind {
        &self.nodes[&id].kind
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Children in id order; Input and Output come first in dataflow
    /// containers since they are created with the container.
    pub fn children(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.children.get(&id).into_iter().flatten().copied()
    }

    /// Input and Output children of a dataflow container.
    pub fn io(&self, id: NodeId) -> (NodeId, NodeId) {
        let mut c = self.children(id);
        (c.next().expect("container has Input"), c.next().expect("container has Output"))
    }

    /// Sources feeding an in-port.
    pub fn sources(&self, dst: Port) -> impl Iterator<Item = Port> + '_ {
        self.by_dst.get(&dst).into_iter().flatten().copied()
    }

    pub fn source(&self, dst: Port) -> Option<Port> {
        self.sources(dst).next()
    }

    /// Consumers of an out-port.
    pub fn targets(&self, src: Port) -> impl Iterator<Item = Port> + '_ {
        self.by_src.get(&src).into_iter().flatten().copied()
    }

    /// FuncDefn named `name` directly under the root.
    pub fn find_function(&self, name: &str) -> Option<NodeId> {
        self.children(self.root())
            .find(|&c| matches!(self.kind(c), NodeKind::FuncDefn { name: n, .. } if n == name))
    }

    pub(crate) fn insert_node(&mut self, parent: Option<NodeId>, kind: NodeKind) -> NodeId {
        let id = self.next_id;
        self.insert_node_with_id(id, parent, kind);
        id
    }

    pub(crate) fn insert_node_with_id(&mut self, id: NodeId, parent: Option<NodeId>, kind: NodeKind) {
        let (inputs, outputs) = kind.ports();
        self.nodes.insert(id, Node { id, parent, kind, inputs, outputs });
        if let Some(p) = parent {
            self.children.entry(p).or_default().insert(id);
        }
        self.next_id = self.next_id.max(id + 1);
    }

    /// Removes a leaf node and its edges.
    pub(crate) fn remove_node(&mut self, id: NodeId) {
        let node = self.nodes.remove(&id).expect("node exists");
        for p in 0..node.inputs.len() {
            for s in self.sources((id, p)).collect::<Vec<_>>() {
                self.remove_edge(Edge { src: s, dst: (id, p) });
            }
        }
        for p in 0..node.outputs.len() {
            for d in self.targets((id, p)).collect::<Vec<_>>() {
                self.remove_edge(Edge { src: (id, p), dst: d });
            }
        }
        if let Some(parent) = node.parent {
            if let Some(c) = self.children.get_mut(&parent) {
                c.remove(&id);
            }
        }
        self.children.remove(&id);
    }

    pub(crate) fn set_kind(&mut self, id: NodeId, kind: NodeKind) {
        let (inputs, outputs) = kind.ports();
        let n = self.nodes.get_mut(&id).expect("node exists");
        n.kind = kind;
        n.inputs = inputs;
        n.outputs = outputs;
    }

    pub(crate) fn add_edge(&mut self, e: Edge) {
        self.edges.insert(e);
        self.by_src.entry(e.src).or_default().insert(e.dst);
        self.by_dst.entry(e.dst).or_default().insert(e.src);
    }

    pub(crate) fn remove_edge(&mut self, e: Edge) {
        self.edges.remove(&e);
        if let Some(s) = self.by_src.get_mut(&e.src) {
            s.remove(&e.dst);
            if s.is_empty() {
                self.by_src.remove(&e.src);
            }
        }
        if let Some(s) = self.by_dst.get_mut(&e.dst) {
            s.remove(&e.src);
            if s.is_empty() {
                self.by_dst.remove(&e.dst);
            }
        }
    }

    /// Count of nodes per kind name, for reports.
    pub fn kind_counts(&self) -> BTreeMap<&'static str, usize> {
        let mut out = BTreeMap::new();
        for n in self.nodes.values() {
            *out.entry(n.kind.name()).or_insert(0) += 1;
        }
        out
    }
}
