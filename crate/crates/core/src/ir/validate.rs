use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use super::{BlockKind, Edge, Graph, NodeId, NodeKind, PortType};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    /// Rule number, 1 to 8.
    pub rule: u8,
    pub node: Option<NodeId>,
    pub edge: Option<Edge>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rule {}", self.rule)?;
        if let Some(n) = self.node {
            write!(f, " at node {n}")?;
        }
        if let Some(e) = self.edge {
            write!(f, " at edge {}.{} -> {}.{}", e.src.0, e.src.1, e.dst.0, e.dst.1)?;
        }
        write!(f, ": {}", self.message)
    }
}

struct Checker<'g> {
    g: &'g Graph,
    out: Vec<Violation>,
}

impl Checker<'_> {
    fn node(&mut self, rule: u8, node: NodeId, message: impl Into<String>) {
        self.out.push(Violation {
            rule,
            node: Some(node),
            edge: None,
            message: message.into(),
        });
    }

    fn edge(&mut self, rule: u8, edge: Edge, message: impl Into<String>) {
        self.out.push(Violation {
            rule,
            node: None,
            edge: Some(edge),
            message: message.into(),
        });
    }
}

/// Checks rules 1 to 8 in order; every violation found is reported.
pub fn validate(g: &Graph) -> Result<(), Vec<Violation>> {
    let mut c = Checker { g, out: Vec::new() };
    hierarchy(&mut c);
    // Later rules assume a well-formed tree.
    if c.out.is_empty() {
        port_types(&mut c);
        degrees(&mut c);
        locality(&mut c);
        acyclic(&mut c);
        conditionals(&mut c);
        tail_loops(&mut c);
        cfgs(&mut c);
    }
    if c.out.is_empty() {
        Ok(())
    } else {
        Err(c.out)
    }
}

fn admits(parent: &NodeKind, child: &NodeKind) -> bool {
    match parent {
        NodeKind::Module => matches!(child, NodeKind::FuncDefn { .. }),
        NodeKind::Conditional { .. } => matches!(child, NodeKind::Case { .. }),
        NodeKind::Cfg { .. } => matches!(child, NodeKind::BasicBlock { .. }),
        p if p.is_dataflow_container() => !matches!(
            child,
            NodeKind::Module | NodeKind::FuncDefn { .. } | NodeKind::Case { .. } | NodeKind::BasicBlock { .. }
        ),
        _ => false,
    }
}

/// Rule 1: the hierarchy is a tree rooted at a Module, containers hold
/// admissible children, dataflow containers start with Input and Output.
fn hierarchy(c: &mut Checker) {
    let g = c.g;
    match g.get(g.root()) {
        Some(n) if n.kind == NodeKind::Module && n.parent.is_none() => {}
        _ => {
            c.node(1, g.root(), "root must be a Module without parent");
            return;
        }
    }
    for n in g.nodes() {
        if n.id == g.root() {
            continue;
        }
        let Some(p) = n.parent else {
            c.node(1, n.id, "only the root may lack a parent");
            continue;
        };
        let Some(pn) = g.get(p) else {
            c.node(1, n.id, format!("parent {p} does not exist"));
            continue;
        };
        if !admits(&pn.kind, &n.kind) {
            c.node(1, n.id, format!("a {} cannot contain a {}", pn.kind.name(), n.kind.name()));
        }
        // Walk up to the root; a cycle never reaches it.
        let mut cur = p;
        let mut steps = 0;
        while let Some(up) = g.get(cur).and_then(|x| x.parent) {
            cur = up;
            steps += 1;
            if steps > g.node_count() {
                c.node(1, n.id, "hierarchy contains a cycle");
                break;
            }
        }
        let (ins, outs) = n.kind.ports();
        if ins != n.inputs || outs != n.outputs {
            c.node(1, n.id, "port lists do not match the payload");
        }
    }
    for n in g.nodes() {
        let kids: Vec<NodeId> = g.children(n.id).collect();
        if !n.kind.is_container() && !kids.is_empty() {
            c.node(1, n.id, format!("{} is a leaf but has children", n.kind.name()));
        }
        if n.kind.is_dataflow_container() {
            let ok = kids.len() >= 2
                && matches!(g.kind(kids[0]), NodeKind::Input { .. })
                && matches!(g.kind(kids[1]), NodeKind::Output { .. })
                && kids[2..]
                    .iter()
                    .all(|&k| !matches!(g.kind(k), NodeKind::Input { .. } | NodeKind::Output { .. }));
            if !ok {
                c.node(1, n.id, "dataflow container must have Input then Output as its first children, once each");
            }
        }
        if matches!(n.kind, NodeKind::BasicBlock { block: BlockKind::Exit, .. }) && !kids.is_empty() {
            c.node(1, n.id, "exit block has children");
        }
        if matches!(n.kind, NodeKind::Input { .. } | NodeKind::Output { .. })
            && !n.parent.is_some_and(|p| g.kind(p).is_dataflow_container())
        {
            c.node(1, n.id, "Input/Output outside a dataflow container");
        }
    }
}

/// Expected (Input outputs, Output inputs) of a dataflow container.
fn boundary(g: &Graph, id: NodeId) -> Option<(Vec<PortType>, Vec<PortType>)> {
    match g.kind(id) {
        NodeKind::Case { index } => NodeKind::case_boundary(g.kind(g.node(id).parent?), *index),
        k => k.boundary(),
    }
}

/// Rule 2: edges join existing ports of equal type; container boundaries
/// and call targets agree with their signatures.
fn port_types(c: &mut Checker) {
    let g = c.g;
    for e in g.edges() {
        let st = g.get(e.src.0).and_then(|n| n.outputs.get(e.src.1));
        let dt = g.get(e.dst.0).and_then(|n| n.inputs.get(e.dst.1));
        match (st, dt) {
            (Some(s), Some(d)) if s == d => {}
            (Some(s), Some(d)) => c.edge(2, *e, format!("port types differ: `{s}` vs `{d}`")),
            _ => c.edge(2, *e, "edge endpoint does not exist"),
        }
    }
    for n in g.nodes() {
        if n.kind.is_dataflow_container() {
            if let Some((ins, outs)) = boundary(g, n.id) {
                let (i, o) = g.io(n.id);
                if g.node(i).outputs != ins || g.node(o).inputs != outs {
                    c.node(2, n.id, "Input/Output types do not match the container signature");
                }
            }
        }
        match &n.kind {
            NodeKind::Call { target, sig } | NodeKind::LoadFunction { target, sig } => match g.get(*target) {
                Some(t) if matches!(&t.kind, NodeKind::FuncDefn { sig: s, .. } if s == sig) => {}
                _ => c.node(2, n.id, format!("target {target} is not a FuncDefn of type {}", sig.tag())),
            },
            NodeKind::Tag { variant, rows } if *variant >= rows.len() => {
                c.node(2, n.id, "tag variant out of range");
            }
            NodeKind::FuncDefn { sig, .. } | NodeKind::CallIndirect { sig }
                if !matches!(sig, crate::types::Type::Function(..)) =>
            {
                c.node(2, n.id, "signature is not a function type");
            }
            _ => {}
        }
    }
}

/// Rule 3: linear out-ports feed exactly one consumer; every value in-port
/// has exactly one source.
fn degrees(c: &mut Checker) {
    let g = c.g;
    for n in g.nodes() {
        for (p, t) in n.outputs.iter().enumerate() {
            let k = g.targets((n.id, p)).count();
            if t.is_linear() && k != 1 {
                c.node(3, n.id, format!("linear out-port {p} of type `{t}` has {k} consumers"));
            }
        }
        for (p, t) in n.inputs.iter().enumerate() {
            if *t == PortType::Control {
                continue;
            }
            let k = g.sources((n.id, p)).count();
            if k != 1 {
                c.node(3, n.id, format!("in-port {p} of type `{t}` has {k} sources"));
            }
        }
    }
}

/// Rule 4: value edges stay between siblings inside one dataflow container;
/// control edges only join sibling blocks.
fn locality(c: &mut Checker) {
    let g = c.g;
    for e in g.edges() {
        let (s, d) = (g.node(e.src.0), g.node(e.dst.0));
        let control = s.outputs[e.src.1] == PortType::Control;
        if s.parent != d.parent {
            c.edge(4, *e, "edge crosses container boundaries");
            continue;
        }
        let parent = s.parent.map(|p| g.kind(p));
        if control {
            if !matches!(parent, Some(NodeKind::Cfg { .. })) {
                c.edge(4, *e, "control edge outside a CFG");
            }
        } else if !parent.is_some_and(NodeKind::is_dataflow_container) {
            c.edge(4, *e, "value edge outside a dataflow container");
        }
    }
}

/// Rule 5: value edges within each dataflow container form a DAG.
fn acyclic(c: &mut Checker) {
    let g = c.g;
    for n in g.nodes().filter(|n| n.kind.is_dataflow_container()) {
        let kids: BTreeSet<NodeId> = g.children(n.id).collect();
        let mut indeg: BTreeMap<NodeId, usize> = kids.iter().map(|&k| (k, 0)).collect();
        let mut succ: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        for &k in &kids {
            for p in 0..g.node(k).outputs.len() {
                for (d, _) in g.targets((k, p)) {
                    if kids.contains(&d) {
                        *indeg.get_mut(&d).unwrap() += 1;
                        succ.entry(k).or_default().push(d);
                    }
                }
            }
        }
        let mut ready: VecDeque<NodeId> = indeg.iter().filter(|(_, &d)| d == 0).map(|(&k, _)| k).collect();
        let mut seen = 0;
        while let Some(k) = ready.pop_front() {
            seen += 1;
            for &d in succ.get(&k).into_iter().flatten() {
                let e = indeg.get_mut(&d).unwrap();
                *e -= 1;
                if *e == 0 {
                    ready.push_back(d);
                }
            }
        }
        if seen != kids.len() {
            c.node(5, n.id, "value edges form a cycle");
        }
    }
}

/// Rule 6: Conditionals have one Case per predicate variant with matching
/// signatures.
fn conditionals(c: &mut Checker) {
    let g = c.g;
    for n in g.nodes() {
        let NodeKind::Conditional { pred, .. } = &n.kind else { continue };
        let Some(rows) = pred.variants() else {
            c.node(6, n.id, format!("predicate `{pred}` is not a sum"));
            continue;
        };
        let mut idx: Vec<usize> = g
            .children(n.id)
            .filter_map(|k| match g.kind(k) {
                NodeKind::Case { index } => Some(*index),
                _ => None,
            })
            .collect();
        idx.sort();
        if idx != (0..rows.len()).collect::<Vec<_>>() {
            c.node(6, n.id, format!("expected cases 0..{}, found {idx:?}", rows.len()));
        }
        for k in g.children(n.id) {
            let NodeKind::Case { index } = g.kind(k) else { continue };
            let Some((ins, outs)) = NodeKind::case_boundary(&n.kind, *index) else { continue };
            let (i, o) = g.io(k);
            if g.node(i).outputs != ins || g.node(o).inputs != outs {
                c.node(6, k, "case signature does not match its Conditional");
            }
        }
    }
}

/// Rule 7: a TailLoop body emits `sum[carried, exits]`.
fn tail_loops(c: &mut Checker) {
    let g = c.g;
    for n in g.nodes() {
        let NodeKind::TailLoop { carried, exits } = &n.kind else { continue };
        let (i, o) = g.io(n.id);
        let want = PortType::Sum(vec![carried.clone(), exits.clone()]);
        let outs = &g.node(o).inputs;
        if outs.len() != 1 || outs[0] != want {
            c.node(7, n.id, format!("body must output `{want}`"));
        }
        let ins: Vec<PortType> = carried.iter().cloned().map(PortType::Value).collect();
        if g.node(i).outputs != ins || n.inputs != ins {
            c.node(7, n.id, "body input row differs from the loop-carried row");
        }
        let exit_row: Vec<PortType> = exits.iter().cloned().map(PortType::Value).collect();
        if n.outputs != exit_row {
            c.node(7, n.id, "loop outputs differ from the break row");
        }
    }
}

/// Rule 8: CFGs have one entry and one exit, blocks are reachable, and
/// every block's output sum matches its ordered successors.
fn cfgs(c: &mut Checker) {
    let g = c.g;
    for n in g.nodes() {
        let NodeKind::Cfg { inputs, outputs } = &n.kind else { continue };
        let blocks: Vec<NodeId> = g.children(n.id).collect();
        let kind_of = |b: NodeId| match g.kind(b) {
            NodeKind::BasicBlock { block, .. } => Some(*block),
            _ => None,
        };
        let entries: Vec<NodeId> = blocks.iter().copied().filter(|&b| kind_of(b) == Some(BlockKind::Entry)).collect();
        let exits: Vec<NodeId> = blocks.iter().copied().filter(|&b| kind_of(b) == Some(BlockKind::Exit)).collect();
        if entries.len() != 1 || exits.len() != 1 {
            c.node(8, n.id, format!("{} entry and {} exit blocks", entries.len(), exits.len()));
            continue;
        }
        if blocks.first() != entries.first() {
            c.node(8, n.id, "entry block must be the first child");
        }
        let block_inputs = |b: NodeId| match g.kind(b) {
            NodeKind::BasicBlock { inputs, .. } => inputs.clone(),
            _ => vec![],
        };
        if &block_inputs(entries[0]) != inputs {
            c.node(8, entries[0], "entry block inputs differ from the CFG inputs");
        }
        if &block_inputs(exits[0]) != outputs {
            c.node(8, exits[0], "exit block inputs differ from the CFG outputs");
        }
        for &b in &blocks {
            let NodeKind::BasicBlock { block, pred, extras, .. } = g.kind(b) else { continue };
            if *block == BlockKind::Exit {
                continue;
            }
            let Some(rows) = pred.as_ref().and_then(PortType::variants) else {
                c.node(8, b, "block predicate is not a sum");
                continue;
            };
            if g.node(b).outputs.len() != rows.len() {
                c.node(8, b, "successor count differs from the predicate arity");
            }
            for (i, row) in rows.iter().enumerate() {
                let succ: Vec<NodeId> = g.targets((b, i)).map(|(d, _)| d).collect();
                if succ.len() != 1 {
                    c.node(8, b, format!("successor {i} has {} control edges", succ.len()));
                    continue;
                }
                let mut want = row.clone();
                want.extend(extras.iter().cloned());
                if block_inputs(succ[0]) != want {
                    c.node(8, b, format!("successor {i} (block {}) expects different inputs", succ[0]));
                }
                if succ[0] == entries[0] {
                    c.node(8, b, "the entry block cannot be a successor");
                }
            }
        }
        let mut seen = BTreeSet::from([entries[0]]);
        let mut todo = vec![entries[0]];
        while let Some(b) = todo.pop() {
            for p in 0..g.node(b).outputs.len() {
                for (d, _) in g.targets((b, p)) {
                    if seen.insert(d) {
                        todo.push(d);
                    }
                }
            }
        }
        for &b in &blocks {
            if !seen.contains(&b) {
                c.node(8, b, "block is unreachable from the entry");
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::Builder;
    use crate::ops::QuantumOp;
    use crate::types::Type;

    fn qubit_fn(b: &mut Builder) -> (NodeId, NodeId, NodeId) {
        let f = b
            .add(b.root(), NodeKind::FuncDefn { name: "f".into(), sig: Type::function(vec![], Type::Qubit) })
            .unwrap();
        let (i, o) = b.io(f);
        (f, i, o)
    }

    #[test]
    fn double_use_is_rule_3() {
        let mut b = Builder::new();
        let (f, _, o) = qubit_fn(&mut b);
        let q = b.add(f, NodeKind::Quantum(QuantumOp::Qalloc)).unwrap();
        let cx = b.add(f, NodeKind::Quantum(QuantumOp::Cx)).unwrap();
        b.connect((q, 0), (cx, 0)).unwrap();
        let mut g = b.finish();
        // The builder refuses the second use; force it.
        g.add_edge(Edge { src: (q, 0), dst: (cx, 1) });
        g.add_edge(Edge { src: (cx, 0), dst: (o, 0) });
        let v = validate(&g).unwrap_err();
        assert!(v.iter().any(|v| v.rule == 3 && v.node == Some(q)), "{v:?}");
    }

    #[test]
    fn unused_qubit_is_rule_3() {
        let mut b = Builder::new();
        let (f, _, o) = qubit_fn(&mut b);
        let q1 = b.add(f, NodeKind::Quantum(QuantumOp::Qalloc)).unwrap();
        let _q2 = b.add(f, NodeKind::Quantum(QuantumOp::Qalloc)).unwrap();
        b.connect((q1, 0), (o, 0)).unwrap();
        let v = validate(&b.finish()).unwrap_err();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].rule, 3);
    }

    #[test]
    fn cross_container_edge_is_rule_4() {
        let mut b = Builder::new();
        let f = b
            .add(
                b.root(),
                NodeKind::FuncDefn { name: "f".into(), sig: Type::function(vec![Type::Int], Type::Int) },
            )
            .unwrap();
        let (i, o) = b.io(f);
        let lp = b.add(f, NodeKind::TailLoop { carried: vec![], exits: vec![Type::Int] }).unwrap();
        let (_, lo) = b.io(lp);
        let tag = b
            .add(lp, NodeKind::Tag { variant: 1, rows: vec![vec![], vec![Type::Int]] })
            .unwrap();
        b.connect((i, 0), (tag, 0)).unwrap();
        b.connect((tag, 0), (lo, 0)).unwrap();
        b.connect((lp, 0), (o, 0)).unwrap();
        let v = validate(&b.finish()).unwrap_err();
        assert!(v.iter().all(|v| v.rule == 4), "{v:?}");
    }

    #[test]
    fn missing_case_is_rule_6() {
        let mut b = Builder::new();
        let f = b
            .add(b.root(), NodeKind::FuncDefn { name: "f".into(), sig: Type::function(vec![Type::Bool], Type::Int) })
            .unwrap();
        let (i, o) = b.io(f);
        let cond = b
            .add(f, NodeKind::Conditional { pred: PortType::Value(Type::Bool), others: vec![], outputs: vec![PortType::Value(Type::Int)] })
            .unwrap();
        b.connect((i, 0), (cond, 0)).unwrap();
        b.connect((cond, 0), (o, 0)).unwrap();
        let case = b.add(cond, NodeKind::Case { index: 0 }).unwrap();
        let (_, co) = b.io(case);
        let k = b.add(case, NodeKind::Const { value: crate::constant::ConstValue::Int(1) }).unwrap();
        b.connect((k, 0), (co, 0)).unwrap();
        assert!(b.add(cond, NodeKind::Case { index: 0 }).is_err());
        let v = validate(&b.finish()).unwrap_err();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].rule, 6);
    }
}
