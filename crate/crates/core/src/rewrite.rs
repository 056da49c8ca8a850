//! Peephole rewriting: single-pattern matching inside one dataflow
//! container and boundary-preserving replacement.

use std::collections::BTreeSet;

use crate::ir::{Edge, Graph, NodeId, NodeKind, Port};
use crate::ops::{ArithOp, QuantumOp};

/// End of a replacement edge: a boundary input of the match or an out-port
/// of a replacement node.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Src {
    Input(usize),
    Node(usize, usize),
}

/// A template chain of nodes and what replaces it. Pattern node 0 is the
/// anchor; every later node is connected to an earlier one.
#[derive(Clone, Debug)]
pub struct Pattern {
    pub name: &'static str,
    nodes: Vec<fn(&NodeKind) -> bool>,
    /// `(src node, port) -> (dst node, port)` inside the pattern.
    edges: Vec<((usize, usize), (usize, usize))>,
    /// Boundary in-ports, in order.
    inputs: Vec<(usize, usize)>,
    /// Boundary out-ports, in order.
    outputs: Vec<(usize, usize)>,
    /// Relation between the matched payloads.
    check: Option<fn(&[&NodeKind]) -> bool>,
    replacement: Vec<NodeKind>,
    replacement_edges: Vec<(Src, (usize, usize))>,
    /// What feeds each boundary output's consumers.
    replacement_outputs: Vec<Src>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Match {
    pub container: NodeId,
    /// Graph node for each pattern node.
    pub nodes: Vec<NodeId>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum RewriteError {
    #[error("match of `{0}` is stale: the graph changed since matching")]
    Stale(&'static str),
}

fn gate(op: QuantumOp) -> fn(&NodeKind) -> bool {
    match op {
        QuantumOp::H => |k| *k == NodeKind::Quantum(QuantumOp::H),
        QuantumOp::X => |k| *k == NodeKind::Quantum(QuantumOp::X),
        QuantumOp::Z => |k| *k == NodeKind::Quantum(QuantumOp::Z),
        QuantumOp::Cx => |k| *k == NodeKind::Quantum(QuantumOp::Cx),
        QuantumOp::Rz => |k| *k == NodeKind::Quantum(QuantumOp::Rz),
        other => unreachable!("no matcher for {other:?}"),
    }
}

/// `g(g(q))` with a self-inverse single-qubit gate: the wire passes through.
fn self_inverse(name: &'static str, op: QuantumOp) -> Pattern {
    Pattern {
        name,
        nodes: vec![gate(op), gate(op)],
        edges: vec![((0, 0), (1, 0))],
        inputs: vec![(0, 0)],
        outputs: vec![(1, 0)],
        check: None,
        replacement: vec![],
        replacement_edges: vec![],
        replacement_outputs: vec![Src::Input(0)],
    }
}

impl Pattern {
    pub fn hh() -> Pattern {
        self_inverse("hh", QuantumOp::H)
    }

    pub fn xx() -> Pattern {
        self_inverse("xx", QuantumOp::X)
    }

    pub fn zz() -> Pattern {
        self_inverse("zz", QuantumOp::Z)
    }

    /// `t` then `tdg` or `tdg` then `t`.
    pub fn tdgt() -> Pattern {
        let tt: fn(&NodeKind) -> bool =
            |k| matches!(k, NodeKind::Quantum(QuantumOp::T | QuantumOp::Tdg));
        Pattern {
            check: Some(|ks| ks[0] != ks[1]),
            nodes: vec![tt, tt],
            ..self_inverse("tdgt", QuantumOp::H)
        }
    }

    /// Two `cx` with the same control and target wires.
    pub fn cxcx() -> Pattern {
        Pattern {
            name: "cxcx",
            nodes: vec![gate(QuantumOp::Cx), gate(QuantumOp::Cx)],
            edges: vec![((0, 0), (1, 0)), ((0, 1), (1, 1))],
            inputs: vec![(0, 0), (0, 1)],
            outputs: vec![(1, 0), (1, 1)],
            check: None,
            replacement: vec![],
            replacement_edges: vec![],
            replacement_outputs: vec![Src::Input(0), Src::Input(1)],
        }
    }

    /// `rz(rz(q, a), b)` to `rz(q, a + b)`.
    pub fn rzfuse() -> Pattern {
        Pattern {
            name: "rzfuse",
            nodes: vec![gate(QuantumOp::Rz), gate(QuantumOp::Rz)],
            edges: vec![((0, 0), (1, 0))],
            inputs: vec![(0, 0), (0, 1), (1, 1)],
            outputs: vec![(1, 0)],
            check: None,
            replacement: vec![NodeKind::FloatOp(ArithOp::Add), NodeKind::Quantum(QuantumOp::Rz)],
            replacement_edges: vec![
                (Src::Input(1), (0, 0)),
                (Src::Input(2), (0, 1)),
                (Src::Input(0), (1, 0)),
                (Src::Node(0, 0), (1, 1)),
            ],
            replacement_outputs: vec![Src::Node(1, 0)],
        }
    }

    pub fn builtin() -> Vec<Pattern> {
        vec![Pattern::hh(), Pattern::xx(), Pattern::zz(), Pattern::tdgt(), Pattern::cxcx(), Pattern::rzfuse()]
    }

    pub fn by_name(name: &str) -> Option<Pattern> {
        Pattern::builtin().into_iter().find(|p| p.name == name)
    }

    pub fn names() -> Vec<&'static str> {
        Pattern::builtin().iter().map(|p| p.name).collect()
    }
}

/// All embeddings of `p`, ordered by lowest matched node id.
pub fn find_matches(g: &Graph, p: &Pattern) -> Vec<Match> {
    let mut out = Vec::new();
    for n in g.nodes() {
        if !(p.nodes[0])(&n.kind) {
            continue;
        }
        let Some(container) = n.parent else { continue };
        let mut nodes = vec![n.id];
        extend(g, p, container, &mut nodes, &mut out);
    }
    out.sort_by_key(|m| {
        let mut ids = m.nodes.clone();
        ids.sort();
        (ids, m.nodes.clone())
    });
    out
}

fn extend(g: &Graph, p: &Pattern, container: NodeId, nodes: &mut Vec<NodeId>, out: &mut Vec<Match>) {
    let k = nodes.len();
    if k == p.nodes.len() {
        let m = Match { container, nodes: nodes.clone() };
        if verify(g, p, &m) {
            out.push(m);
        }
        return;
    }
    let mut candidates = BTreeSet::new();
    for &((a, ap), (b, bp)) in &p.edges {
        if b == k && a < k {
            candidates.extend(g.targets((nodes[a], ap)).filter(|t| t.1 == bp).map(|t| t.0));
        } else if a == k && b < k {
            candidates.extend(g.source((nodes[b], bp)).filter(|s| s.1 == ap).map(|s| s.0));
        }
    }
    for c in candidates {
        if !nodes.contains(&c) && (p.nodes[k])(g.kind(c)) {
            nodes.push(c);
            extend(g, p, container, nodes, out);
            nodes.pop();
        }
    }
}

/// Whether `m` is still an embedding of `p` in `g`.
fn verify(g: &Graph, p: &Pattern, m: &Match) -> bool {
    if m.nodes.len() != p.nodes.len() || BTreeSet::from_iter(&m.nodes).len() != m.nodes.len() {
        return false;
    }
    for (i, &n) in m.nodes.iter().enumerate() {
        match g.get(n) {
            Some(node) if node.parent == Some(m.container) && (p.nodes[i])(&node.kind) => {}
            _ => return false,
        }
    }
    let kinds: Vec<&NodeKind> = m.nodes.iter().map(|&n| g.kind(n)).collect();
    if p.check.is_some_and(|c| !c(&kinds)) {
        return false;
    }
    for (i, &n) in m.nodes.iter().enumerate() {
        let node = g.node(n);
        for port in 0..node.inputs.len() {
            let internal: Vec<Port> = p
                .edges
                .iter()
                .filter(|(_, d)| *d == (i, port))
                .map(|&((a, ap), _)| (m.nodes[a], ap))
                .collect();
            match internal.as_slice() {
                [] if p.inputs.contains(&(i, port)) => {}
                [s] if g.source((n, port)) == Some(*s) => {}
                _ => return false,
            }
        }
        for port in 0..node.outputs.len() {
            let internal: BTreeSet<Port> = p
                .edges
                .iter()
                .filter(|(s, _)| *s == (i, port))
                .map(|&(_, (b, bp))| (m.nodes[b], bp))
                .collect();
            if internal.is_empty() {
                if !p.outputs.contains(&(i, port)) {
                    return false;
                }
            } else if g.targets((n, port)).collect::<BTreeSet<_>>() != internal {
                return false;
            }
        }
    }
    convex(g, m)
}

/// No path leaves the match and re-enters it.
fn convex(g: &Graph, m: &Match) -> bool {
    let inside: BTreeSet<NodeId> = m.nodes.iter().copied().collect();
    let mut stack: Vec<NodeId> = Vec::new();
    let mut seen = BTreeSet::new();
    let push_out = |n: NodeId, stack: &mut Vec<NodeId>| {
        for port in 0..g.node(n).outputs.len() {
            stack.extend(g.targets((n, port)).map(|t| t.0));
        }
    };
    for &n in &m.nodes {
        for port in 0..g.node(n).outputs.len() {
            stack.extend(g.targets((n, port)).map(|t| t.0).filter(|t| !inside.contains(t)));
        }
    }
    while let Some(n) = stack.pop() {
        if inside.contains(&n) {
            return false;
        }
        if seen.insert(n) {
            push_out(n, &mut stack);
        }
    }
    true
}

/// Replaces the matched nodes in place; untouched nodes keep their ids.
pub fn apply_in_place(g: &mut Graph, m: &Match, p: &Pattern) -> Result<(), RewriteError> {
    if !verify(g, p, m) {
        return Err(RewriteError::Stale(p.name));
    }
    let sources: Vec<Port> = p
        .inputs
        .iter()
        .map(|&(i, port)| g.source((m.nodes[i], port)).expect("boundary input is connected"))
        .collect();
    let consumers: Vec<Vec<Port>> = p
        .outputs
        .iter()
        .map(|&(i, port)| g.targets((m.nodes[i], port)).collect())
        .collect();
    for &n in &m.nodes {
        g.remove_node(n);
    }
    let new: Vec<NodeId> = p
        .replacement
        .iter()
        .map(|k| g.insert_node(Some(m.container), k.clone()))
        .collect();
    let resolve = |s: Src| match s {
        Src::Input(i) => sources[i],
        Src::Node(n, port) => (new[n], port),
    };
    for &(s, (n, port)) in &p.replacement_edges {
        g.add_edge(Edge { src: resolve(s), dst: (new[n], port) });
    }
    for (j, ts) in consumers.iter().enumerate() {
        for &t in ts {
            g.add_edge(Edge { src: resolve(p.replacement_outputs[j]), dst: t });
        }
    }
    Ok(())
}

pub fn apply_rewrite(g: &Graph, m: &Match, p: &Pattern) -> Result<Graph, RewriteError> {
    let mut out = g.clone();
    apply_in_place(&mut out, m, p)?;
    Ok(out)
}

/// Each pass applies, rule by rule, every match found at the start of the
/// rule's turn that is still intact. Stops at a fixpoint or after
/// `max_passes` passes.
pub fn run_pipeline(g: &Graph, rules: &[Pattern], max_passes: usize) -> Graph {
    let mut g = g.clone();
    for _ in 0..max_passes {
        let mut changed = false;
        for p in rules {
            for m in find_matches(&g, p) {
                if apply_in_place(&mut g, &m, p).is_ok() {
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    g
}
