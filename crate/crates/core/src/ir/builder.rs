use thiserror::Error;

use super::{BlockKind, Edge, Graph, NodeId, NodeKind, Port, PortType};

#[derive(Debug, Error, PartialEq)]
pub enum BuildError {
    #[error("node {0} does not exist")]
    NoNode(NodeId),
    #[error("a {parent} node cannot contain a {child} node")]
    BadParent { parent: &'static str, child: &'static str },
    #[error("case index {0} is duplicated or out of range")]
    BadCase(usize),
    #[error("port {0:?} does not exist")]
    NoPort(Port),
    #[error("cannot connect `{src}` to `{dst}`")]
    TypeMismatch { src: PortType, dst: PortType },
    #[error("linear out-port {0:?} already has a consumer")]
    LinearReuse(Port),
    #[error("in-port {0:?} is already connected")]
    InputTaken(Port),
}

/// Incremental graph construction with type-checked connections.
pub struct Builder {
    g: Graph,
}

impl Default for Builder {
    fn default() -> Self {
        Self::new()
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

impl Builder {
    pub fn new() -> Self {
        let mut g = Graph::default();
        g.insert_node(None, NodeKind::Module);
        Builder { g }
    }

    pub fn root(&self) -> NodeId {
        self.g.root()
    }

    pub fn graph(&self) -> &Graph {
        &self.g
    }

    /// Adds a node. Dataflow containers get their Input and Output children
    /// immediately.
    pub fn add(&mut self, parent: NodeId, kind: NodeKind) -> Result<NodeId, BuildError> {
        let pkind = self.g.get(parent).ok_or(BuildError::NoNode(parent))?.kind.clone();
        if !admits(&pkind, &kind) {
            return Err(BuildError::BadParent {
                parent: pkind.name(),
                child: kind.name(),
            });
        }
        let boundary = match &kind {
            NodeKind::Case { index } => {
                let taken = self
                    .g
                    .children(parent)
                    .any(|c| matches!(self.g.kind(c), NodeKind::Case { index: i } if i == index));
                let b = NodeKind::case_boundary(&pkind, *index);
                if taken || b.is_none() {
                    return Err(BuildError::BadCase(*index));
                }
                b
            }
            k => k.boundary(),
        };
        let id = self.g.insert_node(Some(parent), kind);
        if let Some((ins, outs)) = boundary {
            self.g.insert_node(Some(id), NodeKind::Input { types: ins });
            self.g.insert_node(Some(id), NodeKind::Output { types: outs });
        }
        Ok(id)
    }

    pub fn io(&self, container: NodeId) -> (NodeId, NodeId) {
        self.g.io(container)
    }

    pub fn out_type(&self, p: Port) -> &PortType {
        &self.g.node(p.0).outputs[p.1]
    }

    pub fn connect(&mut self, src: Port, dst: Port) -> Result<(), BuildError> {
        let st = self
            .g
            .get(src.0)
            .ok_or(BuildError::NoNode(src.0))?
            .outputs
            .get(src.1)
            .ok_or(BuildError::NoPort(src))?
            .clone();
        let dt = self
            .g
            .get(dst.0)
            .ok_or(BuildError::NoNode(dst.0))?
            .inputs
            .get(dst.1)
            .ok_or(BuildError::NoPort(dst))?
            .clone();
        if st != dt {
            return Err(BuildError::TypeMismatch { src: st, dst: dt });
        }
        if dt != PortType::Control && self.g.source(dst).is_some() {
            return Err(BuildError::InputTaken(dst));
        }
        if (st.is_linear() || st == PortType::Control) && self.g.targets(src).next().is_some() {
            return Err(BuildError::LinearReuse(src));
        }
        self.g.add_edge(Edge { src, dst });
        Ok(())
    }

    /// Control edge from successor slot `succ` of block `from` to `to`.
    pub fn connect_control(&mut self, from: NodeId, succ: usize, to: NodeId) -> Result<(), BuildError> {
        self.connect((from, succ), (to, 0))
    }

    /// Entry and exit blocks of a fresh CFG node.
    pub fn add_cfg(&mut self, parent: NodeId, inputs: Vec<crate::types::Type>, outputs: Vec<crate::types::Type>, entry_pred: PortType, entry_extras: Vec<crate::types::Type>) -> Result<(NodeId, NodeId, NodeId), BuildError> {
        let cfg = self.add(parent, NodeKind::Cfg { inputs: inputs.clone(), outputs: outputs.clone() })?;
        let entry = self.add(
            cfg,
            NodeKind::BasicBlock {
                block: BlockKind::Entry,
                inputs,
                pred: Some(entry_pred),
                extras: entry_extras,
            },
        )?;
        let exit = self.add(
            cfg,
            NodeKind::BasicBlock {
                block: BlockKind::Exit,
                inputs: outputs,
                pred: None,
                extras: vec![],
            },
        )?;
        Ok((cfg, entry, exit))
    }

    /// Changes a node's payload; container boundaries follow. Existing edges
    /// must still fit the new ports.
    pub fn set_kind(&mut self, id: NodeId, kind: NodeKind) {
        let boundary = kind.boundary();
        self.g.set_kind(id, kind);
        if let Some((ins, outs)) = boundary {
            let (i, o) = self.g.io(id);
            self.g.set_kind(i, NodeKind::Input { types: ins });
            self.g.set_kind(o, NodeKind::Output { types: outs });
        }
    }

    pub fn finish(self) -> Graph {
        self.g
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::QuantumOp;
    use crate::types::Type;

    #[test]
    fn identity_function() {
        let mut b = Builder::new();
        let f = b
            .add(b.root(), NodeKind::FuncDefn { name: "id".into(), sig: Type::function(vec![Type::Qubit], Type::Qubit) })
            .unwrap();
        let (i, o) = b.io(f);
        b.connect((i, 0), (o, 0)).unwrap();
        let g = b.finish();
        assert_eq!(g.node_count(), 4);
        assert!(crate::ir::validate(&g).is_ok());
    }

    #[test]
    fn connect_checks_types_and_linearity() {
        let mut b = Builder::new();
        let f = b
            .add(b.root(), NodeKind::FuncDefn { name: "f".into(), sig: Type::function(vec![Type::Qubit, Type::Float], Type::Qubit) })
            .unwrap();
        let (i, o) = b.io(f);
        let h = b.add(f, NodeKind::Quantum(QuantumOp::H)).unwrap();
        assert!(matches!(b.connect((i, 1), (h, 0)), Err(BuildError::TypeMismatch { .. })));
        b.connect((i, 0), (h, 0)).unwrap();
        assert_eq!(b.connect((i, 0), (o, 0)), Err(BuildError::LinearReuse((i, 0))));
        assert_eq!(b.connect((h, 0), (h, 0)), Err(BuildError::InputTaken((h, 0))));
        assert!(matches!(b.add(h, NodeKind::Not), Err(BuildError::BadParent { .. })));
    }
}
