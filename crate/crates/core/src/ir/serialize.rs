//! Canonical JSON form: sorted keys, nodes by id, edges by `(src, dst)`.

use serde_json::{json, Value as Json};
use thiserror::Error;

use super::{validate, BlockKind, Edge, Graph, ListOpKind, NodeKind, PortType, Violation};
use crate::constant::ConstValue;
use crate::frontend::ast::CmpOp;
use crate::ops::{ArithOp, QuantumOp};
use crate::types::Type;

pub const VERSION: u64 = 1;

#[derive(Debug, Error)]
pub enum DeserializeError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported IR version {0}, expected {VERSION}")]
    Version(Json),
    #[error("malformed IR: {0}")]
    Malformed(String),
    #[error("unknown node kind `{0}`")]
    UnknownKind(String),
    #[error("IR fails validation: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

fn port_tag(p: &PortType) -> Json {
    match p {
        PortType::Value(t) => json!(t.tag()),
        PortType::Sum(rows) => json!({ "sum": rows.iter().map(|r| types_json(r)).collect::<Vec<_>>() }),
        PortType::Control => json!("control"),
    }
}

fn types_json(ts: &[Type]) -> Json {
    Json::Array(ts.iter().map(|t| json!(t.tag())).collect())
}

fn ports_json(ps: &[PortType]) -> Json {
    Json::Array(ps.iter().map(port_tag).collect())
}

fn payload(k: &NodeKind) -> Json {
    match k {
        NodeKind::Module | NodeKind::Not => json!({}),
        NodeKind::FuncDefn { name, sig } => json!({ "name": name, "signature": sig.tag() }),
        NodeKind::Input { types } | NodeKind::Output { types } => json!({ "types": ports_json(types) }),
        NodeKind::Const { value } => json!({ "type": value.ty().tag(), "value": value.to_json() }),
        NodeKind::Call { target, sig } | NodeKind::LoadFunction { target, sig } => {
            json!({ "target": target, "signature": sig.tag() })
        }
        NodeKind::CallIndirect { sig } => json!({ "signature": sig.tag() }),
        NodeKind::Quantum(op) => json!({ "op": op.name() }),
        NodeKind::IntOp(op) | NodeKind::FloatOp(op) => json!({ "op": op.name() }),
        NodeKind::Compare { op, ty } => json!({ "op": op.name(), "type": ty.tag() }),
        NodeKind::Convert { from, to } => json!({ "from": from.tag(), "to": to.tag() }),
        NodeKind::MakeTuple { types } | NodeKind::UnpackTuple { types } => json!({ "types": types_json(types) }),
        NodeKind::ListOp { op, elem } => {
            let mut p = json!({ "op": op.name(), "elem": elem.tag() });
            if let ListOpKind::ApplyIdx(k) = op {
                p["arity"] = json!(k);
            }
            p
        }
        NodeKind::Tag { variant, rows } => {
            json!({ "variant": variant, "rows": rows.iter().map(|r| types_json(r)).collect::<Vec<_>>() })
        }
        NodeKind::Conditional { pred, others, outputs } => json!({
            "predicate": port_tag(pred),
            "others": types_json(others),
            "outputs": ports_json(outputs),
        }),
        NodeKind::Case { index } => json!({ "index": index }),
        NodeKind::TailLoop { carried, exits } => json!({ "carried": types_json(carried), "exits": types_json(exits) }),
        NodeKind::Cfg { inputs, outputs } => json!({ "inputs": types_json(inputs), "outputs": types_json(outputs) }),
        NodeKind::BasicBlock { block, inputs, pred, extras } => json!({
            "block": block.name(),
            "inputs": types_json(inputs),
            "predicate": pred.as_ref().map_or(Json::Null, port_tag),
            "extras": types_json(extras),
        }),
    }
}

pub fn to_json(g: &Graph) -> Json {
    let nodes: Vec<Json> = g
        .nodes()
        .map(|n| {
            json!({
                "id": n.id,
                "parent": n.parent,
                "kind": n.kind.name(),
                "payload": payload(&n.kind),
                "in": ports_json(&n.inputs),
                "out": ports_json(&n.outputs),
            })
        })
        .collect();
    let edges: Vec<Json> = g
        .edges()
        .map(|e| json!({ "src": [e.src.0, e.src.1], "dst": [e.dst.0, e.dst.1] }))
        .collect();
    json!({ "version": VERSION, "nodes": nodes, "edges": edges })
}

/// Canonical bytes of a graph, newline-terminated.
pub fn serialize(g: &Graph) -> String {
    let mut s = to_json(g).to_string();
    s.push('\n');
    s
}

fn bad(msg: impl Into<String>) -> DeserializeError {
    DeserializeError::Malformed(msg.into())
}

fn field<'a>(obj: &'a Json, key: &str) -> Result<&'a Json, DeserializeError> {
    obj.get(key).ok_or_else(|| bad(format!("missing field `{key}`")))
}

fn usize_field(obj: &Json, key: &str) -> Result<usize, DeserializeError> {
    field(obj, key)?
        .as_u64()
        .map(|v| v as usize)
        .ok_or_else(|| bad(format!("`{key}` must be a non-negative integer")))
}

fn str_field<'a>(obj: &'a Json, key: &str) -> Result<&'a str, DeserializeError> {
    field(obj, key)?
        .as_str()
        .ok_or_else(|| bad(format!("`{key}` must be a string")))
}

fn type_of(v: &Json) -> Result<Type, DeserializeError> {
    let s = v.as_str().ok_or_else(|| bad(format!("type tag must be a string, found {v}")))?;
    Type::parse_tag(s).map_err(bad)
}

fn type_field(obj: &Json, key: &str) -> Result<Type, DeserializeError> {
    type_of(field(obj, key)?)
}

fn types_of(v: &Json) -> Result<Vec<Type>, DeserializeError> {
    v.as_array()
        .ok_or_else(|| bad("type row must be an array"))?
        .iter()
        .map(type_of)
        .collect()
}

fn types_field(obj: &Json, key: &str) -> Result<Vec<Type>, DeserializeError> {
    types_of(field(obj, key)?)
}

fn rows_of(v: &Json) -> Result<Vec<Vec<Type>>, DeserializeError> {
    v.as_array()
        .ok_or_else(|| bad("sum rows must be an array"))?
        .iter()
        .map(types_of)
        .collect()
}

fn port_of(v: &Json) -> Result<PortType, DeserializeError> {
    match v {
        Json::String(s) if s == "control" => Ok(PortType::Control),
        Json::String(_) => Ok(PortType::Value(type_of(v)?)),
        Json::Object(o) if o.len() == 1 && o.contains_key("sum") => Ok(PortType::Sum(rows_of(&o["sum"])?)),
        _ => Err(bad(format!("invalid port type {v}"))),
    }
}

fn ports_of(v: &Json) -> Result<Vec<PortType>, DeserializeError> {
    v.as_array()
        .ok_or_else(|| bad("port list must be an array"))?
        .iter()
        .map(port_of)
        .collect()
}

fn function_sig(p: &Json) -> Result<Type, DeserializeError> {
    let t = type_field(p, "signature")?;
    if !matches!(t, Type::Function(..)) {
        return Err(bad("signature must be a callable type"));
    }
    Ok(t)
}

fn kind_of(name: &str, p: &Json) -> Result<NodeKind, DeserializeError> {
    let arith = |p: &Json| {
        let s = str_field(p, "op")?;
        ArithOp::from_name(s).ok_or_else(|| bad(format!("unknown arithmetic op `{s}`")))
    };
    Ok(match name {
        "Module" => NodeKind::Module,
        "Not" => NodeKind::Not,
        "FuncDefn" => NodeKind::FuncDefn {
            name: str_field(p, "name")?.to_string(),
            sig: function_sig(p)?,
        },
        "Input" => NodeKind::Input { types: ports_of(field(p, "types")?)? },
        "Output" => NodeKind::Output { types: ports_of(field(p, "types")?)? },
        "Const" => {
            let ty = type_field(p, "type")?;
            NodeKind::Const {
                value: ConstValue::from_json(&ty, field(p, "value")?).map_err(bad)?,
            }
        }
        "Call" => NodeKind::Call {
            target: usize_field(p, "target")?,
            sig: function_sig(p)?,
        },
        "LoadFunction" => NodeKind::LoadFunction {
            target: usize_field(p, "target")?,
            sig: function_sig(p)?,
        },
        "CallIndirect" => NodeKind::CallIndirect { sig: function_sig(p)? },
        "QuantumOp" => {
            let s = str_field(p, "op")?;
            NodeKind::Quantum(QuantumOp::from_name(s).ok_or_else(|| bad(format!("unknown quantum op `{s}`")))?)
        }
        "IntOp" => {
            let op = arith(p)?;
            if !op.on_int() {
                return Err(bad(format!("`{}` is not an integer op", op.name())));
            }
            NodeKind::IntOp(op)
        }
        "FloatOp" => {
            let op = arith(p)?;
            if !op.on_float() {
                return Err(bad(format!("`{}` is not a float op", op.name())));
            }
            NodeKind::FloatOp(op)
        }
        "CmpOp" => {
            let s = str_field(p, "op")?;
            NodeKind::Compare {
                op: CmpOp::from_name(s).ok_or_else(|| bad(format!("unknown comparison `{s}`")))?,
                ty: type_field(p, "type")?,
            }
        }
        "Convert" => NodeKind::Convert {
            from: type_field(p, "from")?,
            to: type_field(p, "to")?,
        },
        "MakeTuple" => NodeKind::MakeTuple { types: types_field(p, "types")? },
        "UnpackTuple" => NodeKind::UnpackTuple { types: types_field(p, "types")? },
        "ListOp" => {
            let op = match str_field(p, "op")? {
                "nil" => ListOpKind::Nil,
                "cons" => ListOpKind::Cons,
                "get" => ListOpKind::Get,
                "len" => ListOpKind::Len,
                "free" => ListOpKind::Free,
                "apply-idx" => {
                    let k = usize_field(p, "arity")?;
                    if k == 0 {
                        return Err(bad("apply-idx arity must be positive"));
                    }
                    ListOpKind::ApplyIdx(k)
                }
                other => return Err(bad(format!("unknown list op `{other}`"))),
            };
            NodeKind::ListOp { op, elem: type_field(p, "elem")? }
        }
        "Tag" => {
            let rows = rows_of(field(p, "rows")?)?;
            let variant = usize_field(p, "variant")?;
            if variant >= rows.len() {
                return Err(bad("tag variant out of range"));
            }
            NodeKind::Tag { variant, rows }
        }
        "Conditional" => NodeKind::Conditional {
            pred: port_of(field(p, "predicate")?)?,
            others: types_field(p, "others")?,
            outputs: ports_of(field(p, "outputs")?)?,
        },
        "Case" => NodeKind::Case { index: usize_field(p, "index")? },
        "TailLoop" => NodeKind::TailLoop {
            carried: types_field(p, "carried")?,
            exits: types_field(p, "exits")?,
        },
        "CFG" => NodeKind::Cfg {
            inputs: types_field(p, "inputs")?,
            outputs: types_field(p, "outputs")?,
        },
        "BasicBlock" => {
            let block = match str_field(p, "block")? {
                "entry" => BlockKind::Entry,
                "exit" => BlockKind::Exit,
                "dataflow" => BlockKind::Dataflow,
                other => return Err(bad(format!("unknown block kind `{other}`"))),
            };
            let pred = match field(p, "predicate")? {
                Json::Null => None,
                v => Some(port_of(v)?),
            };
            if pred.is_none() != (block == BlockKind::Exit) {
                return Err(bad("only exit blocks lack a predicate"));
            }
            NodeKind::BasicBlock {
                block,
                inputs: types_field(p, "inputs")?,
                pred,
                extras: types_field(p, "extras")?,
            }
        }
        other => return Err(DeserializeError::UnknownKind(other.to_string())),
    })
}

fn port_pair(v: &Json) -> Result<(usize, usize), DeserializeError> {
    match v.as_array().map(Vec::as_slice) {
        Some([a, b]) => match (a.as_u64(), b.as_u64()) {
            (Some(a), Some(b)) => Ok((a as usize, b as usize)),
            _ => Err(bad("edge endpoint must be [node, port]")),
        },
        _ => Err(bad("edge endpoint must be [node, port]")),
    }
}

/// Parses and validates a graph document.
pub fn deserialize(text: &str) -> Result<Graph, DeserializeError> {
    let doc: Json = serde_json::from_str(text)?;
    let version = field(&doc, "version")?;
    if version.as_u64() != Some(VERSION) {
        return Err(DeserializeError::Version(version.clone()));
    }
    let nodes = field(&doc, "nodes")?.as_array().ok_or_else(|| bad("`nodes` must be an array"))?;
    let mut g = Graph::default();
    for n in nodes {
        let id = usize_field(n, "id")?;
        let parent = match field(n, "parent")? {
            Json::Null => None,
            v => Some(v.as_u64().ok_or_else(|| bad("`parent` must be a node id or null"))? as usize),
        };
        let kind = kind_of(str_field(n, "kind")?, field(n, "payload")?)?;
        let (ins, outs) = kind.ports();
        if ports_of(field(n, "in")?)? != ins || ports_of(field(n, "out")?)? != outs {
            return Err(bad(format!("node {id}: ports do not match its payload")));
        }
        if g.get(id).is_some() {
            return Err(bad(format!("duplicate node id {id}")));
        }
        g.insert_node_with_id(id, parent, kind);
    }
    if g.get(0).is_none() {
        return Err(bad("missing root node 0"));
    }
    let edges = field(&doc, "edges")?.as_array().ok_or_else(|| bad("`edges` must be an array"))?;
    for e in edges {
        let edge = Edge {
            src: port_pair(field(e, "src")?)?,
            dst: port_pair(field(e, "dst")?)?,
        };
        for end in [edge.src.0, edge.dst.0] {
            if g.get(end).is_none() {
                return Err(bad(format!("edge references missing node {end}")));
            }
        }
        g.add_edge(edge);
    }
    validate(&g).map_err(DeserializeError::Invalid)?;
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::Builder;

    fn identity() -> Graph {
        let mut b = Builder::new();
        let f = b
            .add(b.root(), NodeKind::FuncDefn { name: "id".into(), sig: Type::function(vec![Type::Qubit], Type::Qubit) })
            .unwrap();
        let (i, o) = b.io(f);
        b.connect((i, 0), (o, 0)).unwrap();
        b.finish()
    }

    #[test]
    fn roundtrip_is_identity() {
        let g = identity();
        let text = serialize(&g);
        let back = deserialize(&text).unwrap();
        assert_eq!(back, g);
        assert_eq!(serialize(&back), text);
        assert!(text.starts_with(r#"{"edges":[{"dst":[3,0],"src":[2,0]}],"nodes":[{"id":0,"in":[],"kind":"Module""#), "{text}");
    }

    #[test]
    fn rejects_unknown_kind_and_version() {
        let text = serialize(&identity());
        let e = deserialize(&text.replace("\"Module\"", "\"Gadget\"")).unwrap_err();
        assert!(e.to_string().contains("Gadget"), "{e}");
        let e = deserialize(&text.replace("\"version\":1", "\"version\":2")).unwrap_err();
        assert!(matches!(e, DeserializeError::Version(_)));
        let e = deserialize(&text.replace(r#"{"dst":[3,0],"src":[2,0]}"#, "")).unwrap_err();
        assert!(matches!(e, DeserializeError::Json(_) | DeserializeError::Invalid(_)), "{e}");
    }
}
