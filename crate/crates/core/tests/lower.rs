use std::path::Path;

use guppy_core::ir::{deserialize, serialize, validate, Graph, NodeKind};
use guppy_core::lower::Lowering;
use guppy_core::ops::QuantumOp;
use guppy_core::pipeline::compile;
use guppy_core::typecheck::ConstBindings;

fn corpus() -> Vec<(String, String, ConstBindings)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus");
    let mut out = Vec::new();
    let mut entries: Vec<_> = std::fs::read_dir(&dir).unwrap().map(|e| e.unwrap().path()).collect();
    entries.sort();
    for p in entries {
        if p.extension().is_some_and(|e| e == "gpy") {
            let src = std::fs::read_to_string(&p).unwrap();
            let bpath = p.with_extension("bindings.json");
            let bindings = if bpath.exists() {
                ConstBindings::from_json_str(&std::fs::read_to_string(bpath).unwrap()).unwrap()
            } else {
                ConstBindings::new()
            };
            out.push((p.file_stem().unwrap().to_string_lossy().into_owned(), src, bindings));
        }
    }
    out
}

fn build(src: &str, mode: Lowering) -> Graph {
    compile(src, &ConstBindings::new(), mode).unwrap_or_else(|d| panic!("{d:?}"))
}

fn count(g: &Graph, pred: impl Fn(&NodeKind) -> bool) -> usize {
    g.nodes().filter(|n| pred(&n.kind)).count()
}

fn gates(g: &Graph, op: QuantumOp) -> usize {
    count(g, |k| *k == NodeKind::Quantum(op))
}

#[test]
fn corpus_lowers_and_validates_in_both_modes() {
    for (name, src, bindings) in corpus() {
        for mode in [Lowering::Structured, Lowering::Cfg] {
            let g = compile(&src, &bindings, mode).unwrap_or_else(|d| panic!("{name}: {d:?}"));
            assert!(validate(&g).is_ok(), "{name} {mode:?}");
            let text = serialize(&g);
            let back = deserialize(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(serialize(&back), text, "{name} {mode:?}");
        }
    }
}

#[test]
fn rx_is_three_gates_on_one_wire() {
    let src = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus/rx.gpy")).unwrap();
    let g = build(&src, Lowering::Structured);
    let f = g.find_function("rx").unwrap();
    let kids: Vec<_> = g.children(f).map(|c| g.kind(c).name()).collect();
    assert_eq!(kids, ["Input", "Output", "QuantumOp", "QuantumOp", "QuantumOp"]);
    assert_eq!(gates(&g, QuantumOp::H), 2);
    assert_eq!(gates(&g, QuantumOp::Rz), 1);
}

#[test]
fn teleport_has_two_sibling_conditionals() {
    let src = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus/teleport.gpy")).unwrap();
    let g = build(&src, Lowering::Structured);
    let f = g.find_function("teleport").unwrap();
    let conds: Vec<_> = g
        .children(f)
        .filter(|&c| matches!(g.kind(c), NodeKind::Conditional { .. }))
        .collect();
    assert_eq!(conds.len(), 2);
    assert_eq!(count(&g, |k| matches!(k, NodeKind::Conditional { .. })), 2);
    for c in conds {
        assert_eq!(g.children(c).count(), 2);
    }
}

#[test]
fn rus_loop_is_one_tail_loop() {
    let src = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus/rus.gpy")).unwrap();
    let g = build(&src, Lowering::Structured);
    assert_eq!(count(&g, |k| matches!(k, NodeKind::TailLoop { .. })), 1);
    assert_eq!(count(&g, |k| matches!(k, NodeKind::Cfg { .. })), 0);
}

#[test]
fn cx_ladder_carries_index_bound_and_list() {
    let src = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus/cx_ladder.gpy")).unwrap();
    let g = build(&src, Lowering::Structured);
    let tl = g.nodes().find(|n| matches!(n.kind, NodeKind::TailLoop { .. })).unwrap();
    let NodeKind::TailLoop { carried, .. } = &tl.kind else { unreachable!() };
    assert_eq!(carried.len(), 3, "{carried:?}");
}

#[test]
fn mutual_recursion_calls_each_other() {
    let g = build(
        "def f(n: int) -> int:\n  if n <= 0:\n    return 0\n  return g(n - 1)\n\ndef g(n: int) -> int:\n  return f(n)\n",
        Lowering::Structured,
    );
    let f = g.find_function("f").unwrap();
    let gn = g.find_function("g").unwrap();
    let targets: Vec<_> = g
        .nodes()
        .filter_map(|n| match n.kind {
            NodeKind::Call { target, .. } => Some(target),
            _ => None,
        })
        .collect();
    assert!(targets.contains(&f) && targets.contains(&gn), "{targets:?}");
}

#[test]
fn nested_capture_takes_environment_tuple() {
    let g = build(
        "def outer(n: int) -> int:\n  def add(k: int) -> int:\n    return k + n\n  return add(1)\n",
        Lowering::Structured,
    );
    let inner = g.find_function("outer.add").unwrap();
    let NodeKind::FuncDefn { sig, .. } = g.kind(inner) else { unreachable!() };
    assert_eq!(sig.tag(), "callable[[int,tuple[int]],int]");
}

#[test]
fn return_in_loop_falls_back_to_cfg() {
    let g = build(
        "def f(qs: list[bool]) -> int:\n  for b in qs:\n    if b:\n      return 1\n  return 0\n",
        Lowering::Structured,
    );
    assert_eq!(count(&g, |k| matches!(k, NodeKind::Cfg { .. })), 1);
    assert_eq!(count(&g, |k| matches!(k, NodeKind::TailLoop { .. })), 0);
}

#[test]
fn while_false_is_a_valid_degenerate_loop() {
    let src = "def f(q: Qubit) -> Qubit:\n  while False:\n    q = h(q)\n  return q\n";
    for mode in [Lowering::Structured, Lowering::Cfg] {
        build(src, mode);
    }
}

#[test]
fn short_circuit_places_rhs_in_a_case() {
    let g = build(
        "def f(a: bool, b: int) -> bool:\n  return a and b > 2\n",
        Lowering::Structured,
    );
    let cmp = g.nodes().find(|n| matches!(n.kind, NodeKind::Compare { .. })).unwrap();
    assert!(matches!(g.kind(cmp.parent.unwrap()), NodeKind::Case { index: 1 }));
}

#[test]
fn chained_comparison_reads_middle_operand_once() {
    let g = build(
        "def f(a: int, b: int, c: int) -> bool:\n  return a < b + 1 < c\n",
        Lowering::Structured,
    );
    assert_eq!(count(&g, |k| matches!(k, NodeKind::IntOp(_))), 1);
    assert_eq!(count(&g, |k| matches!(k, NodeKind::Compare { .. })), 2);
}

#[test]
fn comprehension_over_qubits() {
    let src = "def f(qs: list[Qubit]) -> list[bool]:\n  return [measure(h(q)) for q in qs]\n";
    for mode in [Lowering::Structured, Lowering::Cfg] {
        let g = build(src, mode);
        assert_eq!(count(&g, |k| matches!(k, NodeKind::TailLoop { .. })), 1);
    }
}

#[test]
fn control_flow_mix_validates_in_both_modes() {
    let src = "\
def f(n: int, q: Qubit) -> tuple[int, Qubit]:
  total = 0
  i = 0
  while i < n:
    i += 1
    if i % 2 == 0:
      continue
    for j in range(i):
      if j > 3:
        break
      total += j
      q = x(q)
    if total > 100:
      break
  else_val = total if total > 3 else -total
  return else_val, q
";
    for mode in [Lowering::Structured, Lowering::Cfg] {
        build(src, mode);
    }
}
