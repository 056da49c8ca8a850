use guppy_core::constant::ConstValue;
use guppy_core::diagnostic::{Category, Diagnostic};
use guppy_core::frontend::parse_source;
use guppy_core::typecheck::tast::{TExprKind, TStmtKind};
use guppy_core::typecheck::{check_module, join_types, ConstBindings, TModule};
use guppy_core::types::Type;
use proptest::prelude::*;

fn check_with(src: &str, bindings: &ConstBindings) -> Result<TModule, Vec<Diagnostic>> {
    let ast = parse_source(src).expect("test source parses");
    check_module(&ast, bindings)
}

fn check(src: &str) -> Result<TModule, Vec<Diagnostic>> {
    check_with(src, &ConstBindings::new())
}

/// The single diagnostic produced by `src`.
fn error(src: &str) -> Diagnostic {
    let diags = check(src).expect_err("program should be rejected");
    assert_eq!(diags.len(), 1, "{diags:?}");
    diags.into_iter().next().unwrap()
}

/// Byte range of the `nth` occurrence of `needle`, shifted by `skip`.
fn at(src: &str, needle: &str, nth: usize, skip: usize, len: usize) -> (usize, usize) {
    let start = src.match_indices(needle).nth(nth).expect("needle present").0 + skip;
    (start, start + len)
}

fn corpus(name: &str) -> String {
    std::fs::read_to_string(format!("{}/corpus/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

const USE: &str = "@guppy\ndef use(x: int) -> None:\n  pass\n\n";

#[test]
fn corpus_programs_check() {
    let graph = ConstBindings::from_json_str(&corpus("apply_graph.bindings.json")).unwrap();
    for name in ["rx", "teleport", "rus", "cx_ladder", "apply_graph", "features"] {
        let src = corpus(&format!("{name}.gpy"));
        if let Err(d) = check_with(&src, &graph) {
            panic!("{name}: {d:?}");
        }
    }
}

#[test]
fn rx_signature() {
    let m = check(&corpus("rx.gpy")).unwrap();
    let f = &m.functions[m.find("rx").unwrap()];
    assert_eq!(f.signature(), Type::function(vec![Type::Qubit, Type::Float], Type::Qubit));
}

#[test]
fn not_definitely_assigned_at_use() {
    let src = format!("{USE}@guppy\ndef main(b: bool) -> None:\n  if b:\n    var = 42\n  use(var)\n");
    let d = error(&src);
    assert_eq!(d.category, Category::NotDefinitelyAssigned);
    assert_eq!((d.span.start, d.span.end), at(&src, "use(var)", 0, 4, 3));
}

#[test]
fn branch_type_conflict_at_use() {
    let src = format!("{USE}@guppy\ndef main(b: bool) -> None:\n  var = 42 if b else None\n  use(var)\n");
    let d = error(&src);
    assert_eq!(d.category, Category::BranchTypeConflict);
    assert_eq!((d.span.start, d.span.end), at(&src, "use(var)", 0, 4, 3));
    assert!(d.message.contains("`int`") && d.message.contains("`None`"), "{}", d.message);
}

#[test]
fn conflict_via_if_statement() {
    let src = format!("{USE}@guppy\ndef main(b: bool) -> None:\n  if b:\n    var = 1\n  else:\n    var = 1.0\n  use(var)\n");
    assert_eq!(error(&src).category, Category::BranchTypeConflict);
}

#[test]
fn copy_at_second_use() {
    let src = "@guppy\ndef main() -> tuple[Qubit, Qubit]:\n  q = Qubit()\n  return cx(q, q)\n";
    let d = error(src);
    assert_eq!(d.category, Category::LinearityCopy);
    assert_eq!((d.span.start, d.span.end), at(src, "cx(q, q)", 0, 6, 1));
    assert_eq!(d.notes.len(), 1);
}

#[test]
fn unused_linear_result() {
    let src = "@guppy\ndef main() -> None:\n  q = Qubit()\n  h(q)\n";
    let d = error(src);
    assert_eq!(d.category, Category::LinearityDiscard);
    assert_eq!((d.span.start, d.span.end), at(src, "h(q)", 0, 0, 4));
}

#[test]
fn guppy_variable_inside_py() {
    let src = "@guppy\ndef main() -> int:\n  x = 0\n  var = 42\n  x += py(var + 1)\n  return x\n";
    let d = error(src);
    assert_eq!(d.category, Category::PyUsesGuppyVar);
    assert_eq!((d.span.start, d.span.end), at(src, "py(var", 0, 3, 3));
}

#[test]
fn py_bindings_and_literals() {
    let src = "@guppy\ndef main() -> int:\n  return py(2 + 2)\n";
    let m = check(src).unwrap();
    let TStmtKind::Return(e) = &m.functions[0].body[0].kind else { panic!() };
    assert_eq!(e.kind, TExprKind::Const(ConstValue::Int(4)));

    let src = "@guppy\ndef main() -> int:\n  return py(n)\n";
    let d = error(src);
    assert_eq!(d.category, Category::PyBindingMissing);
    assert!(d.message.contains("`n`"));
    let mut b = ConstBindings::new();
    b.insert("n", ConstValue::Int(3));
    assert!(check_with(src, &b).is_ok());

    let src = "@guppy\ndef main() -> int:\n  return py(9223372036854775807 + 1)\n";
    assert_eq!(error(src).category, Category::OverflowLiteral);
}

#[test]
fn missing_signature() {
    let d = error("@guppy\ndef f(x: int):\n  pass\n");
    assert_eq!(d.category, Category::SignatureMissing);
    let d = error("@guppy\ndef f(x) -> None:\n  pass\n");
    assert_eq!(d.category, Category::SignatureMissing);
}

#[test]
fn nested_function_cannot_capture_qubit() {
    let src = "@guppy\ndef main(q: Qubit) -> Qubit:\n  def g() -> Qubit:\n    return h(q)\n  return g()\n";
    assert_eq!(check(src).unwrap_err()[0].category, Category::LinearityCopy);
}

#[test]
fn nested_function_captures_classical() {
    let src = "@guppy\ndef main(x: int) -> int:\n  y = x + 1\n  def g(z: int) -> int:\n    return y * z\n  return g(2)\n";
    let m = check(src).unwrap();
    let g = m.functions.iter().find(|f| f.name == "main.g").unwrap();
    assert_eq!(g.captures.len(), 1);
    assert_eq!(g.captures[0].name, "y");
}

#[test]
fn measure_arity() {
    let src = "@guppy\ndef main(q: Qubit) -> bool:\n  return measure(q, q)\n";
    assert_eq!(error(src).category, Category::Arity);
}

#[test]
fn loop_only_assignment_is_not_definite() {
    let src = format!("{USE}@guppy\ndef main(n: int) -> None:\n  for i in range(n):\n    v = i\n  use(v)\n");
    assert_eq!(error(&src).category, Category::NotDefinitelyAssigned);
}

#[test]
fn rebinding_in_one_branch_is_fine() {
    let src = "@guppy\ndef main(q: Qubit, b: bool) -> Qubit:\n  if b:\n    q = h(q)\n  return q\n";
    assert!(check(src).is_ok());
}

#[test]
fn conditional_consumption() {
    let src = "@guppy\ndef main(q: Qubit, b: bool) -> bool:\n  r = False\n  if b:\n    r = measure(q)\n  return r\n";
    assert_eq!(error(src).category, Category::LinearityConditionalUse);
}

#[test]
fn leak_at_return_and_shadowing() {
    let src = "@guppy\ndef main(q: Qubit) -> None:\n  return\n";
    assert_eq!(error(src).category, Category::LinearityDiscard);
    let src = "@guppy\ndef main() -> Qubit:\n  q = Qubit()\n  q = Qubit()\n  return q\n";
    assert_eq!(error(src).category, Category::LinearityDiscard);
}

#[test]
fn loop_body_must_consume_locals() {
    let src = "@guppy\ndef main(n: int) -> None:\n  for i in range(n):\n    a = Qubit()\n";
    assert_eq!(error(src).category, Category::LinearityDiscard);
    let src = "@guppy\ndef main(n: int) -> None:\n  for i in range(n):\n    a = Qubit()\n    if i == 2:\n      continue\n    discard(a)\n";
    assert_eq!(error(src).category, Category::LinearityDiscard);
}

#[test]
fn qubits_are_not_comparable() {
    let src = "@guppy\ndef main(a: Qubit, b: Qubit) -> bool:\n  return a == b\n";
    let d = error(src);
    assert_eq!(d.category, Category::TypeMismatch);
    assert!(d.message.contains("Qubit"));
}

#[test]
fn coercion_and_no_join_coercion() {
    assert!(check("@guppy\ndef f(x: int) -> float:\n  return x + 1.5\n").is_ok());
    assert!(check("@guppy\ndef f(x: int) -> float:\n  return x\n").is_ok());
    assert_eq!(error("@guppy\ndef f(x: float) -> int:\n  return x\n").category, Category::TypeMismatch);
    assert_eq!(error("@guppy\ndef f(x: int) -> bool:\n  if x:\n    return True\n  return False\n").category, Category::TypeMismatch);
}

#[test]
fn list_builtins() {
    let src = "@guppy\ndef f(qs: list[Qubit]) -> list[Qubit]:\n  q, qs = qs.get(0)\n  n, qs = len(qs)\n  discard(q)\n  return qs\n";
    assert!(check(src).is_ok());
    let src = "@guppy\ndef f(qs: list[Qubit]) -> list[Qubit]:\n  return qs.apply(cx, (0,))\n";
    assert_eq!(error(src).category, Category::TypeMismatch);
    let src = "@guppy\ndef f(xs: list[int]) -> int:\n  return xs[0] + len(xs) + xs.get(1)\n";
    assert!(check(src).is_ok());
}

#[test]
fn literal_overflow() {
    assert_eq!(error("@guppy\ndef f() -> int:\n  return 9223372036854775808\n").category, Category::OverflowLiteral);
    assert!(check("@guppy\ndef f() -> int:\n  return -9223372036854775808\n").is_ok());
}

#[test]
fn mutual_recursion_in_any_order() {
    let src = "@guppy\ndef a(n: int) -> int:\n  return b(n)\n\n@guppy\ndef b(n: int) -> int:\n  return n if n < 1 else a(n - 1)\n";
    assert!(check(src).is_ok());
}

#[test]
fn one_diagnostic_per_statement_collected() {
    let src = "@guppy\ndef f() -> None:\n  a = u\n  b = w\n";
    let diags = check(src).unwrap_err();
    assert_eq!(diags.len(), 2, "{diags:?}");
    assert!(diags.iter().all(|d| d.category == Category::NotDefined));
}

fn arb_type() -> impl Strategy<Value = Type> {
    let leaf = prop_oneof![
        Just(Type::Bool),
        Just(Type::Int),
        Just(Type::Float),
        Just(Type::None),
        Just(Type::Qubit)
    ];
    leaf.prop_recursive(3, 16, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 0..3).prop_map(Type::Tuple),
            inner.clone().prop_map(Type::list),
            (prop::collection::vec(inner.clone(), 0..3), inner).prop_map(|(p, r)| Type::function(p, r)),
        ]
    })
}

proptest! {
    #[test]
    fn join_is_reflexive_and_symmetric(a in arb_type(), b in arb_type()) {
        prop_assert_eq!(join_types(&a, &a), Some(a.clone()));
        prop_assert_eq!(join_types(&a, &b), join_types(&b, &a));
        if a != b {
            prop_assert_eq!(join_types(&a, &b), None);
        }
    }
}

#[test]
fn comprehension_filters() {
    let src = "@guppy\ndef f(xs: list[int]) -> list[int]:\n  return [x * 2 for x in xs if x > 0]\n";
    assert_eq!(error(src).category, Category::UnsupportedFeature);
    let src = "@guppy\ndef f(qs: list[Qubit]) -> list[Qubit]:\n  return [h(q) for q in qs]\n";
    assert!(check(src).is_ok());
}
