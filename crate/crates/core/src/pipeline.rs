//! Source text to validated IR in one call.

use crate::diagnostic::Diagnostic;
use crate::frontend::parse_source;
use crate::ir::{validate, Graph};
use crate::lower::{lower_module, Lowering};
use crate::typecheck::{check_module, ConstBindings};

/// Parses, checks, lowers and validates. A validation failure after a
/// successful check is a compiler bug and panics.
pub fn compile(source: &str, bindings: &ConstBindings, mode: Lowering) -> Result<Graph, Vec<Diagnostic>> {
    let ast = parse_source(source)?;
    let tast = check_module(&ast, bindings)?;
    let g = lower_module(&tast, mode);
    if let Err(vs) = validate(&g) {
        let lines: Vec<String> = vs.iter().map(|v| v.to_string()).collect();
        panic!("compiler bug: lowered graph fails validation:\n{}", lines.join("\n"));
    }
    Ok(g)
}
