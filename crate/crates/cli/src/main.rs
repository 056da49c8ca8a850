//! `guppyc`: compile, validate, optimise and run guppy programs.
//!
//! Exit codes: 0 success, 1 diagnostics, 2 I/O or usage, 3 runtime error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value as Json};

use guppy_core::diagnostic::Diagnostic;
use guppy_core::ir::{deserialize, serialize, validate, Graph};
use guppy_core::lower::Lowering;
use guppy_core::pipeline::compile;
use guppy_core::rewrite::{run_pipeline, Pattern};
use guppy_core::sim::{self, RunError, DEFAULT_MAX_STEPS};
use guppy_core::typecheck::ConstBindings;

#[derive(Parser)]
#[command(name = "guppyc", version, about = "Compiler and reference executor for guppy programs")]
struct Cli {
    #[arg(long, value_enum, default_value_t = Format::Human, global = true)]
    format: Format,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compile source to IR JSON.
    Compile {
        input: PathBuf,
        /// Output file; stdout if omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        bindings: Option<PathBuf>,
        #[arg(long, default_value = "structured")]
        lowering: Lowering,
    },
    /// Check an IR file against the validation rules.
    Validate { input: PathBuf },
    /// Apply peephole rewrites to an IR file.
    Opt {
        input: PathBuf,
        /// Comma-separated rule names; all built-in rules if omitted.
        #[arg(long, value_delimiter = ',')]
        rule: Vec<String>,
        #[arg(long, default_value_t = 10)]
        max_passes: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run a function of an IR file or source file.
    Run {
        input: PathBuf,
        #[arg(long)]
        entry: String,
        /// JSON array of arguments; `"qubit"` allocates a fresh qubit.
        #[arg(long, default_value = "[]")]
        args: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
        max_steps: u64,
        #[arg(long)]
        bindings: Option<PathBuf>,
        #[arg(long, default_value = "structured")]
        lowering: Lowering,
    },
}

/// A failed command: its exit code and what to print.
struct Failure {
    code: u8,
    human: String,
    json: Json,
}

impl Failure {
    fn io(path: &Path, e: impl std::fmt::Display) -> Failure {
        let msg = format!("{}: {e}", path.display());
        Failure { code: 2, json: json!({ "error": "io", "message": msg }), human: format!("error: {msg}") }
    }

    fn usage(msg: String) -> Failure {
        Failure { code: 1, json: json!({ "error": "usage", "message": msg }), human: format!("error: {msg}") }
    }

    fn diagnostics(file: &Path, ds: &[Diagnostic]) -> Failure {
        let name = file.display().to_string();
        Failure {
            code: 1,
            human: ds.iter().map(|d| d.render(&name)).collect::<Vec<_>>().join("\n"),
            json: Json::Array(ds.iter().map(|d| d.to_json(&name)).collect()),
        }
    }
}

type CmdResult = Result<(String, Json), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::io(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn bindings(path: Option<&Path>) -> Result<ConstBindings, Failure> {
    let Some(p) = path else { return Ok(ConstBindings::new()) };
    ConstBindings::from_json_str(&read(p)?).map_err(|e| Failure::usage(format!("{}: {e}", p.display())))
}

fn load_ir(path: &Path) -> Result<Graph, Failure> {
    let text = read(path)?;
    deserialize(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

/// Source files are compiled; anything that looks like JSON is read as IR.
fn load_any(path: &Path, b: Option<&Path>, mode: Lowering) -> Result<Graph, Failure> {
    let text = read(path)?;
    if text.trim_start().starts_with('{') {
        return deserialize(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())));
    }
    compile(&text, &bindings(b)?, mode).map_err(|ds| Failure::diagnostics(path, &ds))
}

fn cmd_compile(input: &Path, output: Option<&Path>, b: Option<&Path>, mode: Lowering) -> CmdResult {
    let src = read(input)?;
    let g = compile(&src, &bindings(b)?, mode).map_err(|ds| Failure::diagnostics(input, &ds))?;
    let text = serialize(&g);
    let summary = json!({ "nodes": g.node_count(), "edges": g.edge_count() });
    match output {
        Some(p) => {
            write_or_print(Some(p), &text)?;
            Ok((format!("wrote {} ({} nodes, {} edges)", p.display(), g.node_count(), g.edge_count()), summary))
        }
        // The IR itself is the output.
        None => {
            write_or_print(None, &text)?;
            Ok((String::new(), Json::Null))
        }
    }
}

fn cmd_validate(input: &Path) -> CmdResult {
    let text = read(input)?;
    match deserialize(&text) {
        Ok(g) => Ok((
            format!("{}: valid ({} nodes)", input.display(), g.node_count()),
            json!({ "valid": true, "nodes": g.node_count() }),
        )),
        Err(e) => {
            let violations: Vec<Json> = match &e {
                guppy_core::ir::DeserializeError::Invalid(vs) => vs
                    .iter()
                    .map(|v| json!({ "rule": v.rule, "node": v.node, "message": v.to_string() }))
                    .collect(),
                other => vec![json!({ "rule": null, "node": null, "message": other.to_string() })],
            };
            Err(Failure {
                code: 1,
                human: format!("{}: {e}", input.display()),
                json: json!({ "valid": false, "violations": violations }),
            })
        }
    }
}

fn cmd_opt(input: &Path, rules: &[String], max_passes: usize, output: Option<&Path>) -> CmdResult {
    let patterns = if rules.is_empty() {
        Pattern::builtin()
    } else {
        rules
            .iter()
            .map(|r| {
                Pattern::by_name(r).ok_or_else(|| {
                    Failure::usage(format!("unknown rule `{r}`; known rules: {}", Pattern::names().join(", ")))
                })
            })
            .collect::<Result<_, _>>()?
    };
    let g = load_ir(input)?;
    let out = run_pipeline(&g, &patterns, max_passes);
    if let Err(vs) = validate(&out) {
        panic!("rewrite produced invalid IR: {vs:?}");
    }
    let text = serialize(&out);
    if output.is_some() {
        write_or_print(output, &text)?;
    }
    let (before, after) = (g.node_count(), out.node_count());
    let human = format!("nodes: {before} -> {after}");
    if output.is_none() {
        // Keep stdout for the IR; counts go to stderr.
        eprintln!("{human}");
        print!("{text}");
        return Ok((String::new(), Json::Null));
    }
    Ok((human, json!({ "nodes_before": before, "nodes_after": after })))
}

fn cmd_run(
    input: &Path,
    entry: &str,
    args: &str,
    seed: u64,
    max_steps: u64,
    b: Option<&Path>,
    mode: Lowering,
) -> CmdResult {
    let g = load_any(input, b, mode)?;
    let args: Vec<Json> = match serde_json::from_str(args) {
        Ok(Json::Array(a)) => a,
        _ => return Err(Failure { code: 2, ..Failure::usage("`--args` must be a JSON array".into()) }),
    };
    match sim::run(&g, entry, &args, seed, max_steps) {
        Ok(r) => {
            let j = r.to_json(&g);
            let human = serde_json::to_string_pretty(&j).expect("report serializes");
            Ok((human, j))
        }
        Err(RunError::Setup(m)) => Err(Failure::usage(m)),
        Err(RunError::Runtime(e)) => Err(Failure {
            code: 3,
            human: format!("error: {e}"),
            json: json!({ "error": e.to_json() }),
        }),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.cmd {
        Cmd::Compile { input, output, bindings, lowering } => {
            cmd_compile(input, output.as_deref(), bindings.as_deref(), *lowering)
        }
        Cmd::Validate { input } => cmd_validate(input),
        Cmd::Opt { input, rule, max_passes, output } => cmd_opt(input, rule, *max_passes, output.as_deref()),
        Cmd::Run { input, entry, args, seed, max_steps, bindings, lowering } => {
            cmd_run(input, entry, args, *seed, *max_steps, bindings.as_deref(), *lowering)
        }
    };
    match res {
        Ok((human, j)) => {
            match cli.format {
                Format::Json if !j.is_null() => println!("{j}"),
                Format::Json => {}
                Format::Human if !human.is_empty() => println!("{human}"),
                Format::Human => {}
            }
            ExitCode::SUCCESS
        }
        Err(f) => {
            match cli.format {
                Format::Json => println!("{}", f.json),
                Format::Human => eprintln!("{}", f.human),
            }
            ExitCode::from(f.code)
        }
    }
}
