//! Lexing and parsing of source text into a spanned [`ast::Module`].

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod pretty;

use crate::diagnostic::Diagnostic;

pub use lexer::{detokenize, tokenize, Token, TokenKind};
pub use parser::parse_module;

/// Tokenize and parse in one step.
pub fn parse_source(source: &str) -> Result<ast::Module, Vec<Diagnostic>> {
    let tokens = tokenize(source).map_err(|d| vec![d])?;
    parse_module(&tokens)
}
