//! Recursive-descent parser over the token stream produced by
//! [`tokenize`](super::lexer::tokenize).

use super::ast::*;
use super::lexer::{Token, TokenKind};
use crate::diagnostic::{Category, Diagnostic, Span};

/// The single decorator the language recognizes; it is recorded and ignored.
pub const FUNCTION_MARKER: &str = "guppy";

pub fn parse_module(tokens: &[Token]) -> Result<Module, Vec<Diagnostic>> {
    if tokens.last().map(|t| t.kind) != Some(TokenKind::Eof) {
        let span = tokens.last().map(|t| t.span).unwrap_or_default();
        return Err(vec![Diagnostic::new(Category::Syntax, span, "token stream does not end with end-of-file")]);
    }
    let mut p = Parser {
        toks: tokens,
        pos: 0,
        loop_depth: 0,
    };
    p.module().map_err(|d| vec![d])
}

type PResult<T> = Result<T, Diagnostic>;

struct Parser<'a> {
    toks: &'a [Token],
    pos: usize,
    loop_depth: usize,
}

fn describe(tok: &Token) -> String {
    match tok.kind {
        TokenKind::Newline => "end of line".into(),
        TokenKind::Indent => "indent".into(),
        TokenKind::Dedent => "dedent".into(),
        TokenKind::Eof => "end of file".into(),
        _ => format!("`{}`", tok.text),
    }
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &'a Token {
        &self.toks[self.pos.min(self.toks.len() - 1)]
    }

    fn peek_at(&self, off: usize) -> &'a Token {
        &self.toks[(self.pos + off).min(self.toks.len() - 1)]
    }

    fn bump(&mut self) -> &'a Token {
        let t = self.peek();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn prev_span(&self) -> Span {
        self.toks[self.pos.saturating_sub(1)].span
    }

    fn at(&self, kind: TokenKind, text: &str) -> bool {
        self.peek().is(kind, text)
    }

    fn at_op(&self, text: &str) -> bool {
        self.at(TokenKind::Op, text)
    }

    fn at_delim(&self, text: &str) -> bool {
        self.at(TokenKind::Delim, text)
    }

    fn at_kw(&self, text: &str) -> bool {
        self.at(TokenKind::Keyword, text)
    }

    fn eat(&mut self, kind: TokenKind, text: &str) -> bool {
        if self.at(kind, text) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn error_here(&self, msg: impl Into<String>) -> Diagnostic {
        Diagnostic::new(Category::Syntax, self.peek().span, msg)
    }

    fn expect(&mut self, kind: TokenKind, text: &str) -> PResult<&'a Token> {
        if self.at(kind, text) {
            Ok(self.bump())
        } else {
            Err(self.error_here(format!("expected `{}`, found {}", text, describe(self.peek()))))
        }
    }

    fn expect_ident(&mut self, what: &str) -> PResult<&'a Token> {
        if self.peek().kind == TokenKind::Ident {
            Ok(self.bump())
        } else {
            Err(self.error_here(format!("expected {}, found {}", what, describe(self.peek()))))
        }
    }

    fn unsupported(&self, span: Span, what: &str) -> Diagnostic {
        Diagnostic::new(Category::UnsupportedFeature, span, format!("{what} is not supported"))
    }

    fn at_stmt_end(&self) -> bool {
        matches!(
            self.peek().kind,
            TokenKind::Newline | TokenKind::Dedent | TokenKind::Eof
        ) || self.at_delim(";")
    }

    fn module(&mut self) -> PResult<Module> {
        let mut functions = Vec::new();
        let start = self.peek().span;
        loop {
            match self.peek().kind {
                TokenKind::Eof => break,
                TokenKind::Newline => {
                    self.bump();
                }
                _ => {
                    if self.at_op("@") || self.at_kw("def") {
                        functions.push(self.function_def()?);
                    } else if self.at_kw("return") {
                        return Err(self.error_here("return outside function"));
                    } else if self.at_kw("break") {
                        return Err(self.error_here("break outside loop"));
                    } else if self.at_kw("continue") {
                        return Err(self.error_here("continue outside loop"));
                    } else if self.at_kw("import") || self.at_kw("from") {
                        return Err(self.unsupported(self.peek().span, "`import`"));
                    } else if self.at_kw("class") {
                        return Err(self.unsupported(self.peek().span, "`class`"));
                    } else {
                        return Err(self.error_here(format!(
                            "expected a function definition at module level, found {}",
                            describe(self.peek())
                        )));
                    }
                }
            }
        }
        let end = self.peek().span;
        Ok(Module {
            functions,
            span: start.to(end),
        })
    }

    fn function_def(&mut self) -> PResult<FunctionDef> {
        let start = self.peek().span;
        let mut decorators = Vec::new();
        while self.at_op("@") {
            let at = self.bump().span;
            let name = self.expect_ident("decorator name")?;
            if name.text != FUNCTION_MARKER {
                return Err(self.unsupported(at.to(name.span), &format!("decorator `@{}`", name.text)));
            }
            decorators.push(Decorator {
                name: name.text.clone(),
                span: at.to(name.span),
            });
            if self.at_delim("(") {
                return Err(self.unsupported(self.peek().span, "decorator arguments"));
            }
            self.expect(TokenKind::Newline, "\n")
                .map_err(|_| self.error_here("expected end of line after decorator"))?;
        }
        self.expect(TokenKind::Keyword, "def")?;
        let name = self.expect_ident("function name")?;
        self.expect(TokenKind::Delim, "(")?;
        let mut params = Vec::new();
        while !self.at_delim(")") {
            let pname = self.expect_ident("parameter name")?;
            let annotation = if self.eat(TokenKind::Delim, ":") {
                Some(self.type_expr()?)
            } else {
                None
            };
            let span = annotation.as_ref().map_or(pname.span, |a| pname.span.to(a.span));
            params.push(Param {
                name: pname.text.clone(),
                annotation,
                span,
            });
            if !self.eat(TokenKind::Delim, ",") {
                break;
            }
        }
        self.expect(TokenKind::Delim, ")")?;
        let returns = if self.eat(TokenKind::Op, "->") {
            Some(self.type_expr()?)
        } else {
            None
        };
        self.expect(TokenKind::Delim, ":")?;
        let saved = std::mem::replace(&mut self.loop_depth, 0);
        let body = self.block();
        self.loop_depth = saved;
        let body = body?;
        let span = start.to(body.last().map_or(self.prev_span(), |s| s.span));
        Ok(FunctionDef {
            name: name.text.clone(),
            name_span: name.span,
            params,
            returns,
            body,
            decorators,
            span,
        })
    }

    fn type_expr(&mut self) -> PResult<TypeExpr> {
        let tok = self.peek();
        match tok.kind {
            TokenKind::NoneLit => {
                self.bump();
                Ok(TypeExpr {
                    kind: TypeExprKind::NoneLit,
                    span: tok.span,
                })
            }
            TokenKind::Ident => {
                self.bump();
                if self.eat(TokenKind::Delim, "[") {
                    let mut args = Vec::new();
                    loop {
                        if self.at_delim("[") {
                            let open = self.bump().span;
                            let mut items = Vec::new();
                            while !self.at_delim("]") {
                                items.push(self.type_expr()?);
                                if !self.eat(TokenKind::Delim, ",") {
                                    break;
                                }
                            }
                            let close = self.expect(TokenKind::Delim, "]")?.span;
                            args.push(TypeExpr {
                                kind: TypeExprKind::List(items),
                                span: open.to(close),
                            });
                        } else {
                            args.push(self.type_expr()?);
                        }
                        if !self.eat(TokenKind::Delim, ",") || self.at_delim("]") {
                            break;
                        }
                    }
                    let close = self.expect(TokenKind::Delim, "]")?.span;
                    Ok(TypeExpr {
                        kind: TypeExprKind::Subscript(tok.text.clone(), args),
                        span: tok.span.to(close),
                    })
                } else {
                    Ok(TypeExpr {
                        kind: TypeExprKind::Name(tok.text.clone()),
                        span: tok.span,
                    })
                }
            }
            _ => Err(self.error_here(format!("expected a type, found {}", describe(tok)))),
        }
    }

    /// Indented block, or simple statements on the same line after `:`.
    fn block(&mut self) -> PResult<Vec<Stmt>> {
        if self.eat(TokenKind::Newline, "\n") {
            if self.peek().kind != TokenKind::Indent {
                return Err(self.error_here("expected an indented block"));
            }
            self.bump();
            let mut body = Vec::new();
            while !matches!(self.peek().kind, TokenKind::Dedent | TokenKind::Eof) {
                if self.eat(TokenKind::Newline, "\n") {
                    continue;
                }
                body.extend(self.statement()?);
            }
            if self.peek().kind == TokenKind::Dedent {
                self.bump();
            }
            Ok(body)
        } else {
            let body = self.simple_line()?;
            if body.is_empty() {
                return Err(self.error_here("expected a statement"));
            }
            Ok(body)
        }
    }

    fn statement(&mut self) -> PResult<Vec<Stmt>> {
        let tok = self.peek();
        if tok.kind == TokenKind::Keyword {
            match tok.text.as_str() {
                "if" => return Ok(vec![self.if_stmt()?]),
                "while" => return Ok(vec![self.while_stmt()?]),
                "for" => return Ok(vec![self.for_stmt()?]),
                "def" => {
                    let f = self.function_def()?;
                    let span = f.span;
                    return Ok(vec![Stmt {
                        kind: StmtKind::FunctionDef(f),
                        span,
                    }]);
                }
                "elif" | "else" => {
                    return Err(self.error_here(format!("`{}` without matching `if`", tok.text)));
                }
                "class" | "import" | "from" | "with" | "try" | "global" | "nonlocal" | "del"
                | "assert" | "raise" | "yield" | "async" | "await" | "lambda" => {
                    return Err(self.unsupported(tok.span, &format!("`{}`", tok.text)));
                }
                _ => {}
            }
        }
        if self.at_op("@") {
            let f = self.function_def()?;
            let span = f.span;
            return Ok(vec![Stmt {
                kind: StmtKind::FunctionDef(f),
                span,
            }]);
        }
        self.simple_line()
    }

    fn simple_line(&mut self) -> PResult<Vec<Stmt>> {
        let mut out = vec![self.small_stmt()?];
        while self.eat(TokenKind::Delim, ";") {
            if self.at_stmt_end() {
                break;
            }
            out.push(self.small_stmt()?);
        }
        match self.peek().kind {
            TokenKind::Newline => {
                self.bump();
            }
            TokenKind::Dedent | TokenKind::Eof => {}
            _ => {
                return Err(self.error_here(format!(
                    "expected end of statement, found {}",
                    describe(self.peek())
                )))
            }
        }
        Ok(out)
    }

    fn small_stmt(&mut self) -> PResult<Stmt> {
        let tok = self.peek();
        let span = tok.span;
        if tok.kind == TokenKind::Keyword {
            match tok.text.as_str() {
                "pass" => {
                    self.bump();
                    return Ok(Stmt {
                        kind: StmtKind::Pass,
                        span,
                    });
                }
                "break" | "continue" => {
                    if self.loop_depth == 0 {
                        return Err(self.error_here(format!("{} outside loop", tok.text)));
                    }
                    self.bump();
                    let kind = if tok.text == "break" {
                        StmtKind::Break
                    } else {
                        StmtKind::Continue
                    };
                    return Ok(Stmt { kind, span });
                }
                "return" => {
                    self.bump();
                    if self.at_stmt_end() {
                        return Ok(Stmt {
                            kind: StmtKind::Return(None),
                            span,
                        });
                    }
                    let value = self.expr_list()?;
                    let span = span.to(value.span);
                    return Ok(Stmt {
                        kind: StmtKind::Return(Some(value)),
                        span,
                    });
                }
                _ => {}
            }
        }
        let first = self.expr_list()?;
        if self.at_op("=") {
            self.bump();
            let target = self.to_target(&first)?;
            let value = self.expr_list()?;
            if self.at_op("=") {
                return Err(self.unsupported(self.peek().span, "chained assignment"));
            }
            let span = first.span.to(value.span);
            return Ok(Stmt {
                kind: StmtKind::Assign { target, value },
                span,
            });
        }
        let op_tok = self.peek();
        if op_tok.kind == TokenKind::Op && op_tok.text.len() >= 2 && op_tok.text.ends_with('=')
            && !matches!(op_tok.text.as_str(), "==" | "!=" | "<=" | ">=")
        {
            let op = BinOp::from_symbol(&op_tok.text[..op_tok.text.len() - 1])
                .ok_or_else(|| self.error_here("unknown augmented assignment"))?;
            self.bump();
            let target = self.to_target(&first)?;
            if matches!(target, Target::Tuple(..)) {
                return Err(Diagnostic::new(
                    Category::Syntax,
                    target.span(),
                    "augmented assignment needs a single name",
                ));
            }
            let value = self.expr_list()?;
            let span = first.span.to(value.span);
            return Ok(Stmt {
                kind: StmtKind::AugAssign { target, op, value },
                span,
            });
        }
        let span = first.span;
        Ok(Stmt {
            kind: StmtKind::Expr(first),
            span,
        })
    }

    fn to_target(&self, e: &Expr) -> PResult<Target> {
        match &e.kind {
            ExprKind::Name(n) => Ok(Target::Name(n.clone(), e.span)),
            ExprKind::Tuple(items) | ExprKind::List(items) if !items.is_empty() => Ok(Target::Tuple(
                items.iter().map(|i| self.to_target(i)).collect::<PResult<_>>()?,
                e.span,
            )),
            ExprKind::Subscript { .. } => Err(Diagnostic::new(
                Category::UnsupportedFeature,
                e.span,
                "assignment to a subscript is not supported (lists are immutable)",
            )),
            _ => Err(Diagnostic::new(Category::Syntax, e.span, "cannot assign to this expression")),
        }
    }

    fn if_stmt(&mut self) -> PResult<Stmt> {
        let start = self.bump().span; // `if` or `elif`
        let cond = self.test()?;
        self.expect(TokenKind::Delim, ":")?;
        let body = self.block()?;
        let mut end = body.last().unwrap().span;
        let orelse = if self.at_kw("elif") {
            let nested = self.if_stmt()?;
            end = nested.span;
            vec![nested]
        } else if self.at_kw("else") {
            self.bump();
            self.expect(TokenKind::Delim, ":")?;
            let b = self.block()?;
            end = b.last().unwrap().span;
            b
        } else {
            Vec::new()
        };
        Ok(Stmt {
            kind: StmtKind::If { cond, body, orelse },
            span: start.to(end),
        })
    }

    fn loop_body(&mut self) -> PResult<Vec<Stmt>> {
        self.loop_depth += 1;
        let body = self.block();
        self.loop_depth -= 1;
        let body = body?;
        if self.at_kw("else") {
            return Err(self.unsupported(self.peek().span, "`else` on loops"));
        }
        Ok(body)
    }

    fn while_stmt(&mut self) -> PResult<Stmt> {
        let start = self.bump().span;
        let cond = self.test()?;
        self.expect(TokenKind::Delim, ":")?;
        let body = self.loop_body()?;
        let span = start.to(body.last().unwrap().span);
        Ok(Stmt {
            kind: StmtKind::While { cond, body },
            span,
        })
    }

    fn for_stmt(&mut self) -> PResult<Stmt> {
        let start = self.bump().span;
        let target_expr = self.target_list()?;
        let target = self.to_target(&target_expr)?;
        self.expect(TokenKind::Keyword, "in")?;
        let iter = self.expr_list()?;
        self.expect(TokenKind::Delim, ":")?;
        let body = self.loop_body()?;
        let span = start.to(body.last().unwrap().span);
        Ok(Stmt {
            kind: StmtKind::For { target, iter, body },
            span,
        })
    }

    /// Comma-separated targets for `for` (stops before `in`).
    fn target_list(&mut self) -> PResult<Expr> {
        let first = self.bit_or()?;
        if !self.at_delim(",") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat(TokenKind::Delim, ",") {
            if self.at_kw("in") {
                break;
            }
            items.push(self.bit_or()?);
        }
        let span = items[0].span.to(items.last().unwrap().span);
        Ok(Expr {
            kind: ExprKind::Tuple(items),
            span,
        })
    }

    /// `a, b, c` forms a tuple; a single expression stays as is.
    fn expr_list(&mut self) -> PResult<Expr> {
        let first = self.test()?;
        if !self.at_delim(",") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat(TokenKind::Delim, ",") {
            if self.at_stmt_end() || self.at_op("=") || self.at_delim(":") || self.at_delim(")") {
                break;
            }
            items.push(self.test()?);
        }
        let span = items[0].span.to(self.prev_span());
        Ok(Expr {
            kind: ExprKind::Tuple(items),
            span,
        })
    }

    fn test(&mut self) -> PResult<Expr> {
        if self.at_kw("lambda") {
            return Err(self.unsupported(self.peek().span, "`lambda`"));
        }
        let body = self.or_test()?;
        if self.at_kw("if") {
            self.bump();
            let cond = self.or_test()?;
            self.expect(TokenKind::Keyword, "else")?;
            let orelse = self.test()?;
            let span = body.span.to(orelse.span);
            return Ok(Expr {
                kind: ExprKind::IfExp {
                    cond: Box::new(cond),
                    then: Box::new(body),
                    orelse: Box::new(orelse),
                },
                span,
            });
        }
        Ok(body)
    }

    fn or_test(&mut self) -> PResult<Expr> {
        let mut lhs = self.and_test()?;
        while self.at_kw("or") {
            self.bump();
            let rhs = self.and_test()?;
            let span = lhs.span.to(rhs.span);
            lhs = Expr {
                kind: ExprKind::BoolOp {
                    op: BoolOp::Or,
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                },
                span,
            };
        }
        Ok(lhs)
    }

    fn and_test(&mut self) -> PResult<Expr> {
        let mut lhs = self.not_test()?;
        while self.at_kw("and") {
            self.bump();
            let rhs = self.not_test()?;
            let span = lhs.span.to(rhs.span);
            lhs = Expr {
                kind: ExprKind::BoolOp {
                    op: BoolOp::And,
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                },
                span,
            };
        }
        Ok(lhs)
    }

    fn not_test(&mut self) -> PResult<Expr> {
        if self.at_kw("not") {
            let start = self.bump().span;
            let operand = self.not_test()?;
            let span = start.to(operand.span);
            return Ok(Expr {
                kind: ExprKind::Unary {
                    op: UnaryOp::Not,
                    operand: Box::new(operand),
                },
                span,
            });
        }
        self.comparison()
    }

    fn comparison(&mut self) -> PResult<Expr> {
        let first = self.bit_or()?;
        let mut rest = Vec::new();
        loop {
            let tok = self.peek();
            if tok.kind == TokenKind::Op {
                if let Some(op) = CmpOp::from_symbol(&tok.text) {
                    self.bump();
                    rest.push((op, self.bit_or()?));
                    continue;
                }
            }
            if self.at_kw("in") || self.at_kw("is") || (self.at_kw("not") && self.peek_at(1).is(TokenKind::Keyword, "in")) {
                return Err(self.unsupported(tok.span, &format!("the `{}` operator", tok.text)));
            }
            break;
        }
        if rest.is_empty() {
            return Ok(first);
        }
        let span = first.span.to(rest.last().unwrap().1.span);
        Ok(Expr {
            kind: ExprKind::Compare {
                first: Box::new(first),
                rest,
            },
            span,
        })
    }

    fn binary_level(
        &mut self,
        ops: &[&str],
        next: fn(&mut Self) -> PResult<Expr>,
    ) -> PResult<Expr> {
        let mut lhs = next(self)?;
        loop {
            let tok = self.peek();
            if tok.kind == TokenKind::Op && ops.contains(&tok.text.as_str()) {
                self.bump();
                let op = BinOp::from_symbol(&tok.text).unwrap();
                let rhs = next(self)?;
                let span = lhs.span.to(rhs.span);
                lhs = Expr {
                    kind: ExprKind::Binary {
                        op,
                        lhs: Box::new(lhs),
                        rhs: Box::new(rhs),
                    },
                    span,
                };
            } else {
                return Ok(lhs);
            }
        }
    }

    fn bit_or(&mut self) -> PResult<Expr> {
        self.binary_level(&["|"], Self::bit_xor)
    }

    fn bit_xor(&mut self) -> PResult<Expr> {
        self.binary_level(&["^"], Self::bit_and)
    }

    fn bit_and(&mut self) -> PResult<Expr> {
        self.binary_level(&["&"], Self::shift)
    }

    fn shift(&mut self) -> PResult<Expr> {
        self.binary_level(&["<<", ">>"], Self::arith)
    }

    fn arith(&mut self) -> PResult<Expr> {
        self.binary_level(&["+", "-"], Self::term)
    }

    fn term(&mut self) -> PResult<Expr> {
        if self.at_op("@") {
            return Err(self.unsupported(self.peek().span, "the `@` operator"));
        }
        self.binary_level(&["*", "/", "//", "%"], Self::factor)
    }

    fn factor(&mut self) -> PResult<Expr> {
        let tok = self.peek();
        let op = match (tok.kind, tok.text.as_str()) {
            (TokenKind::Op, "-") => Some(UnaryOp::Neg),
            (TokenKind::Op, "+") => Some(UnaryOp::Pos),
            (TokenKind::Op, "~") => Some(UnaryOp::Invert),
            _ => None,
        };
        if let Some(op) = op {
            self.bump();
            let operand = self.factor()?;
            let span = tok.span.to(operand.span);
            return Ok(Expr {
                kind: ExprKind::Unary {
                    op,
                    operand: Box::new(operand),
                },
                span,
            });
        }
        self.power()
    }

    fn power(&mut self) -> PResult<Expr> {
        let base = self.primary()?;
        if self.at_op("**") {
            self.bump();
            let exp = self.factor()?;
            let span = base.span.to(exp.span);
            return Ok(Expr {
                kind: ExprKind::Binary {
                    op: BinOp::Pow,
                    lhs: Box::new(base),
                    rhs: Box::new(exp),
                },
                span,
            });
        }
        Ok(base)
    }

    fn call_args(&mut self) -> PResult<Vec<Expr>> {
        let mut args = Vec::new();
        while !self.at_delim(")") {
            if self.peek().kind == TokenKind::Ident && self.peek_at(1).is(TokenKind::Op, "=") {
                return Err(self.unsupported(self.peek().span, "keyword arguments"));
            }
            if self.at_op("*") || self.at_op("**") {
                return Err(self.unsupported(self.peek().span, "argument unpacking"));
            }
            args.push(self.test()?);
            if !self.eat(TokenKind::Delim, ",") {
                break;
            }
        }
        self.expect(TokenKind::Delim, ")")?;
        Ok(args)
    }

    fn primary(&mut self) -> PResult<Expr> {
        let mut e = self.atom()?;
        loop {
            if self.at_delim("(") {
                self.bump();
                let args = self.call_args()?;
                let span = e.span.to(self.prev_span());
                e = Expr {
                    kind: ExprKind::Call {
                        func: Box::new(e),
                        args,
                    },
                    span,
                };
            } else if self.at_delim("[") {
                self.bump();
                if self.at_delim(":") {
                    return Err(self.unsupported(self.peek().span, "slicing"));
                }
                let index = self.expr_list()?;
                if self.at_delim(":") {
                    return Err(self.unsupported(self.peek().span, "slicing"));
                }
                self.expect(TokenKind::Delim, "]")?;
                let span = e.span.to(self.prev_span());
                e = Expr {
                    kind: ExprKind::Subscript {
                        value: Box::new(e),
                        index: Box::new(index),
                    },
                    span,
                };
            } else if self.at_op(".") {
                self.bump();
                let name = self.expect_ident("method name")?;
                if !self.at_delim("(") {
                    return Err(self.unsupported(name.span, "attribute access outside a method call"));
                }
                self.bump();
                let args = self.call_args()?;
                let span = e.span.to(self.prev_span());
                e = Expr {
                    kind: ExprKind::MethodCall {
                        receiver: Box::new(e),
                        method: name.text.clone(),
                        method_span: name.span,
                        args,
                    },
                    span,
                };
            } else {
                return Ok(e);
            }
        }
    }

    fn atom(&mut self) -> PResult<Expr> {
        let tok = self.peek();
        let span = tok.span;
        let kind = match tok.kind {
            TokenKind::Int => {
                self.bump();
                ExprKind::Int(parse_int(&tok.text).ok_or_else(|| {
                    Diagnostic::new(
                        Category::OverflowLiteral,
                        span,
                        format!("integer literal `{}` is too large", tok.text),
                    )
                })?)
            }
            TokenKind::Float => {
                self.bump();
                let v: f64 = tok.text.replace('_', "").parse().map_err(|_| {
                    Diagnostic::new(Category::Syntax, span, "malformed float literal")
                })?;
                ExprKind::Float(v)
            }
            TokenKind::Bool => {
                self.bump();
                ExprKind::Bool(tok.text == "True")
            }
            TokenKind::NoneLit => {
                self.bump();
                ExprKind::None
            }
            TokenKind::Str => {
                self.bump();
                ExprKind::Str(tok.text.clone())
            }
            TokenKind::Ident => {
                if tok.text == "py" && self.peek_at(1).is(TokenKind::Delim, "(") {
                    return self.py_expr();
                }
                self.bump();
                ExprKind::Name(tok.text.clone())
            }
            TokenKind::Delim if tok.text == "(" => {
                self.bump();
                if self.eat(TokenKind::Delim, ")") {
                    return Ok(Expr {
                        kind: ExprKind::Tuple(Vec::new()),
                        span: span.to(self.prev_span()),
                    });
                }
                let first = self.test()?;
                if self.at_kw("for") {
                    return Err(self.unsupported(self.peek().span, "generator expressions"));
                }
                if self.eat(TokenKind::Delim, ")") {
                    // Parentheses only group; keep the inner node but widen
                    // its span so children stay contained in parents.
                    return Ok(Expr {
                        kind: first.kind,
                        span: span.to(self.prev_span()),
                    });
                }
                let mut items = vec![first];
                while self.eat(TokenKind::Delim, ",") {
                    if self.at_delim(")") {
                        break;
                    }
                    items.push(self.test()?);
                }
                self.expect(TokenKind::Delim, ")")?;
                ExprKind::Tuple(items)
            }
            TokenKind::Delim if tok.text == "[" => {
                self.bump();
                if self.eat(TokenKind::Delim, "]") {
                    return Ok(Expr {
                        kind: ExprKind::List(Vec::new()),
                        span: span.to(self.prev_span()),
                    });
                }
                let first = self.test()?;
                if self.at_kw("for") {
                    self.bump();
                    let target_expr = self.target_list()?;
                    let target = self.to_target(&target_expr)?;
                    self.expect(TokenKind::Keyword, "in")?;
                    let iter = self.or_test()?;
                    let mut conditions = Vec::new();
                    while self.at_kw("if") {
                        self.bump();
                        conditions.push(self.or_test()?);
                    }
                    if self.at_kw("for") {
                        return Err(self.unsupported(self.peek().span, "nested comprehension clauses"));
                    }
                    self.expect(TokenKind::Delim, "]")?;
                    return Ok(Expr {
                        kind: ExprKind::ListComp {
                            elt: Box::new(first),
                            target,
                            iter: Box::new(iter),
                            conditions,
                        },
                        span: span.to(self.prev_span()),
                    });
                }
                let mut items = vec![first];
                while self.eat(TokenKind::Delim, ",") {
                    if self.at_delim("]") {
                        break;
                    }
                    items.push(self.test()?);
                }
                self.expect(TokenKind::Delim, "]")?;
                ExprKind::List(items)
            }
            TokenKind::Keyword if tok.text == "lambda" => {
                return Err(self.unsupported(span, "`lambda`"));
            }
            _ => {
                return Err(self.error_here(format!("expected an expression, found {}", describe(tok))));
            }
        };
        Ok(Expr {
            kind,
            span: span.to(self.prev_span()),
        })
    }

    fn py_expr(&mut self) -> PResult<Expr> {
        let start = self.bump().span;
        self.bump(); // (
        let mut depth = 0usize;
        let mut tokens = Vec::new();
        loop {
            let tok = self.peek();
            match tok.kind {
                TokenKind::Eof | TokenKind::Newline => {
                    return Err(self.error_here("unterminated `py(...)` expression"));
                }
                TokenKind::Delim if tok.text == "(" || tok.text == "[" => depth += 1,
                TokenKind::Delim if tok.text == ")" || tok.text == "]" => {
                    if depth == 0 {
                        break;
                    }
                    depth -= 1;
                }
                _ => {}
            }
            tokens.push(self.bump().clone());
        }
        let close = self.bump().span;
        if tokens.is_empty() {
            return Err(Diagnostic::new(Category::Syntax, start.to(close), "`py(...)` needs an argument"));
        }
        Ok(Expr {
            kind: ExprKind::Py { tokens },
            span: start.to(close),
        })
    }
}

fn parse_int(text: &str) -> Option<u128> {
    let clean = text.replace('_', "");
    let (digits, radix) = match clean.get(..2).map(|p| p.to_ascii_lowercase()) {
        Some(p) if p == "0x" => (&clean[2..], 16),
        Some(p) if p == "0o" => (&clean[2..], 8),
        Some(p) if p == "0b" => (&clean[2..], 2),
        _ => (clean.as_str(), 10),
    };
    u128::from_str_radix(digits, radix).ok()
}
