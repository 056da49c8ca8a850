//! Significant-indentation tokenizer.

use crate::diagnostic::{Category, Diagnostic, Span};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Keyword,
    Ident,
    Int,
    Float,
    Bool,
    NoneLit,
    /// String literals only appear to be rejected with a precise diagnostic.
    Str,
    Op,
    Delim,
    Newline,
    Indent,
    Dedent,
    Eof,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub span: Span,
}

impl Token {
    pub fn is(&self, kind: TokenKind, text: &str) -> bool {
        self.kind == kind && self.text == text
    }
}

const KEYWORDS: &[&str] = &[
    "def", "return", "if", "elif", "else", "while", "for", "in", "break", "continue", "and", "or",
    "not", "pass", "lambda", "class", "import", "from", "global", "nonlocal", "with", "try",
    "except", "finally", "yield", "del", "assert", "raise", "async", "await", "is", "as",
];

// Longest first so that maximal munch works by linear scan.
const OPERATORS: &[&str] = &[
    "//=", "<<=", ">>=", "**=", "->", "//", "**", "<<", ">>", "<=", ">=", "==", "!=", "+=", "-=",
    "*=", "/=", "%=", "&=", "|=", "^=", "+", "-", "*", "/", "%", "&", "|", "^", "~", "<", ">",
    "=", ".", "@",
];

const DELIMITERS: &[char] = &['(', ')', '[', ']', ',', ':', ';'];

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    line: u32,
    line_start: usize,
    tokens: Vec<Token>,
    indents: Vec<usize>,
    depth: usize,
}

pub fn tokenize(source: &str) -> Result<Vec<Token>, Diagnostic> {
    let mut lx = Lexer {
        src: source,
        pos: 0,
        line: 1,
        line_start: 0,
        tokens: Vec::new(),
        indents: vec![0],
        depth: 0,
    };
    lx.run()?;
    Ok(lx.tokens)
}

impl Lexer<'_> {
    fn span(&self, start: usize, end: usize) -> Span {
        Span::new(start, end, self.line, (start - self.line_start) as u32 + 1)
    }

    fn err(&self, start: usize, end: usize, msg: impl Into<String>) -> Diagnostic {
        Diagnostic::new(Category::Syntax, self.span(start, end), msg)
    }

    fn push(&mut self, kind: TokenKind, start: usize, end: usize) {
        let text = self.src[start..end].to_string();
        let span = self.span(start, end);
        self.tokens.push(Token { kind, text, span });
    }

    fn push_empty(&mut self, kind: TokenKind) {
        let span = self.span(self.pos, self.pos);
        self.tokens.push(Token {
            kind,
            text: String::new(),
            span,
        });
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_at(&self, off: usize) -> Option<char> {
        self.src[self.pos..].chars().nth(off)
    }

    fn newline(&mut self) {
        self.pos += 1;
        self.line += 1;
        self.line_start = self.pos;
    }

    fn last_significant(&self) -> Option<&Token> {
        self.tokens.last()
    }

    fn run(&mut self) -> Result<(), Diagnostic> {
        let mut at_line_start = true;
        loop {
            if at_line_start && self.depth == 0 {
                if !self.indentation()? {
                    break;
                }
                at_line_start = false;
            }
            let Some(c) = self.peek() else { break };
            match c {
                '\n' => {
                    if self.depth == 0 {
                        self.push(TokenKind::Newline, self.pos, self.pos + 1);
                        at_line_start = true;
                    }
                    self.newline();
                }
                ' ' | '\r' => self.pos += 1,
                '\t' => {
                    // Tabs are tolerated between tokens, never in indentation.
                    self.pos += 1;
                }
                '#' => {
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.pos += c.len_utf8();
                    }
                }
                '\\' if self.peek_at(1) == Some('\n') => {
                    self.pos += 1;
                    self.newline();
                }
                '0'..='9' => self.number()?,
                '.' if self.peek_at(1).is_some_and(|d| d.is_ascii_digit()) => self.number()?,
                '"' | '\'' => self.string(c)?,
                c if c.is_alphabetic() || c == '_' => self.word(),
                c if DELIMITERS.contains(&c) => {
                    match c {
                        '(' | '[' => self.depth += 1,
                        ')' | ']' => {
                            if self.depth == 0 {
                                return Err(self.err(self.pos, self.pos + 1, format!("unmatched `{c}`")));
                            }
                            self.depth -= 1;
                        }
                        _ => {}
                    }
                    self.push(TokenKind::Delim, self.pos, self.pos + 1);
                    self.pos += 1;
                }
                _ => {
                    let rest = &self.src[self.pos..];
                    if let Some(op) = OPERATORS.iter().find(|op| rest.starts_with(**op)) {
                        let start = self.pos;
                        self.pos += op.len();
                        self.push(TokenKind::Op, start, self.pos);
                    } else {
                        return Err(self.err(
                            self.pos,
                            self.pos + c.len_utf8(),
                            format!("illegal character `{c}`"),
                        ));
                    }
                }
            }
        }
        if self.depth > 0 {
            return Err(self.err(self.pos, self.pos, "unexpected end of file inside brackets"));
        }
        // A missing final newline is fine: the parser also accepts Dedent or
        // Eof as a statement terminator.
        while self.indents.len() > 1 {
            self.indents.pop();
            self.push_empty(TokenKind::Dedent);
        }
        self.push_empty(TokenKind::Eof);
        Ok(())
    }

    /// Handles leading whitespace of a physical line. Returns `false` at end
    /// of input.
    fn indentation(&mut self) -> Result<bool, Diagnostic> {
        loop {
            let start = self.pos;
            let mut width = 0;
            while let Some(c) = self.peek() {
                match c {
                    ' ' => width += 1,
                    '\t' => {
                        return Err(self.err(self.pos, self.pos + 1, "tab characters are not allowed in indentation"));
                    }
                    '\r' => {}
                    _ => break,
                }
                self.pos += 1;
            }
            match self.peek() {
                None => return Ok(false),
                Some('\n') => {
                    self.newline();
                    continue;
                }
                Some('#') => {
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.pos += c.len_utf8();
                    }
                    continue;
                }
                Some(_) => {}
            }
            let current = *self.indents.last().unwrap();
            if width > current {
                let after_colon = self.last_significant().is_some_and(|t| t.kind == TokenKind::Newline)
                    && self.tokens.len() >= 2
                    && self.tokens[self.tokens.len() - 2].is(TokenKind::Delim, ":");
                if !after_colon {
                    return Err(self.err(start, self.pos, "unexpected indent"));
                }
                self.indents.push(width);
                self.push(TokenKind::Indent, start, start);
            } else if width < current {
                while *self.indents.last().unwrap() > width {
                    self.indents.pop();
                    self.push_empty(TokenKind::Dedent);
                }
                if *self.indents.last().unwrap() != width {
                    return Err(self.err(
                        start,
                        self.pos,
                        "inconsistent indentation: dedent does not match any outer block",
                    ));
                }
            }
            return Ok(true);
        }
    }

    fn word(&mut self) {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_alphanumeric() || c == '_' {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
        let text = &self.src[start..self.pos];
        let kind = match text {
            "True" | "False" => TokenKind::Bool,
            "None" => TokenKind::NoneLit,
            t if KEYWORDS.contains(&t) => TokenKind::Keyword,
            _ => TokenKind::Ident,
        };
        self.push(kind, start, self.pos);
    }

    fn digits(&mut self, radix: u32) {
        while let Some(c) = self.peek() {
            if c.is_digit(radix) || c == '_' {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self) -> Result<(), Diagnostic> {
        let start = self.pos;
        if self.peek() == Some('0') && matches!(self.peek_at(1), Some('x' | 'X' | 'o' | 'O' | 'b' | 'B')) {
            let radix = match self.peek_at(1).unwrap().to_ascii_lowercase() {
                'x' => 16,
                'o' => 8,
                _ => 2,
            };
            self.pos += 2;
            let digits_start = self.pos;
            self.digits(radix);
            if self.pos == digits_start {
                return Err(self.err(start, self.pos, "malformed integer literal"));
            }
            self.push(TokenKind::Int, start, self.pos);
            return Ok(());
        }
        let mut is_float = false;
        self.digits(10);
        if self.peek() == Some('.') && !self.peek_at(1).is_some_and(|c| c.is_alphabetic() || c == '_') {
            is_float = true;
            self.pos += 1;
            self.digits(10);
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some('+' | '-')) {
                self.pos += 1;
            }
            if self.peek().is_some_and(|c| c.is_ascii_digit()) {
                is_float = true;
                self.digits(10);
            } else {
                self.pos = save;
            }
        }
        if self.peek().is_some_and(|c| c.is_alphabetic() || c == '_') {
            return Err(self.err(start, self.pos + 1, "malformed numeric literal"));
        }
        let kind = if is_float { TokenKind::Float } else { TokenKind::Int };
        self.push(kind, start, self.pos);
        Ok(())
    }

    fn string(&mut self, quote: char) -> Result<(), Diagnostic> {
        let start = self.pos;
        self.pos += 1;
        loop {
            match self.peek() {
                None | Some('\n') => {
                    return Err(self.err(start, self.pos, "unterminated string literal"));
                }
                Some('\\') => {
                    self.pos += 1;
                    if let Some(c) = self.peek() {
                        if c == '\n' {
                            return Err(self.err(start, self.pos, "unterminated string literal"));
                        }
                        self.pos += c.len_utf8();
                    }
                }
                Some(c) if c == quote => {
                    self.pos += 1;
                    break;
                }
                Some(c) => self.pos += c.len_utf8(),
            }
        }
        self.push(TokenKind::Str, start, self.pos);
        Ok(())
    }
}

/// Rebuilds source text from a token stream: one logical line per `Newline`,
/// four spaces per indentation level, single spaces between tokens.
pub fn detokenize(tokens: &[Token]) -> String {
    let mut out = String::new();
    let mut level = 0usize;
    let mut line_open = false;
    for tok in tokens {
        match tok.kind {
            TokenKind::Indent => level += 1,
            TokenKind::Dedent => level = level.saturating_sub(1),
            TokenKind::Newline => {
                out.push('\n');
                line_open = false;
            }
            TokenKind::Eof => {}
            _ => {
                if line_open {
                    out.push(' ');
                } else {
                    out.push_str(&"    ".repeat(level));
                    line_open = true;
                }
                out.push_str(&tok.text);
            }
        }
    }
    if line_open {
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds_and_texts(src: &str) -> Vec<(TokenKind, String)> {
        tokenize(src)
            .unwrap()
            .into_iter()
            .map(|t| (t.kind, t.text))
            .collect()
    }

    #[test]
    fn simple_assignment() {
        use TokenKind::*;
        let toks = kinds_and_texts("q = Qubit()\n");
        let expected: Vec<(TokenKind, String)> = vec![
            (Ident, "q".into()),
            (Op, "=".into()),
            (Ident, "Qubit".into()),
            (Delim, "(".into()),
            (Delim, ")".into()),
            (Newline, "\n".into()),
            (Eof, "".into()),
        ];
        assert_eq!(toks, expected);
    }

    #[test]
    fn inconsistent_indent_reports_line_three() {
        let err = tokenize("if b:\n x = 1\n  y = 2").unwrap_err();
        assert_eq!(err.category, Category::Syntax);
        assert_eq!(err.span.line, 3);
    }

    #[test]
    fn dedent_to_unknown_level() {
        let err = tokenize("def f():\n    x = 1\n  y = 2\n").unwrap_err();
        assert_eq!(err.span.line, 3);
        assert!(err.message.contains("inconsistent"));
    }

    #[test]
    fn tabs_rejected_in_indentation() {
        let err = tokenize("def f():\n\tx = 1\n").unwrap_err();
        assert!(err.message.contains("tab"));
    }

    #[test]
    fn numbers_classified() {
        let toks = tokenize("1 2.5 3e4 .5 0x1f 7.").unwrap();
        let kinds: Vec<_> = toks.iter().take(6).map(|t| t.kind).collect();
        use TokenKind::*;
        assert_eq!(kinds, vec![Int, Float, Float, Float, Int, Float]);
    }

    #[test]
    fn unterminated_and_illegal() {
        assert!(tokenize("x = 'abc\n").unwrap_err().message.contains("unterminated"));
        assert!(tokenize("x = $\n").unwrap_err().message.contains("illegal"));
    }

    #[test]
    fn blank_lines_and_comments_skipped() {
        let toks = kinds_and_texts("# header\n\ndef f():\n    # c\n\n    pass\n");
        assert!(toks.iter().all(|(_, t)| !t.contains('#')));
        let indents = toks.iter().filter(|(k, _)| *k == TokenKind::Indent).count();
        let dedents = toks.iter().filter(|(k, _)| *k == TokenKind::Dedent).count();
        assert_eq!((indents, dedents), (1, 1));
    }

    #[test]
    fn brackets_join_lines() {
        let toks = kinds_and_texts("x = f(\n  a,\n    b)\n");
        assert_eq!(toks.iter().filter(|(k, _)| *k == TokenKind::Newline).count(), 1);
        assert!(toks.iter().all(|(k, _)| *k != TokenKind::Indent));
    }

    #[test]
    fn non_layout_spans_are_nonempty() {
        let src = "def f(q: Qubit) -> Qubit:\n    if True:\n        q = h(q)\n    return q";
        for t in tokenize(src).unwrap() {
            match t.kind {
                TokenKind::Indent | TokenKind::Dedent | TokenKind::Eof => {}
                _ => assert!(!t.span.is_empty(), "{t:?}"),
            }
            assert_eq!(&src[t.span.start..t.span.end], if t.kind == TokenKind::Indent { "" } else { t.text.as_str() });
        }
    }
}
