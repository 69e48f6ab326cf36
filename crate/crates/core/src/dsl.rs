//! The analysis script language.
//!
//! ```text
//! script    := { line } ;  line := (statement | comment | blank) NEWLINE
//! statement := IDENT "(" [ arg { "," arg } ] ")"
//! arg       := [ IDENT "=" ] value
//! value     := NUMBER | STRING | "true" | "false" | list | statement
//! list      := "[" [ value { "," value } ] "]"
//! ```
//!
//! One statement per line; `#` starts a full-line comment. Column references
//! are written `col("name")` and parse to [`Value::ColumnRef`]. Printing an
//! AST and parsing it back yields a structurally equal AST.

use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::numfmt::format_number;

const MAX_DEPTH: usize = 64;

/// 1-based position in the source text; columns count characters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone)]
pub enum Value {
    Number(f64),
    Str(String),
    Bool(bool),
    ColumnRef(String),
    List(Vec<Value>),
    Call(Call),
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        use Value::*;
        match (self, other) {
            (Number(a), Number(b)) => a.to_bits() == b.to_bits(),
            (Str(a), Str(b)) | (ColumnRef(a), ColumnRef(b)) => a == b,
            (Bool(a), Bool(b)) => a == b,
            (List(a), List(b)) => a == b,
            (Call(a), Call(b)) => a == b,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arg {
    pub keyword: Option<String>,
    pub value: Value,
}

impl Arg {
    pub fn positional(value: Value) -> Self {
        Arg { keyword: None, value }
    }

    pub fn keyword(name: impl Into<String>, value: Value) -> Self {
        Arg { keyword: Some(name.into()), value }
    }
}

/// A command invocation. The span is ignored by equality.
#[derive(Debug, Clone)]
pub struct Call {
    pub name: String,
    pub args: Vec<Arg>,
    pub span: Span,
}

impl PartialEq for Call {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.args == other.args
    }
}

impl Call {
    pub fn new(name: impl Into<String>, args: Vec<Arg>) -> Self {
        Call { name: name.into(), args, span: Span::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScriptAst {
    pub statements: Vec<Call>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    /// Offending token text; empty at end of input.
    pub token: String,
    pub message: String,
}

// ---------------------------------------------------------------- printing

pub fn write_string_literal(out: &mut String, s: &str) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
}

fn write_value(out: &mut String, v: &Value) {
    match v {
        Value::Number(x) => out.push_str(&format_number(*x)),
        Value::Str(s) => write_string_literal(out, s),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::ColumnRef(name) => {
            out.push_str("col(");
            write_string_literal(out, name);
            out.push(')');
        }
        Value::List(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_value(out, item);
            }
            out.push(']');
        }
        Value::Call(c) => write_call(out, c),
    }
}

fn write_call(out: &mut String, c: &Call) {
    out.push_str(&c.name);
    out.push('(');
    for (i, arg) in c.args.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        if let Some(k) = &arg.keyword {
            let _ = write!(out, "{k} = ");
        }
        write_value(out, &arg.value);
    }
    out.push(')');
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_value(&mut s, self);
        f.write_str(&s)
    }
}

impl fmt::Display for Call {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_call(&mut s, self);
        f.write_str(&s)
    }
}

impl fmt::Display for ScriptAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.statements {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------- lexing

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    Str(String),
    Bool(bool),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Equals,
    End,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    text: String,
    column: usize,
}

fn lex_line(line: &str, line_no: usize) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = line.chars().collect();
    let err = |column: usize, token: String, message: String| ParseError { line: line_no, column, token, message };
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        let single = |tok| Token { tok, text: c.to_string(), column };
        match c {
            ' ' | '\t' | '\r' => {
                i += 1;
                continue;
            }
            '(' => out.push(single(Tok::LParen)),
            ')' => out.push(single(Tok::RParen)),
            '[' => out.push(single(Tok::LBracket)),
            ']' => out.push(single(Tok::RBracket)),
            ',' => out.push(single(Tok::Comma)),
            '=' => out.push(single(Tok::Equals)),
            '"' => {
                let mut s = String::new();
                let mut j = i + 1;
                loop {
                    match chars.get(j) {
                        None => {
                            let text: String = chars[i..].iter().collect();
                            return Err(err(column, text, "unterminated string".into()));
                        }
                        Some('"') => break,
                        Some('\\') => {
                            match chars.get(j + 1) {
                                Some('"') => s.push('"'),
                                Some('\\') => s.push('\\'),
                                Some('n') => s.push('\n'),
                                Some(other) => {
                                    return Err(err(j + 1, format!("\\{other}"), format!("invalid escape `\\{other}`")))
                                }
                                None => {
                                    let text: String = chars[i..].iter().collect();
                                    return Err(err(column, text, "unterminated string".into()));
                                }
                            }
                            j += 2;
                        }
                        Some(&ch) => {
                            s.push(ch);
                            j += 1;
                        }
                    }
                }
                let text: String = chars[i..=j].iter().collect();
                out.push(Token { tok: Tok::Str(s), text, column });
                i = j + 1;
                continue;
            }
            c if c == '+' || c == '-' || c.is_ascii_digit() => {
                let start = i;
                let mut j = i;
                if c == '+' || c == '-' {
                    j += 1;
                }
                let digits = |j: &mut usize| {
                    let s = *j;
                    while chars.get(*j).is_some_and(|d| d.is_ascii_digit()) {
                        *j += 1;
                    }
                    *j > s
                };
                let mut ok = digits(&mut j);
                if ok && chars.get(j) == Some(&'.') {
                    j += 1;
                    ok = digits(&mut j);
                }
                if ok && matches!(chars.get(j), Some('e' | 'E')) {
                    j += 1;
                    if matches!(chars.get(j), Some('+' | '-')) {
                        j += 1;
                    }
                    ok = digits(&mut j);
                }
                // A number must not run straight into an identifier character.
                while chars.get(j).is_some_and(|d| d.is_alphanumeric() || *d == '_' || *d == '.') {
                    ok = false;
                    j += 1;
                }
                let text: String = chars[start..j.max(start + 1)].iter().collect();
                if !ok {
                    return Err(err(column, text.clone(), format!("malformed number `{text}`")));
                }
                let x: f64 =
                    text.parse().map_err(|_| err(column, text.clone(), format!("malformed number `{text}`")))?;
                if !x.is_finite() {
                    return Err(err(column, text.clone(), format!("number `{text}` is out of range")));
                }
                out.push(Token { tok: Tok::Number(x), text, column });
                i = j.max(start + 1);
                continue;
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut j = i;
                while chars.get(j).is_some_and(|d| d.is_alphanumeric() || *d == '_') {
                    j += 1;
                }
                let text: String = chars[i..j].iter().collect();
                let tok = match text.as_str() {
                    "true" => Tok::Bool(true),
                    "false" => Tok::Bool(false),
                    _ => Tok::Ident(text.clone()),
                };
                out.push(Token { tok, text, column });
                i = j;
                continue;
            }
            other => return Err(err(column, other.to_string(), format!("unexpected character `{other}`"))),
        }
        i += 1;
    }
    out.push(Token { tok: Tok::End, text: String::new(), column: chars.len() + 1 });
    Ok(out)
}

// ---------------------------------------------------------------- parsing

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    line: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if t.tok != Tok::End {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, t: &Token) -> ParseError {
        let message = if t.tok == Tok::End {
            "unexpected end of input".to_string()
        } else {
            format!("unexpected token `{}`", t.text)
        };
        ParseError { line: self.line, column: t.column, token: t.text.clone(), message }
    }

    fn expect(&mut self, want: Tok) -> Result<Token, ParseError> {
        let t = self.bump();
        if t.tok == want {
            Ok(t)
        } else {
            Err(self.unexpected(&t))
        }
    }

    fn statement(&mut self, depth: usize) -> Result<Call, ParseError> {
        let t = self.bump();
        let Tok::Ident(name) = t.tok.clone() else {
            return Err(self.unexpected(&t));
        };
        self.call_rest(name, t.column, depth)
    }

    fn call_rest(&mut self, name: String, column: usize, depth: usize) -> Result<Call, ParseError> {
        if depth > MAX_DEPTH {
            return Err(ParseError { line: self.line, column, token: name, message: "nesting too deep".into() });
        }
        self.expect(Tok::LParen)?;
        let mut args = Vec::new();
        if self.peek().tok == Tok::RParen {
            self.bump();
        } else {
            loop {
                args.push(self.arg(depth)?);
                let t = self.bump();
                match t.tok {
                    Tok::Comma => continue,
                    Tok::RParen => break,
                    _ => return Err(self.unexpected(&t)),
                }
            }
        }
        Ok(Call { name, args, span: Span { line: self.line, column } })
    }

    fn arg(&mut self, depth: usize) -> Result<Arg, ParseError> {
        if let Tok::Ident(name) = &self.peek().tok {
            if self.tokens.get(self.pos + 1).map(|t| &t.tok) == Some(&Tok::Equals) {
                let name = name.clone();
                self.pos += 2;
                return Ok(Arg { keyword: Some(name), value: self.value(depth)? });
            }
        }
        Ok(Arg { keyword: None, value: self.value(depth)? })
    }

    fn value(&mut self, depth: usize) -> Result<Value, ParseError> {
        let t = self.bump();
        match t.tok {
            Tok::Number(x) => Ok(Value::Number(x)),
            Tok::Str(ref s) => Ok(Value::Str(s.clone())),
            Tok::Bool(b) => Ok(Value::Bool(b)),
            Tok::LBracket => {
                if depth + 1 > MAX_DEPTH {
                    return Err(ParseError {
                        line: self.line,
                        column: t.column,
                        token: t.text,
                        message: "nesting too deep".into(),
                    });
                }
                let mut items = Vec::new();
                if self.peek().tok == Tok::RBracket {
                    self.bump();
                    return Ok(Value::List(items));
                }
                loop {
                    items.push(self.value(depth + 1)?);
                    let t = self.bump();
                    match t.tok {
                        Tok::Comma => continue,
                        Tok::RBracket => return Ok(Value::List(items)),
                        _ => return Err(self.unexpected(&t)),
                    }
                }
            }
            Tok::Ident(name) => {
                let call = self.call_rest(name, t.column, depth + 1)?;
                if call.name == "col" {
                    return match call.args.as_slice() {
                        [Arg { keyword: None, value: Value::Str(s) }] => Ok(Value::ColumnRef(s.clone())),
                        _ => Err(ParseError {
                            line: self.line,
                            column: t.column,
                            token: "col".into(),
                            message: "col() takes exactly one string argument".into(),
                        }),
                    };
                }
                Ok(Value::Call(call))
            }
            _ => Err(self.unexpected(&t)),
        }
    }
}

fn parse_line(line: &str, line_no: usize) -> Result<Call, ParseError> {
    let tokens = lex_line(line, line_no)?;
    let mut p = Parser { tokens, pos: 0, line: line_no };
    let call = p.statement(0)?;
    if call.name == "col" {
        return Err(ParseError {
            line: line_no,
            column: call.span.column,
            token: "col".into(),
            message: "a column reference is not a statement".into(),
        });
    }
    let t = p.bump();
    if t.tok != Tok::End {
        return Err(p.unexpected(&t));
    }
    Ok(call)
}

fn is_skippable(line: &str) -> bool {
    let t = line.trim_start();
    t.trim_end().is_empty() || t.starts_with('#')
}

pub fn parse_script(text: &str) -> Result<ScriptAst, ParseError> {
    let mut statements = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if !is_skippable(line) {
            statements.push(parse_line(line, i + 1)?);
        }
    }
    Ok(ScriptAst { statements })
}

/// Parses text that must contain exactly one statement.
pub fn parse_statement(text: &str) -> Result<Call, ParseError> {
    let ast = parse_script(text)?;
    let n_lines = text.lines().count().max(1);
    match <[Call; 1]>::try_from(ast.statements) {
        Ok([call]) => Ok(call),
        Err(v) if v.is_empty() => {
            Err(ParseError { line: n_lines, column: 1, token: String::new(), message: "expected a statement".into() })
        }
        Err(v) => Err(ParseError {
            line: v[1].span.line,
            column: v[1].span.column,
            token: v[1].name.clone(),
            message: "expected exactly one statement".into(),
        }),
    }
}
