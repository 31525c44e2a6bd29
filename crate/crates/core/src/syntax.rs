//! Text syntax for formulas and model files.
//!
//! Formulas use ASCII tokens: `false`, `&`, `|`, `->`, `<>`, `[]` and
//! variables `p1`, `p2`, .... Binding strength, tightest first: modalities,
//! `&`, `|`, `->`. `&` and `|` associate to the left, `->` to the right.
//!
//! Model files are line oriented:
//!
//! ```text
//! # comment
//! kind fs            # or mipc; fs when absent
//! world w0
//! world w1
//! le w0 w1           # w0 R w1; closed reflexively and transitively
//! point w0 a         # a ∈ Δ_w0
//! s w0 a a           # (a, a) ∈ S_w0
//! val w0 p1 a        # a ∈ V(w0, p1)
//! refutes w0 a       # certificate trailer
//! ```

use std::collections::HashMap;
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::formula::{Formula, Kind, VarIndex};
use crate::semantics::{FiniteFSModel, Frame, FrameParts, LogicKind, Violation};

/// Byte range `begin..end` of the input.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SourceSpan {
    pub begin: usize,
    pub end: usize,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("{message} at {}..{}", span.begin, span.end)]
pub struct ParseError {
    pub span: SourceSpan,
    pub message: String,
}

/// Deepest parenthesis nesting the parser accepts.
pub const MAX_NESTING: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Token {
    False,
    And,
    Or,
    Arrow,
    Diamond,
    Box,
    LParen,
    RParen,
    Var(VarIndex),
    End,
}

impl Token {
    fn describe(self) -> String {
        match self {
            Token::False => "`false`".into(),
            Token::And => "`&`".into(),
            Token::Or => "`|`".into(),
            Token::Arrow => "`->`".into(),
            Token::Diamond => "`<>`".into(),
            Token::Box => "`[]`".into(),
            Token::LParen => "`(`".into(),
            Token::RParen => "`)`".into(),
            Token::Var(i) => format!("`p{i}`"),
            Token::End => "end of input".into(),
        }
    }
}

struct Parser<'a> {
    text: &'a str,
    pos: usize,
    peeked: Option<(Token, SourceSpan)>,
    nesting: usize,
}

impl<'a> Parser<'a> {
    fn error(span: SourceSpan, message: impl Into<String>) -> ParseError {
        ParseError { span, message: message.into() }
    }

    fn lex(&mut self) -> Result<(Token, SourceSpan), ParseError> {
        let bytes = self.text.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let begin = self.pos;
        let rest = &self.text[begin..];
        let fixed = [
            ("false", Token::False),
            ("->", Token::Arrow),
            ("<>", Token::Diamond),
            ("[]", Token::Box),
            ("&", Token::And),
            ("|", Token::Or),
            ("(", Token::LParen),
            (")", Token::RParen),
        ];
        if rest.is_empty() {
            return Ok((Token::End, SourceSpan { begin, end: begin }));
        }
        for (text, tok) in fixed {
            if let Some(after) = rest.strip_prefix(text) {
                let end = begin + text.len();
                if tok == Token::False && after.starts_with(|c: char| c.is_ascii_alphanumeric()) {
                    break;
                }
                self.pos = end;
                return Ok((tok, SourceSpan { begin, end }));
            }
        }
        if let Some(digits) = rest.strip_prefix('p') {
            let n = digits.bytes().take_while(u8::is_ascii_digit).count();
            let end = begin + 1 + n;
            let span = SourceSpan { begin, end };
            if n == 0 || digits.starts_with('0') {
                return Err(Self::error(span, "expected a variable `p<n>` with n >= 1"));
            }
            let index = digits[..n]
                .parse::<VarIndex>()
                .map_err(|_| Self::error(span, "variable index too large"))?;
            self.pos = end;
            return Ok((Token::Var(index), span));
        }
        let c = rest.chars().next().expect("nonempty");
        Err(Self::error(
            SourceSpan { begin, end: begin + c.len_utf8() },
            format!("unexpected character `{c}`"),
        ))
    }

    fn peek(&mut self) -> Result<(Token, SourceSpan), ParseError> {
        if self.peeked.is_none() {
            self.peeked = Some(self.lex()?);
        }
        Ok(self.peeked.expect("just filled"))
    }

    fn next(&mut self) -> Result<(Token, SourceSpan), ParseError> {
        let t = self.peek()?;
        self.peeked = None;
        Ok(t)
    }

    fn implication(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.disjunction()?;
        if self.peek()?.0 == Token::Arrow {
            self.next()?;
            let rhs = self.implication()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula, ParseError> {
        let mut acc = self.conjunction()?;
        while self.peek()?.0 == Token::Or {
            self.next()?;
            acc = Formula::or(acc, self.conjunction()?);
        }
        Ok(acc)
    }

    fn conjunction(&mut self) -> Result<Formula, ParseError> {
        let mut acc = self.unary()?;
        while self.peek()?.0 == Token::And {
            self.next()?;
            acc = Formula::and(acc, self.unary()?);
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        let mut prefix = Vec::new();
        while let t @ (Token::Diamond | Token::Box) = self.peek()?.0 {
            self.next()?;
            prefix.push(t);
        }
        let mut f = self.atom()?;
        for t in prefix.into_iter().rev() {
            f = if t == Token::Diamond { Formula::diamond(f) } else { Formula::boxed(f) };
        }
        Ok(f)
    }

    fn atom(&mut self) -> Result<Formula, ParseError> {
        let (tok, span) = self.next()?;
        match tok {
            Token::False => Ok(Formula::bottom()),
            Token::Var(i) => Ok(Formula::var(i)),
            Token::LParen => {
                self.nesting += 1;
                if self.nesting > MAX_NESTING {
                    return Err(Self::error(span, format!("parentheses nested deeper than {MAX_NESTING}")));
                }
                let inner = self.implication()?;
                self.nesting -= 1;
                let (close, cspan) = self.next()?;
                if close != Token::RParen {
                    return Err(Self::error(cspan, format!("expected `)`, found {}", close.describe())));
                }
                Ok(inner)
            }
            other => Err(Self::error(
                span,
                format!("expected `false`, a variable, `<>`, `[]` or `(`, found {}", other.describe()),
            )),
        }
    }
}

pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let mut p = Parser { text, pos: 0, peeked: None, nesting: 0 };
    let f = p.implication()?;
    let (tok, span) = p.next()?;
    if tok != Token::End {
        return Err(Parser::error(span, format!("expected an operator or end of input, found {}", tok.describe())));
    }
    Ok(f)
}

const PREC_IMP: u8 = 1;
const PREC_OR: u8 = 2;
const PREC_AND: u8 = 3;
const PREC_UNARY: u8 = 4;
const PREC_ATOM: u8 = 5;

fn write_formula(out: &mut impl fmt::Write, f: &Formula, min_prec: u8) -> fmt::Result {
    let prec = match f.kind() {
        Kind::Var(_) | Kind::Bottom => PREC_ATOM,
        Kind::Diamond(_) | Kind::Box(_) => PREC_UNARY,
        Kind::And(..) => PREC_AND,
        Kind::Or(..) => PREC_OR,
        Kind::Implies(..) => PREC_IMP,
    };
    let paren = prec < min_prec;
    if paren {
        out.write_char('(')?;
    }
    match f.kind() {
        Kind::Var(i) => write!(out, "p{i}")?,
        Kind::Bottom => out.write_str("false")?,
        Kind::Diamond(a) => {
            out.write_str("<>")?;
            write_formula(out, a, PREC_UNARY)?;
        }
        Kind::Box(a) => {
            out.write_str("[]")?;
            write_formula(out, a, PREC_UNARY)?;
        }
        Kind::And(a, b) => {
            write_formula(out, a, PREC_AND)?;
            out.write_str(" & ")?;
            write_formula(out, b, PREC_UNARY)?;
        }
        Kind::Or(a, b) => {
            write_formula(out, a, PREC_OR)?;
            out.write_str(" | ")?;
            write_formula(out, b, PREC_AND)?;
        }
        Kind::Implies(a, b) => {
            write_formula(out, a, PREC_OR)?;
            out.write_str(" -> ")?;
            write_formula(out, b, PREC_IMP)?;
        }
    }
    if paren {
        out.write_char(')')?;
    }
    Ok(())
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_formula(f, self, PREC_IMP)
    }
}

/// Prints with the fewest parentheses that re-parse to the same tree.
pub fn print_formula(f: &Formula) -> String {
    f.to_string()
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("invalid model: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

/// A parsed model file, with the `refutes` trailer if present.
#[derive(Clone, Debug)]
pub struct ModelFile {
    pub model: FiniteFSModel,
    pub refutes: Option<(usize, usize)>,
}

pub fn parse_model(text: &str) -> Result<FiniteFSModel, ModelError> {
    parse_model_file(text).map(|f| f.model)
}

pub fn parse_model_file(text: &str) -> Result<ModelFile, ModelError> {
    let mut parts = FrameParts::default();
    let mut worlds: HashMap<String, usize> = HashMap::new();
    let mut points: HashMap<String, usize> = HashMap::new();
    let mut memberships = Vec::new();
    let mut refutes_names = None;

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("");
        let words: Vec<&str> = content.split_whitespace().collect();
        let Some((&head, args)) = words.split_first() else { continue };
        let err = |message: String| ModelError::Syntax { line, message };
        let arity = |n: usize| {
            if args.len() == n {
                Ok(())
            } else {
                Err(err(format!("`{head}` takes {n} argument(s), found {}", args.len())))
            }
        };
        let world = |name: &str| worlds.get(name).copied().ok_or_else(|| err(format!("unknown world `{name}`")));
        let point = |name: &str| points.get(name).copied().ok_or_else(|| err(format!("unknown point `{name}`")));
        match head {
            "kind" => {
                arity(1)?;
                parts.kind = match args[0] {
                    "fs" | "FS" => LogicKind::Fs,
                    "mipc" | "MIPC" => LogicKind::Mipc,
                    other => return Err(err(format!("unknown kind `{other}`, expected fs or mipc"))),
                };
            }
            "world" => {
                arity(1)?;
                if worlds.contains_key(args[0]) {
                    return Err(err(format!("world `{}` declared twice", args[0])));
                }
                worlds.insert(args[0].to_string(), parts.world_names.len());
                parts.world_names.push(args[0].to_string());
                parts.domain.push(Vec::new());
                parts.access.push(Vec::new());
            }
            "le" => {
                arity(2)?;
                let pair = (world(args[0])?, world(args[1])?);
                parts.order.push(pair);
            }
            "point" => {
                arity(2)?;
                let w = world(args[0])?;
                let next = points.len();
                let x = *points.entry(args[1].to_string()).or_insert(next);
                if x == parts.point_names.len() {
                    parts.point_names.push(args[1].to_string());
                }
                parts.domain[w].push(x);
            }
            "s" => {
                arity(3)?;
                let w = world(args[0])?;
                let pair = (point(args[1])?, point(args[2])?);
                parts.access[w].push(pair);
            }
            "val" => {
                arity(3)?;
                let w = world(args[0])?;
                let var = args[1]
                    .strip_prefix('p')
                    .and_then(|d| d.parse::<VarIndex>().ok())
                    .filter(|&i| i >= 1 && !args[1][1..].starts_with('0'))
                    .ok_or_else(|| err(format!("expected a variable `p<n>`, found `{}`", args[1])))?;
                memberships.push((w, var, point(args[2])?));
            }
            "refutes" => {
                arity(2)?;
                refutes_names = Some((world(args[0])?, point(args[1])?));
            }
            other => return Err(err(format!("unknown directive `{other}`"))),
        }
    }

    let model = FiniteFSModel::new(Frame::from_parts(parts), memberships);
    let violations = model.validate();
    if !violations.is_empty() {
        return Err(ModelError::Invalid(violations));
    }
    Ok(ModelFile { model, refutes: refutes_names })
}

/// Renders a model in the file format; `parse_model` reads it back to an
/// equal model.
pub fn print_model(model: &FiniteFSModel) -> String {
    let f = model.frame();
    let mut out = String::new();
    let _ = writeln!(out, "kind {}", f.kind());
    for w in 0..f.num_worlds() {
        let _ = writeln!(out, "world {}", f.world_name(w));
    }
    for w in 0..f.num_worlds() {
        for v in f.above(w).ones().filter(|&v| v != w) {
            let _ = writeln!(out, "le {} {}", f.world_name(w), f.world_name(v));
        }
    }
    // Point lines in point order so that re-parsing interns the same ids.
    for x in 0..f.num_points() {
        for w in (0..f.num_worlds()).filter(|&w| f.domain(w).contains(x)) {
            let _ = writeln!(out, "point {} {}", f.world_name(w), f.point_name(x));
        }
    }
    for w in 0..f.num_worlds() {
        for x in 0..f.num_points() {
            for y in f.access(w, x).ones() {
                let _ = writeln!(out, "s {} {} {}", f.world_name(w), f.point_name(x), f.point_name(y));
            }
        }
    }
    for var in model.valued_vars() {
        for w in 0..f.num_worlds() {
            for x in model.extension(w, var).ones() {
                let _ = writeln!(out, "val {} p{} {}", f.world_name(w), var, f.point_name(x));
            }
        }
    }
    out
}

/// [`print_model`] followed by the `refutes <world> <point>` trailer.
pub fn print_certificate(model: &FiniteFSModel, world: usize, point: usize) -> String {
    let mut out = print_model(model);
    let f = model.frame();
    let _ = writeln!(out, "refutes {} {}", f.world_name(world), f.point_name(point));
    out
}
