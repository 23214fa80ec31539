use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use super::{validate, Action, ActionSet, Diagnostic, Process, Spec, RESERVED_NAMES};
use crate::time::{Duration, TimeError};

const KEYWORDS: &[&str] = &[
    "stop", "skip", "delay", "rho", "in", "process", "endproc", "durations", "main", "const",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Position {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{pos}: expected {}, found {found}", expected.join(" or "))]
    Syntax {
        pos: Position,
        expected: Vec<String>,
        found: String,
    },
    #[error("{pos}: unexpected character `{ch}`")]
    BadChar { pos: Position, ch: char },
    #[error("{pos}: `{name}` is reserved")]
    Reserved { pos: Position, name: String },
    #[error("{pos}: {source}")]
    Number { pos: Position, source: TimeError },
    #[error("{pos}: unknown constant `{name}`")]
    UnknownConstant { pos: Position, name: String },
    #[error("{pos}: process `{name}` defined twice")]
    DuplicateDefinition { pos: Position, name: String },
    #[error("no `main` declaration and more than one process definition")]
    MissingMain,
    #[error("invalid specification: {}", render_diagnostics(.0))]
    Invalid(Vec<Located>),
}

/// A validation diagnostic with the position of the definition it concerns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Located {
    pub pos: Option<Position>,
    pub diagnostic: Diagnostic,
}

fn render_diagnostics(ds: &[Located]) -> String {
    ds.iter()
        .map(|d| match d.pos {
            Some(p) => format!("{p}: {}", d.diagnostic),
            None => d.diagnostic.to_string(),
        })
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Num(String),
    Semi,
    Plus,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBrack,
    RBrack,
    Bar,
    Gt,
    Backslash,
    Comma,
    Eq,
    Assign,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(s) => return write!(f, "`{s}`"),
            Tok::Num(s) => return write!(f, "number `{s}`"),
            Tok::Semi => "`;`",
            Tok::Plus => "`+`",
            Tok::LParen => "`(`",
            Tok::RParen => "`)`",
            Tok::LBrace => "`{`",
            Tok::RBrace => "`}`",
            Tok::LBrack => "`[`",
            Tok::RBrack => "`]`",
            Tok::Bar => "`|`",
            Tok::Gt => "`>`",
            Tok::Backslash => "`\\`",
            Tok::Comma => "`,`",
            Tok::Eq => "`=`",
            Tok::Assign => "`:=`",
            Tok::Eof => "end of input",
        };
        f.write_str(s)
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, Position)>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let pos = Position { line, column: col };
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        let tok = if c.is_alphabetic() || c == '_' {
            while i < chars.len()
                && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '-')
            {
                i += 1;
            }
            Tok::Ident(chars[start..i].iter().collect())
        } else if c.is_ascii_digit() {
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i + 1 < chars.len() && (chars[i] == '.' || chars[i] == '/') && chars[i + 1].is_ascii_digit() {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            Tok::Num(chars[start..i].iter().collect())
        } else {
            i += 1;
            match c {
                ';' => Tok::Semi,
                '+' => Tok::Plus,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '{' => Tok::LBrace,
                '}' => Tok::RBrace,
                '[' => Tok::LBrack,
                ']' => Tok::RBrack,
                '|' => Tok::Bar,
                '>' => Tok::Gt,
                '\\' => Tok::Backslash,
                ',' => Tok::Comma,
                '=' => Tok::Eq,
                ':' if chars.get(i) == Some(&'=') => {
                    i += 1;
                    Tok::Assign
                }
                _ => return Err(ParseError::BadChar { pos, ch: c }),
            }
        };
        col += i - start;
        out.push((tok, pos));
    }
    out.push((Tok::Eof, Position { line, column: col }));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, Position)>,
    at: usize,
    consts: BTreeMap<String, Duration>,
    overrides: &'a BTreeMap<String, Duration>,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.at + k).min(self.toks.len() - 1)].0
    }

    fn pos(&self) -> Position {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn fail<T>(&self, expected: &[&str]) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            pos: self.pos(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().to_string(),
        })
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.fail(&[&tok.to_string()])
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.is_keyword(kw) {
            self.bump();
            Ok(())
        } else {
            self.fail(&[&format!("`{kw}`")])
        }
    }

    /// A user identifier: not a keyword, not reserved.
    fn name(&mut self, what: &str) -> Result<String, ParseError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Ident(s) if RESERVED_NAMES.contains(&s.as_str()) => {
                Err(ParseError::Reserved { pos, name: s })
            }
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(s)
            }
            _ => self.fail(&[what]),
        }
    }

    fn number(&mut self) -> Result<Duration, ParseError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Num(s) => {
                self.bump();
                s.parse().map_err(|source| ParseError::Number { pos, source })
            }
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                self.consts
                    .get(&s)
                    .copied()
                    .ok_or(ParseError::UnknownConstant { pos, name: s })
            }
            _ => self.fail(&["number", "constant name"]),
        }
    }

    fn braced_number(&mut self) -> Result<Duration, ParseError> {
        self.expect(Tok::LBrace)?;
        let d = self.number()?;
        self.expect(Tok::RBrace)?;
        Ok(d)
    }

    fn action_list(&mut self, close: Tok) -> Result<ActionSet, ParseError> {
        let mut set = ActionSet::new();
        if *self.peek() == close {
            self.bump();
            return Ok(set);
        }
        loop {
            set.insert(Action::Visible(self.name("action name")?));
            match self.peek() {
                Tok::Comma => {
                    self.bump();
                }
                t if *t == close => {
                    self.bump();
                    return Ok(set);
                }
                _ => return self.fail(&["`,`", &close.to_string()]),
            }
        }
    }

    /// Optional gate list after a process name; gates carry no meaning here.
    fn skip_gates(&mut self) -> Result<(), ParseError> {
        if *self.peek() == Tok::LBrack && matches!(self.peek_at(1), Tok::Ident(_) | Tok::RBrack) {
            self.bump();
            self.action_list(Tok::RBrack)?;
        }
        Ok(())
    }

    fn process(&mut self) -> Result<Process, ParseError> {
        let mut left = self.interrupt()?;
        while *self.peek() == Tok::Plus {
            self.bump();
            let right = self.interrupt()?;
            left = Process::choice(left, right);
        }
        Ok(left)
    }

    fn interrupt(&mut self) -> Result<Process, ParseError> {
        let mut left = self.parallel()?;
        while *self.peek() == Tok::LBrack && *self.peek_at(1) == Tok::Gt {
            self.bump();
            self.bump();
            let right = self.parallel()?;
            left = Process::interrupt(left, right);
        }
        Ok(left)
    }

    fn parallel(&mut self) -> Result<Process, ParseError> {
        let mut left = self.hiding()?;
        while *self.peek() == Tok::Bar {
            self.bump();
            let sync = match self.peek() {
                Tok::Bar => {
                    self.bump();
                    self.expect(Tok::Bar)?;
                    ActionSet::new()
                }
                Tok::LBrack => {
                    self.bump();
                    let set = self.action_list(Tok::RBrack)?;
                    self.expect(Tok::Bar)?;
                    set
                }
                _ => return self.fail(&["`||`", "`[`"]),
            };
            let right = self.hiding()?;
            left = Process::par(left, sync, right);
        }
        Ok(left)
    }

    fn hiding(&mut self) -> Result<Process, ParseError> {
        let mut p = self.prefixed()?;
        while *self.peek() == Tok::Backslash {
            self.bump();
            self.expect(Tok::LBrace)?;
            let set = self.action_list(Tok::RBrace)?;
            p = Process::hide(p, set);
        }
        Ok(p)
    }

    fn prefixed(&mut self) -> Result<Process, ParseError> {
        if self.is_keyword("delay") {
            self.bump();
            let d = self.braced_number()?;
            let body = self.prefixed()?;
            return Ok(Process::Delay(d, Arc::new(body)));
        }
        if self.is_keyword("rho") {
            self.bump();
            let a = self.name("action name")?;
            self.expect(Tok::Assign)?;
            let by = self.process()?;
            self.keyword("in")?;
            let body = self.prefixed()?;
            return Ok(Process::Refine(Action::Visible(a), Arc::new(by), Arc::new(body)));
        }
        if let Tok::Ident(s) = self.peek() {
            if !KEYWORDS.contains(&s.as_str()) {
                let is_prefix = matches!(self.peek_at(1), Tok::Semi | Tok::LBrace);
                if is_prefix {
                    let a = self.name("action name")?;
                    let bound = if *self.peek() == Tok::LBrace {
                        self.braced_number()?
                    } else {
                        Duration::ZERO
                    };
                    self.expect(Tok::Semi)?;
                    let cont = self.prefixed()?;
                    return Ok(Process::Prefix(Action::Visible(a), bound, Arc::new(cont)));
                }
            }
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Process, ParseError> {
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let p = self.process()?;
                self.expect(Tok::RParen)?;
                Ok(p)
            }
            Tok::Ident(s) if s == "stop" => {
                self.bump();
                Ok(Process::Stop)
            }
            Tok::Ident(s) if s == "skip" => {
                self.bump();
                let bound = if *self.peek() == Tok::LBrace {
                    self.braced_number()?
                } else {
                    Duration::ZERO
                };
                Ok(Process::Skip(bound))
            }
            Tok::Ident(_) => {
                let name = self.name("process expression")?;
                self.skip_gates()?;
                Ok(Process::Ref(name))
            }
            _ => self.fail(&["process expression"]),
        }
    }

    fn spec(&mut self) -> Result<(Spec, BTreeMap<String, Position>), ParseError> {
        let mut definitions = BTreeMap::new();
        let mut positions = BTreeMap::new();
        let mut durations = BTreeMap::new();
        let mut root = None;
        loop {
            match self.peek().clone() {
                Tok::Eof => break,
                Tok::Ident(k) if k == "const" => {
                    self.bump();
                    let name = self.name("constant name")?;
                    self.expect(Tok::Eq)?;
                    let value = self.number()?;
                    self.expect(Tok::Semi)?;
                    let value = self.overrides.get(&name).copied().unwrap_or(value);
                    self.consts.insert(name, value);
                }
                Tok::Ident(k) if k == "durations" => {
                    self.bump();
                    while *self.peek() != Tok::Semi {
                        let name = self.name("action name")?;
                        self.expect(Tok::Eq)?;
                        durations.insert(name, self.number()?);
                        if *self.peek() == Tok::Comma {
                            self.bump();
                        }
                    }
                    self.bump();
                }
                Tok::Ident(k) if k == "main" => {
                    self.bump();
                    root = Some(self.name("process name")?);
                    self.expect(Tok::Semi)?;
                }
                Tok::Ident(k) if k == "process" => {
                    self.bump();
                    let pos = self.pos();
                    let name = self.name("process name")?;
                    self.skip_gates()?;
                    self.expect(Tok::Assign)?;
                    let body = self.process()?;
                    self.keyword("endproc")?;
                    if definitions.insert(name.clone(), body).is_some() {
                        return Err(ParseError::DuplicateDefinition { pos, name });
                    }
                    positions.insert(name, pos);
                }
                _ => return self.fail(&["`const`", "`durations`", "`main`", "`process`"]),
            }
        }
        let root = match root {
            Some(r) => r,
            None if definitions.len() == 1 => definitions.keys().next().cloned().unwrap_or_default(),
            None => return Err(ParseError::MissingMain),
        };
        Ok((Spec { definitions, durations, root }, positions))
    }
}

/// Parses a `.dcsp` specification and validates it.
pub fn parse_spec(text: &str) -> Result<Spec, ParseError> {
    parse_spec_with(text, &BTreeMap::new())
}

/// Like [`parse_spec`], with `const` values replaced by `overrides`.
pub fn parse_spec_with(
    text: &str,
    overrides: &BTreeMap<String, Duration>,
) -> Result<Spec, ParseError> {
    let mut p = Parser { toks: lex(text)?, at: 0, consts: BTreeMap::new(), overrides };
    let (spec, positions) = p.spec()?;
    let diagnostics = validate(&spec);
    if diagnostics.is_empty() {
        Ok(spec)
    } else {
        Err(ParseError::Invalid(
            diagnostics
                .into_iter()
                .map(|d| Located {
                    pos: d.definition.as_ref().and_then(|n| positions.get(n).copied()),
                    diagnostic: d,
                })
                .collect(),
        ))
    }
}

/// Parses a single process expression (no definitions, no validation).
pub fn parse_process(text: &str) -> Result<Process, ParseError> {
    let empty = BTreeMap::new();
    let mut p = Parser { toks: lex(text)?, at: 0, consts: BTreeMap::new(), overrides: &empty };
    let proc = p.process()?;
    if *p.peek() != Tok::Eof {
        return p.fail(&["end of input"]);
    }
    Ok(proc)
}
