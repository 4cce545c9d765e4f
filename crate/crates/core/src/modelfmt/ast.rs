//! Generic block/attribute syntax tree. Knows nothing about the meaning of
//! keywords; see `decode` for that.

use super::lexer::{Tok, Token};
use crate::diag::{Diagnostic, SourceSpan};

#[derive(Debug, Clone)]
pub(crate) struct Block {
    pub keyword: String,
    pub labels: Vec<String>,
    pub span: SourceSpan,
    pub items: Vec<Item>,
}

#[derive(Debug, Clone)]
pub(crate) enum Item {
    Attr(Attr),
    Block(Block),
}

#[derive(Debug, Clone)]
pub(crate) struct Attr {
    pub key: String,
    pub span: SourceSpan,
    pub value: Value,
}

#[derive(Debug, Clone)]
pub(crate) struct Value {
    pub kind: ValueKind,
    pub span: SourceSpan,
}

#[derive(Debug, Clone)]
pub(crate) enum ValueKind {
    Num(String),
    Str(String),
    Ident(String),
    List(Vec<Value>),
    Tuple(Vec<Value>),
    /// `name(args...)` with an optional trailing `seed N`.
    Call {
        name: String,
        args: Vec<Value>,
        seed: Option<Box<Value>>,
    },
}

impl ValueKind {
    pub(crate) fn describe(&self) -> &'static str {
        match self {
            ValueKind::Num(_) => "number",
            ValueKind::Str(_) => "string",
            ValueKind::Ident(_) => "keyword",
            ValueKind::List(_) => "list",
            ValueKind::Tuple(_) => "tuple",
            ValueKind::Call { .. } => "constructor",
        }
    }
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    file: &'a str,
}

type PResult<T> = Result<T, Diagnostic>;

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let idx = (self.pos + offset).min(self.tokens.len() - 1);
        &self.tokens[idx].tok
    }

    fn span(&self) -> SourceSpan {
        let t = &self.tokens[self.pos];
        SourceSpan::new(self.file, t.line, t.column)
    }

    fn next(&mut self) -> &Token {
        let t = &self.tokens[self.pos];
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, msg: impl Into<String>) -> Diagnostic {
        Diagnostic::error("P002", msg).at(self.span())
    }

    fn expect(&mut self, want: Tok) -> PResult<()> {
        if *self.peek() == want {
            self.next();
            Ok(())
        } else {
            Err(self.error(format!(
                "expected {}, found {}",
                want.describe(),
                self.peek().describe()
            )))
        }
    }

    fn file(&mut self) -> PResult<Vec<Block>> {
        let mut blocks = Vec::new();
        while *self.peek() != Tok::Eof {
            blocks.push(self.block()?);
        }
        Ok(blocks)
    }

    fn block(&mut self) -> PResult<Block> {
        let span = self.span();
        let keyword = match self.peek() {
            Tok::Ident(word) => word.clone(),
            other => return Err(self.error(format!("expected block keyword, found {}", other.describe()))),
        };
        self.next();
        let mut labels = Vec::new();
        if let Tok::Str(label) = self.peek() {
            labels.push(label.clone());
            self.next();
            if *self.peek() == Tok::BiArrow {
                self.next();
                match self.peek() {
                    Tok::Str(other) => {
                        labels.push(other.clone());
                        self.next();
                    }
                    other => {
                        return Err(self.error(format!(
                            "expected platform name after '<->', found {}",
                            other.describe()
                        )))
                    }
                }
            }
        }
        self.expect(Tok::LBrace)?;
        let mut items = Vec::new();
        loop {
            match self.peek() {
                Tok::RBrace => {
                    self.next();
                    break;
                }
                Tok::Ident(_) => {
                    if *self.peek_at(1) == Tok::Equals {
                        items.push(Item::Attr(self.attr()?));
                    } else {
                        items.push(Item::Block(self.block()?));
                    }
                }
                Tok::Eof => return Err(self.error(format!("unclosed '{keyword}' block"))),
                other => {
                    return Err(self.error(format!(
                        "expected attribute or '}}', found {}",
                        other.describe()
                    )))
                }
            }
        }
        Ok(Block {
            keyword,
            labels,
            span,
            items,
        })
    }

    fn attr(&mut self) -> PResult<Attr> {
        let span = self.span();
        let key = match &self.next().tok {
            Tok::Ident(k) => k.clone(),
            _ => unreachable!("attr called on non-identifier"),
        };
        self.expect(Tok::Equals)?;
        let value = self.value()?;
        Ok(Attr { key, span, value })
    }

    fn value(&mut self) -> PResult<Value> {
        let span = self.span();
        let kind = match self.peek().clone() {
            Tok::Num(raw) => {
                self.next();
                ValueKind::Num(raw)
            }
            Tok::Str(s) => {
                self.next();
                ValueKind::Str(s)
            }
            Tok::Ident(word) => {
                self.next();
                if *self.peek() == Tok::LParen {
                    self.next();
                    let args = self.sequence(Tok::RParen)?;
                    let seed = if *self.peek() == Tok::Ident("seed".into()) {
                        self.next();
                        Some(Box::new(self.value()?))
                    } else {
                        None
                    };
                    ValueKind::Call {
                        name: word,
                        args,
                        seed,
                    }
                } else {
                    ValueKind::Ident(word)
                }
            }
            Tok::LBracket => {
                self.next();
                ValueKind::List(self.sequence(Tok::RBracket)?)
            }
            Tok::LParen => {
                self.next();
                ValueKind::Tuple(self.sequence(Tok::RParen)?)
            }
            other => return Err(self.error(format!("expected a value, found {}", other.describe()))),
        };
        Ok(Value { kind, span })
    }

    /// Comma-separated values up to `close`; a trailing comma is allowed.
    fn sequence(&mut self, close: Tok) -> PResult<Vec<Value>> {
        let mut values = Vec::new();
        loop {
            if *self.peek() == close {
                self.next();
                return Ok(values);
            }
            values.push(self.value()?);
            match self.peek() {
                Tok::Comma => {
                    self.next();
                }
                t if *t == close => {}
                other => {
                    return Err(self.error(format!(
                        "expected ',' or {}, found {}",
                        close.describe(),
                        other.describe()
                    )))
                }
            }
        }
    }
}

pub(crate) fn parse_blocks(tokens: &[Token], file: &str) -> Result<Vec<Block>, Diagnostic> {
    Parser {
        tokens,
        pos: 0,
        file,
    }
    .file()
}
