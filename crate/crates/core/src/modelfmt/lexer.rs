use crate::diag::{Diagnostic, SourceSpan};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Str(String),
    /// Raw numeric text; converted by the consumer so integers stay exact.
    Num(String),
    Ident(String),
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    LParen,
    RParen,
    Comma,
    Equals,
    BiArrow,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Str(s) => format!("string \"{s}\""),
            Tok::Num(n) => format!("number {n}"),
            Tok::Ident(i) => format!("'{i}'"),
            Tok::LBrace => "'{'".into(),
            Tok::RBrace => "'}'".into(),
            Tok::LBracket => "'['".into(),
            Tok::RBracket => "']'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Comma => "','".into(),
            Tok::Equals => "'='".into(),
            Tok::BiArrow => "'<->'".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }
}

pub(crate) fn tokenize(text: &str, file: &str) -> Result<Vec<Token>, Diagnostic> {
    let mut cur = Cursor {
        chars: text.chars().peekable(),
        line: 1,
        column: 1,
    };
    let mut out = Vec::new();
    let lex_error = |msg: String, line, column| {
        Diagnostic::error("P001", msg).at(SourceSpan::new(file, line, column))
    };

    while let Some(c) = cur.peek() {
        let (line, column) = (cur.line, cur.column);
        let tok = match c {
            c if c.is_whitespace() => {
                cur.bump();
                continue;
            }
            '#' => {
                while let Some(c) = cur.peek() {
                    if c == '\n' {
                        break;
                    }
                    cur.bump();
                }
                continue;
            }
            '{' | '}' | '[' | ']' | '(' | ')' | ',' | '=' => {
                cur.bump();
                match c {
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    '[' => Tok::LBracket,
                    ']' => Tok::RBracket,
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    ',' => Tok::Comma,
                    _ => Tok::Equals,
                }
            }
            '<' => {
                cur.bump();
                if cur.bump() == Some('-') && cur.bump() == Some('>') {
                    Tok::BiArrow
                } else {
                    return Err(lex_error("expected '<->'".into(), line, column));
                }
            }
            '"' => {
                cur.bump();
                let mut s = String::new();
                loop {
                    match cur.bump() {
                        Some('"') => break,
                        Some('\\') => match cur.bump() {
                            Some('"') => s.push('"'),
                            Some('\\') => s.push('\\'),
                            Some('n') => s.push('\n'),
                            Some('t') => s.push('\t'),
                            Some(other) => {
                                return Err(lex_error(
                                    format!("unknown escape '\\{other}'"),
                                    cur.line,
                                    cur.column.saturating_sub(1),
                                ))
                            }
                            None => return Err(lex_error("unterminated string".into(), line, column)),
                        },
                        Some(ch) => s.push(ch),
                        None => return Err(lex_error("unterminated string".into(), line, column)),
                    }
                }
                Tok::Str(s)
            }
            c if c.is_ascii_digit() || c == '-' || c == '+' || c == '.' => {
                let mut raw = String::new();
                if c == '-' || c == '+' {
                    raw.push(c);
                    cur.bump();
                }
                let mut digits = 0;
                while let Some(d) = cur.peek().filter(char::is_ascii_digit) {
                    raw.push(d);
                    cur.bump();
                    digits += 1;
                }
                if cur.peek() == Some('.') {
                    raw.push('.');
                    cur.bump();
                    while let Some(d) = cur.peek().filter(char::is_ascii_digit) {
                        raw.push(d);
                        cur.bump();
                        digits += 1;
                    }
                }
                if digits == 0 {
                    return Err(lex_error(format!("malformed number '{raw}'"), line, column));
                }
                if matches!(cur.peek(), Some('e' | 'E')) {
                    raw.push('e');
                    cur.bump();
                    if let Some(sign @ ('-' | '+')) = cur.peek() {
                        raw.push(sign);
                        cur.bump();
                    }
                    let mut exp_digits = 0;
                    while let Some(d) = cur.peek().filter(char::is_ascii_digit) {
                        raw.push(d);
                        cur.bump();
                        exp_digits += 1;
                    }
                    if exp_digits == 0 {
                        return Err(lex_error(format!("malformed exponent in '{raw}'"), line, column));
                    }
                }
                if let Some(next) = cur.peek().filter(|c| c.is_alphanumeric() || *c == '_' || *c == '.') {
                    return Err(lex_error(
                        format!("unexpected '{next}' after number '{raw}'"),
                        cur.line,
                        cur.column,
                    ));
                }
                Tok::Num(raw)
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut word = String::new();
                while let Some(ch) = cur.peek().filter(|c| c.is_ascii_alphanumeric() || *c == '_') {
                    word.push(ch);
                    cur.bump();
                }
                Tok::Ident(word)
            }
            other => {
                return Err(lex_error(format!("unexpected character '{other}'"), line, column));
            }
        };
        out.push(Token { tok, line, column });
    }
    out.push(Token {
        tok: Tok::Eof,
        line: cur.line,
        column: cur.column,
    });
    Ok(out)
}
