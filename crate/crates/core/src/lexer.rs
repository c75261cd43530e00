//! Tokenizer shared by the profile and model languages.
//!
//! Words may contain a hyphen when it is directly followed by a letter, so
//! keywords such as `applies-to` and `datetime-format` lex as one token while
//! `A -> B` still produces an arrow.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub offset: usize,
    pub line: usize,
    pub column: usize,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Word(String),
    Str(String),
    Int(i64),
    Float(f64),
    Punct(char),
    Arrow,
    DotDot,
    Eof,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Word(w) => write!(f, "`{w}`"),
            TokenKind::Str(s) => write!(f, "string {s:?}"),
            TokenKind::Int(i) => write!(f, "number {i}"),
            TokenKind::Float(x) => write!(f, "number {x}"),
            TokenKind::Punct(c) => write!(f, "`{c}`"),
            TokenKind::Arrow => f.write_str("`->`"),
            TokenKind::DotDot => f.write_str("`..`"),
            TokenKind::Eof => f.write_str("end of file"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LexError {
    pub message: String,
    pub pos: Pos,
}

/// Tokenizes `src`, collecting every lexical error instead of stopping at the
/// first one. The returned stream always ends with an `Eof` token.
pub fn tokenize(src: &str) -> (Vec<Token>, Vec<LexError>) {
    Lexer::new(src).run()
}

pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

struct Lexer<'a> {
    src: &'a str,
    chars: Vec<(usize, char)>,
    idx: usize,
    line: usize,
    column: usize,
    tokens: Vec<Token>,
    errors: Vec<LexError>,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Self {
            src,
            chars: src.char_indices().collect(),
            idx: 0,
            line: 1,
            column: 1,
            tokens: Vec::new(),
            errors: Vec::new(),
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.idx).map(|&(_, c)| c)
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.chars.get(self.idx + n).map(|&(_, c)| c)
    }

    fn offset(&self) -> usize {
        self.chars.get(self.idx).map_or(self.src.len(), |&(o, _)| o)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.idx += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn start(&self) -> Pos {
        Pos {
            offset: self.offset(),
            line: self.line,
            column: self.column,
            len: 0,
        }
    }

    fn finish(&self, mut pos: Pos) -> Pos {
        pos.len = self.offset() - pos.offset;
        pos
    }

    fn push(&mut self, kind: TokenKind, start: Pos) {
        let pos = self.finish(start);
        self.tokens.push(Token { kind, pos });
    }

    fn error(&mut self, message: impl Into<String>, start: Pos) {
        let mut pos = self.finish(start);
        pos.len = pos.len.max(1);
        self.errors.push(LexError {
            message: message.into(),
            pos,
        });
    }

    fn run(mut self) -> (Vec<Token>, Vec<LexError>) {
        while let Some(c) = self.peek() {
            let start = self.start();
            match c {
                c if c.is_whitespace() => {
                    self.bump();
                }
                '#' => self.skip_line(),
                '/' if self.peek_at(1) == Some('/') => self.skip_line(),
                '"' => self.string(start),
                c if c.is_ascii_digit() => self.number(start),
                '-' if self.peek_at(1).is_some_and(|d| d.is_ascii_digit()) => self.number(start),
                '-' if self.peek_at(1) == Some('>') => {
                    self.bump();
                    self.bump();
                    self.push(TokenKind::Arrow, start);
                }
                '.' if self.peek_at(1) == Some('.') => {
                    self.bump();
                    self.bump();
                    self.push(TokenKind::DotDot, start);
                }
                c if c.is_ascii_alphabetic() || c == '_' => self.word(start),
                '{' | '}' | '(' | ')' | '[' | ']' | '<' | '>' | ':' | ';' | ',' | '=' | '.'
                | '@' | '*' => {
                    self.bump();
                    self.push(TokenKind::Punct(c), start);
                }
                other => {
                    self.bump();
                    self.error(format!("unexpected character {other:?}"), start);
                }
            }
        }
        let eof = self.start();
        self.tokens.push(Token {
            kind: TokenKind::Eof,
            pos: eof,
        });
        (self.tokens, self.errors)
    }

    fn skip_line(&mut self) {
        while let Some(c) = self.peek() {
            if c == '\n' {
                break;
            }
            self.bump();
        }
    }

    fn word(&mut self, start: Pos) {
        let mut text = String::new();
        while let Some(c) = self.peek() {
            let hyphen = c == '-' && self.peek_at(1).is_some_and(|n| n.is_ascii_alphabetic());
            if c.is_ascii_alphanumeric() || c == '_' || hyphen {
                text.push(c);
                self.bump();
            } else {
                break;
            }
        }
        self.push(TokenKind::Word(text), start);
    }

    fn number(&mut self, start: Pos) {
        let begin = self.offset();
        if self.peek() == Some('-') {
            self.bump();
        }
        let mut is_float = false;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.bump();
        }
        if self.peek() == Some('.') && self.peek_at(1).is_some_and(|c| c.is_ascii_digit()) {
            is_float = true;
            self.bump();
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.bump();
            }
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            let sign = matches!(self.peek_at(1), Some('+' | '-'));
            let digit_at = if sign { 2 } else { 1 };
            if self.peek_at(digit_at).is_some_and(|c| c.is_ascii_digit()) {
                is_float = true;
                for _ in 0..digit_at {
                    self.bump();
                }
                while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                    self.bump();
                }
            }
        }
        let text = &self.src[begin..self.offset()];
        if is_float {
            match text.parse::<f64>() {
                Ok(v) if v.is_finite() => self.push(TokenKind::Float(v), start),
                _ => self.error(format!("invalid number `{text}`"), start),
            }
        } else {
            match text.parse::<i64>() {
                Ok(v) => self.push(TokenKind::Int(v), start),
                Err(_) => self.error(format!("integer `{text}` out of range"), start),
            }
        }
    }

    fn string(&mut self, start: Pos) {
        self.bump();
        let mut value = String::new();
        loop {
            match self.peek() {
                None | Some('\n') => {
                    self.error("unterminated string literal", start);
                    return;
                }
                Some('"') => {
                    self.bump();
                    break;
                }
                Some('\\') => {
                    let esc_start = self.start();
                    self.bump();
                    match self.bump() {
                        Some('n') => value.push('\n'),
                        Some('t') => value.push('\t'),
                        Some('r') => value.push('\r'),
                        Some('0') => value.push('\0'),
                        Some('\\') => value.push('\\'),
                        Some('"') => value.push('"'),
                        Some('u') => match self.unicode_escape() {
                            Some(c) => value.push(c),
                            None => self.error("invalid \\u{...} escape", esc_start),
                        },
                        Some(other) => {
                            self.error(format!("unknown escape `\\{other}`"), esc_start);
                        }
                        None => {
                            self.error("unterminated string literal", start);
                            return;
                        }
                    }
                }
                Some(c) => {
                    value.push(c);
                    self.bump();
                }
            }
        }
        self.push(TokenKind::Str(value), start);
    }

    fn unicode_escape(&mut self) -> Option<char> {
        if self.peek() != Some('{') {
            return None;
        }
        self.bump();
        let mut hex = String::new();
        while let Some(c) = self.peek() {
            if c == '}' {
                self.bump();
                return u32::from_str_radix(&hex, 16).ok().and_then(char::from_u32);
            }
            if !c.is_ascii_hexdigit() || hex.len() >= 6 {
                return None;
            }
            hex.push(c);
            self.bump();
        }
        None
    }
}
