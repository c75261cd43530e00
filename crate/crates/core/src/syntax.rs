//! Token cursor and helpers shared by the profile and model parsers.

use crate::lexer::{is_identifier, Pos, Token, TokenKind};
use crate::literal::Literal;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntaxError {
    pub message: String,
    pub pos: Pos,
}

pub type SyntaxResult<T> = Result<T, SyntaxError>;

pub(crate) struct Cursor {
    tokens: Vec<Token>,
    idx: usize,
}

impl Cursor {
    pub fn new(tokens: Vec<Token>) -> Self {
        debug_assert!(matches!(tokens.last().map(|t| &t.kind), Some(TokenKind::Eof)));
        Self { tokens, idx: 0 }
    }

    pub fn peek(&self) -> &Token {
        &self.tokens[self.idx.min(self.tokens.len() - 1)]
    }

    pub fn peek_nth(&self, n: usize) -> &Token {
        &self.tokens[(self.idx + n).min(self.tokens.len() - 1)]
    }

    pub fn at_eof(&self) -> bool {
        matches!(self.peek().kind, TokenKind::Eof)
    }

    pub fn bump(&mut self) -> Token {
        let tok = self.peek().clone();
        if !self.at_eof() {
            self.idx += 1;
        }
        tok
    }

    pub fn at_word(&self, word: &str) -> bool {
        matches!(&self.peek().kind, TokenKind::Word(w) if w == word)
    }

    pub fn at_punct(&self, c: char) -> bool {
        self.peek().kind == TokenKind::Punct(c)
    }

    pub fn eat_word(&mut self, word: &str) -> bool {
        if self.at_word(word) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn eat_punct(&mut self, c: char) -> bool {
        if self.at_punct(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn error_here(&self, expected: &str) -> SyntaxError {
        let tok = self.peek();
        SyntaxError {
            message: format!("expected {expected}, found {}", tok.kind),
            pos: tok.pos,
        }
    }

    pub fn expect_punct(&mut self, c: char) -> SyntaxResult<Pos> {
        if self.at_punct(c) {
            Ok(self.bump().pos)
        } else {
            Err(self.error_here(&format!("`{c}`")))
        }
    }

    pub fn expect_arrow(&mut self) -> SyntaxResult<Pos> {
        if self.peek().kind == TokenKind::Arrow {
            Ok(self.bump().pos)
        } else {
            Err(self.error_here("`->`"))
        }
    }

    pub fn expect_word(&mut self, word: &str) -> SyntaxResult<Pos> {
        if self.at_word(word) {
            Ok(self.bump().pos)
        } else {
            Err(self.error_here(&format!("`{word}`")))
        }
    }

    pub fn expect_ident(&mut self, what: &str) -> SyntaxResult<(String, Pos)> {
        match &self.peek().kind {
            TokenKind::Word(w) if is_identifier(w) => {
                let tok = self.bump();
                match tok.kind {
                    TokenKind::Word(w) => Ok((w, tok.pos)),
                    _ => unreachable!(),
                }
            }
            _ => Err(self.error_here(what)),
        }
    }

    pub fn literal(&mut self) -> SyntaxResult<(Literal, Pos)> {
        let tok = self.peek().clone();
        let lit = match tok.kind {
            TokenKind::Str(s) => {
                self.bump();
                Literal::Str(s)
            }
            TokenKind::Int(i) => {
                self.bump();
                Literal::Int(i)
            }
            TokenKind::Float(x) => {
                self.bump();
                Literal::Float(x)
            }
            TokenKind::Word(ref w) if w == "true" || w == "false" => {
                self.bump();
                Literal::Bool(w == "true")
            }
            TokenKind::Punct('[') => {
                self.bump();
                let mut items = Vec::new();
                if !self.at_punct(']') {
                    loop {
                        items.push(self.literal()?.0);
                        if !self.eat_punct(',') || self.at_punct(']') {
                            break;
                        }
                    }
                }
                let end = self.expect_punct(']')?;
                let mut pos = tok.pos;
                pos.len = end.offset + end.len - pos.offset;
                return Ok((Literal::List(items), pos));
            }
            _ => return Err(self.error_here("a literal")),
        };
        Ok((lit, tok.pos))
    }

    /// Skips tokens until just past the next `;` at the current nesting depth,
    /// or until (not past) a `}` closing the current level.
    pub fn recover_statement(&mut self) {
        let mut depth = 0usize;
        loop {
            match self.peek().kind {
                TokenKind::Eof => return,
                TokenKind::Punct(';') if depth == 0 => {
                    self.bump();
                    return;
                }
                TokenKind::Punct('{') => depth += 1,
                TokenKind::Punct('}') => {
                    if depth == 0 {
                        return;
                    }
                    depth -= 1;
                    if depth == 0 {
                        self.bump();
                        return;
                    }
                }
                _ => {}
            }
            self.bump();
        }
    }

    /// Skips past the next balanced `{ ... }` group. Stops without consuming
    /// a `}` that closes an enclosing level.
    pub fn recover_block(&mut self) {
        let mut depth = 0usize;
        loop {
            match self.peek().kind {
                TokenKind::Eof => return,
                TokenKind::Punct('{') => depth += 1,
                TokenKind::Punct('}') => {
                    if depth == 0 {
                        return;
                    }
                    if depth == 1 {
                        self.bump();
                        return;
                    }
                    depth -= 1;
                }
                _ => {}
            }
            self.bump();
        }
    }
}
