//! Tokenizer for the modeling language and the property syntax.

use super::LangError;

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    /// Decimal or scientific literal, kept as source text so each numeric
    /// backend can parse it at full fidelity.
    Number(String),
    Str(String),
    // punctuation
    LBracket,
    RBracket,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Semi,
    Colon,
    Comma,
    Prime,
    DotDot,
    Arrow,
    Plus,
    Minus,
    Star,
    Slash,
    Eq,
    EqQuestion,
    Neq,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
    Not,
    Eof,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl std::fmt::Display for Pos {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

pub struct Lexer {
    tokens: Vec<(Tok, Pos)>,
    cursor: usize,
}

impl Lexer {
    pub fn tokenize(text: &str) -> Result<Lexer, LangError> {
        let mut tokens = Vec::new();
        let chars: Vec<char> = text.chars().collect();
        let mut i = 0;
        let mut line = 1u32;
        let mut col = 1u32;
        macro_rules! bump {
            () => {{
                if chars[i] == '\n' {
                    line += 1;
                    col = 1;
                } else {
                    col += 1;
                }
                i += 1;
            }};
        }
        while i < chars.len() {
            let c = chars[i];
            let pos = Pos { line, col };
            match c {
                ' ' | '\t' | '\r' | '\n' => bump!(),
                '/' if i + 1 < chars.len() && chars[i + 1] == '/' => {
                    while i < chars.len() && chars[i] != '\n' {
                        bump!();
                    }
                }
                '0'..='9' => {
                    let start = i;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        bump!();
                    }
                    let mut is_number = false;
                    // A dot starts a fraction part unless it is "..".
                    if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1] != '.' {
                        is_number = true;
                        bump!();
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            bump!();
                        }
                    }
                    if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                        let mut j = i + 1;
                        if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                            j += 1;
                        }
                        if j < chars.len() && chars[j].is_ascii_digit() {
                            is_number = true;
                            while i < j {
                                bump!();
                            }
                            while i < chars.len() && chars[i].is_ascii_digit() {
                                bump!();
                            }
                        }
                    }
                    let text: String = chars[start..i].iter().collect();
                    if is_number {
                        tokens.push((Tok::Number(text), pos));
                    } else {
                        let v = text.parse::<i64>().map_err(|_| LangError::Syntax {
                            pos,
                            msg: format!("integer literal `{text}` out of range"),
                        })?;
                        tokens.push((Tok::Int(v), pos));
                    }
                }
                'a'..='z' | 'A'..='Z' | '_' => {
                    let start = i;
                    while i < chars.len()
                        && (chars[i].is_ascii_alphanumeric() || chars[i] == '_')
                    {
                        bump!();
                    }
                    tokens.push((Tok::Ident(chars[start..i].iter().collect()), pos));
                }
                '"' => {
                    bump!();
                    let start = i;
                    while i < chars.len() && chars[i] != '"' {
                        bump!();
                    }
                    if i == chars.len() {
                        return Err(LangError::Syntax {
                            pos,
                            msg: "unterminated string".into(),
                        });
                    }
                    let s: String = chars[start..i].iter().collect();
                    bump!();
                    tokens.push((Tok::Str(s), pos));
                }
                _ => {
                    let two = if i + 1 < chars.len() {
                        Some((chars[i], chars[i + 1]))
                    } else {
                        None
                    };
                    let (tok, len) = match (c, two) {
                        (_, Some(('-', '>'))) => (Tok::Arrow, 2),
                        (_, Some(('.', '.'))) => (Tok::DotDot, 2),
                        (_, Some(('!', '='))) => (Tok::Neq, 2),
                        (_, Some(('<', '='))) => (Tok::Le, 2),
                        (_, Some(('>', '='))) => (Tok::Ge, 2),
                        (_, Some(('=', '?'))) => (Tok::EqQuestion, 2),
                        ('[', _) => (Tok::LBracket, 1),
                        (']', _) => (Tok::RBracket, 1),
                        ('(', _) => (Tok::LParen, 1),
                        (')', _) => (Tok::RParen, 1),
                        ('{', _) => (Tok::LBrace, 1),
                        ('}', _) => (Tok::RBrace, 1),
                        (';', _) => (Tok::Semi, 1),
                        (':', _) => (Tok::Colon, 1),
                        (',', _) => (Tok::Comma, 1),
                        ('\'', _) => (Tok::Prime, 1),
                        ('+', _) => (Tok::Plus, 1),
                        ('-', _) => (Tok::Minus, 1),
                        ('*', _) => (Tok::Star, 1),
                        ('/', _) => (Tok::Slash, 1),
                        ('=', _) => (Tok::Eq, 1),
                        ('<', _) => (Tok::Lt, 1),
                        ('>', _) => (Tok::Gt, 1),
                        ('&', _) => (Tok::And, 1),
                        ('|', _) => (Tok::Or, 1),
                        ('!', _) => (Tok::Not, 1),
                        _ => {
                            return Err(LangError::Syntax {
                                pos,
                                msg: format!("unexpected character `{c}`"),
                            })
                        }
                    };
                    for _ in 0..len {
                        bump!();
                    }
                    tokens.push((tok, pos));
                }
            }
        }
        tokens.push((Tok::Eof, Pos { line, col }));
        Ok(Lexer { tokens, cursor: 0 })
    }

    pub fn peek(&self) -> &Tok {
        &self.tokens[self.cursor].0
    }

    pub fn peek_n(&self, n: usize) -> &Tok {
        &self.tokens[(self.cursor + n).min(self.tokens.len() - 1)].0
    }

    pub fn pos(&self) -> Pos {
        self.tokens[self.cursor].1
    }

    pub fn next(&mut self) -> Tok {
        let t = self.tokens[self.cursor].0.clone();
        if self.cursor < self.tokens.len() - 1 {
            self.cursor += 1;
        }
        t
    }

    pub fn expect(&mut self, tok: &Tok, what: &str) -> Result<(), LangError> {
        if self.peek() == tok {
            self.next();
            Ok(())
        } else {
            Err(LangError::Syntax {
                pos: self.pos(),
                msg: format!("expected {what}, found {:?}", self.peek()),
            })
        }
    }

    pub fn expect_ident(&mut self, what: &str) -> Result<String, LangError> {
        match self.next() {
            Tok::Ident(s) => Ok(s),
            other => Err(LangError::Syntax {
                pos: self.pos(),
                msg: format!("expected {what}, found {other:?}"),
            }),
        }
    }

    /// Consumes the given keyword (an identifier token with fixed text).
    pub fn expect_kw(&mut self, kw: &str) -> Result<(), LangError> {
        match self.peek() {
            Tok::Ident(s) if s == kw => {
                self.next();
                Ok(())
            }
            other => Err(LangError::Syntax {
                pos: self.pos(),
                msg: format!("expected `{kw}`, found {other:?}"),
            }),
        }
    }

    pub fn eat_kw(&mut self, kw: &str) -> bool {
        if matches!(self.peek(), Tok::Ident(s) if s == kw) {
            self.next();
            true
        } else {
            false
        }
    }

    pub fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.next();
            true
        } else {
            false
        }
    }
}
