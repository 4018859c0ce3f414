//! Tokenizer shared by the project format, guard expressions and LTL formulas.

use super::{ParseError, SourceSpan};
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Number(String),
    Str(String),
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    LParen,
    RParen,
    Colon,
    Comma,
    Slash,
    At,
    Arrow,
    Iff,
    Assign,
    Equals,
    EqEq,
    NotEq,
    AndAnd,
    OrOr,
    Bang,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Number(s) => write!(f, "number `{s}`"),
            Tok::Str(_) => f.write_str("string"),
            Tok::LBrace => f.write_str("`{`"),
            Tok::RBrace => f.write_str("`}`"),
            Tok::LBracket => f.write_str("`[`"),
            Tok::RBracket => f.write_str("`]`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Colon => f.write_str("`:`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Slash => f.write_str("`/`"),
            Tok::At => f.write_str("`@`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::Iff => f.write_str("`<->`"),
            Tok::Assign => f.write_str("`:=`"),
            Tok::Equals => f.write_str("`=`"),
            Tok::EqEq => f.write_str("`==`"),
            Tok::NotEq => f.write_str("`!=`"),
            Tok::AndAnd => f.write_str("`&&`"),
            Tok::OrOr => f.write_str("`||`"),
            Tok::Bang => f.write_str("`!`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
    /// True when no other token precedes this one on its line.
    pub line_start: bool,
}

pub fn tokenize(source: &str, file: &str) -> Result<Vec<Token>, ParseError> {
    Lexer {
        chars: source.chars().collect(),
        pos: 0,
        line: 1,
        col: 1,
        file,
        line_has_token: false,
    }
    .run()
}

struct Lexer<'f> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col: usize,
    file: &'f str,
    line_has_token: bool,
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '.'
}

impl Lexer<'_> {
    fn peek(&self, k: usize) -> Option<char> {
        self.chars.get(self.pos + k).copied()
    }

    fn bump(&mut self) -> char {
        let c = self.chars[self.pos];
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
            self.line_has_token = false;
        } else {
            self.col += 1;
        }
        c
    }

    fn span(&self, line: usize, col: usize, length: usize) -> SourceSpan {
        SourceSpan {
            file: self.file.to_string(),
            line,
            column: col,
            length: length.max(1),
        }
    }

    fn run(mut self) -> Result<Vec<Token>, ParseError> {
        let mut out = Vec::new();
        loop {
            while let Some(c) = self.peek(0) {
                if c == '#' {
                    while self.peek(0).is_some_and(|c| c != '\n') {
                        self.bump();
                    }
                } else if c.is_whitespace() {
                    self.bump();
                } else {
                    break;
                }
            }
            let (line, col) = (self.line, self.col);
            let line_start = !self.line_has_token;
            let Some(c) = self.peek(0) else {
                out.push(Token {
                    tok: Tok::Eof,
                    span: self.span(line, col, 1),
                    line_start,
                });
                return Ok(out);
            };
            let start = self.pos;
            let tok = self.lex_one(c, line, col)?;
            self.line_has_token = true;
            let len = self.pos - start;
            out.push(Token {
                tok,
                span: self.span(line, col, len),
                line_start,
            });
        }
    }

    fn lex_one(&mut self, c: char, line: usize, col: usize) -> Result<Tok, ParseError> {
        let two = (c, self.peek(1).unwrap_or('\0'));
        let single = |s: &mut Self, t: Tok| {
            s.bump();
            Ok(t)
        };
        let double = |s: &mut Self, t: Tok| {
            s.bump();
            s.bump();
            Ok(t)
        };
        match two {
            ('<', '-') if self.peek(2) == Some('>') => {
                self.bump();
                double(self, Tok::Iff)
            }
            ('-', '>') => double(self, Tok::Arrow),
            (':', '=') => double(self, Tok::Assign),
            ('=', '=') => double(self, Tok::EqEq),
            ('!', '=') => double(self, Tok::NotEq),
            ('&', '&') => double(self, Tok::AndAnd),
            ('|', '|') => double(self, Tok::OrOr),
            ('{', _) => single(self, Tok::LBrace),
            ('}', _) => single(self, Tok::RBrace),
            ('[', _) => single(self, Tok::LBracket),
            (']', _) => single(self, Tok::RBracket),
            ('(', _) => single(self, Tok::LParen),
            (')', _) => single(self, Tok::RParen),
            (':', _) => single(self, Tok::Colon),
            (',', _) => single(self, Tok::Comma),
            ('/', _) => single(self, Tok::Slash),
            ('@', _) => single(self, Tok::At),
            ('=', _) => single(self, Tok::Equals),
            ('!', _) => single(self, Tok::Bang),
            ('"', _) => self.string(line, col),
            ('-', d) if d.is_ascii_digit() => self.number(),
            (d, _) if d.is_ascii_digit() => self.number(),
            (a, _) if is_ident_start(a) => {
                let mut s = String::new();
                while self.peek(0).is_some_and(is_ident_continue) {
                    s.push(self.bump());
                }
                // the only hyphenated keyword
                if s == "hazard" && self.peek(0) == Some('-') {
                    let rest: String = self.chars[self.pos + 1..].iter().take(4).collect();
                    if rest == "rule" && !self.peek(5).is_some_and(is_ident_continue) {
                        for _ in 0..5 {
                            self.bump();
                        }
                        s.push_str("-rule");
                    }
                }
                Ok(Tok::Ident(s))
            }
            _ => Err(ParseError::new(
                self.span(line, col, 1),
                format!("unexpected character `{c}`"),
            )),
        }
    }

    fn number(&mut self) -> Result<Tok, ParseError> {
        let mut s = String::new();
        if self.peek(0) == Some('-') {
            s.push(self.bump());
        }
        while self.peek(0).is_some_and(|c| c.is_ascii_digit()) {
            s.push(self.bump());
        }
        if self.peek(0) == Some('.') && self.peek(1).is_some_and(|c| c.is_ascii_digit()) {
            s.push(self.bump());
            while self.peek(0).is_some_and(|c| c.is_ascii_digit()) {
                s.push(self.bump());
            }
        }
        Ok(Tok::Number(s))
    }

    fn string(&mut self, line: usize, col: usize) -> Result<Tok, ParseError> {
        self.bump();
        let mut s = String::new();
        loop {
            match self.peek(0) {
                None | Some('\n') => {
                    return Err(ParseError::new(
                        self.span(line, col, 1),
                        "unterminated string literal",
                    ))
                }
                Some('"') => {
                    self.bump();
                    return Ok(Tok::Str(s));
                }
                Some('\\') => {
                    self.bump();
                    match self.peek(0) {
                        Some('n') => s.push('\n'),
                        Some('t') => s.push('\t'),
                        Some(c @ ('"' | '\\')) => s.push(c),
                        _ => {
                            return Err(ParseError::new(
                                self.span(self.line, self.col, 1),
                                "invalid escape sequence",
                            ))
                        }
                    }
                    self.bump();
                }
                Some(_) => s.push(self.bump()),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<Tok> {
        tokenize(src, "t").unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn operators_and_idents() {
        assert_eq!(
            kinds("a->b <-> !c != d:=e"),
            vec![
                Tok::Ident("a".into()),
                Tok::Arrow,
                Tok::Ident("b".into()),
                Tok::Iff,
                Tok::Bang,
                Tok::Ident("c".into()),
                Tok::NotEq,
                Tok::Ident("d".into()),
                Tok::Assign,
                Tok::Ident("e".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn dotted_ids_numbers_and_keyword() {
        assert_eq!(
            kinds("SSR1.3 -1 2.5 hazard-rule hazard"),
            vec![
                Tok::Ident("SSR1.3".into()),
                Tok::Number("-1".into()),
                Tok::Number("2.5".into()),
                Tok::Ident("hazard-rule".into()),
                Tok::Ident("hazard".into()),
                Tok::Eof
            ]
        );
        assert!(tokenize("a - b", "t").is_err());
    }

    #[test]
    fn comments_and_line_starts() {
        let toks = tokenize("# heading\nfoo bar # trailing\n  baz", "t").unwrap();
        assert_eq!(toks[0].tok, Tok::Ident("foo".into()));
        assert!(toks[0].line_start);
        assert!(!toks[1].line_start);
        assert!(toks[2].line_start);
        assert_eq!(toks[2].span.line, 3);
        assert_eq!(toks[2].span.column, 3);
    }

    #[test]
    fn strings_with_escapes() {
        assert_eq!(kinds(r#""a \"b\"""#)[0], Tok::Str("a \"b\"".into()));
        assert!(tokenize("\"open", "t").is_err());
    }
}
