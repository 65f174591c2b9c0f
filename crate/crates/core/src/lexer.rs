//! Tokenizer.
//!
//! The grammar is line-oriented: a token in column 1 starts a new top-level
//! declaration and more-indented lines continue the current one. The lexer
//! therefore keeps line/column positions on every token; grouping into
//! logical declarations happens in [`crate::parser`].

use crate::ast::Span;
use crate::error::ParseError;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    LIdent(String),
    UIdent(String),
    Int(i64),
    CharLit(char),
    StrLit(String),
    // keywords
    Data,
    Instance,
    Deriving,
    Where,
    Free,
    Let,
    In,
    // punctuation
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Underscore,
    Backslash,
    // operators and separators
    Equals,    // =
    Pipe,      // |
    Arrow,     // ->
    DArrow,    // =>
    DColon,    // ::
    Colon,     // :
    PlusPlus,  // ++
    Question,  // ?
    AndAnd,    // &&
    OrOr,      // ||
    EqEq,      // ==
    NeqOp,     // /=
    EqEqEq,    // ===
    UnifyOp,   // =:=
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::LIdent(s) | Tok::UIdent(s) => return write!(f, "{s}"),
            Tok::Int(n) => return write!(f, "{n}"),
            Tok::CharLit(c) => return write!(f, "{c:?}"),
            Tok::StrLit(s) => return write!(f, "{s:?}"),
            Tok::Data => "data",
            Tok::Instance => "instance",
            Tok::Deriving => "deriving",
            Tok::Where => "where",
            Tok::Free => "free",
            Tok::Let => "let",
            Tok::In => "in",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Comma => ",",
            Tok::Semi => ";",
            Tok::Underscore => "_",
            Tok::Backslash => "\\",
            Tok::Equals => "=",
            Tok::Pipe => "|",
            Tok::Arrow => "->",
            Tok::DArrow => "=>",
            Tok::DColon => "::",
            Tok::Colon => ":",
            Tok::PlusPlus => "++",
            Tok::Question => "?",
            Tok::AndAnd => "&&",
            Tok::OrOr => "||",
            Tok::EqEq => "==",
            Tok::NeqOp => "/=",
            Tok::EqEqEq => "===",
            Tok::UnifyOp => "=:=",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

fn is_sym(c: char) -> bool {
    matches!(c, '=' | ':' | '+' | '-' | '>' | '<' | '&' | '|' | '?' | '/')
}

pub fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    for (lineno, line) in src.lines().enumerate() {
        let line_no = lineno as u32 + 1;
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0usize;
        while i < chars.len() {
            let c = chars[i];
            let col = i as u32 + 1;
            let sp = Span::new(line_no, col);
            if c == ' ' || c == '\t' {
                i += 1;
                continue;
            }
            // line comment
            if c == '-' && chars.get(i + 1) == Some(&'-') {
                break;
            }
            // negative integer literal (no subtraction operator exists)
            if c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()) {
                let start = i + 1;
                let mut j = start;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                let text: String = chars[start..j].iter().collect();
                let n: i64 = text
                    .parse()
                    .map_err(|_| ParseError::new(sp, format!("integer literal out of range: -{text}")))?;
                out.push(Token { tok: Tok::Int(-n), span: sp });
                i = j;
                continue;
            }
            if c.is_ascii_digit() {
                let mut j = i;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                let text: String = chars[i..j].iter().collect();
                let n: i64 = text
                    .parse()
                    .map_err(|_| ParseError::new(sp, format!("integer literal out of range: {text}")))?;
                out.push(Token { tok: Tok::Int(n), span: sp });
                i = j;
                continue;
            }
            if c.is_ascii_alphabetic() || c == '_' {
                let mut j = i;
                while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_' || chars[j] == '\'') {
                    j += 1;
                }
                let text: String = chars[i..j].iter().collect();
                let tok = match text.as_str() {
                    "_" => Tok::Underscore,
                    "data" => Tok::Data,
                    "instance" => Tok::Instance,
                    "deriving" => Tok::Deriving,
                    "where" => Tok::Where,
                    "free" => Tok::Free,
                    "let" => Tok::Let,
                    "in" => Tok::In,
                    _ if text.starts_with('_') => {
                        return Err(ParseError::new(sp, format!("identifiers may not start with '_': {text}")));
                    }
                    _ if c.is_ascii_uppercase() => Tok::UIdent(text),
                    _ => Tok::LIdent(text),
                };
                out.push(Token { tok, span: sp });
                i = j;
                continue;
            }
            match c {
                '(' => {
                    out.push(Token { tok: Tok::LParen, span: sp });
                    i += 1;
                }
                ')' => {
                    out.push(Token { tok: Tok::RParen, span: sp });
                    i += 1;
                }
                '[' => {
                    out.push(Token { tok: Tok::LBracket, span: sp });
                    i += 1;
                }
                ']' => {
                    out.push(Token { tok: Tok::RBracket, span: sp });
                    i += 1;
                }
                ',' => {
                    out.push(Token { tok: Tok::Comma, span: sp });
                    i += 1;
                }
                ';' => {
                    out.push(Token { tok: Tok::Semi, span: sp });
                    i += 1;
                }
                '\\' => {
                    out.push(Token { tok: Tok::Backslash, span: sp });
                    i += 1;
                }
                '\'' => {
                    let (ch, next) = lex_char(&chars, i, sp)?;
                    out.push(Token { tok: Tok::CharLit(ch), span: sp });
                    i = next;
                }
                '"' => {
                    let (s, next) = lex_string(&chars, i, sp)?;
                    out.push(Token { tok: Tok::StrLit(s), span: sp });
                    i = next;
                }
                c if is_sym(c) => {
                    let mut j = i;
                    while j < chars.len() && is_sym(chars[j]) {
                        j += 1;
                    }
                    let text: String = chars[i..j].iter().collect();
                    let tok = match text.as_str() {
                        "=" => Tok::Equals,
                        "|" => Tok::Pipe,
                        "->" => Tok::Arrow,
                        "=>" => Tok::DArrow,
                        "::" => Tok::DColon,
                        ":" => Tok::Colon,
                        "++" => Tok::PlusPlus,
                        "?" => Tok::Question,
                        "&&" => Tok::AndAnd,
                        "||" => Tok::OrOr,
                        "==" => Tok::EqEq,
                        "/=" => Tok::NeqOp,
                        "===" => Tok::EqEqEq,
                        "=:=" => Tok::UnifyOp,
                        other => {
                            return Err(ParseError::new(sp, format!("unknown operator: {other}")));
                        }
                    };
                    out.push(Token { tok, span: sp });
                    i = j;
                }
                other => {
                    return Err(ParseError::new(sp, format!("unexpected character: {other:?}")));
                }
            }
        }
    }
    Ok(out)
}

fn lex_escape(c: char, sp: Span) -> Result<char, ParseError> {
    Ok(match c {
        'n' => '\n',
        't' => '\t',
        '\\' => '\\',
        '\'' => '\'',
        '"' => '"',
        other => return Err(ParseError::new(sp, format!("unknown escape: \\{other}"))),
    })
}

fn lex_char(chars: &[char], start: usize, sp: Span) -> Result<(char, usize), ParseError> {
    // chars[start] == '\''
    let mut i = start + 1;
    let c = *chars
        .get(i)
        .ok_or_else(|| ParseError::new(sp, "unterminated character literal".to_string()))?;
    let ch = if c == '\\' {
        i += 1;
        let e = *chars
            .get(i)
            .ok_or_else(|| ParseError::new(sp, "unterminated character literal".to_string()))?;
        lex_escape(e, sp)?
    } else {
        c
    };
    i += 1;
    if chars.get(i) != Some(&'\'') {
        return Err(ParseError::new(sp, "unterminated character literal".to_string()));
    }
    Ok((ch, i + 1))
}

fn lex_string(chars: &[char], start: usize, sp: Span) -> Result<(String, usize), ParseError> {
    let mut i = start + 1;
    let mut s = String::new();
    loop {
        let c = *chars
            .get(i)
            .ok_or_else(|| ParseError::new(sp, "unterminated string literal".to_string()))?;
        match c {
            '"' => return Ok((s, i + 1)),
            '\\' => {
                i += 1;
                let e = *chars
                    .get(i)
                    .ok_or_else(|| ParseError::new(sp, "unterminated string literal".to_string()))?;
                s.push(lex_escape(e, sp)?);
                i += 1;
            }
            c => {
                s.push(c);
                i += 1;
            }
        }
    }
}
