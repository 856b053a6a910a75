use super::ast::Span;
use super::Diagnostic;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Kind {
    Ident,
    Number,
    Punct,
    Eof,
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub kind: Kind,
    pub text: String,
    pub span: Span,
}

impl Token {
    pub fn is(&self, punct: &str) -> bool {
        self.kind == Kind::Punct && self.text == punct
    }

    pub fn is_word(&self, word: &str) -> bool {
        self.kind == Kind::Ident && self.text == word
    }
}

const PUNCT2: [&str; 3] = ["->", "==", "!="];
const PUNCT1: &str = ";,{}()[]:=!&|./";

pub(crate) fn tokenize(text: &str, diags: &mut Vec<Diagnostic>) -> Vec<Token> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line = 1u32;
    let mut line_start = 0usize;
    let span = |start: usize, end: usize, line: u32, line_start: usize| Span {
        start,
        end,
        line,
        col: (text[line_start..start].chars().count() + 1) as u32,
    };
    while i < bytes.len() {
        let c = bytes[i];
        if c == b'\n' {
            i += 1;
            line += 1;
            line_start = i;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if text[i..].starts_with("//") {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if text[i..].starts_with("/*") {
            let start = i;
            let (l, ls) = (line, line_start);
            i += 2;
            loop {
                if i >= bytes.len() {
                    diags.push(Diagnostic::error(
                        "unterminated block comment",
                        span(start, start + 2, l, ls),
                    ));
                    break;
                }
                if text[i..].starts_with("*/") {
                    i += 2;
                    break;
                }
                if bytes[i] == b'\n' {
                    line += 1;
                    line_start = i + 1;
                }
                i += 1;
            }
            continue;
        }
        let start = i;
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token {
                kind: Kind::Ident,
                text: text[start..i].to_string(),
                span: span(start, i, line, line_start),
            });
            continue;
        }
        if c.is_ascii_digit() || (c == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            out.push(Token {
                kind: Kind::Number,
                text: text[start..i].to_string(),
                span: span(start, i, line, line_start),
            });
            continue;
        }
        if let Some(p) = PUNCT2.iter().find(|p| text[i..].starts_with(**p)) {
            i += 2;
            out.push(Token {
                kind: Kind::Punct,
                text: p.to_string(),
                span: span(start, i, line, line_start),
            });
            continue;
        }
        if PUNCT1.as_bytes().contains(&c) {
            i += 1;
            out.push(Token {
                kind: Kind::Punct,
                text: (c as char).to_string(),
                span: span(start, i, line, line_start),
            });
            continue;
        }
        let ch = text[i..].chars().next().expect("non-empty");
        i += ch.len_utf8();
        diags.push(Diagnostic::error(
            format!("unexpected character '{ch}'"),
            span(start, i, line, line_start),
        ));
    }
    out.push(Token {
        kind: Kind::Eof,
        text: String::new(),
        span: span(text.len(), text.len(), line, line_start),
    });
    out
}
