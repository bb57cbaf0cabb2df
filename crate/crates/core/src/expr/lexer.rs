use serde::Serialize;

use super::ExprError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TokenKind {
    Number,
    Identifier,
    Operator,
    Paren,
    Comma,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    /// Byte offset of the first character in the source.
    pub position: usize,
}

impl Token {
    pub fn is(&self, kind: TokenKind, text: &str) -> bool {
        self.kind == kind && self.text == text
    }
}

/// Maximal-munch lexer for the metric expression language.
pub fn tokenize(src: &str) -> Result<Vec<Token>, ExprError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let kind = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'0'..=b'9' | b'.' => {
                i = scan_number(bytes, i).ok_or(ExprError::Lex {
                    position: start,
                    found: c as char,
                })?;
                out.push(Token {
                    kind: TokenKind::Number,
                    text: src[start..i].to_string(),
                    position: start,
                });
                continue;
            }
            b'a'..=b'z' => {
                i += 1;
                while i < bytes.len() && (bytes[i].is_ascii_lowercase() || bytes[i].is_ascii_digit()) {
                    i += 1;
                }
                out.push(Token {
                    kind: TokenKind::Identifier,
                    text: src[start..i].to_string(),
                    position: start,
                });
                continue;
            }
            b'+' | b'-' | b'*' | b'/' | b'^' => TokenKind::Operator,
            b'(' | b')' => TokenKind::Paren,
            b',' => TokenKind::Comma,
            _ => {
                let found = src[start..].chars().next().unwrap_or('?');
                return Err(ExprError::Lex {
                    position: start,
                    found,
                });
            }
        };
        out.push(Token {
            kind,
            text: (c as char).to_string(),
            position: start,
        });
        i += 1;
    }
    Ok(out)
}

/// Scans `digits [. digits] [(e|E) [+-] digits]` (or `. digits ...`), returning
/// the end offset. An exponent marker is only consumed when digits follow it.
fn scan_number(b: &[u8], mut i: usize) -> Option<usize> {
    let digits = |b: &[u8], mut i: usize| {
        let s = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        (i, i - s)
    };
    let (next, int_len) = digits(b, i);
    i = next;
    let mut frac_len = 0;
    if i < b.len() && b[i] == b'.' {
        let (next, n) = digits(b, i + 1);
        i = next;
        frac_len = n;
    }
    if int_len == 0 && frac_len == 0 {
        return None;
    }
    if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
        let mut j = i + 1;
        if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
            j += 1;
        }
        let (next, n) = digits(b, j);
        if n > 0 {
            i = next;
        }
    }
    Some(i)
}
