use crate::error::{Error, Pos, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    /// Bare word. Keywords are recognized by the parser, case-insensitively.
    Word(String),
    QuotedIdent(String),
    Number(String),
    Str(String),
    Comma,
    LParen,
    RParen,
    Dot,
    Star,
    Plus,
    Minus,
    Slash,
    Caret,
    Percent,
    Eq,
    NotEq,
    Lt,
    LtEq,
    Gt,
    GtEq,
    DoubleColon,
    Semicolon,
    Eof,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

impl Token {
    pub fn is_word(&self, kw: &str) -> bool {
        matches!(&self.tok, Tok::Word(w) if w.eq_ignore_ascii_case(kw))
    }
}

pub fn tokenize(src: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

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
        let pos = Pos { line, column: col };
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'-') {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            continue;
        }
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            let mut word = String::new();
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                word.push(chars[i]);
                bump!();
            }
            out.push(Token { tok: Tok::Word(word), pos });
            continue;
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let mut num = String::new();
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                num.push(chars[i]);
                bump!();
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let sign = chars.get(i + 1).is_some_and(|s| *s == '+' || *s == '-');
                let digit_at = if sign { i + 2 } else { i + 1 };
                if chars.get(digit_at).is_some_and(|d| d.is_ascii_digit()) {
                    num.push(chars[i]);
                    bump!();
                    if sign {
                        num.push(chars[i]);
                        bump!();
                    }
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        num.push(chars[i]);
                        bump!();
                    }
                }
            }
            if num.matches('.').count() > 1 {
                return Err(Error::syntax(pos, format!("malformed number `{num}`")));
            }
            out.push(Token { tok: Tok::Number(num), pos });
            continue;
        } else if c == '\'' || c == '"' {
            let quote = c;
            bump!();
            let mut text = String::new();
            loop {
                if i >= chars.len() {
                    return Err(Error::syntax(pos, "unterminated quoted text"));
                }
                if chars[i] == quote {
                    if chars.get(i + 1) == Some(&quote) {
                        text.push(quote);
                        bump!();
                        bump!();
                        continue;
                    }
                    bump!();
                    break;
                }
                text.push(chars[i]);
                bump!();
            }
            let tok = if quote == '\'' {
                Tok::Str(text)
            } else {
                Tok::QuotedIdent(text)
            };
            out.push(Token { tok, pos });
            continue;
        } else {
            let next = chars.get(i + 1).copied();
            let (tok, width) = match (c, next) {
                ('<', Some('>')) => (Tok::NotEq, 2),
                ('!', Some('=')) => (Tok::NotEq, 2),
                ('<', Some('=')) => (Tok::LtEq, 2),
                ('>', Some('=')) => (Tok::GtEq, 2),
                (':', Some(':')) => (Tok::DoubleColon, 2),
                ('<', _) => (Tok::Lt, 1),
                ('>', _) => (Tok::Gt, 1),
                ('=', _) => (Tok::Eq, 1),
                (',', _) => (Tok::Comma, 1),
                ('(', _) => (Tok::LParen, 1),
                (')', _) => (Tok::RParen, 1),
                ('.', _) => (Tok::Dot, 1),
                ('*', _) => (Tok::Star, 1),
                ('+', _) => (Tok::Plus, 1),
                ('-', _) => (Tok::Minus, 1),
                ('/', _) => (Tok::Slash, 1),
                ('^', _) => (Tok::Caret, 1),
                ('%', _) => (Tok::Percent, 1),
                (';', _) => (Tok::Semicolon, 1),
                _ => return Err(Error::syntax(pos, format!("unexpected character `{c}`"))),
            };
            for _ in 0..width {
                bump!();
            }
            tok
        };
        out.push(Token { tok, pos });
    }
    out.push(Token {
        tok: Tok::Eof,
        pos: Pos { line, column: col },
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens_and_positions() {
        let toks = tokenize("SELECT a\n  FROM t WHERE x <> 'it''s'").unwrap();
        assert!(toks[0].is_word("select"));
        assert_eq!(toks[2].pos, Pos { line: 2, column: 3 });
        assert_eq!(toks[6].tok, Tok::NotEq);
        assert_eq!(toks[7].tok, Tok::Str("it's".into()));
    }

    #[test]
    fn numbers() {
        let toks = tokenize("1 2.5 .5 1e3 2.5e-2 x::integer").unwrap();
        let nums: Vec<_> = toks
            .iter()
            .filter_map(|t| match &t.tok {
                Tok::Number(n) => Some(n.as_str()),
                _ => None,
            })
            .collect();
        assert_eq!(nums, ["1", "2.5", ".5", "1e3", "2.5e-2"]);
        assert!(toks.iter().any(|t| t.tok == Tok::DoubleColon));
    }

    #[test]
    fn unterminated_string() {
        let err = tokenize("SELECT 'abc").unwrap_err();
        assert_eq!(err.code(), "SYNTAX_ERROR");
    }
}
