use super::{ParseError, SourceSpan};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Num(u64),
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Semi,
    Dot,
    Colon,
    Comma,
    Bar,
    Arrow,
    FatArrow,
    Bang,
    Caret,
    Eq,
    Hash,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Num(n) => format!("`{n}`"),
            Tok::Eof => "end of input".to_string(),
            other => format!("`{}`", other.symbol()),
        }
    }

    fn symbol(&self) -> &'static str {
        match self {
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Semi => ";",
            Tok::Dot => ".",
            Tok::Colon => ":",
            Tok::Comma => ",",
            Tok::Bar => "|",
            Tok::Arrow => "->",
            Tok::FatArrow => "=>",
            Tok::Bang => "!",
            Tok::Caret => "^",
            Tok::Eq => "=",
            Tok::Hash => "#",
            _ => "",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

pub const KEYWORDS: &[&str] = &[
    "effect", "instance", "do", "val", "fun", "handler", "with", "handle", "if", "then", "else",
    "match", "succ", "absurd", "let", "rec", "in", "true", "false", "bool", "nat", "unit",
    "empty",
];

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    line: usize,
    column: usize,
    len: usize,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().map(|&(_, c)| c)
    }

    fn offset(&mut self) -> usize {
        self.chars.peek().map(|&(i, _)| i).unwrap_or(self.len)
    }

    fn bump(&mut self) -> Option<char> {
        let (_, c) = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn here(&mut self) -> SourceSpan {
        let start = self.offset();
        SourceSpan {
            start,
            end: start,
            line: self.line,
            column: self.column,
        }
    }
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut cur = Cursor {
        chars: src.char_indices().peekable(),
        line: 1,
        column: 1,
        len: src.len(),
    };
    let mut out = Vec::new();
    loop {
        skip_trivia(&mut cur, src)?;
        let mut span = cur.here();
        let Some(c) = cur.bump() else {
            out.push(Token { tok: Tok::Eof, span });
            return Ok(out);
        };
        let tok = match c {
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            ';' => Tok::Semi,
            '.' => Tok::Dot,
            ':' => Tok::Colon,
            ',' => Tok::Comma,
            '|' => Tok::Bar,
            '!' => Tok::Bang,
            '^' => Tok::Caret,
            '#' => Tok::Hash,
            '-' if cur.peek() == Some('>') => {
                cur.bump();
                Tok::Arrow
            }
            '=' if cur.peek() == Some('>') => {
                cur.bump();
                Tok::FatArrow
            }
            '=' => Tok::Eq,
            c if c.is_ascii_digit() => {
                let mut digits = String::from(c);
                while let Some(d) = cur.peek().filter(char::is_ascii_digit) {
                    digits.push(d);
                    cur.bump();
                }
                let n = digits.parse::<u64>().ok().filter(|&n| n <= 1_000_000).ok_or_else(|| {
                    ParseError::syntax(format!("numeral `{digits}` is too large"), span)
                })?;
                Tok::Num(n)
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut ident = String::from(c);
                while let Some(d) = cur
                    .peek()
                    .filter(|d| d.is_alphanumeric() || *d == '_' || *d == '\'')
                {
                    ident.push(d);
                    cur.bump();
                }
                Tok::Ident(ident)
            }
            other => {
                return Err(ParseError::syntax(
                    format!("unexpected character `{other}`"),
                    span,
                ))
            }
        };
        span.end = cur.offset();
        out.push(Token { tok, span });
    }
}

fn skip_trivia(cur: &mut Cursor<'_>, src: &str) -> Result<(), ParseError> {
    loop {
        match cur.peek() {
            Some(c) if c.is_whitespace() => {
                cur.bump();
            }
            Some('(') if src[cur.offset()..].starts_with("(*") => {
                let open = cur.here();
                cur.bump();
                cur.bump();
                let mut depth = 1;
                while depth > 0 {
                    let rest = &src[cur.offset()..];
                    if rest.starts_with("(*") {
                        depth += 1;
                        cur.bump();
                        cur.bump();
                    } else if rest.starts_with("*)") {
                        depth -= 1;
                        cur.bump();
                        cur.bump();
                    } else if cur.bump().is_none() {
                        return Err(ParseError::syntax("unterminated comment", open));
                    }
                }
            }
            _ => return Ok(()),
        }
    }
}
