use alloc::string::String;
use alloc::vec::Vec;

use super::ast::Span;
use super::error::SyntaxError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Float(f64),
    Char(char),
    Str(String),
    // keywords
    KwInt,
    KwFloat,
    KwChar,
    KwString,
    KwBool,
    KwVoid,
    If,
    Else,
    While,
    Return,
    Print,
    Println,
    True,
    False,
    // punctuation
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Assign,
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    EqEq,
    NotEq,
    Lt,
    Le,
    Gt,
    Ge,
    AndAnd,
    OrOr,
    Bang,
    Caret,
    Pipe,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        use alloc::format;
        match self {
            Tok::Ident(name) => format!("identifier `{name}`"),
            Tok::Int(v) => format!("integer `{v}`"),
            Tok::Float(v) => format!("float `{v}`"),
            Tok::Char(c) => format!("char {c:?}"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::Eof => "end of input".into(),
            other => format!("`{}`", other.text()),
        }
    }

    fn text(&self) -> &'static str {
        match self {
            Tok::KwInt => "int",
            Tok::KwFloat => "float",
            Tok::KwChar => "char",
            Tok::KwString => "string",
            Tok::KwBool => "bool",
            Tok::KwVoid => "void",
            Tok::If => "if",
            Tok::Else => "else",
            Tok::While => "while",
            Tok::Return => "return",
            Tok::Print => "print",
            Tok::Println => "println",
            Tok::True => "true",
            Tok::False => "false",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Comma => ",",
            Tok::Semi => ";",
            Tok::Assign => "=",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::Percent => "%",
            Tok::EqEq => "==",
            Tok::NotEq => "!=",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::AndAnd => "&&",
            Tok::OrOr => "||",
            Tok::Bang => "!",
            Tok::Caret => "^",
            Tok::Pipe => "|",
            Tok::Ident(_) | Tok::Int(_) | Tok::Float(_) | Tok::Char(_) | Tok::Str(_) | Tok::Eof => {
                ""
            }
        }
    }
}

fn keyword(word: &str) -> Option<Tok> {
    Some(match word {
        "int" => Tok::KwInt,
        "float" => Tok::KwFloat,
        "char" => Tok::KwChar,
        "string" => Tok::KwString,
        "bool" => Tok::KwBool,
        "void" => Tok::KwVoid,
        "if" => Tok::If,
        "else" => Tok::Else,
        "while" => Tok::While,
        "return" => Tok::Return,
        "print" => Tok::Print,
        "println" => Tok::Println,
        "true" => Tok::True,
        "false" => Tok::False,
        _ => return None,
    })
}

pub struct Lexer<'a> {
    chars: core::iter::Peekable<core::str::Chars<'a>>,
    line: u32,
    col: u32,
}

impl<'a> Lexer<'a> {
    pub fn new(src: &'a str) -> Self {
        Self {
            chars: src.chars().peekable(),
            line: 1,
            col: 1,
        }
    }

    fn span(&self) -> Span {
        Span::new(self.line, self.col)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn tokenize(mut self) -> Result<Vec<(Tok, Span)>, SyntaxError> {
        let mut out = Vec::new();
        loop {
            self.skip_trivia()?;
            let span = self.span();
            let Some(c) = self.bump() else {
                out.push((Tok::Eof, span));
                return Ok(out);
            };
            let tok = match c {
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '{' => Tok::LBrace,
                '}' => Tok::RBrace,
                '[' => Tok::LBracket,
                ']' => Tok::RBracket,
                ',' => Tok::Comma,
                ';' => Tok::Semi,
                '+' => Tok::Plus,
                '-' => Tok::Minus,
                '*' => Tok::Star,
                '/' => Tok::Slash,
                '%' => Tok::Percent,
                '^' => Tok::Caret,
                '=' if self.eat('=') => Tok::EqEq,
                '=' => Tok::Assign,
                '!' if self.eat('=') => Tok::NotEq,
                '!' => Tok::Bang,
                '<' if self.eat('=') => Tok::Le,
                '<' => Tok::Lt,
                '>' if self.eat('=') => Tok::Ge,
                '>' => Tok::Gt,
                '&' if self.eat('&') => Tok::AndAnd,
                '|' if self.eat('|') => Tok::OrOr,
                '|' => Tok::Pipe,
                '\'' => self.char_lit(span)?,
                '"' => self.str_lit(span)?,
                c if c.is_ascii_digit() => self.number(c, span)?,
                c if c.is_alphabetic() || c == '_' => {
                    let mut word = String::from(c);
                    while let Some(n) = self.peek() {
                        if n.is_alphanumeric() || n == '_' {
                            word.push(n);
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    keyword(&word).unwrap_or(Tok::Ident(word))
                }
                other => {
                    return Err(SyntaxError::new(
                        span,
                        alloc::format!("unexpected character {other:?}"),
                    ))
                }
            };
            out.push((tok, span));
        }
    }

    fn skip_trivia(&mut self) -> Result<(), SyntaxError> {
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('/') => {
                    let mut ahead = self.chars.clone();
                    ahead.next();
                    match ahead.next() {
                        Some('/') => {
                            while let Some(c) = self.bump() {
                                if c == '\n' {
                                    break;
                                }
                            }
                        }
                        Some('*') => {
                            let start = self.span();
                            self.bump();
                            self.bump();
                            let mut prev = '\0';
                            loop {
                                match self.bump() {
                                    Some('/') if prev == '*' => break,
                                    Some(c) => prev = c,
                                    None => {
                                        return Err(SyntaxError::new(
                                            start,
                                            "unterminated block comment",
                                        ))
                                    }
                                }
                            }
                        }
                        _ => return Ok(()),
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    fn escape(&mut self, span: Span) -> Result<char, SyntaxError> {
        let c = self
            .bump()
            .ok_or_else(|| SyntaxError::new(span, "unterminated escape"))?;
        Ok(match c {
            'n' => '\n',
            't' => '\t',
            'r' => '\r',
            '0' => '\0',
            '\\' => '\\',
            '\'' => '\'',
            '"' => '"',
            'u' => {
                if !self.eat('{') {
                    return Err(SyntaxError::new(span, "expected `{` after \\u"));
                }
                let mut code = 0u32;
                let mut digits = 0;
                loop {
                    match self.bump() {
                        Some('}') if digits > 0 => break,
                        Some(d) if d.is_ascii_hexdigit() && digits < 6 => {
                            code = code * 16 + d.to_digit(16).unwrap_or(0);
                            digits += 1;
                        }
                        _ => return Err(SyntaxError::new(span, "malformed \\u{...} escape")),
                    }
                }
                char::from_u32(code)
                    .ok_or_else(|| SyntaxError::new(span, "invalid code point in escape"))?
            }
            other => {
                return Err(SyntaxError::new(
                    span,
                    alloc::format!("unknown escape \\{other}"),
                ))
            }
        })
    }

    fn char_lit(&mut self, span: Span) -> Result<Tok, SyntaxError> {
        let c = match self.bump() {
            Some('\\') => self.escape(span)?,
            Some('\'') | None => return Err(SyntaxError::new(span, "empty char literal")),
            Some(c) => c,
        };
        if !self.eat('\'') {
            return Err(SyntaxError::new(span, "unterminated char literal"));
        }
        Ok(Tok::Char(c))
    }

    fn str_lit(&mut self, span: Span) -> Result<Tok, SyntaxError> {
        let mut s = String::new();
        loop {
            match self.bump() {
                Some('"') => return Ok(Tok::Str(s)),
                Some('\\') => s.push(self.escape(span)?),
                Some(c) => s.push(c),
                None => return Err(SyntaxError::new(span, "unterminated string literal")),
            }
        }
    }

    fn number(&mut self, first: char, span: Span) -> Result<Tok, SyntaxError> {
        let mut text = String::from(first);
        let mut is_float = false;
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() {
                text.push(c);
                self.bump();
            } else if c == '.' && !is_float {
                let mut ahead = self.chars.clone();
                ahead.next();
                if !matches!(ahead.next(), Some(d) if d.is_ascii_digit()) {
                    break;
                }
                is_float = true;
                text.push(c);
                self.bump();
            } else if (c == 'e' || c == 'E') && is_float {
                text.push(c);
                self.bump();
                if let Some(sign @ ('+' | '-')) = self.peek() {
                    text.push(sign);
                    self.bump();
                }
            } else {
                break;
            }
        }
        if is_float {
            text.parse::<f64>()
                .map(Tok::Float)
                .map_err(|_| SyntaxError::new(span, alloc::format!("malformed float `{text}`")))
        } else {
            text.parse::<i64>().map(Tok::Int).map_err(|_| {
                SyntaxError::new(span, alloc::format!("integer literal `{text}` out of range"))
            })
        }
    }
}
