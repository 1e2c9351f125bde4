//! Parser for the textual form. Whitespace and newlines are interchangeable;
//! `#` starts a line comment. Parsing also runs the verifier, so a returned
//! module is always well-formed.

use crate::ir::{Global, InstKind, Instr, Operand, TirBlock, TirFunction, TirModule};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
#[error("parse error at {line}:{col}: {msg}")]
pub struct ParseError {
    pub line: u32,
    pub col: u32,
    pub msg: String,
}

#[derive(Debug, Error)]
pub enum ModuleError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Verify(#[from] crate::verify::VerifyError),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Reg(String),
    At(String),
    Int(i64),
    Punct(char),
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: u32,
    col: u32,
}

fn is_ident_start(c: u8) -> bool {
    c.is_ascii_alphabetic() || c == b'_'
}

fn is_ident_char(c: u8) -> bool {
    c.is_ascii_alphanumeric() || c == b'_' || c == b'.'
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Lexer<'a> {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError {
            line: self.line,
            col: self.col,
            msg: msg.into(),
        }
    }

    fn bump(&mut self) -> u8 {
        let c = self.src[self.pos];
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        c
    }

    fn skip_trivia(&mut self) {
        while self.pos < self.src.len() {
            let c = self.src[self.pos];
            if c.is_ascii_whitespace() {
                self.bump();
            } else if c == b'#' {
                while self.pos < self.src.len() && self.src[self.pos] != b'\n' {
                    self.bump();
                }
            } else {
                break;
            }
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        if self.pos >= self.src.len() || !is_ident_start(self.src[self.pos]) {
            return Err(self.err("expected identifier"));
        }
        let start = self.pos;
        while self.pos < self.src.len() && is_ident_char(self.src[self.pos]) {
            self.bump();
        }
        Ok(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
    }

    /// Next token plus its source position, or None at end of input.
    fn next(&mut self) -> Result<Option<(Tok, u32, u32)>, ParseError> {
        self.skip_trivia();
        if self.pos >= self.src.len() {
            return Ok(None);
        }
        let (line, col) = (self.line, self.col);
        let c = self.src[self.pos];
        let tok = match c {
            b'%' => {
                self.bump();
                Tok::Reg(self.ident()?)
            }
            b'@' => {
                self.bump();
                Tok::At(self.ident()?)
            }
            b'{' | b'}' | b'(' | b')' | b'[' | b']' | b':' | b'=' | b',' => {
                self.bump();
                Tok::Punct(c as char)
            }
            b'-' => {
                self.bump();
                if self.pos >= self.src.len() || !self.src[self.pos].is_ascii_digit() {
                    return Err(self.err("expected digits after '-'"));
                }
                let mag = self.int_digits()?;
                if mag > i64::MAX as u64 + 1 {
                    return Err(self.err("integer literal out of range"));
                }
                Tok::Int((mag as i64).wrapping_neg())
            }
            c if c.is_ascii_digit() => {
                let mag = self.int_digits()?;
                if mag > i64::MAX as u64 {
                    return Err(self.err("integer literal out of range"));
                }
                Tok::Int(mag as i64)
            }
            c if is_ident_start(c) => Tok::Ident(self.ident()?),
            other => return Err(self.err(format!("unexpected character '{}'", other as char))),
        };
        Ok(Some((tok, line, col)))
    }

    /// Unsigned magnitude of a digit run; callers apply sign and range checks.
    fn int_digits(&mut self) -> Result<u64, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.bump();
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        text.parse()
            .map_err(|_| self.err("integer literal out of range"))
    }
}

struct Parser<'a> {
    lex: Lexer<'a>,
    peeked: Option<Option<(Tok, u32, u32)>>,
}

impl<'a> Parser<'a> {
    fn peek(&mut self) -> Result<Option<&(Tok, u32, u32)>, ParseError> {
        if self.peeked.is_none() {
            self.peeked = Some(self.lex.next()?);
        }
        Ok(self.peeked.as_ref().unwrap().as_ref())
    }

    fn advance(&mut self) -> Result<Option<(Tok, u32, u32)>, ParseError> {
        match self.peeked.take() {
            Some(t) => Ok(t),
            None => self.lex.next(),
        }
    }

    fn err_at(&self, line: u32, col: u32, msg: impl Into<String>) -> ParseError {
        ParseError {
            line,
            col,
            msg: msg.into(),
        }
    }

    fn expect_tok(&mut self, want: &Tok, what: &str) -> Result<(), ParseError> {
        match self.advance()? {
            Some((t, _, _)) if t == *want => Ok(()),
            Some((t, l, c)) => Err(self.err_at(l, c, format!("expected {what}, found {t:?}"))),
            None => Err(self.lex.err(format!("expected {what}, found end of input"))),
        }
    }

    fn expect_punct(&mut self, p: char) -> Result<(), ParseError> {
        self.expect_tok(&Tok::Punct(p), &format!("'{p}'"))
    }

    fn expect_at(&mut self) -> Result<String, ParseError> {
        match self.advance()? {
            Some((Tok::At(s), _, _)) => Ok(s),
            Some((t, l, c)) => Err(self.err_at(l, c, format!("expected '@name', found {t:?}"))),
            None => Err(self.lex.err("expected '@name', found end of input")),
        }
    }

    fn expect_int(&mut self) -> Result<i64, ParseError> {
        match self.advance()? {
            Some((Tok::Int(v), _, _)) => Ok(v),
            Some((t, l, c)) => Err(self.err_at(l, c, format!("expected integer, found {t:?}"))),
            None => Err(self.lex.err("expected integer, found end of input")),
        }
    }

    fn expect_label(&mut self) -> Result<String, ParseError> {
        match self.advance()? {
            Some((Tok::Ident(s), _, _)) => Ok(s),
            Some((t, l, c)) => Err(self.err_at(l, c, format!("expected label, found {t:?}"))),
            None => Err(self.lex.err("expected label, found end of input")),
        }
    }

    fn operand(&mut self) -> Result<Operand, ParseError> {
        match self.advance()? {
            Some((Tok::Reg(r), _, _)) => Ok(Operand::Reg(r)),
            Some((Tok::Int(v), _, _)) => Ok(Operand::Lit(v)),
            Some((Tok::At(g), _, _)) => Ok(Operand::Global(g)),
            Some((t, l, c)) => Err(self.err_at(l, c, format!("expected operand, found {t:?}"))),
            None => Err(self.lex.err("expected operand, found end of input")),
        }
    }

    /// Comma-separated operand list; stops at the first token that does not
    /// continue the list (used because instructions need no line breaks).
    fn operand_list(&mut self, first: Operand) -> Result<Vec<Operand>, ParseError> {
        let mut ops = vec![first];
        while matches!(self.peek()?, Some((Tok::Punct(','), _, _))) {
            self.advance()?;
            ops.push(self.operand()?);
        }
        Ok(ops)
    }

    fn instr_with_dest(&mut self, dest: String) -> Result<Instr, ParseError> {
        self.expect_punct('=')?;
        let (kind, l, c) = match self.advance()? {
            Some((Tok::Ident(s), l, c)) => (
                InstKind::from_name(&s)
                    .ok_or_else(|| self.err_at(l, c, format!("unknown instruction '{s}'")))?,
                l,
                c,
            ),
            Some((t, l, c)) => {
                return Err(self.err_at(l, c, format!("expected instruction, found {t:?}")))
            }
            None => return Err(self.lex.err("expected instruction, found end of input")),
        };
        if !kind.has_dest() {
            return Err(self.err_at(l, c, format!("'{}' takes no destination", kind.name())));
        }
        let first = self.operand()?;
        let ops = self.operand_list(first)?;
        Ok(Instr::new(kind, Some(dest), ops))
    }

    fn instr_no_dest(&mut self, kw: String, l: u32, c: u32) -> Result<Instr, ParseError> {
        match kw.as_str() {
            "store" => {
                let value = self.operand()?;
                self.expect_punct(',')?;
                let global = self.operand()?;
                self.expect_punct(',')?;
                let index = self.operand()?;
                Ok(Instr::new(InstKind::Store, None, vec![value, global, index]))
            }
            "br" => {
                let cond = self.operand()?;
                self.expect_punct(',')?;
                let t1 = self.expect_label()?;
                self.expect_punct(',')?;
                let t2 = self.expect_label()?;
                let mut i = Instr::new(InstKind::Br, None, vec![cond]);
                i.targets = vec![t1, t2];
                Ok(i)
            }
            "jmp" => {
                let t = self.expect_label()?;
                let mut i = Instr::new(InstKind::Jmp, None, vec![]);
                i.targets = vec![t];
                Ok(i)
            }
            "ret" => Ok(Instr::new(InstKind::Ret, None, vec![self.operand()?])),
            "print" => Ok(Instr::new(InstKind::Print, None, vec![self.operand()?])),
            other => Err(self.err_at(l, c, format!("unexpected '{other}'"))),
        }
    }

    fn function(&mut self) -> Result<TirFunction, ParseError> {
        let name = self.expect_at()?;
        self.expect_punct('(')?;
        let mut params = Vec::new();
        loop {
            match self.advance()? {
                Some((Tok::Punct(')'), _, _)) => break,
                Some((Tok::Reg(r), _, _)) => {
                    params.push(r);
                    match self.advance()? {
                        Some((Tok::Punct(','), _, _)) => continue,
                        Some((Tok::Punct(')'), _, _)) => break,
                        Some((t, l, c)) => {
                            return Err(self.err_at(l, c, format!("expected ',' or ')', found {t:?}")))
                        }
                        None => return Err(self.lex.err("unterminated parameter list")),
                    }
                }
                Some((t, l, c)) => {
                    return Err(self.err_at(l, c, format!("expected parameter, found {t:?}")))
                }
                None => return Err(self.lex.err("unterminated parameter list")),
            }
        }
        self.expect_punct('{')?;
        let mut blocks: Vec<TirBlock> = Vec::new();
        loop {
            match self.advance()? {
                Some((Tok::Punct('}'), _, _)) => break,
                Some((Tok::Ident(word), l, c)) => {
                    if matches!(self.peek()?, Some((Tok::Punct(':'), _, _))) {
                        self.advance()?;
                        blocks.push(TirBlock {
                            label: word,
                            instrs: Vec::new(),
                        });
                    } else {
                        let instr = self.instr_no_dest(word, l, c)?;
                        match blocks.last_mut() {
                            Some(b) => b.instrs.push(instr),
                            None => {
                                return Err(self.err_at(l, c, "instruction before first label"))
                            }
                        }
                    }
                }
                Some((Tok::Reg(dest), l, c)) => {
                    let instr = self.instr_with_dest(dest)?;
                    match blocks.last_mut() {
                        Some(b) => b.instrs.push(instr),
                        None => return Err(self.err_at(l, c, "instruction before first label")),
                    }
                }
                Some((t, l, c)) => {
                    return Err(self.err_at(l, c, format!("expected label or instruction, found {t:?}")))
                }
                None => return Err(self.lex.err("unterminated function body")),
            }
        }
        Ok(TirFunction {
            name,
            params,
            blocks,
        })
    }

    fn module(&mut self) -> Result<TirModule, ParseError> {
        let mut m = TirModule {
            globals: Vec::new(),
            functions: Vec::new(),
            entry: "main".to_string(),
        };
        while let Some((tok, l, c)) = self.advance()? {
            match tok {
                Tok::Ident(kw) if kw == "global" => {
                    let name = self.expect_at()?;
                    self.expect_punct('[')?;
                    let len = self.expect_int()?;
                    self.expect_punct(']')?;
                    if len < 0 {
                        return Err(self.err_at(l, c, "global length must be non-negative"));
                    }
                    m.globals.push(Global {
                        name,
                        len: len as u64,
                    });
                }
                Tok::Ident(kw) if kw == "func" => m.functions.push(self.function()?),
                t => {
                    return Err(self.err_at(l, c, format!("expected 'global' or 'func', found {t:?}")))
                }
            }
        }
        Ok(m)
    }
}

/// Parse and verify a module from source text.
pub fn parse_module(src: &str) -> Result<TirModule, ModuleError> {
    let mut p = Parser {
        lex: Lexer::new(src),
        peeked: None,
    };
    let m = p.module()?;
    crate::verify::verify(&m)?;
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::printer::print_module;

    #[test]
    fn smallest_legal_program() {
        let m = parse_module("func @main(){ bb0: %r = const 7  ret %r }").unwrap();
        assert_eq!(m.functions.len(), 1);
        assert_eq!(m.entry, "main");
        assert_eq!(m.functions[0].blocks[0].instrs.len(), 2);
    }

    #[test]
    fn print_parse_print_is_identity() {
        let src = "global @g[4]\nfunc @main(){ bb0: %a = const -3  %b = add %a, 2\n store %b, @g, 0  %c = load @g, 0  br %c, one, two\none: jmp three\ntwo: jmp three\nthree: %r = call @f, %c  print %r  ret %r }\nfunc @f(%x){ e: %y = mul %x, 8  ret %y }";
        let m = parse_module(src).unwrap();
        let p1 = print_module(&m);
        let m2 = parse_module(&p1).unwrap();
        let p2 = print_module(&m2);
        assert_eq!(p1, p2);
        assert!(crate::ir::structurally_equal(&m, &m2));
    }

    #[test]
    fn comments_and_whitespace_are_trivia() {
        let a = parse_module("func @main() {\nbb0:\n  # say hi\n  %r = const 1\n  ret %r\n}\n").unwrap();
        let b = parse_module("func @main(){bb0:%r=const 1 ret %r}").unwrap();
        assert!(crate::ir::structurally_equal(&a, &b));
    }

    #[test]
    fn i64_extremes_round_trip() {
        let src = format!(
            "func @main(){{ bb0: %a = const {}  %b = const {}  ret %a }}",
            i64::MIN,
            i64::MAX
        );
        let m = parse_module(&src).unwrap();
        let b = &m.functions[0].blocks[0];
        assert_eq!(b.instrs[0].operands[0].as_lit(), Some(i64::MIN));
        assert_eq!(b.instrs[1].operands[0].as_lit(), Some(i64::MAX));
        let m2 = parse_module(&print_module(&m)).unwrap();
        assert!(crate::ir::structurally_equal(&m, &m2));
    }

    #[test]
    fn parse_errors_carry_position() {
        let e = match parse_module("func @main(){ bb0: %r = boop 7 ret %r }") {
            Err(ModuleError::Parse(e)) => e,
            other => panic!("expected parse error, got {other:?}"),
        };
        assert_eq!(e.line, 1);
        assert!(e.msg.contains("boop"));
        assert!(parse_module("func @main(){ bb0: ret 0 } garbage").is_err());
        assert!(parse_module("func @main(){ %r = const 1 ret %r }").is_err());
    }
}
