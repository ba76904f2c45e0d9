//! OpenQASM 2.0 reader and writer for the supported gate subset.

use std::fmt::Write as _;

use thiserror::Error;

use super::{Circuit, Gate, GateKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QasmError {
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax {
        line: usize,
        col: usize,
        msg: String,
    },
    #[error("{line}:{col}: unsupported gate `{name}`")]
    UnsupportedGate {
        name: String,
        line: usize,
        col: usize,
    },
    #[error("{line}:{col}: unsupported construct: {what}")]
    Unsupported {
        what: String,
        line: usize,
        col: usize,
    },
    #[error("{line}:{col}: register size mismatch: {msg}")]
    RegisterMismatch {
        msg: String,
        line: usize,
        col: usize,
    },
    #[error("{line}:{col}: index {index} out of range for register `{reg}` of size {size}")]
    IndexOutOfRange {
        reg: String,
        index: usize,
        size: usize,
        line: usize,
        col: usize,
    },
    #[error("{line}:{col}: duplicate operand q[{index}]")]
    DuplicateOperand {
        index: usize,
        line: usize,
        col: usize,
    },
    #[error("{line}:{col}: unknown register `{name}`")]
    UnknownRegister {
        name: String,
        line: usize,
        col: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    Str(String),
    Arrow,
    Sym(char),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str) -> Result<(Vec<Token>, Option<String>), QasmError> {
    let mut out = Vec::new();
    let mut name = None;
    let chars: Vec<char> = src.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            let start = i + 2;
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            let comment: String = chars[start..i].iter().collect();
            if let Some(rest) = comment.trim().strip_prefix("circuit:") {
                if name.is_none() {
                    name = Some(rest.trim().to_string());
                }
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            out.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                line: tl,
                col: tc,
            });
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            col += i - start;
            let v = text.parse::<f64>().map_err(|_| QasmError::Syntax {
                line: tl,
                col: tc,
                msg: format!("bad number `{text}`"),
            })?;
            out.push(Token {
                tok: Tok::Num(v),
                line: tl,
                col: tc,
            });
            continue;
        }
        if c == '"' {
            let start = i + 1;
            i += 1;
            while i < chars.len() && chars[i] != '"' && chars[i] != '\n' {
                i += 1;
            }
            if i >= chars.len() || chars[i] != '"' {
                return Err(QasmError::Syntax {
                    line: tl,
                    col: tc,
                    msg: "unterminated string".into(),
                });
            }
            let s: String = chars[start..i].iter().collect();
            i += 1;
            col += s.chars().count() + 2;
            out.push(Token {
                tok: Tok::Str(s),
                line: tl,
                col: tc,
            });
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'>') {
            i += 2;
            col += 2;
            out.push(Token {
                tok: Tok::Arrow,
                line: tl,
                col: tc,
            });
            continue;
        }
        if "[](),;+-*/^{}=<>".contains(c) {
            i += 1;
            col += 1;
            out.push(Token {
                tok: Tok::Sym(c),
                line: tl,
                col: tc,
            });
            continue;
        }
        return Err(QasmError::Syntax {
            line: tl,
            col: tc,
            msg: format!("unexpected character `{c}`"),
        });
    }
    Ok((out, name))
}

struct Register {
    name: String,
    size: usize,
}

/// One operand as written: either a single bit or a whole register.
enum Arg {
    Bit(usize),
    Whole,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    eof: (usize, usize),
    qreg: Option<Register>,
    creg: Option<Register>,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    fn here(&self) -> (usize, usize) {
        self.peek().map(|t| (t.line, t.col)).unwrap_or(self.eof)
    }

    fn syntax<T>(&self, msg: impl Into<String>) -> Result<T, QasmError> {
        let (line, col) = self.here();
        Err(QasmError::Syntax {
            line,
            col,
            msg: msg.into(),
        })
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn eat_sym(&mut self, c: char) -> bool {
        if matches!(self.peek(), Some(Token { tok: Tok::Sym(s), .. }) if *s == c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, c: char) -> Result<(), QasmError> {
        if self.eat_sym(c) {
            Ok(())
        } else {
            self.syntax(format!("expected `{c}`"))
        }
    }

    fn expect_ident(&mut self) -> Result<(String, usize, usize), QasmError> {
        match self.next() {
            Some(Token {
                tok: Tok::Ident(s),
                line,
                col,
            }) => Ok((s, line, col)),
            _ => {
                self.pos = self.pos.saturating_sub(1);
                self.syntax("expected identifier")
            }
        }
    }

    fn expect_uint(&mut self) -> Result<usize, QasmError> {
        match self.peek().cloned() {
            Some(Token { tok: Tok::Num(v), .. }) if v >= 0.0 && v.fract() == 0.0 => {
                self.pos += 1;
                Ok(v as usize)
            }
            _ => self.syntax("expected non-negative integer"),
        }
    }

    // expr := term (('+'|'-') term)*
    fn expr(&mut self) -> Result<f64, QasmError> {
        let mut v = self.term()?;
        loop {
            if self.eat_sym('+') {
                v += self.term()?;
            } else if self.eat_sym('-') {
                v -= self.term()?;
            } else {
                return Ok(v);
            }
        }
    }

    fn term(&mut self) -> Result<f64, QasmError> {
        let mut v = self.power()?;
        loop {
            if self.eat_sym('*') {
                v *= self.power()?;
            } else if self.eat_sym('/') {
                v /= self.power()?;
            } else {
                return Ok(v);
            }
        }
    }

    fn power(&mut self) -> Result<f64, QasmError> {
        let base = self.unary()?;
        if self.eat_sym('^') {
            let exp = self.power()?;
            Ok(base.powf(exp))
        } else {
            Ok(base)
        }
    }

    fn unary(&mut self) -> Result<f64, QasmError> {
        if self.eat_sym('-') {
            return Ok(-self.unary()?);
        }
        if self.eat_sym('+') {
            return self.unary();
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<f64, QasmError> {
        match self.peek().cloned() {
            Some(Token { tok: Tok::Num(v), .. }) => {
                self.pos += 1;
                Ok(v)
            }
            Some(Token { tok: Tok::Sym('('), .. }) => {
                self.pos += 1;
                let v = self.expr()?;
                self.expect_sym(')')?;
                Ok(v)
            }
            Some(Token {
                tok: Tok::Ident(name),
                ..
            }) => {
                self.pos += 1;
                if name == "pi" {
                    return Ok(std::f64::consts::PI);
                }
                let f: fn(f64) -> f64 = match name.as_str() {
                    "sin" => f64::sin,
                    "cos" => f64::cos,
                    "tan" => f64::tan,
                    "exp" => f64::exp,
                    "ln" => f64::ln,
                    "sqrt" => f64::sqrt,
                    _ => {
                        self.pos -= 1;
                        return self.syntax(format!("unknown identifier `{name}` in expression"));
                    }
                };
                self.expect_sym('(')?;
                let v = self.expr()?;
                self.expect_sym(')')?;
                Ok(f(v))
            }
            _ => self.syntax("expected expression"),
        }
    }

    fn reg_decl(&mut self, quantum: bool) -> Result<(), QasmError> {
        let (line, col) = self.here();
        let (name, _, _) = self.expect_ident()?;
        self.expect_sym('[')?;
        let size = self.expect_uint()?;
        self.expect_sym(']')?;
        self.expect_sym(';')?;
        let slot = if quantum { &mut self.qreg } else { &mut self.creg };
        if slot.is_some() {
            return Err(QasmError::Unsupported {
                what: format!(
                    "more than one {} register",
                    if quantum { "quantum" } else { "classical" }
                ),
                line,
                col,
            });
        }
        if quantum && size == 0 {
            return Err(QasmError::RegisterMismatch {
                msg: "quantum register must be non-empty".into(),
                line,
                col,
            });
        }
        *slot = Some(Register { name, size });
        Ok(())
    }

    fn arg(&mut self, quantum: bool) -> Result<Arg, QasmError> {
        let (name, line, col) = self.expect_ident()?;
        let reg = if quantum { &self.qreg } else { &self.creg };
        let Some(reg) = reg else {
            return Err(QasmError::UnknownRegister { name, line, col });
        };
        if reg.name != name {
            return Err(QasmError::UnknownRegister { name, line, col });
        }
        let size = reg.size;
        if self.eat_sym('[') {
            let index = self.expect_uint()?;
            self.expect_sym(']')?;
            if index >= size {
                return Err(QasmError::IndexOutOfRange {
                    reg: name,
                    index,
                    size,
                    line,
                    col,
                });
            }
            Ok(Arg::Bit(index))
        } else {
            Ok(Arg::Whole)
        }
    }

    fn qsize(&self) -> usize {
        self.qreg.as_ref().map(|r| r.size).unwrap_or(0)
    }

    fn statement(&mut self, circuit: &mut Circuit) -> Result<(), QasmError> {
        let (kw, line, col) = self.expect_ident()?;
        match kw.as_str() {
            "OPENQASM" => {
                match self.next() {
                    Some(Token { tok: Tok::Num(v), .. }) if v == 2.0 => {}
                    _ => {
                        return Err(QasmError::Unsupported {
                            what: "only OpenQASM 2.0 is supported".into(),
                            line,
                            col,
                        })
                    }
                }
                self.expect_sym(';')
            }
            "include" => {
                match self.next() {
                    Some(Token { tok: Tok::Str(_), .. }) => {}
                    _ => {
                        self.pos = self.pos.saturating_sub(1);
                        return self.syntax("expected file name string");
                    }
                }
                self.expect_sym(';')
            }
            "qreg" => self.reg_decl(true),
            "creg" => self.reg_decl(false),
            "gate" | "opaque" | "if" | "reset" => Err(QasmError::Unsupported {
                what: format!("`{kw}` statements"),
                line,
                col,
            }),
            "measure" => {
                let q = self.arg(true)?;
                match self.next() {
                    Some(Token { tok: Tok::Arrow, .. }) => {}
                    _ => {
                        self.pos = self.pos.saturating_sub(1);
                        return self.syntax("expected `->`");
                    }
                }
                let c = self.arg(false)?;
                self.expect_sym(';')?;
                match (q, c) {
                    (Arg::Bit(q), Arg::Bit(c)) => circuit.gates.push(Gate::measure(q, c)),
                    (Arg::Whole, Arg::Whole) => {
                        let cs = self.creg.as_ref().map(|r| r.size).unwrap_or(0);
                        if cs != self.qsize() {
                            return Err(QasmError::RegisterMismatch {
                                msg: format!("measure of {} qubits into {cs} bits", self.qsize()),
                                line,
                                col,
                            });
                        }
                        for i in 0..cs {
                            circuit.gates.push(Gate::measure(i, i));
                        }
                    }
                    _ => {
                        return Err(QasmError::RegisterMismatch {
                            msg: "cannot measure a register into a single bit or vice versa"
                                .into(),
                            line,
                            col,
                        })
                    }
                }
                Ok(())
            }
            "barrier" => {
                let mut qubits = Vec::new();
                loop {
                    match self.arg(true)? {
                        Arg::Bit(q) => qubits.push(q),
                        Arg::Whole => qubits.extend(0..self.qsize()),
                    }
                    if !self.eat_sym(',') {
                        break;
                    }
                }
                self.expect_sym(';')?;
                let mut seen = Vec::new();
                for q in qubits {
                    if seen.contains(&q) {
                        return Err(QasmError::DuplicateOperand { index: q, line, col });
                    }
                    seen.push(q);
                }
                circuit.gates.push(Gate::barrier(seen));
                Ok(())
            }
            _ => {
                let Some(kind) = GateKind::from_name(&kw) else {
                    return Err(QasmError::UnsupportedGate { name: kw, line, col });
                };
                let mut params = Vec::new();
                if self.eat_sym('(')
                    && !self.eat_sym(')') {
                        loop {
                            params.push(self.expr()?);
                            if !self.eat_sym(',') {
                                break;
                            }
                        }
                        self.expect_sym(')')?;
                    }
                if params.len() != kind.num_params() {
                    return Err(QasmError::Syntax {
                        line,
                        col,
                        msg: format!(
                            "`{kw}` takes {} parameter(s), got {}",
                            kind.num_params(),
                            params.len()
                        ),
                    });
                }
                let mut args = Vec::new();
                loop {
                    args.push(self.arg(true)?);
                    if !self.eat_sym(',') {
                        break;
                    }
                }
                self.expect_sym(';')?;
                let arity = kind.arity().unwrap_or(1);
                if args.len() != arity {
                    return Err(QasmError::Syntax {
                        line,
                        col,
                        msg: format!("`{kw}` takes {arity} operand(s), got {}", args.len()),
                    });
                }
                if arity == 1 {
                    let targets: Vec<usize> = match args[0] {
                        Arg::Bit(q) => vec![q],
                        Arg::Whole => (0..self.qsize()).collect(),
                    };
                    for q in targets {
                        circuit.gates.push(Gate {
                            kind,
                            qubits: vec![q],
                            params: params.clone(),
                            clbit: None,
                        });
                    }
                    return Ok(());
                }
                let mut qubits = Vec::new();
                for a in args {
                    match a {
                        Arg::Bit(q) => qubits.push(q),
                        Arg::Whole => {
                            return Err(QasmError::Unsupported {
                                what: "register broadcast on two-qubit gates".into(),
                                line,
                                col,
                            })
                        }
                    }
                }
                if qubits[0] == qubits[1] {
                    return Err(QasmError::DuplicateOperand {
                        index: qubits[0],
                        line,
                        col,
                    });
                }
                circuit.gates.push(Gate {
                    kind,
                    qubits,
                    params,
                    clbit: None,
                });
                Ok(())
            }
        }
    }
}

/// Parses OpenQASM 2.0 source restricted to one quantum register, at most one
/// classical register and the gate set of [`GateKind`].
pub fn parse_qasm(src: &str) -> Result<Circuit, QasmError> {
    let (toks, name) = lex(src)?;
    let eof = toks.last().map(|t| (t.line, t.col + 1)).unwrap_or((1, 1));
    let mut p = Parser {
        toks,
        pos: 0,
        eof,
        qreg: None,
        creg: None,
    };
    let mut circuit = Circuit::new(name.unwrap_or_else(|| "circuit".to_string()), 0);
    while p.peek().is_some() {
        if p.qreg.is_none() {
            if let Some(Token {
                tok: Tok::Ident(kw),
                line,
                col,
            }) = p.peek().cloned()
            {
                if !matches!(kw.as_str(), "OPENQASM" | "include" | "qreg" | "creg") {
                    return Err(QasmError::Syntax {
                        line,
                        col,
                        msg: "gate before quantum register declaration".into(),
                    });
                }
            }
        }
        p.statement(&mut circuit)?;
    }
    let Some(qreg) = p.qreg else {
        let (line, col) = p.eof;
        return Err(QasmError::Syntax {
            line,
            col,
            msg: "no quantum register declared".into(),
        });
    };
    circuit.num_qubits = qreg.size;
    circuit.num_clbits = p.creg.map(|c| c.size).unwrap_or(0);
    Ok(circuit)
}

/// Writes a circuit as OpenQASM 2.0 with a header recording its name and width.
pub fn emit_qasm(c: &Circuit) -> String {
    let mut out = String::new();
    writeln!(out, "// circuit: {}", c.name).unwrap();
    writeln!(out, "// qubits: {}", c.num_qubits).unwrap();
    out.push_str("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
    writeln!(out, "qreg q[{}];", c.num_qubits).unwrap();
    if c.num_clbits > 0 {
        writeln!(out, "creg c[{}];", c.num_clbits).unwrap();
    }
    for g in &c.gates {
        out.push_str(&gate_line(g));
        out.push('\n');
    }
    out
}

pub(crate) fn gate_line(g: &Gate) -> String {
    let mut s = String::from(g.kind.name());
    if !g.params.is_empty() {
        let ps: Vec<String> = g.params.iter().map(|p| format!("{p:?}")).collect();
        write!(s, "({})", ps.join(",")).unwrap();
    }
    let qs: Vec<String> = g.qubits.iter().map(|q| format!("q[{q}]")).collect();
    write!(s, " {}", qs.join(",")).unwrap();
    if g.kind == GateKind::Measure {
        write!(s, " -> c[{}]", g.clbit.unwrap_or(g.qubits[0])).unwrap();
    }
    s.push(';');
    s
}
