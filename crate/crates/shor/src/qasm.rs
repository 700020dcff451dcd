//! OpenQASM 2.0 emission and a parser for the emitted subset.

use std::f64::consts::PI;
use std::fmt::Write as _;

use shor_core::gateir::{Gate, GateCircuit, GateError, GateKind};
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum QasmError {
    #[error("{line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: unknown gate `{name}`")]
    UnknownGate { line: usize, col: usize, name: String },
    #[error("{line}:{col}: register `{name}` redeclared")]
    Redeclared { line: usize, col: usize, name: String },
    #[error("{line}:{col}: {source}")]
    Gate {
        line: usize,
        col: usize,
        #[source]
        source: GateError,
    },
    #[error("measured qubit {qubit} out of range for {num_qubits} qubits")]
    MeasureOutOfRange { qubit: usize, num_qubits: usize },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EmitOptions {
    /// Define c3x and c4x in terms of h, cx and u1 after the include line.
    pub preamble: bool,
}

/// `theta` as an exact multiple `p*pi/2^k` when one exists, otherwise a
/// 17-significant-digit decimal.
pub fn format_angle(theta: f64) -> String {
    if theta == 0.0 {
        return "0".into();
    }
    for k in 0..=60u32 {
        let d = (1u64 << k) as f64;
        let p = (theta * d / PI).round();
        if p.abs() > 1e15 {
            break;
        }
        if p != 0.0 && p * PI / d == theta {
            let p = p as i64;
            let num = match p {
                1 => "pi".to_string(),
                -1 => "-pi".to_string(),
                _ => format!("{p}*pi"),
            };
            return if k == 0 { num } else { format!("{num}/{}", 1u64 << k) };
        }
    }
    format!("{theta:.16e}")
}

fn gate_line(out: &mut String, g: &Gate, name_of: &dyn Fn(usize) -> String) {
    out.push_str(g.kind().name());
    if !g.angles().is_empty() {
        let angles: Vec<String> = g.angles().iter().map(|&a| format_angle(a)).collect();
        let _ = write!(out, "({})", angles.join(","));
    }
    let args: Vec<String> = g.qubits().iter().map(|&q| name_of(q)).collect();
    let _ = write!(out, " {};", args.join(","));
}

/// `C^kX` as `H; C^kZ; H`, with `C^kZ` expanded over parities: the product
/// `x_1 ... x_n` equals `2^(1-n) * sum_T (-1)^(|T|+1) parity_T(x)` over
/// nonempty subsets `T`, so each subset is a CX ladder around one U1.
pub fn mcx_decomposition(controls: &[usize], target: usize) -> Vec<Gate> {
    let mut qs = controls.to_vec();
    qs.push(target);
    let k = qs.len();
    let mut gates = vec![Gate::h(target)];
    for mask in 1u32..(1 << k) {
        let members: Vec<usize> = (0..k).filter(|i| mask >> i & 1 == 1).map(|i| qs[i]).collect();
        let sign = if members.len() % 2 == 1 { 1.0 } else { -1.0 };
        let theta = sign * PI / (1u64 << (k - 1)) as f64;
        let (last, rest) = members.split_last().unwrap();
        let ladder: Vec<Gate> = rest.iter().map(|&q| Gate::cx(q, *last)).collect();
        gates.extend(ladder.iter().copied());
        gates.push(Gate::u1(theta, *last));
        gates.extend(ladder.iter().rev().copied());
    }
    gates.push(Gate::h(target));
    gates
}

/// Definitions of c3x and c4x for consumers whose qelib1 lacks them.
pub fn preamble() -> String {
    let formal = ["a", "b", "c", "d", "e"];
    let mut out = String::new();
    for (name, k) in [("c3x", 3usize), ("c4x", 4)] {
        let params = formal[..=k].join(",");
        let _ = writeln!(out, "gate {name} {params}");
        out.push_str("{\n");
        let controls: Vec<usize> = (0..k).collect();
        for g in mcx_decomposition(&controls, k) {
            out.push_str("  ");
            gate_line(&mut out, &g, &|q| formal[q].to_string());
            out.push('\n');
        }
        out.push_str("}\n");
    }
    out
}

/// Serialises `c`, measuring `measured[j]` into `c[j]`.
pub fn emit(c: &GateCircuit, measured: &[usize], options: EmitOptions) -> Result<String, QasmError> {
    if let Some(&q) = measured.iter().find(|&&q| q >= c.num_qubits()) {
        return Err(QasmError::MeasureOutOfRange {
            qubit: q,
            num_qubits: c.num_qubits(),
        });
    }
    let mut out = String::with_capacity(c.len() * 24 + 128);
    out.push_str("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
    if options.preamble {
        out.push_str(&preamble());
    }
    let _ = writeln!(out, "qreg q[{}];", c.num_qubits());
    let _ = writeln!(out, "creg c[{}];", measured.len());
    let name = |q: usize| format!("q[{q}]");
    for g in c.gates() {
        gate_line(&mut out, g, &name);
        out.push('\n');
    }
    for (j, q) in measured.iter().enumerate() {
        let _ = writeln!(out, "measure q[{q}] -> c[{j}];");
    }
    Ok(out)
}

/// A parsed document: the circuit and the qubit measured into each
/// classical bit, in bit order.
#[derive(Clone, Debug, PartialEq)]
pub struct Parsed {
    pub circuit: GateCircuit,
    pub measured: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Tok<'a> {
    Ident(&'a str),
    Int(u64),
    Real(f64),
    Str(&'a str),
    Sym(&'static str),
}

#[derive(Clone, Copy, Debug)]
struct Token<'a> {
    tok: Tok<'a>,
    line: usize,
    col: usize,
}

const SYMBOLS: [&str; 13] = ["->", ";", ",", "[", "]", "(", ")", "{", "}", "+", "-", "*", "/"];

fn lex(text: &str) -> Result<Vec<Token<'_>>, QasmError> {
    let mut out = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let src = raw.split("//").next().unwrap_or("");
        let bytes = src.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let ch = bytes[i] as char;
            let col = i + 1;
            if ch.is_ascii_whitespace() {
                i += 1;
            } else if ch.is_ascii_alphabetic() || ch == '_' {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push(Token { tok: Tok::Ident(&src[start..i]), line, col });
            } else if ch.is_ascii_digit() || (ch == '.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
                let start = i;
                let mut real = false;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    real |= bytes[i] == b'.';
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    real = true;
                    i += 1;
                    if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
                        i += 1;
                    }
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                let lit = &src[start..i];
                let bad = || QasmError::Syntax { line, col, msg: format!("malformed number `{lit}`") };
                let tok = if real {
                    Tok::Real(lit.parse().map_err(|_| bad())?)
                } else {
                    Tok::Int(lit.parse().map_err(|_| bad())?)
                };
                out.push(Token { tok, line, col });
            } else if ch == '"' {
                let end = src[i + 1..].find('"').ok_or(QasmError::Syntax {
                    line,
                    col,
                    msg: "unterminated string".into(),
                })?;
                out.push(Token { tok: Tok::Str(&src[i + 1..i + 1 + end]), line, col });
                i += end + 2;
            } else if let Some(sym) = SYMBOLS.iter().find(|s| src[i..].starts_with(**s)) {
                out.push(Token { tok: Tok::Sym(sym), line, col });
                i += sym.len();
            } else {
                return Err(QasmError::Syntax { line, col, msg: format!("unexpected character `{ch}`") });
            }
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Token<'a>>,
    pos: usize,
    /// Position just past the last token, for end-of-input errors.
    end: (usize, usize),
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token<'a>> {
        self.toks.get(self.pos)
    }

    fn here(&self) -> (usize, usize) {
        self.peek().map_or(self.end, |t| (t.line, t.col))
    }

    fn error(&self, msg: impl Into<String>) -> QasmError {
        let (line, col) = self.here();
        QasmError::Syntax { line, col, msg: msg.into() }
    }

    fn next(&mut self) -> Option<Token<'a>> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Token { tok: Tok::Sym(x), .. }) if *x == s)
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), QasmError> {
        if self.is_sym(s) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(format!("expected `{s}`")))
        }
    }

    fn ident(&mut self) -> Result<&'a str, QasmError> {
        match self.peek() {
            Some(&Token { tok: Tok::Ident(s), .. }) => {
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.error("expected identifier")),
        }
    }

    fn int(&mut self) -> Result<u64, QasmError> {
        match self.peek() {
            Some(Token { tok: Tok::Int(v), .. }) => {
                let v = *v;
                self.pos += 1;
                Ok(v)
            }
            _ => Err(self.error("expected integer")),
        }
    }

    /// `name[index]`, checked against the declared register.
    fn indexed(&mut self, reg: &Option<(String, usize)>, what: &str) -> Result<usize, QasmError> {
        let (line, col) = self.here();
        let name = self.ident()?;
        self.expect_sym("[")?;
        let idx = self.int()? as usize;
        self.expect_sym("]")?;
        match reg {
            Some((r, size)) if *r == name => {
                if idx < *size {
                    Ok(idx)
                } else {
                    Err(QasmError::Syntax { line, col, msg: format!("index {idx} out of range for {name}[{size}]") })
                }
            }
            _ => Err(QasmError::Syntax { line, col, msg: format!("undeclared {what} register `{name}`") }),
        }
    }

    // expr := term (('+'|'-') term)*, term := unary (('*'|'/') unary)*,
    // unary := '-' unary | atom
    fn expr(&mut self) -> Result<f64, QasmError> {
        let mut v = self.term()?;
        loop {
            if self.is_sym("+") {
                self.pos += 1;
                v += self.term()?;
            } else if self.is_sym("-") {
                self.pos += 1;
                v -= self.term()?;
            } else {
                return Ok(v);
            }
        }
    }

    fn term(&mut self) -> Result<f64, QasmError> {
        let mut v = self.unary()?;
        loop {
            if self.is_sym("*") {
                self.pos += 1;
                v *= self.unary()?;
            } else if self.is_sym("/") {
                self.pos += 1;
                v /= self.unary()?;
            } else {
                return Ok(v);
            }
        }
    }

    fn unary(&mut self) -> Result<f64, QasmError> {
        if self.is_sym("-") {
            self.pos += 1;
            return Ok(-self.unary()?);
        }
        if self.is_sym("(") {
            self.pos += 1;
            let v = self.expr()?;
            self.expect_sym(")")?;
            return Ok(v);
        }
        match self.peek().map(|t| t.tok) {
            Some(Tok::Int(v)) => {
                self.pos += 1;
                Ok(v as f64)
            }
            Some(Tok::Real(v)) => {
                self.pos += 1;
                Ok(v)
            }
            Some(Tok::Ident(s)) if s == "pi" => {
                self.pos += 1;
                Ok(PI)
            }
            _ => Err(self.error("expected angle expression")),
        }
    }

    fn skip_block(&mut self) -> Result<(), QasmError> {
        while !self.is_sym("{") {
            if self.next().is_none() {
                return Err(self.error("expected `{`"));
            }
        }
        while !self.is_sym("}") {
            if self.next().is_none() {
                return Err(self.error("unterminated gate body"));
            }
        }
        self.pos += 1;
        Ok(())
    }
}

/// Parses a document in the emitted subset. Comments and whitespace are
/// free; definitions of c3x and c4x are accepted and skipped.
pub fn parse(text: &str) -> Result<Parsed, QasmError> {
    let toks = lex(text)?;
    let end = toks.last().map_or((1, 1), |t| (t.line, t.col + 1));
    let mut p = Parser { toks, pos: 0, end };

    match p.peek().map(|t| t.tok) {
        Some(Tok::Ident(s)) if s == "OPENQASM" => p.pos += 1,
        _ => return Err(p.error("expected `OPENQASM 2.0;`")),
    }
    match p.next().map(|t| t.tok) {
        Some(Tok::Real(v)) if v == 2.0 => {}
        _ => {
            p.pos -= 1;
            return Err(p.error("only OpenQASM 2.0 is supported"));
        }
    }
    p.expect_sym(";")?;

    let mut qreg: Option<(String, usize)> = None;
    let mut creg: Option<(String, usize)> = None;
    let mut gates = Vec::new();
    let mut measured: Vec<Option<usize>> = Vec::new();

    while let Some(&tok) = p.peek() {
        let (line, col) = (tok.line, tok.col);
        let word = match tok.tok {
            Tok::Ident(w) => w,
            _ => return Err(p.error("expected statement")),
        };
        p.pos += 1;
        match word {
            "include" => {
                match p.next().map(|t| t.tok) {
                    Some(Tok::Str(_)) => {}
                    _ => {
                        p.pos -= 1;
                        return Err(p.error("expected file name string"));
                    }
                }
                p.expect_sym(";")?;
            }
            "qreg" | "creg" => {
                let name = p.ident()?;
                p.expect_sym("[")?;
                let size = p.int()? as usize;
                p.expect_sym("]")?;
                p.expect_sym(";")?;
                let slot = if word == "qreg" { &mut qreg } else { &mut creg };
                if slot.is_some() || [&qreg, &creg].iter().any(|r| r.as_ref().is_some_and(|(n, _)| *n == name)) {
                    return Err(QasmError::Redeclared { line, col, name: name.to_string() });
                }
                let slot = if word == "qreg" { &mut qreg } else { &mut creg };
                *slot = Some((name.to_string(), size));
                if word == "creg" {
                    measured = vec![None; size];
                }
            }
            "gate" => {
                let name = p.ident()?;
                if name != "c3x" && name != "c4x" {
                    return Err(QasmError::Syntax { line, col, msg: format!("gate definition `{name}` is not supported") });
                }
                p.skip_block()?;
            }
            "measure" => {
                let q = p.indexed(&qreg, "quantum")?;
                p.expect_sym("->")?;
                let c = p.indexed(&creg, "classical")?;
                p.expect_sym(";")?;
                measured[c] = Some(q);
            }
            name => {
                let kind = GateKind::from_name(name).ok_or_else(|| QasmError::UnknownGate {
                    line,
                    col,
                    name: name.to_string(),
                })?;
                let mut angles = Vec::new();
                if p.is_sym("(") {
                    p.pos += 1;
                    loop {
                        angles.push(p.expr()?);
                        if p.is_sym(",") {
                            p.pos += 1;
                        } else {
                            break;
                        }
                    }
                    p.expect_sym(")")?;
                }
                let mut qubits = vec![p.indexed(&qreg, "quantum")?];
                while p.is_sym(",") {
                    p.pos += 1;
                    qubits.push(p.indexed(&qreg, "quantum")?);
                }
                p.expect_sym(";")?;
                let g = Gate::new(kind, &qubits, &angles).map_err(|source| QasmError::Gate { line, col, source })?;
                gates.push(g);
            }
        }
    }

    let num_qubits = qreg.map_or(0, |(_, n)| n);
    let circuit = GateCircuit::from_gates(num_qubits, gates).map_err(|source| QasmError::Gate {
        line: end.0,
        col: end.1,
        source,
    })?;
    let measured = measured
        .into_iter()
        .enumerate()
        .map(|(j, q)| {
            q.ok_or_else(|| QasmError::Syntax {
                line: end.0,
                col: end.1,
                msg: format!("classical bit c[{j}] is never measured"),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Parsed { circuit, measured })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document() {
        let text = emit(&GateCircuit::new(1), &[], EmitOptions::default()).unwrap();
        assert_eq!(text, "OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[1];\ncreg c[0];\n");
        assert_eq!(text.lines().count(), 4);
        let parsed = parse(&text).unwrap();
        assert_eq!(parsed.circuit, GateCircuit::new(1));
    }

    #[test]
    fn gate_lines() {
        let c = GateCircuit::from_gates(
            3,
            vec![
                Gate::h(0),
                Gate::cu1(PI / 2.0, 0, 1),
                Gate::new(GateKind::U3, &[2], &[0.1, -PI, 3.0 * PI / 8.0]).unwrap(),
                Gate::mcx(&[0, 1], 2).unwrap(),
            ],
        )
        .unwrap();
        let text = emit(&c, &[2, 0], EmitOptions::default()).unwrap();
        let body: Vec<&str> = text.lines().skip(4).collect();
        assert_eq!(
            body,
            [
                "h q[0];",
                "cu1(pi/2) q[0],q[1];",
                "u3(1.0000000000000001e-1,-pi,3*pi/8) q[2];",
                "ccx q[0],q[1],q[2];",
                "measure q[2] -> c[0];",
                "measure q[0] -> c[1];",
            ]
        );
        let parsed = parse(&text).unwrap();
        assert_eq!(parsed.circuit, c);
        assert_eq!(parsed.measured, [2, 0]);
    }

    #[test]
    fn angles() {
        assert_eq!(format_angle(PI), "pi");
        assert_eq!(format_angle(-PI / 8.0), "-pi/8");
        assert_eq!(format_angle(PI / (1u64 << 20) as f64), "pi/1048576");
        assert_eq!(format_angle(0.0), "0");
        assert_eq!(format_angle(2.0 * PI), "2*pi");
        let text = "OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[2];\ncreg c[0];\ncu1(pi/2) q[0],q[1];\n";
        let g = parse(text).unwrap().circuit.gates()[0];
        assert_eq!(g.kind(), GateKind::CU1);
        assert!((g.angles()[0] - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn errors_carry_positions() {
        let text = "OPENQASM 2.0;\nqreg q[1];\nh q[0]\n";
        match parse(text) {
            Err(QasmError::Syntax { line, col, .. }) => assert_eq!((line, col), (3, 7)),
            other => panic!("{other:?}"),
        }
        let text = "OPENQASM 2.0;\nqreg q[1];\nfoo q[0];\n";
        assert!(matches!(parse(text), Err(QasmError::UnknownGate { line: 3, col: 1, .. })));
        let text = "OPENQASM 2.0;\nqreg q[1];\nqreg q[2];\n";
        assert!(matches!(parse(text), Err(QasmError::Redeclared { line: 3, .. })));
        let text = "OPENQASM 2.0;\nqreg q[1];\nh q[1];\n";
        assert!(matches!(parse(text), Err(QasmError::Syntax { line: 3, col: 3, .. })));
        let text = "OPENQASM 3.0;\n";
        assert!(parse(text).is_err());
    }

    #[test]
    fn comments_and_whitespace() {
        let text = "// header\nOPENQASM 2.0;  include \"qelib1.inc\";\n qreg q[2]; creg c[1];\n  x   q[1] ; // flip\nmeasure q[1]->c[0];";
        let parsed = parse(text).unwrap();
        assert_eq!(parsed.circuit.gates(), &[Gate::x(1)]);
        assert_eq!(parsed.measured, [1]);
    }

    #[test]
    fn preamble_parses() {
        let c = GateCircuit::from_gates(5, vec![Gate::mcx(&[0, 1, 2, 3], 4).unwrap()]).unwrap();
        let text = emit(&c, &[], EmitOptions { preamble: true }).unwrap();
        assert!(text.contains("gate c3x a,b,c,d\n{\n"));
        assert_eq!(parse(&text).unwrap().circuit, c);
    }
}
