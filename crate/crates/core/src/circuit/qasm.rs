use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use super::{is_clifford_angle, LogicalCounts};

/// Gate mnemonics understood by the parser.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Gate {
    H,
    S,
    Sdg,
    X,
    Y,
    Z,
    Cx,
    Cz,
    T,
    Tdg,
    Rx,
    Ry,
    Rz,
    Ccx,
    Measure,
}

impl Gate {
    pub const ALL: [Gate; 15] = [
        Gate::H,
        Gate::S,
        Gate::Sdg,
        Gate::X,
        Gate::Y,
        Gate::Z,
        Gate::Cx,
        Gate::Cz,
        Gate::T,
        Gate::Tdg,
        Gate::Rx,
        Gate::Ry,
        Gate::Rz,
        Gate::Ccx,
        Gate::Measure,
    ];

    pub fn mnemonic(self) -> &'static str {
        match self {
            Gate::H => "h",
            Gate::S => "s",
            Gate::Sdg => "sdg",
            Gate::X => "x",
            Gate::Y => "y",
            Gate::Z => "z",
            Gate::Cx => "cx",
            Gate::Cz => "cz",
            Gate::T => "t",
            Gate::Tdg => "tdg",
            Gate::Rx => "rx",
            Gate::Ry => "ry",
            Gate::Rz => "rz",
            Gate::Ccx => "ccx",
            Gate::Measure => "measure",
        }
    }

    pub fn from_mnemonic(name: &str) -> Option<Gate> {
        Gate::ALL.into_iter().find(|g| g.mnemonic() == name)
    }

    fn qubit_arity(self) -> usize {
        match self {
            Gate::Cx | Gate::Cz => 2,
            Gate::Ccx => 3,
            _ => 1,
        }
    }

    pub fn is_rotation(self) -> bool {
        matches!(self, Gate::Rx | Gate::Ry | Gate::Rz)
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.mnemonic())
    }
}

/// Raw per-gate tallies of a parsed circuit.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GateCounts {
    pub tallies: BTreeMap<Gate, u64>,
    /// Sum of all `qreg` sizes.
    pub qubit_count: u64,
    /// Greedy layer count over arbitrary-angle rotations.
    pub rotation_layer_count: u64,
    /// Angles of every rx/ry/rz application, in program order.
    pub rotation_angles: Vec<f64>,
}

impl GateCounts {
    pub fn new(qubit_count: u64) -> Self {
        Self {
            qubit_count,
            ..Self::default()
        }
    }

    pub fn count(&self, gate: Gate) -> u64 {
        self.tallies.get(&gate).copied().unwrap_or(0)
    }

    /// Records a non-rotation gate application.
    pub fn add(&mut self, gate: Gate) -> &mut Self {
        debug_assert!(!gate.is_rotation(), "use add_rotation for {gate}");
        *self.tallies.entry(gate).or_insert(0) += 1;
        self
    }

    /// Records a rotation gate application with its angle. Layering is not
    /// touched; callers building counts by hand set `rotation_layer_count`.
    pub fn add_rotation(&mut self, gate: Gate, angle: f64) -> &mut Self {
        debug_assert!(gate.is_rotation());
        *self.tallies.entry(gate).or_insert(0) += 1;
        self.rotation_angles.push(angle);
        self
    }

    pub fn total_gates(&self) -> u64 {
        self.tallies.values().sum()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("line {line}: unsupported gate `{name}`")]
    UnsupportedGate { name: String, line: usize },
    #[error("line {line}: syntax error: {reason}")]
    SyntaxError { line: usize, reason: String },
    #[error("circuit declares no quantum register")]
    EmptyCircuit,
}

fn syntax(line: usize, reason: impl Into<String>) -> ParseError {
    ParseError::SyntaxError {
        line,
        reason: reason.into(),
    }
}

/// Splits source text into `;`-terminated statements, each tagged with the
/// 1-based line on which it starts. `//` comments are dropped.
fn statements(source: &str) -> Result<Vec<(usize, String)>, ParseError> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut start_line = 0;
    for (idx, raw) in source.lines().enumerate() {
        let line_no = idx + 1;
        let code = raw.split("//").next().unwrap_or("");
        for ch in code.chars() {
            if ch == ';' {
                if current.trim().is_empty() {
                    return Err(syntax(line_no, "empty statement"));
                }
                out.push((start_line, std::mem::take(&mut current)));
            } else {
                if current.trim().is_empty() && !ch.is_whitespace() {
                    start_line = line_no;
                }
                current.push(ch);
            }
        }
        if !current.trim().is_empty() {
            current.push(' ');
        }
    }
    if !current.trim().is_empty() {
        return Err(syntax(start_line, "statement is missing a terminating ';'"));
    }
    Ok(out)
}

fn split_ident(s: &str) -> (&str, &str) {
    let end = s
        .char_indices()
        .find(|&(i, c)| !(c == '_' || c.is_ascii_alphabetic() || (i > 0 && c.is_ascii_digit())))
        .map_or(s.len(), |(i, _)| i);
    (&s[..end], s[end..].trim_start())
}

/// Parses `name[index]`.
fn parse_indexed(s: &str, line: usize) -> Result<(&str, u64), ParseError> {
    let s = s.trim();
    let (name, rest) = split_ident(s);
    if name.is_empty() {
        return Err(syntax(line, format!("expected a register reference, found `{s}`")));
    }
    let inner = rest
        .strip_prefix('[')
        .and_then(|r| r.trim_end().strip_suffix(']'))
        .ok_or_else(|| syntax(line, format!("expected `{name}[index]`, found `{s}`")))?;
    let index = inner
        .trim()
        .parse::<u64>()
        .map_err(|_| syntax(line, format!("invalid index `{}`", inner.trim())))?;
    Ok((name, index))
}

#[derive(Default)]
struct Registers {
    /// name -> (offset, size)
    quantum: HashMap<String, (u64, u64)>,
    classical: HashMap<String, u64>,
    total_qubits: u64,
}

impl Registers {
    fn declare(&mut self, decl: &str, quantum: bool, line: usize) -> Result<(), ParseError> {
        let (name, size) = parse_indexed(decl, line)?;
        if size == 0 {
            return Err(syntax(line, format!("register `{name}` has size 0")));
        }
        if self.quantum.contains_key(name) || self.classical.contains_key(name) {
            return Err(syntax(line, format!("register `{name}` declared twice")));
        }
        if quantum {
            self.quantum.insert(name.to_string(), (self.total_qubits, size));
            self.total_qubits += size;
        } else {
            self.classical.insert(name.to_string(), size);
        }
        Ok(())
    }

    fn qubit(&self, operand: &str, line: usize) -> Result<u64, ParseError> {
        let (name, index) = parse_indexed(operand, line)?;
        let &(offset, size) = self
            .quantum
            .get(name)
            .ok_or_else(|| syntax(line, format!("unknown quantum register `{name}`")))?;
        if index >= size {
            return Err(syntax(line, format!("index {index} out of range for `{name}[{size}]`")));
        }
        Ok(offset + index)
    }

    fn bit(&self, operand: &str, line: usize) -> Result<(), ParseError> {
        let (name, index) = parse_indexed(operand, line)?;
        let &size = self
            .classical
            .get(name)
            .ok_or_else(|| syntax(line, format!("unknown classical register `{name}`")))?;
        if index >= size {
            return Err(syntax(line, format!("index {index} out of range for `{name}[{size}]`")));
        }
        Ok(())
    }
}

/// Greedy rotation layering: a rotation opens a new layer only when its
/// qubit already carries a rotation in the current layer.
#[derive(Default)]
struct RotationLayers {
    layers: u64,
    occupied: HashSet<u64>,
}

impl RotationLayers {
    fn push(&mut self, qubit: u64) {
        if self.layers == 0 || self.occupied.contains(&qubit) {
            self.layers += 1;
            self.occupied.clear();
        }
        self.occupied.insert(qubit);
    }
}

/// Parses the supported OpenQASM 2.0 subset into per-gate tallies.
pub fn parse_qasm(source_text: &str) -> Result<GateCounts, ParseError> {
    let mut regs = Registers::default();
    let mut counts = GateCounts::default();
    let mut layers = RotationLayers::default();

    for (position, (line, stmt)) in statements(source_text)?.into_iter().enumerate() {
        let stmt = stmt.trim();
        let (head, rest) = split_ident(stmt);
        match head {
            "" => return Err(syntax(line, format!("unexpected `{stmt}`"))),
            "OPENQASM" => {
                if position != 0 {
                    return Err(syntax(line, "version line must come first"));
                }
                if rest != "2.0" {
                    return Err(syntax(line, format!("unsupported OpenQASM version `{rest}`")));
                }
            }
            "include" => {
                if !(rest.len() >= 2 && rest.starts_with('"') && rest.ends_with('"')) {
                    return Err(syntax(line, "include expects a quoted file name"));
                }
            }
            "qreg" => regs.declare(rest, true, line)?,
            "creg" => regs.declare(rest, false, line)?,
            "barrier" => {}
            "gate" | "opaque" => return Err(syntax(line, "custom gate definitions are not supported")),
            "if" | "reset" => {
                return Err(syntax(line, format!("`{head}` is not supported")));
            }
            "measure" => {
                let (src, dst) = rest
                    .split_once("->")
                    .ok_or_else(|| syntax(line, "measure expects `q[i] -> c[j]`"))?;
                regs.qubit(src, line)?;
                regs.bit(dst, line)?;
                *counts.tallies.entry(Gate::Measure).or_insert(0) += 1;
            }
            name => {
                let gate = Gate::from_mnemonic(name).ok_or_else(|| ParseError::UnsupportedGate {
                    name: name.to_string(),
                    line,
                })?;
                let (angle, operands) = if let Some(after) = rest.strip_prefix('(') {
                    let close = after.find(')').ok_or_else(|| syntax(line, "unbalanced parenthesis"))?;
                    (Some(eval_angle(&after[..close], line)?), after[close + 1..].trim())
                } else {
                    (None, rest)
                };
                match (gate.is_rotation(), angle) {
                    (true, None) => return Err(syntax(line, format!("`{gate}` requires an angle"))),
                    (false, Some(_)) => return Err(syntax(line, format!("`{gate}` takes no parameters"))),
                    _ => {}
                }
                if operands.is_empty() {
                    return Err(syntax(line, format!("`{gate}` has no operands")));
                }
                let qubits = operands
                    .split(',')
                    .map(|op| regs.qubit(op, line))
                    .collect::<Result<Vec<_>, _>>()?;
                if qubits.len() != gate.qubit_arity() {
                    return Err(syntax(
                        line,
                        format!(
                            "`{gate}` expects {} operand(s), found {}",
                            gate.qubit_arity(),
                            qubits.len()
                        ),
                    ));
                }
                let distinct: HashSet<_> = qubits.iter().collect();
                if distinct.len() != qubits.len() {
                    return Err(syntax(line, format!("`{gate}` operands must be distinct")));
                }
                *counts.tallies.entry(gate).or_insert(0) += 1;
                if let Some(angle) = angle {
                    counts.rotation_angles.push(angle);
                    if !is_clifford_angle(angle) {
                        layers.push(qubits[0]);
                    }
                }
            }
        }
    }

    if regs.total_qubits == 0 {
        return Err(ParseError::EmptyCircuit);
    }
    counts.qubit_count = regs.total_qubits;
    counts.rotation_layer_count = layers.layers;
    Ok(counts)
}

/// Evaluates an angle expression over decimals, `pi`, `+ - * /` and parentheses.
fn eval_angle(text: &str, line: usize) -> Result<f64, ParseError> {
    let mut p = AngleParser {
        chars: text.chars().filter(|c| !c.is_whitespace()).collect(),
        pos: 0,
        line,
    };
    if p.chars.is_empty() {
        return Err(syntax(line, "empty angle expression"));
    }
    let value = p.expr()?;
    if p.pos != p.chars.len() {
        return Err(syntax(line, format!("unexpected `{}` in angle", p.chars[p.pos])));
    }
    if !value.is_finite() {
        return Err(syntax(line, "angle is not a finite number"));
    }
    Ok(value)
}

struct AngleParser {
    chars: Vec<char>,
    pos: usize,
    line: usize,
}

impl AngleParser {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<f64, ParseError> {
        let mut acc = self.term()?;
        while let Some(op @ ('+' | '-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            acc = if op == '+' { acc + rhs } else { acc - rhs };
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<f64, ParseError> {
        let mut acc = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek() {
            self.pos += 1;
            let rhs = self.unary()?;
            acc = if op == '*' { acc * rhs } else { acc / rhs };
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<f64, ParseError> {
        match self.peek() {
            Some('-') => {
                self.pos += 1;
                Ok(-self.unary()?)
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<f64, ParseError> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let v = self.expr()?;
                if self.peek() != Some(')') {
                    return Err(syntax(self.line, "unbalanced parenthesis in angle"));
                }
                self.pos += 1;
                Ok(v)
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.peek().is_some_and(|c| c.is_ascii_alphanumeric()) {
                    self.pos += 1;
                }
                let ident: String = self.chars[start..self.pos].iter().collect();
                if ident == "pi" {
                    Ok(std::f64::consts::PI)
                } else {
                    Err(syntax(self.line, format!("unknown identifier `{ident}` in angle")))
                }
            }
            Some(c) if c.is_ascii_digit() || c == '.' => {
                let start = self.pos;
                while self.peek().is_some_and(|c| c.is_ascii_digit() || c == '.') {
                    self.pos += 1;
                }
                if matches!(self.peek(), Some('e' | 'E')) {
                    self.pos += 1;
                    if matches!(self.peek(), Some('+' | '-')) {
                        self.pos += 1;
                    }
                    while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                        self.pos += 1;
                    }
                }
                let lit: String = self.chars[start..self.pos].iter().collect();
                lit.parse::<f64>()
                    .map_err(|_| syntax(self.line, format!("invalid number `{lit}`")))
            }
            Some(c) => Err(syntax(self.line, format!("unexpected `{c}` in angle"))),
            None => Err(syntax(self.line, "angle expression ends unexpectedly")),
        }
    }
}

/// Reduces raw tallies to the six logical counts. Clifford-angle rotations
/// are not counted as rotations.
pub fn derive_logical_counts(g: &GateCounts) -> LogicalCounts {
    let rotation_count = g.rotation_angles.iter().filter(|&&a| !is_clifford_angle(a)).count() as u64;
    let rotation_depth = if rotation_count == 0 {
        0
    } else {
        g.rotation_layer_count.clamp(1, rotation_count)
    };
    LogicalCounts {
        qubits: g.qubit_count,
        t_count: g.count(Gate::T) + g.count(Gate::Tdg),
        rotation_count,
        rotation_depth,
        toffoli_count: g.count(Gate::Ccx),
        measurement_count: g.count(Gate::Measure),
    }
}
