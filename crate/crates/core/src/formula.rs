//! PCTL formulas used as obligation content: abstract syntax, a
//! recursive-descent parser for the concrete syntax, a canonical printer,
//! and a negation-normal-form rewrite.
//!
//! Concrete grammar (whitespace-insensitive):
//!
//! ```text
//! phi  := atom | "true" | "false" | "!" phi | phi "&" phi | phi "|" phi
//!       | phi "->" phi | "(" phi ")" | "P" bowtie threshold "[" path "]"
//! path := "X" phi | "F" phi | "G" phi | phi "U" phi
//! ```
//!
//! Precedence `!` > `&` > `|` > `->`; `->` is right-associative; bowtie is
//! one of `>=`, `>`, `<=`, `<`; thresholds must lie in `[0, 1]`.
//!
//! Path-level negation (`! F phi`, `! G phi`, `! X phi`) is accepted as
//! surface syntax and rewritten to the dual operator during parsing, so the
//! AST itself never contains a negated path formula.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bowtie {
    Ge,
    Gt,
    Le,
    Lt,
}

impl Bowtie {
    pub fn holds(self, p: f64, threshold: f64) -> bool {
        match self {
            Bowtie::Ge => p >= threshold,
            Bowtie::Gt => p > threshold,
            Bowtie::Le => p <= threshold,
            Bowtie::Lt => p < threshold,
        }
    }

    /// The complement relation: `!(p ⋈ t)` is `p ⋈' t`.
    pub fn negated(self) -> Bowtie {
        match self {
            Bowtie::Ge => Bowtie::Lt,
            Bowtie::Gt => Bowtie::Le,
            Bowtie::Le => Bowtie::Gt,
            Bowtie::Lt => Bowtie::Ge,
        }
    }

    /// `>=` and `>` bound the probability from below.
    pub fn is_lower_bound(self) -> bool {
        matches!(self, Bowtie::Ge | Bowtie::Gt)
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Bowtie::Ge => ">=",
            Bowtie::Gt => ">",
            Bowtie::Le => "<=",
            Bowtie::Lt => "<",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StateFormula {
    True,
    False,
    Atom(String),
    Not(Box<StateFormula>),
    And(Box<StateFormula>, Box<StateFormula>),
    Or(Box<StateFormula>, Box<StateFormula>),
    Implies(Box<StateFormula>, Box<StateFormula>),
    Prob {
        relation: Bowtie,
        threshold: f64,
        path: Box<PathFormula>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum PathFormula {
    Next(StateFormula),
    Eventually(StateFormula),
    Globally(StateFormula),
    Until(StateFormula, StateFormula),
}

impl StateFormula {
    pub fn atom(name: &str) -> StateFormula {
        StateFormula::Atom(name.to_string())
    }

    pub fn not(f: StateFormula) -> StateFormula {
        StateFormula::Not(Box::new(f))
    }

    pub fn and(a: StateFormula, b: StateFormula) -> StateFormula {
        StateFormula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: StateFormula, b: StateFormula) -> StateFormula {
        StateFormula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: StateFormula, b: StateFormula) -> StateFormula {
        StateFormula::Implies(Box::new(a), Box::new(b))
    }

    pub fn prob(relation: Bowtie, threshold: f64, path: PathFormula) -> StateFormula {
        StateFormula::Prob {
            relation,
            threshold,
            path: Box::new(path),
        }
    }

    /// True when a probability operator occurs anywhere in the formula.
    pub fn contains_prob(&self) -> bool {
        match self {
            StateFormula::True | StateFormula::False | StateFormula::Atom(_) => false,
            StateFormula::Not(f) => f.contains_prob(),
            StateFormula::And(a, b) | StateFormula::Or(a, b) | StateFormula::Implies(a, b) => {
                a.contains_prob() || b.contains_prob()
            }
            StateFormula::Prob { .. } => true,
        }
    }

    /// Negation normal form: negations pushed down to atoms, implications
    /// expanded, and negated probability operators flipped to the complement
    /// relation. Semantics-preserving.
    pub fn to_nnf(&self) -> StateFormula {
        fn pos(f: &StateFormula) -> StateFormula {
            match f {
                StateFormula::True | StateFormula::False | StateFormula::Atom(_) => f.clone(),
                StateFormula::Not(g) => neg(g),
                StateFormula::And(a, b) => StateFormula::and(pos(a), pos(b)),
                StateFormula::Or(a, b) => StateFormula::or(pos(a), pos(b)),
                StateFormula::Implies(a, b) => StateFormula::or(neg(a), pos(b)),
                StateFormula::Prob {
                    relation,
                    threshold,
                    path,
                } => StateFormula::prob(*relation, *threshold, nnf_path(path)),
            }
        }
        fn neg(f: &StateFormula) -> StateFormula {
            match f {
                StateFormula::True => StateFormula::False,
                StateFormula::False => StateFormula::True,
                StateFormula::Atom(_) => StateFormula::not(f.clone()),
                StateFormula::Not(g) => pos(g),
                StateFormula::And(a, b) => StateFormula::or(neg(a), neg(b)),
                StateFormula::Or(a, b) => StateFormula::and(neg(a), neg(b)),
                StateFormula::Implies(a, b) => StateFormula::and(pos(a), neg(b)),
                StateFormula::Prob {
                    relation,
                    threshold,
                    path,
                } => StateFormula::prob(relation.negated(), *threshold, nnf_path(path)),
            }
        }
        fn nnf_path(p: &PathFormula) -> PathFormula {
            match p {
                PathFormula::Next(f) => PathFormula::Next(pos(f)),
                PathFormula::Eventually(f) => PathFormula::Eventually(pos(f)),
                PathFormula::Globally(f) => PathFormula::Globally(pos(f)),
                PathFormula::Until(a, b) => PathFormula::Until(pos(a), pos(b)),
            }
        }
        pos(self)
    }
}

impl PathFormula {
    pub fn contains_prob(&self) -> bool {
        match self {
            PathFormula::Next(f) | PathFormula::Eventually(f) | PathFormula::Globally(f) => {
                f.contains_prob()
            }
            PathFormula::Until(a, b) => a.contains_prob() || b.contains_prob(),
        }
    }
}

/// Parses the concrete obligation syntax into a [`StateFormula`].
pub fn parse_formula(text: &str) -> Result<StateFormula> {
    let mut p = Parser {
        bytes: text.as_bytes(),
        pos: 0,
    };
    let formula = p.parse_implies()?;
    p.skip_ws();
    if p.pos != p.bytes.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(formula)
}

/// Canonical text form; `parse_formula(format_formula(f))` reproduces `f`.
pub fn format_formula(f: &StateFormula) -> String {
    let mut out = String::new();
    write_state(f, 0, &mut out);
    out
}

impl std::fmt::Display for StateFormula {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&format_formula(self))
    }
}

impl std::fmt::Display for PathFormula {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut out = String::new();
        write_path(self, &mut out);
        f.write_str(&out)
    }
}

// Precedence levels: Implies = 1, Or = 2, And = 3, Not = 4, primary = 5.
fn precedence(f: &StateFormula) -> u8 {
    match f {
        StateFormula::Implies(..) => 1,
        StateFormula::Or(..) => 2,
        StateFormula::And(..) => 3,
        StateFormula::Not(..) => 4,
        _ => 5,
    }
}

fn write_state(f: &StateFormula, min_prec: u8, out: &mut String) {
    let prec = precedence(f);
    let parens = prec < min_prec;
    if parens {
        out.push('(');
    }
    match f {
        StateFormula::True => out.push_str("true"),
        StateFormula::False => out.push_str("false"),
        StateFormula::Atom(name) => out.push_str(name),
        StateFormula::Not(g) => {
            out.push('!');
            write_state(g, 4, out);
        }
        StateFormula::And(a, b) => {
            write_state(a, 3, out);
            out.push_str(" & ");
            write_state(b, 4, out);
        }
        StateFormula::Or(a, b) => {
            write_state(a, 2, out);
            out.push_str(" | ");
            write_state(b, 3, out);
        }
        StateFormula::Implies(a, b) => {
            write_state(a, 2, out);
            out.push_str(" -> ");
            write_state(b, 1, out);
        }
        StateFormula::Prob {
            relation,
            threshold,
            path,
        } => {
            out.push('P');
            out.push_str(relation.symbol());
            out.push_str(&threshold.to_string());
            out.push_str(" [ ");
            write_path(path, out);
            out.push_str(" ]");
        }
    }
    if parens {
        out.push(')');
    }
}

fn write_path(p: &PathFormula, out: &mut String) {
    // Operands of the temporal prefixes print parenthesized unless they bind
    // at least as tightly as negation, matching how the parser reads them.
    match p {
        PathFormula::Next(f) => {
            out.push_str("X ");
            write_state(f, 4, out);
        }
        PathFormula::Eventually(f) => {
            out.push_str("F ");
            write_state(f, 4, out);
        }
        PathFormula::Globally(f) => {
            out.push_str("G ");
            write_state(f, 4, out);
        }
        PathFormula::Until(a, b) => {
            write_state(a, 4, out);
            out.push_str(" U ");
            write_state(b, 4, out);
        }
    }
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, message: &str) -> Error {
        Error::Syntax {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, byte: u8) -> bool {
        if self.peek() == Some(byte) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, byte: u8) -> Result<()> {
        if self.eat(byte) {
            Ok(())
        } else {
            Err(self.error(&format!("expected `{}`", byte as char)))
        }
    }

    /// Reads an identifier `[A-Za-z_][A-Za-z0-9_]*` without consuming it.
    fn peek_word(&mut self) -> Option<&'a str> {
        self.skip_ws();
        let start = self.pos;
        let mut end = start;
        while end < self.bytes.len() {
            let b = self.bytes[end];
            let ok = b.is_ascii_alphanumeric() || b == b'_';
            if !ok || (end == start && b.is_ascii_digit()) {
                break;
            }
            end += 1;
        }
        (end > start).then(|| std::str::from_utf8(&self.bytes[start..end]).unwrap())
    }

    fn take_word(&mut self) -> Option<&'a str> {
        let word = self.peek_word()?;
        self.pos += word.len();
        Some(word)
    }

    fn parse_implies(&mut self) -> Result<StateFormula> {
        let lhs = self.parse_or()?;
        self.skip_ws();
        if self.bytes[self.pos..].starts_with(b"->") {
            self.pos += 2;
            let rhs = self.parse_implies()?;
            return Ok(StateFormula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn parse_or(&mut self) -> Result<StateFormula> {
        let mut lhs = self.parse_and()?;
        while self.eat(b'|') {
            let rhs = self.parse_and()?;
            lhs = StateFormula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn parse_and(&mut self) -> Result<StateFormula> {
        let mut lhs = self.parse_unary()?;
        while self.eat(b'&') {
            let rhs = self.parse_unary()?;
            lhs = StateFormula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self) -> Result<StateFormula> {
        if self.eat(b'!') {
            return Ok(StateFormula::not(self.parse_unary()?));
        }
        self.parse_primary()
    }

    fn parse_primary(&mut self) -> Result<StateFormula> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.parse_implies()?;
                self.expect(b')')?;
                Ok(inner)
            }
            Some(b'P') if self.is_prob_operator() => self.parse_prob(),
            Some(b) if b.is_ascii_alphabetic() || b == b'_' => {
                let word = self.take_word().unwrap();
                match word {
                    "true" => Ok(StateFormula::True),
                    "false" => Ok(StateFormula::False),
                    _ => Ok(StateFormula::Atom(word.to_string())),
                }
            }
            Some(_) => Err(self.error("expected a formula")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    /// `P` starts a probability operator only when followed by a bowtie, so
    /// atoms such as `Pump` still parse as identifiers.
    fn is_prob_operator(&mut self) -> bool {
        self.skip_ws();
        let rest = &self.bytes[self.pos..];
        if !rest.starts_with(b"P") {
            return false;
        }
        matches!(rest.get(1), Some(b'>') | Some(b'<'))
    }

    fn parse_prob(&mut self) -> Result<StateFormula> {
        self.expect(b'P')?;
        let relation = if self.bytes[self.pos..].starts_with(b">=") {
            self.pos += 2;
            Bowtie::Ge
        } else if self.bytes[self.pos..].starts_with(b"<=") {
            self.pos += 2;
            Bowtie::Le
        } else if self.bytes[self.pos..].starts_with(b">") {
            self.pos += 1;
            Bowtie::Gt
        } else if self.bytes[self.pos..].starts_with(b"<") {
            self.pos += 1;
            Bowtie::Lt
        } else {
            return Err(self.error("expected one of `>=`, `>`, `<=`, `<`"));
        };
        let threshold = self.parse_number()?;
        if !(0.0..=1.0).contains(&threshold) {
            return Err(self.error(&format!("threshold {threshold} outside [0, 1]")));
        }
        self.expect(b'[')?;
        let path = self.parse_path()?;
        self.expect(b']')?;
        Ok(StateFormula::prob(relation, threshold, path))
    }

    fn parse_number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        let mut end = start;
        while end < self.bytes.len() {
            let b = self.bytes[end];
            let is_exp_sign = (b == b'+' || b == b'-')
                && end > start
                && matches!(self.bytes[end - 1], b'e' | b'E');
            if b.is_ascii_digit() || b == b'.' || b == b'e' || b == b'E' || is_exp_sign {
                end += 1;
            } else {
                break;
            }
        }
        if end == start {
            return Err(self.error("expected a probability threshold"));
        }
        let text = std::str::from_utf8(&self.bytes[start..end]).unwrap();
        let value: f64 = text
            .parse()
            .map_err(|_| self.error(&format!("invalid number `{text}`")))?;
        self.pos = end;
        Ok(value)
    }

    fn parse_path(&mut self) -> Result<PathFormula> {
        self.skip_ws();
        // Path-level negation: rewrite `! F`, `! G`, `! X` to the dual.
        if self.peek() == Some(b'!') {
            let mark = self.pos;
            self.pos += 1;
            match self.peek_word() {
                Some("F") | Some("G") | Some("X") => {
                    let op = self.take_word().unwrap();
                    let inner = self.parse_unary()?;
                    return Ok(match op {
                        "F" => PathFormula::Globally(StateFormula::not(inner)),
                        "G" => PathFormula::Eventually(StateFormula::not(inner)),
                        _ => PathFormula::Next(StateFormula::not(inner)),
                    });
                }
                // `!` over a state formula: the left operand of an until.
                _ => self.pos = mark,
            }
        }
        match self.peek_word() {
            Some("X") => {
                self.take_word();
                return Ok(PathFormula::Next(self.parse_implies()?));
            }
            Some("F") => {
                self.take_word();
                return Ok(PathFormula::Eventually(self.parse_implies()?));
            }
            Some("G") => {
                self.take_word();
                return Ok(PathFormula::Globally(self.parse_implies()?));
            }
            _ => {}
        }
        let lhs = self.parse_implies()?;
        match self.take_word() {
            Some("U") => {}
            _ => return Err(self.error("expected `U` in path formula")),
        }
        let rhs = self.parse_implies()?;
        Ok(PathFormula::Until(lhs, rhs))
    }
}
