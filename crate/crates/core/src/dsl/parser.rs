use std::collections::BTreeMap;

use num_complex::Complex64;
use num_traits::{One, Zero};

use super::ast::{BoxRegion, CoeffDef, CoeffValue, Interval, OperatorExpr, Program};
use super::lexer::{tokenize, Tok, Token};
use super::ParseError;
use crate::grid::Rational;

type PResult<T> = Result<T, ParseError>;

/// Parses a `.fop` program, or a bare operator expression when the source
/// does not start with `grid`, `coeff` or `operator`.
pub fn parse(src: &str) -> PResult<Program> {
    let mut p = Parser::new(src)?;
    if !matches!(p.peek(), Tok::Ident(k) if ["grid", "coeff", "operator"].contains(&k.as_str())) {
        let expr = p.expr()?;
        p.expect_eof()?;
        return Ok(Program { dim: None, size: None, env: BTreeMap::new(), expr });
    }
    p.program()
}

/// Parses a single operator expression.
pub fn parse_expr(src: &str) -> PResult<OperatorExpr> {
    let mut p = Parser::new(src)?;
    let expr = p.expr()?;
    p.expect_eof()?;
    Ok(expr)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    /// Known coefficient names; `None` in bare-expression mode.
    names: Option<Vec<String>>,
}

impl Parser {
    fn new(src: &str) -> PResult<Self> {
        Ok(Self { tokens: tokenize(src)?, pos: 0, names: None })
    }

    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.tokens[(self.pos + k).min(self.tokens.len() - 1)].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.tokens[self.pos].tok.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, message: impl Into<String>) -> ParseError {
        let t = &self.tokens[self.pos];
        ParseError { line: t.line, column: t.column, message: message.into() }
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        self.error_here(format!("expected {wanted}, found {}", self.peek().describe()))
    }

    fn is_punct(&self, c: char) -> bool {
        *self.peek() == Tok::Punct(c)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.is_punct(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> PResult<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{c}`")))
        }
    }

    fn expect_eof(&self) -> PResult<()> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            Err(self.unexpected("end of input"))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    fn integer(&mut self) -> PResult<i64> {
        let Tok::Number(s) = self.peek().clone() else {
            return Err(self.unexpected("integer"));
        };
        let v = s.parse::<i64>().map_err(|_| self.error_here("expected an integer literal"))?;
        self.bump();
        Ok(v)
    }

    fn rational(&mut self) -> PResult<Rational> {
        let negative = self.eat('-');
        if !matches!(self.peek(), Tok::Number(_)) {
            return Err(self.unexpected("rational"));
        }
        let num = self.integer()?;
        let den = if self.eat('/') { self.integer()? } else { 1 };
        if den == 0 {
            return Err(self.error_here("zero denominator"));
        }
        let r = Rational::new(num, den);
        Ok(if negative { -r } else { r })
    }

    fn float(&mut self) -> PResult<f64> {
        match self.bump() {
            Tok::Number(s) | Tok::Imag(s) => s.parse().map_err(|_| self.error_here(format!("bad number `{s}`"))),
            _ => unreachable!(),
        }
    }

    fn at_imag(&self) -> bool {
        matches!(self.peek(), Tok::Imag(_)) || matches!(self.peek(), Tok::Ident(s) if s == "i")
    }

    fn imag(&mut self) -> PResult<f64> {
        if matches!(self.peek(), Tok::Ident(_)) {
            self.bump();
            Ok(1.0)
        } else {
            self.float()
        }
    }

    /// `[-] re [(+|-) im i]` or `[-] im i`, with no surrounding parentheses.
    fn complex_bare(&mut self) -> PResult<Complex64> {
        let sign = if self.eat('-') { -1.0 } else { 1.0 };
        if self.at_imag() {
            return Ok(Complex64::new(0.0, sign * self.imag()?));
        }
        if !matches!(self.peek(), Tok::Number(_)) {
            return Err(self.unexpected("number"));
        }
        let re = sign * self.float()?;
        let im_sign = match self.peek() {
            Tok::Punct('+') if self.imag_follows() => 1.0,
            Tok::Punct('-') if self.imag_follows() => -1.0,
            _ => return Ok(Complex64::new(re, 0.0)),
        };
        self.bump();
        Ok(Complex64::new(re, im_sign * self.imag()?))
    }

    fn imag_follows(&self) -> bool {
        matches!(self.peek_at(1), Tok::Imag(_)) || matches!(self.peek_at(1), Tok::Ident(s) if s == "i")
    }

    /// `( complex )`; restores the position and returns `None` if it does not match.
    fn try_paren_complex(&mut self) -> Option<Complex64> {
        let save = self.pos;
        let attempt = (|| {
            self.expect('(')?;
            let c = self.complex_bare()?;
            self.expect(')')?;
            Ok::<_, ParseError>(c)
        })();
        match attempt {
            Ok(c) => Some(c),
            Err(_) => {
                self.pos = save;
                None
            }
        }
    }

    fn expr(&mut self) -> PResult<OperatorExpr> {
        let mut items = Vec::new();
        let first_negated = self.eat('-');
        let first = self.term()?;
        items.push(if first_negated { negate(first) } else { first });
        loop {
            if self.eat('+') {
                items.push(self.term()?);
            } else if self.eat('-') {
                let t = self.term()?;
                items.push(negate(t));
            } else {
                break;
            }
        }
        Ok(if items.len() == 1 { items.pop().unwrap() } else { OperatorExpr::Sum(items) })
    }

    fn term(&mut self) -> PResult<OperatorExpr> {
        let mut coefficient: Option<Complex64> = None;
        let mut factors = Vec::new();
        loop {
            match self.factor()? {
                Factor::Literal(c) => coefficient = Some(coefficient.unwrap_or_else(Complex64::one) * c),
                Factor::Op(e) => factors.push(e),
            }
            if !self.eat('*') {
                break;
            }
        }
        let body = match factors.len() {
            0 => OperatorExpr::Identity,
            1 => factors.pop().unwrap(),
            _ => OperatorExpr::Product(factors),
        };
        Ok(match coefficient {
            Some(c) => OperatorExpr::scale(c, body),
            None => body,
        })
    }

    fn factor(&mut self) -> PResult<Factor> {
        match self.peek().clone() {
            Tok::Ident(name) => match name.as_str() {
                "D" => {
                    self.bump();
                    self.expect('(')?;
                    let axis_pos = self.pos;
                    let axis = self.integer()?;
                    if axis < 1 {
                        self.pos = axis_pos;
                        return Err(self.error_here("axis must be at least 1"));
                    }
                    self.expect(',')?;
                    let step_pos = self.pos;
                    let step = self.rational()?;
                    if step.is_zero() {
                        self.pos = step_pos;
                        return Err(self.error_here("derivative step must be nonzero"));
                    }
                    self.expect(')')?;
                    Ok(Factor::Op(OperatorExpr::deriv(axis as usize, step)))
                }
                "M" => {
                    self.bump();
                    self.expect('(')?;
                    let name_pos = self.pos;
                    let name = self.ident()?;
                    if let Some(names) = &self.names {
                        if !names.contains(&name) {
                            self.pos = name_pos;
                            return Err(self.error_here(format!("unknown coefficient `{name}`")));
                        }
                    }
                    self.expect(')')?;
                    Ok(Factor::Op(OperatorExpr::Mult(name)))
                }
                "I" => {
                    self.bump();
                    Ok(Factor::Op(OperatorExpr::Identity))
                }
                "adj" => {
                    self.bump();
                    self.expect('(')?;
                    let inner = self.expr()?;
                    self.expect(')')?;
                    Ok(Factor::Op(OperatorExpr::adjoint(inner)))
                }
                "i" => Ok(Factor::Literal(Complex64::new(0.0, self.imag()?))),
                _ => Err(self.error_here(format!("unknown identifier `{name}`"))),
            },
            Tok::Number(_) => Ok(Factor::Literal(Complex64::new(self.float()?, 0.0))),
            Tok::Imag(_) => Ok(Factor::Literal(Complex64::new(0.0, self.float()?))),
            Tok::Punct('(') => {
                if let Some(c) = self.try_paren_complex() {
                    return Ok(Factor::Literal(c));
                }
                self.bump();
                let inner = self.expr()?;
                self.expect(')')?;
                Ok(Factor::Op(inner))
            }
            _ => Err(self.unexpected("operator factor")),
        }
    }

    fn program(&mut self) -> PResult<Program> {
        let mut dim = None;
        let mut size = None;
        let mut env = BTreeMap::new();
        let mut expr = None;
        loop {
            let kw_pos = self.pos;
            match self.peek().clone() {
                Tok::Eof => break,
                Tok::Ident(k) if k == "grid" => {
                    self.bump();
                    while let Tok::Ident(key) = self.peek().clone() {
                        self.bump();
                        self.expect('=')?;
                        let value_pos = self.pos;
                        let v = self.integer()?;
                        if v < 1 {
                            self.pos = value_pos;
                            return Err(self.error_here(format!("{key} must be positive")));
                        }
                        match key.as_str() {
                            "N" => dim = Some(v as usize),
                            "M" => size = Some(v as usize),
                            _ => {
                                self.pos = value_pos - 2;
                                return Err(self.error_here(format!("unknown grid parameter `{key}`")));
                            }
                        }
                    }
                    self.expect(';')?;
                }
                Tok::Ident(k) if k == "coeff" => {
                    self.bump();
                    let name_pos = self.pos;
                    let def = self.coeff_def()?;
                    if env.contains_key(&def.name) {
                        self.pos = name_pos;
                        return Err(self.error_here(format!("coefficient `{}` defined twice", def.name)));
                    }
                    env.insert(def.name.clone(), def);
                }
                Tok::Ident(k) if k == "operator" => {
                    if expr.is_some() {
                        return Err(self.error_here("more than one operator block"));
                    }
                    self.bump();
                    self.expect('{')?;
                    self.names = Some(env.keys().cloned().collect());
                    expr = Some(self.expr()?);
                    self.expect('}')?;
                    self.eat(';');
                }
                _ => {
                    self.pos = kw_pos;
                    return Err(self.unexpected("`grid`, `coeff` or `operator`"));
                }
            }
        }
        let expr = expr.ok_or_else(|| self.error_here("missing operator block"))?;
        Ok(Program { dim, size, env, expr })
    }

    fn coeff_def(&mut self) -> PResult<CoeffDef> {
        let name = self.ident()?;
        let sum = match self.peek() {
            Tok::Ident(s) if s == "sum" => {
                self.bump();
                true
            }
            _ => false,
        };
        self.expect('{')?;
        let mut boxes: Vec<BoxRegion> = Vec::new();
        while !self.eat('}') {
            let box_pos = self.pos;
            let mut intervals = vec![self.interval()?];
            while matches!(self.peek(), Tok::Ident(s) if s == "x") {
                self.bump();
                intervals.push(self.interval()?);
            }
            if let Some(first) = boxes.first() {
                if first.intervals.len() != intervals.len() {
                    self.pos = box_pos;
                    return Err(self.error_here(format!(
                        "box has {} intervals but earlier boxes of `{name}` have {}",
                        intervals.len(),
                        first.intervals.len()
                    )));
                }
            }
            self.expect(':')?;
            let value = self.coeff_value()?;
            if let (Some(a), Some(b)) = (value.size(), boxes.iter().find_map(|b| b.value.size())) {
                if a != b {
                    self.pos = box_pos;
                    return Err(self.error_here(format!("`{name}` mixes {a}x{a} and {b}x{b} values")));
                }
            }
            self.expect(';')?;
            boxes.push(BoxRegion { intervals, value });
        }
        Ok(CoeffDef { name, sum, boxes })
    }

    fn interval(&mut self) -> PResult<Interval> {
        let start = self.pos;
        self.expect('[')?;
        let lo = self.rational()?;
        self.expect(',')?;
        let hi = self.rational()?;
        self.expect(')')?;
        let zero = Rational::zero();
        if lo < zero || hi > Rational::one() || lo >= hi {
            self.pos = start;
            return Err(self.error_here(format!("interval [{lo},{hi}) must satisfy 0 <= lo < hi <= 1")));
        }
        Ok(Interval { lo, hi })
    }

    fn coeff_value(&mut self) -> PResult<CoeffValue> {
        if self.is_punct('[') {
            let start = self.pos;
            self.bump();
            let mut rows = vec![self.matrix_row()?];
            while self.eat(',') {
                rows.push(self.matrix_row()?);
            }
            self.expect(']')?;
            let m = rows.len();
            if rows.iter().any(|r| r.len() != m) {
                self.pos = start;
                return Err(self.error_here("matrix value must be square"));
            }
            return Ok(CoeffValue::Matrix(rows));
        }
        Ok(CoeffValue::Scalar(self.complex_value()?))
    }

    fn matrix_row(&mut self) -> PResult<Vec<Complex64>> {
        self.expect('[')?;
        let mut row = vec![self.complex_value()?];
        while self.eat(',') {
            row.push(self.complex_value()?);
        }
        self.expect(']')?;
        Ok(row)
    }

    fn complex_value(&mut self) -> PResult<Complex64> {
        if self.is_punct('(') {
            self.bump();
            let c = self.complex_bare()?;
            self.expect(')')?;
            return Ok(c);
        }
        self.complex_bare()
    }
}

enum Factor {
    Literal(Complex64),
    Op(OperatorExpr),
}

fn negate(e: OperatorExpr) -> OperatorExpr {
    OperatorExpr::scale(Complex64::new(-1.0, 0.0), e)
}
