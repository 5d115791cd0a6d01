//! Expression grammar for symbols.
//!
//! Sums of products of `x`-factors (constants, `i`, `pi`, `x1`, `e^{...}`, `cos`, `sin`)
//! and `xi`-factors (`xi1`, `xi2`, `|xi|^{2m}`, `<xi>^s`). Juxtaposition multiplies, so
//! `2ix1` reads as `2 * i * x1`.

use mlwf_core::grid::{Grid, SampledField};
use mlwf_core::symbol::{monomial, Multiplier, Symbol, SymbolClass, Term};
use mlwf_core::C64;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(&'static str),
    Bracket,
    Norm,
    Op(char),
}

const KEYWORDS: [&str; 15] = ["cos", "sin", "exp", "sqrt", "xi1", "xi2", "xi", "x1", "x2", "x", "pi", "i", "e", "ξ1", "ξ2"];

fn tokenize(src: &str) -> CliResult<Vec<Tok>> {
    let mut out = Vec::new();
    let mut rest = src;
    while let Some(c) = rest.chars().next() {
        if c.is_whitespace() {
            rest = &rest[c.len_utf8()..];
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && rest[1..].starts_with(|d: char| d.is_ascii_digit())) {
            let mut end = 0;
            let b = rest.as_bytes();
            while end < b.len() && (b[end].is_ascii_digit() || b[end] == b'.') {
                end += 1;
            }
            // scientific exponent only when followed by digits
            if end < b.len() && (b[end] == b'e' || b[end] == b'E') {
                let mut j = end + 1;
                if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
                    j += 1;
                }
                if j < b.len() && b[j].is_ascii_digit() {
                    while j < b.len() && b[j].is_ascii_digit() {
                        j += 1;
                    }
                    end = j;
                }
            }
            let v: f64 = rest[..end].parse().map_err(|_| CliError::schema(format!("bad number '{}'", &rest[..end])))?;
            out.push(Tok::Num(v));
            rest = &rest[end..];
            continue;
        }
        if let Some((pat, tok)) = [("<xi>", Tok::Bracket), ("⟨ξ⟩", Tok::Bracket), ("|xi|", Tok::Norm), ("|ξ|", Tok::Norm)]
            .into_iter()
            .find(|(pat, _)| rest.starts_with(*pat))
        {
            out.push(tok);
            rest = &rest[pat.len()..];
            continue;
        }
        if let Some(kw) = KEYWORDS.iter().filter(|k| rest.starts_with(**k)).max_by_key(|k| k.len()) {
            out.push(Tok::Ident(match *kw {
                "ξ1" => "xi1",
                "ξ2" => "xi2",
                other => other,
            }));
            rest = &rest[kw.len()..];
            continue;
        }
        if rest.starts_with('ξ') {
            out.push(Tok::Ident("xi"));
            rest = &rest['ξ'.len_utf8()..];
            continue;
        }
        if "+-*/^(){}".contains(c) {
            out.push(Tok::Op(c));
            rest = &rest[1..];
            continue;
        }
        return Err(CliError::schema(format!("unexpected character '{c}' in symbol expression")));
    }
    Ok(out)
}

#[derive(Debug, Clone)]
enum Ast {
    Num(C64),
    X(usize),
    Xi(usize),
    Bracket,
    Norm,
    Add(Box<Ast>, Box<Ast>),
    Sub(Box<Ast>, Box<Ast>),
    Mul(Box<Ast>, Box<Ast>),
    Div(Box<Ast>, Box<Ast>),
    Neg(Box<Ast>),
    Pow(Box<Ast>, Box<Ast>),
    Call(&'static str, Box<Ast>),
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Op(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> CliResult<Ast> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Ast::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Ast::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn starts_factor(&self) -> bool {
        matches!(self.peek(), Some(Tok::Num(_) | Tok::Ident(_) | Tok::Bracket | Tok::Norm | Tok::Op('(') | Tok::Op('{')))
    }

    fn term(&mut self) -> CliResult<Ast> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Ast::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Ast::Div(Box::new(lhs), Box::new(self.unary()?));
            } else if self.starts_factor() {
                lhs = Ast::Mul(Box::new(lhs), Box::new(self.power()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> CliResult<Ast> {
        if self.eat('-') {
            Ok(Ast::Neg(Box::new(self.unary()?)))
        } else if self.eat('+') {
            self.unary()
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> CliResult<Ast> {
        let base = self.atom()?;
        if self.eat('^') {
            let exp = self.unary_exponent()?;
            return Ok(match base {
                Ast::Call("e", _) => Ast::Call("exp", Box::new(exp)),
                b => Ast::Pow(Box::new(b), Box::new(exp)),
            });
        }
        Ok(base)
    }

    fn unary_exponent(&mut self) -> CliResult<Ast> {
        if self.eat('-') {
            Ok(Ast::Neg(Box::new(self.unary_exponent()?)))
        } else {
            self.power()
        }
    }

    fn atom(&mut self) -> CliResult<Ast> {
        let tok = self.peek().cloned().ok_or_else(|| CliError::schema("symbol expression ends unexpectedly"))?;
        self.pos += 1;
        Ok(match tok {
            Tok::Num(v) => Ast::Num(C64::new(v, 0.0)),
            Tok::Bracket => Ast::Bracket,
            Tok::Norm => Ast::Norm,
            Tok::Op(open @ ('(' | '{')) => {
                let inner = self.expr()?;
                let close = if open == '(' { ')' } else { '}' };
                if !self.eat(close) {
                    return Err(CliError::schema(format!("expected '{close}' in symbol expression")));
                }
                inner
            }
            Tok::Ident(name) => match name {
                "i" => Ast::Num(C64::new(0.0, 1.0)),
                "pi" => Ast::Num(C64::new(std::f64::consts::PI, 0.0)),
                // `e` becomes `exp` when followed by `^`; the marker carries Euler's number otherwise
                "e" => {
                    if self.peek() == Some(&Tok::Op('^')) {
                        Ast::Call("e", Box::new(Ast::Num(C64::new(0.0, 0.0))))
                    } else {
                        Ast::Num(C64::new(std::f64::consts::E, 0.0))
                    }
                }
                "x" | "x1" => Ast::X(if name == "x" { usize::MAX } else { 0 }),
                "x2" => Ast::X(1),
                "xi" => Ast::Xi(usize::MAX),
                "xi1" => Ast::Xi(0),
                "xi2" => Ast::Xi(1),
                f @ ("cos" | "sin" | "exp" | "sqrt") => {
                    let arg = self.atom()?;
                    Ast::Call(f, Box::new(arg))
                }
                other => return Err(CliError::schema(format!("unknown name '{other}'"))),
            },
            Tok::Op(c) => return Err(CliError::schema(format!("unexpected '{c}' in symbol expression"))),
        })
    }
}

/// Coefficient `c(x)` times `xi^mono <xi>^bracket`.
#[derive(Debug, Clone)]
struct Piece {
    coeff: Vec<C64>,
    mono: [u32; 2],
    bracket: f64,
}

impl Piece {
    fn same_xi(&self, o: &Piece) -> bool {
        self.mono == o.mono && self.bracket == o.bracket
    }

    fn is_x_only(&self) -> bool {
        self.mono == [0, 0] && self.bracket == 0.0
    }
}

#[derive(Debug, Clone)]
struct Value(Vec<Piece>);

/// Parsed expression, evaluated per grid.
#[derive(Debug, Clone)]
pub struct SymbolExpr {
    ast: Ast,
}

impl SymbolExpr {
    pub fn parse(src: &str) -> CliResult<Self> {
        let toks = tokenize(src)?;
        if toks.is_empty() {
            return Err(CliError::schema("empty symbol expression"));
        }
        let mut p = Parser { toks, pos: 0 };
        let ast = p.expr()?;
        if p.pos != p.toks.len() {
            return Err(CliError::schema(format!("trailing input in symbol expression '{src}'")));
        }
        Ok(SymbolExpr { ast })
    }

    pub fn symbol(&self, grid: Grid, class: SymbolClass) -> CliResult<Symbol> {
        let v = Ev { grid }.eval(&self.ast)?;
        let pieces = merge(v.0);
        if pieces.iter().all(|p| p.bracket == 0.0) {
            let terms = pieces.into_iter().map(|p| (p.mono, SampledField { grid, values: p.coeff })).collect();
            return Ok(Symbol::polynomial(grid, terms, class)?);
        }
        let terms = pieces
            .into_iter()
            .map(|p| {
                let mult = if p.bracket == 0.0 {
                    Multiplier::Monomial(p.mono)
                } else {
                    Multiplier::Table(
                        (0..grid.len())
                            .map(|k| {
                                let kf = grid.freq_f(k);
                                monomial(kf, p.mono) * (1.0 + kf[0] * kf[0] + kf[1] * kf[1]).powf(p.bracket / 2.0)
                            })
                            .collect(),
                    )
                };
                Term { coeff: SampledField { grid, values: p.coeff }, mult }
            })
            .collect();
        Ok(Symbol::separable(grid, terms, class)?)
    }

    /// Evaluates an expression that must not depend on `xi`.
    pub fn field(&self, grid: Grid) -> CliResult<SampledField> {
        let pieces = merge(Ev { grid }.eval(&self.ast)?.0);
        match pieces.as_slice() {
            [] => Ok(SampledField::zeros(grid)),
            [p] if p.is_x_only() => Ok(SampledField { grid, values: p.coeff.clone() }),
            _ => Err(CliError::schema("coefficient expression must not depend on xi")),
        }
    }
}

fn merge(pieces: Vec<Piece>) -> Vec<Piece> {
    let mut out: Vec<Piece> = Vec::new();
    for p in pieces {
        match out.iter_mut().find(|q| q.same_xi(&p)) {
            Some(q) => q.coeff.iter_mut().zip(&p.coeff).for_each(|(a, b)| *a += b),
            None => out.push(p),
        }
    }
    out.retain(|p| p.coeff.iter().any(|c| c.norm() != 0.0));
    out
}

struct Ev {
    grid: Grid,
}

impl Ev {
    fn constant(&self, c: C64) -> Value {
        Value(vec![Piece { coeff: vec![c; self.grid.len()], mono: [0, 0], bracket: 0.0 }])
    }

    fn axis(&self, a: usize, what: &str) -> CliResult<usize> {
        match (a, self.grid.dim()) {
            (usize::MAX, 1) => Ok(0),
            (usize::MAX, _) => Err(CliError::schema(format!("use {what}1 or {what}2 on a two-dimensional grid"))),
            (1, 1) => Err(CliError::schema(format!("{what}2 needs a two-dimensional grid"))),
            (a, _) => Ok(a),
        }
    }

    fn x_only(&self, v: Value, ctx: &str) -> CliResult<Vec<C64>> {
        let pieces = merge(v.0);
        if pieces.iter().any(|p| !p.is_x_only()) {
            return Err(CliError::schema(format!("{ctx} needs an argument independent of xi")));
        }
        Ok(pieces.into_iter().next().map_or_else(|| vec![C64::new(0.0, 0.0); self.grid.len()], |p| p.coeff))
    }

    fn mul(&self, a: &Value, b: &Value) -> Value {
        let mut out = Vec::with_capacity(a.0.len() * b.0.len());
        for p in &a.0 {
            for q in &b.0 {
                out.push(Piece {
                    coeff: p.coeff.iter().zip(&q.coeff).map(|(u, v)| u * v).collect(),
                    mono: [p.mono[0] + q.mono[0], p.mono[1] + q.mono[1]],
                    bracket: p.bracket + q.bracket,
                });
            }
        }
        Value(merge(out))
    }

    fn eval(&self, ast: &Ast) -> CliResult<Value> {
        let m = self.grid.len();
        Ok(match ast {
            Ast::Num(c) => self.constant(*c),
            Ast::X(a) => {
                let a = self.axis(*a, "x")?;
                Value(vec![Piece { coeff: (0..m).map(|i| C64::new(self.grid.point(i)[a], 0.0)).collect(), mono: [0, 0], bracket: 0.0 }])
            }
            Ast::Xi(a) => {
                let mut mono = [0, 0];
                mono[self.axis(*a, "xi")?] = 1;
                Value(vec![Piece { coeff: vec![C64::new(1.0, 0.0); m], mono, bracket: 0.0 }])
            }
            Ast::Bracket => Value(vec![Piece { coeff: vec![C64::new(1.0, 0.0); m], mono: [0, 0], bracket: 1.0 }]),
            Ast::Norm => return Err(CliError::schema("|xi| is only supported with an even integer power")),
            Ast::Add(a, b) => {
                let mut v = self.eval(a)?.0;
                v.extend(self.eval(b)?.0);
                Value(merge(v))
            }
            Ast::Sub(a, b) => self.eval(&Ast::Add(a.clone(), Box::new(Ast::Neg(b.clone()))))?,
            Ast::Neg(a) => {
                let mut v = self.eval(a)?;
                v.0.iter_mut().for_each(|p| p.coeff.iter_mut().for_each(|c| *c = -*c));
                v
            }
            Ast::Mul(a, b) => self.mul(&self.eval(a)?, &self.eval(b)?),
            Ast::Div(a, b) => {
                let den = self.x_only(self.eval(b)?, "division")?;
                if den.iter().any(|d| d.norm() == 0.0) {
                    return Err(CliError::schema("division by a coefficient that vanishes on the grid"));
                }
                let inv = Value(vec![Piece { coeff: den.iter().map(|d| d.inv()).collect(), mono: [0, 0], bracket: 0.0 }]);
                self.mul(&self.eval(a)?, &inv)
            }
            Ast::Pow(base, exp) => {
                let e = self.x_only(self.eval(exp)?, "an exponent")?;
                let e0 = e[0];
                let constant = e.iter().all(|v| *v == e0) && e0.im == 0.0;
                match (&**base, constant) {
                    (Ast::Bracket, true) => {
                        Value(vec![Piece { coeff: vec![C64::new(1.0, 0.0); m], mono: [0, 0], bracket: e0.re }])
                    }
                    (Ast::Norm, true) if e0.re >= 0.0 && e0.re.fract() == 0.0 && (e0.re as u32).is_multiple_of(2) => {
                        let sq = (0..self.grid.dim())
                            .map(|a| {
                                let mut mono = [0, 0];
                                mono[a] = 2;
                                Piece { coeff: vec![C64::new(1.0, 0.0); m], mono, bracket: 0.0 }
                            })
                            .collect();
                        self.int_pow(&Value(sq), e0.re as u32 / 2)
                    }
                    (Ast::Norm, _) => return Err(CliError::schema("|xi| is only supported with an even integer power")),
                    (b, _) => {
                        let base = self.eval(b)?;
                        if constant && e0.re >= 0.0 && e0.re.fract() == 0.0 && e0.re <= 16.0 {
                            self.int_pow(&base, e0.re as u32)
                        } else {
                            let bx = self.x_only(base, "a non-integer power")?;
                            Value(vec![Piece { coeff: bx.iter().zip(&e).map(|(b, e)| b.powc(*e)).collect(), mono: [0, 0], bracket: 0.0 }])
                        }
                    }
                }
            }
            Ast::Call(f, arg) => {
                let v = self.x_only(self.eval(arg)?, f)?;
                let coeff = v
                    .iter()
                    .map(|z| match *f {
                        "cos" => z.cos(),
                        "sin" => z.sin(),
                        "sqrt" => z.sqrt(),
                        _ => z.exp(),
                    })
                    .collect();
                Value(vec![Piece { coeff, mono: [0, 0], bracket: 0.0 }])
            }
        })
    }

    fn int_pow(&self, base: &Value, k: u32) -> Value {
        let mut acc = self.constant(C64::new(1.0, 0.0));
        for _ in 0..k {
            acc = self.mul(&acc, base);
        }
        acc
    }
}
