//! Parser and evaluator for the scalar coefficient functions A, B, C.
//!
//! Grammar:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := base ('^' base)?
//! base   := number | ident | ident '(' expr ')' | '(' expr ')' | '-' base
//! ```
//!
//! Identifiers are the coordinates `x1..x4`, the functions `exp`, `ln`,
//! `sinh`, `cosh`, `sqrt`, and free names for constants that the enclosing
//! metric specification binds to numeric values. The AST is immutable after
//! parsing; evaluation is pure and thread-safe.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::jet::{Jet, Point4};

/// Numeric bindings for the named constants appearing in expressions.
pub type Constants = BTreeMap<String, f64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Exp,
    Ln,
    Sinh,
    Cosh,
    Sqrt,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Sqrt => "sqrt",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        match name {
            "exp" => Some(Func::Exp),
            "ln" => Some(Func::Ln),
            "sinh" => Some(Func::Sinh),
            "cosh" => Some(Func::Cosh),
            "sqrt" => Some(Func::Sqrt),
            _ => None,
        }
    }
}

/// Expression tree. Numeric literals produced by the parser are always
/// non-negative; negation is the `Neg` operator.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(usize),
    Const(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// A parsed scalar coefficient function on ℝ⁴.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    ast: Expr,
}

impl ScalarField {
    pub fn parse(text: &str) -> Result<Self> {
        let tokens = lex(text)?;
        let mut parser = Parser { tokens, pos: 0 };
        let ast = parser.expr()?;
        parser.expect_eof()?;
        Ok(ScalarField { ast })
    }

    /// Builds a field from an already-constructed tree, validating that
    /// every variable index is in 1..=4 and every literal is finite and
    /// non-negative (negation is the `Neg` operator, as the parser
    /// produces it).
    pub fn from_ast(ast: Expr) -> Result<Self> {
        fn validate(e: &Expr) -> Result<()> {
            match e {
                Expr::Num(v) => {
                    if v.is_finite() && *v >= 0.0 {
                        Ok(())
                    } else {
                        Err(Error::Domain(format!("bad literal {v} in expression tree")))
                    }
                }
                Expr::Var(i) => {
                    if (1..=4).contains(i) {
                        Ok(())
                    } else {
                        Err(Error::VariableIndex {
                            offset: 0,
                            name: format!("x{i}"),
                        })
                    }
                }
                Expr::Const(_) => Ok(()),
                Expr::Neg(c) | Expr::Call(_, c) => validate(c),
                Expr::Add(l, r)
                | Expr::Sub(l, r)
                | Expr::Mul(l, r)
                | Expr::Div(l, r)
                | Expr::Pow(l, r) => {
                    validate(l)?;
                    validate(r)
                }
            }
        }
        validate(&ast)?;
        Ok(ScalarField { ast })
    }

    pub fn ast(&self) -> &Expr {
        &self.ast
    }

    pub fn eval(&self, p: &Point4, consts: &Constants) -> Result<f64> {
        eval_value(&self.ast, p, consts)
    }

    /// Evaluates the field and its exact first partials by dual-number
    /// propagation (no finite differences).
    pub fn eval_jet(&self, p: &Point4, consts: &Constants) -> Result<Jet> {
        let jet = eval_jet(&self.ast, p, consts)?;
        if jet.is_finite() {
            Ok(jet)
        } else {
            Err(Error::Domain("non-finite value or derivative".into()))
        }
    }

    /// Collects the names of all constants the expression references.
    pub fn constant_names(&self, out: &mut BTreeSet<String>) {
        collect_constants(&self.ast, out);
    }
}

impl fmt::Display for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, &self.ast, 0)
    }
}

impl FromStr for ScalarField {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ScalarField::parse(s)
    }
}

fn collect_constants(e: &Expr, out: &mut BTreeSet<String>) {
    match e {
        Expr::Num(_) | Expr::Var(_) => {}
        Expr::Const(name) => {
            out.insert(name.clone());
        }
        Expr::Neg(c) | Expr::Call(_, c) => collect_constants(c, out),
        Expr::Add(l, r) | Expr::Sub(l, r) | Expr::Mul(l, r) | Expr::Div(l, r) | Expr::Pow(l, r) => {
            collect_constants(l, out);
            collect_constants(r, out);
        }
    }
}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

/// Token plus its byte span in the source.
#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    start: usize,
    end: usize,
}

fn lex(src: &str) -> Result<Vec<Spanned>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let single = |tok: Tok, at: usize| Spanned {
            tok,
            start: at,
            end: at + 1,
        };
        match c {
            b' ' | b'\t' | b'\r' | b'\n' => i += 1,
            b'+' => {
                out.push(single(Tok::Plus, i));
                i += 1;
            }
            b'-' => {
                out.push(single(Tok::Minus, i));
                i += 1;
            }
            b'*' => {
                out.push(single(Tok::Star, i));
                i += 1;
            }
            b'/' => {
                out.push(single(Tok::Slash, i));
                i += 1;
            }
            b'^' => {
                out.push(single(Tok::Caret, i));
                i += 1;
            }
            b'(' => {
                out.push(single(Tok::LParen, i));
                i += 1;
            }
            b')' => {
                out.push(single(Tok::RParen, i));
                i += 1;
            }
            b'0'..=b'9' | b'.' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                // optional exponent part: e or E, optional sign, digits
                if i < bytes.len()
                    && (bytes[i] == b'e' || bytes[i] == b'E')
                    && (i + 1 < bytes.len()
                        && (bytes[i + 1].is_ascii_digit()
                            || ((bytes[i + 1] == b'+' || bytes[i + 1] == b'-')
                                && i + 2 < bytes.len()
                                && bytes[i + 2].is_ascii_digit())))
                {
                    i += 2;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                let text = &src[start..i];
                let value = text.parse::<f64>().map_err(|_| Error::Syntax {
                    offset: start,
                    message: format!("bad numeric literal `{text}`"),
                })?;
                out.push(Spanned {
                    tok: Tok::Num(value),
                    start,
                    end: i,
                });
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push(Spanned {
                    tok: Tok::Ident(src[start..i].to_string()),
                    start,
                    end: i,
                });
            }
            _ => {
                return Err(Error::Syntax {
                    offset: i,
                    message: format!("unexpected character `{}`", &src[i..i + 1]),
                })
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Parser (recursive descent following the grammar above)
// ---------------------------------------------------------------------------

struct Parser {
    tokens: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|s| &s.tok)
    }

    /// Byte offset of the current token, or of end-of-input.
    fn offset(&self) -> usize {
        self.tokens
            .get(self.pos)
            .map(|s| s.start)
            .unwrap_or_else(|| self.tokens.last().map(|s| s.end).unwrap_or(0))
    }

    fn bump(&mut self) -> Option<Spanned> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect_eof(&self) -> Result<()> {
        if self.pos == self.tokens.len() {
            Ok(())
        } else {
            Err(Error::Syntax {
                offset: self.offset(),
                message: "unexpected trailing input".into(),
            })
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    let rhs = self.term()?;
                    lhs = Expr::Add(Box::new(lhs), Box::new(rhs));
                }
                Some(Tok::Minus) => {
                    self.bump();
                    let rhs = self.term()?;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn expect_rparen(&mut self) -> Result<()> {
        let offset = self.offset();
        match self.bump() {
            Some(Spanned {
                tok: Tok::RParen, ..
            }) => Ok(()),
            _ => Err(Error::Syntax {
                offset,
                message: "expected `)`".into(),
            }),
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.bump();
                    let rhs = self.factor()?;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(rhs));
                }
                Some(Tok::Slash) => {
                    self.bump();
                    let rhs = self.factor()?;
                    lhs = Expr::Div(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        let base = self.base()?;
        if let Some(Tok::Caret) = self.peek() {
            self.bump();
            let exponent = self.base()?;
            Ok(Expr::Pow(Box::new(base), Box::new(exponent)))
        } else {
            Ok(base)
        }
    }

    fn base(&mut self) -> Result<Expr> {
        let offset = self.offset();
        match self.bump() {
            Some(Spanned {
                tok: Tok::Num(v), ..
            }) => Ok(Expr::Num(v)),
            Some(Spanned {
                tok: Tok::Minus, ..
            }) => {
                let inner = self.base()?;
                Ok(Expr::Neg(Box::new(inner)))
            }
            Some(Spanned {
                tok: Tok::LParen, ..
            }) => {
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Some(Spanned {
                tok: Tok::Ident(name),
                start,
                ..
            }) => {
                if let Some(Tok::LParen) = self.peek() {
                    let func = Func::from_name(&name).ok_or(Error::UnknownFunction {
                        offset: start,
                        name: name.clone(),
                    })?;
                    self.bump(); // consume '('
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    Ok(Expr::Call(func, Box::new(arg)))
                } else {
                    ident_expr(&name, start)
                }
            }
            _ => Err(Error::Syntax {
                offset,
                message: "expected expression".into(),
            }),
        }
    }
}

/// Maps a bare identifier to a coordinate or a named constant. Identifiers
/// of the shape `x<digits>` are always coordinate references, so an index
/// outside 1..=4 is an error rather than a constant.
fn ident_expr(name: &str, offset: usize) -> Result<Expr> {
    let mut chars = name.chars();
    if chars.next() == Some('x') {
        let rest: &str = &name[1..];
        if !rest.is_empty() && rest.chars().all(|c| c.is_ascii_digit()) {
            return match rest.parse::<usize>() {
                Ok(i @ 1..=4) => Ok(Expr::Var(i)),
                _ => Err(Error::VariableIndex {
                    offset,
                    name: name.to_string(),
                }),
            };
        }
    }
    Ok(Expr::Const(name.to_string()))
}

// ---------------------------------------------------------------------------
// Canonical printer
// ---------------------------------------------------------------------------

// Binding powers: Add/Sub 10, Mul/Div 20, Neg 30, Pow operands are printed
// as atoms. `write_expr` parenthesizes whenever a child binds weaker than
// its context requires, so `parse(print(ast)) == ast` structurally.
fn write_expr(f: &mut fmt::Formatter<'_>, e: &Expr, required: u8) -> fmt::Result {
    let bp = binding_power(e);
    if bp < required {
        write!(f, "(")?;
        write_expr(f, e, 0)?;
        return write!(f, ")");
    }
    match e {
        Expr::Num(v) => write!(f, "{v}"),
        Expr::Var(i) => write!(f, "x{i}"),
        Expr::Const(name) => write!(f, "{name}"),
        Expr::Neg(c) => {
            write!(f, "-")?;
            write_expr(f, c, 100)
        }
        Expr::Add(l, r) => {
            write_expr(f, l, 10)?;
            write!(f, " + ")?;
            write_expr(f, r, 11)
        }
        Expr::Sub(l, r) => {
            write_expr(f, l, 10)?;
            write!(f, " - ")?;
            write_expr(f, r, 11)
        }
        Expr::Mul(l, r) => {
            write_expr(f, l, 20)?;
            write!(f, "*")?;
            write_expr(f, r, 21)
        }
        Expr::Div(l, r) => {
            write_expr(f, l, 20)?;
            write!(f, "/")?;
            write_expr(f, r, 21)
        }
        Expr::Pow(b, x) => {
            write_expr(f, b, 100)?;
            write!(f, "^")?;
            write_expr(f, x, 100)
        }
        Expr::Call(func, arg) => {
            write!(f, "{}(", func.name())?;
            write_expr(f, arg, 0)?;
            write!(f, ")")
        }
    }
}

fn binding_power(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) | Expr::Sub(..) => 10,
        Expr::Mul(..) | Expr::Div(..) => 20,
        Expr::Neg(..) => 30,
        Expr::Pow(..) => 40,
        Expr::Num(_) | Expr::Var(_) | Expr::Const(_) | Expr::Call(..) => 100,
    }
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

fn lookup(consts: &Constants, name: &str) -> Result<f64> {
    consts
        .get(name)
        .copied()
        .ok_or_else(|| Error::UnboundConstant(name.to_string()))
}

fn eval_value(e: &Expr, p: &Point4, consts: &Constants) -> Result<f64> {
    let v = match e {
        Expr::Num(v) => *v,
        Expr::Var(i) => p.coord(*i),
        Expr::Const(name) => lookup(consts, name)?,
        Expr::Neg(c) => -eval_value(c, p, consts)?,
        Expr::Add(l, r) => eval_value(l, p, consts)? + eval_value(r, p, consts)?,
        Expr::Sub(l, r) => eval_value(l, p, consts)? - eval_value(r, p, consts)?,
        Expr::Mul(l, r) => eval_value(l, p, consts)? * eval_value(r, p, consts)?,
        Expr::Div(l, r) => {
            let num = eval_value(l, p, consts)?;
            let den = eval_value(r, p, consts)?;
            if den == 0.0 {
                return Err(Error::Domain("division by zero".into()));
            }
            num / den
        }
        Expr::Pow(b, x) => {
            let base = eval_value(b, p, consts)?;
            let exponent = eval_value(x, p, consts)?;
            if let Some(n) = as_integer(exponent) {
                if n < 0 && base == 0.0 {
                    return Err(Error::Domain("zero base with negative exponent".into()));
                }
                base.powi(n)
            } else {
                if base <= 0.0 {
                    return Err(Error::Domain(format!(
                        "non-integer power of non-positive base {base}"
                    )));
                }
                (exponent * base.ln()).exp()
            }
        }
        Expr::Call(func, arg) => {
            let a = eval_value(arg, p, consts)?;
            match func {
                Func::Exp => a.exp(),
                Func::Ln => {
                    if a <= 0.0 {
                        return Err(Error::Domain(format!("ln of non-positive value {a}")));
                    }
                    a.ln()
                }
                Func::Sinh => a.sinh(),
                Func::Cosh => a.cosh(),
                Func::Sqrt => {
                    if a < 0.0 {
                        return Err(Error::Domain(format!("sqrt of negative value {a}")));
                    }
                    a.sqrt()
                }
            }
        }
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Domain("non-finite value".into()))
    }
}

fn eval_jet(e: &Expr, p: &Point4, consts: &Constants) -> Result<Jet> {
    Ok(match e {
        Expr::Num(v) => Jet::constant(*v),
        Expr::Var(i) => Jet::variable(*i, p.coord(*i)),
        Expr::Const(name) => Jet::constant(lookup(consts, name)?),
        Expr::Neg(c) => -eval_jet(c, p, consts)?,
        Expr::Add(l, r) => eval_jet(l, p, consts)? + eval_jet(r, p, consts)?,
        Expr::Sub(l, r) => eval_jet(l, p, consts)? - eval_jet(r, p, consts)?,
        Expr::Mul(l, r) => eval_jet(l, p, consts)? * eval_jet(r, p, consts)?,
        Expr::Div(l, r) => {
            let num = eval_jet(l, p, consts)?;
            let den = eval_jet(r, p, consts)?;
            if den.value == 0.0 {
                return Err(Error::Domain("division by zero".into()));
            }
            num / den
        }
        Expr::Pow(b, x) => {
            let base = eval_jet(b, p, consts)?;
            let exponent = eval_jet(x, p, consts)?;
            let exponent_constant = exponent.partials.iter().all(|&d| d == 0.0);
            match as_integer(exponent.value) {
                // Integer constant exponents go through repeated
                // multiplication, which stays exact for any base sign.
                Some(n) if exponent_constant => {
                    if n < 0 && base.value == 0.0 {
                        return Err(Error::Domain("zero base with negative exponent".into()));
                    }
                    base.powi(n)
                }
                // General case lowers to exp(e·ln(b)), requiring b > 0.
                _ => {
                    if base.value <= 0.0 {
                        return Err(Error::Domain(format!(
                            "non-integer power of non-positive base {}",
                            base.value
                        )));
                    }
                    (exponent * base.ln()).exp()
                }
            }
        }
        Expr::Call(func, arg) => {
            let a = eval_jet(arg, p, consts)?;
            match func {
                Func::Exp => a.exp(),
                Func::Ln => {
                    if a.value <= 0.0 {
                        return Err(Error::Domain(format!(
                            "ln of non-positive value {}",
                            a.value
                        )));
                    }
                    a.ln()
                }
                Func::Sinh => a.sinh(),
                Func::Cosh => a.cosh(),
                Func::Sqrt => {
                    if a.value <= 0.0 {
                        return Err(Error::Domain(format!(
                            "sqrt of non-positive value {} (derivative singular at zero)",
                            a.value
                        )));
                    }
                    a.sqrt()
                }
            }
        }
    })
}

fn as_integer(v: f64) -> Option<i32> {
    if v.fract() == 0.0 && v.abs() <= i32::MAX as f64 {
        Some(v as i32)
    } else {
        None
    }
}

// ---------------------------------------------------------------------------
// Domain constraints
// ---------------------------------------------------------------------------

/// One strict inequality `lhs < rhs` between scalar fields.
#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub lhs: ScalarField,
    pub rhs: ScalarField,
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} < {}", self.lhs, self.rhs)
    }
}

/// A conjunction of strict inequalities restricting the admissible points.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConstraintSet {
    constraints: Vec<Constraint>,
}

impl ConstraintSet {
    pub fn new(constraints: Vec<Constraint>) -> Self {
        Self { constraints }
    }

    pub fn push(&mut self, lhs: ScalarField, rhs: ScalarField) {
        self.constraints.push(Constraint { lhs, rhs });
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Constraint> {
        self.constraints.iter()
    }

    /// True iff every strict inequality holds at `p`. Evaluation errors
    /// propagate rather than counting as violations.
    pub fn satisfies(&self, p: &Point4, consts: &Constants) -> Result<bool> {
        Ok(self.first_violated(p, consts)?.is_none())
    }

    /// The first constraint that fails at `p`, if any.
    pub fn first_violated(&self, p: &Point4, consts: &Constants) -> Result<Option<&Constraint>> {
        for c in &self.constraints {
            let lhs = c.lhs.eval(p, consts)?;
            let rhs = c.rhs.eval(p, consts)?;
            if lhs >= rhs {
                return Ok(Some(c));
            }
        }
        Ok(None)
    }

    pub fn constant_names(&self, out: &mut BTreeSet<String>) {
        for c in &self.constraints {
            c.lhs.constant_names(out);
            c.rhs.constant_names(out);
        }
    }
}
