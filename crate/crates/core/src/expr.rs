//! A minimal expression language for time-dependent real coefficients.
//!
//! Expressions are trees over the single variable `t`, parsed from infix text
//! with `^` for powers and `name(arg)` for function application. Evaluation is
//! deterministic and returns hard errors on domain violations (log of a
//! non-positive number, division by zero, non-finite results) instead of
//! propagating NaN. [`Expr::diff`] produces the exact symbolic derivative, so
//! coefficient derivatives like a'(t) and d'(t) never go through finite
//! differences.

use crate::error::{Error, Result};
use std::fmt;
use std::sync::Arc;

const MAX_NODES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
    Sech,
    Exp,
    Ln,
    Abs,
    Sqrt,
    /// Appears only in derivatives of `abs`; evaluates to +/-1 and errors at 0.
    Sign,
}

impl UnaryOp {
    fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Tan => "tan",
            UnaryOp::Sinh => "sinh",
            UnaryOp::Cosh => "cosh",
            UnaryOp::Tanh => "tanh",
            UnaryOp::Sech => "sech",
            UnaryOp::Exp => "exp",
            UnaryOp::Ln => "ln",
            UnaryOp::Abs => "abs",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Sign => "sign",
        }
    }

    fn from_name(name: &str) -> Option<UnaryOp> {
        Some(match name {
            "sin" => UnaryOp::Sin,
            "cos" => UnaryOp::Cos,
            "tan" => UnaryOp::Tan,
            "sinh" => UnaryOp::Sinh,
            "cosh" => UnaryOp::Cosh,
            "tanh" => UnaryOp::Tanh,
            "sech" => UnaryOp::Sech,
            "exp" => UnaryOp::Exp,
            "ln" => UnaryOp::Ln,
            "abs" => UnaryOp::Abs,
            "sqrt" => UnaryOp::Sqrt,
            "sign" => UnaryOp::Sign,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Const(f64),
    Time,
    Unary(UnaryOp, Arc<Node>),
    Binary(BinaryOp, Arc<Node>, Arc<Node>),
}

/// An immutable coefficient expression in the variable `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Arc<Node>,
}

impl Expr {
    pub fn constant(value: f64) -> Expr {
        Expr {
            root: Arc::new(Node::Const(value)),
        }
    }

    pub fn time() -> Expr {
        Expr {
            root: Arc::new(Node::Time),
        }
    }

    pub fn zero() -> Expr {
        Expr::constant(0.0)
    }

    /// True when the expression is the literal constant 0. Used to short-cut
    /// the source-term quadratures when f and g are absent.
    pub fn is_zero_literal(&self) -> bool {
        matches!(*self.root, Node::Const(v) if v == 0.0)
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if !t.is_finite() {
            return Err(Error::Domain {
                node: "t".into(),
                t,
                message: "non-finite evaluation point".into(),
            });
        }
        eval_node(&self.root, t)
    }

    /// Exact symbolic derivative with respect to t.
    pub fn diff(&self) -> Expr {
        Expr {
            root: diff_node(&self.root),
        }
    }

    pub fn node_count(&self) -> usize {
        count_nodes(&self.root)
    }

    /// Canonical printer. `parse(render(e))` evaluates identically to `e`.
    pub fn render(&self) -> String {
        let mut s = String::new();
        render_node(&self.root, 0, &mut s);
        s
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

fn count_nodes(node: &Node) -> usize {
    match node {
        Node::Const(_) | Node::Time => 1,
        Node::Unary(_, a) => 1 + count_nodes(a),
        Node::Binary(_, a, b) => 1 + count_nodes(a) + count_nodes(b),
    }
}

fn domain_err(node: &Node, t: f64, message: &str) -> Error {
    let mut s = String::new();
    render_node(node, 0, &mut s);
    if s.len() > 60 {
        s.truncate(57);
        s.push_str("...");
    }
    Error::Domain {
        node: s,
        t,
        message: message.into(),
    }
}

fn eval_node(node: &Node, t: f64) -> Result<f64> {
    let v = match node {
        Node::Const(c) => *c,
        Node::Time => t,
        Node::Unary(op, a) => {
            let x = eval_node(a, t)?;
            match op {
                UnaryOp::Neg => -x,
                UnaryOp::Sin => x.sin(),
                UnaryOp::Cos => x.cos(),
                UnaryOp::Tan => x.tan(),
                UnaryOp::Sinh => x.sinh(),
                UnaryOp::Cosh => x.cosh(),
                UnaryOp::Tanh => x.tanh(),
                UnaryOp::Sech => 1.0 / x.cosh(),
                UnaryOp::Exp => x.exp(),
                UnaryOp::Ln => {
                    if x <= 0.0 {
                        return Err(domain_err(node, t, "ln of non-positive value"));
                    }
                    x.ln()
                }
                UnaryOp::Abs => x.abs(),
                UnaryOp::Sqrt => {
                    if x < 0.0 {
                        return Err(domain_err(node, t, "sqrt of negative value"));
                    }
                    x.sqrt()
                }
                UnaryOp::Sign => {
                    if x == 0.0 {
                        return Err(domain_err(node, t, "abs is not differentiable at 0"));
                    }
                    x.signum()
                }
            }
        }
        Node::Binary(op, a, b) => {
            let x = eval_node(a, t)?;
            let y = eval_node(b, t)?;
            match op {
                BinaryOp::Add => x + y,
                BinaryOp::Sub => x - y,
                BinaryOp::Mul => x * y,
                BinaryOp::Div => {
                    if y == 0.0 {
                        return Err(domain_err(node, t, "division by zero"));
                    }
                    x / y
                }
                BinaryOp::Pow => {
                    if x == 0.0 && y < 0.0 {
                        return Err(domain_err(node, t, "zero raised to a negative power"));
                    }
                    if x < 0.0 && y.fract() != 0.0 {
                        return Err(domain_err(
                            node,
                            t,
                            "negative base raised to a non-integer power",
                        ));
                    }
                    x.powf(y)
                }
            }
        }
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(domain_err(node, t, "non-finite result"))
    }
}

// Construction helpers with constant folding. Folding keeps derivative trees
// from exploding; parse() itself stores the input verbatim.

fn cnst(v: f64) -> Arc<Node> {
    Arc::new(Node::Const(v))
}

fn is_const(n: &Node, v: f64) -> bool {
    matches!(n, Node::Const(c) if *c == v)
}

fn add(a: Arc<Node>, b: Arc<Node>) -> Arc<Node> {
    if is_const(&a, 0.0) {
        return b;
    }
    if is_const(&b, 0.0) {
        return a;
    }
    if let (Node::Const(x), Node::Const(y)) = (&*a, &*b) {
        return cnst(x + y);
    }
    Arc::new(Node::Binary(BinaryOp::Add, a, b))
}

fn sub(a: Arc<Node>, b: Arc<Node>) -> Arc<Node> {
    if is_const(&b, 0.0) {
        return a;
    }
    if let (Node::Const(x), Node::Const(y)) = (&*a, &*b) {
        return cnst(x - y);
    }
    if is_const(&a, 0.0) {
        return neg(b);
    }
    Arc::new(Node::Binary(BinaryOp::Sub, a, b))
}

fn mul(a: Arc<Node>, b: Arc<Node>) -> Arc<Node> {
    if is_const(&a, 0.0) || is_const(&b, 0.0) {
        return cnst(0.0);
    }
    if is_const(&a, 1.0) {
        return b;
    }
    if is_const(&b, 1.0) {
        return a;
    }
    if let (Node::Const(x), Node::Const(y)) = (&*a, &*b) {
        return cnst(x * y);
    }
    Arc::new(Node::Binary(BinaryOp::Mul, a, b))
}

fn div(a: Arc<Node>, b: Arc<Node>) -> Arc<Node> {
    if is_const(&a, 0.0) && !is_const(&b, 0.0) {
        return cnst(0.0);
    }
    if is_const(&b, 1.0) {
        return a;
    }
    Arc::new(Node::Binary(BinaryOp::Div, a, b))
}

fn neg(a: Arc<Node>) -> Arc<Node> {
    if let Node::Const(x) = &*a {
        return cnst(-x);
    }
    Arc::new(Node::Unary(UnaryOp::Neg, a))
}

fn pow(a: Arc<Node>, b: Arc<Node>) -> Arc<Node> {
    if is_const(&b, 1.0) {
        return a;
    }
    Arc::new(Node::Binary(BinaryOp::Pow, a, b))
}

fn unary(op: UnaryOp, a: Arc<Node>) -> Arc<Node> {
    Arc::new(Node::Unary(op, a))
}

fn diff_node(node: &Node) -> Arc<Node> {
    match node {
        Node::Const(_) => cnst(0.0),
        Node::Time => cnst(1.0),
        Node::Unary(op, a) => {
            let da = diff_node(a);
            let outer = match op {
                UnaryOp::Neg => return neg(da),
                UnaryOp::Sin => unary(UnaryOp::Cos, a.clone()),
                UnaryOp::Cos => neg(unary(UnaryOp::Sin, a.clone())),
                // tan' = 1 + tan^2
                UnaryOp::Tan => add(
                    cnst(1.0),
                    pow(unary(UnaryOp::Tan, a.clone()), cnst(2.0)),
                ),
                UnaryOp::Sinh => unary(UnaryOp::Cosh, a.clone()),
                UnaryOp::Cosh => unary(UnaryOp::Sinh, a.clone()),
                // tanh' = sech^2
                UnaryOp::Tanh => pow(unary(UnaryOp::Sech, a.clone()), cnst(2.0)),
                // sech' = -sech * tanh
                UnaryOp::Sech => neg(mul(
                    unary(UnaryOp::Sech, a.clone()),
                    unary(UnaryOp::Tanh, a.clone()),
                )),
                UnaryOp::Exp => unary(UnaryOp::Exp, a.clone()),
                UnaryOp::Ln => div(cnst(1.0), a.clone()),
                UnaryOp::Abs => unary(UnaryOp::Sign, a.clone()),
                UnaryOp::Sqrt => div(cnst(1.0), mul(cnst(2.0), unary(UnaryOp::Sqrt, a.clone()))),
                // sign is piecewise constant away from 0
                UnaryOp::Sign => cnst(0.0),
            };
            mul(outer, da)
        }
        Node::Binary(op, a, b) => {
            let da = diff_node(a);
            let db = diff_node(b);
            match op {
                BinaryOp::Add => add(da, db),
                BinaryOp::Sub => sub(da, db),
                BinaryOp::Mul => add(mul(da, b.clone()), mul(a.clone(), db)),
                BinaryOp::Div => div(
                    sub(mul(da, b.clone()), mul(a.clone(), db)),
                    pow(b.clone(), cnst(2.0)),
                ),
                BinaryOp::Pow => {
                    if let Node::Const(n) = &**b {
                        // constant exponent: n * a^(n-1) * a'
                        mul(mul(cnst(*n), pow(a.clone(), cnst(n - 1.0))), da)
                    } else {
                        // a^b * (b' ln a + b a'/a)
                        mul(
                            pow(a.clone(), b.clone()),
                            add(
                                mul(db, unary(UnaryOp::Ln, a.clone())),
                                mul(b.clone(), div(da, a.clone())),
                            ),
                        )
                    }
                }
            }
        }
    }
}

// Precedence levels for the printer: 0 add/sub, 1 mul/div, 2 unary neg, 3 pow.
fn render_node(node: &Node, parent_prec: u8, out: &mut String) {
    match node {
        Node::Const(c) => {
            if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) {
                // wrap negative literals so they re-parse as unary neg
                if parent_prec > 0 {
                    out.push('(');
                    out.push_str(&format!("{c:?}"));
                    out.push(')');
                } else {
                    out.push_str(&format!("{c:?}"));
                }
            } else {
                out.push_str(&format!("{c:?}"));
            }
        }
        Node::Time => out.push('t'),
        Node::Unary(UnaryOp::Neg, a) => {
            let needs_paren = parent_prec > 2;
            if needs_paren {
                out.push('(');
            }
            out.push('-');
            render_node(a, 3, out);
            if needs_paren {
                out.push(')');
            }
        }
        Node::Unary(op, a) => {
            out.push_str(op.name());
            out.push('(');
            render_node(a, 0, out);
            out.push(')');
        }
        Node::Binary(op, a, b) => {
            let (prec, sym) = match op {
                BinaryOp::Add => (0, " + "),
                BinaryOp::Sub => (0, " - "),
                BinaryOp::Mul => (1, "*"),
                BinaryOp::Div => (1, "/"),
                BinaryOp::Pow => (3, "^"),
            };
            let needs_paren = parent_prec > prec;
            if needs_paren {
                out.push('(');
            }
            render_node(a, prec, out);
            out.push_str(sym);
            // right operand of a left-associative op needs the next level up
            render_node(b, prec + 1, out);
            if needs_paren {
                out.push(')');
            }
        }
    }
}

/// Parse an infix coefficient expression.
///
/// Precedence, tightest first: `^` (left-associative), unary `-`, `*` `/`,
/// `+` `-`. Functions use `name(arg)` syntax with the closed list of names in
/// [`UnaryOp`].
pub fn parse(text: &str) -> Result<Expr> {
    let mut p = Parser {
        bytes: text.as_bytes(),
        pos: 0,
    };
    if !text.is_ascii() {
        return Err(Error::Parse {
            offset: 0,
            message: "input must be ASCII".into(),
        });
    }
    p.skip_ws();
    if p.at_end() {
        return Err(Error::Parse {
            offset: 0,
            message: "empty expression".into(),
        });
    }
    let root = p.parse_sum()?;
    p.skip_ws();
    if !p.at_end() {
        return Err(Error::Parse {
            offset: p.pos,
            message: format!("unexpected trailing input `{}`", p.rest_preview()),
        });
    }
    let expr = Expr { root };
    if expr.node_count() > MAX_NODES {
        return Err(Error::Parse {
            offset: 0,
            message: format!("expression exceeds {MAX_NODES} nodes"),
        });
    }
    Ok(expr)
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn at_end(&self) -> bool {
        self.pos >= self.bytes.len()
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t' | b'\n' | b'\r')) {
            self.pos += 1;
        }
    }

    fn rest_preview(&self) -> String {
        let rest = &self.bytes[self.pos..];
        let take = rest.len().min(12);
        String::from_utf8_lossy(&rest[..take]).into_owned()
    }

    fn parse_sum(&mut self) -> Result<Arc<Node>> {
        let mut lhs = self.parse_product()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    let rhs = self.parse_product()?;
                    lhs = Arc::new(Node::Binary(BinaryOp::Add, lhs, rhs));
                }
                Some(b'-') => {
                    self.pos += 1;
                    let rhs = self.parse_product()?;
                    lhs = Arc::new(Node::Binary(BinaryOp::Sub, lhs, rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn parse_product(&mut self) -> Result<Arc<Node>> {
        let mut lhs = self.parse_unary()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    let rhs = self.parse_unary()?;
                    lhs = Arc::new(Node::Binary(BinaryOp::Mul, lhs, rhs));
                }
                Some(b'/') => {
                    self.pos += 1;
                    let rhs = self.parse_unary()?;
                    lhs = Arc::new(Node::Binary(BinaryOp::Div, lhs, rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn parse_unary(&mut self) -> Result<Arc<Node>> {
        self.skip_ws();
        if self.peek() == Some(b'-') {
            self.pos += 1;
            let inner = self.parse_unary()?;
            return Ok(Arc::new(Node::Unary(UnaryOp::Neg, inner)));
        }
        self.parse_power()
    }

    fn parse_power(&mut self) -> Result<Arc<Node>> {
        let mut lhs = self.parse_atom()?;
        loop {
            self.skip_ws();
            if self.peek() == Some(b'^') {
                self.pos += 1;
                let rhs = self.parse_atom()?;
                lhs = Arc::new(Node::Binary(BinaryOp::Pow, lhs, rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn parse_atom(&mut self) -> Result<Arc<Node>> {
        self.skip_ws();
        let start = self.pos;
        match self.peek() {
            None => Err(Error::Parse {
                offset: start,
                message: "unexpected end of input".into(),
            }),
            Some(b'(') => {
                self.pos += 1;
                let inner = self.parse_sum()?;
                self.skip_ws();
                if self.peek() != Some(b')') {
                    return Err(Error::Parse {
                        offset: self.pos,
                        message: "expected `)`".into(),
                    });
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.parse_number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.parse_ident(),
            Some(c) => Err(Error::Parse {
                offset: start,
                message: format!("unexpected character `{}`", c as char),
            }),
        }
    }

    fn parse_number(&mut self) -> Result<Arc<Node>> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit() || c == b'.') {
            self.pos += 1;
        }
        // exponent part, e.g. 1.5e-3
        if matches!(self.peek(), Some(b'e' | b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                    self.pos += 1;
                }
            } else {
                self.pos = mark; // `e` belongs to an identifier, back off
            }
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
        let value: f64 = text.parse().map_err(|_| Error::Parse {
            offset: start,
            message: format!("invalid number literal `{text}`"),
        })?;
        Ok(cnst(value))
    }

    fn parse_ident(&mut self) -> Result<Arc<Node>> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
        if name == "t" {
            return Ok(Arc::new(Node::Time));
        }
        let Some(op) = UnaryOp::from_name(name) else {
            return Err(Error::Parse {
                offset: start,
                message: format!("unknown identifier `{name}`"),
            });
        };
        self.skip_ws();
        if self.peek() != Some(b'(') {
            return Err(Error::Parse {
                offset: self.pos,
                message: format!("function `{name}` requires an argument list"),
            });
        }
        self.pos += 1;
        let arg = self.parse_sum()?;
        self.skip_ws();
        if self.peek() == Some(b',') {
            return Err(Error::Parse {
                offset: self.pos,
                message: format!("function `{name}` takes exactly one argument"),
            });
        }
        if self.peek() != Some(b')') {
            return Err(Error::Parse {
                offset: self.pos,
                message: "expected `)`".into(),
            });
        }
        self.pos += 1;
        Ok(Arc::new(Node::Unary(op, arg)))
    }
}

/// The six time-dependent coefficients of a generalized system.
///
/// `a` is the diffusion coefficient and must be nonzero on the working
/// interval; the remaining coefficients default to zero. Derivatives of `a`
/// and `d` are precomputed symbolically because they feed the characteristic
/// equation data eta(t) and sigma(t).
#[derive(Debug, Clone)]
pub struct CoeffSet {
    pub a: Expr,
    pub b: Expr,
    pub c: Expr,
    pub d: Expr,
    pub f: Expr,
    pub g: Expr,
    a_prime: Expr,
    d_prime: Expr,
}

impl CoeffSet {
    /// Build a coefficient set and check `a(t) != 0` by sampling the declared
    /// working interval at grid resolution.
    pub fn new(
        a: Expr,
        b: Expr,
        c: Expr,
        d: Expr,
        f: Expr,
        g: Expr,
        interval: (f64, f64),
        samples: usize,
    ) -> Result<CoeffSet> {
        let (lo, hi) = interval;
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Coefficients(format!(
                "invalid working interval [{lo}, {hi}]"
            )));
        }
        let n = samples.max(2);
        for i in 0..n {
            let t = lo + (hi - lo) * i as f64 / (n - 1) as f64;
            let v = a.eval(t)?;
            if v == 0.0 {
                return Err(Error::Coefficients(format!("a({t}) = 0 on working interval")));
            }
        }
        let a_prime = a.diff();
        let d_prime = d.diff();
        Ok(CoeffSet {
            a,
            b,
            c,
            d,
            f,
            g,
            a_prime,
            d_prime,
        })
    }

    /// Constant-coefficient convenience constructor (used heavily in tests).
    pub fn constants(a: f64, b: f64, c: f64, d: f64, f: f64, g: f64) -> Result<CoeffSet> {
        CoeffSet::new(
            Expr::constant(a),
            Expr::constant(b),
            Expr::constant(c),
            Expr::constant(d),
            Expr::constant(f),
            Expr::constant(g),
            (0.0, 1.0),
            2,
        )
    }

    pub fn a_prime(&self) -> &Expr {
        &self.a_prime
    }

    pub fn d_prime(&self) -> &Expr {
        &self.d_prime
    }

    /// eta(t) = a'/a + 2c - 4d.
    pub fn eta(&self, t: f64) -> Result<f64> {
        let a = self.a.eval(t)?;
        Ok(self.a_prime.eval(t)? / a + 2.0 * self.c.eval(t)? - 4.0 * self.d.eval(t)?)
    }

    /// sigma(t) = ab + cd - d^2 + (d/2)(a'/a - d'/d).
    ///
    /// Implemented in the cancelled form ab + cd - d^2 + d*a'/(2a) - d'/2 so
    /// the removable d -> 0 case stays defined.
    pub fn sigma(&self, t: f64) -> Result<f64> {
        let a = self.a.eval(t)?;
        let b = self.b.eval(t)?;
        let c = self.c.eval(t)?;
        let d = self.d.eval(t)?;
        let ap = self.a_prime.eval(t)?;
        let dp = self.d_prime.eval(t)?;
        Ok(a * b + c * d - d * d + d * ap / (2.0 * a) - dp / 2.0)
    }

    pub fn has_source_terms(&self) -> bool {
        !(self.f.is_zero_literal() && self.g.is_zero_literal())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, FRAC_PI_2};

    fn ev(text: &str, t: f64) -> f64 {
        parse(text).unwrap().eval(t).unwrap()
    }

    #[test]
    fn parse_zero_constant() {
        assert_eq!(ev("0", 5.0), 0.0);
    }

    #[test]
    fn parse_exp_decay() {
        assert_eq!(ev("exp(-2*t)", 0.0), 1.0);
    }

    #[test]
    fn parse_two_minus_sin() {
        // coefficient c(t) of the periodic-diffusivity linear-RD scenario
        assert!((ev("2 - sin(t)", FRAC_PI_2) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn eval_sech_tanh_at_zero() {
        assert_eq!(ev("sech(t)", 0.0), 1.0);
        assert_eq!(ev("tanh(t)", 0.0), 0.0);
    }

    #[test]
    fn eval_nested_exp_cos() {
        let got = ev("exp(-2*cos(t))", 0.0);
        assert!((got - E.powi(-2)).abs() < 1e-15);
        assert!((got - 0.1353352832).abs() < 1e-9);
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("2 + 3*4", 0.0), 14.0);
        assert_eq!(ev("2*3 ^ 2", 0.0), 18.0);
        assert_eq!(ev("-3^2", 0.0), -9.0);
        assert_eq!(ev("2 - 3 - 4", 0.0), -5.0);
        assert_eq!(ev("2^3^2", 0.0), 64.0); // pow is left-associative here
        assert_eq!(ev("(2 + 3)*4", 0.0), 20.0);
        assert_eq!(ev("12/3/2", 0.0), 2.0);
    }

    #[test]
    fn parse_errors_carry_offsets() {
        match parse("2 + $") {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(matches!(parse("foo(t)"), Err(Error::Parse { .. })));
        assert!(matches!(parse("sin(t, t)"), Err(Error::Parse { .. })));
        assert!(matches!(parse("sin"), Err(Error::Parse { .. })));
        assert!(matches!(parse(""), Err(Error::Parse { .. })));
        assert!(matches!(parse("(1 + 2"), Err(Error::Parse { .. })));
    }

    #[test]
    fn eval_domain_errors() {
        assert!(matches!(
            parse("ln(t)").unwrap().eval(-1.0),
            Err(Error::Domain { .. })
        ));
        assert!(matches!(
            parse("1/t").unwrap().eval(0.0),
            Err(Error::Domain { .. })
        ));
        assert!(matches!(
            parse("sqrt(t)").unwrap().eval(-4.0),
            Err(Error::Domain { .. })
        ));
        assert!(matches!(
            parse("t^0.5").unwrap().eval(-4.0),
            Err(Error::Domain { .. })
        ));
        assert!(matches!(
            parse("exp(t)").unwrap().eval(1e10),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn diff_constant_is_zero() {
        let d = Expr::constant(7.5).diff();
        assert_eq!(d.eval(3.0).unwrap(), 0.0);
    }

    #[test]
    fn diff_sin_at_zero() {
        let d = parse("sin(t)").unwrap().diff();
        assert_eq!(d.eval(0.0).unwrap(), 1.0);
    }

    #[test]
    fn diff_exp_decay_matches_central_difference() {
        let e = parse("exp(-2*t)").unwrap();
        let d = e.diff();
        let got = d.eval(0.0).unwrap();
        assert!((got - (-2.0)).abs() < 1e-12);
        let h = 1e-6;
        let fd = (e.eval(h).unwrap() - e.eval(-h).unwrap()) / (2.0 * h);
        assert!((got - fd).abs() < 1e-8);
    }

    #[test]
    fn diff_sech_rule() {
        // sech' = -sech * tanh
        let d = parse("sech(t)").unwrap().diff();
        let t = 0.7_f64;
        let want = -(1.0 / t.cosh()) * t.tanh();
        assert!((d.eval(t).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn diff_abs_errors_at_zero() {
        let d = parse("abs(t)").unwrap().diff();
        assert_eq!(d.eval(2.0).unwrap(), 1.0);
        assert_eq!(d.eval(-2.0).unwrap(), -1.0);
        assert!(matches!(d.eval(0.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn diff_variable_exponent() {
        // d/dt t^t = t^t (ln t + 1)
        let d = parse("t^t").unwrap().diff();
        let t = 1.5_f64;
        let want = t.powf(t) * (t.ln() + 1.0);
        assert!((d.eval(t).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn render_round_trip_simple() {
        for text in [
            "2 - sin(t)",
            "exp(-2*cos(t))",
            "-(t + 1)*(t - 2)^3",
            "3*sin(6*t)*exp(sin(3*t)^2)",
            "1/(1 + t^2)",
            "t^2^3",
        ] {
            let e = parse(text).unwrap();
            let back = parse(&e.render()).unwrap();
            for i in 0..20 {
                let t = -2.0 + 0.21 * i as f64;
                match (e.eval(t), back.eval(t)) {
                    (Ok(x), Ok(y)) => assert_eq!(x, y, "mismatch for {text} at t={t}"),
                    (Err(_), Err(_)) => {}
                    other => panic!("render round-trip diverged for {text}: {other:?}"),
                }
            }
        }
    }

    #[test]
    fn coeffset_rejects_vanishing_a() {
        let a = parse("sin(t)").unwrap();
        let z = Expr::zero;
        let err = CoeffSet::new(a, z(), z(), z(), z(), z(), (0.0, 1.0), 64);
        assert!(matches!(err, Err(Error::Coefficients(_))));
        // away from the zero it is fine
        let a = parse("sin(t)").unwrap();
        assert!(CoeffSet::new(a, z(), z(), z(), z(), z(), (0.5, 1.0), 64).is_ok());
    }

    #[test]
    fn sigma_handles_identically_zero_d() {
        let cs = CoeffSet::constants(1.0, 0.0, -1.0, -1.0, 0.0, 0.0).unwrap();
        assert!((cs.eta(0.3).unwrap() - 2.0).abs() < 1e-15);
        assert!(cs.sigma(0.3).unwrap().abs() < 1e-15);
        let cs = CoeffSet::constants(1.0, 0.0, 0.0, 0.0, 0.0, 0.0).unwrap();
        assert_eq!(cs.sigma(1.0).unwrap(), 0.0);
    }
}
