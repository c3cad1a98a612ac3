use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use thiserror::Error;

use super::{DomainError, Jet3};

/// Evaluation of a chart function hit a singular primitive.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{primitive} is singular at chart point {point:?} (argument {argument:e})")]
pub struct EvalError {
    pub primitive: &'static str,
    pub point: Vec<f64>,
    pub argument: f64,
}

#[derive(Debug)]
enum Node {
    Const(f64),
    Coord(usize),
    Add(ChartFn, ChartFn),
    Sub(ChartFn, ChartFn),
    Mul(ChartFn, ChartFn),
    Div(ChartFn, ChartFn),
    Neg(ChartFn),
    Sin(ChartFn),
    Cos(ChartFn),
    Exp(ChartFn),
    Sqrt(ChartFn),
    Ln(ChartFn),
    Powi(ChartFn, i32),
}

/// A scalar function of chart coordinates, built from the primitive
/// vocabulary `+ − × ÷ sin cos exp sqrt ln powi`, constants and coordinates.
///
/// Expressions are immutable and cheap to clone. They can be differentiated
/// symbolically ([`ChartFn::diff`]) and expanded as [`Jet3`]s.
#[derive(Clone)]
pub struct ChartFn(Arc<Node>);

impl fmt::Debug for ChartFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for ChartFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &*self.0 {
            Node::Const(c) => write!(f, "{c}"),
            Node::Coord(i) => write!(f, "x{i}"),
            Node::Add(a, b) => write!(f, "({a} + {b})"),
            Node::Sub(a, b) => write!(f, "({a} - {b})"),
            Node::Mul(a, b) => write!(f, "{a}*{b}"),
            Node::Div(a, b) => write!(f, "{a}/({b})"),
            Node::Neg(a) => write!(f, "-({a})"),
            Node::Sin(a) => write!(f, "sin({a})"),
            Node::Cos(a) => write!(f, "cos({a})"),
            Node::Exp(a) => write!(f, "exp({a})"),
            Node::Sqrt(a) => write!(f, "sqrt({a})"),
            Node::Ln(a) => write!(f, "ln({a})"),
            Node::Powi(a, n) => write!(f, "({a})^{n}"),
        }
    }
}

impl ChartFn {
    fn node(n: Node) -> ChartFn {
        ChartFn(Arc::new(n))
    }

    pub fn constant(c: f64) -> ChartFn {
        ChartFn::node(Node::Const(c))
    }

    pub fn coord(i: usize) -> ChartFn {
        ChartFn::node(Node::Coord(i))
    }

    pub fn as_constant(&self) -> Option<f64> {
        match &*self.0 {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_constant() == Some(0.0)
    }

    fn is_one(&self) -> bool {
        self.as_constant() == Some(1.0)
    }

    pub fn sin(&self) -> ChartFn {
        match self.as_constant() {
            Some(c) => ChartFn::constant(c.sin()),
            None => ChartFn::node(Node::Sin(self.clone())),
        }
    }

    pub fn cos(&self) -> ChartFn {
        match self.as_constant() {
            Some(c) => ChartFn::constant(c.cos()),
            None => ChartFn::node(Node::Cos(self.clone())),
        }
    }

    pub fn exp(&self) -> ChartFn {
        match self.as_constant() {
            Some(c) => ChartFn::constant(c.exp()),
            None => ChartFn::node(Node::Exp(self.clone())),
        }
    }

    pub fn sqrt(&self) -> ChartFn {
        ChartFn::node(Node::Sqrt(self.clone()))
    }

    pub fn ln(&self) -> ChartFn {
        ChartFn::node(Node::Ln(self.clone()))
    }

    pub fn powi(&self, n: i32) -> ChartFn {
        match (n, self.as_constant()) {
            (0, _) => ChartFn::constant(1.0),
            (1, _) => self.clone(),
            (_, Some(c)) if n > 0 => ChartFn::constant(c.powi(n)),
            _ => ChartFn::node(Node::Powi(self.clone(), n)),
        }
    }

    /// Symbolic partial derivative with respect to coordinate `var`.
    pub fn diff(&self, var: usize) -> ChartFn {
        match &*self.0 {
            Node::Const(_) => ChartFn::constant(0.0),
            Node::Coord(i) => ChartFn::constant(if *i == var { 1.0 } else { 0.0 }),
            Node::Add(a, b) => a.diff(var) + b.diff(var),
            Node::Sub(a, b) => a.diff(var) - b.diff(var),
            Node::Mul(a, b) => a.diff(var) * b.clone() + a.clone() * b.diff(var),
            Node::Div(a, b) => {
                let da = a.diff(var);
                let db = b.diff(var);
                if db.is_zero() {
                    da / b.clone()
                } else {
                    (da * b.clone() - a.clone() * db) / b.powi(2)
                }
            }
            Node::Neg(a) => -a.diff(var),
            Node::Sin(a) => a.cos() * a.diff(var),
            Node::Cos(a) => -(a.sin() * a.diff(var)),
            Node::Exp(a) => self.clone() * a.diff(var),
            Node::Sqrt(a) => a.diff(var) / (ChartFn::constant(2.0) * self.clone()),
            Node::Ln(a) => a.diff(var) / a.clone(),
            Node::Powi(a, n) => ChartFn::constant(*n as f64) * a.powi(n - 1) * a.diff(var),
        }
    }

    /// Plain floating-point evaluation.
    pub fn eval(&self, p: &[f64]) -> Result<f64, EvalError> {
        let wrap = |primitive: &'static str, argument: f64| EvalError { primitive, point: p.to_vec(), argument };
        Ok(match &*self.0 {
            Node::Const(c) => *c,
            Node::Coord(i) => p[*i],
            Node::Add(a, b) => a.eval(p)? + b.eval(p)?,
            Node::Sub(a, b) => a.eval(p)? - b.eval(p)?,
            Node::Mul(a, b) => a.eval(p)? * b.eval(p)?,
            Node::Div(a, b) => {
                let d = b.eval(p)?;
                if d.abs() < super::SINGULAR_EPS {
                    return Err(wrap("div", d));
                }
                a.eval(p)? / d
            }
            Node::Neg(a) => -a.eval(p)?,
            Node::Sin(a) => a.eval(p)?.sin(),
            Node::Cos(a) => a.eval(p)?.cos(),
            Node::Exp(a) => a.eval(p)?.exp(),
            Node::Sqrt(a) => {
                let v = a.eval(p)?;
                if v < 0.0 {
                    return Err(wrap("sqrt", v));
                }
                v.sqrt()
            }
            Node::Ln(a) => {
                let v = a.eval(p)?;
                if v <= 0.0 {
                    return Err(wrap("ln", v));
                }
                v.ln()
            }
            Node::Powi(a, n) => {
                let v = a.eval(p)?;
                if *n < 0 && v.abs() < super::SINGULAR_EPS {
                    return Err(wrap("powi", v));
                }
                v.powi(*n)
            }
        })
    }

    /// Order-3 Taylor expansion at chart point `p`.
    pub fn jet(&self, p: &[f64]) -> Result<Jet3, EvalError> {
        let dim = p.len();
        self.jet_inner(p, dim).map_err(|e| EvalError { primitive: e.primitive, point: p.to_vec(), argument: e.argument })
    }

    fn jet_inner(&self, p: &[f64], dim: usize) -> Result<Jet3, DomainError> {
        Ok(match &*self.0 {
            Node::Const(c) => Jet3::constant(dim, *c),
            Node::Coord(i) => Jet3::variable(dim, *i, p[*i]),
            Node::Add(a, b) => a.jet_inner(p, dim)? + b.jet_inner(p, dim)?,
            Node::Sub(a, b) => a.jet_inner(p, dim)? - b.jet_inner(p, dim)?,
            Node::Mul(a, b) => a.jet_inner(p, dim)? * b.jet_inner(p, dim)?,
            Node::Div(a, b) => a.jet_inner(p, dim)?.checked_div(&b.jet_inner(p, dim)?)?,
            Node::Neg(a) => -a.jet_inner(p, dim)?,
            Node::Sin(a) => a.jet_inner(p, dim)?.sin(),
            Node::Cos(a) => a.jet_inner(p, dim)?.cos(),
            Node::Exp(a) => a.jet_inner(p, dim)?.exp(),
            Node::Sqrt(a) => a.jet_inner(p, dim)?.sqrt()?,
            Node::Ln(a) => a.jet_inner(p, dim)?.ln()?,
            Node::Powi(a, n) => a.jet_inner(p, dim)?.powi(*n)?,
        })
    }

    /// Substitutes `args[i]` for coordinate `i`.
    pub fn compose(&self, args: &[ChartFn]) -> ChartFn {
        match &*self.0 {
            Node::Const(_) => self.clone(),
            Node::Coord(i) => args[*i].clone(),
            Node::Add(a, b) => a.compose(args) + b.compose(args),
            Node::Sub(a, b) => a.compose(args) - b.compose(args),
            Node::Mul(a, b) => a.compose(args) * b.compose(args),
            Node::Div(a, b) => a.compose(args) / b.compose(args),
            Node::Neg(a) => -a.compose(args),
            Node::Sin(a) => a.compose(args).sin(),
            Node::Cos(a) => a.compose(args).cos(),
            Node::Exp(a) => a.compose(args).exp(),
            Node::Sqrt(a) => a.compose(args).sqrt(),
            Node::Ln(a) => a.compose(args).ln(),
            Node::Powi(a, n) => a.compose(args).powi(*n),
        }
    }
}

impl From<f64> for ChartFn {
    fn from(c: f64) -> ChartFn {
        ChartFn::constant(c)
    }
}

impl Add for ChartFn {
    type Output = ChartFn;
    fn add(self, rhs: ChartFn) -> ChartFn {
        match (self.as_constant(), rhs.as_constant()) {
            (Some(a), Some(b)) => ChartFn::constant(a + b),
            (Some(0.0), _) => rhs,
            (_, Some(0.0)) => self,
            _ => ChartFn::node(Node::Add(self, rhs)),
        }
    }
}

impl Sub for ChartFn {
    type Output = ChartFn;
    fn sub(self, rhs: ChartFn) -> ChartFn {
        match (self.as_constant(), rhs.as_constant()) {
            (Some(a), Some(b)) => ChartFn::constant(a - b),
            (Some(0.0), _) => -rhs,
            (_, Some(0.0)) => self,
            _ => ChartFn::node(Node::Sub(self, rhs)),
        }
    }
}

impl Mul for ChartFn {
    type Output = ChartFn;
    fn mul(self, rhs: ChartFn) -> ChartFn {
        if self.is_zero() || rhs.is_zero() {
            return ChartFn::constant(0.0);
        }
        if self.is_one() {
            return rhs;
        }
        if rhs.is_one() {
            return self;
        }
        match (self.as_constant(), rhs.as_constant()) {
            (Some(a), Some(b)) => ChartFn::constant(a * b),
            _ => ChartFn::node(Node::Mul(self, rhs)),
        }
    }
}

impl Div for ChartFn {
    type Output = ChartFn;
    fn div(self, rhs: ChartFn) -> ChartFn {
        if self.is_zero() {
            return ChartFn::constant(0.0);
        }
        if rhs.is_one() {
            return self;
        }
        match (self.as_constant(), rhs.as_constant()) {
            (Some(a), Some(b)) if b != 0.0 => ChartFn::constant(a / b),
            _ => ChartFn::node(Node::Div(self, rhs)),
        }
    }
}

impl Neg for ChartFn {
    type Output = ChartFn;
    fn neg(self) -> ChartFn {
        match &*self.0 {
            Node::Const(c) => ChartFn::constant(-c),
            Node::Neg(a) => a.clone(),
            _ => ChartFn::node(Node::Neg(self)),
        }
    }
}

macro_rules! scalar_ops {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr<f64> for ChartFn {
            type Output = ChartFn;
            fn $m(self, rhs: f64) -> ChartFn { $tr::$m(self, ChartFn::constant(rhs)) }
        }
        impl $tr<ChartFn> for f64 {
            type Output = ChartFn;
            fn $m(self, rhs: ChartFn) -> ChartFn { $tr::$m(ChartFn::constant(self), rhs) }
        }
        impl $tr<&ChartFn> for &ChartFn {
            type Output = ChartFn;
            fn $m(self, rhs: &ChartFn) -> ChartFn { $tr::$m(self.clone(), rhs.clone()) }
        }
    )*};
}

scalar_ops!(Add add, Sub sub, Mul mul, Div div);

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> ChartFn {
        ChartFn::coord(0)
    }
    fn y() -> ChartFn {
        ChartFn::coord(1)
    }

    /// Central differences of increasing stencil width combined by Richardson
    /// extrapolation: 6th-order accurate first and second derivatives.
    fn fd6_first(f: &dyn Fn(f64) -> f64, x0: f64, h: f64) -> f64 {
        (45.0 * (f(x0 + h) - f(x0 - h)) - 9.0 * (f(x0 + 2.0 * h) - f(x0 - 2.0 * h)) + (f(x0 + 3.0 * h) - f(x0 - 3.0 * h)))
            / (60.0 * h)
    }

    fn fd6_second(f: &dyn Fn(f64) -> f64, x0: f64, h: f64) -> f64 {
        (2.0 * (f(x0 + 3.0 * h) + f(x0 - 3.0 * h)) - 27.0 * (f(x0 + 2.0 * h) + f(x0 - 2.0 * h))
            + 270.0 * (f(x0 + h) + f(x0 - h))
            - 490.0 * f(x0))
            / (180.0 * h * h)
    }

    #[test]
    fn rational_function_matches_finite_differences() {
        let f = 1.0 / (1.0 + x().powi(2));
        let j = f.jet(&[0.5]).unwrap();
        let plain = |t: f64| 1.0 / (1.0 + t * t);
        let d1 = fd6_first(&plain, 0.5, 1e-2);
        let d2 = fd6_second(&plain, 0.5, 1e-2);
        // third derivative from differences of the analytic-free second-difference oracle
        let d3 = fd6_first(&|t| fd6_second(&plain, t, 1e-2), 0.5, 1e-2);
        assert!((j.value() - 0.8).abs() < 1e-15);
        assert!(((j.derivative(&[1]) - d1) / d1).abs() < 1e-8);
        assert!(((j.derivative(&[2]) - d2) / d2).abs() < 1e-8);
        assert!(((j.derivative(&[3]) - d3) / d3).abs() < 1e-6);
    }

    #[test]
    fn symbolic_diff_agrees_with_jet() {
        let f = (x() * y()).sin() * (x() - 2.0 * y()).exp() / (2.0 + y().cos());
        let p = [0.3, -0.7];
        let j = f.jet(&p).unwrap();
        let fx = f.diff(0).eval(&p).unwrap();
        let fxy = f.diff(0).diff(1).eval(&p).unwrap();
        let fyyx = f.diff(1).diff(1).diff(0).eval(&p).unwrap();
        assert!((j.derivative(&[1, 0]) - fx).abs() < 1e-13);
        assert!((j.derivative(&[1, 1]) - fxy).abs() < 1e-12);
        assert!((j.derivative(&[1, 2]) - fyyx).abs() < 1e-11);
    }

    #[test]
    fn singular_points_report_primitive_and_point() {
        let f = 1.0 / x();
        let err = f.jet(&[0.0, 1.0]).unwrap_err();
        assert_eq!(err.primitive, "div");
        assert_eq!(err.point, vec![0.0, 1.0]);
        let g = (x() - 1.0).sqrt();
        assert_eq!(g.jet(&[0.5]).unwrap_err().primitive, "sqrt");
    }

    #[test]
    fn compose_substitutes_coordinates() {
        let f = x() * x() + y();
        let polar = [ChartFn::coord(0) * ChartFn::coord(1).cos(), ChartFn::coord(0) * ChartFn::coord(1).sin()];
        let g = f.compose(&polar);
        let (r, t) = (1.5f64, 0.4f64);
        let expect = (r * t.cos()).powi(2) + r * t.sin();
        assert!((g.eval(&[r, t]).unwrap() - expect).abs() < 1e-14);
    }
}
