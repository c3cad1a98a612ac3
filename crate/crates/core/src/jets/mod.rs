//! Truncated multivariate Taylor arithmetic.
//!
//! A [`Jet3`] holds the Taylor coefficients `f^(α)(p) / α!` of a scalar
//! function at a point for every multi-index `|α| ≤ 3`, in graded
//! lexicographic order: all degree-0 terms, then degree 1, 2, 3, and inside
//! one degree the exponent tuples sorted lexicographically descending
//! (`x² , xy, y²` in two variables). This layout is frozen.
//!
//! Every jet also tracks the highest degree whose coefficients are still
//! exact. Jets built from chart functions are exact through degree 3; each
//! [`Jet3::partial`] drops one degree. Coefficients above the valid degree
//! are kept at zero.

mod chart_fn;

pub use chart_fn::{ChartFn, EvalError};

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::OnceLock;

use thiserror::Error;

/// Truncation order of every jet.
pub const ORDER: usize = 3;
/// Largest supported chart dimension.
pub const MAX_DIM: usize = 3;
/// Coefficient count for `MAX_DIM` variables, `C(MAX_DIM + 3, 3)`.
pub const MAX_COEFFS: usize = 20;

/// Smallest magnitude accepted as a divisor or a `sqrt`/`ln` argument.
pub const SINGULAR_EPS: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{primitive} is singular at argument {argument:e}")]
pub struct DomainError {
    pub primitive: &'static str,
    pub argument: f64,
}

/// Number of coefficients of a jet in `dim` variables.
pub fn coeff_count(dim: usize) -> usize {
    // C(dim + 3, 3)
    (dim + 1) * (dim + 2) * (dim + 3) / 6
}

struct Layout {
    exps: Vec<[u8; MAX_DIM]>,
    degree: Vec<u8>,
    /// `(i, j, k)`: coefficient `i` times coefficient `j` lands in `k`.
    products: Vec<(u8, u8, u8)>,
    /// For every variable, `(source, factor)` pairs: `∂_v c[target] = factor * c[source]`.
    partials: Vec<Vec<(u8, u8, f64)>>,
    factorial: Vec<f64>,
}

fn encode(e: &[u8; MAX_DIM]) -> usize {
    (e[0] as usize) * 16 + (e[1] as usize) * 4 + e[2] as usize
}

impl Layout {
    fn build(dim: usize) -> Layout {
        let mut exps = Vec::new();
        for deg in 0..=ORDER as u8 {
            let mut level = Vec::new();
            let mut e = [0u8; MAX_DIM];
            collect_exponents(dim, 0, deg, &mut e, &mut level);
            level.sort_by(|a, b| b.cmp(a));
            exps.extend(level);
        }
        debug_assert_eq!(exps.len(), coeff_count(dim));
        let mut lookup = [u8::MAX; 64];
        for (i, e) in exps.iter().enumerate() {
            lookup[encode(e)] = i as u8;
        }
        let degree: Vec<u8> = exps.iter().map(|e| e.iter().sum()).collect();
        let mut products = Vec::new();
        for (i, a) in exps.iter().enumerate() {
            for (j, b) in exps.iter().enumerate() {
                if degree[i] + degree[j] > ORDER as u8 {
                    continue;
                }
                let mut s = [0u8; MAX_DIM];
                for v in 0..MAX_DIM {
                    s[v] = a[v] + b[v];
                }
                products.push((i as u8, j as u8, lookup[encode(&s)]));
            }
        }
        let mut partials = Vec::with_capacity(dim);
        for v in 0..dim {
            let mut list = Vec::new();
            for (target, e) in exps.iter().enumerate() {
                if degree[target] as usize >= ORDER {
                    continue;
                }
                let mut up = *e;
                up[v] += 1;
                list.push((lookup[encode(&up)], target as u8, up[v] as f64));
            }
            partials.push(list);
        }
        let factorial = exps
            .iter()
            .map(|e| e.iter().map(|&k| (1..=k as u32).product::<u32>() as f64).product())
            .collect();
        Layout { exps, degree, products, partials, factorial }
    }
}

fn collect_exponents(dim: usize, var: usize, left: u8, e: &mut [u8; MAX_DIM], out: &mut Vec<[u8; MAX_DIM]>) {
    if var + 1 == dim {
        e[var] = left;
        out.push(*e);
        e[var] = 0;
        return;
    }
    for k in 0..=left {
        e[var] = k;
        collect_exponents(dim, var + 1, left - k, e, out);
    }
    e[var] = 0;
}

fn layout(dim: usize) -> &'static Layout {
    static LAYOUTS: [OnceLock<Layout>; MAX_DIM] = [OnceLock::new(), OnceLock::new(), OnceLock::new()];
    assert!((1..=MAX_DIM).contains(&dim), "jet dimension {dim} outside 1..={MAX_DIM}");
    LAYOUTS[dim - 1].get_or_init(|| Layout::build(dim))
}

/// Exponent tuples of the frozen coefficient layout for `dim` variables.
pub fn multi_indices(dim: usize) -> Vec<Vec<u8>> {
    layout(dim).exps.iter().map(|e| e[..dim].to_vec()).collect()
}

/// Order-3 truncated Taylor expansion of a scalar function at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet3 {
    dim: u8,
    valid: u8,
    c: [f64; MAX_COEFFS],
}

impl Jet3 {
    pub fn constant(dim: usize, value: f64) -> Jet3 {
        layout(dim);
        let mut c = [0.0; MAX_COEFFS];
        c[0] = value;
        Jet3 { dim: dim as u8, valid: ORDER as u8, c }
    }

    pub fn zero(dim: usize) -> Jet3 {
        Jet3::constant(dim, 0.0)
    }

    /// The coordinate function `x_var` expanded at a point whose `var`-th coordinate is `value`.
    pub fn variable(dim: usize, var: usize, value: f64) -> Jet3 {
        assert!(var < dim, "variable {var} out of range for dimension {dim}");
        let mut j = Jet3::constant(dim, value);
        j.c[1 + var] = 1.0;
        j
    }

    /// Builds a jet from raw coefficients in the frozen layout.
    pub fn from_coeffs(dim: usize, coeffs: &[f64]) -> Jet3 {
        assert_eq!(coeffs.len(), coeff_count(dim), "coefficient count mismatch");
        let mut j = Jet3::zero(dim);
        j.c[..coeffs.len()].copy_from_slice(coeffs);
        j
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    /// Highest degree whose coefficients are exact.
    pub fn valid_order(&self) -> usize {
        self.valid as usize
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c[..coeff_count(self.dim())]
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// Partial derivative `∂^α f(p)` for the exponent tuple `alpha`.
    pub fn derivative(&self, alpha: &[u8]) -> f64 {
        let lay = layout(self.dim());
        assert_eq!(alpha.len(), self.dim());
        let deg: u8 = alpha.iter().sum();
        assert!(deg <= self.valid, "derivative of order {deg} exceeds valid order {}", self.valid);
        let mut e = [0u8; MAX_DIM];
        e[..alpha.len()].copy_from_slice(alpha);
        let idx = lay.exps.iter().position(|x| *x == e).expect("multi-index in layout");
        lay.factorial[idx] * self.c[idx]
    }

    /// First partial `∂_var f(p)`.
    pub fn d1(&self, var: usize) -> f64 {
        assert!(self.valid >= 1);
        self.c[1 + var]
    }

    /// Second partial `∂_a ∂_b f(p)`.
    pub fn d2(&self, a: usize, b: usize) -> f64 {
        let mut alpha = vec![0u8; self.dim()];
        alpha[a] += 1;
        alpha[b] += 1;
        self.derivative(&alpha)
    }

    /// The jet of `∂_var f`, exact through one degree less.
    pub fn partial(&self, var: usize) -> Jet3 {
        assert!(self.valid >= 1, "partial of a jet with no valid derivatives");
        let lay = layout(self.dim());
        let mut out = Jet3 { dim: self.dim, valid: self.valid - 1, c: [0.0; MAX_COEFFS] };
        for &(src, target, f) in &lay.partials[var] {
            out.c[target as usize] = f * self.c[src as usize];
        }
        out.truncate();
        out
    }

    fn truncate(&mut self) {
        let lay = layout(self.dim());
        for (k, d) in lay.degree.iter().enumerate() {
            if *d > self.valid {
                self.c[k] = 0.0;
            }
        }
    }

    fn check_dim(&self, other: &Jet3) {
        assert_eq!(self.dim, other.dim, "jet dimension mismatch");
    }

    /// `f(self)` for a univariate `f` given by its value and first three
    /// derivatives at `self.value()`.
    pub fn compose(&self, derivs: [f64; 4]) -> Jet3 {
        let mut h = *self;
        h.c[0] = 0.0;
        let h2 = h * h;
        let h3 = h2 * h;
        let mut out = Jet3::constant(self.dim(), derivs[0]);
        out.valid = self.valid;
        for k in 1..coeff_count(self.dim()) {
            out.c[k] = derivs[1] * h.c[k] + 0.5 * derivs[2] * h2.c[k] + derivs[3] / 6.0 * h3.c[k];
        }
        out.truncate();
        out
    }

    pub fn scale(&self, s: f64) -> Jet3 {
        let mut out = *self;
        for v in out.c.iter_mut() {
            *v *= s;
        }
        out
    }

    pub fn recip(&self) -> Result<Jet3, DomainError> {
        let x = self.value();
        if x.abs() < SINGULAR_EPS {
            return Err(DomainError { primitive: "div", argument: x });
        }
        let r = 1.0 / x;
        Ok(self.compose([r, -r * r, 2.0 * r * r * r, -6.0 * r * r * r * r]))
    }

    pub fn checked_div(&self, other: &Jet3) -> Result<Jet3, DomainError> {
        self.check_dim(other);
        Ok(*self * other.recip()?)
    }

    pub fn sin(&self) -> Jet3 {
        let (s, c) = self.value().sin_cos();
        self.compose([s, c, -s, -c])
    }

    pub fn cos(&self) -> Jet3 {
        let (s, c) = self.value().sin_cos();
        self.compose([c, -s, -c, s])
    }

    pub fn exp(&self) -> Jet3 {
        let e = self.value().exp();
        self.compose([e; 4])
    }

    pub fn sqrt(&self) -> Result<Jet3, DomainError> {
        let x = self.value();
        if x < SINGULAR_EPS {
            return Err(DomainError { primitive: "sqrt", argument: x });
        }
        let s = x.sqrt();
        Ok(self.compose([s, 0.5 / s, -0.25 / (s * x), 0.375 / (s * x * x)]))
    }

    pub fn ln(&self) -> Result<Jet3, DomainError> {
        let x = self.value();
        if x < SINGULAR_EPS {
            return Err(DomainError { primitive: "ln", argument: x });
        }
        Ok(self.compose([x.ln(), 1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x)]))
    }

    pub fn powi(&self, n: i32) -> Result<Jet3, DomainError> {
        if n == 0 {
            let mut one = Jet3::constant(self.dim(), 1.0);
            one.valid = self.valid;
            return Ok(one);
        }
        if n > 0 {
            let mut acc = *self;
            for _ in 1..n {
                acc = acc * *self;
            }
            return Ok(acc);
        }
        let x = self.value();
        if x.abs() < SINGULAR_EPS {
            return Err(DomainError { primitive: "powi", argument: x });
        }
        let nf = n as f64;
        Ok(self.compose([
            x.powi(n),
            nf * x.powi(n - 1),
            nf * (nf - 1.0) * x.powi(n - 2),
            nf * (nf - 1.0) * (nf - 2.0) * x.powi(n - 3),
        ]))
    }

    /// Largest coefficient magnitude, used for relative comparisons.
    pub fn max_abs(&self) -> f64 {
        self.coeffs().iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

impl Add for Jet3 {
    type Output = Jet3;
    fn add(mut self, rhs: Jet3) -> Jet3 {
        self.check_dim(&rhs);
        for k in 0..MAX_COEFFS {
            self.c[k] += rhs.c[k];
        }
        if rhs.valid != self.valid {
            self.valid = self.valid.min(rhs.valid);
            self.truncate();
        }
        self
    }
}

impl Sub for Jet3 {
    type Output = Jet3;
    fn sub(self, rhs: Jet3) -> Jet3 {
        self + (-rhs)
    }
}

impl Neg for Jet3 {
    type Output = Jet3;
    fn neg(self) -> Jet3 {
        self.scale(-1.0)
    }
}

impl Mul for Jet3 {
    type Output = Jet3;
    fn mul(self, rhs: Jet3) -> Jet3 {
        self.check_dim(&rhs);
        let lay = layout(self.dim());
        let valid = self.valid.min(rhs.valid);
        let mut out = Jet3 { dim: self.dim, valid, c: [0.0; MAX_COEFFS] };
        for &(i, j, k) in &lay.products {
            if lay.degree[k as usize] <= valid {
                out.c[k as usize] += self.c[i as usize] * rhs.c[j as usize];
            }
        }
        out
    }
}

impl Mul<f64> for Jet3 {
    type Output = Jet3;
    fn mul(self, rhs: f64) -> Jet3 {
        self.scale(rhs)
    }
}

impl Mul<Jet3> for f64 {
    type Output = Jet3;
    fn mul(self, rhs: Jet3) -> Jet3 {
        rhs.scale(self)
    }
}

impl Add<f64> for Jet3 {
    type Output = Jet3;
    fn add(mut self, rhs: f64) -> Jet3 {
        self.c[0] += rhs;
        self
    }
}

impl AddAssign for Jet3 {
    fn add_assign(&mut self, rhs: Jet3) {
        *self = *self + rhs;
    }
}

impl SubAssign for Jet3 {
    fn sub_assign(&mut self, rhs: Jet3) {
        *self = *self - rhs;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(dim: usize, v: usize, at: f64) -> Jet3 {
        Jet3::variable(dim, v, at)
    }

    #[test]
    fn layout_is_graded_lex() {
        let idx = multi_indices(2);
        let expect: Vec<Vec<u8>> = vec![
            vec![0, 0],
            vec![1, 0],
            vec![0, 1],
            vec![2, 0],
            vec![1, 1],
            vec![0, 2],
            vec![3, 0],
            vec![2, 1],
            vec![1, 2],
            vec![0, 3],
        ];
        assert_eq!(idx, expect);
        assert_eq!(multi_indices(3).len(), 20);
        assert_eq!(coeff_count(1), 4);
    }

    #[test]
    fn square_of_one_plus_x() {
        let a = Jet3::constant(2, 1.0) + x(2, 0, 0.0);
        let p = a * a;
        assert_eq!(p.coeffs(), &[1.0, 2.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn xyz_coefficient() {
        let p = x(3, 0, 0.0) * x(3, 1, 0.0) * x(3, 2, 0.0);
        assert_eq!(p.derivative(&[1, 1, 1]), 1.0);
        let total: f64 = p.coeffs().iter().sum();
        assert_eq!(total, 1.0);
    }

    #[test]
    fn identity_element() {
        let a = Jet3::from_coeffs(2, &[0.3, -1.0, 2.0, 0.5, 0.25, -4.0, 1.0, 2.0, 3.0, 4.0]);
        assert_eq!(a * Jet3::constant(2, 1.0), a);
    }

    #[test]
    fn sine_at_half_pi() {
        let s = x(1, 0, std::f64::consts::FRAC_PI_2).sin();
        assert!((s.value() - 1.0).abs() < 1e-15);
        assert!(s.derivative(&[1]).abs() < 1e-15);
        assert!((s.derivative(&[2]) + 1.0).abs() < 1e-15);
        assert!(s.derivative(&[3]).abs() < 1e-15);
    }

    #[test]
    fn x2y_partials() {
        let f = x(2, 0, 1.0) * x(2, 0, 1.0) * x(2, 1, 2.0);
        assert_eq!(f.value(), 2.0);
        assert_eq!(f.derivative(&[1, 0]), 4.0);
        assert_eq!(f.derivative(&[1, 1]), 2.0);
        assert_eq!(f.derivative(&[2, 1]), 2.0);
        assert_eq!(f.derivative(&[3, 0]), 0.0);
    }

    #[test]
    fn partial_drops_an_order() {
        let f = x(2, 0, 1.0).powi(3).unwrap() * x(2, 1, 2.0);
        let fx = f.partial(0);
        assert_eq!(fx.valid_order(), 2);
        // ∂x(x³y) = 3x²y; at (1,2): 6, ∂x → 12, ∂y → 3, ∂xx → 12
        assert!((fx.value() - 6.0).abs() < 1e-14);
        assert!((fx.d1(0) - 12.0).abs() < 1e-14);
        assert!((fx.d1(1) - 3.0).abs() < 1e-14);
        assert!((fx.d2(0, 0) - 12.0).abs() < 1e-14);
        let fxx = fx.partial(0);
        let fxxx = fxx.partial(0);
        assert_eq!(fxxx.valid_order(), 0);
        assert!((fxxx.value() - 12.0).abs() < 1e-14);
    }

    #[test]
    fn singular_division_is_an_error() {
        let z = x(2, 0, 1e-15);
        assert!(z.recip().is_err());
        assert!(Jet3::constant(2, -1.0).sqrt().is_err());
        assert!(Jet3::constant(2, 2.0).sqrt().is_ok());
    }

    #[test]
    fn mixed_validity_truncates() {
        let f = x(2, 0, 0.5).exp();
        let g = f.partial(1) + f;
        assert_eq!(g.valid_order(), 2);
        assert!(g.coeffs()[6..].iter().all(|c| *c == 0.0));
    }

    #[test]
    #[should_panic(expected = "dimension mismatch")]
    fn dimension_mismatch_panics() {
        let _ = Jet3::constant(2, 1.0) * Jet3::constant(3, 1.0);
    }
}
