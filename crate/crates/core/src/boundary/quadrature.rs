//! One-dimensional rules and their tensor products over chart boxes.

use std::f64::consts::PI;

/// Nodes and weights of a rule on an interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule1D {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// `q`-point Gauss–Legendre rule on `[-1, 1]`, exact for polynomials of degree `2q − 1`.
pub fn gauss_legendre(q: usize) -> Rule1D {
    assert!(q >= 1, "quadrature order must be positive");
    let mut nodes = vec![0.0; q];
    let mut weights = vec![0.0; q];
    let qf = q as f64;
    for i in 0..q.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (qf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_q(x) and its derivative
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=q {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pq = if q == 1 { x } else { p1 };
            let pm = if q == 1 { 1.0 } else { p0 };
            dp = qf * (x * pq - pm) / (x * x - 1.0);
            let dx = pq / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[q - 1 - i] = x;
        weights[i] = w;
        weights[q - 1 - i] = w;
    }
    Rule1D { nodes, weights }
}

/// A rule on `[lo, hi]`: Gauss–Legendre, or the trapezoid rule with `q`
/// equispaced nodes when the coordinate is periodic.
pub fn rule(lo: f64, hi: f64, periodic: bool, q: usize) -> Rule1D {
    let w = hi - lo;
    if periodic {
        let h = w / q as f64;
        Rule1D { nodes: (0..q).map(|i| lo + h * i as f64).collect(), weights: vec![h; q] }
    } else {
        let gl = gauss_legendre(q);
        Rule1D {
            nodes: gl.nodes.iter().map(|x| lo + 0.5 * w * (x + 1.0)).collect(),
            weights: gl.weights.iter().map(|v| 0.5 * w * v).collect(),
        }
    }
}

/// Tensor-product nodes (row-major, first coordinate slowest) and weights.
pub fn tensor_rule(rules: &[Rule1D]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut nodes = vec![Vec::new()];
    let mut weights = vec![1.0];
    for r in rules {
        let mut nn = Vec::with_capacity(nodes.len() * r.nodes.len());
        let mut ww = Vec::with_capacity(nn.capacity());
        for (p, w) in nodes.iter().zip(&weights) {
            for (x, v) in r.nodes.iter().zip(&r.weights) {
                let mut q = p.clone();
                q.push(*x);
                nn.push(q);
                ww.push(w * v);
            }
        }
        nodes = nn;
        weights = ww;
    }
    (nodes, weights)
}

/// Pairwise (cascade) summation in the given order.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}
