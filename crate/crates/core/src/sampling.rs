//! Seeded low-discrepancy sample points over chart boxes.
//!
//! Points are a Halton sequence (bases 2, 3, 5) shifted by a Cranley–Patterson
//! rotation drawn from a ChaCha generator, so `N` points are always a prefix
//! of `N + 1` points for the same seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::Chart;

/// Distance from non-periodic chart edges, as a fraction of the box width.
pub const EDGE_MARGIN: f64 = 0.05;

const BASES: [u64; 3] = [2, 3, 5];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut out = 0.0;
    while i > 0 {
        out += (i % base) as f64 * inv;
        i /= base;
        inv /= base as f64;
    }
    out
}

/// Rotated Halton points in the unit cube `[0,1)^dim`.
pub fn unit_points(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    assert!(dim <= BASES.len(), "sampling supports up to {} dimensions", BASES.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
    (1..=count as u64)
        .map(|i| (0..dim).map(|d| (radical_inverse(i, BASES[d]) + shift[d]).fract()).collect())
        .collect()
}

/// Sample points in the interior of a chart box, kept `EDGE_MARGIN` away from non-periodic edges.
pub fn chart_points(chart: &Chart, count: usize, seed: u64) -> Vec<Vec<f64>> {
    unit_points(chart.dim(), count, seed).iter().map(|t| chart.interior_point(t, EDGE_MARGIN)).collect()
}

/// A deterministic generator for auxiliary randomness tied to one sample index.
pub fn point_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn van_der_corput_prefix() {
        let v: Vec<f64> = (1..=4).map(|i| radical_inverse(i, 2)).collect();
        assert_eq!(v, vec![0.5, 0.25, 0.75, 0.125]);
    }

    #[test]
    fn prefix_property_and_range() {
        let a = unit_points(2, 50, 9);
        let b = unit_points(2, 80, 9);
        assert_eq!(a[..], b[..50]);
        assert!(b.iter().flatten().all(|x| (0.0..1.0).contains(x)));
        assert_ne!(unit_points(2, 5, 10), unit_points(2, 5, 9));
    }
}
