//! Gauss rules on the reference edge `[0, 1]` and reference triangle
//! `(0,0), (1,0), (0,1)`.
//!
//! Triangle rules are conical products of Gauss-Legendre rules (collapsed
//! coordinates), which gives exactness of arbitrary order with positive
//! weights and interior points.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Highest polynomial exactness served by [`edge_rule`] and [`triangle_rule`].
pub const MAX_EXACTNESS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Entity {
    Edge,
    Triangle,
}

#[derive(Debug, Clone)]
pub struct QuadratureRule {
    /// Reference coordinates; the second coordinate is zero on edges.
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub exactness: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Iterates `(point, weight)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (&[f64; 2], f64)> + '_ {
        self.points.iter().zip(self.weights.iter().copied())
    }

    /// Barycentric coordinates of each triangle point, ordered `(1 - x - y, x, y)`.
    pub fn barycentric(&self) -> impl Iterator<Item = ([f64; 3], f64)> + '_ {
        self.iter().map(|(p, w)| ([1.0 - p[0] - p[1], p[0], p[1]], w))
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn unit_interval(n: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    (x.iter().map(|t| 0.5 * (t + 1.0)).collect(), w.iter().map(|v| 0.5 * v).collect())
}

fn build_edge(exactness: usize) -> QuadratureRule {
    let n = exactness / 2 + 1;
    let (x, w) = unit_interval(n);
    QuadratureRule { points: x.into_iter().map(|t| [t, 0.0]).collect(), weights: w, exactness }
}

fn build_triangle(exactness: usize) -> QuadratureRule {
    // the collapsed map carries a Jacobian (1 - u), one extra degree in u
    let nu = exactness.div_ceil(2) + 1;
    let nv = exactness / 2 + 1;
    let (u, wu) = unit_interval(nu);
    let (v, wv) = unit_interval(nv);
    let mut points = Vec::with_capacity(nu * nv);
    let mut weights = Vec::with_capacity(nu * nv);
    for (ui, wui) in u.iter().zip(&wu) {
        for (vj, wvj) in v.iter().zip(&wv) {
            points.push([*ui, vj * (1.0 - ui)]);
            weights.push(wui * wvj * (1.0 - ui));
        }
    }
    QuadratureRule { points, weights, exactness }
}

fn table(entity: Entity) -> &'static [QuadratureRule] {
    static EDGES: OnceLock<Vec<QuadratureRule>> = OnceLock::new();
    static TRIANGLES: OnceLock<Vec<QuadratureRule>> = OnceLock::new();
    match entity {
        Entity::Edge => EDGES.get_or_init(|| (0..=MAX_EXACTNESS).map(build_edge).collect()),
        Entity::Triangle => TRIANGLES.get_or_init(|| (0..=MAX_EXACTNESS).map(build_triangle).collect()),
    }
}

/// Rule integrating polynomials up to total degree `exactness` on the entity.
pub fn quadrature(entity: Entity, exactness: usize) -> Result<&'static QuadratureRule> {
    table(entity)
        .get(exactness)
        .ok_or(Error::QuadratureUnavailable { requested: exactness, max: MAX_EXACTNESS })
}

pub fn edge_rule(exactness: usize) -> Result<&'static QuadratureRule> {
    quadrature(Entity::Edge, exactness)
}

pub fn triangle_rule(exactness: usize) -> Result<&'static QuadratureRule> {
    quadrature(Entity::Triangle, exactness)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u64) -> f64 {
        (1..=n).product::<u64>() as f64
    }

    #[test]
    fn edge_monomial() {
        let r = edge_rule(8).unwrap();
        let s: f64 = r.iter().map(|(p, w)| w * p[0].powi(8)).sum();
        assert!((s - 1.0 / 9.0).abs() < 1e-13);
    }

    #[test]
    fn triangle_area() {
        let r = triangle_rule(0).unwrap();
        assert!((r.weights.iter().sum::<f64>() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn barycentric_monomial() {
        // int_T l1^a l2^b l0^c = 2|T| a! b! c! / (a + b + c + 2)!
        let r = triangle_rule(8).unwrap();
        let s: f64 = r.barycentric().map(|(l, w)| w * l[1].powi(4) * l[2].powi(4)).sum();
        let exact = factorial(4) * factorial(4) / factorial(10);
        assert!((s - exact).abs() / exact < 1e-13);
        assert!((exact - 1.0 / 6300.0).abs() < 1e-18);
    }

    #[test]
    fn every_monomial_to_stated_degree() {
        for deg in 0..=12 {
            let r = triangle_rule(deg).unwrap();
            for a in 0..=deg as i32 {
                let b = deg as i32 - a;
                let s: f64 = r.iter().map(|(p, w)| w * p[0].powi(a) * p[1].powi(b)).sum();
                let exact = factorial(a as u64) * factorial(b as u64) / factorial(deg as u64 + 2);
                assert!((s - exact).abs() <= 1e-13 * exact, "deg {deg} a {a}");
            }
            let e = edge_rule(deg).unwrap();
            let s: f64 = e.iter().map(|(p, w)| w * p[0].powi(deg as i32)).sum();
            assert!((s - 1.0 / (deg as f64 + 1.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn beyond_table() {
        assert!(matches!(triangle_rule(MAX_EXACTNESS + 1), Err(Error::QuadratureUnavailable { .. })));
    }
}
