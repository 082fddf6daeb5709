//! Shape functions on triangles and edges.
//!
//! Triangle functions are written in barycentric coordinates `(l0, l1, l2)` and
//! evaluated together with their partial derivatives with respect to each
//! barycentric coordinate; [`crate::geometry::TriangleGeometry`] turns those
//! into physical gradients.
//!
//! The hierarchical family uses integrated Legendre edge modes and Legendre
//! products for the bubbles. Its first three functions are the barycentric
//! coordinates themselves, and every other function vanishes at the vertices.

use crate::error::{Error, Result};

pub const MAX_DEGREE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisKind {
    Lagrange,
    Hierarchical,
}

/// Legendre polynomials `P_0..=P_n` with first and second derivatives at `s`.
fn legendre(n: usize, s: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut p = vec![0.0; n + 1];
    let mut dp = vec![0.0; n + 1];
    let mut ddp = vec![0.0; n + 1];
    p[0] = 1.0;
    if n >= 1 {
        p[1] = s;
        dp[1] = 1.0;
    }
    for k in 1..n {
        let kf = k as f64;
        p[k + 1] = ((2.0 * kf + 1.0) * s * p[k] - kf * p[k - 1]) / (kf + 1.0);
        dp[k + 1] = dp[k - 1] + (2.0 * kf + 1.0) * p[k];
        ddp[k + 1] = ddp[k - 1] + (2.0 * kf + 1.0) * dp[k];
    }
    (p, dp, ddp)
}

/// Integrated Legendre function `(P_n - P_{n-2}) / sqrt(2(2n - 1))`, `n >= 2`, and its derivative.
pub fn integrated_legendre(n: usize, s: f64) -> (f64, f64) {
    let (p, dp, _) = legendre(n, s);
    let c = (2.0 * (2 * n - 1) as f64).sqrt();
    ((p[n] - p[n - 2]) / c, (dp[n] - dp[n - 2]) / c)
}

/// Edge kernel `K_n` with `l_a l_b K_n(l_b - l_a) = integrated_legendre(n)` on the edge.
fn edge_kernel(n: usize, s: f64) -> (f64, f64) {
    let (_, dp, ddp) = legendre(n - 1, s);
    let nf = n as f64;
    let c = -4.0 * (2.0 * nf - 1.0) / (nf * (nf - 1.0) * (2.0 * (2.0 * nf - 1.0)).sqrt());
    (c * dp[n - 1], c * ddp[n - 1])
}

/// `prod_{m < a} (d x - m) / (m + 1)` and its derivative.
fn lagrange_factor(a: usize, d: usize, x: f64) -> (f64, f64) {
    let mut v = 1.0;
    let mut dv = 0.0;
    for m in 0..a {
        let f = (d as f64 * x - m as f64) / (m as f64 + 1.0);
        let df = d as f64 / (m as f64 + 1.0);
        dv = dv * f + v * df;
        v *= f;
    }
    (v, dv)
}

/// Shape functions on a triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleBasis {
    kind: BasisKind,
    degree: usize,
    /// Hierarchical only: local edge `k` (vertices `k`, `k+1`) runs from `k+1` to `k`.
    flips: [bool; 3],
    /// Lagrange only: lattice indices of the nodes.
    lattice: Vec<[usize; 3]>,
}

impl TriangleBasis {
    pub fn new(kind: BasisKind, degree: usize) -> Result<Self> {
        if degree == 0 || degree > MAX_DEGREE {
            return Err(Error::UnsupportedDegree(degree));
        }
        let lattice = match kind {
            BasisKind::Hierarchical => Vec::new(),
            BasisKind::Lagrange => {
                let mut l = vec![[degree, 0, 0], [0, degree, 0], [0, 0, degree]];
                for a in 0..=degree {
                    for b in 0..=degree - a {
                        let c = degree - a - b;
                        if a != degree && b != degree && c != degree {
                            l.push([a, b, c]);
                        }
                    }
                }
                l
            }
        };
        Ok(Self { kind, degree, flips: [false; 3], lattice })
    }

    pub fn lagrange(degree: usize) -> Result<Self> {
        Self::new(BasisKind::Lagrange, degree)
    }

    pub fn hierarchical(degree: usize) -> Result<Self> {
        Self::new(BasisKind::Hierarchical, degree)
    }

    /// Reverses the parametrisation of selected edges so that odd edge modes
    /// agree between neighbouring elements.
    pub fn with_orientation(mut self, flips: [bool; 3]) -> Self {
        self.flips = flips;
        self
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        (self.degree + 1) * (self.degree + 2) / 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of modes attached to each edge (hierarchical ordering).
    pub fn modes_per_edge(&self) -> usize {
        self.degree - 1
    }

    /// Barycentric coordinates of the Lagrange nodes.
    pub fn lagrange_nodes(&self) -> Vec<[f64; 3]> {
        let d = self.degree as f64;
        self.lattice.iter().map(|l| [l[0] as f64 / d, l[1] as f64 / d, l[2] as f64 / d]).collect()
    }

    /// Values and barycentric partial derivatives at `l`.
    pub fn eval_barycentric(&self, l: [f64; 3], values: &mut [f64], derivs: &mut [[f64; 3]]) {
        debug_assert_eq!(values.len(), self.len());
        match self.kind {
            BasisKind::Lagrange => self.eval_lagrange(l, values, derivs),
            BasisKind::Hierarchical => self.eval_hierarchical(l, values, derivs),
        }
    }

    fn eval_lagrange(&self, l: [f64; 3], values: &mut [f64], derivs: &mut [[f64; 3]]) {
        let d = self.degree;
        for (i, idx) in self.lattice.iter().enumerate() {
            let f: [(f64, f64); 3] = std::array::from_fn(|k| lagrange_factor(idx[k], d, l[k]));
            values[i] = f[0].0 * f[1].0 * f[2].0;
            derivs[i] = [f[0].1 * f[1].0 * f[2].0, f[0].0 * f[1].1 * f[2].0, f[0].0 * f[1].0 * f[2].1];
        }
    }

    fn eval_hierarchical(&self, l: [f64; 3], values: &mut [f64], derivs: &mut [[f64; 3]]) {
        let d = self.degree;
        for k in 0..3 {
            values[k] = l[k];
            derivs[k] = [0.0; 3];
            derivs[k][k] = 1.0;
        }
        let mut idx = 3;
        for k in 0..3 {
            let (mut a, mut b) = (k, (k + 1) % 3);
            if self.flips[k] {
                std::mem::swap(&mut a, &mut b);
            }
            let s = l[b] - l[a];
            let w = l[a] * l[b];
            for n in 2..=d {
                let (kn, dkn) = edge_kernel(n, s);
                values[idx] = w * kn;
                let mut g = [0.0; 3];
                g[a] = l[b] * kn - w * dkn;
                g[b] = l[a] * kn + w * dkn;
                derivs[idx] = g;
                idx += 1;
            }
        }
        if d >= 3 {
            let bubble = l[0] * l[1] * l[2];
            let db = [l[1] * l[2], l[0] * l[2], l[0] * l[1]];
            let s = l[1] - l[0];
            let t = l[2] - l[0] - l[1];
            let (ps, dps, _) = legendre(d - 3, s);
            let (pt, dpt, _) = legendre(d - 3, t);
            for i in 0..=d - 3 {
                for j in 0..=d - 3 - i {
                    let q = ps[i] * pt[j];
                    // dq/dl = dps * ds/dl * pt + ps * dpt * dt/dl
                    let dq = [
                        -dps[i] * pt[j] - ps[i] * dpt[j],
                        dps[i] * pt[j] - ps[i] * dpt[j],
                        ps[i] * dpt[j],
                    ];
                    values[idx] = bubble * q;
                    derivs[idx] = std::array::from_fn(|m| db[m] * q + bubble * dq[m]);
                    idx += 1;
                }
            }
        }
        debug_assert_eq!(idx, self.len());
    }

    /// Values and gradients with respect to reference coordinates `(x, y)`,
    /// where `l = (1 - x - y, x, y)`.
    pub fn eval(&self, point: [f64; 2]) -> (Vec<f64>, Vec<[f64; 2]>) {
        let n = self.len();
        let mut v = vec![0.0; n];
        let mut dl = vec![[0.0; 3]; n];
        self.eval_barycentric([1.0 - point[0] - point[1], point[0], point[1]], &mut v, &mut dl);
        let g = dl.iter().map(|d| [d[1] - d[0], d[2] - d[0]]).collect();
        (v, g)
    }
}

/// Shape functions on the reference edge `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeBasis {
    kind: BasisKind,
    degree: usize,
}

impl EdgeBasis {
    pub fn new(kind: BasisKind, degree: usize) -> Result<Self> {
        if degree == 0 || degree > MAX_DEGREE {
            return Err(Error::UnsupportedDegree(degree));
        }
        Ok(Self { kind, degree })
    }

    pub fn len(&self) -> usize {
        self.degree + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Values and `d/dt` at `t`. The two end-point functions come first.
    pub fn eval(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        let d = self.degree;
        let mut v = vec![1.0 - t, t];
        let mut dv = vec![-1.0, 1.0];
        match self.kind {
            BasisKind::Hierarchical => {
                for n in 2..=d {
                    let (val, der) = integrated_legendre(n, 2.0 * t - 1.0);
                    v.push(val);
                    dv.push(2.0 * der);
                }
            }
            BasisKind::Lagrange => {
                v.clear();
                dv.clear();
                let l = [1.0 - t, t];
                let mut order = vec![[d, 0], [0, d]];
                order.extend((1..d).map(|i| [d - i, i]));
                for idx in order {
                    let (f0, df0) = lagrange_factor(idx[0], d, l[0]);
                    let (f1, df1) = lagrange_factor(idx[1], d, l[1]);
                    v.push(f0 * f1);
                    dv.push(-df0 * f1 + f0 * df1);
                }
            }
        }
        (v, dv)
    }
}
