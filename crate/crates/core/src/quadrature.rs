//! Fixed-order Gauss–Legendre rules used by the integral oracles.

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on `[0, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds an `n`-point rule by Newton iteration on `P_n`.
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            // map [-1, 1] -> [0, 1]
            nodes[i] = 0.5 * (1.0 - x);
            nodes[n - 1 - i] = 0.5 * (1.0 + x);
            weights[i] = 0.5 * w;
            weights[n - 1 - i] = 0.5 * w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `(node, weight)` pairs on `[0, 1]`.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let h = b - a;
        self.nodes().map(|(x, w)| w * f(a + h * x)).sum::<f64>() * h
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let dp = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Rule for `∫_0^∞ g(s) s^{r-1} ds`, `r > 0`.
///
/// Uses `s = c t^k`, `t = u / (1 - u)` with `k = ceil(r) / r`, so the
/// transformed weight `t^{kr-1}` is a polynomial and `k < 2` keeps
/// exponential tails short. The returned weights include `s^{r-1} ds`.
#[derive(Clone, Debug)]
pub struct HalfLineRule {
    points: Vec<(f64, f64)>,
}

impl HalfLineRule {
    pub fn new(n: usize, scale: f64, r: f64) -> Self {
        assert!(scale > 0.0 && r > 0.0, "half-line rule needs positive scale and exponent");
        let gl = GaussLegendre::new(n);
        let k = r.ceil() / r;
        let jac = scale.powf(r) * k;
        let points = gl
            .nodes()
            .map(|(u, w)| {
                let t = u / (1.0 - u);
                let s = scale * t.powf(k);
                (s, w * jac * t.powf(k * r - 1.0) / ((1.0 - u) * (1.0 - u)))
            })
            .collect();
        Self { points }
    }

    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.points.iter().copied()
    }
}
