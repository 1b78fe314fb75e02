//! Gauss-Legendre quadrature with Newton-iterated nodes, plus unit-sphere
//! surface areas.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

/// A Gauss-Legendre rule on [-1, 1]; integrate over [a, b] by affine map.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2, "Gauss-Legendre rule needs at least 2 nodes");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n(x) = 0.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
            let (_, d) = legendre_with_derivative(n, 0.0);
            weights[n / 2] = 2.0 / (d * d);
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let s: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum();
        half * s
    }

    /// log of the integral of exp(log_f(x)) over [a, b], evaluated with the
    /// log-sum-exp trick so heavily peaked integrands never underflow.
    pub fn ln_integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, log_f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let terms: Vec<f64> = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w.ln() + log_f(mid + half * x))
            .collect();
        let peak = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if peak == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        let s: f64 = terms.iter().map(|t| (t - peak).exp()).sum();
        half.ln() + peak + s.ln()
    }

    /// Expectation of `g` under the density proportional to exp(log_f) on
    /// [a, b]; numerically stable for peaked densities.
    pub fn expectation<F: Fn(f64) -> f64, G: Fn(f64) -> f64>(
        &self,
        a: f64,
        b: f64,
        log_f: F,
        g: G,
    ) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let pts: Vec<(f64, f64)> = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| {
                let t = mid + half * x;
                (w.ln() + log_f(t), t)
            })
            .collect();
        let peak = pts
            .iter()
            .map(|(l, _)| *l)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut num = 0.0;
        let mut den = 0.0;
        for (l, t) in &pts {
            let e = (l - peak).exp();
            num += e * g(*t);
            den += e;
        }
        num / den
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Shared rules keyed by node count; rules are immutable once built.
pub fn shared_rule(n: usize) -> Arc<GaussLegendre> {
    static RULES: OnceLock<RwLock<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
    let lock = RULES.get_or_init(|| RwLock::new(HashMap::new()));
    if let Some(r) = lock.read().unwrap().get(&n) {
        return Arc::clone(r);
    }
    let rule = Arc::new(GaussLegendre::new(n));
    let mut map = lock.write().unwrap();
    Arc::clone(map.entry(n).or_insert(rule))
}

/// Surface area of the unit m-sphere S^m embedded in R^{m+1}.
/// A_0 = 2 (two points), A_1 = 2*pi, A_2 = 4*pi, with
/// A_m = 2*pi*A_{m-2}/(m-1).
pub fn unit_sphere_area(m: usize) -> f64 {
    match m {
        0 => 2.0,
        1 => 2.0 * std::f64::consts::PI,
        _ => 2.0 * std::f64::consts::PI * unit_sphere_area(m - 2) / (m as f64 - 1.0),
    }
}
