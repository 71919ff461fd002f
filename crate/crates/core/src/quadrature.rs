//! Double-exponential (tanh-sinh) quadrature on a finite interval.
//!
//! Handles integrable algebraic endpoint singularities such as
//! `(1 - x)^α (1 + x)^β` with α, β > −1, which is what the Stieltjes oracle
//! and the numeric moment checks need.

use std::f64::consts::FRAC_PI_2;

/// Discrete rule: nodes in `[lo, hi]` with positive weights, plus the exact
/// distance of each node to both endpoints (the node itself may round onto
/// an endpoint; the gaps never do).
#[derive(Debug, Clone)]
pub struct TanhSinh {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub gaps: Vec<(f64, f64)>,
    lo: f64,
    hi: f64,
}

impl TanhSinh {
    /// Rule with step `h` over `[lo, hi]`, truncated once the weights or the
    /// endpoint gaps underflow.
    pub fn new(lo: f64, hi: f64, h: f64) -> Self {
        let half = 0.5 * (hi - lo);
        let mut pts: Vec<(f64, f64, (f64, f64))> = Vec::new();
        let mut push = |t: f64| -> bool {
            let u = FRAC_PI_2 * t.abs().sinh();
            let ch = u.cosh();
            // 1 − tanh u, without cancellation
            let comp = 1.0 / (u.exp() * ch);
            let w = h * FRAC_PI_2 * t.cosh() / (ch * ch);
            let near = half * comp;
            if w < 1e-300 || near < 1e-300 {
                return false;
            }
            let far = half * (2.0 - comp);
            let (x, gaps) = if t >= 0.0 { (hi - near, (far, near)) } else { (lo + near, (near, far)) };
            pts.push((x, half * w, gaps));
            true
        };
        push(0.0);
        let mut k = 1;
        loop {
            let t = k as f64 * h;
            let right = push(t);
            let left = push(-t);
            if !right && !left {
                break;
            }
            k += 1;
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut nodes = Vec::with_capacity(pts.len());
        let mut weights = Vec::with_capacity(pts.len());
        let mut gaps = Vec::with_capacity(pts.len());
        for (x, w, g) in pts {
            nodes.push(x);
            weights.push(w);
            gaps.push(g);
        }
        TanhSinh { nodes, weights, gaps, lo, hi }
    }

    /// `Σ w f(x)` over the nodes strictly inside the interval.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .filter(|(&x, _)| x > self.lo && x < self.hi)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// `Σ w f(x, x − lo, hi − x)` with exact gaps; use this when `f` is
    /// singular at an endpoint.
    pub fn integrate_gaps(&self, f: impl Fn(f64, f64, f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .zip(&self.gaps)
            .map(|((&x, &w), &(dl, dr))| w * f(x, dl, dr))
            .sum()
    }
}

fn refine(rule: impl Fn(f64) -> f64, rel_tol: f64) -> f64 {
    let mut h = 0.25;
    let mut prev = rule(h);
    for _ in 0..6 {
        h *= 0.5;
        let cur = rule(h);
        if (cur - prev).abs() <= rel_tol * cur.abs().max(f64::MIN_POSITIVE) {
            return cur;
        }
        prev = cur;
    }
    prev
}

/// Integrate `f` over `[lo, hi]` by tanh-sinh, halving the step until two
/// successive estimates agree to `rel_tol` (or the finest level is reached).
pub fn integrate(f: impl Fn(f64) -> f64, lo: f64, hi: f64, rel_tol: f64) -> f64 {
    refine(|h| TanhSinh::new(lo, hi, h).integrate(&f), rel_tol)
}

/// As [`integrate`], for an integrand `f(x, x − lo, hi − x)`.
pub fn integrate_gaps(f: impl Fn(f64, f64, f64) -> f64, lo: f64, hi: f64, rel_tol: f64) -> f64 {
    refine(|h| TanhSinh::new(lo, hi, h).integrate_gaps(&f), rel_tol)
}
