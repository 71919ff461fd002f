//! Closed-form equilibrium measures, closed-form limits `Σ_{l_a,l_b}`, the
//! ultraspherical addition formulas and the Kolmogorov–Smirnov distance
//! between a weighted root sample and a limit measure.

use std::f64::consts::PI;
use std::path::Path;

use crate::csvio::{fmt_f64, write_rows};
use crate::error::{Error, Result};
use crate::families::ultraspherical_family_with_cap;
use crate::means::RootSample;
use crate::special::{beta_reg, binomial, choose, lgamma, ln_beta};
use crate::summation::{gegenbauer, SummationMethod};
use crate::tridiag::eval_orthonormal;

#[derive(Debug, Clone, PartialEq)]
pub enum EquilibriumMeasure {
    /// `(1/π) / sqrt(4b² − (x − a)²)` on `[a − 2b, a + 2b]`.
    Arcsine { a: f64, b: f64 },
    /// `(1 − x²)^{(α−1)/2} / m` on `[−1, 1]`; α = 1 is the uniform measure.
    Gegenbauer { alpha: f64 },
    /// Image of `base` (supported on `[−1, 1]`) under `y ↦ 2b y + a`.
    Affine { base: Box<EquilibriumMeasure>, a: f64, b: f64 },
}

pub fn arcsine_measure(a: f64, b: f64) -> Result<EquilibriumMeasure> {
    if !(b > 0.0) {
        return Err(Error::Config(format!("arcsine measure needs b > 0, got {b}")));
    }
    Ok(EquilibriumMeasure::Arcsine { a, b })
}

pub fn gegenbauer_equilibrium(alpha: f64) -> Result<EquilibriumMeasure> {
    if !(alpha > 0.0) {
        return Err(Error::Config(format!("gegenbauer equilibrium needs α > 0, got {alpha}")));
    }
    Ok(EquilibriumMeasure::Gegenbauer { alpha })
}

pub fn uniform_measure() -> EquilibriumMeasure {
    EquilibriumMeasure::Gegenbauer { alpha: 1.0 }
}

/// Image of a measure on `[−1, 1]` under `T y = 2b y + a`.
pub fn affine_transfer(src: EquilibriumMeasure, a: f64, b: f64) -> Result<EquilibriumMeasure> {
    let (lo, hi) = src.support();
    if (lo + 1.0).abs() > 1e-15 || (hi - 1.0).abs() > 1e-15 {
        return Err(Error::Domain(format!("affine transfer needs support [−1, 1], got [{lo}, {hi}]")));
    }
    if !(b > 0.0) {
        return Err(Error::Config(format!("affine transfer needs b > 0, got {b}")));
    }
    Ok(EquilibriumMeasure::Affine { base: Box::new(src), a, b })
}

/// `m^{(α/2)} = ∫_{−1}^{1} (1 − x²)^{(α−1)/2} dx = B(1/2, (α+1)/2)`.
pub fn gegenbauer_normalizer(alpha: f64) -> f64 {
    ln_beta(0.5, 0.5 * (alpha + 1.0)).exp()
}

impl EquilibriumMeasure {
    pub fn support(&self) -> (f64, f64) {
        match self {
            EquilibriumMeasure::Arcsine { a, b } => (a - 2.0 * b, a + 2.0 * b),
            EquilibriumMeasure::Gegenbauer { .. } => (-1.0, 1.0),
            EquilibriumMeasure::Affine { a, b, .. } => (a - 2.0 * b, a + 2.0 * b),
        }
    }

    pub fn label(&self) -> String {
        match self {
            EquilibriumMeasure::Arcsine { a, b } => format!("arcsine(a={a}, b={b})"),
            EquilibriumMeasure::Gegenbauer { alpha } if *alpha == 1.0 => "uniform".into(),
            EquilibriumMeasure::Gegenbauer { alpha } => format!("gegenbauer(alpha={alpha})"),
            EquilibriumMeasure::Affine { base, a, b } => format!("affine[{}](a={a}, b={b})", base.label()),
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if x < lo || x > hi {
            return 0.0;
        }
        self.density_gaps(x - lo, hi - x)
    }

    /// Density at the point whose distances to the two support endpoints
    /// are `dl` and `dr`; exact near the endpoints where `density` is not.
    pub fn density_gaps(&self, dl: f64, dr: f64) -> f64 {
        if dl < 0.0 || dr < 0.0 {
            return 0.0;
        }
        match self {
            EquilibriumMeasure::Arcsine { .. } => {
                // 4b² − (x − a)² = (x − lo)(hi − x)
                let r = dl * dr;
                if r <= 0.0 {
                    f64::INFINITY
                } else {
                    1.0 / (PI * r.sqrt())
                }
            }
            EquilibriumMeasure::Gegenbauer { alpha } => {
                (dl * dr).powf(0.5 * (alpha - 1.0)) / gegenbauer_normalizer(*alpha)
            }
            EquilibriumMeasure::Affine { base, b, .. } => {
                let s = 2.0 * b;
                base.density_gaps(dl / s, dr / s) / s
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if x <= lo {
            return 0.0;
        }
        if x >= hi {
            return 1.0;
        }
        match self {
            EquilibriumMeasure::Arcsine { a, b } => 0.5 + ((x - a) / (2.0 * b)).asin() / PI,
            EquilibriumMeasure::Gegenbauer { alpha } => {
                let s = 0.5 * (alpha + 1.0);
                beta_reg(s, s, 0.5 * (x + 1.0))
            }
            EquilibriumMeasure::Affine { base, a, b } => base.cdf((x - a) / (2.0 * b)),
        }
    }

    /// `∫ x^l dμ`.
    pub fn moment(&self, l: usize) -> f64 {
        match self {
            EquilibriumMeasure::Arcsine { a, b } => (0..=l)
                .step_by(2)
                .map(|i| choose(l as u64, i as u64) * a.powi((l - i) as i32) * arcsine_centered(*b, i))
                .sum(),
            EquilibriumMeasure::Gegenbauer { alpha } => {
                if l % 2 == 1 {
                    return 0.0;
                }
                let mut m = 1.0;
                for p in (0..l).step_by(2) {
                    m *= (p as f64 + 1.0) / (p as f64 + alpha + 2.0);
                }
                m
            }
            EquilibriumMeasure::Affine { base, a, b } => (0..=l)
                .map(|i| {
                    choose(l as u64, i as u64) * a.powi((l - i) as i32) * (2.0 * b).powi(i as i32) * base.moment(i)
                })
                .sum(),
        }
    }

    /// Inverse CDF by bisection.
    pub fn quantile(&self, p: f64) -> f64 {
        let (mut lo, mut hi) = self.support();
        if p <= 0.0 {
            return lo;
        }
        if p >= 1.0 {
            return hi;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-16 * hi.abs().max(1.0) {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// Write `x,density` on `points` equally spaced points over the support.
    pub fn write_curve<P: AsRef<Path>>(&self, path: P, points: usize) -> Result<()> {
        let rows: Vec<Vec<String>> = curve_grid(self.support(), points)
            .into_iter()
            .map(|x| vec![fmt_f64(x), fmt_f64(self.density(x))])
            .collect();
        write_rows(path, &["x", "density"], &rows)
    }
}

fn curve_grid((lo, hi): (f64, f64), points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => (0..points)
            .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
            .collect(),
    }
}

/// Centered arcsine moment `C(2p, p) b^{2p}` (zero for odd order).
fn arcsine_centered(b: f64, i: usize) -> f64 {
    if i % 2 == 1 {
        0.0
    } else {
        choose(i as u64, (i / 2) as u64) * b.powi(i as i32)
    }
}

/// The density printed for the affine Cesàro class, with its `(b² − (x−a)²)`
/// argument kept verbatim. Only used to report how far it is from the
/// transferred measure.
pub fn printed_affine_density(alpha: f64, a: f64, b: f64, x: f64) -> f64 {
    if x < a - 2.0 * b || x > a + 2.0 * b {
        return 0.0;
    }
    let prefactor = 1.0 / (2.0 * PI * b.powf(alpha) * binomial(alpha - 1.0, 0.5 * alpha));
    let base = b * b - (x - a) * (x - a);
    if base < 0.0 {
        return f64::NAN;
    }
    prefactor * base.powf(0.5 * (alpha - 1.0))
}

/// Which closed-form `Σ_{l_a,l_b}` to evaluate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaLimit {
    /// `a^{l_a} b^{l_b}`, any regular method on a uniform Nevai family.
    UniformNevai { a: f64, b: f64 },
    /// Arithmetic mean on the ultraspherical family.
    Arithmetic,
    /// Cesàro `(C, α)` on the ultraspherical family.
    Cesaro { alpha: f64 },
    /// Gegenbauer `(G, ν)` on the ultraspherical family.
    Gegenbauer { nu: f64 },
    /// `a^{l_a} b^{l_b} / C((α + l_b)/2, α/2)`.
    AffineCesaro { a: f64, b: f64, alpha: f64 },
}

/// `p! / Π_{j=1}^{p} (s + j) = Γ(p+1) Γ(s+1) / Γ(s+p+1)`.
fn inverse_rising(p: usize, s: f64) -> f64 {
    (1..=p).fold(1.0, |acc, j| acc * j as f64 / (s + j as f64))
}

pub fn sigma_closed_form(limit: SigmaLimit, l_a: u32, l_b: u32) -> Result<f64> {
    let needs_even = !matches!(limit, SigmaLimit::UniformNevai { .. });
    if needs_even && l_b % 2 == 1 {
        return Err(Error::Domain(format!("closed form needs even l_b, got {l_b}")));
    }
    let p = (l_b / 2) as usize;
    let two_pow = 0.5f64.powi(l_b as i32);
    let delta = if l_a == 0 { 1.0 } else { 0.0 };
    Ok(match limit {
        SigmaLimit::UniformNevai { a, b } => a.powi(l_a as i32) * b.powi(l_b as i32),
        SigmaLimit::Arithmetic => {
            // Γ(3/2) Γ((l_b+2)/2) / (2^{l_b} Γ((l_b+3)/2))
            let lb = l_b as f64;
            delta * two_pow * (lgamma(1.5) + lgamma(0.5 * lb + 1.0) - lgamma(0.5 * lb + 1.5)).exp()
        }
        SigmaLimit::Cesaro { alpha } => delta * two_pow * inverse_rising(p, 0.5 * alpha),
        SigmaLimit::Gegenbauer { nu } => delta * two_pow * inverse_rising(p, nu),
        SigmaLimit::AffineCesaro { a, b, alpha } => {
            a.powi(l_a as i32) * b.powi(l_b as i32) * inverse_rising(p, 0.5 * alpha)
        }
    })
}

/// `|1/m^{(λ)} − Σ_k σ_{n,k}^{(G,λ)} (1 − x²)^{n−k} p_k^{(n−k,λ)}(x)²|`.
pub fn addition_formula_residual(lambda: f64, n: usize, x: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::Config(format!("addition formula needs λ > 0, got {lambda}")));
    }
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("x = {x} outside [−1, 1]")));
    }
    // only coefficients are needed, so skip the (A, B) scan
    let family = ultraspherical_family_with_cap(lambda, 1)?;
    let method = gegenbauer(lambda, n)?;
    let lhs = 1.0 / family.mass(0);
    let s = 1.0 - x * x;
    let mut rhs = 0.0;
    for k in 0..=n {
        let p = eval_orthonormal(&family, n - k, k, x)?[k];
        rhs += method.weight(n, k) * s.powi((n - k) as i32) * p * p;
    }
    Ok((lhs - rhs).abs())
}

/// `|(2n+1)/2 − p_n^{(0)}(x)² − 2 Σ_{k=1}^{n} (1 − x²)^k p_{n−k}^{(k)}(x)²|`
/// for the Legendre family (λ = 1/2).
pub fn legendre_addition_residual(n: usize, x: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("x = {x} outside [−1, 1]")));
    }
    let family = ultraspherical_family_with_cap(0.5, 1)?;
    let s = 1.0 - x * x;
    let head = eval_orthonormal(&family, 0, n, x)?[n];
    let mut rhs = head * head;
    for k in 1..=n {
        let p = eval_orthonormal(&family, k, n - k, x)?[n - k];
        rhs += 2.0 * s.powi(k as i32) * p * p;
    }
    Ok(((2 * n + 1) as f64 / 2.0 - rhs).abs())
}

/// `sup |F_sample − F_measure|` over both one-sided limits at every sample point.
pub fn ks_distance(sample: &RootSample, measure: &EquilibriumMeasure) -> Result<f64> {
    if sample.points.is_empty() {
        return Err(Error::Domain("KS distance of an empty sample".into()));
    }
    let pts = sample.sorted();
    let total: f64 = pts.iter().map(|p| p.1).sum();
    let mut below = 0.0;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < pts.len() {
        let x = pts[i].0;
        let mut mass = 0.0;
        while i < pts.len() && pts[i].0 == x {
            mass += pts[i].1;
            i += 1;
        }
        let f = measure.cdf(x);
        let left = below / total;
        below += mass;
        let right = below / total;
        d = d.max((f - left).abs()).max((f - right).abs());
    }
    Ok(d)
}
