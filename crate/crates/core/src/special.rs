//! Special functions used across the crate: log-gamma, real binomials,
//! rising-factorial ratios and the regularized incomplete beta function.

use statrs::function::gamma::ln_gamma;

/// ln Γ(x) for x > 0.
pub fn lgamma(x: f64) -> f64 {
    ln_gamma(x)
}

/// ln B(a, b) = ln Γ(a) + ln Γ(b) − ln Γ(a + b).
pub fn ln_beta(a: f64, b: f64) -> f64 {
    lgamma(a) + lgamma(b) - lgamma(a + b)
}

/// Generalized binomial C(x, y) = Γ(x+1) / (Γ(y+1) Γ(x−y+1)) for arguments
/// where all three gamma arguments are positive.
pub fn binomial(x: f64, y: f64) -> f64 {
    (lgamma(x + 1.0) - lgamma(y + 1.0) - lgamma(x - y + 1.0)).exp()
}

/// C(k + shift, k) = Π_{j=1}^{k} (j + shift) / j, evaluated as a running
/// product. Relative error grows like k·ε, which stays far below the
/// log-gamma route for the index ranges used here.
pub fn rising_binomial(k: usize, shift: f64) -> f64 {
    (1..=k).fold(1.0, |acc, j| {
        let j = j as f64;
        acc * (j + shift) / j
    })
}

/// Regularized incomplete beta I_x(a, b) via the Lentz continued fraction
/// with the usual symmetry switch.
pub fn beta_reg(a: f64, b: f64, x: f64) -> f64 {
    assert!(a > 0.0 && b > 0.0, "beta_reg requires positive shape parameters");
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = lgamma(a + b) - lgamma(a) - lgamma(b) + a * x.ln() + b * (-x).ln_1p();
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_cf(a, b, x) / a
    } else {
        1.0 - ln_front.exp() * beta_cf(b, a, 1.0 - x) / b
    }
}

const CF_TOL: f64 = 1e-14;
const CF_MAX_ITER: usize = 300;
const CF_TINY: f64 = 1e-300;

fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < CF_TINY {
        d = CF_TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_TOL {
            break;
        }
    }
    h
}

/// Integer binomial coefficient as f64 (exact for the small arguments used in path counts).
pub fn choose(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as f64
}
