//! Jacobi matrices and everything computed from them: polynomial roots,
//! Gauss rules, orthonormal polynomial values, Christoffel–Darboux kernel
//! diagonals and local moments `∫ x^l p_m² dμ`.

use crate::error::{Error, Result};
use crate::families::CoefficientFamily;

/// Iteration cap per eigenvalue in the QL sweep.
pub const MAX_QL_ITERATIONS: usize = 50;

/// Symmetric tridiagonal matrix with diagonal `(a_0, …, a_l)` and
/// off-diagonal `(b_1, …, b_l)`.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiMatrix {
    pub diag: Vec<f64>,
    pub offdiag: Vec<f64>,
}

impl JacobiMatrix {
    pub fn new(diag: Vec<f64>, offdiag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || offdiag.len() + 1 != diag.len() {
            return Err(Error::Validation(format!(
                "jacobi matrix needs n ≥ 1 diagonal and n − 1 off-diagonal entries, got {} and {}",
                diag.len(),
                offdiag.len()
            )));
        }
        Ok(JacobiMatrix { diag, offdiag })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// `‖diag‖_∞ + 2‖offdiag‖_∞`, the Gershgorin radius.
    pub fn scale(&self) -> f64 {
        let d = self.diag.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let e = self.offdiag.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        d + 2.0 * e
    }

    /// `y = J x` restricted to indices `lo..lo + x.len()`.
    fn apply_window(&self, lo: usize, x: &[f64], y: &mut [f64]) {
        let n = x.len();
        for i in 0..n {
            let g = lo + i;
            let mut acc = self.diag[g] * x[i];
            if i > 0 {
                acc += self.offdiag[g - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.offdiag[g] * x[i + 1];
            }
            y[i] = acc;
        }
    }

    /// `(J^p)_{ii}` for `p = 0..=max_power`.
    fn diagonal_powers(&self, i: usize, max_power: usize) -> Vec<f64> {
        let reach = max_power / 2;
        let lo = i.saturating_sub(reach);
        let hi = (i + reach).min(self.dim() - 1);
        let mut x = vec![0.0; hi - lo + 1];
        x[i - lo] = 1.0;
        let mut y = vec![0.0; x.len()];
        let mut out = Vec::with_capacity(max_power + 1);
        out.push(1.0);
        for _ in 0..max_power {
            self.apply_window(lo, &x, &mut y);
            std::mem::swap(&mut x, &mut y);
            out.push(x[i - lo]);
        }
        out
    }
}

/// `J` of size `size` for the measure `μ^{(k)}`.
pub fn jacobi_matrix(family: &CoefficientFamily, k: usize, size: usize) -> Result<JacobiMatrix> {
    if size == 0 {
        return Err(Error::Validation("jacobi matrix size must be at least 1".into()));
    }
    let mut diag = Vec::with_capacity(size);
    let mut offdiag = Vec::with_capacity(size - 1);
    for j in 0..size {
        let p = family.coeff(k, j)?;
        diag.push(p.a);
        if j > 0 {
            offdiag.push(p.b);
        }
    }
    JacobiMatrix::new(diag, offdiag)
}

/// Implicit QL with Wilkinson shifts. When `first_row` is given it must
/// start as `e_0` and ends up holding the first components of the
/// normalized eigenvectors, in the same (unsorted) order as `d`.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64], mut first_row: Option<&mut [f64]>) -> Result<()> {
    let n = d.len();
    if n <= 1 {
        return Ok(());
    }
    // e[i] couples i and i+1; e[n-1] is a zero sentinel
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd || e[m].abs() < f64::MIN_POSITIVE {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_QL_ITERATIONS {
                return Err(Error::NoConvergence { index: l, iterations: MAX_QL_ITERATIONS });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = first_row.as_deref_mut() {
                    let f = z[i + 1];
                    z[i + 1] = s * z[i] + c * f;
                    z[i] = c * z[i] - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Eigenvalues of `J`, ascending. These are the zeros of `p_{dim}`.
pub fn eigen_roots(j: &JacobiMatrix) -> Result<Vec<f64>> {
    let mut d = j.diag.clone();
    let mut e = j.offdiag.clone();
    e.push(0.0);
    tridiagonal_ql(&mut d, &mut e, None)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Eigenvalues with the squared first components of the eigenvectors.
fn eigen_with_first_components(j: &JacobiMatrix) -> Result<Vec<(f64, f64)>> {
    let n = j.dim();
    let mut d = j.diag.clone();
    let mut e = j.offdiag.clone();
    e.push(0.0);
    let mut z = vec![0.0; n];
    z[0] = 1.0;
    tridiagonal_ql(&mut d, &mut e, Some(&mut z))?;
    let mut pairs: Vec<(f64, f64)> = d.into_iter().zip(z.into_iter().map(|v| v * v)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(pairs)
}

/// Gauss rule for `μ^{(k)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// `m`-node Gauss rule for `μ^{(k)}` (Golub–Welsch).
pub fn gauss_rule(family: &CoefficientFamily, k: usize, m: usize) -> Result<QuadratureRule> {
    let j = jacobi_matrix(family, k, m)?;
    let mass = family.mass(k);
    let pairs = eigen_with_first_components(&j).map_err(|e| e.in_context(format!("gauss rule k={k}")))?;
    let (nodes, weights) = pairs.into_iter().map(|(x, z2)| (x, mass * z2)).unzip();
    Ok(QuadratureRule { nodes, weights })
}

/// `(p_0^{(k)}(x), …, p_n^{(k)}(x))` by forward recurrence.
pub fn eval_orthonormal(family: &CoefficientFamily, k: usize, n: usize, x: f64) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(1.0 / family.mass(k).sqrt());
    let mut prev = 0.0;
    for l in 0..n {
        let cur = family.coeff(k, l)?;
        let next = family.coeff(k, l + 1)?;
        let p = ((x - cur.a) * out[l] - cur.b * prev) / next.b;
        prev = out[l];
        out.push(p);
    }
    Ok(out)
}

/// `K_n^{(k)}(x, x) = Σ_{l ≤ n} p_l^{(k)}(x)²`.
pub fn cd_kernel_diag(family: &CoefficientFamily, k: usize, n: usize, x: f64) -> Result<f64> {
    Ok(eval_orthonormal(family, k, n, x)?.iter().map(|p| p * p).sum())
}

/// `∫ x^l (p_m^{(k)})² dμ^{(k)}` for `l = 0..=max_l`, read off the `(m, m)`
/// entries of successive powers of a Jacobi matrix window around `m`.
pub fn local_moments(family: &CoefficientFamily, k: usize, m: usize, max_l: usize) -> Result<Vec<f64>> {
    let reach = max_l / 2;
    let lo = m.saturating_sub(reach);
    let hi = m + reach;
    let mut diag = Vec::with_capacity(hi - lo + 1);
    let mut offdiag = Vec::with_capacity(hi - lo);
    for j in lo..=hi {
        let p = family.coeff(k, j)?;
        diag.push(p.a);
        if j > lo {
            offdiag.push(p.b);
        }
    }
    let window = JacobiMatrix { diag, offdiag };
    Ok(window.diagonal_powers(m - lo, max_l))
}

/// Single local moment `∫ x^l (p_m^{(k)})² dμ^{(k)}`.
pub fn local_moment(family: &CoefficientFamily, k: usize, m: usize, l: usize) -> Result<f64> {
    Ok(local_moments(family, k, m, l)?[l])
}

/// `tr(J^l)`, the `l`-th power sum of the eigenvalues, without an eigensolve.
pub fn trace_power(j: &JacobiMatrix, l: usize) -> f64 {
    (0..j.dim()).map(|i| j.diagonal_powers(i, l)[l]).sum()
}

/// `tr(J^p)` for `p = 0..=max_l`.
pub fn trace_powers(j: &JacobiMatrix, max_l: usize) -> Vec<f64> {
    let mut out = vec![0.0; max_l + 1];
    for i in 0..j.dim() {
        for (acc, v) in out.iter_mut().zip(j.diagonal_powers(i, max_l)) {
            *acc += v;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{constant_family, jacobi_shift_family, ultraspherical_family, CoefficientTable};
    use crate::quadrature::integrate;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn legendre() -> CoefficientFamily {
        constant_family(CoefficientTable::legendre(400), 2.0).unwrap()
    }

    #[test]
    fn legendre_two_by_two() {
        let j = jacobi_matrix(&legendre(), 0, 2).unwrap();
        assert_eq!(j.diag, vec![0.0, 0.0]);
        assert_relative_eq!(j.offdiag[0], 1.0 / 3f64.sqrt(), epsilon = 1e-16);
        let r = eigen_roots(&j).unwrap();
        assert_relative_eq!(r[0], -1.0 / 3f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(r[1], 1.0 / 3f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn scalar_matrix() {
        let j = JacobiMatrix::new(vec![0.37], vec![]).unwrap();
        assert_eq!(eigen_roots(&j).unwrap(), vec![0.37]);
        let f = jacobi_shift_family(0.3, -0.4).unwrap();
        let j1 = jacobi_matrix(&f, 0, 1).unwrap();
        assert!(j1.offdiag.is_empty());
        assert_eq!(j1.diag[0], f.coeff(0, 0).unwrap().a);
    }

    #[test]
    fn constructor_copies_coefficients() {
        let f = ultraspherical_family(0.5).unwrap();
        let j = jacobi_matrix(&f, 3, 3).unwrap();
        for i in 0..3 {
            assert_eq!(j.diag[i], f.coeff(3, i).unwrap().a);
        }
        for i in 0..2 {
            assert_eq!(j.offdiag[i], f.coeff(3, i + 1).unwrap().b);
        }
    }

    #[test]
    fn chebyshev_zeros() {
        let f = constant_family(CoefficientTable::chebyshev_t(600), PI).unwrap();
        for n in [1, 2, 5, 17, 100, 500] {
            let r = eigen_roots(&jacobi_matrix(&f, 0, n).unwrap()).unwrap();
            let mut exact: Vec<f64> = (1..=n)
                .map(|j| ((2 * j - 1) as f64 * PI / (2 * n) as f64).cos())
                .collect();
            exact.sort_by(f64::total_cmp);
            for (a, b) in r.iter().zip(&exact) {
                assert!((a - b).abs() < 1e-12, "n={n}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn agrees_with_dense_solver() {
        let f = jacobi_shift_family(0.3, -0.4).unwrap();
        for (k, n) in [(0, 7), (5, 30), (2, 80)] {
            let j = jacobi_matrix(&f, k, n).unwrap();
            let dense = nalgebra::DMatrix::from_fn(n, n, |r, c| {
                if r == c {
                    j.diag[r]
                } else if r + 1 == c {
                    j.offdiag[r]
                } else if c + 1 == r {
                    j.offdiag[c]
                } else {
                    0.0
                }
            });
            let mut reference: Vec<f64> = dense.symmetric_eigenvalues().iter().copied().collect();
            reference.sort_by(f64::total_cmp);
            let ours = eigen_roots(&j).unwrap();
            for (a, b) in ours.iter().zip(&reference) {
                assert!((a - b).abs() < 1e-12 * j.scale());
            }
        }
    }

    #[test]
    fn roots_strictly_increasing_and_interlacing() {
        let families = [legendre(), ultraspherical_family(1.5).unwrap(), jacobi_shift_family(0.3, -0.4).unwrap()];
        for f in &families {
            for k in [0, 4] {
                let mut prev = eigen_roots(&jacobi_matrix(f, k, 1).unwrap()).unwrap();
                for n in 2..=60 {
                    let j = jacobi_matrix(f, k, n).unwrap();
                    let cur = eigen_roots(&j).unwrap();
                    for w in cur.windows(2) {
                        assert!(w[1] - w[0] > 1e-13 * j.scale());
                    }
                    for i in 0..prev.len() {
                        assert!(cur[i] < prev[i] && prev[i] < cur[i + 1], "{} k={k} n={n}", f.name());
                    }
                    prev = cur;
                }
            }
        }
    }

    #[test]
    fn gauss_rule_basic() {
        let one = gauss_rule(&legendre(), 0, 1).unwrap();
        assert_eq!(one.nodes, vec![0.0]);
        assert_relative_eq!(one.weights[0], 2.0, epsilon = 1e-15);
        let three = gauss_rule(&legendre(), 0, 3).unwrap();
        assert_relative_eq!(three.integrate(|x| x.powi(4)), 0.4, epsilon = 1e-14);
        assert_relative_eq!(three.weights.iter().sum::<f64>(), 2.0, max_relative = 1e-12);
    }

    #[test]
    fn gauss_rule_against_beta_integral() {
        let f = ultraspherical_family(1.5).unwrap();
        let rule = gauss_rule(&f, 0, 5).unwrap();
        let numeric = integrate(|x| x * x * (1.0 - x * x), -1.0, 1.0, 1e-15);
        assert_relative_eq!(rule.integrate(|x| x * x), numeric, max_relative = 1e-12);
        assert!(rule.nodes.iter().all(|x| x.abs() < 1.0));
    }

    #[test]
    fn orthonormal_values() {
        let f = legendre();
        for &x in &[-0.8, 0.0, 0.3, 1.0] {
            let p = eval_orthonormal(&f, 0, 3, x).unwrap();
            assert_relative_eq!(p[0], 0.5f64.sqrt(), epsilon = 1e-15);
            assert_relative_eq!(p[1], 1.5f64.sqrt() * x, epsilon = 1e-15);
        }
        let g = ultraspherical_family(0.8).unwrap();
        for n in 0..12 {
            let p = eval_orthonormal(&g, 2, n, 0.37).unwrap();
            let q = eval_orthonormal(&g, 2, n, -0.37).unwrap();
            for i in 0..=n {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                assert_relative_eq!(p[i], sign * q[i], epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn orthonormality_under_gauss_rule() {
        let f = jacobi_shift_family(0.3, -0.4).unwrap();
        let rule = gauss_rule(&f, 2, 20).unwrap();
        let vals: Vec<Vec<f64>> = rule.nodes.iter().map(|&x| eval_orthonormal(&f, 2, 8, x).unwrap()).collect();
        for i in 0..=8 {
            for j in 0..=8 {
                let ip: f64 = vals.iter().zip(&rule.weights).map(|(v, w)| w * v[i] * v[j]).sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((ip - expected).abs() < 1e-12, "({i},{j}) → {ip}");
            }
        }
    }

    #[test]
    fn cd_kernel_values() {
        let f = legendre();
        assert_relative_eq!(cd_kernel_diag(&f, 0, 0, 0.42).unwrap(), 0.5, epsilon = 1e-15);
        assert_relative_eq!(cd_kernel_diag(&f, 0, 1, 1.0).unwrap(), 2.0, epsilon = 1e-14);
        for n in [0, 3, 10, 25] {
            let rule = gauss_rule(&f, 0, n + 1).unwrap();
            let total = rule.integrate(|x| cd_kernel_diag(&f, 0, n, x).unwrap());
            assert_relative_eq!(total, (n + 1) as f64, epsilon = 1e-12);
        }
    }

    #[test]
    fn local_moment_examples() {
        let f = legendre();
        assert_eq!(local_moment(&f, 0, 7, 0).unwrap(), 1.0);
        assert_relative_eq!(local_moment(&f, 0, 0, 2).unwrap(), 1.0 / 3.0, epsilon = 1e-15);
        let g = ultraspherical_family(1.5).unwrap();
        for l in [1, 3, 5, 7] {
            assert_eq!(local_moment(&g, 3, 4, l).unwrap(), 0.0);
        }
    }

    #[test]
    fn local_moments_match_gauss_rule() {
        let families = [legendre(), ultraspherical_family(1.5).unwrap(), jacobi_shift_family(0.3, -0.4).unwrap()];
        for f in &families {
            for k in 0..=10 {
                for m in 0..=8 {
                    let moments = local_moments(f, k, m, 12).unwrap();
                    let rule = gauss_rule(f, k, m + 8).unwrap();
                    for (l, &mv) in moments.iter().enumerate() {
                        let g = rule.integrate(|x| {
                            let p = eval_orthonormal(f, k, m, x).unwrap()[m];
                            x.powi(l as i32) * p * p
                        });
                        let scale = f.moment_radius().powi(l as i32).max(1.0);
                        assert!((mv - g).abs() < 1e-11 * scale, "{} k={k} m={m} l={l}: {mv} vs {g}", f.name());
                    }
                }
            }
        }
    }

    #[test]
    fn trace_power_examples() {
        let j = jacobi_matrix(&legendre(), 0, 2).unwrap();
        assert_eq!(trace_power(&j, 0), 2.0);
        assert_relative_eq!(trace_power(&j, 2), 2.0 / 3.0, epsilon = 1e-15);
        let f = jacobi_shift_family(0.3, -0.4).unwrap();
        let j = jacobi_matrix(&f, 1, 9).unwrap();
        assert_relative_eq!(trace_power(&j, 1), j.diag.iter().sum::<f64>(), epsilon = 1e-15);
    }

    #[test]
    fn trace_power_matches_root_power_sums() {
        let f = jacobi_shift_family(0.3, -0.4).unwrap();
        for dim in [1, 2, 10, 100, 300] {
            let j = jacobi_matrix(&f, 3, dim).unwrap();
            let roots = eigen_roots(&j).unwrap();
            let traces = trace_powers(&j, 12);
            for l in 0..=12 {
                let sum: f64 = roots.iter().map(|x| x.powi(l as i32)).sum();
                let tol = 1e-9 * dim as f64 * f.moment_radius().powi(l as i32);
                assert!((traces[l] - sum).abs() <= tol, "dim={dim} l={l}");
            }
        }
    }
}
