//! Doubly-indexed families of orthogonality measures, described by their
//! three-term recurrence coefficients `a_j^{(k)}`, `b_j^{(k)}`.
//!
//! The measure index `k` selects the member of the family and `j` the
//! coefficient index. Polynomials are orthonormal with
//! `p_0^{(k)} = mass(k)^{-1/2}` and
//! `x p_j = b_{j+1} p_{j+1} + a_j p_j + b_j p_{j-1}`, with `b_0 = 0`.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::csvio::{fmt_f64, write_rows};
use crate::error::{Error, Result};
use crate::quadrature::TanhSinh;
use crate::special::{lgamma, ln_beta};

/// Default number of indices scanned in each direction when estimating the
/// coefficient suprema `(A, B)`.
pub const DEFAULT_SCAN_CAP: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecurrencePair {
    pub a: f64,
    /// Zero at `j = 0` by convention.
    pub b: f64,
}

/// Finite table of recurrence coefficients; `b[0]` is the conventional zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTable {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl CoefficientTable {
    pub fn new(a: Vec<f64>, mut b: Vec<f64>) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::Validation(format!(
                "coefficient columns differ in length ({} vs {})",
                a.len(),
                b.len()
            )));
        }
        if a.is_empty() {
            return Err(Error::Validation("empty coefficient table".into()));
        }
        if let Some(j) = (1..b.len()).find(|&j| !(b[j] > 0.0 && b[j].is_finite())) {
            return Err(Error::Validation(format!("b_{j} = {} is not positive", b[j])));
        }
        if let Some(j) = a.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!("a_{j} is not finite")));
        }
        b[0] = 0.0;
        Ok(CoefficientTable { a, b })
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// Legendre (weight 1 on [−1, 1]) coefficients up to index `len − 1`.
    pub fn legendre(len: usize) -> Self {
        let b = (0..len)
            .map(|j| if j == 0 { 0.0 } else { legendre_b(j) })
            .collect();
        CoefficientTable { a: vec![0.0; len], b }
    }

    /// Chebyshev first kind (weight (1 − x²)^{−1/2}).
    pub fn chebyshev_t(len: usize) -> Self {
        let b = (0..len)
            .map(|j| match j {
                0 => 0.0,
                1 => std::f64::consts::FRAC_1_SQRT_2,
                _ => 0.5,
            })
            .collect();
        CoefficientTable { a: vec![0.0; len], b }
    }

    /// Chebyshev second kind (weight (1 − x²)^{1/2}).
    pub fn chebyshev_u(len: usize) -> Self {
        let b = (0..len).map(|j| if j == 0 { 0.0 } else { 0.5 }).collect();
        CoefficientTable { a: vec![0.0; len], b }
    }

    /// Write as CSV with header `j,a,b`.
    pub fn write_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let rows: Vec<Vec<String>> = (0..self.len())
            .map(|j| vec![j.to_string(), fmt_f64(self.a[j]), fmt_f64(self.b[j])])
            .collect();
        write_rows(path, &["j", "a", "b"], &rows)
    }

    pub fn read_csv<P: AsRef<Path>>(path: P) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            j: usize,
            a: f64,
            b: f64,
        }
        let mut reader = csv::Reader::from_path(path)?;
        let mut a = Vec::new();
        let mut b = Vec::new();
        for (i, row) in reader.deserialize::<Row>().enumerate() {
            let row = row?;
            if row.j != i {
                return Err(Error::Validation(format!("row {i} carries index j = {}", row.j)));
            }
            a.push(row.a);
            b.push(row.b);
        }
        CoefficientTable::new(a, b)
    }
}

fn legendre_b(j: usize) -> f64 {
    let j = j as f64;
    j / (4.0 * j * j - 1.0).sqrt()
}

#[derive(Debug, Clone)]
enum Source {
    Ultraspherical { lambda: f64 },
    JacobiShift { lambda1: f64, lambda2: f64 },
    Constant { table: CoefficientTable, mass: f64, limits: Option<(f64, f64)> },
}

/// A family of measures `μ^{(k)}`, `k ≥ 0`, given by recurrence coefficients.
#[derive(Debug, Clone)]
pub struct CoefficientFamily {
    name: String,
    params: Vec<(String, f64)>,
    source: Source,
    support_bound: f64,
    bounds: (f64, f64),
    scan_cap: usize,
}

impl CoefficientFamily {
    fn build(name: &str, params: Vec<(String, f64)>, source: Source, scan_cap: usize) -> Result<Self> {
        let mut family = CoefficientFamily {
            name: name.to_string(),
            params,
            source,
            support_bound: 1.0,
            bounds: (0.0, 0.0),
            scan_cap,
        };
        family.bounds = family.scan_bounds()?;
        if let Source::Constant { .. } = family.source {
            family.support_bound = family.bounds.0 + 2.0 * family.bounds.1;
        }
        Ok(family)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn params(&self) -> &[(String, f64)] {
        &self.params
    }

    /// Radius `R` with `supp μ^{(k)} ⊆ [−R, R]` for every `k`.
    pub fn support_bound(&self) -> f64 {
        self.support_bound
    }

    /// Scanned suprema `(A, B)` of `|a|` and `b`.
    pub fn coeff_bounds(&self) -> (f64, f64) {
        self.bounds
    }

    /// `A + 2B`, the radius that confines every mean measure.
    pub fn moment_radius(&self) -> f64 {
        self.bounds.0 + 2.0 * self.bounds.1
    }

    pub fn scan_cap(&self) -> usize {
        self.scan_cap
    }

    /// Rebuild with a different scan range for `(A, B)`.
    pub fn with_scan_cap(self, cap: usize) -> Result<Self> {
        let CoefficientFamily { name, params, source, .. } = self;
        CoefficientFamily::build(&name, params, source, cap.max(1))
    }

    /// Largest coefficient index the family can evaluate, if finite.
    pub fn max_index(&self) -> Option<usize> {
        match &self.source {
            Source::Constant { table, .. } => Some(table.len() - 1),
            _ => None,
        }
    }

    /// Coefficient pair `(a_j^{(k)}, b_j^{(k)})`.
    pub fn coeff(&self, k: usize, j: usize) -> Result<RecurrencePair> {
        match &self.source {
            Source::Ultraspherical { lambda } => Ok(RecurrencePair {
                a: 0.0,
                b: ultraspherical_b(k as f64 + lambda, j),
            }),
            Source::JacobiShift { lambda1, lambda2 } => {
                Ok(jacobi_pair(lambda1 + k as f64, lambda2 + k as f64, j))
            }
            Source::Constant { table, .. } => {
                if j >= table.len() {
                    return Err(Error::IndexOutOfRange { index: j, len: table.len() });
                }
                Ok(RecurrencePair { a: table.a[j], b: table.b[j] })
            }
        }
    }

    /// Total mass `μ^{(k)}(ℝ)`.
    pub fn mass(&self, k: usize) -> f64 {
        match &self.source {
            Source::Ultraspherical { lambda } => ultraspherical_mass(k as f64 + lambda),
            Source::JacobiShift { lambda1, lambda2 } => {
                jacobi_mass(lambda1 + k as f64, lambda2 + k as f64)
            }
            Source::Constant { mass, .. } => *mass,
        }
    }

    /// Weight function of `μ^{(k)}` on `[−1, 1]`, when the family has one in
    /// closed form, called as `w(x, 1 + x, 1 − x)` so endpoint gaps stay exact.
    pub fn weight(&self, k: usize) -> Option<impl Fn(f64, f64, f64) -> f64> {
        let (alpha, beta) = match &self.source {
            Source::Ultraspherical { lambda } => {
                let e = k as f64 + lambda - 0.5;
                (e, e)
            }
            Source::JacobiShift { lambda1, lambda2 } => (lambda1 + k as f64, lambda2 + k as f64),
            Source::Constant { .. } => return None,
        };
        Some(move |_x: f64, dl: f64, dr: f64| dr.powf(alpha) * dl.powf(beta))
    }

    /// Nevai limits `(a, b)` of a single replicated measure: exact for
    /// presets, otherwise estimated from the last table row. Only constant
    /// families carry them.
    pub fn nevai_limits(&self) -> Option<(f64, f64)> {
        match &self.source {
            Source::Constant { limits: Some(l), .. } => Some(*l),
            Source::Constant { table, .. } => {
                let last = table.len() - 1;
                Some((table.a[last], table.b[last]))
            }
            _ => None,
        }
    }

    /// True when every `a_j^{(k)}` vanishes identically.
    pub fn is_symmetric(&self) -> bool {
        match &self.source {
            Source::Ultraspherical { .. } => true,
            Source::JacobiShift { lambda1, lambda2 } => lambda1 == lambda2,
            Source::Constant { table, .. } => table.a.iter().all(|&a| a == 0.0),
        }
    }

    fn scan_bounds(&self) -> Result<(f64, f64)> {
        let (k_range, j_range) = match &self.source {
            Source::Constant { table, .. } => (1, table.len()),
            _ => (self.scan_cap + 1, self.scan_cap + 1),
        };
        let mut sup_a: f64 = 0.0;
        let mut sup_b: f64 = 0.0;
        for k in 0..k_range {
            for j in 0..j_range {
                let p = self.coeff(k, j)?;
                sup_a = sup_a.max(p.a.abs());
                sup_b = sup_b.max(p.b);
            }
        }
        Ok((sup_a, sup_b))
    }
}

/// `b_j` for the ultraspherical weight `(1 − x²)^{μ − 1/2}`.
fn ultraspherical_b(mu: f64, j: usize) -> f64 {
    if j == 0 {
        return 0.0;
    }
    if j == 1 && mu == 0.0 {
        // Chebyshev limit of the 0/0 expression
        return std::f64::consts::FRAC_1_SQRT_2;
    }
    let j = j as f64;
    0.5 * (j * (j + 2.0 * mu - 1.0) / ((j + mu - 1.0) * (j + mu))).sqrt()
}

fn ultraspherical_mass(mu: f64) -> f64 {
    (0.5 * PI.ln() + lgamma(mu + 0.5) - lgamma(mu + 1.0)).exp()
}

/// Orthonormal Jacobi coefficients for the weight `(1 − x)^α (1 + x)^β`.
fn jacobi_pair(alpha: f64, beta: f64, j: usize) -> RecurrencePair {
    let s = alpha + beta;
    let a = if j == 0 {
        (beta - alpha) / (s + 2.0)
    } else {
        let t = 2.0 * j as f64 + s;
        (beta * beta - alpha * alpha) / (t * (t + 2.0))
    };
    let b = match j {
        0 => 0.0,
        1 => (4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + s).powi(2) * (3.0 + s))).sqrt(),
        _ => {
            let n = j as f64;
            let t = 2.0 * n + s;
            (4.0 * n * (n + alpha) * (n + beta) * (n + s) / (t * t * (t + 1.0) * (t - 1.0))).sqrt()
        }
    };
    RecurrencePair { a, b }
}

fn jacobi_mass(alpha: f64, beta: f64) -> f64 {
    ((alpha + beta + 1.0) * std::f64::consts::LN_2 + ln_beta(alpha + 1.0, beta + 1.0)).exp()
}

/// Family with measures `(1 − x²)^{k + λ − 1/2}` on `[−1, 1]`.
pub fn ultraspherical_family(lambda: f64) -> Result<CoefficientFamily> {
    ultraspherical_family_with_cap(lambda, DEFAULT_SCAN_CAP)
}

pub fn ultraspherical_family_with_cap(lambda: f64, scan_cap: usize) -> Result<CoefficientFamily> {
    if !(lambda > -0.5) || !lambda.is_finite() {
        return Err(Error::Config(format!("ultraspherical family needs λ > −1/2, got {lambda}")));
    }
    CoefficientFamily::build(
        "ultraspherical",
        vec![("lambda".into(), lambda)],
        Source::Ultraspherical { lambda },
        scan_cap,
    )
}

/// Family with measures `(1 − x²)^k (1 − x)^{λ₁} (1 + x)^{λ₂}` on `[−1, 1]`.
pub fn jacobi_shift_family(lambda1: f64, lambda2: f64) -> Result<CoefficientFamily> {
    jacobi_shift_family_with_cap(lambda1, lambda2, DEFAULT_SCAN_CAP)
}

pub fn jacobi_shift_family_with_cap(lambda1: f64, lambda2: f64, scan_cap: usize) -> Result<CoefficientFamily> {
    if !(lambda1 > -1.0 && lambda2 > -1.0) || !lambda1.is_finite() || !lambda2.is_finite() {
        return Err(Error::Config(format!(
            "jacobi_shift family needs λ₁, λ₂ > −1, got ({lambda1}, {lambda2})"
        )));
    }
    CoefficientFamily::build(
        "jacobi_shift",
        vec![("lambda1".into(), lambda1), ("lambda2".into(), lambda2)],
        Source::JacobiShift { lambda1, lambda2 },
        scan_cap,
    )
}

/// One measure replicated across every `k`.
pub fn constant_family(table: CoefficientTable, mass: f64) -> Result<CoefficientFamily> {
    build_constant(table, mass, None)
}

/// As [`constant_family`], with the Nevai limits `(a, b)` known exactly.
pub fn constant_family_with_limits(table: CoefficientTable, mass: f64, limits: (f64, f64)) -> Result<CoefficientFamily> {
    if !(limits.1 > 0.0 && limits.0.is_finite() && limits.1.is_finite()) {
        return Err(Error::Validation(format!("Nevai limits must have b > 0, got {limits:?}")));
    }
    build_constant(table, mass, Some(limits))
}

fn build_constant(table: CoefficientTable, mass: f64, limits: Option<(f64, f64)>) -> Result<CoefficientFamily> {
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::Validation(format!("mass must be positive and finite, got {mass}")));
    }
    // re-run validation in case the table was assembled by hand
    let table = CoefficientTable::new(table.a, table.b)?;
    CoefficientFamily::build(
        "constant",
        vec![("mass".into(), mass), ("len".into(), table.len() as f64)],
        Source::Constant { table, mass, limits },
        DEFAULT_SCAN_CAP,
    )
}

/// Recurrence coefficients of `weight` on `support` by the discretized
/// Stieltjes procedure over a dense tanh-sinh rule. The weight is called as
/// `weight(x, x − lo, hi − x)`.
pub fn stieltjes_coefficients(
    weight: impl Fn(f64, f64, f64) -> f64,
    support: (f64, f64),
    count: usize,
) -> Result<CoefficientTable> {
    let (lo, hi) = support;
    if count == 0 {
        return Err(Error::Numeric("coefficient count must be at least 1".into()));
    }
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Numeric(format!("degenerate support [{lo}, {hi}]")));
    }
    let rule = TanhSinh::new(lo, hi, 1.0 / 64.0);
    let w: Vec<f64> = rule
        .weights
        .iter()
        .zip(&rule.nodes)
        .zip(&rule.gaps)
        .map(|((&q, &xi), &(dl, dr))| q * weight(xi, dl, dr))
        .collect();
    let x = rule.nodes;
    if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::Numeric("weight is negative or not finite on the support".into()));
    }
    let mass: f64 = w.iter().sum();
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::Numeric("weight has zero or infinite total mass".into()));
    }

    let mut a = Vec::with_capacity(count);
    let mut b = vec![0.0];
    let mut prev = vec![0.0; x.len()];
    let mut cur = vec![1.0 / mass.sqrt(); x.len()];
    for j in 0..count {
        let aj: f64 = (0..x.len()).map(|i| w[i] * x[i] * cur[i] * cur[i]).sum();
        a.push(aj);
        if j + 1 == count {
            break;
        }
        let bj = b[j];
        let mut next: Vec<f64> = (0..x.len()).map(|i| (x[i] - aj) * cur[i] - bj * prev[i]).collect();
        // one pass of re-orthogonalization against the last two vectors
        for basis in [&cur, &prev] {
            let c: f64 = (0..x.len()).map(|i| w[i] * next[i] * basis[i]).sum();
            next.iter_mut().zip(basis.iter()).for_each(|(v, &p)| *v -= c * p);
        }
        let norm = (0..x.len()).map(|i| w[i] * next[i] * next[i]).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(Error::Numeric(format!("discrete measure exhausted at index {}", j + 1)));
        }
        next.iter_mut().for_each(|v| *v /= norm);
        b.push(norm);
        prev = std::mem::replace(&mut cur, next);
    }
    Ok(CoefficientTable { a, b })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NevaiRow {
    pub n: usize,
    pub sup_a_dev: f64,
    pub sup_b_dev: f64,
}

#[derive(Debug, Clone)]
pub struct NevaiReport {
    pub rows: Vec<NevaiRow>,
    /// Both suprema are non-increasing in `n` from `onset` on.
    pub decreasing_after_onset: bool,
}

/// `sup_{k ≤ k_max} |a_n^{(k)} − a|` and the `b` analogue for `n = 1..=n_max`.
pub fn uniform_nevai_report(
    family: &CoefficientFamily,
    a: f64,
    b: f64,
    n_max: usize,
    k_max: usize,
    onset: usize,
) -> Result<NevaiReport> {
    if n_max == 0 || k_max == 0 {
        return Err(Error::Config("n_max and k_max must be at least 1".into()));
    }
    let mut rows = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let mut sup_a: f64 = 0.0;
        let mut sup_b: f64 = 0.0;
        for k in 0..=k_max {
            let p = family.coeff(k, n)?;
            sup_a = sup_a.max((p.a - a).abs());
            sup_b = sup_b.max((p.b - b).abs());
        }
        rows.push(NevaiRow { n, sup_a_dev: sup_a, sup_b_dev: sup_b });
    }
    let decreasing_after_onset = rows
        .windows(2)
        .filter(|w| w[0].n >= onset)
        .all(|w| w[1].sup_a_dev <= w[0].sup_a_dev && w[1].sup_b_dev <= w[0].sup_b_dev);
    Ok(NevaiReport { rows, decreasing_after_onset })
}

/// Preset replicated measures for [`FamilySpec::Constant`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstantPreset {
    Legendre,
    ChebyshevT,
    ChebyshevU,
}

impl ConstantPreset {
    pub fn table(self, len: usize) -> CoefficientTable {
        match self {
            ConstantPreset::Legendre => CoefficientTable::legendre(len),
            ConstantPreset::ChebyshevT => CoefficientTable::chebyshev_t(len),
            ConstantPreset::ChebyshevU => CoefficientTable::chebyshev_u(len),
        }
    }

    /// All presets lie in the Nevai class `M(0, 1/2)`.
    pub fn limits(self) -> (f64, f64) {
        (0.0, 0.5)
    }

    pub fn mass(self) -> f64 {
        match self {
            ConstantPreset::Legendre => 2.0,
            ConstantPreset::ChebyshevT => PI,
            ConstantPreset::ChebyshevU => 0.5 * PI,
        }
    }
}

/// Serializable description of a family: `{"kind": "...", "params": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum FamilySpec {
    Ultraspherical {
        lambda: f64,
    },
    JacobiShift {
        lambda1: f64,
        lambda2: f64,
    },
    Constant {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        preset: Option<ConstantPreset>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        len: Option<usize>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        a: Vec<f64>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        b: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mass: Option<f64>,
    },
    Table {
        path: PathBuf,
        mass: f64,
    },
}

impl FamilySpec {
    /// Check parameter ranges without building anything.
    pub fn validate(&self) -> Result<()> {
        match self {
            FamilySpec::Ultraspherical { lambda } if !(*lambda > -0.5) => Err(Error::Config(format!(
                "ultraspherical family needs λ > −1/2, got {lambda}"
            ))),
            FamilySpec::JacobiShift { lambda1, lambda2 } if !(*lambda1 > -1.0 && *lambda2 > -1.0) => {
                Err(Error::Config(format!(
                    "jacobi_shift family needs λ₁, λ₂ > −1, got ({lambda1}, {lambda2})"
                )))
            }
            FamilySpec::Constant { preset: None, a, .. } if a.is_empty() => Err(Error::Config(
                "constant family needs either a preset or explicit a/b columns".into(),
            )),
            FamilySpec::Table { mass, .. } if !(*mass > 0.0) => {
                Err(Error::Config(format!("table family mass must be positive, got {mass}")))
            }
            _ => Ok(()),
        }
    }

    /// Build the family. `min_len` is the number of coefficient indices a
    /// preset table must provide.
    pub fn build(&self, min_len: usize) -> Result<CoefficientFamily> {
        self.validate()?;
        match self {
            FamilySpec::Ultraspherical { lambda } => ultraspherical_family(*lambda),
            FamilySpec::JacobiShift { lambda1, lambda2 } => jacobi_shift_family(*lambda1, *lambda2),
            FamilySpec::Constant { preset: Some(p), len, mass, .. } => {
                let len = len.unwrap_or(0).max(min_len).max(2);
                constant_family_with_limits(p.table(len), mass.unwrap_or_else(|| p.mass()), p.limits())
            }
            FamilySpec::Constant { preset: None, a, b, mass, .. } => {
                let mass = mass.ok_or_else(|| Error::Config("constant family needs a mass".into()))?;
                constant_family(CoefficientTable::new(a.clone(), b.clone())?, mass)
            }
            FamilySpec::Table { path, mass } => constant_family(CoefficientTable::read_csv(path)?, *mass),
        }
    }
}
