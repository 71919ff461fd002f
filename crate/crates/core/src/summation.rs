//! Triangular summation schemes `S_n(y) = Σ_{k ≤ n} σ_{n,k} y_k`.
//!
//! Nörlund methods factor as `σ_{n,k} = τ_n σ_{n−k}`. Their tables are built
//! eagerly up to a fixed `n_max`; queries past it panic.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::rising_binomial;

/// Row-sum tolerance for regularity condition (ii).
pub const ROW_SUM_TOL: f64 = 1e-12;

pub trait SummationMethod {
    fn name(&self) -> String;

    /// `σ_{n,k}` for `0 ≤ k ≤ n`.
    fn weight(&self, n: usize, k: usize) -> f64;
}

/// Summation method given by an arbitrary weight closure.
pub struct FnMethod<F> {
    name: String,
    weight: F,
}

impl<F: Fn(usize, usize) -> f64> FnMethod<F> {
    pub fn new(name: impl Into<String>, weight: F) -> Self {
        FnMethod { name: name.into(), weight }
    }
}

impl<F: Fn(usize, usize) -> f64> SummationMethod for FnMethod<F> {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn weight(&self, n: usize, k: usize) -> f64 {
        (self.weight)(n, k)
    }
}

/// Closed forms known for a built-in Nörlund method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum NorlundKind {
    Identity,
    Arithmetic,
    Legendre,
    Cesaro { alpha: f64 },
    Gegenbauer { nu: f64 },
    Custom,
}

#[derive(Debug, Clone)]
pub struct NorlundMethod {
    kind: NorlundKind,
    sigma: Vec<f64>,
    tau: Vec<f64>,
    normalizer: Vec<f64>,
}

impl NorlundMethod {
    /// Normalize so that `σ_0 = 1` and build `τ_n = (Σ_{k ≤ n} σ_k)^{-1}`
    /// and `N_n = τ_n Σ_{k ≤ n} 1/τ_k` for `n < sigma.len()`.
    pub fn from_sigma(sigma: Vec<f64>) -> Result<Self> {
        Self::with_kind(NorlundKind::Custom, sigma)
    }

    fn with_kind(kind: NorlundKind, sigma: Vec<f64>) -> Result<Self> {
        let Some(&s0) = sigma.first() else {
            return Err(Error::Config("σ sequence is empty".into()));
        };
        if !(s0 > 0.0 && s0.is_finite()) {
            return Err(Error::Config(format!("σ_0 must be positive, got {s0}")));
        }
        let sigma: Vec<f64> = sigma.into_iter().map(|s| s / s0).collect();
        let mut tau = Vec::with_capacity(sigma.len());
        let mut normalizer = Vec::with_capacity(sigma.len());
        let mut prefix = 0.0;
        let mut inv_tau_sum = 0.0;
        for &s in &sigma {
            prefix += s;
            let t = 1.0 / prefix;
            inv_tau_sum += prefix;
            tau.push(t);
            normalizer.push(t * inv_tau_sum);
        }
        Ok(NorlundMethod { kind, sigma, tau, normalizer })
    }

    pub fn kind(&self) -> NorlundKind {
        self.kind
    }

    /// Largest `n` covered by the precomputed tables.
    pub fn n_max(&self) -> usize {
        self.sigma.len() - 1
    }

    pub fn sigma_seq(&self, k: usize) -> f64 {
        self.sigma[k]
    }

    pub fn tau(&self, n: usize) -> f64 {
        self.tau[n]
    }

    pub fn normalizer(&self, n: usize) -> f64 {
        self.normalizer[n]
    }

    /// Closed-form `τ_n`, for methods that have one.
    pub fn closed_form_tau(&self, n: usize) -> Option<f64> {
        let nf = n as f64;
        match self.kind {
            NorlundKind::Identity => Some(1.0),
            NorlundKind::Arithmetic => Some(1.0 / (nf + 1.0)),
            NorlundKind::Legendre => Some(1.0 / (2.0 * nf + 1.0)),
            NorlundKind::Cesaro { alpha } => Some(1.0 / rising_binomial(n, alpha)),
            NorlundKind::Gegenbauer { nu } => {
                // Γ(2ν+1) Γ(n+1) / ((2n+2ν) Γ(n+2ν)) as a running product
                let ratio = (1..=n).fold(1.0, |acc, j| acc * j as f64 / (2.0 * nu + j as f64 - 1.0));
                Some(2.0 * nu / (2.0 * nf + 2.0 * nu) * ratio)
            }
            NorlundKind::Custom => None,
        }
    }

    /// Closed-form `N_n`, for methods that have one.
    pub fn closed_form_normalizer(&self, n: usize) -> Option<f64> {
        let nf = n as f64;
        match self.kind {
            NorlundKind::Identity => Some(nf + 1.0),
            NorlundKind::Arithmetic => Some((nf + 2.0) / 2.0),
            NorlundKind::Legendre => Some((nf + 1.0).powi(2) / (2.0 * nf + 1.0)),
            NorlundKind::Cesaro { alpha } => Some((nf + alpha + 1.0) / (alpha + 1.0)),
            NorlundKind::Gegenbauer { nu } => {
                Some((2.0 * nf + 2.0 * nu + 1.0) * (nf + 2.0 * nu) / ((2.0 * nf + 2.0 * nu) * (2.0 * nu + 1.0)))
            }
            NorlundKind::Custom => None,
        }
    }

    /// Read a custom `σ` sequence from CSV with header `k,sigma`.
    pub fn read_sigma_csv<P: AsRef<Path>>(path: P) -> Result<Vec<f64>> {
        #[derive(Deserialize)]
        struct Row {
            k: usize,
            sigma: f64,
        }
        let mut reader = csv::Reader::from_path(path)?;
        let mut out = Vec::new();
        for (i, row) in reader.deserialize::<Row>().enumerate() {
            let row = row?;
            if row.k != i {
                return Err(Error::Validation(format!("row {i} carries index k = {}", row.k)));
            }
            out.push(row.sigma);
        }
        Ok(out)
    }
}

impl SummationMethod for NorlundMethod {
    fn name(&self) -> String {
        match self.kind {
            NorlundKind::Identity => "identity".into(),
            NorlundKind::Arithmetic => "arithmetic".into(),
            NorlundKind::Legendre => "legendre".into(),
            NorlundKind::Cesaro { alpha } => format!("cesaro({alpha})"),
            NorlundKind::Gegenbauer { nu } => format!("gegenbauer({nu})"),
            NorlundKind::Custom => "custom".into(),
        }
    }

    fn weight(&self, n: usize, k: usize) -> f64 {
        assert!(k <= n, "σ_{{n,k}} needs k ≤ n");
        assert!(n <= self.n_max(), "n = {n} exceeds the precomputed range {}", self.n_max());
        self.tau[n] * self.sigma[n - k]
    }
}

/// `σ = (1, 0, 0, …)`: the identity scheme `σ_{n,k} = δ_{nk}`.
pub fn identity(n_max: usize) -> NorlundMethod {
    let mut sigma = vec![0.0; n_max + 1];
    sigma[0] = 1.0;
    NorlundMethod::with_kind(NorlundKind::Identity, sigma).expect("σ_0 = 1")
}

/// Arithmetic mean `σ_{n,k} = 1/(n+1)`.
pub fn arithmetic(n_max: usize) -> NorlundMethod {
    NorlundMethod::with_kind(NorlundKind::Arithmetic, vec![1.0; n_max + 1]).expect("σ_0 = 1")
}

/// Legendre summation, `σ = (1, 2, 2, …)`.
pub fn legendre(n_max: usize) -> NorlundMethod {
    let sigma = (0..=n_max).map(|k| if k == 0 { 1.0 } else { 2.0 }).collect();
    NorlundMethod::with_kind(NorlundKind::Legendre, sigma).expect("σ_0 = 1")
}

/// Cesàro `(C, α)`: `σ_k = C(k + α − 1, k)`.
pub fn cesaro(alpha: f64, n_max: usize) -> Result<NorlundMethod> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Config(format!("Cesàro summation needs α > 0, got {alpha}")));
    }
    let sigma = cesaro_sigma(alpha, n_max);
    NorlundMethod::with_kind(NorlundKind::Cesaro { alpha }, sigma)
}

fn cesaro_sigma(alpha: f64, n_max: usize) -> Vec<f64> {
    let mut sigma = Vec::with_capacity(n_max + 1);
    let mut s = 1.0;
    sigma.push(s);
    for k in 1..=n_max {
        let kf = k as f64;
        s *= (kf + alpha - 1.0) / kf;
        sigma.push(s);
    }
    sigma
}

/// Gegenbauer `(G, ν)`: `σ_k = (2k + 2ν − 1) Γ(k + 2ν − 1) / (Γ(2ν) Γ(k + 1))`.
/// `ν = 1/2` is the Legendre method.
pub fn gegenbauer(nu: f64, n_max: usize) -> Result<NorlundMethod> {
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::Config(format!("Gegenbauer summation needs ν > 0, got {nu}")));
    }
    let sigma = if nu == 0.5 {
        legendre(n_max).sigma
    } else {
        // Γ(k + 2ν − 1) / (Γ(2ν) k!) = Π_{j=0}^{k−2} (2ν + j) / k!  for k ≥ 1
        let mut sigma = Vec::with_capacity(n_max + 1);
        sigma.push(1.0);
        let mut ratio = 1.0; // Π_{j=0}^{k−2}(2ν + j) / (k − 1)!
        for k in 1..=n_max {
            let kf = k as f64;
            if k >= 2 {
                ratio *= (2.0 * nu + kf - 2.0) / (kf - 1.0);
            }
            sigma.push((2.0 * kf + 2.0 * nu - 1.0) * ratio / kf);
        }
        sigma
    };
    NorlundMethod::with_kind(NorlundKind::Gegenbauer { nu }, sigma)
}

/// Riesz-type method `τ_{n,k} = (τ_n / N_n) / τ_k` derived from a Nörlund method.
#[derive(Debug, Clone)]
pub struct RieszDerived<'a> {
    source: &'a NorlundMethod,
}

pub fn riesz_derived(source: &NorlundMethod) -> RieszDerived<'_> {
    RieszDerived { source }
}

impl SummationMethod for RieszDerived<'_> {
    fn name(&self) -> String {
        format!("riesz[{}]", self.source.name())
    }

    fn weight(&self, n: usize, k: usize) -> f64 {
        assert!(k <= n);
        self.source.tau(n) / (self.source.normalizer(n) * self.source.tau(k))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularityReport {
    pub n_max: usize,
    pub max_row_sum_error: f64,
    /// `max_{k ≤ col_onset} σ_{n_max, k}`.
    pub column_max: f64,
    /// `σ_{n_max,k} / σ_{⌊n_max/2⌋,k}` for `k ≤ col_onset` (NaN where the denominator vanishes).
    pub decay_ratios: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RegularityViolation {
    Negative { n: usize, k: usize, value: f64 },
    RowSum { n: usize, sum: f64 },
}

impl std::fmt::Display for RegularityViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RegularityViolation::Negative { n, k, value } => {
                write!(f, "negative weight σ_{{{n},{k}}} = {value}")
            }
            RegularityViolation::RowSum { n, sum } => write!(f, "row {n} sums to {sum}"),
        }
    }
}

/// Check non-negativity and unit row sums for every `n ≤ n_max`, and
/// report the column decay at `n_max` as a finite stand-in for
/// `σ_{n,k} → 0`.
pub fn regularity_check(
    method: &dyn SummationMethod,
    n_max: usize,
    col_onset: usize,
) -> std::result::Result<RegularityReport, RegularityViolation> {
    let mut max_err: f64 = 0.0;
    for n in 0..=n_max {
        let mut sum = 0.0;
        for k in 0..=n {
            let w = method.weight(n, k);
            if !(w >= 0.0) {
                return Err(RegularityViolation::Negative { n, k, value: w });
            }
            sum += w;
        }
        let err = (sum - 1.0).abs();
        if !(err <= ROW_SUM_TOL) {
            return Err(RegularityViolation::RowSum { n, sum });
        }
        max_err = max_err.max(err);
    }
    let half = n_max / 2;
    let cols = col_onset.min(half);
    let column_max = (0..=cols).map(|k| method.weight(n_max, k)).fold(0.0, f64::max);
    let decay_ratios = (0..=cols)
        .map(|k| {
            let d = method.weight(half, k);
            if d > 0.0 {
                method.weight(n_max, k) / d
            } else {
                f64::NAN
            }
        })
        .collect();
    Ok(RegularityReport { n_max, max_row_sum_error: max_err, column_max, decay_ratios })
}

/// Serializable method description:
/// `{"method": "cesaro", "alpha": 2}` and friends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSpec {
    pub method: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_file: Option<std::path::PathBuf>,
    /// Inline custom σ sequence, used when no file is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Vec<f64>>,
}

impl MethodSpec {
    pub fn named(method: &str) -> Self {
        MethodSpec { method: method.into(), alpha: None, nu: None, sigma_file: None, sigma: None }
    }

    pub fn validate(&self) -> Result<()> {
        match self.method.as_str() {
            "identity" | "arithmetic" | "legendre" => Ok(()),
            "cesaro" => match self.alpha {
                Some(a) if a > 0.0 => Ok(()),
                other => Err(Error::Config(format!("cesaro needs alpha > 0, got {other:?}"))),
            },
            "gegenbauer" => match self.nu {
                Some(v) if v > 0.0 => Ok(()),
                other => Err(Error::Config(format!("gegenbauer needs nu > 0, got {other:?}"))),
            },
            "custom" => {
                if self.sigma_file.is_none() && self.sigma.is_none() {
                    Err(Error::Config("custom method needs sigma_file or sigma".into()))
                } else {
                    Ok(())
                }
            }
            other => Err(Error::Config(format!("unknown summation method {other:?}"))),
        }
    }

    /// Build with tables covering `n ≤ n_max`.
    pub fn build(&self, n_max: usize) -> Result<NorlundMethod> {
        self.validate()?;
        match self.method.as_str() {
            "identity" => Ok(identity(n_max)),
            "arithmetic" => Ok(arithmetic(n_max)),
            "legendre" => Ok(legendre(n_max)),
            "cesaro" => cesaro(self.alpha.unwrap_or_default(), n_max),
            "gegenbauer" => gegenbauer(self.nu.unwrap_or_default(), n_max),
            _ => {
                let mut sigma = match (&self.sigma_file, &self.sigma) {
                    (Some(path), _) => NorlundMethod::read_sigma_csv(path)?,
                    (None, Some(s)) => s.clone(),
                    (None, None) => unreachable!("validated above"),
                };
                if sigma.len() <= n_max {
                    return Err(Error::Config(format!(
                        "custom σ sequence has {} entries, need {}",
                        sigma.len(),
                        n_max + 1
                    )));
                }
                sigma.truncate(n_max + 1);
                NorlundMethod::from_sigma(sigma)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn builtins(n_max: usize) -> Vec<NorlundMethod> {
        vec![
            identity(n_max),
            arithmetic(n_max),
            legendre(n_max),
            cesaro(0.5, n_max).unwrap(),
            cesaro(2.0, n_max).unwrap(),
            cesaro(3.0, n_max).unwrap(),
            gegenbauer(0.25, n_max).unwrap(),
            gegenbauer(1.0, n_max).unwrap(),
            gegenbauer(2.0, n_max).unwrap(),
        ]
    }

    #[test]
    fn arithmetic_closed_forms() {
        let m = NorlundMethod::from_sigma(vec![1.0; 50]).unwrap();
        for n in 0..50 {
            assert_relative_eq!(m.tau(n), 1.0 / (n as f64 + 1.0), max_relative = 1e-14);
            assert_relative_eq!(m.normalizer(n), (n as f64 + 2.0) / 2.0, max_relative = 1e-14);
        }
        let r = regularity_check(&arithmetic(100), 100, 3).unwrap();
        assert_relative_eq!(arithmetic(100).weight(100, 3), 1.0 / 101.0, epsilon = 1e-16);
        assert!(r.column_max <= 1.0 / 101.0 + 1e-16);
    }

    #[test]
    fn legendre_closed_forms() {
        let sigma = (0..40).map(|k| if k == 0 { 1.0 } else { 2.0 }).collect();
        let m = NorlundMethod::from_sigma(sigma).unwrap();
        for n in 0..40 {
            let nf = n as f64;
            assert_relative_eq!(m.tau(n), 1.0 / (2.0 * nf + 1.0), max_relative = 1e-14);
            assert_relative_eq!(m.normalizer(n), (nf + 1.0).powi(2) / (2.0 * nf + 1.0), max_relative = 1e-14);
        }
    }

    #[test]
    fn identity_as_norlund() {
        let m = identity(30);
        for n in 0..=30 {
            assert_eq!(m.tau(n), 1.0);
            assert_relative_eq!(m.normalizer(n), n as f64 + 1.0, max_relative = 1e-15);
            for k in 0..=n {
                assert_eq!(m.weight(n, k), if k == n { 1.0 } else { 0.0 });
            }
        }
        let r = regularity_check(&m, 30, 5).unwrap();
        assert_eq!(r.column_max, 0.0);
    }

    #[test]
    fn normalization_to_unit_sigma0() {
        let m = NorlundMethod::from_sigma(vec![2.0, 4.0, 6.0]).unwrap();
        assert_eq!(m.sigma_seq(0), 1.0);
        assert_eq!(m.tau(0), 1.0);
        assert!(matches!(NorlundMethod::from_sigma(vec![0.0, 1.0]), Err(Error::Config(_))));
    }

    #[test]
    fn row_sum_violation_reported() {
        let bad = FnMethod::new("bad", |n, k| if k == n { 1.5 } else { 0.0 });
        match regularity_check(&bad, 10, 1) {
            Err(RegularityViolation::RowSum { n, .. }) => assert_eq!(n, 0),
            other => panic!("expected row-sum failure, got {other:?}"),
        }
        let neg = NorlundMethod::from_sigma(vec![1.0, -0.5, 1.0, 1.0]).unwrap();
        match regularity_check(&neg, 3, 1) {
            Err(RegularityViolation::Negative { n, k, .. }) => assert_eq!((n, k), (1, 0)),
            other => panic!("expected negative weight, got {other:?}"),
        }
    }

    #[test]
    fn riesz_examples() {
        let a = arithmetic(60);
        let r = riesz_derived(&a);
        for n in 0..=60 {
            for k in 0..=n {
                let expected = 2.0 * (k as f64 + 1.0) / ((n as f64 + 1.0) * (n as f64 + 2.0));
                assert_relative_eq!(r.weight(n, k), expected, max_relative = 1e-13);
            }
        }
        let id = identity(20);
        let r = riesz_derived(&id);
        for k in 0..=20 {
            assert_relative_eq!(r.weight(20, k), 1.0 / 21.0, max_relative = 1e-14);
        }
    }

    #[test]
    fn cesaro_examples() {
        let c1 = cesaro(1.0, 10).unwrap();
        for k in 0..=10 {
            assert_relative_eq!(c1.weight(10, k), 1.0 / 11.0, max_relative = 1e-14);
        }
        let c2 = cesaro(2.0, 10).unwrap();
        assert_relative_eq!(c2.weight(2, 0), 0.5, max_relative = 1e-15);
        assert_relative_eq!(c2.weight(2, 1), 1.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(c2.weight(2, 2), 1.0 / 6.0, max_relative = 1e-15);
        for n in 0..=10 {
            assert_relative_eq!(c2.normalizer(n), (n as f64 + 3.0) / 3.0, max_relative = 1e-14);
        }
        assert!(cesaro(0.0, 3).is_err());
    }

    #[test]
    fn gegenbauer_examples() {
        let g = gegenbauer(0.5, 5).unwrap();
        assert_eq!((0..=5).map(|k| g.sigma_seq(k)).collect::<Vec<_>>(), vec![1.0, 2.0, 2.0, 2.0, 2.0, 2.0]);
        let g1 = gegenbauer(1.0, 5).unwrap();
        assert_relative_eq!(g1.sigma_seq(3), 7.0, max_relative = 1e-15);
        assert!(gegenbauer(-1.0, 3).is_err());
        // the product form has no singularity at ν = 1/2
        let near = gegenbauer(0.5 + 1e-12, 5).unwrap();
        for k in 0..=5 {
            assert!((near.sigma_seq(k) - g.sigma_seq(k)).abs() < 1e-9);
        }
    }

    #[test]
    fn closed_forms_match_recomputation() {
        let mut methods = builtins(500);
        methods.push(gegenbauer(0.5, 500).unwrap());
        for m in &methods {
            for n in 0..=500 {
                let t = m.closed_form_tau(n).unwrap();
                let nn = m.closed_form_normalizer(n).unwrap();
                assert_relative_eq!(m.tau(n), t, max_relative = 1e-12);
                assert_relative_eq!(m.normalizer(n), nn, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn builtin_invariants() {
        for m in builtins(2000) {
            regularity_check(&m, 2000, 10).unwrap_or_else(|v| panic!("{}: {v}", m.name()));
            for n in 0..=2000 {
                let t = m.tau(n);
                assert!(t > 0.0 && t <= 1.0);
                if n > 0 {
                    assert!(t <= m.tau(n - 1));
                }
                let nn = m.normalizer(n);
                assert!(nn >= 1.0 - 1e-12 && nn <= n as f64 + 1.0 + 1e-12, "{} n={n} N={nn}", m.name());
            }
            let r = riesz_derived(&m);
            for k in 0..=10 {
                assert!(r.weight(2000, k) < r.weight(200, k) / 2.0);
            }
        }
    }

    #[test]
    fn method_spec_json() {
        let spec: MethodSpec = serde_json::from_str(r#"{"method": "cesaro", "alpha": 2}"#).unwrap();
        let m = spec.build(10).unwrap();
        assert_eq!(m.kind(), NorlundKind::Cesaro { alpha: 2.0 });
        assert!(serde_json::from_str::<MethodSpec>(r#"{"method": "cesaro"}"#).unwrap().build(3).is_err());
        assert!(MethodSpec::named("abel").validate().is_err());
    }

    #[test]
    fn custom_sigma_from_csv() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        std::fs::write(&path, "k,sigma\n0,1\n1,2\n2,2\n3,2\n").unwrap();
        let spec = MethodSpec { sigma_file: Some(path), ..MethodSpec::named("custom") };
        let m = spec.build(3).unwrap();
        assert_relative_eq!(m.tau(3), 1.0 / 7.0, max_relative = 1e-15);
        assert!(spec.build(4).is_err());
    }
}
