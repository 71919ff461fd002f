//! Mean measures built from a coefficient family and a summation method:
//!
//! * `μ̄_n = Σ_k σ_{n,k} (p_k^{(n−k)})² dμ^{(n−k)}`
//! * `λ_n = N_n^{-1} Σ_k σ_{n,k} K_k^{(n−k)}(x, x) dμ^{(n−k)}`
//! * `ν_{n+1} = N_n^{-1} Σ_k σ_{n,k} Σ_j δ_{x_{k+1,j}^{(n−k)}}`
//!
//! together with the path-sum oracle for local moments, the weighted
//! coefficient sums `Σ_{l_a,l_b}` and the moment gap between `λ_n` and `ν_{n+1}`.


use crate::csvio::{fmt_f64, write_rows};
use crate::error::{Error, Result};
use crate::families::CoefficientFamily;
use crate::special::choose;
use crate::summation::{riesz_derived, NorlundMethod, SummationMethod};
use crate::tridiag::{eigen_roots, jacobi_matrix, local_moments, trace_powers};

/// Default cap on path length for the 3^l enumeration oracle.
pub const DEFAULT_PATH_CAP: usize = 12;

/// Agreement required between the two routes to the `λ_n` moments,
/// relative to `max(1, (A + 2B)^l)`.
pub const LAMBDA_ROUTE_TOL: f64 = 1e-10;

/// Integer walk with steps in {−1, 0, +1}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Path {
    pub steps: Vec<i64>,
}

impl Path {
    pub fn new(steps: Vec<i64>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::Validation("a path has at least one point".into()));
        }
        if let Some(w) = steps.windows(2).find(|w| (w[1] - w[0]).abs() > 1) {
            return Err(Error::Validation(format!("step {} → {} is longer than 1", w[0], w[1])));
        }
        Ok(Path { steps })
    }

    pub fn len(&self) -> usize {
        self.steps.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Starts and ends at zero.
    pub fn is_closed(&self) -> bool {
        self.steps[0] == 0 && *self.steps.last().unwrap() == 0
    }

    pub fn signature(&self) -> PathSignature {
        let flat = self.steps.windows(2).filter(|w| w[0] == w[1]).count();
        PathSignature { flat, moving: self.len() - flat }
    }

    /// `T_m ρ = (ρ_j + m)`.
    pub fn shifted(&self, m: i64) -> Path {
        Path { steps: self.steps.iter().map(|s| s + m).collect() }
    }

    /// `W^{(k)}(ρ)` with `a_{−m} = b_{−m} = b_0 = 0`.
    pub fn weight(&self, family: &CoefficientFamily, k: usize) -> Result<f64> {
        let mut w = 1.0;
        for s in self.steps.windows(2) {
            let (from, to) = (s[0], s[1]);
            let factor = if from == to {
                coeff_a(family, k, from)?
            } else {
                coeff_b(family, k, from.max(to))?
            };
            w *= factor;
        }
        Ok(w)
    }
}

fn coeff_a(family: &CoefficientFamily, k: usize, m: i64) -> Result<f64> {
    if m < 0 {
        Ok(0.0)
    } else {
        Ok(family.coeff(k, m as usize)?.a)
    }
}

fn coeff_b(family: &CoefficientFamily, k: usize, m: i64) -> Result<f64> {
    if m <= 0 {
        Ok(0.0)
    } else {
        Ok(family.coeff(k, m as usize)?.b)
    }
}

/// Numbers of flat (`l_a`) and moving (`l_b`) steps of a path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PathSignature {
    pub flat: usize,
    pub moving: usize,
}

/// Every closed path of length `l` (the set `Q_l`). Grows like 3^l.
pub fn closed_paths(l: usize) -> Vec<Path> {
    fn walk(pos: i64, remaining: usize, cur: &mut Vec<i64>, out: &mut Vec<Path>) {
        if remaining == 0 {
            if pos == 0 {
                out.push(Path { steps: cur.clone() });
            }
            return;
        }
        for step in [-1i64, 0, 1] {
            let next = pos + step;
            if next.unsigned_abs() as usize <= remaining - 1 {
                cur.push(next);
                walk(next, remaining - 1, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    walk(0, l, &mut vec![0], &mut out);
    out
}

/// Number of paths in `Q_l` with `l_b` moving steps: `C(l, l_b) C(l_b, l_b/2)`.
pub fn closed_path_count(l: usize, moving: usize) -> f64 {
    if moving > l || moving % 2 == 1 {
        return 0.0;
    }
    choose(l as u64, moving as u64) * choose(moving as u64, (moving / 2) as u64)
}

/// `Σ_{ρ ∈ Q_l} W^{(k)}(T_m ρ)` by explicit enumeration.
pub fn path_enumeration_moment(family: &CoefficientFamily, k: usize, m: usize, l: usize) -> Result<f64> {
    path_enumeration_moment_with_cap(family, k, m, l, DEFAULT_PATH_CAP)
}

pub fn path_enumeration_moment_with_cap(
    family: &CoefficientFamily,
    k: usize,
    m: usize,
    l: usize,
    cap: usize,
) -> Result<f64> {
    if l > cap {
        return Err(Error::Config(format!("path length {l} exceeds the enumeration cap {cap}")));
    }
    // coefficients in reach of a closed walk from m
    let reach = l / 2;
    let lo = m as i64 - reach as i64;
    let a: Vec<f64> = (lo..=m as i64 + reach as i64)
        .map(|i| coeff_a(family, k, i))
        .collect::<Result<_>>()?;
    let b: Vec<f64> = (lo..=m as i64 + reach as i64 + 1)
        .map(|i| coeff_b(family, k, i))
        .collect::<Result<_>>()?;

    fn walk(pos: i64, target: i64, remaining: usize, lo: i64, a: &[f64], b: &[f64]) -> f64 {
        if remaining == 0 {
            return if pos == target { 1.0 } else { 0.0 };
        }
        let mut total = 0.0;
        for step in [-1i64, 0, 1] {
            let next = pos + step;
            if ((next - target).unsigned_abs() as usize) > remaining - 1 {
                continue;
            }
            let w = match step {
                0 => a[(pos - lo) as usize],
                1 => b[(next - lo) as usize],
                _ => b[(pos - lo) as usize],
            };
            if w != 0.0 {
                total += w * walk(next, target, remaining - 1, lo, a, b);
            }
        }
        total
    }
    Ok(walk(m as i64, m as i64, l, lo, &a, &b))
}

/// Which mean measure a moment vector belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeanKind {
    MuBar,
    Lambda,
    Nu,
}

impl MeanKind {
    pub fn label(self) -> &'static str {
        match self {
            MeanKind::MuBar => "mu_bar",
            MeanKind::Lambda => "lambda",
            MeanKind::Nu => "nu",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanMoments {
    pub n: usize,
    pub kind: MeanKind,
    /// `m_0, …, m_L`.
    pub moments: Vec<f64>,
}

impl MeanMoments {
    /// Write as CSV with header `l,value`.
    pub fn write_csv<P: AsRef<std::path::Path>>(&self, path: P) -> Result<()> {
        let rows: Vec<Vec<String>> = self
            .moments
            .iter()
            .enumerate()
            .map(|(l, v)| vec![l.to_string(), fmt_f64(*v)])
            .collect();
        write_rows(path, &["l", "value"], &rows)
    }
}

fn add_scaled(acc: &mut [f64], v: &[f64], s: f64) {
    acc.iter_mut().zip(v).for_each(|(a, x)| *a += s * x);
}

/// Moments `m_0..=m_L` of `μ̄_n`.
pub fn mu_bar_moments(
    family: &CoefficientFamily,
    method: &dyn SummationMethod,
    n: usize,
    max_l: usize,
) -> Result<MeanMoments> {
    let mut moments = vec![0.0; max_l + 1];
    for k in 0..=n {
        let w = method.weight(n, k);
        if w == 0.0 {
            continue;
        }
        add_scaled(&mut moments, &local_moments(family, n - k, k, max_l)?, w);
    }
    Ok(MeanMoments { n, kind: MeanKind::MuBar, moments })
}

/// Local moments for every (measure index, degree) pair with
/// index + degree ≤ `n_max`, shared by the `μ̄` and `λ` sweeps.
#[derive(Debug, Clone)]
pub struct LocalMomentTable {
    n_max: usize,
    max_l: usize,
    // rows[s][degree] for index = s − degree
    rows: Vec<Vec<Vec<f64>>>,
}

impl LocalMomentTable {
    pub fn build(family: &CoefficientFamily, n_max: usize, max_l: usize) -> Result<Self> {
        let mut rows = Vec::with_capacity(n_max + 1);
        for s in 0..=n_max {
            let row = (0..=s)
                .map(|degree| local_moments(family, s - degree, degree, max_l))
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Ok(LocalMomentTable { n_max, max_l, rows })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn max_l(&self) -> usize {
        self.max_l
    }

    /// `∫ x^l (p_degree^{(index)})² dμ^{(index)}` for `l = 0..=L`.
    pub fn get(&self, index: usize, degree: usize) -> &[f64] {
        &self.rows[index + degree][degree]
    }

    pub fn mu_bar(&self, method: &dyn SummationMethod, n: usize) -> Vec<f64> {
        let mut m = vec![0.0; self.max_l + 1];
        for k in 0..=n {
            add_scaled(&mut m, self.get(n - k, k), method.weight(n, k));
        }
        m
    }

    /// `λ_n` moments from the kernel definition.
    pub fn lambda_direct(&self, method: &NorlundMethod, n: usize) -> Vec<f64> {
        let mut m = vec![0.0; self.max_l + 1];
        let mut kernel = vec![0.0; self.max_l + 1];
        for k in 0..=n {
            kernel.iter_mut().for_each(|v| *v = 0.0);
            for j in 0..=k {
                add_scaled(&mut kernel, self.get(n - k, j), 1.0);
            }
            add_scaled(&mut m, &kernel, method.weight(n, k));
        }
        let norm = method.normalizer(n);
        m.iter_mut().for_each(|v| *v /= norm);
        m
    }

    /// `λ_n` moments as the Riesz mean `Σ_k τ_{n,k} μ̄_k`.
    pub fn lambda_via_riesz(&self, method: &NorlundMethod, n: usize) -> Vec<f64> {
        let riesz = riesz_derived(method);
        let mut m = vec![0.0; self.max_l + 1];
        for k in 0..=n {
            add_scaled(&mut m, &self.mu_bar(method, k), riesz.weight(n, k));
        }
        m
    }
}

impl LocalMomentTable {
    /// `λ_n` moments from the kernel definition, rejected with a
    /// consistency error unless the Riesz route agrees to
    /// `LAMBDA_ROUTE_TOL` (scaled by [`moment_scale`]).
    pub fn lambda_checked(&self, family: &CoefficientFamily, method: &NorlundMethod, n: usize) -> Result<MeanMoments> {
        let direct = self.lambda_direct(method, n);
        let riesz = self.lambda_via_riesz(method, n);
        for l in 0..=self.max_l {
            let gap = (direct[l] - riesz[l]).abs();
            if !(gap <= LAMBDA_ROUTE_TOL * moment_scale(family, l)) {
                return Err(Error::Consistency(format!(
                    "λ_{n} moment {l}: kernel route {} vs Riesz route {} differ by {gap:e}",
                    direct[l], riesz[l]
                )));
            }
        }
        Ok(MeanMoments { n, kind: MeanKind::Lambda, moments: direct })
    }
}

/// Tolerance scale for moment order `l`: `max(1, (A + 2B)^l)`.
pub fn moment_scale(family: &CoefficientFamily, l: usize) -> f64 {
    family.moment_radius().powi(l as i32).max(1.0)
}

/// Moments of `λ_n`, computed from the kernel definition and cross-checked
/// against `Σ_k τ_{n,k} μ̄_k`.
pub fn lambda_moments(
    family: &CoefficientFamily,
    method: &NorlundMethod,
    n: usize,
    max_l: usize,
) -> Result<MeanMoments> {
    LocalMomentTable::build(family, n, max_l)?.lambda_checked(family, method, n)
}

/// Weighted point masses behind `ν_{n+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct RootSample {
    /// `(root, weight)` pairs in generation order.
    pub points: Vec<(f64, f64)>,
}

impl RootSample {
    pub fn total_weight(&self) -> f64 {
        self.points.iter().map(|p| p.1).sum()
    }

    /// Power sums `Σ w x^l` for `l = 0..=max_l`.
    pub fn moments(&self, max_l: usize) -> Vec<f64> {
        let mut m = vec![0.0; max_l + 1];
        for &(x, w) in &self.points {
            let mut p = w;
            for v in m.iter_mut() {
                *v += p;
                p *= x;
            }
        }
        m
    }

    pub fn sorted(&self) -> Vec<(f64, f64)> {
        let mut pts = self.points.clone();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        pts
    }

    /// Write as CSV `root,weight`, ascending by root.
    pub fn write_csv<P: AsRef<std::path::Path>>(&self, path: P) -> Result<()> {
        let rows: Vec<Vec<String>> = self
            .sorted()
            .into_iter()
            .map(|(x, w)| vec![fmt_f64(x), fmt_f64(w)])
            .collect();
        write_rows(path, &["root", "weight"], &rows)
    }
}

/// Roots of `p_{k+1}^{(n−k)}` for every `k ≤ n`, each weighted by `σ_{n,k} / N_n`.
pub fn root_sample(family: &CoefficientFamily, method: &NorlundMethod, n: usize) -> Result<RootSample> {
    let norm = method.normalizer(n);
    let mut points = Vec::with_capacity((n + 1) * (n + 2) / 2);
    for k in 0..=n {
        let w = method.weight(n, k) / norm;
        if w == 0.0 {
            continue;
        }
        let j = jacobi_matrix(family, n - k, k + 1)?;
        let roots = eigen_roots(&j).map_err(|e| e.in_context(format!("roots for k={k}")))?;
        points.extend(roots.into_iter().map(|x| (x, w)));
    }
    Ok(RootSample { points })
}

/// Moments of `ν_{n+1}` through traces of Jacobi-matrix powers, without eigensolves.
pub fn nu_moments_by_trace(
    family: &CoefficientFamily,
    method: &NorlundMethod,
    n: usize,
    max_l: usize,
) -> Result<Vec<f64>> {
    let norm = method.normalizer(n);
    let mut m = vec![0.0; max_l + 1];
    for k in 0..=n {
        let w = method.weight(n, k);
        if w == 0.0 {
            continue;
        }
        let j = jacobi_matrix(family, n - k, k + 1)?;
        add_scaled(&mut m, &trace_powers(&j, max_l), w / norm);
    }
    Ok(m)
}

/// `Σ_k σ_{n,k} (a_k^{(n−k)})^{l_a} (b_k^{(n−k)})^{l_b}`.
pub fn sigma_partial(
    family: &CoefficientFamily,
    method: &dyn SummationMethod,
    n: usize,
    l_a: u32,
    l_b: u32,
) -> Result<f64> {
    let mut total = 0.0;
    for k in 0..=n {
        let p = family.coeff(n - k, k)?;
        total += method.weight(n, k) * p.a.powi(l_a as i32) * p.b.powi(l_b as i32);
    }
    Ok(total)
}

/// Weighted shift defects `Σ_k σ_{n,k} |a_{k+l}^{(n−k)} − a_k^{(n−k)}|` and the `b` analogue.
pub fn nevai_shift_defect(
    family: &CoefficientFamily,
    method: &dyn SummationMethod,
    n: usize,
    shift: usize,
) -> Result<(f64, f64)> {
    if shift == 0 {
        return Err(Error::Config("shift must be at least 1".into()));
    }
    let (mut da, mut db) = (0.0, 0.0);
    for k in 0..=n {
        let w = method.weight(n, k);
        let here = family.coeff(n - k, k)?;
        let there = family.coeff(n - k, k + shift)?;
        da += w * (there.a - here.a).abs();
        db += w * (there.b - here.b).abs();
    }
    Ok((da, db))
}

/// Gap between `∫ x^l K_k^{(n−k)}(x, x) dμ^{(n−k)}` and the root power sum
/// `Σ_j (x_{k+1,j}^{(n−k)})^l`, with the bound `2 l (A + 2B)^l`.
pub fn simon_gap(family: &CoefficientFamily, n: usize, k: usize, l: usize) -> Result<(f64, f64)> {
    if k > n {
        return Err(Error::Config(format!("simon_gap needs k ≤ n, got k={k}, n={n}")));
    }
    let index = n - k;
    let mut kernel = 0.0;
    for j in 0..=k {
        kernel += local_moments(family, index, j, l)?[l];
    }
    let roots = eigen_roots(&jacobi_matrix(family, index, k + 1)?)?;
    let power_sum: f64 = roots.iter().map(|x| x.powi(l as i32)).sum();
    let bound = 2.0 * l as f64 * family.moment_radius().powi(l as i32);
    Ok(((kernel - power_sum).abs(), bound))
}

/// `Σ_{ρ ∈ Q_l} Σ_{l_a(ρ), l_b(ρ)}` grouped by signature with the closed
/// path counts.
pub fn equilibrium_moment_from_sigma(sigma: impl Fn(u32, u32) -> f64, l: usize) -> f64 {
    (0..=l)
        .step_by(2)
        .map(|moving| closed_path_count(l, moving) * sigma((l - moving) as u32, moving as u32))
        .sum()
}
