//! Commands behind the `orthomean` binary: moment tables, weighted root
//! histograms, `Σ` partial-sum tables and the invariant check suite.
//!
//! Everything here is deterministic: the same [`RunConfig`] writes the same
//! bytes. Data goes to files or the `out` writer, progress to stderr.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use orthomean::csvio::{fmt_f64, write_rows};
use orthomean::equilibrium::{
    addition_formula_residual, arcsine_measure, gegenbauer_equilibrium, ks_distance, sigma_closed_form,
    uniform_measure, EquilibriumMeasure, SigmaLimit,
};
use orthomean::families::{CoefficientFamily, ConstantPreset, FamilySpec};
use orthomean::means::{
    equilibrium_moment_from_sigma, moment_scale, nu_moments_by_trace, path_enumeration_moment_with_cap,
    root_sample, sigma_partial, simon_gap, LocalMomentTable, MeanKind, RootSample, DEFAULT_PATH_CAP,
};
use orthomean::summation::{regularity_check, riesz_derived, MethodSpec, NorlundKind, NorlundMethod};
use orthomean::tridiag::{eval_orthonormal, gauss_rule, local_moments};
use orthomean::{Error, Result};

/// Environment variable overriding the path-enumeration cap on `L`.
/// `off` disables the path oracle (and the cap with it).
pub const MAX_L_ENV: &str = "ORTHOMEAN_MAX_L";
pub const DEFAULT_BINS: usize = 50;
pub const CURVE_POINTS: usize = 1001;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// Exit code for a failed run.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Validation(_) | Error::Json(_) | Error::Csv(_) | Error::IndexOutOfRange { .. } => {
            EXIT_CONFIG
        }
        _ => EXIT_NUMERIC,
    }
}

fn default_bins() -> usize {
    DEFAULT_BINS
}

fn always() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub family: FamilySpec,
    pub method: MethodSpec,
    pub n_list: Vec<usize>,
    #[serde(rename = "L")]
    pub max_l: usize,
    pub output: PathBuf,
    #[serde(default = "default_bins")]
    pub bins: usize,
    /// Runs have no random state; kept so configs can say so explicitly.
    #[serde(default = "always")]
    pub seedless: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            family: FamilySpec::Ultraspherical { lambda: 0.5 },
            method: MethodSpec { alpha: Some(1.0), ..MethodSpec::named("cesaro") },
            n_list: vec![50, 100, 200],
            max_l: 8,
            output: PathBuf::from("out"),
            bins: DEFAULT_BINS,
            seedless: true,
        }
    }
}

impl RunConfig {
    pub fn from_json_file<P: AsRef<Path>>(path: P) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.as_ref().display())))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn n_top(&self) -> usize {
        self.n_list.last().copied().unwrap_or(0)
    }

    /// Parameter checks; nothing is computed. `path_cap` is `None` when the
    /// path oracle is disabled.
    pub fn validate(&self, path_cap: Option<usize>) -> Result<()> {
        self.family.validate()?;
        self.method.validate()?;
        if self.n_list.is_empty() {
            return Err(Error::Config("n_list is empty".into()));
        }
        if let Some(w) = self.n_list.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!("n_list must be strictly ascending ({} before {})", w[0], w[1])));
        }
        if let Some(cap) = path_cap {
            if self.max_l > cap {
                return Err(Error::Config(format!(
                    "L = {} exceeds the path-oracle cap {cap} (raise {MAX_L_ENV} or set it to off)",
                    self.max_l
                )));
            }
        }
        if self.bins == 0 {
            return Err(Error::Config("bins must be at least 1".into()));
        }
        if !self.seedless {
            return Err(Error::Config("runs are always seedless; drop `seedless: false`".into()));
        }
        Ok(())
    }
}

/// Path-oracle cap from [`MAX_L_ENV`]: default 12, `off` for none.
pub fn path_cap_from_env() -> Result<Option<usize>> {
    match std::env::var(MAX_L_ENV) {
        Err(_) => Ok(Some(DEFAULT_PATH_CAP)),
        Ok(v) if v.eq_ignore_ascii_case("off") => Ok(None),
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("{MAX_L_ENV} must be an integer or `off`, got {v:?}"))),
    }
}

/// Command-line overrides applied on top of a config (or the default one).
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub family: Option<String>,
    pub lambda: Option<f64>,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub method: Option<String>,
    pub alpha: Option<f64>,
    pub nu: Option<f64>,
    pub n: Option<Vec<usize>>,
    pub max_l: Option<usize>,
    pub bins: Option<usize>,
    pub out: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, mut cfg: RunConfig) -> Result<RunConfig> {
        match self.family.as_deref() {
            Some(name) => cfg.family = self.family_from_flags(name)?,
            None => match &mut cfg.family {
                FamilySpec::Ultraspherical { lambda } => {
                    if let Some(v) = self.lambda {
                        *lambda = v;
                    }
                }
                FamilySpec::JacobiShift { lambda1, lambda2 } => {
                    if let Some(v) = self.lambda1 {
                        *lambda1 = v;
                    }
                    if let Some(v) = self.lambda2 {
                        *lambda2 = v;
                    }
                }
                _ => {}
            },
        }
        match &self.method {
            Some(name) => cfg.method = MethodSpec { alpha: self.alpha, nu: self.nu, ..MethodSpec::named(name) },
            None => {
                if self.alpha.is_some() {
                    cfg.method.alpha = self.alpha;
                }
                if self.nu.is_some() {
                    cfg.method.nu = self.nu;
                }
            }
        }
        if let Some(n) = &self.n {
            cfg.n_list = n.clone();
        }
        if let Some(l) = self.max_l {
            cfg.max_l = l;
        }
        if let Some(b) = self.bins {
            cfg.bins = b;
        }
        if let Some(o) = &self.out {
            cfg.output = o.clone();
        }
        Ok(cfg)
    }

    fn family_from_flags(&self, name: &str) -> Result<FamilySpec> {
        let need = |v: Option<f64>, flag: &str| {
            v.ok_or_else(|| Error::Config(format!("--family {name} needs --{flag}")))
        };
        let preset = |p| FamilySpec::Constant { preset: Some(p), len: None, a: vec![], b: vec![], mass: None };
        Ok(match name.replace('-', "_").as_str() {
            "ultraspherical" => FamilySpec::Ultraspherical { lambda: need(self.lambda, "lambda")? },
            "jacobi_shift" => FamilySpec::JacobiShift {
                lambda1: need(self.lambda1, "lambda1")?,
                lambda2: need(self.lambda2, "lambda2")?,
            },
            "legendre" | "constant" => preset(ConstantPreset::Legendre),
            "chebyshev_t" => preset(ConstantPreset::ChebyshevT),
            "chebyshev_u" => preset(ConstantPreset::ChebyshevU),
            other => return Err(Error::Config(format!("unknown family {other:?}"))),
        })
    }
}

/// A validated config with its family, method and known limits built.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub config: RunConfig,
    pub family: CoefficientFamily,
    pub method: NorlundMethod,
    pub equilibrium: Option<EquilibriumMeasure>,
    pub sigma_limit: Option<SigmaLimit>,
    pub path_cap: Option<usize>,
}

/// Coefficient indices touched by the oracle-equivalence check.
const ORACLE_INDEX: usize = 6;
const ORACLE_MAX_L: usize = 10;

pub fn prepare(config: &RunConfig, path_cap: Option<usize>) -> Result<Prepared> {
    config.validate(path_cap)?;
    let n_top = config.n_top();
    let needed = (n_top + config.max_l / 2 + 1).max(2 * ORACLE_INDEX + ORACLE_MAX_L);
    let family = config.family.build(needed + 1)?;
    if let Some(max) = family.max_index() {
        if max < needed {
            return Err(Error::Config(format!(
                "coefficient table ends at index {max}, the run needs {needed}"
            )));
        }
    }
    let method = config.method.build(n_top)?;
    let (equilibrium, sigma_limit) = expected_limits(&family, method.kind())?;
    Ok(Prepared { config: config.clone(), family, method, equilibrium, sigma_limit, path_cap })
}

/// The limit the means should converge to, when the family/method pair has
/// a closed form for it.
pub fn expected_limits(
    family: &CoefficientFamily,
    kind: NorlundKind,
) -> Result<(Option<EquilibriumMeasure>, Option<SigmaLimit>)> {
    if let Some((a, b)) = family.nevai_limits() {
        return Ok((Some(arcsine_measure(a, b)?), Some(SigmaLimit::UniformNevai { a, b })));
    }
    Ok(match kind {
        NorlundKind::Identity => (Some(arcsine_measure(0.0, 0.5)?), Some(SigmaLimit::UniformNevai { a: 0.0, b: 0.5 })),
        NorlundKind::Arithmetic => (Some(uniform_measure()), Some(SigmaLimit::Arithmetic)),
        NorlundKind::Legendre => (Some(uniform_measure()), Some(SigmaLimit::Gegenbauer { nu: 0.5 })),
        NorlundKind::Cesaro { alpha } => (Some(gegenbauer_equilibrium(alpha)?), Some(SigmaLimit::Cesaro { alpha })),
        NorlundKind::Gegenbauer { nu } => {
            (Some(gegenbauer_equilibrium(2.0 * nu)?), Some(SigmaLimit::Gegenbauer { nu }))
        }
        NorlundKind::Custom => (None, None),
    })
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn opt_cell(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Write `moments_<kind>_<n>.csv` (`l,value,equilibrium,abs_gap`) for every
/// `n` and each of `μ̄_n`, `λ_n`, `ν_{n+1}`. Returns the files written.
pub fn cmd_moments(prep: &Prepared) -> Result<Vec<PathBuf>> {
    let cfg = &prep.config;
    ensure_dir(&cfg.output)?;
    let max_l = cfg.max_l;
    eprintln!("moments: building local moment table up to n = {}", cfg.n_top());
    let table = LocalMomentTable::build(&prep.family, cfg.n_top(), max_l)?;
    let mut written = Vec::new();
    for &n in &cfg.n_list {
        eprintln!("moments: n = {n}");
        let series = [
            (MeanKind::MuBar, table.mu_bar(&prep.method, n)),
            (MeanKind::Lambda, table.lambda_checked(&prep.family, &prep.method, n)?.moments),
            (MeanKind::Nu, nu_moments_by_trace(&prep.family, &prep.method, n, max_l)?),
        ];
        for (kind, values) in series {
            let rows: Vec<Vec<String>> = values
                .iter()
                .enumerate()
                .map(|(l, &v)| {
                    let eq = prep.equilibrium.as_ref().map(|m| m.moment(l));
                    vec![l.to_string(), fmt_f64(v), opt_cell(eq), opt_cell(eq.map(|e| (v - e).abs()))]
                })
                .collect();
            let path = cfg.output.join(format!("moments_{}_{n}.csv", kind.label()));
            write_rows(&path, &["l", "value", "equilibrium", "abs_gap"], &rows)?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Weighted histogram of a root sample over `[lo, hi]`; points outside
/// are clamped into the edge bins. Masses are normalized to sum to 1.
pub fn weighted_histogram(sample: &RootSample, (lo, hi): (f64, f64), bins: usize) -> Vec<(f64, f64, f64)> {
    let total = sample.total_weight();
    let width = (hi - lo) / bins as f64;
    let mut mass = vec![0.0; bins];
    for &(x, w) in &sample.points {
        let idx = ((x - lo) / width).floor();
        let idx = if idx.is_nan() || idx < 0.0 { 0 } else { (idx as usize).min(bins - 1) };
        mass[idx] += w / total;
    }
    (0..bins)
        .map(|i| {
            let left = lo + (hi - lo) * i as f64 / bins as f64;
            let right = if i + 1 == bins { hi } else { lo + (hi - lo) * (i + 1) as f64 / bins as f64 };
            (left, right, mass[i])
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistRun {
    pub n: usize,
    pub ks: Option<f64>,
    pub path: PathBuf,
}

/// Range used for histograms: the equilibrium support when known,
/// otherwise the family's support bound.
pub fn histogram_range(prep: &Prepared) -> (f64, f64) {
    match &prep.equilibrium {
        Some(m) => m.support(),
        None => {
            let r = prep.family.support_bound();
            (-r, r)
        }
    }
}

/// Write `hist_<n>.csv` (`bin_left,bin_right,weighted_mass`) for every `n`
/// and `equilibrium.csv` (`x,density`) when the limit is known. One line per
/// `n` with the KS distance goes to `out`.
pub fn cmd_roots_hist(prep: &Prepared, out: &mut dyn Write) -> Result<Vec<HistRun>> {
    let cfg = &prep.config;
    ensure_dir(&cfg.output)?;
    let range = histogram_range(prep);
    let mut runs = Vec::new();
    for &n in &cfg.n_list {
        eprintln!("roots-hist: n = {n}");
        let sample = root_sample(&prep.family, &prep.method, n)?;
        let rows: Vec<Vec<String>> = weighted_histogram(&sample, range, cfg.bins)
            .into_iter()
            .map(|(l, r, m)| vec![fmt_f64(l), fmt_f64(r), fmt_f64(m)])
            .collect();
        let path = cfg.output.join(format!("hist_{n}.csv"));
        write_rows(&path, &["bin_left", "bin_right", "weighted_mass"], &rows)?;
        let ks = match &prep.equilibrium {
            Some(m) => Some(ks_distance(&sample, m)?),
            None => None,
        };
        match ks {
            Some(d) => writeln!(out, "n={n} ks={d:.6e} equilibrium={}", prep.equilibrium.as_ref().unwrap().label())?,
            None => writeln!(out, "n={n} ks=n/a")?,
        }
        runs.push(HistRun { n, ks, path });
    }
    if let Some(m) = &prep.equilibrium {
        m.write_curve(cfg.output.join("equilibrium.csv"), CURVE_POINTS)?;
    }
    Ok(runs)
}

/// Write `sigma.csv` (`n,l_a,l_b,partial,closed_form,abs_gap`) for
/// `l_a + l_b ≤ L` with even `l_b`.
pub fn cmd_sigma_table(prep: &Prepared) -> Result<PathBuf> {
    let cfg = &prep.config;
    ensure_dir(&cfg.output)?;
    let mut rows = Vec::new();
    for &n in &cfg.n_list {
        eprintln!("sigma-table: n = {n}");
        for l_a in 0..=cfg.max_l as u32 {
            for l_b in (0..=cfg.max_l as u32 - l_a).step_by(2) {
                let partial = sigma_partial(&prep.family, &prep.method, n, l_a, l_b)?;
                let closed = match prep.sigma_limit {
                    Some(limit) => Some(sigma_closed_form(limit, l_a, l_b)?),
                    None => None,
                };
                rows.push(vec![
                    n.to_string(),
                    l_a.to_string(),
                    l_b.to_string(),
                    fmt_f64(partial),
                    opt_cell(closed),
                    opt_cell(closed.map(|c| (partial - c).abs())),
                ]);
            }
        }
    }
    let path = cfg.output.join("sigma.csv");
    write_rows(&path, &["n", "l_a", "l_b", "partial", "closed_form", "abs_gap"], &rows)?;
    Ok(path)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub name: &'static str,
    pub status: Status,
    pub detail: String,
}

impl CheckRow {
    fn verdict(name: &'static str, ok: bool, detail: String) -> Self {
        CheckRow { name, status: if ok { Status::Pass } else { Status::Fail }, detail }
    }

    fn skip(name: &'static str, why: &str) -> Self {
        CheckRow { name, status: Status::Skip, detail: why.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub rows: Vec<CheckRow>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.status != Status::Fail)
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            EXIT_OK
        } else {
            EXIT_CHECK_FAILED
        }
    }

    pub fn write_table(&self, out: &mut dyn Write) -> std::io::Result<()> {
        writeln!(out, "{:<20} {:<6} detail", "check", "status")?;
        for r in &self.rows {
            writeln!(out, "{:<20} {:<6} {}", r.name, r.status.label(), r.detail)?;
        }
        let failed = self.rows.iter().filter(|r| r.status == Status::Fail).count();
        writeln!(out, "{} checks, {} failed", self.rows.len(), failed)
    }
}

/// Rounding slack for inequalities whose two sides can coincide exactly.
const BOUND_SLACK: f64 = 1e-12;

/// Run the invariant suite for the configured family and method.
pub fn cmd_check(prep: &Prepared) -> Result<CheckReport> {
    let cfg = &prep.config;
    let family = &prep.family;
    let method = &prep.method;
    let n_top = cfg.n_top();
    let n_first = cfg.n_list[0];
    let max_l = cfg.max_l;
    let mut rows = Vec::new();

    eprintln!("check: summation method");
    rows.push(match regularity_check(method, n_top, 10) {
        Ok(r) => CheckRow::verdict(
            "regularity",
            true,
            format!("n <= {n_top}, max row-sum error {:.3e}", r.max_row_sum_error),
        ),
        Err(v) => {
            let at = match &v {
                orthomean::summation::RegularityViolation::Negative { n, k, .. } => format!(" at (n, k) = ({n}, {k})"),
                orthomean::summation::RegularityViolation::RowSum { n, .. } => format!(" at n = {n}"),
            };
            CheckRow::verdict("regularity", false, format!("{v}{at}"))
        }
    });
    rows.push(match regularity_check(&riesz_derived(method), n_top, 10) {
        Ok(r) => CheckRow::verdict(
            "riesz_regularity",
            true,
            format!("n <= {n_top}, max row-sum error {:.3e}", r.max_row_sum_error),
        ),
        Err(v) => CheckRow::verdict("riesz_regularity", false, v.to_string()),
    });

    let bad_n = (0..=n_top).find(|&n| {
        let nn = method.normalizer(n);
        let slack = 4.0 * f64::EPSILON * (n + 1) as f64;
        !(nn >= 1.0 - slack && nn <= (n + 1) as f64 + slack)
    });
    rows.push(match bad_n {
        None => CheckRow::verdict("normalizer_range", true, format!("1 <= N_n <= n+1 for n <= {n_top}")),
        Some(n) => CheckRow::verdict("normalizer_range", false, format!("N_{n} = {}", method.normalizer(n))),
    });

    rows.push(if method.closed_form_tau(0).is_none() {
        CheckRow::skip("closed_forms", "no closed form for this method")
    } else {
        let mut worst: f64 = 0.0;
        for n in 0..=n_top {
            let t = method.closed_form_tau(n).unwrap();
            let nn = method.closed_form_normalizer(n).unwrap();
            worst = worst
                .max((t - method.tau(n)).abs() / t.abs())
                .max((nn - method.normalizer(n)).abs() / nn.abs());
        }
        CheckRow::verdict("closed_forms", worst <= 1e-12, format!("max relative error {worst:.3e}"))
    });

    eprintln!("check: moment oracles");
    rows.push(match prep.path_cap {
        None => CheckRow::skip("oracle_equivalence", "path oracle disabled"),
        Some(cap) => {
            let lmax = cap.min(ORACLE_MAX_L);
            let mut worst: f64 = 0.0;
            for k in 0..=ORACLE_INDEX {
                for m in 0..=ORACLE_INDEX {
                    let local = local_moments(family, k, m, lmax)?;
                    let rule = gauss_rule(family, k, m + lmax / 2 + 1)?;
                    for l in 0..=lmax {
                        let path = path_enumeration_moment_with_cap(family, k, m, l, cap)?;
                        let gauss = rule.integrate(|x| {
                            let p = eval_orthonormal(family, k, m, x).map(|v| v[m]).unwrap_or(f64::NAN);
                            x.powi(l as i32) * p * p
                        });
                        let scale = moment_scale(family, l);
                        worst = worst
                            .max((path - local[l]).abs() / scale)
                            .max((gauss - local[l]).abs() / scale);
                    }
                }
            }
            CheckRow::verdict(
                "oracle_equivalence",
                worst <= 1e-11,
                format!("k, m <= {ORACLE_INDEX}, l <= {lmax}, max scaled gap {worst:.3e}"),
            )
        }
    });

    eprintln!("check: mean measures");
    let table = LocalMomentTable::build(family, n_top, max_l)?;
    let mut lambda = Vec::new();
    let mut route_failure = None;
    for &n in &cfg.n_list {
        match table.lambda_checked(family, method, n) {
            Ok(m) => lambda.push(m.moments),
            Err(Error::Consistency(msg)) => {
                route_failure.get_or_insert(msg);
                lambda.push(table.lambda_direct(method, n));
            }
            Err(e) => return Err(e),
        }
    }
    rows.push(match route_failure {
        None => CheckRow::verdict("lambda_routes", true, format!("kernel and Riesz routes agree, n in {:?}", cfg.n_list)),
        Some(msg) => CheckRow::verdict("lambda_routes", false, msg),
    });

    let sample = root_sample(family, method, n_first)?;
    let by_trace = nu_moments_by_trace(family, method, n_first, max_l)?;
    let by_roots = sample.moments(max_l);
    let trace_gap = (0..=max_l)
        .map(|l| (by_trace[l] - by_roots[l]).abs() / moment_scale(family, l))
        .fold(0.0, f64::max);
    rows.push(CheckRow::verdict(
        "nu_trace_vs_roots",
        trace_gap <= 1e-10,
        format!("n = {n_first}, max scaled gap {trace_gap:.3e}"),
    ));

    let mut bound_failure = None;
    let mut tightest: f64 = 0.0;
    for (i, &n) in cfg.n_list.iter().enumerate() {
        let nu = nu_moments_by_trace(family, method, n, max_l)?;
        for l in 0..=max_l {
            let bound = 2.0 * l as f64 * family.moment_radius().powi(l as i32) / method.normalizer(n);
            let gap = (nu[l] - lambda[i][l]).abs();
            if !(gap <= bound + BOUND_SLACK * moment_scale(family, l)) {
                bound_failure.get_or_insert(format!("n = {n}, l = {l}: gap {gap:.3e} > bound {bound:.3e}"));
            } else if bound > 0.0 {
                tightest = tightest.max(gap / bound);
            }
        }
    }
    rows.push(match bound_failure {
        None => CheckRow::verdict("nu_lambda_bound", true, format!("max gap/bound {tightest:.3e}")),
        Some(msg) => CheckRow::verdict("nu_lambda_bound", false, msg),
    });

    let hist_sum: f64 = weighted_histogram(&sample, histogram_range(prep), cfg.bins).iter().map(|b| b.2).sum();
    let mass_err = (sample.total_weight() - 1.0).abs().max((hist_sum - 1.0).abs());
    rows.push(CheckRow::verdict(
        "probability_mass",
        mass_err <= 1e-10,
        format!("n = {n_first}, max deviation from 1 {mass_err:.3e}"),
    ));

    let mut simon_failure = None;
    for k in [0, n_first / 2, n_first] {
        for l in 0..=max_l {
            let (gap, bound) = simon_gap(family, n_first, k, l)?;
            if !(gap <= bound + BOUND_SLACK * (k + 1) as f64 * moment_scale(family, l)) {
                simon_failure.get_or_insert(format!("k = {k}, l = {l}: gap {gap:.3e} > bound {bound:.3e}"));
            }
        }
    }
    rows.push(match simon_failure {
        None => CheckRow::verdict("kernel_root_bound", true, format!("n = {n_first}, l <= {max_l}")),
        Some(msg) => CheckRow::verdict("kernel_root_bound", false, msg),
    });

    eprintln!("check: closed forms");
    rows.push(match cfg.family {
        FamilySpec::Ultraspherical { lambda } if lambda > 0.0 => {
            let mut worst: f64 = 0.0;
            for n in 0..=20 {
                for i in 0..9 {
                    let x = -1.0 + 0.25 * i as f64;
                    worst = worst.max(addition_formula_residual(lambda, n, x)?);
                }
            }
            CheckRow::verdict("addition_formula", worst < 1e-10, format!("n <= 20, max residual {worst:.3e}"))
        }
        _ => CheckRow::skip("addition_formula", "needs an ultraspherical family with lambda > 0"),
    });

    rows.push(match (&prep.equilibrium, prep.sigma_limit) {
        (Some(eq), Some(limit)) => {
            let mut worst: f64 = 0.0;
            for l in 0..=max_l {
                let chain = equilibrium_moment_from_sigma(
                    |la, lb| sigma_closed_form(limit, la, lb).unwrap_or(f64::NAN),
                    l,
                );
                let m = eq.moment(l);
                let err = (chain - m).abs() / m.abs().max(1.0);
                worst = if err.is_nan() { f64::INFINITY } else { worst.max(err) };
            }
            CheckRow::verdict(
                "consistency_chain",
                worst <= 1e-12,
                format!("{}, l <= {max_l}, max relative error {worst:.3e}", eq.label()),
            )
        }
        _ => CheckRow::skip("consistency_chain", "no closed-form limit for this method"),
    });

    Ok(CheckReport { rows })
}
