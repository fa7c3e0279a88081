//! `hmf`: command-line access to the Kloosterman, special-function, trace
//! formula, L-value and moment computations.
//!
//! Records go to stdout (JSON lines or CSV), the human summary to stderr.
//! Exit codes: 0 success, 1 an error budget or invariant was violated,
//! 2 bad flags, 3 a computation failed.

mod forms;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use hmf_core::analysis::{bessel_j, CutoffFunction, TestFunction, VKernel};
use hmf_core::data_io::{fetch_remote, Cache, RemoteConfig};
use hmf_core::exp_sums::{kloosterman, weil_bound, KloostermanParams, ResidueDomain};
use hmf_core::ideal::NarrowClassGroup;
use hmf_core::moment::{
    distinguish_forms, error_decay_slope, estimate_coefficient, slope_fit, target_slope, MomentContext,
    MomentOptions, MomentReport, Verdict,
};
use hmf_core::petersson::{geometric_side, spectral_side_n, GeometricSideSpec};
use hmf_core::rankin_selberg::{afe_central_value, RsPair};
use hmf_core::util::{factor, is_prime};
use hmf_core::{FieldElement, HmfError, Ideal, TotallyRealField};

use forms::FormSource;
use output::{emit, Format};

#[derive(Parser, Debug)]
#[command(name = "hmf", version, about = "Kloosterman sums, trace formulas and Rankin-Selberg moments")]
struct Cli {
    #[command(flatten)]
    run: RunConfig,
    #[command(subcommand)]
    cmd: Command,
}

/// Options shared by every subcommand.
#[derive(Args, Debug, Clone)]
struct RunConfig {
    /// `QQ` or `Qsqrt:<d>` for a squarefree d > 1.
    #[arg(long, global = true, default_value = "QQ")]
    field: String,
    /// Decimal digits carried by the embeddings (15 or 16).
    #[arg(long, global = true, default_value_t = 16)]
    prec: u32,
    /// Output format on stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Records)]
    format: Format,
    /// Directory of cached coefficient records.
    #[arg(long, global = true, env = "HMF_CACHE")]
    cache_dir: Option<PathBuf>,
}

impl RunConfig {
    fn field(&self) -> hmf_core::Result<TotallyRealField> {
        TotallyRealField::parse(&self.field)?.with_precision(self.prec)
    }

    fn sources(&self) -> FormSource {
        FormSource { cache_dir: self.cache_dir.clone() }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generalized Kloosterman sum with its Weil bound.
    Kloosterman(KlArgs),
    /// Bessel function J_u(x).
    Bessel(BesselArgs),
    /// The AFE cutoff V_s(y).
    Vfunc(VArgs),
    /// Central value L(f x g, 1/2) from the approximate functional equation.
    Afe(AfeArgs),
    /// Both sides of the Petersson trace formula.
    TraceVerify(TraceArgs),
    /// Twisted first moment over a range of prime levels.
    Moment(MomentArgs),
    /// Slope fits and coefficient estimates over saved moment reports.
    Fit(FitArgs),
    /// Fetch an eigenvalue record from the remote service or the cache.
    Fetch(FetchArgs),
}

/// Field elements are written `a`, `a,b` or `a,b/d` for `(a + b w) / d`,
/// where `w` is the ring-of-integers generator.
#[derive(Args, Debug)]
struct KlArgs {
    #[arg(long, allow_hyphen_values = true)]
    m: String,
    #[arg(long, allow_hyphen_values = true)]
    n: String,
    #[arg(long, allow_hyphen_values = true)]
    c: String,
    /// Generator of the ideal a (nu lies in a^-1).
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    a: String,
    /// Generator of the ideal b (xi lies in b^-1).
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    b: String,
    /// Generator of the ideal cc (c lies in cc^-1).
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    cc: String,
}

#[derive(Args, Debug)]
struct BesselArgs {
    #[arg(long)]
    u: u32,
    /// One or more arguments in [0, 1000], comma separated.
    #[arg(long, value_delimiter = ',')]
    x: Vec<f64>,
}

#[derive(Args, Debug)]
struct VArgs {
    /// One or more positive arguments, comma separated.
    #[arg(long, value_delimiter = ',')]
    y: Vec<f64>,
    /// Weights of f, one per real place.
    #[arg(long, value_delimiter = ',')]
    k: Vec<u32>,
    /// Weights of g, one per real place.
    #[arg(long, value_delimiter = ',')]
    l: Vec<u32>,
    #[arg(long = "G", default_value = "constant")]
    g: String,
    #[arg(long, default_value_t = 0.5)]
    s: f64,
    /// Abscissa of the right contour.
    #[arg(long)]
    sigma: Option<f64>,
}

#[derive(Args, Debug)]
struct AfeArgs {
    /// Form label: a `.hmf` path, `delta`, `e4delta`, `N.k.i` or a cached label.
    #[arg(long)]
    f: String,
    #[arg(long)]
    g: String,
    #[arg(long = "X", default_value_t = 1.0)]
    x: f64,
    #[arg(long = "G", default_value = "constant")]
    test_function: String,
    /// Largest acceptable absolute error budget.
    #[arg(long, default_value_t = 1e-8)]
    max_budget: f64,
}

#[derive(Args, Debug)]
struct TraceArgs {
    /// Parallel weight k.
    #[arg(long)]
    weight: u32,
    /// Level generator (a positive integer).
    #[arg(long, default_value_t = 1)]
    level: u64,
    /// Pairs `m,p` separated by `;`, each entry a positive integer.
    #[arg(long, default_value = "1,1;1,2;2,3")]
    pairs: String,
    /// Largest N((c) cc) kept in the geometric side.
    #[arg(long, default_value_t = 400)]
    cutoff: u64,
    /// Allowed |geometric - spectral| beyond the tail bound.
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
}

#[derive(Args, Debug)]
struct MomentArgs {
    /// Label of the fixed form g.
    #[arg(long)]
    g: String,
    /// Twist p (a positive integer coprime to the levels).
    #[arg(long, default_value_t = 1)]
    p: u64,
    /// Inclusive range `a:b` of prime levels.
    #[arg(long)]
    q_range: String,
    /// Weight of the forms summed over.
    #[arg(long)]
    weight: u32,
    #[arg(long = "G", default_value = "constant")]
    test_function: String,
    /// Also write the reports as CSV to this path.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FitArgs {
    /// Moment reports (JSON lines) at the twist p.
    #[arg(long)]
    input: PathBuf,
    /// Reports for the same form at p = 1, for the coefficient estimate.
    #[arg(long)]
    at_one: Option<PathBuf>,
    /// Reports of a second form at p, to distinguish the two.
    #[arg(long, requires = "other_at_one")]
    other: Option<PathBuf>,
    #[arg(long)]
    other_at_one: Option<PathBuf>,
    /// Distinguisher tolerance on |C_g(p) - C_h(p)|.
    #[arg(long, default_value_t = 0.25)]
    tol: f64,
    /// Level of g, for the predicted slope.
    #[arg(long, default_value_t = 1)]
    g_level: u64,
}

#[derive(Args, Debug)]
struct FetchArgs {
    #[arg(long)]
    label: String,
    /// Eigenvalues are needed for all primes up to this bound.
    #[arg(long)]
    up_to: u64,
    /// Never touch the network.
    #[arg(long)]
    offline: bool,
    /// Service base URL; defaults to the HMF_ENDPOINT variable.
    #[arg(long)]
    endpoint: Option<String>,
    /// Ignore http_proxy-style variables.
    #[arg(long)]
    no_proxy: bool,
    /// Also write the record to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure of a subcommand, tagged with the module that raised it.
enum Failure {
    Budget(String),
    Compute(&'static str, HmfError),
    Io(std::io::Error),
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

type Outcome = Result<(), Failure>;

trait Tag<T> {
    fn tag(self, module: &'static str) -> Result<T, Failure>;
}

impl<T> Tag<T> for hmf_core::Result<T> {
    fn tag(self, module: &'static str) -> Result<T, Failure> {
        self.map_err(|e| Failure::Compute(module, e))
    }
}

fn parse_element(s: &str) -> hmf_core::Result<FieldElement> {
    let bad = || HmfError::Argument(format!("cannot parse field element {s:?}"));
    let (body, den) = match s.split_once('/') {
        Some((b, d)) => (b, d.trim().parse::<i128>().map_err(|_| bad())?),
        None => (s, 1),
    };
    if den == 0 {
        return Err(bad());
    }
    let parts: Vec<i128> = body
        .split(',')
        .map(|p| p.trim().parse::<i128>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    let (a, b) = match parts[..] {
        [a] => (a, 0),
        [a, b] => (a, b),
        _ => return Err(bad()),
    };
    let r = |x: i128| hmf_core::field::rat(x, den);
    Ok(FieldElement::new(r(a), r(b)))
}

fn check_element(field: &TotallyRealField, x: &FieldElement) -> hmf_core::Result<()> {
    if field.is_rational() && *x.b.numer() != 0 {
        return Err(HmfError::Argument(format!("{x} is not rational")));
    }
    Ok(())
}

#[derive(Serialize)]
struct KlRecord {
    field: String,
    m: String,
    n: String,
    c: String,
    re: f64,
    im: f64,
    bound: f64,
    domain_size: u128,
}

fn run_kloosterman(run: &RunConfig, a: &KlArgs) -> Outcome {
    let field = run.field().tag("field")?;
    let el = |s: &str| -> hmf_core::Result<FieldElement> {
        let x = parse_element(s)?;
        check_element(&field, &x)?;
        Ok(x)
    };
    let ideal = |s: &str| -> hmf_core::Result<Ideal> { Ideal::principal(&field, &el(s)?) };
    let p = (|| KloostermanParams::new(&field, el(&a.m)?, ideal(&a.a)?, el(&a.n)?, ideal(&a.b)?, el(&a.c)?, ideal(&a.cc)?))()
        .tag("exp_sums")?;
    let v = kloosterman(&field, &p).tag("exp_sums")?;
    let bound = weil_bound(&field, &p).tag("exp_sums")?;
    let size = ResidueDomain::new(&field, &p.a, &p.c, &p.cc).tag("exp_sums")?.size();
    let rec = KlRecord {
        field: field.tag(),
        m: a.m.clone(),
        n: a.n.clone(),
        c: a.c.clone(),
        re: v.re,
        im: v.im,
        bound,
        domain_size: size,
    };
    emit(run.format, &[&rec])?;
    eprintln!("Kl = {:.12} (|Im| {:.1e}), Weil bound {:.6}, {} residues", v.re, v.im.abs(), bound, size);
    if v.norm() > bound * (1.0 + 1e-12) || v.im.abs() > 1e-9 {
        return Err(Failure::Budget("Kloosterman sum outside the Weil bound or not real".into()));
    }
    Ok(())
}

#[derive(Serialize)]
struct ValueRecord {
    u: u32,
    x: f64,
    value: f64,
    error_budget: f64,
}

fn run_bessel(run: &RunConfig, a: &BesselArgs) -> Outcome {
    let mut rows = Vec::new();
    for &x in &a.x {
        if !(0.0..=1000.0).contains(&x) {
            return Err(Failure::Compute("analysis", HmfError::Argument(format!("x = {x} outside [0, 1000]"))));
        }
        rows.push(ValueRecord { u: a.u, x, value: bessel_j(a.u, x).tag("analysis")?, error_budget: 1e-12 });
    }
    emit(run.format, &rows)?;
    eprintln!("{} values of J_{}", rows.len(), a.u);
    Ok(())
}

#[derive(Serialize)]
struct VRecord {
    y: f64,
    s: f64,
    value: f64,
    error_budget: f64,
}

/// The quadrature budget `cutoff_v` promises.
const V_BUDGET: f64 = 1e-9;

fn run_vfunc(run: &RunConfig, a: &VArgs) -> Outcome {
    let g = TestFunction::parse(&a.g).tag("analysis")?;
    let mut cfg = CutoffFunction::new(a.k.clone(), a.l.clone(), g).tag("analysis")?;
    if let Some(s) = a.sigma {
        cfg = cfg.with_sigma(s);
    }
    let kernel = VKernel::new(&cfg, a.s).tag("analysis")?;
    let mut rows = Vec::new();
    for &y in &a.y {
        let value = kernel.eval(y).tag("analysis")?;
        rows.push(VRecord { y, s: a.s, value, error_budget: kernel.error_budget(y) });
    }
    emit(run.format, &rows)?;
    let worst = rows.iter().map(|r| r.error_budget).fold(0.0, f64::max);
    eprintln!("{} values of V, largest budget {worst:.1e}", rows.len());
    if worst > V_BUDGET {
        return Err(Failure::Budget(format!("V budget {worst:.1e} above {V_BUDGET:.0e}")));
    }
    Ok(())
}

#[derive(Serialize)]
struct AfeRecord {
    f: String,
    g: String,
    x: f64,
    test_function: String,
    value: f64,
    truncation: u64,
    error_budget: f64,
}

fn run_afe(run: &RunConfig, a: &AfeArgs) -> Outcome {
    let src = run.sources();
    let g = TestFunction::parse(&a.test_function).tag("analysis")?;
    // the truncation depends only on levels and weights
    let f0 = src.form(&a.f, 50).tag("data_io")?;
    let g0 = src.form(&a.g, 50).tag("data_io")?;
    let pair = RsPair::new(&f0, &g0).tag("rankin_selberg")?;
    let cfg = pair.cutoff(g).tag("rankin_selberg")?;
    let kernel = VKernel::new(&cfg, 0.5).tag("analysis")?;
    let m_max = pair.truncation_length(&kernel, a.x, 1e-13).tag("rankin_selberg")?;
    let f = src.form(&a.f, m_max).tag("data_io")?;
    let gg = src.form(&a.g, m_max).tag("data_io")?;
    let pair = RsPair::new(&f, &gg).tag("rankin_selberg")?;
    let r = afe_central_value(&pair, &cfg, a.x).tag("rankin_selberg")?;
    let rec = AfeRecord {
        f: a.f.clone(),
        g: a.g.clone(),
        x: a.x,
        test_function: a.test_function.clone(),
        value: r.value,
        truncation: r.truncation,
        error_budget: r.error_budget,
    };
    emit(run.format, &[&rec])?;
    eprintln!("L({} x {}, 1/2) = {:.12} (m <= {}, budget {:.1e})", a.f, a.g, r.value, r.truncation, r.error_budget);
    if r.error_budget > a.max_budget {
        return Err(Failure::Budget(format!("AFE budget {:.1e} above {:.1e}", r.error_budget, a.max_budget)));
    }
    Ok(())
}

#[derive(Serialize)]
struct TraceRecord {
    field: String,
    weight: u32,
    level: u64,
    m: u64,
    p: u64,
    geometric: f64,
    diagonal: f64,
    off_diagonal: f64,
    tail_bound: f64,
    spectral: Option<f64>,
    residual: Option<f64>,
    solver_residual: Option<f64>,
}

fn parse_pairs(s: &str) -> hmf_core::Result<Vec<(u64, u64)>> {
    s.split(';')
        .map(|p| {
            let (m, q) = p.split_once(',').ok_or_else(|| HmfError::Argument(format!("pair {p:?} needs m,p")))?;
            let parse = |x: &str| {
                x.trim().parse::<u64>().ok().filter(|&v| v > 0).ok_or_else(|| HmfError::Argument(format!("bad entry {x:?}")))
            };
            Ok((parse(m)?, parse(q)?))
        })
        .collect()
}

fn run_trace(run: &RunConfig, a: &TraceArgs) -> Outcome {
    let field = run.field().tag("field")?;
    let pairs = parse_pairs(&a.pairs).tag("cli")?;
    let cls = NarrowClassGroup::new(&field).tag("ideals")?;
    let id = |n: u64| Ideal::from_int(&field, n as i128);
    // spectral side from modular symbols: Q, prime (or unit) level
    let solve = if field.is_rational() && (a.level == 1 || is_prime(a.level)) {
        let largest = pairs.iter().map(|&(m, p)| m.max(p)).max().unwrap_or(1);
        let dim = (a.weight as u64 - 1) * (a.level + 1) / 12 + 2;
        Some(forms::full_basis(a.level, a.weight, largest.max(2 * dim + 60)).tag("petersson")?)
    } else {
        eprintln!("no eigenform source for this field and level: geometric side only");
        None
    };
    let mut rows = Vec::new();
    let mut bad = 0;
    for &(m, p) in &pairs {
        let spec = GeometricSideSpec {
            m: id(m).tag("ideals")?,
            p: id(p).tag("ideals")?,
            level: id(a.level).tag("ideals")?,
            weight: vec![a.weight; field.degree()],
            cutoff: a.cutoff,
            nu_twist: None,
        };
        let geo = geometric_side(&spec, &cls).tag("petersson")?;
        let (spectral, residual, solver) = match &solve {
            Some(s) => {
                let v = spectral_side_n(&s.basis, m, p).tag("petersson")?;
                let r = (geo.value - v).abs();
                if r > geo.tail_bound + a.tol {
                    bad += 1;
                }
                (Some(v), Some(r), Some(s.fit_residual.max(s.holdout_residual)))
            }
            None => (None, None, None),
        };
        eprintln!(
            "({m},{p}): geometric {:.10} (tail {:.1e}){}",
            geo.value,
            geo.tail_bound,
            spectral.map(|v| format!(", spectral {v:.10}")).unwrap_or_default()
        );
        rows.push(TraceRecord {
            field: field.tag(),
            weight: a.weight,
            level: a.level,
            m,
            p,
            geometric: geo.value,
            diagonal: geo.diagonal,
            off_diagonal: geo.off_diagonal,
            tail_bound: geo.tail_bound,
            spectral,
            residual,
            solver_residual: solver,
        });
    }
    emit(run.format, &rows)?;
    if bad > 0 {
        return Err(Failure::Budget(format!("{bad} pairs disagree beyond tail + {:.0e}", a.tol)));
    }
    Ok(())
}

fn parse_range(s: &str) -> hmf_core::Result<(u64, u64)> {
    let bad = || HmfError::Argument(format!("range {s:?} must be a:b"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    let a: u64 = a.trim().parse().map_err(|_| bad())?;
    let b: u64 = b.trim().parse().map_err(|_| bad())?;
    if a > b {
        return Err(bad());
    }
    Ok((a, b))
}

fn run_moment(run: &RunConfig, a: &MomentArgs) -> Outcome {
    let field = run.field().tag("field")?;
    if !field.is_rational() {
        return Err(Failure::Compute("moment", HmfError::Argument("the moment runs over QQ only".into())));
    }
    let (lo, hi) = parse_range(&a.q_range).tag("cli")?;
    let opts = MomentOptions { test_function: TestFunction::parse(&a.test_function).tag("analysis")?, ..Default::default() };
    let src = run.sources();
    let probe = src.form(&a.g, 50).tag("data_io")?;
    let n = probe.level_norm();
    let levels: Vec<u64> = (lo..=hi).filter(|&q| is_prime(q) && n % q != 0 && a.p % q != 0).collect();
    let Some(&top) = levels.last() else {
        return Err(Failure::Compute("cli", HmfError::Argument(format!("no admissible prime in {lo}:{hi}"))));
    };
    // the largest level needs the longest table
    let needed = match MomentContext::new(&probe, a.p, top, a.weight, opts.clone()) {
        Err(HmfError::TableShortfall { needed, .. }) => needed,
        Err(e) => return Err(Failure::Compute("moment", e)),
        Ok(_) => 50,
    };
    let g = src.form(&a.g, needed).tag("data_io")?;
    let mut reports = Vec::new();
    for &q in &levels {
        let ctx = MomentContext::new(&g, a.p, q, a.weight, opts.clone()).tag("moment")?;
        let sol = forms::full_basis(q, a.weight, ctx.m_max.max(200)).tag("petersson")?;
        let r = ctx.report(&sol.basis, sol.fit_residual.max(sol.holdout_residual)).tag("moment")?;
        eprintln!(
            "q = {q}: LHS {:.10} M {:.10} E {:.3e} residual {:.1e} budget {:.1e}{}",
            r.lhs,
            r.main_term,
            r.error_term,
            r.residual,
            r.budget_total,
            if r.within_budget() { "" } else { "  OVER BUDGET" }
        );
        reports.push(r);
    }
    emit(run.format, &reports)?;
    if let Some(path) = &a.csv {
        let mut f = std::fs::File::create(path)?;
        output::write_rows(Format::Csv, &reports, &mut f)?;
    }
    let over = reports.iter().filter(|r| !r.within_budget()).count();
    if over > 0 {
        return Err(Failure::Budget(format!("{over} levels exceed their error budget")));
    }
    Ok(())
}

fn read_reports(path: &PathBuf) -> Result<Vec<MomentReport>, Failure> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| {
                Failure::Compute("moment", HmfError::Parse { line: i + 1, msg: e.to_string() })
            })
        })
        .collect()
}

#[derive(Serialize)]
struct FitRecord {
    reports: usize,
    slope: f64,
    slope_stderr: f64,
    intercept: f64,
    target_slope: f64,
    error_slope: Option<f64>,
    coefficient: Option<f64>,
    coefficient_spread: Option<f64>,
    verdict: Option<String>,
}

fn run_fit(run: &RunConfig, a: &FitArgs) -> Outcome {
    let reports = read_reports(&a.input)?;
    let fit = slope_fit(&reports).tag("moment")?;
    let error_slope = if reports.iter().all(|r| r.error_term != 0.0) {
        Some(error_decay_slope(&reports).tag("moment")?.slope)
    } else {
        None
    };
    let level_primes: Vec<u64> = factor(a.g_level as u128).into_iter().map(|(p, _)| p as u64).collect();
    let mut rec = FitRecord {
        reports: reports.len(),
        slope: fit.slope,
        slope_stderr: fit.stderr,
        intercept: fit.intercept,
        target_slope: target_slope(1.0, &level_primes),
        error_slope,
        coefficient: None,
        coefficient_spread: None,
        verdict: None,
    };
    if let Some(p1) = &a.at_one {
        let at_one = read_reports(p1)?;
        let (c, s) = estimate_coefficient(&reports, &at_one).tag("moment")?;
        rec.coefficient = Some(c);
        rec.coefficient_spread = Some(s);
        if let (Some(hp), Some(h1)) = (&a.other, &a.other_at_one) {
            let v = distinguish_forms(&reports, &at_one, &read_reports(hp)?, &read_reports(h1)?, a.tol).tag("moment")?;
            rec.verdict = Some(match v {
                Verdict::Distinguished { p, c_g, c_h } => format!("distinguished at p = {p}: {c_g:.6} vs {c_h:.6}"),
                Verdict::Indistinguishable { tolerance, difference } => {
                    format!("indistinguishable: difference {difference:.3e} within {tolerance:.3e}")
                }
            });
        }
    }
    eprintln!("slope {:.4} +- {:.4} (predicted {:.4})", rec.slope, rec.slope_stderr, rec.target_slope);
    if let Some(v) = &rec.verdict {
        eprintln!("{v}");
    }
    emit(run.format, &[&rec])?;
    let over = reports.iter().filter(|r| !r.within_budget()).count();
    if over > 0 {
        return Err(Failure::Budget(format!("{over} input reports exceed their error budget")));
    }
    Ok(())
}

fn run_fetch(run: &RunConfig, a: &FetchArgs) -> Outcome {
    let dir = run
        .cache_dir
        .clone()
        .ok_or_else(|| Failure::Compute("data_io", HmfError::Argument("--cache-dir (or HMF_CACHE) is required".into())))?;
    let cache = Cache::open(dir).tag("data_io")?;
    let mut cfg = RemoteConfig::from_env(a.offline);
    if a.endpoint.is_some() {
        cfg.endpoint = a.endpoint.clone();
    }
    cfg.env_proxy = !a.no_proxy;
    let rec = fetch_remote(&a.label, a.up_to, &cfg, &cache).tag("data_io")?;
    let text = rec.to_text().tag("data_io")?;
    print!("{text}");
    if let Some(path) = &a.out {
        hmf_core::data_io::write_file(path, &rec).tag("data_io")?;
    }
    eprintln!("{}: {} primes up to {} ({:?})", rec.label, rec.ap.len(), rec.max_norm(), rec.source);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = &cli.run;
    if let Err(e) = run.field() {
        eprintln!("error [field]: {e}");
        return ExitCode::from(3);
    }
    let res = match &cli.cmd {
        Command::Kloosterman(a) => run_kloosterman(run, a),
        Command::Bessel(a) => run_bessel(run, a),
        Command::Vfunc(a) => run_vfunc(run, a),
        Command::Afe(a) => run_afe(run, a),
        Command::TraceVerify(a) => run_trace(run, a),
        Command::Moment(a) => run_moment(run, a),
        Command::Fit(a) => run_fit(run, a),
        Command::Fetch(a) => run_fetch(run, a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Budget(msg)) => {
            eprintln!("budget violation: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Compute(module, e)) => {
            eprintln!("error [{module}]: {e}");
            ExitCode::from(3)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error [io]: {e}");
            ExitCode::from(3)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn element_syntax() {
        let x = parse_element("3,-2/4").unwrap();
        assert_eq!(x, FieldElement::new(hmf_core::field::rat(3, 4), hmf_core::field::rat(-1, 2)));
        assert_eq!(parse_element("-5").unwrap(), FieldElement::from_int(-5));
        assert!(parse_element("1,2,3").is_err());
        assert!(parse_element("1/0").is_err());
        assert!(parse_element("x").is_err());
    }

    #[test]
    fn pairs_and_ranges() {
        assert_eq!(parse_pairs("1,1; 2,3").unwrap(), vec![(1, 1), (2, 3)]);
        assert!(parse_pairs("1").is_err());
        assert!(parse_pairs("0,1").is_err());
        assert_eq!(parse_range("101:499").unwrap(), (101, 499));
        assert!(parse_range("5:3").is_err());
    }

    #[test]
    fn clap_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
