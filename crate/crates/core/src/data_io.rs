//! Eigenform records: text format, validation, cache and remote fetch.
//!
//! # Record format (`hmf-eigenform v1`)
//!
//! UTF-8 text, one `key<TAB>value...` line each, in this order:
//!
//! ```text
//! hmf-eigenform v1
//! label           <escaped label>
//! field           QQ | Qsqrt:<d>
//! weight          k_1,...,k_n
//! level           <norm><TAB><a> <b> <c> <den>
//! normalization   arithmetic | unitary
//! source          file | remote | cache
//! ap              <norm><TAB><a> <b> <c> <den><TAB><value>     (one per prime, increasing norm)
//! checksum        sha256:<hex>
//! ```
//!
//! Ideals are written as their canonical Hermite data (see
//! [`Ideal::hnf_data`]). Values are integers (`-24`), rationals (`3/7`) or, for
//! eigenvalues outside `Q`, round-trip floats prefixed by `~`. Labels escape
//! `\`, tab and newline as `\\`, `\t`, `\n`. The checksum is SHA-256 over
//! every preceding line including its `\n`.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime};

use sha2::{Digest, Sha256};

use crate::field::TotallyRealField;
use crate::ideal::Ideal;
use crate::rankin_selberg::{Eigenform, Normalization};
use crate::{HmfError, Result};

pub const SCHEMA: &str = "hmf-eigenform v1";

/// `tau(n)` for `1 <= n <= len` (index 0 unused), from `Delta = q J(q)^8`
/// with `J = sum (-1)^k (2k+1) q^{k(k+1)/2}`.
pub fn delta_expansion(len: usize) -> Vec<i128> {
    let mut j = vec![0i128; len];
    let mut k = 0usize;
    while k * (k + 1) / 2 < len {
        j[k * (k + 1) / 2] = if k % 2 == 0 { 2 * k as i128 + 1 } else { -(2 * k as i128 + 1) };
        k += 1;
    }
    let square = |a: &[i128]| -> Vec<i128> {
        let mut out = vec![0i128; len];
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (o, &y) in out[i..].iter_mut().zip(a) {
                *o += x * y;
            }
        }
        out
    };
    let j8 = square(&square(&square(&j)));
    let mut tau = vec![0i128; len + 1];
    tau[1..].copy_from_slice(&j8);
    tau
}

/// Coefficients of `E_4 Delta`, the weight-16 level-one eigenform, for
/// `1 <= n <= len`.
pub fn e4_delta_expansion(len: usize) -> Result<Vec<i128>> {
    let tau = delta_expansion(len);
    let mut e4 = vec![0i128; len + 1];
    e4[0] = 1;
    for (n, e) in e4.iter_mut().enumerate().skip(1) {
        let s3: i128 = (1..=n).filter(|d| n % d == 0).map(|d| (d as i128).pow(3)).sum();
        *e = 240 * s3;
    }
    let mut out = vec![0i128; len + 1];
    for n in 1..=len {
        let mut s = 0i128;
        for j in 0..n {
            let t = e4[j].checked_mul(tau[n - j]).ok_or(HmfError::Overflow("E4 Delta coefficient"))?;
            s = s.checked_add(t).ok_or(HmfError::Overflow("E4 Delta coefficient"))?;
        }
        out[n] = s;
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub enum Eigenvalue {
    Int(i128),
    Rational(i128, i128),
    /// A float for eigenvalues that are not rational.
    Approx(f64),
}

impl Eigenvalue {
    pub fn to_f64(&self) -> f64 {
        match self {
            Eigenvalue::Int(n) => *n as f64,
            Eigenvalue::Rational(a, b) => *a as f64 / *b as f64,
            Eigenvalue::Approx(x) => *x,
        }
    }

    /// Integers stay exact, everything else becomes [`Eigenvalue::Approx`].
    pub fn from_f64(x: f64) -> Self {
        if x.fract() == 0.0 && x.abs() < 9.0e15 {
            Eigenvalue::Int(x as i128)
        } else {
            Eigenvalue::Approx(x)
        }
    }

    fn render(&self) -> String {
        match self {
            Eigenvalue::Int(n) => n.to_string(),
            Eigenvalue::Rational(a, b) => format!("{a}/{b}"),
            Eigenvalue::Approx(x) => format!("~{x:e}"),
        }
    }

    fn parse(s: &str) -> std::result::Result<Self, String> {
        if let Some(f) = s.strip_prefix('~') {
            let x: f64 = f.parse().map_err(|_| format!("bad float {s:?}"))?;
            if !x.is_finite() {
                return Err(format!("non-finite value {s:?}"));
            }
            return Ok(Eigenvalue::Approx(x));
        }
        if let Some((a, b)) = s.split_once('/') {
            let a: i128 = a.parse().map_err(|_| format!("bad numerator {s:?}"))?;
            let b: i128 = b.parse().map_err(|_| format!("bad denominator {s:?}"))?;
            if b <= 0 {
                return Err(format!("denominator must be positive in {s:?}"));
            }
            let g = num_integer::gcd(a, b);
            if g != 1 {
                return Err(format!("{s:?} is not in lowest terms"));
            }
            return Ok(if b == 1 { Eigenvalue::Int(a) } else { Eigenvalue::Rational(a, b) });
        }
        s.parse().map(Eigenvalue::Int).map_err(|_| format!("bad integer {s:?}"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum Source {
    File,
    Remote,
    Cache,
}

impl Source {
    fn tag(&self) -> &'static str {
        match self {
            Source::File => "file",
            Source::Remote => "remote",
            Source::Cache => "cache",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenformRecord {
    pub label: String,
    pub field: TotallyRealField,
    pub weight: Vec<u32>,
    pub level: Ideal,
    pub normalization: Normalization,
    pub source: Source,
    /// `(prime, eigenvalue)` in increasing norm.
    pub ap: Vec<(Ideal, Eigenvalue)>,
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('\t', "\\t").replace('\n', "\\n")
}

fn unescape(s: &str) -> std::result::Result<String, String> {
    let mut out = String::new();
    let mut it = s.chars();
    while let Some(ch) = it.next() {
        if ch == '\\' {
            match it.next() {
                Some('\\') => out.push('\\'),
                Some('t') => out.push('\t'),
                Some('n') => out.push('\n'),
                other => return Err(format!("bad escape \\{other:?}")),
            }
        } else {
            out.push(ch);
        }
    }
    Ok(out)
}

fn render_ideal(field: &TotallyRealField, i: &Ideal) -> Result<String> {
    let (a, b, c, d) = i.hnf_data();
    Ok(format!("{}\t{a} {b} {c} {d}", i.norm_int(field)?))
}

impl EigenformRecord {
    /// A record over `Q` from `(p, a_p)` pairs.
    pub fn rational(label: &str, weight: u32, level: u64, normalization: Normalization, ap: &[(u64, Eigenvalue)]) -> Result<Self> {
        let q = TotallyRealField::rationals();
        let ap = ap
            .iter()
            .map(|(p, v)| Ok((Ideal::from_int(&q, *p as i128)?, v.clone())))
            .collect::<Result<Vec<_>>>()?;
        let r = Self {
            label: label.to_string(),
            level: Ideal::from_int(&q, level as i128)?,
            field: q,
            weight: vec![weight],
            normalization,
            source: Source::File,
            ap,
        };
        r.validate()?;
        Ok(r)
    }

    /// The record of Delta with `tau(p)` for every prime `p <= up_to`.
    pub fn delta(up_to: u64) -> Result<Self> {
        let tau = delta_expansion(up_to as usize);
        let ap: Vec<(u64, Eigenvalue)> =
            crate::util::primes_up_to(up_to).into_iter().map(|p| (p, Eigenvalue::Int(tau[p as usize]))).collect();
        Self::rational("delta", 12, 1, Normalization::Arithmetic, &ap)
    }

    /// The record of `E_4 Delta` (weight 16, level one).
    pub fn e4_delta(up_to: u64) -> Result<Self> {
        let c = e4_delta_expansion(up_to as usize)?;
        let ap: Vec<(u64, Eigenvalue)> =
            crate::util::primes_up_to(up_to).into_iter().map(|p| (p, Eigenvalue::Int(c[p as usize]))).collect();
        Self::rational("e4delta", 16, 1, Normalization::Arithmetic, &ap)
    }

    /// Largest prime norm present.
    pub fn max_norm(&self) -> u64 {
        self.ap.iter().filter_map(|(p, _)| p.norm_int(&self.field).ok()).max().unwrap_or(1)
    }

    /// Deligne's bound over `Q` (and ordering / weight sanity everywhere).
    pub fn validate(&self) -> Result<()> {
        let f = &self.field;
        if self.weight.len() != f.degree() || self.weight.iter().any(|k| *k == 0 || k % 2 != 0) {
            return Err(HmfError::Argument(format!("bad weight {:?}", self.weight)));
        }
        let mut last = 0;
        for (p, v) in &self.ap {
            let n = p.norm_int(f)?;
            if n < last {
                return Err(HmfError::Argument("primes must be listed by increasing norm".into()));
            }
            last = n;
            let fac = p.factor(f)?;
            if fac.len() != 1 || fac[0].1 != 1 {
                return Err(HmfError::Argument(format!("{} is not prime", p.display(f))));
            }
            if f.is_rational() {
                let bound = match self.normalization {
                    Normalization::Arithmetic => 2.0 * (n as f64).powf((self.weight[0] - 1) as f64 / 2.0),
                    Normalization::Unitary => 2.0,
                };
                let x = v.to_f64();
                if !(x.abs() <= bound * (1.0 + 1e-12)) {
                    return Err(HmfError::Bound { p: n, value: x });
                }
            }
        }
        Ok(())
    }

    fn body(&self) -> Result<String> {
        let f = &self.field;
        let mut s = String::new();
        s.push_str(SCHEMA);
        s.push('\n');
        s.push_str(&format!("label\t{}\n", escape(&self.label)));
        s.push_str(&format!("field\t{}\n", f.tag()));
        let w: Vec<String> = self.weight.iter().map(|k| k.to_string()).collect();
        s.push_str(&format!("weight\t{}\n", w.join(",")));
        s.push_str(&format!("level\t{}\n", render_ideal(f, &self.level)?));
        s.push_str(&format!("normalization\t{}\n", self.normalization.tag()));
        s.push_str(&format!("source\t{}\n", self.source.tag()));
        for (p, v) in &self.ap {
            s.push_str(&format!("ap\t{}\t{}\n", render_ideal(f, p)?, v.render()));
        }
        Ok(s)
    }

    pub fn to_text(&self) -> Result<String> {
        let body = self.body()?;
        let sum = hex::encode(Sha256::digest(body.as_bytes()));
        Ok(format!("{body}checksum\tsha256:{sum}\n"))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let perr = |line: usize, msg: String| HmfError::Parse { line, msg };
        let lines: Vec<&str> = text.split_inclusive('\n').collect();
        if lines.first().map(|l| l.trim_end()) != Some(SCHEMA) {
            return Err(perr(1, format!("expected schema line {SCHEMA:?}")));
        }
        let last = lines.len();
        let check_line = lines[last - 1];
        let Some(found) = check_line.trim_end_matches('\n').strip_prefix("checksum\tsha256:") else {
            return Err(perr(last, "missing checksum line (truncated file?)".into()));
        };
        if !check_line.ends_with('\n') {
            return Err(perr(last, "unterminated checksum line".into()));
        }
        let body: String = lines[..last - 1].concat();
        let expected = hex::encode(Sha256::digest(body.as_bytes()));
        if expected != found {
            return Err(HmfError::Checksum { expected, found: found.to_string() });
        }
        let mut fields: Vec<(usize, Vec<&str>)> = Vec::new();
        for (i, l) in lines[1..last - 1].iter().enumerate() {
            let l = l.strip_suffix('\n').ok_or_else(|| perr(i + 2, "unterminated line".into()))?;
            fields.push((i + 2, l.split('\t').collect()));
        }
        let mut it = fields.into_iter();
        let mut header = |key: &str, arity: usize| -> Result<(usize, Vec<String>)> {
            let (ln, parts) = it.next().ok_or_else(|| perr(last, format!("missing {key}")))?;
            if parts[0] != key || parts.len() != arity + 1 {
                return Err(perr(ln, format!("expected {key} with {arity} value(s)")));
            }
            Ok((ln, parts[1..].iter().map(|s| s.to_string()).collect()))
        };
        let (ln, v) = header("label", 1)?;
        let label = unescape(&v[0]).map_err(|m| perr(ln, m))?;
        let (ln, v) = header("field", 1)?;
        let field = TotallyRealField::parse(&v[0]).map_err(|e| perr(ln, e.to_string()))?;
        let (ln, v) = header("weight", 1)?;
        let weight = v[0]
            .split(',')
            .map(|k| k.parse::<u32>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| perr(ln, "bad weight".into()))?;
        let (ln, v) = header("level", 2)?;
        let level = parse_ideal(&field, &v[0], &v[1]).map_err(|m| perr(ln, m))?;
        let (ln, v) = header("normalization", 1)?;
        let normalization = Normalization::parse(&v[0]).map_err(|e| perr(ln, e.to_string()))?;
        let (ln, v) = header("source", 1)?;
        let source = match v[0].as_str() {
            "file" => Source::File,
            "remote" => Source::Remote,
            "cache" => Source::Cache,
            other => return Err(perr(ln, format!("unknown source {other:?}"))),
        };
        drop(header);
        let mut ap = Vec::new();
        for (ln, parts) in it {
            if parts.len() != 4 || parts[0] != "ap" {
                return Err(perr(ln, "expected ap<TAB>norm<TAB>ideal<TAB>value".into()));
            }
            let p = parse_ideal(&field, parts[1], parts[2]).map_err(|m| perr(ln, m))?;
            let v = Eigenvalue::parse(parts[3]).map_err(|m| perr(ln, m))?;
            ap.push((p, v));
        }
        let r = Self { label, field, weight, level, normalization, source, ap };
        r.validate()?;
        Ok(r)
    }

    /// The eigenform with coefficients extended to norm `up_to`.
    pub fn to_eigenform(&self, up_to: u64) -> Result<Eigenform> {
        let primes = self.ap.iter().map(|(p, v)| (p.clone(), v.to_f64())).collect();
        let mut f = Eigenform::new(&self.label, &self.field, self.weight.clone(), self.level.clone(), self.normalization, primes)?;
        f.extend_coefficients(up_to)?;
        Ok(f)
    }
}

fn parse_ideal(field: &TotallyRealField, norm: &str, hnf: &str) -> std::result::Result<Ideal, String> {
    let n: u64 = norm.parse().map_err(|_| format!("bad norm {norm:?}"))?;
    let parts: Vec<i128> = hnf
        .split(' ')
        .map(|x| x.parse::<i128>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| format!("bad ideal data {hnf:?}"))?;
    if parts.len() != 4 {
        return Err(format!("ideal data needs 4 integers, got {hnf:?}"));
    }
    let i = Ideal::from_hnf_data(field, parts[0], parts[1], parts[2], parts[3]).map_err(|e| e.to_string())?;
    if i.norm_int(field).map_err(|e| e.to_string())? != n {
        return Err(format!("norm {n} does not match the ideal"));
    }
    Ok(i)
}

pub fn load_file(path: &Path) -> Result<EigenformRecord> {
    EigenformRecord::parse(&fs::read_to_string(path)?)
}

pub fn write_file(path: &Path, record: &EigenformRecord) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(record.to_text()?.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(tmp, path)?;
    Ok(())
}

/// Prime bound of the bundled Delta fixture.
pub const DELTA_FIXTURE_BOUND: u64 = 25_000;
/// Prime bound of the bundled `E_4 Delta` fixture.
pub const E4_DELTA_FIXTURE_BOUND: u64 = 20_000;

/// Directory of the bundled fixture records.
pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

const FIXTURE_MARK: &str = ".fixture";

fn file_name(label: &str) -> String {
    let safe: String = label.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' }).collect();
    format!("{safe}.hmf")
}

/// On-disk record cache with least-recently-used eviction. Files whose name
/// contains `.fixture` are pinned.
#[derive(Clone, Debug)]
pub struct Cache {
    dir: PathBuf,
}

impl Cache {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, label: &str) -> PathBuf {
        self.dir.join(file_name(label))
    }

    /// Cached record for `label`, marking it as recently used.
    pub fn get(&self, label: &str) -> Result<Option<EigenformRecord>> {
        let pinned = self.dir.join(file_name(label).replace(".hmf", &format!("{FIXTURE_MARK}.hmf")));
        for path in [pinned, self.path(label)] {
            if path.exists() {
                let mut r = load_file(&path)?;
                if r.label != label {
                    continue;
                }
                fs::File::options().append(true).open(&path)?.set_modified(SystemTime::now())?;
                r.source = Source::Cache;
                return Ok(Some(r));
            }
        }
        Ok(None)
    }

    pub fn put(&self, record: &EigenformRecord) -> Result<PathBuf> {
        let path = self.path(&record.label);
        write_file(&path, record)?;
        Ok(path)
    }

    /// Copies a record into the cache as a pinned fixture.
    pub fn pin(&self, record: &EigenformRecord) -> Result<PathBuf> {
        let path = self.dir.join(file_name(&record.label).replace(".hmf", &format!("{FIXTURE_MARK}.hmf")));
        write_file(&path, record)?;
        Ok(path)
    }

    /// Evicts least recently used records until the unpinned total is at
    /// most `max_bytes`. Returns the number evicted.
    pub fn gc(&self, max_bytes: u64) -> Result<usize> {
        let mut entries = Vec::new();
        let mut total = 0u64;
        for e in fs::read_dir(&self.dir)? {
            let e = e?;
            let name = e.file_name().to_string_lossy().to_string();
            if !name.ends_with(".hmf") || name.contains(FIXTURE_MARK) {
                continue;
            }
            let meta = e.metadata()?;
            total += meta.len();
            entries.push((meta.modified()?, name, meta.len(), e.path()));
        }
        entries.sort();
        let mut evicted = 0;
        for (_, _, len, path) in entries {
            if total <= max_bytes {
                break;
            }
            fs::remove_file(path)?;
            total -= len;
            evicted += 1;
        }
        Ok(evicted)
    }
}

/// Remote coefficient service. The endpoint has no default: it comes from
/// `HMF_ENDPOINT` or an explicit flag.
#[derive(Clone, Debug)]
pub struct RemoteConfig {
    pub endpoint: Option<String>,
    pub offline: bool,
    pub timeout: Duration,
    /// Honour `http_proxy`-style variables.
    pub env_proxy: bool,
}

pub const ENDPOINT_VAR: &str = "HMF_ENDPOINT";

impl RemoteConfig {
    pub fn from_env(offline: bool) -> Self {
        Self {
            endpoint: std::env::var(ENDPOINT_VAR).ok().filter(|s| !s.is_empty()),
            offline,
            timeout: Duration::from_secs(30),
            env_proxy: true,
        }
    }
}

/// Response body served by the endpoint at `GET <endpoint>/forms/<label>?up_to=<n>`.
#[derive(Clone, Debug, serde::Deserialize)]
struct RemoteForm {
    label: String,
    field: String,
    weight: Vec<u32>,
    level: u64,
    /// `[p, "value"]` with values in record syntax.
    ap: Vec<(u64, String)>,
    /// Optional composite coefficients `[n, "value"]` for spot checks.
    #[serde(default)]
    an: Vec<(u64, String)>,
}

fn record_from_remote(form: RemoteForm, up_to: u64) -> Result<EigenformRecord> {
    let field = TotallyRealField::parse(&form.field)?;
    if !field.is_rational() {
        return Err(HmfError::Argument("remote records are supported over Q only".into()));
    }
    let [k] = form.weight[..] else {
        return Err(HmfError::Argument(format!("weight {:?} over Q", form.weight)));
    };
    let ap = form
        .ap
        .iter()
        .map(|(p, v)| Ok((*p, Eigenvalue::parse(v).map_err(|m| HmfError::Parse { line: 0, msg: m })?)))
        .collect::<Result<Vec<_>>>()?;
    let mut r = EigenformRecord::rational(&form.label, k, form.level, Normalization::Arithmetic, &ap)?;
    r.source = Source::Remote;
    let largest = crate::util::primes_up_to(up_to).last().copied().unwrap_or(1);
    if r.max_norm() < largest {
        return Err(HmfError::TableShortfall { needed: up_to, available: r.max_norm() });
    }
    if !form.an.is_empty() {
        let n_max = form.an.iter().map(|(n, _)| *n).max().unwrap_or(1);
        let f = r.to_eigenform(n_max)?;
        for (n, v) in &form.an {
            let v = Eigenvalue::parse(v).map_err(|m| HmfError::Parse { line: 0, msg: m })?.to_f64();
            let w = f.coefficient_n(*n)?;
            if (v - w).abs() > 1e-9 * v.abs().max(1.0) {
                return Err(HmfError::Argument(format!("a({n}) = {v} is not multiplicative (expected {w})")));
            }
        }
    }
    Ok(r)
}

/// Fetches `label` with eigenvalues up to `up_to`, writing through to the
/// cache. Offline, or on a network failure, the cache answers.
pub fn fetch_remote(label: &str, up_to: u64, cfg: &RemoteConfig, cache: &Cache) -> Result<EigenformRecord> {
    let cached = cache.get(label)?.filter(|r| r.max_norm() >= crate::util::primes_up_to(up_to).last().copied().unwrap_or(1));
    if cfg.offline {
        return cached.ok_or_else(|| HmfError::NotFound(format!("{label} is not cached (offline)")));
    }
    let Some(endpoint) = &cfg.endpoint else {
        return cached.ok_or_else(|| HmfError::Network(format!("no endpoint configured (set {ENDPOINT_VAR})")));
    };
    let url = format!("{}/forms/{}?up_to={up_to}", endpoint.trim_end_matches('/'), label);
    let mut builder = ureq::Agent::config_builder().timeout_global(Some(cfg.timeout));
    if !cfg.env_proxy {
        builder = builder.proxy(None);
    }
    let agent: ureq::Agent = builder.build().into();
    match agent.get(&url).call() {
        Ok(mut resp) => {
            let body = resp.body_mut().read_to_string().map_err(|e| HmfError::Network(e.to_string()))?;
            let form: RemoteForm =
                serde_json::from_str(&body).map_err(|e| HmfError::Parse { line: e.line(), msg: e.to_string() })?;
            if form.label != label {
                return Err(HmfError::Argument(format!("asked for {label}, served {}", form.label)));
            }
            let r = record_from_remote(form, up_to)?;
            cache.put(&r)?;
            Ok(r)
        }
        Err(ureq::Error::StatusCode(404)) => Err(HmfError::NotFound(format!("unknown label {label}"))),
        Err(e) => cached.ok_or_else(|| HmfError::Network(e.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// The bundled fixtures are exactly what the q-expansion generators
    /// produce. `HMF_WRITE_FIXTURES=1` rewrites them.
    #[test]
    fn fixtures_match_generators() {
        let dir = fixtures_dir();
        for (name, rec) in [
            ("delta.hmf", EigenformRecord::delta(DELTA_FIXTURE_BOUND).unwrap()),
            ("e4delta.hmf", EigenformRecord::e4_delta(E4_DELTA_FIXTURE_BOUND).unwrap()),
        ] {
            let path = dir.join(name);
            if std::env::var("HMF_WRITE_FIXTURES").is_ok() {
                fs::create_dir_all(&dir).unwrap();
                write_file(&path, &rec).unwrap();
            }
            let loaded = load_file(&path).unwrap();
            assert_eq!(loaded, rec, "{name}");
            assert_eq!(fs::read_to_string(&path).unwrap(), rec.to_text().unwrap());
        }
        let d = load_file(&dir.join("delta.hmf")).unwrap();
        assert_eq!(d.ap[0].1, Eigenvalue::Int(-24));
        assert_eq!(d.ap[1].1, Eigenvalue::Int(252));
    }

    #[test]
    fn delta_expansion_values() {
        let t = delta_expansion(12);
        assert_eq!(&t[1..=6], &[1, -24, 252, -1472, 4830, -6048]);
        assert_eq!(t[11], 534612);
    }

    #[test]
    fn e4_delta_values() {
        // E_4 Delta = q + 216 q^2 - 3348 q^3 + ...
        let c = e4_delta_expansion(5).unwrap();
        assert_eq!(&c[1..=4], &[1, 216, -3348, 13888]);
        // Hecke multiplicativity
        let c = e4_delta_expansion(40).unwrap();
        assert_eq!(c[6], c[2] * c[3]);
        assert_eq!(c[35], c[5] * c[7]);
        assert_eq!(c[4], c[2] * c[2] - 2i128.pow(15));
    }

    #[test]
    fn round_trip_and_checks() {
        let r = EigenformRecord::delta(200).unwrap();
        let text = r.to_text().unwrap();
        assert_eq!(EigenformRecord::parse(&text).unwrap(), r);
        assert_eq!(r.ap[0].1, Eigenvalue::Int(-24));
        // truncated
        let cut = &text[..text.len() / 2];
        assert!(matches!(EigenformRecord::parse(cut), Err(HmfError::Parse { .. })));
        // tampered
        let bad = text.replace("\t-24\n", "\t-25\n");
        assert!(matches!(EigenformRecord::parse(&bad), Err(HmfError::Checksum { .. })));
        // Deligne
        let big = EigenformRecord::rational("x", 12, 1, Normalization::Arithmetic, &[(2, Eigenvalue::Int(1_000_000))]);
        assert!(matches!(big, Err(HmfError::Bound { p: 2, .. })));
    }

    #[test]
    fn values_and_labels_round_trip() {
        let q = TotallyRealField::rationals();
        let r = EigenformRecord {
            label: "odd\tlabel\\with\nescapes".into(),
            field: q.clone(),
            weight: vec![4],
            level: Ideal::from_int(&q, 101).unwrap(),
            normalization: Normalization::Arithmetic,
            source: Source::Remote,
            ap: vec![
                (Ideal::from_int(&q, 2).unwrap(), Eigenvalue::Rational(-3, 7)),
                (Ideal::from_int(&q, 3).unwrap(), Eigenvalue::Approx(0.1 + 0.2)),
                (Ideal::from_int(&q, 5).unwrap(), Eigenvalue::Approx(-1.0e-300)),
            ],
        };
        assert_eq!(EigenformRecord::parse(&r.to_text().unwrap()).unwrap(), r);
    }

    #[test]
    fn golden_field_record_round_trip() {
        let k = TotallyRealField::quadratic(5).unwrap();
        let ps: Vec<Ideal> = [4u64, 5, 9, 11].iter().flat_map(|&n| crate::ideal::ideals_of_norm(&k, n).unwrap()).collect();
        let ap = ps
            .into_iter()
            .filter(|p| p.factor(&k).unwrap().len() == 1 && p.factor(&k).unwrap()[0].1 == 1)
            .map(|p| (p, Eigenvalue::Int(-1)))
            .collect();
        let r = EigenformRecord {
            label: "2.2.5.1-31.1-a".into(),
            field: k.clone(),
            weight: vec![2, 2],
            level: Ideal::from_int(&k, 1).unwrap(),
            normalization: Normalization::Arithmetic,
            source: Source::File,
            ap,
        };
        let back = EigenformRecord::parse(&r.to_text().unwrap()).unwrap();
        assert_eq!(back, r);
        let q = TotallyRealField::rationals();
        assert!(Ideal::from_hnf_data(&q, 4, 1, 1, 1).is_err());
        assert!(Ideal::from_hnf_data(&q, 4, 0, 1, 2).is_err());
        assert_eq!(Ideal::from_hnf_data(&q, 7, 0, 1, 1).unwrap(), Ideal::from_int(&q, 7).unwrap());
    }

    #[test]
    fn cache_gc_policy() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::open(dir.path()).unwrap();
        assert_eq!(cache.gc(0).unwrap(), 0);
        let base = EigenformRecord::delta(50).unwrap();
        let mut size = 0;
        for i in 0..10 {
            let r = EigenformRecord { label: format!("r{i}"), ..base.clone() };
            let p = cache.put(&r).unwrap();
            size = fs::metadata(&p).unwrap().len();
            let t = SystemTime::UNIX_EPOCH + Duration::from_secs(1_000_000 + i);
            fs::File::options().append(true).open(&p).unwrap().set_modified(t).unwrap();
        }
        cache.pin(&EigenformRecord { label: "pinned".into(), ..base.clone() }).unwrap();
        assert_eq!(cache.gc(100 * size).unwrap(), 0);
        // touching r0 makes it most recent
        assert!(cache.get("r0").unwrap().is_some());
        assert_eq!(cache.gc(5 * size).unwrap(), 5);
        assert!(cache.get("r0").unwrap().is_some());
        assert!(cache.get("r1").unwrap().is_none());
        assert!(cache.get("r9").unwrap().is_some());
        assert_eq!(cache.gc(0).unwrap(), 5);
        assert_eq!(cache.get("pinned").unwrap().unwrap().source, Source::Cache);
    }

    #[test]
    fn offline_fetch_uses_cache_only() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::open(dir.path()).unwrap();
        let cfg = RemoteConfig { endpoint: None, offline: true, timeout: Duration::from_secs(1), env_proxy: false };
        assert!(matches!(fetch_remote("delta", 50, &cfg, &cache), Err(HmfError::NotFound(_))));
        cache.put(&EigenformRecord::delta(50).unwrap()).unwrap();
        let r = fetch_remote("delta", 50, &cfg, &cache).unwrap();
        assert_eq!(r.source, Source::Cache);
        assert!(matches!(fetch_remote("delta", 500, &cfg, &cache), Err(HmfError::NotFound(_))));
    }
}
