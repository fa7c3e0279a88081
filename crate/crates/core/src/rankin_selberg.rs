//! Eigenform coefficient tables, the Rankin-Selberg series `L(f x g, s)`
//! and its approximate functional equation.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::analysis::{l_infinity, CutoffFunction, VKernel};
use crate::field::TotallyRealField;
use crate::ideal::{count_ideals_by_norm, ideals_of_norm, Ideal};
use crate::util::{divisor_count, primes_up_to, spf_table, KahanSum};
use crate::{HmfError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Normalization {
    /// Integral Hecke eigenvalues `a(m)`.
    Arithmetic,
    /// `C(m) = a(m) / N(m)^{(k-1)/2}`, bounded by the divisor function.
    Unitary,
}

impl Normalization {
    pub fn tag(&self) -> &'static str {
        match self {
            Normalization::Arithmetic => "arithmetic",
            Normalization::Unitary => "unitary",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "arithmetic" => Ok(Self::Arithmetic),
            "unitary" => Ok(Self::Unitary),
            _ => Err(HmfError::Normalization(format!("unknown tag {s}"))),
        }
    }
}

#[derive(Clone, Debug)]
enum Table {
    /// Over `Q`, indexed by `n`.
    Dense(Vec<f64>),
    Sparse(HashMap<Ideal, f64>),
}

/// A primitive form known through its Hecke eigenvalues.
#[derive(Clone, Debug)]
pub struct Eigenform {
    pub label: String,
    field: TotallyRealField,
    weight: Vec<u32>,
    level: Ideal,
    level_norm: u64,
    normalization: Normalization,
    primes: BTreeMap<Ideal, f64>,
    table: Table,
    table_norm: u64,
}

impl Eigenform {
    pub fn new(
        label: impl Into<String>,
        field: &TotallyRealField,
        weight: Vec<u32>,
        level: Ideal,
        normalization: Normalization,
        prime_values: Vec<(Ideal, f64)>,
    ) -> Result<Self> {
        if weight.len() != field.degree() || weight.iter().any(|k| *k == 0 || k % 2 != 0) {
            return Err(HmfError::Argument(format!("weight {weight:?} must be {} positive even integers", field.degree())));
        }
        if !level.is_integral() {
            return Err(HmfError::Argument("level must be an integral ideal".into()));
        }
        let level_norm = level.norm_int(field)?;
        let table = if field.is_rational() {
            Table::Dense(vec![0.0, 1.0])
        } else {
            let mut m = HashMap::new();
            m.insert(Ideal::unit(), 1.0);
            Table::Sparse(m)
        };
        Ok(Self {
            label: label.into(),
            field: field.clone(),
            weight,
            level,
            level_norm,
            normalization,
            primes: prime_values.into_iter().collect(),
            table,
            table_norm: 1,
        })
    }

    /// A form over `Q` from `(p, a_p)` pairs.
    pub fn rational(
        label: impl Into<String>,
        weight: u32,
        level: u64,
        normalization: Normalization,
        ap: &[(u64, f64)],
    ) -> Result<Self> {
        let q = TotallyRealField::rationals();
        let primes = ap
            .iter()
            .map(|&(p, a)| Ok((Ideal::from_int(&q, p as i128)?, a)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(label, &q, vec![weight], Ideal::from_int(&q, level as i128)?, normalization, primes)
    }

    pub fn field(&self) -> &TotallyRealField {
        &self.field
    }

    pub fn weight(&self) -> &[u32] {
        &self.weight
    }

    pub fn level(&self) -> &Ideal {
        &self.level
    }

    pub fn level_norm(&self) -> u64 {
        self.level_norm
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    /// Largest norm up to which the coefficient table is complete.
    pub fn table_norm(&self) -> u64 {
        self.table_norm
    }

    pub fn prime_value(&self, p: &Ideal) -> Option<f64> {
        self.primes.get(p).copied()
    }

    pub fn prime_values(&self) -> impl Iterator<Item = (&Ideal, &f64)> {
        self.primes.iter()
    }

    fn weight_exponent(&self) -> f64 {
        (*self.weight.iter().max().unwrap_or(&2) as f64 - 1.0) / 2.0
    }

    /// Converts arithmetic eigenvalues to the unitary normalization. The
    /// tag makes a second conversion an error.
    pub fn to_unitary(&self) -> Result<Self> {
        if self.normalization == Normalization::Unitary {
            return Err(HmfError::Normalization(format!("{} is already unitary", self.label)));
        }
        let e = self.weight_exponent();
        let primes = self
            .primes
            .iter()
            .map(|(p, a)| (p.clone(), a / crate::ideal::norm_f64(&self.field, p).powf(e)))
            .collect::<Vec<_>>();
        let mut out = Self::new(self.label.clone(), &self.field, self.weight.clone(), self.level.clone(), Normalization::Unitary, primes)?;
        if self.table_norm > 1 {
            out.extend_coefficients(self.table_norm)?;
        }
        Ok(out)
    }

    fn power_table(&self, p: &Ideal, np: u64, up_to: u64) -> Result<Vec<(u64, f64)>> {
        let ap = self
            .prime_value(p)
            .ok_or_else(|| HmfError::MissingPrime(p.display(&self.field)))?;
        let at_level = self.level.divisible_by(&self.field, p);
        let chi = match self.normalization {
            Normalization::Unitary => 1.0,
            Normalization::Arithmetic => (np as f64).powf(2.0 * self.weight_exponent()),
        };
        let mut out = vec![(1u64, 1.0), (np, ap)];
        let mut norm = np;
        while let Some(next) = norm.checked_mul(np).filter(|n| *n <= up_to) {
            let r = out.len();
            let v = if at_level {
                out[r - 1].1 * ap
            } else {
                ap * out[r - 1].1 - chi * out[r - 2].1
            };
            out.push((next, v));
            norm = next;
        }
        Ok(out)
    }

    /// Fills the coefficient table for every integral ideal of norm at most
    /// `up_to_norm` by the Hecke recursion and multiplicativity.
    pub fn extend_coefficients(&mut self, up_to_norm: u64) -> Result<()> {
        if up_to_norm <= self.table_norm {
            return Ok(());
        }
        let field = self.field.clone();
        if field.is_rational() {
            let n = up_to_norm as usize;
            let mut t = vec![f64::NAN; n + 1];
            t[0] = 0.0;
            t[1] = 1.0;
            let mut is_pp = vec![false; n + 1];
            for p in primes_up_to(up_to_norm) {
                let pi = Ideal::from_int(&field, p as i128)?;
                for (m, v) in self.power_table(&pi, p, up_to_norm)?.into_iter().skip(1) {
                    t[m as usize] = v;
                    is_pp[m as usize] = true;
                }
            }
            let spf = spf_table(n);
            for m in 2..=n {
                if is_pp[m] {
                    continue;
                }
                let p = spf[m] as usize;
                let mut pe = 1;
                while (m / pe) % p == 0 {
                    pe *= p;
                }
                t[m] = t[pe] * t[m / pe];
            }
            self.table = Table::Dense(t);
        } else {
            let mut powers: HashMap<Ideal, Vec<(u64, f64)>> = HashMap::new();
            for p in primes_up_to(up_to_norm) {
                for (pi, _) in Ideal::primes_above(&field, p)? {
                    let np = pi.norm_int(&field)?;
                    if np <= up_to_norm {
                        let tab = self.power_table(&pi, np, up_to_norm)?;
                        powers.insert(pi, tab);
                    }
                }
            }
            let mut map = HashMap::new();
            map.insert(Ideal::unit(), 1.0);
            for n in 2..=up_to_norm {
                for id in ideals_of_norm(&field, n)? {
                    let mut v = 1.0;
                    for (p, e) in id.factor(&field)? {
                        let tab = powers.get(&p).ok_or_else(|| HmfError::MissingPrime(p.display(&field)))?;
                        v *= tab[e as usize].1;
                    }
                    map.insert(id, v);
                }
            }
            self.table = Table::Sparse(map);
        }
        self.table_norm = up_to_norm;
        Ok(())
    }

    /// `C(m)` (or `a(m)` in the arithmetic normalization).
    pub fn coefficient(&self, m: &Ideal) -> Result<f64> {
        let norm = m.norm_int(&self.field)?;
        if norm > self.table_norm {
            return Err(HmfError::TableShortfall { needed: norm, available: self.table_norm });
        }
        match &self.table {
            Table::Dense(t) => Ok(t[norm as usize]),
            Table::Sparse(map) => map
                .get(m)
                .copied()
                .ok_or_else(|| HmfError::NotFound(m.display(&self.field))),
        }
    }

    /// `C(n)` over `Q`.
    pub fn coefficient_n(&self, n: u64) -> Result<f64> {
        match &self.table {
            Table::Dense(t) if n <= self.table_norm => Ok(t[n as usize]),
            Table::Dense(_) => Err(HmfError::TableShortfall { needed: n, available: self.table_norm }),
            Table::Sparse(_) => Err(HmfError::Argument("integer indexing needs F = Q".into())),
        }
    }

    /// Dense slice `C(0..=table_norm)` over `Q` (`C(0) = 0`).
    pub fn dense(&self) -> Option<&[f64]> {
        match &self.table {
            Table::Dense(t) => Some(t),
            Table::Sparse(_) => None,
        }
    }

    /// `sum_{N(m) = n} C(m) C'(m)` over ideals of norm `n`.
    fn norm_pairing(&self, other: &Self, n: u64) -> Result<f64> {
        match (&self.table, &other.table) {
            (Table::Dense(a), Table::Dense(b)) => Ok(a[n as usize] * b[n as usize]),
            _ => {
                let mut s = 0.0;
                for id in ideals_of_norm(&self.field, n)? {
                    s += self.coefficient(&id)? * other.coefficient(&id)?;
                }
                Ok(s)
            }
        }
    }

    /// Checks `|C(m)| <= tau(m)` on the whole table.
    pub fn check_ramanujan(&self) -> Result<()> {
        let scale = |n: u64| match self.normalization {
            Normalization::Unitary => 1.0,
            Normalization::Arithmetic => (n as f64).powf(self.weight_exponent()),
        };
        let tol = 1e-9;
        match &self.table {
            Table::Dense(t) => {
                for (n, v) in t.iter().enumerate().skip(1) {
                    let n = n as u64;
                    if v.abs() / scale(n) > divisor_count(n) as f64 * (1.0 + tol) {
                        return Err(HmfError::Bound { p: n, value: *v });
                    }
                }
            }
            Table::Sparse(map) => {
                for (id, v) in map {
                    let n = id.norm_int(&self.field)?;
                    if v.abs() / scale(n) > id.divisor_count(&self.field)? as f64 * (1.0 + tol) {
                        return Err(HmfError::Bound { p: n, value: *v });
                    }
                }
            }
        }
        Ok(())
    }

    /// Equality of coefficient tables up to `tol`, over the common range.
    pub fn same_coefficients(&self, other: &Self, tol: f64) -> bool {
        if self.weight != other.weight || self.level != other.level || self.normalization != other.normalization {
            return false;
        }
        let n = self.table_norm.min(other.table_norm);
        match (&self.table, &other.table) {
            (Table::Dense(a), Table::Dense(b)) => (1..=n as usize).all(|k| (a[k] - b[k]).abs() <= tol),
            (Table::Sparse(a), Table::Sparse(_)) => a.iter().all(|(id, v)| {
                id.norm_int(&self.field).map_or(false, |m| m > n)
                    || other.coefficient(id).is_ok_and(|w| (v - w).abs() <= tol)
            }),
            _ => false,
        }
    }
}

/// A pair `(f, g)` of unitary eigenforms with coprime levels.
#[derive(Clone, Debug)]
pub struct RsPair<'a> {
    pub f: &'a Eigenform,
    pub g: &'a Eigenform,
    nq: Ideal,
}

impl<'a> RsPair<'a> {
    pub fn new(f: &'a Eigenform, g: &'a Eigenform) -> Result<Self> {
        let field = f.field();
        if field.tag() != g.field().tag() {
            return Err(HmfError::Argument("forms live over different fields".into()));
        }
        for h in [f, g] {
            if h.normalization() != Normalization::Unitary {
                return Err(HmfError::Normalization(format!("{} must be unitary", h.label)));
            }
        }
        if !f.level().is_coprime(field, g.level())? {
            return Err(HmfError::Argument("levels must be coprime".into()));
        }
        if f.level() == g.level() && f.weight() == g.weight() && f.label == g.label {
            return Err(HmfError::Argument("f = g is excluded (Lambda has a pole)".into()));
        }
        let nq = f.level().mul(field, g.level())?;
        Ok(Self { f, g, nq })
    }

    pub fn field(&self) -> &TotallyRealField {
        self.f.field()
    }

    /// `N(D^2 n q)`.
    pub fn conductor(&self) -> f64 {
        let d = self.field().discriminant() as f64;
        d * d * crate::ideal::norm_f64(self.field(), &self.nq)
    }

    /// `4^n pi^{2n} / N(D^2 n q)`.
    pub fn y_scale(&self) -> f64 {
        let n = self.field().degree() as i32;
        4f64.powi(n) * PI.powi(2 * n) / self.conductor()
    }

    pub fn cutoff(&self, g: crate::analysis::TestFunction) -> Result<CutoffFunction> {
        CutoffFunction::new(self.f.weight().to_vec(), self.g.weight().to_vec(), g)
    }

    /// `a_d`: ideals of norm `d` coprime to `n q`.
    pub fn a_d(&self, d: u64) -> Result<u64> {
        count_ideals_by_norm(self.field(), d, &self.nq)
    }

    /// `b_m` for `m = 0..=m_max` (`b_0 = 0`).
    pub fn rs_coefficients(&self, m_max: u64) -> Result<Vec<f64>> {
        for h in [self.f, self.g] {
            if h.table_norm() < m_max {
                return Err(HmfError::TableShortfall { needed: m_max, available: h.table_norm() });
            }
        }
        let mut b = vec![0.0; m_max as usize + 1];
        let mut d = 1u64;
        while d * d <= m_max {
            let a = self.a_d(d)?;
            if a > 0 {
                let d2 = d * d;
                for n in 1..=m_max / d2 {
                    b[(n * d2) as usize] += a as f64 * self.f.norm_pairing(self.g, n)?;
                }
            }
            d += 1;
        }
        Ok(b)
    }

    /// `b_m^{nq}(f x g)`.
    pub fn rs_coefficient(&self, m: u64) -> Result<f64> {
        let mut s = 0.0;
        let mut d = 1u64;
        while d * d <= m {
            if m % (d * d) == 0 {
                let a = self.a_d(d)?;
                if a > 0 {
                    s += a as f64 * self.f.norm_pairing(self.g, m / (d * d))?;
                }
            }
            d += 1;
        }
        Ok(s)
    }

    /// Truncation length for `V` below `eps` at `y_m / x_max`, doubled.
    pub fn truncation_length(&self, kernel: &VKernel, x_max: f64, eps: f64) -> Result<u64> {
        let y = kernel.decay_point(eps)?;
        Ok((2.0 * x_max.max(1.0 / x_max) * y / self.y_scale()).ceil() as u64)
    }
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct AfeResult {
    pub value: f64,
    pub x: f64,
    pub truncation: u64,
    pub error_budget: f64,
}

/// `sum_{m <= m_max} b_m m^{-s} V_s(c m / x)` and the sum of absolute
/// values over the last half of the range (the truncation budget).
fn smoothed_sum(b: &[f64], c: f64, kernel: &VKernel, s: f64, x: f64, m_max: usize) -> Result<(f64, f64)> {
    let mut acc = KahanSum::default();
    let mut tail = 0.0;
    let mut abs = 0.0;
    for (m, bm) in b.iter().enumerate().take(m_max + 1).skip(1) {
        if *bm == 0.0 {
            continue;
        }
        let y = c * m as f64 / x;
        let t = bm * (m as f64).powf(-s) * kernel.eval(y)?;
        acc.add(t);
        abs += (bm * (m as f64).powf(-s)).abs() * kernel.error_budget(y);
        if 2 * m > m_max {
            tail += t.abs();
        }
    }
    Ok((acc.value(), tail + abs))
}

/// `L(f x g, 1/2)` assembled as `(I(1/2, X) + I(1/2, 1/X)) / (N^{1/2} L_inf(1/2))`.
pub fn afe_central_value(pair: &RsPair, cfg: &CutoffFunction, x: f64) -> Result<AfeResult> {
    if x <= 0.0 || x.is_nan() {
        return Err(HmfError::Argument(format!("X must be positive, got {x}")));
    }
    let kernel = VKernel::new(cfg, 0.5)?;
    let m_max = pair.truncation_length(&kernel, x, 1e-13)?;
    afe_with_length(pair, &kernel, x, m_max)
}

/// As [`afe_central_value`] with a fixed kernel and truncation.
pub fn afe_with_length(pair: &RsPair, kernel: &VKernel, x: f64, m_max: u64) -> Result<AfeResult> {
    let b = pair.rs_coefficients(m_max)?;
    let c = pair.y_scale();
    let (s1, e1) = smoothed_sum(&b, c, kernel, 0.5, x, m_max as usize)?;
    let (s2, e2) = smoothed_sum(&b, c, kernel, 0.5, 1.0 / x, m_max as usize)?;
    Ok(AfeResult { value: s1 + s2, x, truncation: m_max, error_budget: e1 + e2 })
}

/// Both sides of the functional equation at real `s`.
#[derive(Clone, Debug, serde::Serialize)]
pub struct FeCheck {
    pub s: f64,
    pub lambda_s: f64,
    pub lambda_1ms: f64,
    pub lambda_half: f64,
    pub residual: f64,
    pub truncation: u64,
}

struct LambdaEngine<'p> {
    b: Vec<f64>,
    c: f64,
    conductor: f64,
    pair: &'p RsPair<'p>,
    cfg: CutoffFunction,
}

impl LambdaEngine<'_> {
    /// `I(s, X) = N^s L_inf(s) sum b_m m^{-s} V_s(c m / X)`.
    fn i(&self, s: f64, kernel: &VKernel, x: f64, m_max: usize) -> Result<f64> {
        let (sum, _) = smoothed_sum(&self.b, self.c, kernel, s, x, m_max)?;
        let linf = l_infinity(Complex64::new(s, 0.0), self.pair.f.weight(), self.pair.g.weight())?.re;
        Ok(self.conductor.powf(s) * linf * sum)
    }

    /// `Lambda(s) = I(s, X) + I(1-s, 1/X)`.
    fn lambda(&self, s: f64, x: f64, m_max: usize) -> Result<f64> {
        let ks = VKernel::new(&self.cfg, s)?;
        let k1 = VKernel::new(&self.cfg, 1.0 - s)?;
        Ok(self.i(s, &ks, x, m_max)? + self.i(1.0 - s, &k1, 1.0 / x, m_max)?)
    }
}

/// `|Lambda(s) - Lambda(1-s)| / |Lambda(1/2)|` with both sides assembled at
/// `X = 2`, truncated at `m_max` (or the automatic length).
pub fn check_functional_equation(pair: &RsPair, cfg: &CutoffFunction, s: f64, m_max: Option<u64>) -> Result<FeCheck> {
    if !(0.4..=0.6).contains(&s) {
        return Err(HmfError::Argument(format!("s = {s} outside [0.4, 0.6]")));
    }
    let x = 2.0;
    let m_max = match m_max {
        Some(m) => m,
        None => {
            let kernel = VKernel::new(cfg, s.min(1.0 - s))?;
            pair.truncation_length(&kernel, x, 1e-13)?
        }
    };
    let eng = LambdaEngine {
        b: pair.rs_coefficients(m_max)?,
        c: pair.y_scale(),
        conductor: pair.conductor(),
        pair,
        cfg: cfg.clone(),
    };
    let m = m_max as usize;
    let lambda_s = eng.lambda(s, x, m)?;
    let lambda_1ms = eng.lambda(1.0 - s, x, m)?;
    let lambda_half = eng.lambda(0.5, x, m)?;
    Ok(FeCheck {
        s,
        lambda_s,
        lambda_1ms,
        lambda_half,
        residual: (lambda_s - lambda_1ms).abs() / lambda_half.abs(),
        truncation: m_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::TestFunction;

    /// `tau(n)` for `n <= len` from `q prod (1 - q^n)^24`.
    pub(crate) fn ramanujan_tau(len: usize) -> Vec<i128> {
        let mut p = vec![0i128; len];
        p[0] = 1;
        for n in 1..len {
            for _ in 0..24 {
                for i in (n..len).rev() {
                    p[i] -= p[i - n];
                }
            }
        }
        let mut tau = vec![0i128; len + 1];
        tau[1..=len].copy_from_slice(&p[..len]);
        tau
    }

    #[test]
    fn jacobi_route_matches_product() {
        assert_eq!(crate::data_io::delta_expansion(250), ramanujan_tau(250));
    }

    fn delta(up_to: u64) -> Eigenform {
        let tau = crate::data_io::delta_expansion(up_to as usize);
        let ap: Vec<(u64, f64)> = primes_up_to(up_to).into_iter().map(|p| (p, tau[p as usize] as f64)).collect();
        let mut f = Eigenform::rational("delta", 12, 1, Normalization::Arithmetic, &ap).unwrap();
        f.extend_coefficients(up_to).unwrap();
        f
    }

    #[test]
    fn hecke_recursion_reproduces_tau() {
        let tau = ramanujan_tau(300);
        let f = delta(300);
        for n in 1..300u64 {
            assert_eq!(f.coefficient_n(n).unwrap(), tau[n as usize] as f64, "n = {n}");
        }
        assert_eq!(f.coefficient_n(4).unwrap(), -1472.0);
        let u = f.to_unitary().unwrap();
        assert!((u.coefficient_n(4).unwrap() + 0.71875).abs() < 1e-15);
        assert!((u.coefficient_n(6).unwrap() - u.coefficient_n(2).unwrap() * u.coefficient_n(3).unwrap()).abs() < 1e-15);
        assert_eq!(u.coefficient_n(1).unwrap(), 1.0);
        assert!(u.to_unitary().is_err());
        u.check_ramanujan().unwrap();
        assert!(matches!(u.coefficient_n(301), Err(HmfError::TableShortfall { .. })));
    }

    #[test]
    fn level_prime_powers() {
        let f = Eigenform::rational("t", 2, 11, Normalization::Arithmetic, &[(2, -2.0), (3, -1.0), (5, 1.0), (7, -2.0), (11, 1.0)]).unwrap();
        let mut f = f;
        f.extend_coefficients(12).unwrap();
        // 11.a: a_4 = a_2^2 - 2, a_11^r = 1
        assert_eq!(f.coefficient_n(4).unwrap(), 2.0);
        assert_eq!(f.coefficient_n(11).unwrap(), 1.0);
        let mut g = Eigenform::rational("t", 2, 11, Normalization::Arithmetic, &[(2, -2.0)]).unwrap();
        assert!(matches!(g.extend_coefficients(5), Err(HmfError::MissingPrime(_))));
    }

    #[test]
    fn rs_coefficients_over_q() {
        let d = delta(100).to_unitary().unwrap();
        let mut f = Eigenform::rational("11a", 2, 11, Normalization::Arithmetic, &[
            (2, -2.0), (3, -1.0), (5, 1.0), (7, -2.0), (11, 1.0), (13, 4.0), (17, -2.0), (19, 0.0), (23, -1.0),
            (29, 0.0), (31, 7.0), (37, 3.0), (41, -8.0), (43, -6.0), (47, 8.0), (53, -6.0), (59, 5.0), (61, 12.0),
            (67, -7.0), (71, -3.0), (73, 4.0), (79, -10.0), (83, -6.0), (89, 15.0), (97, -7.0),
        ]).unwrap().to_unitary().unwrap();
        f.extend_coefficients(100).unwrap();
        let pair = RsPair::new(&f, &d).unwrap();
        let rev = RsPair::new(&d, &f).unwrap();
        assert_eq!(pair.rs_coefficient(1).unwrap(), 1.0);
        let b = pair.rs_coefficients(100).unwrap();
        let b4 = f.coefficient_n(4).unwrap() * d.coefficient_n(4).unwrap() + 1.0;
        assert!((b[4] - b4).abs() < 1e-15);
        // 11 | nq, so the d = 11 term is absent
        assert_eq!(pair.a_d(11).unwrap(), 0);
        for m in 1..=100 {
            assert_eq!(b[m], rev.rs_coefficients(100).unwrap()[m]);
            assert!((b[m] - pair.rs_coefficient(m as u64).unwrap()).abs() < 1e-14);
        }
        assert!(RsPair::new(&d, &d).is_err());
    }

    #[test]
    fn rs_coefficient_over_golden_field() {
        let k = TotallyRealField::quadratic(5).unwrap();
        let one = Ideal::unit();
        let mut primes = Vec::new();
        for p in primes_up_to(30) {
            for (pi, _) in Ideal::primes_above(&k, p).unwrap() {
                primes.push((pi, 0.3));
            }
        }
        let mut f = Eigenform::new("f", &k, vec![2, 2], Ideal::from_int(&k, 31).unwrap(), Normalization::Unitary, primes.clone()).unwrap();
        let mut g = Eigenform::new("g", &k, vec![2, 2], one, Normalization::Unitary, primes).unwrap();
        f.extend_coefficients(25).unwrap();
        g.extend_coefficients(25).unwrap();
        let pair = RsPair::new(&f, &g).unwrap();
        assert_eq!(pair.a_d(2).unwrap(), 0);
        let two = Ideal::from_int(&k, 2).unwrap();
        let b4 = f.coefficient(&two).unwrap() * g.coefficient(&two).unwrap();
        assert!((pair.rs_coefficient(4).unwrap() - b4).abs() < 1e-15);
    }

    #[test]
    fn afe_invariance_small_level() {
        // Delta x (weight 2, level 11): X, G and (f, g) symmetry
        let d = delta(3000).to_unitary().unwrap();
        let forms = hmf_modsym::newforms(11, 2, 3000).unwrap();
        let mut f = Eigenform::rational("11a", 2, 11, Normalization::Arithmetic, &forms[0].ap).unwrap().to_unitary().unwrap();
        f.extend_coefficients(3000).unwrap();
        let pair = RsPair::new(&f, &d).unwrap();
        let mut vals = Vec::new();
        for g in [TestFunction::Constant, TestFunction::Gaussian] {
            let cfg = pair.cutoff(g).unwrap();
            for x in [0.5, 1.0, 2.0] {
                vals.push(afe_central_value(&pair, &cfg, x).unwrap().value);
            }
        }
        let max = vals.iter().cloned().fold(f64::MIN, f64::max);
        let min = vals.iter().cloned().fold(f64::MAX, f64::min);
        assert!((max - min) / vals[1].abs() < 1e-5, "{vals:?}");
        let fe = check_functional_equation(&pair, &pair.cutoff(TestFunction::Constant).unwrap(), 0.55, None).unwrap();
        assert!(fe.residual < 1e-5, "{fe:?}");
        let half = check_functional_equation(&pair, &pair.cutoff(TestFunction::Constant).unwrap(), 0.5, None).unwrap();
        assert_eq!(half.residual, 0.0);
    }
}
