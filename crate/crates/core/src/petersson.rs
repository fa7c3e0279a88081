//! Both sides of the Petersson trace formula, harmonic weights recovered by
//! least squares, and the oldform companion `f_q` of a level-one form.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rustfft::FftPlanner;

use crate::analysis::bessel_j;
use crate::exp_sums::{kloosterman_row, ResidueDomain};
use crate::field::{FieldElement, TotallyRealField};
use crate::ideal::{ideals_of_norm, norm_f64, Ideal, NarrowClassGroup};
use crate::rankin_selberg::{Eigenform, Normalization};
use crate::util::KahanSum;
use crate::{HmfError, Result};

/// `(-1)^{k/2} (2 pi)^n / (2 |d_F|^{1/2})`.
pub fn trace_constant(field: &TotallyRealField, weight: &[u32]) -> f64 {
    let sign: i32 = weight.iter().map(|k| if (k / 2) % 2 == 0 { 1 } else { -1 }).product();
    sign as f64 * (2.0 * PI).powi(field.degree() as i32) / (2.0 * (field.discriminant() as f64).sqrt())
}

#[derive(Clone, Debug)]
pub struct GeometricSideSpec {
    pub m: Ideal,
    pub p: Ideal,
    pub level: Ideal,
    pub weight: Vec<u32>,
    /// Largest `N((c) cc)` included; `0` keeps only the diagonal.
    pub cutoff: u64,
    /// Optional totally positive unit multiplying `nu` (a change of the
    /// splitting `m = nu a`, which must not change the value).
    pub nu_twist: Option<FieldElement>,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct GeometricSide {
    pub value: f64,
    pub diagonal: f64,
    pub off_diagonal: f64,
    pub tail_bound: f64,
    pub terms: usize,
}

fn j_product(weight: &[u32], args: &[f64]) -> Result<f64> {
    let mut v = 1.0;
    for (k, x) in weight.iter().zip(args) {
        v *= bessel_j(k - 1, *x)?;
    }
    Ok(v)
}

/// `J_u(x) <= (x/2)^u / u!`.
fn j_bound(u: u32, x: f64) -> f64 {
    let mut v = 1.0f64;
    for i in 1..=u {
        v *= x / 2.0 / i as f64;
    }
    v.min(1.0)
}

/// Geometric side over a general field (`n <= 2`), summing every
/// `c in cc^-1 q \ {0}`: generators of integral ideals `(c) cc` divisible by
/// `q` up to the cutoff, times all units.
pub fn geometric_side(spec: &GeometricSideSpec, classes: &NarrowClassGroup) -> Result<GeometricSide> {
    let field = classes.field();
    if !spec.m.is_integral() || !spec.p.is_integral() || !spec.level.is_integral() {
        return Err(HmfError::Argument("m, p and the level must be integral".into()));
    }
    let diagonal = if spec.m == spec.p { 1.0 } else { 0.0 };
    if spec.cutoff == 0 {
        return Ok(GeometricSide { value: diagonal, diagonal, off_diagonal: 0.0, tail_bound: 0.0, terms: 0 });
    }
    let (mut nu, ia) = classes.split_ideal(&spec.m)?;
    if let Some(eta) = &spec.nu_twist {
        if !field.is_unit(eta) || !field.is_totally_positive(eta) {
            return Err(HmfError::Argument("nu twist must be a totally positive unit".into()));
        }
        nu = field.mul(&nu, eta);
    }
    let (xi, ib) = classes.split_ideal(&spec.p)?;
    let a = &classes.reps()[ia];
    let b = &classes.reps()[ib];
    let cst = trace_constant(field, &spec.weight);
    let q_norm = spec.level.norm_int(field)?;
    let mut total = KahanSum::default();
    let mut tail = 0.0;
    let mut terms = 0usize;
    let u_min = spec.weight.iter().copied().min().unwrap_or(2).saturating_sub(1);
    let gcd_norm = spec.m.norm_int(field)?.min(spec.p.norm_int(field)?) as f64;
    if !generic_tail(field, u_min, 1, 1.0, 1.0).is_finite() {
        return Err(HmfError::Tail(format!("no convergent tail bound for weight {:?}", spec.weight)));
    }
    let cc_norms: Vec<f64> = classes.reps().iter().map(|r| norm_f64(field, r)).collect();
    for ic in classes.pairing(ia, ib)? {
        let cc = &classes.reps()[ic];
        let g = a
            .mul(field, b)?
            .div(field, &cc.pow(field, 2)?)?
            .totally_positive_generator_of(field)
            .ok_or_else(|| HmfError::Membership("pairing class without generator".into()))?;
        let xig = field.mul(&xi, &g);
        for eps in field.unit_square_classes() {
            let w = field.embed(&field.mul(&field.mul(&eps, &nu), &xig));
            // min(1, (x/2)^u / u!) = min(1, (x / (2 (u!)^{1/u}))^u)
            let b: f64 = w
                .iter()
                .zip(&spec.weight)
                .map(|(wj, k)| 2.0 * PI * wj.sqrt() / factorial(k - 1).powf(1.0 / (k - 1) as f64))
                .product();
            tail += generic_tail(field, u_min, spec.cutoff, b * cc_norms[ic], gcd_norm);
        }
        for n in (q_norm..=spec.cutoff).step_by(q_norm as usize) {
            for mm in ideals_of_norm(field, n)? {
                if !mm.divisible_by(field, &spec.level) {
                    continue;
                }
                let Some(c0) = mm.div(field, cc)?.principal_generator(field) else {
                    continue;
                };
                let dom = ResidueDomain::new(field, a, &c0, cc)?;
                let sqrt_tau = divisor_count_ideal(field, &mm)? * (n as f64).sqrt();
                for eps in field.unit_square_classes() {
                    let enu = field.mul(&eps, &nu);
                    let w = field.embed(&field.mul(&enu, &xig));
                    let (s, _, cnt) = unit_orbit(field, &dom, &enu, &xig, &c0, &w, &spec.weight, n as f64, sqrt_tau)?;
                    total.add(cst * s);
                    terms += cnt;
                }
            }
        }
    }
    let off = total.value();
    let tail_bound = cst.abs() * tail;
    if !tail_bound.is_finite() {
        return Err(HmfError::Tail(format!("no convergent tail bound for weight {:?}", spec.weight)));
    }
    Ok(GeometricSide { value: diagonal + off, diagonal, off_diagonal: off, tail_bound, terms })
}

fn factorial(u: u32) -> f64 {
    (1..=u).map(|i| i as f64).product()
}

/// Bound on the terms with `N((c) cc) > x`, for one class pair and one unit
/// class. `b` is `N(cc) prod_j 2 pi (w_j)^{1/2}`, so the `J` product of a term
/// is at most `min(1, (b / N((c) cc)))^u` on average over a unit orbit.
/// Uses `#{ideals of norm n} tau <= 4 n` (quadratic) or `tau(n) <= 2 n^{1/2}`.
fn generic_tail(field: &TotallyRealField, u: u32, x: u64, b: f64, gcd_norm: f64) -> f64 {
    let x = (x.max(3)) as f64;
    let uf = u as f64;
    if field.is_rational() {
        if u < 2 {
            return f64::INFINITY;
        }
        return 4.0 * gcd_norm.sqrt() * b.powf(uf) * x.powf(1.0 - uf) / (uf - 1.0);
    }
    let s = uf - 0.5;
    if s <= 1.0 {
        return f64::INFINITY;
    }
    let log_eps = field.embed(field.eps0()).iter().map(|e| e.abs().ln()).fold(0.0f64, f64::max);
    // Weil with constant 1 fails at moduli sharing a prime with the different
    // (both phases can be trivial); N(D) covers the ramified local factors
    let ram = field.discriminant().unsigned_abs() as f64;
    // orbit length: log(n / b) / log eps0 + 1 + 2 / (1 - eps0^{-u}), both signs
    let a = 1.0 + 2.0 / (1.0 - (-uf * log_eps).exp()) + b.ln().abs() / log_eps;
    let bb = 1.0 / log_eps;
    8.0 * ram * gcd_norm.sqrt() * b.powf(uf) * x.powf(1.0 - s) / (s - 1.0) * (a + bb * x.ln() + bb / (s - 1.0))
}

fn divisor_count_ideal(field: &TotallyRealField, m: &Ideal) -> Result<f64> {
    Ok(m.divisor_count(field)? as f64)
}

/// Sum over `c = +-c0 eps0^j` of `Kl / N(c cc) * prod J`, and a Weil-type
/// upper bound on the absolute values.
#[allow(clippy::too_many_arguments)]
fn unit_orbit(
    field: &TotallyRealField,
    dom: &ResidueDomain,
    enu: &FieldElement,
    xig: &FieldElement,
    c0: &FieldElement,
    w: &[f64],
    weight: &[u32],
    norm: f64,
    weil: f64,
) -> Result<(f64, f64, usize)> {
    let mut s = KahanSum::default();
    let mut bound = 0.0;
    let mut count = 0;
    let term = |c: &FieldElement| -> Result<(f64, f64)> {
        let cj = field.embed(c);
        let args: Vec<f64> = w.iter().zip(&cj).map(|(wj, cj)| 4.0 * PI * wj.sqrt() / cj.abs()).collect();
        let jb: f64 = weight.iter().zip(&args).map(|(k, x)| j_bound(k - 1, *x)).product();
        if jb * weil / norm < 1e-30 {
            return Ok((0.0, 0.0));
        }
        let kl = dom.kloosterman(field, enu, xig, c)?;
        Ok((kl.re / norm * j_product(weight, &args)?, jb * weil / norm))
    };
    if field.is_rational() {
        for c in [c0.clone(), c0.neg()] {
            let (t, b) = term(&c)?;
            s.add(t);
            bound += b;
            count += 1;
        }
        return Ok((s.value(), bound, count));
    }
    let e0 = field.eps0().clone();
    let e0i = field.inv(&e0)?;
    for step in [&e0, &e0i] {
        let mut c = if std::ptr::eq(step, &e0) { c0.clone() } else { field.mul(c0, step) };
        let mut quiet = 0;
        let mut j = 0;
        while quiet < 3 && j < 400 {
            for sgn in [false, true] {
                let cs = if sgn { c.neg() } else { c.clone() };
                let (t, b) = term(&cs)?;
                s.add(t);
                bound += b;
                count += 1;
                if b < 1e-22 {
                    quiet += 1;
                } else {
                    quiet = 0;
                }
            }
            c = field.mul(&c, step);
            j += 1;
        }
    }
    Ok((s.value(), bound, count))
}

/// Off-diagonal part over `Q` at level `q`, by direct Kloosterman sums:
/// `(-1)^{k/2} 2 pi sum_{t <= t_max} S(m, p; q t) / (q t) J_{k-1}(4 pi sqrt(mp) / (q t))`.
pub fn rational_off_diagonal(q: u64, k: u32, m: u64, p: u64, t_max: u64) -> Result<GeometricSide> {
    let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
    let mut s = KahanSum::default();
    let x0 = 4.0 * PI * ((m * p) as f64).sqrt();
    for t in 1..=t_max {
        let c = q * t;
        let kl = crate::exp_sums::classical_kloosterman(m as i64, p as i64, c as i64);
        s.add(kl / c as f64 * bessel_j(k - 1, x0 / c as f64)?);
    }
    let off = sign * 2.0 * PI * s.value();
    let diagonal = if m == p { 1.0 } else { 0.0 };
    Ok(GeometricSide {
        value: diagonal + off,
        diagonal,
        off_diagonal: off,
        tail_bound: rational_tail_bound(q, k, gcd3(m, p), m * p, t_max),
        terms: t_max as usize,
    })
}

fn gcd3(m: u64, p: u64) -> u64 {
    num_integer::gcd(m, p)
}

/// Weil and `J_u(x) <= (x/2)^u/u!` bound on `sum_{t > t_max}`.
pub fn rational_tail_bound(q: u64, k: u32, g: u64, mp: u64, t_max: u64) -> f64 {
    rational_tail_factor(q, k, t_max) * (g as f64).sqrt() * (mp as f64).powf((k - 1) as f64 / 2.0)
}

/// The part of [`rational_tail_bound`] independent of `(m, p)`:
/// `2 pi q^{-1/2} (2 pi / q)^u / u! sum_{t > T} tau(q t) t^{-1/2-u}`, with
/// exact divisor counts on `(T, 8T]` and `tau(n) <= 3.53 n^{1/3}` beyond.
pub fn rational_tail_factor(q: u64, k: u32, t_max: u64) -> f64 {
    if k < 4 || t_max == 0 {
        return f64::INFINITY;
    }
    let u = (k - 1) as f64;
    let mut s = 0.0;
    for t in t_max + 1..=8 * t_max {
        s += crate::util::divisor_count(q * t) as f64 * (t as f64).powf(-0.5 - u);
    }
    let c = 3.53 * (q as f64).powf(1.0 / 3.0);
    s += c * ((8 * t_max) as f64).powf(5.0 / 6.0 - u) / (u - 5.0 / 6.0);
    2.0 * PI * (q as f64).powf(-0.5) * (2.0 * PI / q as f64).powf(u) / factorial(k - 1) * s
}

/// Classical Kloosterman sums `S(m, p; c)` for fixed `p`, assembled from
/// cached prime-power rows by twisted multiplicativity:
/// `S(m, p; c) = prod_i S(m cb_i^2, p; c_i)` over the prime-power parts
/// `c_i` of `c`, with `cb_i` the inverse of `c / c_i` mod `c_i`.
pub struct KloostermanRows {
    p: u64,
    planner: FftPlanner<f64>,
    rows: std::collections::HashMap<u64, Vec<f64>>,
}

impl KloostermanRows {
    pub fn new(p: u64) -> Self {
        Self { p, planner: FftPlanner::new(), rows: std::collections::HashMap::new() }
    }

    /// `(row, multiplier)` per prime-power part of `c`.
    pub fn parts(&mut self, c: u64) -> Vec<(&[f64], u64)> {
        let fac = crate::util::factor(c as u128);
        let mut keys = Vec::new();
        for (l, e) in fac {
            let ci = (l as u64).pow(e);
            let rest = c / ci;
            let b = crate::util::inv_mod((rest % ci) as i128, ci as i128).unwrap_or(0) as u128;
            keys.push((ci, ((b * b) % ci as u128) as u64));
            if !self.rows.contains_key(&ci) {
                let row = kloosterman_row(&mut self.planner, self.p as i64, ci);
                self.rows.insert(ci, row);
            }
        }
        keys.into_iter().map(|(ci, m)| (self.rows[&ci].as_slice(), m)).collect()
    }
}

/// Evaluates `S(n, p; c)` from [`KloostermanRows::parts`].
fn assemble(parts: &[(&[f64], u64)], n: u64) -> f64 {
    let mut v = 1.0;
    for (row, mult) in parts {
        let ci = row.len() as u128;
        v *= row[((n as u128 % ci) * *mult as u128 % ci) as usize];
    }
    v
}

/// Off-diagonal terms `Off(n, p)` for all `n in 1..=n_max` at once over `Q`,
/// and their tail bounds.
pub fn rational_off_diagonal_rows(q: u64, k: u32, p: u64, n_max: u64, t_max: u64) -> Result<(Vec<f64>, Vec<f64>)> {
    let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
    let mut rows = KloostermanRows::new(p);
    let mut acc = vec![KahanSum::default(); n_max as usize + 1];
    let sqrt_np: Vec<f64> = (0..=n_max).map(|n| 4.0 * PI * ((n * p) as f64).sqrt()).collect();
    for t in 1..=t_max {
        let c = q * t;
        let parts = rows.parts(c);
        let inv_c = 1.0 / c as f64;
        for n in 1..=n_max {
            let kl = assemble(&parts, n);
            if kl != 0.0 {
                acc[n as usize].add(kl * inv_c * bessel_j(k - 1, sqrt_np[n as usize] * inv_c)?);
            }
        }
    }
    let values = acc.iter().map(|s| sign * 2.0 * PI * s.value()).collect();
    let factor = rational_tail_factor(q, k, t_max);
    let tails = (0..=n_max)
        .map(|n| if n == 0 { 0.0 } else { factor * (gcd3(n, p) as f64).sqrt() * ((n * p) as f64).powf((k - 1) as f64 / 2.0) })
        .collect();
    Ok((values, tails))
}

/// Level-one form `f` viewed at prime level `q`: either `f` itself or the
/// orthogonal companion `f_q`.
#[derive(Clone, Debug)]
pub struct OldformLift {
    pub base: Eigenform,
    pub q: Ideal,
    pub q_norm: u64,
    /// `(N(q) / rho_f(q))^{1/2}`.
    pub scale: f64,
    cq: f64,
}

impl OldformLift {
    pub fn label(&self) -> String {
        format!("{}[{}]", self.base.label, self.q_norm)
    }

    /// `C_{f_q}(m)`.
    pub fn coefficient(&self, m: &Ideal) -> Result<f64> {
        let field = self.base.field();
        let mut v = -self.cq * self.base.coefficient(m)? / (self.q_norm as f64 + 1.0);
        if m.divisible_by(field, &self.q) {
            v += self.base.coefficient(&m.div(field, &self.q)?)?;
        }
        Ok(self.scale * v)
    }

    pub fn coefficient_n(&self, n: u64) -> Result<f64> {
        let mut v = -self.cq * self.base.coefficient_n(n)? / (self.q_norm as f64 + 1.0);
        if n % self.q_norm == 0 {
            v += self.base.coefficient_n(n / self.q_norm)?;
        }
        Ok(self.scale * v)
    }

    /// `L_q(sym^2 f, 1) = [(1 - 1/q)((1 + 1/q)^2 - C_f(q)^2 / q)]^{-1}`.
    pub fn local_sym2(&self) -> f64 {
        let q = self.q_norm as f64;
        1.0 / ((1.0 - 1.0 / q) * ((1.0 + 1.0 / q).powi(2) - self.cq * self.cq / q))
    }

    /// The scale from the local symmetric-square factor,
    /// `(N(q)(1 - N(q)^-2)(1 + N(q)^-1) L_q(sym^2 f, 1))^{1/2}`.
    pub fn scale_from_sym2(&self) -> f64 {
        let q = self.q_norm as f64;
        (q * (1.0 - 1.0 / (q * q)) * (1.0 + 1.0 / q) * self.local_sym2()).sqrt()
    }
}

/// Builds `f_q` for a unitary level-one form and a prime ideal `q`.
pub fn oldform_lift(f: &Eigenform, q: &Ideal) -> Result<OldformLift> {
    let field = f.field();
    if f.normalization() != Normalization::Unitary {
        return Err(HmfError::Normalization("oldform_lift needs unitary coefficients".into()));
    }
    if !f.level().is_unit() {
        return Err(HmfError::Argument("oldform_lift needs a level-one form".into()));
    }
    let fac = q.factor(field)?;
    if fac.len() != 1 || fac[0].1 != 1 {
        return Err(HmfError::Argument(format!("{} is not prime", q.display(field))));
    }
    let q_norm = q.norm_int(field)?;
    let cq = f.coefficient(q)?;
    let qf = q_norm as f64;
    let rho = 1.0 - qf * (cq / (qf + 1.0)).powi(2);
    Ok(OldformLift { base: f.clone(), q: q.clone(), q_norm, scale: (qf / rho).sqrt(), cq })
}

#[derive(Clone, Debug)]
pub enum BasisForm {
    Primitive(Eigenform),
    Old(OldformLift),
}

impl BasisForm {
    pub fn label(&self) -> String {
        match self {
            BasisForm::Primitive(f) => f.label.clone(),
            BasisForm::Old(o) => o.label(),
        }
    }

    pub fn coefficient(&self, m: &Ideal) -> Result<f64> {
        match self {
            BasisForm::Primitive(f) => f.coefficient(m),
            BasisForm::Old(o) => o.coefficient(m),
        }
    }

    pub fn coefficient_n(&self, n: u64) -> Result<f64> {
        match self {
            BasisForm::Primitive(f) => f.coefficient_n(n),
            BasisForm::Old(o) => o.coefficient_n(n),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum WeightProvenance {
    Solved,
    Supplied,
}

#[derive(Clone, Debug)]
pub struct HarmonicBasis {
    pub forms: Vec<BasisForm>,
    pub weights: Vec<f64>,
    pub provenance: WeightProvenance,
}

impl HarmonicBasis {
    pub fn supplied(forms: Vec<BasisForm>, weights: Vec<f64>) -> Result<Self> {
        if forms.len() != weights.len() {
            return Err(HmfError::Argument("one weight per form".into()));
        }
        for (f, w) in forms.iter().zip(&weights) {
            if *w <= 0.0 {
                return Err(HmfError::NegativeWeight(*w, f.label()));
            }
        }
        Ok(Self { forms, weights, provenance: WeightProvenance::Supplied })
    }

    pub fn empty() -> Self {
        Self { forms: Vec::new(), weights: Vec::new(), provenance: WeightProvenance::Supplied }
    }

    pub fn len(&self) -> usize {
        self.forms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forms.is_empty()
    }
}

/// `sum_f omega_f C_f(m) C_f(p)`.
pub fn spectral_side(basis: &HarmonicBasis, m: &Ideal, p: &Ideal) -> Result<f64> {
    let mut s = KahanSum::default();
    for (f, w) in basis.forms.iter().zip(&basis.weights) {
        s.add(w * f.coefficient(m)? * f.coefficient(p)?);
    }
    Ok(s.value())
}

/// Over `Q`, by integer index.
pub fn spectral_side_n(basis: &HarmonicBasis, m: u64, p: u64) -> Result<f64> {
    let mut s = KahanSum::default();
    for (f, w) in basis.forms.iter().zip(&basis.weights) {
        s.add(w * f.coefficient_n(m)? * f.coefficient_n(p)?);
    }
    Ok(s.value())
}

/// One evaluated entry `(m, p) -> geometric side`.
#[derive(Clone, Debug)]
pub struct TraceSample {
    pub m: Ideal,
    pub p: Ideal,
    pub value: f64,
}

#[derive(Clone, Debug)]
pub struct WeightSolve {
    pub basis: HarmonicBasis,
    /// Largest absolute residual over the fitted samples.
    pub fit_residual: f64,
    /// Largest absolute residual over the held-out samples.
    pub holdout_residual: f64,
    /// Ratio of extreme singular values.
    pub condition: f64,
}

/// Least-squares weights from `sum_f omega_f C_f(m) C_f(p) = value`.
pub fn solve_harmonic_weights(forms: Vec<BasisForm>, fit: &[TraceSample], holdout: &[TraceSample]) -> Result<WeightSolve> {
    let n = forms.len();
    if n == 0 {
        return Ok(WeightSolve { basis: HarmonicBasis::empty(), fit_residual: 0.0, holdout_residual: 0.0, condition: 1.0 });
    }
    if fit.len() < n {
        return Err(HmfError::Rank(format!("{} samples for {n} unknowns", fit.len())));
    }
    let row = |s: &TraceSample| -> Result<Vec<f64>> {
        forms.iter().map(|f| Ok(f.coefficient(&s.m)? * f.coefficient(&s.p)?)).collect()
    };
    let mut a = DMatrix::<f64>::zeros(fit.len(), n);
    let mut b = DVector::<f64>::zeros(fit.len());
    for (i, s) in fit.iter().enumerate() {
        for (j, v) in row(s)?.into_iter().enumerate() {
            a[(i, j)] = v;
        }
        b[i] = s.value;
    }
    // column scaling keeps the singular-value test meaningful
    let scales: Vec<f64> = (0..n).map(|j| a.column(j).norm().max(1e-300)).collect();
    for (j, sc) in scales.iter().enumerate() {
        a.column_mut(j).scale_mut(1.0 / sc);
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smin <= 1e-12 * smax {
        return Err(HmfError::Rank(format!("singular values {smin:e} / {smax:e}")));
    }
    let x = svd.solve(&b, 0.0).map_err(|e| HmfError::Rank(e.to_string()))?;
    let weights: Vec<f64> = (0..n).map(|j| x[j] / scales[j]).collect();
    for (f, w) in forms.iter().zip(&weights) {
        if *w <= 0.0 {
            return Err(HmfError::NegativeWeight(*w, f.label()));
        }
    }
    let resid = |samples: &[TraceSample]| -> Result<f64> {
        let mut worst = 0.0f64;
        for s in samples {
            let v: f64 = row(s)?.iter().zip(&weights).map(|(c, w)| c * w).sum();
            worst = worst.max((v - s.value).abs());
        }
        Ok(worst)
    };
    let fit_residual = resid(fit)?;
    let holdout_residual = resid(holdout)?;
    Ok(WeightSolve {
        basis: HarmonicBasis { forms, weights, provenance: WeightProvenance::Solved },
        fit_residual,
        holdout_residual,
        condition: smax / smin,
    })
}

/// Samples `(1, n)` for `n in 1..=n_max` at prime level `q` over `Q`.
pub fn rational_samples(q: u64, k: u32, n_max: u64, t_max: u64) -> Result<Vec<TraceSample>> {
    let field = TotallyRealField::rationals();
    let (off, _) = rational_off_diagonal_rows(q, k, 1, n_max, t_max)?;
    let one = Ideal::unit();
    (1..=n_max)
        .map(|n| {
            Ok(TraceSample {
                m: one.clone(),
                p: Ideal::from_int(&field, n as i128)?,
                value: if n == 1 { 1.0 } else { 0.0 } + off[n as usize],
            })
        })
        .collect()
}

/// `t_max` so that the tail bound for the pairs `(1, n)`, `n <= n_max`, is
/// below `eps`.
pub fn rational_cutoff(q: u64, k: u32, n_max: u64, eps: f64) -> u64 {
    let mut t = 1;
    while rational_tail_bound(q, k, 1, n_max, t) > eps && t < 1 << 16 {
        t = (t * 5).div_ceil(4) + 1;
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_io::delta_expansion;
    use crate::util::primes_up_to;

    fn delta(up_to: u64) -> Eigenform {
        let tau = delta_expansion(up_to as usize);
        let ap: Vec<(u64, f64)> = primes_up_to(up_to).into_iter().map(|p| (p, tau[p as usize] as f64)).collect();
        let mut f = Eigenform::rational("delta", 12, 1, Normalization::Arithmetic, &ap).unwrap();
        f.extend_coefficients(up_to).unwrap();
        f.to_unitary().unwrap()
    }

    fn qi(n: i128) -> Ideal {
        Ideal::from_int(&TotallyRealField::rationals(), n).unwrap()
    }

    proptest::proptest! {
        #[test]
        fn assembled_rows_match_classical(n in 0u64..600, p in 1u64..40, c in 1u64..400) {
            let mut rows = KloostermanRows::new(p);
            let parts = rows.parts(c);
            let direct = crate::exp_sums::classical_kloosterman(n as i64, p as i64, c as i64);
            proptest::prop_assert!((assemble(&parts, n) - direct).abs() < 1e-9);
        }
    }

    #[test]
    fn trace_constant_values() {
        let q = TotallyRealField::rationals();
        assert!((trace_constant(&q, &[12]) - PI).abs() < 1e-15);
        assert!((trace_constant(&q, &[4]) - PI).abs() < 1e-15);
        assert!((trace_constant(&q, &[2]) + PI).abs() < 1e-15);
        let k = TotallyRealField::quadratic(5).unwrap();
        assert!((trace_constant(&k, &[2, 2]) - 4.0 * PI * PI / (2.0 * 5f64.sqrt())).abs() < 1e-14);
    }

    #[test]
    fn level_one_ratios() {
        let g11 = rational_off_diagonal(1, 12, 1, 1, 60).unwrap();
        let g12 = rational_off_diagonal(1, 12, 1, 2, 60).unwrap();
        let g13 = rational_off_diagonal(1, 12, 1, 3, 60).unwrap();
        assert!(((g12.value / g11.value) - (-24.0 / 2f64.powf(5.5))).abs() < 1e-9);
        assert!(((g13.value / g11.value) - (252.0 / 3f64.powf(5.5))).abs() < 1e-9);
        let half = rational_off_diagonal(1, 12, 1, 1, 30).unwrap();
        assert!((half.value - g11.value).abs() <= half.tail_bound);
        for (q, k, t) in [(11u64, 4u32, 5u64), (101, 4, 3), (7, 6, 4)] {
            let short = rational_off_diagonal(q, k, 2, 3, t).unwrap();
            let long = rational_off_diagonal(q, k, 2, 3, 40 * t).unwrap();
            assert!((short.value - long.value).abs() <= short.tail_bound, "{q} {k}");
        }
    }

    #[test]
    fn generic_path_matches_classical_over_q() {
        let q = TotallyRealField::rationals();
        let cls = NarrowClassGroup::new(&q).unwrap();
        for (m, p) in [(1, 1), (1, 2), (2, 3)] {
            let spec = GeometricSideSpec { m: qi(m), p: qi(p), level: qi(1), weight: vec![12], cutoff: 40, nu_twist: None };
            let gen = geometric_side(&spec, &cls).unwrap();
            let fast = rational_off_diagonal(1, 12, m as u64, p as u64, 40).unwrap();
            assert!((gen.value - fast.value).abs() < 1e-12, "{m} {p}");
            assert!(gen.tail_bound >= fast.tail_bound * 0.0 && gen.tail_bound < 1e-3);
        }
        let spec = GeometricSideSpec { m: qi(2), p: qi(2), level: qi(7), weight: vec![4], cutoff: 0, nu_twist: None };
        assert_eq!(geometric_side(&spec, &cls).unwrap().value, 1.0);
    }

    #[test]
    fn fft_rows_match_direct_sums() {
        for (q, p) in [(11u64, 3u64), (7, 1), (5, 10)] {
            let (rows, tails) = rational_off_diagonal_rows(q, 4, p, 60, 30).unwrap();
            for n in [1u64, 2, 3, 17, 22, 25, 49, 55, 60] {
                let d = rational_off_diagonal(q, 4, n, p, 30).unwrap();
                assert!((rows[n as usize] - d.off_diagonal).abs() < 1e-13, "{q} {p} {n}");
                assert!((tails[n as usize] - d.tail_bound).abs() <= 1e-12 * d.tail_bound);
            }
        }
    }

    #[test]
    fn golden_field_unit_fold_invariance() {
        let k = TotallyRealField::quadratic(5).unwrap();
        let cls = NarrowClassGroup::new(&k).unwrap();
        let m = Ideal::from_generators(&k, &[FieldElement::int(2, 1)]).unwrap();
        let p = Ideal::from_int(&k, 1).unwrap();
        let base = GeometricSideSpec { m: m.clone(), p: p.clone(), level: Ideal::from_int(&k, 2).unwrap(), weight: vec![4, 4], cutoff: 120, nu_twist: None };
        let v0 = geometric_side(&base, &cls).unwrap();
        let twisted = GeometricSideSpec { nu_twist: Some(k.eps_plus().clone()), ..base.clone() };
        let v1 = geometric_side(&twisted, &cls).unwrap();
        assert!(v0.terms > 0);
        assert!(v0.tail_bound.is_finite());
        let half = geometric_side(&GeometricSideSpec { cutoff: 60, ..base.clone() }, &cls).unwrap();
        assert!((half.value - v0.value).abs() <= half.tail_bound, "{} {} {}", half.value, v0.value, half.tail_bound);
        let two = GeometricSideSpec { weight: vec![2, 2], ..base.clone() };
        assert!(matches!(geometric_side(&two, &cls), Err(HmfError::Tail(_))));
        assert!((v0.value - v1.value).abs() < 1e-9, "{} vs {}", v0.value, v1.value);
    }

    #[test]
    fn oldform_scale_conventions_agree() {
        let d = delta(200);
        let lift = oldform_lift(&d, &qi(11)).unwrap();
        assert!((lift.scale - lift.scale_from_sym2()).abs() < 1e-12 * lift.scale);
        let c11 = d.coefficient_n(11).unwrap();
        assert!((lift.coefficient_n(1).unwrap() + lift.scale * c11 / 12.0).abs() < 1e-15);
        let expect = lift.scale * (1.0 - c11 * c11 / 12.0);
        assert!((lift.coefficient_n(11).unwrap() - expect).abs() < 1e-14);
        assert!(oldform_lift(&d, &qi(15)).is_err());
    }

    #[test]
    fn level_one_weight_solve() {
        let d = delta(20);
        let g11 = rational_off_diagonal(1, 12, 1, 1, 60).unwrap().value;
        let g13 = rational_off_diagonal(1, 12, 1, 3, 60).unwrap().value;
        let fit = vec![TraceSample { m: qi(1), p: qi(1), value: g11 }];
        let hold = vec![TraceSample { m: qi(1), p: qi(3), value: g13 }];
        let sol = solve_harmonic_weights(vec![BasisForm::Primitive(d.clone())], &fit, &hold).unwrap();
        assert_eq!(sol.basis.weights[0], g11);
        assert!(sol.holdout_residual < 1e-8);
        let b = &sol.basis;
        let s = spectral_side_n(b, 2, 3).unwrap();
        let expect = g11 * (-24.0 / 2f64.powf(5.5)) * (252.0 / 3f64.powf(5.5));
        assert!((s - expect).abs() < 1e-15 * g11.abs().max(1.0));
        assert_eq!(spectral_side_n(&HarmonicBasis::empty(), 1, 1).unwrap(), 0.0);
    }
}
