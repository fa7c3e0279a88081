//! Special functions and vertical-line integrals: J-Bessel, complex log-Gamma,
//! Hurwitz zeta, the ratio `gamma(s, u)`, the cutoff `V_s(y)`, Dedekind zeta
//! data and the residue expansion of the main term.

use std::f64::consts::{LN_2, PI, TAU};

use num_complex::Complex64;
use num_traits::Zero;

use crate::field::TotallyRealField;
use crate::util::{factor, KahanSum};
use crate::{HmfError, Result};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `B_2, B_4, ..., B_30`.
const BERNOULLI: [f64; 15] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
    -236364091.0 / 2730.0,
    8553103.0 / 6.0,
    -23749461029.0 / 870.0,
    8615841276005.0 / 14322.0,
];

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

// ---------------------------------------------------------------- Gamma

fn is_nonpositive_integer(z: Complex64) -> bool {
    z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round()
}

/// `log Gamma(z)` on a branch continuous in `z` away from the negative axis.
pub fn ln_gamma(z: Complex64) -> Result<Complex64> {
    if is_nonpositive_integer(z) {
        return Err(HmfError::Pole(format!("{z}")));
    }
    if z.re < 0.5 {
        // reflection
        let s = (c(PI, 0.0) * z).sin();
        return Ok(c(PI.ln(), 0.0) - s.ln() - ln_gamma(c(1.0, 0.0) - z)?);
    }
    let mut shift = Complex64::zero();
    let mut w = z;
    while w.re < 15.0 {
        shift += w.ln();
        w += 1.0;
    }
    let inv = 1.0 / w;
    let inv2 = inv * inv;
    let mut series = Complex64::zero();
    let mut p = inv;
    for (k, b) in BERNOULLI.iter().enumerate().take(10) {
        let k = (k + 1) as f64;
        series += p * (b / (2.0 * k * (2.0 * k - 1.0)));
        p *= inv2;
    }
    Ok((w - 0.5) * w.ln() - w + 0.5 * TAU.ln() + series - shift)
}

pub fn gamma_real(x: f64) -> Result<f64> {
    let l = ln_gamma(c(x, 0.0))?;
    Ok(l.exp().re)
}

/// Digamma for real `x` (not a nonpositive integer).
pub fn digamma(x: f64) -> Result<f64> {
    if x <= 0.0 && x == x.round() {
        return Err(HmfError::Pole(format!("{x}")));
    }
    if x < 0.5 {
        return Ok(digamma(1.0 - x)? - PI / (PI * x).tan());
    }
    let mut acc = 0.0;
    let mut w = x;
    while w < 15.0 {
        acc -= 1.0 / w;
        w += 1.0;
    }
    let inv2 = 1.0 / (w * w);
    let mut series = 0.0;
    let mut p = inv2;
    for (k, b) in BERNOULLI.iter().enumerate().take(10) {
        let k = (k + 1) as f64;
        series += b / (2.0 * k) * p;
        p *= inv2;
    }
    Ok(acc + w.ln() - 0.5 / w - series)
}

// ---------------------------------------------------------------- zeta

/// Hurwitz zeta `zeta(s, a)` for `a > 0`, `s != 1`, by Euler-Maclaurin.
pub fn hurwitz_zeta(s: Complex64, a: f64) -> Result<Complex64> {
    if (s - 1.0).norm() < 1e-14 {
        return Err(HmfError::Pole("s = 1".into()));
    }
    if a <= 0.0 {
        return Err(HmfError::Argument(format!("Hurwitz parameter a = {a} must be positive")));
    }
    let n = (12.0 + s.norm()).ceil() as usize;
    let mut sum = Complex64::zero();
    for k in 0..n {
        sum += (-s * (k as f64 + a).ln()).exp();
    }
    let x = n as f64 + a;
    let lx = x.ln();
    let xs = (-s * lx).exp();
    sum += xs * x / (s - 1.0) + 0.5 * xs;
    // B_{2k}/(2k)! * s(s+1)...(s+2k-2) * x^{-s-2k+1}
    let mut rising = s; // s (s+1) ... (s+2k-2)
    let mut xpow = xs / x; // x^{-s-1}
    let mut fact = 2.0; // (2k)!
    for (j, b) in BERNOULLI.iter().enumerate() {
        let term = rising * xpow * (b / fact);
        sum += term;
        if term.norm() < 1e-40 {
            break;
        }
        let k = (j + 1) as f64;
        rising *= (s + 2.0 * k - 1.0) * (s + 2.0 * k);
        xpow /= x * x;
        fact *= (2.0 * k + 1.0) * (2.0 * k + 2.0);
    }
    Ok(sum)
}

/// Generalized Stieltjes constant `gamma_1(a)`.
pub fn stieltjes1(a: f64) -> f64 {
    let n = 20usize;
    let mut sum = KahanSum::default();
    for k in 0..n {
        let y = k as f64 + a;
        sum.add(y.ln() / y);
    }
    let x = n as f64 + a;
    let lx = x.ln();
    sum.add(-0.5 * lx * lx);
    sum.add(0.5 * lx / x);
    // f^{(m)}(y) = (-1)^m m! (log y - H_m) / y^{m+1}, f = log y / y
    let mut fact = 2.0;
    for (j, b) in BERNOULLI.iter().enumerate().take(12) {
        let m = 2 * j + 1;
        let h: f64 = (1..=m).map(|i| 1.0 / i as f64).sum();
        let mfact: f64 = (1..=m).map(|i| i as f64).product();
        let deriv = -mfact * (lx - h) / x.powi(m as i32 + 1);
        sum.add(-b / fact * deriv);
        let k = (j + 1) as f64;
        fact *= (2.0 * k + 1.0) * (2.0 * k + 2.0);
    }
    sum.value()
}

/// Kronecker symbol `(d / n)` for a fundamental discriminant `d` and `n >= 1`.
pub fn kronecker(d: i64, n: u64) -> i32 {
    let mut out = 1i32;
    for (p, e) in factor(n as u128) {
        let p = p as i64;
        let chi: i32 = if p == 2 {
            if d % 2 == 0 {
                0
            } else {
                match d.rem_euclid(8) {
                    1 | 7 => 1,
                    _ => -1,
                }
            }
        } else {
            let r = d.rem_euclid(p);
            if r == 0 {
                0
            } else {
                let mut acc = 1i128;
                let mut b = r as i128;
                let mut k = (p - 1) / 2;
                while k > 0 {
                    if k & 1 == 1 {
                        acc = acc * b % p as i128;
                    }
                    b = b * b % p as i128;
                    k >>= 1;
                }
                if acc == 1 {
                    1
                } else {
                    -1
                }
            }
        };
        out *= chi.pow(e);
    }
    out
}

/// `L(s, chi_D)` for the quadratic character of discriminant `D`.
pub fn dirichlet_l(s: Complex64, disc: i64) -> Result<Complex64> {
    let q = disc as u64;
    let mut sum = Complex64::zero();
    for a in 1..=q {
        let chi = kronecker(disc, a);
        if chi != 0 {
            sum += hurwitz_zeta(s, a as f64 / q as f64)? * chi as f64;
        }
    }
    Ok(sum * (-s * (q as f64).ln()).exp())
}

/// `zeta_F(s)`.
pub fn dedekind_zeta(field: &TotallyRealField, s: Complex64) -> Result<Complex64> {
    let z = hurwitz_zeta(s, 1.0)?;
    if field.is_rational() {
        return Ok(z);
    }
    Ok(z * dirichlet_l(s, field.discriminant())?)
}

/// Laurent data `zeta_F(2u + 1) = gamma_{-1} / (2u) + gamma_0 + O(u)`.
#[derive(Clone, Debug)]
pub struct ZetaData {
    pub gamma_m1: f64,
    pub gamma_0: f64,
    /// `L(1, chi)` and `L'(1, chi)` (1 and 0 over `Q`).
    pub l1: f64,
    pub l1_prime: f64,
    /// Wide class number and regulator used for the class number formula.
    pub class_number: usize,
    pub regulator: f64,
}

pub fn zeta_data(field: &TotallyRealField, class_number: usize) -> Result<ZetaData> {
    if field.is_rational() {
        return Ok(ZetaData {
            gamma_m1: 1.0,
            gamma_0: EULER_GAMMA,
            l1: 1.0,
            l1_prime: 0.0,
            class_number: 1,
            regulator: 1.0,
        });
    }
    let q = field.discriminant();
    let qf = q as f64;
    let (mut l1, mut s1) = (KahanSum::default(), KahanSum::default());
    for a in 1..q {
        let chi = kronecker(q, a as u64) as f64;
        if chi != 0.0 {
            let x = a as f64 / qf;
            l1.add(-chi * digamma(x)? / qf);
            s1.add(-chi * stieltjes1(x) / qf);
        }
    }
    let l1 = l1.value();
    let l1_prime = -qf.ln() * l1 + s1.value();
    let regulator = field.embed(field.eps0())[0].abs().ln();
    Ok(ZetaData {
        gamma_m1: l1,
        gamma_0: EULER_GAMMA * l1 + l1_prime,
        l1,
        l1_prime,
        class_number,
        regulator,
    })
}

impl ZetaData {
    /// `2 h R / sqrt(d_F)`, the class-number-formula value of `gamma_{-1}`.
    pub fn class_number_formula(&self, field: &TotallyRealField) -> f64 {
        if field.is_rational() {
            return 1.0;
        }
        2.0 * self.class_number as f64 * self.regulator / (field.discriminant() as f64).sqrt()
    }
}

// ---------------------------------------------------------------- Bessel

fn bessel_series(u: u32, x: f64) -> f64 {
    let h = x / 2.0;
    let mut term = 1.0;
    for i in 1..=u {
        term *= h / i as f64;
    }
    let mut sum = KahanSum::default();
    sum.add(term);
    let h2 = h * h;
    let mut k = 1.0;
    loop {
        term *= -h2 / (k * (k + u as f64));
        sum.add(term);
        if term.abs() < 1e-18 * sum.value().abs() || term == 0.0 {
            break;
        }
        k += 1.0;
    }
    sum.value()
}

fn bessel_miller(u: u32, x: f64) -> f64 {
    let m = u.max(x as u32) as f64;
    let mut start = (m + 30.0 + 6.0 * m.cbrt() + (40.0 * m).sqrt()) as usize;
    start += start % 2;
    let (mut jp1, mut j) = (0.0f64, 1e-300f64);
    let mut norm = 0.0;
    let mut target = 0.0;
    for k in (1..=start).rev() {
        let jm1 = 2.0 * k as f64 / x * j - jp1;
        jp1 = j;
        j = jm1;
        let idx = k - 1;
        if idx == u as usize {
            target = j;
        }
        if idx % 2 == 0 && idx > 0 {
            norm += 2.0 * j;
        }
        if j.abs() > 1e250 {
            j *= 1e-250;
            jp1 *= 1e-250;
            norm *= 1e-250;
            target *= 1e-250;
        }
    }
    norm += j;
    if u == 0 {
        target = j;
    }
    target / norm
}

fn bessel_hankel(u: u32, x: f64) -> f64 {
    let mu = 4.0 * (u as f64) * (u as f64);
    let (mut p, mut q) = (1.0, 0.0);
    let mut term = 1.0;
    let mut k = 1;
    loop {
        let kk = k as f64;
        term *= (mu - (2.0 * kk - 1.0).powi(2)) / (kk * 8.0 * x);
        if term.abs() < 1e-17 {
            break;
        }
        if k % 2 == 1 {
            q += if (k / 2) % 2 == 0 { term } else { -term };
        } else {
            p += if (k / 2) % 2 == 0 { term } else { -term };
        }
        k += 1;
        if k > 60 {
            break;
        }
    }
    let chi = x - (u as f64 / 2.0 + 0.25) * PI;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// `J_u(x)` for integer `u >= 0` and `x >= 0`.
pub fn bessel_j(u: u32, x: f64) -> Result<f64> {
    if x < 0.0 || x.is_nan() {
        return Err(HmfError::Argument(format!("Bessel argument {x} must be nonnegative")));
    }
    if x == 0.0 {
        return Ok(if u == 0 { 1.0 } else { 0.0 });
    }
    if x * x / 4.0 <= (u + 1) as f64 || x < 1.0 {
        return Ok(bessel_series(u, x));
    }
    if x > 1000.0 && ((u * u) as f64) < x / 10.0 {
        return Ok(bessel_hankel(u, x));
    }
    Ok(bessel_miller(u, x))
}

// ---------------------------------------------------------------- gamma(s, u)

/// `prod_j Gamma(s+u+|k_j-l_j|/2) Gamma(s+u-1+(k_j+l_j)/2) / (same at u = 0)`.
pub fn gamma_ratio(s: Complex64, u: Complex64, k: &[u32], l: &[u32]) -> Result<Complex64> {
    Ok(ln_gamma_ratio(s, u, k, l)?.exp())
}

fn shifts(k: &[u32], l: &[u32]) -> Vec<(f64, f64)> {
    k.iter()
        .zip(l)
        .map(|(&a, &b)| ((a as f64 - b as f64).abs() / 2.0, (a + b) as f64 / 2.0 - 1.0))
        .collect()
}

fn ln_gamma_ratio(s: Complex64, u: Complex64, k: &[u32], l: &[u32]) -> Result<Complex64> {
    let mut acc = Complex64::zero();
    for (a, b) in shifts(k, l) {
        acc += ln_gamma(s + u + a)? + ln_gamma(s + u + b)? - ln_gamma(s + a)? - ln_gamma(s + b)?;
    }
    Ok(acc)
}

/// `prod_j (2 pi)^{-2s - max(k_j, l_j)} Gamma(s + |k_j-l_j|/2) Gamma(s - 1 + (k_j+l_j)/2)`.
pub fn l_infinity(s: Complex64, k: &[u32], l: &[u32]) -> Result<Complex64> {
    let mut acc = Complex64::zero();
    for (j, (a, b)) in shifts(k, l).into_iter().enumerate() {
        let m = k[j].max(l[j]) as f64;
        acc += -(2.0 * s + m) * TAU.ln() + ln_gamma(s + a)? + ln_gamma(s + b)?;
    }
    Ok(acc.exp())
}

// ---------------------------------------------------------------- cutoff

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TestFunction {
    /// `G(u) = 1`.
    Constant,
    /// `G(u) = exp(u^2 / 16)`.
    Gaussian,
}

impl TestFunction {
    pub fn eval(&self, u: Complex64) -> Complex64 {
        match self {
            TestFunction::Constant => c(1.0, 0.0),
            TestFunction::Gaussian => (u * u / 16.0).exp(),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "constant" | "const" | "1" => Ok(Self::Constant),
            "gaussian" | "gauss" => Ok(Self::Gaussian),
            _ => Err(HmfError::Argument(format!("unknown test function {s}"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CutoffFunction {
    pub k: Vec<u32>,
    pub l: Vec<u32>,
    pub g: TestFunction,
    pub sigma0: f64,
}

impl CutoffFunction {
    pub fn new(k: Vec<u32>, l: Vec<u32>, g: TestFunction) -> Result<Self> {
        if k.len() != l.len() || k.is_empty() {
            return Err(HmfError::Argument("weight vectors must have equal nonzero length".into()));
        }
        if k.iter().chain(&l).any(|w| *w == 0 || w % 2 != 0) {
            return Err(HmfError::Argument("weights must be positive even integers".into()));
        }
        Ok(Self { k, l, g, sigma0: 1.5 })
    }

    pub fn with_sigma(mut self, sigma0: f64) -> Self {
        self.sigma0 = sigma0;
        self
    }

    pub fn degree(&self) -> usize {
        self.k.len()
    }

    /// `prod_j k_j^2`.
    pub fn weight_scale(&self) -> f64 {
        self.k.iter().map(|&w| (w * w) as f64).product()
    }

    /// Rightmost pole of `gamma(s, u)` in `u`.
    fn first_pole(&self, s: f64) -> f64 {
        shifts(&self.k, &self.l)
            .iter()
            .map(|(a, b)| -(s + a.min(*b)))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Nodes of the trapezoid rule on one vertical line.
#[derive(Clone, Debug)]
struct LineRule {
    sigma: f64,
    h: f64,
    /// `gamma(s, u_j) G(u_j) / u_j` at `u_j = sigma + i j h`.
    coef: Vec<Complex64>,
    tail: f64,
}

impl LineRule {
    fn build(f: impl Fn(Complex64) -> Result<Complex64>, sigma: f64, dist: f64) -> Result<Self> {
        let h = TAU * dist / 40.0;
        let mut coef = Vec::new();
        let mut peak = 0.0f64;
        let mut quiet = 0;
        for j in 0..200_000 {
            let u = c(sigma, j as f64 * h);
            let v = f(u)?;
            peak = peak.max(v.norm());
            coef.push(v);
            if v.norm() < 1e-19 * peak {
                quiet += 1;
                if quiet >= 25 {
                    let tail = coef.iter().rev().take(25).map(|z| z.norm()).sum::<f64>() * h / PI;
                    return Ok(Self { sigma, h, coef, tail });
                }
            } else {
                quiet = 0;
            }
        }
        Err(HmfError::Quadrature(format!("integrand on Re u = {sigma} does not decay")))
    }

    /// `(1/2 pi i) int y^{-u} f(u) du` along the line.
    fn eval(&self, y: f64) -> f64 {
        let ly = y.ln();
        let mut s = KahanSum::default();
        s.add(0.5 * self.coef[0].re);
        for (j, cj) in self.coef.iter().enumerate().skip(1) {
            let th = -(j as f64) * self.h * ly;
            s.add(cj.re * th.cos() - cj.im * th.sin());
        }
        (-self.sigma * ly).exp() * s.value() * self.h / PI
    }
}

/// Precomputed quadrature for `V_s(y)`, the cutoff of the approximate
/// functional equation.
#[derive(Clone, Debug)]
pub struct VKernel {
    pub cfg: CutoffFunction,
    pub s: f64,
    right: LineRule,
    left: LineRule,
}

impl VKernel {
    pub fn new(cfg: &CutoffFunction, s: f64) -> Result<Self> {
        let (k, l, g) = (cfg.k.clone(), cfg.l.clone(), cfg.g);
        let sc = c(s, 0.0);
        let f = move |u: Complex64| -> Result<Complex64> { Ok(gamma_ratio(sc, u, &k, &l)? * g.eval(u) / u) };
        let pole = cfg.first_pole(s);
        if pole >= 0.0 {
            return Err(HmfError::Pole(format!("gamma(s, u) has a pole at u = {pole} >= 0")));
        }
        let right = LineRule::build(&f, cfg.sigma0, 0.9 * cfg.sigma0)?;
        let sigma_l = -(0.25f64).min(-pole / 2.0);
        let dist = 0.9 * sigma_l.abs().min(sigma_l - pole);
        let left = LineRule::build(&f, sigma_l, dist)?;
        Ok(Self { cfg: cfg.clone(), s, right, left })
    }

    /// `V_s(y)` for `y > 0`.
    pub fn eval(&self, y: f64) -> Result<f64> {
        if y <= 0.0 || y.is_nan() {
            return Err(HmfError::Argument(format!("V needs y > 0, got {y}")));
        }
        if y >= 1.0 {
            Ok(self.right.eval(y))
        } else {
            Ok(1.0 + self.left.eval(y))
        }
    }

    /// Integral on the configured right line, regardless of `y`.
    pub fn eval_on_line(&self, y: f64) -> f64 {
        self.right.eval(y)
    }

    /// Truncation error estimate of the quadrature at `y`.
    pub fn error_budget(&self, y: f64) -> f64 {
        let r = if y >= 1.0 { &self.right } else { &self.left };
        (-r.sigma * y.ln()).exp() * r.tail + 1e-15
    }

    /// Smallest `y` on a geometric grid beyond which `|V| < eps`, assuming
    /// the eventual monotone decay of `V`.
    pub fn decay_point(&self, eps: f64) -> Result<f64> {
        let mut y = 1.0;
        for _ in 0..400 {
            if self.eval(y)?.abs() < eps && self.eval(1.5 * y)?.abs() < eps {
                return Ok(y);
            }
            y *= 1.25;
        }
        Err(HmfError::Quadrature("V does not decay".into()))
    }
}

/// `V_{1/2}(y)` (fresh kernel per call; use [`VKernel`] for repeated use).
pub fn cutoff_v(y: f64, cfg: &CutoffFunction) -> Result<f64> {
    VKernel::new(cfg, 0.5)?.eval(y)
}

// ---------------------------------------------------------------- main term

/// Data for the diagonal main term: the field, norms of the primes dividing
/// the level `n` of `g`, `N(n)`, `N(p)` and the weights.
#[derive(Clone, Debug)]
pub struct MainTermSetup {
    pub field: TotallyRealField,
    pub zeta: ZetaData,
    pub n_primes: Vec<u64>,
    pub n_norm: u64,
    pub p_norm: u64,
    pub k: Vec<u32>,
    pub l: Vec<u32>,
}

#[derive(Clone, Debug)]
pub struct ResidueTerm {
    /// Full residue at `u = 0`.
    pub total: f64,
    /// `(gamma_{-1}/2) A_n`, the coefficient of `log N(q)`.
    pub log_coefficient: f64,
    /// The `q`-independent constant.
    pub constant: f64,
    /// `total - log_coefficient log N(q) - constant`, of size `log N(q) / N(q)`.
    pub correction: f64,
}

impl MainTermSetup {
    fn n(&self) -> i32 {
        self.field.degree() as i32
    }

    /// `4^n pi^{2n} N(p) / N(D^2 n)`; dividing by `N(q)` gives the AFE scale.
    pub fn y_scale(&self) -> f64 {
        let d = self.field.discriminant() as f64;
        4f64.powi(self.n()) * PI.powi(2 * self.n()) * self.p_norm as f64 / (d * d * self.n_norm as f64)
    }

    /// `A_n`.
    pub fn a_n(&self) -> f64 {
        self.n_primes.iter().map(|&p| 1.0 - 1.0 / p as f64).product()
    }

    fn g1(&self) -> Result<f64> {
        let mut acc = 0.0;
        for (a, b) in shifts(&self.k, &self.l) {
            acc += digamma(0.5 + a)? + digamma(0.5 + b)?;
        }
        Ok(acc)
    }

    /// Residue at `u = 0` of `Y^{-u} gamma(1/2, u) zeta_F^{nq}(2u+1) / u`.
    pub fn residue(&self, q_norm: u64) -> Result<ResidueTerm> {
        let gm1 = self.zeta.gamma_m1;
        let g0 = self.zeta.gamma_0;
        let log_y = (self.y_scale() / q_norm as f64).ln();
        let g1 = self.g1()?;
        let mut primes = self.n_primes.clone();
        primes.push(q_norm);
        let e0: f64 = primes.iter().map(|&p| 1.0 - 1.0 / p as f64).product();
        let e1 = e0
            * primes
                .iter()
                .map(|&p| 2.0 * (p as f64).ln() / (p as f64 - 1.0))
                .sum::<f64>();
        let total = 0.5 * gm1 * (-log_y * e0 + g1 * e0 + e1) + g0 * e0;
        let a = self.a_n();
        let a1 = a * self
            .n_primes
            .iter()
            .map(|&p| 2.0 * (p as f64).ln() / (p as f64 - 1.0))
            .sum::<f64>();
        let log_coefficient = 0.5 * gm1 * a;
        let constant = 0.5 * gm1 * (-self.y_scale().ln() * a + g1 * a + a1) + g0 * a;
        let correction = total - log_coefficient * (q_norm as f64).ln() - constant;
        Ok(ResidueTerm { total, log_coefficient, constant, correction })
    }

    fn line_integrand(&self, u: Complex64, q_norm: Option<u64>) -> Result<Complex64> {
        let s = c(0.5, 0.0);
        let mut z = gamma_ratio(s, u, &self.k, &self.l)? * dedekind_zeta(&self.field, 2.0 * u + 1.0)?;
        for &p in self.n_primes.iter().chain(q_norm.iter()) {
            z *= 1.0 - (-(2.0 * u + 1.0) * (p as f64).ln()).exp();
        }
        Ok(z / u)
    }

    /// `(1/2 pi i) int_{(-1/4)} Y^{-u} gamma(1/2,u) zeta_F^{nq}(2u+1) du/u`.
    pub fn line_integral(&self, q_norm: u64) -> Result<f64> {
        let y = self.y_scale() / q_norm as f64;
        let rule = LineRule::build(|u| self.line_integrand(u, Some(q_norm)), -0.25, 0.2)?;
        Ok(rule.eval(y))
    }

    /// `c` such that `|line_integral(q)| <= c N(q)^{-1/4}` for every prime
    /// `N(q) >= q_min`.
    pub fn line_envelope(&self, q_min: u64) -> Result<f64> {
        let rule = LineRule::build(|u| self.line_integrand(u, None), -0.25, 0.2)?;
        let mut s = KahanSum::default();
        s.add(0.5 * rule.coef[0].norm());
        for z in rule.coef.iter().skip(1) {
            s.add(z.norm());
        }
        let integral = s.value() * rule.h / PI;
        Ok(self.y_scale().powf(0.25) * (1.0 + (q_min as f64).powf(-0.5)) * integral * (1.0 + 1e-6) + rule.tail)
    }
}

/// Residue form of the main term (see [`MainTermSetup::residue`]).
pub fn residue_main_term(setup: &MainTermSetup, q_norm: u64) -> Result<ResidueTerm> {
    setup.residue(q_norm)
}

/// `ln 2`, re-exported for callers computing dyadic truncations.
pub const LOG2: f64 = LN_2;
