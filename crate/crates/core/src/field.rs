//! The base field: `Q` or a real quadratic field `Q(sqrt d)`.
//!
//! Elements are exact pairs of rationals over the integral basis `(1, w)`,
//! where `w = sqrt d` for `d = 2, 3 mod 4` and `w = (1 + sqrt d)/2` for
//! `d = 1 mod 4`. In both cases `w^2 = t w + n0` and the conjugate is `t - w`.

use std::fmt;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::util::{is_squarefree, isqrt};
use crate::{HmfError, Result};

pub type Rat = Ratio<i128>;

pub fn rat(n: i128, d: i128) -> Rat {
    Ratio::new(n, d)
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    // Split off the integer part so large numerators keep their low bits.
    let (q, rem) = r.numer().div_rem(r.denom());
    q as f64 + rem.to_f64().unwrap() / r.denom().to_f64().unwrap()
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldElement {
    pub a: Rat,
    pub b: Rat,
}

impl FieldElement {
    pub fn new(a: Rat, b: Rat) -> Self {
        Self { a, b }
    }

    pub fn int(a: i128, b: i128) -> Self {
        Self::new(Rat::from_integer(a), Rat::from_integer(b))
    }

    pub fn from_int(a: i128) -> Self {
        Self::int(a, 0)
    }

    pub fn from_rat(a: Rat) -> Self {
        Self::new(a, Rat::zero())
    }

    pub fn zero() -> Self {
        Self::from_int(0)
    }

    pub fn one() -> Self {
        Self::from_int(1)
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn add(&self, o: &Self) -> Self {
        Self::new(self.a + o.a, self.b + o.b)
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self::new(self.a - o.a, self.b - o.b)
    }

    pub fn neg(&self) -> Self {
        Self::new(-self.a, -self.b)
    }

    pub fn scale(&self, r: Rat) -> Self {
        Self::new(self.a * r, self.b * r)
    }

    pub fn is_integral(&self) -> bool {
        self.a.is_integer() && self.b.is_integer()
    }

    /// Least common denominator of the two coordinates.
    pub fn denominator(&self) -> i128 {
        self.a.denom().lcm(self.b.denom())
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            write!(f, "{}", self.a)
        } else {
            write!(f, "{}+{}w", self.a, self.b)
        }
    }
}

/// `Q` (degree 1) or a real quadratic field.
#[derive(Clone, Debug, PartialEq)]
pub struct TotallyRealField {
    d: i64,
    t: i128,
    n0: i128,
    disc: i64,
    eps0: FieldElement,
    eps_plus: FieldElement,
    prec: u32,
    sqrt_d: f64,
}

impl TotallyRealField {
    pub fn rationals() -> Self {
        Self {
            d: 1,
            t: 0,
            n0: 0,
            disc: 1,
            eps0: FieldElement::from_int(-1),
            eps_plus: FieldElement::one(),
            prec: 16,
            sqrt_d: 1.0,
        }
    }

    /// `Q(sqrt d)` for squarefree `d > 1`.
    pub fn quadratic(d: i64) -> Result<Self> {
        if d < 2 || !is_squarefree(d as u64) {
            return Err(HmfError::InvalidField(format!("d = {d} is not a squarefree integer > 1")));
        }
        let (t, n0, disc) = if d % 4 == 1 {
            (1, (d as i128 - 1) / 4, d)
        } else {
            (0, d as i128, 4 * d)
        };
        let mut f = Self {
            d,
            t,
            n0,
            disc,
            eps0: FieldElement::one(),
            eps_plus: FieldElement::one(),
            prec: 16,
            sqrt_d: (d as f64).sqrt(),
        };
        f.eps0 = f.fundamental_unit()?;
        f.eps_plus = if f.norm(&f.eps0) == Rat::from_integer(-1) {
            f.mul(&f.eps0, &f.eps0)
        } else {
            f.eps0.clone()
        };
        Ok(f)
    }

    /// Parses `QQ` or `Qsqrt:<d>`.
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        if spec == "QQ" || spec == "Q" {
            return Ok(Self::rationals());
        }
        if let Some(d) = spec.strip_prefix("Qsqrt:") {
            let d: i64 = d
                .parse()
                .map_err(|_| HmfError::InvalidField(spec.to_string()))?;
            return Self::quadratic(d);
        }
        Err(HmfError::InvalidField(spec.to_string()))
    }

    pub fn with_precision(mut self, digits: u32) -> Result<Self> {
        if !(15..=16).contains(&digits) {
            return Err(HmfError::Precision(digits));
        }
        self.prec = digits;
        Ok(self)
    }

    pub fn tag(&self) -> String {
        if self.is_rational() {
            "QQ".to_string()
        } else {
            format!("Qsqrt:{}", self.d)
        }
    }

    pub fn degree(&self) -> usize {
        if self.d == 1 {
            1
        } else {
            2
        }
    }

    pub fn is_rational(&self) -> bool {
        self.d == 1
    }

    /// Squarefree `d` (1 for `Q`).
    pub fn d(&self) -> i64 {
        self.d
    }

    /// `w^2 = t w + n0`.
    pub fn omega_relation(&self) -> (i128, i128) {
        (self.t, self.n0)
    }

    pub fn discriminant(&self) -> i64 {
        self.disc
    }

    pub fn precision(&self) -> u32 {
        self.prec
    }

    pub fn eps0(&self) -> &FieldElement {
        &self.eps0
    }

    pub fn eps_plus(&self) -> &FieldElement {
        &self.eps_plus
    }

    /// `sqrt(d_F)` as an element: a generator of the different.
    pub fn sqrt_disc_element(&self) -> FieldElement {
        if self.is_rational() {
            FieldElement::one()
        } else if self.t == 1 {
            FieldElement::int(-1, 2)
        } else {
            FieldElement::int(0, 2)
        }
    }

    pub fn element(&self, a: Rat, b: Rat) -> FieldElement {
        debug_assert!(!self.is_rational() || b.is_zero());
        FieldElement::new(a, b)
    }

    pub fn mul(&self, x: &FieldElement, y: &FieldElement) -> FieldElement {
        let bb = x.b * y.b;
        FieldElement::new(
            x.a * y.a + bb * self.n0,
            x.a * y.b + x.b * y.a + bb * self.t,
        )
    }

    pub fn conj(&self, x: &FieldElement) -> FieldElement {
        if self.is_rational() {
            return x.clone();
        }
        FieldElement::new(x.a + x.b * self.t, -x.b)
    }

    pub fn trace(&self, x: &FieldElement) -> Rat {
        if self.is_rational() {
            return x.a;
        }
        x.a * 2 + x.b * self.t
    }

    pub fn norm(&self, x: &FieldElement) -> Rat {
        if self.is_rational() {
            return x.a;
        }
        x.a * x.a + x.a * x.b * self.t - x.b * x.b * self.n0
    }

    pub fn trace_norm(&self, x: &FieldElement) -> (Rat, Rat) {
        (self.trace(x), self.norm(x))
    }

    pub fn inv(&self, x: &FieldElement) -> Result<FieldElement> {
        if x.is_zero() {
            return Err(HmfError::Zero);
        }
        if self.is_rational() {
            return Ok(FieldElement::from_rat(x.a.recip()));
        }
        let n = self.norm(x);
        let c = self.conj(x);
        Ok(c.scale(n.recip()))
    }

    pub fn div(&self, x: &FieldElement, y: &FieldElement) -> Result<FieldElement> {
        Ok(self.mul(x, &self.inv(y)?))
    }

    pub fn pow(&self, x: &FieldElement, e: i64) -> Result<FieldElement> {
        let base = if e < 0 { self.inv(x)? } else { x.clone() };
        let mut acc = FieldElement::one();
        let mut b = base;
        let mut k = e.unsigned_abs();
        while k > 0 {
            if k & 1 == 1 {
                acc = self.mul(&acc, &b);
            }
            b = self.mul(&b, &b);
            k >>= 1;
        }
        Ok(acc)
    }

    /// Real embeddings `(s_1(x), ..., s_n(x))`; `s_1` sends `sqrt d` to the
    /// positive root.
    pub fn embed(&self, x: &FieldElement) -> Vec<f64> {
        if self.is_rational() {
            return vec![rat_to_f64(&x.a)];
        }
        let a = rat_to_f64(&x.a);
        let b = rat_to_f64(&x.b);
        let (w1, w2) = if self.t == 1 {
            ((1.0 + self.sqrt_d) / 2.0, (1.0 - self.sqrt_d) / 2.0)
        } else {
            (self.sqrt_d, -self.sqrt_d)
        };
        let e1 = a + b * w1;
        let e2 = a + b * w2;
        // Recover the smaller embedding from the exact norm to avoid cancellation.
        let n = rat_to_f64(&self.norm(x));
        if x.is_zero() {
            vec![0.0, 0.0]
        } else if e1.abs() >= e2.abs() {
            vec![e1, n / e1]
        } else {
            vec![n / e2, e2]
        }
    }

    pub fn is_totally_positive(&self, x: &FieldElement) -> bool {
        if self.is_rational() {
            return x.a.is_positive();
        }
        self.trace(x).is_positive() && self.norm(x).is_positive()
    }

    pub fn is_unit(&self, x: &FieldElement) -> bool {
        x.is_integral() && self.norm(x).abs().is_one()
    }

    fn fundamental_unit(&self) -> Result<FieldElement> {
        // Continued fraction of w = (P + sqrt d)/Q.
        let d = self.d as i128;
        let s = isqrt(d as u128) as i128;
        let (mut p, mut q) = if self.t == 1 { (1i128, 2i128) } else { (0, 1) };
        let (mut h0, mut h1) = (0i128, 1i128);
        let (mut k0, mut k1) = (1i128, 0i128);
        for _ in 0..10_000 {
            let a = Integer::div_floor(&(p + s), &q);
            let h2 = a
                .checked_mul(h1)
                .and_then(|v| v.checked_add(h0))
                .ok_or(HmfError::Overflow("continued fraction"))?;
            let k2 = a
                .checked_mul(k1)
                .and_then(|v| v.checked_add(k0))
                .ok_or(HmfError::Overflow("continued fraction"))?;
            (h0, h1) = (h1, h2);
            (k0, k1) = (k1, k2);
            let cand = FieldElement::int(h1 - k1 * self.t, k1);
            let n = self.norm(&cand);
            if n.abs().is_one() {
                return Ok(cand);
            }
            let p_next = a * q - p;
            let q_next = (d - p_next * p_next) / q;
            p = p_next;
            q = q_next;
        }
        Err(HmfError::InvalidField("continued fraction did not terminate".into()))
    }

    /// Larger embedding of `eps_plus` (equals `eps_plus` for `Q`).
    fn eps_plus_big(&self) -> f64 {
        self.embed(&self.eps_plus)[0]
    }

    /// The constants `(C1, C2)` with `C1 |N x|^(1/n) <= |s_j(e x)| <= C2 |N x|^(1/n)`
    /// for the output `e` of [`Self::balance_by_unit`].
    pub fn balance_constants(&self) -> (f64, f64) {
        if self.is_rational() {
            return (1.0, 1.0);
        }
        let e = self.eps_plus_big();
        (e.powf(-0.5), e.powf(0.5))
    }

    /// Totally positive unit `e` making the embeddings of `e x` as equal in
    /// size as the unit group allows. Ties go to the lexicographically
    /// smaller embedding vector.
    pub fn balance_by_unit(&self, x: &FieldElement) -> Result<FieldElement> {
        if x.is_zero() {
            return Err(HmfError::Zero);
        }
        if self.is_rational() {
            return Ok(FieldElement::one());
        }
        let emb = self.embed(x);
        let le = self.eps_plus_big().ln();
        let delta = (emb[0].abs().ln() - emb[1].abs().ln()) / 2.0;
        let m0 = (-delta / le).round() as i64;
        let mut best: Option<(f64, Vec<f64>, FieldElement)> = None;
        for m in [m0 - 1, m0, m0 + 1] {
            let u = self.pow(&self.eps_plus, m)?;
            let y = self.mul(&u, x);
            let ey = self.embed(&y);
            let dev = ((ey[0].abs().ln() - ey[1].abs().ln()) / 2.0).abs();
            let better = match &best {
                None => true,
                Some((bd, bv, _)) => {
                    if (dev - bd).abs() <= 1e-12 * (1.0 + bd) {
                        ey.partial_cmp(bv) == Some(std::cmp::Ordering::Less)
                    } else {
                        dev < *bd
                    }
                }
            };
            if better {
                best = Some((dev, ey, u));
            }
        }
        Ok(best.unwrap().2)
    }

    /// `[1, e, e^-1, e^2, e^-2, ...]` for `e = eps_plus`, truncated to `max_count`.
    pub fn totally_positive_units(&self, max_count: usize) -> Vec<FieldElement> {
        if self.is_rational() {
            return if max_count == 0 {
                Vec::new()
            } else {
                vec![FieldElement::one()]
            };
        }
        let mut out = Vec::with_capacity(max_count);
        let mut m = 0i64;
        while out.len() < max_count {
            if m == 0 {
                out.push(FieldElement::one());
            } else {
                out.push(self.pow(&self.eps_plus, m).unwrap());
                if out.len() < max_count {
                    out.push(self.pow(&self.eps_plus, -m).unwrap());
                }
            }
            m += 1;
        }
        out
    }

    /// Representatives of `O^{x+} / O^{x2}`.
    pub fn unit_square_classes(&self) -> Vec<FieldElement> {
        if self.is_rational() || self.norm(&self.eps0) == Rat::from_integer(-1) {
            vec![FieldElement::one()]
        } else {
            vec![FieldElement::one(), self.eps_plus.clone()]
        }
    }

    /// `sum_{eta in O^{x+}} prod_{eta_j < 1} eta_j^delta`, truncated with a
    /// rigorous tail bound below `1e-12`.
    pub fn unit_sum(&self, delta: f64) -> Result<UnitSum> {
        if delta.is_nan() || delta <= 0.0 {
            return Err(HmfError::Divergent(format!("unit sum needs delta > 0, got {delta}")));
        }
        if self.is_rational() {
            return Ok(UnitSum { value: 1.0, tail_bound: 0.0, terms: 1 });
        }
        // eta = eps^m has exactly one embedding below 1 for m != 0, equal to eps^-|m|.
        let r = (-delta * self.eps_plus_big().ln()).exp();
        let mut sum = 1.0;
        let mut term = 1.0;
        let mut m = 0;
        loop {
            m += 1;
            term *= r;
            sum += 2.0 * term;
            let tail = 2.0 * term * r / (1.0 - r);
            if tail < 1e-12 {
                return Ok(UnitSum { value: sum, tail_bound: tail, terms: 2 * m + 1 });
            }
            if m > 10_000_000 {
                return Err(HmfError::Divergent("unit sum too slow".into()));
            }
        }
    }

    /// Closed form `1 + 2 / (e^delta - 1)` of [`Self::unit_sum`].
    pub fn unit_sum_closed_form(&self, delta: f64) -> f64 {
        if self.is_rational() {
            return 1.0;
        }
        1.0 + 2.0 / (self.eps_plus_big().powf(delta) - 1.0)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct UnitSum {
    pub value: f64,
    pub tail_bound: f64,
    pub terms: usize,
}
