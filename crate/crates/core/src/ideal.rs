//! Fractional ideals as lattices in Hermite normal form, prime decomposition,
//! divisor counts and the narrow class group.
//!
//! An ideal is stored as `L / den` where `L` is the integral lattice with
//! Z-basis `a` and `b + c w`, `c | a`, `c | b`, `0 <= b < a`. For `Q` the
//! lattice is just `aZ` (with `b = 0`, `c = 1`).

use std::fmt;

use num_integer::Integer;
use num_traits::Signed;

use crate::field::{rat, rat_to_f64, FieldElement, Rat, TotallyRealField};
use crate::util::factor;
use crate::{HmfError, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Ideal {
    a: i128,
    b: i128,
    c: i128,
    den: i128,
}

/// Hermite form of an integer lattice in `Z^2`, with the integer combination
/// of the input rows producing the first basis row.
pub(crate) struct Hnf {
    pub a: i128,
    pub b: i128,
    pub c: i128,
    /// `(a, 0) = sum ta[i] * rows[i]`.
    pub ta: Vec<i128>,
}

fn checked(x: Option<i128>) -> Result<i128> {
    x.ok_or(HmfError::Overflow("ideal arithmetic"))
}

/// Euclid on column `col` across `rows`, keeping transforms. Leaves at most one
/// row with a nonzero entry in that column and returns its index.
fn eliminate(rows: &mut [[i128; 2]], tr: &mut [Vec<i128>], col: usize, live: &[usize]) -> Result<Option<usize>> {
    loop {
        let mut piv: Option<usize> = None;
        for &i in live {
            if rows[i][col] != 0 && piv.is_none_or(|p| rows[i][col].abs() < rows[p][col].abs()) {
                piv = Some(i);
            }
        }
        let Some(p) = piv else { return Ok(None) };
        let mut done = true;
        for &i in live {
            if i == p || rows[i][col] == 0 {
                continue;
            }
            let q = rows[i][col] / rows[p][col];
            for k in 0..2 {
                rows[i][k] = checked(rows[i][k].checked_sub(checked(q.checked_mul(rows[p][k]))?))?;
            }
            for k in 0..tr[i].len() {
                tr[i][k] = checked(tr[i][k].checked_sub(checked(q.checked_mul(tr[p][k]))?))?;
            }
            if rows[i][col] != 0 {
                done = false;
            }
        }
        if done {
            return Ok(Some(p));
        }
    }
}

pub(crate) fn hnf(rows: &[[i128; 2]]) -> Result<Hnf> {
    let n = rows.len();
    let mut r = rows.to_vec();
    let mut tr: Vec<Vec<i128>> = (0..n)
        .map(|i| {
            let mut v = vec![0; n];
            v[i] = 1;
            v
        })
        .collect();
    let all: Vec<usize> = (0..n).collect();
    let pc = eliminate(&mut r, &mut tr, 1, &all)?;
    let rest: Vec<usize> = all.iter().copied().filter(|&i| Some(i) != pc).collect();
    let pa = eliminate(&mut r, &mut tr, 0, &rest)?;
    let (Some(pa), Some(pc)) = (pa, pc) else {
        return Err(HmfError::Argument("lattice is not of full rank".into()));
    };
    let (mut a, mut ta) = (r[pa][0], tr[pa].clone());
    if a < 0 {
        a = -a;
        ta.iter_mut().for_each(|v| *v = -*v);
    }
    let (mut b, mut c) = (r[pc][0], r[pc][1]);
    if c < 0 {
        b = -b;
        c = -c;
    }
    Ok(Hnf { a, b: b.rem_euclid(a), c, ta })
}

/// `(p, q)` with `x = (p + q w) / den`.
fn int_coords(x: &FieldElement, den: i128) -> (i128, i128) {
    let p = x.a * den;
    let q = x.b * den;
    debug_assert!(p.is_integer() && q.is_integer());
    (p.to_integer(), q.to_integer())
}

impl Ideal {
    pub fn unit() -> Self {
        Self { a: 1, b: 0, c: 1, den: 1 }
    }

    fn canonical(field: &TotallyRealField, a: i128, b: i128, c: i128, den: i128) -> Self {
        if field.is_rational() {
            let g = a.gcd(&den);
            return Self { a: a / g, b: 0, c: 1, den: den / g };
        }
        let g = c.gcd(&den);
        let (a, c, den) = (a / g, c / g, den / g);
        let b = (b / g).rem_euclid(a);
        Self { a, b, c, den }
    }

    /// Ideal generated over `O_F` by `gens` (not all zero).
    pub fn from_generators(field: &TotallyRealField, gens: &[FieldElement]) -> Result<Self> {
        let gens: Vec<&FieldElement> = gens.iter().filter(|g| !g.is_zero()).collect();
        if gens.is_empty() {
            return Err(HmfError::Zero);
        }
        let den = gens.iter().fold(1i128, |acc, g| acc.lcm(&g.denominator()));
        if field.is_rational() {
            let a = gens
                .iter()
                .fold(0i128, |acc, g| acc.gcd(&int_coords(g, den).0));
            return Ok(Self::canonical(field, a, 0, 1, den));
        }
        let w = FieldElement::int(0, 1);
        let mut rows = Vec::with_capacity(2 * gens.len());
        for g in gens {
            let (p, q) = int_coords(g, den);
            rows.push([p, q]);
            let (p, q) = int_coords(&field.mul(g, &w), den);
            rows.push([p, q]);
        }
        let h = hnf(&rows)?;
        Ok(Self::canonical(field, h.a, h.b, h.c, den))
    }

    /// The Z-module spanned by `elems`, which must already be an `O_F`-module.
    fn from_z_span(field: &TotallyRealField, elems: &[FieldElement]) -> Result<Self> {
        let den = elems.iter().fold(1i128, |acc, g| acc.lcm(&g.denominator()));
        if field.is_rational() {
            let a = elems
                .iter()
                .fold(0i128, |acc, g| acc.gcd(&int_coords(g, den).0));
            if a == 0 {
                return Err(HmfError::Zero);
            }
            return Ok(Self::canonical(field, a, 0, 1, den));
        }
        let rows: Vec<[i128; 2]> = elems.iter().map(|g| {
            let (p, q) = int_coords(g, den);
            [p, q]
        }).collect();
        let h = hnf(&rows)?;
        Ok(Self::canonical(field, h.a, h.b, h.c, den))
    }

    pub fn principal(field: &TotallyRealField, x: &FieldElement) -> Result<Self> {
        Self::from_generators(field, std::slice::from_ref(x))
    }

    pub fn from_int(field: &TotallyRealField, n: i128) -> Result<Self> {
        Self::principal(field, &FieldElement::from_int(n))
    }

    /// Integral-lattice data `(a, b, c, den)`.
    pub fn hnf_data(&self) -> (i128, i128, i128, i128) {
        (self.a, self.b, self.c, self.den)
    }

    /// Inverse of [`Self::hnf_data`]; rejects tuples that are not the
    /// canonical form of an ideal.
    pub fn from_hnf_data(field: &TotallyRealField, a: i128, b: i128, c: i128, den: i128) -> Result<Self> {
        if a <= 0 || c <= 0 || den <= 0 {
            return Err(HmfError::Argument(format!("bad ideal data ({a}, {b}, {c})/{den}")));
        }
        let gens = [FieldElement::from_rat(rat(a, den)), FieldElement::int(b, c).scale(rat(1, den))];
        let n = if field.is_rational() { 1 } else { 2 };
        let out = Self::from_generators(field, &gens[..n])?;
        if out.hnf_data() != (a, b, c, den) {
            return Err(HmfError::Argument(format!("({a}, {b}, {c})/{den} is not a canonical ideal")));
        }
        Ok(out)
    }

    /// Z-basis of the ideal.
    pub fn basis(&self, field: &TotallyRealField) -> Vec<FieldElement> {
        let inv = rat(1, self.den);
        if field.is_rational() {
            vec![FieldElement::from_rat(Rat::from_integer(self.a) * inv)]
        } else {
            vec![
                FieldElement::from_rat(Rat::from_integer(self.a) * inv),
                FieldElement::int(self.b, self.c).scale(inv),
            ]
        }
    }

    pub fn norm(&self, field: &TotallyRealField) -> Rat {
        if field.is_rational() {
            rat(self.a, self.den)
        } else {
            rat(self.a * self.c, self.den * self.den)
        }
    }

    /// Norm of an integral ideal as an integer.
    pub fn norm_int(&self, field: &TotallyRealField) -> Result<u64> {
        let n = self.norm(field);
        if !n.is_integer() {
            return Err(HmfError::Argument(format!("ideal {self} is not integral")));
        }
        Ok(n.to_integer() as u64)
    }

    pub fn is_integral(&self) -> bool {
        self.den == 1
    }

    pub fn is_unit(&self) -> bool {
        *self == Self::unit()
    }

    pub fn mul(&self, field: &TotallyRealField, o: &Self) -> Result<Self> {
        if field.is_rational() {
            return Ok(Self::canonical(field, self.a * o.a, 0, 1, self.den * o.den));
        }
        let x = self.basis(field);
        let y = o.basis(field);
        let prods: Vec<FieldElement> = x
            .iter()
            .flat_map(|u| y.iter().map(move |v| (u, v)))
            .map(|(u, v)| field.mul(u, v))
            .collect();
        Self::from_z_span(field, &prods)
    }

    /// The sum `I + J`, which for integral ideals is their gcd.
    pub fn add(&self, field: &TotallyRealField, o: &Self) -> Result<Self> {
        let mut v = self.basis(field);
        v.extend(o.basis(field));
        Self::from_z_span(field, &v)
    }

    pub fn gcd(&self, field: &TotallyRealField, o: &Self) -> Result<Self> {
        self.add(field, o)
    }

    pub fn conj(&self, field: &TotallyRealField) -> Result<Self> {
        if field.is_rational() {
            return Ok(self.clone());
        }
        let v: Vec<FieldElement> = self.basis(field).iter().map(|x| field.conj(x)).collect();
        Self::from_z_span(field, &v)
    }

    pub fn inv(&self, field: &TotallyRealField) -> Result<Self> {
        if field.is_rational() {
            return Ok(Self::canonical(field, self.den, 0, 1, self.a));
        }
        let n = self.norm(field).recip();
        let v: Vec<FieldElement> = self
            .conj(field)?
            .basis(field)
            .iter()
            .map(|x| x.scale(n))
            .collect();
        Self::from_z_span(field, &v)
    }

    pub fn div(&self, field: &TotallyRealField, o: &Self) -> Result<Self> {
        self.mul(field, &o.inv(field)?)
    }

    pub fn scale(&self, field: &TotallyRealField, x: &FieldElement) -> Result<Self> {
        if x.is_zero() {
            return Err(HmfError::Zero);
        }
        let v: Vec<FieldElement> = self.basis(field).iter().map(|b| field.mul(b, x)).collect();
        Self::from_z_span(field, &v)
    }

    pub fn pow(&self, field: &TotallyRealField, e: i64) -> Result<Self> {
        let base = if e < 0 { self.inv(field)? } else { self.clone() };
        let mut acc = Self::unit();
        for _ in 0..e.unsigned_abs() {
            acc = acc.mul(field, &base)?;
        }
        Ok(acc)
    }

    pub fn contains(&self, field: &TotallyRealField, x: &FieldElement) -> bool {
        let p = x.a * self.den;
        let q = x.b * self.den;
        if !p.is_integer() || !q.is_integer() {
            return false;
        }
        let (p, q) = (p.to_integer(), q.to_integer());
        if field.is_rational() {
            return q == 0 && p % self.a == 0;
        }
        if q % self.c != 0 {
            return false;
        }
        (p - (q / self.c) * self.b) % self.a == 0
    }

    /// `self ⊆ o`.
    pub fn is_subset(&self, field: &TotallyRealField, o: &Self) -> bool {
        self.basis(field).iter().all(|x| o.contains(field, x))
    }

    /// `o` divides `self`, i.e. `self ⊆ o`.
    pub fn divisible_by(&self, field: &TotallyRealField, o: &Self) -> bool {
        self.is_subset(field, o)
    }

    pub fn is_coprime(&self, field: &TotallyRealField, o: &Self) -> Result<bool> {
        Ok(self.add(field, o)?.is_unit())
    }

    /// Reduces an integral element modulo this integral ideal to the
    /// representative `x + y w` with `0 <= y < c`, `0 <= x < a`.
    pub fn reduce_coords(&self, p: i128, q: i128) -> (i128, i128) {
        debug_assert!(self.is_integral());
        let k = q.div_euclid(self.c);
        let q = q - k * self.c;
        let p = (p - k * self.b).rem_euclid(self.a);
        (p, q)
    }

    /// Prime ideals above the rational prime `p`, with ramification indices.
    pub fn primes_above(field: &TotallyRealField, p: u64) -> Result<Vec<(Ideal, u32)>> {
        let pi = p as i128;
        if field.is_rational() {
            return Ok(vec![(Self::from_int(field, pi)?, 1)]);
        }
        let (t, n0) = field.omega_relation();
        let roots = quadratic_roots_mod(t, n0, p);
        match roots.len() {
            0 => Ok(vec![(Self::from_int(field, pi)?, 1)]),
            1 => {
                let id = Self::from_generators(field, &[FieldElement::from_int(pi), FieldElement::int(-roots[0], 1)])?;
                Ok(vec![(id, 2)])
            }
            _ => roots
                .iter()
                .map(|&r| {
                    Ok((Self::from_generators(field, &[FieldElement::from_int(pi), FieldElement::int(-r, 1)])?, 1))
                })
                .collect(),
        }
    }

    /// Valuation at a prime ideal (integral ideals only).
    pub fn valuation(&self, field: &TotallyRealField, prime: &Ideal) -> Result<u32> {
        let pinv = prime.inv(field)?;
        let mut cur = self.clone();
        let mut v = 0;
        loop {
            let next = cur.mul(field, &pinv)?;
            if !next.is_integral() {
                return Ok(v);
            }
            cur = next;
            v += 1;
        }
    }

    /// Prime factorisation of an integral ideal.
    pub fn factor(&self, field: &TotallyRealField) -> Result<Vec<(Ideal, u32)>> {
        let n = self.norm_int(field)?;
        let mut out = Vec::new();
        for (p, _) in factor(n as u128) {
            for (pr, _) in Self::primes_above(field, p as u64)? {
                let v = self.valuation(field, &pr)?;
                if v > 0 {
                    out.push((pr, v));
                }
            }
        }
        Ok(out)
    }

    /// Number of integral divisors.
    pub fn divisor_count(&self, field: &TotallyRealField) -> Result<u64> {
        Ok(self.factor(field)?.iter().map(|(_, v)| *v as u64 + 1).product())
    }

    /// Generator `x` with `(x) = self` if it has a balanced one, checking
    /// candidates with embeddings bounded by `C2 * sqrt(N)`.
    pub fn principal_generator(&self, field: &TotallyRealField) -> Option<FieldElement> {
        if field.is_rational() {
            return Some(FieldElement::from_rat(rat(self.a, self.den)));
        }
        let n = self.a * self.c;
        let (_, c2) = field.balance_constants();
        let bound = c2 * (n as f64).sqrt() * (1.0 + 1e-9) + 1e-9;
        let sd = (field.d() as f64).sqrt();
        let (t, _) = field.omega_relation();
        let w1 = if t == 1 { (1.0 + sd) / 2.0 } else { sd };
        let ymax = (2.0 * bound / (self.c as f64 * sd)).floor() as i128;
        for y in 0..=ymax {
            let s = y as f64 * (self.b as f64 + self.c as f64 * w1);
            let lo = ((-bound - s) / self.a as f64).floor() as i128;
            let hi = ((bound - s) / self.a as f64).ceil() as i128;
            for x in lo..=hi {
                let el = FieldElement::int(x * self.a + y * self.b, y * self.c);
                if el.is_zero() {
                    continue;
                }
                if field.norm(&el).abs() == Rat::from_integer(n) {
                    return Some(el.scale(rat(1, self.den)));
                }
            }
        }
        None
    }

    /// Totally positive generator of `self`, balanced by [`TotallyRealField::balance_by_unit`].
    pub fn totally_positive_generator_of(&self, field: &TotallyRealField) -> Option<FieldElement> {
        let mut g = self.principal_generator(field)?;
        if field.norm(&g).is_negative() {
            if field.norm(field.eps0()).is_negative() {
                g = field.mul(&g, field.eps0());
            } else {
                return None;
            }
        }
        if field.embed(&g)[0] < 0.0 {
            g = g.neg();
        }
        let u = field.balance_by_unit(&g).ok()?;
        Some(field.mul(&u, &g))
    }

    pub fn display(&self, field: &TotallyRealField) -> String {
        if field.is_rational() {
            if self.den == 1 {
                format!("({})", self.a)
            } else {
                format!("({}/{})", self.a, self.den)
            }
        } else {
            format!("{}", self)
        }
    }
}

impl fmt::Display for Ideal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "[{}, {}+{}w]", self.a, self.b, self.c)
        } else {
            write!(f, "[{}, {}+{}w]/{}", self.a, self.b, self.c, self.den)
        }
    }
}

fn pow_mod(mut b: u128, mut e: u128, m: u128) -> u128 {
    let mut acc = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    acc
}

/// Square root of `n` modulo an odd prime `p` (Tonelli-Shanks), if it exists.
pub fn sqrt_mod(n: u64, p: u64) -> Option<u64> {
    let (n, p) = (n as u128 % p as u128, p as u128);
    if n == 0 {
        return Some(0);
    }
    if pow_mod(n, (p - 1) / 2, p) != 1 {
        return None;
    }
    let mut q = p - 1;
    let mut s = 0;
    while q % 2 == 0 {
        q /= 2;
        s += 1;
    }
    let mut z = 2;
    while pow_mod(z, (p - 1) / 2, p) != p - 1 {
        z += 1;
    }
    let mut m = s;
    let mut c = pow_mod(z, q, p);
    let mut t = pow_mod(n, q, p);
    let mut r = pow_mod(n, q.div_ceil(2), p);
    while t != 1 {
        let mut i = 0;
        let mut tt = t;
        while tt != 1 {
            tt = tt * tt % p;
            i += 1;
        }
        let b = pow_mod(c, 1 << (m - i - 1), p);
        m = i;
        c = b * b % p;
        t = t * c % p;
        r = r * b % p;
    }
    Some(r as u64)
}

/// Distinct roots of `x^2 - t x - n0` modulo `p`.
fn quadratic_roots_mod(t: i128, n0: i128, p: u64) -> Vec<i128> {
    let pi = p as i128;
    if p == 2 {
        return (0..2)
            .filter(|&r| (r * r - t * r - n0).rem_euclid(2) == 0)
            .collect();
    }
    let disc = (t * t + 4 * n0).rem_euclid(pi);
    let Some(s) = sqrt_mod(disc as u64, p) else {
        return Vec::new();
    };
    let inv2 = (pi + 1) / 2;
    let r1 = ((t + s as i128) * inv2).rem_euclid(pi);
    let r2 = ((t - s as i128) * inv2).rem_euclid(pi);
    if r1 == r2 {
        vec![r1]
    } else {
        let mut v = vec![r1, r2];
        v.sort();
        v
    }
}

/// The different ideal `D_F`.
pub fn different(field: &TotallyRealField) -> Result<Ideal> {
    Ideal::principal(field, &field.sqrt_disc_element())
}

/// Primes `P` above `p`, flagged by whether they divide `modulus`.
fn local_primes(field: &TotallyRealField, p: u64, modulus: &Ideal) -> Result<Vec<(Ideal, u32, bool)>> {
    Ideal::primes_above(field, p)?
        .into_iter()
        .map(|(pr, e)| {
            let div = modulus.divisible_by(field, &pr);
            Ok((pr, e, div))
        })
        .collect()
}

/// Number of integral ideals of norm `d` coprime to `modulus`.
pub fn count_ideals_by_norm(field: &TotallyRealField, d: u64, modulus: &Ideal) -> Result<u64> {
    if d == 0 {
        return Err(HmfError::Argument("norm must be positive".into()));
    }
    let mut total = 1u64;
    for (p, e) in factor(d as u128) {
        let loc = local_primes(field, p as u64, modulus)?;
        let count = match loc.as_slice() {
            [(_, _, div)] if field.is_rational() || loc[0].1 == 2 => u64::from(!*div),
            [(_, _, div)] => u64::from(!*div && e % 2 == 0),
            [(_, _, d1), (_, _, d2)] => match (d1, d2) {
                (false, false) => e as u64 + 1,
                (true, true) => 0,
                _ => 1,
            },
            _ => unreachable!(),
        };
        total *= count;
        if total == 0 {
            return Ok(0);
        }
    }
    Ok(total)
}

/// All integral ideals of norm `d`.
pub fn ideals_of_norm(field: &TotallyRealField, d: u64) -> Result<Vec<Ideal>> {
    let mut acc = vec![Ideal::unit()];
    for (p, e) in factor(d as u128) {
        let pr = Ideal::primes_above(field, p as u64)?;
        let mut local: Vec<Ideal> = Vec::new();
        let np: Vec<u32> = pr
            .iter()
            .map(|(q, _)| {
                let n = q.norm(field).to_integer() as u128;
                if n == p { 1 } else { 2 }
            })
            .collect();
        match pr.len() {
            1 => {
                if e % np[0] == 0 {
                    local.push(pr[0].0.pow(field, (e / np[0]) as i64)?);
                }
            }
            _ => {
                for i in 0..=e {
                    let x = pr[0].0.pow(field, i as i64)?;
                    let y = pr[1].0.pow(field, (e - i) as i64)?;
                    local.push(x.mul(field, &y)?);
                }
            }
        }
        let mut next = Vec::new();
        for x in &acc {
            for y in &local {
                next.push(x.mul(field, y)?);
            }
        }
        acc = next;
        if acc.is_empty() {
            break;
        }
    }
    Ok(acc)
}

/// Narrow ideal class group with fixed representatives.
#[derive(Clone, Debug)]
pub struct NarrowClassGroup {
    field: TotallyRealField,
    reps: Vec<Ideal>,
}

impl NarrowClassGroup {
    pub fn new(field: &TotallyRealField) -> Result<Self> {
        let mut reps = vec![Ideal::unit()];
        if field.is_rational() {
            return Ok(Self { field: field.clone(), reps });
        }
        let disc = field.discriminant() as f64;
        let mink = (disc.sqrt() / 2.0).floor() as u64;
        let mut gens = Vec::new();
        for p in crate::util::primes_up_to(mink) {
            for (pr, _) in Ideal::primes_above(field, p)? {
                if pr.norm(field) <= Rat::from_integer(mink as i128) {
                    gens.push(pr);
                }
            }
        }
        if !field.norm(field.eps0()).is_negative() {
            let sd = if field.omega_relation().0 == 1 {
                FieldElement::int(-1, 2)
            } else {
                FieldElement::int(0, 1)
            };
            gens.push(Ideal::principal(field, &sd)?);
        }
        let mut grp = Self { field: field.clone(), reps };
        let mut i = 0;
        while i < grp.reps.len() {
            for g in &gens {
                let x = grp.reps[i].mul(field, g)?;
                if grp.class_of(&x)?.is_none() {
                    grp.reps.push(x);
                }
            }
            i += 1;
            if grp.reps.len() > 10_000 {
                return Err(HmfError::InvalidField("class group too large".into()));
            }
        }
        // Prefer the smallest-norm prime in each nontrivial class.
        let mut have_prime = vec![false; grp.reps.len()];
        have_prime[0] = true;
        let bound = 200 + 20 * field.discriminant() as u64;
        'outer: for p in crate::util::primes_up_to(bound) {
            let mut primes = Ideal::primes_above(field, p)?;
            primes.sort_by_key(|(q, _)| q.norm(field));
            for (pr, _) in primes {
                let (idx, _) = grp.class_of(&pr)?.expect("every ideal lies in a class");
                if !have_prime[idx] {
                    have_prime[idx] = true;
                    grp.reps[idx] = pr;
                }
                if have_prime.iter().all(|h| *h) {
                    break 'outer;
                }
            }
        }
        reps = grp.reps;
        Ok(Self { field: field.clone(), reps })
    }

    pub fn field(&self) -> &TotallyRealField {
        &self.field
    }

    pub fn h_plus(&self) -> usize {
        self.reps.len()
    }

    /// Wide class number.
    pub fn h(&self) -> usize {
        if self.field.is_rational() || self.field.norm(self.field.eps0()).is_negative() {
            self.reps.len()
        } else {
            self.reps.len() / 2
        }
    }

    pub fn reps(&self) -> &[Ideal] {
        &self.reps
    }

    /// `(index, xi)` with `I = xi * reps[index]` and `xi >> 0`.
    pub fn class_of(&self, i: &Ideal) -> Result<Option<(usize, FieldElement)>> {
        for (k, r) in self.reps.iter().enumerate() {
            if let Some(x) = totally_positive_generator(&self.field, i, r)? {
                return Ok(Some((k, x)));
            }
        }
        Ok(None)
    }

    /// Writes an integral ideal as `nu * a` with `a` a representative and
    /// `nu >> 0` canonical modulo totally positive units.
    pub fn split_ideal(&self, m: &Ideal) -> Result<(FieldElement, usize)> {
        let (k, nu) = self
            .class_of(m)?
            .ok_or_else(|| HmfError::Argument("ideal outside every narrow class".into()))?;
        Ok((nu, k))
    }

    /// Classes `k` with `reps[k]^2 ~ reps[i] reps[j]`.
    pub fn pairing(&self, i: usize, j: usize) -> Result<Vec<usize>> {
        let f = &self.field;
        let ab = self.reps[i].mul(f, &self.reps[j])?;
        let mut out = Vec::new();
        for (k, c) in self.reps.iter().enumerate() {
            let c2 = c.mul(f, c)?;
            if totally_positive_generator(f, &ab, &c2)?.is_some() {
                out.push(k);
            }
        }
        Ok(out)
    }
}

/// `xi >> 0` with `a = xi b`, if `a` and `b` are narrowly equivalent.
pub fn totally_positive_generator(field: &TotallyRealField, a: &Ideal, b: &Ideal) -> Result<Option<FieldElement>> {
    let k = a.div(field, b)?;
    Ok(k.totally_positive_generator_of(field))
}

/// Euler phi of `O/m` for an integral ideal.
pub fn euler_phi(field: &TotallyRealField, m: &Ideal) -> Result<u64> {
    let mut phi = m.norm_int(field)?;
    for (p, _) in m.factor(field)? {
        let np = p.norm_int(field)?;
        phi = phi / np * (np - 1);
    }
    Ok(phi)
}

/// Absolute norm as a float (convenience for analytic code).
pub fn norm_f64(field: &TotallyRealField, i: &Ideal) -> f64 {
    rat_to_f64(&i.norm(field))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q5() -> TotallyRealField {
        TotallyRealField::quadratic(5).unwrap()
    }

    fn qq() -> TotallyRealField {
        TotallyRealField::rationals()
    }

    #[test]
    fn rational_ideals() {
        let f = qq();
        let i6 = Ideal::from_int(&f, 6).unwrap();
        let i10 = Ideal::from_int(&f, 10).unwrap();
        assert_eq!(i6.mul(&f, &i10).unwrap(), Ideal::from_int(&f, 60).unwrap());
        assert_eq!(i6.gcd(&f, &i10).unwrap(), Ideal::from_int(&f, 2).unwrap());
        assert_eq!(Ideal::from_int(&f, 12).unwrap().divisor_count(&f).unwrap(), 6);
        assert_eq!(i6.inv(&f).unwrap().norm(&f), rat(1, 6));
    }

    #[test]
    fn golden_field_ideals() {
        let f = q5();
        let i2 = Ideal::from_int(&f, 2).unwrap();
        let i3 = Ideal::from_int(&f, 3).unwrap();
        let i6 = i2.mul(&f, &i3).unwrap();
        assert_eq!(i6, Ideal::from_int(&f, 6).unwrap());
        assert_eq!(i6.norm(&f), rat(36, 1));
        let s5 = Ideal::principal(&f, &FieldElement::int(-1, 2)).unwrap();
        let i5 = Ideal::from_int(&f, 5).unwrap();
        assert_eq!(s5.gcd(&f, &i5).unwrap(), s5);
        assert_eq!(s5.norm(&f), rat(5, 1));
        assert_eq!(different(&f).unwrap(), s5);
        assert_eq!(i2.divisor_count(&f).unwrap(), 2);
        assert_eq!(Ideal::from_int(&f, 4).unwrap().divisor_count(&f).unwrap(), 3);
    }

    #[test]
    fn prime_decomposition_types() {
        let f = q5();
        assert_eq!(Ideal::primes_above(&f, 2).unwrap()[0].0, Ideal::from_int(&f, 2).unwrap());
        let five = Ideal::primes_above(&f, 5).unwrap();
        assert_eq!(five.len(), 1);
        assert_eq!(five[0].1, 2);
        let eleven = Ideal::primes_above(&f, 11).unwrap();
        assert_eq!(eleven.len(), 2);
        let prod = eleven[0].0.mul(&f, &eleven[1].0).unwrap();
        assert_eq!(prod, Ideal::from_int(&f, 11).unwrap());
        for p in crate::util::primes_up_to(200) {
            let total: u32 = Ideal::primes_above(&f, p)
                .unwrap()
                .iter()
                .map(|(q, e)| {
                    let n = q.norm(&f).to_integer();
                    e * if n == p as i128 { 1 } else { 2 }
                })
                .sum();
            assert_eq!(total, 2, "p = {p}");
        }
    }

    #[test]
    fn ideal_counts() {
        let f = q5();
        let one = Ideal::unit();
        assert_eq!(count_ideals_by_norm(&f, 4, &one).unwrap(), 1);
        assert_eq!(count_ideals_by_norm(&f, 5, &one).unwrap(), 1);
        assert_eq!(count_ideals_by_norm(&f, 2, &one).unwrap(), 0);
        assert_eq!(count_ideals_by_norm(&f, 11, &one).unwrap(), 2);
        assert_eq!(count_ideals_by_norm(&f, 121, &one).unwrap(), 3);
        let q = qq();
        let m = Ideal::from_int(&q, 11).unwrap();
        assert_eq!(count_ideals_by_norm(&q, 11, &m).unwrap(), 0);
        assert_eq!(count_ideals_by_norm(&q, 10, &m).unwrap(), 1);
        // brute force against explicit enumeration
        for d in 1..300u64 {
            assert_eq!(ideals_of_norm(&f, d).unwrap().len() as u64, count_ideals_by_norm(&f, d, &one).unwrap());
        }
    }

    #[test]
    fn count_respects_modulus_in_split_case() {
        let f = q5();
        let eleven = Ideal::primes_above(&f, 11).unwrap();
        let m = eleven[0].0.clone();
        assert_eq!(count_ideals_by_norm(&f, 11, &m).unwrap(), 1);
        assert_eq!(count_ideals_by_norm(&f, 121, &m).unwrap(), 1);
        let brute = ideals_of_norm(&f, 121 * 4)
            .unwrap()
            .into_iter()
            .filter(|i| i.is_coprime(&f, &m).unwrap())
            .count() as u64;
        assert_eq!(count_ideals_by_norm(&f, 121 * 4, &m).unwrap(), brute);
    }

    #[test]
    fn narrow_generators() {
        let f = q5();
        let w = Ideal::principal(&f, &FieldElement::int(0, 1)).unwrap();
        assert!(w.is_unit());
        let x = totally_positive_generator(&f, &w, &Ideal::unit()).unwrap().unwrap();
        assert_eq!(x, FieldElement::one());
        let s5 = Ideal::principal(&f, &FieldElement::int(-1, 2)).unwrap();
        let nu = totally_positive_generator(&f, &s5, &Ideal::unit()).unwrap().unwrap();
        assert!(f.is_totally_positive(&nu));
        assert_eq!(Ideal::principal(&f, &nu).unwrap(), s5);
        let q = qq();
        let i3 = Ideal::from_int(&q, 3).unwrap();
        assert_eq!(totally_positive_generator(&q, &i3, &Ideal::unit()).unwrap().unwrap(), FieldElement::from_int(3));
    }

    #[test]
    fn narrow_class_numbers() {
        for (d, hp, h) in [(5, 1, 1), (2, 1, 1), (3, 2, 1), (13, 1, 1), (6, 2, 1), (10, 2, 2), (15, 4, 2), (21, 2, 1), (79, 6, 3)] {
            let f = TotallyRealField::quadratic(d).unwrap();
            let g = NarrowClassGroup::new(&f).unwrap();
            assert_eq!((g.h_plus(), g.h()), (hp, h), "d = {d}");
            for i in 0..g.h_plus() {
                for j in 0..i {
                    assert!(totally_positive_generator(&f, &g.reps()[i], &g.reps()[j]).unwrap().is_none());
                }
            }
        }
    }

    #[test]
    fn split_ideal_recombines() {
        let f = q5();
        let g = NarrowClassGroup::new(&f).unwrap();
        for d in [2u64, 4, 5, 11, 19, 20, 55] {
            for m in ideals_of_norm(&f, d).unwrap() {
                let (nu, k) = g.split_ideal(&m).unwrap();
                assert_eq!(k, 0);
                assert!(f.is_totally_positive(&nu));
                assert_eq!(g.reps()[k].scale(&f, &nu).unwrap(), m);
            }
        }
        let f = TotallyRealField::quadratic(10).unwrap();
        let g = NarrowClassGroup::new(&f).unwrap();
        for d in [2u64, 3, 6, 9, 13] {
            for m in ideals_of_norm(&f, d).unwrap() {
                let (nu, k) = g.split_ideal(&m).unwrap();
                assert!(f.is_totally_positive(&nu));
                assert_eq!(g.reps()[k].scale(&f, &nu).unwrap(), m);
            }
        }
        let q = qq();
        let gq = NarrowClassGroup::new(&q).unwrap();
        let (nu, k) = gq.split_ideal(&Ideal::from_int(&q, 12).unwrap()).unwrap();
        assert_eq!((nu, k), (FieldElement::from_int(12), 0));
    }

    #[test]
    fn pairing_squares() {
        let f = TotallyRealField::quadratic(15).unwrap();
        let g = NarrowClassGroup::new(&f).unwrap();
        for i in 0..g.h_plus() {
            for j in 0..g.h_plus() {
                let c = g.pairing(i, j).unwrap();
                let ab = g.reps()[i].mul(&f, &g.reps()[j]).unwrap();
                for k in c {
                    let c2 = g.reps()[k].pow(&f, 2).unwrap();
                    assert!(totally_positive_generator(&f, &ab, &c2).unwrap().is_some());
                }
            }
        }
    }

    #[test]
    fn euler_phi_of_residue_rings() {
        let f = q5();
        assert_eq!(euler_phi(&f, &Ideal::from_int(&f, 2).unwrap()).unwrap(), 3);
        assert_eq!(euler_phi(&f, &Ideal::from_int(&f, 11).unwrap()).unwrap(), 100);
        assert_eq!(euler_phi(&qq(), &Ideal::from_int(&qq(), 12).unwrap()).unwrap(), 4);
    }

    #[test]
    fn tonelli_shanks() {
        for p in crate::util::primes_up_to(300).into_iter().skip(1) {
            for n in 0..p {
                match sqrt_mod(n, p) {
                    Some(r) => assert_eq!(r * r % p, n),
                    None => assert!((0..p).all(|r| r * r % p != n)),
                }
            }
        }
    }

    fn elem() -> impl Strategy<Value = FieldElement> {
        (-30i128..30, -30i128..30, 1i128..4)
            .prop_filter("nonzero", |(a, b, _)| *a != 0 || *b != 0)
            .prop_map(|(a, b, d)| FieldElement::new(rat(a, d), rat(b, 1)))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn norm_is_multiplicative(x in elem(), y in elem(), z in elem(), d in prop::sample::select(vec![5i64, 2, 3, 10])) {
            let f = TotallyRealField::quadratic(d).unwrap();
            let i = Ideal::from_generators(&f, &[x.clone(), y.clone()]).unwrap();
            let j = Ideal::principal(&f, &z).unwrap();
            prop_assert_eq!(i.mul(&f, &j).unwrap().norm(&f), i.norm(&f) * j.norm(&f));
            prop_assert_eq!(j.norm(&f), f.norm(&z).abs());
            prop_assert!(i.mul(&f, &i.inv(&f).unwrap()).unwrap().is_unit());
            prop_assert!(i.contains(&f, &x) && i.contains(&f, &y));
        }
    }
}
