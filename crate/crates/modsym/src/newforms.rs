//! Hecke eigenvalues of newforms in `S_k(Gamma0(N))`, `N` prime or 1.

use nalgebra::{DMatrix, DVector};

use crate::heilbronn::{cremona, merel, Mat2};
use crate::manin::{ManinSymbols, Quotient};
use crate::p1::is_prime;
use crate::{ModSymError, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Newform {
    pub level: u64,
    pub weight: u32,
    /// Position after sorting the newforms by `a_2`, then `a_3`.
    pub index: usize,
    /// `(p, a_p)` for primes `p` up to the requested bound, unnormalised.
    pub ap: Vec<(u64, f64)>,
}

impl Newform {
    pub fn ap(&self, p: u64) -> Option<f64> {
        self.ap.iter().find(|(q, _)| *q == p).map(|(_, a)| *a)
    }
}

pub fn primes_up_to(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let mut sieve = vec![true; n as usize + 1];
    sieve[0] = false;
    sieve[1] = false;
    let mut i = 2;
    while i * i <= n as usize {
        if sieve[i] {
            let mut j = i * i;
            while j <= n as usize {
                sieve[j] = false;
                j += i;
            }
        }
        i += 1;
    }
    (0..=n).filter(|&k| sieve[k as usize]).collect()
}

struct HeckeSpace {
    q: Quotient,
    level: u64,
}

impl HeckeSpace {
    fn heilbronn(&self, p: u64) -> Vec<Mat2> {
        if self.level % p == 0 {
            merel(p as i64)
        } else {
            cremona(p as i64)
        }
    }

    fn apply(&self, s: usize, mats: &[Mat2], acc: &mut [i128]) {
        for h in mats {
            for (t, c) in self.q.symbols.act(s, h) {
                acc[t] += c;
            }
        }
    }

    fn matrix(&self, p: u64) -> DMatrix<f64> {
        let d = self.q.dim();
        let g = self.q.gen_rep.len();
        let mats = self.heilbronn(p);
        let mut images = DMatrix::zeros(d, g);
        let mut acc = vec![0i128; self.q.symbols.len()];
        for (gi, &rep) in self.q.gen_rep.iter().enumerate() {
            acc.iter_mut().for_each(|v| *v = 0);
            self.apply(rep, &mats, &mut acc);
            let sparse: Vec<(usize, f64)> = acc
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0)
                .map(|(s, v)| (s, *v as f64))
                .collect();
            let col = self.q.project(&sparse);
            for j in 0..d {
                images[(j, gi)] = col[j];
            }
        }
        images * &self.q.basis
    }
}

fn left_eigenvector(m: &DMatrix<f64>, lambda: f64) -> Result<DVector<f64>> {
    let n = m.nrows();
    let scale = m.amax().max(1.0);
    let shift = lambda + 1e-10 * scale;
    let a = m.transpose() - DMatrix::identity(n, n) * shift;
    let lu = a.lu();
    let mut x = DVector::from_fn(n, |i, _| 1.0 + 0.1 * (i as f64).sin());
    for _ in 0..4 {
        x = lu
            .solve(&x)
            .ok_or(ModSymError::Numerical("singular inverse iteration"))?;
        let nrm = x.norm();
        if !nrm.is_finite() || nrm == 0.0 {
            return Err(ModSymError::Numerical("inverse iteration diverged"));
        }
        x /= nrm;
    }
    Ok(x)
}

fn eisenstein_ap(p: u64, weight: u32) -> f64 {
    1.0 + (p as f64).powi(weight as i32 - 1)
}

/// Real eigenvalues of `m`, or an error if any is non-real.
fn real_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    let ev = m.clone().complex_eigenvalues();
    let scale = m.amax().max(1.0);
    let mut out = Vec::new();
    for z in ev.iter() {
        if z.im.abs() > 1e-7 * scale {
            return Err(ModSymError::Numerical("non-real Hecke eigenvalue"));
        }
        out.push(z.re);
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(out)
}

/// Removes one occurrence of each value in `drop` from `ev` (matching within `tol`).
fn remove_values(ev: &mut Vec<f64>, drop: &[f64], tol: f64) -> Result<()> {
    for &v in drop {
        let pos = ev
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - v).abs().partial_cmp(&(b.1 - v).abs()).unwrap())
            .map(|(i, _)| i);
        match pos {
            Some(i) if (ev[i] - v).abs() <= tol => {
                ev.remove(i);
            }
            _ => return Err(ModSymError::Numerical("expected eigenvalue missing")),
        }
    }
    Ok(())
}

/// Newforms of prime level `level` (or level 1) and even weight `weight`,
/// with `a_p` for every prime `p <= bound`.
///
/// Eigenvalues are found numerically; `bound^(weight-2)` must stay well inside
/// `i128`.
pub fn newforms(level: u64, weight: u32, bound: u64) -> Result<Vec<Newform>> {
    if level != 1 && !is_prime(level) {
        return Err(ModSymError::UnsupportedLevel(level));
    }
    if ((bound.max(2) as f64).log2() * (weight as f64 - 2.0)) > 120.0 {
        return Err(ModSymError::BoundTooLarge { bound, weight });
    }
    let q = Quotient::new(ManinSymbols::new(level, weight)?)?;
    let space = HeckeSpace { q, level };
    if space.q.dim() == 0 {
        return Ok(Vec::new());
    }

    // A generic combination separates eigenspaces better than T_2 alone.
    let t2 = space.matrix(2);
    let p_sep = if level == 3 { 5 } else { 3 };
    let t3 = space.matrix(p_sep);
    let c = 1.0 / (p_sep as f64).powf((weight as f64 - 1.0) / 2.0) * 0.7071;
    let op = &t2 + &t3 * c;
    let eis = {
        let n_cusps = if level == 1 { 1 } else { 2 };
        let mut v = Vec::new();
        let e = eisenstein_ap(2, weight) + c * eisenstein_ap(p_sep, weight);
        for _ in 0..n_cusps {
            v.push(e);
        }
        if weight == 2 {
            v.pop();
        }
        v
    };
    let scale = op.amax().max(1.0);
    let tol = 1e-6 * scale;
    let mut ev = real_eigenvalues(&op)?;
    remove_values(&mut ev, &eis, tol)?;
    if level != 1 {
        // Oldforms from level 1 appear twice at prime level.
        let old_forms = newforms(1, weight, p_sep)?;
        let mut old_ev = Vec::new();
        for f in &old_forms {
            let v = f.ap(2).unwrap() + c * f.ap(p_sep).unwrap();
            old_ev.push(v);
            old_ev.push(v);
        }
        remove_values(&mut ev, &old_ev, tol)?;
    }
    for w in ev.windows(2) {
        if (w[1] - w[0]).abs() < 1e-5 * scale {
            return Err(ModSymError::Numerical("repeated newform eigenvalue"));
        }
    }

    let nf = ev.len();
    let dim = space.q.dim();
    let mut wvecs = Vec::with_capacity(nf);
    for &lambda in &ev {
        wvecs.push(left_eigenvector(&op, lambda)?);
    }

    // W[s][f] = w_f . pi(symbol s)
    let nsym = space.q.symbols.len();
    let mut wtab = vec![0.0; nsym * nf];
    for s in 0..nsym {
        if let Some((g, sign)) = space.q.sym_to_gen[s] {
            for (f, w) in wvecs.iter().enumerate() {
                let mut acc = 0.0;
                for j in 0..dim {
                    acc += w[j] * space.q.basis[(g, j)];
                }
                wtab[s * nf + f] = sign * acc;
            }
        }
    }
    let mut colmax = vec![0.0f64; nf];
    for s in 0..nsym {
        for f in 0..nf {
            colmax[f] = colmax[f].max(wtab[s * nf + f].abs());
        }
    }
    let s0 = (0..nsym)
        .max_by(|&a, &b| {
            let qa = (0..nf)
                .map(|f| wtab[a * nf + f].abs() / colmax[f])
                .fold(f64::INFINITY, f64::min);
            let qb = (0..nf)
                .map(|f| wtab[b * nf + f].abs() / colmax[f])
                .fold(f64::INFINITY, f64::min);
            qa.partial_cmp(&qb).unwrap()
        })
        .unwrap();

    let primes = primes_up_to(bound);
    let mut aps = vec![Vec::with_capacity(primes.len()); nf];
    let mut acc = vec![0i128; nsym];
    for &p in &primes {
        acc.iter_mut().for_each(|v| *v = 0);
        space.apply(s0, &space.heilbronn(p), &mut acc);
        for f in 0..nf {
            let mut num = 0.0;
            for (s, &a) in acc.iter().enumerate() {
                if a != 0 {
                    num += a as f64 * wtab[s * nf + f];
                }
            }
            aps[f].push((p, num / wtab[s0 * nf + f]));
        }
    }

    let mut forms: Vec<Newform> = aps
        .into_iter()
        .map(|ap| Newform {
            level,
            weight,
            index: 0,
            ap,
        })
        .collect();
    for f in &forms {
        for &(p, a) in &f.ap {
            let bound = 2.0 * (p as f64).powf((weight as f64 - 1.0) / 2.0);
            if a.abs() > bound * (1.0 + 1e-6) + 1e-6 {
                return Err(ModSymError::Numerical("Ramanujan bound violated"));
            }
        }
    }
    forms.sort_by(|a, b| {
        let ka = (a.ap(2), a.ap(3));
        let kb = (b.ap(2), b.ap(3));
        ka.partial_cmp(&kb).unwrap()
    });
    for (i, f) in forms.iter_mut().enumerate() {
        f.index = i;
    }
    Ok(forms)
}

/// Dimension of `S_k(Gamma0(N))` for `N` prime or 1 (classical formula).
pub fn cusp_dim(level: u64, weight: u32) -> usize {
    let k = weight as i64;
    if k < 2 || k % 2 != 0 {
        return 0;
    }
    if level == 1 {
        if k == 2 {
            return 0;
        }
        let base = k / 12 + if k % 12 == 2 { -1 } else { 0 };
        return base.max(0) as usize;
    }
    let p = level as i64;
    // index mu = p + 1, cusps 2, nu2 = 1 + (-1/p), nu3 = 1 + (-3/p)
    let mu = p + 1;
    let nu2 = if p == 2 {
        1
    } else if p % 4 == 1 {
        2
    } else {
        0
    };
    let nu3 = if p == 3 {
        1
    } else if p % 3 == 1 {
        2
    } else {
        0
    };
    let cusps = 2;
    let kk = k as f64;
    let d = (kk - 1.0) * mu as f64 / 12.0
        + ((k / 4) as f64 - (kk - 1.0) / 4.0) * nu2 as f64
        + ((k / 3) as f64 - (kk - 1.0) / 3.0) * nu3 as f64
        - cusps as f64 / 2.0;
    let d = d.round() as i64 + if k == 2 { 1 } else { 0 };
    d.max(0) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-6 * b.abs().max(1.0)
    }

    #[test]
    fn discriminant_form() {
        let f = newforms(1, 12, 13).unwrap();
        assert_eq!(f.len(), 1);
        let f = &f[0];
        for (p, t) in [(2, -24.0), (3, 252.0), (5, 4830.0), (7, -16744.0), (11, 534612.0), (13, -577738.0)] {
            assert!(close(f.ap(p).unwrap(), t), "tau({p}) = {:?}", f.ap(p));
        }
    }

    #[test]
    fn elliptic_curve_11a() {
        let f = newforms(11, 2, 13).unwrap();
        assert_eq!(f.len(), 1);
        let ex = [(2, -2.0), (3, -1.0), (5, 1.0), (7, -2.0), (11, 1.0), (13, 4.0)];
        for (p, a) in ex {
            assert!(close(f[0].ap(p).unwrap(), a), "a_{p} = {:?}", f[0].ap(p));
        }
    }

    #[test]
    fn weight_four_small_levels() {
        let f = newforms(5, 4, 7).unwrap();
        assert_eq!(f.len(), 1);
        assert!(close(f[0].ap(2).unwrap(), -4.0));
        assert!(close(f[0].ap(3).unwrap(), 2.0));
        assert!(close(f[0].ap(5).unwrap(), -5.0));
        assert!(close(f[0].ap(7).unwrap(), 6.0));
        let f = newforms(7, 4, 7).unwrap();
        assert_eq!(f.len(), 1);
        assert!(close(f[0].ap(2).unwrap(), -1.0));
        assert!(close(f[0].ap(3).unwrap(), -2.0));
        assert!(close(f[0].ap(5).unwrap(), 16.0));
        assert!(close(f[0].ap(7).unwrap(), -7.0));
    }

    #[test]
    fn counts_match_dimension_formula() {
        for (n, k) in [(11, 12), (13, 4), (23, 4), (101, 4), (37, 2)] {
            let forms = newforms(n, k, 5).unwrap();
            let old = 2 * cusp_dim(1, k);
            assert_eq!(forms.len() + old, cusp_dim(n, k), "level {n} weight {k}");
        }
    }

    #[test]
    fn atkin_lehner_eigenvalue_size() {
        for f in newforms(101, 4, 101).unwrap() {
            assert!(close(f.ap(101).unwrap().abs(), 101.0));
        }
    }
}
