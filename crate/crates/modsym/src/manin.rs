//! Manin symbols `[X^i Y^{k-2-i}, (c:d)]` and the plus quotient of the space
//! they span modulo the two- and three-term relations.

use nalgebra::DMatrix;

use crate::heilbronn::Mat2;
use crate::p1::P1List;
use crate::{ModSymError, Result};

const S: Mat2 = [0, -1, 1, 0];
const I: Mat2 = [-1, 0, 0, 1];
const T: Mat2 = [0, -1, 1, -1];
const T2: Mat2 = [-1, 1, -1, 0];

pub struct ManinSymbols {
    pub weight: u32,
    pub p1: P1List,
}

/// Coefficients of `(aX + bY)^i (cX + dY)^(j-i)`, indexed by the power of `X`.
pub fn act_monomial(i: usize, j: usize, m: &Mat2) -> Vec<i128> {
    let (a, b, c, d) = (m[0] as i128, m[1] as i128, m[2] as i128, m[3] as i128);
    let mut poly = vec![0i128; j + 1];
    poly[0] = 1;
    let mut deg = 0;
    let mul = |poly: &mut Vec<i128>, x: i128, y: i128, deg: &mut usize| {
        for t in (0..=*deg + 1).rev() {
            let from_x = if t > 0 { poly[t - 1] * x } else { 0 };
            let from_y = if t <= *deg { poly[t] * y } else { 0 };
            poly[t] = from_x + from_y;
        }
        *deg += 1;
    };
    for _ in 0..i {
        mul(&mut poly, a, b, &mut deg);
    }
    for _ in i..j {
        mul(&mut poly, c, d, &mut deg);
    }
    poly
}

impl ManinSymbols {
    pub fn new(level: u64, weight: u32) -> Result<Self> {
        if weight < 2 || weight % 2 != 0 {
            return Err(ModSymError::UnsupportedWeight(weight));
        }
        Ok(Self {
            weight,
            p1: P1List::new(level)?,
        })
    }

    pub fn degree(&self) -> usize {
        self.weight as usize - 2
    }

    pub fn len(&self) -> usize {
        (self.degree() + 1) * self.p1.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, i: usize, p1_idx: usize) -> usize {
        i * self.p1.len() + p1_idx
    }

    pub fn split(&self, s: usize) -> (usize, usize) {
        (s / self.p1.len(), s % self.p1.len())
    }

    /// `[P, (c:d)] * g` written as `(symbol, coefficient)` pairs; empty when
    /// the image point is not on the projective line.
    pub fn act(&self, s: usize, g: &Mat2) -> Vec<(usize, i128)> {
        let (i, pi) = self.split(s);
        let (c, d) = self.p1.point(pi);
        let Some(target) = self
            .p1
            .index(c * g[0] + d * g[2], c * g[1] + d * g[3])
        else {
            return Vec::new();
        };
        act_monomial(i, self.degree(), g)
            .into_iter()
            .enumerate()
            .filter(|(_, v)| *v != 0)
            .map(|(m, v)| (self.index(m, target), v))
            .collect()
    }

    fn act_single(&self, s: usize, g: &Mat2) -> (usize, i64) {
        let img = self.act(s, g);
        assert_eq!(img.len(), 1);
        (img[0].0, img[0].1 as i64)
    }
}

/// Signed union-find: `x = sign * root`.
struct SignedUf {
    parent: Vec<usize>,
    sign: Vec<i64>,
    zero: Vec<bool>,
}

impl SignedUf {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            sign: vec![1; n],
            zero: vec![false; n],
        }
    }

    fn find(&mut self, x: usize) -> (usize, i64) {
        let p = self.parent[x];
        if p == x {
            return (x, 1);
        }
        let (r, s) = self.find(p);
        self.parent[x] = r;
        self.sign[x] *= s;
        (r, self.sign[x])
    }

    /// Impose `x = rel * y`.
    fn union(&mut self, x: usize, y: usize, rel: i64) {
        let (rx, sx) = self.find(x);
        let (ry, sy) = self.find(y);
        if rx == ry {
            if sx != rel * sy {
                self.zero[rx] = true;
            }
            return;
        }
        // rx = sx * x = sx * rel * sy * ry
        self.parent[rx] = ry;
        self.sign[rx] = sx * rel * sy;
        if self.zero[rx] {
            self.zero[ry] = true;
        }
    }
}

/// The plus quotient: symbols map to `sign * basis_row(gen)` where the rows of
/// `basis` are the images of the free generators.
pub struct Quotient {
    pub symbols: ManinSymbols,
    /// For each symbol, `(generator, sign)` or `None` if it is zero.
    pub sym_to_gen: Vec<Option<(usize, f64)>>,
    /// One representative symbol per free generator.
    pub gen_rep: Vec<usize>,
    /// `gens x dim` matrix whose columns span the quotient (orthonormal).
    pub basis: DMatrix<f64>,
}

impl Quotient {
    pub fn new(symbols: ManinSymbols) -> Result<Self> {
        let n = symbols.len();
        let mut uf = SignedUf::new(n);
        for s in 0..n {
            let (t, sign) = symbols.act_single(s, &S);
            uf.union(s, t, -sign);
            let (t, sign) = symbols.act_single(s, &I);
            uf.union(s, t, sign);
        }
        let mut gen_of_root = vec![usize::MAX; n];
        let mut gen_rep = Vec::new();
        let mut sym_to_gen = vec![None; n];
        for s in 0..n {
            let (r, sign) = uf.find(s);
            if uf.zero[r] {
                continue;
            }
            if gen_of_root[r] == usize::MAX {
                gen_of_root[r] = gen_rep.len();
                gen_rep.push(r);
            }
            sym_to_gen[s] = Some((gen_of_root[r], sign as f64));
        }
        let g = gen_rep.len();
        if g == 0 {
            return Ok(Self {
                symbols,
                sym_to_gen,
                gen_rep,
                basis: DMatrix::zeros(0, 0),
            });
        }
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for s in 0..n {
            let mut row = vec![0.0; g];
            let mut any = false;
            for img in [vec![(s, 1i128)], symbols.act(s, &T), symbols.act(s, &T2)] {
                for (t, c) in img {
                    if let Some((gi, sign)) = sym_to_gen[t] {
                        row[gi] += sign * c as f64;
                        any = true;
                    }
                }
            }
            if any && row.iter().any(|v| *v != 0.0) {
                rows.push(row);
            }
        }
        let basis = if rows.is_empty() {
            DMatrix::identity(g, g)
        } else {
            let m = DMatrix::from_fn(rows.len().max(g), g, |r, c| {
                rows.get(r).map_or(0.0, |row| row[c])
            });
            let svd = m.svd(false, true);
            let vt = svd.v_t.ok_or(ModSymError::Numerical("svd failed"))?;
            let smax = svd.singular_values.max();
            let tol = 1e-9 * smax.max(1.0);
            let null: Vec<usize> = (0..g)
                .filter(|&i| svd.singular_values[i] <= tol)
                .collect();
            DMatrix::from_fn(g, null.len(), |r, c| vt[(null[c], r)])
        };
        Ok(Self {
            symbols,
            sym_to_gen,
            gen_rep,
            basis,
        })
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Image in quotient coordinates of a sparse combination of symbols.
    pub fn project(&self, v: &[(usize, f64)]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for &(s, c) in v {
            if let Some((g, sign)) = self.sym_to_gen[s] {
                for j in 0..self.dim() {
                    out[j] += c * sign * self.basis[(g, j)];
                }
            }
        }
        out
    }
}
