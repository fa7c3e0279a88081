//! Heilbronn matrices realising `T_p` on Manin symbols.
//!
//! Cremona's continued-fraction family is used for `p` prime to the level and
//! Merel's family (all `[[a,b],[c,d]]`, `a > b >= 0`, `d > c >= 0`, `ad - bc = p`)
//! when `p` divides it.

pub type Mat2 = [i64; 4];

pub fn cremona(p: i64) -> Vec<Mat2> {
    let mut out = vec![[1, 0, 0, p]];
    if p == 2 {
        out.extend([[2, 0, 0, 1], [2, 1, 0, 1], [1, 0, 1, 2]]);
        return out;
    }
    let half = p / 2;
    for r in -half..=half {
        let (mut x1, mut x2, mut y1, mut y2) = (p, -r, 0i64, 1i64);
        let (mut a, mut b) = (-p, r);
        out.push([x1, x2, y1, y2]);
        while b != 0 {
            let q = (a as f64 / b as f64).round() as i64;
            let c = a - b * q;
            a = -b;
            b = c;
            let x3 = q * x2 - x1;
            x1 = x2;
            x2 = x3;
            let y3 = q * y2 - y1;
            y1 = y2;
            y2 = y3;
            out.push([x1, x2, y1, y2]);
        }
    }
    out
}

pub fn merel(n: i64) -> Vec<Mat2> {
    let mut out = Vec::new();
    for a in 1..=n {
        let q = n / a;
        if q * a == n {
            let d = q;
            for b in 0..a {
                out.push([a, b, 0, d]);
            }
            for c in 1..d {
                out.push([a, 0, c, d]);
            }
        }
        for d in (q + 1)..=n {
            let bc = a * d - n;
            for c in (bc / a + 1)..d {
                if bc % c == 0 {
                    out.push([a, bc / c, c, d]);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn determinants_equal_p() {
        for p in [2, 3, 5, 7, 11, 101] {
            for m in cremona(p) {
                assert_eq!(m[0] * m[3] - m[1] * m[2], p, "cremona {p}: {m:?}");
            }
            for m in merel(p) {
                assert_eq!(m[0] * m[3] - m[1] * m[2], p);
                assert!(m[0] > m[1] && m[1] >= 0 && m[3] > m[2] && m[2] >= 0);
            }
        }
    }

    #[test]
    fn merel_brute_force_count() {
        let n = 7;
        let mut count = 0;
        for a in 0..=n {
            for b in 0..a {
                for c in 0..=n {
                    for d in (c + 1)..=n {
                        if a * d - b * c == n {
                            count += 1;
                        }
                    }
                }
            }
        }
        assert_eq!(merel(n).len(), count);
    }
}
