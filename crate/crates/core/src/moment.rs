//! The harmonic twisted first moment over `Q`, its decomposition
//! `M + E - E_old`, the slope fit against `log q` and the distinguisher
//! built on it.
//!
//! All three pieces share one table `W(n) = C_g(n) n^{-1/2} sum_d a_d d^{-1}
//! V(y n d^2)`, so that `L(f x g, 1/2) = 2 sum_n C_f(n) W(n)`. The moment
//! itself goes through the Rankin-Selberg coefficients instead, which keeps
//! the decomposition residual an honest check.

use std::f64::consts::PI;

use crate::analysis::{zeta_data, CutoffFunction, MainTermSetup, TestFunction, VKernel};
use crate::field::TotallyRealField;
use crate::ideal::{count_ideals_by_norm, Ideal};
use crate::petersson::{rational_off_diagonal_rows, rational_tail_factor, BasisForm, HarmonicBasis};
use crate::rankin_selberg::{Eigenform, Normalization, RsPair};
use crate::util::{divisor_count, is_prime, KahanSum};
use crate::{HmfError, Result};

#[derive(Clone, Debug)]
pub struct MomentOptions {
    pub test_function: TestFunction,
    /// `V` is cut where it drops below this.
    pub v_eps: f64,
    /// Absolute target for the Kloosterman tail budget.
    pub c_tail_target: f64,
    /// Largest modulus `c = q t` summed.
    pub c_cap: u64,
}

impl Default for MomentOptions {
    fn default() -> Self {
        Self { test_function: TestFunction::Constant, v_eps: 1e-13, c_tail_target: 1e-8, c_cap: 1 << 18 }
    }
}

/// Per-`(g, p, q, k)` tables.
#[derive(Clone, Debug)]
pub struct MomentContext<'a> {
    pub g: &'a Eigenform,
    pub p: u64,
    pub q: u64,
    pub k: u32,
    pub opts: MomentOptions,
    /// Truncation of the `m`-sum.
    pub m_max: u64,
    y: f64,
    kernel: VKernel,
    v: Vec<f64>,
    w: Vec<f64>,
    w_err: Vec<f64>,
    a_d: Vec<f64>,
}

impl<'a> MomentContext<'a> {
    pub fn new(g: &'a Eigenform, p: u64, q: u64, k: u32, opts: MomentOptions) -> Result<Self> {
        let field = g.field();
        if !field.is_rational() {
            return Err(HmfError::Argument("the full moment is implemented over Q only".into()));
        }
        if g.normalization() != Normalization::Unitary {
            return Err(HmfError::Normalization(format!("{} must be unitary", g.label)));
        }
        if !is_prime(q) {
            return Err(HmfError::Argument(format!("level {q} is not prime")));
        }
        let n = g.level_norm();
        if n % q == 0 || p % q == 0 || p == 0 {
            return Err(HmfError::Argument(format!("q = {q} must be coprime to N(n) = {n} and p = {p}")));
        }
        let cfg = CutoffFunction::new(vec![k], g.weight().to_vec(), opts.test_function)?;
        let kernel = VKernel::new(&cfg, 0.5)?;
        let y = 4.0 * PI * PI / (n * q) as f64;
        let y_star = kernel.decay_point(opts.v_eps)?;
        let m_max = (2.0 * y_star / y).ceil() as u64;
        if g.table_norm() < m_max.max(p) {
            return Err(HmfError::TableShortfall { needed: m_max.max(p), available: g.table_norm() });
        }
        let nq = Ideal::from_int(field, (n * q) as i128)?;
        let mut a_d = vec![0.0];
        let mut d = 1u64;
        while d * d <= m_max {
            a_d.push(count_ideals_by_norm(field, d, &nq)? as f64);
            d += 1;
        }
        let mut v = vec![0.0; m_max as usize + 1];
        let mut v_err = vec![0.0; m_max as usize + 1];
        for m in 1..=m_max as usize {
            v[m] = kernel.eval(y * m as f64)?;
            v_err[m] = kernel.error_budget(y * m as f64);
        }
        let mut w = vec![0.0; m_max as usize + 1];
        let mut w_err = vec![0.0; m_max as usize + 1];
        for nn in 1..=m_max {
            let cg = g.coefficient_n(nn)?;
            let mut s = 0.0;
            let mut e = 0.0;
            let mut d = 1u64;
            while nn * d * d <= m_max {
                let m = (nn * d * d) as usize;
                s += a_d[d as usize] / d as f64 * v[m];
                e += a_d[d as usize] / d as f64 * v_err[m];
                d += 1;
            }
            w[nn as usize] = cg / (nn as f64).sqrt() * s;
            w_err[nn as usize] = cg.abs() / (nn as f64).sqrt() * e;
        }
        Ok(Self { g, p, q, k, opts, m_max, y, kernel, v, w, w_err, a_d })
    }

    pub fn field(&self) -> &TotallyRealField {
        self.g.field()
    }

    /// `W(n)` for `n = 0..=m_max` (`W(0) = 0`).
    pub fn smoothed_weights(&self) -> &[f64] {
        &self.w
    }

    /// `2 sum_n C_f(n) W(n)`, the central value through the shared table.
    pub fn smoothed_pairing(&self, f: &BasisForm) -> Result<f64> {
        let mut s = KahanSum::default();
        for nn in 1..=self.m_max {
            let wn = self.w[nn as usize];
            if wn != 0.0 {
                s.add(f.coefficient_n(nn)? * wn);
            }
        }
        Ok(2.0 * s.value())
    }

    /// `L(f x g, 1/2)` at `X = 1` from the Rankin-Selberg coefficients.
    pub fn central_value(&self, f: &Eigenform) -> Result<f64> {
        let pair = RsPair::new(f, self.g)?;
        let b = pair.rs_coefficients(self.m_max)?;
        let mut s = KahanSum::default();
        for (m, bm) in b.iter().enumerate().skip(1) {
            if *bm != 0.0 {
                s.add(bm / (m as f64).sqrt() * self.v[m]);
            }
        }
        Ok(2.0 * s.value())
    }

    /// `sum_{f in Pi_k(q)} L(f x g, 1/2) C_f(p) omega_f`: the basis entries
    /// that are newforms of level `q`.
    pub fn twisted_first_moment(&self, basis: &HarmonicBasis) -> Result<f64> {
        let mut s = KahanSum::default();
        for (f, w) in basis.forms.iter().zip(&basis.weights) {
            if let BasisForm::Primitive(e) = f {
                if e.level_norm() == self.q {
                    s.add(w * e.coefficient_n(self.p)? * self.central_value(e)?);
                }
            }
        }
        Ok(s.value())
    }

    /// `2 C_g(p) / sqrt(p) sum_d a_d / d V(y p d^2)`.
    pub fn main_term_direct(&self) -> Result<f64> {
        let mut s = KahanSum::default();
        let mut d = 1u64;
        while self.p * d * d <= self.m_max {
            s.add(self.a_d[d as usize] / d as f64 * self.kernel.eval(self.y * (self.p * d * d) as f64)?);
            d += 1;
        }
        Ok(2.0 * self.g.coefficient_n(self.p)? / (self.p as f64).sqrt() * s.value())
    }

    /// Residue form of the main term, `2 C_g(p) / sqrt(p)` times the residue
    /// at `u = 0`.
    pub fn main_term_residue(&self) -> Result<f64> {
        let field = self.field().clone();
        let setup = MainTermSetup {
            zeta: zeta_data(&field, 1)?,
            field,
            n_primes: crate::util::factor(self.g.level_norm() as u128).into_iter().map(|(p, _)| p as u64).collect(),
            n_norm: self.g.level_norm(),
            p_norm: self.p,
            k: vec![self.k],
            l: self.g.weight().to_vec(),
        };
        let r = setup.residue(self.q)?;
        Ok(2.0 * self.g.coefficient_n(self.p)? / (self.p as f64).sqrt() * r.total)
    }

    /// Kloosterman tail budget of [`Self::error_term_geometric`] at `t_max`.
    pub fn c_tail_budget(&self, t_max: u64) -> f64 {
        let factor = rational_tail_factor(self.q, self.k, t_max);
        let half_u = (self.k - 1) as f64 / 2.0;
        let mut s = 0.0;
        for nn in 1..=self.m_max {
            let wn = self.w[nn as usize].abs();
            if wn != 0.0 {
                let g = num_integer::gcd(nn, self.p) as f64;
                s += wn * g.sqrt() * ((nn * self.p) as f64).powf(half_u);
            }
        }
        2.0 * factor * s
    }

    /// Smallest power-of-two `t_max` meeting the tail target, capped by
    /// `c_cap`.
    pub fn choose_t_max(&self) -> u64 {
        let cap = (self.opts.c_cap / self.q).max(1);
        let mut t = 4;
        while t < cap && self.c_tail_budget(t) > self.opts.c_tail_target {
            t *= 2;
        }
        t.min(cap)
    }

    /// `E = 2 sum_n W(n) Off(n, p)` with the `c = q t` sum cut at `t_max`,
    /// and its Kloosterman tail budget. `t_max = 0` gives `E = 0`.
    pub fn error_term_geometric(&self, t_max: u64) -> Result<(f64, f64)> {
        if t_max == 0 {
            return Ok((0.0, 0.0));
        }
        let (off, _) = rational_off_diagonal_rows(self.q, self.k, self.p, self.m_max, t_max)?;
        let mut s = KahanSum::default();
        for nn in 1..=self.m_max as usize {
            s.add(self.w[nn] * off[nn]);
        }
        let budget = self.c_tail_budget(t_max);
        if !budget.is_finite() {
            return Err(HmfError::Tail(format!("no tail bound at weight {}", self.k)));
        }
        Ok((2.0 * s.value(), budget))
    }

    /// `sum_{f old} omega_f C_f(p) 2 sum_n C_f(n) W(n)`: the basis entries of
    /// level one (the forms themselves and their companions `f_q`). Exactly
    /// zero when there are none.
    pub fn oldform_term(&self, basis: &HarmonicBasis) -> Result<f64> {
        let mut s = KahanSum::default();
        for (f, w) in basis.forms.iter().zip(&basis.weights) {
            let old = match f {
                BasisForm::Old(_) => true,
                BasisForm::Primitive(e) => e.level_norm() == 1,
            };
            if old {
                s.add(w * f.coefficient_n(self.p)? * self.smoothed_pairing(f)?);
            }
        }
        Ok(s.value())
    }

    /// Bounds on `sum_f omega_f |C_f(n) C_f(p)|` by Deligne, per `n`.
    fn spectral_envelope(&self, basis: &HarmonicBasis, nn: u64) -> f64 {
        let wsum: f64 = basis.weights.iter().map(|w| w.abs()).sum();
        wsum * divisor_count(nn) as f64 * divisor_count(self.p) as f64
    }

    /// Budgets for the truncation of `m`, the quadrature of `V` and a
    /// per-entry solver residual `r` (scaled by `tau(n) tau(p)`).
    pub fn afe_and_solver_budgets(&self, basis: &HarmonicBasis, solver_residual: f64) -> (f64, f64) {
        let mut afe = 0.0;
        let mut solver = 0.0;
        for nn in 1..=self.m_max {
            let i = nn as usize;
            let env = self.spectral_envelope(basis, nn);
            afe += 2.0 * self.w_err[i] * env;
            if 2 * nn > self.m_max {
                afe += 2.0 * self.w[i].abs() * env;
            }
            solver += 2.0 * self.w[i].abs() * solver_residual * (divisor_count(nn) * divisor_count(self.p)) as f64;
        }
        (afe, solver)
    }

    /// Everything at once.
    pub fn report(&self, basis: &HarmonicBasis, solver_residual: f64) -> Result<MomentReport> {
        let lhs = self.twisted_first_moment(basis)?;
        let main_term = self.main_term_direct()?;
        let main_term_asym = self.main_term_residue()?;
        let t_max = self.choose_t_max();
        let (error_term, c_tail) = self.error_term_geometric(t_max)?;
        let old_term = self.oldform_term(basis)?;
        let (afe, solver) = self.afe_and_solver_budgets(basis, solver_residual);
        let n_forms = basis
            .forms
            .iter()
            .filter(|f| matches!(f, BasisForm::Primitive(e) if e.level_norm() == self.q))
            .count();
        Ok(MomentReport {
            g: self.g.label.clone(),
            p: self.p,
            q: self.q,
            k: self.k,
            n_forms,
            lhs,
            main_term,
            main_term_asym,
            error_term,
            old_term,
            residual: lhs - (main_term + error_term - old_term),
            budget_afe: afe,
            budget_c_tail: c_tail,
            budget_solver: solver,
            budget_total: afe + c_tail + solver,
            m_max: self.m_max,
            t_max,
            c_g_p: self.g.coefficient_n(self.p)?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MomentReport {
    pub g: String,
    pub p: u64,
    pub q: u64,
    pub k: u32,
    pub n_forms: usize,
    pub lhs: f64,
    pub main_term: f64,
    pub main_term_asym: f64,
    pub error_term: f64,
    pub old_term: f64,
    pub residual: f64,
    pub budget_afe: f64,
    pub budget_c_tail: f64,
    pub budget_solver: f64,
    pub budget_total: f64,
    pub m_max: u64,
    pub t_max: u64,
    /// `C_g(p)`, kept so that fits can normalize without the form.
    pub c_g_p: f64,
}

impl MomentReport {
    pub fn within_budget(&self) -> bool {
        self.residual.abs() <= self.budget_total
    }

    /// `LHS sqrt(N p) / C_g(p)`.
    pub fn normalized_lhs(&self) -> f64 {
        self.lhs * (self.p as f64).sqrt() / self.c_g_p
    }
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
}

/// Ordinary least squares `y = a x + b`.
pub fn least_squares_line(points: &[(f64, f64)]) -> Result<LineFit> {
    let n = points.len() as f64;
    if points.len() < 3 {
        return Err(HmfError::Rank(format!("{} points", points.len())));
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx <= 1e-300 {
        return Err(HmfError::Rank("all abscissae coincide".into()));
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    Ok(LineFit { slope, intercept, stderr: (ssr / (n - 2.0) / sxx).sqrt() })
}

/// Fit of `LHS sqrt(N p) / C_g(p)` against `log N(q)`.
pub fn slope_fit(reports: &[MomentReport]) -> Result<LineFit> {
    let mut qs: Vec<u64> = reports.iter().map(|r| r.q).collect();
    qs.sort_unstable();
    qs.dedup();
    if reports.len() < 5 || qs.len() < 5 {
        return Err(HmfError::Rank(format!("need 5 distinct levels, got {}", qs.len())));
    }
    let pts: Vec<(f64, f64)> = reports.iter().map(|r| ((r.q as f64).ln(), r.normalized_lhs())).collect();
    least_squares_line(&pts)
}

/// Slope of `log |E|` against `log N(q)`.
pub fn error_decay_slope(reports: &[MomentReport]) -> Result<LineFit> {
    let pts: Vec<(f64, f64)> = reports.iter().map(|r| ((r.q as f64).ln(), r.error_term.abs().ln())).collect();
    least_squares_line(&pts)
}

/// `gamma_{-1}(F) A_n`, the predicted slope.
pub fn target_slope(gamma_m1: f64, level_primes: &[u64]) -> f64 {
    gamma_m1 * level_primes.iter().map(|&l| 1.0 - 1.0 / l as f64).product::<f64>()
}

/// Estimates of `C_g(p)`: `sqrt(N p) LHS_p / LHS_1` at each shared level,
/// then averaged.
pub fn estimate_coefficient(at_p: &[MomentReport], at_one: &[MomentReport]) -> Result<(f64, f64)> {
    let mut est = Vec::new();
    for r in at_p {
        if let Some(r1) = at_one.iter().find(|r1| r1.q == r.q && r1.k == r.k && r1.p == 1) {
            est.push((r.p as f64).sqrt() * r.lhs / r1.lhs);
        }
    }
    if est.is_empty() {
        return Err(HmfError::NotFound("no shared levels between the two tables".into()));
    }
    let n = est.len() as f64;
    let mean = est.iter().sum::<f64>() / n;
    let spread = if est.len() > 1 { (est.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() } else { 0.0 };
    Ok((mean, spread))
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub enum Verdict {
    Indistinguishable { tolerance: f64, difference: f64 },
    Distinguished { p: u64, c_g: f64, c_h: f64 },
}

/// Compares the coefficient estimates of two forms at `p`.
pub fn distinguish_forms(
    g_at_p: &[MomentReport],
    g_at_one: &[MomentReport],
    h_at_p: &[MomentReport],
    h_at_one: &[MomentReport],
    tolerance: f64,
) -> Result<Verdict> {
    let (cg, _) = estimate_coefficient(g_at_p, g_at_one)?;
    let (ch, _) = estimate_coefficient(h_at_p, h_at_one)?;
    let p = g_at_p.first().map(|r| r.p).unwrap_or(1);
    if (cg - ch).abs() > tolerance {
        Ok(Verdict::Distinguished { p, c_g: cg, c_h: ch })
    } else {
        Ok(Verdict::Indistinguishable { tolerance, difference: (cg - ch).abs() })
    }
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

    fn report(q: u64, lhs: f64) -> MomentReport {
        MomentReport {
            g: "g".into(),
            p: 1,
            q,
            k: 4,
            n_forms: 0,
            lhs,
            main_term: 0.0,
            main_term_asym: 0.0,
            error_term: 0.0,
            old_term: 0.0,
            residual: 0.0,
            budget_afe: 0.0,
            budget_c_tail: 0.0,
            budget_solver: 0.0,
            budget_total: 0.0,
            m_max: 0,
            t_max: 0,
            c_g_p: 1.0,
        }
    }

    #[test]
    fn synthetic_slope_recovery() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let qs = primes_up_to(499).into_iter().filter(|&q| q >= 101).step_by(8).collect::<Vec<_>>();
        let reports: Vec<MomentReport> = qs
            .iter()
            .map(|&q| {
                let noise: f64 = (0..12).map(|_| rng.gen::<f64>()).sum::<f64>() - 6.0;
                report(q, (q as f64).ln() + 0.05 * noise)
            })
            .collect();
        let fit = slope_fit(&reports).unwrap();
        assert!((fit.slope - 1.0).abs() < 0.1, "{fit:?}");
        assert!(slope_fit(&reports[..4]).is_err());
        let same: Vec<MomentReport> = (0..6).map(|_| report(101, 1.0)).collect();
        assert!(slope_fit(&same).is_err());
        assert_eq!(target_slope(1.0, &[]), 1.0);
    }

    #[test]
    fn distinguisher_on_synthetic_tables() {
        let qs = [101u64, 103, 107];
        let one: Vec<MomentReport> = qs.iter().map(|&q| report(q, 5.0)).collect();
        let mk = |c: f64| -> Vec<MomentReport> {
            qs.iter().map(|&q| MomentReport { p: 2, ..report(q, 5.0 * c / 2f64.sqrt()) }).collect()
        };
        let g2 = mk(-0.53);
        let h2 = mk(-0.53 + 0.01);
        let far = mk(0.59);
        assert!(matches!(distinguish_forms(&g2, &one, &g2, &one, 0.05).unwrap(), Verdict::Indistinguishable { .. }));
        assert!(matches!(distinguish_forms(&g2, &one, &h2, &one, 0.05).unwrap(), Verdict::Indistinguishable { .. }));
        assert!(matches!(distinguish_forms(&g2, &one, &far, &one, 0.05).unwrap(), Verdict::Distinguished { p: 2, .. }));
        let (c, _) = estimate_coefficient(&g2, &one).unwrap();
        assert!((c + 0.53).abs() < 1e-12);
    }

    #[test]
    fn main_term_pieces() {
        let d = delta(6000);
        let ctx1 = MomentContext::new(&d, 1, 101, 4, MomentOptions::default()).unwrap();
        let ctx2 = MomentContext::new(&d, 2, 101, 4, MomentOptions::default()).unwrap();
        let m1 = ctx1.main_term_direct().unwrap();
        let m2 = ctx2.main_term_direct().unwrap();
        let c2 = d.coefficient_n(2).unwrap();
        // independent d-sums with fresh V evaluations
        let cfg = CutoffFunction::new(vec![4], vec![12], TestFunction::Constant).unwrap();
        let dsum = |p: f64| -> f64 {
            (1..400u64)
                .filter(|d| d % 101 != 0)
                .map(|d| crate::analysis::cutoff_v(4.0 * PI * PI * p * (d * d) as f64 / 101.0, &cfg).unwrap() / d as f64)
                .sum()
        };
        assert!((m1 - 2.0 * dsum(1.0)).abs() < 1e-10, "{m1}");
        assert!((m2 - 2.0 * c2 / 2f64.sqrt() * dsum(2.0)).abs() < 1e-10, "{m2}");
        // the normalized main terms differ by about log 2, not by zero
        assert!((m1 - m2 * 2f64.sqrt() / c2 - 2f64.ln()).abs() < 0.05);
        assert!((m1 - 2.0 * ctx1.smoothed_weights()[1]).abs() < 1e-12);
        // the residue form differs by the shifted line integral only
        assert!((m1 - ctx1.main_term_residue().unwrap()).abs() < 0.1);
        let empty = HarmonicBasis::empty();
        assert_eq!(ctx1.twisted_first_moment(&empty).unwrap(), 0.0);
        assert_eq!(ctx1.oldform_term(&empty).unwrap(), 0.0);
        assert_eq!(ctx1.error_term_geometric(0).unwrap(), (0.0, 0.0));
        assert!(MomentContext::new(&d, 101, 101, 4, MomentOptions::default()).is_err());
        assert!(MomentContext::new(&d, 1, 100, 4, MomentOptions::default()).is_err());
        assert!(matches!(
            MomentContext::new(&delta(500), 1, 101, 4, MomentOptions::default()),
            Err(HmfError::TableShortfall { .. })
        ));
    }
}
