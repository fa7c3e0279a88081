//! Resolving form labels and building harmonic bases.

use std::path::{Path, PathBuf};

use hmf_core::data_io::{load_file, Cache, EigenformRecord};
use hmf_core::petersson::{
    oldform_lift, rational_cutoff, rational_samples, solve_harmonic_weights, BasisForm, WeightSolve,
};
use hmf_core::rankin_selberg::{Eigenform, Normalization};
use hmf_core::{HmfError, Ideal, Result, TotallyRealField};

/// Where a label is looked up, in order:
///
/// * an existing `.hmf` file path,
/// * `delta` or `e4delta` (generated from their q-expansions),
/// * `N.k.i`, the `i`-th newform of prime level `N` and weight `k` computed
///   from modular symbols,
/// * the coefficient cache.
pub struct FormSource {
    pub cache_dir: Option<PathBuf>,
}

impl FormSource {
    pub fn record(&self, label: &str, up_to: u64) -> Result<EigenformRecord> {
        let path = Path::new(label);
        if label.ends_with(".hmf") && path.exists() {
            return load_file(path);
        }
        match label {
            "delta" => return EigenformRecord::delta(up_to),
            "e4delta" => return EigenformRecord::e4_delta(up_to),
            _ => {}
        }
        if let Some((n, k, i)) = parse_newform_label(label) {
            let nf = newform(n, k, i, up_to)?;
            let ap: Vec<_> = nf.ap.iter().map(|&(p, a)| (p, hmf_core::data_io::Eigenvalue::from_f64(a))).collect();
            return EigenformRecord::rational(label, k, n, Normalization::Arithmetic, &ap);
        }
        if let Some(dir) = &self.cache_dir {
            if let Some(r) = Cache::open(dir)?.get(label)? {
                return Ok(r);
            }
        }
        Err(HmfError::NotFound(label.to_string()))
    }

    /// The unitary form with coefficients up to `up_to`.
    pub fn form(&self, label: &str, up_to: u64) -> Result<Eigenform> {
        self.record(label, up_to)?.to_eigenform(up_to)?.to_unitary()
    }
}

fn parse_newform_label(label: &str) -> Option<(u64, u32, usize)> {
    let mut it = label.split('.');
    let n = it.next()?.parse().ok()?;
    let k = it.next()?.parse().ok()?;
    let i = it.next()?.parse().ok()?;
    it.next().is_none().then_some((n, k, i))
}

fn newform(n: u64, k: u32, i: usize, up_to: u64) -> Result<hmf_modsym::Newform> {
    let mut forms = newforms(n, k, up_to)?;
    if i >= forms.len() {
        return Err(HmfError::NotFound(format!("{n}.{k}.{i}: only {} newforms", forms.len())));
    }
    Ok(forms.swap_remove(i))
}

fn newforms(n: u64, k: u32, up_to: u64) -> Result<Vec<hmf_modsym::Newform>> {
    hmf_modsym::newforms(n, k, up_to).map_err(|e| HmfError::Argument(format!("modular symbols: {e}")))
}

fn unitary(label: &str, nf: &hmf_modsym::Newform, up_to: u64) -> Result<Eigenform> {
    let mut f = Eigenform::rational(label, nf.weight, nf.level, Normalization::Arithmetic, &nf.ap)?;
    f.extend_coefficients(up_to)?;
    f.to_unitary()
}

/// Newforms of prime level `q` and weight `k`, plus each level-one form and
/// its `q`-oldform companion, with harmonic weights solved from the classical
/// trace formula. Coefficients are tabulated to `up_to`.
pub fn full_basis(q: u64, k: u32, up_to: u64) -> Result<WeightSolve> {
    let mut forms = Vec::new();
    for nf in newforms(q, k, up_to)? {
        forms.push(BasisForm::Primitive(unitary(&format!("{q}.{k}.{}", nf.index), &nf, up_to)?));
    }
    if q > 1 {
        let qq = Ideal::from_int(&TotallyRealField::rationals(), q as i128)?;
        for nf in newforms(1, k, up_to)? {
            let f = unitary(&format!("1.{k}.{}", nf.index), &nf, up_to)?;
            let lift = oldform_lift(&f, &qq)?;
            forms.push(BasisForm::Primitive(f));
            forms.push(BasisForm::Old(lift));
        }
    }
    if forms.is_empty() {
        return Err(HmfError::Rank(format!("no cusp forms of level {q} and weight {k}")));
    }
    let n_fit = 2 * forms.len() as u64 + 20;
    let n_all = n_fit + 20;
    let t = rational_cutoff(q, k, n_all, 1e-11);
    let samples = rational_samples(q, k, n_all, t)?;
    let (fit, hold) = samples.split_at(n_fit as usize);
    solve_harmonic_weights(forms, fit, hold)
}
