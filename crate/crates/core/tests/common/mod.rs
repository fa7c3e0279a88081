#![allow(dead_code)]

use hmf_core::data_io::delta_expansion;
use hmf_core::petersson::{rational_cutoff, rational_samples, solve_harmonic_weights, BasisForm, WeightSolve};
use hmf_core::rankin_selberg::{Eigenform, Normalization};
use hmf_core::util::primes_up_to;

/// Unitary Delta with coefficients up to `n`.
pub fn delta(n: u64) -> Eigenform {
    let tau = delta_expansion(n as usize);
    let ap: Vec<(u64, f64)> = primes_up_to(n).into_iter().map(|p| (p, tau[p as usize] as f64)).collect();
    let mut f = Eigenform::rational("delta", 12, 1, Normalization::Arithmetic, &ap).unwrap();
    f.extend_coefficients(n).unwrap();
    f.to_unitary().unwrap()
}

/// Newforms of level `q`, weight `k` with coefficients up to `n`, and their
/// solved harmonic weights.
pub fn level_basis(q: u64, k: u32, n: u64) -> WeightSolve {
    let mut forms = Vec::new();
    for nf in hmf_modsym::newforms(q, k, n).unwrap() {
        let label = format!("{q}.{k}.{}", nf.index);
        let mut f = Eigenform::rational(&label, k, q, Normalization::Arithmetic, &nf.ap).unwrap();
        f.extend_coefficients(n).unwrap();
        forms.push(BasisForm::Primitive(f.to_unitary().unwrap()));
    }
    let n_fit = 2 * forms.len() as u64 + 20;
    let n_all = n_fit + 20;
    let t = rational_cutoff(q, k, n_all, 1e-11);
    let samples = rational_samples(q, k, n_all, t).unwrap();
    let (fit, hold) = samples.split_at(n_fit as usize);
    solve_harmonic_weights(forms, fit, hold).unwrap()
}

/// A bundled fixture record (`delta` or `e4delta`) as a unitary form with
/// coefficients up to `n`.
pub fn fixture_form(name: &str, n: u64) -> Eigenform {
    let path = hmf_core::data_io::fixtures_dir().join(format!("{name}.hmf"));
    let rec = hmf_core::data_io::load_file(&path).unwrap();
    rec.to_eigenform(n).unwrap().to_unitary().unwrap()
}
