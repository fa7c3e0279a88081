use hmf_core::data_io::delta_expansion;
use hmf_core::petersson::{
    oldform_lift, rational_off_diagonal, rational_samples, solve_harmonic_weights, spectral_side_n, BasisForm,
    TraceSample,
};
use hmf_core::rankin_selberg::{Eigenform, Normalization};
use hmf_core::util::primes_up_to;
use hmf_core::{Ideal, TotallyRealField};

const N: u64 = 80;

fn delta() -> Eigenform {
    let tau = delta_expansion(N as usize);
    let ap: Vec<(u64, f64)> = primes_up_to(N).into_iter().map(|p| (p, tau[p as usize] as f64)).collect();
    let mut f = Eigenform::rational("delta", 12, 1, Normalization::Arithmetic, &ap).unwrap();
    f.extend_coefficients(N).unwrap();
    f.to_unitary().unwrap()
}

fn basis() -> Vec<BasisForm> {
    let mut forms = Vec::new();
    for nf in hmf_modsym::newforms(11, 12, N).unwrap() {
        let mut f = Eigenform::rational(&format!("11.12.{}", nf.index), 12, 11, Normalization::Arithmetic, &nf.ap)
            .unwrap();
        f.extend_coefficients(N).unwrap();
        forms.push(BasisForm::Primitive(f.to_unitary().unwrap()));
    }
    assert_eq!(forms.len(), 8);
    let d = delta();
    let q = Ideal::from_int(&TotallyRealField::rationals(), 11).unwrap();
    forms.push(BasisForm::Primitive(d.clone()));
    forms.push(BasisForm::Old(oldform_lift(&d, &q).unwrap()));
    forms
}

#[test]
fn level_eleven_weight_twelve_weights() {
    let samples = rational_samples(11, 12, 40, 200).unwrap();
    let (fit, hold) = samples.split_at(30);
    let sol = solve_harmonic_weights(basis(), fit, hold).unwrap();
    let w = &sol.basis.weights;
    // the modular-symbol eigenvalues are floats, which limits the fit
    assert!(sol.fit_residual < 1e-6, "fit {}", sol.fit_residual);
    assert!(sol.holdout_residual < 1e-4, "holdout {}", sol.holdout_residual);
    // the two level-one basis vectors carry the same weight
    assert!((w[8] - w[9]).abs() < 1e-4 * w[8], "{} {}", w[8], w[9]);
    // and it is the level-one weight divided by q + 1
    let level_one = rational_off_diagonal(1, 12, 1, 1, 200).unwrap().value;
    assert!((w[8] * 12.0 - level_one).abs() < 1e-6 * level_one);
    for (m, p) in [(2u64, 3u64), (4, 6), (5, 7)] {
        let geo = rational_off_diagonal(11, 12, m, p, 200).unwrap().value;
        let spec = spectral_side_n(&sol.basis, m, p).unwrap();
        assert!((geo - spec).abs() < 1e-4, "({m},{p}) {geo} {spec}");
    }
}

#[test]
fn too_few_samples_is_rank_error() {
    let samples = rational_samples(11, 12, 5, 50).unwrap();
    let r = solve_harmonic_weights(basis(), &samples, &[]);
    assert!(matches!(r, Err(hmf_core::HmfError::Rank(_))));
}

#[test]
fn wrong_basis_gives_negative_weight_or_bad_holdout() {
    // dropping the oldform companion leaves an inconsistent system
    let mut forms = basis();
    forms.pop();
    let samples: Vec<TraceSample> = rational_samples(11, 12, 40, 200).unwrap();
    let (fit, hold) = samples.split_at(30);
    match solve_harmonic_weights(forms, fit, hold) {
        Err(hmf_core::HmfError::NegativeWeight(..)) => {}
        Ok(sol) => assert!(sol.holdout_residual > 1e-3 || sol.fit_residual > 1e-3),
        Err(e) => panic!("{e}"),
    }
}

#[test]
fn level_eleven_weight_four_desk_case() {
    let field = TotallyRealField::rationals();
    let mut forms = Vec::new();
    for nf in hmf_modsym::newforms(11, 4, 20).unwrap() {
        let mut f = Eigenform::rational(&format!("11.4.{}", nf.index), 4, 11, Normalization::Arithmetic, &nf.ap).unwrap();
        f.extend_coefficients(20).unwrap();
        forms.push(BasisForm::Primitive(f.to_unitary().unwrap()));
    }
    assert_eq!(forms.len(), 2);
    // weight 4 tails only decay like T^{-5/2}, so a modest cutoff and a
    // tolerance read off the tail bounds
    let mut tail = 0.0f64;
    let mut sample = |m: u64, p: u64| {
        let g = rational_off_diagonal(11, 4, m, p, 400).unwrap();
        tail = tail.max(g.tail_bound);
        TraceSample { m: Ideal::from_int(&field, m as i128).unwrap(), p: Ideal::from_int(&field, p as i128).unwrap(), value: g.value }
    };
    let fit = [sample(1, 1), sample(1, 2), sample(1, 3)];
    let hold = [sample(2, 3)];
    assert!(tail < 1e-4, "{tail}");
    let sol = solve_harmonic_weights(forms, &fit, &hold).unwrap();
    assert!(sol.holdout_residual < 10.0 * tail + 1e-9, "{} vs tail {tail}", sol.holdout_residual);
}
