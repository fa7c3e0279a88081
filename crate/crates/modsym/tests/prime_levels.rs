use hmf_modsym::{cusp_dim, newforms};

#[test]
fn level_499_weight_4() {
    let forms = newforms(499, 4, 8000).unwrap();
    assert_eq!(forms.len(), cusp_dim(499, 4));
    for f in &forms {
        let a = f.ap(499).unwrap();
        assert!((a.abs() - 499.0).abs() < 1e-6 * 499.0);
    }
}

#[test]
fn level_11_weight_12_has_eight_newforms() {
    let forms = newforms(11, 12, 200).unwrap();
    assert_eq!(forms.len(), 8);
    // The traces of a_p over the newforms are integers.
    for p in [2u64, 3, 5, 7, 13, 97, 199] {
        let tr: f64 = forms.iter().map(|f| f.ap(p).unwrap()).sum();
        assert!((tr - tr.round()).abs() < 1e-4 * tr.abs().max(1.0), "p={p} tr={tr}");
    }
}
