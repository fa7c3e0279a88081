mod common;

use hmf_core::data_io::E4_DELTA_FIXTURE_BOUND;
use hmf_core::moment::{distinguish_forms, estimate_coefficient, MomentContext, MomentOptions, MomentReport, Verdict};

/// Moment reports for `g` at `p` and at 1, sharing one solved basis per level.
fn tables(forms: &[&hmf_core::rankin_selberg::Eigenform], p: u64, levels: &[u64]) -> Vec<(Vec<MomentReport>, Vec<MomentReport>)> {
    let mut out: Vec<(Vec<MomentReport>, Vec<MomentReport>)> = forms.iter().map(|_| (Vec::new(), Vec::new())).collect();
    for &q in levels {
        let ctxs: Vec<(MomentContext, MomentContext)> = forms
            .iter()
            .map(|g| {
                (
                    MomentContext::new(g, p, q, 4, MomentOptions::default()).unwrap(),
                    MomentContext::new(g, 1, q, 4, MomentOptions::default()).unwrap(),
                )
            })
            .collect();
        let n = ctxs.iter().map(|(a, b)| a.m_max.max(b.m_max)).max().unwrap();
        let sol = common::level_basis(q, 4, n.max(200));
        let r = sol.fit_residual.max(sol.holdout_residual);
        for (i, (cp, c1)) in ctxs.iter().enumerate() {
            let rp = cp.report(&sol.basis, r).unwrap();
            let r1 = c1.report(&sol.basis, r).unwrap();
            assert!(rp.within_budget() && r1.within_budget());
            out[i].0.push(rp);
            out[i].1.push(r1);
        }
    }
    out
}

#[test]
fn delta_and_e4_delta_differ_at_two() {
    let delta = common::fixture_form("delta", E4_DELTA_FIXTURE_BOUND);
    let e4d = common::fixture_form("e4delta", E4_DELTA_FIXTURE_BOUND);
    let t = tables(&[&delta, &e4d], 2, &[101, 149]);
    let (cd, _) = estimate_coefficient(&t[0].0, &t[0].1).unwrap();
    let (ce, _) = estimate_coefficient(&t[1].0, &t[1].1).unwrap();
    // unitary C(2): -24 / 2^5.5 and 216 / 2^7.5; the estimates carry the
    // O(1 / log q) bias of the p-dependent d-sum
    let (td, te) = (-24.0 / 2f64.powf(5.5), 216.0 / 2f64.powf(7.5));
    assert!((cd - td).abs() < 0.15 * td.abs(), "{cd} vs {td}");
    assert!((ce - te).abs() < 0.15 * te.abs(), "{ce} vs {te}");
    match distinguish_forms(&t[0].0, &t[0].1, &t[1].0, &t[1].1, 0.25).unwrap() {
        Verdict::Distinguished { p, .. } => assert_eq!(p, 2),
        v => panic!("{v:?}"),
    }
    // a form is never distinguished from itself
    assert!(matches!(
        distinguish_forms(&t[0].0, &t[0].1, &t[0].0, &t[0].1, 0.25).unwrap(),
        Verdict::Indistinguishable { .. }
    ));
}
