use proptest::prelude::*;
use weakcm::cmfield::{from_tower_case, CMFieldData, CmCase};
use weakcm::rational::{frac, int};
use weakcm::tausplit::*;
use weakcm::tower::{FieldElement, TowerCase, TowerHandle};

fn field(which: usize) -> CMFieldData {
    let case = match which {
        0 => TowerCase::quadratic(int(-2)),
        1 => TowerCase::biquadratic(int(-1), int(-2)),
        2 => TowerCase::cyclic_quartic(int(5), frac(-5, 2), frac(-1, 2)),
        _ => TowerCase::non_galois_closure(int(2), int(-3), int(1)),
    };
    from_tower_case(&case, 1000).unwrap()
}

/// Draws `(field, n, p)`: `0 < p < n` in case A (otherwise `ε = 0`), `n` even
/// in cases B/C.
fn shape() -> impl Strategy<Value = (usize, usize, Option<usize>)> {
    (0usize..4, 1usize..=3, 0usize..3).prop_map(|(which, n, p)| match which {
        0 => (0, n, None),
        1 => (1, n.max(2), Some(1 + p % (n.max(2) - 1))),
        w => (w, 2, None),
    })
}

fn draw(f: &CMFieldData, n: usize, p: Option<usize>, seed: u64) -> PeriodMatrix {
    let mut s = seed | 1;
    let mut next = move || {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        (s % 7) as i64 - 3
    };
    loop {
        if let Some(pm) = synthesize(f, n, p, &mut next) {
            return pm;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn accepted_inputs_satisfy_weak_cm_identities((which, n, p) in shape(), seed in any::<u64>()) {
        let f = field(which);
        let pm = draw(&f, n, p, seed);
        let de = validate_weak_cm(&pm).unwrap();
        prop_assert!(de.identities_hold);
        prop_assert!(de.rank_delta + de.rank_eps >= n);
        prop_assert_eq!(de.joint_rank, n);
        let h: usize = de.level.hodge_numbers.values().sum();
        prop_assert_eq!(h, f.degree);
        for (k, v) in &de.level.hodge_numbers {
            let (a, b) = k.split_once(',').unwrap();
            prop_assert_eq!(de.level.hodge_numbers.get(&format!("{b},{a}")), Some(v));
        }
    }

    #[test]
    fn certificates_verify_and_round_trip((which, n, p) in shape(), seed in any::<u64>()) {
        let f = field(which);
        let pm = draw(&f, n, p, seed);
        let cert = split(&pm).unwrap();
        let v = verify_certificate(&pm, &cert);
        prop_assert!(v.verified, "{:?}", v.diagnostic);
        let covered: usize = cert.factors.iter().map(|x| x.dimension * x.multiplicity).sum();
        prop_assert_eq!(covered, n);
        let h: usize = cert.level.hodge_numbers.values().sum();
        prop_assert_eq!(h, f.degree);

        let doc = cert.to_doc();
        let json = serde_json::to_string(&doc).unwrap();
        let back: CertificateDoc = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(&back, &doc);
        let rebuilt = SplitCertificate::from_doc(&f.tower, &back).unwrap();
        prop_assert!(verify_certificate(&pm, &rebuilt).verified);

        let again = split(&pm).unwrap();
        prop_assert_eq!(again.to_doc(), doc);
    }

    #[test]
    fn period_matrix_documents_round_trip((which, n, p) in shape(), seed in any::<u64>()) {
        let f = field(which);
        let pm = draw(&f, n, p, seed);
        let doc = pm.to_doc();
        let json = serde_json::to_string(&doc).unwrap();
        let back: PeriodMatrixDoc = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(&back, &doc);
        let pm2 = PeriodMatrix::from_doc(&back, 1000).unwrap();
        prop_assert_eq!(pm2.tau(), pm.tau());
    }
}

#[test]
fn odd_dimension_in_quartic_cases_is_rejected() {
    for which in [2, 3] {
        let f = field(which);
        assert!(matches!(f.case, CmCase::B | CmCase::C));
        let t = &f.tower;
        // τ = ξ₊·I₃ is a valid period matrix with n odd.
        let tau = weakcm::linalg::Matrix::from_fn(3, 3, |i, j| {
            if i == j {
                t.named("ξ₊").unwrap()
            } else {
                FieldElement::zero(t)
            }
        });
        let pm = PeriodMatrix::from_tau(f.clone(), &tau).unwrap();
        assert_eq!(split(&pm).unwrap_err().condition(), "odd-dimension-exclusion");
    }
}

#[test]
fn perturbed_certificate_fails() {
    let f = field(1);
    let pm = draw(&f, 2, Some(1), 99);
    let mut cert = split(&pm).unwrap();
    let x = cert.s.get(0, 0) + int(1);
    cert.s.set(0, 0, x);
    assert!(!verify_certificate(&pm, &cert).verified);
}
