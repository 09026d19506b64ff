use proptest::prelude::*;
use weakcm::cmfield::{from_tower_case, CMFieldData};
use weakcm::hodgeprod::*;
use weakcm::rational::{frac, int};
use weakcm::tower::TowerCase;

fn fields() -> Vec<CMFieldData> {
    [
        TowerCase::quadratic(int(-1)),
        TowerCase::quadratic(int(-3)),
        TowerCase::quadratic(int(-7)),
        TowerCase::biquadratic(int(-1), int(-3)),
        TowerCase::biquadratic(int(-2), int(-5)),
        TowerCase::cyclic_quartic(int(5), frac(-5, 2), frac(-1, 2)),
        TowerCase::non_galois_closure(int(2), int(-3), int(1)),
    ]
    .iter()
    .map(|c| from_tower_case(c, 1000).unwrap())
    .collect()
}

fn structure(which: usize, kind: FieldHodgeKind) -> CMHodgeStructure {
    CMHodgeStructure::from_cm_field(&fields()[which], kind).unwrap()
}

/// K3-type structures over any field; curves over the quadratic ones.
fn factor() -> impl Strategy<Value = CMHodgeStructure> {
    prop_oneof![
        (0usize..7).prop_map(|w| structure(w, FieldHodgeKind::K3)),
        (0usize..3).prop_map(|w| structure(w, FieldHodgeKind::Curve)),
    ]
}

/// A product of a K3-type structure with a curve, with the identification
/// forced by any shared imaginary quadratic subfield.
fn k3_times_curve(ts: usize, e: usize) -> (CMHodgeStructure, CMHodgeStructure, Identification, bool) {
    let f = fields();
    let s = structure(ts, FieldHodgeKind::K3);
    let c = structure(e, FieldHodgeKind::Curve);
    let shared = imaginary_quadratic_generators(&f[ts])
        .into_iter()
        .find_map(|(_, x)| identification_from_element(&f[ts], &f[e], &x).ok());
    match shared {
        Some(ident) => (s, c, ident, true),
        None => (s, c, Identification::Independent, false),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn tensor_weight_and_dimension(h1 in factor(), h2 in factor()) {
        let tp = tensor_cm(&h1, &h2, &Identification::Independent).unwrap();
        prop_assert_eq!(tp.structure.weight, h1.weight + h2.weight);
        prop_assert_eq!(tp.structure.dim(), h1.dim() * h2.dim());
        prop_assert_eq!(tp.structure.group.len(), h1.group.len() * h2.group.len());
        prop_assert!(tp.structure.is_cm());
    }

    #[test]
    fn level_is_idempotent(h1 in factor(), h2 in factor()) {
        let tp = tensor_cm(&h1, &h2, &Identification::Independent).unwrap();
        let l = level_subspace(&tp.structure).unwrap();
        prop_assert!(l.dim() <= tp.structure.dim());
        prop_assert_eq!(level_subspace(&l).unwrap(), l);
    }

    #[test]
    fn k3_products_have_pure_conjugates(ts in 0usize..7, e in 0usize..3) {
        let (s, c, ident, contained) = k3_times_curve(ts, e);
        let r = k3t2_analyze(&s, &c, &ident).unwrap();
        prop_assert_eq!(r.tau_e_orbit_size, 2);
        prop_assert!(r.strong_cm_verdict);
        let expected = if contained { s.dim() } else { 2 * s.dim() };
        prop_assert_eq!(r.level_dim, expected);
        prop_assert_eq!(r.situation, if contained { Situation::Contained } else { Situation::Disjoint });
    }

    #[test]
    fn repackaging_preserves_cm_data(ts in 0usize..7, e in 0usize..3) {
        let (s, c, ident, _) = k3_times_curve(ts, e);
        let tp = tensor_cm(&s, &c, &ident).unwrap();
        for h in [level_subspace(&tp.structure).unwrap(), tp.structure.clone()] {
            let r = weil_griffiths(&h).unwrap();
            prop_assert!(r.original_cm && r.weil_cm && r.griffiths_cm && r.common_algebra_ok);
            for w in [&r.weil, &r.griffiths] {
                prop_assert_eq!(w.weight, 1);
                prop_assert_eq!(w.dim(), h.dim());
                prop_assert_eq!(&w.conj, &h.conj);
                prop_assert_eq!(&w.group, &h.group);
            }
            let top = r.weil.hodge_numbers().get("1,0").copied().unwrap_or(0);
            prop_assert_eq!(2 * top, h.dim());
        }
    }
}

#[test]
fn mixed_level_breaks_repackaging() {
    let h = CMHodgeStructure::new(
        3,
        vec![Some((3, 0)), None, None, Some((0, 3))],
        None,
        &[vec![1, 0, 3, 2]],
        vec![3, 2, 1, 0],
    )
    .unwrap();
    let r = weil_griffiths(&h).unwrap();
    assert!(!(r.original_cm && r.weil_cm && r.griffiths_cm && r.common_algebra_ok));
}

#[test]
fn shared_subfield_is_not_disjoint() {
    let f = fields();
    assert!(check_disjoint(&f[3], &f[0]).is_err());
    assert!(check_disjoint(&f[3], &f[2]).is_ok());
    assert!(check_disjoint(&f[5], &f[0]).is_ok());
}
