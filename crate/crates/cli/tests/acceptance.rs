//! Acceptance suite: eleven criteria, each printed as one PASS/FAIL line.
//! Run with `cargo test -p weakcm-cli --test acceptance -- --nocapture`.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use weakcm::cmfield::{from_tower_case, CMFieldData, CmCase};
use weakcm::dodson::enumerate::{classify_conjugacy, enumerate_admissible, DEFAULT_ENUM_BOUND};
use weakcm::dodson::imn2::{bit, ImN2Element};
use weakcm::dodson::partition::{HodgePartition, PartitionPreset};
use weakcm::dodson::presets::{preset_report, weight1_presets, PresetReport};
use weakcm::dodson::reflex::{reflex_from_dodson, AbstractCMType};
use weakcm::dodson::triple::{group_from_triple, triple_from_group};
use weakcm::hodgeprod::{
    identification_from_element, imaginary_quadratic_generators, k3t2_analyze, level_subspace, tensor_cm,
    weil_griffiths, CMHodgeStructure, FieldHodgeKind, Identification, Situation,
};
use weakcm::linalg::Matrix;
use weakcm::rational::{frac, int, Rational};
use weakcm::tausplit::{
    galois_map, lift, split, validate_weak_cm, verify_certificate, PeriodMatrix, SplitCertificate, TowerMatrix,
};
use weakcm::tower::{FieldElement, GaloisElement, TowerCase, TowerHandle, TowerSpec};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_s: u64) -> Result<(), String> {
    ensure(elapsed <= Duration::from_secs(limit_s), || {
        format!("took {:.2} s, limit {limit_s} s", elapsed.as_secs_f64())
    })
}

// ---------------------------------------------------------------- 1

fn classification_counts() -> Outcome {
    let start = Instant::now();
    let expected = [
        (2, PartitionPreset::K3, 3),
        (2, PartitionPreset::Abl, 3),
        (3, PartitionPreset::Cy3, 8),
        (3, PartitionPreset::Abl, 6),
    ];
    let mut got = Vec::new();
    for (n, preset, want) in expected {
        let p = HodgePartition::preset(preset, n);
        let r = classify_conjugacy(n, &p, DEFAULT_ENUM_BOUND).map_err(|e| e.to_string())?;
        ensure(r.class_count == want, || format!("N={n} {preset:?}: {} classes, expected {want}", r.class_count))?;
        got.push(r.class_count.to_string());
    }
    within(start.elapsed(), 5)?;
    Ok(format!("counts {}", got.join("/")))
}

// ---------------------------------------------------------------- 2

fn preset_reports() -> Result<BTreeMap<String, PresetReport>, String> {
    weight1_presets()
        .iter()
        .map(|p| preset_report(p).map(|r| (p.id.to_string(), r)).map_err(|e| format!("{}: {e}", p.id)))
        .collect()
}

fn presets() -> Outcome {
    let start = Instant::now();
    let reports = preset_reports()?;
    ensure(reports.len() == 13, || format!("{} presets", reports.len()))?;
    // (id, n′, reflex tag, case letter)
    let expected: &[(&str, usize, &str, Option<&str>)] = &[
        ("z3-1-triv", 1, "(1,1,triv.)", None),
        ("s3-1-triv", 1, "(1,1,triv.)", None),
        ("A.iso", 1, "(1,1,triv.)", None),
        ("i", 1, "(1,1,triv.)", None),
        ("A.noniso", 2, "(ℤ₂,1,triv.)", Some("A")),
        ("ii", 2, "(ℤ₂,1,triv.)", Some("A")),
        ("B", 4, "(ℤ₄,1,non-triv.)", None),
        ("C", 4, "(D₄,1,non-triv.)", None),
        ("iii", 4, "(ℤ₂×ℤ₂,1,non-triv.)", None),
        ("z3-3-triv", 4, "(A₄,1,non-triv.)", None),
        ("s3-3-triv", 4, "(S₄,1,non-triv.)", None),
        ("z3-1-de1", 3, "(ℤ₃,1,non-triv.)", None),
        ("s3-1-de1", 3, "(S₃,1,non-triv.)", None),
    ];
    for &(id, n_prime, tag, case) in expected {
        let r = &reports[id];
        let ind = &r.reflex.induced;
        ensure(r.reflex.n_prime == n_prime, || format!("{id}: n′ = {}, expected {n_prime}", r.reflex.n_prime))?;
        ensure(ind.tag == tag, || format!("{id}: tag {}, expected {tag}", ind.tag))?;
        ensure(ind.case.as_deref() == case, || format!("{id}: case {:?}, expected {case:?}", ind.case))?;
    }
    for id in ["z3-1-de1", "s3-1-de1"] {
        let d = reports[id].reflex.induced.detail.as_deref();
        ensure(d == Some("dε1"), || format!("{id}: cocycle detail {d:?}"))?;
    }
    ensure(reports["B"].reflex.reflex_is_galois && !reports["C"].reflex.reflex_is_galois, || {
        "(B) reflex must be Galois and (C) non-Galois".into()
    })?;
    within(start.elapsed(), 5)?;
    Ok("13 presets, n′ and tags match".into())
}

// ---------------------------------------------------------------- 3

/// Invariants of a permutation group given by generators: order,
/// abelianization order and element-order histogram.
fn perm_group_invariants(n: usize, gens: &[Vec<usize>]) -> (usize, usize, BTreeMap<usize, usize>) {
    let compose = |a: &Vec<usize>, b: &Vec<usize>| -> Vec<usize> { (0..n).map(|i| a[b[i]]).collect() };
    let id: Vec<usize> = (0..n).collect();
    let mut elems: BTreeSet<Vec<usize>> = BTreeSet::from([id.clone()]);
    let mut frontier = vec![id.clone()];
    while let Some(x) = frontier.pop() {
        for g in gens {
            let y = compose(g, &x);
            if elems.insert(y.clone()) {
                frontier.push(y);
            }
        }
    }
    let inverse = |a: &Vec<usize>| -> Vec<usize> {
        let mut r = vec![0; n];
        for (i, &j) in a.iter().enumerate() {
            r[j] = i;
        }
        r
    };
    let mut comm: BTreeSet<Vec<usize>> = BTreeSet::from([id.clone()]);
    loop {
        let mut next = comm.clone();
        for a in &elems {
            for b in &elems {
                let c = compose(&compose(a, b), &compose(&inverse(a), &inverse(b)));
                for x in &comm {
                    next.insert(compose(x, &c));
                }
            }
        }
        if next.len() == comm.len() {
            break;
        }
        comm = next;
    }
    let mut hist = BTreeMap::new();
    for x in &elems {
        let mut k = 1;
        let mut y = x.clone();
        while y != id {
            y = compose(x, &y);
            k += 1;
        }
        *hist.entry(k).or_insert(0) += 1;
    }
    (elems.len(), elems.len() / comm.len(), hist)
}

fn cyc(n: usize, pts: &[usize]) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    for k in 0..pts.len() {
        p[pts[k]] = pts[(k + 1) % pts.len()];
    }
    p
}

fn galois_groups() -> Outcome {
    let start = Instant::now();
    let c = |pts: &[usize]| cyc(7, pts);
    let z2 = c(&[0, 1]);
    // ℤ₂³, ℤ₂×ℤ₄, ℤ₂×(ℤ₄⋊ℤ₂), ℤ₂⋊A₄, ℤ₂⋊S₄; ρ is central, so ⋊ with ⟨ρ⟩ is ×.
    let reference = [
        ("iii", vec![z2.clone(), c(&[2, 3]), c(&[4, 5])]),
        ("B", vec![z2.clone(), c(&[2, 3, 4, 5])]),
        ("C", vec![z2.clone(), c(&[2, 3, 4, 5]), c(&[2, 4])]),
        ("z3-3-triv", vec![z2.clone(), c(&[2, 3, 4]), c(&[3, 4, 5])]),
        ("s3-3-triv", vec![z2, c(&[2, 3, 4, 5]), c(&[2, 3])]),
    ];
    let reports = preset_reports()?;
    let invs: Vec<_> = reference.iter().map(|(_, g)| perm_group_invariants(7, g)).collect();
    let distinct: BTreeSet<_> = invs.iter().collect();
    ensure(distinct.len() == 5, || "reference invariants do not separate the five groups".into())?;
    for ((id, _), (order, ab, hist)) in reference.iter().zip(&invs) {
        let g = &reports[*id].reflex.galois_group;
        ensure(g.order == *order && g.abelianization_order == *ab && g.element_orders == *hist, || {
            format!(
                "{id}: order {} ab {} orders {:?}; expected {order} {ab} {hist:?}",
                g.order, g.abelianization_order, g.element_orders
            )
        })?;
    }
    let dc = reports["iii"]
        .degree_check
        .as_ref()
        .ok_or_else(|| "(iii) report has no degree check".to_string())?;
    ensure(dc.stated_n_prime == 4 && dc.stated_reflex_degree == 8, || "degree check states wrong values".into())?;
    ensure(dc.consistent == (dc.computed_n_prime == 4 && dc.computed_reflex_degree == 8), || {
        "degree check flag disagrees with computed values".into()
    })?;
    within(start.elapsed(), 5)?;
    Ok(format!(
        "five groups match; (iii) flag present (n′ = {}, 2n′ = {}, consistent = {})",
        dc.computed_n_prime, dc.computed_reflex_degree, dc.consistent
    ))
}

// ---------------------------------------------------------------- 4

fn signed_set(phi: u16, n: usize) -> BTreeSet<(usize, u8)> {
    (0..n).map(|i| (i, bit(phi, n, i))).collect()
}

fn bound_check() -> Outcome {
    let n = 3;
    let subs = enumerate_admissible(n, DEFAULT_ENUM_BOUND).map_err(|e| e.to_string())?;
    let mut types = 0;
    let mut max = 0;
    for s in &subs {
        for phi in 0..(1u16 << n) {
            let mut ct = AbstractCMType::new(s.elements.clone(), None);
            ct.phi = phi;
            let r = reflex_from_dodson(&ct, n).map_err(|e| e.to_string())?;
            let target = signed_set(phi, n);
            let stab = s
                .elements
                .iter()
                .filter(|g| target.iter().map(|&(i, b)| g.apply_slot(i, b)).collect::<BTreeSet<_>>() == target)
                .count();
            let degree = s.elements.len() / stab;
            ensure(r.reflex_degree == degree, || {
                format!("{:?} Φ={phi:03b}: reflex degree {} vs oracle {degree}", s.elements, r.reflex_degree)
            })?;
            ensure(degree <= 1 << n && r.bound_ok, || format!("2n′ = {degree} exceeds 8"))?;
            max = max.max(degree);
            types += 1;
        }
    }
    Ok(format!("{types} CM types over {} subgroups, max 2n′ = {max}", subs.len()))
}

// ---------------------------------------------------------------- 5, 6, 8

struct Sample {
    field: CMFieldData,
    pm: PeriodMatrix,
    cert: SplitCertificate,
}

fn fields_for(case: CmCase) -> Vec<CMFieldData> {
    let cases = match case {
        CmCase::Deg2 => vec![
            TowerCase::quadratic(int(-1)),
            TowerCase::quadratic(int(-2)),
            TowerCase::quadratic(int(-3)),
            TowerCase::quadratic(frac(-7, 4)),
        ],
        CmCase::A => vec![
            TowerCase::biquadratic(int(-1), int(-2)),
            TowerCase::biquadratic(int(-1), int(-3)),
            TowerCase::biquadratic(int(-2), int(-5)),
        ],
        CmCase::B => vec![
            TowerCase::cyclic_quartic(int(5), frac(-5, 2), frac(-1, 2)),
            TowerCase::cyclic_quartic(int(2), int(-2), int(1)),
            TowerCase::cyclic_quartic(int(5), int(-5), int(-2)),
        ],
        CmCase::C => vec![
            TowerCase::non_galois_closure(int(2), int(-3), int(1)),
            TowerCase::non_galois_closure(int(2), int(-5), int(2)),
            TowerCase::non_galois_closure(int(3), int(-3), int(1)),
        ],
    };
    cases.iter().map(|c| from_tower_case(c, 1_000_000).expect("valid field")).collect()
}

fn named(t: &Arc<TowerSpec>, s: &str) -> FieldElement {
    t.named(s).unwrap_or_else(|| panic!("no element {s}"))
}

/// The standard forms, built from named elements: `(I | √p·I)`,
/// `(I | diag(√p₁,…,√p₂,…))` with `p` trailing `√p₂` entries, and for
/// quartic fields `r` rows `(I, √d′I, (ξ₊+ξ₋)I, √d(ξ₊−ξ₋)I)` on top of their
/// `σ₀³` images.
fn oracle_standard_form(t: &Arc<TowerSpec>, case: CmCase, n: usize, p: usize) -> TowerMatrix {
    let zero = FieldElement::zero(t);
    let one = FieldElement::one(t);
    match case {
        CmCase::Deg2 | CmCase::A => {
            let diag = |i: usize| match case {
                CmCase::Deg2 => named(t, "√p"),
                _ if i < n - p => named(t, "√p₁"),
                _ => named(t, "√p₂"),
            };
            Matrix::from_fn(n, 2 * n, |i, j| {
                if j == i {
                    one.clone()
                } else if j == n + i {
                    diag(i)
                } else {
                    zero.clone()
                }
            })
        }
        CmCase::B | CmCase::C => {
            let r = n / 2;
            let (xp, xm) = (named(t, "ξ₊"), named(t, "ξ₋"));
            let top = [one.clone(), named(t, "√d′"), xp.add(&xm), named(t, "√d").mul(&xp.sub(&xm))];
            let s = t.generator(0);
            let s3 = |x: &FieldElement| s.apply(&s.apply(&s.apply(x)));
            Matrix::from_fn(n, 2 * n, |i, j| {
                if j % r != i % r {
                    zero.clone()
                } else if i < r {
                    top[j / r].clone()
                } else {
                    s3(&top[j / r])
                }
            })
        }
    }
}

fn random_rational(rng: &mut ChaCha8Rng) -> Rational {
    frac(rng.gen_range(-4..=4), rng.gen_range(1..=3))
}

/// A random weak CM period matrix: `W = std · T` for a random invertible
/// rational `T`, `τ = W_L⁻¹ W_R`.
fn random_input(field: &CMFieldData, n: usize, p: usize, rng: &mut ChaCha8Rng) -> Option<PeriodMatrix> {
    let t = &field.tower;
    let std = oracle_standard_form(t, field.case, n, p);
    let tm = Matrix::from_fn(2 * n, 2 * n, |_, _| random_rational(rng));
    if tm.det() == int(0) {
        return None;
    }
    let w = std.mul(&lift(&tm, t));
    let tau = w.submatrix(0, n, 0, n).inverse()?.mul(&w.submatrix(0, n, n, 2 * n));
    PeriodMatrix::from_tau(field.clone(), &tau)
}

fn check_certificate(s: &Sample) -> Result<(), String> {
    let (pm, cert) = (&s.pm, &s.cert);
    let t = &s.field.tower;
    let n = pm.n;
    let v = verify_certificate(pm, cert);
    ensure(v.verified, || format!("verification failed: {:?}", v.diagnostic))?;
    let p = cert.p_split.unwrap_or(0);
    let std = oracle_standard_form(t, s.field.case, n, p);
    ensure(cert.standard_form == std, || "certificate standard form differs from the oracle".into())?;
    let one = FieldElement::one(t);
    let tau = pm.tau().select_rows(&cert.renaming);
    let lhs = cert.p_inv.mul(&Matrix::identity(n, &one).hstack(&tau)).mul(&lift(&cert.s, t));
    for i in 0..n {
        for j in 0..2 * n {
            ensure(lhs.get(i, j) == std.get(i, j), || format!("entry ({},{}) differs", i + 1, j + 1))?;
        }
    }
    let text = serde_json::to_string(&cert.to_doc()).map_err(|e| e.to_string())?;
    let back = SplitCertificate::from_doc(t, &serde_json::from_str(&text).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    ensure(verify_certificate(pm, &back).verified, || "re-read certificate does not verify".into())
}

fn build_corpus() -> Result<Vec<(CmCase, usize, Vec<Sample>)>, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let plan = [
        (CmCase::Deg2, 2),
        (CmCase::Deg2, 3),
        (CmCase::Deg2, 4),
        (CmCase::A, 2),
        (CmCase::A, 3),
        (CmCase::B, 2),
        (CmCase::B, 4),
        (CmCase::C, 2),
        (CmCase::C, 4),
    ];
    let mut out = Vec::new();
    for (case, n) in plan {
        let fields = fields_for(case);
        let mut samples = Vec::new();
        let mut attempts = 0;
        while samples.len() < 100 {
            attempts += 1;
            ensure(attempts < 1000, || format!("{case:?} n={n}: too many degenerate draws"))?;
            let field = fields[samples.len() % fields.len()].clone();
            let p = if case == CmCase::A { rng.gen_range(1..n) } else { 0 };
            let Some(pm) = random_input(&field, n, p, &mut rng) else { continue };
            let cert = split(&pm).map_err(|e| format!("{case:?} n={n}: split failed: {e}"))?;
            if case == CmCase::A {
                ensure(cert.p_split == Some(p), || format!("p_split {:?}, expected {p}", cert.p_split))?;
            }
            samples.push(Sample { field, pm, cert });
        }
        out.push((case, n, samples));
    }
    Ok(out)
}

fn round_trips(corpus: &[(CmCase, usize, Vec<Sample>)], elapsed: Duration) -> Outcome {
    let start = Instant::now();
    let mut counts = BTreeMap::new();
    for (case, n, samples) in corpus {
        for s in samples {
            check_certificate(s).map_err(|e| format!("{case:?} n={n}: {e}"))?;
        }
        *counts.entry(format!("{case:?}")).or_insert(0) += samples.len();
    }
    let total = elapsed + start.elapsed();
    within(total, 60)?;
    Ok(format!(
        "{} ({:.1} s)",
        counts.iter().map(|(k, v)| format!("{k}: {v}")).collect::<Vec<_>>().join(", "),
        total.as_secs_f64()
    ))
}

fn gmap(g: &GaloisElement, m: &TowerMatrix) -> TowerMatrix {
    Matrix::from_fn(m.rows(), m.cols(), |i, j| g.apply(m.get(i, j)))
}

fn identities(corpus: &[(CmCase, usize, Vec<Sample>)]) -> Outcome {
    let mut checked = 0;
    for (case, n, samples) in corpus {
        if *case == CmCase::Deg2 {
            continue;
        }
        for s in samples {
            let t = &s.field.tower;
            let tau = s.pm.tau();
            let tau_bar = gmap(&t.conjugation(), &tau);
            let de = validate_weak_cm(&s.pm).map_err(|e| e.to_string())?;
            let (delta, eps) = match case {
                CmCase::A => {
                    let (s1, s2) = (t.generator(0), t.generator(1));
                    let s1tau = gmap(&s1, &tau);
                    (tau.sub(&s1tau), gmap(&s1, &gmap(&s2, &tau)).sub(&s1tau))
                }
                _ => {
                    let s0 = t.generator(0);
                    let s0tau = gmap(&s0, &tau);
                    (tau.sub(&s0tau), gmap(&s0, &s0tau).sub(&s0tau))
                }
            };
            ensure(de.delta == delta && de.eps == eps, || format!("{case:?} n={n}: δ/ε differ from definitions"))?;
            match case {
                CmCase::A => ensure(delta.sub(&eps) == tau.sub(&tau_bar), || format!("{case:?} n={n}: δ − ε ≠ τ − τ̄"))?,
                _ => ensure(eps == gmap(&t.generator(0), &delta).neg(), || format!("{case:?} n={n}: ε ≠ −σ₀(δ)"))?,
            }
            ensure(galois_map(&t.conjugation(), &tau) == tau_bar, || "conjugation mismatch".into())?;
            checked += 1;
        }
    }
    Ok(format!("{checked} accepted case A/B/C inputs"))
}

fn level_hodge(corpus: &[(CmCase, usize, Vec<Sample>)]) -> Outcome {
    let mut checked = 0;
    for (case, n, samples) in corpus {
        if *case == CmCase::Deg2 {
            continue;
        }
        let n = *n;
        for s in samples {
            let level = &s.cert.level;
            let mut ps: Vec<usize> = level.embeddings.iter().map(|e| e.p).collect();
            ps.sort_unstable();
            let mut want = match case {
                CmCase::A => {
                    let p = s.cert.p_split.ok_or("case A certificate without p")?;
                    vec![n, 0, p, n - p]
                }
                _ => vec![n, 0, n / 2, n / 2],
            };
            want.sort_unstable();
            ensure(ps == want, || format!("{case:?} n={n}: embedding types {ps:?}, expected {want:?}"))?;
            let mut h: BTreeMap<String, usize> = BTreeMap::new();
            for p in &want {
                *h.entry(format!("{},{}", p, n - p)).or_insert(0) += 1;
            }
            ensure(level.hodge_numbers == h, || format!("{case:?} n={n}: Hodge numbers {:?}", level.hodge_numbers))?;
            ensure(level.embeddings.iter().all(|e| e.pure && e.p + e.q == n), || "impure embedding".into())?;
            checked += 1;
        }
    }
    Ok(format!("{checked} case A/B/C certificates"))
}

// ---------------------------------------------------------------- 7

fn odd_dimension() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut rejected = 0;
    for case in [CmCase::B, CmCase::C] {
        for field in fields_for(case) {
            for n in [1usize, 3, 5] {
                for k in 0..4 {
                    let blocks = (0..4)
                        .map(|b| {
                            Matrix::from_fn(n, n, |i, j| match k {
                                0 => int(i64::from(b == 2 && i == j)),
                                _ => random_rational(&mut rng),
                            })
                        })
                        .collect();
                    let pm = PeriodMatrix::new(field.clone(), blocks).map_err(|e| e.to_string())?;
                    for res in [split(&pm).map(|_| ()), validate_weak_cm(&pm).map(|_| ())] {
                        match res {
                            Err(e) if e.condition() == "odd-dimension-exclusion" => rejected += 1,
                            other => return Err(format!("{case:?} n={n}: {:?}", other.err())),
                        }
                    }
                }
            }
        }
    }
    Ok(format!("{rejected} rejections with odd-dimension-exclusion"))
}

// ---------------------------------------------------------------- 9

fn k3t2() -> Outcome {
    let ts_fields: Vec<CMFieldData> = [CmCase::Deg2, CmCase::A, CmCase::B, CmCase::C]
        .into_iter()
        .flat_map(fields_for)
        .collect();
    let e_fields: Vec<CMFieldData> = [-1, -2, -3, -7, -11]
        .into_iter()
        .map(|p| from_tower_case(&TowerCase::quadratic(int(p)), 1000).unwrap())
        .collect();
    let mut seen = BTreeMap::new();
    for fs in &ts_fields {
        let ts = CMHodgeStructure::from_cm_field(fs, FieldHodgeKind::K3).map_err(|e| e.to_string())?;
        let subfields = imaginary_quadratic_generators(fs);
        for fe in &e_fields {
            let e = CMHodgeStructure::from_cm_field(fe, FieldHodgeKind::Curve).map_err(|e| e.to_string())?;
            let mut runs = Vec::new();
            match subfields.iter().find(|(_, x)| identification_from_element(fs, fe, x).is_ok()) {
                Some((_, x)) => {
                    runs.push((Situation::Contained, identification_from_element(fs, fe, x).unwrap()))
                }
                None => runs.push((Situation::Disjoint, Identification::Independent)),
            }
            for (situation, ident) in runs {
                let start = Instant::now();
                let r = k3t2_analyze(&ts, &e, &ident).map_err(|e| e.to_string())?;
                within(start.elapsed(), 1)?;
                let want = match situation {
                    Situation::Disjoint => ts.dim() * 2,
                    Situation::Contained => ts.dim() * 2 / 2,
                };
                let label = format!("{} × {}", fs.tower.case().name(), fe.tower.case().name());
                ensure(r.situation == situation, || format!("{label}: situation {:?}", r.situation))?;
                ensure(r.level_dim == want, || format!("{label}: level dim {} ≠ {want}", r.level_dim))?;
                ensure(r.ts_dim == ts.dim(), || format!("{label}: T_S dim"))?;
                ensure(r.tau_e_orbit_size == 2, || format!("{label}: τ_E orbit {}", r.tau_e_orbit_size))?;
                ensure(r.strong_cm_verdict, || format!("{label}: not strong CM"))?;
                let lv = level_subspace(&tensor_cm(&ts, &e, &ident).map_err(|e| e.to_string())?.structure)
                    .map_err(|e| e.to_string())?;
                ensure(lv.dim() == r.level_dim && lv.is_cm(), || format!("{label}: level subspace mismatch"))?;
                *seen.entry(format!("{situation:?}")).or_insert(0) += 1;
            }
        }
    }
    ensure(seen.len() == 2, || format!("only {seen:?} situations exercised"))?;
    Ok(seen.iter().map(|(k, v)| format!("{k}: {v}")).collect::<Vec<_>>().join(", "))
}

// ---------------------------------------------------------------- 10

fn weight3_cm_structures() -> Result<Vec<(String, CMHodgeStructure)>, String> {
    let mut out = Vec::new();
    for n in [2usize, 3] {
        let part = HodgePartition::preset(PartitionPreset::Cy3, n);
        for s in enumerate_admissible(n, DEFAULT_ENUM_BOUND).map_err(|e| e.to_string())? {
            if let Ok(h) = CMHodgeStructure::from_imn2(&s.elements, &part) {
                out.push((format!("N={n} {}", s.triple.tag()), h));
            }
        }
    }
    for p in weight1_presets() {
        let ct = &p.cm_type;
        let r = reflex_from_dodson(ct, ct.n).map_err(|e| e.to_string())?;
        let elems: Vec<ImN2Element> = r
            .induced
            .representative
            .iter()
            .map(|s| serde_json::from_value(serde_json::Value::String(s.clone())).unwrap())
            .collect();
        let part = HodgePartition::from_pair_labels("level", &r.induced.partition);
        let h = CMHodgeStructure::from_imn2(&elems, &part).map_err(|e| format!("{}: {e}", p.id))?;
        out.push((format!("level of {}", p.id), h));
    }
    Ok(out)
}

fn weil_griffiths_check() -> Outcome {
    let structures = weight3_cm_structures()?;
    let mut count = 0;
    for (name, h) in &structures {
        ensure(h.weight == 3 && h.is_cm(), || format!("{name}: not a weight-3 CM structure"))?;
        let r = weil_griffiths(h).map_err(|e| format!("{name}: {e}"))?;
        ensure(r.weil_cm && r.griffiths_cm && r.common_algebra_ok, || {
            format!("{name}: weil {} griffiths {} common {}", r.weil_cm, r.griffiths_cm, r.common_algebra_ok)
        })?;
        ensure(r.weil.weight == 1 && r.griffiths.weight == 1, || format!("{name}: wrong weight"))?;
        count += 1;
    }
    let c4 = cyc(4, &[0, 1, 2, 3]);
    let mixed = CMHodgeStructure::new(
        3,
        vec![Some((3, 0)), None, Some((0, 3)), None],
        Some(vec![1, 2, 1, 2]),
        &[c4],
        vec![2, 3, 0, 1],
    )
    .map_err(|e| e.to_string())?;
    let r = weil_griffiths(&mixed).map_err(|e| e.to_string())?;
    ensure(!(r.weil_cm && r.griffiths_cm && r.common_algebra_ok), || "non-CM structure passes every check".into())?;
    Ok(format!("{count} CM structures pass; synthetic non-CM structure fails"))
}

// ---------------------------------------------------------------- 11

fn triple_round_trip() -> Outcome {
    let start = Instant::now();
    let mut total = 0;
    for n in [2usize, 3] {
        let subs = enumerate_admissible(n, DEFAULT_ENUM_BOUND).map_err(|e| e.to_string())?;
        for s in &subs {
            let t = triple_from_group(&s.elements, None).map_err(|e| e.to_string())?;
            let mut back = group_from_triple(&t, None).map_err(|e| e.to_string())?;
            back.sort();
            let mut orig = s.elements.clone();
            orig.sort();
            ensure(back == orig, || format!("N={n}: round trip changed {:?}", s.elements))?;
            ensure(t.g0.len() * t.v.len() == orig.len(), || format!("N={n}: |G₀|·|V| ≠ |G|"))?;
            total += 1;
        }
        ensure(!subs.is_empty(), || format!("no admissible subgroups for N={n}"))?;
    }
    within(start.elapsed(), 10)?;
    Ok(format!("{total} subgroups of Im(2,2) and Im(3,2)"))
}

#[test]
fn acceptance() {
    let mut lines = Vec::new();
    let mut record = |k: usize, name: &str, r: Outcome| {
        let line = match &r {
            Ok(d) => format!("PASS {k:>2} {name}: {d}"),
            Err(e) => format!("FAIL {k:>2} {name}: {e}"),
        };
        println!("{line}");
        lines.push((r.is_ok(), line));
    };
    record(1, "dodson classification counts", classification_counts());
    record(2, "weight-1 presets", presets());
    record(3, "reflex Galois groups", galois_groups());
    record(4, "reflex degree bound", bound_check());
    let start = Instant::now();
    let corpus = build_corpus();
    let elapsed = start.elapsed();
    match &corpus {
        Ok(c) => {
            record(5, "splitting round trips", round_trips(c, elapsed));
            record(6, "structural identities", identities(c));
        }
        Err(e) => {
            record(5, "splitting round trips", Err(e.clone()));
            record(6, "structural identities", Err(format!("no corpus: {e}")));
        }
    }
    record(7, "odd-dimension exclusion", odd_dimension());
    match &corpus {
        Ok(c) => record(8, "level Hodge numbers", level_hodge(c)),
        Err(e) => record(8, "level Hodge numbers", Err(format!("no corpus: {e}"))),
    }
    record(9, "K3 × T² situations", k3t2());
    record(10, "Weil/Griffiths repackaging", weil_griffiths_check());
    record(11, "triple round trip", triple_round_trip());
    let failed: Vec<&String> = lines.iter().filter(|(ok, _)| !ok).map(|(_, l)| l).collect();
    assert!(failed.is_empty(), "failed criteria:\n{}", failed.iter().map(|s| s.as_str()).collect::<Vec<_>>().join("\n"));
}
