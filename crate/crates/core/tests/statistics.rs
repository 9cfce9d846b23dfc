use ergm_core::terms::{altkstar_alternating_sum, altkstar_degree_form, gwd_value, kstar_count};
use ergm_core::{AttrValues, Decay, Model, NodeAttributes, Term, UndirectedGraph};
use proptest::prelude::*;

fn attrs(n: usize) -> NodeAttributes {
    NodeAttributes::new(n)
        .with("group", AttrValues::Categorical((0..n).map(|i| format!("g{}", i % 3)).collect()))
        .unwrap()
        .with("score", AttrValues::Numeric((0..n).map(|i| (i as f64) * 0.5 - 1.0).collect()))
        .unwrap()
}

fn all_terms() -> Vec<Term> {
    vec![
        Term::Edges,
        Term::NodeMatch("group".into()),
        Term::NodeCov("score".into()),
        Term::Esp(1),
        Term::Esp(2),
        Term::KStar(2),
        Term::KStar(3),
        Term::Gwesp(Decay::Tau(0.25)),
        Term::AltKStar(Decay::Tau(0.4975)),
        Term::Gwd(Decay::Lambda(2.0)),
        Term::DegreeCount(1),
        Term::DegreeCount(3),
    ]
}

fn integer_valued(t: &Term) -> bool {
    !matches!(t, Term::Gwesp(_) | Term::AltKStar(_) | Term::Gwd(_) | Term::NodeCov(_))
}

fn graph_strategy(max_n: usize) -> impl Strategy<Value = UndirectedGraph> {
    (3..=max_n, 0.0..1.0f64, any::<u64>()).prop_map(|(n, p, seed)| UndirectedGraph::random(n, p, seed).unwrap())
}

fn check_close(t: &Term, a: f64, b: f64) -> Result<(), TestCaseError> {
    if integer_valued(t) {
        prop_assert_eq!(a, b, "{}", t.label());
    } else {
        prop_assert!((a - b).abs() <= 1e-9, "{}: {} vs {}", t.label(), a, b);
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn change_stats_match_brute_force(g in graph_strategy(15), a in any::<usize>(), b in any::<usize>()) {
        let n = g.node_count();
        let i = a % n;
        let j = (i + 1 + b % (n - 1)) % n;
        let terms = all_terms();
        let m = Model::new(terms.clone()).compile(&attrs(n), n).unwrap();
        let fast = m.change_stats(&g, i, j).unwrap();
        let slow = m.brute_force_change(&g, i, j).unwrap();
        for (t, (x, y)) in terms.iter().zip(fast.iter().zip(&slow)) {
            check_close(t, *x, *y)?;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn toggle_difference_is_signed_change(g in graph_strategy(12), a in any::<usize>(), b in any::<usize>()) {
        let n = g.node_count();
        let i = a % n;
        let j = (i + 1 + b % (n - 1)) % n;
        let terms = all_terms();
        let m = Model::new(terms.clone()).compile(&attrs(n), n).unwrap();
        let before = m.global_stats(&g).unwrap();
        let delta = m.change_stats(&g, i, j).unwrap();
        let mut h = g.clone();
        let added = h.toggle(i, j).unwrap();
        let after = m.global_stats(&h).unwrap();
        let sign = if added { 1.0 } else { -1.0 };
        for (k, t) in terms.iter().enumerate() {
            check_close(t, after[k] - before[k], sign * delta[k])?;
        }
    }

    #[test]
    fn stats_invariant_under_relabeling(g in graph_strategy(12), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let n = g.node_count();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let a = attrs(n);
        let model = Model::new(all_terms());
        let s = model.compile(&a, n).unwrap().global_stats(&g).unwrap();
        let pg = g.permuted(&perm).unwrap();
        let pa = a.permuted(&perm);
        let t = model.compile(&pa, n).unwrap().global_stats(&pg).unwrap();
        for (x, y) in s.iter().zip(&t) {
            prop_assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn kstar2_counts_paths_of_length_two(g in graph_strategy(8)) {
        let n = g.node_count();
        let mut paths = 0usize;
        for mid in 0..n {
            for a in 0..n {
                for b in (a + 1)..n {
                    if a != mid && b != mid && g.has_edge(a, mid) && g.has_edge(b, mid) {
                        paths += 1;
                    }
                }
            }
        }
        prop_assert_eq!(kstar_count(&g, 2), paths as f64);
    }
}

#[test]
fn altkstar_degree_form_matches_alternating_sum() {
    let lambdas = [1.5, 2.0, 0.4975f64.exp()];
    for case in 0..200u64 {
        let n = 3 + (case as usize % 10);
        let p = 0.05 + 0.9 * ((case * 37 % 100) as f64 / 100.0);
        let g = UndirectedGraph::random(n, p, case).unwrap();
        for &l in &lambdas {
            let a = altkstar_degree_form(&g, l).unwrap();
            let b = altkstar_alternating_sum(&g, l).unwrap();
            assert!((a - b).abs() <= 1e-9, "case {case} lambda {l}: {a} vs {b}");
        }
    }
}

#[test]
fn altkstar_printed_sign_fails_on_path() {
    let path = UndirectedGraph::from_edge_list(3, &[(0, 1), (1, 2)]).unwrap();
    let gwd = gwd_value(&path, 2.0).unwrap();
    assert!((gwd - 3.5).abs() < 1e-12);
    let corrected = altkstar_degree_form(&path, 2.0).unwrap();
    let printed = 2.0 * (2.0 * 2.0 + gwd);
    assert!((corrected - 1.0).abs() < 1e-12);
    assert!((printed - 15.0).abs() < 1e-12);
    assert_eq!(altkstar_alternating_sum(&path, 2.0).unwrap(), 1.0);
}

#[test]
fn gwd_is_weighted_degree_distribution() {
    let n = 9;
    let lambda = 1.7f64;
    let mut terms = vec![Term::Gwd(Decay::Lambda(lambda))];
    terms.extend((1..n).map(Term::DegreeCount));
    let m = Model::new(terms).compile(&NodeAttributes::new(n), n).unwrap();
    for seed in 0..20 {
        let s = m.global_stats(&UndirectedGraph::random(n, 0.4, seed).unwrap()).unwrap();
        let mut expected = 0.0;
        let mut prev = 0.0;
        for j in 1..n {
            let w = 1.0 - (1.0 - 1.0 / lambda).powi(j as i32);
            assert!(w > prev && w < 1.0);
            prev = w;
            expected += lambda * w * s[j];
        }
        assert!((s[0] - expected).abs() < 1e-9);
    }
}
