mod common;

use bnscore_core::dag::{covered_reversal_sequence, independence_equivalent, Arc, Dag};
use bnscore_core::search::{enumerate_dags, group_by_equivalence};

#[test]
fn equivalence_matches_reachability_up_to_three_nodes() {
    for n in 1..=3 {
        let dags = enumerate_dags(n).unwrap();
        for a in &dags {
            for b in &dags {
                let eq = independence_equivalent(a, b).unwrap();
                let reach = covered_reversal_sequence(a, b).unwrap();
                assert_eq!(eq, reach.is_some(), "{a:?} vs {b:?}");
                if let Some(seq) = reach {
                    let mut cur = a.clone();
                    for arc in seq {
                        assert!(cur.is_covered(arc).unwrap());
                        cur = cur.with_reversed(arc).unwrap();
                    }
                    assert_eq!(&cur, b);
                }
            }
        }
    }
}

#[test]
fn equivalence_is_an_equivalence_relation_on_four_nodes() {
    let dags = enumerate_dags(4).unwrap();
    assert_eq!(dags.len(), 543);
    let classes = group_by_equivalence(&dags).unwrap();
    assert_eq!(classes.len(), 185);
    let mut class_of = vec![0; dags.len()];
    for (c, members) in classes.iter().enumerate() {
        for &i in members {
            class_of[i] = c;
        }
    }
    for (i, a) in dags.iter().enumerate() {
        assert!(independence_equivalent(a, a).unwrap());
        for (j, b) in dags.iter().enumerate() {
            let ab = independence_equivalent(a, b).unwrap();
            assert_eq!(ab, independence_equivalent(b, a).unwrap());
            // the class partition encodes transitivity: pairwise verdicts
            // agree with membership of one common block
            assert_eq!(ab, class_of[i] == class_of[j]);
        }
    }
}

#[test]
fn covered_reversals_preserve_equivalence() {
    for d in enumerate_dags(4).unwrap() {
        for arc in d.covered_arcs() {
            let r = d.with_reversed(arc).unwrap();
            assert!(independence_equivalent(&d, &r).unwrap());
        }
        // an uncovered reversal that stays acyclic changes the class
        for arc in d.arcs() {
            if !d.is_covered(arc).unwrap() {
                if let Ok(r) = d.with_reversed(arc) {
                    assert!(!independence_equivalent(&d, &r).unwrap());
                }
            }
        }
    }
}

#[test]
fn complete_dags_are_all_equivalent() {
    let dags = enumerate_dags(4).unwrap();
    let complete: Vec<&Dag> = dags.iter().filter(|d| d.arc_count() == 6).collect();
    assert_eq!(complete.len(), 24);
    for a in &complete {
        for b in &complete {
            assert!(independence_equivalent(a, b).unwrap());
        }
    }
}

#[test]
fn reversal_search_at_larger_scale() {
    // complete DAG on six nodes in opposite orders
    let n = 6;
    let forward = common::complete_dag(&(0..n).collect::<Vec<_>>());
    let backward = common::complete_dag(&(0..n).rev().collect::<Vec<_>>());
    let seq = covered_reversal_sequence(&forward, &backward).unwrap().unwrap();
    assert_eq!(seq.len(), n * (n - 1) / 2);

    let mut extra = forward.without_arc(Arc::new(0, 5)).unwrap();
    extra = extra.without_arc(Arc::new(1, 5)).unwrap();
    assert!(covered_reversal_sequence(&extra, &backward).unwrap().is_none());
}
