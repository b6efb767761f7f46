mod common;

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use orgmap::embedding::{build_omnibus, spectral_embed, AdjacencyWeighting, EmbedOptions, EmbeddingPair, ScreeSelection};
use orgmap::graph::{pid, CollabGraph, OrgTree, PersonId};
use orgmap::metrics::{fluidity, freedom_in, Workgroup};
use proptest::prelude::*;

fn random_tree() -> impl Strategy<Value = (BTreeMap<String, Option<String>>, OrgTree)> {
    (2usize..30)
        .prop_flat_map(|n| (Just(n), prop::collection::vec(any::<prop::sample::Index>(), n - 1)))
        .prop_map(|(n, picks)| {
            let names: Vec<String> = (0..n).map(|i| format!("e{i:02}")).collect();
            let mut parent = BTreeMap::from([(names[0].clone(), None)]);
            for i in 1..n {
                parent.insert(names[i].clone(), Some(names[picks[i - 1].index(i)].clone()));
            }
            let tree = OrgTree::from_rows(
                NaiveDate::from_ymd_opt(2022, 1, 15).unwrap(),
                parent.iter().map(|(e, m)| (pid(e), m.as_deref().map(pid))),
            )
            .unwrap();
            (parent, tree)
        })
}

fn pair_from(vectors: &BTreeMap<PersonId, (Vec<f64>, Vec<f64>)>) -> EmbeddingPair {
    let d = vectors.values().next().map_or(0, |v| v.0.len());
    EmbeddingPair {
        dimension: d,
        month_pair: ("2022-01".into(), "2022-02".into()),
        positions: vectors.clone(),
        eigenvalues: vec![1.0; d],
        latent: Vec::new(),
        scree: ScreeSelection { eigenvalues: vec![1.0; d], chosen_d: d },
    }
}

fn rotate(v: &[f64], theta: f64) -> Vec<f64> {
    // rotation in the first two coordinates, identity elsewhere
    let mut out = v.to_vec();
    out[0] = theta.cos() * v[0] - theta.sin() * v[1];
    out[1] = theta.sin() * v[0] + theta.cos() * v[1];
    out
}

fn vectors_strategy() -> impl Strategy<Value = BTreeMap<PersonId, (Vec<f64>, Vec<f64>)>> {
    prop::collection::vec((prop::collection::vec(-5.0f64..5.0, 3), prop::collection::vec(-5.0f64..5.0, 3)), 1..12)
        .prop_map(|rows| rows.into_iter().enumerate().map(|(i, v)| (pid(&format!("m{i:02}")), v)).collect())
}

#[test]
fn identical_months_embed_identically() {
    let g = CollabGraph::from_edges([("a", "b", 1.0), ("b", "c", 2.0), ("c", "a", 1.0), ("c", "d", 1.0), ("d", "e", 1.0)]).unwrap();
    let e = spectral_embed(&build_omnibus(&g, &g, AdjacencyWeighting::Binary).unwrap(), &EmbedOptions::default()).unwrap();
    for (prev, curr) in e.positions.values() {
        for (a, b) in prev.iter().zip(curr) {
            assert!((a - b).abs() < 1e-9);
        }
    }
    let w = Workgroup::new(0, g.ids().iter().cloned()).unwrap();
    assert!(fluidity(&w, &[e]).unwrap().value.abs() < 1e-9);
}

#[test]
fn two_member_orthogonal_example() {
    let vectors = BTreeMap::from([
        (pid("p"), (vec![1.0, 0.0], vec![0.0, 1.0])),
        (pid("q"), (vec![0.3, 0.4], vec![0.3, 0.4])),
    ]);
    let w = Workgroup::new(1, [pid("p"), pid("q")]).unwrap();
    assert!((fluidity(&w, &[pair_from(&vectors)]).unwrap().value - 0.5).abs() < 1e-12);
}

proptest! {
    #[test]
    fn freedom_matches_definition_and_stays_in_range((parent, tree) in random_tree(), picks in prop::collection::vec(any::<prop::sample::Index>(), 1..6)) {
        let names: Vec<&String> = parent.keys().collect();
        let members: BTreeSet<String> = picks.iter().map(|i| names[i.index(names.len())].clone()).collect();
        let ids: BTreeSet<PersonId> = members.iter().map(|m| pid(m)).collect();
        let f = freedom_in(&tree, &ids).unwrap();
        prop_assert!((0.0..1.0).contains(&f));
        prop_assert!((f - common::freedom_oracle(&parent, &members)).abs() < 1e-12);
    }

    #[test]
    fn single_member_is_fully_aligned((parent, tree) in random_tree(), pick in any::<prop::sample::Index>()) {
        let names: Vec<&String> = parent.keys().collect();
        let one = BTreeSet::from([pid(names[pick.index(names.len())])]);
        prop_assert_eq!(freedom_in(&tree, &one), Some(0.0));
    }

    #[test]
    fn fluidity_ignores_relabelling_and_rotation(vectors in vectors_strategy(), theta in 0.0f64..std::f64::consts::TAU) {
        let members: Vec<PersonId> = vectors.keys().cloned().collect();
        let w = Workgroup::new(0, members.clone()).unwrap();
        let Ok(base) = fluidity(&w, &[pair_from(&vectors)]) else { return Ok(()) };

        let rotated: BTreeMap<_, _> = vectors
            .iter()
            .map(|(k, (p, c))| (k.clone(), (rotate(p, theta), rotate(c, theta))))
            .collect();
        let r = fluidity(&w, &[pair_from(&rotated)]).unwrap();
        prop_assert!((base.value - r.value).abs() < 1e-9);

        let relabelled: BTreeMap<_, _> = vectors
            .iter()
            .map(|(k, v)| (pid(&format!("x-{}", k.as_str().chars().rev().collect::<String>())), v.clone()))
            .collect();
        let w2 = Workgroup::new(0, relabelled.keys().cloned()).unwrap();
        prop_assert!((fluidity(&w2, &[pair_from(&relabelled)]).unwrap().value - base.value).abs() < 1e-12);
    }
}
