use std::collections::BTreeSet;

use chrono::{TimeZone, Utc};
use orgmap::community::Partition;
use orgmap::graph::{cpm_quality, format_edge_list, modularity, parse_edge_list, pid, CollabGraph};
use orgmap::ingest::{induce_monthly, pseudonymize, MessageRecord, Thresholds};
use orgmap::month::Month;
use proptest::prelude::*;

fn graph_strategy() -> impl Strategy<Value = CollabGraph> {
    (3usize..20).prop_flat_map(|n| {
        prop::collection::vec((0..n, 0..n, 1u32..20), 1..60).prop_map(move |edges| {
            let mut b = CollabGraph::builder();
            for (a, c, w) in edges {
                if a != c {
                    let _ = b.add_edge(pid(&format!("n{a}")), pid(&format!("n{c}")), f64::from(w));
                }
            }
            b.build()
        })
    })
}

fn messages_strategy() -> impl Strategy<Value = Vec<MessageRecord>> {
    prop::collection::vec((0u8..8, 0u8..8, 1u32..=28), 0..80).prop_map(|raw| {
        raw.into_iter()
            .filter(|(a, b, _)| a != b)
            .map(|(a, b, day)| MessageRecord {
                sender: pid(&format!("u{a}")),
                recipient: pid(&format!("u{b}")),
                sent_at: Utc.with_ymd_and_hms(2022, 5, day, 9, 0, 0).unwrap(),
            })
            .collect()
    })
}

fn two_cliques() -> CollabGraph {
    let mut edges = Vec::new();
    let names: Vec<String> = (0..10).map(|i| format!("c{i}")).collect();
    for block in [0..5, 5..10] {
        for i in block.clone() {
            for j in i + 1..block.end {
                edges.push((names[i].as_str(), names[j].as_str(), 1.0));
            }
        }
    }
    edges.push(("c4", "c5", 1.0));
    CollabGraph::from_edges(edges).unwrap()
}

#[test]
fn cpm_prefers_the_two_cliques() {
    let g = two_cliques();
    let split = Partition::from_labels(&g, &(0..10).map(|i| usize::from(i >= 5)).collect::<Vec<_>>(), 0);
    let whole = Partition::whole(&g);
    assert!(cpm_quality(&g, &split, 1.0).unwrap() > cpm_quality(&g, &whole, 1.0).unwrap());
}

#[test]
fn edge_list_round_trip() {
    let g = two_cliques();
    let text = format_edge_list(&g);
    assert_eq!(format_edge_list(&parse_edge_list(text.as_bytes()).unwrap()), text);
}

proptest! {
    #[test]
    fn whole_graph_partition_has_zero_modularity(g in graph_strategy()) {
        prop_assume!(g.edge_count() > 0);
        prop_assert!(modularity(&g, &Partition::whole(&g)).unwrap().abs() < 1e-12);
    }

    #[test]
    fn modularity_ignores_uniform_weight_scaling(g in graph_strategy(), factor in 0.1f64..50.0, seed in 0u64..1000) {
        prop_assume!(g.edge_count() > 0);
        let p = orgmap::community::leiden(&g, orgmap::community::Quality::Modularity, 1.0, seed).unwrap();
        let a = modularity(&g, &p).unwrap();
        let b = modularity(&g.scaled(factor), &p).unwrap();
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn largest_component_is_idempotent(g in graph_strategy()) {
        if g.is_empty() {
            prop_assert!(g.largest_connected_component().is_err());
            return Ok(());
        }
        let once = g.largest_connected_component().unwrap();
        let twice = once.largest_connected_component().unwrap();
        prop_assert_eq!(format_edge_list(&once), format_edge_list(&twice));
        prop_assert!(once.is_connected());
    }

    #[test]
    fn induction_ignores_record_order(mut log in messages_strategy(), seed in any::<u64>()) {
        let month = Month::new(2022, 5).unwrap();
        let before = format_edge_list(&induce_monthly(&log, month, Thresholds::default()));
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        log.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(format_edge_list(&induce_monthly(&log, month, Thresholds::default())), before);
    }

    #[test]
    fn induced_edges_are_pairs_that_talked(log in messages_strategy(), min_total in 1u32..6, each in 0u32..3) {
        let g = induce_monthly(&log, Month::new(2022, 5).unwrap(), Thresholds { min_total, min_each_direction: each });
        let talked: BTreeSet<(String, String)> = log
            .iter()
            .map(|m| {
                let (a, b) = (m.sender.as_str().to_string(), m.recipient.as_str().to_string());
                if a < b { (a, b) } else { (b, a) }
            })
            .collect();
        for (i, j, _) in g.edges() {
            let (a, b) = (g.id(i).as_str().to_string(), g.id(j).as_str().to_string());
            let key = if a < b { (a, b) } else { (b, a) };
            prop_assert!(talked.contains(&key));
        }
    }

    #[test]
    fn lowering_min_total_never_removes_edges(log in messages_strategy(), min_total in 2u32..8, each in 0u32..3) {
        let month = Month::new(2022, 5).unwrap();
        let strict = induce_monthly(&log, month, Thresholds { min_total, min_each_direction: each });
        let loose = induce_monthly(&log, month, Thresholds { min_total: min_total - 1, min_each_direction: each });
        for (i, j, w) in strict.edges() {
            let (a, b) = (loose.index_of(strict.id(i)), loose.index_of(strict.id(j)));
            prop_assert!(a.is_some() && b.is_some());
            prop_assert_eq!(loose.weight(a.unwrap(), b.unwrap()), Some(w));
        }
    }

    #[test]
    fn pseudonymisation_keeps_structure(log in messages_strategy()) {
        let month = Month::new(2022, 5).unwrap();
        let plain = induce_monthly(&log, month, Thresholds::default());
        let hashed = induce_monthly(&pseudonymize(&log, "salt"), month, Thresholds::default());
        prop_assert_eq!(plain.node_count(), hashed.node_count());
        prop_assert_eq!(plain.edge_count(), hashed.edge_count());
        prop_assert!((plain.total_weight() - hashed.total_weight()).abs() < 1e-12);
    }
}
