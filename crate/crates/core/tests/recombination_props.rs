use std::collections::BTreeSet;

use doe_core::recombination::{
    aggregate_completeness, aggregate_throughput, recombine, Aggregate, EvaluationResult,
};
use doe_core::system_model::{evaluated_connected, evaluated_reference_connected, Component, SystemGraph};
use proptest::prelude::*;

fn ids(n: usize) -> BTreeSet<String> {
    (0..n).map(|i| format!("C{i}")).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn throughput_is_order_independent_min(
        values in prop::collection::vec(0.0f64..1e6, 1..12),
        perm_seed in any::<u64>(),
    ) {
        let subsystem = ids(values.len());
        let results: Vec<EvaluationResult> = values
            .iter()
            .enumerate()
            .map(|(i, &v)| EvaluationResult::throughput(&format!("C{i}"), v))
            .collect();
        let fold = values.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert_eq!(aggregate_throughput(&subsystem, &results).unwrap(), Aggregate::Known(fold));

        let mut shuffled = results.clone();
        let len = shuffled.len();
        let mut s = perm_seed;
        for i in (1..len).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (s >> 33) as usize % (i + 1));
        }
        prop_assert_eq!(aggregate_throughput(&subsystem, &shuffled).unwrap(), Aggregate::Known(fold));
    }

    #[test]
    fn completeness_is_conjunction_and_monotone(
        flags in prop::collection::vec(any::<bool>(), 1..12),
        flip in any::<prop::sample::Index>(),
    ) {
        let subsystem = ids(flags.len());
        let results = |f: &[bool]| -> Vec<EvaluationResult> {
            f.iter()
                .enumerate()
                .map(|(i, &b)| EvaluationResult::completeness(&format!("C{i}"), b))
                .collect()
        };
        let agg = aggregate_completeness(&subsystem, &results(&flags)).unwrap();
        prop_assert_eq!(agg, Aggregate::Known(flags.iter().all(|&b| b)));

        let mut lowered = flags.clone();
        lowered[flip.index(flags.len())] = false;
        let after = aggregate_completeness(&subsystem, &results(&lowered)).unwrap();
        if agg == Aggregate::Known(false) {
            prop_assert_eq!(after, Aggregate::Known(false));
        }
    }

    #[test]
    fn partial_inputs_are_undetermined(
        values in prop::collection::vec(0.0f64..100.0, 2..10),
        drop in any::<prop::sample::Index>(),
    ) {
        let subsystem = ids(values.len());
        let skip = drop.index(values.len());
        let mut results = Vec::new();
        for (i, &v) in values.iter().enumerate() {
            if i != skip {
                results.push(EvaluationResult::throughput(&format!("C{i}"), v));
                results.push(EvaluationResult::completeness(&format!("C{i}"), true));
            }
        }
        prop_assert_eq!(aggregate_throughput(&subsystem, &results).unwrap(), Aggregate::Undetermined);
        prop_assert_eq!(aggregate_completeness(&subsystem, &results).unwrap(), Aggregate::Undetermined);
    }
}

fn graph(evaluated: &[bool], edges: &[(usize, usize)]) -> SystemGraph {
    let comps = evaluated
        .iter()
        .enumerate()
        .map(|(i, &e)| {
            let c = Component::new(format!("C{i}"));
            if e {
                c.evaluated()
            } else {
                c
            }
        })
        .collect();
    let names: Vec<(String, String)> = edges
        .iter()
        .map(|&(a, b)| (format!("C{a}"), format!("C{b}")))
        .collect();
    let refs: Vec<(&str, &str)> = names.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    SystemGraph::from_components(comps, &refs).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn subsystem_matches_classification_and_ignores_outsiders(
        evaluated in prop::collection::vec(any::<bool>(), 2..7),
        raw_edges in prop::collection::vec((0usize..7, 0usize..7), 0..8),
        throughputs in prop::collection::vec(0.0f64..50.0, 7),
        outsider_value in 0.0f64..50.0,
    ) {
        let n = evaluated.len();
        let edges: Vec<(usize, usize)> = raw_edges
            .into_iter()
            .filter(|&(a, b)| a < n && b < n && a != b)
            .collect();
        let g = graph(&evaluated, &edges);
        let results: Vec<EvaluationResult> = (0..n)
            .map(|i| EvaluationResult::throughput(&format!("C{i}"), throughputs[i]).in_experiment("E"))
            .collect();

        let report = recombine(&g, &results, None).unwrap();
        prop_assert_eq!(&report.subsystem, &evaluated_connected(&g));
        let with_ref = recombine(&g, &results, Some("C0")).unwrap();
        prop_assert_eq!(&with_ref.subsystem, &evaluated_reference_connected(&g, "C0").unwrap());

        if let Some(outside) = (0..n).map(|i| format!("C{i}")).find(|id| !report.subsystem.contains(id)) {
            let mut more = results.clone();
            more.push(EvaluationResult::completeness(&outside, false).in_experiment("X"));
            more.push(EvaluationResult::throughput(&outside, outsider_value).in_experiment("X"));
            prop_assert_eq!(recombine(&g, &more, None).unwrap(), report);
        }
    }
}
