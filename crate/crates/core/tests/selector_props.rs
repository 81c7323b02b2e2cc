use doe_core::design_catalog::{
    fractional_factorial, full_factorial, plackett_burman, DesignClass, DesignMatrix,
};
use doe_core::design_selector::{
    check_consistency, filter_designs, plan_preset, required_principles, Axiom, Candidate,
    DesignRequirements, ExperimentalModel, Outcome, Preset, RuleId, Verdict,
};
use doe_core::factor_space::{Factor, FactorSpace};
use proptest::prelude::*;

#[test]
fn principles_truth_table() {
    for bits in 0..8u8 {
        let nd = bits & 1 != 0;
        let ctrl = bits & 2 != 0;
        let unctrl = bits & 4 != 0;
        let mut req = DesignRequirements::explicit(nd, false, 8);
        if ctrl {
            req = req.nuisance("operator", true);
        }
        if unctrl {
            req = req.nuisance("weather", false);
        }
        let p = required_principles(&req);
        assert_eq!((p.replication, p.blocking, p.randomization), (nd, ctrl, unctrl));
    }
}

fn models() -> Vec<ExperimentalModel> {
    vec![
        ExperimentalModel::main_effects(),
        ExperimentalModel::main_effects().confounding(false),
        ExperimentalModel::with_interactions(),
        ExperimentalModel::with_interactions().confounding(false),
    ]
}

fn corpus() -> Vec<Candidate> {
    let mut out = Vec::new();
    for k in [3usize, 5, 7, 11, 15, 19, 23] {
        out.push(Candidate::new(plackett_burman(k).unwrap()));
    }
    for (base, gens) in [
        (2usize, vec!["C=AB"]),
        (3, vec!["D=ABC"]),
        (3, vec!["D=AB", "E=AC"]),
        (4, vec!["E=ABCD"]),
        (5, vec!["F=ABCDE"]),
        (4, vec![]),
    ] {
        let (d, a) = fractional_factorial(base, &gens).unwrap();
        out.push(Candidate::with_alias(d, a));
    }
    out.push(Candidate::new(full_factorial(&[("A", 3), ("B", 2)]).unwrap()));
    out
}

#[test]
fn rejections_are_traced_and_pb_never_serves_interactions() {
    let cands = corpus();
    for model in models() {
        for max in [4usize, 16, 64] {
            let report = filter_designs(&cands, &DesignRequirements::explicit(true, false, max), &model);
            for (c, cand) in report.candidates.iter().zip(&cands) {
                if c.verdict == Verdict::Rejected {
                    assert!(c.trace.iter().any(|t| t.outcome == Outcome::Fail));
                }
                if cand.design.design_class == DesignClass::PlackettBurman
                    && model.effects == doe_core::design_selector::Effects::WithInteractions
                {
                    assert_eq!(c.verdict, Verdict::Rejected);
                }
                let consistent = check_consistency(&model, &cand.design, cand.alias.as_ref()).is_empty();
                let r2_failed = c.failed_rules().contains(&RuleId::R2);
                assert_eq!(consistent, !r2_failed);
            }
        }
    }
}

#[test]
fn disjointness_cited_for_pb() {
    for k in [3usize, 7, 11, 15, 19, 23] {
        let pb = plackett_burman(k).unwrap();
        for model in [
            ExperimentalModel::with_interactions(),
            ExperimentalModel::main_effects().confounding(false),
        ] {
            let found = check_consistency(&model, &pb, None);
            assert!(!found.is_empty());
            assert!(found.iter().any(|i| i.axioms.iter().any(Axiom::is_disjointness)));
        }
    }
}

fn binary_space(k: usize) -> FactorSpace {
    FactorSpace::new((0..k).map(|i| Factor::two_level(format!("M{i}"))).collect(), vec![]).unwrap()
}

proptest! {
    #[test]
    fn one_by_one_has_one_active_per_row(k in 1usize..12) {
        let d = plan_preset(Preset::OneByOne, &binary_space(k), None).unwrap();
        prop_assert_eq!(d.n_runs(), k);
        for (i, row) in d.rows.iter().enumerate() {
            prop_assert_eq!(row.iter().filter(|&&v| v == 1.0).count(), 1);
            prop_assert_eq!(row[i], 1.0);
        }
    }

    #[test]
    fn scenarios_respect_the_active_cap(k in 1usize..9) {
        let d = plan_preset(Preset::ScenarioCombinations, &binary_space(k), None).unwrap();
        let expected: usize = (0..=k.min(3)).map(|a| binomial(k, a)).sum();
        prop_assert_eq!(d.n_runs(), expected);
        prop_assert!((0..d.n_runs()).all(|i| d.active_count(i) <= 3));
    }

    #[test]
    fn budget_rule_is_inclusive(runs in 1usize..40, max in 1usize..40) {
        let d = DesignMatrix::new(
            vec!["A".into()],
            (0..runs).map(|i| vec![if i % 2 == 0 { -1.0 } else { 1.0 }]).collect(),
            DesignClass::FullFactorial,
        );
        let report = filter_designs(
            &[Candidate::new(d)],
            &DesignRequirements::explicit(false, false, max),
            &ExperimentalModel::main_effects(),
        );
        let r1_failed = report.candidates[0].failed_rules().contains(&RuleId::R1);
        prop_assert_eq!(r1_failed, runs > max);
    }
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}
