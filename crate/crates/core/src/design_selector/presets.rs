//! Research-question presets over two-level indicator factors.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::design_catalog::{DesignClass, DesignMatrix};
use crate::error::{Error, Result};
use crate::factor_space::{feasible_combinations, full_factorial_count, ConstraintKind, FactorSpace};

/// Upper bound on simultaneously active indicators in a scenario.
pub const MAX_CONCURRENT_INDICATORS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Each indicator alone.
    OneByOne,
    /// Every assignment of each declared pairwise relation.
    PairwiseConsistency,
    /// Feasible combinations with few active indicators.
    ScenarioCombinations,
    /// Scenarios whose ids were interpreted correctly in a prior step.
    Prioritisation,
}

impl Preset {
    pub const ALL: [Preset; 4] = [
        Preset::OneByOne,
        Preset::PairwiseConsistency,
        Preset::ScenarioCombinations,
        Preset::Prioritisation,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Preset::OneByOne => "one_by_one",
            Preset::PairwiseConsistency => "pairwise_consistency",
            Preset::ScenarioCombinations => "scenario_combinations",
            Preset::Prioritisation => "prioritisation",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| {
                let known: Vec<&str> = Preset::ALL.iter().map(|p| p.as_str()).collect();
                Error::InvalidArgument(format!(
                    "unknown preset '{s}'; expected one of {}",
                    known.join(", ")
                ))
            })
    }
}

/// Scenario id of a level assignment: active factor names joined by `+`,
/// or `none`.
pub fn scenario_id(names: &[String], active: &[bool]) -> String {
    let on: Vec<&str> = names
        .iter()
        .zip(active)
        .filter(|(_, &a)| a)
        .map(|(n, _)| n.as_str())
        .collect();
    if on.is_empty() {
        "none".to_string()
    } else {
        on.join("+")
    }
}

fn coded(active: bool) -> f64 {
    if active {
        1.0
    } else {
        -1.0
    }
}

/// Builds the run list for `preset`. `prior` is the list of correctly
/// interpreted scenario ids, required by [`Preset::Prioritisation`].
pub fn plan_preset(
    preset: Preset,
    space: &FactorSpace,
    prior: Option<&[String]>,
) -> Result<DesignMatrix> {
    if let Some(f) = space.design_factors().find(|f| f.levels.len() != 2) {
        return Err(Error::InvalidFactor {
            factor: f.name.clone(),
            reason: format!("preset {preset} needs two-level indicators"),
        });
    }
    let names = space.column_names();
    let k = names.len();
    match preset {
        Preset::OneByOne => {
            let rows = (0..k)
                .map(|i| (0..k).map(|j| coded(i == j)).collect())
                .collect();
            let mut d = DesignMatrix::new(names.clone(), rows, DesignClass::OneFactorAtATime);
            d.run_labels = Some(names);
            Ok(d)
        }
        Preset::PairwiseConsistency => pairwise(space, names),
        Preset::ScenarioCombinations => scenarios(space, names),
        Preset::Prioritisation => {
            let prior = prior.ok_or(Error::MissingPriorList)?;
            let all = scenarios(space, names)?;
            let labels = all.run_labels.clone().unwrap_or_default();
            let keep: Vec<usize> = (0..all.n_runs())
                .filter(|&i| prior.contains(&labels[i]))
                .collect();
            let mut d = all.clone();
            d.rows = keep.iter().map(|&i| all.rows[i].clone()).collect();
            d.run_labels = Some(keep.iter().map(|&i| labels[i].clone()).collect());
            d.removed_rows = all.removed_rows + all.n_runs() - keep.len();
            for id in prior {
                if !labels.contains(id) {
                    d.warnings
                        .push(format!("prior scenario '{id}' is not a feasible scenario"));
                }
            }
            Ok(d)
        }
    }
}

fn scenarios(space: &FactorSpace, names: Vec<String>) -> Result<DesignMatrix> {
    let feasible = feasible_combinations(space)?;
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for combo in &feasible.combinations {
        let active: Vec<bool> = combo.iter().map(|&l| l == 1).collect();
        if active.iter().filter(|&&a| a).count() > MAX_CONCURRENT_INDICATORS {
            continue;
        }
        rows.push(active.iter().map(|&a| coded(a)).collect());
        labels.push(scenario_id(&names, &active));
    }
    let total = full_factorial_count(space) as usize;
    let mut d = DesignMatrix::new(names, rows, DesignClass::FullFactorial);
    d.removed_rows = total - d.n_runs();
    d.run_labels = Some(labels);
    Ok(d)
}

fn pairwise(space: &FactorSpace, names: Vec<String>) -> Result<DesignMatrix> {
    let k = names.len();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for c in space.constraints() {
        let pairs: Vec<(usize, usize)> = match c.kind {
            ConstraintKind::AtMostKActive { .. } => continue,
            ConstraintKind::Excludes => {
                let n = c.operands.len();
                (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect()
            }
            _ => vec![(0, 1)],
        };
        for (a, b) in pairs {
            let ops = [&c.operands[a], &c.operands[b]];
            let mut cols = [0usize; 2];
            let mut active_level = [1usize; 2];
            for (slot, op) in ops.iter().enumerate() {
                cols[slot] = names
                    .iter()
                    .position(|n| *n == op.factor)
                    .ok_or_else(|| Error::UnknownFactor(op.factor.clone()))?;
                let f = space.factor(&op.factor).expect("column factor exists");
                if let Some(level) = &op.level {
                    active_level[slot] = f
                        .levels
                        .iter()
                        .position(|l| l == level)
                        .ok_or_else(|| Error::UnknownReference(format!("{}={level}", op.factor)))?;
                }
            }
            let relation = if matches!(c.kind, ConstraintKind::Excludes) {
                format!("excludes({}, {})", ops[0], ops[1])
            } else {
                c.to_string()
            };
            for (la, lb) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                let active = [la == active_level[0], lb == active_level[1]];
                let holds = match c.kind {
                    ConstraintKind::Excludes => !(active[0] && active[1]),
                    kind => kind.holds(&active),
                };
                let mut row = vec![-1.0; k];
                row[cols[0]] = coded(la == 1);
                row[cols[1]] = coded(lb == 1);
                rows.push(row);
                labels.push(format!(
                    "{relation} [{}={}, {}={}] {}",
                    ops[0].factor,
                    if la == 1 { "+1" } else { "-1" },
                    ops[1].factor,
                    if lb == 1 { "+1" } else { "-1" },
                    if holds { "satisfies" } else { "probe" }
                ));
            }
        }
    }
    let mut d = DesignMatrix::new(names, rows, DesignClass::RelationProbe);
    d.run_labels = Some(labels);
    if d.rows.is_empty() {
        d.warnings
            .push("no pairwise relations declared".to_string());
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor_space::{Factor, LevelConstraint};

    fn space(n: usize, constraints: Vec<LevelConstraint>) -> FactorSpace {
        let factors = (0..n)
            .map(|i| Factor::two_level(((b'A' + i as u8) as char).to_string()))
            .collect();
        FactorSpace::new(factors, constraints).unwrap()
    }

    #[test]
    fn one_by_one_three() {
        let d = plan_preset(Preset::OneByOne, &space(3, vec![]), None).unwrap();
        assert_eq!(
            d.rows,
            vec![
                vec![1.0, -1.0, -1.0],
                vec![-1.0, 1.0, -1.0],
                vec![-1.0, -1.0, 1.0]
            ]
        );
    }

    #[test]
    fn one_by_one_ignores_constraints() {
        let s = space(3, vec![LevelConstraint::implies("A", "B")]);
        let d = plan_preset(Preset::OneByOne, &s, None).unwrap();
        assert_eq!(d.n_runs(), 3);
    }

    #[test]
    fn scenarios_with_implication() {
        let s = space(5, vec![LevelConstraint::implies("A", "B")]);
        let d = plan_preset(Preset::ScenarioCombinations, &s, None).unwrap();
        assert!(d.n_runs() <= 26);
        for (i, row) in d.rows.iter().enumerate() {
            assert!(d.active_count(i) <= 3);
            assert!(row[0] != 1.0 || row[1] == 1.0);
        }
        // 24 feasible, minus ABCD, ABCE, ABDE, BCDE and ABCDE
        assert_eq!(d.n_runs(), 24 - 5);
        assert_eq!(d.run_labels.as_ref().unwrap()[0], "none");
    }

    #[test]
    fn prioritisation() {
        let s = space(3, vec![]);
        assert_eq!(
            plan_preset(Preset::Prioritisation, &s, None).unwrap_err(),
            Error::MissingPriorList
        );
        let d = plan_preset(Preset::Prioritisation, &s, Some(&[])).unwrap();
        assert_eq!(d.n_runs(), 0);
        let prior = vec!["A+C".to_string(), "B".to_string(), "Z".to_string()];
        let d = plan_preset(Preset::Prioritisation, &s, Some(&prior)).unwrap();
        assert_eq!(d.run_labels.unwrap(), vec!["B", "A+C"]);
        assert_eq!(d.warnings.len(), 1);
    }

    #[test]
    fn pairwise_keeps_probes() {
        let s = space(
            3,
            vec![
                LevelConstraint::implies("A", "B"),
                LevelConstraint::at_most_k_active(2, &["A", "B", "C"]),
            ],
        );
        let d = plan_preset(Preset::PairwiseConsistency, &s, None).unwrap();
        assert_eq!(d.n_runs(), 4);
        let labels = d.run_labels.unwrap();
        assert_eq!(labels.iter().filter(|l| l.ends_with("probe")).count(), 1);
        assert!(labels[2].contains("A=+1, B=-1") && labels[2].ends_with("probe"));
        assert!(d.rows.iter().all(|r| r[2] == -1.0));
    }

    #[test]
    fn rejects_multi_level() {
        let s = FactorSpace::new(vec![Factor::with_levels("A", ["x", "y", "z"])], vec![]).unwrap();
        assert!(plan_preset(Preset::OneByOne, &s, None).is_err());
    }

    #[test]
    fn parse() {
        assert_eq!("one_by_one".parse::<Preset>().unwrap(), Preset::OneByOne);
        assert!("two_by_two".parse::<Preset>().is_err());
    }
}
