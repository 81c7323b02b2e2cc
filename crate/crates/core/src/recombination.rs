//! Aggregation of component-level evaluation results to a subsystem.
//!
//! Completeness of a subsystem is the conjunction of its members'
//! completeness; throughput is the minimum member throughput. Any member
//! without a result leaves the aggregate undetermined.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::system_model::{evaluated_connected, evaluated_reference_connected, SystemGraph};

pub const COMPLETENESS: &str = "completeness";
pub const THROUGHPUT: &str = "throughput";
/// Additive measures, which min/conjunction aggregation cannot combine.
pub const ADDITIVE_MEASURES: [&str; 2] = ["latency", "processing_time"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ResultValue {
    Flag(bool),
    Real(f64),
}

impl fmt::Display for ResultValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ResultValue::Flag(b) => write!(f, "{b}"),
            ResultValue::Real(x) => write!(f, "{x}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationResult {
    pub component_id: String,
    pub measure: String,
    pub value: ResultValue,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment_id: Option<String>,
}

impl EvaluationResult {
    pub fn completeness(component: &str, complete: bool) -> Self {
        Self::new(component, COMPLETENESS, ResultValue::Flag(complete))
    }

    pub fn throughput(component: &str, value: f64) -> Self {
        Self::new(component, THROUGHPUT, ResultValue::Real(value))
    }

    pub fn new(component: &str, measure: &str, value: ResultValue) -> Self {
        EvaluationResult {
            component_id: component.to_string(),
            measure: measure.to_string(),
            value,
            experiment_id: None,
        }
    }

    pub fn in_experiment(mut self, id: &str) -> Self {
        self.experiment_id = Some(id.to_string());
        self
    }
}

/// A value, or `undetermined` when some subsystem member has no result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Aggregate<T> {
    Known(T),
    Undetermined,
}

impl<T> Aggregate<T> {
    pub fn is_undetermined(&self) -> bool {
        matches!(self, Aggregate::Undetermined)
    }

    pub fn known(self) -> Option<T> {
        match self {
            Aggregate::Known(v) => Some(v),
            Aggregate::Undetermined => None,
        }
    }
}

impl<T: Serialize> Serialize for Aggregate<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Aggregate::Known(v) => v.serialize(s),
            Aggregate::Undetermined => s.serialize_str("undetermined"),
        }
    }
}

impl<T: fmt::Display> fmt::Display for Aggregate<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Aggregate::Known(v) => v.fmt(f),
            Aggregate::Undetermined => f.write_str("undetermined"),
        }
    }
}

fn values_of<'a>(
    subsystem: &'a BTreeSet<String>,
    results: &'a [EvaluationResult],
    measure: &'a str,
) -> impl Iterator<Item = &'a EvaluationResult> + 'a {
    results
        .iter()
        .filter(move |r| r.measure == measure && subsystem.contains(&r.component_id))
}

fn missing_members(
    subsystem: &BTreeSet<String>,
    results: &[EvaluationResult],
    measure: &str,
) -> BTreeSet<String> {
    let have: HashSet<&str> = values_of(subsystem, results, measure)
        .map(|r| r.component_id.as_str())
        .collect();
    subsystem
        .iter()
        .filter(|c| !have.contains(c.as_str()))
        .cloned()
        .collect()
}

/// Conjunction of completeness flags over `subsystem`. Several flags for one
/// component are all conjoined. An empty subsystem is undetermined.
pub fn aggregate_completeness(
    subsystem: &BTreeSet<String>,
    results: &[EvaluationResult],
) -> Result<Aggregate<bool>> {
    let mut all = true;
    for r in values_of(subsystem, results, COMPLETENESS) {
        match r.value {
            ResultValue::Flag(b) => all &= b,
            ResultValue::Real(_) => return Err(value_type(r)),
        }
    }
    if subsystem.is_empty() || !missing_members(subsystem, results, COMPLETENESS).is_empty() {
        return Ok(Aggregate::Undetermined);
    }
    Ok(Aggregate::Known(all))
}

/// Minimum throughput over `subsystem`. An empty subsystem is undetermined.
pub fn aggregate_throughput(
    subsystem: &BTreeSet<String>,
    results: &[EvaluationResult],
) -> Result<Aggregate<f64>> {
    let mut min = f64::INFINITY;
    for r in values_of(subsystem, results, THROUGHPUT) {
        match r.value {
            ResultValue::Real(x) if x.is_nan() || x < 0.0 => {
                return Err(Error::NegativeThroughput {
                    component: r.component_id.clone(),
                    value: x,
                })
            }
            ResultValue::Real(x) => min = min.min(x),
            ResultValue::Flag(_) => return Err(value_type(r)),
        }
    }
    if subsystem.is_empty() || !missing_members(subsystem, results, THROUGHPUT).is_empty() {
        return Ok(Aggregate::Undetermined);
    }
    Ok(Aggregate::Known(min))
}

/// Rejects measures without an aggregation rule.
pub fn check_measure(measure: &str) -> Result<()> {
    if measure == COMPLETENESS || measure == THROUGHPUT {
        Ok(())
    } else {
        Err(Error::UnsupportedAggregation(measure.to_string()))
    }
}

fn value_type(r: &EvaluationResult) -> Error {
    Error::ValueType {
        component: r.component_id.clone(),
        measure: r.measure.clone(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SkippedMeasure {
    pub measure: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsystemReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
    pub subsystem: BTreeSet<String>,
    pub completeness: Aggregate<bool>,
    pub throughput: Aggregate<f64>,
    /// Members lacking a result for at least one aggregated measure.
    pub missing: BTreeSet<String>,
    pub missing_by_measure: BTreeMap<String, BTreeSet<String>>,
    pub interaction_warning: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub skipped_measures: Vec<SkippedMeasure>,
}

impl SubsystemReport {
    pub fn any_undetermined(&self) -> bool {
        self.completeness.is_undetermined() || self.throughput.is_undetermined()
    }
}

/// Aggregates `results` over the evaluated-connected subsystem, or over the
/// part connected to `reference` when given. Results for components outside
/// the subsystem are ignored.
pub fn recombine(
    graph: &SystemGraph,
    results: &[EvaluationResult],
    reference: Option<&str>,
) -> Result<SubsystemReport> {
    let subsystem = match reference {
        Some(r) => evaluated_reference_connected(graph, r)?,
        None => evaluated_connected(graph),
    };
    let inside: Vec<EvaluationResult> = results
        .iter()
        .filter(|r| subsystem.contains(&r.component_id))
        .cloned()
        .collect();

    let mut seen = HashSet::new();
    for r in &inside {
        let exp = r.experiment_id.clone().unwrap_or_default();
        if !seen.insert((r.component_id.as_str(), r.measure.as_str(), exp.clone())) {
            return Err(Error::DuplicateResult {
                component: r.component_id.clone(),
                measure: r.measure.clone(),
                experiment: if exp.is_empty() { "-".into() } else { exp },
            });
        }
    }

    let skipped_measures = inside
        .iter()
        .filter_map(|r| check_measure(&r.measure).err().map(|e| (r.measure.clone(), e)))
        .collect::<BTreeMap<_, _>>()
        .into_iter()
        .map(|(measure, e)| SkippedMeasure {
            reason: if ADDITIVE_MEASURES.contains(&measure.as_str()) {
                format!("{e}: additive measures are not aggregated")
            } else {
                e.to_string()
            },
            measure,
        })
        .collect();

    let completeness = aggregate_completeness(&subsystem, &inside)?;
    let throughput = aggregate_throughput(&subsystem, &inside)?;
    let mut missing_by_measure = BTreeMap::new();
    for m in [COMPLETENESS, THROUGHPUT] {
        missing_by_measure.insert(m.to_string(), missing_members(&subsystem, &inside, m));
    }
    let missing = missing_by_measure.values().flatten().cloned().collect();

    Ok(SubsystemReport {
        reference: reference.map(str::to_string),
        interaction_warning: never_co_tested(&subsystem, &inside),
        subsystem,
        completeness,
        throughput,
        missing,
        missing_by_measure,
        skipped_measures,
    })
}

/// Whether some pair of members never shares an experiment id.
fn never_co_tested(subsystem: &BTreeSet<String>, results: &[EvaluationResult]) -> bool {
    let mut experiments: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for r in results {
        if let Some(e) = &r.experiment_id {
            experiments
                .entry(r.component_id.as_str())
                .or_default()
                .insert(e.as_str());
        }
    }
    let empty = BTreeSet::new();
    let members: Vec<&String> = subsystem.iter().collect();
    members.iter().enumerate().any(|(i, a)| {
        let ea = experiments.get(a.as_str()).unwrap_or(&empty);
        members[i + 1..].iter().any(|b| {
            let eb = experiments.get(b.as_str()).unwrap_or(&empty);
            ea.is_disjoint(eb)
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system_model::Component;

    fn set(ids: &[&str]) -> BTreeSet<String> {
        ids.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn completeness_examples() {
        let s = set(&["C1", "C2"]);
        let all_true = [
            EvaluationResult::completeness("C1", true),
            EvaluationResult::completeness("C2", true),
        ];
        assert_eq!(aggregate_completeness(&s, &all_true).unwrap(), Aggregate::Known(true));
        let one_false = [
            EvaluationResult::completeness("C1", true),
            EvaluationResult::completeness("C2", false),
        ];
        assert_eq!(aggregate_completeness(&s, &one_false).unwrap(), Aggregate::Known(false));
        let partial = [EvaluationResult::completeness("C1", true)];
        assert_eq!(aggregate_completeness(&s, &partial).unwrap(), Aggregate::Undetermined);
    }

    #[test]
    fn throughput_examples() {
        let s = set(&["C1", "C2", "C3"]);
        let r = [
            EvaluationResult::throughput("C1", 5.0),
            EvaluationResult::throughput("C2", 3.0),
            EvaluationResult::throughput("C3", 7.0),
        ];
        assert_eq!(aggregate_throughput(&s, &r).unwrap(), Aggregate::Known(3.0));
        assert_eq!(
            aggregate_throughput(&set(&["C1"]), &[EvaluationResult::throughput("C1", 4.2)]).unwrap(),
            Aggregate::Known(4.2)
        );
        assert_eq!(
            aggregate_throughput(&set(&["C1", "C2"]), &r[..1]).unwrap(),
            Aggregate::Undetermined
        );
    }

    #[test]
    fn negative_throughput() {
        let err = aggregate_throughput(&set(&["C1"]), &[EvaluationResult::throughput("C1", -1.0)])
            .unwrap_err();
        assert!(matches!(err, Error::NegativeThroughput { .. }));
    }

    #[test]
    fn wrong_value_type() {
        let r = [EvaluationResult::new("C1", THROUGHPUT, ResultValue::Flag(true))];
        assert!(matches!(
            aggregate_throughput(&set(&["C1"]), &r).unwrap_err(),
            Error::ValueType { .. }
        ));
    }

    #[test]
    fn additive_measures_unsupported() {
        assert_eq!(
            check_measure("latency").unwrap_err(),
            Error::UnsupportedAggregation("latency".into())
        );
    }

    fn chain() -> SystemGraph {
        SystemGraph::from_components(
            vec![
                Component::new("C1").evaluated(),
                Component::new("C2").evaluated(),
                Component::new("C3").evaluated(),
            ],
            &[("C1", "C2"), ("C2", "C3")],
        )
        .unwrap()
    }

    fn chain_results() -> Vec<EvaluationResult> {
        let mut r = Vec::new();
        for (c, t) in [("C1", 5.0), ("C2", 3.0), ("C3", 7.0)] {
            r.push(EvaluationResult::throughput(c, t).in_experiment(c));
            r.push(EvaluationResult::completeness(c, true).in_experiment(c));
        }
        r
    }

    #[test]
    fn chain_report() {
        let report = recombine(&chain(), &chain_results(), Some("C1")).unwrap();
        assert_eq!(report.subsystem, set(&["C1", "C2", "C3"]));
        assert_eq!(report.completeness, Aggregate::Known(true));
        assert_eq!(report.throughput, Aggregate::Known(3.0));
        assert!(report.interaction_warning);
        assert!(report.missing.is_empty());
    }

    #[test]
    fn co_tested_members_do_not_warn() {
        let results: Vec<_> = chain_results()
            .into_iter()
            .map(|r| r.in_experiment("E1"))
            .collect();
        assert!(!recombine(&chain(), &results, None).unwrap().interaction_warning);
    }

    #[test]
    fn excluded_pair_absent() {
        let g = SystemGraph::from_components(
            vec![
                Component::new("C1").evaluated(),
                Component::new("C2").evaluated(),
                Component::new("C3").evaluated(),
                Component::new("C4").evaluated(),
            ],
            &[("C1", "C2"), ("C3", "C4")],
        )
        .unwrap();
        let report = recombine(&g, &[], Some("C1")).unwrap();
        assert_eq!(report.subsystem, set(&["C1", "C2"]));
        assert_eq!(report.missing, set(&["C1", "C2"]));
        assert!(report.any_undetermined());
    }

    #[test]
    fn empty_subsystem() {
        let g = SystemGraph::from_components(vec![Component::new("C1")], &[]).unwrap();
        let report = recombine(&g, &[], None).unwrap();
        assert!(report.subsystem.is_empty());
        assert!(report.completeness.is_undetermined() && report.throughput.is_undetermined());
        assert!(!report.interaction_warning);
    }

    #[test]
    fn latency_is_skipped() {
        let mut r = chain_results();
        r.push(EvaluationResult::new("C2", "latency", ResultValue::Real(12.0)));
        let report = recombine(&chain(), &r, None).unwrap();
        assert_eq!(report.skipped_measures.len(), 1);
        assert!(report.skipped_measures[0].reason.contains("unsupported aggregation"));
        assert_eq!(report.throughput, Aggregate::Known(3.0));
    }

    #[test]
    fn duplicates_rejected() {
        let mut r = chain_results();
        r.push(EvaluationResult::throughput("C1", 1.0).in_experiment("C1"));
        assert!(matches!(
            recombine(&chain(), &r, None).unwrap_err(),
            Error::DuplicateResult { .. }
        ));
    }

    #[test]
    fn unknown_reference() {
        assert!(recombine(&chain(), &[], Some("C9")).is_err());
    }

    #[test]
    fn serialization() {
        let report = recombine(&chain(), &chain_results()[..2], None).unwrap();
        let json = serde_json::to_value(&report).unwrap();
        assert_eq!(json["completeness"], "undetermined");
        assert_eq!(json["throughput"], "undetermined");
        let r: EvaluationResult =
            serde_json::from_str(r#"{"component_id":"C1","measure":"completeness","value":true}"#)
                .unwrap();
        assert_eq!(r.value, ResultValue::Flag(true));
    }
}
