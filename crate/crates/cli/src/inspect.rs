//! `doe classify` and `doe aggregate`.

use std::collections::BTreeSet;
use std::path::Path;

use doe_core::recombination::{recombine, EvaluationResult, ResultValue, SubsystemReport};
use doe_core::system_model::{
    classify as classify_components, classify_system, evaluated_connected, ComponentLabel,
    SystemGraph, SystemLabel,
};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::args::{AggregateArgs, ClassifyArgs};
use crate::document::PlanDocument;
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantitativeSet {
    pub measure: String,
    pub threshold: f64,
    pub components: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassifyReport {
    pub system: SystemLabel,
    pub evaluated: BTreeSet<String>,
    pub evaluated_connected: BTreeSet<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evaluated_reference_connected: Option<BTreeSet<String>>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub quantitatively_evaluated: Vec<QuantitativeSet>,
    pub components: BTreeMap<String, Vec<ComponentLabel>>,
}

fn system(doc: &PlanDocument) -> Result<&SystemGraph, CliError> {
    doc.system
        .as_ref()
        .ok_or_else(|| CliError::Usage("the document has no system section".into()))
}

pub fn classify(doc: &PlanDocument, args: &ClassifyArgs) -> Result<ClassifyReport, CliError> {
    let graph = system(doc)?;
    if args.measures.len() != args.thresholds.len() {
        return Err(CliError::Usage(format!(
            "{} --measure values but {} --threshold values",
            args.measures.len(),
            args.thresholds.len()
        )));
    }
    let thresholds: Vec<(String, f64)> = args
        .measures
        .iter()
        .cloned()
        .zip(args.thresholds.iter().copied())
        .collect();
    let labels = classify_components(graph, args.reference.as_deref(), &thresholds)?;
    let with = |pred: &dyn Fn(&ComponentLabel) -> bool| -> BTreeSet<String> {
        labels
            .components
            .iter()
            .filter(|(_, ls)| ls.iter().any(pred))
            .map(|(id, _)| id.clone())
            .collect()
    };
    let evaluated = with(&|l| matches!(l, ComponentLabel::Evaluated));
    let reference_set = args.reference.as_ref().map(|_| {
        with(&|l| matches!(l, ComponentLabel::EvaluatedReferenceConnected { .. }))
    });
    let quantitatively_evaluated = thresholds
        .iter()
        .map(|(m, t)| QuantitativeSet {
            measure: m.clone(),
            threshold: *t,
            components: with(&|l| {
                matches!(l, ComponentLabel::QuantitativelyEvaluated { measure, threshold }
                    if measure == m && threshold == t)
            }),
        })
        .collect();
    Ok(ClassifyReport {
        system: classify_system(graph),
        evaluated,
        evaluated_connected: evaluated_connected(graph),
        reference: args.reference.clone(),
        evaluated_reference_connected: reference_set,
        quantitatively_evaluated,
        components: labels.components,
    })
}

#[derive(Debug, Deserialize)]
struct ResultRow {
    component_id: String,
    measure: String,
    value: String,
    #[serde(default)]
    experiment_id: Option<String>,
}

/// Reads `component_id,measure,value[,experiment_id]` rows; `true`/`false`
/// values are flags, everything else must parse as a number.
pub fn read_results_csv(path: &Path) -> Result<Vec<EvaluationResult>, CliError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| CliError::csv(path, e))?;
    let mut out = Vec::new();
    for (i, row) in reader.deserialize::<ResultRow>().enumerate() {
        let row = row.map_err(|e| CliError::csv(path, e))?;
        let value = match row.value.trim() {
            "true" => ResultValue::Flag(true),
            "false" => ResultValue::Flag(false),
            v => ResultValue::Real(v.parse().map_err(|_| {
                CliError::Usage(format!(
                    "{}: row {}: value `{v}` is neither a flag nor a number",
                    path.display(),
                    i + 2
                ))
            })?),
        };
        let mut r = EvaluationResult::new(&row.component_id, &row.measure, value);
        if let Some(e) = row.experiment_id.filter(|e| !e.is_empty()) {
            r = r.in_experiment(&e);
        }
        out.push(r);
    }
    Ok(out)
}

pub fn aggregate(doc: &PlanDocument, args: &AggregateArgs) -> Result<SubsystemReport, CliError> {
    let graph = system(doc)?;
    let results = match &args.results {
        Some(path) => read_results_csv(path)?,
        None => doc.results.clone().unwrap_or_default(),
    };
    if results.is_empty() {
        return Err(CliError::Usage("no evaluation results to aggregate".into()));
    }
    Ok(recombine(graph, &results, args.reference.as_deref())?)
}
