//! The plan document: one JSON file bundling the system graph, factor
//! space, requirements, experimental model and optional results.

use std::collections::BTreeSet;

use doe_core::design_selector::{DesignRequirements, ExperimentalModel, NuisanceFactor, Subject};
use doe_core::factor_space::{find_lineage_cycle, propagate_exclusions, Factor, FactorRole, FactorSpace, LevelConstraint};
use doe_core::recombination::EvaluationResult;
use doe_core::system_model::{Component, SystemGraph};
use doe_core::Error as CoreError;
use serde::{Deserialize, Serialize};

use crate::diagnostics::Diagnostic;

pub const DOCUMENT_VERSION: u32 = 1;

/// Subject of the experiment: the `system` section, or explicit flags.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SubjectDoc {
    Named(String),
    Explicit {
        non_deterministic: bool,
        #[serde(default)]
        human_factor: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RequirementsDoc {
    pub subject: SubjectDoc,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub nuisance_factors: Vec<NuisanceFactor>,
    pub max_experiments: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_experiments_per_experimentee: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experimentee_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_attributes_per_run: Option<usize>,
    /// Factors counted against `max_attributes_per_run`. Defaults to the
    /// human-visible factors, or every design factor when none is marked.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attribute_factors: Option<BTreeSet<String>>,
    /// Scenario ids interpreted correctly in a prior step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correctly_interpreted: Option<Vec<String>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    #[serde(default)]
    components: Vec<Component>,
    #[serde(default)]
    connected_to: Vec<(String, String)>,
    #[serde(default)]
    derived_from: Vec<(String, String)>,
    #[serde(default)]
    artifacts: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFactorSpace {
    factors: Vec<Factor>,
    #[serde(default)]
    constraints: Vec<LevelConstraint>,
    #[serde(default)]
    lineage: Vec<(String, String)>,
    #[serde(default)]
    base_exclusions: Vec<(String, String)>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPlan {
    version: u32,
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    system: Option<RawSystem>,
    factor_space: RawFactorSpace,
    requirements: RequirementsDoc,
    model: ExperimentalModel,
    #[serde(default)]
    results: Option<Vec<EvaluationResult>>,
}

/// A validated plan document. Serializes back to an equivalent document.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanDocument {
    pub version: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemGraph>,
    pub factor_space: FactorSpace,
    pub requirements: RequirementsDoc,
    pub model: ExperimentalModel,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub results: Option<Vec<EvaluationResult>>,
}

/// Token to anchor a core error on, if the error names one.
fn needle(err: &CoreError) -> Option<&str> {
    match err {
        CoreError::DuplicateId(id)
        | CoreError::SelfLoop(id)
        | CoreError::HumanFactorDeterministic(id)
        | CoreError::UnknownReference(id)
        | CoreError::UnknownFactor(id) => Some(id),
        CoreError::DanglingEndpoint { endpoint, .. } => Some(endpoint),
        CoreError::InvalidFactor { factor, .. } => Some(factor),
        CoreError::LineageCycle(nodes) => nodes.first().map(String::as_str),
        CoreError::NegativeThroughput { component, .. }
        | CoreError::ValueType { component, .. }
        | CoreError::DuplicateResult { component, .. } => Some(component),
        _ => None,
    }
}

fn core_diag(text: &str, section: &str, err: &CoreError) -> Diagnostic {
    Diagnostic::at(text, Some(section), needle(err), format!("{section}: {err}"))
}

impl PlanDocument {
    /// Parses and validates `text`, returning every problem found.
    pub fn parse(text: &str) -> Result<Self, Vec<Diagnostic>> {
        let raw: RawPlan = serde_json::from_str(text).map_err(|e| {
            vec![Diagnostic::new(e.line().max(1), e.column().max(1), e.to_string())]
        })?;
        let mut diags = Vec::new();

        if raw.version != DOCUMENT_VERSION {
            diags.push(Diagnostic::at(
                text,
                Some("version"),
                None,
                format!("unsupported version {}; expected {DOCUMENT_VERSION}", raw.version),
            ));
        }

        let system = raw.system.and_then(|s| {
            SystemGraph::new(s.components, s.connected_to, s.derived_from, s.artifacts)
                .map_err(|e| diags.push(core_diag(text, "system", &e)))
                .ok()
        });

        let fs = raw.factor_space;
        for (a, b) in &fs.base_exclusions {
            if a == b {
                diags.push(Diagnostic::at(
                    text,
                    Some("base_exclusions"),
                    Some(a),
                    format!("factor_space: artifact `{a}` cannot exclude itself"),
                ));
            }
        }
        let space = FactorSpace::new(fs.factors, fs.constraints)
            .map(|s| s.with_lineage(fs.lineage, fs.base_exclusions))
            .map_err(|e| diags.push(core_diag(text, "factor_space", &e)))
            .ok();

        let doc_requirements = raw.requirements;
        let model = raw.model;
        let results = raw.results;

        if let Some(space) = &space {
            let merged = merged_lineage(space, system.as_ref());
            if let Some(cycle) = find_lineage_cycle(&merged) {
                let section = if space.lineage().iter().any(|(d, _)| *d == cycle[0]) {
                    "lineage"
                } else {
                    "derived_from"
                };
                diags.push(Diagnostic::at(
                    text,
                    Some(section),
                    Some(&cycle[0]),
                    CoreError::LineageCycle(cycle.clone()).to_string(),
                ));
            }
            let columns = space.column_names();
            if let Some(list) = &model.factors {
                for f in list.iter().filter(|f| !columns.contains(f)) {
                    diags.push(Diagnostic::at(
                        text,
                        Some("model"),
                        Some(f),
                        format!("model: unknown design factor `{f}`"),
                    ));
                }
            }
            if let Some(list) = &doc_requirements.attribute_factors {
                for f in list.iter().filter(|f| !columns.contains(f)) {
                    diags.push(Diagnostic::at(
                        text,
                        Some("attribute_factors"),
                        Some(f),
                        format!("requirements: unknown design factor `{f}`"),
                    ));
                }
            }
        }

        match &doc_requirements.subject {
            SubjectDoc::Named(s) if s != "system" => diags.push(Diagnostic::at(
                text,
                Some("subject"),
                Some(s),
                format!("requirements: subject must be \"system\" or explicit flags, got `{s}`"),
            )),
            SubjectDoc::Named(_) if system.is_none() => diags.push(Diagnostic::at(
                text,
                Some("subject"),
                None,
                "requirements: subject \"system\" needs a valid system section",
            )),
            _ => {}
        }

        if let Some(results) = &results {
            match &system {
                None => diags.push(Diagnostic::at(
                    text,
                    Some("results"),
                    None,
                    "results: component ids need a system section",
                )),
                Some(g) => {
                    for r in results.iter().filter(|r| g.component(&r.component_id).is_none()) {
                        diags.push(Diagnostic::at(
                            text,
                            Some("results"),
                            Some(&r.component_id),
                            format!("results: unknown component `{}`", r.component_id),
                        ));
                    }
                }
            }
        }

        let (Some(space), true) = (space, diags.is_empty()) else {
            return Err(diags);
        };
        let doc = PlanDocument {
            version: raw.version,
            name: raw.name,
            system,
            factor_space: space,
            requirements: doc_requirements,
            model,
            results,
        };
        if let Err(e) = doc.requirements().validate() {
            return Err(vec![Diagnostic::at(
                text,
                Some("requirements"),
                None,
                format!("requirements: {e}"),
            )]);
        }
        Ok(doc)
    }

    /// Factor-space lineage followed by the system's `derived_from` pairs.
    pub fn lineage(&self) -> Vec<(String, String)> {
        merged_lineage(&self.factor_space, self.system.as_ref())
    }

    /// Mutual exclusions propagated along the merged lineage.
    pub fn exclusions(&self) -> doe_core::Result<BTreeSet<(String, String)>> {
        let space = self
            .factor_space
            .clone()
            .with_lineage(self.lineage(), self.factor_space.base_exclusions().to_vec());
        propagate_exclusions(&space)
    }

    pub fn requirements(&self) -> DesignRequirements {
        let r = &self.requirements;
        let subject = match (&r.subject, &self.system) {
            (SubjectDoc::Explicit { non_deterministic, human_factor }, _) => Subject::Explicit {
                non_deterministic: *non_deterministic,
                human_factor: *human_factor,
            },
            (SubjectDoc::Named(_), Some(g)) => Subject::Graph(g.clone()),
            (SubjectDoc::Named(_), None) => unreachable!("validated: named subject has a system"),
        };
        let mut nuisance = r.nuisance_factors.clone();
        for f in self.factor_space.factors() {
            let controllable = match f.role {
                FactorRole::Design => continue,
                FactorRole::NuisanceControllable => true,
                FactorRole::NuisanceUncontrollable => false,
            };
            if !nuisance.iter().any(|n| n.name == f.name) {
                nuisance.push(NuisanceFactor {
                    name: f.name.clone(),
                    controllable,
                });
            }
        }
        let visible: BTreeSet<String> = self
            .factor_space
            .design_factors()
            .filter(|f| f.human_visible)
            .map(|f| f.name.clone())
            .collect();
        DesignRequirements {
            subject,
            nuisance_factors: nuisance,
            max_experiments: r.max_experiments,
            max_experiments_per_experimentee: r.max_experiments_per_experimentee,
            experimentee_count: r.experimentee_count,
            max_attributes_per_run: r.max_attributes_per_run,
            attribute_factors: r
                .attribute_factors
                .clone()
                .or((!visible.is_empty()).then_some(visible)),
            factor_level_constraint_count: self.factor_space.constraints().len(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plan document serializes");
        s.push('\n');
        s
    }
}

fn merged_lineage(space: &FactorSpace, system: Option<&SystemGraph>) -> Vec<(String, String)> {
    let mut out = space.lineage().to_vec();
    if let Some(g) = system {
        for pair in g.derived_from() {
            if !out.contains(pair) {
                out.push(pair.clone());
            }
        }
    }
    out
}
