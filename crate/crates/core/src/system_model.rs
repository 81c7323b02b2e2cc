//! Decomposed system as a typed component graph, with the classification
//! rules for non-determinism, evaluated and connected components, and
//! quantitative thresholds.
//!
//! `connected_to` edges are stored as given but always read symmetrically,
//! and connectivity queries use their transitive closure. Two distinct
//! components are therefore "connected" exactly when they share a connected
//! component of the undirected graph. Interior vertices of a connecting path
//! are not required to be evaluated; only the endpoints are.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "ComponentDoc")]
pub struct Component {
    pub id: String,
    pub deterministic: bool,
    pub human_factor: bool,
    pub evaluated: bool,
    /// Measure name to value. Units are not interpreted.
    pub measures: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub complete: Option<bool>,
}

#[derive(Deserialize)]
struct ComponentDoc {
    id: String,
    #[serde(default)]
    deterministic: Option<bool>,
    #[serde(default)]
    human_factor: bool,
    #[serde(default)]
    evaluated: bool,
    #[serde(default)]
    measures: BTreeMap<String, f64>,
    #[serde(default)]
    complete: Option<bool>,
}

impl From<ComponentDoc> for Component {
    fn from(doc: ComponentDoc) -> Self {
        Component {
            // Human-factor components default to non-deterministic.
            deterministic: doc.deterministic.unwrap_or(!doc.human_factor),
            id: doc.id,
            human_factor: doc.human_factor,
            evaluated: doc.evaluated,
            measures: doc.measures,
            complete: doc.complete,
        }
    }
}

impl Component {
    pub fn new(id: impl Into<String>) -> Self {
        Component {
            id: id.into(),
            deterministic: true,
            human_factor: false,
            evaluated: false,
            measures: BTreeMap::new(),
            complete: None,
        }
    }

    pub fn evaluated(mut self) -> Self {
        self.evaluated = true;
        self
    }

    pub fn non_deterministic(mut self) -> Self {
        self.deterministic = false;
        self
    }

    pub fn human_factor(mut self) -> Self {
        self.human_factor = true;
        self.deterministic = false;
        self
    }

    pub fn with_measure(mut self, name: impl Into<String>, value: f64) -> Self {
        self.measures.insert(name.into(), value);
        self
    }
}

/// Components plus connectivity and data-lineage edges.
///
/// Always well-formed: construction (including deserialization) rejects
/// duplicate ids, dangling endpoints, self-loops and human-factor components
/// marked deterministic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SystemGraphDoc", into = "SystemGraphDoc")]
pub struct SystemGraph {
    components: Vec<Component>,
    connected_to: Vec<(String, String)>,
    derived_from: Vec<(String, String)>,
    artifacts: BTreeSet<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct SystemGraphDoc {
    #[serde(default)]
    components: Vec<Component>,
    #[serde(default)]
    connected_to: Vec<(String, String)>,
    #[serde(default)]
    derived_from: Vec<(String, String)>,
    #[serde(default)]
    artifacts: BTreeSet<String>,
}

impl TryFrom<SystemGraphDoc> for SystemGraph {
    type Error = Error;

    fn try_from(doc: SystemGraphDoc) -> Result<Self> {
        SystemGraph::new(doc.components, doc.connected_to, doc.derived_from, doc.artifacts)
    }
}

impl From<SystemGraph> for SystemGraphDoc {
    fn from(g: SystemGraph) -> Self {
        SystemGraphDoc {
            components: g.components,
            connected_to: g.connected_to,
            derived_from: g.derived_from,
            artifacts: g.artifacts,
        }
    }
}

impl SystemGraph {
    pub fn new(
        components: Vec<Component>,
        connected_to: Vec<(String, String)>,
        derived_from: Vec<(String, String)>,
        artifacts: impl IntoIterator<Item = String>,
    ) -> Result<Self> {
        let artifacts: BTreeSet<String> = artifacts.into_iter().collect();
        let mut index = HashMap::with_capacity(components.len());
        for (i, c) in components.iter().enumerate() {
            if index.insert(c.id.clone(), i).is_some() {
                return Err(Error::DuplicateId(c.id.clone()));
            }
            if c.human_factor && c.deterministic {
                return Err(Error::HumanFactorDeterministic(c.id.clone()));
            }
        }
        for a in &artifacts {
            if index.contains_key(a) {
                return Err(Error::DuplicateId(a.clone()));
            }
        }
        for (a, b) in &connected_to {
            for end in [a, b] {
                if !index.contains_key(end) {
                    return Err(Error::DanglingEndpoint {
                        edge: format!("connected_to({a}, {b})"),
                        endpoint: end.clone(),
                    });
                }
            }
            if a == b {
                return Err(Error::SelfLoop(a.clone()));
            }
        }
        for (a, b) in &derived_from {
            for end in [a, b] {
                if !index.contains_key(end) && !artifacts.contains(end) {
                    return Err(Error::DanglingEndpoint {
                        edge: format!("derived_from({a}, {b})"),
                        endpoint: end.clone(),
                    });
                }
            }
        }
        Ok(SystemGraph {
            components,
            connected_to,
            derived_from,
            artifacts,
            index,
        })
    }

    /// Graph with components and connections only.
    pub fn from_components(
        components: Vec<Component>,
        connected_to: &[(&str, &str)],
    ) -> Result<Self> {
        let edges = connected_to
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect();
        SystemGraph::new(components, edges, Vec::new(), Vec::new())
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn component(&self, id: &str) -> Option<&Component> {
        self.index.get(id).map(|&i| &self.components[i])
    }

    pub fn connected_to(&self) -> &[(String, String)] {
        &self.connected_to
    }

    /// `(derived, source)` lineage pairs.
    pub fn derived_from(&self) -> &[(String, String)] {
        &self.derived_from
    }

    pub fn artifacts(&self) -> &BTreeSet<String> {
        &self.artifacts
    }

    pub fn has_human_factor(&self) -> bool {
        self.components.iter().any(|c| c.human_factor)
    }

    /// Connected-component label of every component, by index.
    fn clusters(&self) -> Vec<usize> {
        let n = self.components.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for (a, b) in &self.connected_to {
            let (ra, rb) = (
                find(&mut parent, self.index[a]),
                find(&mut parent, self.index[b]),
            );
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
        (0..n).map(|i| find(&mut parent, i)).collect()
    }

    /// True when `a` and `b` are joined under the symmetric transitive
    /// closure of `connected_to`. A component reaches itself.
    pub fn reachable(&self, a: &str, b: &str) -> bool {
        match (self.index.get(a), self.index.get(b)) {
            (Some(&i), Some(&j)) => {
                let c = self.clusters();
                c[i] == c[j]
            }
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemLabel {
    Deterministic,
    NonDeterministic,
}

impl fmt::Display for SystemLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SystemLabel::Deterministic => f.write_str("Deterministic"),
            SystemLabel::NonDeterministic => f.write_str("NonDeterministic"),
        }
    }
}

/// `NonDeterministicSystem ≡ ∃hasComponent.NonDeterministic`.
pub fn classify_system(graph: &SystemGraph) -> SystemLabel {
    if graph.components.iter().any(|c| !c.deterministic) {
        SystemLabel::NonDeterministic
    } else {
        SystemLabel::Deterministic
    }
}

/// Evaluated components with at least one distinct evaluated partner
/// reachable over `connected_to`.
pub fn evaluated_connected(graph: &SystemGraph) -> BTreeSet<String> {
    let clusters = graph.clusters();
    let mut evaluated_per_cluster: HashMap<usize, usize> = HashMap::new();
    for (i, c) in graph.components.iter().enumerate() {
        if c.evaluated {
            *evaluated_per_cluster.entry(clusters[i]).or_default() += 1;
        }
    }
    graph
        .components
        .iter()
        .enumerate()
        .filter(|(i, c)| c.evaluated && evaluated_per_cluster[&clusters[*i]] >= 2)
        .map(|(_, c)| c.id.clone())
        .collect()
}

/// The members of [`evaluated_connected`] that reach `reference`.
pub fn evaluated_reference_connected(
    graph: &SystemGraph,
    reference: &str,
) -> Result<BTreeSet<String>> {
    let &r = graph
        .index
        .get(reference)
        .ok_or_else(|| Error::UnknownReference(reference.to_string()))?;
    let clusters = graph.clusters();
    Ok(evaluated_connected(graph)
        .into_iter()
        .filter(|id| clusters[graph.index[id]] == clusters[r])
        .collect())
}

/// Evaluated components whose `measure` is strictly above `threshold`.
pub fn quantitatively_evaluated(
    graph: &SystemGraph,
    measure: &str,
    threshold: f64,
) -> BTreeSet<String> {
    graph
        .components
        .iter()
        .filter(|c| c.evaluated && c.measures.get(measure).is_some_and(|&v| v > threshold))
        .map(|c| c.id.clone())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "label", rename_all = "snake_case")]
pub enum ComponentLabel {
    Evaluated,
    EvaluatedConnected,
    EvaluatedReferenceConnected { reference: String },
    QuantitativelyEvaluated { measure: String, threshold: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentClassification {
    pub system: SystemLabel,
    pub components: BTreeMap<String, Vec<ComponentLabel>>,
}

impl ComponentClassification {
    pub fn has(&self, id: &str, label: &ComponentLabel) -> bool {
        self.components
            .get(id)
            .is_some_and(|labels| labels.contains(label))
    }
}

/// Runs every classification rule and collects the labels per component.
pub fn classify(
    graph: &SystemGraph,
    reference: Option<&str>,
    thresholds: &[(String, f64)],
) -> Result<ComponentClassification> {
    let connected = evaluated_connected(graph);
    let ref_connected = match reference {
        Some(r) => Some((r, evaluated_reference_connected(graph, r)?)),
        None => None,
    };
    let quantitative: Vec<_> = thresholds
        .iter()
        .map(|(m, t)| (m, *t, quantitatively_evaluated(graph, m, *t)))
        .collect();

    let mut components = BTreeMap::new();
    for c in &graph.components {
        let mut labels = Vec::new();
        if c.evaluated {
            labels.push(ComponentLabel::Evaluated);
        }
        if connected.contains(&c.id) {
            labels.push(ComponentLabel::EvaluatedConnected);
        }
        if let Some((r, set)) = &ref_connected {
            if set.contains(&c.id) {
                labels.push(ComponentLabel::EvaluatedReferenceConnected {
                    reference: r.to_string(),
                });
            }
        }
        for (m, t, set) in &quantitative {
            if set.contains(&c.id) {
                labels.push(ComponentLabel::QuantitativelyEvaluated {
                    measure: m.to_string(),
                    threshold: *t,
                });
            }
        }
        components.insert(c.id.clone(), labels);
    }
    Ok(ComponentClassification {
        system: classify_system(graph),
        components,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(ids: &[&str]) -> BTreeSet<String> {
        ids.iter().map(|s| s.to_string()).collect()
    }

    fn disjoint_pairs() -> SystemGraph {
        SystemGraph::from_components(
            ["C1", "C2", "C3", "C4", "C5"]
                .into_iter()
                .map(|id| Component::new(id).evaluated())
                .collect(),
            &[("C1", "C2"), ("C4", "C5")],
        )
        .unwrap()
    }

    #[test]
    fn system_label() {
        let det = SystemGraph::from_components(
            vec![Component::new("C1"), Component::new("C2")],
            &[],
        )
        .unwrap();
        assert_eq!(classify_system(&det), SystemLabel::Deterministic);

        let hf = SystemGraph::from_components(
            vec![Component::new("C1"), Component::new("UI").human_factor()],
            &[("C1", "UI")],
        )
        .unwrap();
        assert_eq!(classify_system(&hf), SystemLabel::NonDeterministic);

        let empty = SystemGraph::from_components(vec![], &[]).unwrap();
        assert_eq!(classify_system(&empty), SystemLabel::Deterministic);
    }

    #[test]
    fn rejects_malformed_graphs() {
        let err = SystemGraph::from_components(vec![Component::new("C1")], &[("C1", "C9")])
            .unwrap_err();
        assert!(err.to_string().contains("C9"));

        let err =
            SystemGraph::from_components(vec![Component::new("C1")], &[("C1", "C1")]).unwrap_err();
        assert_eq!(err, Error::SelfLoop("C1".into()));

        let err = SystemGraph::from_components(
            vec![Component::new("C1"), Component::new("C1")],
            &[],
        )
        .unwrap_err();
        assert_eq!(err, Error::DuplicateId("C1".into()));

        let mut ui = Component::new("UI");
        ui.human_factor = true;
        let err = SystemGraph::from_components(vec![ui], &[]).unwrap_err();
        assert!(matches!(err, Error::HumanFactorDeterministic(_)));

        let err = SystemGraph::new(
            vec![Component::new("C1")],
            vec![],
            vec![("MSI_A".into(), "AIS_1".into())],
            vec!["MSI_A".to_string()],
        )
        .unwrap_err();
        assert!(err.to_string().contains("AIS_1"));
    }

    #[test]
    fn evaluated_connected_examples() {
        let chain = SystemGraph::from_components(
            ["C1", "C2", "C3"]
                .into_iter()
                .map(|id| Component::new(id).evaluated())
                .collect(),
            &[("C1", "C2"), ("C2", "C3")],
        )
        .unwrap();
        assert_eq!(evaluated_connected(&chain), set(&["C1", "C2", "C3"]));

        assert_eq!(
            evaluated_connected(&disjoint_pairs()),
            set(&["C1", "C2", "C4", "C5"])
        );

        let single =
            SystemGraph::from_components(vec![Component::new("C1").evaluated()], &[]).unwrap();
        assert!(evaluated_connected(&single).is_empty());
    }

    #[test]
    fn reference_connected_examples() {
        let g = disjoint_pairs();
        assert_eq!(
            evaluated_reference_connected(&g, "C1").unwrap(),
            set(&["C1", "C2"])
        );

        // reference sits on the path but is not evaluated itself
        let g = SystemGraph::from_components(
            vec![
                Component::new("C1").evaluated(),
                Component::new("C2"),
                Component::new("C3").evaluated(),
            ],
            &[("C1", "C2"), ("C2", "C3")],
        )
        .unwrap();
        assert_eq!(
            evaluated_reference_connected(&g, "C2").unwrap(),
            set(&["C1", "C3"])
        );

        let g = SystemGraph::from_components(
            vec![Component::new("C1"), Component::new("C2")],
            &[("C1", "C2")],
        )
        .unwrap();
        assert!(evaluated_reference_connected(&g, "C1").unwrap().is_empty());

        assert_eq!(
            evaluated_reference_connected(&g, "C7").unwrap_err(),
            Error::UnknownReference("C7".into())
        );
    }

    #[test]
    fn quantitative_threshold_is_strict() {
        let g = |evaluated: bool, v: f64| {
            let mut c = Component::new("C1").with_measure("throughput", v);
            c.evaluated = evaluated;
            SystemGraph::from_components(vec![c], &[]).unwrap()
        };
        assert_eq!(
            quantitatively_evaluated(&g(true, 5.0), "throughput", 3.0),
            set(&["C1"])
        );
        assert!(quantitatively_evaluated(&g(true, 3.0), "throughput", 3.0).is_empty());
        assert!(quantitatively_evaluated(&g(false, 5.0), "throughput", 3.0).is_empty());
        assert!(quantitatively_evaluated(&g(true, 5.0), "latency", 3.0).is_empty());
    }

    #[test]
    fn classification_labels_nest() {
        let g = disjoint_pairs();
        let cls = classify(&g, Some("C4"), &[]).unwrap();
        assert_eq!(cls.system, SystemLabel::Deterministic);
        let reference = ComponentLabel::EvaluatedReferenceConnected {
            reference: "C4".into(),
        };
        assert!(cls.has("C5", &reference));
        assert!(cls.has("C5", &ComponentLabel::EvaluatedConnected));
        assert!(!cls.has("C1", &reference));
        assert!(cls.has("C3", &ComponentLabel::Evaluated));
        assert!(!cls.has("C3", &ComponentLabel::EvaluatedConnected));
    }

    #[test]
    fn human_factor_defaults_to_non_deterministic_in_json() {
        let g: SystemGraph = serde_json::from_str(
            r#"{"components":[{"id":"UI","human_factor":true},{"id":"C1"}],
                "connected_to":[["C1","UI"]]}"#,
        )
        .unwrap();
        assert!(!g.component("UI").unwrap().deterministic);
        assert!(g.component("C1").unwrap().deterministic);

        let bad = serde_json::from_str::<SystemGraph>(
            r#"{"components":[{"id":"C1"}],"connected_to":[["C1","C9"]]}"#,
        );
        assert!(bad.unwrap_err().to_string().contains("C9"));
    }
}
