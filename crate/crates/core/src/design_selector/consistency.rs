//! Contradictions between the model declaration and the confounding status
//! of a chosen design.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::design_catalog::{model_matrix, AliasStructure, DesignClass, DesignMatrix, Resolution};

use super::model::{Effects, ExperimentalModel};

/// Rules of the design ontology that the selector enforces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axiom {
    NonDeterministicSystem,
    Replication,
    Blocking,
    Randomization,
    HumanFactorCap,
    AttributeCap,
    OptimalDesigns,
    PlackettBurmanSuitability,
    ModelDisjointness,
    ConfoundingDisjointness,
    ModelCovering,
}

impl Axiom {
    pub fn id(&self) -> &'static str {
        match self {
            Axiom::NonDeterministicSystem => "non_deterministic_system",
            Axiom::Replication => "doe_with_replication",
            Axiom::Blocking => "doe_with_blocking",
            Axiom::Randomization => "doe_with_randomization",
            Axiom::HumanFactorCap => "doe_suitable_for_human_factor",
            Axiom::AttributeCap => "attribute_cap",
            Axiom::OptimalDesigns => "optimal_designs",
            Axiom::PlackettBurmanSuitability => "plackett_burman_suitability",
            Axiom::ModelDisjointness => "model_disjointness",
            Axiom::ConfoundingDisjointness => "confounding_disjointness",
            Axiom::ModelCovering => "model_covering",
        }
    }

    pub fn formula(&self) -> &'static str {
        match self {
            Axiom::NonDeterministicSystem => {
                "NonDeterministicSystem ≡ ∃hasComponent.NonDeterministic"
            }
            Axiom::Replication => {
                "DoEWithReplication ≡ DoE ⊓ ∃hasSubjectOfExperiment.NonDeterministic"
            }
            Axiom::Blocking => "DoEWithBlocking ≡ DoE ⊓ ∃hasNuisanceFactor.Controllable",
            Axiom::Randomization => {
                "DoEWithRandomization ≡ DoE ⊓ ∃hasNuisanceFactor.Uncontrollable"
            }
            Axiom::HumanFactorCap => {
                "DoEsuitableForHumanFactor ≡ ∀DoE.hasNumberOfExperiments.<maximumNumberOfExperiments"
            }
            Axiom::AttributeCap => "hasActiveAttributes ≤ maximumNumberOfAttributes",
            Axiom::OptimalDesigns => "OptimalDesigns ⊑ DoEsuitableForFactorLevelConstraints",
            Axiom::PlackettBurmanSuitability => {
                "PlackettBurmannDesign ⊑ ∀isSuitableToModel.OnlyMainEffectsWithConfounding"
            }
            Axiom::ModelDisjointness => {
                "ModelWithInteractionEffects ⊓ ModelWithMainEffectsOnly ⊑ ⊥"
            }
            Axiom::ConfoundingDisjointness => "ConfoundingDesign ⊓ NoConfoundingDesign ⊑ ⊥",
            Axiom::ModelCovering => {
                "ExperimentalModel ⊑ ModelWithInteractionEffects ⊔ ModelWithMainEffectsOnly"
            }
        }
    }

    pub fn is_disjointness(&self) -> bool {
        matches!(self, Axiom::ModelDisjointness | Axiom::ConfoundingDisjointness)
    }
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.formula())
    }
}

impl Serialize for Axiom {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.id())
    }
}

/// Why a design cannot separate the effects a model needs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Confounding {
    /// Main effects partially aliased with two-factor interactions.
    PlackettBurman,
    /// Resolution III: main effects aliased with two-factor interactions.
    MainWithInteraction,
    /// Resolution IV: two-factor interactions aliased with each other.
    InteractionWithInteraction,
    /// Model matrix lacks full column rank.
    RankDeficient { rank: usize, parameters: usize },
}

impl fmt::Display for Confounding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Confounding::PlackettBurman => {
                f.write_str("Plackett-Burman design aliases main effects with interactions")
            }
            Confounding::MainWithInteraction => f.write_str(
                "resolution III design aliases main effects with two-factor interactions",
            ),
            Confounding::InteractionWithInteraction => f.write_str(
                "resolution IV design aliases two-factor interactions with each other",
            ),
            Confounding::RankDeficient { rank, parameters } => write!(
                f,
                "model matrix has rank {rank} for {parameters} parameters"
            ),
        }
    }
}

/// Confounding status of `design` with respect to `model`; `None` when the
/// design is a `NoConfoundingDesign` for that model.
pub fn confounding_status(
    design: &DesignMatrix,
    alias: Option<&AliasStructure>,
    model: &ExperimentalModel,
) -> Option<Confounding> {
    if design.design_class == DesignClass::PlackettBurman {
        return Some(Confounding::PlackettBurman);
    }
    if let Some(a) = alias {
        match a.resolution {
            Resolution::Finite(r) if r <= 3 => return Some(Confounding::MainWithInteraction),
            Resolution::Finite(4) if model.effects == Effects::WithInteractions => {
                return Some(Confounding::InteractionWithInteraction)
            }
            _ => {}
        }
    }
    let x = model_matrix(design, model).ok()?;
    let parameters = x.ncols();
    let rank = if x.nrows() == 0 {
        0
    } else {
        x.clone().svd(false, false).rank(1e-9 * x.nrows().max(1) as f64)
    };
    (rank < parameters).then_some(Confounding::RankDeficient { rank, parameters })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Inconsistency {
    /// Axioms whose joint assertion is unsatisfiable.
    pub axioms: Vec<Axiom>,
    pub description: String,
}

impl Inconsistency {
    pub fn cites(&self, axiom: Axiom) -> bool {
        self.axioms.contains(&axiom)
    }

    pub fn citation(&self) -> String {
        self.axioms
            .iter()
            .map(|a| a.formula())
            .collect::<Vec<_>>()
            .join("; ")
    }
}

/// Contradictions between the model's effect and confounding declarations
/// and the chosen design. Empty when consistent.
pub fn check_consistency(
    model: &ExperimentalModel,
    design: &DesignMatrix,
    alias: Option<&AliasStructure>,
) -> Vec<Inconsistency> {
    let mut out = Vec::new();
    if let Err(e) = model_matrix(design, model) {
        out.push(Inconsistency {
            axioms: vec![Axiom::ModelCovering],
            description: format!("model does not fit the design columns: {e}"),
        });
        return out;
    }
    let status = confounding_status(design, alias, model);

    if model.effects == Effects::WithInteractions {
        match status {
            Some(Confounding::PlackettBurman) => out.push(Inconsistency {
                axioms: vec![Axiom::PlackettBurmanSuitability, Axiom::ModelDisjointness],
                description: "Plackett-Burman designs suit only main-effects models with \
                              confounding, but the model declares interaction effects"
                    .into(),
            }),
            Some(Confounding::MainWithInteraction) => out.push(Inconsistency {
                axioms: vec![Axiom::ModelDisjointness],
                description: "resolution III design only supports a main-effects model, \
                              but the model declares interaction effects"
                    .into(),
            }),
            _ => {}
        }
    }
    if !model.confounding_allowed {
        if let Some(c) = &status {
            out.push(Inconsistency {
                axioms: vec![Axiom::ConfoundingDisjointness],
                description: format!(
                    "model forbids confounding, but the {} design confounds: {c}",
                    design.design_class
                ),
            });
        }
    }
    out
}
