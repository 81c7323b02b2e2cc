use serde::Serialize;

use super::model::DesignRequirements;

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct RequiredPrinciples {
    pub replication: bool,
    pub blocking: bool,
    pub blocking_factors: Vec<String>,
    pub randomization: bool,
    pub randomization_factors: Vec<String>,
}

/// Replication for a non-deterministic subject, blocking on controllable
/// nuisance factors, randomization against uncontrollable ones.
pub fn required_principles(req: &DesignRequirements) -> RequiredPrinciples {
    let (controllable, uncontrollable): (Vec<_>, Vec<_>) =
        req.nuisance_factors.iter().partition(|n| n.controllable);
    RequiredPrinciples {
        replication: req.subject.is_non_deterministic(),
        blocking: !controllable.is_empty(),
        blocking_factors: controllable.iter().map(|n| n.name.clone()).collect(),
        randomization: !uncontrollable.is_empty(),
        randomization_factors: uncontrollable.iter().map(|n| n.name.clone()).collect(),
    }
}
