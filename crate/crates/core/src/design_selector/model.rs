use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::system_model::{classify_system, SystemGraph, SystemLabel};

/// Exactly one of the two model kinds applies to any experimental model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Effects {
    MainOnly,
    WithInteractions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Response {
    #[default]
    Continuous,
    Binary,
    Multinomial,
    Count,
}

fn default_target() -> String {
    "response".to_string()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentalModel {
    pub effects: Effects,
    pub confounding_allowed: bool,
    #[serde(default)]
    pub response: Response,
    #[serde(default = "default_target")]
    pub target_variable: String,
    /// Factors entering the model; all design factors when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factors: Option<Vec<String>>,
}

impl ExperimentalModel {
    pub fn main_effects() -> Self {
        ExperimentalModel {
            effects: Effects::MainOnly,
            confounding_allowed: true,
            response: Response::Continuous,
            target_variable: default_target(),
            factors: None,
        }
    }

    pub fn with_interactions() -> Self {
        ExperimentalModel {
            effects: Effects::WithInteractions,
            ..Self::main_effects()
        }
    }

    pub fn confounding(mut self, allowed: bool) -> Self {
        self.confounding_allowed = allowed;
        self
    }

    pub fn over<S: Into<String>>(mut self, factors: impl IntoIterator<Item = S>) -> Self {
        self.factors = Some(factors.into_iter().map(Into::into).collect());
        self
    }
}

impl fmt::Display for ExperimentalModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let effects = match self.effects {
            Effects::MainOnly => "main effects only",
            Effects::WithInteractions => "main effects and interactions",
        };
        let conf = if self.confounding_allowed {
            "confounding allowed"
        } else {
            "no confounding"
        };
        write!(f, "{effects}, {conf}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Subject {
    Graph(SystemGraph),
    Explicit {
        non_deterministic: bool,
        human_factor: bool,
    },
}

impl Subject {
    pub fn is_non_deterministic(&self) -> bool {
        match self {
            Subject::Graph(g) => classify_system(g) == SystemLabel::NonDeterministic,
            Subject::Explicit {
                non_deterministic, ..
            } => *non_deterministic,
        }
    }

    pub fn has_human_factor(&self) -> bool {
        match self {
            Subject::Graph(g) => g.has_human_factor(),
            Subject::Explicit { human_factor, .. } => *human_factor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NuisanceFactor {
    pub name: String,
    pub controllable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignRequirements {
    pub subject: Subject,
    pub nuisance_factors: Vec<NuisanceFactor>,
    pub max_experiments: usize,
    pub max_experiments_per_experimentee: Option<usize>,
    /// Number of experimentees; the per-experimentee cap only applies when
    /// this is known.
    pub experimentee_count: Option<usize>,
    pub max_attributes_per_run: Option<usize>,
    /// Factors counted against `max_attributes_per_run`; every design
    /// column when absent.
    pub attribute_factors: Option<BTreeSet<String>>,
    pub factor_level_constraint_count: usize,
}

impl DesignRequirements {
    pub fn new(subject: Subject, max_experiments: usize) -> Self {
        DesignRequirements {
            subject,
            nuisance_factors: Vec::new(),
            max_experiments,
            max_experiments_per_experimentee: None,
            experimentee_count: None,
            max_attributes_per_run: None,
            attribute_factors: None,
            factor_level_constraint_count: 0,
        }
    }

    pub fn explicit(non_deterministic: bool, human_factor: bool, max_experiments: usize) -> Self {
        Self::new(
            Subject::Explicit {
                non_deterministic,
                human_factor,
            },
            max_experiments,
        )
    }

    pub fn nuisance(mut self, name: &str, controllable: bool) -> Self {
        self.nuisance_factors.push(NuisanceFactor {
            name: name.to_string(),
            controllable,
        });
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_experiments == 0 {
            return Err(Error::InvalidArgument("max_experiments must be >= 1".into()));
        }
        if let Some(cap) = self.max_experiments_per_experimentee {
            if cap == 0 || cap > self.max_experiments {
                return Err(Error::InvalidArgument(format!(
                    "max_experiments_per_experimentee {cap} must be in 1..={}",
                    self.max_experiments
                )));
            }
        }
        if let Subject::Explicit {
            non_deterministic: false,
            human_factor: true,
        } = self.subject
        {
            return Err(Error::InvalidArgument(
                "a subject with a human factor is non-deterministic".into(),
            ));
        }
        Ok(())
    }
}
