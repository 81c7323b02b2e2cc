//! Rule-based filtering of candidate designs against the experiment
//! description.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::design_catalog::{model_matrix, AliasStructure, DesignClass, DesignMatrix};

use super::consistency::{check_consistency, Axiom, Inconsistency};
use super::model::{DesignRequirements, ExperimentalModel};
use super::principles::{required_principles, RequiredPrinciples};

/// Largest column count for which block-column search enumerates products.
const BLOCK_SEARCH_MAX_FACTORS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum RuleId {
    R1,
    R2,
    R3,
    R4,
    R5,
}

impl RuleId {
    pub fn description(&self) -> &'static str {
        match self {
            RuleId::R1 => "experiment budget",
            RuleId::R2 => "confounding suitability",
            RuleId::R3 => "attributes per run",
            RuleId::R4 => "factor-level constraints favour optimal designs",
            RuleId::R5 => "support for required principles",
        }
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Fail,
    Note,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceEntry {
    pub rule: RuleId,
    pub outcome: Outcome,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub axioms: Vec<Axiom>,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub citation: String,
    pub reason: String,
}

impl TraceEntry {
    fn new(rule: RuleId, outcome: Outcome, axioms: Vec<Axiom>, reason: String) -> Self {
        let citation = axioms
            .iter()
            .map(|a| a.formula())
            .collect::<Vec<_>>()
            .join("; ");
        TraceEntry {
            rule,
            outcome,
            axioms,
            citation,
            reason,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Accepted,
    Rejected,
    Preferred,
}

impl Verdict {
    /// Accepted or preferred.
    pub fn is_admissible(&self) -> bool {
        !matches!(self, Verdict::Rejected)
    }
}

/// Whether a candidate can realise each required principle; `None` for
/// principles that are not required.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct PrincipleSupport {
    pub replication: Option<bool>,
    pub blocking: Option<bool>,
    pub randomization: Option<bool>,
}

impl PrincipleSupport {
    /// Required principles the design cannot realise.
    pub fn unsupported(&self) -> usize {
        [self.replication, self.blocking, self.randomization]
            .iter()
            .filter(|s| **s == Some(false))
            .count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub design: DesignMatrix,
    pub alias: Option<AliasStructure>,
}

impl Candidate {
    pub fn new(design: DesignMatrix) -> Self {
        Candidate {
            design,
            alias: None,
        }
    }

    pub fn with_alias(design: DesignMatrix, alias: AliasStructure) -> Self {
        Candidate {
            design,
            alias: Some(alias),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateReport {
    pub index: usize,
    pub design_class: DesignClass,
    pub n_runs: usize,
    pub verdict: Verdict,
    pub trace: Vec<TraceEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub support: Option<PrincipleSupport>,
}

impl CandidateReport {
    pub fn failed_rules(&self) -> Vec<RuleId> {
        self.trace
            .iter()
            .filter(|t| t.outcome == Outcome::Fail)
            .map(|t| t.rule)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReportedInconsistency {
    pub candidate: usize,
    #[serde(flatten)]
    pub inconsistency: Inconsistency,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionReport {
    pub principles: RequiredPrinciples,
    pub model: ExperimentalModel,
    pub candidates: Vec<CandidateReport>,
    pub inconsistencies: Vec<ReportedInconsistency>,
}

impl SelectionReport {
    pub fn admissible(&self) -> impl Iterator<Item = &CandidateReport> {
        self.candidates.iter().filter(|c| c.verdict.is_admissible())
    }

    pub fn any_admissible(&self) -> bool {
        self.admissible().next().is_some()
    }

    /// Admissible candidate ranked by: preferred first, fewest required
    /// principles it cannot realise, fewest runs, lowest index.
    pub fn best(&self) -> Option<&CandidateReport> {
        self.admissible().min_by_key(|c| {
            (
                c.verdict != Verdict::Preferred,
                c.support.as_ref().map_or(0, PrincipleSupport::unsupported),
                c.n_runs,
                c.index,
            )
        })
    }
}

/// Applies rules R1 to R5 in order to every candidate.
pub fn filter_designs(
    candidates: &[Candidate],
    req: &DesignRequirements,
    model: &ExperimentalModel,
) -> SelectionReport {
    let principles = required_principles(req);
    let mut reports = Vec::with_capacity(candidates.len());
    let mut inconsistencies = Vec::new();

    for (index, cand) in candidates.iter().enumerate() {
        let design = &cand.design;
        let mut trace = Vec::new();
        let mut rejected = false;

        let (limit, r1_axioms) = run_limit(req);
        let r1 = design.n_runs() <= limit;
        rejected |= !r1;
        trace.push(TraceEntry::new(
            RuleId::R1,
            if r1 { Outcome::Pass } else { Outcome::Fail },
            r1_axioms,
            format!(
                "{} runs {} the limit of {limit}",
                design.n_runs(),
                if r1 { "within" } else { "exceed" }
            ),
        ));

        let found = check_consistency(model, design, cand.alias.as_ref());
        if found.is_empty() {
            trace.push(TraceEntry::new(
                RuleId::R2,
                Outcome::Pass,
                Vec::new(),
                format!("{} design is consistent with a model of {model}", design.design_class),
            ));
        } else {
            rejected = true;
            for inc in &found {
                trace.push(TraceEntry::new(
                    RuleId::R2,
                    Outcome::Fail,
                    inc.axioms.clone(),
                    inc.description.clone(),
                ));
                inconsistencies.push(ReportedInconsistency {
                    candidate: index,
                    inconsistency: inc.clone(),
                });
            }
        }

        if let Some(cap) = req.max_attributes_per_run {
            let columns = attribute_columns(design, req.attribute_factors.as_ref());
            let worst = design
                .rows
                .iter()
                .enumerate()
                .map(|(r, row)| (r, columns.iter().filter(|&&j| row[j] == 1.0).count()))
                .max_by_key(|&(r, n)| (n, std::cmp::Reverse(r)));
            match worst {
                Some((r, n)) if n > cap => {
                    rejected = true;
                    trace.push(TraceEntry::new(
                        RuleId::R3,
                        Outcome::Fail,
                        vec![Axiom::AttributeCap],
                        format!("run {} activates {n} attributes, more than {cap}", r + 1),
                    ));
                }
                _ => trace.push(TraceEntry::new(
                    RuleId::R3,
                    Outcome::Pass,
                    vec![Axiom::AttributeCap],
                    format!("no run activates more than {cap} attributes"),
                )),
            }
        }

        let mut verdict = if rejected {
            Verdict::Rejected
        } else {
            Verdict::Accepted
        };
        if req.factor_level_constraint_count > 0 && design.design_class == DesignClass::DOptimal {
            let outcome = if rejected {
                Outcome::Note
            } else {
                verdict = Verdict::Preferred;
                Outcome::Pass
            };
            trace.push(TraceEntry::new(
                RuleId::R4,
                outcome,
                vec![Axiom::OptimalDesigns],
                format!(
                    "{} factor-level constraints favour an optimal design",
                    req.factor_level_constraint_count
                ),
            ));
        }

        let support = (!rejected).then(|| {
            let s = principle_support(design, req, model, &principles);
            trace.push(TraceEntry::new(
                RuleId::R5,
                Outcome::Note,
                principle_axioms(&principles),
                describe_support(&s),
            ));
            s
        });

        reports.push(CandidateReport {
            index,
            design_class: design.design_class,
            n_runs: design.n_runs(),
            verdict,
            trace,
            support,
        });
    }

    SelectionReport {
        principles,
        model: model.clone(),
        candidates: reports,
        inconsistencies,
    }
}

/// Inclusive run limit and the axioms it derives from.
fn run_limit(req: &DesignRequirements) -> (usize, Vec<Axiom>) {
    let human = req.subject.has_human_factor();
    match (human, req.max_experiments_per_experimentee, req.experimentee_count) {
        (true, Some(cap), Some(count)) => (
            req.max_experiments.min(cap.saturating_mul(count)),
            vec![Axiom::HumanFactorCap],
        ),
        (true, ..) => (req.max_experiments, vec![Axiom::HumanFactorCap]),
        _ => (req.max_experiments, Vec::new()),
    }
}

fn attribute_columns(design: &DesignMatrix, attributes: Option<&BTreeSet<String>>) -> Vec<usize> {
    (0..design.n_factors())
        .filter(|&j| attributes.is_none_or(|set| set.contains(&design.factor_names[j])))
        .collect()
}

fn principle_axioms(p: &RequiredPrinciples) -> Vec<Axiom> {
    let mut out = Vec::new();
    if p.replication {
        out.push(Axiom::Replication);
    }
    if p.blocking {
        out.push(Axiom::Blocking);
    }
    if p.randomization {
        out.push(Axiom::Randomization);
    }
    out
}

fn principle_support(
    design: &DesignMatrix,
    req: &DesignRequirements,
    model: &ExperimentalModel,
    p: &RequiredPrinciples,
) -> PrincipleSupport {
    PrincipleSupport {
        replication: p.replication.then(|| {
            has_repeated_row(design) || 2 * design.n_runs() <= req.max_experiments
        }),
        blocking: p.blocking.then(|| block_column(design, model).is_some()),
        randomization: p.randomization.then_some(design.n_runs() >= 2),
    }
}

fn has_repeated_row(design: &DesignMatrix) -> bool {
    let mut rows: Vec<&Vec<f64>> = design.rows.iter().collect();
    rows.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    rows.windows(2).any(|w| w[0] == w[1])
}

/// A product of two or more design columns usable as a two-block split:
/// balanced and orthogonal to every model term. Returns the column indices.
pub fn block_column(design: &DesignMatrix, model: &ExperimentalModel) -> Option<Vec<usize>> {
    let k = design.n_factors();
    if !(2..=BLOCK_SEARCH_MAX_FACTORS).contains(&k) || !design.is_two_level() || design.n_runs() < 2 {
        return None;
    }
    let x = model_matrix(design, model).ok()?;
    let mut subsets: Vec<u32> = (0u32..1 << k).filter(|s| s.count_ones() >= 2).collect();
    subsets.sort_by_key(|&s| (std::cmp::Reverse(s.count_ones()), s));
    subsets.into_iter().find_map(|s| {
        let cols: Vec<usize> = (0..k).filter(|j| s >> j & 1 == 1).collect();
        let block: Vec<f64> = design
            .rows
            .iter()
            .map(|row| cols.iter().map(|&j| row[j]).product())
            .collect();
        let balanced = block.iter().sum::<f64>().abs() < 1e-9;
        let orthogonal = (0..x.ncols()).all(|c| {
            x.column(c)
                .iter()
                .zip(&block)
                .map(|(a, b)| a * b)
                .sum::<f64>()
                .abs()
                < 1e-9
        });
        (balanced && orthogonal).then_some(cols)
    })
}

fn describe_support(s: &PrincipleSupport) -> String {
    let parts: Vec<String> = [
        ("replication", s.replication),
        ("blocking", s.blocking),
        ("randomization", s.randomization),
    ]
    .iter()
    .filter_map(|&(name, v)| {
        v.map(|ok| format!("{name} {}", if ok { "supported" } else { "not supported" }))
    })
    .collect();
    if parts.is_empty() {
        "no principles required".to_string()
    } else {
        parts.join(", ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design_catalog::{fractional_factorial, full_factorial, plackett_burman};

    fn ff(n: usize) -> DesignMatrix {
        let factors: Vec<(String, usize)> = (0..n).map(|i| (format!("F{i}"), 2)).collect();
        full_factorial(&factors).unwrap()
    }

    #[test]
    fn pb_rejected_for_interactions() {
        let report = filter_designs(
            &[Candidate::new(plackett_burman(11).unwrap())],
            &DesignRequirements::explicit(false, false, 64),
            &ExperimentalModel::with_interactions(),
        );
        let c = &report.candidates[0];
        assert_eq!(c.verdict, Verdict::Rejected);
        assert!(c.failed_rules().contains(&RuleId::R2));
        assert!(!report.inconsistencies.is_empty());
    }

    #[test]
    fn budget_rejects_full_factorial() {
        let report = filter_designs(
            &[Candidate::new(ff(5))],
            &DesignRequirements::explicit(false, false, 16),
            &ExperimentalModel::main_effects(),
        );
        assert_eq!(report.candidates[0].verdict, Verdict::Rejected);
        assert_eq!(report.candidates[0].failed_rules(), vec![RuleId::R1]);
    }

    #[test]
    fn budget_is_inclusive() {
        let report = filter_designs(
            &[Candidate::new(ff(4))],
            &DesignRequirements::explicit(false, false, 16),
            &ExperimentalModel::main_effects(),
        );
        assert_eq!(report.candidates[0].verdict, Verdict::Accepted);
    }

    #[test]
    fn per_experimentee_cap() {
        let mut req = DesignRequirements::explicit(true, true, 64);
        req.max_experiments_per_experimentee = Some(4);
        req.experimentee_count = Some(3);
        let report = filter_designs(
            &[Candidate::new(ff(4)), Candidate::new(ff(3))],
            &req,
            &ExperimentalModel::main_effects(),
        );
        assert_eq!(report.candidates[0].verdict, Verdict::Rejected);
        assert_eq!(report.candidates[1].verdict, Verdict::Accepted);
        assert!(report.candidates[0].trace[0].axioms.contains(&Axiom::HumanFactorCap));
    }

    #[test]
    fn d_optimal_preferred_under_constraints() {
        let mut d = ff(3);
        d.design_class = DesignClass::DOptimal;
        let mut req = DesignRequirements::explicit(false, false, 64);
        req.factor_level_constraint_count = 4;
        let report = filter_designs(
            &[Candidate::new(d), Candidate::new(ff(3))],
            &req,
            &ExperimentalModel::main_effects(),
        );
        assert_eq!(report.candidates[0].verdict, Verdict::Preferred);
        assert!(report.candidates[0].trace.iter().any(|t| t.rule == RuleId::R4));
        assert_eq!(report.candidates[1].verdict, Verdict::Accepted);
        assert_eq!(report.best().unwrap().index, 0);
    }

    #[test]
    fn best_prefers_supported_principles_then_fewer_runs() {
        // Eight distinct runs cannot be replicated within 12; a duplicated
        // 2^2 already is.
        let mut replicated = ff(2);
        replicated.rows.extend(ff(2).rows);
        let req = DesignRequirements::explicit(true, false, 12);
        let report = filter_designs(
            &[Candidate::new(ff(3)), Candidate::new(replicated.clone())],
            &req,
            &ExperimentalModel::main_effects(),
        );
        assert_eq!(report.candidates[0].support.as_ref().unwrap().unsupported(), 1);
        assert_eq!(report.best().unwrap().index, 1);

        let report = filter_designs(
            &[Candidate::new(replicated), Candidate::new(ff(2)), Candidate::new(ff(2))],
            &DesignRequirements::explicit(false, false, 64),
            &ExperimentalModel::main_effects(),
        );
        assert_eq!(report.best().unwrap().index, 1);
    }

    #[test]
    fn attribute_cap() {
        let mut req = DesignRequirements::explicit(false, false, 64);
        req.max_attributes_per_run = Some(2);
        let report = filter_designs(&[Candidate::new(ff(3))], &req, &ExperimentalModel::main_effects());
        let c = &report.candidates[0];
        assert_eq!(c.failed_rules(), vec![RuleId::R3]);
        assert!(c.trace.iter().any(|t| t.reason.contains("run 8")));

        req.attribute_factors = Some(["F0".to_string(), "F1".to_string()].into());
        let report = filter_designs(&[Candidate::new(ff(3))], &req, &ExperimentalModel::main_effects());
        assert_eq!(report.candidates[0].verdict, Verdict::Accepted);
    }

    #[test]
    fn resolution_three_trace_names_resolution() {
        let (d, a) = fractional_factorial(2, &["C=AB"]).unwrap();
        let report = filter_designs(
            &[Candidate::with_alias(d, a)],
            &DesignRequirements::explicit(false, false, 64),
            &ExperimentalModel::main_effects().confounding(false),
        );
        let c = &report.candidates[0];
        assert_eq!(c.verdict, Verdict::Rejected);
        assert!(c.trace.iter().any(|t| t.reason.contains("resolution III")));
    }

    #[test]
    fn principle_support_annotations() {
        let req = DesignRequirements::explicit(true, false, 64)
            .nuisance("operator", true)
            .nuisance("weather", false);
        let report = filter_designs(&[Candidate::new(ff(3))], &req, &ExperimentalModel::main_effects());
        let s = report.candidates[0].support.clone().unwrap();
        assert_eq!(s.replication, Some(true));
        assert_eq!(s.blocking, Some(true));
        assert_eq!(s.randomization, Some(true));
    }

    #[test]
    fn saturated_design_has_no_block_column() {
        let d = ff(2);
        assert_eq!(block_column(&d, &ExperimentalModel::with_interactions()), None);
        assert_eq!(
            block_column(&ff(3), &ExperimentalModel::with_interactions()),
            Some(vec![0, 1, 2])
        );
    }

    #[test]
    fn every_rejection_is_traced() {
        let report = filter_designs(
            &[Candidate::new(ff(6)), Candidate::new(plackett_burman(5).unwrap())],
            &DesignRequirements::explicit(false, false, 16),
            &ExperimentalModel::with_interactions().confounding(false),
        );
        for c in &report.candidates {
            assert_eq!(c.verdict, Verdict::Rejected);
            assert!(!c.failed_rules().is_empty());
        }
    }
}
