//! Candidate generation, selection and output for `doe plan`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use doe_core::design_catalog::{
    auto_generators, d_optimal_search, fractional_factorial, full_factorial_of_space,
    latin_hypercube, model_terms, FACTOR_LETTERS, plackett_burman, DOptimalOptions, DesignClass, DesignMatrix,
};
use doe_core::design_selector::{
    block_column, filter_designs, plan_preset, required_principles, Candidate, DesignRequirements,
    Effects, ExperimentalModel, Preset, SelectionReport, Verdict,
};
use doe_core::factor_space::{feasible_combinations, prune_matrix, FactorSpace};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::args::{DesignArg, PlanArgs};
use crate::document::PlanDocument;
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SkippedDesign {
    pub design_class: DesignClass,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    pub seed: u64,
    /// Index of the written `design.csv` candidate.
    pub selected: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub skipped: Vec<SkippedDesign>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub exclusions: BTreeMap<String, Vec<String>>,
    #[serde(flatten)]
    pub selection: SelectionReport,
}

#[derive(Debug)]
pub struct PlanOutcome {
    pub report: PlanReport,
    pub candidates: Vec<Candidate>,
    pub files: Vec<PathBuf>,
}

/// Inclusive run budget, including the per-experimentee cap when it applies.
fn run_limit(req: &DesignRequirements) -> usize {
    match (
        req.subject.has_human_factor(),
        req.max_experiments_per_experimentee,
        req.experimentee_count,
    ) {
        (true, Some(cap), Some(n)) => req.max_experiments.min(cap.saturating_mul(n)),
        _ => req.max_experiments,
    }
}

fn target_resolution(model: &ExperimentalModel) -> u32 {
    match (model.effects, model.confounding_allowed) {
        (Effects::WithInteractions, _) => 5,
        (Effects::MainOnly, false) => 4,
        (Effects::MainOnly, true) => 3,
    }
}

fn rename(mut design: DesignMatrix, names: &[String]) -> DesignMatrix {
    design.factor_names = names.to_vec();
    design
}

fn require_two_level(space: &FactorSpace, class: DesignClass) -> Result<(), String> {
    match space.design_factors().find(|f| f.levels.len() != 2) {
        Some(f) => Err(format!("{class} needs two-level factors; `{}` has {} levels", f.name, f.levels.len())),
        None => Ok(()),
    }
}

fn fractional(
    space: &FactorSpace,
    model: &ExperimentalModel,
    limit: usize,
    generators: Option<&[String]>,
) -> Result<Candidate, String> {
    require_two_level(space, DesignClass::FractionalFactorial)?;
    let names = space.column_names();
    let k = names.len();
    let (base, gens) = match generators {
        Some(g) => {
            if g.len() >= k {
                return Err(format!("{} generators leave no base factors among {k}", g.len()));
            }
            (k - g.len(), g.to_vec())
        }
        None => {
            let target = target_resolution(model);
            let feasible: Vec<usize> = (1..k)
                // 2^b runs hold at most 2^b - 1 two-level factors.
                .filter(|&b| (1usize << b) > k)
                .collect();
            let Some(&smallest) = feasible.first() else {
                return Err(format!("{k} factors admit no proper two-level fraction"));
            };
            let mut choice = None;
            for &b in &feasible {
                let (g, r) = auto_generators(k, b).map_err(|e| e.to_string())?;
                if r.at_least(target) && (1usize << b) <= limit {
                    choice = Some((b, g));
                    break;
                }
            }
            let (b, g) = match choice {
                Some(c) => c,
                None => {
                    let b = feasible
                        .iter()
                        .rev()
                        .find(|&&b| (1usize << b) <= limit)
                        .copied()
                        .unwrap_or(smallest);
                    (b, auto_generators(k, b).map_err(|e| e.to_string())?.0)
                }
            };
            (b, g)
        }
    };
    let refs: Vec<&str> = gens.iter().map(String::as_str).collect();
    let (design, alias) = fractional_factorial(base, &refs).map_err(|e| e.to_string())?;
    if design.n_factors() != k {
        return Err(format!(
            "generators define {} factors, the factor space has {k}",
            design.n_factors()
        ));
    }
    let mut design = rename(design, &names);
    let pruned = prune_matrix(&design, space).map_err(|e| e.to_string())?;
    if pruned.removed_rows > 0 {
        design = pruned;
        design.warnings.push(
            "constraint pruning broke the regular fraction; alias structure omitted".to_string(),
        );
        Ok(Candidate::new(design))
    } else {
        Ok(Candidate::with_alias(pruned, alias))
    }
}

fn d_optimal(
    space: &FactorSpace,
    model: &ExperimentalModel,
    req: &DesignRequirements,
    args: &PlanArgs,
) -> Result<Candidate, String> {
    let names = space.column_names();
    let feasible = feasible_combinations(space).map_err(|e| e.to_string())?;
    if feasible.count == 0 {
        return Err("no feasible level combination to select from".into());
    }
    let rows = feasible.combinations.iter().map(|c| space.coded(c)).collect();
    let cands = DesignMatrix::new(names.clone(), rows, DesignClass::FullFactorial);
    let p = model_terms(&names, model).map_err(|e| e.to_string())?.len();
    let replicate = required_principles(req).replication;
    let runs = args.runs.unwrap_or_else(|| {
        let wanted = if replicate { 2 * p } else { p };
        wanted.min(run_limit(req)).max(p)
    });
    let result = d_optimal_search(&cands, model, runs, args.seed, args.restarts, &DOptimalOptions::default())
        .map_err(|e| e.to_string())?;
    Ok(Candidate::new(result.design))
}

fn generate(
    class: DesignArg,
    doc: &PlanDocument,
    req: &DesignRequirements,
    args: &PlanArgs,
) -> Result<Candidate, String> {
    let space = &doc.factor_space;
    let names = space.column_names();
    if names.is_empty() {
        return Err("the factor space has no design factors".into());
    }
    let limit = run_limit(req);
    match class {
        DesignArg::FullFactorial => {
            let d = full_factorial_of_space(space).map_err(|e| e.to_string())?;
            prune_matrix(&d, space).map(Candidate::new).map_err(|e| e.to_string())
        }
        DesignArg::FractionalFactorial => fractional(space, &doc.model, limit, args.generators.as_deref()),
        DesignArg::PlackettBurman => {
            require_two_level(space, DesignClass::PlackettBurman)?;
            let d = rename(plackett_burman(names.len()).map_err(|e| e.to_string())?, &names);
            prune_matrix(&d, space).map(Candidate::new).map_err(|e| e.to_string())
        }
        DesignArg::DOptimal => d_optimal(space, &doc.model, req, args),
        DesignArg::LatinHypercube => {
            let runs = args.runs.unwrap_or(limit.min(10 * names.len()).max(2));
            let mut d = rename(
                latin_hypercube(names.len(), runs, args.seed).map_err(|e| e.to_string())?,
                &names,
            );
            d.warnings
                .push("continuous design in [0, 1); factor-level constraints not applied".into());
            Ok(Candidate::new(d))
        }
    }
}

/// Generates, filters and writes the plan. Errors are reserved for I/O and
/// invalid requests; an empty accepted set is a normal outcome.
pub fn plan(doc: &PlanDocument, args: &PlanArgs) -> Result<PlanOutcome, CliError> {
    let req = doc.requirements();
    let mut candidates = Vec::new();
    let mut skipped = Vec::new();

    let preset = args.preset.map(Preset::from);
    if let Some(p) = preset {
        let prior = args
            .correct
            .as_deref()
            .or(doc.requirements.correctly_interpreted.as_deref());
        candidates.push(Candidate::new(plan_preset(p, &doc.factor_space, prior)?));
    } else {
        let explicit = !args.designs.is_empty();
        let mut classes = if explicit {
            args.designs.clone()
        } else {
            DesignArg::DEFAULT.to_vec()
        };
        classes.dedup();
        for class in classes {
            match generate(class, doc, &req, args) {
                Ok(c) => candidates.push(c),
                Err(reason) if explicit => {
                    return Err(CliError::Usage(format!("{}: {reason}", class.class())))
                }
                Err(reason) => skipped.push(SkippedDesign {
                    design_class: class.class(),
                    reason,
                }),
            }
        }
    }

    let selection = filter_designs(&candidates, &req, &doc.model);
    let selected = selection.best().map(|c| c.index);
    let mut exclusions: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (a, b) in doc.exclusions()? {
        exclusions.entry(a).or_default().push(b);
    }
    let report = PlanReport {
        preset,
        seed: args.seed,
        selected,
        skipped,
        exclusions,
        selection,
    };
    let files = write_outputs(doc, args, &req, &candidates, &report)?;
    Ok(PlanOutcome {
        report,
        candidates,
        files,
    })
}

#[derive(Serialize)]
struct CandidateMeta<'a> {
    index: usize,
    verdict: Verdict,
    design_class: DesignClass,
    n_runs: usize,
    factor_names: &'a [String],
    factor_levels: BTreeMap<&'a str, &'a [String]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    generator_words: Option<&'a [String]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alias_structure: Option<&'a doe_core::design_catalog::AliasStructure>,
    #[serde(skip_serializing_if = "Option::is_none")]
    letters: Option<BTreeMap<String, &'a str>>,
    removed_rows: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    block_factors: Option<Vec<&'a str>>,
    randomized: bool,
    warnings: &'a [String],
    #[serde(skip_serializing_if = "Option::is_none")]
    run_labels: Option<&'a [String]>,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Seeded run order, 1-based.
fn run_order(n: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (1..=n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    order
}

fn write_csv(
    path: &Path,
    design: &DesignMatrix,
    block: Option<&[usize]>,
    order: Option<&[usize]>,
) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::csv(path, e))?;
    let mut header = vec!["run".to_string()];
    if block.is_some() {
        header.push("block".into());
    }
    if order.is_some() {
        header.push("order".into());
    }
    header.extend(design.factor_names.iter().cloned());
    if design.run_labels.is_some() {
        header.push("label".into());
    }
    w.write_record(&header).map_err(|e| CliError::csv(path, e))?;
    for (i, row) in design.rows.iter().enumerate() {
        let mut rec = vec![(i + 1).to_string()];
        if let Some(cols) = block {
            let sign: f64 = cols.iter().map(|&j| row[j]).product();
            rec.push(if sign < 0.0 { "1" } else { "2" }.to_string());
        }
        if let Some(o) = order {
            rec.push(o[i].to_string());
        }
        rec.extend(row.iter().map(|v| v.to_string()));
        if let Some(labels) = &design.run_labels {
            rec.push(labels[i].clone());
        }
        w.write_record(&rec).map_err(|e| CliError::csv(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

fn write_outputs(
    doc: &PlanDocument,
    args: &PlanArgs,
    req: &DesignRequirements,
    candidates: &[Candidate],
    report: &PlanReport,
) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(&args.out).map_err(|e| CliError::io(&args.out, e))?;
    let principles = required_principles(req);
    let mut files = Vec::new();
    for (cand, cr) in candidates.iter().zip(&report.selection.candidates) {
        let d = &cand.design;
        let block = principles
            .blocking
            .then(|| block_column(d, &doc.model))
            .flatten();
        let order = principles
            .randomization
            .then(|| run_order(d.n_runs(), args.seed ^ cr.index as u64));
        let stem = format!("candidate_{}_{}", cr.index, d.design_class);
        let csv_path = args.out.join(format!("{stem}.csv"));
        write_csv(&csv_path, d, block.as_deref(), order.as_deref())?;
        let meta = CandidateMeta {
            index: cr.index,
            verdict: cr.verdict,
            design_class: d.design_class,
            n_runs: d.n_runs(),
            factor_names: &d.factor_names,
            factor_levels: doc
                .factor_space
                .design_factors()
                .map(|f| (f.name.as_str(), f.levels.as_slice()))
                .collect(),
            seed: d.seed,
            generator_words: d.generator_words.as_deref(),
            alias_structure: cand.alias.as_ref(),
            letters: d.generator_words.as_ref().map(|_| {
                FACTOR_LETTERS
                    .chars()
                    .map(String::from)
                    .zip(d.factor_names.iter().map(String::as_str))
                    .collect()
            }),
            removed_rows: d.removed_rows,
            block_factors: block
                .as_ref()
                .map(|cols| cols.iter().map(|&j| d.factor_names[j].as_str()).collect()),
            randomized: order.is_some(),
            warnings: &d.warnings,
            run_labels: d.run_labels.as_deref(),
        };
        let meta_path = args.out.join(format!("{stem}.json"));
        write_json(&meta_path, &meta)?;
        if report.selected == Some(cr.index) {
            let design_csv = args.out.join("design.csv");
            let design_meta = args.out.join("design.json");
            fs::copy(&csv_path, &design_csv).map_err(|e| CliError::io(&design_csv, e))?;
            fs::copy(&meta_path, &design_meta).map_err(|e| CliError::io(&design_meta, e))?;
            files.extend([design_csv, design_meta]);
        }
        files.extend([csv_path, meta_path]);
    }
    let report_path = args.out.join("selection_report.json");
    write_json(&report_path, report)?;
    let plan_path = args.out.join("plan.json");
    fs::write(&plan_path, doc.to_json()).map_err(|e| CliError::io(&plan_path, e))?;
    files.extend([report_path, plan_path]);
    files.sort();
    Ok(files)
}
