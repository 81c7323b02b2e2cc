//! Factors, their levels and roles, and logical constraints between factor
//! levels. Provides feasibility enumeration, design pruning and propagation
//! of mutual exclusions along data lineage.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::design_catalog::{coded_level, level_index, DesignMatrix};
use crate::error::{Error, Result};

/// Upper bound on enumerated level assignments.
pub const ENUMERATION_CAP: u128 = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorRole {
    #[default]
    Design,
    NuisanceControllable,
    NuisanceUncontrollable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    pub name: String,
    pub levels: Vec<String>,
    #[serde(default)]
    pub role: FactorRole,
    /// Attribute shown to an experimentee.
    #[serde(default)]
    pub human_visible: bool,
}

impl Factor {
    /// Two-level design factor with levels `-1` and `+1`.
    pub fn two_level(name: impl Into<String>) -> Self {
        Factor::with_levels(name, ["-1", "+1"])
    }

    pub fn with_levels<S: Into<String>>(
        name: impl Into<String>,
        levels: impl IntoIterator<Item = S>,
    ) -> Self {
        Factor {
            name: name.into(),
            levels: levels.into_iter().map(Into::into).collect(),
            role: FactorRole::Design,
            human_visible: false,
        }
    }

    pub fn role(mut self, role: FactorRole) -> Self {
        self.role = role;
        self
    }

    pub fn visible(mut self) -> Self {
        self.human_visible = true;
        self
    }
}

/// A factor taken at one of its levels; the last level when none is named.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "OperandDoc", into = "OperandDoc")]
pub struct Operand {
    pub factor: String,
    pub level: Option<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum OperandDoc {
    Name(String),
    Level {
        factor: String,
        #[serde(default)]
        level: Option<String>,
    },
}

impl From<OperandDoc> for Operand {
    fn from(doc: OperandDoc) -> Self {
        match doc {
            OperandDoc::Name(factor) => Operand {
                factor,
                level: None,
            },
            OperandDoc::Level { factor, level } => Operand { factor, level },
        }
    }
}

impl From<Operand> for OperandDoc {
    fn from(op: Operand) -> Self {
        match op.level {
            None => OperandDoc::Name(op.factor),
            Some(level) => OperandDoc::Level {
                factor: op.factor,
                level: Some(level),
            },
        }
    }
}

impl From<&str> for Operand {
    fn from(name: &str) -> Self {
        Operand {
            factor: name.to_string(),
            level: None,
        }
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.level {
            None => f.write_str(&self.factor),
            Some(l) => write!(f, "{}={}", self.factor, l),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConstraintKind {
    /// `A ⟹ B`
    Implies,
    /// `A ⟹ ¬B`
    ImpliesNot,
    /// `A ⟺ B`
    Iff,
    /// `¬A ⟺ ¬B`
    NegIff,
    /// No two operands active together.
    Excludes,
    /// At most `k` of the operands active.
    AtMostKActive { k: usize },
}

impl ConstraintKind {
    pub fn name(&self) -> &'static str {
        match self {
            ConstraintKind::Implies => "implies",
            ConstraintKind::ImpliesNot => "implies_not",
            ConstraintKind::Iff => "iff",
            ConstraintKind::NegIff => "neg_iff",
            ConstraintKind::Excludes => "excludes",
            ConstraintKind::AtMostKActive { .. } => "at_most_k_active",
        }
    }

    fn is_binary(&self) -> bool {
        matches!(
            self,
            ConstraintKind::Implies
                | ConstraintKind::ImpliesNot
                | ConstraintKind::Iff
                | ConstraintKind::NegIff
        )
    }

    /// Truth value given the activity of each operand.
    pub fn holds(&self, active: &[bool]) -> bool {
        match *self {
            ConstraintKind::Implies => !active[0] || active[1],
            ConstraintKind::ImpliesNot => !active[0] || !active[1],
            ConstraintKind::Iff => active[0] == active[1],
            ConstraintKind::NegIff => !active[0] == !active[1],
            ConstraintKind::Excludes => active.iter().filter(|&&a| a).count() <= 1,
            ConstraintKind::AtMostKActive { k } => active.iter().filter(|&&a| a).count() <= k,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelConstraint {
    #[serde(flatten)]
    pub kind: ConstraintKind,
    pub operands: Vec<Operand>,
}

impl LevelConstraint {
    pub fn new(kind: ConstraintKind, operands: &[&str]) -> Self {
        LevelConstraint {
            kind,
            operands: operands.iter().map(|&s| s.into()).collect(),
        }
    }

    pub fn implies(a: &str, b: &str) -> Self {
        Self::new(ConstraintKind::Implies, &[a, b])
    }

    pub fn implies_not(a: &str, b: &str) -> Self {
        Self::new(ConstraintKind::ImpliesNot, &[a, b])
    }

    pub fn iff(a: &str, b: &str) -> Self {
        Self::new(ConstraintKind::Iff, &[a, b])
    }

    pub fn neg_iff(a: &str, b: &str) -> Self {
        Self::new(ConstraintKind::NegIff, &[a, b])
    }

    pub fn excludes(operands: &[&str]) -> Self {
        Self::new(ConstraintKind::Excludes, operands)
    }

    pub fn at_most_k_active(k: usize, operands: &[&str]) -> Self {
        Self::new(ConstraintKind::AtMostKActive { k }, operands)
    }
}

impl fmt::Display for LevelConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ops: Vec<String> = self.operands.iter().map(|o| o.to_string()).collect();
        match self.kind {
            ConstraintKind::AtMostKActive { k } => {
                write!(f, "at_most_{k}_active({})", ops.join(", "))
            }
            kind => write!(f, "{}({})", kind.name(), ops.join(", ")),
        }
    }
}

/// Constraint with operands resolved to (column, active level index).
#[derive(Debug, Clone)]
struct Compiled {
    kind: ConstraintKind,
    operands: Vec<(usize, usize)>,
}

impl Compiled {
    fn holds(&self, assignment: &[usize]) -> bool {
        let active: Vec<bool> = self
            .operands
            .iter()
            .map(|&(col, lvl)| assignment[col] == lvl)
            .collect();
        self.kind.holds(&active)
    }
}

/// Factors, their constraints, and the lineage/exclusion facts used for
/// exclusion propagation. Design-role factors, in declaration order, form
/// the canonical columns of every design built from the space.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "FactorSpaceDoc", into = "FactorSpaceDoc")]
pub struct FactorSpace {
    factors: Vec<Factor>,
    constraints: Vec<LevelConstraint>,
    lineage: Vec<(String, String)>,
    base_exclusions: Vec<(String, String)>,
    compiled: Vec<Compiled>,
    columns: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct FactorSpaceDoc {
    factors: Vec<Factor>,
    #[serde(default)]
    constraints: Vec<LevelConstraint>,
    #[serde(default)]
    lineage: Vec<(String, String)>,
    #[serde(default)]
    base_exclusions: Vec<(String, String)>,
}

impl TryFrom<FactorSpaceDoc> for FactorSpace {
    type Error = Error;
    fn try_from(doc: FactorSpaceDoc) -> Result<Self> {
        FactorSpace::new(doc.factors, doc.constraints)
            .map(|s| s.with_lineage(doc.lineage, doc.base_exclusions))
            .and_then(|s| s.check_exclusions())
    }
}

impl From<FactorSpace> for FactorSpaceDoc {
    fn from(s: FactorSpace) -> Self {
        FactorSpaceDoc {
            factors: s.factors,
            constraints: s.constraints,
            lineage: s.lineage,
            base_exclusions: s.base_exclusions,
        }
    }
}

impl PartialEq for FactorSpace {
    fn eq(&self, other: &Self) -> bool {
        self.factors == other.factors
            && self.constraints == other.constraints
            && self.lineage == other.lineage
            && self.base_exclusions == other.base_exclusions
    }
}

impl FactorSpace {
    pub fn new(factors: Vec<Factor>, constraints: Vec<LevelConstraint>) -> Result<Self> {
        let mut by_name = HashMap::new();
        for (i, f) in factors.iter().enumerate() {
            if by_name.insert(f.name.as_str(), i).is_some() {
                return Err(Error::DuplicateId(f.name.clone()));
            }
            if f.levels.len() < 2 {
                return Err(Error::InvalidFactor {
                    factor: f.name.clone(),
                    reason: "needs at least 2 levels".into(),
                });
            }
            let unique: HashSet<_> = f.levels.iter().collect();
            if unique.len() != f.levels.len() {
                return Err(Error::InvalidFactor {
                    factor: f.name.clone(),
                    reason: "level labels must be unique".into(),
                });
            }
        }
        let columns: Vec<usize> = factors
            .iter()
            .enumerate()
            .filter(|(_, f)| f.role == FactorRole::Design)
            .map(|(i, _)| i)
            .collect();
        let column_of: HashMap<usize, usize> =
            columns.iter().enumerate().map(|(c, &i)| (i, c)).collect();

        let mut compiled = Vec::with_capacity(constraints.len());
        for (index, c) in constraints.iter().enumerate() {
            let invalid = |reason: String| Error::InvalidConstraint { index, reason };
            let n = c.operands.len();
            if c.kind.is_binary() && n != 2 {
                return Err(invalid(format!("{} takes 2 operands, got {n}", c.kind.name())));
            }
            if let ConstraintKind::AtMostKActive { k } = c.kind {
                if k < 1 || k >= n {
                    return Err(invalid(format!("k = {k} must satisfy 1 <= k < {n}")));
                }
            }
            if c.kind == ConstraintKind::Excludes && n < 2 {
                return Err(invalid("excludes takes at least 2 operands".into()));
            }
            let mut ops = Vec::with_capacity(n);
            let mut seen = HashSet::new();
            for op in &c.operands {
                let &fi = by_name
                    .get(op.factor.as_str())
                    .ok_or_else(|| Error::UnknownFactor(op.factor.clone()))?;
                let &col = column_of.get(&fi).ok_or_else(|| {
                    invalid(format!("`{}` is not a design factor", op.factor))
                })?;
                if !seen.insert(col) {
                    return Err(invalid(format!("`{}` appears twice", op.factor)));
                }
                let levels = &factors[fi].levels;
                let lvl = match &op.level {
                    None => levels.len() - 1,
                    Some(l) => levels.iter().position(|x| x == l).ok_or_else(|| {
                        invalid(format!("`{}` has no level `{l}`", op.factor))
                    })?,
                };
                ops.push((col, lvl));
            }
            compiled.push(Compiled {
                kind: c.kind,
                operands: ops,
            });
        }
        Ok(FactorSpace {
            factors,
            constraints,
            lineage: Vec::new(),
            base_exclusions: Vec::new(),
            compiled,
            columns,
        })
    }

    /// Attaches `(derived, source)` lineage pairs and base exclusions.
    pub fn with_lineage(
        mut self,
        lineage: Vec<(String, String)>,
        base_exclusions: Vec<(String, String)>,
    ) -> Self {
        self.lineage = lineage;
        self.base_exclusions = base_exclusions;
        self
    }

    fn check_exclusions(self) -> Result<Self> {
        if let Some((a, _)) = self.base_exclusions.iter().find(|(a, b)| a == b) {
            return Err(Error::InvalidArgument(format!(
                "artifact `{a}` cannot exclude itself"
            )));
        }
        Ok(self)
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn factor(&self, name: &str) -> Option<&Factor> {
        self.factors.iter().find(|f| f.name == name)
    }

    pub fn constraints(&self) -> &[LevelConstraint] {
        &self.constraints
    }

    pub fn lineage(&self) -> &[(String, String)] {
        &self.lineage
    }

    pub fn base_exclusions(&self) -> &[(String, String)] {
        &self.base_exclusions
    }

    pub fn design_factors(&self) -> impl Iterator<Item = &Factor> + '_ {
        self.columns.iter().map(|&i| &self.factors[i])
    }

    /// Canonical column order.
    pub fn column_names(&self) -> Vec<String> {
        self.design_factors().map(|f| f.name.clone()).collect()
    }

    pub fn level_counts(&self) -> Vec<usize> {
        self.design_factors().map(|f| f.levels.len()).collect()
    }

    /// Whether a level-index assignment over the design columns satisfies
    /// every constraint.
    pub fn satisfies(&self, assignment: &[usize]) -> bool {
        self.compiled.iter().all(|c| c.holds(assignment))
    }

    /// Indices of the constraints violated by `assignment`.
    pub fn violations(&self, assignment: &[usize]) -> Vec<usize> {
        self.compiled
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.holds(assignment))
            .map(|(i, _)| i)
            .collect()
    }

    /// Coded row for a level-index assignment.
    pub fn coded(&self, assignment: &[usize]) -> Vec<f64> {
        assignment
            .iter()
            .zip(self.level_counts())
            .map(|(&i, n)| coded_level(i, n))
            .collect()
    }

    /// Decodes a coded row into level indices.
    pub fn decode(&self, row: &[f64]) -> Option<Vec<usize>> {
        row.iter()
            .zip(self.level_counts())
            .map(|(&v, n)| level_index(v, n))
            .collect()
    }
}

/// `FactorLevels^NumberOfFactors`, generalised to the product of per-factor
/// level counts over the design factors.
pub fn full_factorial_count(space: &FactorSpace) -> u128 {
    space.level_counts().iter().map(|&n| n as u128).product()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Feasible {
    pub count: usize,
    /// Level-index assignments in lexicographic order.
    pub combinations: Vec<Vec<usize>>,
}

/// Every level assignment satisfying all constraints, lexicographically
/// ordered with the last column varying fastest.
pub fn feasible_combinations(space: &FactorSpace) -> Result<Feasible> {
    let total = full_factorial_count(space);
    if total > ENUMERATION_CAP {
        return Err(Error::Capacity {
            what: "feasible-combination enumeration",
            requested: total,
            cap: ENUMERATION_CAP,
        });
    }
    let counts = space.level_counts();
    let mut combinations = Vec::new();
    let mut current = vec![0usize; counts.len()];
    for _ in 0..total {
        if space.satisfies(&current) {
            combinations.push(current.clone());
        }
        for j in (0..counts.len()).rev() {
            current[j] += 1;
            if current[j] < counts[j] {
                break;
            }
            current[j] = 0;
        }
    }
    Ok(Feasible {
        count: combinations.len(),
        combinations,
    })
}

/// Keeps the rows of `matrix` that satisfy every constraint of `space`.
pub fn prune_matrix(matrix: &DesignMatrix, space: &FactorSpace) -> Result<DesignMatrix> {
    let expected = space.column_names();
    if matrix.factor_names != expected {
        return Err(Error::ColumnMismatch {
            expected,
            found: matrix.factor_names.clone(),
        });
    }
    let mut keep = Vec::with_capacity(matrix.n_runs());
    for (i, row) in matrix.rows.iter().enumerate() {
        let assignment = space.decode(row).ok_or_else(|| {
            let (j, &value) = row
                .iter()
                .enumerate()
                .find(|(j, &v)| level_index(v, space.level_counts()[*j]).is_none())
                .expect("some column failed to decode");
            Error::NotCodedLevel {
                row: i,
                column: matrix.factor_names[j].clone(),
                value,
            }
        })?;
        if space.satisfies(&assignment) {
            keep.push(i);
        }
    }
    let mut out = matrix.clone();
    out.rows = keep.iter().map(|&i| matrix.rows[i].clone()).collect();
    out.run_labels = matrix
        .run_labels
        .as_ref()
        .map(|labels| keep.iter().map(|&i| labels[i].clone()).collect());
    out.removed_rows = matrix.removed_rows + (matrix.n_runs() - keep.len());
    if out.rows.is_empty() && matrix.n_runs() > 0 {
        out.warnings
            .push("constraints eliminate every run".to_string());
    }
    Ok(out)
}

/// Unordered artifact pair, stored with the smaller id first.
pub fn unordered(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

/// Finds a directed cycle in `(derived, source)` lineage, returned as the
/// closed walk `[x, ..., x]`.
pub fn find_lineage_cycle(lineage: &[(String, String)]) -> Option<Vec<String>> {
    let mut succ: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (d, s) in lineage {
        succ.entry(d.as_str()).or_default().push(s.as_str());
        succ.entry(s.as_str()).or_default();
    }
    for list in succ.values_mut() {
        list.sort_unstable();
    }

    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Open,
        Done,
    }
    let mut mark: HashMap<&str, Mark> = succ.keys().map(|&k| (k, Mark::New)).collect();

    for &start in succ.keys() {
        if mark[start] != Mark::New {
            continue;
        }
        // iterative DFS; stack holds (node, next child index)
        let mut stack: Vec<(&str, usize)> = vec![(start, 0)];
        mark.insert(start, Mark::Open);
        while let Some(&mut (node, ref mut next)) = stack.last_mut() {
            let children = &succ[node];
            if *next < children.len() {
                let child = children[*next];
                *next += 1;
                match mark[child] {
                    Mark::New => {
                        mark.insert(child, Mark::Open);
                        stack.push((child, 0));
                    }
                    Mark::Open => {
                        let pos = stack.iter().position(|(n, _)| *n == child).unwrap();
                        let mut cycle: Vec<String> =
                            stack[pos..].iter().map(|(n, _)| n.to_string()).collect();
                        cycle.push(child.to_string());
                        return Some(cycle);
                    }
                    Mark::Done => {}
                }
            } else {
                mark.insert(node, Mark::Done);
                stack.pop();
            }
        }
    }
    None
}

/// Least set of unordered exclusions containing the base exclusions and
/// closed under moving either endpoint one lineage hop, in either
/// direction. Equivalently, every pair drawn from the lineage-connected
/// groups of the two members of a base exclusion.
pub fn propagate_exclusions(space: &FactorSpace) -> Result<BTreeSet<(String, String)>> {
    if let Some(cycle) = find_lineage_cycle(&space.lineage) {
        return Err(Error::LineageCycle(cycle));
    }

    let mut ids: BTreeMap<&str, usize> = BTreeMap::new();
    for (a, b) in space.lineage.iter().chain(&space.base_exclusions) {
        for x in [a, b] {
            let next = ids.len();
            ids.entry(x.as_str()).or_insert(next);
        }
    }
    let names: Vec<&str> = {
        let mut v = vec![""; ids.len()];
        for (&name, &i) in &ids {
            v[i] = name;
        }
        v
    };

    let mut parent: Vec<usize> = (0..ids.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (d, s) in &space.lineage {
        let (a, b) = (find(&mut parent, ids[d.as_str()]), find(&mut parent, ids[s.as_str()]));
        if a != b {
            parent[a] = b;
        }
    }
    let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
    for i in 0..ids.len() {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(i);
    }

    let mut out = BTreeSet::new();
    for (a, b) in &space.base_exclusions {
        let ga = &groups[&find(&mut parent, ids[a.as_str()])];
        let gb = &groups[&find(&mut parent, ids[b.as_str()])];
        for &x in ga {
            for &y in gb {
                if x != y {
                    out.insert(unordered(names[x], names[y]));
                }
            }
        }
    }
    Ok(out)
}
