use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignClass {
    FullFactorial,
    FractionalFactorial,
    PlackettBurman,
    LatinHypercube,
    DOptimal,
    /// One factor active per run.
    OneFactorAtATime,
    /// Satisfying and violating assignments of declared factor relations.
    RelationProbe,
}

impl DesignClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            DesignClass::FullFactorial => "full_factorial",
            DesignClass::FractionalFactorial => "fractional_factorial",
            DesignClass::PlackettBurman => "plackett_burman",
            DesignClass::LatinHypercube => "latin_hypercube",
            DesignClass::DOptimal => "d_optimal",
            DesignClass::OneFactorAtATime => "one_factor_at_a_time",
            DesignClass::RelationProbe => "relation_probe",
        }
    }
}

impl fmt::Display for DesignClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Runs × factors table of coded levels.
///
/// Discrete factors with `L` levels are coded on the evenly spaced grid
/// `-1 + 2i/(L-1)`, so two-level factors are `-1/+1`. Latin hypercube
/// designs hold reals in `[0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignMatrix {
    pub factor_names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub design_class: DesignClass,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator_words: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Rows dropped by constraint pruning.
    #[serde(default)]
    pub removed_rows: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run_labels: Option<Vec<String>>,
}

impl DesignMatrix {
    pub fn new(factor_names: Vec<String>, rows: Vec<Vec<f64>>, design_class: DesignClass) -> Self {
        debug_assert!(rows.iter().all(|r| r.len() == factor_names.len()));
        DesignMatrix {
            factor_names,
            rows,
            design_class,
            generator_words: None,
            seed: None,
            removed_rows: 0,
            warnings: Vec::new(),
            run_labels: None,
        }
    }

    pub fn n_runs(&self) -> usize {
        self.rows.len()
    }

    pub fn n_factors(&self) -> usize {
        self.factor_names.len()
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().map(move |r| r[j])
    }

    pub fn is_two_level(&self) -> bool {
        self.rows.iter().flatten().all(|&v| v == 1.0 || v == -1.0)
    }

    /// Replaces the column names, keeping everything else.
    pub fn with_factor_names(mut self, names: Vec<String>) -> Self {
        assert_eq!(names.len(), self.factor_names.len(), "column count mismatch");
        self.factor_names = names;
        self
    }

    /// Number of factors sitting at their top coded level in `row`.
    pub fn active_count(&self, row: usize) -> usize {
        self.rows[row].iter().filter(|&&v| v == 1.0).count()
    }
}

/// Coded value of level `index` out of `count`.
pub fn coded_level(index: usize, count: usize) -> f64 {
    debug_assert!(count >= 2 && index < count);
    if index + 1 == count {
        1.0
    } else {
        -1.0 + 2.0 * index as f64 / (count - 1) as f64
    }
}

/// Inverse of [`coded_level`]; `None` when `value` is off the grid.
pub fn level_index(value: f64, count: usize) -> Option<usize> {
    if count < 2 || !value.is_finite() {
        return None;
    }
    let pos = (value + 1.0) * (count - 1) as f64 / 2.0;
    let idx = pos.round();
    if idx < 0.0 || idx > (count - 1) as f64 || (pos - idx).abs() > 1e-9 {
        return None;
    }
    Some(idx as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coding_round_trips() {
        for count in 2..7 {
            for i in 0..count {
                assert_eq!(level_index(coded_level(i, count), count), Some(i));
            }
        }
        assert_eq!(coded_level(0, 2), -1.0);
        assert_eq!(coded_level(1, 3), 0.0);
        assert_eq!(level_index(0.5, 2), None);
        assert_eq!(level_index(1.5, 3), None);
    }
}
