//! Candidate design generators: full factorial, two-level fractional
//! factorial with alias structure, Plackett-Burman, Latin hypercube and
//! D-optimal selection from a candidate set.

mod alias;
mod d_optimal;
mod factorial;
mod lhs;
mod matrix;
mod model_matrix;
mod plackett_burman;

pub use alias::{auto_generators, fractional_factorial, AliasStructure, Resolution, Word, FACTOR_LETTERS};
pub use d_optimal::{d_optimal, d_optimal_search, DOptimalOptions, DOptimalResult};
pub use factorial::{full_factorial, full_factorial_of_space, FULL_FACTORIAL_CAP};
pub use lhs::latin_hypercube;
pub use matrix::{coded_level, level_index, DesignClass, DesignMatrix};
pub use model_matrix::{information_determinant, model_matrix, model_terms, Term};
pub use plackett_burman::{plackett_burman, plackett_burman_runs, screening_matrix, SUPPORTED_RUNS};

/// Factor letters for generated designs. `I` is reserved for the identity
/// word.
pub(crate) fn letter_names(n: usize) -> Vec<String> {
    FACTOR_LETTERS.chars().take(n).map(String::from).collect()
}
