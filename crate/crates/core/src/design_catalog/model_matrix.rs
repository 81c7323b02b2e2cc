use nalgebra::DMatrix;

use crate::design_selector::{Effects, ExperimentalModel};
use crate::error::{Error, Result};

use super::matrix::DesignMatrix;

/// Model-matrix column, by design column index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Term {
    Intercept,
    Main(usize),
    Interaction(usize, usize),
}

impl Term {
    pub fn name(&self, factor_names: &[String]) -> String {
        match *self {
            Term::Intercept => "(intercept)".to_string(),
            Term::Main(i) => factor_names[i].clone(),
            Term::Interaction(i, j) => format!("{}:{}", factor_names[i], factor_names[j]),
        }
    }

    fn eval(&self, row: &[f64]) -> f64 {
        match *self {
            Term::Intercept => 1.0,
            Term::Main(i) => row[i],
            Term::Interaction(i, j) => row[i] * row[j],
        }
    }
}

/// Terms in canonical order: intercept, main effects, then pairwise
/// interactions `(i, j)` with `i < j`, all in design column order.
pub fn model_terms(factor_names: &[String], model: &ExperimentalModel) -> Result<Vec<Term>> {
    let columns: Vec<usize> = match &model.factors {
        None => (0..factor_names.len()).collect(),
        Some(list) => {
            for f in list {
                if !factor_names.contains(f) {
                    return Err(Error::UnknownFactor(f.clone()));
                }
            }
            (0..factor_names.len())
                .filter(|&i| list.contains(&factor_names[i]))
                .collect()
        }
    };
    let mut terms = vec![Term::Intercept];
    terms.extend(columns.iter().map(|&i| Term::Main(i)));
    if model.effects == Effects::WithInteractions {
        for (a, &i) in columns.iter().enumerate() {
            for &j in &columns[a + 1..] {
                terms.push(Term::Interaction(i, j));
            }
        }
    }
    Ok(terms)
}

pub fn model_matrix(design: &DesignMatrix, model: &ExperimentalModel) -> Result<DMatrix<f64>> {
    let terms = model_terms(&design.factor_names, model)?;
    Ok(DMatrix::from_fn(design.n_runs(), terms.len(), |r, c| {
        terms[c].eval(&design.rows[r])
    }))
}

/// `det(XᵀX)`.
pub fn information_determinant(x: &DMatrix<f64>) -> f64 {
    (x.transpose() * x).determinant()
}
