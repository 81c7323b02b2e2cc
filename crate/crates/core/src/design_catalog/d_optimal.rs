//! D-optimal run selection by Fedorov exchange.
//!
//! Each restart draws a random nonsingular start from the candidate rows and
//! then repeatedly applies the single (design row, candidate) swap with the
//! largest determinant gain. The gain of replacing design row `x_i` by
//! candidate `x_j` is
//!
//! ```text
//! det(M')/det(M) = (1 + d(x_j)) (1 - d(x_i)) + d(x_i, x_j)^2
//! ```
//!
//! with `M = XᵀX` and `d(a, b) = aᵀ M⁻¹ b`. A restart stops when no swap
//! improves the determinant by more than the relative tolerance.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::design_selector::ExperimentalModel;
use crate::error::{Error, Result};

use super::matrix::{DesignClass, DesignMatrix};
use super::model_matrix::model_matrix;

/// Random draws per restart before the restart is declared singular.
const START_ATTEMPTS: usize = 64;
const MAX_EXCHANGES: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct DOptimalOptions {
    /// Allow the same candidate row more than once (replication).
    pub allow_repeats: bool,
    /// Minimum relative determinant gain for an exchange.
    pub tolerance: f64,
}

impl Default for DOptimalOptions {
    fn default() -> Self {
        DOptimalOptions {
            allow_repeats: true,
            tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DOptimalResult {
    pub design: DesignMatrix,
    /// Sorted candidate indices of the selected runs.
    pub indices: Vec<usize>,
    /// `det(XᵀX)` of the selected runs.
    pub determinant: f64,
}

/// Selects `n_runs` rows of `candidates` maximizing `det(XᵀX)` for `model`,
/// repeats allowed.
pub fn d_optimal(
    candidates: &DesignMatrix,
    model: &ExperimentalModel,
    n_runs: usize,
    seed: u64,
    restarts: usize,
) -> Result<DesignMatrix> {
    d_optimal_search(
        candidates,
        model,
        n_runs,
        seed,
        restarts,
        &DOptimalOptions::default(),
    )
    .map(|r| r.design)
}

struct Info {
    inverse: DMatrix<f64>,
    det: f64,
}

/// Inverse and determinant of `XᵀX` for the rows `idx`, or `None` when the
/// information matrix is numerically singular.
fn information(x: &DMatrix<f64>, idx: &[usize]) -> Option<Info> {
    let p = x.ncols();
    let mut m = DMatrix::<f64>::zeros(p, p);
    for &i in idx {
        let row = x.row(i);
        m += row.transpose() * row;
    }
    let scale = (m.trace() / p as f64).max(f64::MIN_POSITIVE);
    let chol = m.clone().cholesky()?;
    let det = chol.l().diagonal().iter().map(|d| d * d).product::<f64>();
    if !det.is_finite() || det <= 1e-10 * scale.powi(p as i32) {
        return None;
    }
    Some(Info {
        inverse: chol.inverse(),
        det,
    })
}

fn random_start(
    rng: &mut ChaCha8Rng,
    m: usize,
    n_runs: usize,
    allow_repeats: bool,
) -> Vec<usize> {
    if allow_repeats {
        (0..n_runs).map(|_| rng.random_range(0..m)).collect()
    } else {
        rand::seq::index::sample(rng, m, n_runs).into_vec()
    }
}

fn restart_seed(seed: u64, restart: usize) -> u64 {
    seed ^ (restart as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// One exchange run. Returns the final row indices and determinant.
fn exchange(
    x: &DMatrix<f64>,
    mut idx: Vec<usize>,
    opts: &DOptimalOptions,
) -> Option<(Vec<usize>, f64)> {
    let m = x.nrows();
    let mut info = information(x, &idx)?;
    for _ in 0..MAX_EXCHANGES {
        let rows: Vec<DVector<f64>> = (0..m).map(|j| x.row(j).transpose()).collect();
        let leverage: Vec<f64> = rows.iter().map(|r| r.dot(&(&info.inverse * r))).collect();

        let mut best: Option<(f64, usize, usize)> = None;
        for (pos, &i) in idx.iter().enumerate() {
            let v = &info.inverse * &rows[i];
            for (j, row_j) in rows.iter().enumerate() {
                if j == i || (!opts.allow_repeats && idx.contains(&j)) {
                    continue;
                }
                let cross = row_j.dot(&v);
                let ratio = (1.0 + leverage[j]) * (1.0 - leverage[i]) + cross * cross;
                if best.is_none_or(|(b, _, _)| ratio > b) {
                    best = Some((ratio, pos, j));
                }
            }
        }
        match best {
            Some((ratio, pos, j)) if ratio > 1.0 + opts.tolerance => {
                let previous = idx[pos];
                idx[pos] = j;
                match information(x, &idx) {
                    Some(next) if next.det > info.det => info = next,
                    _ => {
                        idx[pos] = previous;
                        break;
                    }
                }
            }
            _ => break,
        }
    }
    idx.sort_unstable();
    Some((idx, info.det))
}

/// D-optimal search with explicit options; see [`d_optimal`].
///
/// Restart `r` uses its own generator derived from `(seed, r)`, so the
/// outcome depends only on the arguments. Among restarts the largest
/// determinant wins; determinants within the relative tolerance are ties,
/// resolved by the lexicographically smallest sorted index list.
pub fn d_optimal_search(
    candidates: &DesignMatrix,
    model: &ExperimentalModel,
    n_runs: usize,
    seed: u64,
    restarts: usize,
    opts: &DOptimalOptions,
) -> Result<DOptimalResult> {
    if candidates.n_runs() == 0 {
        return Err(Error::InvalidArgument("candidate set is empty".into()));
    }
    let x = model_matrix(candidates, model)?;
    let p = x.ncols();
    if n_runs < p {
        return Err(Error::Infeasible(format!(
            "{n_runs} runs cannot estimate {p} model parameters; use at least {p} runs"
        )));
    }
    if !opts.allow_repeats && n_runs > x.nrows() {
        return Err(Error::InvalidArgument(format!(
            "{n_runs} distinct runs requested from {} candidates",
            x.nrows()
        )));
    }

    let mut best: Option<(Vec<usize>, f64)> = None;
    for r in 0..restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(restart_seed(seed, r));
        let start = (0..START_ATTEMPTS)
            .map(|_| random_start(&mut rng, x.nrows(), n_runs, opts.allow_repeats))
            .find(|idx| information(&x, idx).is_some());
        let Some(start) = start else { continue };
        let Some((idx, det)) = exchange(&x, start, opts) else {
            continue;
        };
        best = match best {
            None => Some((idx, det)),
            Some((bidx, bdet)) => {
                let tie = (det - bdet).abs() <= opts.tolerance * det.abs().max(bdet.abs());
                if (tie && idx < bidx) || (!tie && det > bdet) {
                    Some((idx, det))
                } else {
                    Some((bidx, bdet))
                }
            }
        };
    }

    let (indices, determinant) = best.ok_or_else(|| {
        Error::Infeasible(
            "every start was singular; increase n_runs or use a richer candidate set".into(),
        )
    })?;
    let mut design = DesignMatrix::new(
        candidates.factor_names.clone(),
        indices.iter().map(|&i| candidates.rows[i].clone()).collect(),
        DesignClass::DOptimal,
    );
    design.seed = Some(seed);
    Ok(DOptimalResult {
        design,
        indices,
        determinant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design_catalog::{full_factorial, information_determinant};

    #[test]
    fn finds_orthogonal_half_of_cube() {
        let cands = full_factorial(&[("A", 2), ("B", 2), ("C", 2)]).unwrap();
        let r = d_optimal_search(
            &cands,
            &ExperimentalModel::main_effects(),
            4,
            1,
            10,
            &DOptimalOptions::default(),
        )
        .unwrap();
        assert!((r.determinant - 256.0).abs() < 1e-6);
        let x = model_matrix(&r.design, &ExperimentalModel::main_effects()).unwrap();
        assert!((information_determinant(&x) - 256.0).abs() < 1e-6);
    }

    #[test]
    fn saturated_full_factorial_is_returned_whole() {
        let cands = full_factorial(&[("A", 2), ("B", 2)]).unwrap();
        for allow_repeats in [true, false] {
            let r = d_optimal_search(
                &cands,
                &ExperimentalModel::with_interactions(),
                4,
                3,
                8,
                &DOptimalOptions {
                    allow_repeats,
                    ..Default::default()
                },
            )
            .unwrap();
            assert_eq!(r.indices, vec![0, 1, 2, 3]);
            assert_eq!(r.design.rows, cands.rows);
        }
    }

    #[test]
    fn too_few_runs() {
        let cands = full_factorial(&[("A", 2), ("B", 2), ("C", 2)]).unwrap();
        let err = d_optimal(&cands, &ExperimentalModel::main_effects(), 3, 0, 4).unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)));
    }

    #[test]
    fn singular_candidates() {
        // B duplicates A, so no selection can separate them
        let cands = DesignMatrix::new(
            vec!["A".into(), "B".into()],
            vec![vec![-1.0, -1.0], vec![1.0, 1.0]],
            DesignClass::FullFactorial,
        );
        let err = d_optimal(&cands, &ExperimentalModel::main_effects(), 6, 0, 3).unwrap_err();
        assert!(err.to_string().contains("increase n_runs"));
    }

    #[test]
    fn deterministic() {
        let cands = full_factorial(&[("A", 3), ("B", 3)]).unwrap();
        let model = ExperimentalModel::with_interactions();
        let a = d_optimal(&cands, &model, 6, 11, 5).unwrap();
        let b = d_optimal(&cands, &model, 6, 11, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.design_class, DesignClass::DOptimal);
        assert_eq!(a.seed, Some(11));
    }
}
