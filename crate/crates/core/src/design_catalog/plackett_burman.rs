//! Plackett-Burman screening designs for up to 23 two-level factors.
//!
//! Run counts 4, 8 and 16 come from Sylvester-type Hadamard matrices. Run
//! counts 12, 20 and 24 use the classical cyclic generator rows: the seed row
//! and its `N-2` cyclic shifts, closed by a row of all `-1`.

use crate::error::{Error, Result};

use super::letter_names;
use super::matrix::{DesignClass, DesignMatrix};

pub const SUPPORTED_RUNS: [usize; 6] = [4, 8, 12, 16, 20, 24];

const SEED_12: &str = "++-+++---+-";
const SEED_20: &str = "++--++++-+-+----++-";
const SEED_24: &str = "+++++-+-++--++--+-+----";

/// Smallest supported run count strictly greater than `num_factors`.
pub fn plackett_burman_runs(num_factors: usize) -> Result<usize> {
    if num_factors == 0 {
        return Err(unsupported(num_factors));
    }
    SUPPORTED_RUNS
        .iter()
        .copied()
        .find(|&n| n > num_factors)
        .ok_or_else(|| unsupported(num_factors))
}

fn unsupported(num_factors: usize) -> Error {
    Error::UnsupportedRuns(format!(
        "Plackett-Burman needs 1..=23 factors (got {num_factors}); supported run counts are {SUPPORTED_RUNS:?}"
    ))
}

fn sylvester(n: usize) -> Vec<Vec<i8>> {
    let mut h = vec![vec![1i8]];
    while h.len() < n {
        let m = h.len();
        let mut next = vec![vec![0i8; 2 * m]; 2 * m];
        for i in 0..m {
            for j in 0..m {
                next[i][j] = h[i][j];
                next[i][j + m] = h[i][j];
                next[i + m][j] = h[i][j];
                next[i + m][j + m] = -h[i][j];
            }
        }
        h = next;
    }
    h
}

fn cyclic(seed: &str) -> Vec<Vec<i8>> {
    let first: Vec<i8> = seed
        .chars()
        .map(|c| if c == '+' { 1 } else { -1 })
        .collect();
    let k = first.len();
    let mut rows: Vec<Vec<i8>> = (0..k)
        .map(|shift| (0..k).map(|j| first[(j + k - shift) % k]).collect())
        .collect();
    rows.push(vec![-1; k]);
    rows
}

/// All `N-1` columns of the `N`-run screening matrix, entries `-1/+1`.
pub fn screening_matrix(n_runs: usize) -> Result<Vec<Vec<i8>>> {
    Ok(match n_runs {
        4 | 8 | 16 => sylvester(n_runs)
            .into_iter()
            .map(|row| row[1..].to_vec())
            .collect(),
        12 => cyclic(SEED_12),
        20 => cyclic(SEED_20),
        24 => cyclic(SEED_24),
        _ => {
            return Err(Error::UnsupportedRuns(format!(
                "no Plackett-Burman design with {n_runs} runs; supported: {SUPPORTED_RUNS:?}"
            )))
        }
    })
}

/// Plackett-Burman design keeping the first `num_factors` columns.
pub fn plackett_burman(num_factors: usize) -> Result<DesignMatrix> {
    let n = plackett_burman_runs(num_factors)?;
    let rows = screening_matrix(n)?
        .into_iter()
        .map(|row| row[..num_factors].iter().map(|&v| v as f64).collect())
        .collect();
    Ok(DesignMatrix::new(
        letter_names(num_factors),
        rows,
        DesignClass::PlackettBurman,
    ))
}
