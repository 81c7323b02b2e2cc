use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::matrix::{DesignClass, DesignMatrix};

/// Latin hypercube sample on `[0, 1)^num_factors`.
///
/// Column `j` holds `(i + u_i) / n_runs` for `i = 0..n_runs` in random
/// order, so each of the `n_runs` strata of every column is hit exactly once.
/// Output is a pure function of the arguments.
pub fn latin_hypercube(num_factors: usize, n_runs: usize, seed: u64) -> Result<DesignMatrix> {
    if n_runs < 2 {
        return Err(Error::InvalidArgument(format!(
            "latin hypercube needs at least 2 runs, got {n_runs}"
        )));
    }
    if num_factors == 0 {
        return Err(Error::InvalidArgument(
            "latin hypercube needs at least one factor".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = n_runs as f64;
    let mut rows = vec![vec![0.0; num_factors]; n_runs];
    for j in 0..num_factors {
        let mut column: Vec<f64> = (0..n_runs)
            .map(|i| {
                let v = (i as f64 + rng.random::<f64>()) / n;
                // stay inside the stratum despite rounding
                let upper = (i + 1) as f64 / n;
                if v >= upper {
                    upper.next_down()
                } else {
                    v
                }
            })
            .collect();
        column.shuffle(&mut rng);
        for (row, v) in rows.iter_mut().zip(column) {
            row[j] = v;
        }
    }
    let names = (1..=num_factors).map(|i| format!("X{i}")).collect();
    let mut design = DesignMatrix::new(names, rows, DesignClass::LatinHypercube);
    design.seed = Some(seed);
    Ok(design)
}
