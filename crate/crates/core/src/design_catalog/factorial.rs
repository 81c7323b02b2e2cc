use crate::error::{Error, Result};
use crate::factor_space::FactorSpace;

use super::matrix::{coded_level, DesignClass, DesignMatrix};

pub const FULL_FACTORIAL_CAP: u128 = 1 << 24;

/// All level combinations of `factors` (name, level count), first factor
/// varying slowest.
pub fn full_factorial<S: AsRef<str>>(factors: &[(S, usize)]) -> Result<DesignMatrix> {
    if factors.is_empty() {
        return Err(Error::InvalidArgument(
            "full factorial needs at least one factor".into(),
        ));
    }
    if let Some((name, _)) = factors.iter().find(|(_, n)| *n < 2) {
        return Err(Error::InvalidFactor {
            factor: name.as_ref().to_string(),
            reason: "needs at least 2 levels".into(),
        });
    }
    let total: u128 = factors
        .iter()
        .try_fold(1u128, |acc, (_, n)| acc.checked_mul(*n as u128))
        .unwrap_or(u128::MAX);
    if total > FULL_FACTORIAL_CAP {
        return Err(Error::Capacity {
            what: "full factorial",
            requested: total,
            cap: FULL_FACTORIAL_CAP,
        });
    }
    let total = total as usize;
    let counts: Vec<usize> = factors.iter().map(|(_, n)| *n).collect();

    let mut rows = Vec::with_capacity(total);
    for r in 0..total {
        let mut row = vec![0.0; counts.len()];
        let mut rem = r;
        for j in (0..counts.len()).rev() {
            row[j] = coded_level(rem % counts[j], counts[j]);
            rem /= counts[j];
        }
        rows.push(row);
    }
    let names = factors.iter().map(|(n, _)| n.as_ref().to_string()).collect();
    Ok(DesignMatrix::new(names, rows, DesignClass::FullFactorial))
}

/// Full factorial over the design factors of `space`, in canonical order.
pub fn full_factorial_of_space(space: &FactorSpace) -> Result<DesignMatrix> {
    let factors: Vec<(String, usize)> = space
        .design_factors()
        .map(|f| (f.name.clone(), f.levels.len()))
        .collect();
    full_factorial(&factors)
}
