use super::Dataset;
use crate::error::{Error, Result};

/// Sorts rows by the time column (stable; row order if there is none) and
/// cuts contiguous train | valid | test slices.
///
/// Slice sizes are `round(n·fraction)`; when the fractions sum to one the
/// test slice takes whatever remains.
pub fn chronological_split(
    ds: &Dataset,
    fractions: [f64; 3],
) -> Result<(Dataset, Dataset, Dataset)> {
    if fractions.iter().any(|&f| !(f > 0.0)) {
        return Err(Error::Split(format!(
            "fractions must be positive, got {fractions:?}"
        )));
    }
    let total: f64 = fractions.iter().sum();
    if total > 1.0 + 1e-9 {
        return Err(Error::Split(format!("fractions sum to {total} > 1")));
    }
    let n = ds.n_rows();
    let mut order: Vec<usize> = (0..n).collect();
    if let Some(t) = &ds.time {
        order.sort_by(|&a, &b| t[a].total_cmp(&t[b]));
    }
    let n_train = (n as f64 * fractions[0]).round() as usize;
    let n_valid = (n as f64 * fractions[1]).round() as usize;
    let n_test = if (total - 1.0).abs() <= 1e-9 {
        n.saturating_sub(n_train + n_valid)
    } else {
        (n as f64 * fractions[2]).round() as usize
    };
    if n_train == 0 || n_valid == 0 || n_test == 0 || n_train + n_valid + n_test > n {
        return Err(Error::Split(format!(
            "{n} rows give empty or oversized splits {n_train}/{n_valid}/{n_test}"
        )));
    }
    let train = ds.select_rows(&order[..n_train]);
    let valid = ds.select_rows(&order[n_train..n_train + n_valid]);
    let test = ds.select_rows(&order[n_train + n_valid..n_train + n_valid + n_test]);
    Ok((train, valid, test))
}
