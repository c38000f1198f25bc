use ndarray::{Array2, ArrayView2, Axis};
use rand::Rng;

use crate::error::{Error, Result};
use crate::seeds;

/// For every pair `i`, the row whose Y side it is paired with after
/// category re-pairing: `i` itself with probability `1 − p`, otherwise a
/// uniformly drawn row of the same category (possibly `i` again).
pub fn category_repair_indices(labels: &[usize], p: f64, rng: &mut impl Rng) -> Result<Vec<usize>> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Config(format!("re-pairing probability {p} outside [0, 1]")));
    }
    if labels.is_empty() {
        return Err(Error::Data("no pairs to re-pair".into()));
    }
    if p == 0.0 {
        return Ok((0..labels.len()).collect());
    }
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut members = vec![Vec::new(); n_classes];
    for (i, &c) in labels.iter().enumerate() {
        members[c].push(i);
    }
    Ok(labels
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            if rng.random::<f64>() < p {
                let pool = &members[c];
                pool[rng.random_range(0..pool.len())]
            } else {
                i
            }
        })
        .collect())
}

/// Re-paired copy of `(X, Y)`: X rows are kept in place and each Y row is
/// swapped for a same-category Y row with probability `p`.
pub fn expand_category_pairs(
    x: ArrayView2<f64>,
    y: ArrayView2<f64>,
    labels: &[usize],
    p: f64,
    seed: u64,
) -> Result<(Array2<f64>, Array2<f64>)> {
    if x.nrows() != y.nrows() || labels.len() != x.nrows() {
        return Err(Error::DimensionMismatch {
            context: "category re-pairing",
            expected: x.nrows(),
            found: if y.nrows() != x.nrows() { y.nrows() } else { labels.len() },
        });
    }
    let idx = category_repair_indices(labels, p, &mut seeds::rng(seed))?;
    Ok((x.to_owned(), y.select(Axis(0), &idx)))
}
