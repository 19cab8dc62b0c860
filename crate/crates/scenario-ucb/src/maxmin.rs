//! Deterministic max-min selection over a value table.

/// Maximize over points the minimum over alternatives of `value(x, i)`.
///
/// Returns `(x, i, value)` where `x` attains the largest row minimum and `i`
/// attains that minimum at `x`. Ties break to the lowest index, first in `i`
/// then in `x`, so runs are reproducible.
pub fn max_min_select<F>(n_points: usize, n_alts: usize, value: F) -> (usize, usize, f64)
where
    F: Fn(usize, usize) -> f64,
{
    assert!(n_points > 0 && n_alts > 0, "empty max-min table");
    let mut best = (0usize, 0usize, f64::NEG_INFINITY);
    for x in 0..n_points {
        let mut min_i = 0usize;
        let mut min_v = value(x, 0);
        for i in 1..n_alts {
            let v = value(x, i);
            if v < min_v {
                min_v = v;
                min_i = i;
            }
        }
        if min_v > best.2 {
            best = (x, min_i, min_v);
        }
    }
    best
}
