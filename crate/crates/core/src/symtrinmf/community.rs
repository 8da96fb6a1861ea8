use ndarray::ArrayView2;

/// Label of each row: the column of its largest entry, lowest index on ties.
/// Rows without a positive entry are unassigned (`None`).
pub fn community_assignment(u: &ArrayView2<'_, f64>) -> Vec<Option<usize>> {
    u.rows()
        .into_iter()
        .map(|row| {
            let mut best: Option<(usize, f64)> = None;
            for (k, &v) in row.iter().enumerate() {
                if v > best.map_or(0.0, |(_, b)| b) {
                    best = Some((k, v));
                }
            }
            best.map(|(k, _)| k)
        })
        .collect()
}

/// Whether two labelings agree up to a bijective relabeling.
pub fn matches_up_to_permutation(a: &[Option<usize>], b: &[Option<usize>]) -> bool {
    use std::collections::HashMap;
    if a.len() != b.len() {
        return false;
    }
    let mut forward = HashMap::new();
    let mut backward = HashMap::new();
    for (x, y) in a.iter().zip(b) {
        match (x, y) {
            (None, None) => {}
            (Some(x), Some(y)) => {
                if *forward.entry(*x).or_insert(*y) != *y || *backward.entry(*y).or_insert(*x) != *x
                {
                    return false;
                }
            }
            _ => return false,
        }
    }
    true
}
