use crate::error::{Error, Result};
use crate::math::Vec3;

/// Greedy farthest-point sampling seeded at index 0.
///
/// Each step picks the unchosen point with the largest distance to its
/// nearest chosen point; ties go to the lowest index.
pub fn farthest_point_sample(points: &[Vec3], k: usize) -> Result<Vec<usize>> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(Error::invalid(format!(
            "farthest-point sample size {k} outside [1, {n}]"
        )));
    }
    let mut chosen = vec![false; n];
    let mut min_d2 = vec![f64::INFINITY; n];
    let mut out = Vec::with_capacity(k);
    let mut current = 0usize;
    loop {
        chosen[current] = true;
        out.push(current);
        if out.len() == k {
            return Ok(out);
        }
        let c = points[current];
        let mut best = usize::MAX;
        let mut best_d2 = f64::NEG_INFINITY;
        for (i, p) in points.iter().enumerate() {
            if chosen[i] {
                continue;
            }
            let d2 = (p - c).norm_squared();
            if d2 < min_d2[i] {
                min_d2[i] = d2;
            }
            if min_d2[i] > best_d2 {
                best_d2 = min_d2[i];
                best = i;
            }
        }
        current = best;
    }
}
