//! Deterministic point sets over axis-aligned boxes.

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += (i % base) as f64 * f;
        i /= base;
        f *= inv;
    }
    r
}

/// The `index`-th Halton point in the unit cube of dimension `dim` (<= 16).
/// Index 0 is skipped so the origin never appears.
pub fn halton(index: u64, dim: usize) -> Vec<f64> {
    assert!(dim <= PRIMES.len(), "Halton sequence supports at most 16 dimensions");
    (0..dim).map(|d| radical_inverse(index + 1, PRIMES[d] as u64)).collect()
}

/// Map a unit-cube point onto the box `[lower, upper]`.
pub fn scale_to_box(u: &[f64], lower: &[f64], upper: &[f64]) -> Vec<f64> {
    u.iter()
        .zip(lower.iter().zip(upper))
        .map(|(t, (lo, hi))| lo + t * (hi - lo))
        .collect()
}

/// Tensor grid with `per_axis` points per coordinate, endpoints included.
pub fn grid(lower: &[f64], upper: &[f64], per_axis: usize) -> Vec<Vec<f64>> {
    let n = lower.len();
    let per_axis = per_axis.max(2);
    let total = per_axis.pow(n as u32);
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; n];
    for _ in 0..total {
        out.push(
            (0..n)
                .map(|d| lower[d] + (upper[d] - lower[d]) * idx[d] as f64 / (per_axis - 1) as f64)
                .collect(),
        );
        for d in 0..n {
            idx[d] += 1;
            if idx[d] < per_axis {
                break;
            }
            idx[d] = 0;
        }
    }
    out
}

/// Points per axis so that a tensor grid in `dim` dimensions stays near `budget` points.
pub fn per_axis_for_budget(dim: usize, budget: usize) -> usize {
    let mut k = (budget as f64).powf(1.0 / dim as f64).floor() as usize;
    while k > 2 && k.pow(dim as u32) > budget {
        k -= 1;
    }
    while (k + 1).pow(dim as u32) <= budget {
        k += 1;
    }
    k.max(2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halton_base_two_and_three() {
        assert_eq!(halton(0, 2), vec![0.5, 1.0 / 3.0]);
        assert_eq!(halton(1, 2), vec![0.25, 2.0 / 3.0]);
        assert_eq!(halton(2, 1), vec![0.75]);
    }

    #[test]
    fn grid_covers_corners() {
        let g = grid(&[-1.0, 0.0], &[1.0, 2.0], 3);
        assert_eq!(g.len(), 9);
        assert_eq!(g[0], vec![-1.0, 0.0]);
        assert_eq!(g[8], vec![1.0, 2.0]);
        assert_eq!(g[4], vec![0.0, 1.0]);
    }

    #[test]
    fn budget_per_axis() {
        assert_eq!(per_axis_for_budget(2, 40_000), 200);
        assert_eq!(per_axis_for_budget(1, 500), 500);
        assert_eq!(per_axis_for_budget(3, 1000), 10);
    }
}
