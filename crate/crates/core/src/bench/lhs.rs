//! Latin hypercube designs.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::design::DesignMatrix;
use crate::error::{Error, Result};

/// Draw an `n × p` Latin hypercube on the open unit cube.
///
/// Each column is a random permutation of the strata `(i + u_i)/n` with
/// `u_i` uniform in (0, 1), so every column places exactly one point in
/// each of the `n` equal bins.
pub fn lhs_sample<R: Rng + ?Sized>(n: usize, p: usize, rng: &mut R) -> Result<DesignMatrix> {
    if n == 0 || p == 0 {
        return Err(Error::InvalidArgument(
            "Latin hypercube needs n ≥ 1 and p ≥ 1".into(),
        ));
    }
    let mut rows = vec![vec![0.0; p]; n];
    let mut strata: Vec<usize> = (0..n).collect();
    for j in 0..p {
        strata.shuffle(rng);
        for (row, &s) in rows.iter_mut().zip(&strata) {
            let u = loop {
                let v: f64 = rng.random();
                if v > 0.0 {
                    break v;
                }
            };
            row[j] = (s as f64 + u) / n as f64;
        }
    }
    DesignMatrix::from_rows(&rows)
}

/// Latin hypercube scaled to `[lo, hi]` in every dimension.
pub fn lhs_sample_scaled<R: Rng + ?Sized>(
    n: usize,
    p: usize,
    lo: f64,
    hi: f64,
    rng: &mut R,
) -> Result<DesignMatrix> {
    let unit = lhs_sample(n, p, rng)?;
    let rows: Vec<Vec<f64>> = unit
        .rows_iter()
        .map(|r| r.iter().map(|v| lo + v * (hi - lo)).collect())
        .collect();
    DesignMatrix::from_rows(&rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_point_in_unit_cube() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = lhs_sample(1, 3, &mut rng).unwrap();
        for &v in d.row(0) {
            assert!(v > 0.0 && v < 1.0);
        }
    }

    #[test]
    fn columns_are_stratified() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 10;
        let d = lhs_sample(n, 2, &mut rng).unwrap();
        for j in 0..2 {
            let mut col: Vec<f64> = d.rows_iter().map(|r| r[j]).collect();
            col.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (i, v) in col.iter().enumerate() {
                assert!(*v > i as f64 / n as f64 && *v < (i + 1) as f64 / n as f64);
            }
        }
    }

    #[test]
    fn deterministic_for_equal_seed() {
        let a = lhs_sample(12, 2, &mut ChaCha8Rng::seed_from_u64(99)).unwrap();
        let b = lhs_sample(12, 2, &mut ChaCha8Rng::seed_from_u64(99)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn scaled_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let d = lhs_sample_scaled(20, 1, 0.0, 10.0, &mut rng).unwrap();
        for r in d.rows_iter() {
            assert!(r[0] > 0.0 && r[0] < 10.0);
        }
    }

    proptest::proptest! {
        #[test]
        fn stratification_holds_for_every_draw(seed in 0u64..100, n in 1usize..30, p in 1usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d = lhs_sample(n, p, &mut rng).unwrap();
            for j in 0..p {
                let mut col: Vec<f64> = d.rows_iter().map(|r| r[j]).collect();
                col.sort_by(|a, b| a.partial_cmp(b).unwrap());
                for (i, v) in col.iter().enumerate() {
                    proptest::prop_assert!(*v >= i as f64 / n as f64);
                    proptest::prop_assert!(*v <= (i + 1) as f64 / n as f64);
                }
            }
        }
    }
}
