//! Small exact and dense linear-algebra helpers.

use nalgebra::{DMatrix, DVector};
use num_rational::Ratio;
use num_traits::Zero;

type Q = Ratio<i128>;

/// Rank of an integer matrix by exact rational row reduction.
pub fn exact_rank(rows: &[Vec<i64>]) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let cols = rows[0].len();
    let mut m: Vec<Vec<Q>> = rows
        .iter()
        .map(|r| r.iter().map(|&v| Q::from_integer(v as i128)).collect())
        .collect();
    let mut rank = 0;
    for col in 0..cols {
        let Some(pivot) = (rank..m.len()).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(rank, pivot);
        let pivot_row = m[rank].clone();
        let p = pivot_row[col];
        for (r, row) in m.iter_mut().enumerate() {
            if r != rank && !row[col].is_zero() {
                let f = row[col] / p;
                for (x, &y) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                    *x -= y * f;
                }
            }
        }
        rank += 1;
        if rank == m.len() {
            break;
        }
    }
    rank
}

pub fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Divides an integer vector by the gcd of its entries.
pub fn primitive(v: &mut [i64]) {
    let g = v.iter().fold(0, |g, &x| gcd(g, x));
    if g > 1 {
        v.iter_mut().for_each(|x| *x /= g);
    }
}

/// Solves `a x = b` by LU with partial pivoting; `None` when singular.
pub fn solve_dense(a: DMatrix<f64>, b: DVector<f64>) -> Option<DVector<f64>> {
    a.lu().solve(&b)
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// True when the entries differ by at most `tol` relative to the larger magnitude.
pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_of_dependent_rows() {
        assert_eq!(exact_rank(&[vec![1, 2], vec![2, 4]]), 1);
        assert_eq!(exact_rank(&[vec![1, 0], vec![0, 1], vec![1, 1]]), 2);
        assert_eq!(exact_rank(&[vec![0, 0]]), 0);
    }

    #[test]
    fn primitive_divides_gcd() {
        let mut v = vec![4, -6, 0];
        primitive(&mut v);
        assert_eq!(v, vec![2, -3, 0]);
    }
}
