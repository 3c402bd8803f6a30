//! Lawson-Hanson active-set non-negative least squares.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Solves `min ||A x - b||₂` subject to `x ≥ 0`.
///
/// Deterministic: ties in the entering-variable choice go to the lowest column.
/// The optimality tolerance is relative to `||A|| · ||b||`, so scaling `b` by a
/// power of two scales the solution exactly.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let (m, n) = a.shape();
    if b.len() != m {
        return Err(Error::invalid(format!("nnls: A has {m} rows, b has {}", b.len())));
    }
    let col_norm = (0..n).map(|j| a.column(j).norm()).fold(0.0, f64::max);
    let tol = 10.0 * f64::EPSILON * (m.max(n) as f64) * col_norm * b.norm();

    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    let max_iter = 30 * n.max(1);
    let mut iter = 0;

    let gradient = |x: &DVector<f64>| a.transpose() * (b - a * x);
    let mut w = gradient(&x);
    // columns rejected for numerical reasons in the current outer step
    let mut blocked = vec![false; n];

    loop {
        let enter = (0..n)
            .filter(|&j| !passive[j] && !blocked[j] && w[j] > tol)
            .fold(None, |best: Option<usize>, j| match best {
                Some(k) if w[k] >= w[j] => Some(k),
                _ => Some(j),
            });
        let Some(j) = enter else { break };
        passive[j] = true;

        loop {
            iter += 1;
            if iter > max_iter {
                return Err(Error::Numerical(format!("nnls did not terminate within {max_iter} iterations")));
            }
            let z = solve_passive(a, b, &passive)?;
            if passive[j] && z[j] <= 0.0 && x[j] == 0.0 {
                // the entering column cannot improve the fit in floating point
                passive[j] = false;
                blocked[j] = true;
                break;
            }
            if (0..n).filter(|&p| passive[p]).all(|p| z[p] > 0.0) {
                x = z;
                blocked.iter_mut().for_each(|b| *b = false);
                break;
            }
            let mut alpha = f64::INFINITY;
            for p in (0..n).filter(|&p| passive[p] && z[p] <= 0.0) {
                let step = x[p] / (x[p] - z[p]);
                if step < alpha {
                    alpha = step;
                }
            }
            for p in 0..n {
                x[p] += alpha * (z[p] - x[p]);
            }
            for p in 0..n {
                if passive[p] && x[p] <= 0.0 {
                    passive[p] = false;
                    x[p] = 0.0;
                }
            }
        }
        w = gradient(&x);
        if passive.iter().all(|&p| p) {
            break;
        }
    }
    Ok(x)
}

fn solve_passive(a: &DMatrix<f64>, b: &DVector<f64>, passive: &[bool]) -> Result<DVector<f64>> {
    let cols: Vec<usize> = (0..passive.len()).filter(|&j| passive[j]).collect();
    let sub = a.select_columns(&cols);
    let svd = sub.svd(true, true);
    let sol = svd
        .solve(b, f64::EPSILON)
        .map_err(|e| Error::Numerical(format!("least-squares solve failed: {e}")))?;
    let mut z = DVector::zeros(passive.len());
    for (k, &j) in cols.iter().enumerate() {
        z[j] = sol[k];
    }
    Ok(z)
}

/// 2-norm condition number `σ_max / σ_min`; infinite for rank-deficient input.
pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    let sv = a.singular_values();
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unconstrained_optimum_inside_quadrant() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let b = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let x = nnls(&a, &b).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn negative_unconstrained_component_clamps_to_zero() {
        // unconstrained solution (2, -1); constrained optimum puts x1 = 0
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let b = DVector::from_vec(vec![2.0, -1.0, 1.0]);
        let x = nnls(&a, &b).unwrap();
        assert_eq!(x[1], 0.0);
        // min over x0 of (x0-2)² + 1 + (x0-1)² → x0 = 1.5
        assert!((x[0] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn zero_target_gives_zero() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let x = nnls(&a, &DVector::zeros(2)).unwrap();
        assert_eq!(x, DVector::zeros(2));
    }

    #[test]
    fn all_negative_direction_gives_zero() {
        let a = DMatrix::from_row_slice(2, 1, &[1.0, 1.0]);
        let x = nnls(&a, &DVector::from_vec(vec![-1.0, -2.0])).unwrap();
        assert_eq!(x[0], 0.0);
    }

    #[test]
    fn condition_of_identity_and_singular() {
        assert!((condition_number(&DMatrix::identity(3, 3)) - 1.0).abs() < 1e-14);
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(condition_number(&s) > 1e15);
    }
}
