use crate::scalar::Scalar;

/// Solves the dense row-major `n × n` system `a · x = rhs` by Gaussian
/// elimination with partial pivoting. Returns the solution together with
/// `det(a)`; the solution is `None` when a pivot vanishes exactly.
pub(crate) fn solve_with_det<T: Scalar>(mut a: Vec<T>, mut rhs: Vec<T>) -> (Option<Vec<T>>, T) {
    let n = rhs.len();
    debug_assert_eq!(a.len(), n * n);
    let mut det = T::one();
    for col in 0..n {
        let mut pivot = col;
        for row in col + 1..n {
            if a[row * n + col].abs() > a[pivot * n + col].abs() {
                pivot = row;
            }
        }
        if a[pivot * n + col] == T::zero() {
            return (None, T::zero());
        }
        if pivot != col {
            for k in 0..n {
                a.swap(pivot * n + k, col * n + k);
            }
            rhs.swap(pivot, col);
            det = -det;
        }
        let p = a[col * n + col];
        det = det * p;
        for row in col + 1..n {
            let factor = a[row * n + col] / p;
            if factor == T::zero() {
                continue;
            }
            for k in col..n {
                let v = a[col * n + k];
                a[row * n + k] = a[row * n + k] - factor * v;
            }
            rhs[row] = rhs[row] - factor * rhs[col];
        }
    }
    for row in (0..n).rev() {
        let mut tail = T::zero();
        for k in row + 1..n {
            tail = tail + a[row * n + k] * rhs[k];
        }
        rhs[row] = (rhs[row] - tail) / a[row * n + row];
    }
    (Some(rhs), det)
}
