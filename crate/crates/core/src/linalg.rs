//! Dense row-major matrices and the cyclic Jacobi eigensolver for symmetric matrices.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::invalid("ragged rows"));
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Largest `|a_ij - a_ji|`; `f64::INFINITY` for non-square input.
    pub fn asymmetry(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    fn off_diagonal_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                if i != j {
                    s += self[(i, j)] * self[(i, j)];
                }
            }
        }
        s.sqrt()
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Symmetry tolerance accepted by [`symmetric_eigen`], relative to `max(1, max|a_ij|)`.
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Convergence threshold on the off-diagonal Frobenius norm, relative to `‖A‖_F`.
pub const JACOBI_TOL: f64 = 1e-12;
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigenpairs of a symmetric matrix.
///
/// `values` are sorted descending (ties keep their original diagonal order) and
/// column `j` of `vectors` is the unit eigenvector for `values[j]`, with its
/// largest-magnitude entry made positive.
#[derive(Clone, Debug)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Matrix,
    pub sweeps: usize,
}

/// Cyclic Jacobi eigendecomposition `S = V Λ Vᵀ`.
pub fn symmetric_eigen(s: &Matrix) -> Result<SymmetricEigen> {
    if !s.is_square() {
        return Err(Error::invalid(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            s.rows(),
            s.cols()
        )));
    }
    let asym = s.asymmetry();
    if asym > SYMMETRY_TOL * s.max_abs().max(1.0) {
        return Err(Error::NotSymmetric(asym));
    }
    let n = s.rows();
    // symmetrize exactly so rotations act on a truly symmetric matrix
    let mut a = Matrix::from_fn(n, n, |i, j| 0.5 * (s[(i, j)] + s[(j, i)]));
    let mut v = Matrix::identity(n);
    let norm = a.frobenius_norm();

    let mut sweeps = 0;
    // a zero or 1x1 matrix is already diagonal
    while norm > 0.0 && n > 1 && a.off_diagonal_norm() > JACOBI_TOL * norm {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence {
                sweeps,
                residual: a.off_diagonal_norm(),
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    // stable sort: equal eigenvalues stay in index order
    order.sort_by(|&x, &y| a[(y, y)].total_cmp(&a[(x, x)]));
    let values: Vec<f64> = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = Matrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    fix_signs(&mut vectors);
    Ok(SymmetricEigen {
        values,
        vectors,
        sweeps,
    })
}

/// One Jacobi rotation annihilating `a[p][q]`.
fn rotate(a: &mut Matrix, v: &mut Matrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    if apq == 0.0 {
        return;
    }
    let n = a.rows();
    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
        sign / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = c * akp - s * akq;
        a[(k, q)] = s * akp + c * akq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = c * apk - s * aqk;
        a[(q, k)] = s * apk + c * aqk;
    }
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

/// Flip each column so that its largest-magnitude entry (first one on ties) is positive.
pub fn fix_signs(vectors: &mut Matrix) {
    for j in 0..vectors.cols() {
        let mut best = 0usize;
        let mut best_abs = -1.0;
        for i in 0..vectors.rows() {
            let x = vectors[(i, j)].abs();
            if x > best_abs {
                best_abs = x;
                best = i;
            }
        }
        if vectors.rows() > 0 && vectors[(best, j)] < 0.0 {
            for i in 0..vectors.rows() {
                vectors[(i, j)] = -vectors[(i, j)];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_decomposition(s: &Matrix, eig: &SymmetricEigen) {
        let n = s.rows();
        let scale = s.frobenius_norm().max(1.0);
        for j in 0..n {
            let v = eig.vectors.column(j);
            for i in 0..n {
                let sv: f64 = (0..n).map(|k| s[(i, k)] * v[k]).sum();
                assert!((sv - eig.values[j] * v[i]).abs() <= 1e-8 * scale);
            }
        }
        let vtv = eig.vectors.transpose().matmul(&eig.vectors);
        for i in 0..n {
            for j in 0..n {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((vtv[(i, j)] - expected).abs() < 1e-8);
            }
        }
        for w in eig.values.windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn identity_has_unit_eigenvalues() {
        let eig = symmetric_eigen(&Matrix::identity(3)).unwrap();
        assert_eq!(eig.values, vec![1.0, 1.0, 1.0]);
        assert_eq!(eig.vectors, Matrix::identity(3));
    }

    #[test]
    fn diagonal_is_axis_aligned() {
        let s = Matrix::from_rows(&[vec![3.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let eig = symmetric_eigen(&s).unwrap();
        assert_eq!(eig.values, vec![3.0, 1.0]);
        assert_eq!(eig.vectors, Matrix::identity(2));
    }

    #[test]
    fn two_by_two_characteristic_polynomial() {
        // det([[2-x,1],[1,2-x]]) = (x-3)(x-1)
        let s = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let eig = symmetric_eigen(&s).unwrap();
        assert!((eig.values[0] - 3.0).abs() < 1e-12);
        assert!((eig.values[1] - 1.0).abs() < 1e-12);
        check_decomposition(&s, &eig);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((eig.vectors[(0, 0)] - h).abs() < 1e-12);
        assert!((eig.vectors[(1, 0)] - h).abs() < 1e-12);
    }

    #[test]
    fn rejects_asymmetric_input() {
        let s = Matrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(symmetric_eigen(&s), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn random_symmetric_matrices_decompose() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for n in [1usize, 2, 5, 12, 30] {
            let mut s = Matrix::zeros(n, n);
            for i in 0..n {
                for j in i..n {
                    let x: f64 = rng.random_range(-2.0..2.0);
                    s[(i, j)] = x;
                    s[(j, i)] = x;
                }
            }
            let eig = symmetric_eigen(&s).unwrap();
            check_decomposition(&s, &eig);
            let sum: f64 = eig.values.iter().sum();
            assert!((sum - s.trace()).abs() < 1e-8);
        }
    }

    #[test]
    fn zero_matrix_is_trivial() {
        let eig = symmetric_eigen(&Matrix::zeros(4, 4)).unwrap();
        assert!(eig.values.iter().all(|&x| x == 0.0));
        assert_eq!(eig.sweeps, 0);
    }
}
