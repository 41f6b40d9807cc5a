//! Linear solvers for the symmetric positive definite systems of the scheme.

use crate::error::{Error, Result};
use crate::fem::sparse::{dot, norm2, SparseMatrix};

/// Default relative residual tolerance for CG.
pub const DEFAULT_CG_TOL: f64 = 1e-10;

/// Conjugate gradients, optionally with a Jacobi preconditioner.
///
/// Stops when `||b - A x|| <= rel_tol * ||b||` and fails once `10 n`
/// iterations have been spent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConjugateGradient {
    pub rel_tol: f64,
    pub jacobi: bool,
}

impl Default for ConjugateGradient {
    fn default() -> Self {
        Self {
            rel_tol: DEFAULT_CG_TOL,
            jacobi: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CgSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
}

impl ConjugateGradient {
    pub fn new(rel_tol: f64) -> Result<Self> {
        if !(rel_tol > 0.0 && rel_tol < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "CG tolerance must lie in (0, 1), got {rel_tol}"
            )));
        }
        Ok(Self {
            rel_tol,
            jacobi: false,
        })
    }

    pub fn with_jacobi(mut self, jacobi: bool) -> Self {
        self.jacobi = jacobi;
        self
    }

    pub fn solve(&self, a: &SparseMatrix, b: &[f64], x0: Option<&[f64]>) -> Result<CgSolution> {
        let n = a.n_rows();
        if a.n_cols() != n || b.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "CG needs a square system, got {}x{} with rhs of length {}",
                a.n_rows(),
                a.n_cols(),
                b.len()
            )));
        }
        let b_norm = norm2(b);
        if b_norm == 0.0 {
            return Ok(CgSolution {
                x: vec![0.0; n],
                iterations: 0,
                relative_residual: 0.0,
            });
        }
        let inv_diag: Option<Vec<f64>> = if self.jacobi {
            Some(
                a.diagonal()
                    .into_iter()
                    .map(|d| if d > 0.0 { 1.0 / d } else { 1.0 })
                    .collect(),
            )
        } else {
            None
        };
        let precondition = |r: &[f64], z: &mut [f64]| match &inv_diag {
            Some(d) => z
                .iter_mut()
                .zip(r)
                .zip(d)
                .for_each(|((z, r), d)| *z = r * d),
            None => z.copy_from_slice(r),
        };

        let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
        let mut r = b.to_vec();
        if x0.is_some() {
            let ax = a.mul_vec(&x);
            r.iter_mut().zip(&ax).for_each(|(r, ax)| *r -= ax);
        }
        let target = self.rel_tol * b_norm;
        let mut res = norm2(&r);
        if res <= target {
            return Ok(CgSolution {
                x,
                iterations: 0,
                relative_residual: res / b_norm,
            });
        }

        let mut z = vec![0.0; n];
        precondition(&r, &mut z);
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let mut ap = vec![0.0; n];
        let max_iter = 10 * n.max(1);

        for it in 1..=max_iter {
            a.mul_vec_into(&p, &mut ap);
            let pap = dot(&p, &ap);
            if pap <= 0.0 {
                return Err(Error::NotConverged {
                    iterations: it,
                    residual: res / b_norm,
                });
            }
            let step = rz / pap;
            x.iter_mut().zip(&p).for_each(|(x, p)| *x += step * p);
            r.iter_mut().zip(&ap).for_each(|(r, ap)| *r -= step * ap);
            res = norm2(&r);
            if res <= target {
                return Ok(CgSolution {
                    x,
                    iterations: it,
                    relative_residual: res / b_norm,
                });
            }
            precondition(&r, &mut z);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            p.iter_mut().zip(&z).for_each(|(p, z)| *p = z + beta * *p);
        }
        Err(Error::NotConverged {
            iterations: max_iter,
            residual: res / b_norm,
        })
    }
}

/// Solves `A x = b` by unpreconditioned CG to relative residual `rel_tol`.
pub fn cg_solve(a: &SparseMatrix, b: &[f64], rel_tol: f64) -> Result<Vec<f64>> {
    Ok(ConjugateGradient::new(rel_tol)?.solve(a, b, None)?.x)
}

/// Cholesky factor of an SPD matrix in profile (skyline) storage.
///
/// Row `i` of the lower factor is stored from its first structural nonzero
/// column up to the diagonal, so fill-in stays inside the envelope.
#[derive(Debug, Clone)]
pub struct SkylineCholesky {
    first: Vec<usize>,
    offsets: Vec<usize>,
    data: Vec<f64>,
}

impl SkylineCholesky {
    pub fn factor(a: &SparseMatrix) -> Result<Self> {
        let n = a.n_rows();
        if a.n_cols() != n {
            return Err(Error::ShapeMismatch(
                "Cholesky needs a square matrix".into(),
            ));
        }
        let first: Vec<usize> = (0..n)
            .map(|i| a.row(i).0.first().copied().unwrap_or(i).min(i))
            .collect();
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for i in 0..n {
            offsets.push(offsets[i] + (i - first[i] + 1));
        }
        let mut data = vec![0.0; offsets[n]];
        for i in 0..n {
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if j <= i {
                    data[offsets[i] + j - first[i]] = v;
                }
            }
        }

        for i in 0..n {
            let fi = first[i];
            let row_i = offsets[i];
            for j in fi..=i {
                let fj = first[j];
                let row_j = offsets[j];
                let lo = fi.max(fj);
                let mut s = data[row_i + j - fi];
                for k in lo..j {
                    s -= data[row_i + k - fi] * data[row_j + k - fj];
                }
                if j < i {
                    data[row_i + j - fi] = s / data[row_j + j - fj];
                } else {
                    if s.is_nan() || s <= 0.0 {
                        return Err(Error::Factorization(format!(
                            "matrix is not positive definite (pivot {s:.3e} at row {i})"
                        )));
                    }
                    data[row_i + i - fi] = s.sqrt();
                }
            }
        }
        Ok(Self {
            first,
            offsets,
            data,
        })
    }

    pub fn dim(&self) -> usize {
        self.first.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.dim();
        assert_eq!(x.len(), n);
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.data[self.offsets[i]..self.offsets[i + 1]];
            let mut s = x[i];
            for k in fi..i {
                s -= row[k - fi] * x[k];
            }
            x[i] = s / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.data[self.offsets[i]..self.offsets[i + 1]];
            x[i] /= row[i - fi];
            let xi = x[i];
            for k in fi..i {
                x[k] -= row[k - fi] * xi;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(n: usize, seed: u64) -> (SparseMatrix, nalgebra::DMatrix<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = nalgebra::DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let dense = &b * b.transpose() + nalgebra::DMatrix::identity(n, n) * (n as f64);
        let mut triplets = Vec::new();
        for i in 0..n {
            for j in 0..n {
                triplets.push((i, j, dense[(i, j)]));
            }
        }
        (SparseMatrix::from_triplets(n, n, &triplets).unwrap(), dense)
    }

    #[test]
    fn identity_converges_in_one_iteration() {
        let b = vec![1.0, -2.0, 3.5];
        let sol = ConjugateGradient::new(1e-10)
            .unwrap()
            .solve(&SparseMatrix::identity(3), &b, None)
            .unwrap();
        assert_eq!(sol.iterations, 1);
        assert_eq!(sol.x, b);
    }

    #[test]
    fn diagonal_solve() {
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (1, 1, 3.0)]).unwrap();
        let x = cg_solve(&a, &[2.0, 3.0], 1e-12).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn random_spd_matches_dense_lu() {
        let (a, dense) = random_spd(20, 7);
        let b: Vec<f64> = (0..20).map(|i| (i as f64 * 0.37).sin()).collect();
        let x = cg_solve(&a, &b, 1e-10).unwrap();
        let oracle = dense.lu().solve(&nalgebra::DVector::from_vec(b)).unwrap();
        let err: f64 = x
            .iter()
            .zip(oracle.iter())
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(err / oracle.norm() <= 1e-8);
    }

    #[test]
    fn zero_rhs_returns_zero() {
        let (a, _) = random_spd(5, 1);
        assert_eq!(cg_solve(&a, &[0.0; 5], 1e-10).unwrap(), vec![0.0; 5]);
    }

    #[test]
    fn bad_tolerance_rejected() {
        assert!(ConjugateGradient::new(0.0).is_err());
        assert!(ConjugateGradient::new(1.0).is_err());
    }

    #[test]
    fn iteration_cap_reports_residual() {
        // Indefinite system: CG cannot make progress.
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 1, -1.0)]).unwrap();
        match cg_solve(&a, &[1.0, 1.0], 1e-10) {
            Err(Error::NotConverged { residual, .. }) => assert!(residual > 0.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn skyline_cholesky_matches_dense_lu() {
        let (a, dense) = random_spd(15, 3);
        let b: Vec<f64> = (0..15).map(|i| 1.0 + i as f64).collect();
        let x = SkylineCholesky::factor(&a).unwrap().solve(&b);
        let oracle = dense.lu().solve(&nalgebra::DVector::from_vec(b)).unwrap();
        for (a, b) in x.iter().zip(oracle.iter()) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn skyline_handles_banded_profile() {
        // Tridiagonal 1D Laplacian plus shift.
        let n = 50;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.5));
            if i > 0 {
                t.push((i, i - 1, -1.0));
                t.push((i - 1, i, -1.0));
            }
        }
        let a = SparseMatrix::from_triplets(n, n, &t).unwrap();
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64).cos()).collect();
        let b = a.mul_vec(&x_true);
        let x = SkylineCholesky::factor(&a).unwrap().solve(&b);
        for (a, b) in x.iter().zip(&x_true) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn skyline_rejects_indefinite() {
        let a = SparseMatrix::from_triplets(
            2,
            2,
            &[(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)],
        )
        .unwrap();
        assert!(matches!(
            SkylineCholesky::factor(&a),
            Err(Error::Factorization(_))
        ));
    }
}
