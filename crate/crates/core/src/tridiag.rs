//! Tridiagonal matrices and the Thomas algorithm.

use crate::error::{Error, Result};

/// Square tridiagonal matrix stored by diagonals.
///
/// `sub[i]` sits at row `i + 1`, column `i`; `sup[i]` at row `i`, column `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalMatrix {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
}

impl TridiagonalMatrix {
    pub fn new(sub: Vec<f64>, diag: Vec<f64>, sup: Vec<f64>) -> Result<Self> {
        let n = diag.len();
        if n == 0 {
            return Err(Error::InvalidArgument("empty tridiagonal matrix".into()));
        }
        if sub.len() != n - 1 || sup.len() != n - 1 {
            return Err(Error::InvalidArgument(format!(
                "off-diagonals must have length {}, got sub={} sup={}",
                n - 1,
                sub.len(),
                sup.len()
            )));
        }
        Ok(Self { sub, diag, sup })
    }

    /// Constant-diagonal (Toeplitz) matrix of size `n`.
    pub fn constant(n: usize, sub: f64, diag: f64, sup: f64) -> Self {
        assert!(n > 0);
        Self {
            sub: vec![sub; n - 1],
            diag: vec![diag; n],
            sup: vec![sup; n - 1],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::constant(n, 0.0, 1.0, 0.0)
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(x.len(), n, "tridiagonal product: length mismatch");
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.sub[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.sup[i] * x[i + 1];
            }
            y[i] = acc;
        }
        y
    }

    /// `x^T A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let ay = self.mul_vec(y);
        x.iter().zip(&ay).map(|(a, b)| a * b).sum()
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, s: f64, other: &TridiagonalMatrix) -> TridiagonalMatrix {
        assert_eq!(self.dim(), other.dim());
        let zip = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x + s * y).collect();
        TridiagonalMatrix {
            sub: zip(&self.sub, &other.sub),
            diag: zip(&self.diag, &other.diag),
            sup: zip(&self.sup, &other.sup),
        }
    }

    pub fn norm_inf(&self) -> f64 {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i].abs();
                if i > 0 {
                    s += self.sub[i - 1].abs();
                }
                if i + 1 < n {
                    s += self.sup[i].abs();
                }
                s
            })
            .fold(0.0, f64::max)
    }

    /// LU factorization without pivoting, reusable across right-hand sides.
    pub fn factor(&self) -> Result<TridiagonalFactor> {
        let n = self.dim();
        let tiny = f64::EPSILON * self.norm_inf().max(f64::MIN_POSITIVE);
        let mut upper_diag = vec![0.0; n];
        let mut lower = vec![0.0; n.saturating_sub(1)];
        upper_diag[0] = self.diag[0];
        if upper_diag[0].abs() <= tiny || !upper_diag[0].is_finite() {
            return Err(Error::SingularSystem { row: 0 });
        }
        for i in 1..n {
            let l = self.sub[i - 1] / upper_diag[i - 1];
            lower[i - 1] = l;
            upper_diag[i] = self.diag[i] - l * self.sup[i - 1];
            if upper_diag[i].abs() <= tiny || !upper_diag[i].is_finite() {
                return Err(Error::SingularSystem { row: i });
            }
        }
        Ok(TridiagonalFactor {
            lower,
            upper_diag,
            sup: self.sup.clone(),
        })
    }
}

/// Thomas-algorithm factors of a [`TridiagonalMatrix`].
#[derive(Debug, Clone)]
pub struct TridiagonalFactor {
    lower: Vec<f64>,
    upper_diag: Vec<f64>,
    sup: Vec<f64>,
}

impl TridiagonalFactor {
    pub fn dim(&self) -> usize {
        self.upper_diag.len()
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: b.len(),
            });
        }
        let mut x = b.to_vec();
        for i in 1..n {
            x[i] -= self.lower[i - 1] * x[i - 1];
        }
        x[n - 1] /= self.upper_diag[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = (x[i] - self.sup[i] * x[i + 1]) / self.upper_diag[i];
        }
        Ok(x)
    }
}

/// Solves `A x = b`.
pub fn solve_tridiagonal(a: &TridiagonalMatrix, b: &[f64]) -> Result<Vec<f64>> {
    a.factor()?.solve(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        // Gaussian elimination with partial pivoting.
        let n = b.len();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a[i][k].abs().partial_cmp(&a[j][k].abs()).unwrap())
                .unwrap();
            a.swap(k, p);
            b.swap(k, p);
            for i in k + 1..n {
                let f = a[i][k] / a[k][k];
                for j in k..n {
                    a[i][j] -= f * a[k][j];
                }
                b[i] -= f * b[k];
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
            x[i] = (b[i] - s) / a[i][i];
        }
        x
    }

    fn to_dense(a: &TridiagonalMatrix) -> Vec<Vec<f64>> {
        let n = a.dim();
        let mut d = vec![vec![0.0; n]; n];
        for i in 0..n {
            d[i][i] = a.diag[i];
            if i + 1 < n {
                d[i][i + 1] = a.sup[i];
                d[i + 1][i] = a.sub[i];
            }
        }
        d
    }

    #[test]
    fn identity_solve() {
        let x = solve_tridiagonal(&TridiagonalMatrix::identity(3), &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(x, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn two_by_two_laplacian() {
        let a = TridiagonalMatrix::constant(2, -1.0, 2.0, -1.0);
        let x = solve_tridiagonal(&a, &[1.0, 0.0]).unwrap();
        assert!((x[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((x[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn random_spd_matches_dense_elimination() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [1usize, 2, 5, 17, 64] {
            let sub: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let diag: Vec<f64> = (0..n).map(|_| 2.5 + rng.gen::<f64>()).collect();
            let a = TridiagonalMatrix::new(sub.clone(), diag, sub).unwrap();
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let x = solve_tridiagonal(&a, &b).unwrap();
            let oracle = dense_solve(to_dense(&a), b.clone());
            for (xi, oi) in x.iter().zip(&oracle) {
                assert!((xi - oi).abs() < 1e-10);
            }
            let r = a.mul_vec(&x);
            let bmax = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (ri, bi) in r.iter().zip(&b) {
                assert!((ri - bi).abs() <= 1e-10 * bmax);
            }
        }
    }

    #[test]
    fn zero_pivot_is_reported() {
        let a = TridiagonalMatrix::new(vec![1.0], vec![0.0, 1.0], vec![1.0]).unwrap();
        assert!(matches!(
            solve_tridiagonal(&a, &[1.0, 1.0]),
            Err(Error::SingularSystem { row: 0 })
        ));
        let a = TridiagonalMatrix::new(vec![1.0], vec![1.0, 1.0], vec![1.0]).unwrap();
        assert!(matches!(
            solve_tridiagonal(&a, &[1.0, 1.0]),
            Err(Error::SingularSystem { row: 1 })
        ));
    }

    #[test]
    fn bad_shapes_rejected() {
        assert!(TridiagonalMatrix::new(vec![], vec![1.0, 2.0], vec![0.0]).is_err());
        assert!(TridiagonalMatrix::new(vec![], vec![], vec![]).is_err());
    }
}
