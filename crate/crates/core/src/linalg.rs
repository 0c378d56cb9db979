//! Small dense-matrix helpers: determinant, cofactor matrix, and a linear
//! least-squares solve. Matrices here are tiny (n <= 5 for Hessians, ~10
//! unknowns for quadratic fits), so plain Gaussian elimination is plenty.

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub n: usize,
    pub a: Vec<f64>,
}

impl Mat {
    pub fn zeros(n: usize) -> Self {
        Mat { n, a: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn scale(&self, c: f64) -> Mat {
        Mat { n: self.n, a: self.a.iter().map(|v| v * c).collect() }
    }

    pub fn add(&self, other: &Mat) -> Mat {
        assert_eq!(self.n, other.n);
        Mat {
            n: self.n,
            a: self.a.iter().zip(&other.a).map(|(x, y)| x + y).collect(),
        }
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        assert_eq!(self.n, other.n);
        Mat {
            n: self.n,
            a: self.a.iter().zip(&other.a).map(|(x, y)| x - y).collect(),
        }
    }

    /// Frobenius norm.
    pub fn frob(&self) -> f64 {
        self.a.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Max absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Sum_ij self_ij other_ij (contraction of two symmetric matrices).
    pub fn contract(&self, other: &Mat) -> f64 {
        assert_eq!(self.n, other.n);
        self.a.iter().zip(&other.a).map(|(x, y)| x * y).sum()
    }

    pub fn det(&self) -> f64 {
        det_inplace(self.n, &mut self.a.clone())
    }

    /// Cofactor matrix C with C_ij = (-1)^(i+j) det(minor_ij). For symmetric
    /// input this equals the adjugate.
    pub fn cofactor_matrix(&self) -> Mat {
        let n = self.n;
        let mut c = Mat::zeros(n);
        if n == 1 {
            c[(0, 0)] = 1.0;
            return c;
        }
        let mut minor = vec![0.0; (n - 1) * (n - 1)];
        for i in 0..n {
            for j in 0..n {
                let mut idx = 0;
                for r in 0..n {
                    if r == i {
                        continue;
                    }
                    for col in 0..n {
                        if col == j {
                            continue;
                        }
                        minor[idx] = self[(r, col)];
                        idx += 1;
                    }
                }
                let d = det_inplace(n - 1, &mut minor.clone());
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                c[(i, j)] = sign * d;
            }
        }
        c
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self[(i, j)] * x[j]).sum())
            .collect()
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.a[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.a[i * self.n + j]
    }
}

fn det_inplace(n: usize, a: &mut [f64]) -> f64 {
    let mut det = 1.0;
    for k in 0..n {
        // partial pivot
        let mut piv = k;
        for r in k + 1..n {
            if a[r * n + k].abs() > a[piv * n + k].abs() {
                piv = r;
            }
        }
        if a[piv * n + k] == 0.0 {
            return 0.0;
        }
        if piv != k {
            for c in 0..n {
                a.swap(k * n + c, piv * n + c);
            }
            det = -det;
        }
        det *= a[k * n + k];
        for r in k + 1..n {
            let factor = a[r * n + k] / a[k * n + k];
            for c in k..n {
                a[r * n + c] -= factor * a[k * n + c];
            }
        }
    }
    det
}

/// Solve the linear system A x = b by Gaussian elimination with partial
/// pivoting. Returns None for a (numerically) singular system.
pub fn solve(a: &Mat, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.n;
    assert_eq!(b.len(), n);
    let mut m = a.a.clone();
    let mut rhs = b.to_vec();
    for k in 0..n {
        let mut piv = k;
        for r in k + 1..n {
            if m[r * n + k].abs() > m[piv * n + k].abs() {
                piv = r;
            }
        }
        if m[piv * n + k].abs() < 1e-300 {
            return None;
        }
        if piv != k {
            for c in 0..n {
                m.swap(k * n + c, piv * n + c);
            }
            rhs.swap(k, piv);
        }
        for r in k + 1..n {
            let f = m[r * n + k] / m[k * n + k];
            for c in k..n {
                m[r * n + c] -= f * m[k * n + c];
            }
            rhs[r] -= f * rhs[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let mut s = rhs[k];
        for c in k + 1..n {
            s -= m[k * n + c] * x[c];
        }
        x[k] = s / m[k * n + k];
    }
    Some(x)
}

/// Least squares: minimize |X beta - y|^2 over beta, where `rows` are the
/// design-matrix rows. Normal equations are fine at these sizes.
pub fn least_squares(rows: &[Vec<f64>], y: &[f64]) -> Option<Vec<f64>> {
    let p = rows.first()?.len();
    let mut ata = Mat::zeros(p);
    let mut aty = vec![0.0; p];
    for (row, &yi) in rows.iter().zip(y) {
        for i in 0..p {
            aty[i] += row[i] * yi;
            for j in 0..p {
                ata[(i, j)] += row[i] * row[j];
            }
        }
    }
    solve(&ata, &aty)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn det_and_cofactor_3x3() {
        let mut m = Mat::zeros(3);
        let vals = [2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 4.0];
        m.a.copy_from_slice(&vals);
        let d = m.det();
        assert!((d - (2.0 * (12.0 - 1.0) - 1.0 * 4.0)).abs() < 1e-12);
        // cofactor identity: M * adj(M) = det(M) I, adj = cof^T = cof (symmetric)
        let c = m.cofactor_matrix();
        for i in 0..3 {
            let col: Vec<f64> = (0..3).map(|j| c[(j, i)]).collect();
            let e = m.mul_vec(&col);
            for (j, v) in e.iter().enumerate() {
                let want = if i == j { d } else { 0.0 };
                assert!((v - want).abs() < 1e-10, "entry ({i},{j})");
            }
        }
    }

    #[test]
    fn cofactor_of_identity_any_n() {
        for n in 1..=5 {
            let c = Mat::identity(n).cofactor_matrix();
            assert!((c.sub(&Mat::identity(n))).max_abs() < 1e-14, "n={n}");
        }
    }

    #[test]
    fn solve_roundtrip() {
        let mut a = Mat::zeros(3);
        a.a.copy_from_slice(&[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 5.0]);
        let x = [1.5, -2.0, 0.25];
        let b = a.mul_vec(&x);
        let got = solve(&a, &b).unwrap();
        for (g, w) in got.iter().zip(&x) {
            assert!((g - w).abs() < 1e-12);
        }
    }

    #[test]
    fn least_squares_exact_fit() {
        // y = 2 + 3 t over 5 points
        let rows: Vec<Vec<f64>> = (0..5).map(|i| vec![1.0, i as f64]).collect();
        let y: Vec<f64> = (0..5).map(|i| 2.0 + 3.0 * i as f64).collect();
        let beta = least_squares(&rows, &y).unwrap();
        assert!((beta[0] - 2.0).abs() < 1e-12 && (beta[1] - 3.0).abs() < 1e-12);
    }
}
