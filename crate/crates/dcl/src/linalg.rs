//! Symmetric tridiagonal kernels used by the form and semigroup engines.
//!
//! Piecewise-linear assembly on an interval only ever produces symmetric
//! tridiagonal matrices, so the whole laboratory runs on a `SymTriDiag`
//! type plus a Thomas-type LDLt solve and a QL eigensolver.

use serde::Serialize;

/// Symmetric tridiagonal matrix: `diag` of length n, `off` of length n-1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymTriDiag {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTriDiag {
    pub fn zeros(n: usize) -> Self {
        SymTriDiag {
            diag: vec![0.0; n],
            off: vec![0.0; n.saturating_sub(1)],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// y = A x
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        assert_eq!(x.len(), n, "matvec dimension mismatch");
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut v = self.diag[i] * x[i];
            if i > 0 {
                v += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                v += self.off[i] * x[i + 1];
            }
            y[i] = v;
        }
        y
    }

    /// x^T A y
    pub fn quad(&self, x: &[f64], y: &[f64]) -> f64 {
        let n = self.len();
        assert_eq!(x.len(), n);
        assert_eq!(y.len(), n);
        let mut s = 0.0;
        for i in 0..n {
            s += self.diag[i] * x[i] * y[i];
        }
        for i in 0..n - 1 {
            s += self.off[i] * (x[i] * y[i + 1] + x[i + 1] * y[i]);
        }
        s
    }

    /// x^T A x
    pub fn energy(&self, x: &[f64]) -> f64 {
        self.quad(x, x)
    }

    /// A + c*B
    pub fn add_scaled(&self, other: &SymTriDiag, c: f64) -> SymTriDiag {
        assert_eq!(self.len(), other.len());
        SymTriDiag {
            diag: self
                .diag
                .iter()
                .zip(&other.diag)
                .map(|(a, b)| a + c * b)
                .collect(),
            off: self
                .off
                .iter()
                .zip(&other.off)
                .map(|(a, b)| a + c * b)
                .collect(),
        }
    }

    /// Frobenius norm of self - other (counting off-diagonals twice).
    pub fn frobenius_distance(&self, other: &SymTriDiag) -> f64 {
        assert_eq!(self.len(), other.len());
        let mut s = 0.0;
        for (a, b) in self.diag.iter().zip(&other.diag) {
            s += (a - b) * (a - b);
        }
        for (a, b) in self.off.iter().zip(&other.off) {
            s += 2.0 * (a - b) * (a - b);
        }
        s.sqrt()
    }

    /// Solve A x = b by LDLt factorization without pivoting.
    /// Requires A symmetric positive definite (all our solves are with
    /// M + tau*K, which is an M-matrix for the lumped mass).
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.len();
        assert_eq!(b.len(), n);
        if n == 0 {
            return Vec::new();
        }
        // forward elimination
        let mut d = vec![0.0; n]; // pivot
        let mut l = vec![0.0; n.saturating_sub(1)]; // subdiagonal multipliers
        let mut y = vec![0.0; n];
        d[0] = self.diag[0];
        y[0] = b[0];
        for i in 1..n {
            let m = self.off[i - 1] / d[i - 1];
            l[i - 1] = m;
            d[i] = self.diag[i] - m * self.off[i - 1];
            y[i] = b[i] - m * y[i - 1];
        }
        let mut x = vec![0.0; n];
        x[n - 1] = y[n - 1] / d[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = y[i] / d[i] - l[i] * x[i + 1];
        }
        x
    }
}

/// Eigendecomposition of a symmetric tridiagonal matrix by the implicit-shift
/// QL algorithm (EISPACK tql2). Returns eigenvalues in ascending order and
/// the orthonormal eigenvectors as columns of a row-major dense matrix.
pub fn sym_tridiag_eigen(t: &SymTriDiag) -> (Vec<f64>, DenseCols) {
    let n = t.len();
    let mut d = t.diag.clone();
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(&t.off);
    // z starts as identity; columns become eigenvectors
    let mut z = vec![0.0; n * n];
    for i in 0..n {
        z[i * n + i] = 1.0;
    }
    for l in 0..n {
        let mut iter = 0;
        loop {
            // find small off-diagonal element
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter <= 50, "tql2 failed to converge");
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c) = (1.0, 1.0);
            let mut p = 0.0;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    f = z[k * n + i + 1];
                    z[k * n + i + 1] = s * z[k * n + i] + c * f;
                    z[k * n + i] = c * z[k * n + i] - s * f;
                }
            }
            if r == 0.0 && m > l + 1 {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    // sort ascending, permuting columns
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap());
    let vals: Vec<f64> = idx.iter().map(|&i| d[i]).collect();
    let mut cols = vec![0.0; n * n];
    for (new_j, &old_j) in idx.iter().enumerate() {
        for k in 0..n {
            cols[k * n + new_j] = z[k * n + old_j];
        }
    }
    (vals, DenseCols { n, data: cols })
}

/// Row-major dense n x n matrix whose columns are vectors of interest.
#[derive(Debug, Clone)]
pub struct DenseCols {
    pub n: usize,
    pub data: Vec<f64>,
}

impl DenseCols {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.n + col]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.n).map(|r| self.get(r, col)).collect()
    }

    /// y = A x
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(x.len(), n);
        let mut y = vec![0.0; n];
        for r in 0..n {
            let row = &self.data[r * n..(r + 1) * n];
            let mut s = 0.0;
            for c in 0..n {
                s += row[c] * x[c];
            }
            y[r] = s;
        }
        y
    }

    /// y = A^T x
    pub fn matvec_t(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(x.len(), n);
        let mut y = vec![0.0; n];
        for r in 0..n {
            let xr = x[r];
            if xr == 0.0 {
                continue;
            }
            let row = &self.data[r * n..(r + 1) * n];
            for c in 0..n {
                y[c] += row[c] * xr;
            }
        }
        y
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}
