//! Small dense matrices and the matrix exponential.
//!
//! Matrices here are at most a few hundred rows, so a row-major `Vec<f64>`
//! with naive triple loops is plenty.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::error::{contract, domain, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Builds from rows; all rows must have the same length as the row count.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(contract!("matrix rows must all have length {n}"));
        }
        Ok(Self { n, data: rows.concat() })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { n: self.n, data: self.data.iter().map(|v| v * factor).collect() }
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        debug_assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let src = other.row(k);
                let dst = &mut out.data[i * n..(i + 1) * n];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(self.n, x.len());
        (0..self.n)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    fn add_scaled(&mut self, other: &Matrix, factor: f64) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += factor * b;
        }
    }

    fn add_identity(&mut self, factor: f64) {
        for i in 0..self.n {
            self[(i, i)] += factor;
        }
    }

    /// Solves `self * X = rhs` by LU with partial pivoting.
    pub fn solve(&self, rhs: &Matrix) -> Result<Matrix> {
        let n = self.n;
        let mut lu = self.clone();
        let mut x = rhs.clone();
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&a, &b| lu[(a, col)].abs().total_cmp(&lu[(b, col)].abs()))
                .unwrap_or(col);
            if lu[(pivot, col)] == 0.0 {
                return Err(domain!("singular matrix in linear solve"));
            }
            if pivot != col {
                for j in 0..n {
                    lu.data.swap(pivot * n + j, col * n + j);
                    x.data.swap(pivot * n + j, col * n + j);
                }
            }
            let p = lu[(col, col)];
            for r in col + 1..n {
                let f = lu[(r, col)] / p;
                if f == 0.0 {
                    continue;
                }
                for j in col..n {
                    lu[(r, j)] -= f * lu[(col, j)];
                }
                for j in 0..n {
                    x[(r, j)] -= f * x[(col, j)];
                }
            }
        }
        for col in (0..n).rev() {
            let p = lu[(col, col)];
            for j in 0..n {
                x[(col, j)] /= p;
            }
            for r in 0..col {
                let f = lu[(r, col)];
                if f == 0.0 {
                    continue;
                }
                for j in 0..n {
                    x[(r, j)] -= f * x[(col, j)];
                }
            }
        }
        Ok(x)
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

// Padé degrees and 1-norm thresholds from Higham (2005), "The scaling and
// squaring method for the matrix exponential revisited".
const THETA: [(usize, f64); 4] = [
    (3, 1.495_585_217_958_292e-2),
    (5, 2.539_398_330_063_23e-1),
    (7, 9.504_178_996_162_932e-1),
    (9, 2.097_847_961_257_068),
];
const THETA_13: f64 = 5.371_920_351_148_152;

const PADE_3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE_5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE_7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const PADE_9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE_13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Matrix exponential by scaling and squaring with a diagonal Padé
/// approximant of degree 3 to 13.
pub fn expm(m: &Matrix) -> Result<Matrix> {
    if !m.is_finite() {
        return Err(domain!("matrix exponential needs finite entries"));
    }
    let n = m.dim();
    if n == 0 {
        return Ok(Matrix::zeros(0));
    }
    let norm = m.norm_one();
    for (degree, theta) in THETA {
        if norm <= theta {
            return pade_low(m, degree);
        }
    }
    let mut squarings = 0u32;
    if norm > THETA_13 {
        squarings = libm::ceil(libm::log2(norm / THETA_13)).max(0.0) as u32;
    }
    let scaled = m.scaled(libm::ldexp(1.0, -(squarings as i32)));
    let mut e = pade_13(&scaled)?;
    for _ in 0..squarings {
        e = e.matmul(&e);
    }
    Ok(e)
}

fn pade_low(a: &Matrix, degree: usize) -> Result<Matrix> {
    let b: &[f64] = match degree {
        3 => &PADE_3,
        5 => &PADE_5,
        7 => &PADE_7,
        _ => &PADE_9,
    };
    let n = a.dim();
    let a2 = a.matmul(a);
    // Even powers A^0, A^2, A^4, ...
    let mut powers = vec![Matrix::identity(n), a2.clone()];
    while powers.len() * 2 <= degree {
        let next = powers.last().unwrap().matmul(&a2);
        powers.push(next);
    }
    let mut u_inner = Matrix::zeros(n);
    let mut v = Matrix::zeros(n);
    for (j, p) in powers.iter().enumerate() {
        v.add_scaled(p, b[2 * j]);
        u_inner.add_scaled(p, b[2 * j + 1]);
    }
    let u = a.matmul(&u_inner);
    pade_ratio(u, v)
}

fn pade_13(a: &Matrix) -> Result<Matrix> {
    let b = &PADE_13;
    let n = a.dim();
    let a2 = a.matmul(a);
    let a4 = a2.matmul(&a2);
    let a6 = a4.matmul(&a2);

    let mut w1 = Matrix::zeros(n);
    w1.add_scaled(&a6, b[13]);
    w1.add_scaled(&a4, b[11]);
    w1.add_scaled(&a2, b[9]);
    let mut w2 = Matrix::zeros(n);
    w2.add_scaled(&a6, b[7]);
    w2.add_scaled(&a4, b[5]);
    w2.add_scaled(&a2, b[3]);
    w2.add_identity(b[1]);
    let mut inner = a6.matmul(&w1);
    inner.add_scaled(&w2, 1.0);
    let u = a.matmul(&inner);

    let mut z1 = Matrix::zeros(n);
    z1.add_scaled(&a6, b[12]);
    z1.add_scaled(&a4, b[10]);
    z1.add_scaled(&a2, b[8]);
    let mut v = a6.matmul(&z1);
    v.add_scaled(&a6, b[6]);
    v.add_scaled(&a4, b[4]);
    v.add_scaled(&a2, b[2]);
    v.add_identity(b[0]);
    pade_ratio(u, v)
}

/// `(V - U)^{-1} (V + U)`.
fn pade_ratio(u: Matrix, v: Matrix) -> Result<Matrix> {
    let mut p = v.clone();
    p.add_scaled(&u, 1.0);
    let mut q = v;
    q.add_scaled(&u, -1.0);
    q.solve(&p)
}
