//! Dense LU solves and power iteration.

use crate::error::{Error, Result};
use crate::scalar::{Real, Scalar};

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<S> {
    n: usize,
    data: Vec<S>,
}

impl<S: Scalar> Dense<S> {
    pub fn zeros(n: usize) -> Self {
        Dense {
            n,
            data: vec![S::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, S::one());
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &S {
        &self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: S) {
        self.data[i * self.n + j] = v;
    }

    pub fn add_to(&mut self, i: usize, j: usize, v: S) {
        let k = i * self.n + j;
        self.data[k] = self.data[k].clone() + v;
    }

    pub fn mul_vec(&self, x: &[S]) -> Vec<S> {
        (0..self.n)
            .map(|i| {
                (0..self.n).fold(S::zero(), |acc, j| acc + self.get(i, j).clone() * x[j].clone())
            })
            .collect()
    }

    /// Solve `self · x = b`. Exact for rational scalars.
    pub fn solve(&self, b: &[S]) -> Result<Vec<S>> {
        Ok(self.lu()?.solve(b))
    }

    /// LU factorisation with partial pivoting.
    pub fn lu(&self) -> Result<Lu<S>> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.iter().map(|x| x.abs().to_f64_lossy()).fold(0.0, f64::max).max(1.0);
        for col in 0..n {
            let mut piv = col;
            for r in col + 1..n {
                if a[r * n + col].abs() > a[piv * n + col].abs() {
                    piv = r;
                }
            }
            let p = a[piv * n + col].clone();
            if p.is_zero() || (!S::EXACT && p.abs().to_f64_lossy() <= scale * 1e-14) {
                return Err(Error::SolveFailure);
            }
            if piv != col {
                for j in 0..n {
                    a.swap(col * n + j, piv * n + j);
                }
                perm.swap(col, piv);
            }
            for r in col + 1..n {
                let f = a[r * n + col].clone() / p.clone();
                a[r * n + col] = f.clone();
                if f.is_zero() {
                    continue;
                }
                for j in col + 1..n {
                    let v = a[col * n + j].clone();
                    a[r * n + j] = a[r * n + j].clone() - f.clone() * v;
                }
            }
        }
        Ok(Lu { n, lu: a, perm })
    }
}

/// Packed `PA = LU` with unit lower triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct Lu<S> {
    n: usize,
    lu: Vec<S>,
    perm: Vec<usize>,
}

impl<S: Scalar> Lu<S> {
    pub fn solve(&self, b: &[S]) -> Vec<S> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut x: Vec<S> = self.perm.iter().map(|&i| b[i].clone()).collect();
        for i in 0..n {
            let mut acc = x[i].clone();
            for j in 0..i {
                acc = acc - self.lu[i * n + j].clone() * x[j].clone();
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = x[i].clone();
            for j in i + 1..n {
                acc = acc - self.lu[i * n + j].clone() * x[j].clone();
            }
            x[i] = acc / self.lu[i * n + i].clone();
        }
        x
    }
}

/// Result of [`power_iteration`].
#[derive(Debug, Clone, PartialEq)]
pub struct PowerResult<F> {
    pub value: F,
    pub vector: Vec<F>,
    pub iterations: usize,
}

/// Power iteration for a nonnegative operator `apply`, run on `apply + I`
/// from the uniform vector. Iterates are normalised in the 1-norm; stops when
/// successive iterates differ by less than `tol` in sup norm. The returned
/// value is `‖apply(x)‖_1 / ‖x‖_1`.
pub fn power_iteration<F: Real>(
    dim: usize,
    apply: impl Fn(&[F]) -> Vec<F>,
    tol: f64,
    max_iter: usize,
) -> Result<PowerResult<F>> {
    let tol = F::effective_tol(tol);
    let mut x = vec![F::one() / <F as Scalar>::from_usize(dim); dim];
    for it in 1..=max_iter {
        let ax = apply(&x);
        let mut y: Vec<F> = ax.iter().zip(&x).map(|(a, b)| *a + *b).collect();
        let norm = y.iter().fold(F::zero(), |s, v| s + v.abs());
        if norm <= F::zero() {
            return Err(Error::NoConvergence(it));
        }
        for v in y.iter_mut() {
            *v = *v / norm;
        }
        let diff = y
            .iter()
            .zip(&x)
            .fold(F::zero(), |m, (a, b)| m.max((*a - *b).abs()));
        x = y;
        if diff < tol {
            let ax = apply(&x);
            let num = ax.iter().fold(F::zero(), |s, v| s + v.abs());
            let den = x.iter().fold(F::zero(), |s, v| s + v.abs());
            return Ok(PowerResult {
                value: num / den,
                vector: x,
                iterations: it,
            });
        }
    }
    Err(Error::NoConvergence(max_iter))
}
