//! Minimal dense complex matrices for representation and density-matrix work.
//!
//! Dimensions here top out at the Borel order `q(q-1)`, a few hundred, so a
//! plain row-major `Vec<Complex64>` is all that is needed.

use num_complex::Complex64;

#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        CMatrix { n, data: vec![Complex64::new(0.0, 0.0); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMatrix::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = CMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = f(i, j);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    pub fn add_assign_at(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.n + j] += v;
    }

    pub fn mul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.n, other.n, "dimension mismatch");
        let n = self.n;
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn dagger(&self) -> CMatrix {
        let n = self.n;
        CMatrix::from_fn(n, |i, j| self.data[j * n + i].conj())
    }

    pub fn scale(&self, c: Complex64) -> CMatrix {
        CMatrix { n: self.n, data: self.data.iter().map(|&x| c * x).collect() }
    }

    pub fn add(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.n, other.n, "dimension mismatch");
        CMatrix {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.n).map(|i| self.data[i * self.n + i]).sum()
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.n, v.len(), "dimension mismatch");
        let n = self.n;
        (0..n)
            .map(|i| (0..n).map(|j| self.data[i * n + j] * v[j]).sum())
            .collect()
    }

    /// `self += w |v><v|`.
    pub fn accumulate_outer(&mut self, v: &[Complex64], w: f64) {
        assert_eq!(self.n, v.len(), "dimension mismatch");
        let n = self.n;
        for i in 0..n {
            if v[i].norm_sqr() == 0.0 {
                continue;
            }
            for j in 0..n {
                self.data[i * n + j] += w * v[i] * v[j].conj();
            }
        }
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!(self.n, other.n, "dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise deviation of `U U^dagger` from the identity.
    pub fn unitarity_residual(&self) -> f64 {
        self.mul(&self.dagger()).max_abs_diff(&CMatrix::identity(self.n))
    }

    /// Largest entrywise deviation from Hermitian symmetry.
    pub fn hermiticity_residual(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.data[i * n + j] - self.data[j * n + i].conj()).norm());
            }
        }
        worst
    }
}
