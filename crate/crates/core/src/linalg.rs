//! Dense symmetric positive-definite solves for the small normal-equation
//! systems used by the regression code.

/// Row-major square matrix.
#[derive(Debug, Clone)]
pub(crate) struct SymMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }

    /// Fills the upper triangle from the lower one.
    pub fn mirror_lower(&mut self) {
        for i in 0..self.n {
            for j in 0..i {
                let v = self.at(i, j);
                *self.at_mut(j, i) = v;
            }
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.at(i, j) * x[j]).sum())
            .collect()
    }
}

/// Lower Cholesky factor.
#[derive(Debug, Clone)]
pub(crate) struct Cholesky {
    l: SymMatrix,
}

impl Cholesky {
    /// Factors `a`. Fails when a pivot falls below `rel_tol` times the
    /// corresponding diagonal entry of `a`, which flags (numerical) rank
    /// deficiency.
    pub fn new(a: &SymMatrix, rel_tol: f64) -> Option<Self> {
        let n = a.n;
        let mut l = SymMatrix::zeros(n);
        for j in 0..n {
            let mut d = a.at(j, j);
            for k in 0..j {
                d -= l.at(j, k) * l.at(j, k);
            }
            let scale = a.at(j, j).abs().max(f64::MIN_POSITIVE);
            if !(d > rel_tol * scale) {
                return None;
            }
            let ljj = d.sqrt();
            *l.at_mut(j, j) = ljj;
            for i in (j + 1)..n {
                let mut s = a.at(i, j);
                for k in 0..j {
                    s -= l.at(i, k) * l.at(j, k);
                }
                *l.at_mut(i, j) = s / ljj;
            }
        }
        Some(Self { l })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.l.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l.at(i, k) * y[k];
            }
            y[i] = s / self.l.at(i, i);
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= self.l.at(k, i) * y[k];
            }
            y[i] = s / self.l.at(i, i);
        }
        y
    }
}
