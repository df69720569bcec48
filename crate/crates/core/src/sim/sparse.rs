use num_complex::Complex64;

/// Hermitian matrix in compressed sparse row form.
///
/// Entries within a row are sorted by column, so iteration order is
/// row-major and independent of how the matrix was assembled.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseHamiltonian {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<Complex64>,
    /// Copy of `values` when every entry is real; halves the matvec cost.
    real_values: Option<Vec<f64>>,
}

/// Collects matrix elements; each off-diagonal element is stored together
/// with its conjugate partner so the result is Hermitian by construction.
#[derive(Debug, Default)]
pub struct HermitianBuilder {
    dim: usize,
    triplets: Vec<(usize, usize, Complex64)>,
}

impl HermitianBuilder {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            triplets: Vec::new(),
        }
    }

    pub fn with_capacity(dim: usize, capacity: usize) -> Self {
        Self {
            dim,
            triplets: Vec::with_capacity(capacity),
        }
    }

    pub fn diagonal(&mut self, i: usize, value: f64) {
        assert!(i < self.dim);
        if value != 0.0 {
            self.triplets.push((i, i, Complex64::new(value, 0.0)));
        }
    }

    /// Adds `value` at `(row, col)` and `conj(value)` at `(col, row)`.
    pub fn pair(&mut self, row: usize, col: usize, value: Complex64) {
        assert!(row < self.dim && col < self.dim && row != col);
        if value != Complex64::new(0.0, 0.0) {
            self.triplets.push((row, col, value));
            self.triplets.push((col, row, value.conj()));
        }
    }

    pub fn build(mut self) -> SparseHamiltonian {
        self.triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; self.dim + 1];
        let mut col_idx = Vec::with_capacity(self.triplets.len());
        let mut values: Vec<Complex64> = Vec::with_capacity(self.triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in self.triplets {
            if last == Some((r, c)) {
                *values.last_mut().expect("duplicate follows an entry") += v;
                continue;
            }
            last = Some((r, c));
            row_ptr[r + 1] += 1;
            col_idx.push(c);
            values.push(v);
        }
        for r in 0..self.dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        let real_values = values
            .iter()
            .all(|v| v.im == 0.0)
            .then(|| values.iter().map(|v| v.re).collect());
        SparseHamiltonian {
            dim: self.dim,
            row_ptr,
            col_idx,
            values,
            real_values,
        }
    }
}

impl SparseHamiltonian {
    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `(row, col, value)` in canonical row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.dim).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.col_idx[k], self.values[k]))
        })
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        let range = self.row_ptr[row]..self.row_ptr[row + 1];
        match self.col_idx[range.clone()].binary_search(&col) {
            Ok(pos) => self.values[range.start + pos],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    /// `y = H x`.
    pub fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        if let Some(real) = &self.real_values {
            for (r, out) in y.iter_mut().enumerate() {
                let (mut re, mut im) = (0.0, 0.0);
                for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                    let x = x[self.col_idx[k]];
                    re += real[k] * x.re;
                    im += real[k] * x.im;
                }
                *out = Complex64::new(re, im);
            }
            return;
        }
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *out = acc;
        }
    }

    /// `max |H_ij - conj(H_ji)|` over stored entries.
    pub fn hermiticity_error(&self) -> f64 {
        self.entries()
            .map(|(r, c, v)| (v - self.get(c, r).conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_error() == 0.0
    }

    pub fn is_real(&self) -> bool {
        self.real_values.is_some()
    }

    pub fn is_diagonal(&self) -> bool {
        self.entries().all(|(r, c, _)| r == c)
    }

    /// Bound on the spectral radius from row sums (Gershgorin).
    pub fn norm_bound(&self) -> f64 {
        (0..self.dim)
            .map(|r| {
                (self.row_ptr[r]..self.row_ptr[r + 1])
                    .map(|k| self.values[k].norm())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}
