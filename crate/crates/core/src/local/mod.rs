//! Column-major dense matrices owned by a single rank, and the sequential
//! kernels the distributed algorithms are assembled from.

mod eig;
mod gemm;
mod norm;
mod qr;
pub mod rng;
mod svd;

use std::fmt;

use crate::error::{Error, Result};

pub use eig::{jacobi_sym_eig, SymEig};
pub use gemm::local_gemm;
pub use norm::{local_norm, NormKind};
pub(crate) use norm::sum_of_squares as norm_sum_of_squares;
pub use qr::{local_qr, qr_r_factor, Qr};
pub use svd::{jacobi_svd, normalize_column_signs, Svd};

/// Maximum Jacobi sweeps before reporting non-convergence.
pub const MAX_SWEEPS: usize = 30;
/// Jacobi off-diagonal threshold, relative to the squared Frobenius norm.
pub const JACOBI_TOL: f64 = 1e-14;

/// Element datatype. `D` is a 64-bit float, `I` a signed 64-bit integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tag {
    D,
    I,
}

impl Tag {
    pub fn suffix(self) -> &'static str {
        match self {
            Tag::D => "d",
            Tag::I => "i",
        }
    }

    pub fn from_suffix(s: &str) -> Result<Tag> {
        match s {
            "d" => Ok(Tag::D),
            "i" => Ok(Tag::I),
            other => Err(Error::UnknownTag(other.to_string())),
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.suffix())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scalar {
    D(f64),
    I(i64),
}

impl Scalar {
    pub fn tag(self) -> Tag {
        match self {
            Scalar::D(_) => Tag::D,
            Scalar::I(_) => Tag::I,
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Scalar::D(v) => v,
            Scalar::I(v) => v as f64,
        }
    }

    pub(crate) fn to_bits(self) -> u64 {
        match self {
            Scalar::D(v) => v.to_bits(),
            Scalar::I(v) => v as u64,
        }
    }

    pub(crate) fn from_bits(tag: Tag, bits: u64) -> Scalar {
        match tag {
            Tag::D => Scalar::D(f64::from_bits(bits)),
            Tag::I => Scalar::I(bits as i64),
        }
    }
}

impl From<f64> for Scalar {
    fn from(v: f64) -> Self {
        Scalar::D(v)
    }
}

impl From<i64> for Scalar {
    fn from(v: i64) -> Self {
        Scalar::I(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Buffer {
    D(Vec<f64>),
    I(Vec<i64>),
}

impl Buffer {
    fn zeros(tag: Tag, len: usize) -> Buffer {
        match tag {
            Tag::D => Buffer::D(vec![0.0; len]),
            Tag::I => Buffer::I(vec![0; len]),
        }
    }
}

/// Dense column-major matrix. Element (i, j) lives at `data[i + j * ldim]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalMatrix {
    height: usize,
    width: usize,
    ldim: usize,
    data: Buffer,
}

impl LocalMatrix {
    pub fn new(height: usize, width: usize, tag: Tag) -> Self {
        Self::with_ldim(height, width, height.max(1), tag)
    }

    /// Zero matrix whose columns are `ldim` apart. `ldim` is raised to `max(1, height)`.
    pub fn with_ldim(height: usize, width: usize, ldim: usize, tag: Tag) -> Self {
        let ldim = ldim.max(height).max(1);
        LocalMatrix {
            height,
            width,
            ldim,
            data: Buffer::zeros(tag, ldim * width),
        }
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self::new(height, width, Tag::D)
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for k in 0..n {
            m.data_f64_mut()[k + k * n] = 1.0;
        }
        m
    }

    pub fn from_fn(height: usize, width: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(height, width);
        let ld = m.ldim;
        let data = m.data_f64_mut();
        for j in 0..width {
            for i in 0..height {
                data[i + j * ld] = f(i, j);
            }
        }
        m
    }

    /// Builds a float matrix from row slices. All rows must have equal length.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let h = rows.len();
        let w = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == w), "ragged rows");
        Self::from_fn(h, w, |i, j| rows[i][j])
    }

    pub fn from_col_major(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {height} x {width} matrix",
                data.len()
            )));
        }
        Ok(LocalMatrix {
            height,
            width,
            ldim: height.max(1),
            data: Buffer::D(if width == 0 { Vec::new() } else { data }),
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn ldim(&self) -> usize {
        self.ldim
    }

    pub fn tag(&self) -> Tag {
        match self.data {
            Buffer::D(_) => Tag::D,
            Buffer::I(_) => Tag::I,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.height == 0 || self.width == 0
    }

    fn check(&self, i: usize, j: usize) -> Result<usize> {
        if i >= self.height || j >= self.width {
            return Err(Error::OutOfBounds {
                row: i,
                col: j,
                height: self.height,
                width: self.width,
            });
        }
        Ok(i + j * self.ldim)
    }

    pub fn get(&self, i: usize, j: usize) -> Result<Scalar> {
        let at = self.check(i, j)?;
        Ok(match &self.data {
            Buffer::D(d) => Scalar::D(d[at]),
            Buffer::I(d) => Scalar::I(d[at]),
        })
    }

    /// Stores `v`; the scalar's datatype must match the matrix.
    pub fn set(&mut self, i: usize, j: usize, v: impl Into<Scalar>) -> Result<()> {
        let at = self.check(i, j)?;
        match (&mut self.data, v.into()) {
            (Buffer::D(d), Scalar::D(v)) => d[at] = v,
            (Buffer::I(d), Scalar::I(v)) => d[at] = v,
            _ => return Err(Error::DatatypeMismatch),
        }
        Ok(())
    }

    /// Float view of element (i, j); panics when out of bounds or not a float matrix.
    pub fn at(&self, i: usize, j: usize) -> f64 {
        assert!(i < self.height && j < self.width, "index out of bounds");
        self.data_f64()[i + j * self.ldim]
    }

    pub(crate) fn bits_at(&self, i: usize, j: usize) -> u64 {
        let at = i + j * self.ldim;
        match &self.data {
            Buffer::D(d) => d[at].to_bits(),
            Buffer::I(d) => d[at] as u64,
        }
    }

    pub(crate) fn set_bits(&mut self, i: usize, j: usize, bits: u64) {
        let at = i + j * self.ldim;
        match &mut self.data {
            Buffer::D(d) => d[at] = f64::from_bits(bits),
            Buffer::I(d) => d[at] = bits as i64,
        }
    }

    pub fn as_f64(&self) -> Result<&[f64]> {
        match &self.data {
            Buffer::D(d) => Ok(d),
            Buffer::I(_) => Err(Error::UnsupportedDatatype("i")),
        }
    }

    pub fn as_f64_mut(&mut self) -> Result<&mut [f64]> {
        match &mut self.data {
            Buffer::D(d) => Ok(d),
            Buffer::I(_) => Err(Error::UnsupportedDatatype("i")),
        }
    }

    pub fn as_i64(&self) -> Option<&[i64]> {
        match &self.data {
            Buffer::I(d) => Some(d),
            Buffer::D(_) => None,
        }
    }

    pub(crate) fn data_f64(&self) -> &[f64] {
        self.as_f64().expect("float matrix")
    }

    pub(crate) fn data_f64_mut(&mut self) -> &mut [f64] {
        self.as_f64_mut().expect("float matrix")
    }

    /// Fills with uniform values in [-1, 1) determined by (seed, i, j) alone.
    /// Integer matrices receive the values scaled by 100 and truncated.
    pub fn fill_uniform(&mut self, seed: u64) {
        let ld = self.ldim;
        for j in 0..self.width {
            for i in 0..self.height {
                let v = rng::element(seed, i, j);
                match &mut self.data {
                    Buffer::D(d) => d[i + j * ld] = v,
                    Buffer::I(d) => d[i + j * ld] = (v * 100.0) as i64,
                }
            }
        }
    }

    /// Dense copy with `ldim == max(1, height)`.
    pub fn compact(&self) -> LocalMatrix {
        let mut out = LocalMatrix::new(self.height, self.width, self.tag());
        for j in 0..self.width {
            for i in 0..self.height {
                out.set_bits(i, j, self.bits_at(i, j));
            }
        }
        out
    }

    pub fn transpose(&self) -> LocalMatrix {
        let mut out = LocalMatrix::new(self.width, self.height, self.tag());
        for j in 0..self.width {
            for i in 0..self.height {
                out.set_bits(j, i, self.bits_at(i, j));
            }
        }
        out
    }

    /// Copy of rows `r0..r1` and columns `c0..c1`.
    pub fn submatrix(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> LocalMatrix {
        assert!(r0 <= r1 && r1 <= self.height && c0 <= c1 && c1 <= self.width);
        let mut out = LocalMatrix::new(r1 - r0, c1 - c0, self.tag());
        for j in c0..c1 {
            for i in r0..r1 {
                out.set_bits(i - r0, j - c0, self.bits_at(i, j));
            }
        }
        out
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.height).map(|i| self.at(i, j)).collect()
    }

    /// Plain product, for tests and small helpers.
    pub fn matmul(&self, rhs: &LocalMatrix) -> Result<LocalMatrix> {
        let mut out = LocalMatrix::zeros(self.height, rhs.width);
        local_gemm(1.0, self, rhs, 0.0, &mut out)?;
        Ok(out)
    }

    /// Elementwise difference `self - rhs` as floats.
    pub fn sub(&self, rhs: &LocalMatrix) -> Result<LocalMatrix> {
        if self.height != rhs.height || self.width != rhs.width {
            return Err(Error::SizeMismatch);
        }
        Ok(LocalMatrix::from_fn(self.height, self.width, |i, j| {
            self.get(i, j).unwrap().as_f64() - rhs.get(i, j).unwrap().as_f64()
        }))
    }
}
