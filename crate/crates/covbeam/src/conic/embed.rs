//! Real embedding of complex design variables.
//!
//! A complex vector of length `m` occupies `2m` consecutive real variables:
//! the `m` real parts, then the `m` imaginary parts. With that layout a
//! Hermitian product `h^H v` becomes two real rows, and
//! `|h^H v|^2 = (re_row . x)^2 + (im_row . x)^2` exactly, which is what
//! second-order cone constraints on complex magnitudes need.

use super::SparseRow;
use nalgebra::DVector;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LayoutError {
    #[error("variable {0:?} declared twice")]
    DuplicateName(String),
    #[error("variable {0:?} must have a positive dimension")]
    ZeroDimension(String),
    #[error("no variable named {0:?}")]
    UnknownName(String),
    #[error("variable {0:?} is not complex")]
    NotComplex(String),
    #[error("variable {0:?} is not real")]
    NotReal(String),
    #[error("vector for {name:?} has length {got}, expected {want}")]
    DimensionMismatch {
        name: String,
        got: usize,
        want: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Real,
    Complex,
}

#[derive(Debug, Clone)]
struct Entry {
    name: String,
    kind: Kind,
    offset: usize,
    /// Complex length for complex entries, real length for real entries.
    dim: usize,
}

/// Ordered registry of named variables, mixing real scalars/vectors with
/// complex vectors in their real embedding.
#[derive(Debug, Clone, Default)]
pub struct VariableLayout {
    entries: Vec<Entry>,
    total: usize,
}

impl VariableLayout {
    pub fn new() -> Self {
        Self::default()
    }

    fn find(&self, name: &str) -> Result<&Entry, LayoutError> {
        self.entries
            .iter()
            .find(|e| e.name == name)
            .ok_or_else(|| LayoutError::UnknownName(name.to_string()))
    }

    fn push(&mut self, name: &str, kind: Kind, dim: usize, reals: usize) -> Result<(), LayoutError> {
        if dim == 0 {
            return Err(LayoutError::ZeroDimension(name.to_string()));
        }
        if self.entries.iter().any(|e| e.name == name) {
            return Err(LayoutError::DuplicateName(name.to_string()));
        }
        self.entries.push(Entry {
            name: name.to_string(),
            kind,
            offset: self.total,
            dim,
        });
        self.total += reals;
        Ok(())
    }

    /// Register a real variable of `dim` components.
    pub fn add_real(&mut self, name: &str, dim: usize) -> Result<(), LayoutError> {
        self.push(name, Kind::Real, dim, dim)
    }

    /// Register a complex vector of `dim` entries, occupying `2 * dim`
    /// reals.
    pub fn add_complex(&mut self, name: &str, dim: usize) -> Result<(), LayoutError> {
        self.push(name, Kind::Complex, dim, 2 * dim)
    }

    /// Total number of real variables.
    pub fn n_reals(&self) -> usize {
        self.total
    }

    /// Index of component `i` of a real variable.
    pub fn real_index(&self, name: &str, i: usize) -> Result<usize, LayoutError> {
        let e = self.find(name)?;
        if e.kind != Kind::Real {
            return Err(LayoutError::NotReal(name.to_string()));
        }
        if i >= e.dim {
            return Err(LayoutError::DimensionMismatch {
                name: name.to_string(),
                got: i,
                want: e.dim,
            });
        }
        Ok(e.offset + i)
    }

    /// Rows computing the real and imaginary part of `h^H v` for the named
    /// complex vector `v`.
    pub fn hermitian_rows(
        &self,
        name: &str,
        h: &DVector<Complex64>,
    ) -> Result<(SparseRow, SparseRow), LayoutError> {
        let e = self.find(name)?;
        if e.kind != Kind::Complex {
            return Err(LayoutError::NotComplex(name.to_string()));
        }
        if h.len() != e.dim {
            return Err(LayoutError::DimensionMismatch {
                name: name.to_string(),
                got: h.len(),
                want: e.dim,
            });
        }
        let m = e.dim;
        let mut re = Vec::with_capacity(2 * m);
        let mut im = Vec::with_capacity(2 * m);
        for i in 0..m {
            // h^H v = sum conj(h_i) v_i with v_i = x[off+i] + j x[off+m+i].
            re.push((e.offset + i, h[i].re));
            re.push((e.offset + m + i, h[i].im));
            im.push((e.offset + i, -h[i].im));
            im.push((e.offset + m + i, h[i].re));
        }
        Ok((SparseRow::new(re), SparseRow::new(im)))
    }

    /// One unit row per real component of the named complex vector, in
    /// embedding order. Stacking them inside a second-order block bounds
    /// the Euclidean norm of the complex vector.
    pub fn component_rows(&self, name: &str) -> Result<Vec<SparseRow>, LayoutError> {
        let e = self.find(name)?;
        if e.kind != Kind::Complex {
            return Err(LayoutError::NotComplex(name.to_string()));
        }
        Ok((0..2 * e.dim)
            .map(|i| SparseRow::unit(e.offset + i))
            .collect())
    }

    /// Write a complex vector into its slot of a packed real vector.
    pub fn pack_complex(
        &self,
        x: &mut DVector<f64>,
        name: &str,
        v: &DVector<Complex64>,
    ) -> Result<(), LayoutError> {
        let e = self.find(name)?;
        if e.kind != Kind::Complex {
            return Err(LayoutError::NotComplex(name.to_string()));
        }
        if v.len() != e.dim {
            return Err(LayoutError::DimensionMismatch {
                name: name.to_string(),
                got: v.len(),
                want: e.dim,
            });
        }
        for i in 0..e.dim {
            x[e.offset + i] = v[i].re;
            x[e.offset + e.dim + i] = v[i].im;
        }
        Ok(())
    }

    /// Read a complex vector back out of a packed real vector.
    pub fn unpack_complex(
        &self,
        x: &DVector<f64>,
        name: &str,
    ) -> Result<DVector<Complex64>, LayoutError> {
        let e = self.find(name)?;
        if e.kind != Kind::Complex {
            return Err(LayoutError::NotComplex(name.to_string()));
        }
        Ok(DVector::from_fn(e.dim, |i, _| {
            Complex64::new(x[e.offset + i], x[e.offset + e.dim + i])
        }))
    }
}
