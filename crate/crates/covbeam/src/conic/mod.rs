//! A small self-contained conic linear programming layer.
//!
//! Programs maximize a linear objective over variables constrained by
//! named blocks. Each block states that an affine image `R x + g` of the
//! variable vector lies in one cone:
//!
//! - [`ConeKind::Zero`]: every component equals zero,
//! - [`ConeKind::NonNegative`]: every component is non-negative,
//! - [`ConeKind::SecondOrder`]: the first component bounds the Euclidean
//!   norm of the rest.
//!
//! [`embed`] maps complex-valued design vectors onto real variables so
//! magnitude and phase constraints become cone rows. [`solver`] holds the
//! reference primal-dual interior-point backend; alternative backends can
//! implement [`SolverBackend`] against the same program type.

pub mod embed;
pub mod solver;
pub mod suite;

pub use embed::VariableLayout;
pub use solver::ReferenceIpm;

use nalgebra::DVector;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AssembleError {
    #[error("block {block:?} row {row} references variable index {index} beyond {n_vars}")]
    IndexOutOfRange {
        block: String,
        row: usize,
        index: usize,
        n_vars: usize,
    },
    #[error("block {block:?} has {rows} rows but {offsets} offsets")]
    OffsetMismatch {
        block: String,
        rows: usize,
        offsets: usize,
    },
    #[error("block {block:?} has no rows")]
    EmptyBlock { block: String },
    #[error("second-order block {block:?} needs at least 2 rows, got 1")]
    ScalarSecondOrder { block: String },
    #[error("two blocks share the name {0:?}")]
    DuplicateBlock(String),
    #[error("objective length {got} does not match {want} variables")]
    ObjectiveDimension { got: usize, want: usize },
    #[error("program has no variables")]
    NoVariables,
}

/// Cone type of a constraint block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConeKind {
    Zero,
    NonNegative,
    SecondOrder,
}

/// A sparse linear functional of the variable vector.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseRow {
    /// `(variable index, coefficient)` pairs; zero coefficients are dropped.
    pub entries: Vec<(usize, f64)>,
}

impl SparseRow {
    pub fn new(entries: Vec<(usize, f64)>) -> Self {
        Self {
            entries: entries.into_iter().filter(|&(_, c)| c != 0.0).collect(),
        }
    }

    /// Row with a single unit coefficient.
    pub fn unit(index: usize) -> Self {
        Self {
            entries: vec![(index, 1.0)],
        }
    }

    /// Constant row (no variable dependence).
    pub fn empty() -> Self {
        Self {
            entries: Vec::new(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::new(
            self.entries
                .iter()
                .map(|&(i, c)| (i, factor * c))
                .collect(),
        )
    }

    pub fn dot(&self, x: &DVector<f64>) -> f64 {
        self.entries.iter().map(|&(i, c)| c * x[i]).sum()
    }

    fn max_index(&self) -> Option<usize> {
        self.entries.iter().map(|&(i, _)| i).max()
    }
}

/// One named cone membership constraint: `rows * x + offset` lies in `cone`.
#[derive(Debug, Clone)]
pub struct ConstraintBlock {
    pub name: String,
    pub cone: ConeKind,
    pub rows: Vec<SparseRow>,
    pub offset: Vec<f64>,
}

impl ConstraintBlock {
    pub fn new(name: impl Into<String>, cone: ConeKind, rows: Vec<SparseRow>, offset: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            cone,
            rows,
            offset,
        }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    /// Value of the affine image at `x`.
    pub fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.rows.len(), |i, _| {
            self.rows[i].dot(x) + self.offset[i]
        })
    }
}

/// A validated conic program: maximize `objective . x` subject to every
/// block's cone membership.
#[derive(Debug, Clone)]
pub struct ConicProgram {
    n_vars: usize,
    objective: DVector<f64>,
    blocks: Vec<ConstraintBlock>,
}

impl ConicProgram {
    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn objective(&self) -> &DVector<f64> {
        &self.objective
    }

    pub fn blocks(&self) -> &[ConstraintBlock] {
        &self.blocks
    }

    pub fn block(&self, name: &str) -> Option<&ConstraintBlock> {
        self.blocks.iter().find(|b| b.name == name)
    }

    /// Human-readable standard-form listing, for debugging small programs.
    pub fn dump(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let _ = writeln!(out, "maximize {}", expr(&row_of(&self.objective), 0.0));
        let _ = writeln!(out, "subject to ({} variables):", self.n_vars);
        for b in &self.blocks {
            let tag = match b.cone {
                ConeKind::Zero => "zero",
                ConeKind::NonNegative => "nonneg",
                ConeKind::SecondOrder => "soc",
            };
            let _ = writeln!(out, "  block {:?} [{} rows, {}]:", b.name, b.dim(), tag);
            for (row, off) in b.rows.iter().zip(&b.offset) {
                let _ = writeln!(out, "    {}", expr(row, *off));
            }
        }
        out
    }
}

fn row_of(v: &DVector<f64>) -> SparseRow {
    SparseRow::new(v.iter().enumerate().map(|(i, &c)| (i, c)).collect())
}

fn expr(row: &SparseRow, offset: f64) -> String {
    let mut s = String::new();
    for &(i, c) in &row.entries {
        if s.is_empty() {
            s.push_str(&format!("{c:+.6}*x{i}"));
        } else {
            s.push_str(&format!(" {c:+.6}*x{i}"));
        }
    }
    if offset != 0.0 || s.is_empty() {
        s.push_str(&format!(" {offset:+.6}"));
    }
    s
}

/// Validate and freeze a program from its parts.
///
/// `n_vars` usually comes from [`VariableLayout::n_reals`]. Every row index
/// must address a variable, offsets must pair with rows, and second-order
/// blocks need a norm part.
pub fn assemble(
    n_vars: usize,
    objective: DVector<f64>,
    blocks: Vec<ConstraintBlock>,
) -> Result<ConicProgram, AssembleError> {
    if n_vars == 0 {
        return Err(AssembleError::NoVariables);
    }
    if objective.len() != n_vars {
        return Err(AssembleError::ObjectiveDimension {
            got: objective.len(),
            want: n_vars,
        });
    }
    for (i, b) in blocks.iter().enumerate() {
        if blocks[..i].iter().any(|other| other.name == b.name) {
            return Err(AssembleError::DuplicateBlock(b.name.clone()));
        }
        if b.rows.is_empty() {
            return Err(AssembleError::EmptyBlock {
                block: b.name.clone(),
            });
        }
        if b.rows.len() != b.offset.len() {
            return Err(AssembleError::OffsetMismatch {
                block: b.name.clone(),
                rows: b.rows.len(),
                offsets: b.offset.len(),
            });
        }
        if b.cone == ConeKind::SecondOrder && b.rows.len() < 2 {
            return Err(AssembleError::ScalarSecondOrder {
                block: b.name.clone(),
            });
        }
        for (r, row) in b.rows.iter().enumerate() {
            if let Some(max) = row.max_index() {
                if max >= n_vars {
                    return Err(AssembleError::IndexOutOfRange {
                        block: b.name.clone(),
                        row: r,
                        index: max,
                        n_vars,
                    });
                }
            }
        }
    }
    Ok(ConicProgram {
        n_vars,
        objective,
        blocks,
    })
}

/// Termination state of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// Converged to the stated tolerances.
    Optimal,
    /// A certificate shows no feasible point exists.
    Infeasible,
    /// A certificate shows the objective grows without bound.
    Unbounded,
}

/// Result of a successful solver run.
///
/// For [`SolveStatus::Optimal`], `x` is the maximizer and `objective` its
/// value. For the two certificate statuses, `x` holds the last iterate
/// (for [`SolveStatus::Unbounded`], a scaled improving ray) and
/// `objective` is NaN.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub x: DVector<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub duality_gap: f64,
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(
        "no convergence in {iterations} iterations \
         (primal {primal_residual:.3e}, dual {dual_residual:.3e}, gap {duality_gap:.3e})"
    )]
    IterationLimit {
        iterations: usize,
        primal_residual: f64,
        dual_residual: f64,
        duality_gap: f64,
    },
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
    #[error("invalid program: {0}")]
    InvalidProgram(String),
}

/// Stopping tolerances and iteration budget.
#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Bound on the scaled primal and dual residual norms.
    pub feas_tol: f64,
    /// Bound on the (absolute and relative) duality gap.
    pub gap_tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            feas_tol: 1e-8,
            gap_tol: 1e-8,
            max_iter: 200,
        }
    }
}

/// A conic solver. The crate ships [`ReferenceIpm`]; callers that bring
/// their own solver implement this against the same program type.
pub trait SolverBackend {
    fn name(&self) -> &str;
    fn solve(&self, program: &ConicProgram, options: &SolverOptions)
        -> Result<SolveReport, SolverError>;
}

/// Solve with the reference backend and default-constructed state.
pub fn solve(program: &ConicProgram, options: &SolverOptions) -> Result<SolveReport, SolverError> {
    ReferenceIpm::default().solve(program, options)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_block() -> ConstraintBlock {
        ConstraintBlock::new(
            "bound",
            ConeKind::NonNegative,
            vec![SparseRow::new(vec![(0, -1.0)])],
            vec![1.0],
        )
    }

    #[test]
    fn assemble_validates_indices_and_offsets() {
        let c = DVector::from_vec(vec![1.0]);
        assemble(1, c.clone(), vec![unit_block()]).unwrap();

        let bad = ConstraintBlock::new(
            "bad",
            ConeKind::NonNegative,
            vec![SparseRow::new(vec![(3, 1.0)])],
            vec![0.0],
        );
        assert!(matches!(
            assemble(1, c.clone(), vec![bad]),
            Err(AssembleError::IndexOutOfRange { index: 3, .. })
        ));

        let mismatched = ConstraintBlock::new(
            "mismatch",
            ConeKind::NonNegative,
            vec![SparseRow::unit(0)],
            vec![0.0, 1.0],
        );
        assert!(matches!(
            assemble(1, c.clone(), vec![mismatched]),
            Err(AssembleError::OffsetMismatch { .. })
        ));

        assert!(matches!(
            assemble(1, c.clone(), vec![unit_block(), unit_block()]),
            Err(AssembleError::DuplicateBlock(_))
        ));

        assert!(matches!(
            assemble(1, DVector::from_vec(vec![1.0, 2.0]), vec![unit_block()]),
            Err(AssembleError::ObjectiveDimension { got: 2, want: 1 })
        ));
    }

    #[test]
    fn scalar_soc_is_rejected() {
        let soc = ConstraintBlock::new(
            "soc",
            ConeKind::SecondOrder,
            vec![SparseRow::unit(0)],
            vec![0.0],
        );
        assert!(matches!(
            assemble(1, DVector::from_vec(vec![1.0]), vec![soc]),
            Err(AssembleError::ScalarSecondOrder { .. })
        ));
    }

    #[test]
    fn dump_lists_every_block_and_row() {
        let c = DVector::from_vec(vec![1.0, 0.0]);
        let soc = ConstraintBlock::new(
            "ball",
            ConeKind::SecondOrder,
            vec![SparseRow::empty(), SparseRow::unit(0), SparseRow::unit(1)],
            vec![2.0, 0.0, 0.0],
        );
        let p = assemble(2, c, vec![soc]).unwrap();
        let text = p.dump();
        assert!(text.contains("maximize"));
        assert!(text.contains("\"ball\" [3 rows, soc]"));
        assert!(text.contains("+2.000000"));
    }

    #[test]
    fn block_eval_applies_rows_and_offset() {
        let b = ConstraintBlock::new(
            "b",
            ConeKind::NonNegative,
            vec![SparseRow::new(vec![(0, 2.0), (1, -1.0)])],
            vec![0.5],
        );
        let v = b.eval(&DVector::from_vec(vec![1.0, 3.0]));
        assert_eq!(v[0], 2.0 - 3.0 + 0.5);
    }
}
