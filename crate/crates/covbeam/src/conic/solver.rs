//! Reference primal-dual interior-point backend.
//!
//! The program is brought to the standard form
//!
//! ```text
//! minimize    c.x
//! subject to  A x = b,   G x + s = h,   s in K
//! ```
//!
//! with `K` a product of a non-negative orthant and second-order cones.
//! Each iteration computes the Nesterov-Todd scaling of the current
//! primal-dual pair, takes a Mehrotra predictor-corrector step, and solves
//! the reduced KKT system through a Cholesky factorization of
//! `G' W^-2 G` plus a Schur complement for the equalities. Searches are
//! exact cone line searches; termination follows scaled residual and gap
//! tests, with standard certificates for infeasible and unbounded programs.
//!
//! A presolve pass removes variables that provably sit at zero in some
//! optimum: zero objective coefficient and appearing only through
//! single-variable, zero-offset rows inside second-order norm parts.
//! Setting such a variable to zero shrinks the norms it feeds, so any
//! feasible point maps to a feasible point of equal objective. The design
//! subproblems in this crate carry many such variables (inactive radar
//! streams), and removing them cuts the factorization cost by an order of
//! magnitude.

use super::{
    ConeKind, ConicProgram, ConstraintBlock, SolveReport, SolveStatus, SolverBackend, SolverError,
    SolverOptions, SparseRow,
};
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

/// Fraction of the exact boundary step taken each iteration.
const STEP_FRACTION: f64 = 0.99;
/// Relative static regularization added to the condensed KKT diagonal.
const STATIC_REG: f64 = 1e-13;

/// The built-in solver. `presolve` and `refinement_rounds` exist for tests
/// and diagnostics; defaults are right for normal use.
#[derive(Debug, Clone)]
pub struct ReferenceIpm {
    pub presolve: bool,
    pub refinement_rounds: usize,
}

impl Default for ReferenceIpm {
    fn default() -> Self {
        Self {
            presolve: true,
            refinement_rounds: 2,
        }
    }
}

impl SolverBackend for ReferenceIpm {
    fn name(&self) -> &str {
        "reference-ipm"
    }

    fn solve(
        &self,
        program: &ConicProgram,
        options: &SolverOptions,
    ) -> Result<SolveReport, SolverError> {
        let reduced = if self.presolve {
            presolve(program)
        } else {
            Reduction::identity(program)
        };
        let mut st = standardize(&reduced)?;
        let variable_scales = equilibrate(&mut st, 10);
        finalize_quadratics(&mut st);
        let mut report = if st.m() == 0 {
            solve_equalities_only(&st, options)?
        } else {
            ipm(&st, options, self.refinement_rounds)?
        };
        report.x.component_mul_assign(&variable_scales);
        report.x = reduced.expand(&report.x);
        Ok(report)
    }
}

// ---------------------------------------------------------------------------
// Presolve

struct Reduction {
    program: ConicProgram,
    /// Original index of each kept variable.
    kept: Vec<usize>,
    original_n: usize,
}

impl Reduction {
    fn identity(program: &ConicProgram) -> Self {
        Self {
            program: program.clone(),
            kept: (0..program.n_vars()).collect(),
            original_n: program.n_vars(),
        }
    }

    /// Reinsert removed variables as zeros.
    fn expand(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut full = DVector::zeros(self.original_n);
        for (red, &orig) in self.kept.iter().enumerate() {
            full[orig] = x[red];
        }
        full
    }
}

fn presolve(program: &ConicProgram) -> Reduction {
    let n = program.n_vars();
    // A variable stays eligible while every appearance is a single-variable,
    // zero-offset row strictly inside a second-order norm.
    let mut eligible = vec![true; n];
    for (j, &c) in program.objective().iter().enumerate() {
        if c != 0.0 {
            eligible[j] = false;
        }
    }
    for block in program.blocks() {
        for (r, row) in block.rows.iter().enumerate() {
            let solo_norm_row = block.cone == ConeKind::SecondOrder
                && r > 0
                && row.entries.len() == 1
                && block.offset[r] == 0.0;
            if solo_norm_row {
                continue;
            }
            for &(idx, _) in &row.entries {
                eligible[idx] = false;
            }
        }
    }
    if eligible.iter().all(|&e| !e) {
        return Reduction::identity(program);
    }

    let kept: Vec<usize> = (0..n).filter(|&j| !eligible[j]).collect();
    let mut remap = vec![usize::MAX; n];
    for (new, &old) in kept.iter().enumerate() {
        remap[old] = new;
    }
    let objective = DVector::from_iterator(kept.len(), kept.iter().map(|&j| program.objective()[j]));

    let mut blocks = Vec::with_capacity(program.blocks().len());
    for block in program.blocks() {
        let mut rows = Vec::with_capacity(block.rows.len());
        let mut offset = Vec::with_capacity(block.offset.len());
        for (r, row) in block.rows.iter().enumerate() {
            let dropped = block.cone == ConeKind::SecondOrder
                && r > 0
                && row.entries.len() == 1
                && block.offset[r] == 0.0
                && eligible[row.entries[0].0];
            if dropped {
                continue;
            }
            rows.push(SparseRow::new(
                row.entries.iter().map(|&(i, c)| (remap[i], c)).collect(),
            ));
            offset.push(block.offset[r]);
        }
        // A norm part emptied by the removals leaves the bound row alone.
        let cone = if block.cone == ConeKind::SecondOrder && rows.len() == 1 {
            ConeKind::NonNegative
        } else {
            block.cone
        };
        blocks.push(ConstraintBlock::new(block.name.clone(), cone, rows, offset));
    }

    let reduced = super::assemble(kept.len(), objective, blocks)
        .expect("presolve preserves program validity");
    Reduction {
        program: reduced,
        kept,
        original_n: n,
    }
}

// ---------------------------------------------------------------------------
// Standard form

struct SocData {
    g: DMatrix<f64>,
    h: DVector<f64>,
    /// `G1' G1 - g0 g0'`, the scaling-independent part of `G' W^-2 G`.
    p: DMatrix<f64>,
}

struct Standardized {
    c: DVector<f64>,
    a: DMatrix<f64>,
    b: DVector<f64>,
    gl: DMatrix<f64>,
    hl: DVector<f64>,
    socs: Vec<SocData>,
}

impl Standardized {
    fn n(&self) -> usize {
        self.c.len()
    }

    fn p(&self) -> usize {
        self.a.nrows()
    }

    fn l(&self) -> usize {
        self.gl.nrows()
    }

    fn m(&self) -> usize {
        self.l() + self.socs.iter().map(|s| s.g.nrows()).sum::<usize>()
    }

    fn degree(&self) -> usize {
        self.l() + self.socs.len()
    }

    /// `G x` stacked over the orthant part then each cone.
    fn g_mul(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.m());
        out.rows_mut(0, self.l()).copy_from(&(&self.gl * x));
        let mut at = self.l();
        for s in &self.socs {
            out.rows_mut(at, s.g.nrows()).copy_from(&(&s.g * x));
            at += s.g.nrows();
        }
        out
    }

    /// `G' v`.
    fn gt_mul(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = self.gl.tr_mul(&v.rows(0, self.l()).into_owned());
        let mut at = self.l();
        for s in &self.socs {
            out += s.g.tr_mul(&v.rows(at, s.g.nrows()).into_owned());
            at += s.g.nrows();
        }
        out
    }

    /// Stacked cone offsets `h`.
    fn h_vec(&self) -> DVector<f64> {
        let mut out = DVector::zeros(self.m());
        out.rows_mut(0, self.l()).copy_from(&self.hl);
        let mut at = self.l();
        for s in &self.socs {
            out.rows_mut(at, s.h.len()).copy_from(&s.h);
            at += s.h.len();
        }
        out
    }
}

fn dense_rows(rows: &[SparseRow], n: usize, negate: bool) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(rows.len(), n);
    let sign = if negate { -1.0 } else { 1.0 };
    for (r, row) in rows.iter().enumerate() {
        for &(i, c) in &row.entries {
            m[(r, i)] = sign * c;
        }
    }
    m
}

fn standardize(reduction: &Reduction) -> Result<Standardized, SolverError> {
    let program = &reduction.program;
    let n = program.n_vars();
    let mut a_rows: Vec<&ConstraintBlock> = Vec::new();
    let mut l_rows: Vec<&ConstraintBlock> = Vec::new();
    let mut socs = Vec::new();
    for block in program.blocks() {
        match block.cone {
            ConeKind::Zero => a_rows.push(block),
            ConeKind::NonNegative => l_rows.push(block),
            ConeKind::SecondOrder => {
                // v = R x + g in K  <=>  G x + s = h with G = -R, h = g.
                let g = dense_rows(&block.rows, n, true);
                let h = DVector::from_vec(block.offset.clone());
                socs.push(SocData {
                    g,
                    h,
                    p: DMatrix::zeros(0, 0),
                });
            }
        }
    }
    let stack = |blocks: &[&ConstraintBlock], negate: bool| -> (DMatrix<f64>, DVector<f64>) {
        let total: usize = blocks.iter().map(|b| b.dim()).sum();
        let mut m = DMatrix::zeros(total, n);
        let mut v = DVector::zeros(total);
        let mut at = 0;
        for b in blocks {
            m.rows_mut(at, b.dim())
                .copy_from(&dense_rows(&b.rows, n, negate));
            for (i, &o) in b.offset.iter().enumerate() {
                // Zero cone: R x + g = 0 becomes A x = -g.
                v[at + i] = if negate { o } else { -o };
            }
            at += b.dim();
        }
        (m, v)
    };
    let (a, b) = stack(&a_rows, false);
    let (gl, hl) = stack(&l_rows, true);
    Ok(Standardized {
        c: -program.objective(),
        a,
        b,
        gl,
        hl,
        socs,
    })
}

/// Ruiz equilibration: iteratively scales rows and columns of the stacked
/// constraint matrix toward unit maxima, which keeps the KKT systems well
/// conditioned when constraint coefficients span many orders of magnitude.
/// Rows of one second-order block share a single factor so the cone is
/// preserved. Returns the accumulated per-variable scales; a solution of the
/// scaled problem maps back by componentwise multiplication.
fn equilibrate(st: &mut Standardized, rounds: usize) -> DVector<f64> {
    let n = st.n();
    let mut accumulated = DVector::from_element(n, 1.0);
    for _ in 0..rounds {
        let mut col_max = vec![0.0_f64; n];
        let scan = |m: &DMatrix<f64>, col_max: &mut [f64]| {
            for j in 0..m.ncols() {
                for i in 0..m.nrows() {
                    let v = m[(i, j)].abs();
                    if v > col_max[j] {
                        col_max[j] = v;
                    }
                }
            }
        };
        scan(&st.a, &mut col_max);
        scan(&st.gl, &mut col_max);
        for soc in &st.socs {
            scan(&soc.g, &mut col_max);
        }

        let mut spread = 1.0_f64;
        for j in 0..n {
            let scale = if col_max[j] > 0.0 {
                spread = spread.max(col_max[j]).max(1.0 / col_max[j]);
                1.0 / col_max[j].sqrt()
            } else {
                1.0
            };
            st.a.column_mut(j).scale_mut(scale);
            st.gl.column_mut(j).scale_mut(scale);
            for soc in &mut st.socs {
                soc.g.column_mut(j).scale_mut(scale);
            }
            st.c[j] *= scale;
            accumulated[j] *= scale;
        }

        let row_scale = |max: f64| if max > 0.0 { 1.0 / max.sqrt() } else { 1.0 };
        for i in 0..st.a.nrows() {
            let max = st.a.row(i).amax();
            spread = spread.max(max.max(1.0 / max.max(f64::MIN_POSITIVE)));
            let r = row_scale(max);
            st.a.row_mut(i).scale_mut(r);
            st.b[i] *= r;
        }
        for i in 0..st.gl.nrows() {
            let max = st.gl.row(i).amax();
            if max > 0.0 {
                spread = spread.max(max).max(1.0 / max);
            }
            let r = row_scale(max);
            st.gl.row_mut(i).scale_mut(r);
            st.hl[i] *= r;
        }
        for soc in &mut st.socs {
            let max = soc.g.amax();
            if max > 0.0 {
                spread = spread.max(max).max(1.0 / max);
            }
            let r = row_scale(max);
            soc.g *= r;
            soc.h *= r;
        }

        if spread < 1.1 {
            break;
        }
    }
    accumulated
}

/// Precompute the scaling-independent quadratic `G1' G1 - g0 g0'` of each
/// second-order block, used when forming the reduced KKT matrix. Must run
/// after any rescaling of the blocks.
fn finalize_quadratics(st: &mut Standardized) {
    for soc in &mut st.socs {
        let g0 = soc.g.row(0).transpose();
        let g1 = soc.g.rows(1, soc.g.nrows() - 1).into_owned();
        let mut p = g1.tr_mul(&g1);
        p.ger(-1.0, &g0, &g0, 1.0);
        soc.p = p;
    }
}

// ---------------------------------------------------------------------------
// Cone algebra

/// Nesterov-Todd scaling state: `W z = W^-1 s = lambda` across the cone
/// product. Orthant components scale diagonally; each second-order cone
/// carries a normalized point `wbar` (hyperbolic norm 1) and a magnitude
/// `eta`, with `W = eta * (2 wbar wbar' - J)^(1/2)` in closed form.
struct Scaling {
    d: DVector<f64>,
    sqrt_d: DVector<f64>,
    lam_l: DVector<f64>,
    socs: Vec<SocScaling>,
}

struct SocScaling {
    eta: f64,
    wbar: DVector<f64>,
    lam: DVector<f64>,
}

fn soc_residual(u: &DVector<f64>) -> f64 {
    u[0] * u[0] - u.rows(1, u.len() - 1).norm_squared()
}

/// `J u`: flip the sign of the norm part.
fn jmul(u: &DVector<f64>) -> DVector<f64> {
    let mut v = -u.clone();
    v[0] = u[0];
    v
}

fn compute_scaling(st: &Standardized, s: &DVector<f64>, z: &DVector<f64>) -> Result<Scaling, SolverError> {
    let l = st.l();
    let mut d = DVector::zeros(l);
    let mut sqrt_d = DVector::zeros(l);
    let mut lam_l = DVector::zeros(l);
    for i in 0..l {
        if s[i] <= 0.0 || z[i] <= 0.0 {
            return Err(SolverError::NumericalBreakdown(
                "orthant iterate left the cone".into(),
            ));
        }
        d[i] = s[i] / z[i];
        sqrt_d[i] = d[i].sqrt();
        lam_l[i] = (s[i] * z[i]).sqrt();
    }
    let mut socs = Vec::with_capacity(st.socs.len());
    let mut at = l;
    for soc in &st.socs {
        let q = soc.g.nrows();
        let su = s.rows(at, q).into_owned();
        let zu = z.rows(at, q).into_owned();
        let res_s = soc_residual(&su);
        let res_z = soc_residual(&zu);
        if res_s <= 0.0 || res_z <= 0.0 || su[0] <= 0.0 || zu[0] <= 0.0 {
            return Err(SolverError::NumericalBreakdown(
                "second-order iterate left the cone".into(),
            ));
        }
        let sscale = res_s.sqrt();
        let zscale = res_z.sqrt();
        let sbar = &su / sscale;
        let zbar = &zu / zscale;
        let gamma = ((1.0 + sbar.dot(&zbar)) / 2.0).sqrt();
        let mut wbar = (&sbar + jmul(&zbar)) / (2.0 * gamma);
        let tail_sq = wbar.rows(1, q - 1).norm_squared();
        wbar[0] = (1.0 + tail_sq).sqrt();
        let scale = (sscale * zscale).sqrt();
        let denom = sbar[0] + zbar[0] + 2.0 * gamma;
        let mut lam = DVector::zeros(q);
        lam[0] = gamma * scale;
        for i in 1..q {
            lam[i] = scale * ((gamma + zbar[0]) * sbar[i] + (gamma + sbar[0]) * zbar[i]) / denom;
        }
        socs.push(SocScaling {
            eta: (sscale / zscale).sqrt(),
            wbar,
            lam,
        });
        at += q;
    }
    Ok(Scaling {
        d,
        sqrt_d,
        lam_l,
        socs,
    })
}

impl Scaling {
    fn lambda(&self, st: &Standardized) -> DVector<f64> {
        let mut out = DVector::zeros(st.m());
        out.rows_mut(0, self.d.len()).copy_from(&self.lam_l);
        let mut at = self.d.len();
        for s in &self.socs {
            out.rows_mut(at, s.lam.len()).copy_from(&s.lam);
            at += s.lam.len();
        }
        out
    }
}

/// Direction of application for the scaling operators.
#[derive(Clone, Copy, PartialEq)]
enum Op {
    W,
    WInv,
    W2,
    WInv2,
}

fn apply_scaling(scaling: &Scaling, op: Op, v: &DVector<f64>) -> DVector<f64> {
    let l = scaling.d.len();
    let mut out = DVector::zeros(v.len());
    for i in 0..l {
        let f = match op {
            Op::W => scaling.sqrt_d[i],
            Op::WInv => 1.0 / scaling.sqrt_d[i],
            Op::W2 => scaling.d[i],
            Op::WInv2 => 1.0 / scaling.d[i],
        };
        out[i] = f * v[i];
    }
    let mut at = l;
    for s in &scaling.socs {
        let q = s.wbar.len();
        let u = v.rows(at, q).into_owned();
        let w = &s.wbar;
        let res = match op {
            // W u = eta * [w0 u0 + w1.u1; u1 + (u0 + w1.u1/(1+w0)) w1]
            Op::W | Op::WInv => {
                let sign = if op == Op::W { 1.0 } else { -1.0 };
                let f = if op == Op::W { s.eta } else { 1.0 / s.eta };
                let zeta = w.rows(1, q - 1).dot(&u.rows(1, q - 1));
                let mut r = DVector::zeros(q);
                r[0] = f * (w[0] * u[0] + sign * zeta);
                let coef = f * (sign * u[0] + zeta / (1.0 + w[0]));
                for i in 1..q {
                    r[i] = f * u[i] + coef * w[i];
                }
                r
            }
            // W^2 u = eta^2 (2 w (w.u) - J u);  W^-2 via w -> J w, eta -> 1/eta.
            Op::W2 | Op::WInv2 => {
                let (f, wv) = if op == Op::W2 {
                    (s.eta * s.eta, w.clone())
                } else {
                    (1.0 / (s.eta * s.eta), jmul(w))
                };
                let t = wv.dot(&u);
                let mut r = DVector::zeros(q);
                r[0] = f * (2.0 * t * wv[0] - u[0]);
                for i in 1..q {
                    r[i] = f * (2.0 * t * wv[i] + u[i]);
                }
                r
            }
        };
        out.rows_mut(at, q).copy_from(&res);
        at += q;
    }
    out
}

/// Jordan product `u o v` across the cone product.
fn circ(st: &Standardized, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
    let l = st.l();
    let mut out = DVector::zeros(u.len());
    for i in 0..l {
        out[i] = u[i] * v[i];
    }
    let mut at = l;
    for s in &st.socs {
        let q = s.g.nrows();
        let uu = u.rows(at, q);
        let vv = v.rows(at, q);
        out[at] = uu.dot(&vv);
        for i in 1..q {
            out[at + i] = uu[0] * vv[i] + vv[0] * uu[i];
        }
        at += q;
    }
    out
}

/// Solve `lam o x = v` for `x`.
fn inv_circ(st: &Standardized, lam: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
    let l = st.l();
    let mut out = DVector::zeros(v.len());
    for i in 0..l {
        out[i] = v[i] / lam[i];
    }
    let mut at = l;
    for s in &st.socs {
        let q = s.g.nrows();
        let lu = lam.rows(at, q);
        let vu = v.rows(at, q);
        let det = lu[0] * lu[0] - lu.rows(1, q - 1).norm_squared();
        let x0 = (lu[0] * vu[0] - lu.rows(1, q - 1).dot(&vu.rows(1, q - 1))) / det;
        out[at] = x0;
        for i in 1..q {
            out[at + i] = (vu[i] - x0 * lu[i]) / lu[0];
        }
        at += q;
    }
    out
}

/// Identity element of the cone product.
fn unit_e(st: &Standardized) -> DVector<f64> {
    let mut e = DVector::zeros(st.m());
    for i in 0..st.l() {
        e[i] = 1.0;
    }
    let mut at = st.l();
    for s in &st.socs {
        e[at] = 1.0;
        at += s.g.nrows();
    }
    e
}

/// Smallest cone margin of `u`: orthant minimum and `u0 - ||u1||` per cone.
fn min_margin(st: &Standardized, u: &DVector<f64>) -> f64 {
    let mut margin = f64::INFINITY;
    for i in 0..st.l() {
        margin = margin.min(u[i]);
    }
    let mut at = st.l();
    for s in &st.socs {
        let q = s.g.nrows();
        margin = margin.min(u[at] - u.rows(at + 1, q - 1).norm());
        at += q;
    }
    margin
}

/// Add `t` along the identity element: orthant components and cone heads.
fn shift_interior(st: &Standardized, u: &mut DVector<f64>, t: f64) {
    for i in 0..st.l() {
        u[i] += t;
    }
    let mut at = st.l();
    for s in &st.socs {
        u[at] += t;
        at += s.g.nrows();
    }
}

/// Largest `t >= 0` keeping `u + t du` in the cone (`u` strictly inside).
fn step_to_boundary(st: &Standardized, u: &DVector<f64>, du: &DVector<f64>) -> f64 {
    let mut step = f64::INFINITY;
    for i in 0..st.l() {
        if du[i] < 0.0 {
            step = step.min(-u[i] / du[i]);
        }
    }
    let mut at = st.l();
    for s in &st.socs {
        let q = s.g.nrows();
        step = step.min(soc_step(
            &u.rows(at, q).into_owned(),
            &du.rows(at, q).into_owned(),
        ));
        at += q;
    }
    step
}

fn soc_step(u: &DVector<f64>, du: &DVector<f64>) -> f64 {
    let q = u.len();
    // f(t) = (u0 + t du0)^2 - ||u1 + t du1||^2 = a t^2 + 2 b t + c, c > 0.
    let a = du[0] * du[0] - du.rows(1, q - 1).norm_squared();
    let b = u[0] * du[0] - u.rows(1, q - 1).dot(&du.rows(1, q - 1));
    let c = soc_residual(u);
    if a == 0.0 {
        return if b >= 0.0 { f64::INFINITY } else { -c / (2.0 * b) };
    }
    let disc = b * b - a * c;
    if disc < 0.0 {
        // No real root; since c > 0 the quadratic stays positive.
        return f64::INFINITY;
    }
    let sq = disc.sqrt();
    let qq = -(b + b.signum() * sq);
    let r1 = qq / a;
    let r2 = if qq != 0.0 { c / qq } else { f64::INFINITY };
    let mut best = f64::INFINITY;
    for r in [r1, r2] {
        if r > 0.0 && r < best {
            best = r;
        }
    }
    best
}

// ---------------------------------------------------------------------------
// KKT system

struct KktFactors {
    chol_h: Cholesky<f64, Dyn>,
    /// `H^-1 A'`, empty when there are no equalities.
    t: DMatrix<f64>,
    chol_s: Option<Cholesky<f64, Dyn>>,
}

fn factor_kkt(st: &Standardized, scaling: &Scaling) -> Result<KktFactors, SolverError> {
    let n = st.n();
    let mut h = DMatrix::zeros(n, n);
    if st.l() > 0 {
        let mut scaled = st.gl.clone();
        for i in 0..st.l() {
            let f = 1.0 / scaling.sqrt_d[i];
            scaled.row_mut(i).scale_mut(f);
        }
        h += scaled.tr_mul(&scaled);
    }
    for (soc, sc) in st.socs.iter().zip(&scaling.socs) {
        let inv_eta2 = 1.0 / (sc.eta * sc.eta);
        let u = soc.g.tr_mul(&jmul(&sc.wbar));
        h.ger(2.0 * inv_eta2, &u, &u, 1.0);
        h.zip_apply(&soc.p, |hij, pij| *hij += inv_eta2 * pij);
    }
    let scale = 1.0 + h.diagonal().amax();
    let mut reg = STATIC_REG * scale;
    for _ in 0..3 {
        let mut hr = h.clone();
        for i in 0..n {
            hr[(i, i)] += reg;
        }
        if let Some(chol_h) = Cholesky::new(hr) {
            let p = st.p();
            let (t, chol_s) = if p > 0 {
                let t = chol_h.solve(&st.a.transpose());
                let mut s = &st.a * &t;
                for i in 0..p {
                    s[(i, i)] += STATIC_REG * (1.0 + s.diagonal().amax());
                }
                let chol_s = Cholesky::new(s).ok_or_else(|| {
                    SolverError::NumericalBreakdown("equality Schur complement not positive".into())
                })?;
                (t, Some(chol_s))
            } else {
                (DMatrix::zeros(n, 0), None)
            };
            return Ok(KktFactors { chol_h, t, chol_s });
        }
        reg *= 100.0;
    }
    Err(SolverError::NumericalBreakdown(
        "condensed KKT matrix lost positive definiteness".into(),
    ))
}

/// Solve the scaled KKT system
/// `A' dy + G' dz = bx;  A dx = by;  G dx - W^2 dz = bz`
/// with iterative refinement against the unregularized operator.
fn kkt_solve(
    st: &Standardized,
    scaling: &Scaling,
    f: &KktFactors,
    bx: &DVector<f64>,
    by: &DVector<f64>,
    bz: &DVector<f64>,
    rounds: usize,
) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
    let solve_once = |bx: &DVector<f64>, by: &DVector<f64>, bz: &DVector<f64>| {
        let r1 = bx + st.gt_mul(&apply_scaling(scaling, Op::WInv2, bz));
        let dx0 = f.chol_h.solve(&r1);
        let (dx, dy) = if let Some(chol_s) = &f.chol_s {
            let dy = chol_s.solve(&(&st.a * &dx0 - by));
            (dx0 - &f.t * &dy, dy)
        } else {
            (dx0, DVector::zeros(0))
        };
        let dz = apply_scaling(scaling, Op::WInv2, &(st.g_mul(&dx) - bz));
        (dx, dy, dz)
    };
    let (mut dx, mut dy, mut dz) = solve_once(bx, by, bz);
    for _ in 0..rounds {
        let res_x = bx - st.a.tr_mul(&dy) - st.gt_mul(&dz);
        let res_y = by - &st.a * &dx;
        let res_z = bz - st.g_mul(&dx) + apply_scaling(scaling, Op::W2, &dz);
        let (ex, ey, ez) = solve_once(&res_x, &res_y, &res_z);
        dx += ex;
        dy += ey;
        dz += ez;
    }
    (dx, dy, dz)
}

// ---------------------------------------------------------------------------
// Main loop

fn ipm(
    st: &Standardized,
    options: &SolverOptions,
    refinement_rounds: usize,
) -> Result<SolveReport, SolverError> {
    let n = st.n();
    let p = st.p();
    let h = st.h_vec();
    let deg = st.degree() as f64;
    let norm_b = st.b.norm().max(1.0);
    let norm_h = h.norm().max(1.0);
    let norm_c = st.c.norm().max(1.0);

    // Initial point from two least-squares solves under identity scaling,
    // shifted into the cone interior where needed.
    let id_scaling = identity_scaling(st);
    let id_factors = factor_kkt(st, &id_scaling)?;
    let zero_n = DVector::zeros(n);
    let (x0, _, zp) = kkt_solve(
        st,
        &id_scaling,
        &id_factors,
        &zero_n,
        &st.b,
        &h,
        refinement_rounds,
    );
    let mut s = -zp;
    let margin_s = min_margin(st, &s);
    if margin_s < 0.0 {
        shift_interior(st, &mut s, 1.0 - margin_s);
    } else if margin_s == 0.0 {
        shift_interior(st, &mut s, 1.0);
    }
    let zero_p = DVector::zeros(p);
    let zero_m = DVector::zeros(st.m());
    let (_, y0, zd) = kkt_solve(
        st,
        &id_scaling,
        &id_factors,
        &(-&st.c),
        &zero_p,
        &zero_m,
        refinement_rounds,
    );
    let mut z = zd;
    let margin_z = min_margin(st, &z);
    if margin_z < 0.0 {
        shift_interior(st, &mut z, 1.0 - margin_z);
    } else if margin_z == 0.0 {
        shift_interior(st, &mut z, 1.0);
    }
    let mut x = x0;
    let mut y = y0;

    let e = unit_e(st);
    let mut last = (f64::NAN, f64::NAN, f64::NAN);
    for iter in 0..options.max_iter {
        let aty = st.a.tr_mul(&y);
        let gtz = st.gt_mul(&z);
        let rx = &st.c + &aty + &gtz;
        let ry = &st.a * &x - &st.b;
        let rz = st.g_mul(&x) + &s - &h;
        let gap = s.dot(&z);
        let pcost = st.c.dot(&x);
        let dcost = -h.dot(&z) - st.b.dot(&y);
        let relgap = if pcost < 0.0 {
            gap / -pcost
        } else if dcost > 0.0 {
            gap / dcost
        } else {
            f64::INFINITY
        };
        let pres = (ry.norm() / norm_b).max(rz.norm() / norm_h);
        // The dual residual is measured against the size of the terms that
        // form it: when the optimal multipliers are large, cancellation to
        // machine precision is the best any factorization can deliver, and
        // an absolute test would stall forever below that floor.
        let dres = rx.norm() / norm_c.max(aty.norm()).max(gtz.norm());
        last = (pres, dres, gap);

        if pres <= options.feas_tol
            && dres <= options.feas_tol
            && (gap <= options.gap_tol * pcost.abs().max(1.0) || relgap <= options.gap_tol)
        {
            return Ok(SolveReport {
                status: SolveStatus::Optimal,
                x,
                objective: -pcost,
                iterations: iter,
                primal_residual: pres,
                dual_residual: dres,
                duality_gap: gap,
            });
        }

        let hzby = h.dot(&z) + st.b.dot(&y);
        if hzby < 0.0 {
            let cert = (&aty + &gtz).norm() / (-hzby) / norm_c;
            if cert <= options.feas_tol {
                return Ok(SolveReport {
                    status: SolveStatus::Infeasible,
                    x: DVector::zeros(n),
                    objective: f64::NAN,
                    iterations: iter,
                    primal_residual: pres,
                    dual_residual: cert,
                    duality_gap: gap,
                });
            }
        }
        if pcost < 0.0 {
            let ax = (&st.a * &x).norm() / norm_b;
            let gxs = (st.g_mul(&x) + &s).norm() / norm_h;
            let cert = ax.max(gxs) / -pcost;
            if cert <= options.feas_tol {
                return Ok(SolveReport {
                    status: SolveStatus::Unbounded,
                    x: &x / -pcost,
                    objective: f64::NAN,
                    iterations: iter,
                    primal_residual: cert,
                    dual_residual: dres,
                    duality_gap: gap,
                });
            }
        }

        let scaling = compute_scaling(st, &s, &z)?;
        let factors = factor_kkt(st, &scaling)?;
        let lam = scaling.lambda(st);
        let lam_sq = circ(st, &lam, &lam);
        let mu = gap / deg;

        // Predictor: pure Newton direction on the affine system.
        let bz_aff = -&rz + &s;
        let (dx_a, _dy_a, dz_a) = kkt_solve(
            st,
            &scaling,
            &factors,
            &-&rx,
            &-&ry,
            &bz_aff,
            refinement_rounds,
        );
        let ds_a = -&rz - st.g_mul(&dx_a);
        let alpha_aff = step_to_boundary(st, &s, &ds_a)
            .min(step_to_boundary(st, &z, &dz_a))
            .min(1.0);
        let gap_aff = (&s + &ds_a * alpha_aff).dot(&(&z + &dz_a * alpha_aff));
        let mut sigma = (gap_aff / gap).clamp(0.0, 1.0).powi(3);
        // A Newton step contracts the residuals by the step length, so the
        // gap can always afford to wait for them. Letting it collapse first
        // is fatal: the scaled KKT conditioning grows like one over the
        // gap, and once that passes the precision cliff the dual equality
        // can never be recovered. When the relative gap is already below
        // the worst residual, hold the barrier and restore feasibility.
        if (gap / pcost.abs().max(1.0)).min(relgap) < pres.max(dres) {
            sigma = 1.0;
        }

        // Corrector: recenter toward sigma * mu and absorb the second-order
        // term of the affine step.
        let xi = circ(
            st,
            &apply_scaling(&scaling, Op::WInv, &ds_a),
            &apply_scaling(&scaling, Op::W, &dz_a),
        );
        let rhs_lam = &e * (sigma * mu) - &lam_sq - xi;
        let d = inv_circ(st, &lam, &rhs_lam);
        let bz_comb = -&rz - apply_scaling(&scaling, Op::W, &d);
        let (dx, dy, dz) = kkt_solve(
            st,
            &scaling,
            &factors,
            &-&rx,
            &-&ry,
            &bz_comb,
            refinement_rounds,
        );
        let ds = -&rz - st.g_mul(&dx);
        let alpha_max = step_to_boundary(st, &s, &ds).min(step_to_boundary(st, &z, &dz));
        let mut alpha = (STEP_FRACTION * alpha_max).min(1.0);
        if !alpha.is_finite() || alpha <= 1e-14 {
            return Err(SolverError::NumericalBreakdown(format!(
                "step length collapsed to {alpha:.3e} at iteration {iter}"
            )));
        }
        // Rounding can push a near-boundary update just outside its cone;
        // halve the step until both points are strictly interior.
        loop {
            let s_new = &s + &ds * alpha;
            let z_new = &z + &dz * alpha;
            if min_margin(st, &s_new) > 0.0 && min_margin(st, &z_new) > 0.0 {
                s = s_new;
                z = z_new;
                break;
            }
            alpha *= 0.5;
            if alpha <= 1e-14 {
                return Err(SolverError::NumericalBreakdown(format!(
                    "no interior step available at iteration {iter}"
                )));
            }
        }
        x += &dx * alpha;
        y += &dy * alpha;
    }
    Err(SolverError::IterationLimit {
        iterations: options.max_iter,
        primal_residual: last.0,
        dual_residual: last.1,
        duality_gap: last.2,
    })
}

fn identity_scaling(st: &Standardized) -> Scaling {
    let l = st.l();
    let socs = st
        .socs
        .iter()
        .map(|s| {
            let q = s.g.nrows();
            let mut wbar = DVector::zeros(q);
            wbar[0] = 1.0;
            let mut lam = DVector::zeros(q);
            lam[0] = 1.0;
            SocScaling {
                eta: 1.0,
                wbar,
                lam,
            }
        })
        .collect();
    Scaling {
        d: DVector::from_element(l, 1.0),
        sqrt_d: DVector::from_element(l, 1.0),
        lam_l: DVector::from_element(l, 1.0),
        socs,
    }
}

/// Programs with no cone rows: pure linear algebra on the equalities.
fn solve_equalities_only(
    st: &Standardized,
    options: &SolverOptions,
) -> Result<SolveReport, SolverError> {
    let n = st.n();
    let p = st.p();
    if p == 0 {
        return if st.c.norm() == 0.0 {
            Ok(SolveReport {
                status: SolveStatus::Optimal,
                x: DVector::zeros(n),
                objective: 0.0,
                iterations: 0,
                primal_residual: 0.0,
                dual_residual: 0.0,
                duality_gap: 0.0,
            })
        } else {
            Ok(SolveReport {
                status: SolveStatus::Unbounded,
                x: -&st.c / st.c.norm_squared(),
                objective: f64::NAN,
                iterations: 0,
                primal_residual: 0.0,
                dual_residual: 0.0,
                duality_gap: 0.0,
            })
        };
    }
    let mut aat = &st.a * st.a.transpose();
    let reg = STATIC_REG * (1.0 + aat.diagonal().amax());
    for i in 0..p {
        aat[(i, i)] += reg;
    }
    let chol = Cholesky::new(aat).ok_or_else(|| {
        SolverError::NumericalBreakdown("equality normal matrix not positive".into())
    })?;
    let x = st.a.transpose() * chol.solve(&st.b);
    let pres = (&st.a * &x - &st.b).norm() / st.b.norm().max(1.0);
    if pres > options.feas_tol {
        return Ok(SolveReport {
            status: SolveStatus::Infeasible,
            x: DVector::zeros(n),
            objective: f64::NAN,
            iterations: 0,
            primal_residual: pres,
            dual_residual: 0.0,
            duality_gap: 0.0,
        });
    }
    let y = -chol.solve(&(&st.a * &st.c));
    let r = &st.c + st.a.tr_mul(&y);
    let dres = r.norm() / st.c.norm().max(1.0);
    if dres > options.feas_tol {
        // Moving along -r keeps A x = b and strictly decreases the cost.
        return Ok(SolveReport {
            status: SolveStatus::Unbounded,
            x: -&r / r.norm_squared(),
            objective: f64::NAN,
            iterations: 0,
            primal_residual: pres,
            dual_residual: dres,
            duality_gap: 0.0,
        });
    }
    Ok(SolveReport {
        status: SolveStatus::Optimal,
        objective: -st.c.dot(&x),
        x,
        iterations: 0,
        primal_residual: pres,
        dual_residual: dres,
        duality_gap: 0.0,
    })
}
