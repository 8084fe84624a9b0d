//! Small conic programs with analytically known outcomes.
//!
//! These pin the solver's behavior: optimal values from closed-form
//! geometry, plus certificate cases. The regression and acceptance tests
//! run every problem and compare against the recorded outcome; new solver
//! work must keep this suite green.

use super::{assemble, ConeKind, ConicProgram, ConstraintBlock, SparseRow, VariableLayout};
use nalgebra::DVector;
use num_complex::Complex64;

/// What a reference problem is known to do.
#[derive(Debug, Clone)]
pub enum Expected {
    Optimal {
        objective: f64,
        /// Set when the maximizer is unique (given the default presolve).
        x: Option<DVector<f64>>,
    },
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct ReferenceProblem {
    pub name: &'static str,
    pub program: ConicProgram,
    pub expected: Expected,
}

fn optimal(objective: f64, x: Option<Vec<f64>>) -> Expected {
    Expected::Optimal {
        objective,
        x: x.map(DVector::from_vec),
    }
}

fn nonneg(name: &str, rows: Vec<SparseRow>, offset: Vec<f64>) -> ConstraintBlock {
    ConstraintBlock::new(name, ConeKind::NonNegative, rows, offset)
}

fn soc(name: &str, rows: Vec<SparseRow>, offset: Vec<f64>) -> ConstraintBlock {
    ConstraintBlock::new(name, ConeKind::SecondOrder, rows, offset)
}

fn zero(name: &str, rows: Vec<SparseRow>, offset: Vec<f64>) -> ConstraintBlock {
    ConstraintBlock::new(name, ConeKind::Zero, rows, offset)
}

/// The full reference list, in a fixed order.
pub fn reference_problems() -> Vec<ReferenceProblem> {
    let mut out = Vec::new();

    // Interval through a cone: maximize x with |x| <= 1.
    out.push(ReferenceProblem {
        name: "soc_interval",
        program: assemble(
            1,
            DVector::from_vec(vec![1.0]),
            vec![soc(
                "interval",
                vec![SparseRow::empty(), SparseRow::unit(0)],
                vec![1.0, 0.0],
            )],
        )
        .unwrap(),
        expected: optimal(1.0, Some(vec![1.0])),
    });

    // Minimum-power beamformer toward one user: minimize ||w|| subject to
    // Re(h^H w) >= 2, Im(h^H w) = 0, with h = (1+2j, 3-j). The optimum
    // aligns w with h: ||w*|| = 2 / ||h||, w* = (2 / ||h||^2) h.
    {
        let mut layout = VariableLayout::new();
        layout.add_complex("w", 2).unwrap();
        layout.add_real("t", 1).unwrap();
        let h = DVector::from_vec(vec![Complex64::new(1.0, 2.0), Complex64::new(3.0, -1.0)]);
        let (re, im) = layout.hermitian_rows("w", &h).unwrap();
        let t = layout.real_index("t", 0).unwrap();
        let mut norm_rows = vec![SparseRow::unit(t)];
        norm_rows.extend(layout.component_rows("w").unwrap());
        let mut c = DVector::zeros(layout.n_reals());
        c[t] = -1.0;
        let h_sq: f64 = 15.0;
        let w_star = [2.0 / h_sq, 6.0 / h_sq, 4.0 / h_sq, -2.0 / h_sq];
        out.push(ReferenceProblem {
            name: "mrt_power_min",
            program: assemble(
                layout.n_reals(),
                c,
                vec![
                    soc("power", norm_rows, vec![0.0; 5]),
                    nonneg("gain", vec![re], vec![-2.0]),
                    zero("phase", vec![im], vec![0.0]),
                ],
            )
            .unwrap(),
            expected: optimal(
                -2.0 / h_sq.sqrt(),
                Some(vec![
                    w_star[0],
                    w_star[1],
                    w_star[2],
                    w_star[3],
                    2.0 / h_sq.sqrt(),
                ]),
            ),
        });
    }

    // Box linear program.
    out.push(ReferenceProblem {
        name: "lp_box",
        program: assemble(
            2,
            DVector::from_vec(vec![1.0, 1.0]),
            vec![nonneg(
                "box",
                vec![
                    SparseRow::new(vec![(0, -1.0)]),
                    SparseRow::new(vec![(1, -1.0)]),
                    SparseRow::unit(0),
                    SparseRow::unit(1),
                ],
                vec![1.0, 2.0, 0.0, 0.0],
            )],
        )
        .unwrap(),
        expected: optimal(3.0, Some(vec![1.0, 2.0])),
    });

    // Objective constant on the feasible set cut out by one equality.
    out.push(ReferenceProblem {
        name: "eq_transfer",
        program: assemble(
            2,
            DVector::from_vec(vec![1.0, 1.0]),
            vec![
                zero(
                    "sum",
                    vec![SparseRow::new(vec![(0, 1.0), (1, 1.0)])],
                    vec![-0.5],
                ),
                nonneg(
                    "signs",
                    vec![SparseRow::unit(0), SparseRow::unit(1)],
                    vec![0.0, 0.0],
                ),
            ],
        )
        .unwrap(),
        expected: optimal(0.5, None),
    });

    // Support function of a disk: max c.x over ||x|| <= r gives r ||c||.
    out.push(ReferenceProblem {
        name: "disk_support",
        program: assemble(
            2,
            DVector::from_vec(vec![3.0, 4.0]),
            vec![soc(
                "disk",
                vec![SparseRow::empty(), SparseRow::unit(0), SparseRow::unit(1)],
                vec![2.0, 0.0, 0.0],
            )],
        )
        .unwrap(),
        expected: optimal(10.0, Some(vec![1.2, 1.6])),
    });

    // Distance from p = (-3, 4) to the non-negative quadrant is 3.
    out.push(ReferenceProblem {
        name: "quadrant_projection",
        program: assemble(
            3,
            DVector::from_vec(vec![0.0, 0.0, -1.0]),
            vec![
                soc(
                    "distance",
                    vec![
                        SparseRow::unit(2),
                        SparseRow::unit(0),
                        SparseRow::unit(1),
                    ],
                    vec![0.0, 3.0, -4.0],
                ),
                nonneg(
                    "quadrant",
                    vec![SparseRow::unit(0), SparseRow::unit(1)],
                    vec![0.0, 0.0],
                ),
            ],
        )
        .unwrap(),
        expected: optimal(-3.0, Some(vec![0.0, 4.0, 3.0])),
    });

    // Linear cap tighter than the ball.
    out.push(ReferenceProblem {
        name: "capped_ball",
        program: assemble(
            2,
            DVector::from_vec(vec![1.0, 0.0]),
            vec![
                soc(
                    "ball",
                    vec![SparseRow::empty(), SparseRow::unit(0), SparseRow::unit(1)],
                    vec![5.0, 0.0, 0.0],
                ),
                nonneg("cap", vec![SparseRow::new(vec![(0, -1.0)])], vec![3.0]),
            ],
        )
        .unwrap(),
        expected: optimal(3.0, None),
    });

    // Piecewise-linear kink: max 2x - y with y >= 3x - 1, bounds on both.
    out.push(ReferenceProblem {
        name: "hinge_kink",
        program: assemble(
            2,
            DVector::from_vec(vec![2.0, -1.0]),
            vec![nonneg(
                "feasible",
                vec![
                    SparseRow::new(vec![(0, -3.0), (1, 1.0)]),
                    SparseRow::unit(1),
                    SparseRow::unit(0),
                    SparseRow::new(vec![(0, -1.0)]),
                ],
                vec![1.0, 0.0, 0.0, 1.0],
            )],
        )
        .unwrap(),
        expected: optimal(2.0 / 3.0, Some(vec![1.0 / 3.0, 0.0])),
    });

    // Two decoupled scalar links: minimize t1 + t2 with |w_i| <= t_i and
    // per-link gain floors 2 w1 >= 1, 4 w2 >= 2.
    out.push(ReferenceProblem {
        name: "decoupled_links",
        program: assemble(
            4,
            DVector::from_vec(vec![0.0, 0.0, -1.0, -1.0]),
            vec![
                soc(
                    "link1",
                    vec![SparseRow::unit(2), SparseRow::unit(0)],
                    vec![0.0, 0.0],
                ),
                soc(
                    "link2",
                    vec![SparseRow::unit(3), SparseRow::unit(1)],
                    vec![0.0, 0.0],
                ),
                nonneg(
                    "floors",
                    vec![
                        SparseRow::new(vec![(0, 2.0)]),
                        SparseRow::new(vec![(1, 4.0)]),
                    ],
                    vec![-1.0, -2.0],
                ),
            ],
        )
        .unwrap(),
        expected: optimal(-1.0, Some(vec![0.5, 0.5, 0.5, 0.5])),
    });

    // Redundant duplicate cap rows must not upset convergence.
    out.push(ReferenceProblem {
        name: "duplicate_caps",
        program: assemble(
            1,
            DVector::from_vec(vec![1.0]),
            vec![nonneg(
                "caps",
                vec![
                    SparseRow::new(vec![(0, -1.0)]),
                    SparseRow::new(vec![(0, -1.0)]),
                    SparseRow::new(vec![(0, -1.0)]),
                ],
                vec![1.0, 1.0, 1.0],
            )],
        )
        .unwrap(),
        expected: optimal(1.0, Some(vec![1.0])),
    });

    // The cone is active at the optimum with both legs pinned by equalities.
    out.push(ReferenceProblem {
        name: "pinned_hypotenuse",
        program: assemble(
            3,
            DVector::from_vec(vec![0.0, 0.0, -1.0]),
            vec![
                zero(
                    "legs",
                    vec![SparseRow::unit(0), SparseRow::unit(1)],
                    vec![-3.0, -4.0],
                ),
                soc(
                    "norm",
                    vec![
                        SparseRow::unit(2),
                        SparseRow::unit(0),
                        SparseRow::unit(1),
                    ],
                    vec![0.0, 0.0, 0.0],
                ),
            ],
        )
        .unwrap(),
        expected: optimal(-5.0, Some(vec![3.0, 4.0, 5.0])),
    });

    // Padding variables eliminated by presolve: u_i enter only as lone
    // norm rows and cost nothing, so they are zero in the reported point.
    out.push(ReferenceProblem {
        name: "presolve_padding",
        program: assemble(
            4,
            DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]),
            vec![
                soc(
                    "ball",
                    vec![
                        SparseRow::empty(),
                        SparseRow::unit(0),
                        SparseRow::unit(1),
                        SparseRow::unit(2),
                        SparseRow::unit(3),
                    ],
                    vec![2.0, 0.0, 0.0, 0.0, 0.0],
                ),
                nonneg("cap", vec![SparseRow::new(vec![(0, -1.0)])], vec![1.5]),
            ],
        )
        .unwrap(),
        expected: optimal(1.5, Some(vec![1.5, 0.0, 0.0, 0.0])),
    });

    // Contradictory bounds.
    out.push(ReferenceProblem {
        name: "infeasible_interval",
        program: assemble(
            1,
            DVector::from_vec(vec![1.0]),
            vec![nonneg(
                "empty",
                vec![SparseRow::unit(0), SparseRow::new(vec![(0, -1.0)])],
                vec![-1.0, 0.0],
            )],
        )
        .unwrap(),
        expected: Expected::Infeasible,
    });

    // A free ray.
    out.push(ReferenceProblem {
        name: "unbounded_ray",
        program: assemble(
            1,
            DVector::from_vec(vec![1.0]),
            vec![nonneg("floor", vec![SparseRow::unit(0)], vec![0.0])],
        )
        .unwrap(),
        expected: Expected::Unbounded,
    });

    out
}
