//! The clock construction: a whole trajectory as the unique solution of one
//! symmetric linear system, and the quadratic objectives whose minimizer it
//! is.

use nalgebra::{DMatrix, DVector};

use crate::DynError;

/// Linear system `A x = Φ` over the stacked trajectory
/// `x = (ψ_0, ψ_1, …, ψ_{N-1})`.
///
/// `A` couples each pair of consecutive time slots through the step
/// propagator and pins the first slot to the initial state:
///
/// ```text
/// A = Σ_k ( |k+1⟩⟨k+1| ⊗ I − |k+1⟩⟨k| ⊗ U_k
///         + |k⟩⟨k| ⊗ I     − |k⟩⟨k+1| ⊗ U_kᵀ )  +  |0⟩⟨0| ⊗ I
/// Φ = |0⟩ ⊗ ψ_0
/// ```
///
/// `A` is symmetric by construction.  When every propagator is orthogonal —
/// the case for norm-preserving dynamics — `A` is positive definite and the
/// exact trajectory solves the system with zero residual.
#[derive(Debug, Clone)]
pub struct ClockSystem {
    /// Symmetric system matrix, `(n·l) × (n·l)`.
    pub a: DMatrix<f64>,
    /// Right-hand side.
    pub phi: DVector<f64>,
    /// Number of time slots.
    pub n: usize,
    /// State dimension per slot.
    pub l: usize,
}

impl ClockSystem {
    /// Total number of stacked unknowns.
    pub fn size(&self) -> usize {
        self.n * self.l
    }

    /// `‖A x − Φ‖` for a candidate stacked trajectory.
    pub fn residual(&self, x: &DVector<f64>) -> f64 {
        (&self.a * x - &self.phi).norm()
    }
}

/// Assemble the clock system for a list of step propagators.
pub fn build_clock_system(
    propagators: &[DMatrix<f64>],
    psi0: &DVector<f64>,
) -> Result<ClockSystem, DynError> {
    let l = psi0.len();
    if l == 0 {
        return Err(DynError::EmptyState);
    }
    let n = propagators.len() + 1;
    if n < 2 {
        return Err(DynError::TooFewTimePoints(n));
    }
    for (index, u) in propagators.iter().enumerate() {
        if u.nrows() != l || u.ncols() != l {
            return Err(DynError::PropagatorDimension {
                index,
                rows: u.nrows(),
                cols: u.ncols(),
                dim: l,
            });
        }
    }

    let size = n * l;
    let mut a = DMatrix::zeros(size, size);
    // Pin the initial slot.
    for i in 0..l {
        a[(i, i)] += 1.0;
    }
    for (k, u) in propagators.iter().enumerate() {
        let here = k * l;
        let next = (k + 1) * l;
        for i in 0..l {
            a[(here + i, here + i)] += 1.0;
            a[(next + i, next + i)] += 1.0;
        }
        for i in 0..l {
            for j in 0..l {
                a[(next + i, here + j)] -= u[(i, j)];
                a[(here + j, next + i)] -= u[(i, j)];
            }
        }
    }
    let mut phi = DVector::zeros(size);
    phi.rows_mut(0, l).copy_from(psi0);
    Ok(ClockSystem { a, phi, n, l })
}

/// Stack `ψ_0, U_0 ψ_0, U_1 U_0 ψ_0, …` into one long vector — the exact
/// trajectory the clock system encodes.
pub fn stack_trajectory(propagators: &[DMatrix<f64>], psi0: &DVector<f64>) -> DVector<f64> {
    let l = psi0.len();
    let n = propagators.len() + 1;
    let mut out = DVector::zeros(n * l);
    let mut current = psi0.clone();
    out.rows_mut(0, l).copy_from(&current);
    for (k, u) in propagators.iter().enumerate() {
        current = u * &current;
        out.rows_mut((k + 1) * l, l).copy_from(&current);
    }
    out
}

/// Which scalar function of the stacked trajectory to minimize.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveForm {
    /// `‖A x − Φ‖²` — works for any system matrix and vanishes exactly at
    /// the solution.
    LeastSquares,
    /// `½ xᵀ A x − Φᵀ x` — the natural energy of a positive definite
    /// system; shifted from the least-squares form but minimized at the
    /// same point, and better conditioned for encoding since it keeps the
    /// original matrix rather than squaring it.
    Energy,
}

/// Quadratic function `x ↦ xᵀ G x − 2 cᵀ x + constant`.
#[derive(Debug, Clone)]
pub struct QuadraticObjective {
    pub g: DMatrix<f64>,
    pub c: DVector<f64>,
    pub constant: f64,
}

impl QuadraticObjective {
    /// Number of real unknowns.
    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    /// Evaluate `xᵀ G x − 2 cᵀ x + constant`.
    pub fn value(&self, x: &DVector<f64>) -> f64 {
        (x.transpose() * &self.g * x)[(0, 0)] - 2.0 * self.c.dot(x) + self.constant
    }
}

/// Turn a clock system into a quadratic objective.
///
/// The least-squares form sets `G = AᵀA`, `c = AᵀΦ`, `constant = ΦᵀΦ`, so
/// the objective is `‖A x − Φ‖²`; it never fails.  The energy form sets
/// `G = A/2`, `c = Φ/2`, `constant = 0`, reproducing `½ xᵀ A x − Φᵀ x`
/// under the shared `xᵀGx − 2cᵀx + constant` convention; it demands a
/// positive definite matrix (smallest eigenvalue of the symmetrized `A`
/// above `10⁻¹⁰ · ‖A‖`) since an indefinite quadratic has no minimum to
/// find.
pub fn quadratic_objective(
    cs: &ClockSystem,
    form: ObjectiveForm,
) -> Result<QuadraticObjective, DynError> {
    match form {
        ObjectiveForm::LeastSquares => Ok(QuadraticObjective {
            g: cs.a.transpose() * &cs.a,
            c: cs.a.transpose() * &cs.phi,
            constant: cs.phi.dot(&cs.phi),
        }),
        ObjectiveForm::Energy => {
            let sym = (&cs.a + cs.a.transpose()) * 0.5;
            let eigenvalues = sym.symmetric_eigen().eigenvalues;
            let smallest = eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
            let scale = eigenvalues.iter().fold(0.0_f64, |m, &v| m.max(v.abs()));
            if !(smallest > 1e-10 * scale) {
                return Err(DynError::NotPositiveDefinite {
                    eigenvalue: smallest,
                });
            }
            Ok(QuadraticObjective {
                g: &cs.a * 0.5,
                c: &cs.phi * 0.5,
                constant: 0.0,
            })
        }
    }
}
