//! Shared matrix-product machinery used by the boundary-MPS contraction and
//! the imaginary-time solver.
//!
//! An [`MpsTensor`] is a three-leg tensor `T[a, p, b]` (left bond, physical,
//! right bond) stored row-major. A chain of them plus an accumulated
//! logarithmic scale factor forms an [`MpsChain`]; keeping tensors rescaled
//! to unit maximum entry and tracking the scale separately lets Gibbs
//! weights like `exp(beta * H)` stay inside `f64` range even when `beta`
//! times the energy scale is large.

use crate::TnError;
use nalgebra::DMatrix;

/// Relative singular-value floor used during canonicalization. Values this
/// far below the leading singular value carry no information at `f64`
/// precision; the floor is *not* the truncation control (that is the bond
/// cap passed by the caller).
pub(crate) const SVD_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone)]
pub struct MpsTensor {
    pub left: usize,
    pub phys: usize,
    pub right: usize,
    /// Row-major entries: `data[(a * phys + p) * right + b]`.
    pub data: Vec<f64>,
}

impl MpsTensor {
    pub fn zeros(left: usize, phys: usize, right: usize) -> Self {
        MpsTensor {
            left,
            phys,
            right,
            data: vec![0.0; left * phys * right],
        }
    }

    #[inline]
    pub fn idx(&self, a: usize, p: usize, b: usize) -> usize {
        (a * self.phys + p) * self.right + b
    }

    #[inline]
    pub fn at(&self, a: usize, p: usize, b: usize) -> f64 {
        self.data[self.idx(a, p, b)]
    }

    #[inline]
    pub fn at_mut(&mut self, a: usize, p: usize, b: usize) -> &mut f64 {
        let i = self.idx(a, p, b);
        &mut self.data[i]
    }

    /// View as a `(left * phys) x right` matrix. The storage is already in
    /// that row-major shape.
    fn as_lp_by_r(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.left * self.phys, self.right, &self.data)
    }

    /// View as a `left x (phys * right)` matrix.
    fn as_l_by_pr(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.left, self.phys * self.right, &self.data)
    }
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.nrows() * m.ncols());
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            out.push(m[(r, c)]);
        }
    }
    out
}

/// `new[i, p, b] = sum_a carry[i, a] * t[a, p, b]` — replace the left bond.
pub(crate) fn absorb_from_left(carry: &DMatrix<f64>, t: &MpsTensor) -> MpsTensor {
    debug_assert_eq!(carry.ncols(), t.left);
    let m = DMatrix::from_row_slice(t.left, t.phys * t.right, &t.data);
    let prod = carry * m;
    MpsTensor {
        left: carry.nrows(),
        phys: t.phys,
        right: t.right,
        data: row_major(&prod),
    }
}

/// `new[a, p, i] = sum_b t[a, p, b] * carry[b, i]` — replace the right bond.
pub(crate) fn absorb_from_right(t: &MpsTensor, carry: &DMatrix<f64>) -> MpsTensor {
    debug_assert_eq!(carry.nrows(), t.right);
    let m = t.as_lp_by_r();
    let prod = m * carry;
    MpsTensor {
        left: t.left,
        phys: t.phys,
        right: carry.ncols(),
        data: row_major(&prod),
    }
}

/// A tensor train with an accumulated logarithmic prefactor: the represented
/// object is `exp(log_scale) * contraction(tensors)`.
#[derive(Debug, Clone)]
pub struct MpsChain {
    pub tensors: Vec<MpsTensor>,
    pub log_scale: f64,
}

impl MpsChain {
    pub fn new(tensors: Vec<MpsTensor>) -> Self {
        MpsChain {
            tensors,
            log_scale: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    /// Largest bond dimension along the chain (1 for a product chain).
    pub fn max_bond(&self) -> usize {
        self.tensors
            .iter()
            .map(|t| t.left.max(t.right))
            .max()
            .unwrap_or(1)
    }

    /// Divide every tensor by its maximum absolute entry, folding the
    /// factors into `log_scale`. Errors if a tensor is identically zero,
    /// which would mean the represented weights vanished.
    pub fn rescale(&mut self) -> Result<(), TnError> {
        for t in &mut self.tensors {
            let m = t.data.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            if !(m > 0.0) || !m.is_finite() {
                return Err(TnError::DegenerateNetwork);
            }
            for v in &mut t.data {
                *v /= m;
            }
            self.log_scale += m.ln();
        }
        Ok(())
    }

    /// Compress the chain to bond dimension at most `chi`.
    ///
    /// A left-to-right sweep brings the chain into left-canonical form
    /// (lossless up to [`SVD_FLOOR`]); a right-to-left sweep then performs
    /// the actual singular-value cut, which in canonical form minimizes the
    /// Frobenius error bond by bond. Tensors are renormalized afterwards.
    pub fn compress(&mut self, chi: usize) -> Result<(), TnError> {
        if chi == 0 {
            return Err(TnError::BadChi);
        }
        self.rescale()?;
        let t_count = self.tensors.len();
        // Left-to-right canonicalization: keep full numerical rank.
        for t in 0..t_count.saturating_sub(1) {
            let m = self.tensors[t].as_lp_by_r();
            let svd = m.svd(true, true);
            let u = svd.u.as_ref().expect("svd with u requested");
            let v_t = svd.v_t.as_ref().expect("svd with v_t requested");
            let rank = kept_rank(svd.singular_values.as_slice(), usize::MAX);
            let (left, phys) = (self.tensors[t].left, self.tensors[t].phys);
            self.tensors[t] = MpsTensor {
                left,
                phys,
                right: rank,
                data: row_major(&u.columns(0, rank).into_owned()),
            };
            let mut carry = v_t.rows(0, rank).into_owned();
            for r in 0..rank {
                let s = svd.singular_values[r];
                for c in 0..carry.ncols() {
                    carry[(r, c)] *= s;
                }
            }
            self.tensors[t + 1] = absorb_from_left(&carry, &self.tensors[t + 1]);
        }
        // Right-to-left truncation sweep.
        for t in (1..t_count).rev() {
            let m = self.tensors[t].as_l_by_pr();
            let svd = m.svd(true, true);
            let u = svd.u.as_ref().expect("svd with u requested");
            let v_t = svd.v_t.as_ref().expect("svd with v_t requested");
            let rank = kept_rank(svd.singular_values.as_slice(), chi);
            let (phys, right) = (self.tensors[t].phys, self.tensors[t].right);
            self.tensors[t] = MpsTensor {
                left: rank,
                phys,
                right,
                data: row_major(&v_t.rows(0, rank).into_owned()),
            };
            let mut carry = u.columns(0, rank).into_owned();
            for c in 0..rank {
                let s = svd.singular_values[c];
                for r in 0..carry.nrows() {
                    carry[(r, c)] *= s;
                }
            }
            self.tensors[t - 1] = absorb_from_right(&self.tensors[t - 1], &carry);
        }
        self.rescale()
    }

    /// Contract a chain whose physical legs all have dimension 1 down to a
    /// scalar, in natural log space. The outer bonds must have dimension 1.
    pub fn contract_trivial(&self) -> Result<f64, TnError> {
        let mut v = vec![1.0f64];
        let mut log = self.log_scale;
        for t in &self.tensors {
            debug_assert_eq!(t.phys, 1);
            let mut next = vec![0.0; t.right];
            for (a, &va) in v.iter().enumerate() {
                if va == 0.0 {
                    continue;
                }
                for b in 0..t.right {
                    next[b] += va * t.at(a, 0, b);
                }
            }
            let m = next.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
            if !(m > 0.0) || !m.is_finite() {
                return Err(TnError::DegenerateNetwork);
            }
            for x in &mut next {
                *x /= m;
            }
            log += m.ln();
            v = next;
        }
        if v.len() != 1 || !(v[0] > 0.0) {
            return Err(TnError::DegenerateNetwork);
        }
        Ok(log + v[0].ln())
    }
}

/// Number of singular values to keep: those above the relative floor,
/// capped at `cap`, but always at least one.
fn kept_rank(sigma: &[f64], cap: usize) -> usize {
    let lead = sigma.first().copied().unwrap_or(0.0);
    let keep = sigma
        .iter()
        .take_while(|&&s| s > SVD_FLOOR * lead && s > 0.0)
        .count();
    keep.clamp(1, cap.max(1)).min(sigma.len())
}
