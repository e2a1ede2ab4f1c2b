//! Fixed-point binary encoding: quadratic objectives over ℝ^M become QUBO
//! instances over `M·R` bits, exactly — the QUBO energy of any bit state
//! equals the objective at the decoded point.

use nalgebra::DVector;
use spinglass_core::{PackedState, QuboInstance};

use crate::clock::QuadraticObjective;
use crate::DynError;

/// Fixed-point code: each real unknown becomes `R` bits at overall scale
/// `2^D`.
///
/// The represented value is
///
/// ```text
/// x = 2^D ( 2 Σ_{α<R} 2^{-α} q^α − 1 )
/// ```
///
/// with bit `α = 0` the most significant, so the grid covers
/// `[−2^D, 2^D(3 − 2^{2−R})]` in steps of `2^{D+2−R}`.  One bit per unknown
/// (`R = 1`) reduces to the spin-like pair `{−2^D, +2^D}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixedPointCode {
    /// Scale exponent.
    pub d: i32,
    /// Bits per unknown, at least 1.
    pub r: u32,
}

impl FixedPointCode {
    pub fn new(d: i32, r: u32) -> Result<Self, DynError> {
        if r == 0 {
            return Err(DynError::BadBitCount);
        }
        Ok(FixedPointCode { d, r })
    }

    /// Weight `w_α = 2^{D+1−α}` of bit `α` in the represented value.
    pub fn weight(&self, alpha: u32) -> f64 {
        pow2(self.d + 1 - alpha as i32)
    }

    /// Overall scale `2^D`.
    pub fn scale(&self) -> f64 {
        pow2(self.d)
    }

    /// Spacing of the representable grid, `2^{D+2−R}`.
    pub fn step(&self) -> f64 {
        pow2(self.d + 2 - self.r as i32)
    }
}

fn pow2(e: i32) -> f64 {
    2.0_f64.powi(e)
}

/// A QUBO plus the bookkeeping needed to map bits back to real unknowns.
#[derive(Debug, Clone)]
pub struct EncodedProblem {
    pub qubo: QuboInstance,
    pub code: FixedPointCode,
    /// Number of encoded real unknowns.
    pub unknowns: usize,
}

impl EncodedProblem {
    /// Flat bit index of bit `alpha` of unknown `i`.
    pub fn bit_index(&self, i: usize, alpha: u32) -> usize {
        i * self.code.r as usize + alpha as usize
    }

    /// Total number of binary variables, `unknowns · R`.
    pub fn num_bits(&self) -> usize {
        self.unknowns * self.code.r as usize
    }

    /// Decode a solver state back into the real unknowns.
    pub fn decode(&self, state: PackedState) -> Vec<f64> {
        decode_fixed_point(state, self.code, self.unknowns)
    }
}

/// Substitute the fixed-point expansion into a quadratic objective.
///
/// Unknown `i`, bit `α` lands at flat index `i·R + α`.  The encoding is
/// exact: for every bit state `q`, the QUBO energy (offset included) equals
/// `objective(decode(q))`.  The number of bits `M·R` is capped by the core
/// model's 64-variable limit.
pub fn encode_fixed_point(
    obj: &QuadraticObjective,
    code: FixedPointCode,
) -> Result<EncodedProblem, DynError> {
    let m = obj.g.nrows();
    if obj.g.ncols() != m || obj.c.len() != m {
        return Err(DynError::ObjectiveShape {
            rows: obj.g.nrows(),
            cols: obj.g.ncols(),
            c_len: obj.c.len(),
        });
    }
    let r = code.r as usize;
    let bits = m * r;
    let mut qubo = QuboInstance::new(bits)?;

    // x^T G x only sees the symmetric part of G.
    let gs = (&obj.g + obj.g.transpose()) * 0.5;
    let weights: Vec<f64> = (0..code.r).map(|alpha| code.weight(alpha)).collect();
    let scale = code.scale();
    let row_sums: Vec<f64> = (0..m).map(|i| gs.row(i).sum()).collect();

    for i in 0..m {
        for (alpha, &w) in weights.iter().enumerate() {
            // The diagonal G_ii x_i^2 folds its (q^α)^2 = q^α term into the
            // linear coefficient; the cross terms with the constant −2^D of
            // every expansion produce the row-sum part.
            let linear = gs[(i, i)] * w * w
                - 2.0 * scale * row_sums[i] * w
                - 2.0 * obj.c[i] * w;
            if linear != 0.0 {
                qubo.set_linear(i * r + alpha, linear)?;
            }
        }
    }
    for p in 0..bits {
        for q in (p + 1)..bits {
            let (i, alpha) = (p / r, p % r);
            let (j, beta) = (q / r, q % r);
            let coeff = 2.0 * gs[(i, j)] * weights[alpha] * weights[beta];
            if coeff != 0.0 {
                qubo.set_quadratic(p, q, coeff)?;
            }
        }
    }
    qubo.offset = scale * scale * gs.sum() + 2.0 * scale * obj.c.sum() + obj.constant;

    Ok(EncodedProblem {
        qubo,
        code,
        unknowns: m,
    })
}

/// Decode a bit state into real unknowns: `x_i = 2^D(2 Σ_α 2^{−α} q_i^α − 1)`.
pub fn decode_fixed_point(state: PackedState, code: FixedPointCode, unknowns: usize) -> Vec<f64> {
    let r = code.r as usize;
    (0..unknowns)
        .map(|i| {
            let mut fraction = 0.0;
            for alpha in 0..r {
                if state.bit(i * r + alpha) {
                    fraction += pow2(-(alpha as i32));
                }
            }
            code.scale() * (2.0 * fraction - 1.0)
        })
        .collect()
}

/// Bits of the representable value closest to `x`, packed with bit `α` at
/// position `α` — the inverse of [`decode_fixed_point`] on the grid.
pub fn nearest_bits(x: f64, code: FixedPointCode) -> u64 {
    let r = code.r;
    let levels = (1u64 << r) - 1;
    // Level index m = Σ_α q^α 2^{R−1−α} relates linearly to the value.
    let target = (x / code.scale() + 1.0) * 0.5 * pow2(r as i32 - 1);
    let level = target.round().clamp(0.0, levels as f64) as u64;
    let mut bits = 0u64;
    for alpha in 0..r {
        if (level >> (r - 1 - alpha)) & 1 == 1 {
            bits |= 1 << alpha;
        }
    }
    bits
}

/// Closed-form coefficient of the ordered bit pair `q_i^α q_j^β` when the
/// energy form of a clock system `(A, Φ)` is encoded directly:
/// `a_ij · 2^{1−α−β+2D}`.
///
/// [`encode_fixed_point`] stores unordered pairs, so its coefficient for a
/// pair of distinct bits is the sum of the two ordered values.
pub fn energy_pair_coefficient(a_ij: f64, alpha: u32, beta: u32, d: i32) -> f64 {
    a_ij * pow2(1 - alpha as i32 - beta as i32 + 2 * d)
}

/// Closed-form linear coefficient of `q_i^α` for the energy form:
/// `(2^{−α+D} a_ii − 2^D Σ_j a_ij − φ_i) · 2^{1−α+D}`, with `Σ_j a_ij` the
/// full row sum of the system matrix.
pub fn energy_linear_coefficient(
    a_ii: f64,
    row_sum_i: f64,
    phi_i: f64,
    alpha: u32,
    d: i32,
) -> f64 {
    (pow2(d - alpha as i32) * a_ii - pow2(d) * row_sum_i - phi_i) * pow2(1 - alpha as i32 + d)
}

/// Closed-form constant of the energy-form encoding:
/// `2^D (2^{D−1} Σ_ij a_ij + Σ_i φ_i)`.
pub fn energy_offset(matrix_sum: f64, phi_sum: f64, d: i32) -> f64 {
    pow2(d) * (pow2(d - 1) * matrix_sum + phi_sum)
}

/// Truncate one value toward zero at `digits` decimal places:
/// `sign(x) · ⌊|x| · 10^digits⌋ / 10^digits`.
pub fn truncate_value(x: f64, digits: u32) -> f64 {
    let scale = 10f64.powi(digits as i32);
    (x.abs() * scale).floor() / scale * x.signum()
}

/// Truncate every linear and quadratic coefficient of a QUBO toward zero at
/// `digits` decimal places.
///
/// The constant offset is left untouched: it shifts reported energies but
/// never changes which state wins, and it is not part of what a solver sees.
pub fn truncate_coefficients(inst: &QuboInstance, digits: u32) -> QuboInstance {
    let mut out = inst.clone();
    for v in out.linear.values_mut() {
        *v = truncate_value(*v, digits);
    }
    for v in out.quadratic.values_mut() {
        *v = truncate_value(*v, digits);
    }
    out
}

/// Evaluate a [`QuadraticObjective`] at the decoded point of a bit state —
/// convenience for consistency checks.
pub fn objective_at_decoded(
    obj: &QuadraticObjective,
    state: PackedState,
    code: FixedPointCode,
) -> f64 {
    let x = DVector::from_vec(decode_fixed_point(state, code, obj.dim()));
    obj.value(&x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::QuadraticObjective;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use spinglass_core::{qubo_energy, ModelError};

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * b.abs().max(1.0)
    }

    fn random_symmetric(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        (&m + m.transpose()) * 0.5
    }

    #[test]
    fn unit_entry_pair_coefficient_is_two() {
        assert_eq!(energy_pair_coefficient(1.0, 0, 0, 0), 2.0);
    }

    #[test]
    fn energy_encoding_matches_the_closed_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for &d in &[0, 1] {
            for r in 1..=3u32 {
                let a = random_symmetric(3, &mut rng);
                let phi = DVector::from_fn(3, |_, _| rng.gen_range(-1.0..1.0));
                // The energy form of (A, Φ) under the shared convention.
                let obj = QuadraticObjective {
                    g: &a * 0.5,
                    c: &phi * 0.5,
                    constant: 0.0,
                };
                let code = FixedPointCode::new(d, r).unwrap();
                let enc = encode_fixed_point(&obj, code).unwrap();

                let bits = enc.num_bits();
                for p in 0..bits {
                    for q in (p + 1)..bits {
                        let (i, alpha) = (p / r as usize, (p % r as usize) as u32);
                        let (j, beta) = (q / r as usize, (q % r as usize) as u32);
                        let expected = energy_pair_coefficient(a[(i, j)], alpha, beta, d)
                            + energy_pair_coefficient(a[(j, i)], beta, alpha, d);
                        let got = enc.qubo.quadratic_coeff(p, q);
                        assert!(close(got, expected), "pair ({p},{q}): {got} vs {expected}");
                    }
                }
                for i in 0..3 {
                    let row_sum = (0..3).map(|j| a[(i, j)]).sum::<f64>();
                    for alpha in 0..r {
                        let expected =
                            energy_linear_coefficient(a[(i, i)], row_sum, phi[i], alpha, d);
                        let got = enc.qubo.linear_coeff(enc.bit_index(i, alpha));
                        assert!(close(got, expected), "linear ({i},{alpha}): {got} vs {expected}");
                    }
                }
                let expected_offset = energy_offset(a.sum(), phi.sum(), d);
                assert!(close(enc.qubo.offset, expected_offset));
            }
        }
    }

    #[test]
    fn encoded_energies_equal_the_objective_at_decoded_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for &d in &[0, 1] {
            let obj = QuadraticObjective {
                g: random_symmetric(2, &mut rng),
                c: DVector::from_fn(2, |_, _| rng.gen_range(-1.0..1.0)),
                constant: rng.gen_range(-1.0..1.0),
            };
            let code = FixedPointCode::new(d, 2).unwrap();
            let enc = encode_fixed_point(&obj, code).unwrap();
            assert_eq!(enc.num_bits(), 4);
            for word in 0..16u64 {
                let state = PackedState(word);
                let through_qubo = qubo_energy(&enc.qubo, state).unwrap();
                let through_objective = objective_at_decoded(&obj, state, code);
                assert!(
                    close(through_qubo, through_objective),
                    "word {word}: {through_qubo} vs {through_objective}"
                );
            }
        }
    }

    #[test]
    fn two_bit_decode_table() {
        let code = FixedPointCode::new(0, 2).unwrap();
        // Bit α = 0 is most significant: words pack bit α at position α.
        let cases = [
            (0b00_u64, -1.0),
            (0b10, 0.0), // q^0 = 0, q^1 = 1
            (0b01, 1.0), // q^0 = 1, q^1 = 0
            (0b11, 2.0),
        ];
        for (word, expected) in cases {
            assert_eq!(
                decode_fixed_point(PackedState(word), code, 1),
                vec![expected],
                "word {word:#b}"
            );
        }
    }

    #[test]
    fn representable_points_round_trip() {
        for r in 1..=4u32 {
            for &d in &[-1, 0, 2] {
                let code = FixedPointCode::new(d, r).unwrap();
                for bits in 0..(1u64 << r) {
                    let x = decode_fixed_point(PackedState(bits), code, 1)[0];
                    assert_eq!(nearest_bits(x, code), bits, "r = {r}, d = {d}");
                }
            }
        }
    }

    #[test]
    fn grid_geometry_is_exposed() {
        let code = FixedPointCode::new(0, 2).unwrap();
        assert_eq!(code.scale(), 1.0);
        assert_eq!(code.step(), 1.0);
        assert_eq!(code.weight(0), 2.0);
        assert_eq!(code.weight(1), 1.0);
        assert!(matches!(
            FixedPointCode::new(0, 0),
            Err(DynError::BadBitCount)
        ));
    }

    #[test]
    fn truncation_goes_toward_zero() {
        assert_eq!(truncate_value(0.123, 1), 0.1);
        assert_eq!(truncate_value(-0.123, 1), -0.1);
        assert_eq!(truncate_value(0.999, 0), 0.0);
        for &x in &[3.0, -17.0, 0.0] {
            for digits in 0..=6 {
                assert_eq!(truncate_value(x, digits), x);
            }
        }

        let mut qubo = QuboInstance::new(2).unwrap();
        qubo.set_linear(0, 0.123).unwrap();
        qubo.set_quadratic(0, 1, -0.456).unwrap();
        qubo.offset = 0.789;
        let cut = truncate_coefficients(&qubo, 1);
        assert_eq!(cut.linear_coeff(0), 0.1);
        assert_eq!(cut.quadratic_coeff(0, 1), -0.4);
        assert_eq!(cut.offset, 0.789, "the offset is not a coefficient");
    }

    #[test]
    fn oversized_encodings_are_refused() {
        let m = 33; // 33 unknowns at 2 bits each exceed the 64-variable cap
        let obj = QuadraticObjective {
            g: DMatrix::identity(m, m),
            c: DVector::zeros(m),
            constant: 0.0,
        };
        let code = FixedPointCode::new(0, 2).unwrap();
        match encode_fixed_point(&obj, code) {
            Err(DynError::Model(ModelError::TooManyVariables(66))) => {}
            other => panic!("expected the variable cap, got {other:?}"),
        }
    }
}
