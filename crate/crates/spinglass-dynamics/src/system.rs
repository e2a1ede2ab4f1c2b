//! Front end for the dynamics: generators, step propagators, the real
//! embedding of complex systems, and the JSON system description.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde_json::Value;

use crate::encode::FixedPointCode;
use crate::DynError;

/// Generator of the linear dynamics `dψ/dt = K(t) ψ`.
pub enum Generator {
    /// Time-independent generator; every interval gets the exact matrix
    /// exponential `exp(K Δt)`.
    Constant(DMatrix<f64>),
    /// Explicit time dependence; intervals are covered by a product of
    /// midpoint-rule exponentials (second order in the substep width).
    TimeDependent {
        dim: usize,
        f: Box<dyn Fn(f64) -> DMatrix<f64> + Send + Sync>,
    },
}

impl Generator {
    /// Dimension of the state the generator acts on.
    pub fn dim(&self) -> usize {
        match self {
            Generator::Constant(k) => k.nrows(),
            Generator::TimeDependent { dim, .. } => *dim,
        }
    }
}

impl std::fmt::Debug for Generator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Generator::Constant(k) => write!(f, "Generator::Constant({}x{})", k.nrows(), k.ncols()),
            Generator::TimeDependent { dim, .. } => {
                write!(f, "Generator::TimeDependent(dim = {dim})")
            }
        }
    }
}

/// A dynamical system to be tracked on a fixed time grid.
///
/// The state is always kept in its real representation; complex systems are
/// embedded by the constructors before anything else sees them.
#[derive(Debug)]
pub struct SystemSpec {
    pub generator: Generator,
    /// Initial state, real representation.
    pub psi0: DVector<f64>,
    /// Strictly increasing time grid with at least two points; the
    /// propagators connect consecutive entries.
    pub times: Vec<f64>,
}

impl SystemSpec {
    pub fn constant_real(
        k: DMatrix<f64>,
        psi0: DVector<f64>,
        times: Vec<f64>,
    ) -> Result<Self, DynError> {
        if k.nrows() != k.ncols() {
            return Err(DynError::NonSquareGenerator {
                rows: k.nrows(),
                cols: k.ncols(),
            });
        }
        Self::checked(Generator::Constant(k), psi0, times)
    }

    /// A complex constant generator, embedded into the doubled real
    /// representation together with its initial state.
    pub fn constant_complex(
        k: DMatrix<Complex64>,
        psi0: DVector<Complex64>,
        times: Vec<f64>,
    ) -> Result<Self, DynError> {
        if k.nrows() != k.ncols() {
            return Err(DynError::NonSquareGenerator {
                rows: k.nrows(),
                cols: k.ncols(),
            });
        }
        Self::checked(
            Generator::Constant(complex_to_real_matrix(&k)),
            complex_to_real_vector(&psi0),
            times,
        )
    }

    /// A real time-dependent generator `t ↦ K(t)` acting on dimension `dim`.
    pub fn time_dependent(
        dim: usize,
        f: impl Fn(f64) -> DMatrix<f64> + Send + Sync + 'static,
        psi0: DVector<f64>,
        times: Vec<f64>,
    ) -> Result<Self, DynError> {
        Self::checked(Generator::TimeDependent { dim, f: Box::new(f) }, psi0, times)
    }

    fn checked(generator: Generator, psi0: DVector<f64>, times: Vec<f64>) -> Result<Self, DynError> {
        if generator.dim() == 0 || psi0.is_empty() {
            return Err(DynError::EmptyState);
        }
        if psi0.len() != generator.dim() {
            return Err(DynError::StateDimension {
                got: psi0.len(),
                want: generator.dim(),
            });
        }
        if times.len() < 2 {
            return Err(DynError::TooFewTimePoints(times.len()));
        }
        if !times.windows(2).all(|w| w[0] < w[1]) {
            return Err(DynError::NonMonotonicTimes);
        }
        Ok(SystemSpec {
            generator,
            psi0,
            times,
        })
    }

    /// Real dimension of the evolving state.
    pub fn dim(&self) -> usize {
        self.generator.dim()
    }

    /// Number of time-grid points.
    pub fn num_points(&self) -> usize {
        self.times.len()
    }
}

/// Real embedding of a complex matrix: each entry `a + bi` becomes the
/// 2x2 block `[[a, -b], [b, a]]`.
///
/// The embedding is a ring homomorphism — products and sums of matrices map
/// to products and sums of their embeddings — so evolving the embedded
/// system reproduces the complex evolution exactly, with real and imaginary
/// parts interleaved per [`complex_to_real_vector`].
pub fn complex_to_real_matrix(m: &DMatrix<Complex64>) -> DMatrix<f64> {
    let (rows, cols) = m.shape();
    let mut out = DMatrix::zeros(2 * rows, 2 * cols);
    for i in 0..rows {
        for j in 0..cols {
            let z = m[(i, j)];
            out[(2 * i, 2 * j)] = z.re;
            out[(2 * i, 2 * j + 1)] = -z.im;
            out[(2 * i + 1, 2 * j)] = z.im;
            out[(2 * i + 1, 2 * j + 1)] = z.re;
        }
    }
    out
}

/// Real embedding of a complex vector: entry `a + bi` becomes the adjacent
/// pair `(a, b)`, matching the block layout of [`complex_to_real_matrix`].
pub fn complex_to_real_vector(v: &DVector<Complex64>) -> DVector<f64> {
    let mut out = DVector::zeros(2 * v.len());
    for i in 0..v.len() {
        out[2 * i] = v[i].re;
        out[2 * i + 1] = v[i].im;
    }
    out
}

/// Step propagators `U_k` with `ψ(t_{k+1}) = U_k ψ(t_k)` for each interval
/// of the time grid.
///
/// A constant generator gets the exact matrix exponential per interval.  A
/// time-dependent generator gets a product of `substeps` midpoint
/// exponentials per interval, which is exact for a constant generator and
/// second-order accurate in general: halving the substep width cuts the
/// error by a factor of about four.
pub fn step_propagators(
    spec: &SystemSpec,
    substeps: usize,
) -> Result<Vec<DMatrix<f64>>, DynError> {
    if substeps == 0 {
        return Err(DynError::BadSubsteps);
    }
    let dim = spec.dim();
    let mut out = Vec::with_capacity(spec.times.len() - 1);
    for w in spec.times.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let dt = t1 - t0;
        let u = match &spec.generator {
            Generator::Constant(k) => (k * dt).exp(),
            Generator::TimeDependent { f, .. } => {
                let h = dt / substeps as f64;
                let mut u = DMatrix::identity(dim, dim);
                for s in 0..substeps {
                    let mid = t0 + (s as f64 + 0.5) * h;
                    let k = f(mid);
                    if k.nrows() != dim || k.ncols() != dim {
                        return Err(DynError::GeneratorDimension {
                            rows: k.nrows(),
                            cols: k.ncols(),
                            dim,
                        });
                    }
                    u = (k * h).exp() * u;
                }
                u
            }
        };
        out.push(u);
    }
    Ok(out)
}

/// Parse a JSON system description into a [`SystemSpec`] and the
/// [`FixedPointCode`] it asks for.
///
/// ```json
/// {"L": 2, "field": "real", "K": [[0.0, -1.5708], [1.5708, 0.0]],
///  "psi0": [1, 0], "N": 4, "R": 2, "D": 0}
/// ```
///
/// `L` is the (complex or real) dimension, `field` selects how entries are
/// read — plain numbers for `"real"`, numbers or `[re, im]` pairs for
/// `"complex"` — `N` is the number of time points (the grid defaults to the
/// integers `0..N-1`), and `R`/`D` fix the bits per unknown and the scale
/// exponent of the binary encoding.  Complex systems come back already
/// embedded into the doubled real representation.
pub fn parse_system_spec(text: &str) -> Result<(SystemSpec, FixedPointCode), DynError> {
    let root: Value =
        serde_json::from_str(text).map_err(|e| DynError::Description(e.to_string()))?;
    let obj = root
        .as_object()
        .ok_or_else(|| DynError::Description("top level must be an object".into()))?;

    let l = require(obj, "L")?
        .as_u64()
        .ok_or_else(|| DynError::Description("\"L\" must be a non-negative integer".into()))?
        as usize;
    let field = require(obj, "field")?
        .as_str()
        .ok_or_else(|| DynError::Description("\"field\" must be a string".into()))?;
    let n = require(obj, "N")?
        .as_u64()
        .ok_or_else(|| DynError::Description("\"N\" must be a non-negative integer".into()))?
        as usize;
    let r = require(obj, "R")?
        .as_u64()
        .ok_or_else(|| DynError::Description("\"R\" must be a non-negative integer".into()))?;
    let d = require(obj, "D")?
        .as_i64()
        .ok_or_else(|| DynError::Description("\"D\" must be an integer".into()))?;
    if r > 53 {
        return Err(DynError::Description(
            "\"R\" beyond 53 bits exceeds double precision".into(),
        ));
    }
    let code = FixedPointCode::new(d as i32, r as u32)?;

    let k_rows = matrix_rows(require(obj, "K")?, l)?;
    let psi_vals = require(obj, "psi0")?
        .as_array()
        .ok_or_else(|| DynError::Description("\"psi0\" must be an array".into()))?;
    if psi_vals.len() != l {
        return Err(DynError::Description(format!(
            "\"psi0\" has {} entries, expected L = {l}",
            psi_vals.len()
        )));
    }

    let times: Vec<f64> = (0..n).map(|k| k as f64).collect();
    let spec = match field {
        "real" => {
            let mut k = DMatrix::zeros(l, l);
            for (i, row) in k_rows.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    k[(i, j)] = real_entry(v, "\"K\" entries")?;
                }
            }
            let psi0 = DVector::from_iterator(
                l,
                psi_vals
                    .iter()
                    .map(|v| real_entry(v, "\"psi0\" entries"))
                    .collect::<Result<Vec<_>, _>>()?,
            );
            SystemSpec::constant_real(k, psi0, times)?
        }
        "complex" => {
            let mut k = DMatrix::from_element(l, l, Complex64::new(0.0, 0.0));
            for (i, row) in k_rows.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    k[(i, j)] = complex_entry(v, "\"K\" entries")?;
                }
            }
            let psi0 = DVector::from_iterator(
                l,
                psi_vals
                    .iter()
                    .map(|v| complex_entry(v, "\"psi0\" entries"))
                    .collect::<Result<Vec<_>, _>>()?,
            );
            SystemSpec::constant_complex(k, psi0, times)?
        }
        other => {
            return Err(DynError::Description(format!(
                "\"field\" must be \"real\" or \"complex\", got \"{other}\""
            )))
        }
    };
    Ok((spec, code))
}

fn require<'a>(
    obj: &'a serde_json::Map<String, Value>,
    key: &str,
) -> Result<&'a Value, DynError> {
    obj.get(key)
        .ok_or_else(|| DynError::Description(format!("missing key \"{key}\"")))
}

fn matrix_rows(v: &Value, l: usize) -> Result<Vec<Vec<Value>>, DynError> {
    let rows = v
        .as_array()
        .ok_or_else(|| DynError::Description("\"K\" must be an array of rows".into()))?;
    if rows.len() != l {
        return Err(DynError::Description(format!(
            "\"K\" has {} rows, expected L = {l}",
            rows.len()
        )));
    }
    rows.iter()
        .map(|row| {
            let cells = row
                .as_array()
                .ok_or_else(|| DynError::Description("\"K\" rows must be arrays".into()))?;
            if cells.len() != l {
                return Err(DynError::Description(format!(
                    "\"K\" row has {} entries, expected L = {l}",
                    cells.len()
                )));
            }
            Ok(cells.clone())
        })
        .collect()
}

fn real_entry(v: &Value, what: &str) -> Result<f64, DynError> {
    v.as_f64()
        .ok_or_else(|| DynError::Description(format!("{what} must be numbers in a real system")))
}

fn complex_entry(v: &Value, what: &str) -> Result<Complex64, DynError> {
    if let Some(x) = v.as_f64() {
        return Ok(Complex64::new(x, 0.0));
    }
    if let Some(pair) = v.as_array() {
        if pair.len() == 2 {
            let re = pair[0].as_f64();
            let im = pair[1].as_f64();
            if let (Some(re), Some(im)) = (re, im) {
                return Ok(Complex64::new(re, im));
            }
        }
    }
    Err(DynError::Description(format!(
        "{what} must be numbers or [re, im] pairs"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn rotation_generator(rate: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[0.0, -rate, rate, 0.0])
    }

    #[test]
    fn quarter_turn_rotates_the_initial_state() {
        let spec = SystemSpec::constant_real(
            rotation_generator(FRAC_PI_2),
            DVector::from_vec(vec![1.0, 0.0]),
            vec![0.0, 1.0],
        )
        .unwrap();
        let us = step_propagators(&spec, 1).unwrap();
        assert_eq!(us.len(), 1);
        let moved = &us[0] * DVector::from_vec(vec![1.0, 0.0]);
        assert_abs_diff_eq!(moved[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(moved[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_generator_gives_identity_propagators() {
        let spec = SystemSpec::constant_real(
            DMatrix::zeros(3, 3),
            DVector::from_vec(vec![1.0, -2.0, 0.5]),
            vec![0.0, 0.5, 2.0],
        )
        .unwrap();
        for u in step_propagators(&spec, 1).unwrap() {
            assert_abs_diff_eq!(u, DMatrix::identity(3, 3), epsilon = 1e-14);
        }
    }

    #[test]
    fn midpoint_product_converges_at_second_order() {
        // K(t) = t^2 B with a fixed B: the family commutes, so the exact
        // propagator over [0, 1] is exp(B/3) and the only error is the
        // midpoint quadrature of t^2.
        let b = rotation_generator(1.0);
        let exact = (&b * (1.0 / 3.0)).exp();
        let err = |substeps: usize| {
            let spec = SystemSpec::time_dependent(
                2,
                {
                    let b = b.clone();
                    move |t: f64| &b * (t * t)
                },
                DVector::from_vec(vec![1.0, 0.0]),
                vec![0.0, 1.0],
            )
            .unwrap();
            let u = step_propagators(&spec, substeps).unwrap().remove(0);
            (&u - &exact).norm()
        };
        let (e4, e8, e16) = (err(4), err(8), err(16));
        assert!(e4 > e8 && e8 > e16);
        assert!((3.5..4.5).contains(&(e4 / e8)), "ratio {}", e4 / e8);
        assert!((3.5..4.5).contains(&(e8 / e16)), "ratio {}", e8 / e16);
    }

    #[test]
    fn substeps_leave_constant_generators_exact() {
        let spec = SystemSpec::constant_real(
            rotation_generator(PI / 3.0),
            DVector::from_vec(vec![0.0, 1.0]),
            vec![0.0, 1.0, 2.5],
        )
        .unwrap();
        let coarse = step_propagators(&spec, 1).unwrap();
        let fine = step_propagators(&spec, 64).unwrap();
        for (a, b) in coarse.iter().zip(&fine) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-13);
        }
    }

    #[test]
    fn bad_specs_are_rejected() {
        let psi = DVector::from_vec(vec![1.0, 0.0]);
        assert!(matches!(
            SystemSpec::constant_real(DMatrix::zeros(2, 3), psi.clone(), vec![0.0, 1.0]),
            Err(DynError::NonSquareGenerator { rows: 2, cols: 3 })
        ));
        assert!(matches!(
            SystemSpec::constant_real(
                DMatrix::zeros(3, 3),
                psi.clone(),
                vec![0.0, 1.0]
            ),
            Err(DynError::StateDimension { got: 2, want: 3 })
        ));
        assert!(matches!(
            SystemSpec::constant_real(DMatrix::zeros(2, 2), psi.clone(), vec![0.0]),
            Err(DynError::TooFewTimePoints(1))
        ));
        assert!(matches!(
            SystemSpec::constant_real(DMatrix::zeros(2, 2), psi.clone(), vec![0.0, 0.0]),
            Err(DynError::NonMonotonicTimes)
        ));
        let spec =
            SystemSpec::constant_real(DMatrix::zeros(2, 2), psi.clone(), vec![0.0, 1.0]).unwrap();
        assert!(matches!(
            step_propagators(&spec, 0),
            Err(DynError::BadSubsteps)
        ));
        let ragged = SystemSpec::time_dependent(
            2,
            |_| DMatrix::zeros(3, 3),
            psi,
            vec![0.0, 1.0],
        )
        .unwrap();
        assert!(matches!(
            step_propagators(&ragged, 2),
            Err(DynError::GeneratorDimension { rows: 3, cols: 3, dim: 2 })
        ));
    }

    #[test]
    fn imaginary_unit_embeds_to_the_rotation() {
        let unit = DMatrix::from_element(1, 1, Complex64::new(0.0, 1.0));
        let embedded = complex_to_real_matrix(&unit);
        assert_eq!(embedded, DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]));
        let squared = &embedded * &embedded;
        assert_eq!(squared, -DMatrix::<f64>::identity(2, 2));
    }

    #[test]
    fn real_matrices_embed_block_diagonally() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]).map(|x| Complex64::new(x, 0.0));
        let e = complex_to_real_matrix(&m);
        for i in 0..2 {
            for j in 0..2 {
                let a = m[(i, j)].re;
                assert_eq!(e[(2 * i, 2 * j)], a);
                assert_eq!(e[(2 * i + 1, 2 * j + 1)], a);
                assert_eq!(e[(2 * i, 2 * j + 1)], 0.0);
                assert_eq!(e[(2 * i + 1, 2 * j)], 0.0);
            }
        }
    }

    #[test]
    fn embedding_is_a_ring_homomorphism() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut random = |rows: usize, cols: usize| {
            DMatrix::from_fn(rows, cols, |_, _| {
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            })
        };
        let a = random(3, 3);
        let b = random(3, 3);
        let v = random(3, 1);
        let v = DVector::from_column_slice(v.as_slice());

        let prod = complex_to_real_matrix(&(&a * &b));
        assert_abs_diff_eq!(
            prod,
            complex_to_real_matrix(&a) * complex_to_real_matrix(&b),
            epsilon = 1e-12
        );
        let image = complex_to_real_vector(&(&a * &v));
        assert_abs_diff_eq!(
            image,
            complex_to_real_matrix(&a) * complex_to_real_vector(&v),
            epsilon = 1e-12
        );
    }

    #[test]
    fn parses_a_real_description() {
        let text = r#"{"L": 2, "field": "real",
                       "K": [[0.0, -1.5707963267948966], [1.5707963267948966, 0.0]],
                       "psi0": [1, 0], "N": 4, "R": 2, "D": 0}"#;
        let (spec, code) = parse_system_spec(text).unwrap();
        assert_eq!(spec.dim(), 2);
        assert_eq!(spec.times, vec![0.0, 1.0, 2.0, 3.0]);
        assert_eq!(code, FixedPointCode::new(0, 2).unwrap());
        match &spec.generator {
            Generator::Constant(k) => assert_abs_diff_eq!(k[(1, 0)], FRAC_PI_2, epsilon = 0.0),
            other => panic!("expected a constant generator, got {other:?}"),
        }
    }

    #[test]
    fn parses_and_embeds_a_complex_description() {
        let text = r#"{"L": 1, "field": "complex",
                       "K": [[[0.0, 1.5707963267948966]]],
                       "psi0": [[1, 0]], "N": 4, "R": 2, "D": 0}"#;
        let (spec, _) = parse_system_spec(text).unwrap();
        assert_eq!(spec.dim(), 2, "one complex dimension doubles");
        match &spec.generator {
            Generator::Constant(k) => {
                assert_abs_diff_eq!(k[(0, 1)], -FRAC_PI_2, epsilon = 0.0);
                assert_abs_diff_eq!(k[(1, 0)], FRAC_PI_2, epsilon = 0.0);
            }
            other => panic!("expected a constant generator, got {other:?}"),
        }
        assert_eq!(spec.psi0.as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn rejects_malformed_descriptions() {
        let missing = r#"{"L": 1, "field": "real", "K": [[0]], "psi0": [1], "N": 4, "R": 2}"#;
        assert!(matches!(
            parse_system_spec(missing),
            Err(DynError::Description(msg)) if msg.contains("\"D\"")
        ));
        let bad_field =
            r#"{"L": 1, "field": "rational", "K": [[0]], "psi0": [1], "N": 4, "R": 2, "D": 0}"#;
        assert!(matches!(
            parse_system_spec(bad_field),
            Err(DynError::Description(msg)) if msg.contains("rational")
        ));
        let ragged =
            r#"{"L": 2, "field": "real", "K": [[0, 1]], "psi0": [1, 0], "N": 4, "R": 2, "D": 0}"#;
        assert!(parse_system_spec(ragged).is_err());
        let too_short =
            r#"{"L": 1, "field": "real", "K": [[0]], "psi0": [1], "N": 1, "R": 2, "D": 0}"#;
        assert!(matches!(
            parse_system_spec(too_short),
            Err(DynError::TooFewTimePoints(1))
        ));
        let no_bits =
            r#"{"L": 1, "field": "real", "K": [[0]], "psi0": [1], "N": 4, "R": 0, "D": 0}"#;
        assert!(matches!(
            parse_system_spec(no_bits),
            Err(DynError::BadBitCount)
        ));
    }
}
