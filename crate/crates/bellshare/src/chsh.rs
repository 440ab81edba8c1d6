//! CHSH operator assembly, expectation values, the two-qubit correlation
//! tensor, and the closed-form optimum over qubit settings.

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, ComplexMatrix, HERMITICITY_TOL};
use crate::quantum::{correlation, pauli, IMAG_TOL};

/// Four dichotomic observables defining a CHSH experiment. Each operator is
/// Hermitian with spectrum inside `[-1, 1]` (up to 1e-10 slack).
#[derive(Clone, Debug)]
pub struct ChshSetting {
    a0: ComplexMatrix,
    a1: ComplexMatrix,
    b0: ComplexMatrix,
    b1: ComplexMatrix,
}

impl ChshSetting {
    pub fn new(
        a0: ComplexMatrix,
        a1: ComplexMatrix,
        b0: ComplexMatrix,
        b1: ComplexMatrix,
    ) -> Result<Self> {
        if a0.rows() != a1.rows() || b0.rows() != b1.rows() {
            return Err(Error::Shape(
                "paired observables must share dimensions".into(),
            ));
        }
        for (name, op) in [("a0", &a0), ("a1", &a1), ("b0", &b0), ("b1", &b1)] {
            if !op.is_square() {
                return Err(Error::Shape(format!("{name} must be square")));
            }
            let herm = op.hermiticity_residual();
            if herm > HERMITICITY_TOL {
                return Err(Error::Contract(format!(
                    "{name} is not Hermitian: residual {herm:.3e}"
                )));
            }
            let (eigvals, _) = hermitian_eigen(op)?;
            let lo = eigvals.first().copied().unwrap_or(0.0);
            let hi = eigvals.last().copied().unwrap_or(0.0);
            if lo < -1.0 - 1e-10 || hi > 1.0 + 1e-10 {
                return Err(Error::Contract(format!(
                    "{name} spectrum [{lo:.6}, {hi:.6}] escapes [-1, 1]"
                )));
            }
        }
        Ok(Self { a0, a1, b0, b1 })
    }

    pub fn a0(&self) -> &ComplexMatrix {
        &self.a0
    }

    pub fn a1(&self) -> &ComplexMatrix {
        &self.a1
    }

    pub fn b0(&self) -> &ComplexMatrix {
        &self.b0
    }

    pub fn b1(&self) -> &ComplexMatrix {
        &self.b1
    }

    pub fn dim_a(&self) -> usize {
        self.a0.rows()
    }

    pub fn dim_b(&self) -> usize {
        self.b0.rows()
    }
}

/// The CHSH operator `A0⊗B0 + A0⊗B1 + A1⊗B0 − A1⊗B1`.
pub fn chsh_operator(s: &ChshSetting) -> ComplexMatrix {
    let mut out = s.a0.kron(&s.b0);
    out.add_assign_scaled(&s.a0.kron(&s.b1), 1.0);
    out.add_assign_scaled(&s.a1.kron(&s.b0), 1.0);
    out.add_assign_scaled(&s.a1.kron(&s.b1), -1.0);
    out
}

/// Signed CHSH expectation `Tr[𝔹 ρ]`. Callers testing the inequality take
/// the absolute value. The imaginary residual must stay below 1e-10.
pub fn chsh_value(rho: &ComplexMatrix, s: &ChshSetting) -> Result<f64> {
    if rho.rows() != s.dim_a() * s.dim_b() {
        return Err(Error::Shape(format!(
            "state dimension {} does not match setting {}x{}",
            rho.rows(),
            s.dim_a(),
            s.dim_b()
        )));
    }
    let t = chsh_operator(s).trace_product(rho)?;
    if t.im.abs() > IMAG_TOL {
        return Err(Error::Contract(format!(
            "CHSH value has imaginary residual {:.3e}",
            t.im
        )));
    }
    Ok(t.re)
}

/// Correlation tensor `T[i][j] = Tr[ρ (σ_{i+1} ⊗ σ_{j+1})]` of a two-qubit
/// state.
pub fn correlation_tensor(rho: &ComplexMatrix) -> Result<[[f64; 3]; 3]> {
    if rho.rows() != 4 || rho.cols() != 4 {
        return Err(Error::Shape(format!(
            "correlation tensor requires a 4x4 state, got {}x{}",
            rho.rows(),
            rho.cols()
        )));
    }
    let sigmas = [pauli(1)?, pauli(2)?, pauli(3)?];
    let mut t = [[0.0; 3]; 3];
    for (i, si) in sigmas.iter().enumerate() {
        for (j, sj) in sigmas.iter().enumerate() {
            t[i][j] = correlation(rho, si, sj)?;
        }
    }
    Ok(t)
}

/// Maximum CHSH value over all qubit settings with unit-Bloch observables:
/// `2√(λ₁ + λ₂)` for the two largest eigenvalues of `TᵀT`.
pub fn horodecki_max(rho: &ComplexMatrix) -> Result<f64> {
    let t = correlation_tensor(rho)?;
    // TᵀT is real symmetric 3×3
    let mut m = ComplexMatrix::zeros(3, 3);
    for i in 0..3 {
        for j in 0..3 {
            let mut s = 0.0;
            for k in 0..3 {
                s += t[k][i] * t[k][j];
            }
            m.set(i, j, num_complex::Complex64::new(s, 0.0));
        }
    }
    let (eigvals, _) = hermitian_eigen(&m)?;
    let top_two = eigvals[2].max(0.0) + eigvals[1].max(0.0);
    Ok(2.0 * top_two.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::ProtocolParams;
    use crate::quantum::{schmidt_pure_state, BlochDirection, SchmidtVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bell_state() -> ComplexMatrix {
        let v = std::f64::consts::FRAC_1_SQRT_2;
        schmidt_pure_state(&SchmidtVector::new(vec![v, v]).unwrap(), 2).unwrap()
    }

    fn tsirelson_setting() -> ChshSetting {
        let v = std::f64::consts::FRAC_1_SQRT_2;
        let s1 = pauli(1).unwrap();
        let s3 = pauli(3).unwrap();
        let b0 = s1.add(&s3).unwrap().scale(v);
        let b1 = s1.sub(&s3).unwrap().scale(v);
        ChshSetting::new(s1, s3, b0, b1).unwrap()
    }

    #[test]
    fn degenerate_setting_gives_twice_identity() {
        let id = ComplexMatrix::identity(2);
        let s = ChshSetting::new(id.clone(), id.clone(), id.clone(), id.clone()).unwrap();
        let op = chsh_operator(&s);
        assert!(op.max_abs_diff(&ComplexMatrix::identity(4).scale(2.0)) < 1e-14);
    }

    #[test]
    fn tsirelson_operator_norm() {
        let op = chsh_operator(&tsirelson_setting());
        let (eigvals, _) = hermitian_eigen(&op).unwrap();
        let norm = eigvals
            .iter()
            .map(|l| l.abs())
            .fold(0.0f64, f64::max);
        assert!((norm - 2.0 * 2.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn protocol_setting_operator_form() {
        // qubit scenario: 𝔹 = 2cosθ σ1⊗σ1 + 2γ₁sinθ σ3⊗σ3
        let v = std::f64::consts::FRAC_1_SQRT_2;
        let theta = 0.57;
        let gamma1 = 0.83;
        let p = ProtocolParams::new(
            2,
            SchmidtVector::new(vec![v, v]).unwrap(),
            theta,
            gamma1,
        )
        .unwrap();
        let op = chsh_operator(&p.setting().unwrap());
        let s1 = pauli(1).unwrap();
        let s3 = pauli(3).unwrap();
        let mut expected = s1.kron(&s1).scale(2.0 * theta.cos());
        expected.add_assign_scaled(&s3.kron(&s3), 2.0 * gamma1 * theta.sin());
        assert!(op.max_abs_diff(&expected) < 1e-13);
    }

    #[test]
    fn chsh_value_examples() {
        let bell = bell_state();
        let v = chsh_value(&bell, &tsirelson_setting()).unwrap();
        assert!((v - 2.8284271247461903).abs() < 1e-12);

        let s1 = pauli(1).unwrap();
        let all_x = ChshSetting::new(s1.clone(), s1.clone(), s1.clone(), s1.clone()).unwrap();
        assert!((chsh_value(&bell, &all_x).unwrap() - 2.0).abs() < 1e-12);

        let mixed = ComplexMatrix::identity(4).scale(0.25);
        assert!(chsh_value(&mixed, &tsirelson_setting()).unwrap().abs() < 1e-12);
    }

    #[test]
    fn chsh_value_is_linear_in_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = tsirelson_setting();
        let bell = bell_state();
        let mixed = ComplexMatrix::identity(4).scale(0.25);
        for _ in 0..10 {
            let alpha: f64 = rng.gen_range(0.0..1.0);
            let mut blend = bell.scale(alpha);
            blend.add_assign_scaled(&mixed, 1.0 - alpha);
            let lhs = chsh_value(&blend, &s).unwrap();
            let rhs = alpha * chsh_value(&bell, &s).unwrap()
                + (1.0 - alpha) * chsh_value(&mixed, &s).unwrap();
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn correlation_tensor_examples() {
        let t = correlation_tensor(&bell_state()).unwrap();
        let expected = [[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((t[i][j] - expected[i][j]).abs() < 1e-12);
            }
        }

        let product =
            schmidt_pure_state(&SchmidtVector::new(vec![1.0, 0.0]).unwrap(), 2).unwrap();
        let tp = correlation_tensor(&product).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == 2 && j == 2 { 1.0 } else { 0.0 };
                assert!((tp[i][j] - want).abs() < 1e-12);
            }
        }

        let mixed = ComplexMatrix::identity(4).scale(0.25);
        let tm = correlation_tensor(&mixed).unwrap();
        assert!(tm.iter().flatten().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn horodecki_examples() {
        assert!((horodecki_max(&bell_state()).unwrap() - 2.8284271247461903).abs() < 1e-12);

        let tilted = SchmidtVector::new(vec![0.8f64.sqrt(), 0.2f64.sqrt()]).unwrap();
        let rho = schmidt_pure_state(&tilted, 2).unwrap();
        assert!((horodecki_max(&rho).unwrap() - 2.5612496949731396).abs() < 1e-12);

        let product =
            schmidt_pure_state(&SchmidtVector::new(vec![1.0, 0.0]).unwrap(), 2).unwrap();
        assert!((horodecki_max(&product).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn horodecki_bounds_random_unit_bloch_settings() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let random_obs = |rng: &mut ChaCha8Rng| {
            let v: [f64; 3] = [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ];
            let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt().max(1e-6);
            BlochDirection::new([v[0] / norm, v[1] / norm, v[2] / norm])
                .unwrap()
                .sigma()
        };
        // 200 random states, each against a fresh random setting
        for _ in 0..200 {
            let data: Vec<num_complex::Complex64> = (0..16)
                .map(|_| {
                    num_complex::Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                })
                .collect();
            let m = ComplexMatrix::from_vec(4, 4, data).unwrap();
            let psd = m.multiply(&m.adjoint()).unwrap();
            let rho = psd.scale(1.0 / psd.trace().unwrap().re);
            let bound = horodecki_max(&rho).unwrap();
            let s = ChshSetting::new(
                random_obs(&mut rng),
                random_obs(&mut rng),
                random_obs(&mut rng),
                random_obs(&mut rng),
            )
            .unwrap();
            let v = chsh_value(&rho, &s).unwrap();
            assert!(v.abs() <= bound + 1e-9, "value {v} bound {bound}");
        }
    }

    #[test]
    fn separable_states_stay_classical() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..20 {
            // mixture of two product states
            let mk_product = |rng: &mut ChaCha8Rng| {
                let mut amps = Vec::new();
                for _ in 0..2 {
                    amps.push(num_complex::Complex64::new(
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                    ));
                }
                let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
                let v = ComplexMatrix::from_vec(2, 1, amps.iter().map(|a| a / norm).collect())
                    .unwrap();
                v.multiply(&v.adjoint()).unwrap()
            };
            let pa = mk_product(&mut rng).kron(&mk_product(&mut rng));
            let pb = mk_product(&mut rng).kron(&mk_product(&mut rng));
            let lambda: f64 = rng.gen_range(0.0..1.0);
            let mut rho = pa.scale(lambda);
            rho.add_assign_scaled(&pb, 1.0 - lambda);
            let bound = horodecki_max(&rho).unwrap();
            assert!(bound <= 2.0 + 1e-9, "separable bound {bound}");
        }
    }

    #[test]
    fn setting_rejects_out_of_range_spectrum() {
        let s1 = pauli(1).unwrap();
        let too_big = s1.scale(1.5);
        assert!(ChshSetting::new(too_big, s1.clone(), s1.clone(), s1.clone()).is_err());
    }

    #[test]
    fn chsh_value_shape_mismatch() {
        let rho = ComplexMatrix::identity(9).scale(1.0 / 9.0);
        assert!(chsh_value(&rho, &tsirelson_setting()).is_err());
    }
}
