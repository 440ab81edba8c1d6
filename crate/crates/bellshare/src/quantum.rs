//! Schmidt-form pure states, the dichotomic POVM families used by the
//! bilateral protocol, and measurement-object validation.
//!
//! Two POVM families are provided: the qubit family (a tilted sharp pair for
//! the A side, one sharp and one unsharp input for the B side) and its d ≥ 3
//! block generalization, where the A-side operators act on the first two
//! levels and the B-side operators on the last two. For d = 3 those blocks
//! overlap on the middle level; the operators are built exactly as written,
//! with no special-casing.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, ComplexMatrix, HERMITICITY_TOL};

/// Completeness tolerance: the two effects of a dichotomic POVM must sum to
/// the identity within this entrywise bound.
pub const COMPLETENESS_TOL: f64 = 1e-12;

/// Effects may have spectrum in `[-SPECTRUM_SLACK, 1 + SPECTRUM_SLACK]`.
pub const SPECTRUM_SLACK: f64 = 1e-10;

/// Largest imaginary part tolerated when a trace is reported as a real
/// correlation.
pub const IMAG_TOL: f64 = 1e-10;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Standard Pauli matrix σ_index for index ∈ {1, 2, 3}.
pub fn pauli(index: usize) -> Result<ComplexMatrix> {
    match index {
        1 => ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]),
        2 => ComplexMatrix::from_vec(
            2,
            2,
            vec![c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)],
        ),
        3 => ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, -1.0]),
        other => Err(Error::Argument(format!(
            "pauli index must be 1, 2 or 3, got {other}"
        ))),
    }
}

/// Descending nonnegative Schmidt coefficients with Σ cᵢ² = 1.
#[derive(Clone, Debug, PartialEq)]
pub struct SchmidtVector {
    coeffs: Vec<f64>,
}

impl SchmidtVector {
    /// Validates range, normalization (within 1e-12) and descending order.
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Argument("Schmidt vector must be nonempty".into()));
        }
        for (i, &ci) in coeffs.iter().enumerate() {
            if !(0.0..=1.0).contains(&ci) || !ci.is_finite() {
                return Err(Error::Argument(format!(
                    "Schmidt coefficient c[{i}] = {ci} outside [0, 1]"
                )));
            }
        }
        for w in coeffs.windows(2) {
            if w[0] < w[1] {
                return Err(Error::Argument(
                    "Schmidt coefficients must be in descending order".into(),
                ));
            }
        }
        let norm: f64 = coeffs.iter().map(|ci| ci * ci).sum();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::Argument(format!(
                "Schmidt coefficients must satisfy sum of squares = 1, got {norm}"
            )));
        }
        Ok(Self { coeffs })
    }

    /// Build from squared weights (wᵢ = cᵢ²).
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let mut coeffs = Vec::with_capacity(weights.len());
        for (i, &w) in weights.iter().enumerate() {
            if w < 0.0 || !w.is_finite() {
                return Err(Error::Argument(format!(
                    "Schmidt weight w[{i}] = {w} must be nonnegative"
                )));
            }
            coeffs.push(w.sqrt());
        }
        Self::new(coeffs)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Coefficient cᵢ (0-based); coefficients past the stored length are 0.
    pub fn get(&self, i: usize) -> f64 {
        self.coeffs.get(i).copied().unwrap_or(0.0)
    }

    /// Entangled iff at least two coefficients are nonzero.
    pub fn is_entangled(&self) -> bool {
        self.coeffs.iter().filter(|&&ci| ci > 0.0).count() >= 2
    }
}

/// One POVM element: Hermitian with spectrum in `[0, 1]` (up to
/// [`SPECTRUM_SLACK`]).
#[derive(Clone, Debug)]
pub struct Effect {
    matrix: ComplexMatrix,
}

impl Effect {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Shape("effect must be square".into()));
        }
        let (eigvals, _) = hermitian_eigen(&matrix)?;
        let lo = eigvals.first().copied().unwrap_or(0.0);
        let hi = eigvals.last().copied().unwrap_or(0.0);
        if lo < -SPECTRUM_SLACK || hi > 1.0 + SPECTRUM_SLACK {
            return Err(Error::Contract(format!(
                "effect spectrum [{lo:.3e}, {hi:.3e}] escapes [0, 1]"
            )));
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }
}

/// Which side of the bipartite system a measurement acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Party {
    Alice,
    Bob,
}

/// A binary measurement `{E, I − E}` for one input setting, together with the
/// party it belongs to.
#[derive(Clone, Debug)]
pub struct DichotomicPovm {
    e0: Effect,
    e1: Effect,
    label: u8,
    party: Party,
    interpretation: Option<&'static str>,
}

impl DichotomicPovm {
    /// Validates completeness `e0 + e1 = I` within [`COMPLETENESS_TOL`].
    pub fn new(e0: Effect, e1: Effect, label: u8, party: Party) -> Result<Self> {
        if e0.dim() != e1.dim() {
            return Err(Error::Shape(format!(
                "effect dimensions differ: {} vs {}",
                e0.dim(),
                e1.dim()
            )));
        }
        let sum = e0.matrix.add(&e1.matrix)?;
        let residual = sum.max_abs_diff(&ComplexMatrix::identity(e0.dim()));
        if residual > COMPLETENESS_TOL {
            return Err(Error::Contract(format!(
                "effects do not sum to identity: residual {residual:.3e}"
            )));
        }
        Ok(Self {
            e0,
            e1,
            label,
            party,
            interpretation: None,
        })
    }

    /// Skips the completeness check so that deliberately broken pairs can be
    /// fed to [`validate_povm`]. Each effect is still individually validated.
    pub fn from_effects_unchecked(e0: Effect, e1: Effect, label: u8, party: Party) -> Self {
        Self {
            e0,
            e1,
            label,
            party,
            interpretation: None,
        }
    }

    pub fn e0(&self) -> &Effect {
        &self.e0
    }

    pub fn e1(&self) -> &Effect {
        &self.e1
    }

    pub fn label(&self) -> u8 {
        self.label
    }

    pub fn party(&self) -> Party {
        self.party
    }

    pub fn dim(&self) -> usize {
        self.e0.dim()
    }

    /// Reading note attached by a constructor, surfaced by [`validate_povm`].
    pub fn interpretation(&self) -> Option<&'static str> {
        self.interpretation
    }

    /// The ±1-valued observable `e0 − e1` associated with this measurement.
    pub fn expectation_operator(&self) -> ComplexMatrix {
        self.e0
            .matrix
            .sub(&self.e1.matrix)
            .expect("effects share dimensions by construction")
    }
}

/// Free-function form of [`DichotomicPovm::expectation_operator`].
pub fn expectation_operator(m: &DichotomicPovm) -> ComplexMatrix {
    m.expectation_operator()
}

/// Unit vector on the Bloch sphere.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlochDirection {
    r: [f64; 3],
}

impl BlochDirection {
    pub fn new(r: [f64; 3]) -> Result<Self> {
        let norm = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::Argument(format!(
                "Bloch direction must have unit norm, got {norm}"
            )));
        }
        Ok(Self { r })
    }

    pub fn components(&self) -> [f64; 3] {
        self.r
    }

    /// r · σ
    pub fn sigma(&self) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(2, 2);
        for (i, &ri) in self.r.iter().enumerate() {
            if ri != 0.0 {
                m.add_assign_scaled(&pauli(i + 1).expect("index in range"), ri);
            }
        }
        m
    }
}

/// Density matrix |ψ⟩⟨ψ| of the Schmidt-form pure state
/// Σ cᵢ |i⟩⊗|i⟩ on a dim_a ⊗ dim_b system. Coefficients past the stored
/// length are zero.
pub fn schmidt_pure_state_rect(
    coeffs: &SchmidtVector,
    dim_a: usize,
    dim_b: usize,
) -> Result<ComplexMatrix> {
    if dim_a == 0 || dim_b == 0 {
        return Err(Error::Argument("dimensions must be >= 1".into()));
    }
    if coeffs.len() > dim_a.min(dim_b) {
        return Err(Error::Argument(format!(
            "Schmidt vector of length {} does not fit in {}x{}",
            coeffs.len(),
            dim_a,
            dim_b
        )));
    }
    let n = dim_a * dim_b;
    let mut rho = ComplexMatrix::zeros(n, n);
    for i in 0..coeffs.len() {
        let ci = coeffs.get(i);
        if ci == 0.0 {
            continue;
        }
        for j in 0..coeffs.len() {
            let cj = coeffs.get(j);
            if cj == 0.0 {
                continue;
            }
            rho.set(i * dim_b + i, j * dim_b + j, c(ci * cj, 0.0));
        }
    }
    Ok(rho)
}

/// Square-system convenience form of [`schmidt_pure_state_rect`].
pub fn schmidt_pure_state(coeffs: &SchmidtVector, dim: usize) -> Result<ComplexMatrix> {
    schmidt_pure_state_rect(coeffs, dim, dim)
}

/// Unsharp qubit effect `½(I + γ r·σ)` with eigenvalues `(1 ± γ)/2`.
pub fn unsharp_effect(gamma: f64, r: &BlochDirection) -> Result<Effect> {
    if !(0.0..=1.0).contains(&gamma) || !gamma.is_finite() {
        return Err(Error::Argument(format!(
            "sharpness must lie in [0, 1], got {gamma}"
        )));
    }
    let mut m = ComplexMatrix::identity(2);
    m.add_assign_scaled(&r.sigma(), gamma);
    Effect::new(m.scale(0.5))
}

fn check_theta(theta: f64) -> Result<()> {
    if !theta.is_finite() || !(theta > 0.0 && theta <= std::f64::consts::FRAC_PI_4 + 1e-12) {
        return Err(Error::Argument(format!(
            "theta must lie in (0, pi/4], got {theta}"
        )));
    }
    Ok(())
}

fn check_gamma(gamma1: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&gamma1) || !gamma1.is_finite() {
        return Err(Error::Argument(format!(
            "gamma1 must lie in [0, 1], got {gamma1}"
        )));
    }
    Ok(())
}

fn check_input(x: u8) -> Result<()> {
    if x > 1 {
        return Err(Error::Argument(format!("input label must be 0 or 1, got {x}")));
    }
    Ok(())
}

/// A-side qubit measurement for input `x`:
/// `E = ½(I + cosθ σ1 ± sinθ σ3)` (+ for x = 0, − for x = 1). Both effects
/// are rank-1 projectors.
pub fn alice_qubit_povm(theta: f64, x: u8) -> Result<DichotomicPovm> {
    check_theta(theta)?;
    check_input(x)?;
    let sign = if x == 0 { 1.0 } else { -1.0 };
    let mut m = ComplexMatrix::identity(2);
    m.add_assign_scaled(&pauli(1)?, theta.cos());
    m.add_assign_scaled(&pauli(3)?, sign * theta.sin());
    let e0 = Effect::new(m.scale(0.5))?;
    let e1 = Effect::new(ComplexMatrix::identity(2).sub(e0.matrix())?)?;
    DichotomicPovm::new(e0, e1, x, Party::Alice)
}

/// B-side qubit measurement: input 0 is the sharp `½(I + σ1)`, input 1 the
/// unsharp `½(I + γ₁ σ3)`.
pub fn bob_qubit_povm(gamma1: f64, y: u8) -> Result<DichotomicPovm> {
    check_gamma(gamma1)?;
    check_input(y)?;
    let mut m = ComplexMatrix::identity(2);
    if y == 0 {
        m.add_assign_scaled(&pauli(1)?, 1.0);
    } else {
        m.add_assign_scaled(&pauli(3)?, gamma1);
    }
    let e0 = Effect::new(m.scale(0.5))?;
    let e1 = Effect::new(ComplexMatrix::identity(2).sub(e0.matrix())?)?;
    DichotomicPovm::new(e0, e1, y, Party::Bob)
}

/// Embed a 2×2 block at the top-left corner of an otherwise-`fill` diagonal
/// d×d matrix (fill applied to indices 2..d).
fn embed_top_block(block: &ComplexMatrix, d: usize, fill: f64) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(d, d);
    for i in 0..2 {
        for j in 0..2 {
            m.set(i, j, block.get(i, j));
        }
    }
    for i in 2..d {
        m.set(i, i, c(fill, 0.0));
    }
    m
}

/// Embed a 2×2 block at the bottom-right corner, with `fill` on indices
/// 0..d−2.
fn embed_bottom_block(block: &ComplexMatrix, d: usize, fill: f64) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(d, d);
    for i in 0..d - 2 {
        m.set(i, i, c(fill, 0.0));
    }
    for i in 0..2 {
        for j in 0..2 {
            m.set(d - 2 + i, d - 2 + j, block.get(i, j));
        }
    }
    m
}

/// A-side measurement for d ≥ 3: `E = ½[I_d + diag(cosθ σ3 ± sinθ σ1, I_{d−2})]`
/// (+ for x = 0, − for x = 1). The tilted operator sits on the first two
/// levels; both effects are projectors.
pub fn alice_highd_povm(d: usize, theta: f64, x: u8) -> Result<DichotomicPovm> {
    if d < 3 {
        return Err(Error::Argument(format!("block operators require d >= 3, got {d}")));
    }
    check_theta(theta)?;
    check_input(x)?;
    let sign = if x == 0 { 1.0 } else { -1.0 };
    let mut block = ComplexMatrix::zeros(2, 2);
    block.add_assign_scaled(&pauli(3)?, theta.cos());
    block.add_assign_scaled(&pauli(1)?, sign * theta.sin());
    let tilt = embed_top_block(&block, d, 1.0);
    let e0 = Effect::new(ComplexMatrix::identity(d).add(&tilt)?.scale(0.5))?;
    let e1 = Effect::new(ComplexMatrix::identity(d).sub(e0.matrix())?)?;
    DichotomicPovm::new(e0, e1, x, Party::Alice)
}

/// B-side measurement for d ≥ 3: input 0 is the projective
/// `½[I_d + diag(I_{d−2}, σ3)]`, input 1 the unsharp
/// `½[I_d + diag(I_{d−2}, γ₁ σ1)]` — deterministic on the first d−2 levels,
/// unsharp only on the last two.
///
/// The identity block in the unsharp input is read as `I_{d−2}` for every d
/// (the only reading that keeps the operator d×d); the reading is surfaced
/// as a note by [`validate_povm`].
pub fn bob_highd_povm(d: usize, gamma1: f64, y: u8) -> Result<DichotomicPovm> {
    if d < 3 {
        return Err(Error::Argument(format!("block operators require d >= 3, got {d}")));
    }
    check_gamma(gamma1)?;
    check_input(y)?;
    let block = if y == 0 {
        pauli(3)?
    } else {
        pauli(1)?.scale(gamma1)
    };
    let tilt = embed_bottom_block(&block, d, 1.0);
    let e0 = Effect::new(ComplexMatrix::identity(d).add(&tilt)?.scale(0.5))?;
    let e1 = Effect::new(ComplexMatrix::identity(d).sub(e0.matrix())?)?;
    let mut povm = DichotomicPovm::new(e0, e1, y, Party::Bob)?;
    if y == 1 {
        povm.interpretation =
            Some("identity block of the unsharp B input read as I_{d-2} on a d-level system");
    }
    Ok(povm)
}

/// Validation report for a dichotomic POVM. Violations are collected rather
/// than returned as errors so that deliberately broken pairs can be
/// inspected.
#[derive(Clone, Debug)]
pub struct PovmReport {
    pub hermiticity_residual: f64,
    pub spectrum_min: f64,
    pub spectrum_max: f64,
    pub completeness_residual: f64,
    pub violations: Vec<String>,
    pub note: Option<&'static str>,
}

impl PovmReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    /// Largest residual across all checks.
    pub fn max_residual(&self) -> f64 {
        let spectrum_excess = (-self.spectrum_min)
            .max(self.spectrum_max - 1.0)
            .max(0.0);
        self.hermiticity_residual
            .max(self.completeness_residual)
            .max(spectrum_excess)
    }
}

/// Check Hermiticity, spectrum and completeness of a POVM pair.
pub fn validate_povm(m: &DichotomicPovm) -> PovmReport {
    let mut violations = Vec::new();
    let herm = m
        .e0
        .matrix
        .hermiticity_residual()
        .max(m.e1.matrix.hermiticity_residual());
    if herm > HERMITICITY_TOL {
        violations.push(format!("effects not Hermitian: residual {herm:.3e}"));
    }

    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for effect in [&m.e0, &m.e1] {
        match hermitian_eigen(effect.matrix()) {
            Ok((eigvals, _)) => {
                lo = lo.min(eigvals.first().copied().unwrap_or(0.0));
                hi = hi.max(eigvals.last().copied().unwrap_or(0.0));
            }
            Err(e) => violations.push(format!("spectrum check failed: {e}")),
        }
    }
    if lo < -SPECTRUM_SLACK || hi > 1.0 + SPECTRUM_SLACK {
        violations.push(format!("spectrum [{lo:.3e}, {hi:.3e}] escapes [0, 1]"));
    }

    let completeness = match m.e0.matrix.add(&m.e1.matrix) {
        Ok(sum) => sum.max_abs_diff(&ComplexMatrix::identity(m.dim())),
        Err(_) => f64::INFINITY,
    };
    if completeness > COMPLETENESS_TOL {
        violations.push(format!(
            "effects do not sum to identity: residual {completeness:.3e}"
        ));
    }

    PovmReport {
        hermiticity_residual: herm,
        spectrum_min: lo,
        spectrum_max: hi,
        completeness_residual: completeness,
        violations,
        note: m.interpretation,
    }
}

/// Two-point correlation `Re Tr[ρ (oa ⊗ ob)]`, evaluated without forming the
/// Kronecker product. The imaginary part must stay below [`IMAG_TOL`].
pub fn correlation(
    rho: &ComplexMatrix,
    oa: &ComplexMatrix,
    ob: &ComplexMatrix,
) -> Result<f64> {
    if !rho.is_square() || !oa.is_square() || !ob.is_square() {
        return Err(Error::Shape("correlation requires square matrices".into()));
    }
    let (da, db) = (oa.rows(), ob.rows());
    let n = rho.rows();
    if da * db != n {
        return Err(Error::Shape(format!(
            "observable dimensions {da}x{db} do not factor state dimension {n}"
        )));
    }
    // Tr[ρ (A⊗B)] = Σ ρ[(a1,b1),(a2,b2)] A[a2,a1] B[b2,b1]
    let mut t = Complex64::new(0.0, 0.0);
    let rd = rho.data();
    for a1 in 0..da {
        for b1 in 0..db {
            let row = (a1 * db + b1) * n;
            for a2 in 0..da {
                let a = oa.get(a2, a1);
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let base = row + a2 * db;
                for b2 in 0..db {
                    let r = rd[base + b2];
                    if r == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    t += r * a * ob.get(b2, b1);
                }
            }
        }
    }
    if t.im.abs() > IMAG_TOL {
        return Err(Error::Contract(format!(
            "correlation has non-negligible imaginary part {:.3e}",
            t.im
        )));
    }
    Ok(t.re)
}
