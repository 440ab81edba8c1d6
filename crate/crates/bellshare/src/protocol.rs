//! The bilateral measurement protocol: input-averaged Lüders channels, the
//! B-then-A two-round evolution producing the final shared state, and a
//! Heisenberg-picture (adjoint channel) evaluation path used as an
//! independent cross-check.
//!
//! A round applies `ρ ↦ ½ Σ_{outcome, input} K ρ K` with `K = √effect`
//! embedded on the round's side of the bipartite system. Kraus operators of
//! projective effects take the exact path (`K = E`): feeding an effect whose
//! zero eigenvalue carries +O(ε) floating-point noise through an
//! eigendecomposition turns ε into √ε ≈ 1e-8, which would swamp the 1e-12
//! agreement the closed forms satisfy.

use crate::chsh::ChshSetting;
use crate::error::{Error, Result};
use crate::linalg::{psd_sqrt, ComplexMatrix};
use crate::quantum::{
    alice_highd_povm, alice_qubit_povm, bob_highd_povm, bob_qubit_povm, schmidt_pure_state,
    DichotomicPovm, Party, SchmidtVector,
};

/// Effects with `max |E² − E|` below this are treated as projectors and used
/// directly as their own square root.
pub const PROJECTOR_TOL: f64 = 1e-12;

/// Trace and Hermiticity budget for channel outputs.
pub const CHANNEL_TOL: f64 = 1e-12;

/// Full parameterization of one bilateral-measurement scenario:
/// local dimension, initial Schmidt coefficients, the A-side tilt θ and the
/// B-side sharpness γ₁. `d = 2` selects the qubit measurement family,
/// `d ≥ 3` the block family.
#[derive(Clone, Debug)]
pub struct ProtocolParams {
    d: usize,
    schmidt: SchmidtVector,
    theta: f64,
    gamma1: f64,
}

impl ProtocolParams {
    pub fn new(d: usize, schmidt: SchmidtVector, theta: f64, gamma1: f64) -> Result<Self> {
        if d < 2 {
            return Err(Error::Argument(format!(
                "local dimension must be >= 2, got {d}"
            )));
        }
        if schmidt.len() > d {
            return Err(Error::Argument(format!(
                "Schmidt vector of length {} does not fit dimension {d}",
                schmidt.len()
            )));
        }
        if !(theta > 0.0 && theta <= std::f64::consts::FRAC_PI_4 + 1e-12) {
            return Err(Error::Argument(format!(
                "theta must lie in (0, pi/4], got {theta}"
            )));
        }
        if !(0.0..=1.0).contains(&gamma1) {
            return Err(Error::Argument(format!(
                "gamma1 must lie in [0, 1], got {gamma1}"
            )));
        }
        Ok(Self {
            d,
            schmidt,
            theta,
            gamma1,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn schmidt(&self) -> &SchmidtVector {
        &self.schmidt
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn gamma1(&self) -> f64 {
        self.gamma1
    }

    /// Initial pure state ρ shared before any measurement.
    pub fn initial_state(&self) -> Result<ComplexMatrix> {
        schmidt_pure_state(&self.schmidt, self.d)
    }

    /// The CHSH setting built from this scenario's expectation operators.
    pub fn setting(&self) -> Result<ChshSetting> {
        let (alice, bob) = (self.alice_round()?, self.bob_round()?);
        ChshSetting::new(
            alice.povms[0].expectation_operator(),
            alice.povms[1].expectation_operator(),
            bob.povms[0].expectation_operator(),
            bob.povms[1].expectation_operator(),
        )
    }

    /// A-side round (both inputs) for this scenario.
    pub fn alice_round(&self) -> Result<MeasurementRound> {
        let (p0, p1) = if self.d == 2 {
            (
                alice_qubit_povm(self.theta, 0)?,
                alice_qubit_povm(self.theta, 1)?,
            )
        } else {
            (
                alice_highd_povm(self.d, self.theta, 0)?,
                alice_highd_povm(self.d, self.theta, 1)?,
            )
        };
        MeasurementRound::new(p0, p1)
    }

    /// B-side round (both inputs) for this scenario.
    pub fn bob_round(&self) -> Result<MeasurementRound> {
        let (p0, p1) = if self.d == 2 {
            (bob_qubit_povm(self.gamma1, 0)?, bob_qubit_povm(self.gamma1, 1)?)
        } else {
            (
                bob_highd_povm(self.d, self.gamma1, 0)?,
                bob_highd_povm(self.d, self.gamma1, 1)?,
            )
        };
        MeasurementRound::new(p0, p1)
    }
}

/// One observer's round: the two dichotomic POVMs for inputs 0 and 1.
#[derive(Clone, Debug)]
pub struct MeasurementRound {
    povms: [DichotomicPovm; 2],
}

impl MeasurementRound {
    pub fn new(povm0: DichotomicPovm, povm1: DichotomicPovm) -> Result<Self> {
        if povm0.party() != povm1.party() {
            return Err(Error::Argument(
                "both inputs of a round must belong to the same party".into(),
            ));
        }
        if povm0.dim() != povm1.dim() {
            return Err(Error::Shape(format!(
                "round POVMs act on different dimensions: {} vs {}",
                povm0.dim(),
                povm1.dim()
            )));
        }
        Ok(Self {
            povms: [povm0, povm1],
        })
    }

    pub fn party(&self) -> Party {
        self.povms[0].party()
    }

    pub fn local_dim(&self) -> usize {
        self.povms[0].dim()
    }

    pub fn povm(&self, input: usize) -> &DichotomicPovm {
        &self.povms[input]
    }

    /// Square roots of all four effects (2 inputs × 2 outcomes). Projective
    /// effects are their own root and bypass the eigendecomposition.
    pub fn kraus_operators(&self) -> Result<Vec<ComplexMatrix>> {
        let mut out = Vec::with_capacity(4);
        for povm in &self.povms {
            for effect in [povm.e0(), povm.e1()] {
                let e = effect.matrix();
                let ee = e.multiply(e)?;
                if ee.max_abs_diff(e) <= PROJECTOR_TOL {
                    out.push(e.clone());
                } else {
                    out.push(psd_sqrt(e)?);
                }
            }
        }
        Ok(out)
    }
}

/// Order in which the two local rounds hit the state. The protocol fixes
/// B first; the reversed order exists for the side-commutation check, since
/// the two channels act on different tensor factors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeasurementOrder {
    BobThenAlice,
    AliceThenBob,
}

/// `(K ⊗ I_db) ρ (K ⊗ I_db)` for a da×da operator K, computed directly from
/// the block structure in O(n²·da) instead of forming the n×n Kronecker
/// factor.
fn sandwich_a_side(rho: &ComplexMatrix, k: &ComplexMatrix, da: usize, db: usize) -> ComplexMatrix {
    let n = da * db;
    let zero = num_complex::Complex64::new(0.0, 0.0);
    let rd = rho.data();
    let kd = k.data();

    // tmp = (K ⊗ I) ρ: row (a1,b) = Σ_m K[a1,m] · row (m,b)
    let mut tmp = vec![zero; n * n];
    for a1 in 0..da {
        for m in 0..da {
            let coef = kd[a1 * da + m];
            if coef == zero {
                continue;
            }
            for b in 0..db {
                let dst = (a1 * db + b) * n;
                let src = (m * db + b) * n;
                for col in 0..n {
                    tmp[dst + col] += coef * rd[src + col];
                }
            }
        }
    }
    // out = tmp (K ⊗ I): out[r, (a2,b2)] = Σ_m tmp[r, (m,b2)] K[m,a2]
    let mut out = vec![zero; n * n];
    for row in 0..n {
        let trow = &tmp[row * n..(row + 1) * n];
        let orow = &mut out[row * n..(row + 1) * n];
        for m in 0..da {
            let tbase = m * db;
            for a2 in 0..da {
                let coef = kd[m * da + a2];
                if coef == zero {
                    continue;
                }
                let obase = a2 * db;
                for b2 in 0..db {
                    orow[obase + b2] += trow[tbase + b2] * coef;
                }
            }
        }
    }
    ComplexMatrix::from_vec(n, n, out).expect("shape preserved")
}

/// `(I_da ⊗ K) ρ (I_da ⊗ K)` for a db×db operator K, in O(n²·db).
fn sandwich_b_side(rho: &ComplexMatrix, k: &ComplexMatrix, da: usize, db: usize) -> ComplexMatrix {
    let n = da * db;
    let zero = num_complex::Complex64::new(0.0, 0.0);
    let rd = rho.data();
    let kd = k.data();

    // tmp = (I ⊗ K) ρ: row (a,b1) = Σ_m K[b1,m] · row (a,m)
    let mut tmp = vec![zero; n * n];
    for a in 0..da {
        for b1 in 0..db {
            let dst = (a * db + b1) * n;
            for m in 0..db {
                let coef = kd[b1 * db + m];
                if coef == zero {
                    continue;
                }
                let src = (a * db + m) * n;
                for col in 0..n {
                    tmp[dst + col] += coef * rd[src + col];
                }
            }
        }
    }
    // out = tmp (I ⊗ K): out[r, (a2,b2)] = Σ_m tmp[r, (a2,m)] K[m,b2]
    let mut out = vec![zero; n * n];
    for row in 0..n {
        let trow = &tmp[row * n..(row + 1) * n];
        let orow = &mut out[row * n..(row + 1) * n];
        for a2 in 0..da {
            let tbase = a2 * db;
            let obase = a2 * db;
            for m in 0..db {
                let t = trow[tbase + m];
                if t == zero {
                    continue;
                }
                let krow = &kd[m * db..(m + 1) * db];
                for b2 in 0..db {
                    orow[obase + b2] += t * krow[b2];
                }
            }
        }
    }
    ComplexMatrix::from_vec(n, n, out).expect("shape preserved")
}

fn split_dims(n: usize, round: &MeasurementRound) -> Result<(usize, usize)> {
    let dl = round.local_dim();
    if !n.is_multiple_of(dl) {
        return Err(Error::Shape(format!(
            "round dimension {dl} does not divide state dimension {n}"
        )));
    }
    let other = n / dl;
    Ok(match round.party() {
        Party::Alice => (dl, other),
        Party::Bob => (other, dl),
    })
}

fn apply_round(rho: &ComplexMatrix, round: &MeasurementRound) -> Result<ComplexMatrix> {
    let n = rho.rows();
    let (da, db) = split_dims(n, round)?;
    let kraus = round.kraus_operators()?;
    let mut acc = ComplexMatrix::zeros(n, n);
    for k in &kraus {
        let term = match round.party() {
            Party::Alice => sandwich_a_side(rho, k, da, db),
            Party::Bob => sandwich_b_side(rho, k, da, db),
        };
        acc.add_assign_scaled(&term, 0.5);
    }
    Ok(acc)
}

/// Input-averaged Lüders update for one round:
/// `ρ' = ½ Σ_{input, outcome} (√E embedded) ρ (√E embedded)`.
///
/// The output trace and Hermiticity are asserted numerically — each input's
/// two effects sum to the identity, so both must survive to within
/// [`CHANNEL_TOL`].
pub fn luders_average(rho: &ComplexMatrix, round: &MeasurementRound) -> Result<ComplexMatrix> {
    if !rho.is_square() {
        return Err(Error::Shape("state must be square".into()));
    }
    let trace_in = rho.trace()?;
    if (trace_in.re - 1.0).abs() > 1e-9 || trace_in.im.abs() > 1e-9 {
        return Err(Error::Contract(format!(
            "input is not a unit-trace state: trace {trace_in}"
        )));
    }
    let out = apply_round(rho, round)?;
    let trace_out = out.trace()?;
    if (trace_out.re - 1.0).abs() > CHANNEL_TOL || trace_out.im.abs() > CHANNEL_TOL {
        return Err(Error::Contract(format!(
            "channel did not preserve trace: {trace_out}"
        )));
    }
    let herm = out.hermiticity_residual();
    if herm > CHANNEL_TOL {
        return Err(Error::Contract(format!(
            "channel output not Hermitian: residual {herm:.3e}"
        )));
    }
    Ok(out)
}

/// State after only the B-side averaged round.
pub fn intermediate_state(p: &ProtocolParams) -> Result<ComplexMatrix> {
    luders_average(&p.initial_state()?, &p.bob_round()?)
}

/// Final state after both rounds in protocol order (B first, then A).
pub fn bilateral_state(p: &ProtocolParams) -> Result<ComplexMatrix> {
    bilateral_state_ordered(p, MeasurementOrder::BobThenAlice)
}

/// Final state with an explicit round order.
pub fn bilateral_state_ordered(
    p: &ProtocolParams,
    order: MeasurementOrder,
) -> Result<ComplexMatrix> {
    let rho0 = p.initial_state()?;
    let (alice, bob) = (p.alice_round()?, p.bob_round()?);
    match order {
        MeasurementOrder::BobThenAlice => {
            luders_average(&luders_average(&rho0, &bob)?, &alice)
        }
        MeasurementOrder::AliceThenBob => {
            luders_average(&luders_average(&rho0, &alice)?, &bob)
        }
    }
}

/// Adjoint (Heisenberg-picture) action of a round on an observable: the same
/// Kraus sandwich, so that `Tr[Λ(ρ)·O] = Tr[ρ·Λ†(O)]` holds for every state.
/// Unital: the identity is a fixed point.
pub fn heisenberg_dual(
    observable: &ComplexMatrix,
    round: &MeasurementRound,
) -> Result<ComplexMatrix> {
    if !observable.is_square() {
        return Err(Error::Shape("observable must be square".into()));
    }
    let herm = observable.hermiticity_residual();
    if herm > 1e-12 {
        return Err(Error::Contract(format!(
            "observable not Hermitian: residual {herm:.3e}"
        )));
    }
    apply_round(observable, round)
}
