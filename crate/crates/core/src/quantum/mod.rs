//! Exact linear algebra for time-bin qubits and biphotons.
//!
//! Basis ordering is fixed throughout the crate: `|0⟩` is the early bin,
//! `|1⟩` the late bin, and two-qubit states use `{|00⟩, |01⟩, |10⟩, |11⟩}`
//! with Alice as the left factor.

mod linalg;
mod measures;
mod povm;

pub use linalg::{hermitian_eigen, hermitian_sqrt, kron};
pub use measures::{
    binary_entropy, concurrence, entanglement_metrics, partial_trace, trace_distance,
    von_neumann_entropy, EntanglementMetrics, Subsystem,
};
pub(crate) use povm::trace_product;
pub use povm::{
    born_probability, coincidence_rate_curve, interferometric_projector, mode1_povm, Port,
};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub(crate) const NORM_TOL: f64 = 1e-12;
pub(crate) const HERMITIAN_TOL: f64 = 1e-12;
pub(crate) const PSD_TOL: f64 = 1e-10;

/// Amplitudes and relative phase of a single time-bin qubit
/// `α|0⟩ + β e^{iθ_S}|1⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeBinPreparation {
    pub alpha: f64,
    pub beta: f64,
    pub theta_s: f64,
}

impl TimeBinPreparation {
    pub fn new(alpha: f64, beta: f64, theta_s: f64) -> Result<Self> {
        let prep = Self {
            alpha,
            beta,
            theta_s,
        };
        prep.validate()?;
        Ok(prep)
    }

    /// Symmetric setting that yields `|Φ⁺⟩` when used for pair generation.
    pub fn balanced() -> Self {
        Self {
            alpha: std::f64::consts::FRAC_1_SQRT_2,
            beta: std::f64::consts::FRAC_1_SQRT_2,
            theta_s: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.beta >= 0.0) {
            return Err(invalid("alpha/beta", "amplitudes must be non-negative"));
        }
        if !self.theta_s.is_finite() {
            return Err(invalid("theta_s", "phase must be finite"));
        }
        let norm = self.alpha * self.alpha + self.beta * self.beta;
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(())
    }
}

/// Normalized state vector (dimension 2 or 4).
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amps: CVector,
}

impl PureState {
    pub fn new(amps: CVector) -> Result<Self> {
        let norm = amps.norm_squared();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self { amps })
    }

    pub fn from_slice(amps: &[C64]) -> Result<Self> {
        Self::new(CVector::from_column_slice(amps))
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amps
    }

    pub fn tensor(&self, other: &PureState) -> PureState {
        let mut out = CVector::zeros(self.dim() * other.dim());
        for (i, a) in self.amps.iter().enumerate() {
            for (j, b) in other.amps.iter().enumerate() {
                out[i * other.dim() + j] = a * b;
            }
        }
        PureState { amps: out }
    }

    /// `|⟨self|other⟩|²`.
    pub fn overlap(&self, other: &PureState) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(self.amps.dotc(&other.amps).norm_sqr())
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix {
            m: &self.amps * self.amps.adjoint(),
        }
    }
}

/// Builds `α|0⟩ + β e^{iθ_S}|1⟩`.
pub fn make_timebin_qubit(prep: &TimeBinPreparation) -> Result<PureState> {
    prep.validate()?;
    PureState::from_slice(&[
        C64::new(prep.alpha, 0.0),
        C64::from_polar(prep.beta, prep.theta_s),
    ])
}

/// `(|00⟩ + |11⟩)/√2`.
pub fn bell_phi_plus() -> PureState {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    PureState {
        amps: CVector::from_column_slice(&[
            C64::new(s, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(s, 0.0),
        ]),
    }
}

/// Hermitian, unit-trace, positive semi-definite matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    m: CMatrix,
}

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        let dev = hermitian_deviation(&m);
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > NORM_TOL || tr.im.abs() > NORM_TOL {
            return Err(Error::InvalidTrace(tr.re));
        }
        let (vals, _) = hermitian_eigen(&m);
        let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < -PSD_TOL {
            return Err(Error::NotPositive(min));
        }
        Ok(Self { m })
    }

    /// Hermitizes and trace-normalizes `m` without a positivity check.
    pub(crate) fn from_raw_normalized(m: CMatrix) -> Self {
        let h = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        let tr = h.trace().re;
        Self {
            m: h / C64::new(tr, 0.0),
        }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            m: CMatrix::identity(dim, dim) / C64::new(dim as f64, 0.0),
        }
    }

    /// `p|Φ⁺⟩⟨Φ⁺| + (1-p) I/4`.
    pub fn werner(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(invalid("p", "Werner weight must lie in [0, 1]"));
        }
        let bell = bell_phi_plus().density();
        let mixed = Self::maximally_mixed(4);
        Ok(Self {
            m: bell.m * C64::new(p, 0.0) + mixed.m * C64::new(1.0 - p, 0.0),
        })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn purity(&self) -> f64 {
        (&self.m * &self.m).trace().re
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix {
            m: kron(&self.m, &other.m),
        }
    }

    /// Projects onto the closest physical state by clipping negative eigenvalues.
    pub fn project_physical(m: &CMatrix) -> Self {
        let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
        let (vals, vecs) = hermitian_eigen(&h);
        let clipped: Vec<f64> = vals.iter().map(|v| v.max(0.0)).collect();
        let total: f64 = clipped.iter().sum();
        let n = h.nrows();
        let mut out = CMatrix::zeros(n, n);
        for (k, &lam) in clipped.iter().enumerate() {
            if lam == 0.0 {
                continue;
            }
            let v = vecs.column(k);
            out += (v * v.adjoint()) * C64::new(lam / total, 0.0);
        }
        Self { m: out }
    }
}

/// Positive operator bounded by the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct Effect {
    m: CMatrix,
}

impl Effect {
    pub fn new(m: CMatrix) -> Result<Self> {
        let dev = hermitian_deviation(&m);
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let (vals, _) = hermitian_eigen(&m);
        let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if min < -PSD_TOL {
            return Err(Error::NotPositive(min));
        }
        if max > 1.0 + PSD_TOL {
            return Err(Error::EffectAboveIdentity(max));
        }
        Ok(Self { m })
    }

    pub(crate) fn from_matrix_unchecked(m: CMatrix) -> Self {
        Self { m }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            m: CMatrix::identity(dim, dim),
        }
    }

    /// `|k⟩⟨k|` scaled by `weight`.
    pub fn basis_projector(dim: usize, k: usize, weight: f64) -> Self {
        let mut m = CMatrix::zeros(dim, dim);
        m[(k, k)] = C64::new(weight, 0.0);
        Self { m }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn tensor(&self, other: &Effect) -> Effect {
        Effect {
            m: kron(&self.m, &other.m),
        }
    }

    pub fn scaled(&self, factor: f64) -> Effect {
        Effect {
            m: &self.m * C64::new(factor, 0.0),
        }
    }

    pub fn sum<'a>(effects: impl IntoIterator<Item = &'a Effect>, dim: usize) -> CMatrix {
        effects
            .into_iter()
            .fold(CMatrix::zeros(dim, dim), |acc, e| acc + &e.m)
    }
}

pub(crate) fn hermitian_deviation(m: &CMatrix) -> f64 {
    let diff = m - m.adjoint();
    diff.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest entry-wise modulus of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

    #[test]
    fn balanced_qubit_is_plus_state() {
        let q = make_timebin_qubit(&TimeBinPreparation::balanced()).unwrap();
        assert!((q.amplitudes()[0].re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((q.amplitudes()[1].re - FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn pole_state_ignores_phase() {
        let q = make_timebin_qubit(&TimeBinPreparation::new(1.0, 0.0, 1.234).unwrap()).unwrap();
        assert_eq!(q.amplitudes()[0], C64::new(1.0, 0.0));
        assert!(q.amplitudes()[1].norm() < 1e-15);
    }

    #[test]
    fn direct_substitution() {
        let q = make_timebin_qubit(&TimeBinPreparation::new(0.6, 0.8, FRAC_PI_2).unwrap()).unwrap();
        assert!((q.amplitudes()[0] - C64::new(0.6, 0.0)).norm() < 1e-15);
        assert!((q.amplitudes()[1] - C64::new(0.0, 0.8)).norm() < 1e-15);
    }

    #[test]
    fn unnormalized_preparation_rejected() {
        assert!(matches!(
            TimeBinPreparation::new(0.6, 0.6, 0.0),
            Err(Error::NotNormalized(_))
        ));
        assert!(TimeBinPreparation::new(-0.6, 0.8, 0.0).is_err());
    }

    #[test]
    fn phi_plus_amplitudes_and_self_fidelity() {
        let b = bell_phi_plus();
        let a = b.amplitudes();
        assert!((a[0].re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(a[1].norm() < 1e-15 && a[2].norm() < 1e-15);
        assert!((a[3].re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((a.norm() - 1.0).abs() < 1e-15);
        assert!((b.overlap(&b).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn density_validation_rejects_negative_state() {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 0)] = C64::new(1.5, 0.0);
        m[(1, 1)] = C64::new(-0.5, 0.0);
        assert!(matches!(DensityMatrix::new(m), Err(Error::NotPositive(_))));
    }

    #[test]
    fn effect_validation_rejects_above_identity() {
        let m = CMatrix::identity(2, 2) * C64::new(1.1, 0.0);
        assert!(matches!(
            Effect::new(m),
            Err(Error::EffectAboveIdentity(_))
        ));
    }

    #[test]
    fn werner_state_is_valid() {
        let w = DensityMatrix::werner(0.9).unwrap();
        DensityMatrix::new(w.matrix().clone()).unwrap();
        assert!(DensityMatrix::werner(1.5).is_err());
    }
}
