use serde::{Deserialize, Serialize};

use super::{CMatrix, CVector, DensityMatrix, Effect, C64, PSD_TOL};
use crate::error::{Error, Result};

/// Output port of the unbalanced interferometer. The two ports differ by a
/// π phase in the interference term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Port {
    Plus,
    Minus,
}

impl Port {
    pub const BOTH: [Port; 2] = [Port::Plus, Port::Minus];

    pub fn sign(self) -> f64 {
        match self {
            Port::Plus => 1.0,
            Port::Minus => -1.0,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Port::Plus => 0,
            Port::Minus => 1,
        }
    }
}

/// `½(|0⟩ ± e^{iθ}|1⟩)(⟨0| ± e^{-iθ}⟨1|)`, a rank-one projector.
pub fn interferometric_projector(theta: f64, port: Port) -> Effect {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let v = CVector::from_column_slice(&[
        C64::new(s, 0.0),
        C64::from_polar(port.sign() * s, theta),
    ]);
    Effect::from_matrix_unchecked(&v * v.adjoint())
}

/// Superposition-mode effect `¼·I + ½·P_±(θ)`.
pub fn mode1_povm(theta: f64, port: Port) -> Effect {
    let p = interferometric_projector(theta, port);
    let m = CMatrix::identity(2, 2) * C64::new(0.25, 0.0) + p.matrix() * C64::new(0.5, 0.0);
    Effect::from_matrix_unchecked(m)
}

/// `Tr[E ρ]`, clamped into `[0, 1]` after a tolerance check.
pub fn born_probability(rho: &DensityMatrix, effect: &Effect) -> Result<f64> {
    if rho.dim() != effect.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: effect.dim(),
        });
    }
    Ok(trace_product(effect.matrix(), rho.matrix()).clamp(0.0, 1.0))
}

/// Real part of `Tr[a b]` without forming the product.
pub(crate) fn trace_product(a: &CMatrix, b: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for k in 0..n {
            acc += (a[(i, k)] * b[(k, i)]).re;
        }
    }
    debug_assert!(acc > -1.0 - PSD_TOL);
    acc
}

/// Normalized two-photon coincidence fringe for `|Φ⁺⟩` measured with
/// `P(θ_A) ⊗ P(θ_B)`: `(1 ± cos(θ_A + θ_B))/2`, minus sign for opposite ports.
pub fn coincidence_rate_curve(theta_a: f64, theta_b: f64, port_a: Port, port_b: Port) -> f64 {
    let sign = port_a.sign() * port_b.sign();
    0.5 * (1.0 + sign * (theta_a + theta_b).cos())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{bell_phi_plus, max_abs_diff};
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

    #[test]
    fn projector_at_zero_is_plus_state() {
        let p = interferometric_projector(0.0, Port::Plus);
        for z in p.matrix().iter() {
            assert!((z - C64::new(0.5, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn projector_at_quarter_turn_is_right_circular() {
        let p = interferometric_projector(FRAC_PI_2, Port::Plus);
        let r = CVector::from_column_slice(&[
            C64::new(FRAC_1_SQRT_2, 0.0),
            C64::new(0.0, FRAC_1_SQRT_2),
        ]);
        assert!(max_abs_diff(p.matrix(), &(&r * r.adjoint())) < 1e-15);
        // idempotent
        assert!(max_abs_diff(&(p.matrix() * p.matrix()), p.matrix()) < 1e-15);
    }

    #[test]
    fn mode1_trace_and_diagonal_expectation() {
        for &theta in &[0.0, 0.3, 2.0, -1.1] {
            for port in Port::BOTH {
                assert!((mode1_povm(theta, port).matrix().trace().re - 1.0).abs() < 1e-14);
            }
        }
        let plus = CVector::from_column_slice(&[
            C64::new(FRAC_1_SQRT_2, 0.0),
            C64::new(FRAC_1_SQRT_2, 0.0),
        ]);
        let val = (plus.adjoint() * mode1_povm(0.0, Port::Plus).matrix() * &plus)[(0, 0)];
        assert!((val.re - 0.75).abs() < 1e-15);
    }

    #[test]
    fn born_on_phi_plus_matches_fringe() {
        let rho = bell_phi_plus().density();
        for &(ta, tb) in &[(0.0, 0.0), (0.4, -1.0), (PI, 0.3)] {
            let e = interferometric_projector(ta, Port::Plus)
                .tensor(&interferometric_projector(tb, Port::Plus));
            let p = born_probability(&rho, &e).unwrap();
            assert!((p - (1.0 + (ta + tb).cos()) / 4.0).abs() < 1e-14);
        }
    }

    #[test]
    fn born_identity_and_mixed() {
        let rho = bell_phi_plus().density();
        assert!((born_probability(&rho, &Effect::identity(4)).unwrap() - 1.0).abs() < 1e-14);
        let mixed = DensityMatrix::maximally_mixed(4);
        let e = interferometric_projector(0.7, Port::Minus)
            .tensor(&interferometric_projector(-0.2, Port::Plus));
        assert!((born_probability(&mixed, &e).unwrap() - 0.25).abs() < 1e-14);
    }

    #[test]
    fn born_dimension_mismatch() {
        let rho = bell_phi_plus().density();
        assert!(matches!(
            born_probability(&rho, &Effect::identity(2)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn fringe_curve_values() {
        assert_eq!(coincidence_rate_curve(0.0, 0.0, Port::Plus, Port::Plus), 1.0);
        assert!(coincidence_rate_curve(PI, 0.0, Port::Plus, Port::Plus).abs() < 1e-15);
        assert_eq!(coincidence_rate_curve(0.0, 0.0, Port::Plus, Port::Minus), 0.0);
    }
}
