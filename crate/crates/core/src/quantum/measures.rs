use serde::Serialize;

use super::{bell_phi_plus, hermitian_eigen, hermitian_sqrt, CMatrix, DensityMatrix, C64, PSD_TOL};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

/// Reduced two-level state of one half of a two-qubit density matrix.
pub fn partial_trace(rho: &DensityMatrix, keep: Subsystem) -> Result<DensityMatrix> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: rho.dim(),
        });
    }
    let m = rho.matrix();
    let mut out = CMatrix::zeros(2, 2);
    for i in 0..2 {
        for j in 0..2 {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..2 {
                acc += match keep {
                    Subsystem::A => m[(2 * i + k, 2 * j + k)],
                    Subsystem::B => m[(2 * k + i, 2 * k + j)],
                };
            }
            out[(i, j)] = acc;
        }
    }
    Ok(DensityMatrix { m: out })
}

/// `-p log₂ p - (1-p) log₂(1-p)` with both endpoints mapped to zero.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

fn checked_spectrum(rho: &DensityMatrix) -> Result<Vec<f64>> {
    let (vals, _) = hermitian_eigen(rho.matrix());
    let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < -PSD_TOL {
        return Err(Error::NotPositive(min));
    }
    Ok(vals.into_iter().map(|v| v.max(0.0)).collect())
}

/// Von Neumann entropy in bits.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    Ok(checked_spectrum(rho)?
        .into_iter()
        .filter(|&v| v > 0.0)
        .map(|v| -v * v.log2())
        .sum())
}

/// Wootters concurrence via the Hermitian form `√(√ρ ρ̃ √ρ)`.
pub fn concurrence(rho: &DensityMatrix) -> Result<f64> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: rho.dim(),
        });
    }
    checked_spectrum(rho)?;
    let flipped = spin_flip(rho.matrix());
    let root = hermitian_sqrt(rho.matrix());
    let inner = &root * flipped * &root;
    let inner = (&inner + inner.adjoint()) * C64::new(0.5, 0.0);
    let (vals, _) = hermitian_eigen(&inner);
    let mut lambdas: Vec<f64> = vals.iter().map(|v| v.max(0.0).sqrt()).collect();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    Ok((lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).max(0.0))
}

/// `(σ_y ⊗ σ_y) ρ* (σ_y ⊗ σ_y)`.
pub(crate) fn spin_flip(m: &CMatrix) -> CMatrix {
    // σ_y⊗σ_y is real with anti-diagonal (-1, 1, 1, -1)
    let sign = [-1.0, 1.0, 1.0, -1.0];
    let mut out = CMatrix::zeros(4, 4);
    for i in 0..4 {
        for j in 0..4 {
            out[(i, j)] = m[(3 - i, 3 - j)].conj() * (sign[i] * sign[j]);
        }
    }
    out
}

/// `½ Σ|λ_k(a - b)|`.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let (vals, _) = hermitian_eigen(&(a.matrix() - b.matrix()));
    Ok(0.5 * vals.iter().map(|v| v.abs()).sum::<f64>())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EntanglementMetrics {
    pub purity: f64,
    pub fidelity_to_phi_plus: f64,
    pub entanglement_of_formation: f64,
    pub entropy_a: f64,
    pub entropy_b: f64,
    pub concurrence: f64,
}

pub fn entanglement_metrics(rho: &DensityMatrix) -> Result<EntanglementMetrics> {
    checked_spectrum(rho)?;
    let bell = bell_phi_plus();
    let fidelity = (bell.amplitudes().adjoint() * rho.matrix() * bell.amplitudes())[(0, 0)].re;
    let c = concurrence(rho)?;
    let eof = binary_entropy(0.5 * (1.0 + (1.0 - c * c).max(0.0).sqrt()));
    Ok(EntanglementMetrics {
        purity: rho.purity().clamp(0.0, 1.0),
        fidelity_to_phi_plus: fidelity.clamp(0.0, 1.0),
        entanglement_of_formation: eof,
        entropy_a: von_neumann_entropy(&partial_trace(rho, Subsystem::A)?)?,
        entropy_b: von_neumann_entropy(&partial_trace(rho, Subsystem::B)?)?,
        concurrence: c,
    })
}
