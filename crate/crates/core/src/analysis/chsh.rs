use std::f64::consts::FRAC_PI_4;

use serde::Serialize;

use crate::error::{Error, Result};

/// Alice's two analyzer phases.
pub const CHSH_THETA_A: [f64; 2] = [FRAC_PI_4, -FRAC_PI_4];
/// Bob's two analyzer phases.
pub const CHSH_THETA_B: [f64; 2] = [0.0, std::f64::consts::FRAC_PI_2];

/// Coincidences of one setting, `counts[port_a][port_b]` with port 0 = plus.
pub type SettingCounts = [[u64; 2]; 2];

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChshResult {
    pub s: f64,
    pub sigma_s: f64,
    /// Correlators in setting order `(a1b1, a1b2, a2b1, a2b2)`.
    pub correlators: [f64; 4],
}

/// `E = (N_same - N_cross) / (N_same + N_cross)` and its binomial variance.
pub fn correlator(c: &SettingCounts) -> Option<(f64, f64)> {
    let same = (c[0][0] + c[1][1]) as f64;
    let cross = (c[0][1] + c[1][0]) as f64;
    let n = same + cross;
    if n == 0.0 {
        return None;
    }
    let e = (same - cross) / n;
    Some((e, (1.0 - e * e) / n))
}

/// `S = |E₁₁ - E₁₂ + E₂₁ + E₂₂|` for settings ordered
/// `(θA₁θB₁, θA₁θB₂, θA₂θB₁, θA₂θB₂)` over [`CHSH_THETA_A`] × [`CHSH_THETA_B`].
pub fn chsh_s(settings: &[SettingCounts; 4]) -> Result<ChshResult> {
    let mut correlators = [0.0; 4];
    let mut var = 0.0;
    for (k, c) in settings.iter().enumerate() {
        let (e, v) = correlator(c).ok_or_else(|| Error::EmptySetting(format!("#{}", k + 1)))?;
        correlators[k] = e;
        var += v;
    }
    let [e11, e12, e21, e22] = correlators;
    Ok(ChshResult {
        s: (e11 - e12 + e21 + e22).abs(),
        sigma_s: var.sqrt(),
        correlators,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{coincidence_rate_curve, Port};
    use std::f64::consts::SQRT_2;

    /// Expected counts from the fringe formula scaled by visibility.
    fn analytic(v: f64, n: f64) -> [SettingCounts; 4] {
        let mut out = [[[0u64; 2]; 2]; 4];
        let mut k = 0;
        for ta in CHSH_THETA_A {
            for tb in CHSH_THETA_B {
                for pa in Port::BOTH {
                    for pb in Port::BOTH {
                        let ideal = coincidence_rate_curve(ta, tb, pa, pb);
                        let p = 0.5 * (v * ideal + (1.0 - v) * 0.5);
                        out[k][pa.index()][pb.index()] = (n * p).round() as u64;
                    }
                }
                k += 1;
            }
        }
        out
    }

    #[test]
    fn tsirelson_point() {
        let r = chsh_s(&analytic(1.0, 1e12)).unwrap();
        assert!((r.s - 2.0 * SQRT_2).abs() < 1e-6);
    }

    #[test]
    fn visibility_scales_s() {
        let r = chsh_s(&analytic(0.935, 1e12)).unwrap();
        assert!((r.s - 2.0 * SQRT_2 * 0.935).abs() < 1e-6);
    }

    #[test]
    fn scale_invariant() {
        let base = analytic(0.8, 1e4);
        let mut scaled = base;
        for s in &mut scaled {
            for row in s.iter_mut() {
                for c in row.iter_mut() {
                    *c *= 7;
                }
            }
        }
        assert!((chsh_s(&base).unwrap().s - chsh_s(&scaled).unwrap().s).abs() < 1e-12);
    }

    #[test]
    fn empty_setting_rejected() {
        let mut c = analytic(1.0, 1e4);
        c[2] = [[0, 0], [0, 0]];
        assert!(matches!(chsh_s(&c), Err(Error::EmptySetting(_))));
    }
}
