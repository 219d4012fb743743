use serde::{Deserialize, Serialize};

use super::SiftedBlock;
use crate::error::{invalid, Result};
use crate::quantum::binary_entropy;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SecurityParams {
    pub eps_sec: f64,
    pub eps_cor: f64,
    /// Reconciliation inefficiency, at least 1.
    pub f_ec: f64,
}

impl Default for SecurityParams {
    fn default() -> Self {
        Self {
            eps_sec: 1e-10,
            eps_cor: 1e-10,
            f_ec: 1.16,
        }
    }
}

impl SecurityParams {
    pub fn validate(&self) -> Result<()> {
        for (name, eps) in [("eps_sec", self.eps_sec), ("eps_cor", self.eps_cor)] {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(invalid(name, "must lie in (0, 1)"));
            }
        }
        if !(self.f_ec >= 1.0) {
            return Err(invalid("f_ec", "must be at least 1"));
        }
        Ok(())
    }
}

/// Upper confidence bound on the phase-error rate of the key bits from the
/// error rate observed on the test bits.
pub trait PhaseErrorBound {
    fn name(&self) -> &'static str;
    fn upper_bound(&self, q_test: f64, n_key: u64, n_test: u64, eps_sec: f64) -> f64;
}

/// Sampling-without-replacement correction
/// `ν = √((n+k)(k+1)/(n·k²) · ln(2/ε))`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Serfling;

impl PhaseErrorBound for Serfling {
    fn name(&self) -> &'static str {
        "serfling"
    }

    fn upper_bound(&self, q_test: f64, n_key: u64, n_test: u64, eps_sec: f64) -> f64 {
        let (n, k) = (n_key as f64, n_test as f64);
        q_test + ((n + k) * (k + 1.0) / (n * k * k) * (2.0 / eps_sec).ln()).sqrt()
    }
}

/// Binomial-tail inversion: smallest `q ≥ Q` with `k·D(Q‖q) ≥ ln(1/ε)`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Chernoff;

/// Binary Kullback-Leibler divergence in nats.
pub fn binary_kl(p: f64, q: f64) -> f64 {
    let term = |a: f64, b: f64| if a == 0.0 { 0.0 } else { a * (a / b).ln() };
    term(p, q) + term(1.0 - p, 1.0 - q)
}

impl PhaseErrorBound for Chernoff {
    fn name(&self) -> &'static str {
        "chernoff"
    }

    fn upper_bound(&self, q_test: f64, _n_key: u64, n_test: u64, eps_sec: f64) -> f64 {
        let target = (1.0 / eps_sec).ln() / n_test as f64;
        let (mut lo, mut hi) = (q_test, 1.0);
        while hi - lo > 1e-10 {
            let mid = 0.5 * (lo + hi);
            if binary_kl(q_test, mid) >= target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KeyLength {
    pub bits: u64,
    pub phase_error_bound: f64,
    /// No key can be extracted from this block.
    pub aborted: bool,
}

/// `ℓ = ⌊n(1 - h(Q_U)) - f·n·h(Q_key) - log₂(2/(ε_sec²·ε_cor))⌋`, floored at 0.
pub fn key_length(
    bound: &dyn PhaseErrorBound,
    block: &SiftedBlock,
    params: &SecurityParams,
) -> Result<KeyLength> {
    params.validate()?;
    block.validate()?;
    if block.n_key == 0 || block.n_test == 0 {
        return Ok(KeyLength {
            bits: 0,
            phase_error_bound: 0.5,
            aborted: true,
        });
    }
    let n = block.n_key as f64;
    let q_u = bound.upper_bound(block.qber_test(), block.n_key, block.n_test, params.eps_sec);
    if q_u >= 0.5 {
        return Ok(KeyLength {
            bits: 0,
            phase_error_bound: q_u,
            aborted: true,
        });
    }
    let overhead = (2.0 / (params.eps_sec * params.eps_sec * params.eps_cor)).log2();
    let raw = n * (1.0 - binary_entropy(q_u)) - params.f_ec * n * binary_entropy(block.qber_key())
        - overhead;
    let bits = raw.floor().max(0.0) as u64;
    Ok(KeyLength {
        bits,
        phase_error_bound: q_u,
        aborted: bits == 0,
    })
}

pub fn serfling_key_length(block: &SiftedBlock, params: &SecurityParams) -> Result<KeyLength> {
    key_length(&Serfling, block, params)
}

pub fn chernoff_key_length(block: &SiftedBlock, params: &SecurityParams) -> Result<KeyLength> {
    key_length(&Chernoff, block, params)
}

/// `sifted_rate · max(0, 1 - h(Q_test) - f·h(Q_key))`. The sifting factor
/// enters through the sifted key rate.
pub fn asymptotic_rate(sifted_rate_hz: f64, q_key: f64, q_test: f64, f_ec: f64) -> f64 {
    sifted_rate_hz * (1.0 - binary_entropy(q_test) - f_ec * binary_entropy(q_key)).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qkd::Basis;
    use proptest::prelude::*;

    fn block(n_key: u64, n_test: u64, q_key: f64, q_test: f64) -> SiftedBlock {
        SiftedBlock::from_rates(n_key, n_test, q_key, q_test, Basis::Z, Basis::X, 1.0)
    }

    #[test]
    fn entropy_at_reference_qber() {
        // direct series evaluation
        let p: f64 = 0.0376;
        let h = -(p * p.ln() + (1.0 - p) * (1.0 - p).ln()) / 2f64.ln();
        assert!((binary_entropy(p) - h).abs() < 1e-15);
        assert!((binary_entropy(p) - 0.2312).abs() < 1e-4);
    }

    #[test]
    fn noiseless_asymptote() {
        let p = SecurityParams {
            f_ec: 1.0,
            ..SecurityParams::default()
        };
        let mut last = 0.0;
        for n in [1_000_000u64, 100_000_000, 10_000_000_000] {
            let l = serfling_key_length(&block(n, n, 0.0, 0.0), &p).unwrap();
            let frac = l.bits as f64 / n as f64;
            assert!(frac > last && frac <= 1.0, "{frac}");
            last = frac;
        }
        assert!(last > 0.998, "{last}");
    }

    #[test]
    fn chernoff_bound_properties() {
        let c = Chernoff;
        let small = c.upper_bound(0.03, 0, 1_000, 1e-10);
        let large = c.upper_bound(0.03, 0, 100_000_000, 1e-10);
        assert!(small > large && large >= 0.03);
        assert!(large - 0.03 < 1e-3);
        // inversion is tight: divergence at the bound meets the target
        let d = binary_kl(0.03, small) * 1_000.0;
        assert!((d - (1e10f64).ln()).abs() < 1e-5);
    }

    #[test]
    fn high_qber_aborts() {
        let l = chernoff_key_length(&block(100_000, 100_000, 0.02, 0.3), &SecurityParams::default())
            .unwrap();
        assert!(l.aborted);
        assert_eq!(l.bits, 0);
    }

    #[test]
    fn asymptotic_limits() {
        assert_eq!(asymptotic_rate(1000.0, 0.0, 0.0, 1.0), 1000.0);
        assert!(asymptotic_rate(1000.0, 0.02, 0.03, 1.16) > asymptotic_rate(1000.0, 0.02, 0.04, 1.16));
        assert!(asymptotic_rate(1000.0, 0.02, 0.03, 1.16) > asymptotic_rate(1000.0, 0.03, 0.03, 1.16));
    }

    #[test]
    fn bad_params_rejected() {
        let p = SecurityParams {
            f_ec: 0.9,
            ..SecurityParams::default()
        };
        assert!(serfling_key_length(&block(10, 10, 0.0, 0.0), &p).is_err());
    }

    proptest! {
        #[test]
        fn monotone_in_test_qber(q1 in 0.0f64..0.1, dq in 0.0f64..0.05, k in 1_000u64..10_000_000) {
            let p = SecurityParams::default();
            for bound in [&Serfling as &dyn PhaseErrorBound, &Chernoff] {
                let a = key_length(bound, &block(k, k, 0.02, q1), &p).unwrap().bits;
                let b = key_length(bound, &block(k, k, 0.02, q1 + dq), &p).unwrap().bits;
                prop_assert!(b <= a);
            }
        }

        #[test]
        fn monotone_in_eps(q in 0.0f64..0.08, k in 1_000u64..10_000_000, e in 1u32..15) {
            let loose = SecurityParams { eps_sec: 1e-3, ..SecurityParams::default() };
            let strict = SecurityParams { eps_sec: 10f64.powi(-(3 + e as i32)), ..SecurityParams::default() };
            for bound in [&Serfling as &dyn PhaseErrorBound, &Chernoff] {
                let a = key_length(bound, &block(k, k, 0.02, q), &loose).unwrap().bits;
                let b = key_length(bound, &block(k, k, 0.02, q), &strict).unwrap().bits;
                prop_assert!(b <= a);
            }
        }

        #[test]
        fn bound_ordering(q in 0.005f64..0.08, exp in 3.0f64..7.0) {
            let n = 10f64.powf(exp) as u64;
            let p = SecurityParams::default();
            let b = block(n, n, q, q);
            let s = serfling_key_length(&b, &p).unwrap().bits;
            let c = chernoff_key_length(&b, &p).unwrap().bits;
            let asym = asymptotic_rate(n as f64, b.qber_key(), b.qber_test(), p.f_ec);
            prop_assert!(c >= s);
            prop_assert!(c as f64 <= asym);
        }
    }
}
