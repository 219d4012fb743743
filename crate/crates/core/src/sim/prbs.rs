use serde::{Deserialize, Serialize};

use crate::device::ReceiverConfig;
use crate::error::{invalid, Error, Result};

/// Fibonacci shift register over a maximal-length polynomial:
/// `x⁷ + x⁶ + 1` for order 7 and `x⁹ + x⁵ + 1` for order 9.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrbsGenerator {
    order: u32,
    state: u32,
}

impl PrbsGenerator {
    pub fn new(order: u32, state: u32) -> Result<Self> {
        let g = Self { order, state };
        g.taps()?;
        if state & g.mask() == 0 {
            return Err(Error::ZeroRegisterState);
        }
        Ok(Self {
            order,
            state: state & g.mask(),
        })
    }

    fn taps(&self) -> Result<(u32, u32)> {
        match self.order {
            7 => Ok((7, 6)),
            9 => Ok((9, 5)),
            _ => Err(invalid("order", "supported PRBS orders are 7 and 9")),
        }
    }

    fn mask(&self) -> u32 {
        (1 << self.order) - 1
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn period(&self) -> usize {
        (1 << self.order) - 1
    }

    pub fn state(&self) -> u32 {
        self.state
    }

    /// Emits the register's top bit and shifts in the feedback bit.
    pub fn next_bit(&mut self) -> Result<u8> {
        if self.state == 0 {
            return Err(Error::ZeroRegisterState);
        }
        let (p, q) = self.taps()?;
        let out = (self.state >> (p - 1)) & 1;
        let feedback = out ^ ((self.state >> (q - 1)) & 1);
        self.state = ((self.state << 1) | feedback) & self.mask();
        Ok(out as u8)
    }

    /// One full period of the sequence.
    pub fn pattern(mut self) -> Vec<u8> {
        (0..self.period())
            .map(|_| self.next_bit().expect("validated register"))
            .collect()
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Repetition period of two interleaved sequences.
pub fn joint_period(a: usize, b: usize) -> u64 {
    let (a, b) = (a as u64, b as u64);
    a / gcd(a, b) * b
}

/// Drive voltage selecting the basis of an active receiver at `θ_TPS = π/4`:
/// bit 0 gives `-V_π/4` (θ = 0, X basis), bit 1 gives `+V_π/4` (θ = π/2,
/// Y basis).
pub fn basis_phase(bit: u8, receiver: &ReceiverConfig) -> f64 {
    let v = receiver.v_pi / 4.0;
    if bit == 0 {
        -v
    } else {
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::{theta_total, SwitchMode};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn period_of(mut g: PrbsGenerator) -> usize {
        let start = g.state();
        let mut n = 0;
        loop {
            g.next_bit().unwrap();
            n += 1;
            if g.state() == start {
                return n;
            }
        }
    }

    #[test]
    fn maximal_periods() {
        assert_eq!(period_of(PrbsGenerator::new(7, 1).unwrap()), 127);
        assert_eq!(period_of(PrbsGenerator::new(9, 1).unwrap()), 511);
        assert_eq!(period_of(PrbsGenerator::new(9, 0x155).unwrap()), 511);
    }

    #[test]
    fn balanced_ones() {
        let p = PrbsGenerator::new(7, 1).unwrap().pattern();
        assert_eq!(p.iter().filter(|&&b| b == 1).count(), 64);
    }

    #[test]
    fn zero_register_rejected() {
        assert!(matches!(
            PrbsGenerator::new(7, 0),
            Err(Error::ZeroRegisterState)
        ));
        assert!(PrbsGenerator::new(8, 1).is_err());
    }

    #[test]
    fn joint_pattern_period() {
        assert_eq!(joint_period(127, 511), 64_897);
        let a = PrbsGenerator::new(7, 1).unwrap().pattern();
        let b = PrbsGenerator::new(9, 1).unwrap().pattern();
        let joint = |n: usize| (a[n % 127], b[n % 511]);
        let n = 64_897;
        assert!((0..n).all(|k| joint(k) == joint(k + n)));
        // no shorter shift reproduces the joint pattern
        for d in [127, 511, 1] {
            assert!((0..n).any(|k| joint(k) != joint(k + d)));
        }
    }

    #[test]
    fn drive_toggles_basis() {
        let r = ReceiverConfig::ideal(SwitchMode::Overlap, FRAC_PI_4);
        let at = |bit| {
            let mut c = r.clone();
            c.drive_voltage = basis_phase(bit, &r);
            theta_total(&c)
        };
        assert!(at(0).abs() < 1e-15);
        assert!((at(1) - FRAC_PI_2).abs() < 1e-15);
        assert!((basis_phase(1, &r) - basis_phase(0, &r) - r.v_pi / 2.0).abs() < 1e-15);
    }
}
