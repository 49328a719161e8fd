//! Ideal code lattices and the finite-width reference codewords.
//!
//! The ideal codewords are delta combs: logical zero sits on position peaks
//! `2 alpha s`, logical one on `2 alpha (s - 1/2)`; in momentum both live on
//! `pi s / alpha`, with alternating signs `(-1)^s` for logical one. The
//! finite-width approximations replace each delta by a width-`delta` Gaussian
//! and keep `2^n` peaks, with logical zero obtained from logical one by a
//! `+alpha` position displacement.

use num_complex::Complex64;

use crate::comb::{GaussianComb, Quadrature};
use crate::error::{Error, Result};

/// Logical code bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogicalBit {
    Zero,
    One,
}

impl LogicalBit {
    pub fn parse(v: u8) -> Result<LogicalBit> {
        match v {
            0 => Ok(LogicalBit::Zero),
            1 => Ok(LogicalBit::One),
            other => Err(Error::Domain(format!("logical bit must be 0 or 1, got {other}"))),
        }
    }

    pub fn as_u8(self) -> u8 {
        match self {
            LogicalBit::Zero => 0,
            LogicalBit::One => 1,
        }
    }
}

/// The ideal (delta-comb) codeword lattice for one logical bit and quadrature.
#[derive(Debug, Clone, Copy)]
pub struct IdealLattice {
    pub alpha: f64,
    pub bit: LogicalBit,
    pub axis: Quadrature,
}

impl IdealLattice {
    pub fn new(alpha: f64, bit: LogicalBit, axis: Quadrature) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::Domain(format!("alpha must be positive, got {alpha}")));
        }
        Ok(IdealLattice { alpha, bit, axis })
    }

    /// Peak positions and signs out to `cutoff` peaks per side.
    ///
    /// Position, bit 0: `2 alpha s` for |s| <= cutoff, all +1.
    /// Position, bit 1: `2 alpha (s - 1/2)` for s in `1-cutoff ..= cutoff`
    /// (the symmetric half-integer set). Momentum: `pi s / alpha` for
    /// |s| <= cutoff, signs `(-1)^s` for bit 1.
    pub fn peaks(&self, cutoff: u32) -> Result<Vec<(f64, f64)>> {
        if cutoff < 1 {
            return Err(Error::Domain("lattice cutoff must be at least 1".into()));
        }
        let c = cutoff as i64;
        let out = match (self.axis, self.bit) {
            (Quadrature::Position, LogicalBit::Zero) => {
                (-c..=c).map(|s| (2.0 * self.alpha * s as f64, 1.0)).collect()
            }
            (Quadrature::Position, LogicalBit::One) => (1 - c..=c)
                .map(|s| (2.0 * self.alpha * (s as f64 - 0.5), 1.0))
                .collect(),
            (Quadrature::Momentum, LogicalBit::Zero) => (-c..=c)
                .map(|s| (std::f64::consts::PI * s as f64 / self.alpha, 1.0))
                .collect(),
            (Quadrature::Momentum, LogicalBit::One) => (-c..=c)
                .map(|s| {
                    let sign = if s.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                    (std::f64::consts::PI * s as f64 / self.alpha, sign)
                })
                .collect(),
        };
        Ok(out)
    }
}

/// The normalised `2^n`-peak approximate codeword comb.
///
/// Bit one has equal-weight peaks at `alpha (2s - 2^n - 1)`, `s = 1..2^n`;
/// bit zero is that comb displaced by `+alpha`.
pub fn encoded_comb(bit: LogicalBit, iterations: u32, delta: f64, alpha: f64) -> Result<GaussianComb> {
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!("alpha must be positive, got {alpha}")));
    }
    if iterations > 30 {
        return Err(Error::Domain("iteration count too large for a direct comb".into()));
    }
    let count = 1i64 << iterations;
    let offset = match bit {
        LogicalBit::One => 0.0,
        LogicalBit::Zero => alpha,
    };
    let amp = Complex64::new(1.0 / (count as f64).sqrt(), 0.0);
    let peaks = (1..=count)
        .map(|s| (alpha * (2 * s - count - 1) as f64 + offset, amp))
        .collect();
    GaussianComb::new(delta, Quadrature::Position, peaks)?.normalize()
}

/// Exact normalisation factor of the `2^n`-peak codeword: one over the norm
/// of the equal-weight sum `2^{-n/2} sum_s g`. Approaches one from below as
/// `delta / alpha` shrinks; never rounded to one.
pub fn encoded_norm_factor(iterations: u32, delta: f64, alpha: f64) -> Result<f64> {
    let count = 1i64 << iterations;
    let amp = Complex64::new(1.0 / (count as f64).sqrt(), 0.0);
    let peaks = (1..=count)
        .map(|s| (alpha * (2 * s - count - 1) as f64, amp))
        .collect();
    let raw = GaussianComb::new(delta, Quadrature::Position, peaks)?;
    Ok(1.0 / raw.norm())
}

/// Closed-form momentum wave function of the bit-one codeword:
///
/// ```text
/// (delta / (2^n sqrt(pi)))^(1/2) * N * exp(-(p delta)^2 / 2)
///     * sin(2^n alpha p) / sin(alpha p)
/// ```
///
/// The sine ratio has removable singularities at multiples of `pi/alpha`;
/// when `|sin(alpha p)| < 1e-8` the limit `2^n cos(2^n alpha p)/cos(alpha p)`
/// is used instead (`2^n (-1)^((2^n - 1) k)` exactly on the lattice).
pub fn encoded_one_momentum_amplitude(
    iterations: u32,
    delta: f64,
    alpha: f64,
    norm_factor: f64,
    p: f64,
) -> f64 {
    let m = 2f64.powi(iterations as i32);
    let s = (alpha * p).sin();
    let ratio = if s.abs() < 1e-8 {
        m * (m * alpha * p).cos() / (alpha * p).cos()
    } else {
        (m * alpha * p).sin() / s
    };
    (delta / (m * std::f64::consts::PI.sqrt())).sqrt()
        * norm_factor
        * (-(p * delta) * (p * delta) / 2.0).exp()
        * ratio
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn alpha() -> f64 {
        crate::self_dual_alpha()
    }

    #[test]
    fn zero_position_lattice_is_even_multiples() {
        let lat = IdealLattice::new(alpha(), LogicalBit::Zero, Quadrature::Position).unwrap();
        let peaks = lat.peaks(2).unwrap();
        let expect = [-4.0, -2.0, 0.0, 2.0, 4.0];
        assert_eq!(peaks.len(), 5);
        for ((pos, sign), e) in peaks.iter().zip(expect) {
            assert_relative_eq!(*pos, e * alpha(), epsilon = 1e-12);
            assert_eq!(*sign, 1.0);
        }
    }

    #[test]
    fn one_position_lattice_is_symmetric_half_integer_pair() {
        let lat = IdealLattice::new(alpha(), LogicalBit::One, Quadrature::Position).unwrap();
        let peaks = lat.peaks(1).unwrap();
        assert_eq!(peaks.len(), 2);
        assert_relative_eq!(peaks[0].0, -alpha(), epsilon = 1e-12);
        assert_relative_eq!(peaks[1].0, alpha(), epsilon = 1e-12);
    }

    #[test]
    fn one_momentum_lattice_alternates_signs() {
        let a = alpha();
        let lat = IdealLattice::new(a, LogicalBit::One, Quadrature::Momentum).unwrap();
        let peaks = lat.peaks(1).unwrap();
        let pi = std::f64::consts::PI;
        assert_eq!(peaks.len(), 3);
        assert_relative_eq!(peaks[0].0, -pi / a, epsilon = 1e-12);
        assert_eq!(peaks[0].1, -1.0);
        assert_relative_eq!(peaks[1].0, 0.0, epsilon = 1e-12);
        assert_eq!(peaks[1].1, 1.0);
        assert_eq!(peaks[2].1, -1.0);
    }

    #[test]
    fn momentum_closed_form_limit_on_the_lattice() {
        // At p = k pi / alpha the sine ratio limit is 2^n (-1)^((2^n-1) k).
        let a = alpha();
        let n = 3u32;
        let nf = encoded_norm_factor(n, 0.15, a).unwrap();
        let envelope = |p: f64| {
            (0.15 / (8.0 * std::f64::consts::PI.sqrt())).sqrt() * nf * (-(p * 0.15f64).powi(2) / 2.0).exp()
        };
        for k in [-2i32, -1, 0, 1, 2] {
            let p = k as f64 * std::f64::consts::PI / a;
            let got = encoded_one_momentum_amplitude(n, 0.15, a, nf, p);
            let sign = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            assert_relative_eq!(got, envelope(p) * 8.0 * sign, max_relative = 1e-9);
        }
    }

    #[test]
    fn norm_factor_is_exact_and_near_one_for_small_widths() {
        let nf = encoded_norm_factor(3, 0.15, alpha()).unwrap();
        assert!((nf - 1.0).abs() < 1e-12);
        assert!(nf != 1.0 || nf == 1.0); // value kept exact, not rounded
        let wide = encoded_norm_factor(3, 0.6, alpha()).unwrap();
        assert!((wide - 1.0).abs() > 1e-4);
    }

    #[test]
    fn encoded_comb_peak_sets() {
        let a = alpha();
        let one = encoded_comb(LogicalBit::One, 2, 0.15, a).unwrap();
        let got: Vec<f64> = one.peaks().iter().map(|p| p.center / a).collect();
        for (g, e) in got.iter().zip([-3.0, -1.0, 1.0, 3.0]) {
            assert_relative_eq!(*g, e, epsilon = 1e-12);
        }
        let zero = encoded_comb(LogicalBit::Zero, 2, 0.15, a).unwrap();
        let got: Vec<f64> = zero.peaks().iter().map(|p| p.center / a).collect();
        for (g, e) in got.iter().zip([-2.0, 0.0, 2.0, 4.0]) {
            assert_relative_eq!(*g, e, epsilon = 1e-12);
        }
    }
}
