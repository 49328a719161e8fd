//! Uniform-grid wave functions and the FFT quadrature transform.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::comb::Quadrature;
use crate::error::{Error, Result};

/// Complex amplitudes sampled on a uniform grid in one quadrature.
///
/// The L2 norm is the Riemann sum `sum_k |psi_k|^2 * dq`. Grid lengths are
/// powers of two so the quadrature transform is a plain FFT.
#[derive(Debug, Clone)]
pub struct GridState {
    axis: Quadrature,
    origin: f64,
    dq: f64,
    amps: Vec<Complex64>,
}

/// Default sampling for a comb protocol at lattice constant `alpha` and `n`
/// iterations: spacing `alpha/64` (so displacements by multiples of `alpha`
/// are exact cell shifts) and a symmetric power-of-two window covering
/// `[-alpha (2^n + 6), alpha (2^n + 6))`, at least 4096 cells.
pub fn default_grid_spec(alpha: f64, iterations: u32) -> (f64, f64, usize) {
    let dq = alpha / 64.0;
    let needed = 128 * (2usize.pow(iterations) + 6);
    let len = needed.next_power_of_two().max(4096);
    let origin = -(len as f64 / 2.0) * dq;
    (origin, dq, len)
}

impl GridState {
    pub fn new(axis: Quadrature, origin: f64, dq: f64, amps: Vec<Complex64>) -> Result<Self> {
        if !(dq > 0.0) || !dq.is_finite() {
            return Err(Error::Domain(format!("grid spacing must be positive, got {dq}")));
        }
        if !amps.len().is_power_of_two() || amps.len() < 2 {
            return Err(Error::Domain(format!(
                "grid length must be a power of two >= 2, got {}",
                amps.len()
            )));
        }
        Ok(GridState { axis, origin, dq, amps })
    }

    pub fn axis(&self) -> Quadrature {
        self.axis
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn spacing(&self) -> f64 {
        self.dq
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn coord(&self, k: usize) -> f64 {
        self.origin + k as f64 * self.dq
    }

    pub fn norm_squared(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.dq
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn normalize(&self) -> Result<Self> {
        let n = self.norm();
        if n <= 0.0 || !n.is_finite() {
            return Err(Error::Domain("cannot normalize a grid state with vanishing norm".into()));
        }
        let amps = self.amps.iter().map(|a| a / n).collect();
        Ok(GridState { axis: self.axis, origin: self.origin, dq: self.dq, amps })
    }

    /// True when the grid window is symmetric about the origin, which the
    /// quadrature transform requires.
    fn is_symmetric(&self) -> bool {
        (self.origin + self.len() as f64 / 2.0 * self.dq).abs() <= 1e-9 * self.dq * self.len() as f64
    }

    /// Displace along `axis`.
    ///
    /// Along the grid's own quadrature the shift must be a whole number of
    /// cells (no silent rounding); cells shifted past the window become zeros.
    /// Along the dual quadrature the displacement is a pointwise phase.
    pub fn displace(&self, amount: f64, axis: Quadrature) -> Result<Self> {
        if axis == self.axis {
            let cells = amount / self.dq;
            let rounded = cells.round();
            if (cells - rounded).abs() > 1e-9 {
                return Err(Error::MisalignedDisplacement { amount, dq: self.dq });
            }
            let s = rounded as i64;
            let len = self.len() as i64;
            let mut amps = vec![Complex64::new(0.0, 0.0); self.len()];
            for k in 0..len {
                let src = k - s;
                if (0..len).contains(&src) {
                    amps[k as usize] = self.amps[src as usize];
                }
            }
            Ok(GridState { axis: self.axis, origin: self.origin, dq: self.dq, amps })
        } else {
            // Position state, momentum kick b: multiply by exp(i b q).
            // Momentum state, position shift a: multiply by exp(-i a p).
            let sign = match self.axis {
                Quadrature::Position => 1.0,
                Quadrature::Momentum => -1.0,
            };
            let amps = self
                .amps
                .iter()
                .enumerate()
                .map(|(k, a)| a * Complex64::from_polar(1.0, sign * amount * self.coord(k)))
                .collect();
            Ok(GridState { axis: self.axis, origin: self.origin, dq: self.dq, amps })
        }
    }

    /// Transform to the dual quadrature.
    ///
    /// Uses the symmetric convention `psi~(p) = (2 pi)^{-1/2} integral psi(q)
    /// exp(-i p q) dq` for position -> momentum and its inverse for
    /// momentum -> position, so applying `fourier` twice returns the input.
    /// The output grid is the conjugate window: spacing `2 pi / (len * dq)`,
    /// symmetric about zero.
    pub fn fourier(&self) -> Result<Self> {
        if !self.is_symmetric() {
            return Err(Error::Domain(
                "quadrature transform requires a window symmetric about zero".into(),
            ));
        }
        let len = self.len();
        let dq = self.dq;
        let dp = 2.0 * std::f64::consts::PI / (len as f64 * dq);
        let out_origin = -(len as f64 / 2.0) * dp;
        let forward = self.axis == Quadrature::Position;
        let sign = if forward { -1.0 } else { 1.0 };

        // pre-twiddle: e^{sign * i * out_origin_dual... } — fold the grid
        // origins into phases around a plain FFT.
        let mut buf: Vec<Complex64> = self
            .amps
            .iter()
            .enumerate()
            .map(|(k, a)| a * Complex64::from_polar(1.0, sign * out_origin * k as f64 * dq))
            .collect();
        let mut planner = FftPlanner::new();
        let fft = if forward {
            planner.plan_fft_forward(len)
        } else {
            planner.plan_fft_inverse(len)
        };
        fft.process(&mut buf);
        let scale = dq / (2.0 * std::f64::consts::PI).sqrt();
        let amps = buf
            .into_iter()
            .enumerate()
            .map(|(j, v)| {
                let pj = out_origin + j as f64 * dp;
                v * scale * Complex64::from_polar(1.0, sign * pj * self.origin)
            })
            .collect();
        Ok(GridState { axis: self.axis.dual(), origin: out_origin, dq: dp, amps })
    }

    /// Second moment `<x^2>` of the (assumed normalised) density.
    pub fn second_moment(&self) -> f64 {
        self.amps
            .iter()
            .enumerate()
            .map(|(k, a)| {
                let x = self.coord(k);
                x * x * a.norm_sqr()
            })
            .sum::<f64>()
            * self.dq
    }

    /// Largest pointwise amplitude difference against another grid.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_same_layout(other)?;
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn check_same_layout(&self, other: &Self) -> Result<()> {
        if self.axis != other.axis {
            return Err(Error::GridMismatch("quadrature tags differ".into()));
        }
        if self.len() != other.len() {
            return Err(Error::GridMismatch(format!(
                "lengths differ: {} vs {}",
                self.len(),
                other.len()
            )));
        }
        let tol = 1e-12 * (1.0 + self.dq.abs());
        if (self.dq - other.dq).abs() > tol {
            return Err(Error::GridMismatch("spacings differ".into()));
        }
        if (self.origin - other.origin).abs() > 1e-9 * (1.0 + self.origin.abs()) {
            return Err(Error::GridMismatch("origins differ".into()));
        }
        Ok(())
    }

    /// Pointwise linear combination on a shared layout.
    pub fn linear_combination(a: &Self, ca: Complex64, b: &Self, cb: Complex64) -> Result<Self> {
        a.check_same_layout(b)?;
        let amps = a
            .amps
            .iter()
            .zip(&b.amps)
            .map(|(x, y)| ca * x + cb * y)
            .collect();
        Ok(GridState { axis: a.axis, origin: a.origin, dq: a.dq, amps })
    }

    /// Inner product `<self|other>` as a Riemann sum.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        self.check_same_layout(other)?;
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, b) in self.amps.iter().zip(&other.amps) {
            acc += a.conj() * b;
        }
        Ok(acc * self.dq)
    }
}
