//! Analytic Gaussian-comb states.
//!
//! A [`GaussianComb`] is a finite superposition of equal-width Gaussian peaks
//! in a single quadrature,
//!
//! ```text
//! psi(x) = sum_j c_j * g(x - mu_j, width),   g(x, w) = exp(-x^2 / (2 w^2)) / sqrt(w * sqrt(pi))
//! ```
//!
//! with `g` normalised so that the integral of `g^2` is one. Overlaps between
//! two combs of equal width have the closed form
//! `sum_jk conj(c_j) c_k exp(-(mu_j - mu_k)^2 / (4 w^2))`, which keeps every
//! protocol operation exact: no grid is involved until a caller asks for one.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::GridState;
use crate::par;

/// Which canonical quadrature a state is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quadrature {
    Position,
    Momentum,
}

impl Quadrature {
    pub fn dual(self) -> Quadrature {
        match self {
            Quadrature::Position => Quadrature::Momentum,
            Quadrature::Momentum => Quadrature::Position,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Quadrature::Position => "position",
            Quadrature::Momentum => "momentum",
        }
    }

    pub fn parse(s: &str) -> Result<Quadrature> {
        match s {
            "position" | "q" => Ok(Quadrature::Position),
            "momentum" | "p" => Ok(Quadrature::Momentum),
            other => Err(Error::Domain(format!("unknown quadrature `{other}`"))),
        }
    }
}

/// Coefficients below this magnitude are pruned from peak lists.
pub const COEFF_PRUNE_THRESHOLD: f64 = 1e-300;

/// Two peak centers closer than this (relative) are treated as the same peak
/// when combs are added.
const CENTER_MERGE_TOLERANCE: f64 = 1e-9;

/// Unit-norm Gaussian amplitude profile `g(x, w)`.
pub fn gaussian_amplitude(x: f64, width: f64) -> f64 {
    (-x * x / (2.0 * width * width)).exp() / (width * std::f64::consts::PI.sqrt()).sqrt()
}

/// One Gaussian peak of a comb: its center and complex coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub center: f64,
    pub coeff: Complex64,
}

/// A superposition of equal-width Gaussian peaks in one quadrature.
///
/// Invariants maintained by every constructor and operation: the width is
/// positive, the peak list is non-empty with strictly increasing centers, and
/// coefficients with magnitude below [`COEFF_PRUNE_THRESHOLD`] are pruned.
#[derive(Debug, Clone)]
pub struct GaussianComb {
    width: f64,
    axis: Quadrature,
    peaks: Vec<Peak>,
    norm_cache: Option<f64>,
}

impl GaussianComb {
    pub fn new(width: f64, axis: Quadrature, peaks: Vec<(f64, Complex64)>) -> Result<Self> {
        if !(width > 0.0) || !width.is_finite() {
            return Err(Error::Domain(format!("comb width must be positive, got {width}")));
        }
        let mut kept = Vec::with_capacity(peaks.len());
        for (center, coeff) in peaks {
            if !center.is_finite() {
                return Err(Error::Domain("peak center must be finite".into()));
            }
            if coeff.norm() >= COEFF_PRUNE_THRESHOLD {
                kept.push(Peak { center, coeff });
            }
        }
        if kept.is_empty() {
            return Err(Error::Domain("comb must have at least one peak above the prune threshold".into()));
        }
        for pair in kept.windows(2) {
            if !(pair[0].center < pair[1].center) {
                return Err(Error::Domain(format!(
                    "peak centers must be strictly increasing ({} then {})",
                    pair[0].center, pair[1].center
                )));
            }
        }
        Ok(GaussianComb { width, axis, peaks: kept, norm_cache: None })
    }

    /// Squeezed vacuum in the position quadrature: a single normalised peak at
    /// the origin. `width = 1` is the oscillator ground state.
    pub fn squeezed_vacuum(width: f64) -> Result<Self> {
        Self::squeezed_vacuum_on(Quadrature::Position, width)
    }

    /// Squeezed vacuum expressed as a single peak in the given quadrature.
    pub fn squeezed_vacuum_on(axis: Quadrature, width: f64) -> Result<Self> {
        let comb = Self::new(width, axis, vec![(0.0, Complex64::new(1.0, 0.0))])?;
        Ok(GaussianComb { norm_cache: Some(1.0), ..comb })
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn axis(&self) -> Quadrature {
        self.axis
    }

    pub fn peaks(&self) -> &[Peak] {
        &self.peaks
    }

    pub fn min_center(&self) -> f64 {
        self.peaks[0].center
    }

    pub fn max_center(&self) -> f64 {
        self.peaks[self.peaks.len() - 1].center
    }

    /// Displace the state along `axis`.
    ///
    /// Along the comb's own quadrature this shifts every center by `amount`
    /// exactly. A displacement along the dual quadrature would attach a linear
    /// phase to each peak, which this representation cannot hold; convert to a
    /// [`GridState`] for that.
    pub fn displace(&self, amount: f64, axis: Quadrature) -> Result<Self> {
        if amount == 0.0 {
            return Ok(self.clone());
        }
        if axis != self.axis {
            return Err(Error::Domain(format!(
                "cannot displace a {} comb along {}; use a grid state",
                self.axis.label(),
                axis.label()
            )));
        }
        let peaks = self
            .peaks
            .iter()
            .map(|p| Peak { center: p.center + amount, coeff: p.coeff })
            .collect();
        Ok(GaussianComb { width: self.width, axis: self.axis, peaks, norm_cache: self.norm_cache })
    }

    /// `<self|other>` by the closed-form Gaussian product integral.
    ///
    /// The accumulation order is fixed by a canonical comparison of the two
    /// combs so that `overlap(a, b) == conj(overlap(b, a))` holds bitwise.
    pub fn overlap(&self, other: &Self) -> Result<Complex64> {
        if self.width != other.width {
            return Err(Error::Domain(format!(
                "overlap requires equal widths ({} vs {})",
                self.width, other.width
            )));
        }
        if self.axis != other.axis {
            return Err(Error::Domain("overlap requires matching quadrature tags".into()));
        }
        if canonical_le(self, other) {
            Ok(raw_overlap(self, other))
        } else {
            Ok(raw_overlap(other, self).conj())
        }
    }

    pub fn norm_squared(&self) -> f64 {
        if let Some(n) = self.norm_cache {
            return n * n;
        }
        raw_overlap(self, self).re.max(0.0)
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// Rescale to unit norm.
    pub fn normalize(&self) -> Result<Self> {
        let n = self.norm();
        if n < COEFF_PRUNE_THRESHOLD {
            return Err(Error::Domain("cannot normalize a comb with vanishing norm".into()));
        }
        let peaks = self.peaks.iter().map(|p| Peak { center: p.center, coeff: p.coeff / n }).collect();
        Ok(GaussianComb { width: self.width, axis: self.axis, peaks, norm_cache: Some(1.0) })
    }

    pub fn scaled(&self, factor: Complex64) -> Result<Self> {
        Self::new(
            self.width,
            self.axis,
            self.peaks.iter().map(|p| (p.center, p.coeff * factor)).collect(),
        )
    }

    /// `ca * a + cb * b` with coincident centers merged. Returns `None` when
    /// every coefficient cancels below the prune threshold.
    pub(crate) fn combine(
        a: &Self,
        ca: Complex64,
        b: &Self,
        cb: Complex64,
    ) -> Result<Option<Self>> {
        if a.width != b.width {
            return Err(Error::Domain("cannot combine combs of different widths".into()));
        }
        if a.axis != b.axis {
            return Err(Error::Domain("cannot combine combs on different quadratures".into()));
        }
        let mut peaks: Vec<Peak> = Vec::with_capacity(a.peaks.len() + b.peaks.len());
        let (mut i, mut j) = (0, 0);
        while i < a.peaks.len() || j < b.peaks.len() {
            let take_a = match (a.peaks.get(i), b.peaks.get(j)) {
                (Some(pa), Some(pb)) => {
                    let tol = CENTER_MERGE_TOLERANCE * (1.0 + pa.center.abs().max(pb.center.abs()));
                    if (pa.center - pb.center).abs() <= tol {
                        peaks.push(Peak { center: pa.center, coeff: ca * pa.coeff + cb * pb.coeff });
                        i += 1;
                        j += 1;
                        continue;
                    }
                    pa.center < pb.center
                }
                (Some(_), None) => true,
                (None, Some(_)) => false,
                (None, None) => break,
            };
            if take_a {
                peaks.push(Peak { center: a.peaks[i].center, coeff: ca * a.peaks[i].coeff });
                i += 1;
            } else {
                peaks.push(Peak { center: b.peaks[j].center, coeff: cb * b.peaks[j].coeff });
                j += 1;
            }
        }
        peaks.retain(|p| p.coeff.norm() >= COEFF_PRUNE_THRESHOLD);
        if peaks.is_empty() {
            return Ok(None);
        }
        Ok(Some(GaussianComb { width: a.width, axis: a.axis, peaks, norm_cache: None }))
    }

    /// `ca * a + cb * b`, erroring if the combination vanishes identically.
    pub fn linear_combination(a: &Self, ca: Complex64, b: &Self, cb: Complex64) -> Result<Self> {
        Self::combine(a, ca, b, cb)?
            .ok_or_else(|| Error::Domain("linear combination cancelled to zero".into()))
    }

    /// Rotate the global phase so the leftmost peak coefficient is positive real.
    pub fn canonical_phase(&self) -> Self {
        let c0 = self.peaks[0].coeff;
        let mag = c0.norm();
        if mag < COEFF_PRUNE_THRESHOLD {
            return self.clone();
        }
        let rot = c0.conj() / mag;
        let peaks = self.peaks.iter().map(|p| Peak { center: p.center, coeff: p.coeff * rot }).collect();
        GaussianComb { width: self.width, axis: self.axis, peaks, norm_cache: self.norm_cache }
    }

    /// Wave-function amplitude at `x`, in the comb's own quadrature or its dual.
    ///
    /// The dual is the analytic Fourier transform of the Gaussian sum: each
    /// peak contributes `c_j exp(-+ i x mu_j) g(x, 1/width)`, with the sign
    /// fixed by the `(2 pi)^{-1/2} exp(-i p q)` forward convention.
    pub fn eval(&self, x: f64, axis: Quadrature) -> Complex64 {
        if axis == self.axis {
            let mut acc = Complex64::new(0.0, 0.0);
            for p in &self.peaks {
                acc += p.coeff * gaussian_amplitude(x - p.center, self.width);
            }
            acc
        } else {
            // Forward transform for a position comb, inverse for a momentum comb.
            let sign = match self.axis {
                Quadrature::Position => -1.0,
                Quadrature::Momentum => 1.0,
            };
            let envelope = gaussian_amplitude(x, 1.0 / self.width);
            let mut acc = Complex64::new(0.0, 0.0);
            for p in &self.peaks {
                acc += p.coeff * Complex64::from_polar(1.0, sign * x * p.center);
            }
            acc * envelope
        }
    }

    /// Sample the comb onto a uniform grid in its own quadrature.
    ///
    /// The window must extend at least eight widths beyond the extreme peak
    /// centers; otherwise a truncation error reports the estimated lost mass.
    pub fn to_grid(&self, origin: f64, dq: f64, len: usize) -> Result<GridState> {
        if !(dq > 0.0) {
            return Err(Error::Domain(format!("grid spacing must be positive, got {dq}")));
        }
        if !len.is_power_of_two() || len < 2 {
            return Err(Error::Domain(format!("grid length must be a power of two >= 2, got {len}")));
        }
        let upper = origin + len as f64 * dq;
        let margin = 8.0 * self.width;
        if self.min_center() - margin < origin || self.max_center() + margin > upper {
            return Err(Error::Truncation { lost_mass: self.mass_outside(origin, upper) });
        }
        let amps = par::map_indexed(len, |k| self.eval(origin + k as f64 * dq, self.axis));
        GridState::new(self.axis, origin, dq, amps)
    }

    /// Crude upper estimate of the squared-norm mass outside `[lo, hi)`,
    /// used only to report truncation errors.
    fn mass_outside(&self, lo: f64, hi: f64) -> f64 {
        let mut lost = 0.0;
        for p in &self.peaks {
            let w = p.coeff.norm_sqr();
            if p.center < lo || p.center > hi {
                lost += w;
                continue;
            }
            for dist in [p.center - lo, hi - p.center] {
                let x = dist / self.width;
                if x < 30.0 {
                    // one-sided Gaussian-density tail, asymptotic form
                    lost += w * (-x * x).exp() / (x.max(0.5) * std::f64::consts::PI.sqrt());
                }
            }
        }
        lost
    }

    /// L2 distance `|| self - other ||` via closed-form overlaps.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        let cross = self.overlap(other)?;
        let d2 = self.norm_squared() + other.norm_squared() - 2.0 * cross.re;
        Ok(d2.max(0.0).sqrt())
    }
}

/// Overlap terms vanish in f64 once the center gap exceeds this many widths,
/// so the inner accumulation loop can stop early on the sorted peak list.
const OVERLAP_WINDOW_WIDTHS: f64 = 78.0;

fn raw_overlap(a: &GaussianComb, b: &GaussianComb) -> Complex64 {
    let w = a.width;
    let window = OVERLAP_WINDOW_WIDTHS * w;
    let inv = 1.0 / (4.0 * w * w);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut k_start = 0;
    for pa in &a.peaks {
        while k_start < b.peaks.len() && b.peaks[k_start].center < pa.center - window {
            k_start += 1;
        }
        for pb in &b.peaks[k_start..] {
            let d = pa.center - pb.center;
            if d > window {
                continue;
            }
            if d < -window {
                break;
            }
            acc += pa.coeff.conj() * pb.coeff * (-d * d * inv).exp();
        }
    }
    acc
}

/// Total order on combs used to pick a canonical evaluation order for
/// [`GaussianComb::overlap`].
fn canonical_le(a: &GaussianComb, b: &GaussianComb) -> bool {
    use std::cmp::Ordering;
    match a.peaks.len().cmp(&b.peaks.len()) {
        Ordering::Less => return true,
        Ordering::Greater => return false,
        Ordering::Equal => {}
    }
    for (pa, pb) in a.peaks.iter().zip(&b.peaks) {
        for (x, y) in [
            (pa.center, pb.center),
            (pa.coeff.re, pb.coeff.re),
            (pa.coeff.im, pb.coeff.im),
        ] {
            match x.total_cmp(&y) {
                Ordering::Less => return true,
                Ordering::Greater => return false,
                Ordering::Equal => {}
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::integrate;
    use crate::lattice::{encoded_comb, LogicalBit};
    use approx::assert_relative_eq;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn alpha() -> f64 {
        crate::self_dual_alpha()
    }

    #[test]
    fn squeezed_vacuum_is_ground_state_profile_at_unit_width() {
        let s = GaussianComb::squeezed_vacuum(1.0).unwrap();
        // <q|s> = pi^(-1/4) exp(-q^2/2)
        let expect = std::f64::consts::PI.powf(-0.25);
        assert_relative_eq!(s.eval(0.0, Quadrature::Position).re, expect, max_relative = 1e-14);
        assert_relative_eq!(
            s.eval(1.3, Quadrature::Position).re,
            expect * (-1.3_f64 * 1.3 / 2.0).exp(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn squeezed_vacuum_peak_value() {
        let s = GaussianComb::squeezed_vacuum(0.15).unwrap();
        let expect = 1.0 / (0.15 * std::f64::consts::PI.sqrt()).sqrt();
        assert_relative_eq!(s.eval(0.0, Quadrature::Position).re, expect, max_relative = 1e-14);
    }

    #[test]
    fn squeezed_vacuum_unit_mass_by_quadrature() {
        let s = GaussianComb::squeezed_vacuum(0.15).unwrap();
        let mass = integrate(|q| s.eval(q, Quadrature::Position).norm_sqr(), -4.0, 4.0, 1e-13);
        assert_relative_eq!(mass, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn squeezed_vacuum_rejects_nonpositive_width() {
        assert!(GaussianComb::squeezed_vacuum(0.0).is_err());
        assert!(GaussianComb::squeezed_vacuum(-0.1).is_err());
    }

    #[test]
    fn displace_shifts_one_comb_onto_zero_comb() {
        // Displacing the bit-1 comb by +alpha lands on the bit-0 peak set.
        let a = alpha();
        let one = encoded_comb(LogicalBit::One, 3, 0.15, a).unwrap();
        let zero = encoded_comb(LogicalBit::Zero, 3, 0.15, a).unwrap();
        let moved = one.displace(a, Quadrature::Position).unwrap();
        assert!(moved.distance(&zero).unwrap() < 1e-12);
        for (p, s) in moved.peaks().iter().zip(1..=8i32) {
            assert_relative_eq!(p.center, a * (2 * s - 8) as f64, epsilon = 1e-12);
        }
    }

    #[test]
    fn displace_zero_is_identity_and_inverse_pair_returns() {
        let one = encoded_comb(LogicalBit::One, 2, 0.15, alpha()).unwrap();
        let same = one.displace(0.0, Quadrature::Position).unwrap();
        assert!(one.distance(&same).unwrap() == 0.0);
        let back = one
            .displace(0.37, Quadrature::Position)
            .unwrap()
            .displace(-0.37, Quadrature::Position)
            .unwrap();
        assert!(one.distance(&back).unwrap() < 1e-12);
    }

    #[test]
    fn displace_dual_axis_is_rejected() {
        let one = encoded_comb(LogicalBit::One, 1, 0.15, alpha()).unwrap();
        assert!(one.displace(0.5, Quadrature::Momentum).is_err());
    }

    #[test]
    fn displace_preserves_norm() {
        let one = encoded_comb(LogicalBit::One, 3, 0.2, alpha()).unwrap();
        let moved = one.displace(1.7, Quadrature::Position).unwrap();
        assert!((moved.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn self_overlap_of_normalized_comb_is_one() {
        let one = encoded_comb(LogicalBit::One, 3, 0.15, alpha()).unwrap();
        let s = one.overlap(&one).unwrap();
        assert_relative_eq!(s.re, 1.0, epsilon = 1e-12);
        assert!(s.im.abs() < 1e-15);
    }

    #[test]
    fn two_peak_overlap_matches_closed_form_and_quadrature() {
        let a = alpha();
        let d = 0.15;
        let left = GaussianComb::new(d, Quadrature::Position, vec![(-a, c(1.0))]).unwrap();
        let right = GaussianComb::new(d, Quadrature::Position, vec![(a, c(1.0))]).unwrap();
        let got = left.overlap(&right).unwrap().re;
        let closed = (-(2.0 * a) * (2.0 * a) / (4.0 * d * d)).exp();
        assert_relative_eq!(got, closed, max_relative = 1e-12);
        let quad = integrate(
            |q| gaussian_amplitude(q + a, d) * gaussian_amplitude(q - a, d),
            -20.0,
            20.0,
            1e-40,
        );
        // exp(-alpha^2/delta^2) ~ 4.8e-31; quadrature confirms the scale.
        assert!((got - quad).abs() < 1e-33, "closed {got:e} vs quadrature {quad:e}");
    }

    #[test]
    fn codeword_overlap_matches_closed_form_scale() {
        // |<~0_3|~1_3>| at width 0.15 is (15/8) exp(-alpha^2 / (4 delta^2)),
        // fifteen nearest-neighbour peak pairs at gap alpha: about 4.93e-8.
        let a = alpha();
        let zero = encoded_comb(LogicalBit::Zero, 3, 0.15, a).unwrap();
        let one = encoded_comb(LogicalBit::One, 3, 0.15, a).unwrap();
        let got = zero.overlap(&one).unwrap().norm();
        let expect = 15.0 / 8.0 * (-a * a / (4.0 * 0.15 * 0.15)).exp();
        assert_relative_eq!(got, expect, max_relative = 1e-9);
        assert_relative_eq!(got, 4.9332444913587665e-8, max_relative = 1e-9);
        // The finite-width analogue of ideal orthogonality: below 1e-10 once
        // the width drops under ~0.127 at this lattice constant.
        let zero_n = encoded_comb(LogicalBit::Zero, 3, 0.10, a).unwrap();
        let one_n = encoded_comb(LogicalBit::One, 3, 0.10, a).unwrap();
        assert!(zero_n.overlap(&one_n).unwrap().norm() < 1e-10);
    }

    #[test]
    fn overlap_rejects_mismatched_width_or_axis() {
        let a = GaussianComb::squeezed_vacuum(0.15).unwrap();
        let b = GaussianComb::squeezed_vacuum(0.2).unwrap();
        assert!(a.overlap(&b).is_err());
        let m = GaussianComb::squeezed_vacuum_on(Quadrature::Momentum, 0.15).unwrap();
        assert!(a.overlap(&m).is_err());
    }

    #[test]
    fn eval_momentum_limit_at_origin() {
        // At p = 0 every phase is one, so the dual amplitude is
        // sqrt(delta / (2^n sqrt(pi))) * N * 2^n with N the exact normalisation.
        let n = 3u32;
        let d = 0.15;
        let one = encoded_comb(LogicalBit::One, n, d, alpha()).unwrap();
        let norm_factor = one.peaks()[0].coeff.norm() * (2f64.powi(n as i32)).sqrt();
        let expect = (d / (2f64.powi(n as i32) * std::f64::consts::PI.sqrt())).sqrt()
            * norm_factor
            * 2f64.powi(n as i32);
        let got = one.eval(0.0, Quadrature::Momentum);
        assert_relative_eq!(got.re, expect, max_relative = 1e-12);
        assert!(got.im.abs() < 1e-15);
    }

    #[test]
    fn eval_position_at_peak_is_single_gaussian_up_to_cross_terms() {
        let a = alpha();
        let d = 0.15;
        let one = encoded_comb(LogicalBit::One, 1, d, a).unwrap();
        let n_factor = one.peaks()[0].coeff.norm() * 2f64.sqrt();
        let expect = n_factor / 2f64.sqrt() * gaussian_amplitude(0.0, d);
        let got = one.eval(a, Quadrature::Position).re;
        assert!((got - expect).abs() < (-a * a / (d * d)).exp() * 10.0 + 1e-15);
    }

    #[test]
    fn eval_midway_between_peaks_is_negligible() {
        let a = alpha();
        let one = encoded_comb(LogicalBit::One, 3, 0.15, a).unwrap();
        let peak = one.eval(a, Quadrature::Position).norm();
        let mid = one.eval(0.0, Quadrature::Position).norm();
        assert!(mid < 1e-8 * peak, "mid {mid:e} peak {peak:e}");
    }

    #[test]
    fn to_grid_matches_pointwise_eval_and_norm() {
        let s = GaussianComb::squeezed_vacuum(1.0).unwrap();
        let grid = s.to_grid(-16.0, 32.0 / 1024.0, 1024).unwrap();
        assert!((grid.norm() - 1.0).abs() < 1e-10);
        let mut max_err = 0.0f64;
        for k in 0..grid.len() {
            let x = grid.coord(k);
            max_err = max_err.max((grid.amplitudes()[k] - s.eval(x, Quadrature::Position)).norm());
        }
        assert!(max_err < 1e-10);
    }

    #[test]
    fn to_grid_density_peaks_on_comb_lattice() {
        let a = alpha();
        let one = encoded_comb(LogicalBit::One, 3, 0.15, a).unwrap();
        let (origin, dq, len) = crate::grid::default_grid_spec(a, 3);
        let grid = one.to_grid(origin, dq, len).unwrap();
        for s in 1..=8i32 {
            let center = a * (2 * s - 9) as f64;
            let k = ((center - origin) / dq).round() as usize;
            let here = grid.amplitudes()[k].norm_sqr();
            let off = grid.amplitudes()[k + 32].norm_sqr();
            assert!(here > 100.0 * off);
        }
    }

    #[test]
    fn to_grid_outside_window_is_truncation_error() {
        let one = encoded_comb(LogicalBit::One, 3, 0.15, alpha()).unwrap();
        match one.to_grid(-4.0, 8.0 / 256.0, 256) {
            Err(Error::Truncation { lost_mass }) => assert!(lost_mass > 0.0),
            other => panic!("expected truncation error, got {other:?}"),
        }
    }

    #[test]
    fn combine_merges_coincident_centers() {
        let s = GaussianComb::squeezed_vacuum(0.15).unwrap();
        let sum = GaussianComb::combine(&s, c(1.0), &s, c(1.0)).unwrap().unwrap();
        assert_eq!(sum.peaks().len(), 1);
        assert_relative_eq!(sum.peaks()[0].coeff.re, 2.0, epsilon = 1e-15);
        let cancel = GaussianComb::combine(&s, c(1.0), &s, c(-1.0)).unwrap();
        assert!(cancel.is_none());
    }

    #[test]
    fn canonical_phase_makes_leftmost_coefficient_positive() {
        let comb = GaussianComb::new(
            0.15,
            Quadrature::Position,
            vec![(-1.0, c(-0.5)), (1.0, Complex64::new(0.0, 0.5))],
        )
        .unwrap();
        let canon = comb.canonical_phase();
        assert!(canon.peaks()[0].coeff.re > 0.0);
        assert!(canon.peaks()[0].coeff.im.abs() < 1e-15);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_comb() -> impl Strategy<Value = GaussianComb> {
            (
                0.05f64..1.0,
                proptest::collection::vec((-40i32..40, -1.0f64..1.0, -1.0f64..1.0), 1..12),
            )
                .prop_filter_map("distinct centers", |(width, raw)| {
                    let mut peaks: Vec<(f64, Complex64)> = raw
                        .into_iter()
                        .map(|(c, re, im)| (c as f64 * 0.5, Complex64::new(re, im)))
                        .collect();
                    peaks.sort_by(|a, b| a.0.total_cmp(&b.0));
                    peaks.dedup_by(|a, b| a.0 == b.0);
                    GaussianComb::new(width, Quadrature::Position, peaks).ok()
                })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn overlap_is_conjugate_symmetric_bitwise(a in arb_comb(), b in arb_comb()) {
                if a.width() == b.width() {
                    let ab = a.overlap(&b).unwrap();
                    let ba = b.overlap(&a).unwrap();
                    prop_assert_eq!(ab, ba.conj());
                }
            }

            #[test]
            fn displacement_preserves_norm(a in arb_comb(), amount in -5.0f64..5.0) {
                let moved = a.displace(amount, Quadrature::Position).unwrap();
                prop_assert!((moved.norm() - a.norm()).abs() <= 1e-12 * (1.0 + a.norm()));
            }

            #[test]
            fn normalize_gives_unit_self_overlap(a in arb_comb()) {
                if a.norm() > 1e-6 {
                    let n = a.normalize().unwrap();
                    prop_assert!((n.overlap(&n).unwrap().re - 1.0).abs() < 1e-12);
                }
            }
        }
    }
}
