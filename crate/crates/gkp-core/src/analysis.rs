//! Misidentification probabilities, closed-form bounds, and moments.
//!
//! A position measurement misidentifies a codeword when it lands nearer the
//! other codeword's lattice: for the bit-zero comb that is the union of
//! width-`alpha` cells centred on odd multiples of `alpha`. The momentum-side
//! analogue integrates the normalised difference state over cells centred on
//! even multiples of `pi/alpha`.

use serde::Serialize;

use crate::comb::Quadrature;
use crate::error::{Error, Result};
use crate::grid::{default_grid_spec, GridState};
use crate::lattice::{encoded_comb, LogicalBit};
use crate::par;

/// Adaptive Simpson quadrature.
///
/// Recursion stops when the two-panel refinement differs from the single
/// panel by less than `tol` (with the standard 1/15 correction) or at depth
/// 48. The first six levels always split, so accidental cancellation across
/// a wide interval cannot end the recursion early. Tolerance is absolute.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let refined = left + right;
        let converged = depth < 42 && (refined - whole).abs() <= 15.0 * tol;
        if depth == 0 || converged {
            return refined + (refined - whole) / 15.0;
        }
        recurse(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
            + recurse(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(&f, a, fa, b, fb, m, fm, whole, tol, 48)
}

/// Assign each grid point to a width-`period` cell centred on multiples of
/// `period`, with boundary points going to the lower cell.
///
/// When the period is a whole (even) number of cells and the origin is
/// cell-aligned the classification is exact integer arithmetic, so boundary
/// assignment never depends on floating-point rounding; otherwise it falls
/// back to the equivalent half-open rule on coordinates.
fn cell_indices(state: &GridState, period: f64) -> Vec<i64> {
    let dq = state.spacing();
    let cells = period / dq;
    let c = cells.round();
    let origin_cells = state.origin() / dq;
    let o = origin_cells.round();
    let exact = (cells - c).abs() <= 1e-9
        && (origin_cells - o).abs() <= 1e-9
        && c >= 2.0
        && (c as i64) % 2 == 0;
    if exact {
        let c = c as i64;
        let o = o as i64;
        (0..state.len() as i64)
            .map(|k| (o + k + c / 2 - 1).div_euclid(c))
            .collect()
    } else {
        (0..state.len())
            .map(|k| (state.coord(k) / period - 0.5).ceil() as i64)
            .collect()
    }
}

fn require_normalized(state: &GridState) -> Result<()> {
    let n2 = state.norm_squared();
    if (n2 - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!("state must be normalised, got squared norm {n2}")));
    }
    Ok(())
}

/// Probability that a position sample of a codeword grid falls in the other
/// codeword's cells: odd multiples of `alpha` for bit zero, even for bit one.
pub fn position_error_prob(state: &GridState, alpha: f64, bit: LogicalBit) -> Result<f64> {
    if state.axis() != Quadrature::Position {
        return Err(Error::Domain("position error needs a position-tagged grid".into()));
    }
    require_normalized(state)?;
    let cells = cell_indices(state, alpha);
    let wrong = match bit {
        LogicalBit::Zero => 1,
        LogicalBit::One => 0,
    };
    let mass: f64 = state
        .amplitudes()
        .iter()
        .zip(&cells)
        .filter(|(_, m)| (*m).rem_euclid(2) == wrong)
        .map(|(a, _)| a.norm_sqr())
        .sum();
    Ok(mass * state.spacing())
}

/// Closed-form upper bound on the position misidentification probability:
/// `(4 delta / (sqrt(pi) alpha)) exp(-(alpha/delta)^2 / 8)`. Independent of
/// the iteration count.
pub fn position_error_bound(delta: f64, alpha: f64) -> f64 {
    debug_assert!(delta > 0.0 && alpha > 0.0);
    4.0 * delta / (std::f64::consts::PI.sqrt() * alpha) * (-(alpha / delta).powi(2) / 8.0).exp()
}

/// Momentum misidentification probability of the normalised difference state
/// `(|0> - |1>) / ||...||`: its density integrated over cells centred on even
/// multiples of `pi / alpha`.
pub fn momentum_error_prob(state0: &GridState, state1: &GridState, alpha: f64) -> Result<f64> {
    if state0.axis() != Quadrature::Momentum || state1.axis() != Quadrature::Momentum {
        return Err(Error::Domain("momentum error needs momentum-tagged grids".into()));
    }
    state0.check_same_layout(state1)?;
    let diff = GridState::linear_combination(
        state0,
        num_complex::Complex64::new(1.0, 0.0),
        state1,
        num_complex::Complex64::new(-1.0, 0.0),
    )?;
    let n2 = diff.norm_squared();
    if n2 < 1e-12 {
        return Err(Error::Domain("difference state is degenerate (inputs coincide)".into()));
    }
    let period = std::f64::consts::PI / alpha;
    let cells = cell_indices(&diff, period);
    let mass: f64 = diff
        .amplitudes()
        .iter()
        .zip(&cells)
        .filter(|(_, m)| (*m).rem_euclid(2) == 0)
        .map(|(a, _)| a.norm_sqr())
        .sum();
    Ok(mass * diff.spacing() / n2)
}

/// Momentum-side bound `1 / (pi 2^{n+1})`, halving with each iteration.
pub fn momentum_error_bound(iterations: u32) -> f64 {
    debug_assert!(iterations >= 1);
    1.0 / (std::f64::consts::PI * 2f64.powi(iterations as i32 + 1))
}

/// The Gaussian tail integral and its leading asymptotic form.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ErfTail {
    /// `integral_x^inf exp(-t^2) dt` by adaptive quadrature.
    pub exact: f64,
    /// `exp(-x^2) / (2x)`.
    pub asymptotic: f64,
}

/// Evaluate the tail integral at `x > 0` both ways.
pub fn erf_tail(x: f64) -> Result<ErfTail> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("erf tail requires x > 0, got {x}")));
    }
    let asymptotic = (-x * x).exp() / (2.0 * x);
    // Truncate where the remaining tail is ~exp(-45) relative to the value.
    let upper = (x * x + 45.0).sqrt();
    let tol = (asymptotic * 1e-13).max(1e-308);
    let exact = integrate(|t| (-t * t).exp(), x, upper, tol);
    Ok(ErfTail { exact, asymptotic })
}

/// Fit the constant in the `|exact - asymptotic| / exact <= C / x^2` gap over
/// the given sample points; returns the largest observed `x^2 * gap`.
pub fn erf_tail_gap_coefficient(xs: &[f64]) -> Result<f64> {
    let mut c: f64 = 0.0;
    for &x in xs {
        let t = erf_tail(x)?;
        c = c.max(x * x * (t.exact - t.asymptotic).abs() / t.exact);
    }
    Ok(c)
}

/// Mean energy `<(q^2 + p^2)/2>` of a normalised position grid, the momentum
/// part taken from its quadrature transform.
pub fn mean_energy(state: &GridState) -> Result<f64> {
    require_normalized(state)?;
    let q2 = state.second_moment();
    let p2 = state.fourier()?.second_moment();
    Ok(0.5 * (q2 + p2))
}

/// All the per-configuration fidelity figures in one record.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorReport {
    pub alpha: f64,
    pub delta: f64,
    pub iterations: u32,
    pub position_error: f64,
    pub position_bound: f64,
    pub momentum_error: f64,
    pub momentum_bound: f64,
    pub overlap01: f64,
    pub mean_energy: f64,
}

impl ErrorReport {
    /// Bounds claimed by the closed forms actually dominate the numerics.
    pub fn bounds_dominate(&self) -> bool {
        self.position_error <= self.position_bound && self.momentum_error <= self.momentum_bound
    }
}

/// Compute the full report for one `(alpha, delta, n)` configuration.
pub fn report(alpha: f64, delta: f64, iterations: u32) -> Result<ErrorReport> {
    if iterations < 1 {
        return Err(Error::Domain("analysis needs at least one iteration".into()));
    }
    let zero = encoded_comb(LogicalBit::Zero, iterations, delta, alpha)?;
    let one = encoded_comb(LogicalBit::One, iterations, delta, alpha)?;
    let (origin, dq, len) = default_grid_spec(alpha, iterations);
    let zero_grid = zero.to_grid(origin, dq, len)?;
    let one_grid = one.to_grid(origin, dq, len)?;
    let position_error = position_error_prob(&zero_grid, alpha, LogicalBit::Zero)?;
    let momentum_error =
        momentum_error_prob(&zero_grid.fourier()?, &one_grid.fourier()?, alpha)?;
    Ok(ErrorReport {
        alpha,
        delta,
        iterations,
        position_error,
        position_bound: position_error_bound(delta, alpha),
        momentum_error,
        momentum_bound: momentum_error_bound(iterations),
        overlap01: zero.overlap(&one)?.norm(),
        mean_energy: mean_energy(&one_grid)?,
    })
}

/// Reports for the full `deltas x iterations` matrix at fixed `alpha`.
pub fn sweep(alpha: f64, deltas: &[f64], iterations: &[u32]) -> Result<Vec<ErrorReport>> {
    let combos: Vec<(f64, u32)> = deltas
        .iter()
        .flat_map(|&d| iterations.iter().map(move |&n| (d, n)))
        .collect();
    par::map_items(&combos, |&(d, n)| report(alpha, d, n))
        .into_iter()
        .collect()
}
