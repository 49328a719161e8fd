//! Shift-error syndrome extraction and correction on a two-mode grid.
//!
//! The encoded mode is coupled to an ancilla comb by the SUM interaction
//! `exp(-i q_e p_a)` (position errors) or `exp(-i p_e q_a)` (momentum
//! errors), the ancilla coordinate is measured, and the outcome reduced
//! modulo the code lattice gives the shift estimate. Both modes share one
//! grid spacing so the SUM gate is an exact integer-cell row shift.
//!
//! Measurement is a faithful projective slice: the collapsed encoded state
//! is the measured column of the joint wave function, renormalised. The
//! within-peak back-action of that slice is physical and is reported, not
//! hidden: [`TrialResult`] carries both the full quantum fidelity of the
//! corrected collapsed state and the fidelity of a displacement-only
//! correction that ignores back-action.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::comb::{GaussianComb, Quadrature};
use crate::error::{Error, Result};
use crate::grid::GridState;
use crate::lattice::LogicalBit;
use crate::par;
use crate::protocol::{branch_for_bits, ProtocolConfig};

/// Lost SUM-gate mass above this aborts with a truncation error.
const SUM_LOST_MASS_LIMIT: f64 = 1e-9;

/// Parameters of one recovery setup.
#[derive(Debug, Clone)]
pub struct RecoveryConfig {
    pub alpha: f64,
    /// Width of the encoded-state peaks.
    pub delta: f64,
    /// Iteration count of the encoded codewords.
    pub iterations: u32,
    /// Peak width of the ideal-comb ancilla.
    pub ancilla_width: f64,
    /// Shared grid spacing (position frame); the momentum frame scales it by
    /// the dual lattice constant.
    pub cells_per_period: usize,
    pub encoded_len: usize,
    pub ancilla_len: usize,
    /// `Position` runs `exp(-i q_e p_a)`; `Momentum` runs `exp(-i p_e q_a)`
    /// in the dual frame.
    pub quadrature: Quadrature,
    pub seed: u64,
}

impl RecoveryConfig {
    pub fn new(alpha: f64, delta: f64, iterations: u32) -> Result<Self> {
        if !(alpha > 0.0) || !(delta > 0.0) {
            return Err(Error::Domain("alpha and delta must be positive".into()));
        }
        Ok(RecoveryConfig {
            alpha,
            delta,
            iterations,
            ancilla_width: 0.05,
            cells_per_period: 32,
            encoded_len: 512,
            ancilla_len: 1024,
            quadrature: Quadrature::Position,
            seed: 0,
        })
    }

    /// Lattice period of the syndrome in the working frame: `alpha` for
    /// position recovery, `pi / alpha` for momentum recovery.
    pub fn period(&self) -> f64 {
        match self.quadrature {
            Quadrature::Position => self.alpha,
            Quadrature::Momentum => std::f64::consts::PI / self.alpha,
        }
    }

    /// Shared grid spacing in the working frame.
    pub fn spacing(&self) -> f64 {
        self.period() / self.cells_per_period as f64
    }

    fn validate(&self) -> Result<()> {
        if self.cells_per_period < 4 || self.cells_per_period % 2 != 0 {
            return Err(Error::Domain("cells per period must be even and at least 4".into()));
        }
        if !self.encoded_len.is_power_of_two() || !self.ancilla_len.is_power_of_two() {
            return Err(Error::Domain("grid lengths must be powers of two".into()));
        }
        Ok(())
    }

    fn grid_origin(&self, len: usize) -> f64 {
        -(len as f64 / 2.0) * self.spacing()
    }

    /// The empty grid layout for the encoded mode in the working frame.
    pub fn encoded_window(&self) -> (f64, f64, usize) {
        (self.grid_origin(self.encoded_len), self.spacing(), self.encoded_len)
    }
}

/// Where the recovery ancilla comes from.
#[derive(Debug, Clone)]
pub enum AncillaSource {
    /// Equal-coefficient comb on the code lattice: the idealised
    /// `(|0> + |1>)/sqrt(2)` ancilla for position recovery, the `|0>`
    /// momentum comb for momentum recovery.
    IdealComb,
    /// A deterministically prepared branch with the given outcome bits,
    /// peak width equal to the encoded `delta`.
    Prepared { bits: Vec<u8> },
}

impl AncillaSource {
    pub fn parse(s: &str) -> Result<AncillaSource> {
        if s == "ideal" {
            return Ok(AncillaSource::IdealComb);
        }
        if let Some(pattern) = s.strip_prefix("bits:") {
            let bits: Result<Vec<u8>> = pattern
                .chars()
                .map(|c| match c {
                    '0' => Ok(0),
                    '1' => Ok(1),
                    other => Err(Error::Domain(format!("bad ancilla bit `{other}`"))),
                })
                .collect();
            return Ok(AncillaSource::Prepared { bits: bits? });
        }
        Err(Error::Domain(format!("ancilla must be `ideal` or `bits:<pattern>`, got `{s}`")))
    }

    fn build(&self, config: &RecoveryConfig) -> Result<GaussianComb> {
        let period = config.period();
        match self {
            AncillaSource::IdealComb => {
                let half = config.grid_origin(config.encoded_len).abs();
                let kmax = (half / period).floor() as i64;
                let amp = Complex64::new(1.0, 0.0);
                let peaks = (-kmax..=kmax).map(|k| (k as f64 * period, amp)).collect();
                GaussianComb::new(config.ancilla_width, config.quadrature, peaks)?.normalize()
            }
            AncillaSource::Prepared { bits } => {
                let mut proto = ProtocolConfig::new(config.alpha, config.delta, bits.len() as u32)?;
                proto.comb_axis = config.quadrature;
                Ok(branch_for_bits(&proto, bits)?.state)
            }
        }
    }
}

/// A measured ancilla value reduced modulo the code lattice.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Syndrome {
    /// Raw measured ancilla coordinate.
    pub measured: f64,
    /// Estimated shift, wrapped into `[-period/2, period/2)`.
    pub estimate: f64,
    /// Displacement to apply: `-estimate`.
    pub correction: f64,
}

/// Wrap a measured coordinate into `[-period/2, period/2)`; an exact upper
/// boundary maps to the lower end.
pub fn syndrome_to_correction(measured: f64, period: f64) -> Syndrome {
    let estimate = (measured + period / 2.0).rem_euclid(period) - period / 2.0;
    Syndrome { measured, estimate, correction: -estimate }
}

/// Build the normalised superposition `c0 |0> + c1 |1>` of the finite-width
/// codewords in the position frame.
pub fn encode_superposition(
    c0: Complex64,
    c1: Complex64,
    config: &RecoveryConfig,
) -> Result<GaussianComb> {
    let weight = c0.norm_sqr() + c1.norm_sqr();
    if (weight - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!(
            "superposition coefficients must be normalised, got |c0|^2+|c1|^2 = {weight}"
        )));
    }
    let zero = crate::lattice::encoded_comb(LogicalBit::Zero, config.iterations, config.delta, config.alpha)?;
    let one = crate::lattice::encoded_comb(LogicalBit::One, config.iterations, config.delta, config.alpha)?;
    GaussianComb::linear_combination(&zero, c0, &one, c1)?.normalize()
}

/// Apply a shift error: position displacement, then momentum phase.
pub fn apply_shift_error(state: &GridState, dq_shift: f64, dp_shift: f64) -> Result<GridState> {
    state
        .displace(dq_shift, Quadrature::Position)?
        .displace(dp_shift, Quadrature::Momentum)
}

/// Joint amplitudes of the encoded mode and the ancilla on one shared-spacing
/// grid, row-major `[encoded][ancilla]`.
#[derive(Debug, Clone)]
pub struct TwoModeGrid {
    axis: Quadrature,
    dq: f64,
    enc_origin: f64,
    anc_origin: f64,
    enc_len: usize,
    anc_len: usize,
    amps: Vec<Complex64>,
}

impl TwoModeGrid {
    /// Product state `encoded (x) ancilla`.
    pub fn product(encoded: &GridState, ancilla: &GridState) -> Result<Self> {
        if encoded.axis() != ancilla.axis() {
            return Err(Error::GridMismatch("modes must share the representation frame".into()));
        }
        let tol = 1e-12 * (1.0 + encoded.spacing());
        if (encoded.spacing() - ancilla.spacing()).abs() > tol {
            return Err(Error::GridMismatch("modes must share one grid spacing".into()));
        }
        let enc = encoded.amplitudes();
        let anc = ancilla.amplitudes();
        let mut amps = vec![Complex64::new(0.0, 0.0); enc.len() * anc.len()];
        for (i, &e) in enc.iter().enumerate() {
            let row = &mut amps[i * anc.len()..(i + 1) * anc.len()];
            for (j, &a) in anc.iter().enumerate() {
                row[j] = e * a;
            }
        }
        Ok(TwoModeGrid {
            axis: encoded.axis(),
            dq: encoded.spacing(),
            enc_origin: encoded.origin(),
            anc_origin: ancilla.origin(),
            enc_len: enc.len(),
            anc_len: anc.len(),
            amps,
        })
    }

    pub fn axis(&self) -> Quadrature {
        self.axis
    }

    pub fn norm_squared(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.dq * self.dq
    }


    fn ancilla_coord(&self, j: usize) -> f64 {
        self.anc_origin + j as f64 * self.dq
    }

    /// Apply the SUM interaction as exact integer-cell row shifts.
    ///
    /// Position frame (`exp(-i q_e p_a)`): the ancilla column picks up the
    /// encoded coordinate, `new[i][j] = old[i][j - i_cells]`. Momentum frame
    /// (`exp(-i p_e q_a)` seen in the dual representation): the opposite
    /// direction, `new[i][j] = old[i][j + i_cells]`.
    ///
    /// Returns the gated state and the squared-norm mass shifted past the
    /// ancilla window; more than [`SUM_LOST_MASS_LIMIT`] is an error.
    pub fn sum_gate(&self) -> Result<(Self, f64)> {
        let origin_cells = self.enc_origin / self.dq;
        let rounded = origin_cells.round();
        if (origin_cells - rounded).abs() > 1e-9 {
            return Err(Error::Domain("encoded origin must be cell-aligned for the SUM gate".into()));
        }
        let dir: i64 = match self.axis {
            Quadrature::Position => 1,
            Quadrature::Momentum => -1,
        };
        let base = rounded as i64;
        let anc_len = self.anc_len as i64;
        let mut lost = 0.0;
        let rows: Vec<(Vec<Complex64>, f64)> = par::map_indexed(self.enc_len, |i| {
            let shift = dir * (base + i as i64);
            let old = &self.amps[i * self.anc_len..(i + 1) * self.anc_len];
            let mut row = vec![Complex64::new(0.0, 0.0); self.anc_len];
            let mut row_lost = 0.0;
            for j in 0..anc_len {
                let src = j - shift;
                if (0..anc_len).contains(&src) {
                    row[j as usize] = old[src as usize];
                }
            }
            for (j, a) in old.iter().enumerate() {
                let dst = j as i64 + shift;
                if !(0..anc_len).contains(&dst) {
                    row_lost += a.norm_sqr();
                }
            }
            (row, row_lost)
        });
        let mut amps = Vec::with_capacity(self.amps.len());
        for (row, row_lost) in rows {
            amps.extend_from_slice(&row);
            lost += row_lost;
        }
        let lost_mass = lost * self.dq * self.dq;
        if lost_mass > SUM_LOST_MASS_LIMIT {
            return Err(Error::Truncation { lost_mass });
        }
        Ok((
            TwoModeGrid { amps, ..self.clone_layout() },
            lost_mass,
        ))
    }

    fn clone_layout(&self) -> Self {
        TwoModeGrid {
            axis: self.axis,
            dq: self.dq,
            enc_origin: self.enc_origin,
            anc_origin: self.anc_origin,
            enc_len: self.enc_len,
            anc_len: self.anc_len,
            amps: Vec::new(),
        }
    }

    /// Probability mass per ancilla cell.
    pub fn ancilla_marginal(&self) -> Vec<f64> {
        let mut marg = vec![0.0; self.anc_len];
        for i in 0..self.enc_len {
            let row = &self.amps[i * self.anc_len..(i + 1) * self.anc_len];
            for (j, a) in row.iter().enumerate() {
                marg[j] += a.norm_sqr();
            }
        }
        let cell = self.dq * self.dq;
        for m in &mut marg {
            *m *= cell;
        }
        marg
    }

    /// Measure the ancilla coordinate in the working frame.
    ///
    /// The outcome is either sampled from the marginal over grid cells or
    /// fixed to the cell nearest the given value. Returns the measured
    /// coordinate, the collapsed (renormalised) encoded state, and the
    /// marginal probability density at the outcome.
    pub fn measure_ancilla(
        &self,
        axis: Quadrature,
        outcome: MeasureSpec,
        rng: &mut ChaCha8Rng,
    ) -> Result<(f64, GridState, f64)> {
        if axis != self.axis {
            return Err(Error::Domain(format!(
                "measurement axis {} does not match the joint frame {}",
                axis.label(),
                self.axis.label()
            )));
        }
        let marg = self.ancilla_marginal();
        let total: f64 = marg.iter().sum();
        if total <= 0.0 {
            return Err(Error::DegenerateMeasurement);
        }
        let j = match outcome {
            MeasureSpec::Sampled => {
                let u: f64 = rng.random::<f64>() * total;
                let mut acc = 0.0;
                let mut pick = self.anc_len - 1;
                for (idx, &m) in marg.iter().enumerate() {
                    acc += m;
                    if u < acc {
                        pick = idx;
                        break;
                    }
                }
                pick
            }
            MeasureSpec::Fixed(value) => {
                let cell = (value - self.anc_origin) / self.dq;
                let idx = cell.round();
                if idx < 0.0 || idx >= self.anc_len as f64 {
                    return Err(Error::Domain(format!("fixed outcome {value} outside the ancilla window")));
                }
                idx as usize
            }
        };
        if marg[j] <= 0.0 {
            return Err(Error::DegenerateMeasurement);
        }
        let mut column = Vec::with_capacity(self.enc_len);
        for i in 0..self.enc_len {
            column.push(self.amps[i * self.anc_len + j]);
        }
        let collapsed = GridState::new(self.axis, self.enc_origin, self.dq, column)?.normalize()?;
        Ok((self.ancilla_coord(j), collapsed, marg[j] / self.dq))
    }
}

/// How the ancilla measurement outcome is chosen.
#[derive(Debug, Clone, Copy)]
pub enum MeasureSpec {
    /// Draw from the marginal distribution.
    Sampled,
    /// Force the cell nearest this coordinate (replay).
    Fixed(f64),
}

/// Everything recorded about one recovery trial.
#[derive(Debug, Clone, Serialize)]
pub struct TrialResult {
    /// Applied shift error (primary-frame component, dual component).
    pub shift: (f64, f64),
    pub syndrome: Syndrome,
    /// `|<pre-error | corrected collapsed>|^2`: the full quantum fidelity
    /// including measurement back-action.
    pub fidelity: f64,
    /// Fidelity of correcting the error state by `-estimate` alone, with the
    /// measurement back-action left out.
    pub displacement_fidelity: f64,
    /// True when the estimate missed the shift by more than half a period,
    /// i.e. the correction lands on the wrong lattice point.
    pub logical_failure: bool,
    /// Squared-norm mass lost at the SUM gate.
    pub lost_mass: f64,
}

/// Run one recovery trial.
///
/// `pre_error` must live on the config's encoded window in the working
/// frame. The primary-frame shift is aligned to the nearest grid cell and the
/// applied value is recorded in the result.
pub fn recover(
    pre_error: &GridState,
    primary_shift: f64,
    dual_shift: f64,
    ancilla: &AncillaSource,
    config: &RecoveryConfig,
    outcome: MeasureSpec,
) -> Result<TrialResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    recover_with_rng(pre_error, primary_shift, dual_shift, ancilla, config, outcome, &mut rng)
}

fn recover_with_rng(
    pre_error: &GridState,
    primary_shift: f64,
    dual_shift: f64,
    ancilla: &AncillaSource,
    config: &RecoveryConfig,
    outcome: MeasureSpec,
    rng: &mut ChaCha8Rng,
) -> Result<TrialResult> {
    config.validate()?;
    if pre_error.axis() != config.quadrature {
        return Err(Error::GridMismatch(format!(
            "encoded state is {} but the recovery frame is {}",
            pre_error.axis().label(),
            config.quadrature.label()
        )));
    }
    let dq = config.spacing();
    let applied = (primary_shift / dq).round() * dq;

    let (dq_shift, dp_shift) = match config.quadrature {
        Quadrature::Position => (applied, dual_shift),
        Quadrature::Momentum => (dual_shift, applied),
    };
    let err = apply_shift_error(pre_error, dq_shift, dp_shift)?;

    let anc_origin = config.grid_origin(config.ancilla_len);
    let anc_grid = ancilla
        .build(config)?
        .to_grid(anc_origin, dq, config.ancilla_len)?
        .normalize()?;

    let joint = TwoModeGrid::product(&err, &anc_grid)?;
    let (gated, lost_mass) = joint.sum_gate()?;
    let (measured, collapsed, _density) =
        gated.measure_ancilla(config.quadrature, outcome, rng)?;

    let period = config.period();
    let sign = match config.quadrature {
        Quadrature::Position => 1.0,
        Quadrature::Momentum => -1.0,
    };
    let raw = syndrome_to_correction(sign * measured, period);
    // Snap the estimate to the cell lattice so the correction is an exact
    // displacement; the measured value itself is on the lattice already.
    let estimate = (raw.estimate / dq).round() * dq;
    let syndrome = Syndrome { measured, estimate, correction: -estimate };

    let corrected = collapsed.displace(syndrome.correction, config.quadrature)?;
    let fidelity = pre_error.inner(&corrected)?.norm_sqr();
    let disp_corrected = err.displace(syndrome.correction, config.quadrature)?;
    let displacement_fidelity = pre_error.inner(&disp_corrected)?.norm_sqr();
    let logical_failure = (syndrome.estimate - applied).abs() > period / 2.0 + 1e-12;

    Ok(TrialResult {
        shift: (applied, dual_shift),
        syndrome,
        fidelity,
        displacement_fidelity,
        logical_failure,
        lost_mass,
    })
}

/// How trial shifts are chosen by [`run_trials`].
#[derive(Debug, Clone, Copy)]
pub enum ShiftSpec {
    /// The same (primary, dual) shift every trial.
    Fixed { primary: f64, dual: f64 },
    /// Primary shift drawn uniformly from the grid cells in
    /// `[-max_abs, max_abs]`, dual shift zero.
    UniformPrimary { max_abs: f64 },
}

/// Independent seeded trials; trial `i` uses seed `config.seed + i`.
pub fn run_trials(
    pre_error: &GridState,
    spec: ShiftSpec,
    ancilla: &AncillaSource,
    config: &RecoveryConfig,
    trials: usize,
) -> Result<Vec<TrialResult>> {
    let results = par::map_indexed(trials, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(i as u64));
        let (primary, dual) = match spec {
            ShiftSpec::Fixed { primary, dual } => (primary, dual),
            ShiftSpec::UniformPrimary { max_abs } => {
                let cells = (max_abs / config.spacing()).floor() as i64;
                let pick = rng.random_range(-cells..=cells);
                (pick as f64 * config.spacing(), 0.0)
            }
        };
        recover_with_rng(pre_error, primary, dual, ancilla, config, MeasureSpec::Sampled, &mut rng)
    });
    results.into_iter().collect()
}

/// Aggregates over a batch of trials.
#[derive(Debug, Clone, Serialize)]
pub struct RecoverySummary {
    pub trials: usize,
    pub median_syndrome_error: f64,
    pub median_fidelity: f64,
    pub mean_fidelity: f64,
    pub median_displacement_fidelity: f64,
    pub logical_failure_rate: f64,
    pub max_lost_mass: f64,
}

impl RecoverySummary {
    pub fn from_trials(trials: &[TrialResult]) -> Self {
        let n = trials.len();
        let mut syn: Vec<f64> = trials
            .iter()
            .map(|t| (t.syndrome.estimate - t.shift.0).abs())
            .collect();
        let mut fid: Vec<f64> = trials.iter().map(|t| t.fidelity).collect();
        let mut disp: Vec<f64> = trials.iter().map(|t| t.displacement_fidelity).collect();
        let failures = trials.iter().filter(|t| t.logical_failure).count();
        RecoverySummary {
            trials: n,
            median_syndrome_error: median(&mut syn),
            median_fidelity: median(&mut fid),
            mean_fidelity: trials.iter().map(|t| t.fidelity).sum::<f64>() / n.max(1) as f64,
            median_displacement_fidelity: median(&mut disp),
            logical_failure_rate: failures as f64 / n.max(1) as f64,
            max_lost_mass: trials.iter().map(|t| t.lost_mass).fold(0.0, f64::max),
        }
    }
}

fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}

/// The default encoded state for recovery demonstrations: the equal
/// superposition of the two codewords on the config's encoded window.
pub fn default_encoded_state(config: &RecoveryConfig) -> Result<GridState> {
    let comb = encode_superposition(
        Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
        Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
        config,
    )?;
    let (origin, dq, len) = config.encoded_window();
    comb.to_grid(origin, dq, len)?.normalize()
}
