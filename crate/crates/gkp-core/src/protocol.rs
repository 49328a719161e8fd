//! The iterative qubit-coupled preparation protocol.
//!
//! One iteration applies a Hadamard to the coupling qubit, a conditional
//! displacement `exp(-i d p sigma_z)` whose magnitude doubles each step
//! (`d_k = 2^{k-1} alpha`), a second Hadamard, and a qubit measurement.
//! Keeping only all-zero outcomes (post-selection) builds the `2^n`-peak
//! approximate codeword with probability `2^{-n}`; keeping every branch
//! (deterministic mode) yields combs with the same peak lattice and
//! outcome-dependent signs.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::comb::{GaussianComb, Quadrature};
use crate::error::{Error, Result};
use crate::lattice::LogicalBit;
use crate::par;

/// Hard cap on iterations: the mean energy grows like `4^n`, so anything
/// beyond this is numerically meaningless here.
pub const MAX_ITERATIONS: u32 = 16;

/// Cap for exhaustive branch enumeration (`2^n` records).
pub const MAX_ENUMERATED_ITERATIONS: u32 = 12;

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// How a protocol run treats qubit measurement outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Keep only the all-zeros outcome sequence.
    Postselect,
    /// Keep every outcome branch.
    Deterministic,
    /// Draw outcomes by the Born rule from a seeded generator.
    Sample,
}

impl Mode {
    pub fn parse(s: &str) -> Result<Mode> {
        match s {
            "postselect" => Ok(Mode::Postselect),
            "deterministic" => Ok(Mode::Deterministic),
            "sample" => Ok(Mode::Sample),
            other => Err(Error::Domain(format!("unknown mode `{other}`"))),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Mode::Postselect => "postselect",
            Mode::Deterministic => "deterministic",
            Mode::Sample => "sample",
        }
    }
}

/// Full parameter set for one protocol run.
#[derive(Debug, Clone)]
pub struct ProtocolConfig {
    pub alpha: f64,
    pub delta: f64,
    pub iterations: u32,
    pub target_bit: LogicalBit,
    pub comb_axis: Quadrature,
    pub mode: Mode,
    pub seed: u64,
}

impl ProtocolConfig {
    pub fn new(alpha: f64, delta: f64, iterations: u32) -> Result<Self> {
        let cfg = ProtocolConfig {
            alpha,
            delta,
            iterations,
            target_bit: LogicalBit::One,
            comb_axis: Quadrature::Position,
            mode: Mode::Postselect,
            seed: 0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::Domain(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(Error::Domain(format!("delta must be positive, got {}", self.delta)));
        }
        if self.iterations > MAX_ITERATIONS {
            return Err(Error::Domain(format!(
                "iteration count {} exceeds the cap of {MAX_ITERATIONS}",
                self.iterations
            )));
        }
        Ok(())
    }

    /// Non-fatal configuration advisories.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.delta / self.alpha >= 1.0 {
            out.push(format!(
                "delta/alpha = {:.3} >= 1: peaks overlap and the encoding is not meaningful",
                self.delta / self.alpha
            ));
        }
        out
    }

    /// Conditional-displacement magnitude for iteration `k` (1-based):
    /// `2^{k-1} alpha`.
    pub fn displacement(&self, k: u32) -> f64 {
        2f64.powi(k as i32 - 1) * self.alpha
    }
}

/// Oscillator state entangled with one qubit: an unnormalised comb per qubit
/// basis state. `None` is the exactly-zero branch (e.g. right after the qubit
/// is prepared in `|0>`).
#[derive(Debug, Clone)]
pub struct QubitOscState {
    pub branch0: Option<GaussianComb>,
    pub branch1: Option<GaussianComb>,
}

impl QubitOscState {
    /// Qubit `|0>` times the given oscillator state.
    pub fn from_oscillator(state: GaussianComb) -> Self {
        QubitOscState { branch0: Some(state), branch1: None }
    }

    pub fn joint_norm_squared(&self) -> f64 {
        let n0 = self.branch0.as_ref().map_or(0.0, |b| b.norm_squared());
        let n1 = self.branch1.as_ref().map_or(0.0, |b| b.norm_squared());
        n0 + n1
    }

    /// Hadamard on the qubit: `b0' = (b0 + b1)/sqrt(2)`, `b1' = (b0 - b1)/sqrt(2)`.
    pub fn hadamard(&self) -> Result<Self> {
        let r = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let combine = |sign: f64| -> Result<Option<GaussianComb>> {
            match (&self.branch0, &self.branch1) {
                (Some(a), Some(b)) => GaussianComb::combine(a, r, b, r * sign),
                (Some(a), None) => Ok(Some(a.scaled(r)?)),
                (None, Some(b)) => Ok(Some(b.scaled(r * sign)?)),
                (None, None) => Err(Error::Domain("empty qubit-oscillator state".into())),
            }
        };
        Ok(QubitOscState { branch0: combine(1.0)?, branch1: combine(-1.0)? })
    }

    /// Conditional displacement: branch 0 moves by `+d` along `axis`, branch 1
    /// by `-d` (the sigma_z eigenvalue signs).
    pub fn conditional_displacement(&self, d: f64, axis: Quadrature) -> Result<Self> {
        let b0 = self.branch0.as_ref().map(|b| b.displace(d, axis)).transpose()?;
        let b1 = self.branch1.as_ref().map(|b| b.displace(-d, axis)).transpose()?;
        Ok(QubitOscState { branch0: b0, branch1: b1 })
    }

    /// Swap the two branches (a qubit X / pi pulse).
    pub fn swap_branches(&self) -> Self {
        QubitOscState { branch0: self.branch1.clone(), branch1: self.branch0.clone() }
    }

    /// Project the qubit onto `outcome` and renormalise the surviving branch.
    ///
    /// Returns the outcome probability (the squared norm of the selected
    /// branch) and the collapsed oscillator state with its global phase fixed
    /// so the leftmost peak coefficient is positive real.
    pub fn measure(&self, outcome: u8) -> Result<(f64, GaussianComb)> {
        let joint = self.joint_norm_squared();
        if (joint - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!(
                "measurement requires joint norm 1, got {joint}"
            )));
        }
        let branch = match outcome {
            0 => &self.branch0,
            1 => &self.branch1,
            other => return Err(Error::Domain(format!("qubit outcome must be 0 or 1, got {other}"))),
        };
        let Some(branch) = branch else {
            return Err(Error::DegenerateMeasurement);
        };
        let prob = branch.norm_squared();
        if prob < 1e-300 {
            return Err(Error::DegenerateMeasurement);
        }
        Ok((prob, branch.normalize()?.canonical_phase()))
    }
}

/// The result of one completed protocol run or enumerated branch.
#[derive(Debug, Clone)]
pub struct OutcomeRecord {
    /// Qubit measurement outcomes, one per iteration performed.
    pub bits: Vec<u8>,
    /// Product of the per-step branch probabilities.
    pub probability: f64,
    /// Final normalised oscillator state.
    pub state: GaussianComb,
    /// Exact codeword normalisation factor: the coefficient magnitude scaled
    /// by `sqrt(2^n)` (one over the norm of the equal-weight peak sum).
    pub normalization: f64,
}

fn record_from(bits: Vec<u8>, probability: f64, state: GaussianComb) -> OutcomeRecord {
    let n = bits.len() as i32;
    let normalization = state.peaks()[0].coeff.norm() * 2f64.powi(n).sqrt();
    OutcomeRecord { bits, probability, state, normalization }
}

fn initial_state(config: &ProtocolConfig) -> Result<GaussianComb> {
    GaussianComb::squeezed_vacuum_on(config.comb_axis, config.delta)
}

/// Run one iteration on an oscillator state with a fresh `|0>` qubit and
/// project onto `outcome`.
fn step(state: &GaussianComb, config: &ProtocolConfig, k: u32, outcome: u8) -> Result<(f64, GaussianComb)> {
    QubitOscState::from_oscillator(state.clone())
        .hadamard()?
        .conditional_displacement(config.displacement(k), config.comb_axis)?
        .hadamard()?
        .measure(outcome)
}

/// Run the protocol along a fixed outcome sequence.
pub fn branch_for_bits(config: &ProtocolConfig, bits: &[u8]) -> Result<OutcomeRecord> {
    config.validate()?;
    let mut state = initial_state(config)?;
    let mut probability = 1.0;
    for (i, &bit) in bits.iter().enumerate() {
        let (p, collapsed) = step(&state, config, i as u32 + 1, bit)?;
        probability *= p;
        state = collapsed;
    }
    Ok(record_from(bits.to_vec(), probability, state))
}

/// Post-selected preparation: every measurement is required to give zero.
///
/// For target bit one the final state is the `2^n`-peak comb on odd multiples
/// of `alpha`; target bit zero adds a final `+alpha` displacement along the
/// comb axis. The success probability is the product of per-step branch
/// norms, `2^{-n}` up to exponentially small peak-overlap corrections.
pub fn prepare(config: &ProtocolConfig) -> Result<OutcomeRecord> {
    let zeros = vec![0u8; config.iterations as usize];
    let mut record = branch_for_bits(config, &zeros)?;
    if config.target_bit == LogicalBit::Zero {
        record.state = record.state.displace(config.alpha, config.comb_axis)?;
    }
    Ok(record)
}

/// All `2^n` outcome branches with exact probabilities.
///
/// Branch `i` carries the bit pattern `bits[k] = (i >> k) & 1`, so the
/// all-zeros branch comes first. Probabilities sum to one.
pub fn enumerate_branches(config: &ProtocolConfig) -> Result<Vec<OutcomeRecord>> {
    config.validate()?;
    if config.iterations > MAX_ENUMERATED_ITERATIONS {
        return Err(Error::Domain(format!(
            "enumeration capped at {MAX_ENUMERATED_ITERATIONS} iterations, got {}",
            config.iterations
        )));
    }
    let n = config.iterations;
    let count = 1usize << n;
    let results = par::map_indexed(count, |i| {
        let bits: Vec<u8> = (0..n).map(|k| ((i >> k) & 1) as u8).collect();
        branch_for_bits(config, &bits)
    });
    results.into_iter().collect()
}

/// One Monte Carlo run: outcomes drawn per step by the Born rule from a
/// ChaCha8 generator seeded with `config.seed`.
pub fn sample_run(config: &ProtocolConfig) -> Result<OutcomeRecord> {
    sample_run_seeded(config, config.seed)
}

fn sample_run_seeded(config: &ProtocolConfig, seed: u64) -> Result<OutcomeRecord> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = initial_state(config)?;
    let mut probability = 1.0;
    let mut bits = Vec::with_capacity(config.iterations as usize);
    for k in 1..=config.iterations {
        let pre = QubitOscState::from_oscillator(state)
            .hadamard()?
            .conditional_displacement(config.displacement(k), config.comb_axis)?
            .hadamard()?;
        let p0 = pre.branch0.as_ref().map_or(0.0, |b| b.norm_squared());
        let outcome: u8 = if rng.random::<f64>() < p0 { 0 } else { 1 };
        let (p, collapsed) = pre.measure(outcome)?;
        probability *= p;
        bits.push(outcome);
        state = collapsed;
    }
    Ok(record_from(bits, probability, state))
}

/// A batch of independent Monte Carlo runs; run `i` uses seed `seed + i`.
pub fn sample_runs(config: &ProtocolConfig, count: usize) -> Result<Vec<OutcomeRecord>> {
    config.validate()?;
    let results = par::map_indexed(count, |i| {
        sample_run_seeded(config, config.seed.wrapping_add(i as u64))
    });
    results.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{encoded_comb, encoded_norm_factor};
    use approx::assert_relative_eq;

    fn alpha() -> f64 {
        crate::self_dual_alpha()
    }

    fn config(n: u32) -> ProtocolConfig {
        ProtocolConfig::new(alpha(), 0.15, n).unwrap()
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn hadamard_on_bare_oscillator_splits_equally() {
        let psi = GaussianComb::squeezed_vacuum(0.15).unwrap();
        let h = QubitOscState::from_oscillator(psi.clone()).hadamard().unwrap();
        let b0 = h.branch0.unwrap();
        let b1 = h.branch1.unwrap();
        assert!(b0.distance(&psi.scaled(c(FRAC_1_SQRT_2)).unwrap()).unwrap() < 1e-15);
        assert!(b1.distance(&psi.scaled(c(FRAC_1_SQRT_2)).unwrap()).unwrap() < 1e-15);
    }

    #[test]
    fn hadamard_is_involutive() {
        let a = encoded_comb(LogicalBit::One, 2, 0.15, alpha()).unwrap();
        let b = encoded_comb(LogicalBit::Zero, 2, 0.15, alpha())
            .unwrap()
            .scaled(c(0.7))
            .unwrap();
        let s = QubitOscState { branch0: Some(a.clone()), branch1: Some(b.clone()) };
        let hh = s.hadamard().unwrap().hadamard().unwrap();
        assert!(hh.branch0.unwrap().distance(&a).unwrap() < 1e-12);
        assert!(hh.branch1.unwrap().distance(&b).unwrap() < 1e-12);
    }

    #[test]
    fn hadamard_recovers_components_from_sum_and_difference() {
        let psi = encoded_comb(LogicalBit::One, 1, 0.15, alpha()).unwrap();
        let phi = GaussianComb::squeezed_vacuum(0.15).unwrap();
        let r = c(FRAC_1_SQRT_2);
        let sum = GaussianComb::linear_combination(&psi, r, &phi, r).unwrap();
        let diff = GaussianComb::linear_combination(&psi, r, &phi, -r).unwrap();
        let s = QubitOscState { branch0: Some(sum), branch1: Some(diff) };
        let h = s.hadamard().unwrap();
        assert!(h.branch0.unwrap().distance(&psi).unwrap() < 1e-12);
        assert!(h.branch1.unwrap().distance(&phi).unwrap() < 1e-12);
    }

    #[test]
    fn conditional_displacement_on_plus_state_gives_cat_branches() {
        let a = alpha();
        let psi = GaussianComb::squeezed_vacuum(0.15).unwrap();
        let plus = QubitOscState::from_oscillator(psi.clone()).hadamard().unwrap();
        let displaced = plus.conditional_displacement(a, Quadrature::Position).unwrap();
        let b0 = displaced.branch0.unwrap();
        let b1 = displaced.branch1.unwrap();
        assert_relative_eq!(b0.peaks()[0].center, a, epsilon = 1e-12);
        assert_relative_eq!(b1.peaks()[0].center, -a, epsilon = 1e-12);
        assert_relative_eq!(b0.norm_squared(), 0.5, epsilon = 1e-12);
        assert_relative_eq!(b1.norm_squared(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn conditional_displacement_zero_and_inverse_pair_are_identity() {
        let s = QubitOscState::from_oscillator(GaussianComb::squeezed_vacuum(0.15).unwrap())
            .hadamard()
            .unwrap();
        let same = s.conditional_displacement(0.0, Quadrature::Position).unwrap();
        assert!(same.branch0.unwrap().distance(s.branch0.as_ref().unwrap()).unwrap() == 0.0);
        let round = s
            .conditional_displacement(0.9, Quadrature::Position)
            .unwrap()
            .conditional_displacement(-0.9, Quadrature::Position)
            .unwrap();
        assert!(
            round.branch0.unwrap().distance(s.branch0.as_ref().unwrap()).unwrap() < 1e-12
        );
    }

    #[test]
    fn first_iteration_measurement_probabilities_and_states() {
        let a = alpha();
        let cfg = config(1);
        let psi = GaussianComb::squeezed_vacuum(0.15).unwrap();
        let pre = QubitOscState::from_oscillator(psi)
            .hadamard()
            .unwrap()
            .conditional_displacement(cfg.displacement(1), Quadrature::Position)
            .unwrap()
            .hadamard()
            .unwrap();

        let (p0, even) = pre.measure(0).unwrap();
        assert_relative_eq!(p0, 0.5, epsilon = 1e-9);
        let expect_even = encoded_comb(LogicalBit::One, 1, 0.15, a).unwrap();
        assert!(even.distance(&expect_even).unwrap() < 1e-10);

        // Outcome one: the antisymmetric combination, phase-fixed so the
        // leftmost peak coefficient is positive (linear-algebra result).
        let (p1, odd) = pre.measure(1).unwrap();
        assert_relative_eq!(p1, 0.5, epsilon = 1e-9);
        assert_relative_eq!(p0 + p1, 1.0, epsilon = 1e-12);
        let g_m = GaussianComb::new(0.15, Quadrature::Position, vec![(-a, c(1.0))]).unwrap();
        let g_p = GaussianComb::new(0.15, Quadrature::Position, vec![(a, c(1.0))]).unwrap();
        let expect_odd = GaussianComb::linear_combination(&g_m, c(1.0), &g_p, c(-1.0))
            .unwrap()
            .normalize()
            .unwrap();
        assert!(odd.distance(&expect_odd).unwrap() < 1e-10);
    }

    #[test]
    fn measuring_an_empty_branch_is_degenerate() {
        let s = QubitOscState::from_oscillator(GaussianComb::squeezed_vacuum(0.15).unwrap());
        let (p, state) = s.measure(0).unwrap();
        assert_relative_eq!(p, 1.0, epsilon = 1e-12);
        assert!((state.norm() - 1.0).abs() < 1e-12);
        assert!(matches!(s.measure(1), Err(Error::DegenerateMeasurement)));
    }

    #[test]
    fn prepare_bit_one_matches_direct_codeword() {
        let cfg = config(3);
        let rec = prepare(&cfg).unwrap();
        assert_eq!(rec.bits, vec![0, 0, 0]);
        assert_relative_eq!(rec.probability, 0.125, epsilon = 1e-9);
        assert_eq!(rec.state.peaks().len(), 8);
        let direct = encoded_comb(LogicalBit::One, 3, 0.15, cfg.alpha).unwrap();
        assert!(rec.state.distance(&direct).unwrap() < 1e-10);
        let nf = encoded_norm_factor(3, 0.15, cfg.alpha).unwrap();
        assert_relative_eq!(rec.normalization, nf, epsilon = 1e-12);
    }

    #[test]
    fn prepare_zero_iterations_returns_squeezed_vacuum() {
        let cfg = config(0);
        let rec = prepare(&cfg).unwrap();
        assert!(rec.bits.is_empty());
        assert_relative_eq!(rec.probability, 1.0);
        let sq = GaussianComb::squeezed_vacuum(0.15).unwrap();
        assert!(rec.state.distance(&sq).unwrap() < 1e-14);
    }

    #[test]
    fn prepare_bit_zero_lands_on_displaced_lattice() {
        let a = alpha();
        let mut cfg = config(2);
        cfg.target_bit = LogicalBit::Zero;
        let rec = prepare(&cfg).unwrap();
        let got: Vec<f64> = rec.state.peaks().iter().map(|p| p.center / a).collect();
        for (g, e) in got.iter().zip([-2.0, 0.0, 2.0, 4.0]) {
            assert_relative_eq!(*g, e, epsilon = 1e-9);
        }
    }

    #[test]
    fn exact_success_probability_deviation_is_tiny() {
        for n in 1..=4 {
            let rec = prepare(&config(n)).unwrap();
            assert!(
                (rec.probability - 0.5f64.powi(n as i32)).abs() < 1e-12,
                "n={n}: {}",
                rec.probability
            );
        }
    }

    #[test]
    fn enumerate_n1_gives_half_half() {
        let mut cfg = config(1);
        cfg.mode = Mode::Deterministic;
        let recs = enumerate_branches(&cfg).unwrap();
        assert_eq!(recs.len(), 2);
        assert_relative_eq!(recs[0].probability, 0.5, epsilon = 1e-9);
        assert_relative_eq!(recs[1].probability, 0.5, epsilon = 1e-9);
    }

    #[test]
    fn enumerated_probabilities_sum_to_one() {
        for n in [3u32, 8] {
            let cfg = config(n);
            let recs = enumerate_branches(&cfg).unwrap();
            let total: f64 = recs.iter().map(|r| r.probability).sum();
            assert!((total - 1.0).abs() < 1e-10, "n={n}: {total}");
        }
    }

    #[test]
    fn branch_101_has_expected_sign_pattern() {
        // The ancilla branch for outcomes one, zero, one: eight peaks on the
        // odd lattice with signs + - + - - + - + after phase canonicalisation.
        let cfg = config(3);
        let rec = branch_for_bits(&cfg, &[1, 0, 1]).unwrap();
        assert_relative_eq!(rec.probability, 0.125, epsilon = 1e-9);
        let expect_signs = [1.0, -1.0, 1.0, -1.0, -1.0, 1.0, -1.0, 1.0];
        for (p, e) in rec.state.peaks().iter().zip(expect_signs) {
            assert!(p.coeff.im.abs() < 1e-12);
            assert!(p.coeff.re * e > 0.0, "sign mismatch at {}", p.center);
        }
        // Same peak lattice as the all-zeros branch.
        let zeros = branch_for_bits(&cfg, &[0, 0, 0]).unwrap();
        for (a, b) in rec.state.peaks().iter().zip(zeros.state.peaks()) {
            assert_relative_eq!(a.center, b.center, epsilon = 1e-9);
        }
    }

    #[test]
    fn all_branches_share_peak_magnitudes() {
        let cfg = config(3);
        for rec in enumerate_branches(&cfg).unwrap() {
            let m0 = rec.state.peaks()[0].coeff.norm();
            for p in rec.state.peaks() {
                assert_relative_eq!(p.coeff.norm(), m0, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn sampling_is_reproducible_per_seed() {
        let mut cfg = config(2);
        cfg.mode = Mode::Sample;
        cfg.seed = 42;
        let a = sample_run(&cfg).unwrap();
        let b = sample_run(&cfg).unwrap();
        assert_eq!(a.bits, b.bits);
        assert_relative_eq!(a.probability, b.probability);
        assert!(a.state.distance(&b.state).unwrap() == 0.0);
    }

    #[test]
    fn sampled_outcome_frequencies_follow_the_born_rule() {
        // 100_000 single-iteration runs: outcome-zero frequency within the
        // 3-sigma binomial band around one half.
        let mut cfg = config(1);
        cfg.mode = Mode::Sample;
        cfg.seed = 7;
        let runs = sample_runs(&cfg, 100_000).unwrap();
        let zeros = runs.iter().filter(|r| r.bits == [0]).count() as f64 / 1e5;
        assert!((zeros - 0.5).abs() < 0.005, "freq {zeros}");
    }

    #[test]
    fn sampled_all_zero_frequency_matches_two_to_minus_n() {
        let mut cfg = config(3);
        cfg.mode = Mode::Sample;
        cfg.seed = 11;
        let runs = sample_runs(&cfg, 100_000).unwrap();
        let all_zero = runs.iter().filter(|r| r.bits == [0, 0, 0]).count() as f64 / 1e5;
        assert!((all_zero - 0.125).abs() < 0.0031, "freq {all_zero}");
    }

    #[test]
    fn config_guards() {
        assert!(ProtocolConfig::new(alpha(), 0.15, MAX_ITERATIONS + 1).is_err());
        assert!(ProtocolConfig::new(alpha(), -0.1, 1).is_err());
        assert!(ProtocolConfig::new(0.0, 0.15, 1).is_err());
        let mut wide = config(1);
        wide.delta = 2.0;
        assert!(!wide.warnings().is_empty());
        let mut cfg = config(MAX_ENUMERATED_ITERATIONS + 1);
        cfg.mode = Mode::Deterministic;
        assert!(enumerate_branches(&cfg).is_err());
    }
}
