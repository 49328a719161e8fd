//! Lowering a protocol configuration to an abstract ion-trap pulse sequence.
//!
//! Each iteration compiles to a pi/2 pulse (Hadamard), a displacement pulse
//! on the excited-state branch, a pi pulse swapping the internal states, a
//! second displacement pulse, a closing pi/2 pulse, and a fluorescence
//! measurement. Pulses are idealised to zero duration; all physical time
//! lives in explicit waits so that every measurement lands on a whole trap
//! period. The relative optical phases of the two displacement pulses (pi,
//! then 0) make the sandwich equal to the conditional displacement
//! `exp(-i d p sigma_z)` up to a qubit flip absorbed by the final
//! measurement.
//!
//! Fluorescence convention: a bright ion is outcome one, absence of
//! fluorescence is outcome zero.

use serde::{Deserialize, Serialize};

use crate::comb::GaussianComb;
use crate::error::{Error, Result};
use crate::protocol::{OutcomeRecord, ProtocolConfig, QubitOscState};

/// Kinds of abstract trap operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PulseKind {
    #[serde(rename = "pi_half_pulse")]
    PiHalfPulse,
    #[serde(rename = "pi_pulse")]
    PiPulse,
    #[serde(rename = "displacement_pulse")]
    DisplacementPulse,
    #[serde(rename = "measure")]
    Measure,
    #[serde(rename = "wait")]
    Wait,
}

/// One timed trap operation. Times are in trap periods; displacement
/// magnitudes are in units of the lattice constant alpha.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseOp {
    pub t: f64,
    pub kind: PulseKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub magnitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
}

impl PulseOp {
    fn pulse(t: f64, kind: PulseKind, phase: f64) -> Self {
        PulseOp { t, kind, magnitude: None, phase: Some(phase), duration: None }
    }

    fn displacement(t: f64, magnitude: f64, phase: f64) -> Self {
        PulseOp { t, kind: PulseKind::DisplacementPulse, magnitude: Some(magnitude), phase: Some(phase), duration: None }
    }

    fn wait(t: f64, duration: f64) -> Self {
        PulseOp { t, kind: PulseKind::Wait, magnitude: None, phase: None, duration: Some(duration) }
    }

    fn measure(t: f64) -> Self {
        PulseOp { t, kind: PulseKind::Measure, magnitude: None, phase: None, duration: None }
    }
}

/// Configuration echoed into emitted schedules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleConfig {
    pub alpha: f64,
    pub delta: f64,
    pub n: u32,
    pub mode: String,
    pub seed: u64,
}

/// An ordered, trap-period-aligned pulse program.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSchedule {
    pub version: String,
    pub config: ScheduleConfig,
    pub ops: Vec<PulseOp>,
}

impl PulseSchedule {
    /// Total duration in trap periods (the last timestamp).
    pub fn total_duration(&self) -> f64 {
        self.ops.iter().map(|o| o.t).fold(0.0, f64::max)
    }
}

/// Compile the preparation sequence for `config.iterations` iterations.
///
/// Iteration `k` (1-based) occupies the trap period `(k-1, k]`: five
/// zero-duration pulses at `t = k-1` with displacement magnitude `2^{k-1}`,
/// a unit wait for the free evolution, and a measurement exactly at `t = k`.
pub fn compile(config: &ProtocolConfig) -> Result<PulseSchedule> {
    config.validate()?;
    if config.iterations == 0 {
        return Err(Error::Domain("cannot compile an empty schedule (n = 0)".into()));
    }
    let mut ops = Vec::with_capacity(7 * config.iterations as usize);
    for k in 1..=config.iterations {
        let t0 = (k - 1) as f64;
        let magnitude = 2f64.powi(k as i32 - 1);
        ops.push(PulseOp::pulse(t0, PulseKind::PiHalfPulse, 0.0));
        ops.push(PulseOp::displacement(t0, magnitude, std::f64::consts::PI));
        ops.push(PulseOp::pulse(t0, PulseKind::PiPulse, 0.0));
        ops.push(PulseOp::displacement(t0, magnitude, 0.0));
        ops.push(PulseOp::pulse(t0, PulseKind::PiHalfPulse, 0.0));
        ops.push(PulseOp::wait(t0, 1.0));
        ops.push(PulseOp::measure(k as f64));
    }
    Ok(PulseSchedule {
        version: "1".into(),
        config: ScheduleConfig {
            alpha: config.alpha,
            delta: config.delta,
            n: config.iterations,
            mode: config.mode.label().into(),
            seed: config.seed,
        },
        ops,
    })
}

/// Structural checks on a schedule. Returns human-readable violations; an
/// empty list means the schedule is well-formed.
pub fn validate(schedule: &PulseSchedule) -> Vec<String> {
    let mut violations = Vec::new();
    for pair in schedule.ops.windows(2) {
        if pair[1].t < pair[0].t {
            violations.push(format!(
                "timestamps out of order: {} after {}",
                pair[1].t, pair[0].t
            ));
        }
    }
    let mut prev_magnitude: Option<f64> = None;
    let mut iteration = 0usize;
    let pulses: Vec<&PulseOp> = schedule.ops.iter().filter(|o| o.kind != PulseKind::Wait).collect();
    for chunk in pulses.chunks(6) {
        iteration += 1;
        if chunk.len() < 6 {
            violations.push(format!("iteration {iteration}: incomplete pattern ({} ops)", chunk.len()));
            continue;
        }
        let kinds: Vec<PulseKind> = chunk.iter().map(|o| o.kind).collect();
        let expected = [
            PulseKind::PiHalfPulse,
            PulseKind::DisplacementPulse,
            PulseKind::PiPulse,
            PulseKind::DisplacementPulse,
            PulseKind::PiHalfPulse,
            PulseKind::Measure,
        ];
        if kinds != expected {
            violations.push(format!("iteration {iteration}: pattern broken ({kinds:?})"));
            continue;
        }
        let m1 = chunk[1].magnitude.unwrap_or(f64::NAN);
        let m2 = chunk[3].magnitude.unwrap_or(f64::NAN);
        if (m1 - m2).abs() > 1e-12 {
            violations.push(format!(
                "iteration {iteration}: displacement magnitudes differ ({m1} vs {m2})"
            ));
        }
        if let Some(prev) = prev_magnitude {
            if (m1 - 2.0 * prev).abs() > 1e-12 {
                violations.push(format!(
                    "iteration {iteration}: magnitude not doubling ({prev} then {m1})"
                ));
            }
        }
        prev_magnitude = Some(m1);
        let tm = chunk[5].t;
        if (tm - tm.round()).abs() > 1e-9 {
            violations.push(format!("iteration {iteration}: measure off-period at t = {tm}"));
        }
    }
    violations
}

/// How the interpreter resolves measurements.
#[derive(Debug, Clone, Copy)]
pub enum OutcomePolicy<'a> {
    /// Post-selection on the zero outcome every iteration.
    AllZeros,
    /// A fixed outcome sequence, one bit per measurement.
    Bits(&'a [u8]),
}

/// Execute a schedule through the abstract pulse semantics.
///
/// pi/2 pulses act as Hadamards, pi pulses swap the internal states, and a
/// displacement pulse of magnitude `m` and optical phase `phi` (0 or pi)
/// displaces the excited-state branch by `cos(phi) * m * alpha`. Measurements
/// collapse per the outcome policy and reset the qubit to the ground state.
pub fn interpret(
    schedule: &PulseSchedule,
    config: &ProtocolConfig,
    policy: OutcomePolicy<'_>,
) -> Result<OutcomeRecord> {
    let violations = validate(schedule);
    if !violations.is_empty() {
        return Err(Error::InvalidSchedule(violations.join("; ")));
    }
    let mut state = QubitOscState::from_oscillator(GaussianComb::squeezed_vacuum_on(
        config.comb_axis,
        config.delta,
    )?);
    let mut bits = Vec::new();
    let mut probability = 1.0;
    for op in &schedule.ops {
        match op.kind {
            PulseKind::Wait => {}
            PulseKind::PiHalfPulse => state = state.hadamard()?,
            PulseKind::PiPulse => state = state.swap_branches(),
            PulseKind::DisplacementPulse => {
                let phase = op.phase.unwrap_or(0.0);
                if phase.sin().abs() > 1e-9 {
                    return Err(Error::Domain(format!(
                        "displacement phase {phase} has no conditional-displacement semantics"
                    )));
                }
                let m = op.magnitude.ok_or_else(|| {
                    Error::Domain("displacement pulse without a magnitude".into())
                })?;
                let d = phase.cos() * m * config.alpha;
                let moved = state.branch1.as_ref().map(|b| b.displace(d, config.comb_axis)).transpose()?;
                state = QubitOscState { branch0: state.branch0.clone(), branch1: moved };
            }
            PulseKind::Measure => {
                let outcome = match policy {
                    OutcomePolicy::AllZeros => 0,
                    OutcomePolicy::Bits(bits_seq) => *bits_seq.get(bits.len()).ok_or_else(|| {
                        Error::Domain("outcome policy ran out of bits".into())
                    })?,
                };
                let (p, collapsed) = state.measure(outcome)?;
                probability *= p;
                bits.push(outcome);
                state = QubitOscState::from_oscillator(collapsed);
            }
        }
    }
    let final_state = state
        .branch0
        .ok_or_else(|| Error::Domain("schedule left no ground-state branch".into()))?;
    let n = bits.len() as i32;
    let normalization = final_state.peaks()[0].coeff.norm() * 2f64.powi(n).sqrt();
    Ok(OutcomeRecord { bits, probability, state: final_state, normalization })
}

/// Serialise to the versioned JSON schema
/// `{version, config:{alpha,delta,n,mode,seed}, ops:[{t,kind,magnitude?,phase?,duration?}]}`.
/// Refuses schedules that fail validation.
pub fn emit_json(schedule: &PulseSchedule) -> Result<String> {
    let violations = validate(schedule);
    if !violations.is_empty() {
        return Err(Error::InvalidSchedule(violations.join("; ")));
    }
    serde_json::to_string_pretty(schedule)
        .map_err(|e| Error::Domain(format!("serialisation failed: {e}")))
}

/// Parse the JSON schema back into a schedule.
pub fn parse_json(text: &str) -> Result<PulseSchedule> {
    serde_json::from_str(text).map_err(|e| Error::Domain(format!("bad schedule JSON: {e}")))
}

/// Human-readable timeline, ops in timestamp order, magnitudes in units of
/// alpha. Refuses schedules that fail validation.
pub fn emit_text(schedule: &PulseSchedule) -> Result<String> {
    let violations = validate(schedule);
    if !violations.is_empty() {
        return Err(Error::InvalidSchedule(violations.join("; ")));
    }
    let mut ops: Vec<&PulseOp> = schedule.ops.iter().collect();
    ops.sort_by(|a, b| a.t.total_cmp(&b.t));
    let mut out = String::new();
    out.push_str(&format!(
        "# pulse schedule v{} | n = {} | alpha = {:.12} | delta = {:.12}\n",
        schedule.version, schedule.config.n, schedule.config.alpha, schedule.config.delta
    ));
    out.push_str("# fluorescence on measure means outcome 1\n");
    for op in ops {
        let line = match op.kind {
            PulseKind::PiHalfPulse => format!("t={:8.3}  pi/2 pulse   phase={:.3}", op.t, op.phase.unwrap_or(0.0)),
            PulseKind::PiPulse => format!("t={:8.3}  pi pulse     phase={:.3}", op.t, op.phase.unwrap_or(0.0)),
            PulseKind::DisplacementPulse => format!(
                "t={:8.3}  displacement magnitude={:.3} alpha  phase={:.3}",
                op.t,
                op.magnitude.unwrap_or(f64::NAN),
                op.phase.unwrap_or(0.0)
            ),
            PulseKind::Wait => format!("t={:8.3}  wait         duration={:.3}", op.t, op.duration.unwrap_or(0.0)),
            PulseKind::Measure => format!("t={:8.3}  measure      (fluorescence = outcome 1)", op.t),
        };
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{branch_for_bits, prepare};
    use approx::assert_relative_eq;

    fn config(n: u32) -> ProtocolConfig {
        ProtocolConfig::new(crate::self_dual_alpha(), 0.15, n).unwrap()
    }

    #[test]
    fn single_iteration_layout() {
        let s = compile(&config(1)).unwrap();
        let pulses: Vec<&PulseOp> = s.ops.iter().filter(|o| o.kind != PulseKind::Wait).collect();
        assert_eq!(pulses.len(), 6);
        let measures: Vec<&PulseOp> = s.ops.iter().filter(|o| o.kind == PulseKind::Measure).collect();
        assert_eq!(measures.len(), 1);
        assert_relative_eq!(measures[0].t, 1.0);
        assert_relative_eq!(s.total_duration(), 1.0);
    }

    #[test]
    fn displacement_magnitudes_double_per_iteration() {
        let s = compile(&config(3)).unwrap();
        let mags: Vec<f64> = s
            .ops
            .iter()
            .filter(|o| o.kind == PulseKind::DisplacementPulse)
            .map(|o| o.magnitude.unwrap())
            .collect();
        assert_eq!(mags, vec![1.0, 1.0, 2.0, 2.0, 4.0, 4.0]);
        assert_relative_eq!(s.total_duration(), 3.0);
        assert_eq!(s.ops.len(), 7 * 3);
    }

    #[test]
    fn compiled_schedules_validate_cleanly() {
        for n in 1..=5 {
            let s = compile(&config(n)).unwrap();
            assert!(validate(&s).is_empty(), "n={n}");
        }
    }

    #[test]
    fn compiling_zero_iterations_is_an_error() {
        assert!(compile(&config(0)).is_err());
    }

    #[test]
    fn off_period_measure_is_flagged() {
        let mut s = compile(&config(1)).unwrap();
        for op in &mut s.ops {
            if op.kind == PulseKind::Measure {
                op.t = 1.3;
            }
        }
        let violations = validate(&s);
        assert_eq!(violations.len(), 1);
        assert!(violations[0].contains("measure off-period"), "{violations:?}");
        assert!(emit_json(&s).is_err());
    }

    #[test]
    fn non_doubling_magnitudes_are_flagged() {
        let mut s = compile(&config(3)).unwrap();
        for op in &mut s.ops {
            if op.kind == PulseKind::DisplacementPulse && op.magnitude == Some(4.0) {
                op.magnitude = Some(3.0);
            }
        }
        let violations = validate(&s);
        assert_eq!(violations.len(), 1);
        assert!(violations[0].contains("magnitude not doubling"), "{violations:?}");
    }

    #[test]
    fn json_round_trip_is_field_exact() {
        let s = compile(&config(2)).unwrap();
        let text = emit_json(&s).unwrap();
        let back = parse_json(&text).unwrap();
        assert_eq!(s, back);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["version"], "1");
        assert!(v["config"]["alpha"].is_number());
        assert_eq!(v["ops"][0]["kind"], "pi_half_pulse");
        // optional fields absent where inapplicable
        assert!(v["ops"][0].get("magnitude").is_none());
    }

    #[test]
    fn text_format_lists_ops_in_time_order() {
        let s = compile(&config(2)).unwrap();
        let text = emit_text(&s).unwrap();
        let mut last_t = -1.0;
        let mut measure_lines = 0;
        for line in text.lines().filter(|l| l.starts_with("t=")) {
            let t: f64 = line[2..10].trim().parse().unwrap();
            assert!(t >= last_t);
            last_t = t;
            if line.contains("measure") {
                measure_lines += 1;
            }
        }
        assert_eq!(measure_lines, 2);
        assert!(text.contains("magnitude=2.000 alpha"));
    }

    #[test]
    fn interpreted_schedule_reproduces_the_postselected_state() {
        let cfg = config(3);
        let s = compile(&cfg).unwrap();
        let rec = interpret(&s, &cfg, OutcomePolicy::AllZeros).unwrap();
        let reference = prepare(&cfg).unwrap();
        assert_eq!(rec.bits, vec![0, 0, 0]);
        assert!((rec.probability - reference.probability).abs() < 1e-12);
        assert!(rec.state.distance(&reference.state).unwrap() < 1e-10);
    }

    #[test]
    fn interpreted_schedule_reproduces_arbitrary_branches() {
        let cfg = config(3);
        let s = compile(&cfg).unwrap();
        let bits = [1u8, 0, 1];
        let rec = interpret(&s, &cfg, OutcomePolicy::Bits(&bits)).unwrap();
        let reference = branch_for_bits(&cfg, &bits).unwrap();
        assert!((rec.probability - reference.probability).abs() < 1e-12);
        assert!(rec.state.distance(&reference.state).unwrap() < 1e-10);
    }

    #[test]
    fn compile_is_deterministic() {
        let a = compile(&config(4)).unwrap();
        let b = compile(&config(4)).unwrap();
        assert_eq!(a, b);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn emit_parse_round_trip(n in 1u32..8) {
                let s = compile(&config(n)).unwrap();
                prop_assert_eq!(parse_json(&emit_json(&s).unwrap()).unwrap(), s);
            }
        }
    }
}
