//! Temporal warping: the functions `τ: [1, F] → [1, F]` that retime a frame
//! sequence, plus seeded sampling and a classifier used as the round-trip
//! oracle.
//!
//! Five warp families are supported: identity, reverse, accelerate, freeze,
//! segmental slow motion, and zigzag (direction-reversing) motion. A warp is
//! evaluated on the integer source timeline `t_src = 1..F` and yields a
//! real-valued signal; frame application resolves non-integer timestamps by
//! nearest-frame lookup while the real signal is kept for embedding.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WarpError {
    #[error("time signal must be nonempty")]
    EmptySignal,
    #[error("time signal values must be finite and >= 1, got {0}")]
    BadTimestamp(f64),
    #[error("time signal value {value} outside [1, {max}]")]
    OutOfRange { value: f64, max: usize },
    #[error("frame count must be >= 1")]
    ZeroFrames,
    #[error("signal length {signal} does not match frame count {frames}")]
    LengthMismatch { signal: usize, frames: usize },
    #[error("invalid warp parameter: {0}")]
    BadParameter(String),
    #[error("warp family set must be nonempty")]
    EmptyFamilies,
}

pub type Result<T> = std::result::Result<T, WarpError>;

/// Per-frame animation timestamps, real-valued, each >= 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TimeSignal {
    values: Vec<f64>,
}

impl TimeSignal {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(WarpError::EmptySignal);
        }
        for &v in &values {
            if !v.is_finite() || v < 1.0 {
                return Err(WarpError::BadTimestamp(v));
            }
        }
        Ok(TimeSignal { values })
    }

    /// The forward reference timeline `1, 2, …, f`.
    pub fn forward(f: usize) -> Result<Self> {
        if f == 0 {
            return Err(WarpError::ZeroFrames);
        }
        Ok(TimeSignal {
            values: (1..=f).map(|v| v as f64).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Checks the upper range bound against a source frame count.
    pub fn check_range(&self, f_src: usize) -> Result<()> {
        for &v in &self.values {
            if v > f_src as f64 {
                return Err(WarpError::OutOfRange {
                    value: v,
                    max: f_src,
                });
            }
        }
        Ok(())
    }

    /// Nearest source frame index (0-based) for each timestamp.
    pub fn nearest_indices(&self) -> Vec<usize> {
        self.values.iter().map(|&v| v.round() as usize - 1).collect()
    }

    /// Shifts every timestamp by `offset` frames.
    pub fn shift(&self, offset: f64) -> Result<TimeSignal> {
        TimeSignal::new(self.values.iter().map(|v| v + offset).collect())
    }
}

/// One of the warp families, with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum WarpKind {
    Identity,
    Reverse,
    /// Playback at `factor`× speed; saturates at the last source frame.
    Accelerate { factor: f64 },
    /// Every output frame shows the source at time `at`.
    Freeze { at: f64 },
    /// Frames `start..=end` (1-based) advance at `factor` < 1 of normal speed.
    SlowSegment { start: usize, end: usize, factor: f64 },
    /// Triangle wave: direction reverses every `period/2` frames
    /// (`period` must be even).
    Zigzag { period: usize },
}

impl WarpKind {
    pub fn name(&self) -> &'static str {
        match self {
            WarpKind::Identity => "identity",
            WarpKind::Reverse => "reverse",
            WarpKind::Accelerate { .. } => "accelerate",
            WarpKind::Freeze { .. } => "freeze",
            WarpKind::SlowSegment { .. } => "slow_segment",
            WarpKind::Zigzag { .. } => "zigzag",
        }
    }
}

/// Canonical family names accepted by [`sample_warp`] and the CLI.
pub const FAMILY_NAMES: [&str; 6] = [
    "identity",
    "reverse",
    "accelerate",
    "freeze",
    "slow_segment",
    "zigzag",
];

/// A fully parameterized warp over `f` frames.
///
/// Serializes to `{kind, params, F, seed}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WarpSpec {
    #[serde(flatten)]
    pub kind: WarpKind,
    #[serde(rename = "F")]
    pub f: usize,
    pub seed: u64,
}

impl WarpSpec {
    pub fn new(kind: WarpKind, f: usize, seed: u64) -> Result<Self> {
        let spec = WarpSpec { kind, f, seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.f == 0 {
            return Err(WarpError::ZeroFrames);
        }
        let f = self.f;
        match self.kind {
            WarpKind::Identity | WarpKind::Reverse => Ok(()),
            WarpKind::Accelerate { factor } => {
                if factor <= 0.0 || !factor.is_finite() {
                    return Err(WarpError::BadParameter(format!(
                        "accelerate factor must be > 0, got {factor}"
                    )));
                }
                Ok(())
            }
            WarpKind::Freeze { at } => {
                if !(1.0..=f as f64).contains(&at) {
                    return Err(WarpError::BadParameter(format!(
                        "freeze frame {at} outside [1, {f}]"
                    )));
                }
                Ok(())
            }
            WarpKind::SlowSegment { start, end, factor } => {
                if !(1 <= start && start < end && end <= f) {
                    return Err(WarpError::BadParameter(format!(
                        "slow segment needs 1 <= start < end <= {f}, got [{start}, {end}]"
                    )));
                }
                if !(0.0 < factor && factor < 1.0) {
                    return Err(WarpError::BadParameter(format!(
                        "slow factor must be in (0, 1), got {factor}"
                    )));
                }
                Ok(())
            }
            WarpKind::Zigzag { period } => {
                if period < 2 || period % 2 != 0 {
                    return Err(WarpError::BadParameter(format!(
                        "zigzag period must be an even integer >= 2, got {period}"
                    )));
                }
                if period / 2 > f.saturating_sub(1) && f > 1 {
                    return Err(WarpError::BadParameter(format!(
                        "zigzag period {period} peaks outside [1, {f}]"
                    )));
                }
                Ok(())
            }
        }
    }
}

/// Evaluates `τ` on the source timeline `1..=F`.
pub fn eval_warp(spec: &WarpSpec) -> Result<TimeSignal> {
    spec.validate()?;
    let f = spec.f;
    let values: Vec<f64> = match spec.kind {
        WarpKind::Identity => (1..=f).map(|v| v as f64).collect(),
        WarpKind::Reverse => (1..=f).rev().map(|v| v as f64).collect(),
        WarpKind::Accelerate { factor } => (0..f)
            .map(|s| (1.0 + factor * s as f64).min(f as f64))
            .collect(),
        WarpKind::Freeze { at } => vec![at; f],
        WarpKind::SlowSegment { start, end, factor } => {
            let mut values = Vec::with_capacity(f);
            let mut t = 1.0;
            values.push(t);
            for frame in 2..=f {
                let step = if frame > start && frame <= end {
                    factor
                } else {
                    1.0
                };
                t += step;
                values.push(t);
            }
            values
        }
        WarpKind::Zigzag { period } => {
            let half = (period / 2) as f64;
            (0..f)
                .map(|s| {
                    let q = (s % period) as f64;
                    let tri = if q <= half { q } else { period as f64 - q };
                    1.0 + tri
                })
                .collect()
        }
    };
    debug_assert!(values.iter().all(|&v| 1.0 <= v && v <= f as f64));
    TimeSignal::new(values)
}

/// Retimes a frame sequence: output frame `f` is the input frame nearest to
/// `signal[f]`. Signal length must match the frame count and stay within the
/// frame range.
pub fn apply_warp_frames<T: Clone>(frames: &[T], signal: &TimeSignal) -> Result<Vec<T>> {
    if frames.len() != signal.len() {
        return Err(WarpError::LengthMismatch {
            signal: signal.len(),
            frames: frames.len(),
        });
    }
    signal.check_range(frames.len())?;
    Ok(signal
        .nearest_indices()
        .into_iter()
        .map(|i| frames[i].clone())
        .collect())
}

/// Draws a warp spec deterministically from `seed`. Parameter ranges:
/// acceleration factor in `[1.25, 3]`, slow factor in `[0.25, 0.8]`, zigzag
/// period even in `[8, 40]` (clamped to the frame count), freeze frame
/// integer in `[1, F]`.
pub fn sample_warp(seed: u64, f: usize, families: &[&str]) -> Result<WarpSpec> {
    if f == 0 {
        return Err(WarpError::ZeroFrames);
    }
    let mut pool: Vec<&str> = Vec::new();
    for &family in families {
        if !FAMILY_NAMES.contains(&family) {
            return Err(WarpError::BadParameter(format!(
                "unknown warp family {family:?}"
            )));
        }
        if !pool.contains(&family) {
            pool.push(family);
        }
    }
    if pool.is_empty() {
        return Err(WarpError::EmptyFamilies);
    }
    pool.sort_unstable();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let family = *pool.choose(&mut rng).expect("nonempty pool");
    let kind = match family {
        "identity" => WarpKind::Identity,
        "reverse" => WarpKind::Reverse,
        "accelerate" => WarpKind::Accelerate {
            factor: rng.gen_range(1.25..=3.0),
        },
        "freeze" => WarpKind::Freeze {
            at: rng.gen_range(1..=f) as f64,
        },
        "slow_segment" => {
            let start = rng.gen_range(1..f.max(2));
            let end = rng.gen_range(start + 1..=f);
            WarpKind::SlowSegment {
                start,
                end,
                factor: rng.gen_range(0.25..=0.8),
            }
        }
        "zigzag" => {
            let max_half = ((f.saturating_sub(1)).max(1)).min(20);
            let min_half = 4.min(max_half);
            let half = rng.gen_range(min_half..=max_half);
            WarpKind::Zigzag { period: 2 * half }
        }
        _ => unreachable!("validated above"),
    };
    WarpSpec::new(kind, f, seed)
}

/// Result of [`classify_signal`]: a recovered warp kind or `Freeform`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Classification {
    Known(WarpKind),
    Freeform,
}

impl Classification {
    pub fn name(&self) -> &'static str {
        match self {
            Classification::Known(kind) => kind.name(),
            Classification::Freeform => "freeform",
        }
    }
}

const CLASSIFY_EPS: f64 = 1e-9;

fn approx(a: f64, b: f64) -> bool {
    (a - b).abs() < CLASSIFY_EPS
}

/// Recovers the warp family (and parameters) that produced a signal, or
/// `Freeform` when no canonical family matches. Inverse of [`eval_warp`]
/// on every canonical family; used as the round-trip oracle.
pub fn classify_signal(signal: &TimeSignal) -> Classification {
    let v = signal.values();
    let f = v.len();

    // Constant signal: freeze (checked first; identity/reverse of F=1 are
    // also constant and indistinguishable).
    if v.iter().all(|&x| approx(x, v[0])) {
        return Classification::Known(WarpKind::Freeze { at: v[0] });
    }

    let diffs: Vec<f64> = v.windows(2).map(|w| w[1] - w[0]).collect();

    if approx(v[0], 1.0) && diffs.iter().all(|&d| approx(d, 1.0)) {
        return Classification::Known(WarpKind::Identity);
    }
    if approx(v[0], f as f64) && diffs.iter().all(|&d| approx(d, -1.0)) {
        return Classification::Known(WarpKind::Reverse);
    }

    if let Some(kind) = classify_accelerate(v, &diffs) {
        return Classification::Known(kind);
    }
    if let Some(kind) = classify_slow_segment(v, &diffs) {
        return Classification::Known(kind);
    }
    if let Some(kind) = classify_zigzag(v, &diffs) {
        return Classification::Known(kind);
    }
    Classification::Freeform
}

fn classify_accelerate(v: &[f64], diffs: &[f64]) -> Option<WarpKind> {
    let f = v.len();
    if !approx(v[0], 1.0) || diffs.is_empty() {
        return None;
    }
    let factor = diffs[0];
    if factor <= 1.0 + CLASSIFY_EPS {
        return None;
    }
    // Linear ramp 1 + factor·s, then saturation at F.
    let mut saturated = false;
    for (s, &x) in v.iter().enumerate() {
        let ideal = 1.0 + factor * s as f64;
        if !saturated && approx(x, ideal) && x <= f as f64 + CLASSIFY_EPS {
            continue;
        }
        saturated = true;
        if !approx(x, f as f64) {
            return None;
        }
    }
    saturated.then_some(WarpKind::Accelerate { factor })
}

fn classify_slow_segment(v: &[f64], diffs: &[f64]) -> Option<WarpKind> {
    let f = v.len();
    if !approx(v[0], 1.0) {
        return None;
    }
    // Diff pattern: 1…1, c…c, 1…1 with exactly one contiguous run of
    // 0 < c < 1. The slow run over diffs [i..j] means frames start=i+1,
    // end=j+2 in 1-based frame numbers.
    let mut run_start = None;
    let mut run_end = None;
    let mut c = None;
    for (i, &d) in diffs.iter().enumerate() {
        if approx(d, 1.0) {
            if run_start.is_some() && run_end.is_none() {
                run_end = Some(i);
            }
            continue;
        }
        if d <= CLASSIFY_EPS || d >= 1.0 {
            return None;
        }
        match (run_start, run_end, c) {
            (None, _, _) => {
                run_start = Some(i);
                c = Some(d);
            }
            (Some(_), None, Some(cv)) if approx(d, cv) => {}
            _ => return None,
        }
    }
    let start = run_start? + 1;
    let end = run_end.unwrap_or(diffs.len()) + 1;
    let factor = c?;
    (start < end && end <= f).then_some(WarpKind::SlowSegment { start, end, factor })
}

fn classify_zigzag(v: &[f64], diffs: &[f64]) -> Option<WarpKind> {
    if !approx(v[0], 1.0) || diffs.len() < 2 {
        return None;
    }
    if !diffs.iter().all(|&d| approx(d.abs(), 1.0)) {
        return None;
    }
    if diffs.iter().all(|&d| d > 0.0) || diffs.iter().all(|&d| d < 0.0) {
        return None; // pure identity/reverse, handled earlier
    }
    // First monotone run length = period/2.
    let first_run = diffs
        .iter()
        .take_while(|&&d| d.signum() == diffs[0].signum())
        .count();
    let period = 2 * first_run;
    let candidate = WarpSpec {
        kind: WarpKind::Zigzag { period },
        f: v.len(),
        seed: 0,
    };
    if candidate.validate().is_err() {
        return None;
    }
    let reference = eval_warp(&candidate).ok()?;
    v.iter()
        .zip(reference.values())
        .all(|(&a, &b)| approx(a, b))
        .then_some(WarpKind::Zigzag { period })
}

/// Number of sign flips in the sequence of consecutive differences.
pub fn direction_changes(signal: &TimeSignal) -> usize {
    let diffs: Vec<f64> = signal.values().windows(2).map(|w| w[1] - w[0]).collect();
    diffs
        .windows(2)
        .filter(|w| w[0].signum() != w[1].signum() && w[0] != 0.0 && w[1] != 0.0)
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn spec(kind: WarpKind, f: usize) -> WarpSpec {
        WarpSpec::new(kind, f, 0).unwrap()
    }

    #[test]
    fn reverse_definition() {
        let signal = eval_warp(&spec(WarpKind::Reverse, 81)).unwrap();
        let expected: Vec<f64> = (1..=81).rev().map(|v| v as f64).collect();
        assert_eq!(signal.values(), expected.as_slice());
    }

    #[test]
    fn freeze_at_40() {
        let signal = eval_warp(&spec(WarpKind::Freeze { at: 40.0 }, 81)).unwrap();
        assert!(signal.values().iter().all(|&v| v == 40.0));
    }

    #[test]
    fn zigzag_period_4() {
        let signal = eval_warp(&spec(WarpKind::Zigzag { period: 4 }, 5)).unwrap();
        assert_eq!(signal.values(), &[1.0, 2.0, 3.0, 2.0, 1.0]);
    }

    #[test]
    fn slow_segment_shape() {
        let signal = eval_warp(&spec(
            WarpKind::SlowSegment {
                start: 3,
                end: 5,
                factor: 0.5,
            },
            8,
        ))
        .unwrap();
        // normal, normal, slow, slow, normal, normal, normal steps
        assert_eq!(signal.values(), &[1.0, 2.0, 3.0, 3.5, 4.0, 5.0, 6.0, 7.0]);
    }

    #[test]
    fn accelerate_saturates() {
        let signal = eval_warp(&spec(WarpKind::Accelerate { factor: 2.0 }, 6)).unwrap();
        assert_eq!(signal.values(), &[1.0, 3.0, 5.0, 6.0, 6.0, 6.0]);
    }

    #[test]
    fn apply_warp_identity_and_reverse() {
        let frames: Vec<u32> = (0..10).collect();
        let id = eval_warp(&spec(WarpKind::Identity, 10)).unwrap();
        assert_eq!(apply_warp_frames(&frames, &id).unwrap(), frames);

        let rev = eval_warp(&spec(WarpKind::Reverse, 10)).unwrap();
        let reversed = apply_warp_frames(&frames, &rev).unwrap();
        let mut expected = frames.clone();
        expected.reverse();
        assert_eq!(reversed, expected);
    }

    #[test]
    fn apply_warp_freeze_indexes_directly() {
        let frames: Vec<u32> = (0..81).collect();
        let frozen = eval_warp(&spec(WarpKind::Freeze { at: 40.0 }, 81)).unwrap();
        let out = apply_warp_frames(&frames, &frozen).unwrap();
        assert!(out.iter().all(|&v| v == frames[39]));
    }

    #[test]
    fn apply_warp_rejects_length_mismatch() {
        let frames: Vec<u32> = (0..5).collect();
        let signal = TimeSignal::forward(6).unwrap();
        assert!(matches!(
            apply_warp_frames(&frames, &signal),
            Err(WarpError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn sample_warp_is_deterministic() {
        let families = ["reverse", "freeze", "zigzag"];
        let a = sample_warp(123, 81, &families).unwrap();
        let b = sample_warp(123, 81, &families).unwrap();
        assert_eq!(a, b);
        // order-independent
        let c = sample_warp(123, 81, &["zigzag", "freeze", "reverse"]).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn sample_warp_single_family() {
        for seed in 0..50 {
            let s = sample_warp(seed, 81, &["freeze"]).unwrap();
            assert!(matches!(s.kind, WarpKind::Freeze { .. }));
        }
    }

    #[test]
    fn seed_sweep_covers_all_families() {
        let mut seen = std::collections::HashSet::new();
        for seed in 0..1000 {
            let s = sample_warp(seed, 81, &FAMILY_NAMES).unwrap();
            seen.insert(s.kind.name());
        }
        assert_eq!(seen.len(), FAMILY_NAMES.len());
    }

    #[test]
    fn sample_warp_rejects_empty_families() {
        assert!(matches!(
            sample_warp(0, 81, &[]),
            Err(WarpError::EmptyFamilies)
        ));
    }

    #[test]
    fn classify_canonical_signals() {
        let id = TimeSignal::forward(81).unwrap();
        assert_eq!(
            classify_signal(&id),
            Classification::Known(WarpKind::Identity)
        );
        let rev = eval_warp(&spec(WarpKind::Reverse, 81)).unwrap();
        assert_eq!(
            classify_signal(&rev),
            Classification::Known(WarpKind::Reverse)
        );
        let frozen = TimeSignal::new(vec![40.0; 81]).unwrap();
        assert_eq!(
            classify_signal(&frozen),
            Classification::Known(WarpKind::Freeze { at: 40.0 })
        );
    }

    #[test]
    fn classify_rejects_freeform() {
        let signal = TimeSignal::new(vec![1.0, 5.0, 2.0, 9.0]).unwrap();
        assert_eq!(classify_signal(&signal), Classification::Freeform);
    }

    #[test]
    fn warp_spec_json_round_trip() {
        let s = spec(
            WarpKind::SlowSegment {
                start: 10,
                end: 30,
                factor: 0.5,
            },
            81,
        );
        let json = serde_json::to_string(&s).unwrap();
        assert!(json.contains("\"kind\":\"slow_segment\""));
        assert!(json.contains("\"params\""));
        assert!(json.contains("\"F\":81"));
        let back: WarpSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn zigzag_direction_change_count() {
        for (f, period) in [(5usize, 4usize), (9, 4), (81, 8), (81, 12), (81, 40)] {
            let signal = eval_warp(&spec(WarpKind::Zigzag { period }, f)).unwrap();
            let expected = (f - 2) / (period / 2);
            assert_eq!(direction_changes(&signal), expected, "f={f} period={period}");
        }
    }

    #[test]
    fn reverse_is_involution_on_frames() {
        let frames: Vec<u32> = (0..81).collect();
        let rev = eval_warp(&spec(WarpKind::Reverse, 81)).unwrap();
        let once = apply_warp_frames(&frames, &rev).unwrap();
        let twice = apply_warp_frames(&once, &rev).unwrap();
        assert_eq!(twice, frames);
    }

    #[test]
    fn freeze_variance_is_zero() {
        let signal = eval_warp(&spec(WarpKind::Freeze { at: 17.0 }, 64)).unwrap();
        let mean = signal.values().iter().sum::<f64>() / signal.len() as f64;
        let var = signal
            .values()
            .iter()
            .map(|v| (v - mean).powi(2))
            .sum::<f64>()
            / signal.len() as f64;
        assert_abs_diff_eq!(var, 0.0);
    }

    proptest! {
        #[test]
        fn eval_warp_stays_in_range(seed in 0u64..2000) {
            let s = sample_warp(seed, 81, &FAMILY_NAMES).unwrap();
            let signal = eval_warp(&s).unwrap();
            prop_assert_eq!(signal.len(), 81);
            for &v in signal.values() {
                prop_assert!((1.0..=81.0).contains(&v));
            }
        }

        #[test]
        fn classify_round_trips_sampled_warps(seed in 0u64..2000) {
            let s = sample_warp(seed, 81, &FAMILY_NAMES).unwrap();
            let signal = eval_warp(&s).unwrap();
            let got = classify_signal(&signal);
            match got {
                Classification::Known(kind) => prop_assert_eq!(kind.name(), s.kind.name()),
                Classification::Freeform => prop_assert!(false, "freeform for {:?}", s),
            }
        }
    }
}
