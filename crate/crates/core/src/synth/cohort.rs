use std::collections::BTreeMap;

use chrono::{Duration, NaiveDate};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use super::stream::{sample_frame, StreamConfig};
use super::{child_seed, rng_for, round4, SynthError};
use crate::data::{
    AgeGroup, Cohort, FrameFeatures, FrameLabel, Participant, ParticipantInfo, Recording, Sex, Shift, ShiftInfo,
    ShiftType, SurveyRecord, WorkUnit, IRB_RANGE, MAX_FRAMES, MFCC_DIM, STAI_RANGE,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CohortConfig {
    pub seed: u64,
    pub units: Vec<WorkUnit>,
    pub shift_types: Vec<ShiftType>,
    /// Participants per (unit, shift type) cell.
    pub n_per_cell: usize,
    pub shifts_per_participant: usize,
    pub shift_hours: f64,
    pub frames_per_recording: usize,
    /// Inclusive FG frame range of recordings inside a session.
    pub session_fg_frames: (usize, usize),
    /// Inclusive FG frame range of recordings between sessions.
    pub gap_fg_frames: (usize, usize),
    /// Chance that a minute outside sessions still yields a recording.
    pub gap_recording_prob: f64,
    /// Night-shift population mean of sessions per hour.
    pub base_rate: f64,
    pub day_night_rate_delta: f64,
    pub participant_rate_sd: f64,
    /// Mean session length in minutes before unit deltas.
    pub base_duration_min: f64,
    pub participant_duration_sd: f64,
    pub unit_duration_deltas: BTreeMap<WorkUnit, f64>,
    /// Latent arousal of second-half minus first-half recordings on night shifts.
    pub arousal_halflife_slope: f64,
    /// Correlation between latent speaking rate and IRB total, per unit.
    pub freq_irb_slope: BTreeMap<WorkUnit, f64>,
    /// Correlation between latent speaking rate and STAI total, per shift type.
    pub freq_stai_slope: BTreeMap<ShiftType, f64>,
    /// Generate MFCC and prosodic features; when off, frames carry zeros.
    pub acoustic: bool,
    pub stream: StreamConfig,
}

impl Default for CohortConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            units: vec![WorkUnit::Icu, WorkUnit::NonIcu, WorkUnit::Lab],
            shift_types: vec![ShiftType::Day, ShiftType::Night],
            n_per_cell: 2,
            shifts_per_participant: 5,
            shift_hours: 3.0,
            frames_per_recording: 250,
            session_fg_frames: (210, 250),
            gap_fg_frames: (0, 150),
            gap_recording_prob: 0.1,
            base_rate: 3.63,
            day_night_rate_delta: 0.35,
            participant_rate_sd: 0.3,
            base_duration_min: 2.0,
            participant_duration_sd: 0.2,
            unit_duration_deltas: BTreeMap::new(),
            arousal_halflife_slope: 0.0,
            freq_irb_slope: BTreeMap::new(),
            freq_stai_slope: BTreeMap::new(),
            acoustic: true,
            stream: StreamConfig::default(),
        }
    }
}

impl CohortConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::BadConfig(m));
        self.stream.validate()?;
        if self.units.is_empty() || self.shift_types.is_empty() {
            return bad("units and shift_types must be nonempty".into());
        }
        if self.shifts_per_participant == 0 {
            return bad("shifts_per_participant must be positive".into());
        }
        if !(self.shift_hours > 0.0 && self.shift_hours <= 24.0) {
            return bad("shift_hours must lie in (0, 24]".into());
        }
        if self.frames_per_recording == 0 || self.frames_per_recording > MAX_FRAMES {
            return bad("frames_per_recording must be in 1..=2000".into());
        }
        for (name, (lo, hi)) in [("session_fg_frames", self.session_fg_frames), ("gap_fg_frames", self.gap_fg_frames)] {
            if lo > hi || hi > self.frames_per_recording {
                return bad(format!("{name} must be an ordered range within frames_per_recording"));
            }
        }
        if !(0.0..=1.0).contains(&self.gap_recording_prob) {
            return bad("gap_recording_prob must lie in [0, 1]".into());
        }
        if !(self.base_rate > 0.0) || !(self.base_duration_min >= 1.0) {
            return bad("base_rate must be positive and base_duration_min at least 1".into());
        }
        if self.participant_rate_sd < 0.0 || self.participant_duration_sd < 0.0 {
            return bad("standard deviations must be non-negative".into());
        }
        for c in self.freq_irb_slope.values().chain(self.freq_stai_slope.values()) {
            if !(-1.0..=1.0).contains(c) {
                return bad("survey couplings are correlations in [-1, 1]".into());
            }
        }
        Ok(())
    }

    fn group_rate(&self, shift_type: ShiftType) -> f64 {
        match shift_type {
            ShiftType::Day => self.base_rate + self.day_night_rate_delta,
            ShiftType::Night => self.base_rate,
        }
    }

    fn unit_duration(&self, unit: WorkUnit) -> f64 {
        self.base_duration_min + self.unit_duration_deltas.get(&unit).copied().unwrap_or(0.0)
    }

    pub fn n_participants(&self) -> usize {
        self.units.len() * self.shift_types.len() * self.n_per_cell
    }
}

/// Latent values drawn for one participant.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParticipantTruth {
    pub participant_id: String,
    pub work_unit: WorkUnit,
    pub shift_type: ShiftType,
    pub sessions_per_hour: f64,
    /// Standardized deviation of the speaking rate from its cell mean.
    pub rate_z: f64,
    pub session_duration_min: f64,
}

/// Planted population effects plus per-participant latents.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroundTruth {
    pub seed: u64,
    pub day_night_rate_delta: f64,
    pub group_rates: BTreeMap<ShiftType, f64>,
    pub unit_durations: BTreeMap<WorkUnit, f64>,
    pub arousal_halflife_slope: f64,
    pub freq_irb_slope: BTreeMap<WorkUnit, f64>,
    pub freq_stai_slope: BTreeMap<ShiftType, f64>,
    pub participants: Vec<ParticipantTruth>,
}

impl GroundTruth {
    fn planted(config: &CohortConfig) -> Self {
        Self {
            seed: config.seed,
            day_night_rate_delta: config.day_night_rate_delta,
            group_rates: config.shift_types.iter().map(|&s| (s, config.group_rate(s))).collect(),
            unit_durations: config.units.iter().map(|&u| (u, config.unit_duration(u))).collect(),
            arousal_halflife_slope: config.arousal_halflife_slope,
            freq_irb_slope: config.freq_irb_slope.clone(),
            freq_stai_slope: config.freq_stai_slope.clone(),
            participants: Vec::new(),
        }
    }
}

fn poisson(mean: f64, rng: &mut ChaCha8Rng) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).unwrap().sample(rng) as usize
}

fn survey_total(z: f64, center: f64, scale: f64, (lo, hi): (i64, i64)) -> i64 {
    ((center + scale * z).round() as i64).clamp(lo, hi)
}

fn coupled(z: f64, c: f64, rng: &mut ChaCha8Rng) -> f64 {
    let e: f64 = rng.sample(StandardNormal);
    c * z + (1.0 - c * c).sqrt() * e
}

fn sample_demographics(rng: &mut ChaCha8Rng) -> (Sex, AgeGroup) {
    let sex = if rng.random_bool(0.7) { Sex::Female } else { Sex::Male };
    let u: f64 = rng.random();
    let age = if u < 0.51 {
        AgeGroup::Under40
    } else if u < 0.81 {
        AgeGroup::From40To49
    } else {
        AgeGroup::Over50
    };
    (sex, age)
}

/// Minute indices of sessions: a renewal process alternating sessions of
/// `1 + Poisson(D - 1)` minutes and gaps of `1 + Poisson(G - 1)` minutes, with
/// `D + G = 60 / rate`, started at a uniform offset within one cycle.
fn session_minutes(rate: f64, duration: f64, total_minutes: u32, rng: &mut ChaCha8Rng) -> Vec<Vec<u32>> {
    let cycle = 60.0 / rate;
    let gap_mean = (cycle - duration).max(1.0);
    let mut t = rng.random_range(0.0..cycle).floor() as u32;
    let mut sessions = Vec::new();
    while t < total_minutes {
        let len = 1 + poisson(duration - 1.0, rng) as u32;
        let end = (t + len).min(total_minutes);
        sessions.push((t..end).collect());
        t = t + len + 1 + poisson(gap_mean - 1.0, rng) as u32;
    }
    sessions
}

/// Labels with exactly `fg` foreground frames arranged in interleaved runs.
fn arrange_labels(n: usize, fg: usize, rng: &mut ChaCha8Rng) -> Vec<FrameLabel> {
    let other = n - fg;
    let runs = 1 + poisson(3.0, rng).min(fg.max(1) - 1).min(other.max(1) - 1);
    let split = |total: usize, rng: &mut ChaCha8Rng| -> Vec<usize> {
        let mut cuts: Vec<usize> = (0..runs - 1).map(|_| rng.random_range(0..=total)).collect();
        cuts.push(0);
        cuts.push(total);
        cuts.sort_unstable();
        cuts.windows(2).map(|w| w[1] - w[0]).collect()
    };
    let fg_runs = split(fg, rng);
    let other_runs = split(other, rng);
    let fg_first = rng.random_bool(0.5);
    let mut labels = Vec::with_capacity(n);
    for (f, o) in fg_runs.into_iter().zip(other_runs) {
        let fill = if rng.random_bool(0.4) { FrameLabel::Bg } else { FrameLabel::S };
        let (a, b) = if fg_first {
            ((FrameLabel::Fg, f), (fill, o))
        } else {
            ((fill, o), (FrameLabel::Fg, f))
        };
        labels.extend(std::iter::repeat_n(a.0, a.1));
        labels.extend(std::iter::repeat_n(b.0, b.1));
    }
    labels
}

/// Speaker-level prosodic baseline shifted by the recording's latent arousal.
struct Voice {
    pitch: f64,
    intensity: f64,
    hf_lf: f64,
}

impl Voice {
    fn sample(sex: Sex, rng: &mut ChaCha8Rng) -> Self {
        let n = |rng: &mut ChaCha8Rng| -> f64 { rng.sample(StandardNormal) };
        let base = if sex == Sex::Female { 5.35 } else { 4.85 };
        Self {
            pitch: base + 0.1 * n(rng),
            intensity: 60.0 + 3.0 * n(rng),
            hf_lf: 0.6 * (0.2 * n(rng)).exp(),
        }
    }

    fn fg_frame(&self, mut frame: FrameFeatures, arousal: f64, rng: &mut ChaCha8Rng) -> FrameFeatures {
        let n = |rng: &mut ChaCha8Rng| -> f64 { rng.sample(StandardNormal) };
        frame.log_pitch = rng
            .random_bool(0.9)
            .then(|| round4(self.pitch + 0.08 * arousal + 0.05 * n(rng)));
        frame.intensity = round4((self.intensity + 4.0 * arousal + 3.0 * n(rng)).max(0.0));
        frame.hf_lf_ratio = round4(self.hf_lf * (0.15 * arousal + 0.1 * n(rng)).exp());
        frame
    }
}

fn silent_frame(frame_index: u32) -> FrameFeatures {
    FrameFeatures {
        frame_index,
        mfcc: [0.0; MFCC_DIM],
        log_pitch: None,
        intensity: 0.0,
        hf_lf_ratio: 0.0,
    }
}

struct ShiftPlan<'a> {
    config: &'a CohortConfig,
    participant_id: &'a str,
    index: usize,
    shift_type: ShiftType,
    rate: f64,
    duration: f64,
    voice: &'a Voice,
    seed: u64,
}

impl ShiftPlan<'_> {
    fn build(&self) -> Result<Shift, SynthError> {
        let cfg = self.config;
        let mut rng = rng_for(self.seed, 0);
        let total = (cfg.shift_hours * 60.0).floor() as u32;
        let date = NaiveDate::from_ymd_opt(2018, 3, 5).unwrap() + Duration::days(2 * self.index as i64);
        let hour = if self.shift_type == ShiftType::Day { 7 } else { 19 };
        let start = date.and_hms_opt(hour, 0, 0).unwrap();
        let info = ShiftInfo {
            shift_id: format!("{}_s{:02}", self.participant_id, self.index + 1),
            shift_type: self.shift_type,
            start_time: start.format("%Y-%m-%dT%H:%M:%SZ").to_string(),
            duration_hours: cfg.shift_hours,
        };

        let sessions = session_minutes(self.rate, self.duration, total, &mut rng);
        let mut in_session = vec![false; total as usize];
        for m in sessions.iter().flatten() {
            in_session[*m as usize] = true;
        }
        let half = f64::from(total) / 2.0;
        let mut recordings = Vec::new();
        for minute in 0..total {
            let qualifying = in_session[minute as usize];
            if !qualifying && !rng.random_bool(cfg.gap_recording_prob) {
                continue;
            }
            let (lo, hi) = if qualifying { cfg.session_fg_frames } else { cfg.gap_fg_frames };
            let fg = rng.random_range(lo..=hi);
            let mut frame_rng = rng_for(self.seed, 1 + u64::from(minute));
            let labels = arrange_labels(cfg.frames_per_recording, fg, &mut frame_rng);
            let trend = if self.shift_type == ShiftType::Night && f64::from(minute) >= half {
                cfg.arousal_halflife_slope
            } else {
                0.0
            };
            let arousal = trend + frame_rng.sample::<f64, _>(StandardNormal);
            let frames = labels
                .iter()
                .enumerate()
                .map(|(i, &l)| {
                    let i = i as u32;
                    if !cfg.acoustic {
                        return silent_frame(i);
                    }
                    let f = sample_frame(&cfg.stream, l, i, &mut frame_rng);
                    if l == FrameLabel::Fg {
                        self.voice.fg_frame(f, arousal, &mut frame_rng)
                    } else {
                        f
                    }
                })
                .collect();
            let id = format!("{}_m{minute:03}", info.shift_id);
            recordings.push(Recording::new(id, minute, frames, Some(labels))?);
        }
        Ok(Shift::new(info, recordings)?)
    }
}

fn gen_participant(
    config: &CohortConfig,
    index: usize,
    unit: WorkUnit,
    shift_type: ShiftType,
) -> Result<(Participant, ParticipantTruth), SynthError> {
    let seed = child_seed(config.seed, index as u64);
    let mut rng = rng_for(seed, 0);
    let participant_id = format!("P{:04}", index + 1);
    let (sex, age_group) = sample_demographics(&mut rng);
    let rate_z: f64 = rng.sample(StandardNormal);
    let rate = (config.group_rate(shift_type) + config.participant_rate_sd * rate_z).max(0.2);
    let duration_noise = Normal::new(0.0, config.participant_duration_sd.max(1e-300)).unwrap();
    let duration = (config.unit_duration(unit) + duration_noise.sample(&mut rng)).max(1.0);
    let voice = Voice::sample(sex, &mut rng);

    let irb_c = config.freq_irb_slope.get(&unit).copied().unwrap_or(0.0);
    let stai_c = config.freq_stai_slope.get(&shift_type).copied().unwrap_or(0.0);
    let surveys = SurveyRecord {
        stai_total: Some(survey_total(coupled(rate_z, stai_c, &mut rng), 90.0, 18.0, STAI_RANGE)),
        irb_total: Some(survey_total(coupled(rate_z, irb_c, &mut rng), 38.0, 5.0, IRB_RANGE)),
    };

    let shifts = (0..config.shifts_per_participant)
        .map(|k| {
            ShiftPlan {
                config,
                participant_id: &participant_id,
                index: k,
                shift_type,
                rate,
                duration,
                voice: &voice,
                seed: child_seed(seed, 1 + k as u64),
            }
            .build()
        })
        .collect::<Result<Vec<_>, _>>()?;

    let truth = ParticipantTruth {
        participant_id: participant_id.clone(),
        work_unit: unit,
        shift_type,
        sessions_per_hour: rate,
        rate_z,
        session_duration_min: duration,
    };
    let participant = Participant {
        info: ParticipantInfo {
            participant_id,
            sex,
            age_group,
            work_unit: unit,
            primary_shift: shift_type,
        },
        shifts,
        surveys,
    };
    Ok((participant, truth))
}

/// Generates participants one at a time (unit-major, then shift type) and
/// hands each to `visit`, so memory stays bounded by a single participant.
pub fn gen_cohort_streaming<E: From<SynthError>>(
    config: &CohortConfig,
    mut visit: impl FnMut(Participant, &ParticipantTruth) -> Result<(), E>,
) -> Result<GroundTruth, E> {
    config.validate()?;
    let mut truth = GroundTruth::planted(config);
    let mut index = 0;
    for &unit in &config.units {
        for &shift_type in &config.shift_types {
            for _ in 0..config.n_per_cell {
                let (p, t) = gen_participant(config, index, unit, shift_type)?;
                visit(p, &t)?;
                truth.participants.push(t);
                index += 1;
            }
        }
    }
    Ok(truth)
}

pub fn gen_cohort(config: &CohortConfig) -> Result<(Cohort, GroundTruth), SynthError> {
    let mut participants = Vec::with_capacity(config.n_participants());
    let truth = gen_cohort_streaming(config, |p, _| {
        participants.push(p);
        Ok::<_, SynthError>(())
    })?;
    Ok((Cohort { participants }, truth))
}
