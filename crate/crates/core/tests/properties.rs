use proptest::prelude::*;
use wearcomm_core::arousal::{fuse, score_recording, EmpiricalModel, FeatureKind};
use wearcomm_core::behavior::segment_sessions;
use wearcomm_core::data::{
    parse_recording, write_recording, AgeGroup, CohortIndex, FeatureFileFormat, FrameFeatures, ParticipantEntry,
    ParticipantInfo, RecordingRef, Sex, ShiftEntry, ShiftInfo, ShiftType, SurveyRecord, WorkUnit,
};
use wearcomm_core::metrics::score;
use wearcomm_core::stats::special::reg_incomplete_beta;
use wearcomm_core::stats::{average_ranks, pearson_r, spearman, three_way_anova, SsType};
use wearcomm_core::{FrameLabel, Recording};

fn label() -> impl Strategy<Value = FrameLabel> {
    (0usize..3).prop_map(|i| FrameLabel::from_index(i).unwrap())
}

fn entry(id: usize, shift_recordings: &[usize]) -> ParticipantEntry {
    ParticipantEntry {
        info: ParticipantInfo {
            participant_id: format!("P{id:03}"),
            sex: Sex::Female,
            age_group: AgeGroup::Under40,
            work_unit: WorkUnit::Icu,
            primary_shift: ShiftType::Day,
        },
        shifts: shift_recordings
            .iter()
            .enumerate()
            .map(|(s, &n)| ShiftEntry {
                info: ShiftInfo {
                    shift_id: format!("S{s}"),
                    shift_type: ShiftType::Day,
                    start_time: "2018-03-05T07:00:00Z".into(),
                    duration_hours: 12.0,
                },
                recordings: (0..n as u32)
                    .map(|m| RecordingRef {
                        recording_id: format!("P{id:03}_S{s}_{m}"),
                        minute_index: m,
                        path: String::new(),
                        teacher_path: None,
                    })
                    .collect(),
            })
            .collect(),
        surveys: SurveyRecord::default(),
    }
}

fn index() -> impl Strategy<Value = CohortIndex> {
    prop::collection::vec(prop::collection::vec(0usize..3, 0..8), 0..12).prop_map(|ps| CohortIndex {
        participants: ps.iter().enumerate().map(|(i, s)| entry(i, s)).collect(),
    })
}

fn frame() -> impl Strategy<Value = FrameFeatures> {
    (
        prop::array::uniform12(-1e3f64..1e3),
        prop::option::of(3.0f64..7.0),
        0.0f64..1e4,
        0.0f64..50.0,
    )
        .prop_map(|(mfcc, log_pitch, intensity, hf_lf_ratio)| FrameFeatures {
            frame_index: 0,
            mfcc,
            log_pitch,
            intensity,
            hf_lf_ratio,
        })
}

proptest! {
    #[test]
    fn compliance_filter_is_idempotent_and_monotone(idx in index(), a in 0usize..8, b in 0usize..8) {
        let once = idx.filter_compliant(a);
        prop_assert_eq!(once.filter_compliant(a), once.clone());
        let (lo, hi) = (a.min(b), a.max(b));
        let strict = idx.filter_compliant(hi);
        let loose = idx.filter_compliant(lo);
        prop_assert!(strict.participants.iter().all(|p| loose.participants.contains(p)));
        prop_assert!(once.participants.iter().all(|p| p.recorded_shifts() >= a));
    }

    #[test]
    fn feature_files_round_trip(
        frames in prop::collection::vec(frame(), 1..40),
        labels in prop::option::of(prop::collection::vec(label(), 40)),
        minute in 0u32..720,
    ) {
        let frames: Vec<FrameFeatures> = frames
            .into_iter()
            .enumerate()
            .map(|(i, f)| FrameFeatures { frame_index: 3 * i as u32, ..f })
            .collect();
        let labels = labels.map(|l| l[..frames.len()].to_vec());
        let rec = Recording::new("r", minute, frames, labels).unwrap();
        for format in [FeatureFileFormat::default(), FeatureFileFormat { delimiter: b'\t' }] {
            let text = write_recording(&rec, format);
            let back = parse_recording(text.as_bytes(), format, "r", minute).unwrap();
            prop_assert_eq!(&back, &rec);
        }
    }

    #[test]
    fn der_is_the_sum_of_its_parts_and_ignores_fg_bg_naming(
        pairs in prop::collection::vec((label(), label()), 1..400),
    ) {
        let (mut r, h): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        r[0] = FrameLabel::Bg;
        let s = score(&r, &h).unwrap();
        prop_assert_eq!(s.der, s.miss + s.false_alarm + s.confusion);
        let swap = |l: &FrameLabel| match l {
            FrameLabel::Fg => FrameLabel::Bg,
            FrameLabel::Bg => FrameLabel::Fg,
            FrameLabel::S => FrameLabel::S,
        };
        let rs: Vec<_> = r.iter().map(swap).collect();
        let hs: Vec<_> = h.iter().map(swap).collect();
        prop_assert_eq!(score(&rs, &hs).unwrap(), s);
    }

    #[test]
    fn spearman_matches_ranked_pearson(
        pairs in prop::collection::vec((0u8..6, 0u8..6), 3..60),
    ) {
        let x: Vec<f64> = pairs.iter().map(|p| f64::from(p.0)).collect();
        let y: Vec<f64> = pairs.iter().map(|p| f64::from(p.1)).collect();
        let ranked = pearson_r(&average_ranks(&x), &average_ranks(&y));
        match spearman(&x, &y) {
            Ok(s) => prop_assert_eq!(Some(s), ranked),
            Err(_) => prop_assert!(ranked.is_none()),
        }
    }

    #[test]
    fn ranks_sum_to_triangular_number(v in prop::collection::vec(0u8..5, 1..80)) {
        let v: Vec<f64> = v.into_iter().map(f64::from).collect();
        let n = v.len() as f64;
        prop_assert_eq!(average_ranks(&v).iter().sum::<f64>(), n * (n + 1.0) / 2.0);
    }

    #[test]
    fn score_is_monotone_and_translation_invariant(
        samples in prop::collection::vec(-50i32..50, 1..80),
        x in -60i32..60,
        y in -60i32..60,
        shift in -1000i32..1000,
    ) {
        let to_f = |v: &[i32], d: i32| v.iter().map(|&s| f64::from(s + d)).collect::<Vec<_>>();
        let m = EmpiricalModel::new(FeatureKind::Intensity, to_f(&samples, 0), 1).unwrap();
        let (lo, hi) = (x.min(y), x.max(y));
        prop_assert!(score_recording(f64::from(lo), &m) <= score_recording(f64::from(hi), &m));
        let shifted = EmpiricalModel::new(FeatureKind::Intensity, to_f(&samples, shift), 1).unwrap();
        prop_assert_eq!(
            score_recording(f64::from(x), &m),
            score_recording(f64::from(x + shift), &shifted)
        );
        let s = score_recording(f64::from(x), &m);
        prop_assert!((-1.0..=1.0).contains(&s));
    }

    #[test]
    fn fusion_weights_have_unit_norm(
        rows in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0), 3..50),
    ) {
        let cols: [Vec<f64>; 3] = [
            rows.iter().map(|r| r.0).collect(),
            rows.iter().map(|r| r.1).collect(),
            rows.iter().map(|r| r.2).collect(),
        ];
        let f = fuse([&cols[0], &cols[1], &cols[2]]).unwrap();
        let norm = f.weights.iter().map(|w| w * w).sum::<f64>().sqrt();
        prop_assert!((norm - 1.0).abs() < 1e-9);
        prop_assert_eq!(f.fused.len(), rows.len());
    }

    #[test]
    fn anova_is_invariant_to_affine_response_changes(
        y in prop::collection::vec(-10.0f64..10.0, 16),
        scale in prop_oneof![0.01f64..100.0, -100.0f64..-0.01],
        offset in -1e3f64..1e3,
    ) {
        let factor: Vec<&str> = (0..16).map(|i| ["a", "b"][i % 2]).collect();
        let sex: Vec<&str> = (0..16).map(|i| ["f", "m"][(i / 2) % 2]).collect();
        let age: Vec<&str> = (0..16).map(|i| ["u", "o"][(i / 4) % 2]).collect();
        let z: Vec<f64> = y.iter().map(|v| scale * v + offset).collect();
        for ss in [SsType::I, SsType::II] {
            let a = three_way_anova(&y, &factor, &sex, &age, ss).unwrap();
            let b = three_way_anova(&z, &factor, &sex, &age, ss).unwrap();
            let (fa, fb) = (a.test("factor").unwrap(), b.test("factor").unwrap());
            prop_assert!((fa.f - fb.f).abs() <= 1e-7 * fa.f.abs().max(1.0));
            prop_assert!((fa.p - fb.p).abs() <= 1e-7);
        }
    }

    #[test]
    fn incomplete_beta_reflection(a in 0.2f64..30.0, b in 0.2f64..30.0, x in 0.0f64..=1.0) {
        let lhs = reg_incomplete_beta(a, b, x).unwrap();
        let rhs = 1.0 - reg_incomplete_beta(b, a, 1.0 - x).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-10);
        prop_assert!((0.0..=1.0).contains(&lhs));
    }

    #[test]
    fn incomplete_beta_is_monotone_in_x(a in 0.2f64..30.0, b in 0.2f64..30.0, x in 0.0f64..1.0, y in 0.0f64..1.0) {
        let (lo, hi) = (x.min(y), x.max(y));
        prop_assert!(reg_incomplete_beta(a, b, lo).unwrap() <= reg_incomplete_beta(a, b, hi).unwrap() + 1e-15);
    }

    #[test]
    fn sessions_partition_the_minutes(mut minutes in prop::collection::btree_set(0u32..200, 0..60)) {
        let sorted: Vec<u32> = std::mem::take(&mut minutes).into_iter().collect();
        let sessions = segment_sessions(&sorted).unwrap();
        let flat: Vec<u32> = sessions.iter().flat_map(|s| s.minute_indices.clone()).collect();
        prop_assert_eq!(flat, sorted);
        for s in &sessions {
            prop_assert!(s.minute_indices.windows(2).all(|w| w[1] == w[0] + 1));
        }
        for w in sessions.windows(2) {
            prop_assert!(w[1].first_minute() > *w[0].minute_indices.last().unwrap() + 1);
        }
    }
}
