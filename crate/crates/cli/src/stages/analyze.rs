//! Group comparisons, survey correlations and the arousal-over-shift series.
//!
//! Comparisons fit a main-effects ANOVA of each response on the grouping
//! factor with sex and age group as confounders. Work-unit comparisons use
//! day-shift staff only. An analysis that cannot be fitted is kept with a
//! `skipped` reason instead of failing the stage.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use wearcomm_core::data::ShiftType;
use wearcomm_core::stats::{linear_fit, mean_ci, pearson, three_way_anova};

use super::arousal::{ParticipantArousalRow, RecordingRow, PARTICIPANT_AROUSAL, RECORDINGS};
use super::segment::{ParticipantFeatureRow, PARTICIPANT_FEATURES};
use super::{read_csv, write_csv, write_json};
use crate::error::CliError;
use crate::manifest::StageManifest;
use crate::{Context, Stage};

pub const BUNDLE: &str = "analysis.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupStat {
    pub level: String,
    pub n: usize,
    pub mean: f64,
    pub ci_lo: Option<f64>,
    pub ci_hi: Option<f64>,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupTest {
    pub f: f64,
    pub p: f64,
    pub df_num: usize,
    pub df_den: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    /// `shift` (day against night) or `unit` (work units, day shift).
    pub name: String,
    pub response: String,
    pub groups: Vec<GroupStat>,
    pub test: Option<GroupTest>,
    pub skipped: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub participant_id: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    /// `<shift type>/<unit or all>`.
    pub subgroup: String,
    pub x: String,
    pub y: String,
    pub n: usize,
    pub r: Option<f64>,
    pub p: Option<f64>,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub points: Vec<ScatterPoint>,
    pub skipped: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub shift_type: ShiftType,
    pub hour: u32,
    pub n: usize,
    pub mean_fused: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AnalysisBundle {
    pub comparisons: Vec<Comparison>,
    pub correlations: Vec<Correlation>,
    pub arousal_series: Vec<SeriesPoint>,
}

/// One participant's analysis inputs.
#[derive(Clone, Debug)]
struct Subject {
    features: ParticipantFeatureRow,
    arousal: Option<ParticipantArousalRow>,
}

const RESPONSES: [&str; 4] = [
    "sessions_per_hour",
    "avg_session_duration_min",
    "arousal_first_half",
    "arousal_second_half",
];

impl Subject {
    fn response(&self, name: &str) -> Option<f64> {
        match name {
            "sessions_per_hour" => Some(self.features.sessions_per_hour),
            "avg_session_duration_min" => self.features.avg_session_duration_min,
            "arousal_first_half" => self.arousal.as_ref().and_then(|a| a.first_half),
            "arousal_second_half" => self.arousal.as_ref().and_then(|a| a.second_half),
            "irb_total" => self.features.irb_total.map(|v| v as f64),
            "stai_total" => self.features.stai_total.map(|v| v as f64),
            _ => None,
        }
    }
}

fn compare(
    name: &str,
    response: &str,
    subjects: &[&Subject],
    level: impl Fn(&Subject) -> String,
    ci_level: f64,
    ss_type: wearcomm_core::stats::SsType,
) -> Comparison {
    let used: Vec<(&Subject, f64)> = subjects.iter().filter_map(|s| s.response(response).map(|v| (*s, v))).collect();
    let mut by_level: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (s, v) in &used {
        by_level.entry(level(s)).or_default().push(*v);
    }
    let groups = by_level
        .into_iter()
        .map(|(lvl, values)| {
            let ci = mean_ci(&values, ci_level).ok();
            GroupStat {
                level: lvl,
                n: values.len(),
                mean: values.iter().sum::<f64>() / values.len() as f64,
                ci_lo: ci.map(|c| c.lo),
                ci_hi: ci.map(|c| c.hi),
                values,
            }
        })
        .collect::<Vec<_>>();

    let y: Vec<f64> = used.iter().map(|(_, v)| *v).collect();
    let factor: Vec<String> = used.iter().map(|(s, _)| level(s)).collect();
    let sex: Vec<&str> = used.iter().map(|(s, _)| s.features.sex.as_str()).collect();
    let age: Vec<&str> = used.iter().map(|(s, _)| s.features.age_group.as_str()).collect();
    let (test, skipped) = if groups.len() < 2 {
        (None, Some(format!("{} level(s) with data", groups.len())))
    } else {
        match three_way_anova(&y, &factor, &sex, &age, ss_type) {
            Ok(res) => {
                let t = res.test("factor").expect("grouping factor is tested");
                (
                    Some(GroupTest {
                        f: t.f,
                        p: t.p,
                        df_num: t.df_num,
                        df_den: t.df_den,
                    }),
                    None,
                )
            }
            Err(e) => (None, Some(e.to_string())),
        }
    };
    if let Some(reason) = &skipped {
        log::warn!("{name} comparison of {response} skipped: {reason}");
    }
    Comparison {
        name: name.into(),
        response: response.into(),
        groups,
        test,
        skipped,
    }
}

fn correlate(subgroup: String, x: &str, y: &str, subjects: &[&Subject]) -> Correlation {
    let points: Vec<ScatterPoint> = subjects
        .iter()
        .filter_map(|s| {
            Some(ScatterPoint {
                participant_id: s.features.participant_id.clone(),
                x: s.response(x)?,
                y: s.response(y)?,
            })
        })
        .collect();
    let xs: Vec<f64> = points.iter().map(|p| p.x).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.y).collect();
    let mut c = Correlation {
        subgroup,
        x: x.into(),
        y: y.into(),
        n: points.len(),
        r: None,
        p: None,
        slope: None,
        intercept: None,
        points,
        skipped: None,
    };
    match (pearson(&xs, &ys), linear_fit(&xs, &ys)) {
        (Ok(r), Ok(fit)) => {
            c.r = Some(r.r);
            c.p = Some(r.p);
            c.slope = Some(fit.slope);
            c.intercept = Some(fit.intercept);
        }
        (Err(e), _) | (_, Err(e)) => c.skipped = Some(e.to_string()),
    }
    c
}

fn arousal_series(rows: &[RecordingRow]) -> Vec<SeriesPoint> {
    let mut acc: BTreeMap<(ShiftType, u32), (usize, f64)> = BTreeMap::new();
    for r in rows {
        let e = acc.entry((r.shift_type, r.minute_index / 60)).or_default();
        e.0 += 1;
        e.1 += r.fused;
    }
    acc.into_iter()
        .map(|((shift_type, hour), (n, sum))| SeriesPoint {
            shift_type,
            hour,
            n,
            mean_fused: sum / n as f64,
        })
        .collect()
}

pub fn analyze(
    features: Vec<ParticipantFeatureRow>,
    arousal: Vec<ParticipantArousalRow>,
    recordings: &[RecordingRow],
    ci_level: f64,
    ss_type: wearcomm_core::stats::SsType,
) -> AnalysisBundle {
    let mut arousal: BTreeMap<String, ParticipantArousalRow> =
        arousal.into_iter().map(|a| (a.participant_id.clone(), a)).collect();
    let subjects: Vec<Subject> = features
        .into_iter()
        .map(|f| Subject {
            arousal: arousal.remove(&f.participant_id),
            features: f,
        })
        .collect();
    let all: Vec<&Subject> = subjects.iter().collect();
    let day: Vec<&Subject> = all
        .iter()
        .copied()
        .filter(|s| s.features.primary_shift == ShiftType::Day)
        .collect();

    let mut comparisons = Vec::new();
    for response in RESPONSES {
        comparisons.push(compare(
            "shift",
            response,
            &all,
            |s| s.features.primary_shift.as_str().into(),
            ci_level,
            ss_type,
        ));
    }
    for response in RESPONSES {
        comparisons.push(compare(
            "unit",
            response,
            &day,
            |s| s.features.work_unit.as_str().into(),
            ci_level,
            ss_type,
        ));
    }

    let mut correlations = Vec::new();
    for st in [ShiftType::Day, ShiftType::Night] {
        let in_shift: Vec<&Subject> = all.iter().copied().filter(|s| s.features.primary_shift == st).collect();
        if in_shift.is_empty() {
            continue;
        }
        let mut units: Vec<_> = in_shift.iter().map(|s| s.features.work_unit).collect();
        units.sort();
        units.dedup();
        let mut groups = vec![(format!("{st}/all"), in_shift.clone())];
        for u in units {
            let members = in_shift.iter().copied().filter(|s| s.features.work_unit == u).collect();
            groups.push((format!("{st}/{u}"), members));
        }
        for (name, members) in groups {
            for y in ["irb_total", "stai_total"] {
                correlations.push(correlate(name.clone(), "sessions_per_hour", y, &members));
            }
        }
    }

    AnalysisBundle {
        comparisons,
        correlations,
        arousal_series: arousal_series(recordings),
    }
}

#[derive(Serialize)]
struct AnovaRow<'a> {
    analysis: &'a str,
    response: &'a str,
    f: Option<f64>,
    p: Option<f64>,
    df_num: Option<usize>,
    df_den: Option<usize>,
    skipped: Option<&'a str>,
}

#[derive(Serialize)]
struct GroupRow<'a> {
    analysis: &'a str,
    response: &'a str,
    level: &'a str,
    n: usize,
    mean: f64,
    ci_lo: Option<f64>,
    ci_hi: Option<f64>,
}

#[derive(Serialize)]
struct CorrelationRow<'a> {
    subgroup: &'a str,
    x: &'a str,
    y: &'a str,
    n: usize,
    r: Option<f64>,
    p: Option<f64>,
    slope: Option<f64>,
    intercept: Option<f64>,
    skipped: Option<&'a str>,
}

pub fn run(ctx: &Context) -> Result<StageManifest, CliError> {
    let inputs = ctx.require_all(Stage::Analyze, &[Stage::Segment, Stage::Arousal])?;
    let features: Vec<ParticipantFeatureRow> = read_csv(&ctx.stage_dir(Stage::Segment).join(PARTICIPANT_FEATURES))?;
    let arousal_dir = ctx.stage_dir(Stage::Arousal);
    let arousal: Vec<ParticipantArousalRow> = read_csv(&arousal_dir.join(PARTICIPANT_AROUSAL))?;
    let recordings: Vec<RecordingRow> = read_csv(&arousal_dir.join(RECORDINGS))?;
    let s = &ctx.config.stats;
    let bundle = analyze(features, arousal, &recordings, s.ci_level, s.ss_type);

    let anova: Vec<AnovaRow> = bundle
        .comparisons
        .iter()
        .map(|c| AnovaRow {
            analysis: &c.name,
            response: &c.response,
            f: c.test.as_ref().map(|t| t.f),
            p: c.test.as_ref().map(|t| t.p),
            df_num: c.test.as_ref().map(|t| t.df_num),
            df_den: c.test.as_ref().map(|t| t.df_den),
            skipped: c.skipped.as_deref(),
        })
        .collect();
    let groups: Vec<GroupRow> = bundle
        .comparisons
        .iter()
        .flat_map(|c| {
            c.groups.iter().map(move |g| GroupRow {
                analysis: &c.name,
                response: &c.response,
                level: &g.level,
                n: g.n,
                mean: g.mean,
                ci_lo: g.ci_lo,
                ci_hi: g.ci_hi,
            })
        })
        .collect();
    let correlations: Vec<CorrelationRow> = bundle
        .correlations
        .iter()
        .map(|c| CorrelationRow {
            subgroup: &c.subgroup,
            x: &c.x,
            y: &c.y,
            n: c.n,
            r: c.r,
            p: c.p,
            slope: c.slope,
            intercept: c.intercept,
            skipped: c.skipped.as_deref(),
        })
        .collect();

    let dir = ctx.fresh_dir(Stage::Analyze)?;
    write_json(&dir.join(BUNDLE), &bundle)?;
    write_csv(&dir.join("anova.csv"), &anova)?;
    write_csv(&dir.join("group_stats.csv"), &groups)?;
    write_csv(&dir.join("correlations.csv"), &correlations)?;
    ctx.finish(Stage::Analyze, inputs)
}
