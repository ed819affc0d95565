//! Tables and plot data files built from the analysis bundle.
//!
//! ```text
//! tables/<analysis>_<response>.csv    level rows, then a `test` row with F and p
//! violin/<analysis>_<response>.csv    level,value per observation
//! scatter/<subgroup>_<x>_<y>.csv      participant_id,x,y,fitted
//! arousal_over_shift.csv              shift_type,hour,n,mean_fused
//! ```

use serde::Serialize;

use super::analyze::{AnalysisBundle, SeriesPoint, BUNDLE};
use super::{read_file, write_csv};
use crate::error::CliError;
use crate::manifest::StageManifest;
use crate::{Context, Stage};

pub const TEST_ROW: &str = "test";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TableRow {
    pub level: String,
    pub n: Option<usize>,
    pub mean: Option<f64>,
    pub ci_lo: Option<f64>,
    pub ci_hi: Option<f64>,
    pub f: Option<f64>,
    pub p: Option<f64>,
}

#[derive(Serialize)]
struct ViolinRow<'a> {
    level: &'a str,
    value: f64,
}

#[derive(Serialize)]
struct ScatterRow<'a> {
    participant_id: &'a str,
    x: f64,
    y: f64,
    fitted: Option<f64>,
}

fn file_stem(parts: &[&str]) -> String {
    parts.join("_").replace('/', "_")
}

pub fn group_table(c: &super::analyze::Comparison) -> Vec<TableRow> {
    let mut rows: Vec<TableRow> = c
        .groups
        .iter()
        .map(|g| TableRow {
            level: g.level.clone(),
            n: Some(g.n),
            mean: Some(g.mean),
            ci_lo: g.ci_lo,
            ci_hi: g.ci_hi,
            f: None,
            p: None,
        })
        .collect();
    rows.push(TableRow {
        level: TEST_ROW.into(),
        n: None,
        mean: None,
        ci_lo: None,
        ci_hi: None,
        f: c.test.as_ref().map(|t| t.f),
        p: c.test.as_ref().map(|t| t.p),
    });
    rows
}

pub fn write_report(bundle: &AnalysisBundle, dir: &std::path::Path) -> Result<(), CliError> {
    for c in &bundle.comparisons {
        let stem = file_stem(&[&c.name, &c.response]);
        write_csv(&dir.join("tables").join(format!("{stem}.csv")), &group_table(c))?;
        let violin: Vec<ViolinRow> = c
            .groups
            .iter()
            .flat_map(|g| g.values.iter().map(|&value| ViolinRow { level: &g.level, value }))
            .collect();
        write_csv(&dir.join("violin").join(format!("{stem}.csv")), &violin)?;
    }
    for c in &bundle.correlations {
        let rows: Vec<ScatterRow> = c
            .points
            .iter()
            .map(|p| ScatterRow {
                participant_id: &p.participant_id,
                x: p.x,
                y: p.y,
                fitted: c.slope.zip(c.intercept).map(|(s, i)| i + s * p.x),
            })
            .collect();
        let stem = file_stem(&[&c.subgroup, &c.x, &c.y]);
        write_csv(&dir.join("scatter").join(format!("{stem}.csv")), &rows)?;
    }
    write_csv::<SeriesPoint>(&dir.join("arousal_over_shift.csv"), &bundle.arousal_series)
}

pub fn run(ctx: &Context) -> Result<StageManifest, CliError> {
    let inputs = ctx.require_all(Stage::Report, &[Stage::Analyze])?;
    let path = ctx.stage_dir(Stage::Analyze).join(BUNDLE);
    let bundle: AnalysisBundle = serde_json::from_slice(&read_file(&path)?)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let dir = ctx.fresh_dir(Stage::Report)?;
    write_report(&bundle, &dir)?;
    ctx.finish(Stage::Report, inputs)
}
