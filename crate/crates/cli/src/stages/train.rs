//! Trains the student diarizer; writes `model.wcsm` and `training_log.csv`.

use wearcomm_core::diarizer::{save_checkpoint, train, windows_from_stream, write_training_log, TrainingWindow};

use super::{load_corpus, write_file};
use crate::error::CliError;
use crate::manifest::StageManifest;
use crate::{Context, Stage};

pub const MODEL_FILE: &str = "model.wcsm";

pub fn run(ctx: &Context) -> Result<StageManifest, CliError> {
    let inputs = ctx.require_all(Stage::Train, &[Stage::Gen])?;
    let cfg = &ctx.config.diarizer;
    let corpus = load_corpus(ctx, "train")?;
    let mut windows: Vec<TrainingWindow> = Vec::new();
    for (rec, teacher) in &corpus {
        windows.extend(windows_from_stream(rec, teacher, cfg.window_frames)?);
    }
    log::info!(
        "training on {} windows ({} frames), {} epochs",
        windows.len(),
        windows.iter().map(TrainingWindow::len).sum::<usize>(),
        cfg.epochs
    );
    let (model, history) = train(&windows, cfg)?;
    if let Some(last) = history.last() {
        log::info!("final epoch: ce {:.4}, kld {:.4}, total {:.4}", last.ce, last.kld, last.total);
    }

    let dir = ctx.fresh_dir(Stage::Train)?;
    save_checkpoint(&model, &dir.join(MODEL_FILE))?;
    write_file(&dir.join("training_log.csv"), write_training_log(&history))?;
    ctx.finish(Stage::Train, inputs)
}
