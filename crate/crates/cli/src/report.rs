//! Counterexample dumps under `<dir>/report/`.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use preround_core::{PropertyReport, ReductionOutput};

pub const DIR: &str = "report";

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Writes `<id>.txt` (report line and counterexample) and `<id>.vote` (the
/// election the counterexample decides). Returns the text file's path.
pub fn write_counterexample(dir: &Path, r: &ReductionOutput, report: &PropertyReport) -> Result<Option<PathBuf>> {
    let Some(cx) = &report.counterexample else {
        return Ok(None);
    };
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let id = report.property.to_string();
    let text = dir.join(format!("{id}.txt"));
    write(&text, &format!("{}\n{}", report.line(), cx.describe(r.roster())))?;
    write(&dir.join(format!("{id}.vote")), &cx.election(&r.profile).to_text())?;
    Ok(Some(text))
}

/// Writes every augmentation check line plus counterexamples of the failed
/// ones into `augmentation.txt`, and the rejected instance beside it.
pub fn write_augmentation(dir: &Path, instance: &ReductionOutput, reports: &[PropertyReport]) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut text = String::new();
    for rep in reports {
        text.push_str(&rep.line());
        text.push('\n');
    }
    for rep in reports.iter().filter(|r| !r.passed) {
        if let Some(cx) = &rep.counterexample {
            text.push_str(&format!("\n[{}]\n{}", rep.property, cx.describe(instance.roster())));
        }
    }
    let path = dir.join("augmentation.txt");
    write(&path, &text)?;
    instance.write_to(&dir.join("instance"))?;
    Ok(path)
}
