//! Evaluation entry points over dataset files, and serializable reports.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use spellvec_core::eval::{
    eval_analogy, eval_similarity, neighborhood_validity, EvalReport, Mode, WordIndex,
};
use spellvec_core::EmbeddingModel;

use crate::error::Result;
use crate::formats::{load_analogies, load_misspellings, load_similarity};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub task: String,
    pub mode: String,
    pub metrics: BTreeMap<String, f64>,
    pub evaluated: usize,
    pub skipped: usize,
}

impl EvalSummary {
    pub fn new(report: &EvalReport, mode: Mode) -> Self {
        EvalSummary {
            task: report.task.clone(),
            mode: mode_name(mode).to_string(),
            metrics: report.metrics.iter().cloned().collect(),
            evaluated: report.evaluated,
            skipped: report.skipped,
        }
    }

    /// Aligned `name value` lines.
    pub fn table(&self) -> String {
        let mut out = format!(
            "{} ({}): {} evaluated, {} skipped\n",
            self.task, self.mode, self.evaluated, self.skipped
        );
        let width = self.metrics.keys().map(String::len).max().unwrap_or(0);
        for (k, v) in &self.metrics {
            out.push_str(&format!("  {k:<width$}  {v:.4}\n"));
        }
        out
    }
}

pub fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::InIn => "in-in",
        Mode::InOut => "in-out",
    }
}

pub fn similarity(model: &EmbeddingModel<f32>, data: &Path, mode: Mode) -> Result<EvalSummary> {
    let rows = load_similarity(data)?;
    Ok(EvalSummary::new(&eval_similarity(model, &rows, mode), mode))
}

pub fn analogy(model: &EmbeddingModel<f32>, data: &Path, mode: Mode) -> Result<EvalSummary> {
    let rows: Vec<_> = load_analogies(data)?
        .into_iter()
        .flat_map(|s| s.rows)
        .collect();
    let index = WordIndex::new(model, mode);
    Ok(EvalSummary::new(&eval_analogy(model, &index, &rows), mode))
}

pub fn neighborhood(
    model: &EmbeddingModel<f32>,
    data: &Path,
    k: usize,
    mode: Mode,
) -> Result<EvalSummary> {
    let pairs = load_misspellings(data)?;
    let index = WordIndex::new(model, mode);
    Ok(EvalSummary::new(&neighborhood_validity(model, &index, &pairs, k), mode))
}
