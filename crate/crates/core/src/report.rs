//! Evaluation reports, rendered both as a human-readable table and as
//! machine-readable `key=value` record lines (one record per line).

use crate::classifier::Confusion;

pub fn version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}

/// Outcome of one evaluation run (train/test split or cross-validation).
#[derive(Debug, Clone)]
pub struct RunReport {
    pub descriptor: String,
    pub dataset: String,
    pub config: String,
    pub feature_dim: usize,
    pub seed: u64,
    pub lambda: f64,
    pub gamma: f64,
    pub folds: Option<usize>,
    pub fold_accuracies: Vec<f64>,
    pub accuracy: f64,
    pub confusion: Confusion,
    pub extract_seconds: f64,
    pub train_seconds: f64,
    pub predict_seconds: f64,
}

impl RunReport {
    /// One `key=value` record line per run.
    pub fn machine_line(&self) -> String {
        let folds = self
            .folds
            .map(|f| f.to_string())
            .unwrap_or_else(|| "none".into());
        format!(
            "record=eval descriptor={} dataset={} dim={} seed={} lambda={} gamma={} folds={} \
             accuracy={:.6} tp={} tn={} fp={} fn={} extract_s={:.6} train_s={:.6} predict_s={:.6} \
             version={}",
            self.descriptor,
            self.dataset,
            self.feature_dim,
            self.seed,
            self.lambda,
            self.gamma,
            folds,
            self.accuracy,
            self.confusion.true_pos,
            self.confusion.true_neg,
            self.confusion.false_pos,
            self.confusion.false_neg,
            self.extract_seconds,
            self.train_seconds,
            self.predict_seconds,
            version(),
        )
    }

    /// Per-fold record lines (cross-validation only).
    pub fn fold_lines(&self) -> Vec<String> {
        self.fold_accuracies
            .iter()
            .enumerate()
            .map(|(i, a)| format!("record=fold fold={i} accuracy={a:.6}"))
            .collect()
    }

    pub fn human_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("descriptor      {}\n", self.descriptor));
        out.push_str(&format!("dataset         {}\n", self.dataset));
        out.push_str(&format!("config          {}\n", self.config));
        out.push_str(&format!("feature dim     {}\n", self.feature_dim));
        out.push_str(&format!(
            "classifier      lambda={} gamma={:.6} seed={}\n",
            self.lambda, self.gamma, self.seed
        ));
        if let Some(folds) = self.folds {
            out.push_str(&format!(
                "cross-val       {folds} folds, per-fold accuracy [{}]\n",
                self.fold_accuracies
                    .iter()
                    .map(|a| format!("{a:.4}"))
                    .collect::<Vec<_>>()
                    .join(", ")
            ));
        }
        out.push_str(&format!(
            "confusion       tp={} tn={} fp={} fn={}\n",
            self.confusion.true_pos,
            self.confusion.true_neg,
            self.confusion.false_pos,
            self.confusion.false_neg
        ));
        out.push_str(&format!("accuracy        {:.4}\n", self.accuracy));
        out.push_str(&format!(
            "wall time (s)   extract={:.3} train={:.3} predict={:.3}\n",
            self.extract_seconds, self.train_seconds, self.predict_seconds
        ));
        out
    }
}
