use serde::{Deserialize, Serialize};

/// The settings a clustering run was started with.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub criterion: String,
    pub input: String,
    pub measure: String,
    pub n_init: Option<usize>,
    pub k: Option<usize>,
    /// `"auto"` or the value passed on the command line.
    pub dim: Option<String>,
    pub epsilon: f64,
    pub restarts: usize,
    pub max_sweeps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ConfigEcho,
    pub energy: f64,
    /// Rand index against the input's `label` column, when it has one.
    pub rand_vs_labels: Option<f64>,
    pub n_clusters: usize,
    pub cluster_sizes: Vec<usize>,
    /// The criterion's `N`, given or estimated; absent for Wards.
    pub dimension_n: Option<f64>,
    pub restarts_used: usize,
    pub best_restart: usize,
    pub sweeps_per_restart: Vec<usize>,
    pub wall_time_ms: u64,
    pub seed: u64,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    #[cfg(test)]
    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}
