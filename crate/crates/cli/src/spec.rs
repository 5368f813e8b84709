//! Benchmark spec loading.

use pileup_core::harness::SimulationConfig;
use pileup_core::{CoreError, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// One labelled benchmark cell with an optional acceptance band on the
/// mean MISE.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkCell {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<(f64, f64)>,
    pub config: SimulationConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkSpec {
    pub name: String,
    pub configs: Vec<BenchmarkCell>,
}

const FIGURE2: &str = include_str!("../specs/figure2.json");
const TABLE1_LITE: &str = include_str!("../specs/table1-lite.json");

/// Resolves a bundled spec name or loads a JSON file.
pub fn load(name_or_path: &str) -> Result<BenchmarkSpec> {
    let text = match name_or_path {
        "figure2" => FIGURE2.to_string(),
        "table1-lite" => TABLE1_LITE.to_string(),
        path => std::fs::read_to_string(Path::new(path))
            .map_err(|e| CoreError::input(format!("cannot read spec {path:?}: {e}")))?,
    };
    let spec: BenchmarkSpec = serde_json::from_str(&text)
        .map_err(|e| CoreError::input(format!("malformed benchmark spec: {e}")))?;
    if spec.configs.is_empty() {
        return Err(CoreError::input(
            "benchmark spec lists no configurations".to_string(),
        ));
    }
    for cell in &spec.configs {
        cell.config.validate()?;
        if let Some((lo, hi)) = cell.band {
            if !(hi > lo && lo >= 0.0) {
                return Err(CoreError::input(format!(
                    "cell {:?} declares an invalid band ({lo}, {hi})",
                    cell.label
                )));
            }
        }
    }
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_specs_parse() {
        let fig2 = load("figure2").unwrap();
        assert_eq!(fig2.configs.len(), 12);
        let t1 = load("table1-lite").unwrap();
        assert_eq!(t1.configs.len(), 8);
        assert!(t1.configs.iter().all(|c| c.band.is_some()));
    }

    #[test]
    fn missing_file_is_input_error() {
        assert!(load("/nonexistent/spec.json").is_err());
    }
}
