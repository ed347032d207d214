//! Dataset and manifest file formats for the CLI.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use shiftsel::harness::{ExperimentConfig, Instance};
use shiftsel::sim::{
    sample_designs, sample_labeled, sequence_from_string, sequence_to_string, DesignBatch,
};

#[derive(Debug, Serialize, Deserialize)]
struct ConfigRow {
    id: String,
    temperature: f64,
    theta: f64,
    ratio_bound: f64,
}

/// Resolved instance manifest written next to the exported datasets.
#[derive(Debug, Serialize, Deserialize)]
struct InstanceManifest {
    schema_version: u32,
    sites: usize,
    alphabet: usize,
    noise_sd: f64,
    predictor_sd: f64,
    predictor_intercept: f64,
    site_effects: Vec<Vec<f64>>,
    predictor_table: Vec<Vec<f64>>,
    configs: Vec<ConfigRow>,
}

pub struct ManifestSummary {
    pub alphabet: usize,
    pub config_ids: Vec<String>,
}

pub fn instance_to_toml(cfg: &ExperimentConfig, instance: &Instance) -> Result<String> {
    let manifest = InstanceManifest {
        schema_version: cfg.schema_version,
        sites: instance.space.sites,
        alphabet: instance.space.alphabet,
        noise_sd: instance.oracle.noise_sd,
        predictor_sd: instance.predictor_sd,
        predictor_intercept: instance.predictor.intercept,
        site_effects: instance.oracle.site_effects.clone(),
        predictor_table: instance.predictor.table.clone(),
        configs: instance
            .configs
            .iter()
            .map(|c| ConfigRow {
                id: c.id.clone(),
                temperature: c.temperature,
                theta: c.theta,
                ratio_bound: c.ratio_bound,
            })
            .collect(),
    };
    Ok(toml::to_string(&manifest)?)
}

pub fn read_instance_manifest(path: &Path) -> Result<ManifestSummary> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let manifest: InstanceManifest = toml::from_str(&text)?;
    Ok(ManifestSummary {
        alphabet: manifest.alphabet,
        config_ids: manifest.configs.into_iter().map(|c| c.id).collect(),
    })
}

/// One labeled dataset draw: sequence, noisy label, prediction.
pub fn simulate_labeled(cfg: &ExperimentConfig, instance: &Instance) -> Vec<(Vec<u8>, f64, f64)> {
    let drawn = sample_labeled(
        &instance.labeled_dist,
        &instance.oracle,
        cfg.experiment.n_labeled,
        cfg.experiment.master_seed,
    );
    drawn
        .into_iter()
        .map(|(x, y)| {
            let pred = instance.predictor.predict(&x);
            (x, y, pred)
        })
        .collect()
}

/// One design batch draw for configuration index `c`.
pub fn simulate_designs(cfg: &ExperimentConfig, instance: &Instance, c: usize) -> DesignBatch {
    sample_designs(
        &instance.configs[c].design,
        &instance.predictor,
        cfg.experiment.n_designs,
        cfg.experiment.master_seed + 1 + c as u64,
    )
}

pub fn labeled_to_tsv(rows: &[(Vec<u8>, f64, f64)]) -> String {
    let mut out = String::from("sequence\tlabel\tprediction\n");
    for (x, y, pred) in rows {
        out.push_str(&format!("{}\t{y}\t{pred}\n", sequence_to_string(x)));
    }
    out
}

pub fn labeled_from_tsv(text: &str, alphabet: usize) -> Result<Vec<(Vec<u8>, f64, f64)>> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 && line.starts_with("sequence") {
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        anyhow::ensure!(cols.len() == 3, "line {}: expected 3 columns", i + 1);
        rows.push((
            sequence_from_string(cols[0], alphabet)?,
            cols[1].parse()?,
            cols[2].parse()?,
        ));
    }
    Ok(rows)
}

pub fn designs_to_tsv(batch: &DesignBatch) -> String {
    let mut out = String::from("sequence\tprediction\n");
    for (x, pred) in batch.sequences.iter().zip(&batch.predictions) {
        out.push_str(&format!("{}\t{pred}\n", sequence_to_string(x)));
    }
    out
}

pub fn design_predictions_from_tsv(text: &str, alphabet: usize) -> Result<Vec<f64>> {
    let mut preds = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 && line.starts_with("sequence") {
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        anyhow::ensure!(cols.len() == 2, "line {}: expected 2 columns", i + 1);
        sequence_from_string(cols[0], alphabet)?; // validate
        preds.push(cols[1].parse()?);
    }
    Ok(preds)
}

/// Sequences, one per line; tab-separated trailing columns and header or
/// comment lines are ignored.
pub fn read_sequences(path: &Path, alphabet: usize) -> Result<Vec<Vec<u8>>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut seqs = Vec::new();
    for line in text.lines() {
        let token = line.split_whitespace().next().unwrap_or("");
        if token.is_empty() || token.starts_with('#') || token == "sequence" {
            continue;
        }
        seqs.push(sequence_from_string(token, alphabet)?);
    }
    Ok(seqs)
}
