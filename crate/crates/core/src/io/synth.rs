//! Planted-defect synthetic data.
//!
//! Every part holds two Gaussian clusters (`s` and `ns`) whose means lie in
//! the plane spanned by a shared stem direction `u` and a part direction
//! `v_p ⟂ u`: `2·v_p ± (separation/2)·u`, with unit isotropic noise. The
//! defect part, if any, gets its labels randomly permuted, so its label no
//! longer follows the clusters.

use std::fs;
use std::path::Path;

use nalgebra::DVector;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::IngestError;
use crate::model::BinaryLabel;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SynthSpec {
    pub parts: usize,
    pub per_part: usize,
    pub dim: usize,
    pub separation: f64,
    pub defect: Option<usize>,
    pub seed: u64,
}

impl SynthSpec {
    /// `min_per_part` is the smallest part that still supports the intended
    /// downstream model, e.g. `2·shots + 1` for prototype episodes.
    pub fn validate(&self, min_per_part: usize) -> Result<(), String> {
        if self.parts == 0 {
            return Err("need at least one part".into());
        }
        if self.per_part < min_per_part.max(2) {
            return Err(format!(
                "{} elements per part, need at least {}",
                self.per_part,
                min_per_part.max(2)
            ));
        }
        if self.dim < 2 {
            return Err("feature dimension must be at least 2".into());
        }
        if !self.separation.is_finite() || self.separation < 0.0 {
            return Err(format!(
                "separation must be finite and >= 0, got {}",
                self.separation
            ));
        }
        if let Some(d) = self.defect {
            if d >= self.parts {
                return Err(format!("defect part {d} out of range 0..{}", self.parts));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SynthData {
    pub ids: Vec<String>,
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<BinaryLabel>,
    /// `(part name, member ids)` in part order.
    pub parts: Vec<(String, Vec<String>)>,
}

fn unit_gaussian(rng: &mut ChaCha8Rng, dim: usize) -> DVector<f64> {
    DVector::from_fn(dim, |_, _| rng.sample(StandardNormal))
}

/// Random unit vector orthogonal to the unit vector `u`.
fn orthogonal_unit(rng: &mut ChaCha8Rng, u: &DVector<f64>) -> DVector<f64> {
    loop {
        let mut v = unit_gaussian(rng, u.len());
        v -= u * u.dot(&v);
        let n = v.norm();
        if n > 1e-6 {
            return v / n;
        }
    }
}

pub fn generate_synth(spec: &SynthSpec) -> SynthData {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let stem = loop {
        let u = unit_gaussian(&mut rng, spec.dim);
        if u.norm() > 1e-6 {
            break u.normalize();
        }
    };
    let width = (spec.parts * spec.per_part).to_string().len();

    let mut data = SynthData {
        ids: Vec::new(),
        features: Vec::new(),
        labels: Vec::new(),
        parts: Vec::new(),
    };
    for p in 0..spec.parts {
        let center = orthogonal_unit(&mut rng, &stem) * 2.0;
        let n_s = spec.per_part / 2;
        let mut labels: Vec<BinaryLabel> = (0..spec.per_part)
            .map(|i| {
                if i < n_s {
                    BinaryLabel::S
                } else {
                    BinaryLabel::Ns
                }
            })
            .collect();
        let mut members = Vec::with_capacity(spec.per_part);
        for (i, &label) in labels.iter().enumerate() {
            let side = if label == BinaryLabel::S { 0.5 } else { -0.5 };
            let x = &center + &stem * (side * spec.separation) + unit_gaussian(&mut rng, spec.dim);
            let id = format!("e{:0width$}", p * spec.per_part + i);
            members.push(id.clone());
            data.ids.push(id);
            data.features.push(x.iter().copied().collect());
        }
        if spec.defect == Some(p) {
            labels.shuffle(&mut rng);
        }
        data.labels.extend(labels);
        data.parts.push((format!("part{p}"), members));
    }
    data
}

/// Writes `data.csv`, `labels.csv` and `subbasis.json` into `dir`.
pub fn write_synth(data: &SynthData, dir: &Path) -> Result<(), IngestError> {
    let io_err = |path: &Path, source| IngestError::Io {
        path: path.display().to_string(),
        source,
    };
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;

    let dim = data.features.first().map_or(0, Vec::len);
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<String> = std::iter::once("id".to_string())
        .chain((1..=dim).map(|c| format!("v{c}")))
        .collect();
    w.write_record(&header).expect("in-memory write");
    for (id, row) in data.ids.iter().zip(&data.features) {
        let record: Vec<String> = std::iter::once(id.clone())
            .chain(row.iter().map(|v| format!("{v:.17e}")))
            .collect();
        w.write_record(&record).expect("in-memory write");
    }
    let path = dir.join("data.csv");
    fs::write(&path, w.into_inner().expect("in-memory flush")).map_err(|e| io_err(&path, e))?;

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["id", "label"]).expect("in-memory write");
    for (id, label) in data.ids.iter().zip(&data.labels) {
        let l = match label {
            BinaryLabel::S => "s",
            BinaryLabel::Ns => "ns",
        };
        w.write_record([id.as_str(), l]).expect("in-memory write");
    }
    let path = dir.join("labels.csv");
    fs::write(&path, w.into_inner().expect("in-memory flush")).map_err(|e| io_err(&path, e))?;

    let mut json = String::from("{\n");
    for (i, (name, members)) in data.parts.iter().enumerate() {
        let sep = if i + 1 == data.parts.len() { "" } else { "," };
        json.push_str(&format!(
            "  {}: {}{sep}\n",
            serde_json::to_string(name).expect("string serializes"),
            serde_json::to_string(members).expect("strings serialize")
        ));
    }
    json.push_str("}\n");
    let path = dir.join("subbasis.json");
    fs::write(&path, json).map_err(|e| io_err(&path, e))?;
    Ok(())
}
