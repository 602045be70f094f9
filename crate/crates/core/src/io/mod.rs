//! File boundary: data and label CSVs, subbasis / assignment / model JSON,
//! report emission and the synthetic generator.

mod report;
mod synth;

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::de::{self, Deserializer, MapAccess, Visitor};
use serde::Deserialize;
use thiserror::Error;

use crate::model::{BinaryLabel, ModelConfig, ModelSpec, PrototypeParams};
use crate::sheaf::{Assignment, Section, SheafError};
use crate::topology::{GroundSet, Topology, TopologyError};

pub use report::{attribution_csv, attribution_json, report_json, round_sig, topology_json};
pub use synth::{generate_synth, write_synth, SynthData, SynthSpec};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("{path}: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Sheaf(#[from] SheafError),
}

fn invalid(path: &str, message: impl Into<String>) -> IngestError {
    IngestError::Invalid {
        path: path.to_string(),
        message: message.into(),
    }
}

fn open(path: &Path) -> Result<File, IngestError> {
    File::open(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Ground set and global section read from an `id,v1,...,vr` table.
#[derive(Clone, Debug)]
pub struct DataTable {
    pub ground: GroundSet,
    pub global: Section,
}

pub fn read_data(path: &Path) -> Result<DataTable, IngestError> {
    parse_data(open(path)?, &path.display().to_string())
}

pub fn parse_data<R: Read>(reader: R, origin: &str) -> Result<DataTable, IngestError> {
    let csv_err = |source| IngestError::Csv {
        path: origin.to_string(),
        source,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.get(0) != Some("id") {
        return Err(invalid(origin, "first column must be `id`"));
    }
    let dim = header.len() - 1;
    if dim == 0 {
        return Err(invalid(origin, "no value columns"));
    }

    let mut ids = Vec::new();
    let mut rows = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let row = record
            .iter()
            .skip(1)
            .enumerate()
            .map(|(c, field)| match field.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(invalid(
                    origin,
                    format!(
                        "row {}: column `{}` is not a finite number: `{field}`",
                        line + 1,
                        &header[c + 1]
                    ),
                )),
            })
            .collect::<Result<Vec<f64>, _>>()?;
        ids.push(record[0].to_string());
        rows.push(row);
    }
    if ids.is_empty() {
        return Err(invalid(origin, "no data rows"));
    }
    let ground = GroundSet::new(ids)?;
    let global = Section::new(ground.full(), dim, rows)?;
    Ok(DataTable { ground, global })
}

/// Named label lists in file order.
pub type SubbasisSpec = Vec<(String, Vec<String>)>;

struct OrderedSubbasis(SubbasisSpec);

impl<'de> Deserialize<'de> for OrderedSubbasis {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = OrderedSubbasis;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an object mapping set names to label arrays")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Self::Value, A::Error> {
                let mut out: SubbasisSpec = Vec::new();
                while let Some((name, labels)) = map.next_entry::<String, Vec<String>>()? {
                    if out.iter().any(|(n, _)| *n == name) {
                        return Err(de::Error::custom(format!(
                            "duplicate subbasis name `{name}`"
                        )));
                    }
                    out.push((name, labels));
                }
                Ok(OrderedSubbasis(out))
            }
        }
        d.deserialize_map(V)
    }
}

pub fn read_subbasis(path: &Path) -> Result<SubbasisSpec, IngestError> {
    parse_subbasis(open(path)?, &path.display().to_string())
}

pub fn parse_subbasis<R: Read>(reader: R, origin: &str) -> Result<SubbasisSpec, IngestError> {
    let parsed: OrderedSubbasis =
        serde_json::from_reader(reader).map_err(|source| IngestError::Json {
            path: origin.to_string(),
            source,
        })?;
    Ok(parsed.0)
}

pub fn read_model_config(path: &Path) -> Result<ModelConfig, IngestError> {
    serde_json::from_reader(open(path)?).map_err(|source| IngestError::Json {
        path: path.display().to_string(),
        source,
    })
}

/// Reads an `id,label` table into per-ordinal labels. Every ground element
/// needs exactly one row; `s`/`ns` are always accepted alongside the aliases.
pub fn read_labels(
    path: &Path,
    ground: &GroundSet,
    s_aliases: &[String],
    ns_aliases: &[String],
) -> Result<Vec<BinaryLabel>, IngestError> {
    parse_labels(
        open(path)?,
        &path.display().to_string(),
        ground,
        s_aliases,
        ns_aliases,
    )
}

pub fn parse_labels<R: Read>(
    reader: R,
    origin: &str,
    ground: &GroundSet,
    s_aliases: &[String],
    ns_aliases: &[String],
) -> Result<Vec<BinaryLabel>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|source| IngestError::Csv {
            path: origin.to_string(),
            source,
        })?
        .clone();
    if header.iter().collect::<Vec<_>>() != ["id", "label"] {
        return Err(invalid(origin, "header must be `id,label`"));
    }
    let mut labels: Vec<Option<BinaryLabel>> = vec![None; ground.len()];
    for record in rdr.records() {
        let record = record.map_err(|source| IngestError::Csv {
            path: origin.to_string(),
            source,
        })?;
        let (id, raw) = (&record[0], &record[1]);
        let label = if raw == "s" || s_aliases.iter().any(|a| a == raw) {
            BinaryLabel::S
        } else if raw == "ns" || ns_aliases.iter().any(|a| a == raw) {
            BinaryLabel::Ns
        } else {
            return Err(invalid(origin, format!("unknown label `{raw}` for `{id}`")));
        };
        let i = ground
            .index_of(id)
            .ok_or_else(|| invalid(origin, format!("id `{id}` is not in the data")))?;
        if labels[i].replace(label).is_some() {
            return Err(invalid(origin, format!("id `{id}` labelled twice")));
        }
    }
    labels
        .into_iter()
        .enumerate()
        .map(|(i, l)| {
            l.ok_or_else(|| invalid(origin, format!("no label for `{}`", ground.label(i))))
        })
        .collect()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SectionEntry {
    set: Vec<String>,
    values: HashMap<String, Vec<f64>>,
}

/// Reads an explicit assignment: a JSON array of `{"set": [labels],
/// "values": {label: [v1, ...]}}`, one entry per non-empty open set.
pub fn read_assignment(
    path: &Path,
    topology: &Topology,
    dim: usize,
) -> Result<Assignment, IngestError> {
    parse_assignment(open(path)?, &path.display().to_string(), topology, dim)
}

pub fn parse_assignment<R: Read>(
    reader: R,
    origin: &str,
    topology: &Topology,
    dim: usize,
) -> Result<Assignment, IngestError> {
    let entries: Vec<SectionEntry> =
        serde_json::from_reader(reader).map_err(|source| IngestError::Json {
            path: origin.to_string(),
            source,
        })?;
    let ground = topology.ground();
    let mut sections: Vec<Option<Section>> = vec![None; topology.len()];
    sections[topology.empty_id().0] = Some(Section::empty(ground.len(), dim));
    for entry in entries {
        let set = ground.subset("assignment", &entry.set)?;
        let id = topology.require(&set)?;
        if id != topology.empty_id() && sections[id.0].is_some() {
            return Err(invalid(
                origin,
                format!("set {:?} assigned twice", entry.set),
            ));
        }
        if entry.values.len() != set.len() {
            return Err(invalid(
                origin,
                format!("set {:?} needs exactly one value per member", entry.set),
            ));
        }
        let rows = set
            .iter()
            .map(|i| {
                entry.values.get(ground.label(i)).cloned().ok_or_else(|| {
                    invalid(
                        origin,
                        format!("no value for `{}` in {:?}", ground.label(i), entry.set),
                    )
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        sections[id.0] = Some(Section::new(set, dim, rows)?);
    }
    let sections = sections
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            s.ok_or_else(|| {
                let labels = ground.sorted_labels(topology.open(crate::topology::OpenId(i)));
                invalid(origin, format!("open set {labels:?} has no section"))
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Assignment::new(topology, sections)?)
}

/// Turns a model file into a concrete model. The prototype family needs the
/// labels; `seed` replaces the file's seed when given.
pub fn build_model(
    config: &ModelConfig,
    labels: Option<Vec<BinaryLabel>>,
    seed: Option<u64>,
) -> Result<ModelSpec, String> {
    Ok(match config {
        ModelConfig::Average => ModelSpec::Average,
        ModelConfig::Statistic { which } => ModelSpec::Statistic(*which),
        ModelConfig::Graff { q } => ModelSpec::Graff { q: *q },
        ModelConfig::Prototype {
            shots,
            trials,
            seed: file_seed,
            ..
        } => {
            let labels = labels.ok_or("the prototype model needs --labels")?;
            let seed = seed.or(*file_seed).unwrap_or(0);
            ModelSpec::Prototype(PrototypeParams::new(labels, *shots, *trials, seed))
        }
    })
}
