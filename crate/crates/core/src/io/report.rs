use serde::ser::{SerializeMap, Serializer};
use serde::Serialize;
use serde_json::{json, Value};

use crate::inconsistency::{AttributionTally, InconsistencyReport, MaxGap};
use crate::model::ModelValue;
use crate::topology::{OpenId, Topology};

/// Rounds to 12 significant digits so reports compare byte-for-byte across
/// platforms and summation orders.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

/// A JSON object that keeps insertion order.
struct Ordered<V>(Vec<(String, V)>);

impl<V: Serialize> Serialize for Ordered<V> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

#[derive(Serialize)]
struct OpenJson {
    set: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    parts: Option<Vec<String>>,
    model: Value,
    local: f64,
    witness: Option<Vec<String>>,
    filtered: Ordered<GapJson>,
    skipped: Vec<SkippedJson>,
}

#[derive(Serialize)]
struct GapJson {
    value: f64,
    witness: Option<Vec<String>>,
}

#[derive(Serialize)]
struct SkippedJson {
    set: Vec<String>,
    reason: String,
}

#[derive(Serialize)]
struct GlobalJson {
    value: f64,
    at: Vec<String>,
}

#[derive(Serialize)]
struct ReportJson {
    opens: Vec<OpenJson>,
    global: GlobalJson,
    #[serde(skip_serializing_if = "Option::is_none")]
    attribution: Option<Ordered<usize>>,
}

fn labels(t: &Topology, id: OpenId) -> Vec<String> {
    t.ground().sorted_labels(t.open(id))
}

fn parts(t: &Topology, id: OpenId) -> Option<Vec<String>> {
    let mut names: Vec<String> = t
        .parts_of(id)?
        .into_iter()
        .map(|i| t.subbasis()[i].name.clone())
        .collect();
    names.sort();
    Some(names)
}

fn model_json(t: &Topology, m: &ModelValue) -> Value {
    match m {
        ModelValue::Scalar(x) | ModelValue::UnitScore(x) => json!(round_sig(*x)),
        ModelValue::AffineSubspace(a) => {
            let basis: Vec<Vec<f64>> = a
                .basis
                .column_iter()
                .map(|c| c.iter().map(|&v| round_sig(v)).collect())
                .collect();
            let basepoint: Vec<f64> = a.basepoint.iter().map(|&v| round_sig(v)).collect();
            json!({ "basepoint": basepoint, "basis": basis, "degenerate": a.degenerate })
        }
        ModelValue::Data(s) => {
            let rows: Vec<(String, Vec<f64>)> = s
                .iter()
                .map(|(i, v)| {
                    (
                        t.ground().label(i).to_string(),
                        v.iter().map(|&x| round_sig(x)).collect(),
                    )
                })
                .collect();
            serde_json::to_value(Ordered(rows)).expect("plain data serializes")
        }
        ModelValue::Null => Value::Null,
        ModelValue::Undefined(reason) => json!({ "undefined": reason }),
    }
}

fn gap_json(t: &Topology, g: &MaxGap) -> GapJson {
    GapJson {
        value: round_sig(g.value),
        witness: g.witness.map(|w| labels(t, w)),
    }
}

/// The analysis report as pretty-printed JSON with a trailing newline.
pub fn report_json(t: &Topology, report: &InconsistencyReport) -> String {
    let opens = report
        .opens
        .iter()
        .map(|o| OpenJson {
            set: labels(t, o.id),
            parts: parts(t, o.id),
            model: model_json(t, &o.model),
            local: round_sig(o.local.value),
            witness: o.local.witness.map(|w| labels(t, w)),
            filtered: Ordered(
                o.filtered
                    .iter()
                    .map(|(j, g)| (j.to_string(), gap_json(t, g)))
                    .collect(),
            ),
            skipped: o
                .local
                .skipped
                .iter()
                .map(|s| SkippedJson {
                    set: labels(t, s.set),
                    reason: s.reason.clone(),
                })
                .collect(),
        })
        .collect();
    let doc = ReportJson {
        opens,
        global: GlobalJson {
            value: round_sig(report.global.value),
            at: labels(t, report.global.at),
        },
        attribution: report
            .attribution
            .as_ref()
            .map(|a| Ordered(a.counts.clone())),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("report serializes");
    out.push('\n');
    out
}

/// Tally sorted by descending count, plus the bookkeeping fields.
pub fn attribution_json(t: &Topology, tally: &AttributionTally) -> String {
    let ranked: Vec<Value> = tally
        .ranked()
        .into_iter()
        .map(|(name, count)| json!({ "name": name, "count": count }))
        .collect();
    let skipped: Vec<Vec<String>> = tally.skipped.iter().map(|&id| labels(t, id)).collect();
    let doc = json!({
        "attribution": ranked,
        "contributing": tally.contributing,
        "skipped": skipped,
    });
    let mut out = serde_json::to_string_pretty(&doc).expect("tally serializes");
    out.push('\n');
    out
}

/// `name,count` rows sorted by descending count, ready for a bar chart.
pub fn attribution_csv(tally: &AttributionTally) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["name", "count"]).expect("in-memory write");
    for (name, count) in tally.ranked() {
        w.write_record([name, count.to_string()])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

/// Every open set with its covers (Hasse adjacency).
pub fn topology_json(t: &Topology) -> String {
    #[derive(Serialize)]
    struct Node {
        set: Vec<String>,
        #[serde(skip_serializing_if = "Option::is_none")]
        parts: Option<Vec<String>>,
        covers: Vec<Vec<String>>,
    }
    let opens: Vec<Node> = t
        .ids()
        .map(|id| Node {
            set: labels(t, id),
            parts: parts(t, id),
            covers: t.covers(id).iter().map(|&c| labels(t, c)).collect(),
        })
        .collect();
    let doc = json!({
        "opens": opens,
        "cover_edges": t.cover_edge_count(),
        "longest_chain": t.longest_chain(),
    });
    let mut out = serde_json::to_string_pretty(&doc).expect("topology serializes");
    out.push('\n');
    out
}
