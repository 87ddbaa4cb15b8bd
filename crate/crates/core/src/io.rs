//! Artifact formats. Tabular files start with `# key: value` header lines;
//! line-delimited JSON files start with one header object.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::branching_extract::{AtomMeasure, GenealogyTree};
use crate::cmj_sim::ParticleEvent;
use crate::error::{Error, Result};
use crate::formulas::Prediction;
use crate::levy_model::{LevyModel, Orientation};
use crate::path_sim::{JumpEvent, PathRecord};
use crate::rng::GENERATOR_ID;
use crate::semigroup_solver::KernelCurve;

/// SHA-256 of the model's canonical JSON form, hex encoded.
pub fn model_hash(model: &LevyModel) -> String {
    let canonical = serde_json::json!({
        "orientation": model.orientation(),
        "drift": model.drift(),
        "start": model.start(),
        "measure": model.measure(),
    });
    hex::encode(Sha256::digest(canonical.to_string().as_bytes()))
}

/// Ordered key/value header of a tabular artifact.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Header {
    pub fields: Vec<(String, String)>,
}

impl Header {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.fields.push((key.to_string(), value.to_string()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.fields.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        for (k, v) in &self.fields {
            writeln!(w, "# {k}: {v}")?;
        }
        Ok(())
    }

    /// Splits leading `# key: value` lines off `text`.
    pub fn parse(text: &str) -> (Header, Vec<&str>) {
        let mut header = Header::new();
        let mut body = Vec::new();
        for line in text.lines() {
            match line.strip_prefix("# ").and_then(|l| l.split_once(": ")) {
                Some((k, v)) if body.is_empty() => header.fields.push((k.to_string(), v.to_string())),
                _ => body.push(line),
            }
        }
        (header, body)
    }
}

/// First line of a path file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathHeader {
    pub model_hash: String,
    pub orientation: Orientation,
    pub drift: f64,
    pub start: f64,
    pub eps: f64,
    pub seed: u64,
    pub generator: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

impl PathHeader {
    pub fn new(model: &LevyModel, eps: f64, seed: u64) -> Self {
        Self {
            model_hash: model_hash(model),
            orientation: model.orientation(),
            drift: model.drift(),
            start: model.start(),
            eps,
            seed,
            generator: GENERATOR_ID.to_string(),
            config_hash: None,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct PathLine {
    index: u64,
    tau0: f64,
    jump_rate: f64,
    dropped_drift: f64,
    events: Vec<[f64; 3]>,
}

#[derive(Serialize, Deserialize)]
struct HeaderLine<T> {
    header: T,
}

/// Writes paths as line-delimited JSON; events are `[u, pre_level, z]`.
pub fn write_paths(w: &mut impl Write, header: &PathHeader, paths: &[PathRecord]) -> Result<()> {
    writeln!(w, "{}", to_json(&HeaderLine { header })?)?;
    for p in paths {
        let line = PathLine {
            index: p.index,
            tau0: p.tau0,
            jump_rate: p.jump_rate,
            dropped_drift: p.dropped_drift,
            events: p.events.iter().map(|e| [e.time, e.pre_level, e.size]).collect(),
        };
        writeln!(w, "{}", to_json(&line)?)?;
    }
    Ok(())
}

pub fn read_paths(r: impl BufRead) -> Result<(PathHeader, Vec<PathRecord>)> {
    let mut lines = r.lines().enumerate();
    let (_, first) = lines.next().ok_or(Error::Format { line: 1, message: "empty path file".into() })?;
    let header: PathHeader = from_json::<HeaderLine<PathHeader>>(&first?, 1)?.header;
    let mut paths = Vec::new();
    for (i, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let p: PathLine = from_json(&line, i + 1)?;
        paths.push(PathRecord {
            index: p.index,
            seed: header.seed,
            orientation: header.orientation,
            drift: header.drift,
            start: header.start,
            truncation: header.eps,
            jump_rate: p.jump_rate,
            dropped_drift: p.dropped_drift,
            events: p.events.iter().map(|e| JumpEvent { time: e[0], pre_level: e[1], size: e[2] }).collect(),
            tau0: p.tau0,
        });
    }
    Ok((header, paths))
}

/// Atom table: `path_index, level, atom`.
pub fn write_atoms<'a>(
    w: &mut impl Write,
    header: &Header,
    rows: impl IntoIterator<Item = (u64, &'a AtomMeasure)>,
) -> Result<()> {
    header.write_to(w)?;
    writeln!(w, "path_index\tlevel\tatom")?;
    for (index, m) in rows {
        for x in &m.atoms {
            writeln!(w, "{index}\t{}\t{x}", m.level)?;
        }
    }
    Ok(())
}

/// Genealogy table: `node_id, parent_id, birth, position, death`; the
/// root's parent is written as `-`.
pub fn write_genealogy(w: &mut impl Write, header: &Header, tree: &GenealogyTree) -> Result<()> {
    header.write_to(w)?;
    writeln!(w, "node_id\tparent_id\tbirth\tposition\tdeath")?;
    for (id, n) in tree.nodes.iter().enumerate() {
        let parent = n.parent.map_or_else(|| "-".to_string(), |p| p.to_string());
        writeln!(w, "{id}\t{parent}\t{}\t{}\t{}", n.birth, n.position, n.death)?;
    }
    Ok(())
}

/// Kernel grid: `r, G(r), cumulative`, headed by step, tolerance,
/// sweep count and final residual.
pub fn write_grid(w: &mut impl Write, header: &Header, curve: &KernelCurve) -> Result<()> {
    let mut h = header.clone();
    h.fields.push(("step".into(), curve.step.to_string()));
    h.fields.push(("tol".into(), curve.tol.to_string()));
    h.fields.push(("iterations".into(), curve.iterations.to_string()));
    h.fields.push(("residual".into(), curve.residual.to_string()));
    h.write_to(w)?;
    writeln!(w, "r\tG\tcumulative")?;
    for (j, (g, c)) in curve.values.iter().zip(&curve.cumulative).enumerate() {
        writeln!(w, "{}\t{g}\t{c}", curve.node(j))?;
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct EventLine {
    id: usize,
    parent: Option<usize>,
    birth: f64,
    position: f64,
}

/// CMJ event log as line-delimited JSON after a header object.
pub fn write_event_log<T: Serialize>(w: &mut impl Write, header: &T, particles: &[ParticleEvent]) -> Result<()> {
    writeln!(w, "{}", to_json(&HeaderLine { header })?)?;
    for p in particles {
        let line = EventLine { id: p.id, parent: p.parent, birth: p.birth, position: p.position };
        writeln!(w, "{}", to_json(&line)?)?;
    }
    Ok(())
}

pub fn read_event_log(r: impl BufRead) -> Result<(serde_json::Value, Vec<ParticleEvent>)> {
    let mut lines = r.lines().enumerate();
    let (_, first) = lines.next().ok_or(Error::Format { line: 1, message: "empty event log".into() })?;
    let header = from_json::<HeaderLine<serde_json::Value>>(&first?, 1)?.header;
    let mut out = Vec::new();
    for (i, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let e: EventLine = from_json(&line, i + 1)?;
        out.push(ParticleEvent { id: e.id, parent: e.parent, birth: e.birth, position: e.position });
    }
    Ok((header, out))
}

/// Prediction table: `tag, parameters, value` with parameters as
/// `k=v` pairs joined by `;`.
pub fn write_predictions(w: &mut impl Write, header: &Header, preds: &[Prediction]) -> Result<()> {
    header.write_to(w)?;
    writeln!(w, "tag\tparameters\tvalue")?;
    for p in preds {
        let params: Vec<String> = p.parameters.iter().map(|(k, v)| format!("{k}={v}")).collect();
        writeln!(w, "{}\t{}\t{}", p.tag, params.join(";"), p.value)?;
    }
    Ok(())
}

pub fn read_predictions(text: &str) -> Result<(Header, Vec<Prediction>)> {
    let (header, body) = Header::parse(text);
    let offset = header.fields.len() + 2;
    let mut out = Vec::new();
    for (i, line) in body.iter().enumerate().skip(1) {
        let bad = |m: &str| Error::Format { line: i + offset - 1, message: m.to_string() };
        let cols: Vec<&str> = line.split('\t').collect();
        let [tag, params, value] = cols[..] else { return Err(bad("expected three columns")) };
        let mut parameters = Vec::new();
        for kv in params.split(';').filter(|s| !s.is_empty()) {
            let (k, v) = kv.split_once('=').ok_or_else(|| bad("parameter without '='"))?;
            parameters.push((k.to_string(), v.parse().map_err(|_| bad("parameter value is not a number"))?));
        }
        let value = value.parse().map_err(|_| bad("value is not a number"))?;
        out.push(Prediction { tag: tag.to_string(), parameters, value });
    }
    Ok((header, out))
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string(v).map_err(|e| Error::Io(e.to_string()))
}

fn from_json<T: for<'de> Deserialize<'de>>(s: &str, line: usize) -> Result<T> {
    serde_json::from_str(s).map_err(|e| Error::Format { line, message: e.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy_model::JumpMeasure;
    use crate::path_sim::batch_simulate;

    fn model_a() -> LevyModel {
        LevyModel::new(2.0, JumpMeasure::exponential(1.0, 1.0).unwrap(), Orientation::SubordinatorNegativeDrift, 2.0).unwrap()
    }

    #[test]
    fn paths_round_trip() {
        let m = model_a();
        let paths = batch_simulate(&m, 1e-9, 20, 4).unwrap();
        let mut buf = Vec::new();
        write_paths(&mut buf, &PathHeader::new(&m, 1e-9, 4), &paths).unwrap();
        let (h, back) = read_paths(&buf[..]).unwrap();
        assert_eq!(h.seed, 4);
        assert_eq!(h.model_hash, model_hash(&m));
        assert_eq!(back, paths);
    }

    #[test]
    fn model_hash_tracks_parameters() {
        let a = model_a();
        assert_eq!(model_hash(&a), model_hash(&a.clone()));
        assert_ne!(model_hash(&a), model_hash(&a.with_start(1.0).unwrap()));
        assert_eq!(model_hash(&a).len(), 64);
    }

    #[test]
    fn predictions_round_trip() {
        let preds = vec![Prediction::new("hitting", &[("a", 1.0), ("q", 1.5)], (-1.0f64).exp())];
        let mut buf = Vec::new();
        write_predictions(&mut buf, &Header::new().with("seed", 3), &preds).unwrap();
        let (h, back) = read_predictions(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(h.get("seed"), Some("3"));
        assert_eq!(back, preds);
        assert!(matches!(read_predictions("tag\tparameters\tvalue\nx\ta=1\tnope"), Err(Error::Format { .. })));
    }

    #[test]
    fn event_log_round_trip() {
        let ev = vec![
            ParticleEvent { id: 0, parent: None, birth: 0.0, position: 2.0 },
            ParticleEvent { id: 1, parent: Some(0), birth: 0.5, position: 0.25 },
        ];
        let mut buf = Vec::new();
        write_event_log(&mut buf, &serde_json::json!({"seed": 1}), &ev).unwrap();
        let (h, back) = read_event_log(&buf[..]).unwrap();
        assert_eq!(h["seed"], 1);
        assert_eq!(back, ev);
    }
}
