//! On-disk formats: graph and split JSON, feature directories, model
//! checkpoints and the TSV inputs of the backbone stage.
//!
//! Every writer goes through a temporary sibling and a rename, so a failed
//! run never leaves a half-written file behind.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::backbone::Activity;
use crate::error::{Error, Result};
use crate::features::{FeatureBundle, MixtureParams, FOUNDATIONS, N_FOUNDATIONS};
use crate::gae::ModelParams;
use crate::graph::{EdgeSplit, Graph};
use crate::optim::{TrainConfig, TrainedModel};

pub const FEATURE_MANIFEST: &str = "manifest.json";
pub const COUNTS_FILE: &str = "counts.tsv";
pub const CHECKPOINT_MANIFEST: &str = "checkpoint.json";
const CHECKPOINT_FORMAT: &str = "concept-gae-checkpoint";
const CHECKPOINT_VERSION: u32 = 1;

pub fn framing_file(k: usize) -> String {
    format!("framing_{k}.tsv")
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn tmp_sibling(path: &Path) -> PathBuf {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!(".{name}.tmp-{}", std::process::id()))
}

/// Writes `bytes` to `path` through a temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let tmp = tmp_sibling(path);
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    result.map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

/// Populates a directory through `fill` on a temporary sibling, then swaps it in.
fn write_dir_atomic(dir: &Path, fill: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
    if let Some(parent) = dir.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let tmp = tmp_sibling(dir);
    if tmp.exists() {
        fs::remove_dir_all(&tmp).map_err(|e| Error::io(&tmp, e))?;
    }
    fs::create_dir(&tmp).map_err(|e| Error::io(&tmp, e))?;
    if let Err(e) = fill(&tmp) {
        let _ = fs::remove_dir_all(&tmp);
        return Err(e);
    }
    if dir.exists() {
        fs::remove_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::rename(&tmp, dir).map_err(|e| Error::io(dir, e))
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, to_json(value).as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphFile {
    nodes: Vec<String>,
    edges: Vec<(usize, usize)>,
}

pub fn read_graph(path: &Path) -> Result<Graph> {
    let file: GraphFile = read_json(path)?;
    Graph::from_indices(file.nodes, &file.edges).map_err(|e| Error::format(path, e.to_string()))
}

pub fn write_graph(path: &Path, g: &Graph) -> Result<()> {
    write_json(
        path,
        &GraphFile {
            nodes: g.node_names().to_vec(),
            edges: g.edges().to_vec(),
        },
    )
}

pub fn read_split(path: &Path, g: &Graph) -> Result<EdgeSplit> {
    let split: EdgeSplit = read_json(path)?;
    split.validate(g).map_err(|e| Error::format(path, e.to_string()))?;
    Ok(split)
}

pub fn write_split(path: &Path, split: &EdgeSplit) -> Result<()> {
    write_json(path, split)
}

/// Manifest of a feature directory. Keys beyond these are allowed and ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureManifest {
    pub nodes: Vec<String>,
    pub concepts: Vec<String>,
    pub foundations: Vec<String>,
    #[serde(flatten)]
    pub extra: BTreeMap<String, serde_json::Value>,
}

fn parse_table<T>(
    path: &Path,
    rows: usize,
    cols: usize,
    parse: impl Fn(&str) -> std::result::Result<T, String>,
) -> Result<Vec<T>> {
    let text = read_to_string(path)?;
    let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    if lines.len() != rows {
        return Err(Error::format(path, format!("expected {rows} rows, found {}", lines.len())));
    }
    let mut out = Vec::with_capacity(rows * cols);
    for (r, line) in lines.iter().enumerate() {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != cols {
            return Err(Error::format(
                path,
                format!("line {}: expected {cols} columns, found {}", r + 1, fields.len()),
            ));
        }
        for (c, field) in fields.iter().enumerate() {
            let v = parse(field.trim()).map_err(|m| Error::format(path, format!("line {}, column {}: {m}", r + 1, c + 1)))?;
            out.push(v);
        }
    }
    Ok(out)
}

fn parse_count(s: &str) -> std::result::Result<u64, String> {
    s.parse::<u64>().map_err(|_| format!("`{s}` is not a non-negative integer"))
}

fn parse_cosine(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if !v.is_finite() || !(-1.0..=1.0).contains(&v) {
        return Err(format!("{v} outside [-1, 1]"));
    }
    Ok(v)
}

pub fn read_features(dir: &Path) -> Result<FeatureBundle> {
    let manifest_path = dir.join(FEATURE_MANIFEST);
    let manifest: FeatureManifest = read_json(&manifest_path)?;
    if manifest.foundations != FOUNDATIONS {
        return Err(Error::format(
            &manifest_path,
            format!("foundations must be {FOUNDATIONS:?} in this order, got {:?}", manifest.foundations),
        ));
    }
    let (v, c) = (manifest.nodes.len(), manifest.concepts.len());
    let counts = parse_table(&dir.join(COUNTS_FILE), v, c, parse_count)?;
    let counts = Array2::from_shape_vec((v, c), counts).expect("table has v*c entries");
    let mut framing = Vec::with_capacity(N_FOUNDATIONS);
    for k in 0..N_FOUNDATIONS {
        let s = parse_table(&dir.join(framing_file(k)), v, c, parse_cosine)?;
        framing.push(Array2::from_shape_vec((v, c), s).expect("table has v*c entries"));
    }
    FeatureBundle::new(manifest.nodes, manifest.concepts, counts, framing)
        .map_err(|e| Error::format(&manifest_path, e.to_string()))
}

fn table<T: std::fmt::Display>(m: &Array2<T>) -> String {
    let mut out = String::new();
    for row in m.rows() {
        let fields: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&fields.join("\t"));
        out.push('\n');
    }
    out
}

pub fn write_features(dir: &Path, bundle: &FeatureBundle) -> Result<()> {
    let manifest = FeatureManifest {
        nodes: bundle.node_names().to_vec(),
        concepts: bundle.concepts().to_vec(),
        foundations: FOUNDATIONS.iter().map(|s| s.to_string()).collect(),
        extra: BTreeMap::new(),
    };
    write_dir_atomic(dir, |tmp| {
        write_json(&tmp.join(FEATURE_MANIFEST), &manifest)?;
        write_atomic(&tmp.join(COUNTS_FILE), table(bundle.counts()).as_bytes())?;
        for (k, s) in bundle.framing().iter().enumerate() {
            write_atomic(&tmp.join(framing_file(k)), table(s).as_bytes())?;
        }
        Ok(())
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BlobEntry {
    file: String,
    shape: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointManifest {
    format: String,
    version: u32,
    seed: u64,
    epoch: usize,
    config: TrainConfig,
    nodes: Vec<String>,
    concepts: Vec<String>,
    active_concepts: Vec<usize>,
    blobs: BTreeMap<String, BlobEntry>,
}

/// A trained model together with the embeddings it produced.
#[derive(Debug, Clone, PartialEq)]
pub struct SavedModel {
    pub params: ModelParams,
    pub config: TrainConfig,
    pub epoch: usize,
    pub nodes: Vec<String>,
    pub concepts: Vec<String>,
    pub active_concepts: Vec<usize>,
    /// Node embeddings, one row per node.
    pub z: Array2<f64>,
}

impl SavedModel {
    pub fn new(model: &TrainedModel, nodes: Vec<String>, concepts: Vec<String>, z: Array2<f64>) -> Self {
        SavedModel {
            params: model.params.clone(),
            config: model.config.clone(),
            epoch: model.epoch,
            nodes,
            concepts,
            active_concepts: model.active_concepts.clone(),
            z,
        }
    }
}

fn blob_bytes<'a>(values: impl Iterator<Item = &'a f64>) -> Vec<u8> {
    values.flat_map(|v| v.to_le_bytes()).collect()
}

pub fn write_checkpoint(dir: &Path, saved: &SavedModel) -> Result<()> {
    let p = &saved.params;
    let blobs: Vec<(&str, Vec<usize>, Vec<u8>)> = vec![
        ("w0", p.w0.shape().to_vec(), blob_bytes(p.w0.iter())),
        ("w1", p.w1.shape().to_vec(), blob_bytes(p.w1.iter())),
        ("beta_logits", p.mixture.beta_logits.shape().to_vec(), blob_bytes(p.mixture.beta_logits.iter())),
        ("gamma_logits", p.mixture.gamma_logits.shape().to_vec(), blob_bytes(p.mixture.gamma_logits.iter())),
        ("z", saved.z.shape().to_vec(), blob_bytes(saved.z.iter())),
    ];
    let manifest = CheckpointManifest {
        format: CHECKPOINT_FORMAT.into(),
        version: CHECKPOINT_VERSION,
        seed: saved.config.seed,
        epoch: saved.epoch,
        config: saved.config.clone(),
        nodes: saved.nodes.clone(),
        concepts: saved.concepts.clone(),
        active_concepts: saved.active_concepts.clone(),
        blobs: blobs
            .iter()
            .map(|(name, shape, _)| {
                (
                    name.to_string(),
                    BlobEntry {
                        file: format!("{name}.bin"),
                        shape: shape.clone(),
                    },
                )
            })
            .collect(),
    };
    write_dir_atomic(dir, |tmp| {
        for (name, _, bytes) in &blobs {
            write_atomic(&tmp.join(format!("{name}.bin")), bytes)?;
        }
        write_json(&tmp.join(CHECKPOINT_MANIFEST), &manifest)
    })
}

fn read_blob(dir: &Path, manifest: &CheckpointManifest, name: &str, rank: usize) -> Result<(Vec<usize>, Vec<f64>)> {
    let manifest_path = dir.join(CHECKPOINT_MANIFEST);
    let entry = manifest
        .blobs
        .get(name)
        .ok_or_else(|| Error::format(&manifest_path, format!("missing blob `{name}`")))?;
    if entry.shape.len() != rank {
        return Err(Error::format(&manifest_path, format!("blob `{name}` must have rank {rank}")));
    }
    let path = dir.join(&entry.file);
    let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    let expected = entry.shape.iter().product::<usize>() * 8;
    if bytes.len() != expected {
        return Err(Error::format(&path, format!("expected {expected} bytes, found {}", bytes.len())));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")))
        .collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::format(&path, "non-finite value"));
    }
    Ok((entry.shape.clone(), values))
}

fn matrix(dir: &Path, manifest: &CheckpointManifest, name: &str) -> Result<Array2<f64>> {
    let (shape, values) = read_blob(dir, manifest, name, 2)?;
    Ok(Array2::from_shape_vec((shape[0], shape[1]), values).expect("length checked"))
}

pub fn read_checkpoint(dir: &Path) -> Result<SavedModel> {
    let manifest_path = dir.join(CHECKPOINT_MANIFEST);
    let manifest: CheckpointManifest = read_json(&manifest_path)?;
    if manifest.format != CHECKPOINT_FORMAT || manifest.version != CHECKPOINT_VERSION {
        return Err(Error::format(
            &manifest_path,
            format!("unsupported checkpoint {} v{}", manifest.format, manifest.version),
        ));
    }
    let w0 = matrix(dir, &manifest, "w0")?;
    let w1 = matrix(dir, &manifest, "w1")?;
    let beta_logits = matrix(dir, &manifest, "beta_logits")?;
    let (_, gamma) = read_blob(dir, &manifest, "gamma_logits", 1)?;
    let z = matrix(dir, &manifest, "z")?;
    let c = manifest.concepts.len();
    let consistent = w0.nrows() == c
        && w1.nrows() == w0.ncols()
        && beta_logits.dim() == (c, N_FOUNDATIONS)
        && gamma.len() == c
        && z.dim() == (manifest.nodes.len(), w1.ncols())
        && manifest.active_concepts.iter().all(|&i| i < c);
    if !consistent {
        return Err(Error::format(&manifest_path, "blob shapes disagree with nodes and concepts"));
    }
    Ok(SavedModel {
        params: ModelParams {
            w0,
            w1,
            mixture: MixtureParams {
                beta_logits,
                gamma_logits: Array1::from(gamma),
            },
        },
        config: manifest.config,
        epoch: manifest.epoch,
        nodes: manifest.nodes,
        concepts: manifest.concepts,
        active_concepts: manifest.active_concepts,
        z,
    })
}

fn tsv_records(path: &Path, names: [&str; 3]) -> Result<Vec<(usize, [String; 3])>> {
    let text = read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::format(path, format!("line {}: expected 3 columns", i + 1)));
        }
        if i == 0 && fields == names {
            continue;
        }
        out.push((i + 1, [fields[0].to_owned(), fields[1].to_owned(), fields[2].to_owned()]));
    }
    Ok(out)
}

/// Weighted edge list: `node_i<TAB>node_j<TAB>weight`, optional header.
pub fn read_weighted_tsv(path: &Path) -> Result<crate::backbone::WeightedNetwork> {
    let mut triples = Vec::new();
    for (line, [a, b, w]) in tsv_records(path, ["node_i", "node_j", "weight"])? {
        let w: f64 = w
            .parse()
            .ok()
            .filter(|w: &f64| w.is_finite() && *w >= 0.0)
            .ok_or_else(|| Error::format(path, format!("line {line}: bad weight `{w}`")))?;
        triples.push((a, b, w));
    }
    crate::backbone::WeightedNetwork::from_triples(&triples).map_err(|e| Error::format(path, e.to_string()))
}

/// User activity: `user<TAB>node<TAB>count`, optional header.
pub fn read_activity_tsv(path: &Path) -> Result<Vec<Activity>> {
    tsv_records(path, ["user", "node", "count"])?
        .into_iter()
        .map(|(line, [user, node, count])| {
            let count = parse_count(&count).map_err(|m| Error::format(path, format!("line {line}: {m}")))?;
            Ok(Activity { user, node, count })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::split_edges;
    use crate::synth::{generate_planted, PlantedConfig};

    fn planted() -> (Graph, FeatureBundle) {
        let (g, b, _) = generate_planted(&PlantedConfig {
            n_nodes: 12,
            n_concepts: 6,
            n_informative: 2,
            ..PlantedConfig::default()
        })
        .unwrap();
        (g, b)
    }

    #[test]
    fn graph_and_split_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let (g, _) = planted();
        write_graph(&dir.path().join("g.json"), &g).unwrap();
        let back = read_graph(&dir.path().join("g.json")).unwrap();
        assert_eq!(back, g);
        let split = split_edges(&g, [0.6, 0.2, 0.2], 3).unwrap();
        write_split(&dir.path().join("s.json"), &split).unwrap();
        assert_eq!(read_split(&dir.path().join("s.json"), &g).unwrap(), split);
    }

    #[test]
    fn features_round_trip_bit_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let (_, b) = planted();
        let path = dir.path().join("features");
        write_features(&path, &b).unwrap();
        assert_eq!(read_features(&path).unwrap(), b);
        assert!(!dir.path().read_dir().unwrap().any(|e| e.unwrap().file_name().to_string_lossy().contains(".tmp")));
    }

    #[test]
    fn manifest_may_carry_extra_keys() {
        let dir = tempfile::tempdir().unwrap();
        let (_, b) = planted();
        write_features(dir.path(), &b).unwrap();
        let mpath = dir.path().join(FEATURE_MANIFEST);
        let mut m: serde_json::Value = read_json(&mpath).unwrap();
        m["chunker"] = "spacy".into();
        write_json(&mpath, &m).unwrap();
        assert_eq!(read_features(dir.path()).unwrap(), b);
    }

    #[test]
    fn malformed_feature_files_are_format_errors() {
        let (_, b) = planted();
        let cases: Vec<(&str, Box<dyn Fn(&str) -> String>)> = vec![
            (COUNTS_FILE, Box::new(|s| s.replacen('\t', "\t-", 1))),
            (COUNTS_FILE, Box::new(|s| s.replacen('\t', ".5\t", 1))),
            (COUNTS_FILE, Box::new(|s| s.lines().skip(1).collect::<Vec<_>>().join("\n"))),
            ("framing_2.tsv", Box::new(|s| s.replacen('\t', "\t1.5", 1))),
            ("framing_4.tsv", Box::new(|s| s.replacen('\t', "\t\t", 1))),
            (FEATURE_MANIFEST, Box::new(|s| s.replace("care/harm", "care"))),
            (FEATURE_MANIFEST, Box::new(|s| s[..s.len() / 2].to_string())),
        ];
        for (file, corrupt) in cases {
            let dir = tempfile::tempdir().unwrap();
            write_features(dir.path(), &b).unwrap();
            let p = dir.path().join(file);
            let text = fs::read_to_string(&p).unwrap();
            fs::write(&p, corrupt(&text)).unwrap();
            let err = read_features(dir.path()).unwrap_err();
            assert!(matches!(err, Error::Format { .. }), "{file}: {err}");
        }
        let empty = tempfile::tempdir().unwrap();
        assert!(matches!(read_features(empty.path()), Err(Error::Io { .. })));
    }

    #[test]
    fn checkpoint_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let params = ModelParams::glorot(4, 3, 2, 11);
        let model = TrainedModel {
            params,
            history: vec![],
            active_concepts: vec![0, 2],
            config: TrainConfig { seed: 11, ..TrainConfig::default() },
            epoch: 7,
        };
        let z = Array2::from_shape_fn((5, 2), |(i, j)| i as f64 - 0.1 * j as f64);
        let saved = SavedModel::new(
            &model,
            (0..5).map(|i| format!("v{i}")).collect(),
            (0..4).map(|i| format!("c{i}")).collect(),
            z,
        );
        write_checkpoint(&dir.path().join("ckpt"), &saved).unwrap();
        assert_eq!(read_checkpoint(&dir.path().join("ckpt")).unwrap(), saved);
        // truncated blob
        let blob = dir.path().join("ckpt/w1.bin");
        let bytes = fs::read(&blob).unwrap();
        fs::write(&blob, &bytes[..bytes.len() - 8]).unwrap();
        assert!(matches!(read_checkpoint(&dir.path().join("ckpt")), Err(Error::Format { .. })));
    }

    #[test]
    fn tsv_inputs_parse_with_optional_header() {
        let dir = tempfile::tempdir().unwrap();
        let w = dir.path().join("w.tsv");
        fs::write(&w, "node_i\tnode_j\tweight\na\tb\t2\nb\tc\t1.5\n").unwrap();
        let net = read_weighted_tsv(&w).unwrap();
        assert_eq!(net.node_names(), ["a", "b", "c"]);
        assert_eq!(net.weight(1, 2), 1.5);
        let a = dir.path().join("a.tsv");
        fs::write(&a, "u1\tx\t12\nu1\ty\t10\n").unwrap();
        assert_eq!(read_activity_tsv(&a).unwrap().len(), 2);
        fs::write(&a, "u1\tx\tmany\n").unwrap();
        assert!(matches!(read_activity_tsv(&a), Err(Error::Format { .. })));
    }
}
