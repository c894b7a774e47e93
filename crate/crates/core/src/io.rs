//! File formats: parent-array CSV for grown trees, JSON for skeletons and
//! marked skeletons, and the provenance header every output carries.
//!
//! Floats go through `serde_json`'s shortest round-trip formatting, so a
//! written value parses back to the same bits.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::embellish::EmbellishedTree;
use crate::error::{Error, Result};
use crate::growth::{GrowthTree, VertexKind, NO_PARENT};
use crate::skeleton::{Branch, Skeleton, TreePoint};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Provenance attached to every output file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Meta {
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
}

impl Meta {
    /// `config` is any canonical rendering of the run configuration.
    pub fn new(config: &str, seed: u64) -> Self {
        Self {
            version: VERSION.to_string(),
            config_hash: config_hash(config),
            seed,
        }
    }

    /// One `#` comment line for CSV outputs.
    pub fn comment_line(&self) -> String {
        format!(
            "# inhomtree {} config={} seed={}",
            self.version, self.config_hash, self.seed
        )
    }
}

/// First 16 hex digits of the SHA-256 of `config`.
pub fn config_hash(config: &str) -> String {
    let digest = Sha256::digest(config.as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

fn parse_err(offset: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        offset,
        message: message.into(),
    }
}

// ─── parent CSV ────────────────────────────────────────────────────────────

pub const PARENT_HEADER: [&str; 5] = [
    "vertex_id",
    "parent_id",
    "kind",
    "creation_step",
    "leaf_index",
];

#[derive(Debug, Serialize, Deserialize)]
struct ParentRow {
    vertex_id: u32,
    parent_id: i64,
    kind: VertexKind,
    creation_step: u32,
    leaf_index: i64,
}

/// Parent-array CSV. The comment lines carry the provenance and `ell`, `n`.
pub fn write_parent_csv(t: &GrowthTree, meta: &Meta) -> Result<String> {
    let mut out = format!("{}\n# ell={} n={}\n", meta.comment_line(), t.ell(), t.n());
    let mut w = csv::Writer::from_writer(Vec::new());
    for v in 0..t.vertex_count() as u32 {
        w.serialize(ParentRow {
            vertex_id: v,
            parent_id: t.parent(v).map_or(-1, |p| p as i64),
            kind: t.kind(v),
            creation_step: t.creation_step(v),
            leaf_index: t.leaf_index(v).map_or(-1, |i| i as i64),
        })
        .map_err(csv_err)?;
    }
    let body = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    out.push_str(&String::from_utf8(body).expect("csv output is utf-8"));
    Ok(out)
}

fn csv_err(e: csv::Error) -> Error {
    let offset = e.position().map_or(0, |p| p.byte());
    parse_err(offset, e.to_string())
}

/// Reads a parent CSV written by [`write_parent_csv`].
pub fn read_parent_csv(text: &str) -> Result<GrowthTree> {
    let (mut ell, mut n) = (None, None);
    let mut offset = 0u64;
    for line in text.split_inclusive('\n') {
        let Some(rest) = line.strip_prefix('#') else {
            break;
        };
        for tok in rest.split_whitespace() {
            let parsed = |v: &str| {
                v.parse::<u64>()
                    .map_err(|_| parse_err(offset, format!("bad value in {tok:?}")))
            };
            if let Some(v) = tok.strip_prefix("ell=") {
                ell = Some(parsed(v)? as u32);
            } else if let Some(v) = tok.strip_prefix("n=") {
                n = Some(parsed(v)?);
            }
        }
        offset += line.len() as u64;
    }
    let (Some(ell), Some(n)) = (ell, n) else {
        return Err(parse_err(0, "missing `# ell=.. n=..` comment line"));
    };
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = r.headers().map_err(csv_err)?;
    if header.iter().ne(PARENT_HEADER) {
        return Err(parse_err(
            offset,
            format!("expected header {}", PARENT_HEADER.join(",")),
        ));
    }
    let (mut parent, mut kind, mut creation) = (Vec::new(), Vec::new(), Vec::new());
    let mut leaves: Vec<(i64, u32)> = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let at = rec.position().map_or(0, |p| p.byte());
        let row: ParentRow = rec.deserialize(None).map_err(csv_err)?;
        if row.vertex_id as usize != parent.len() {
            return Err(parse_err(
                at,
                format!("vertex ids must be 0, 1, 2, ...; got {}", row.vertex_id),
            ));
        }
        parent.push(if row.parent_id < 0 {
            NO_PARENT
        } else {
            row.parent_id as u32
        });
        kind.push(row.kind);
        creation.push(row.creation_step);
        if row.kind == VertexKind::Leaf {
            leaves.push((row.leaf_index, row.vertex_id));
        }
    }
    let t = GrowthTree::from_parts(ell, n, parent, kind, creation)
        .map_err(|e| parse_err(offset, e.to_string()))?;
    for (idx, v) in leaves {
        if t.leaf_index(v).map(|i| i as i64) != Some(idx) {
            return Err(parse_err(offset, format!("leaf {v} has leaf_index {idx}")));
        }
    }
    Ok(t)
}

// ─── skeleton JSON ─────────────────────────────────────────────────────────

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct BranchJson {
    len: f64,
    attach_branch: i64,
    attach_offset: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct SkeletonJson {
    ell: u32,
    cuts: Vec<f64>,
    branches: Vec<BranchJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    markers: Option<Vec<(usize, f64, u32, u32)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    meta: Option<Meta>,
}

fn skeleton_json(s: &Skeleton) -> SkeletonJson {
    SkeletonJson {
        ell: s.ell(),
        cuts: s.cuts().to_vec(),
        branches: s
            .branches()
            .iter()
            .map(|b| BranchJson {
                len: b.length,
                attach_branch: b.attach.map_or(-1, |p| p.branch as i64),
                attach_offset: b.attach.map_or(0.0, |p| p.offset),
            })
            .collect(),
        n: None,
        markers: None,
        meta: None,
    }
}

fn skeleton_from_json(j: &SkeletonJson) -> Result<Skeleton> {
    let branches: Vec<Branch> = j
        .branches
        .iter()
        .map(|b| Branch {
            length: b.len,
            attach: (b.attach_branch >= 0)
                .then(|| TreePoint::new(b.attach_branch as usize, b.attach_offset)),
        })
        .collect();
    Skeleton::from_parts(j.ell, j.cuts.clone(), &branches)
}

/// Converts a JSON line/column error position into a byte offset.
fn json_err(text: &str, e: serde_json::Error) -> Error {
    let mut offset = 0usize;
    for (i, line) in text.split_inclusive('\n').enumerate() {
        if i + 1 == e.line() {
            offset += e.column().saturating_sub(1).min(line.len());
            break;
        }
        offset += line.len();
    }
    parse_err(offset as u64, e.to_string())
}

pub fn write_skeleton_json(s: &Skeleton, meta: Option<&Meta>) -> String {
    let mut j = skeleton_json(s);
    j.meta = meta.cloned();
    serde_json::to_string_pretty(&j).expect("skeleton serializes")
}

pub fn read_skeleton_json(text: &str) -> Result<Skeleton> {
    let j: SkeletonJson = serde_json::from_str(text).map_err(|e| json_err(text, e))?;
    skeleton_from_json(&j).map_err(|e| parse_err(0, e.to_string()))
}

/// Skeleton JSON extended with `n` and `markers: [[branch, offset, vertex, step], ...]`.
pub fn write_embellished_json(e: &EmbellishedTree, meta: Option<&Meta>) -> String {
    let mut j = skeleton_json(e.skeleton());
    j.n = Some(e.n());
    j.markers = Some(e.marker_table());
    j.meta = meta.cloned();
    serde_json::to_string_pretty(&j).expect("tree serializes")
}

pub fn read_embellished_json(text: &str) -> Result<EmbellishedTree> {
    let j: SkeletonJson = serde_json::from_str(text).map_err(|e| json_err(text, e))?;
    let (Some(n), Some(markers)) = (j.n, j.markers.clone()) else {
        return Err(parse_err(0, "missing `n` or `markers`"));
    };
    let skel = skeleton_from_json(&j).map_err(|e| parse_err(0, e.to_string()))?;
    EmbellishedTree::from_parts(skel, n, markers).map_err(|e| parse_err(0, e.to_string()))
}

/// Reads just the `meta` block of a JSON output, if present.
pub fn read_json_meta(text: &str) -> Result<Option<Meta>> {
    #[derive(Deserialize)]
    struct Only {
        #[serde(default)]
        meta: Option<Meta>,
    }
    let o: Only = serde_json::from_str(text).map_err(|e| json_err(text, e))?;
    Ok(o.meta)
}

// ─── experiment CSV ────────────────────────────────────────────────────────

/// Serializes rows with a provenance comment line and a header row taken
/// from the row type's field names.
pub fn write_rows_csv<T: Serialize>(rows: &[T], meta: &Meta) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    let body = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(format!(
        "{}\n{}",
        meta.comment_line(),
        String::from_utf8(body).expect("csv output is utf-8")
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embellish::embellish;
    use crate::growth::grow;
    use crate::rng::RngStream;
    use crate::skeleton::build_skeleton;

    #[test]
    fn parent_csv_round_trip() {
        let mut rng = RngStream::new(7, 0);
        let t = grow(2, 1000, &mut rng).unwrap();
        let text = write_parent_csv(&t, &Meta::new("grow", 7)).unwrap();
        let data_rows = text.lines().filter(|l| !l.starts_with('#')).count();
        assert_eq!(data_rows, 1502 + 1);
        assert_eq!(read_parent_csv(&text).unwrap(), t);
    }

    #[test]
    fn parent_csv_root_row() {
        let t = GrowthTree::initial(3).unwrap();
        let text = write_parent_csv(&t, &Meta::new("x", 1)).unwrap();
        let rows: Vec<&str> = text.lines().skip(2).collect();
        assert_eq!(rows[0], PARENT_HEADER.join(","));
        assert_eq!(rows[1], "0,-1,root,0,-1");
        assert_eq!(rows[2], "1,0,leaf,0,0");
    }

    #[test]
    fn parent_csv_errors_carry_offsets() {
        let mut rng = RngStream::new(7, 1);
        let t = grow(2, 10, &mut rng).unwrap();
        let text = write_parent_csv(&t, &Meta::new("grow", 7)).unwrap();
        let bad = text.replacen("0,-1,root", "0,-1,rooot", 1);
        match read_parent_csv(&bad) {
            Err(Error::Parse { offset, .. }) => {
                assert!(bad[offset as usize..].starts_with("0,-1,rooot"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(read_parent_csv("vertex_id\n0\n").is_err());
    }

    #[test]
    fn skeleton_json_round_trip_is_bit_exact() {
        let mut rng = RngStream::new(3, 0);
        let s = build_skeleton(2, 12, &mut rng).unwrap();
        let text = write_skeleton_json(&s, Some(&Meta::new("linebreak", 3)));
        let back = read_skeleton_json(&text).unwrap();
        for (a, b) in s.cuts().iter().zip(back.cuts()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(back, s);
        assert_eq!(read_json_meta(&text).unwrap().unwrap().seed, 3);
    }

    #[test]
    fn embellished_json_round_trip() {
        let mut rng = RngStream::new(4, 0);
        let e = embellish(2, 200, &mut rng).unwrap();
        let text = write_embellished_json(&e, None);
        let back = read_embellished_json(&text).unwrap();
        assert_eq!(back.marker_table(), e.marker_table());
        assert_eq!(back.to_growth_tree().unwrap(), e.to_growth_tree().unwrap());
    }

    #[test]
    fn malformed_json_reports_position() {
        let text = "{\n  \"ell\": 2,\n  \"cuts\": [1.0,,]\n}";
        match read_skeleton_json(text) {
            Err(Error::Parse { offset, .. }) => {
                assert_eq!(&text[offset as usize..offset as usize + 1], ",")
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn config_hash_is_stable() {
        assert_eq!(config_hash("abc"), "ba7816bf8f01cfea");
    }
}
