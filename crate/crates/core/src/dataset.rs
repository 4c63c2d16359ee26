//! Dataset manifests, image decoding and the persistent score cache.
//!
//! A manifest is a UTF-8 CSV with a header row naming (in any order) the
//! columns `database_id, reference_path, distorted_path, distortion_type,
//! mos, mos_is_dmos`. Lines starting with `#` are ignored. Relative paths
//! are resolved against the manifest's own directory.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use image::DynamicImage;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::attributes::{to_grayscale, GrayImage};
use crate::error::{Error, Result};

pub const MANIFEST_COLUMNS: [&str; 6] = [
    "database_id",
    "reference_path",
    "distorted_path",
    "distortion_type",
    "mos",
    "mos_is_dmos",
];

/// One row of a dataset manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub database_id: String,
    pub reference_path: PathBuf,
    pub distorted_path: PathBuf,
    pub distortion_type: String,
    pub mos: f64,
    pub mos_is_dmos: bool,
}

impl EvalRecord {
    /// Identifier used as the score-cache key.
    pub fn id(&self) -> String {
        format!(
            "{}|{}|{}",
            self.database_id,
            self.reference_path.display(),
            self.distorted_path.display()
        )
    }
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" => Some(true),
        "false" | "0" | "no" | "" => Some(false),
        _ => None,
    }
}

fn absolute(base: &Path, p: &str) -> PathBuf {
    let p = Path::new(p);
    let joined = if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    };
    std::path::absolute(&joined).unwrap_or(joined)
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<Vec<EvalRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let base = if base.as_os_str().is_empty() {
        Path::new(".")
    } else {
        base
    };

    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let schema_err = |msg: String| Error::ManifestSchema {
        path: path.to_path_buf(),
        msg,
    };
    let mut idx = [0usize; 6];
    for (slot, name) in idx.iter_mut().zip(MANIFEST_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| schema_err(format!("missing column '{name}'")))?;
    }

    let mut records = Vec::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let rec_err = |msg: String| Error::Record {
            path: path.to_path_buf(),
            row: line,
            msg,
        };
        let field = |i: usize| row.get(idx[i]).unwrap_or("");
        let reference = field(1);
        let distorted = field(2);
        if reference.is_empty() || distorted.is_empty() {
            return Err(rec_err("empty image path".into()));
        }
        let mos: f64 = field(4)
            .parse()
            .map_err(|_| rec_err(format!("unparseable mos '{}'", field(4))))?;
        if !mos.is_finite() {
            return Err(rec_err(format!("non-finite mos '{}'", field(4))));
        }
        let mos_is_dmos = parse_bool(field(5))
            .ok_or_else(|| rec_err(format!("unparseable mos_is_dmos '{}'", field(5))))?;
        records.push(EvalRecord {
            database_id: field(0).to_string(),
            reference_path: absolute(base, reference),
            distorted_path: absolute(base, distorted),
            distortion_type: field(3).to_string(),
            mos,
            mos_is_dmos,
        });
    }
    Ok(records)
}

pub fn write_manifest(path: impl AsRef<Path>, records: &[EvalRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(MANIFEST_COLUMNS)?;
    for r in records {
        w.write_record([
            r.database_id.as_str(),
            &r.reference_path.to_string_lossy(),
            &r.distorted_path.to_string_lossy(),
            r.distortion_type.as_str(),
            &r.mos.to_string(),
            if r.mos_is_dmos { "true" } else { "false" },
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Decode a PNG or BMP into luma. 8-bit gray inputs pass through unchanged;
/// everything else goes through 8-bit RGB and BT.601 weights.
pub fn load_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let decoded = image::load_from_memory(&bytes).map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })?;
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    match decoded {
        DynamicImage::ImageLuma8(g) => GrayImage::from_u8(w, h, g.as_raw()),
        DynamicImage::ImageLumaA8(_) => GrayImage::from_u8(w, h, decoded.to_luma8().as_raw()),
        other => {
            let rgb = other.to_rgb8();
            let px: Vec<[u8; 3]> = rgb.pixels().map(|p| p.0).collect();
            to_grayscale(w, h, &px)
        }
    }
}

/// Group key: `(database_id, distortion_type)`.
pub type GroupKey = (String, String);

/// Partition records by database and distortion type. Groups are ordered
/// by key; within a group, manifest order is kept.
pub fn group_records(records: &[EvalRecord]) -> BTreeMap<GroupKey, Vec<&EvalRecord>> {
    group_indices(records)
        .into_iter()
        .map(|(k, idx)| (k, idx.into_iter().map(|i| &records[i]).collect()))
        .collect()
}

/// Same partition as [`group_records`], as indices into `records`.
pub fn group_indices(records: &[EvalRecord]) -> BTreeMap<GroupKey, Vec<usize>> {
    let mut groups: BTreeMap<GroupKey, Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        groups
            .entry((r.database_id.clone(), r.distortion_type.clone()))
            .or_default()
            .push(i);
    }
    groups
}

/// Hex SHA-256 of a canonical parameter description.
pub fn params_hash(description: &str) -> String {
    hex::encode(Sha256::digest(description.as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CacheKey {
    pub record: String,
    pub attribute: String,
    pub pooling: String,
    pub params_hash: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CachedScore {
    pub value: f64,
    pub degenerate_fallback: bool,
}

#[derive(Serialize, Deserialize)]
struct CacheLine {
    #[serde(flatten)]
    key: CacheKey,
    value: f64,
    #[serde(default)]
    degenerate_fallback: bool,
}

/// Pooled scores keyed by record, attribute, pooling and parameter hash.
///
/// Persisted as JSON lines; later lines for the same key win on load.
/// Values survive a save/load cycle bit-for-bit.
#[derive(Debug, Default)]
pub struct ScoreCache {
    entries: Mutex<HashMap<CacheKey, CachedScore>>,
}

impl ScoreCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Load from `path`; a missing file gives an empty cache.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = match fs::File::open(path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Self::new()),
            Err(e) => return Err(Error::io(path, e)),
        };
        let mut entries = HashMap::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: CacheLine = serde_json::from_str(&line).map_err(|e| Error::Record {
                path: path.to_path_buf(),
                row: i as u64 + 1,
                msg: e.to_string(),
            })?;
            entries.insert(
                parsed.key,
                CachedScore {
                    value: parsed.value,
                    degenerate_fallback: parsed.degenerate_fallback,
                },
            );
        }
        Ok(ScoreCache {
            entries: Mutex::new(entries),
        })
    }

    pub fn get(&self, key: &CacheKey) -> Option<CachedScore> {
        self.entries.lock().unwrap().get(key).copied()
    }

    pub fn insert(&self, key: CacheKey, score: CachedScore) {
        self.entries.lock().unwrap().insert(key, score);
    }

    /// Return the cached score or compute, store and return it. The lock is
    /// not held while `compute` runs.
    pub fn get_or_insert_with<F>(&self, key: CacheKey, compute: F) -> Result<CachedScore>
    where
        F: FnOnce() -> Result<CachedScore>,
    {
        if let Some(hit) = self.get(&key) {
            return Ok(hit);
        }
        let score = compute()?;
        Ok(*self.entries.lock().unwrap().entry(key).or_insert(score))
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Write every entry, sorted by key, replacing `path` atomically.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let entries = self.entries.lock().unwrap();
        let mut keys: Vec<&CacheKey> = entries.keys().collect();
        keys.sort();
        let tmp = path.with_extension("jsonl.tmp");
        {
            let file = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
            let mut w = std::io::BufWriter::new(file);
            for key in keys {
                let s = entries[key];
                let line = serde_json::to_string(&CacheLine {
                    key: key.clone(),
                    value: s.value,
                    degenerate_fallback: s.degenerate_fallback,
                })?;
                writeln!(w, "{line}").map_err(|e| Error::io(&tmp, e))?;
            }
            w.flush().map_err(|e| Error::io(&tmp, e))?;
        }
        fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str =
        "database_id,reference_path,distorted_path,distortion_type,mos,mos_is_dmos\n";

    #[test]
    fn empty_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        fs::write(&p, format!("# comment\n{HEADER}")).unwrap();
        assert!(load_manifest(&p).unwrap().is_empty());
    }

    #[test]
    fn one_row_resolves_paths() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        fs::write(
            &p,
            format!("{HEADER}LIVE,refs/a.png,dist/a1.png,jpeg,55.5,true\n"),
        )
        .unwrap();
        let recs = load_manifest(&p).unwrap();
        assert_eq!(recs.len(), 1);
        let r = &recs[0];
        assert!(r.reference_path.is_absolute());
        assert_eq!(r.reference_path, dir.path().join("refs/a.png"));
        assert_eq!(r.distortion_type, "jpeg");
        assert_eq!(r.mos, 55.5);
        assert!(r.mos_is_dmos);
    }

    #[test]
    fn bad_mos_names_row() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        fs::write(&p, format!("{HEADER}LIVE,a.png,b.png,jpeg,abc,false\n")).unwrap();
        match load_manifest(&p) {
            Err(Error::Record { row, .. }) => assert_eq!(row, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_column_is_schema_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        fs::write(
            &p,
            "database_id,reference_path,distorted_path,mos\nA,a,b,1\n",
        )
        .unwrap();
        assert!(matches!(
            load_manifest(&p),
            Err(Error::ManifestSchema { .. })
        ));
    }

    #[test]
    fn columns_in_any_order() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        fs::write(
            &p,
            "mos,mos_is_dmos,distortion_type,distorted_path,reference_path,database_id\n3,0,wn,d.png,r.png,TID\n",
        )
        .unwrap();
        let r = &load_manifest(&p).unwrap()[0];
        assert_eq!(r.database_id, "TID");
        assert_eq!(r.distortion_type, "wn");
        assert!(!r.mos_is_dmos);
    }

    #[test]
    fn grouping() {
        assert!(group_records(&[]).is_empty());
        let mk = |t: &str| EvalRecord {
            database_id: "TID".into(),
            reference_path: "/r.png".into(),
            distorted_path: "/d.png".into(),
            distortion_type: t.into(),
            mos: 1.0,
            mos_is_dmos: false,
        };
        let recs = vec![mk("a"), mk("b"), mk("a")];
        let g = group_records(&recs);
        assert_eq!(g.len(), 2);
        assert_eq!(g[&("TID".to_string(), "a".to_string())].len(), 2);

        let tid: Vec<EvalRecord> = (0..24 * 5)
            .map(|i| mk(&format!("type{:02}", i % 24)))
            .collect();
        assert_eq!(group_records(&tid).len(), 24);
    }

    #[test]
    fn image_decoding() {
        let dir = tempfile::tempdir().unwrap();
        let white = dir.path().join("w.png");
        image::RgbImage::from_pixel(1, 1, image::Rgb([255, 255, 255]))
            .save(&white)
            .unwrap();
        assert_eq!(load_image(&white).unwrap().pixels(), &[255.0]);

        let gray = dir.path().join("g.png");
        let raw: Vec<u8> = (0..12).map(|i| i * 20 + 3).collect();
        image::GrayImage::from_raw(4, 3, raw.clone())
            .unwrap()
            .save(&gray)
            .unwrap();
        let g = load_image(&gray).unwrap();
        assert_eq!((g.width(), g.height()), (4, 3));
        assert!(g
            .pixels()
            .iter()
            .zip(&raw)
            .all(|(a, b)| *a == f64::from(*b)));

        let bmp = dir.path().join("c.bmp");
        image::RgbImage::from_pixel(2, 2, image::Rgb([255, 0, 0]))
            .save(&bmp)
            .unwrap();
        assert!((load_image(&bmp).unwrap().pixels()[0] - 76.245).abs() < 1e-12);

        let bytes = fs::read(&gray).unwrap();
        let trunc = dir.path().join("t.png");
        fs::write(&trunc, &bytes[..bytes.len() / 2]).unwrap();
        assert!(matches!(load_image(&trunc), Err(Error::Decode { .. })));
        assert!(matches!(
            load_image(dir.path().join("missing.png")),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn cache_persists_exact_values() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("cache.jsonl");
        let cache = ScoreCache::load(&p).unwrap();
        assert!(cache.is_empty());
        let key = CacheKey {
            record: "r".into(),
            attribute: "ssim".into(),
            pooling: "mean".into(),
            params_hash: params_hash("x"),
        };
        let v = 0.1 + 0.2;
        let mut calls = 0;
        let got = cache
            .get_or_insert_with(key.clone(), || {
                calls += 1;
                Ok(CachedScore {
                    value: v,
                    degenerate_fallback: false,
                })
            })
            .unwrap();
        assert_eq!(got.value, v);
        cache
            .get_or_insert_with(key.clone(), || {
                calls += 1;
                Ok(CachedScore {
                    value: 0.0,
                    degenerate_fallback: false,
                })
            })
            .unwrap();
        assert_eq!(calls, 1);
        cache.save(&p).unwrap();
        let reloaded = ScoreCache::load(&p).unwrap();
        assert_eq!(reloaded.get(&key).unwrap().value.to_bits(), v.to_bits());
    }
}
