//! Training-corpus construction and persistence.
//!
//! The corpus is built by enumerating NACA codes, computing each shape's lift
//! coefficient with a [`ClBackend`], and keeping the shapes whose computation
//! converged with a label inside `[0, 2]`. The result persists as a two-file
//! pair: a delimiter-separated table (one record per line) plus a small
//! metadata file, both plain text with full-precision floats so that a
//! save/load round trip is bit-exact.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use thiserror::Error;

use crate::aero::{ClBackend, FlowCondition};
use crate::geometry::{naca4_surface, validate_contour, AirfoilShape, Naca4Code, SHAPE_DIM, SURFACE_POINTS};

/// Labels outside `[CL_MIN, CL_MAX]` are eliminated during construction.
pub const CL_MIN: f64 = 0.0;
pub const CL_MAX: f64 = 2.0;

const META_MAGIC: &str = "foilgen-dataset-meta v1";
const TABLE_HEADER: &str = "code,cl,x1..x248,y1..y248";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("no shapes survived filtering; the dataset is empty")]
    EmptyDataset,
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("schema mismatch in {path}: expected {expected:?}, found {found:?}")]
    SchemaMismatch {
        path: PathBuf,
        expected: String,
        found: String,
    },
    #[error("{path} is truncated: {detail}")]
    Truncated { path: PathBuf, detail: String },
    #[error("parse error in {path} line {line}: {detail}")]
    Parse {
        path: PathBuf,
        line: usize,
        detail: String,
    },
}

/// One training record: the source code, its discretized shape, and the lift
/// coefficient computed for it.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledAirfoil {
    pub code: Naca4Code,
    pub shape: AirfoilShape,
    pub cl: f64,
}

/// Label scaling metadata: the bounds of the retained labels. Stored with the
/// dataset; scaling (if any) is applied at training time, never to the file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelBounds {
    pub min: f64,
    pub max: f64,
}

/// The training corpus plus everything needed to reproduce it.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub records: Vec<LabeledAirfoil>,
    pub flow: FlowCondition,
    pub solver_id: String,
    pub normalization: LabelBounds,
}

impl DatasetManifest {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Seeded Fisher–Yates reordering; the only splitting utility offered.
    pub fn shuffled(&self, seed: u64) -> DatasetManifest {
        let mut out = self.clone();
        let mut rng = crate::seed::rng(seed, "dataset/shuffle");
        out.records.shuffle(&mut rng);
        out
    }
}

/// Builds the corpus: constructs each code's surface, labels it with the
/// backend, and keeps converged results with `cl` in `[0, 2]` (both ends
/// inclusive). Evaluations run in parallel; the output preserves input code
/// order regardless of completion order.
pub fn build_dataset(
    codes: &[Naca4Code],
    cond: &FlowCondition,
    backend: &dyn ClBackend,
) -> Result<DatasetManifest, DatasetError> {
    let records: Vec<LabeledAirfoil> = codes
        .par_iter()
        .filter_map(|code| {
            let shape = naca4_surface(code, SURFACE_POINTS).ok()?;
            let cl = backend.compute_cl(&shape, cond).cl()?;
            (CL_MIN..=CL_MAX).contains(&cl).then_some(LabeledAirfoil {
                code: *code,
                shape,
                cl,
            })
        })
        .collect();

    if records.is_empty() {
        return Err(DatasetError::EmptyDataset);
    }
    let min = records.iter().map(|r| r.cl).fold(f64::MAX, f64::min);
    let max = records.iter().map(|r| r.cl).fold(f64::MIN, f64::max);
    Ok(DatasetManifest {
        records,
        flow: *cond,
        solver_id: backend.solver_id().to_string(),
        normalization: LabelBounds { min, max },
    })
}

/// Histogram of the labels over `[0, 2]` with the given bin width. Every bin
/// is present even when empty; counts sum to the record count. A label of
/// exactly 2.0 lands in the final bin.
pub fn cl_histogram(manifest: &DatasetManifest, bin_width: f64) -> Vec<(f64, usize)> {
    assert!(bin_width > 0.0, "bin width must be positive");
    let n_bins = ((CL_MAX - CL_MIN) / bin_width).ceil() as usize;
    let mut bins = vec![0usize; n_bins];
    for r in &manifest.records {
        let idx = (((r.cl - CL_MIN) / bin_width) as usize).min(n_bins - 1);
        bins[idx] += 1;
    }
    bins.into_iter()
        .enumerate()
        .map(|(i, count)| (CL_MIN + bin_width * i as f64, count))
        .collect()
}

fn meta_path(table_path: &Path) -> PathBuf {
    let mut os = table_path.as_os_str().to_owned();
    os.push(".meta");
    PathBuf::from(os)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io { path: path.to_path_buf(), source }
}

/// Saves the manifest as `<path>` (table) plus `<path>.meta` (metadata).
pub fn save(manifest: &DatasetManifest, path: &Path) -> Result<(), DatasetError> {
    let mut meta = String::new();
    let _ = writeln!(meta, "{META_MAGIC}");
    let _ = writeln!(meta, "solver_id = {}", manifest.solver_id);
    let _ = writeln!(meta, "alpha_deg = {}", manifest.flow.alpha_deg());
    let _ = writeln!(meta, "reynolds = {}", manifest.flow.reynolds());
    let _ = writeln!(meta, "record_count = {}", manifest.records.len());
    let _ = writeln!(meta, "cl_min = {}", manifest.normalization.min);
    let _ = writeln!(meta, "cl_max = {}", manifest.normalization.max);
    let mpath = meta_path(path);
    std::fs::write(&mpath, meta).map_err(io_err(&mpath))?;

    let mut table = String::with_capacity(manifest.records.len() * SHAPE_DIM * 20);
    table.push_str(TABLE_HEADER);
    table.push('\n');
    for r in &manifest.records {
        let _ = write!(table, "{},{}", r.code, r.cl);
        for v in r.shape.as_slice() {
            let _ = write!(table, ",{v}");
        }
        table.push('\n');
    }
    std::fs::write(path, table).map_err(io_err(path))?;
    Ok(())
}

/// Loads a manifest saved by [`save`]. Schema mismatches and truncation are
/// reported as distinct errors.
pub fn load(path: &Path) -> Result<DatasetManifest, DatasetError> {
    let mpath = meta_path(path);
    let meta_text = std::fs::read_to_string(&mpath).map_err(io_err(&mpath))?;
    let mut lines = meta_text.lines();
    let magic = lines.next().unwrap_or("");
    if magic != META_MAGIC {
        return Err(DatasetError::SchemaMismatch {
            path: mpath,
            expected: META_MAGIC.to_string(),
            found: magic.to_string(),
        });
    }
    let mut solver_id = None;
    let mut alpha = None;
    let mut reynolds = None;
    let mut record_count = None;
    let mut cl_min = None;
    let mut cl_max = None;
    for (i, line) in lines.enumerate() {
        let Some((key, value)) = line.split_once('=') else {
            return Err(DatasetError::Parse {
                path: mpath,
                line: i + 2,
                detail: format!("expected `key = value`, got {line:?}"),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        let parse_f64 = |v: &str| -> Result<f64, DatasetError> {
            v.parse().map_err(|_| DatasetError::Parse {
                path: mpath.clone(),
                line: i + 2,
                detail: format!("bad float {v:?} for {key}"),
            })
        };
        match key {
            "solver_id" => solver_id = Some(value.to_string()),
            "alpha_deg" => alpha = Some(parse_f64(value)?),
            "reynolds" => reynolds = Some(parse_f64(value)?),
            "record_count" => {
                record_count = Some(value.parse::<usize>().map_err(|_| DatasetError::Parse {
                    path: mpath.clone(),
                    line: i + 2,
                    detail: format!("bad count {value:?}"),
                })?)
            }
            "cl_min" => cl_min = Some(parse_f64(value)?),
            "cl_max" => cl_max = Some(parse_f64(value)?),
            _ => {
                return Err(DatasetError::Parse {
                    path: mpath,
                    line: i + 2,
                    detail: format!("unknown key {key:?}"),
                })
            }
        }
    }
    let missing = |what: &str| DatasetError::Truncated {
        path: mpath.clone(),
        detail: format!("missing {what}"),
    };
    let solver_id = solver_id.ok_or_else(|| missing("solver_id"))?;
    let alpha = alpha.ok_or_else(|| missing("alpha_deg"))?;
    let reynolds = reynolds.ok_or_else(|| missing("reynolds"))?;
    let record_count = record_count.ok_or_else(|| missing("record_count"))?;
    let cl_min = cl_min.ok_or_else(|| missing("cl_min"))?;
    let cl_max = cl_max.ok_or_else(|| missing("cl_max"))?;

    let flow = FlowCondition::new(alpha, reynolds).map_err(|e| DatasetError::Parse {
        path: mpath.clone(),
        line: 0,
        detail: e.to_string(),
    })?;

    let table_text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let mut lines = table_text.lines();
    let header = lines.next().unwrap_or("");
    if header != TABLE_HEADER {
        return Err(DatasetError::SchemaMismatch {
            path: path.to_path_buf(),
            expected: TABLE_HEADER.to_string(),
            found: header.to_string(),
        });
    }

    let mut records = Vec::with_capacity(record_count);
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let mut fields = line.split(',');
        let code: Naca4Code = fields
            .next()
            .unwrap_or("")
            .parse()
            .map_err(|e| DatasetError::Parse {
                path: path.to_path_buf(),
                line: line_no,
                detail: format!("{e}"),
            })?;
        let cl: f64 = fields
            .next()
            .ok_or_else(|| DatasetError::Truncated {
                path: path.to_path_buf(),
                detail: format!("record at line {line_no} ends before the label"),
            })?
            .parse()
            .map_err(|_| DatasetError::Parse {
                path: path.to_path_buf(),
                line: line_no,
                detail: "bad label".to_string(),
            })?;
        let coords: Vec<f64> = fields
            .map(|f| {
                f.parse::<f64>().map_err(|_| DatasetError::Parse {
                    path: path.to_path_buf(),
                    line: line_no,
                    detail: format!("bad coordinate {f:?}"),
                })
            })
            .collect::<Result<_, _>>()?;
        if coords.len() != SHAPE_DIM {
            return Err(DatasetError::Truncated {
                path: path.to_path_buf(),
                detail: format!(
                    "record at line {line_no} has {} coordinates, expected {SHAPE_DIM}",
                    coords.len()
                ),
            });
        }
        if !(CL_MIN..=CL_MAX).contains(&cl) {
            return Err(DatasetError::Parse {
                path: path.to_path_buf(),
                line: line_no,
                detail: format!("label {cl} outside [{CL_MIN}, {CL_MAX}]"),
            });
        }
        let shape = AirfoilShape::from_vec(coords).expect("length checked above");
        records.push(LabeledAirfoil { code, shape, cl });
    }
    if records.len() != record_count {
        return Err(DatasetError::Truncated {
            path: path.to_path_buf(),
            detail: format!("{} records found, metadata says {record_count}", records.len()),
        });
    }
    if records.is_empty() {
        return Err(DatasetError::EmptyDataset);
    }

    Ok(DatasetManifest {
        records,
        flow,
        solver_id,
        normalization: LabelBounds { min: cl_min, max: cl_max },
    })
}

/// Checks the manifest invariants; used by tests and after load.
pub fn check_invariants(manifest: &DatasetManifest) -> Result<(), String> {
    if manifest.records.is_empty() {
        return Err("empty manifest".to_string());
    }
    for r in &manifest.records {
        if !(CL_MIN..=CL_MAX).contains(&r.cl) {
            return Err(format!("record {} label {} out of range", r.code, r.cl));
        }
        if !(manifest.normalization.min <= r.cl && r.cl <= manifest.normalization.max) {
            return Err(format!("record {} outside normalization bounds", r.code));
        }
        if !validate_contour(&r.shape).is_valid() {
            return Err(format!("record {} fails contour validation", r.code));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aero::PanelSolver;

    fn small_manifest() -> DatasetManifest {
        let codes: Vec<Naca4Code> = ["0012", "2412", "4415"]
            .iter()
            .map(|s| s.parse().unwrap())
            .collect();
        let cond = FlowCondition::new(5.0, 3.0e6).unwrap();
        build_dataset(&codes, &cond, &PanelSolver).unwrap()
    }

    #[test]
    fn build_keeps_converged_in_range_preserving_order() {
        let m = small_manifest();
        assert_eq!(m.len(), 3);
        assert_eq!(m.records[0].code.to_string(), "0012");
        assert_eq!(m.records[1].code.to_string(), "2412");
        assert!(m.records[0].cl > 0.0);
        check_invariants(&m).unwrap();
    }

    #[test]
    fn single_code_at_zero_alpha_is_retained_on_the_boundary() {
        // Symmetric section at zero incidence: cl = 0 exactly, and the
        // retention interval is closed, so the record stays.
        let codes = vec!["0012".parse().unwrap()];
        let cond = FlowCondition::new(0.0, 3.0e6).unwrap();
        let m = build_dataset(&codes, &cond, &PanelSolver).unwrap();
        assert_eq!(m.len(), 1);
        assert!(m.records[0].cl.abs() <= 1e-3);
    }

    #[test]
    fn empty_result_is_an_error() {
        // 9905: max camber far aft and 5% thick; at -20 degrees everything
        // solvable lands well below zero lift.
        let codes = vec!["2412".parse().unwrap()];
        let cond = FlowCondition::new(-20.0, 3.0e6).unwrap();
        let err = build_dataset(&codes, &cond, &PanelSolver).unwrap_err();
        assert!(matches!(err, DatasetError::EmptyDataset));
    }

    #[test]
    fn filtering_is_idempotent() {
        let m = small_manifest();
        let codes: Vec<Naca4Code> = m.records.iter().map(|r| r.code).collect();
        let again = build_dataset(&codes, &m.flow, &PanelSolver).unwrap();
        assert_eq!(m, again);
    }

    #[test]
    fn histogram_covers_range_and_sums_to_count() {
        let m = small_manifest();
        let bins = cl_histogram(&m, 0.1);
        assert_eq!(bins.len(), 20);
        assert_eq!(bins.iter().map(|(_, c)| c).sum::<usize>(), m.len());
        assert!((bins[0].0 - 0.0).abs() < 1e-12);
        assert!((bins[19].0 - 1.9).abs() < 1e-12);
    }

    #[test]
    fn histogram_single_record_lands_in_its_bin() {
        let mut m = small_manifest();
        m.records.truncate(1);
        m.records[0].cl = 0.55;
        let bins = cl_histogram(&m, 0.1);
        for (lo, count) in bins {
            if (lo - 0.5).abs() < 1e-12 {
                assert_eq!(count, 1);
            } else {
                assert_eq!(count, 0);
            }
        }
    }

    #[test]
    fn save_load_round_trip_is_bit_exact() {
        let m = small_manifest();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dataset.csv");
        save(&m, &path).unwrap();
        let loaded = load(&path).unwrap();
        assert_eq!(m, loaded);
        for (a, b) in m.records.iter().zip(loaded.records.iter()) {
            for (x, y) in a.shape.as_slice().iter().zip(b.shape.as_slice()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
            assert_eq!(a.cl.to_bits(), b.cl.to_bits());
        }
    }

    #[test]
    fn wrong_magic_is_a_schema_error() {
        let m = small_manifest();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dataset.csv");
        save(&m, &path).unwrap();
        std::fs::write(meta_path(&path), "not-a-foilgen-file v9\n").unwrap();
        assert!(matches!(load(&path), Err(DatasetError::SchemaMismatch { .. })));
    }

    #[test]
    fn truncated_table_is_a_truncation_error() {
        let m = small_manifest();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dataset.csv");
        save(&m, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        // Cut the file in the middle of the final record.
        let cut = text.len() - 2000;
        std::fs::write(&path, &text[..cut]).unwrap();
        assert!(matches!(load(&path), Err(DatasetError::Truncated { .. })));
    }

    #[test]
    fn shuffle_is_seeded_and_deterministic() {
        let m = small_manifest();
        let a = m.shuffled(42);
        let b = m.shuffled(42);
        let c = m.shuffled(43);
        assert_eq!(a, b);
        assert!(a != c || a != m, "different seeds should usually differ");
        // Same multiset of records.
        let mut codes_a: Vec<String> = a.records.iter().map(|r| r.code.to_string()).collect();
        let mut codes_m: Vec<String> = m.records.iter().map(|r| r.code.to_string()).collect();
        codes_a.sort();
        codes_m.sort();
        assert_eq!(codes_a, codes_m);
    }
}
