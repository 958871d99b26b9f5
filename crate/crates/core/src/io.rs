//! File formats: JSON inputs and reports (versioned by a `schema` field) and
//! the fixed-header CSV exports.
//!
//! | file | header |
//! |------|--------|
//! | trace | `time,event,client,Y,H` |
//! | pinches | `t_p,y_p,s_p,u,v,flag` |
//! | edges | `u,v` |
//! | components | `rank,mass,count,root` |
//! | masses | `mass` |
//! | distance matrix | sample times, then one row per sample |
//! | grid path | `t,Y` |
//! | regime | `n,a_n,b_n,C1,C2,beta0_proxy,kappa_proxy,C4_integral_y=<y>…` |

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::continuum::GridPath;
use crate::direct_graph::{AssembledGraph, ComponentView};
use crate::lifo_coder::{PinchSetup, TraceEvent};
use crate::scaling::RegimeReport;
use crate::weights::{LimitParams, WeightError, WeightSeq};

/// Version of every JSON document written or read.
pub const SCHEMA: u32 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: String, source: serde_json::Error },
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("{path}: unsupported schema {found} (expected {SCHEMA})")]
    Schema { path: String, found: u32 },
    #[error(transparent)]
    Weights(#[from] WeightError),
}

fn file_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::File { path: path.display().to_string(), source }
}

/// A JSON document with its schema version.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Versioned<T> {
    pub schema: u32,
    #[serde(flatten)]
    pub body: T,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum WeightsDoc {
    Bare(WeightSeq),
    Versioned { schema: u32, weights: WeightSeq },
}

#[derive(Deserialize)]
#[serde(untagged)]
enum LimitDoc {
    Versioned { schema: u32, #[serde(flatten)] params: LimitParams },
    Bare(LimitParams),
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, IoError> {
    let text = std::fs::read_to_string(path).map_err(file_err(path))?;
    serde_json::from_str(&text).map_err(|source| IoError::Json { path: path.display().to_string(), source })
}

fn check_schema(path: &Path, found: u32) -> Result<(), IoError> {
    if found == SCHEMA { Ok(()) } else { Err(IoError::Schema { path: path.display().to_string(), found }) }
}

/// Reads weights from a JSON array or from `{"schema": 1, "weights": [...]}`.
pub fn read_weights(path: &Path) -> Result<WeightSeq, IoError> {
    match read_json(path)? {
        WeightsDoc::Bare(w) => Ok(w),
        WeightsDoc::Versioned { schema, weights } => {
            check_schema(path, schema)?;
            Ok(weights)
        }
    }
}

/// Reads limit parameters `{"alpha", "beta", "kappa", "c": [...]}` (an
/// optional `"schema": 1` is accepted).
pub fn read_limit(path: &Path) -> Result<LimitParams, IoError> {
    let p = match read_json(path)? {
        LimitDoc::Versioned { schema, params } => {
            check_schema(path, schema)?;
            params
        }
        LimitDoc::Bare(p) => p,
    };
    p.validate()?;
    Ok(p)
}

/// Writes `body` as pretty JSON with a leading `"schema": 1`.
pub fn write_json<T: Serialize>(path: &Path, body: &T) -> Result<(), IoError> {
    let doc = Versioned { schema: SCHEMA, body };
    let text = serde_json::to_string_pretty(&doc).map_err(|source| IoError::Json { path: path.display().to_string(), source })?;
    std::fs::write(path, text + "\n").map_err(file_err(path))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>, IoError> {
    let f = File::create(path).map_err(file_err(path))?;
    Ok(csv::Writer::from_writer(f))
}

/// Trace events: `time,event,client,Y,H`.
pub fn write_trace_csv(path: &Path, events: &[TraceEvent]) -> Result<(), IoError> {
    let mut w = csv_writer(path)?;
    w.write_record(["time", "event", "client", "Y", "H"])?;
    for e in events {
        w.serialize((e.time, e.kind.label(), e.client, e.load, e.height))?;
    }
    w.flush().map_err(file_err(path))
}

/// Pinches: `t_p,y_p,s_p,u,v,flag`.
pub fn write_pinches_csv(path: &Path, pinches: &PinchSetup) -> Result<(), IoError> {
    let mut w = csv_writer(path)?;
    w.write_record(["t_p", "y_p", "s_p", "u", "v", "flag"])?;
    for p in &pinches.pinches {
        w.serialize((p.t, p.y, p.s, p.u, p.v, p.flag()))?;
    }
    w.flush().map_err(file_err(path))
}

/// Edge list: `u,v`.
pub fn write_edges_csv(path: &Path, g: &AssembledGraph) -> Result<(), IoError> {
    let mut w = csv_writer(path)?;
    w.write_record(["u", "v"])?;
    for &(u, v) in &g.edges {
        w.serialize((u, v))?;
    }
    w.flush().map_err(file_err(path))
}

/// Component summary: `rank,mass,count,root` (rank 1 first).
pub fn write_components_csv(path: &Path, comps: &[ComponentView]) -> Result<(), IoError> {
    let mut w = csv_writer(path)?;
    w.write_record(["rank", "mass", "count", "root"])?;
    for (k, c) in comps.iter().enumerate() {
        w.serialize((k + 1, c.mass, c.count, c.root))?;
    }
    w.flush().map_err(file_err(path))
}

/// One mass per row under the header `mass`.
pub fn write_masses_csv(path: &Path, masses: &[f64]) -> Result<(), IoError> {
    let mut w = csv_writer(path)?;
    w.write_record(["mass"])?;
    for &m in masses {
        w.serialize([m])?;
    }
    w.flush().map_err(file_err(path))
}

/// Square matrix preceded by a header row of sample times.
pub fn write_matrix_csv(path: &Path, samples: &[f64], matrix: &[Vec<f64>]) -> Result<(), IoError> {
    let mut w = csv_writer(path)?;
    w.serialize(samples)?;
    for row in matrix {
        w.serialize(row)?;
    }
    w.flush().map_err(file_err(path))
}

/// Grid path: `t,Y`.
pub fn write_grid_csv(path: &Path, g: &GridPath) -> Result<(), IoError> {
    let mut w = BufWriter::new(File::create(path).map_err(file_err(path))?);
    let mut out = || -> std::io::Result<()> {
        writeln!(w, "t,Y")?;
        for (t, y) in g.times().zip(&g.values) {
            writeln!(w, "{t},{y}")?;
        }
        w.flush()
    };
    out().map_err(file_err(path))
}

/// Regime report rows.
pub fn write_regime_csv(path: &Path, r: &RegimeReport) -> Result<(), IoError> {
    let mut w = csv_writer(path)?;
    let mut header: Vec<String> =
        ["n", "a_n", "b_n", "C1", "C2", "beta0_proxy", "kappa_proxy"].iter().map(|s| s.to_string()).collect();
    header.extend(r.y_grid.iter().map(|y| format!("C4_integral_y={y}")));
    w.write_record(&header)?;
    for row in &r.rows {
        let mut rec =
            vec![row.n.to_string(), row.a_n.to_string(), row.b_n.to_string(), row.c1.to_string(), row.c2.to_string()];
        rec.push(row.b_over_a2.to_string());
        rec.push(row.ab_over_sigma1.to_string());
        rec.extend(row.c4.iter().map(|v| v.map_or(String::new(), |x| x.to_string())));
        w.write_record(&rec)?;
    }
    w.flush().map_err(file_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lifo_coder::simulate_lifo_with_arrivals;

    #[test]
    fn weights_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let bare = dir.path().join("w.json");
        std::fs::write(&bare, "[1.0, 3.0, 2.0]").unwrap();
        assert_eq!(read_weights(&bare).unwrap().as_slice(), &[3.0, 2.0, 1.0]);
        let versioned = dir.path().join("v.json");
        std::fs::write(&versioned, r#"{"schema": 1, "weights": [2.0]}"#).unwrap();
        assert_eq!(read_weights(&versioned).unwrap().as_slice(), &[2.0]);
        std::fs::write(&versioned, r#"{"schema": 2, "weights": [2.0]}"#).unwrap();
        assert!(matches!(read_weights(&versioned), Err(IoError::Schema { found: 2, .. })));
        std::fs::write(&bare, "[1.0, -1.0]").unwrap();
        assert!(read_weights(&bare).is_err());
    }

    #[test]
    fn limit_params_read() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("l.json");
        std::fs::write(&p, r#"{"alpha": 0.5, "beta": 1.0, "kappa": 1.0, "c": [0.5]}"#).unwrap();
        let l = read_limit(&p).unwrap();
        assert_eq!((l.alpha, l.beta, l.kappa, l.c.clone()), (0.5, 1.0, 1.0, vec![0.5]));
        std::fs::write(&p, r#"{"schema": 1, "alpha": 0.0, "beta": 1.0, "kappa": 1.0}"#).unwrap();
        assert!(read_limit(&p).unwrap().c.is_empty());
    }

    #[test]
    fn csv_headers() {
        let dir = tempfile::tempdir().unwrap();
        let w = WeightSeq::new(vec![1.0, 0.5]).unwrap();
        let tr = simulate_lifo_with_arrivals(&w, vec![0.2, 0.4]).unwrap();
        let p = dir.path().join("trace.csv");
        write_trace_csv(&p, &tr.events).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("time,event,client,Y,H\n"));
        assert_eq!(text.lines().count(), 1 + tr.events.len());
        let p = dir.path().join("m.csv");
        write_masses_csv(&p, &[1.5, 0.25]).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "mass\n1.5\n0.25\n");
        let p = dir.path().join("d.csv");
        write_matrix_csv(&p, &[0.0, 1.0], &[vec![0.0, 2.0], vec![2.0, 0.0]]).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "0.0,1.0\n0.0,2.0\n2.0,0.0\n");
        let p = dir.path().join("r.json");
        write_json(&p, &serde_json::json!({"x": 1})).unwrap();
        let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap();
        assert_eq!(v["schema"], 1);
        assert_eq!(v["x"], 1);
    }
}
