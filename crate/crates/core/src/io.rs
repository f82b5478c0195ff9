//! File formats: edge-list graphs, data CSVs, problem manifests and reports.
//!
//! * graph CSV: header `i,j` (or `i,j,count` for consensus tallies), one edge per row;
//! * data CSV: header `x0,…,x{p-1},y`, one observation per row;
//! * problem JSON: scenario, calibration, true coefficients and the true edge list.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::UndirectedGraph;
use crate::graph_est::EdgeCounts;
use crate::synth::{Dataset, ScenarioSpec, SyntheticProblem};

fn create(path: &Path) -> Result<File> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    File::create(path).map_err(|e| Error::io(path, e))
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(create(path)?)))
}

fn flush<W: Write>(w: csv::Writer<W>, path: &Path) -> Result<()> {
    w.into_inner()
        .map_err(|e| Error::io(path, e.into_error()))?
        .flush()
        .map_err(|e| Error::io(path, e))
}

pub fn write_graph_csv(path: &Path, graph: &UndirectedGraph) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["i", "j"])?;
    for (i, j) in graph.edges() {
        w.write_record([i.to_string(), j.to_string()])?;
    }
    flush(w, path)
}

pub fn write_edge_counts_csv(path: &Path, counts: &EdgeCounts) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["i", "j", "count"])?;
    for (&(i, j), &c) in &counts.counts {
        w.write_record([i.to_string(), j.to_string(), c.to_string()])?;
    }
    flush(w, path)
}

/// Edge list of a graph CSV (the optional count column is ignored).
pub fn read_edge_list(path: &Path) -> Result<Vec<(usize, usize)>> {
    let mut r = csv::ReaderBuilder::new().flexible(true).from_reader(open(path)?);
    let headers = r.headers()?.clone();
    if headers.get(0) != Some("i") || headers.get(1) != Some("j") {
        return Err(Error::invalid(format!(
            "{}: graph CSV must start with header i,j",
            path.display()
        )));
    }
    let mut edges = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let parse = |k: usize| -> Result<usize> {
            rec.get(k)
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| Error::invalid(format!("{}: bad edge on row {}", path.display(), line + 2)))
        };
        edges.push((parse(0)?, parse(1)?));
    }
    Ok(edges)
}

/// Reads a graph CSV on `p` nodes.
pub fn read_graph_csv(path: &Path, p: usize) -> Result<UndirectedGraph> {
    UndirectedGraph::from_edges(p, read_edge_list(path)?)
        .map_err(|e| Error::invalid(format!("{}: {e}", path.display())))
}

pub fn write_dataset_csv(path: &Path, data: &Dataset) -> Result<()> {
    let mut w = csv_writer(path)?;
    let mut header: Vec<String> = (0..data.p()).map(|j| format!("x{j}")).collect();
    header.push("y".into());
    w.write_record(&header)?;
    let mut row = Vec::with_capacity(data.p() + 1);
    for (xr, y) in data.x.rows().into_iter().zip(data.y.iter()) {
        row.clear();
        row.extend(xr.iter().map(|v| v.to_string()));
        row.push(y.to_string());
        w.write_record(&row)?;
    }
    flush(w, path)
}

pub fn read_dataset_csv(path: &Path) -> Result<Dataset> {
    let mut r = csv::Reader::from_reader(open(path)?);
    let headers = r.headers()?.clone();
    let p = headers.len().checked_sub(1).filter(|&p| p > 0).ok_or_else(|| {
        Error::invalid(format!("{}: need at least one predictor and a y column", path.display()))
    })?;
    let expected = (0..p).map(|j| format!("x{j}")).chain(std::iter::once("y".to_string()));
    if !headers.iter().eq(expected.collect::<Vec<_>>().iter().map(String::as_str)) {
        return Err(Error::invalid(format!(
            "{}: header must be x0,...,x{},y",
            path.display(),
            p - 1
        )));
    }
    let mut values = Vec::new();
    let mut n = 0;
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        for field in rec.iter() {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::invalid(format!("{}: bad number '{field}' on row {}", path.display(), line + 2))
            })?;
            values.push(v);
        }
        n += 1;
    }
    let all = Array2::from_shape_vec((n, p + 1), values).expect("row lengths checked by csv");
    let x = all.slice(ndarray::s![.., ..p]).to_owned();
    let y = all.column(p).to_owned();
    Dataset::new(x, y)
}

/// Serializable ground truth of one simulated problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    pub spec: ScenarioSpec,
    pub delta: f64,
    pub signal_nodes: Vec<usize>,
    pub support: Vec<usize>,
    pub beta_true: Vec<f64>,
    pub edges: Vec<(usize, usize)>,
}

impl ProblemFile {
    pub fn from_problem(problem: &SyntheticProblem) -> Self {
        Self {
            spec: problem.spec.clone(),
            delta: problem.delta,
            signal_nodes: problem.signal_nodes.clone(),
            support: problem.support.clone(),
            beta_true: problem.beta_true.to_vec(),
            edges: problem.graph.edges().collect(),
        }
    }

    pub fn graph(&self) -> Result<UndirectedGraph> {
        UndirectedGraph::from_edges(self.spec.p, self.edges.iter().copied())
    }

    pub fn beta_true(&self) -> Array1<f64> {
        Array1::from(self.beta_true.clone())
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(std::io::BufReader::new(open(path)?))?)
}

/// Writes serializable rows as a CSV with a header taken from the field names.
pub fn write_rows_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv_writer(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    flush(w, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn graph_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.csv");
        let g = UndirectedGraph::from_edges(5, [(0, 1), (3, 4), (1, 4)]).unwrap();
        write_graph_csv(&path, &g).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "i,j\n0,1\n1,4\n3,4\n");
        assert_eq!(read_graph_csv(&path, 5).unwrap(), g);
    }

    #[test]
    fn empty_graph_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.csv");
        write_graph_csv(&path, &UndirectedGraph::empty(3)).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "i,j\n");
        assert_eq!(read_graph_csv(&path, 3).unwrap().n_edges(), 0);
    }

    #[test]
    fn graph_out_of_range_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.csv");
        fs::write(&path, "i,j\n0,7\n").unwrap();
        assert!(read_graph_csv(&path, 3).is_err());
        fs::write(&path, "a,b\n0,1\n").unwrap();
        assert!(read_graph_csv(&path, 3).is_err());
    }

    #[test]
    fn dataset_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let d = Dataset::new(array![[0.1, -2.5e-7], [1.0 / 3.0, 4.0]], array![1e10, -0.0]).unwrap();
        write_dataset_csv(&path, &d).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("x0,x1,y\n"));
        assert_eq!(read_dataset_csv(&path).unwrap(), d);
    }

    #[test]
    fn dataset_bad_header_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        fs::write(&path, "a,y\n1,2\n").unwrap();
        assert!(read_dataset_csv(&path).is_err());
    }
}
