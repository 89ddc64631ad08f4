//! Edge lists, label files and CSV output.
//!
//! Edge lists are whitespace-separated integer pairs, one edge per line;
//! `#` starts a comment. A comment of the form `# nodes: N` declares the node
//! count, which keeps trailing isolated nodes across a write/read round trip.

use std::collections::{BTreeMap, VecDeque};
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use faer::Mat;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiment::ExperimentReport;
use crate::model::AdjacencyMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Indexing {
    Zero,
    #[default]
    One,
}

impl Indexing {
    pub fn base(self) -> usize {
        match self {
            Indexing::Zero => 0,
            Indexing::One => 1,
        }
    }
}

impl FromStr for Indexing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "0" => Ok(Indexing::Zero),
            "1" => Ok(Indexing::One),
            _ => Err(Error::InvalidArgument(format!("indexing must be 0 or 1, got '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DiagonalPolicy {
    /// Every node gets a self-connection.
    #[default]
    ForceOnes,
    /// Only explicit self-loops appear on the diagonal.
    Keep,
}

impl FromStr for DiagonalPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "force-ones" | "force_ones" | "ones" => Ok(DiagonalPolicy::ForceOnes),
            "keep" => Ok(DiagonalPolicy::Keep),
            _ => Err(Error::InvalidArgument(format!(
                "diagonal policy must be 'force-ones' or 'keep', got '{s}'"
            ))),
        }
    }
}

/// Undirected edges, rebased to 0, with `(u, v)` stored as `u <= v` and
/// duplicates removed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeList {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
}

impl EdgeList {
    pub fn to_adjacency(&self, diagonal: DiagonalPolicy) -> AdjacencyMatrix {
        let mut a = Mat::<f64>::zeros(self.n, self.n);
        if diagonal == DiagonalPolicy::ForceOnes {
            (0..self.n).for_each(|i| a[(i, i)] = 1.0);
        }
        for &(u, v) in &self.edges {
            a[(u, v)] = 1.0;
            a[(v, u)] = 1.0;
        }
        AdjacencyMatrix::new(a).expect("0/1 symmetric matrix")
    }

    /// `degree[i]` counts distinct neighbours other than `i` itself.
    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n];
        for &(u, v) in &self.edges {
            if u != v {
                d[u] += 1;
                d[v] += 1;
            }
        }
        d
    }
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn declared_nodes(comment: &str) -> Option<&str> {
    comment.trim().strip_prefix("nodes:").map(str::trim)
}

/// Parses edge-list text. `path` only labels error messages. `n`, when
/// given, overrides both the inferred and any declared node count.
pub fn parse_edge_list(text: &str, path: &Path, indexing: Indexing, n: Option<usize>) -> Result<EdgeList> {
    let base = indexing.base();
    let mut edges = Vec::new();
    let mut declared = None;
    let mut lines = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        lines = line_no;
        let (body, comment) = match raw.split_once('#') {
            Some((b, c)) => (b, Some(c)),
            None => (raw, None),
        };
        if let Some(value) = comment.and_then(declared_nodes) {
            let v = value
                .parse::<usize>()
                .map_err(|_| parse_error(path, line_no, format!("bad node count '{value}'")))?;
            declared = Some(v);
        }
        let tokens: Vec<&str> = body.split_whitespace().collect();
        match tokens.len() {
            0 => continue,
            2 => {}
            m => {
                return Err(parse_error(path, line_no, format!("expected two node ids, found {m} tokens")));
            }
        }
        let mut ends = [0usize; 2];
        for (slot, tok) in ends.iter_mut().zip(&tokens) {
            let v: i64 = tok
                .parse()
                .map_err(|_| parse_error(path, line_no, format!("'{tok}' is not an integer")))?;
            if v < base as i64 {
                return Err(parse_error(
                    path,
                    line_no,
                    format!("node id {v} is below the {base}-based index range"),
                ));
            }
            *slot = v as usize - base;
        }
        edges.push((ends[0].min(ends[1]), ends[0].max(ends[1])));
    }
    if edges.is_empty() {
        return Err(parse_error(path, lines.max(1), "no edges found"));
    }
    edges.sort_unstable();
    edges.dedup();
    let inferred = edges.iter().map(|e| e.1).max().expect("non-empty") + 1;
    let n = match n.or(declared) {
        Some(n) if n < inferred => {
            return Err(parse_error(
                path,
                lines,
                format!("node id {} exceeds the declared node count {n}", inferred - 1 + base),
            ));
        }
        Some(n) => n,
        None => inferred,
    };
    Ok(EdgeList { n, edges })
}

pub fn read_edge_list_file(path: &Path, indexing: Indexing, n: Option<usize>) -> Result<EdgeList> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(&text, path, indexing, n)
}

pub fn read_edge_list(path: &Path, indexing: Indexing, diagonal: DiagonalPolicy) -> Result<AdjacencyMatrix> {
    Ok(read_edge_list_file(path, indexing, None)?.to_adjacency(diagonal))
}

/// Writes the off-diagonal non-zeros of the upper triangle, preceded by a
/// node-count comment.
pub fn write_edge_list<W: Write>(mut out: W, a: &AdjacencyMatrix, indexing: Indexing) -> Result<()> {
    let m = a.as_mat();
    let base = indexing.base();
    let io = |e| Error::io("<edge list>", e);
    writeln!(out, "# nodes: {}", a.n()).map_err(io)?;
    for i in 0..a.n() {
        for j in i + 1..a.n() {
            if m[(i, j)] != 0.0 {
                writeln!(out, "{} {}", i + base, j + base).map_err(io)?;
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelFile {
    /// Dense 0-based labels, ordered by original value.
    pub labels: Vec<usize>,
    /// The raw values as read.
    pub original: Vec<i64>,
    /// Whether the raw values were not already `1..=K`.
    pub remapped: bool,
}

impl LabelFile {
    pub fn k(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1)
    }
}

/// Parses one label per line. Lines of the form `node,label` (as written by
/// [`write_labels`]) are accepted too, and a non-numeric first line is
/// treated as a header.
pub fn parse_labels(text: &str, path: &Path) -> Result<LabelFile> {
    let mut original = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let fields: Vec<&str> = body.split([',', ' ', '\t']).filter(|s| !s.is_empty()).collect();
        let tok = match fields.as_slice() {
            [label] => *label,
            [_, label] => *label,
            _ => return Err(parse_error(path, idx + 1, "expected a label or 'node,label'")),
        };
        match tok.parse::<i64>() {
            Ok(v) => original.push(v),
            Err(_) if original.is_empty() && tok.chars().any(char::is_alphabetic) => continue,
            Err(_) => return Err(parse_error(path, idx + 1, format!("'{tok}' is not an integer label"))),
        }
    }
    if original.is_empty() {
        return Err(parse_error(path, 1, "no labels found"));
    }
    let mut dense = BTreeMap::new();
    for &v in &original {
        dense.entry(v).or_insert(0);
    }
    for (i, slot) in dense.values_mut().enumerate() {
        *slot = i;
    }
    let remapped = dense.keys().enumerate().any(|(i, &v)| v != i as i64 + 1);
    if remapped {
        log::warn!("{}: labels are not 1..={}; remapped densely", path.display(), dense.len());
    }
    let labels = original.iter().map(|v| dense[v]).collect();
    Ok(LabelFile {
        labels,
        original,
        remapped,
    })
}

pub fn read_labels(path: &Path) -> Result<LabelFile> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_labels(&text, path)
}

/// Writes `node_id,label` rows with labels shifted to 1-based.
pub fn write_labels<W: Write>(out: W, labels: &[usize], indexing: Indexing) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["node_id", "label"])?;
    for (i, l) in labels.iter().enumerate() {
        w.write_record([(i + indexing.base()).to_string(), (l + 1).to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<labels>", e))?;
    Ok(())
}

/// Nodes of the largest connected component (ties: the component holding
/// the smallest node), sorted ascending.
pub fn largest_connected_component(a: &AdjacencyMatrix) -> Vec<usize> {
    let n = a.n();
    let m = a.as_mat();
    let mut comp = vec![usize::MAX; n];
    let mut best: Vec<usize> = Vec::new();
    for start in 0..n {
        if comp[start] != usize::MAX {
            continue;
        }
        let mut members = vec![start];
        comp[start] = start;
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for v in 0..n {
                if v != u && comp[v] == usize::MAX && m[(u, v)] != 0.0 {
                    comp[v] = start;
                    members.push(v);
                    queue.push_back(v);
                }
            }
        }
        if members.len() > best.len() {
            best = members;
        }
    }
    best.sort_unstable();
    best
}

/// Serialises rows with a header derived from the field names.
pub fn write_csv<W: Write, T: Serialize>(out: W, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct ReportRow<'a> {
    method: &'a str,
    n: usize,
    k: usize,
    mean: f64,
    sd: f64,
    reps: usize,
    flagged: usize,
}

/// `method,n,k,mean,sd,reps,flagged`, one row per report.
pub fn write_report_csv<W: Write>(out: W, reports: &[ExperimentReport]) -> Result<()> {
    let rows: Vec<ReportRow> = reports
        .iter()
        .map(|r| ReportRow {
            method: &r.label,
            n: r.n,
            k: r.k,
            mean: r.mean,
            sd: r.sd,
            reps: r.reps(),
            flagged: r.flagged,
        })
        .collect();
    write_csv(out, &rows)
}

#[derive(Debug, Serialize)]
struct SweepRow {
    delta: f64,
    k_hat: usize,
}

/// `delta,k_hat` rows.
pub fn write_sweep_csv<W: Write>(out: W, sweep: &[(f64, usize)]) -> Result<()> {
    let rows: Vec<SweepRow> = sweep.iter().map(|&(delta, k_hat)| SweepRow { delta, k_hat }).collect();
    write_csv(out, &rows)
}
