use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use sparseview::graphlap::{build_laplacian, parse_edge_list};
use sparseview::io;
use sparseview::{Matrix, MultiviewDataset};

use crate::manifest::Session;

pub const LABELS_FILE: &str = "labels.csv";
pub const CLASSIFIER_FILE: &str = "classifier.json";
pub const PREDICTIONS_FILE: &str = "predictions.csv";
pub const METRICS_FILE: &str = "metrics.csv";
pub const LEADERBOARD_FILE: &str = "leaderboard.csv";

pub fn view_file(d: usize) -> String {
    format!("views_{d}.csv")
}

pub fn truth_file(d: usize) -> String {
    format!("truth_{d}.txt")
}

pub fn graph_file(d: usize) -> String {
    format!("graph_{d}.txt")
}

pub fn selection_file(d: usize) -> String {
    format!("selection_{d}.txt")
}

pub fn scores_file(d: usize) -> String {
    format!("scores_{d}.csv")
}

pub fn checkpoint_file(stage: u8) -> String {
    format!("checkpoint_stage{stage}.json")
}

pub fn loss_trace_file(stage: u8) -> String {
    format!("loss_trace_stage{stage}.csv")
}

pub fn latent_file(stage: u8) -> String {
    format!("latent_stage{stage}.csv")
}

/// Number of consecutive `{name(0)}, {name(1)}, …` files present in `dir`.
pub fn count_numbered(dir: &Path, name: fn(usize) -> String) -> usize {
    (0..).take_while(|&d| dir.join(name(d)).is_file()).count()
}

fn with_path<T>(path: &Path, r: sparseview::Result<T>) -> Result<T> {
    r.with_context(|| path.display().to_string())
}

pub fn read_matrix(session: &mut Session, path: &Path) -> Result<Matrix> {
    let bytes = session.read(path)?;
    with_path(path, io::read_matrix_csv(bytes.as_slice()))
}

pub fn read_labels(session: &mut Session, path: &Path) -> Result<Vec<usize>> {
    let bytes = session.read(path)?;
    with_path(path, io::read_labels_csv(bytes.as_slice()))
}

pub fn read_indices(session: &mut Session, path: &Path) -> Result<Vec<usize>> {
    let text = session.read_string(path)?;
    with_path(path, io::parse_index_lines(&text))
}

/// Loads `views_{d}.csv` for every consecutive `d` from 0, plus
/// `labels.csv` when present.
pub fn read_dataset(session: &mut Session, dir: &Path) -> Result<MultiviewDataset> {
    let n_views = count_numbered(dir, view_file);
    if n_views == 0 {
        bail!("no {} found in {}", view_file(0), dir.display());
    }
    let views = (0..n_views).map(|d| read_matrix(session, &dir.join(view_file(d)))).collect::<Result<Vec<_>>>()?;
    let labels_path = dir.join(LABELS_FILE);
    let labels = if labels_path.is_file() { Some(read_labels(session, &labels_path)?) } else { None };
    MultiviewDataset::new(views, labels).with_context(|| dir.display().to_string())
}

/// Normalized Laplacian per view from `graph_{d}.txt`; views without a
/// graph file get `None`.
pub fn read_laplacians(session: &mut Session, dir: &Path, widths: &[usize]) -> Result<Vec<Option<Matrix>>> {
    widths
        .iter()
        .enumerate()
        .map(|(d, &p)| {
            let path = dir.join(graph_file(d));
            if !path.is_file() {
                return Ok(None);
            }
            let text = session.read_string(&path)?;
            let graph = with_path(&path, parse_edge_list(&text, p))?;
            Ok(Some(build_laplacian(&graph).normalized))
        })
        .collect()
}

/// Column count of a view file, read from its header.
pub fn header_width(session: &mut Session, path: &Path) -> Result<usize> {
    let text = session.read_string(path)?;
    let header = text.lines().next().with_context(|| format!("{} is empty", path.display()))?;
    Ok(header.split(',').count())
}

pub fn matrix_bytes(m: &Matrix, prefix: &str) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    io::write_matrix_csv(&mut buf, m, prefix)?;
    Ok(buf)
}

pub fn labels_bytes(labels: &[usize]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    io::write_labels_csv(&mut buf, labels)?;
    Ok(buf)
}

pub fn loss_trace_bytes(trace: &[f64]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    io::write_loss_trace_csv(&mut buf, trace)?;
    Ok(buf)
}

pub fn default_dir(explicit: Option<PathBuf>, fallback: &Path) -> PathBuf {
    explicit.unwrap_or_else(|| fallback.to_path_buf())
}
