//! Flat-file artifact formats.
//!
//! Everything is plain text: CSV with `#`-prefixed comment lines for
//! metadata, a sparse triplet format for coupling matrices and a bit string
//! for readout weights. Writers build the whole file in memory and write it
//! once, and all numbers go through Rust's shortest round-trip float
//! formatting, so a fixed configuration produces byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::learning::LearningRecord;
use crate::mackey_glass::TimeSeries;
use crate::network::{BooleanWeights, Trajectory};
use crate::topology::optics::FieldGrid;
use crate::topology::CouplingMatrix;

fn render_comments(out: &mut String, comments: &[String]) {
    for line in comments {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse { path: path.display().to_string(), line, message: message.into() }
}

/// `n,value` rows. The sample spacing rides along as a comment so the file
/// round-trips.
pub fn write_time_series(path: &Path, series: &TimeSeries, comments: &[String]) -> Result<()> {
    let mut out = String::new();
    render_comments(&mut out, comments);
    let _ = writeln!(out, "# dt_effective {}", series.dt_effective());
    out.push_str("n,value\n");
    for (n, v) in series.values().iter().enumerate() {
        let _ = writeln!(out, "{n},{v}");
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_time_series(path: &Path) -> Result<TimeSeries> {
    let text = fs::read_to_string(path)?;
    let mut dt = 1.0f64;
    let mut values = Vec::new();
    let mut saw_header = false;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if let Some(comment) = line.strip_prefix('#') {
            let mut parts = comment.split_whitespace();
            if parts.next() == Some("dt_effective") {
                let v = parts
                    .next()
                    .ok_or_else(|| parse_error(path, line_no, "dt_effective without value"))?;
                dt = v
                    .parse()
                    .map_err(|e| parse_error(path, line_no, format!("bad dt_effective: {e}")))?;
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        if !saw_header {
            if line.trim() != "n,value" {
                return Err(parse_error(path, line_no, "expected header n,value"));
            }
            saw_header = true;
            continue;
        }
        let (n_text, v_text) = line
            .split_once(',')
            .ok_or_else(|| parse_error(path, line_no, "expected n,value row"))?;
        let n: usize = n_text
            .trim()
            .parse()
            .map_err(|e| parse_error(path, line_no, format!("bad index: {e}")))?;
        if n != values.len() {
            return Err(parse_error(
                path,
                line_no,
                format!("index {n} out of order, expected {}", values.len()),
            ));
        }
        let v: f64 = v_text
            .trim()
            .parse()
            .map_err(|e| parse_error(path, line_no, format!("bad value: {e}")))?;
        values.push(v);
    }
    TimeSeries::new(values, dt)
}

/// Sparse triplets `i,j,w` under a `N=<nodes> radius=<r>` header line.
pub fn write_coupling_matrix(
    path: &Path,
    matrix: &CouplingMatrix,
    comments: &[String],
) -> Result<()> {
    let mut out = String::new();
    render_comments(&mut out, comments);
    let _ = writeln!(out, "N={} radius={}", matrix.n_nodes(), matrix.kernel_radius());
    for (i, j, w) in matrix.entries() {
        let _ = writeln!(out, "{i},{j},{w}");
    }
    fs::write(path, out)?;
    Ok(())
}

/// Read a matrix written by [`write_coupling_matrix`]. The node count must
/// be a perfect square; the triplet format does not carry rectangular grids.
pub fn read_coupling_matrix(path: &Path) -> Result<CouplingMatrix> {
    let text = fs::read_to_string(path)?;
    let mut header: Option<(usize, usize)> = None;
    let mut triplets = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        if header.is_none() {
            let mut n_nodes = None;
            let mut radius = None;
            for token in line.split_whitespace() {
                if let Some(v) = token.strip_prefix("N=") {
                    n_nodes =
                        Some(v.parse::<usize>().map_err(|e| {
                            parse_error(path, line_no, format!("bad node count: {e}"))
                        })?);
                } else if let Some(v) = token.strip_prefix("radius=") {
                    radius = Some(
                        v.parse::<usize>()
                            .map_err(|e| parse_error(path, line_no, format!("bad radius: {e}")))?,
                    );
                } else {
                    return Err(parse_error(
                        path,
                        line_no,
                        format!("unexpected header token {token:?}"),
                    ));
                }
            }
            match (n_nodes, radius) {
                (Some(n), Some(r)) => header = Some((n, r)),
                _ => {
                    return Err(parse_error(path, line_no, "expected header N=<nodes> radius=<r>"))
                }
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(parse_error(path, line_no, "expected i,j,w row"));
        }
        let i: usize = fields[0]
            .trim()
            .parse()
            .map_err(|e| parse_error(path, line_no, format!("bad row index: {e}")))?;
        let j: usize = fields[1]
            .trim()
            .parse()
            .map_err(|e| parse_error(path, line_no, format!("bad column index: {e}")))?;
        let w: f64 = fields[2]
            .trim()
            .parse()
            .map_err(|e| parse_error(path, line_no, format!("bad weight: {e}")))?;
        triplets.push((i, j, w));
    }
    let (n_nodes, radius) = header.ok_or_else(|| parse_error(path, 1, "missing header"))?;
    let side = (n_nodes as f64).sqrt().round() as usize;
    if side * side != n_nodes {
        return Err(parse_error(path, 1, format!("node count {n_nodes} is not a square grid")));
    }
    CouplingMatrix::from_triplets(side, radius, &triplets)
}

/// One line of 0/1 characters plus newline.
pub fn write_boolean_weights(path: &Path, weights: &BooleanWeights) -> Result<()> {
    fs::write(path, format!("{}\n", weights.to_bitstring()))?;
    Ok(())
}

pub fn read_boolean_weights(path: &Path) -> Result<BooleanWeights> {
    let text = fs::read_to_string(path)?;
    BooleanWeights::from_bitstring(&text)
}

/// `k,flipped_index,epsilon_candidate,epsilon_accepted,accepted` rows; the
/// pre-loop error of the random initial weights rides in a comment.
pub fn write_learning_record(
    path: &Path,
    record: &LearningRecord,
    comments: &[String],
) -> Result<()> {
    let mut out = String::new();
    render_comments(&mut out, comments);
    let _ = writeln!(out, "# initial_epsilon {}", record.initial_epsilon);
    out.push_str("k,flipped_index,epsilon_candidate,epsilon_accepted,accepted\n");
    for step in &record.steps {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            step.k,
            step.flipped_index,
            step.epsilon_candidate,
            step.epsilon_accepted,
            u8::from(step.accepted)
        );
    }
    fs::write(path, out)?;
    Ok(())
}

/// Per-step test table: input, target and both raw and normalized outputs.
pub struct PredictionTable {
    pub inputs: Vec<f64>,
    pub targets: Vec<f64>,
    pub raw_outputs: Vec<f64>,
    pub normalized_outputs: Vec<f64>,
}

impl PredictionTable {
    pub fn validate(&self) -> Result<()> {
        let n = self.inputs.len();
        if self.targets.len() != n
            || self.raw_outputs.len() != n
            || self.normalized_outputs.len() != n
        {
            return Err(Error::InvalidArgument(
                "prediction table columns have mismatched lengths".into(),
            ));
        }
        Ok(())
    }
}

pub fn write_prediction_table(
    path: &Path,
    table: &PredictionTable,
    comments: &[String],
) -> Result<()> {
    table.validate()?;
    let mut out = String::new();
    render_comments(&mut out, comments);
    out.push_str("n,u,y_target,y_out_raw,y_out_normalized,abs_error\n");
    for n in 0..table.inputs.len() {
        let err = (table.targets[n] - table.normalized_outputs[n]).abs();
        let _ = writeln!(
            out,
            "{n},{},{},{},{},{err}",
            table.inputs[n], table.targets[n], table.raw_outputs[n], table.normalized_outputs[n]
        );
    }
    fs::write(path, out)?;
    Ok(())
}

/// `n,node_0,...,node_{N-1}` intensity rows.
pub fn write_trajectory(path: &Path, trajectory: &Trajectory, comments: &[String]) -> Result<()> {
    let mut out = String::new();
    render_comments(&mut out, comments);
    let _ = writeln!(out, "# dt_effective {}", trajectory.dt());
    out.push('n');
    for i in 0..trajectory.n_nodes() {
        let _ = write!(out, ",node_{i}");
    }
    out.push('\n');
    for t in 0..trajectory.len() {
        let _ = write!(out, "{t}");
        for x in trajectory.intensities(t) {
            let _ = write!(out, ",{x}");
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// `ix,iy,re,im` complex field samples, for debugging optical setups.
pub fn write_field_grid(path: &Path, field: &FieldGrid, comments: &[String]) -> Result<()> {
    let mut out = String::new();
    render_comments(&mut out, comments);
    let _ = writeln!(out, "# side {} pitch {}", field.side(), field.pitch());
    out.push_str("ix,iy,re,im\n");
    for iy in 0..field.side() {
        for ix in 0..field.side() {
            let v = field.get(iy, ix);
            let _ = writeln!(out, "{ix},{iy},{},{}", v.re, v.im);
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Generic CSV with comment block, for tables owned by the caller (sweep
/// results, stats blocks).
pub fn write_csv(path: &Path, comments: &[String], header: &str, rows: &[String]) -> Result<()> {
    let mut out = String::new();
    render_comments(&mut out, comments);
    out.push_str(header);
    out.push('\n');
    for row in rows {
        out.push_str(row);
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}
