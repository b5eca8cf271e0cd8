//! CSV artifacts: point sets, density fields, loss histories, generic tables
//! and network checkpoints.
//!
//! Every file starts with `#`-prefixed metadata lines, followed by a header
//! row and comma-separated records. Floats are written in the shortest form
//! that parses back to the same `f64`. Missing densities are empty fields.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::DensityField;
use crate::neural::{LossRecord, MlpParams};
use crate::sampler::ReferenceSet;

pub type Meta<'a> = &'a [(&'a str, String)];

fn create(path: &Path, meta: Meta<'_>) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = BufWriter::new(File::create(path)?);
    for (k, v) in meta {
        writeln!(w, "# {k}: {v}")?;
    }
    Ok(w)
}

fn fmt(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:?}")
    }
}

/// Writes a header row and numeric records.
pub fn write_table(path: &Path, meta: Meta<'_>, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let w = create(path, meta)?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(header)?;
    for row in rows {
        csv.write_record(row.iter().map(|&v| fmt(v)))?;
    }
    csv.flush()?;
    Ok(())
}

fn coord_header(dim: usize) -> Vec<String> {
    (0..dim).map(|k| format!("x{k}")).collect()
}

/// Points with an optional density column; `None` entries are left empty.
pub fn write_points(path: &Path, meta: Meta<'_>, set: &ReferenceSet) -> Result<()> {
    let w = create(path, meta)?;
    let mut csv = csv::Writer::from_writer(w);
    let mut header = coord_header(set.dim());
    if set.densities.is_some() {
        header.push("density".into());
    }
    csv.write_record(&header)?;
    for (i, p) in set.points.iter().enumerate() {
        let mut rec: Vec<String> = p.iter().map(|&v| fmt(v)).collect();
        if let Some(d) = &set.densities {
            rec.push(d[i].map(fmt).unwrap_or_default());
        }
        csv.write_record(&rec)?;
    }
    csv.flush()?;
    Ok(())
}

fn parse_field(s: &str, line: u64) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("line {line}: `{s}` is not a number")))
}

/// Reads a file written by [`write_points`]. A trailing `density` column is
/// optional.
pub fn read_points(path: &Path) -> Result<ReferenceSet> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
    let headers = rdr.headers()?.clone();
    let has_density = headers.iter().last() == Some("density");
    let dim = headers.len() - usize::from(has_density);
    if dim == 0 {
        return Err(Error::Parse(format!("{}: no coordinate columns", path.display())));
    }
    let mut points = Vec::new();
    let mut dens = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let p = (0..dim).map(|k| parse_field(&rec[k], line)).collect::<Result<Vec<_>>>()?;
        points.push(p);
        if has_density {
            let f = rec[dim].trim();
            dens.push(if f.is_empty() { None } else { Some(parse_field(f, line)?) });
        }
    }
    if has_density {
        ReferenceSet::with_densities(points, dens)
    } else {
        Ok(ReferenceSet::new(points))
    }
}

/// One row per node in flat order: coordinates then the value.
pub fn write_field(path: &Path, meta: Meta<'_>, field: &DensityField) -> Result<()> {
    let g = &field.grid;
    let mut all: Vec<(&str, String)> = meta.to_vec();
    let bounds: Vec<String> = g.domain().bounds().iter().map(|(a, b)| format!("[{a:?},{b:?}]")).collect();
    all.push(("domain", bounds.join("x")));
    all.push(("points_per_axis", g.points_per_axis().to_string()));
    let w = create(path, &all)?;
    let mut csv = csv::Writer::from_writer(w);
    let mut header = coord_header(g.dim());
    header.push("value".into());
    csv.write_record(&header)?;
    for (i, &v) in field.values.iter().enumerate() {
        let mut rec: Vec<String> = g.node_flat(i).into_iter().map(fmt).collect();
        rec.push(fmt(v));
        csv.write_record(&rec)?;
    }
    csv.flush()?;
    Ok(())
}

pub fn write_history(path: &Path, meta: Meta<'_>, history: &[LossRecord]) -> Result<()> {
    let w = create(path, meta)?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["iter", "L1", "L2"])?;
    for r in history {
        csv.write_record([r.iter.to_string(), fmt(r.l1), fmt(r.l2)])?;
    }
    csv.flush()?;
    Ok(())
}

/// Checkpoint layout:
///
/// ```text
/// # metadata...
/// layers,2,16,1
/// output_scale,1.0
/// W0,<row-major weights of layer 0>
/// b0,<biases of layer 0>
/// W1,...
/// ```
pub fn write_checkpoint(path: &Path, meta: Meta<'_>, params: &MlpParams) -> Result<()> {
    let mut w = create(path, meta)?;
    let sizes: Vec<String> = params.layer_sizes().iter().map(|s| s.to_string()).collect();
    writeln!(w, "layers,{}", sizes.join(","))?;
    writeln!(w, "output_scale,{}", fmt(params.output_scale))?;
    for l in 0..params.num_layers() {
        let ws: Vec<String> = params.weights(l).iter().map(|&v| fmt(v)).collect();
        let bs: Vec<String> = params.biases(l).iter().map(|&v| fmt(v)).collect();
        writeln!(w, "W{l},{}", ws.join(","))?;
        writeln!(w, "b{l},{}", bs.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<MlpParams> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.starts_with('#') && !l.trim().is_empty());
    let mut next = |key: &str| -> Result<(usize, Vec<String>)> {
        let (i, l) = lines
            .next()
            .ok_or_else(|| Error::Parse(format!("checkpoint ends before `{key}`")))?;
        let mut parts = l.split(',').map(|s| s.trim().to_string());
        let head = parts.next().unwrap_or_default();
        if head != key {
            return Err(Error::Parse(format!("line {}: expected `{key}`, found `{head}`", i + 1)));
        }
        Ok((i + 1, parts.collect()))
    };
    let (ln, sizes) = next("layers")?;
    let sizes = sizes
        .iter()
        .map(|s| s.parse::<usize>().map_err(|_| Error::Parse(format!("line {ln}: bad layer size `{s}`"))))
        .collect::<Result<Vec<_>>>()?;
    let (ln, scale) = next("output_scale")?;
    let scale = parse_field(scale.first().map_or("", |s| s), ln as u64)?;
    let mut theta = Vec::new();
    for l in 0..sizes.len().saturating_sub(1) {
        for (key, len) in [(format!("W{l}"), sizes[l] * sizes[l + 1]), (format!("b{l}"), sizes[l + 1])] {
            let (ln, vals) = next(&key)?;
            if vals.len() != len {
                return Err(Error::Parse(format!("line {ln}: `{key}` has {} values, expected {len}", vals.len())));
            }
            for v in &vals {
                theta.push(parse_field(v, ln as u64)?);
            }
        }
    }
    MlpParams::from_parts(&sizes, theta, scale)
}
