//! Files written by the CLI: field snapshots, CSV tables, JSON summaries and
//! the sweep manifest. Every artifact carries the config hash.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use nullwave::{DoubleNullGrid, Field3};

pub const GIT_DESCRIBE: &str = env!("NULLWAVE_GIT_DESCRIBE");

pub fn config_hash(canonical: &str) -> String {
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

/// Outcome of [`prepare_dir`] when the target already holds files.
#[derive(Debug)]
pub struct NotEmpty(pub PathBuf);

impl std::fmt::Display for NotEmpty {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "output directory {} is not empty (use --force)", self.0.display())
    }
}

impl std::error::Error for NotEmpty {}

/// Creates `dir`, refusing a non-empty one unless `force` is set.
pub fn prepare_dir(dir: &Path, force: bool) -> Result<()> {
    if dir.exists() {
        let mut entries = fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))?;
        if entries.next().is_some() && !force {
            return Err(NotEmpty(dir.to_path_buf()).into());
        }
    }
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

/// Writes a serializable value with `config_hash` added at the top level.
pub fn write_json<T: Serialize>(path: &Path, value: &T, hash: &str) -> Result<()> {
    let mut v = serde_json::to_value(value)?;
    match &mut v {
        Value::Object(m) => {
            m.insert("config_hash".into(), Value::String(hash.into()));
        }
        other => v = json!({ "config_hash": hash, "value": other.take() }),
    }
    let text = serde_json::to_string_pretty(&v)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

/// A CSV table with a trailing `config_hash` column.
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Self {
            headers: headers.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path, hash: &str) -> Result<()> {
        let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
        let mut h = self.headers.clone();
        h.push("config_hash".into());
        w.write_record(&h)?;
        for row in &self.rows {
            let mut r = row.clone();
            r.push(hash.into());
            w.write_record(&r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Shortest round-trip representation, so reruns reproduce the text exactly.
pub fn num(v: f64) -> String {
    format!("{v:e}")
}

#[derive(Serialize)]
struct SnapshotHeader<'a> {
    dims: [usize; 3],
    order: &'static str,
    dtype: &'static str,
    coordinates: Coordinates,
    delta: f64,
    u0: f64,
    field: &'a str,
    config_hash: &'a str,
}

#[derive(Serialize)]
struct Coordinates {
    u: Vec<f64>,
    ubar: Vec<f64>,
    theta: Vec<f64>,
}

/// Raw little-endian f64 values in `(u, ū, θ)` order plus a JSON sidecar.
pub fn write_snapshot(dir: &Path, name: &str, field: &Field3, grid: &DoubleNullGrid, hash: &str) -> Result<(PathBuf, PathBuf)> {
    let (nu, nub, nt) = grid.dims();
    let bin = dir.join(format!("{name}.f64"));
    let mut bytes = Vec::with_capacity(field.as_slice().len() * 8);
    for v in field.as_slice() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(&bin, bytes).with_context(|| format!("writing {}", bin.display()))?;
    let header = SnapshotHeader {
        dims: [nu, nub, nt],
        order: "u, ubar, theta (row-major)",
        dtype: "f64 little-endian",
        coordinates: Coordinates {
            u: (0..nu).map(|i| grid.u(i)).collect(),
            ubar: (0..nub).map(|j| grid.ubar(j)).collect(),
            theta: (0..nt).map(|k| grid.theta(k)).collect(),
        },
        delta: grid.delta(),
        u0: grid.u0(),
        field: name,
        config_hash: hash,
    };
    let meta = dir.join(format!("{name}.json"));
    let mut f = fs::File::create(&meta).with_context(|| format!("writing {}", meta.display()))?;
    serde_json::to_writer_pretty(&mut f, &header)?;
    f.write_all(b"\n")?;
    Ok((bin, meta))
}

/// Reads back a snapshot written by [`write_snapshot`].
#[cfg(test)]
pub fn read_snapshot(bin: &Path) -> Result<Vec<f64>> {
    let bytes = fs::read(bin)?;
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect())
}

/// A log-log SVG line plot of one or more `(δ, value)` series.
pub fn write_loglog_svg(path: &Path, title: &str, series: &[(&str, Vec<(f64, f64)>)], hash: &str) -> Result<()> {
    let (w, h, pad) = (640.0, 420.0, 60.0);
    let pts: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|(_, s)| s.iter().filter(|p| p.0 > 0.0 && p.1 > 0.0).map(|p| (p.0.log10(), p.1.log10())))
        .collect();
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\">\n<!-- config_hash {hash} -->\n\
         <text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\">{title}</text>\n",
        w / 2.0
    );
    if !pts.is_empty() {
        let (x0, x1) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, p| (a.0.min(p.0), a.1.max(p.0)));
        let (y0, y1) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, p| (a.0.min(p.1), a.1.max(p.1)));
        let sx = |x: f64| pad + (x - x0) / (x1 - x0).max(1e-12) * (w - 2.0 * pad);
        let sy = |y: f64| h - pad - (y - y0) / (y1 - y0).max(1e-12) * (h - 2.0 * pad);
        svg += &format!(
            "<rect x=\"{pad}\" y=\"{pad}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#999\"/>\n",
            w - 2.0 * pad,
            h - 2.0 * pad
        );
        let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
        for (n, (name, s)) in series.iter().enumerate() {
            let c = colors[n % colors.len()];
            let line: Vec<String> = s
                .iter()
                .filter(|p| p.0 > 0.0 && p.1 > 0.0)
                .map(|p| format!("{:.1},{:.1}", sx(p.0.log10()), sy(p.1.log10())))
                .collect();
            svg += &format!("<polyline fill=\"none\" stroke=\"{c}\" points=\"{}\"/>\n", line.join(" "));
            svg += &format!(
                "<text x=\"{}\" y=\"{}\" fill=\"{c}\" font-family=\"sans-serif\" font-size=\"12\">{name}</text>\n",
                w - pad + 4.0,
                pad + 14.0 * n as f64
            );
        }
        svg += &format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"12\">log10 delta [{x0:.2}, {x1:.2}]</text>\n",
            w / 2.0,
            h - 20.0
        );
    }
    svg += "</svg>\n";
    fs::write(path, svg).with_context(|| format!("writing {}", path.display()))
}
