//! Checkpoint file: `#hhea-checkpoint 1`, `#meta key = value` lines, then one
//! `[tensor]` section per enabled parameter in the embedding text format.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::{Array1, Array2};

use super::model::{ModelParams, TimeBlock};
use crate::encoders::{EmbeddingSet, Time2VecParams};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const MAGIC: &str = "#hhea-checkpoint 1";

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint<T> {
    pub params: ModelParams<T>,
    pub meta: Vec<(String, String)>,
}

fn section<T: Scalar, W: Write>(out: &mut W, name: &str, m: &Array2<T>) -> Result<()> {
    writeln!(out, "[{name}]").map_err(|e| Error::io("<checkpoint>", e))?;
    let rows: Vec<String> = (0..m.nrows()).map(|i| format!("r{i}")).collect();
    EmbeddingSet::new(m.clone())?.write_text(&mut *out, &rows)
}

pub fn write_checkpoint<T: Scalar, W: Write>(mut out: W, ckpt: &Checkpoint<T>) -> Result<()> {
    let io = |e| Error::io("<checkpoint>", e);
    writeln!(out, "{MAGIC}").map_err(io)?;
    for (k, v) in &ckpt.meta {
        writeln!(out, "#meta {k} = {v}").map_err(io)?;
    }
    let p = &ckpt.params;
    if let Some(w) = &p.name {
        section(&mut out, "w_name", w)?;
    }
    if let Some(t) = &p.time {
        section(&mut out, "omega", &t.t2v.omega.clone().insert_axis(ndarray::Axis(0)))?;
        section(&mut out, "phi", &t.t2v.phi.clone().insert_axis(ndarray::Axis(0)))?;
        section(&mut out, "w_time", &t.weight)?;
    }
    if let Some(w) = &p.structure {
        section(&mut out, "w_structure", w)?;
    }
    Ok(())
}

pub fn save_checkpoint<T: Scalar>(path: &Path, ckpt: &Checkpoint<T>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_checkpoint(&mut w, ckpt)?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint<T: Scalar, R: BufRead>(reader: R, source: &Path) -> Result<Checkpoint<T>> {
    let mut meta = Vec::new();
    let mut sections: Vec<(String, usize, String)> = Vec::new();
    let mut saw_magic = false;
    for (no, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(source, e))?;
        if no == 0 {
            if line.trim_end() != MAGIC {
                return Err(Error::parse(source, 1, "missing checkpoint header"));
            }
            saw_magic = true;
            continue;
        }
        if let Some(rest) = line.strip_prefix("#meta ") {
            let (k, v) = rest
                .split_once(" = ")
                .ok_or_else(|| Error::parse(source, no + 1, "expected `#meta key = value`"))?;
            meta.push((k.to_string(), v.to_string()));
        } else if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            sections.push((name.to_string(), no + 1, String::new()));
        } else if let Some((_, _, body)) = sections.last_mut() {
            body.push_str(&line);
            body.push('\n');
        } else if !line.trim().is_empty() {
            return Err(Error::parse(source, no + 1, "data outside a tensor section"));
        }
    }
    if !saw_magic {
        return Err(Error::EmptyInput(source.display().to_string()));
    }
    let mut name = None;
    let mut omega: Option<Array1<T>> = None;
    let mut phi: Option<Array1<T>> = None;
    let mut w_time = None;
    let mut structure = None;
    for (tensor, line, body) in sections {
        let (_, m) = EmbeddingSet::<T>::read_text(body.as_bytes(), source)?;
        let m = m.into_matrix();
        match tensor.as_str() {
            "w_name" => name = Some(m),
            "omega" => omega = Some(m.row(0).to_owned()),
            "phi" => phi = Some(m.row(0).to_owned()),
            "w_time" => w_time = Some(m),
            "w_structure" => structure = Some(m),
            other => return Err(Error::parse(source, line, format!("unknown tensor {other:?}"))),
        }
    }
    let time = match (omega, phi, w_time) {
        (Some(omega), Some(phi), Some(weight)) => {
            if omega.len() != phi.len() || omega.len() < 2 || weight.nrows() != omega.len() {
                return Err(Error::invalid("inconsistent time tensors in checkpoint"));
            }
            Some(TimeBlock {
                t2v: Time2VecParams::new(omega, phi),
                weight,
            })
        }
        (None, None, None) => None,
        _ => return Err(Error::invalid("checkpoint has an incomplete time block")),
    };
    Ok(Checkpoint {
        params: ModelParams { name, time, structure },
        meta,
    })
}

pub fn load_checkpoint<T: Scalar>(path: &Path) -> Result<Checkpoint<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_checkpoint(BufReader::new(file), path)
}
