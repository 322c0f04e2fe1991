//! Plain-text model checkpoints.
//!
//! Layout, one item per line:
//!
//! ```text
//! cfgad-model 1
//! step <adam step counter>
//! tensor <name> <rows> <cols>
//! <rows lines of cols space-separated values>
//! ...
//! ```
//!
//! Tensors appear in the order `w0 w1 wp1 wp2 m_w0 m_w1 m_wp1 m_wp2 v_w0
//! v_w1 v_wp1 v_wp2`. Values use Rust's shortest round-trip formatting, so
//! a save/load cycle is bit-exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{AdamState, ModelParams};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub const CHECKPOINT_MAGIC: &str = "cfgad-model 1";

const NAMES: [&str; 4] = ["w0", "w1", "wp1", "wp2"];

fn write_tensor(out: &mut String, name: &str, m: &Matrix) {
    let _ = writeln!(out, "tensor {name} {} {}", m.rows(), m.cols());
    for r in 0..m.rows() {
        let line: Vec<String> = m.row(r).iter().map(|v| format!("{v:e}")).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
}

pub fn save_checkpoint(params: &ModelParams, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str(CHECKPOINT_MAGIC);
    out.push('\n');
    let _ = writeln!(out, "step {}", params.adam.step);
    for (name, m) in NAMES.iter().zip(params.weights()) {
        write_tensor(&mut out, name, m);
    }
    for (name, m) in NAMES.iter().zip(&params.adam.m) {
        write_tensor(&mut out, &format!("m_{name}"), m);
    }
    for (name, m) in NAMES.iter().zip(&params.adam.v) {
        write_tensor(&mut out, &format!("v_{name}"), m);
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

struct Reader<'a> {
    path: &'a Path,
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Reader<'a> {
    fn err(&self, line: usize, msg: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.to_path_buf(),
            line,
            msg: msg.into(),
        }
    }

    fn next(&mut self) -> Result<(usize, &'a str)> {
        match self.lines.next() {
            Some((k, l)) => Ok((k + 1, l.trim())),
            None => Err(self.err(0, "unexpected end of file")),
        }
    }

    fn tensor(&mut self, expected: &str) -> Result<Matrix> {
        let (ln, header) = self.next()?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        let [tag, name, rows, cols] = parts.as_slice() else {
            return Err(self.err(ln, "malformed tensor header"));
        };
        if *tag != "tensor" || *name != expected {
            return Err(self.err(ln, format!("expected tensor {expected}")));
        }
        let rows: usize = rows.parse().map_err(|_| self.err(ln, "bad row count"))?;
        let cols: usize = cols.parse().map_err(|_| self.err(ln, "bad column count"))?;
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let (ln, line) = self.next()?;
            let before = data.len();
            for tok in line.split_whitespace() {
                data.push(tok.parse::<f64>().map_err(|_| self.err(ln, format!("bad value {tok:?}")))?);
            }
            if data.len() - before != cols {
                return Err(self.err(ln, format!("expected {cols} values")));
            }
        }
        Ok(Matrix::from_vec(rows, cols, data))
    }
}

pub fn load_checkpoint(path: &Path) -> Result<ModelParams> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut r = Reader {
        path,
        lines: text.lines().enumerate(),
    };
    let (ln, magic) = r.next()?;
    if magic != CHECKPOINT_MAGIC {
        return Err(r.err(ln, "not a model checkpoint"));
    }
    let (ln, step) = r.next()?;
    let step: u64 = step
        .strip_prefix("step ")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| r.err(ln, "missing step counter"))?;
    let mut w = Vec::with_capacity(4);
    for name in NAMES {
        w.push(r.tensor(name)?);
    }
    let mut m = Vec::with_capacity(4);
    for name in NAMES {
        m.push(r.tensor(&format!("m_{name}"))?);
    }
    let mut v = Vec::with_capacity(4);
    for name in NAMES {
        v.push(r.tensor(&format!("v_{name}"))?);
    }
    let [w0, w1, wp1, wp2]: [Matrix; 4] = w.try_into().expect("four tensors");
    let mut params = ModelParams::from_weights(w0, w1, wp1, wp2)?;
    let moments_fit = params
        .weights()
        .iter()
        .zip(m.iter().zip(&v))
        .all(|(w, (a, b))| w.shape() == a.shape() && w.shape() == b.shape());
    if !moments_fit {
        return Err(Error::Shape("optimizer moments do not match weights".into()));
    }
    params.adam = AdamState { m, v, step };
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::super::{adam_step, AdamConfig, Gradients};
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let mut p = ModelParams::with_dims(3, 4, 2, 5, 9);
        let mut g = Gradients::zeros_like(&p);
        g.w0.fill(0.3);
        g.wp2.fill(-1.7e-9);
        adam_step(&mut p, &g, &AdamConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/model.txt");
        save_checkpoint(&p, &path).unwrap();
        assert_eq!(load_checkpoint(&path).unwrap(), p);
    }

    #[test]
    fn rejects_foreign_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.txt");
        fs::write(&path, "hello\n").unwrap();
        assert!(matches!(load_checkpoint(&path), Err(Error::Parse { line: 1, .. })));
    }
}
