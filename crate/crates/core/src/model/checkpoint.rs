//! Versioned text checkpoints.
//!
//! ```text
//! pllac-checkpoint 1
//! arch mlp 500
//! tensor layers.0.weight 500 64
//! <row-major values, one matrix row per line>
//! tensor layers.0.bias 500
//! <values>
//! ...
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};

use super::{Architecture, ClassifierParams, Dense};
use crate::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;
const MAGIC: &str = "pllac-checkpoint";

pub fn checkpoint_to_string(params: &ClassifierParams) -> String {
    let mut s = String::new();
    writeln!(s, "{MAGIC} {CHECKPOINT_VERSION}").unwrap();
    match params.arch {
        Architecture::Linear => writeln!(s, "arch linear").unwrap(),
        Architecture::Mlp { hidden } => writeln!(s, "arch mlp {hidden}").unwrap(),
    }
    for (i, layer) in params.layers.iter().enumerate() {
        let (r, c) = layer.weight.dim();
        writeln!(s, "tensor layers.{i}.weight {r} {c}").unwrap();
        for row in layer.weight.rows() {
            s.push_str(&join(row.iter()));
            s.push('\n');
        }
        writeln!(s, "tensor layers.{i}.bias {}", layer.bias.len()).unwrap();
        s.push_str(&join(layer.bias.iter()));
        s.push('\n');
    }
    s
}

fn join<'a>(it: impl Iterator<Item = &'a f64>) -> String {
    it.map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn save_checkpoint(path: impl AsRef<Path>, params: &ClassifierParams) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, checkpoint_to_string(params)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<ClassifierParams> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    checkpoint_from_str(&text)
}

pub fn checkpoint_from_str(text: &str) -> Result<ClassifierParams> {
    let bad = |m: &str| Error::Checkpoint(m.to_string());
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad("empty file"))?;
    match header.split_whitespace().collect::<Vec<_>>().as_slice() {
        [MAGIC, v] if v.parse::<u32>() == Ok(CHECKPOINT_VERSION) => {}
        _ => return Err(bad(&format!("unsupported header {header:?}"))),
    }
    let arch_line = lines.next().ok_or_else(|| bad("missing arch"))?;
    let arch = match arch_line.split_whitespace().collect::<Vec<_>>().as_slice() {
        ["arch", "linear"] => Architecture::Linear,
        ["arch", "mlp", h] => Architecture::Mlp {
            hidden: h.parse().map_err(|_| bad("bad hidden width"))?,
        },
        _ => return Err(bad(&format!("bad arch line {arch_line:?}"))),
    };
    let n_layers = match arch {
        Architecture::Linear => 1,
        Architecture::Mlp { .. } => 2,
    };
    let parse_row = |line: Option<&str>, len: usize| -> Result<Vec<f64>> {
        let vals = line
            .ok_or_else(|| bad("truncated tensor"))?
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| bad(&format!("bad value {t:?}"))))
            .collect::<Result<Vec<_>>>()?;
        if vals.len() != len {
            return Err(bad("row length mismatch"));
        }
        Ok(vals)
    };
    let mut layers = Vec::with_capacity(n_layers);
    for i in 0..n_layers {
        let head = lines.next().ok_or_else(|| bad("missing weight tensor"))?;
        let (r, c) = match head.split_whitespace().collect::<Vec<_>>().as_slice() {
            ["tensor", name, r, c] if *name == format!("layers.{i}.weight") => (
                r.parse::<usize>().map_err(|_| bad("bad rows"))?,
                c.parse::<usize>().map_err(|_| bad("bad cols"))?,
            ),
            _ => return Err(bad(&format!("expected weight tensor, got {head:?}"))),
        };
        let mut w = Vec::with_capacity(r * c);
        for _ in 0..r {
            w.extend(parse_row(lines.next(), c)?);
        }
        let head = lines.next().ok_or_else(|| bad("missing bias tensor"))?;
        let len = match head.split_whitespace().collect::<Vec<_>>().as_slice() {
            ["tensor", name, l] if *name == format!("layers.{i}.bias") => {
                l.parse::<usize>().map_err(|_| bad("bad bias length"))?
            }
            _ => return Err(bad(&format!("expected bias tensor, got {head:?}"))),
        };
        if len != r {
            return Err(bad("bias length does not match weight rows"));
        }
        let b = parse_row(lines.next(), len)?;
        layers.push(Dense {
            weight: Array2::from_shape_vec((r, c), w).map_err(|e| bad(&e.to_string()))?,
            bias: Array1::from(b),
        });
    }
    if layers.len() == 2 && layers[1].weight.ncols() != layers[0].weight.nrows() {
        return Err(bad("layer shapes do not chain"));
    }
    Ok(ClassifierParams { arch, layers })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;

    #[test]
    fn exact_round_trip() {
        let mut rng = seeded_rng(12);
        for arch in [Architecture::Linear, Architecture::Mlp { hidden: 3 }] {
            let p = ClassifierParams::init(arch, 4, 5, &mut rng).unwrap();
            let back = checkpoint_from_str(&checkpoint_to_string(&p)).unwrap();
            assert_eq!(p, back);
        }
    }

    #[test]
    fn rejects_unknown_version() {
        let p = ClassifierParams::zeros(Architecture::Linear, 2, 2);
        let text = checkpoint_to_string(&p).replacen("checkpoint 1", "checkpoint 9", 1);
        assert!(matches!(checkpoint_from_str(&text), Err(Error::Checkpoint(_))));
    }
}
