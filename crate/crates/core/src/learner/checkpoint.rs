//! Plain-text network checkpoints.
//!
//! Layout (one record per line, space separated):
//!
//! ```text
//! LUMENAV-MLP 1
//! layers <n> <size_0> ... <size_n-1>
//! w<k> <rows*cols row-major values>
//! b<k> <rows values>
//! ```
//!
//! Values print with shortest round-trip formatting, so save/load is
//! bit-exact. The loader validates the header and every shape.

use super::mlp::{Layer, Mlp};
use super::LearnError;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

const MAGIC: &str = "LUMENAV-MLP";
const VERSION: u32 = 1;

pub fn write_mlp<W: Write>(net: &Mlp, mut out: W) -> Result<(), LearnError> {
    let mut text = format!("{MAGIC} {VERSION}\n");
    write!(text, "layers {}", net.layer_sizes().len()).unwrap();
    for s in net.layer_sizes() {
        write!(text, " {s}").unwrap();
    }
    text.push('\n');
    for (k, layer) in net.layers().iter().enumerate() {
        write!(text, "w{k}").unwrap();
        for v in &layer.weights {
            write!(text, " {v}").unwrap();
        }
        text.push('\n');
        write!(text, "b{k}").unwrap();
        for v in &layer.biases {
            write!(text, " {v}").unwrap();
        }
        text.push('\n');
    }
    out.write_all(text.as_bytes())?;
    Ok(())
}

pub fn read_mlp<R: Read>(input: R) -> Result<Mlp, LearnError> {
    let reader = BufReader::new(input);
    let mut lines = reader.lines();
    let mut next_line = || -> Result<String, LearnError> {
        lines
            .next()
            .ok_or_else(|| LearnError::CheckpointFormat("unexpected end of file".into()))?
            .map_err(LearnError::CheckpointIo)
    };

    let header = next_line()?;
    let mut parts = header.split_whitespace();
    if parts.next() != Some(MAGIC) {
        return Err(LearnError::CheckpointFormat("bad magic".into()));
    }
    let version: u32 = parts
        .next()
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| LearnError::CheckpointFormat("missing version".into()))?;
    if version != VERSION {
        return Err(LearnError::CheckpointFormat(format!("unsupported version {version}")));
    }

    let layers_line = next_line()?;
    let mut parts = layers_line.split_whitespace();
    if parts.next() != Some("layers") {
        return Err(LearnError::CheckpointFormat("missing layers record".into()));
    }
    let n: usize = parts
        .next()
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| LearnError::CheckpointFormat("bad layer count".into()))?;
    let sizes: Vec<usize> = parts
        .map(|v| v.parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|e| LearnError::CheckpointFormat(format!("bad layer size: {e}")))?;
    if sizes.len() != n || n < 2 || sizes.iter().any(|s| *s == 0) {
        return Err(LearnError::CheckpointFormat("layer size header mismatch".into()));
    }

    let mut layers = Vec::with_capacity(n - 1);
    for k in 0..n - 1 {
        let (cols, rows) = (sizes[k], sizes[k + 1]);
        let parse = |line: String, tag: &str, expect: usize| -> Result<Vec<f64>, LearnError> {
            let mut parts = line.split_whitespace();
            if parts.next() != Some(tag) {
                return Err(LearnError::CheckpointFormat(format!("expected record {tag}")));
            }
            let values: Vec<f64> = parts
                .map(|v| v.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| LearnError::CheckpointFormat(format!("bad value in {tag}: {e}")))?;
            if values.len() != expect {
                return Err(LearnError::CheckpointFormat(format!(
                    "{tag} holds {} values, expected {expect}",
                    values.len()
                )));
            }
            Ok(values)
        };
        let weights = parse(next_line()?, &format!("w{k}"), rows * cols)?;
        let biases = parse(next_line()?, &format!("b{k}"), rows)?;
        layers.push(Layer { weights, biases, rows, cols });
    }
    Ok(Mlp::from_layers(sizes, layers))
}

pub fn save_mlp(net: &Mlp, path: &Path) -> Result<(), LearnError> {
    let file = std::fs::File::create(path)?;
    write_mlp(net, std::io::BufWriter::new(file))
}

pub fn load_mlp(path: &Path) -> Result<Mlp, LearnError> {
    let file = std::fs::File::open(path)?;
    read_mlp(file)
}
