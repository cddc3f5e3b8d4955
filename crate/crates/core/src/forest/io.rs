//! Binary model format. All integers and floats are little-endian.
//!
//! ```text
//! magic               4 bytes  "BDRF"
//! version             u8       FORMAT_VERSION
//! n_trees             u32  \
//! max_depth           u32   |
//! min_leaf            u32   | hyperparameters
//! bootstrap           u8    |
//! features_per_split  u32  /
//! total_budget        f64  \
//! metric              u8    | training metadata
//! seed                u64   |  (metric: 0 spacetime, 1 qubits, 2 time)
//! n_train             u64  /
//! tree_count          u32
//! per tree:
//!   node_count        u32
//!   per node:
//!     tag             u8       0 = leaf, 1 = split
//!     leaf:  n_samples u32, value 3 x f64
//!     split: feature u32, threshold f64, left u32, right u32
//! ```

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};

use super::{ForestError, ForestModel, Hyperparams, Node, TrainingMetadata, Tree};
use crate::dataset::CostMetric;

pub const MAGIC: [u8; 4] = *b"BDRF";
pub const FORMAT_VERSION: u8 = 1;

fn metric_tag(m: CostMetric) -> u8 {
    match m {
        CostMetric::SpaceTime => 0,
        CostMetric::QubitsOnly => 1,
        CostMetric::TimeOnly => 2,
    }
}

pub fn write_model<W: Write>(model: &ForestModel, w: &mut W) -> io::Result<()> {
    w.write_all(&MAGIC)?;
    w.write_u8(FORMAT_VERSION)?;
    let hp = &model.hyperparams;
    w.write_u32::<LE>(hp.n_trees)?;
    w.write_u32::<LE>(hp.max_depth)?;
    w.write_u32::<LE>(hp.min_leaf)?;
    w.write_u8(hp.bootstrap as u8)?;
    w.write_u32::<LE>(hp.features_per_split)?;
    let md = &model.metadata;
    w.write_f64::<LE>(md.total_budget)?;
    w.write_u8(metric_tag(md.metric))?;
    w.write_u64::<LE>(md.seed)?;
    w.write_u64::<LE>(md.n_train)?;
    w.write_u32::<LE>(model.trees.len() as u32)?;
    for tree in &model.trees {
        w.write_u32::<LE>(tree.nodes.len() as u32)?;
        for node in &tree.nodes {
            match *node {
                Node::Leaf { value, n_samples } => {
                    w.write_u8(0)?;
                    w.write_u32::<LE>(n_samples)?;
                    for v in value {
                        w.write_f64::<LE>(v)?;
                    }
                }
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    w.write_u8(1)?;
                    w.write_u32::<LE>(feature)?;
                    w.write_f64::<LE>(threshold)?;
                    w.write_u32::<LE>(left)?;
                    w.write_u32::<LE>(right)?;
                }
            }
        }
    }
    Ok(())
}

fn corrupt(e: io::Error) -> ForestError {
    if e.kind() == io::ErrorKind::UnexpectedEof {
        ForestError::CorruptModel("file is truncated".into())
    } else {
        ForestError::CorruptModel(e.to_string())
    }
}

/// Reads and validates a model from `bytes`.
pub fn read_model(mut r: &[u8]) -> Result<ForestModel, ForestError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(corrupt)?;
    if magic != MAGIC {
        return Err(ForestError::CorruptModel("bad magic bytes".into()));
    }
    let version = r.read_u8().map_err(corrupt)?;
    if version != FORMAT_VERSION {
        return Err(ForestError::VersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let model = read_body(&mut r).map_err(corrupt)??;
    if !r.is_empty() {
        return Err(ForestError::CorruptModel(format!("{} trailing bytes", r.len())));
    }
    model.validate().map_err(ForestError::CorruptModel)?;
    Ok(model)
}

fn read_body(r: &mut &[u8]) -> io::Result<Result<ForestModel, ForestError>> {
    let hyperparams = Hyperparams {
        n_trees: r.read_u32::<LE>()?,
        max_depth: r.read_u32::<LE>()?,
        min_leaf: r.read_u32::<LE>()?,
        bootstrap: match r.read_u8()? {
            0 => false,
            1 => true,
            other => return Ok(Err(ForestError::CorruptModel(format!("bootstrap flag {other}")))),
        },
        features_per_split: r.read_u32::<LE>()?,
    };
    let total_budget = r.read_f64::<LE>()?;
    let metric = match r.read_u8()? {
        0 => CostMetric::SpaceTime,
        1 => CostMetric::QubitsOnly,
        2 => CostMetric::TimeOnly,
        other => return Ok(Err(ForestError::CorruptModel(format!("metric tag {other}")))),
    };
    let metadata = TrainingMetadata {
        total_budget,
        metric,
        seed: r.read_u64::<LE>()?,
        n_train: r.read_u64::<LE>()?,
    };
    let tree_count = r.read_u32::<LE>()? as usize;
    // cheap bounds before allocating: a tree takes at least 4 bytes, a node 21
    if tree_count > r.len() / 4 {
        return Err(io::ErrorKind::UnexpectedEof.into());
    }
    let mut trees = Vec::with_capacity(tree_count);
    for _ in 0..tree_count {
        let node_count = r.read_u32::<LE>()? as usize;
        if node_count > r.len() / 21 {
            return Err(io::ErrorKind::UnexpectedEof.into());
        }
        let mut nodes = Vec::with_capacity(node_count);
        for _ in 0..node_count {
            let node = match r.read_u8()? {
                0 => Node::Leaf {
                    n_samples: r.read_u32::<LE>()?,
                    value: [r.read_f64::<LE>()?, r.read_f64::<LE>()?, r.read_f64::<LE>()?],
                },
                1 => Node::Split {
                    feature: r.read_u32::<LE>()?,
                    threshold: r.read_f64::<LE>()?,
                    left: r.read_u32::<LE>()?,
                    right: r.read_u32::<LE>()?,
                },
                other => return Ok(Err(ForestError::CorruptModel(format!("node tag {other}")))),
            };
            nodes.push(node);
        }
        trees.push(Tree { nodes });
    }
    Ok(Ok(ForestModel {
        hyperparams,
        metadata,
        trees,
    }))
}

pub fn save_model(model: &ForestModel, path: &Path) -> Result<(), ForestError> {
    let mut buf = Vec::new();
    write_model(model, &mut buf).expect("writing to a Vec cannot fail");
    fs::write(path, buf).map_err(|source| ForestError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_model(path: &Path) -> Result<ForestModel, ForestError> {
    let bytes = fs::read(path).map_err(|source| ForestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_model(&bytes)
}

#[cfg(test)]
mod tests {
    use super::super::{tests::record, train, Hyperparams};
    use super::*;
    use crate::circuit::LogicalCounts;

    fn model() -> ForestModel {
        let data: Vec<_> = (0..30)
            .map(|i| {
                let c = LogicalCounts {
                    t_count: (i * 17 % 23) as u64,
                    ..LogicalCounts::with_qubits(i as u64 + 1)
                };
                record(i, c, [1.0 + i as f64, 2.0, 3.0 + (i % 4) as f64], 0.01)
            })
            .collect();
        let hp = Hyperparams {
            n_trees: 5,
            ..Hyperparams::default()
        };
        train(&data, &hp, 9).unwrap()
    }

    fn bytes(m: &ForestModel) -> Vec<u8> {
        let mut buf = Vec::new();
        write_model(m, &mut buf).unwrap();
        buf
    }

    #[test]
    fn round_trip() {
        let m = model();
        assert_eq!(read_model(&bytes(&m)).unwrap(), m);
    }

    #[test]
    fn truncated_is_corrupt() {
        let b = bytes(&model());
        for cut in [0, 3, 5, 20, b.len() / 2, b.len() - 1] {
            assert!(
                matches!(read_model(&b[..cut]), Err(ForestError::CorruptModel(_))),
                "cut={cut}"
            );
        }
    }

    #[test]
    fn version_bump_is_mismatch() {
        let mut b = bytes(&model());
        b[4] += 1;
        assert!(matches!(
            read_model(&b),
            Err(ForestError::VersionMismatch { found: 2, expected: 1 })
        ));
    }

    #[test]
    fn trailing_bytes_and_bad_magic() {
        let mut b = bytes(&model());
        b.push(0);
        assert!(matches!(read_model(&b), Err(ForestError::CorruptModel(_))));
        let mut b = bytes(&model());
        b[0] = b'X';
        assert!(matches!(read_model(&b), Err(ForestError::CorruptModel(_))));
    }

    #[test]
    fn negative_leaf_is_corrupt() {
        let mut m = model();
        let leaf = m.trees[0]
            .nodes
            .iter_mut()
            .find(|n| matches!(n, Node::Leaf { .. }))
            .unwrap();
        *leaf = Node::Leaf {
            value: [-1.0, 0.0, 0.0],
            n_samples: 5,
        };
        assert!(matches!(read_model(&bytes(&m)), Err(ForestError::CorruptModel(_))));
    }
}
