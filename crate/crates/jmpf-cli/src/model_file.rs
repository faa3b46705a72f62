//! Self-describing binary model container.
//!
//! Layout: 4-byte magic `JMPF`, little-endian u32 format version, one kind
//! byte, then length-prefixed sections. All counts are little-endian u32,
//! all reals little-endian f64, so a save/load round trip is bit-exact.

use std::fs;
use std::path::Path;

use jmpf_core::datasets::{FittedModel, Normalizer};
use jmpf_core::forest::{Forest, ForestConfig, Impurity, LeafModel, Node, SplitMode, Task, Tree};
use jmpf_core::numerics::PcaBasis;
use jmpf_core::srpipe::{PatchConfig, SrModel};
use jmpf_core::{Matrix, RotationModel};

pub const MAGIC: [u8; 4] = *b"JMPF";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ModelFileError {
    #[error("not a model file (bad magic)")]
    BadMagic,
    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u32),
    #[error("truncated model file")]
    Truncated,
    #[error("corrupt model file: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

type Result<T> = std::result::Result<T, ModelFileError>;

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Classifier(FittedModel),
    Regressor(FittedModel),
    Sr(SrModel),
}

impl Model {
    fn kind_byte(&self) -> u8 {
        match self {
            Model::Classifier(_) => 0,
            Model::Regressor(_) => 1,
            Model::Sr(_) => 2,
        }
    }
}

// ---------------------------------------------------------------- writing

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn new() -> Self {
        Self { buf: Vec::new() }
    }

    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn count(&mut self, v: usize) {
        self.u32(u32::try_from(v).expect("count fits u32"));
    }

    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn vec_f64(&mut self, v: &[f64]) {
        self.count(v.len());
        for &x in v {
            self.f64(x);
        }
    }

    fn matrix(&mut self, m: &Matrix) {
        self.count(m.rows());
        self.count(m.cols());
        for &x in m.data() {
            self.f64(x);
        }
    }

    /// Nested length-prefixed section.
    fn section(&mut self, f: impl FnOnce(&mut Writer)) {
        let mut inner = Writer::new();
        f(&mut inner);
        self.count(inner.buf.len());
        self.buf.extend_from_slice(&inner.buf);
    }
}

fn write_forest_config(w: &mut Writer, c: &ForestConfig) {
    w.count(c.num_trees);
    w.count(c.max_depth);
    w.count(c.min_samples_split);
    w.count(c.num_candidate_dims);
    w.count(c.num_candidate_thresholds);
    w.u8(match c.mode {
        SplitMode::Standard => 0,
        SplitMode::Jmpf => 1,
    });
    w.u8(match c.task {
        Task::Classification => 0,
        Task::Regression => 1,
        Task::RidgeLeaves => 2,
    });
    w.f64(c.lambda);
    w.u8(match c.impurity {
        Impurity::Entropy => 0,
        Impurity::VarianceSum => 1,
        Impurity::GaussianEntropy => 2,
    });
    w.u64(c.seed);
}

fn write_leaf(w: &mut Writer, leaf: &LeafModel) {
    match leaf {
        LeafModel::Histogram(h) => {
            w.u8(0);
            w.vec_f64(h);
        }
        LeafModel::Mean(m) => {
            w.u8(1);
            w.vec_f64(m);
        }
        LeafModel::Ridge { p, samples } => {
            w.u8(2);
            w.matrix(p);
            w.u32(*samples);
        }
    }
}

fn write_forest(w: &mut Writer, f: &Forest) {
    write_forest_config(w, &f.config);
    w.count(f.feature_dim);
    w.count(f.num_classes);
    w.count(f.target_dim);
    w.count(f.trees.len());
    for tree in &f.trees {
        w.count(tree.nodes.len());
        for node in &tree.nodes {
            match node {
                Node::Split {
                    dim,
                    threshold,
                    left,
                    right,
                } => {
                    w.u8(0);
                    w.count(*dim);
                    w.f64(*threshold);
                    w.count(*left);
                    w.count(*right);
                }
                Node::Leaf(leaf) => {
                    w.u8(1);
                    write_leaf(w, leaf);
                }
            }
        }
    }
}

fn write_rotation(w: &mut Writer, r: &RotationModel) {
    w.vec_f64(&r.mean);
    w.matrix(&r.r);
    w.vec_f64(&r.loss_trace);
    w.count(r.iterations);
    w.u64(r.seed);
}

fn write_fitted(w: &mut Writer, m: &FittedModel) {
    w.section(|w| {
        w.vec_f64(&m.norm.mean);
        w.vec_f64(&m.norm.scale);
    });
    w.section(|w| match &m.rotation {
        None => w.u8(0),
        Some(r) => {
            w.u8(1);
            write_rotation(w, r);
        }
    });
    w.section(|w| write_forest(w, &m.forest));
}

fn write_sr(w: &mut Writer, m: &SrModel) {
    w.section(|w| {
        w.count(m.patch.patch_size);
        w.count(m.patch.stride);
        w.count(m.patch.scale);
        w.f64(m.patch.pca_energy);
        w.u8(m.raw_targets as u8);
    });
    w.section(|w| {
        w.vec_f64(&m.pca.mean);
        w.matrix(&m.pca.components);
        w.vec_f64(&m.pca.explained_variance);
    });
    w.section(|w| write_rotation(w, &m.rotation));
    w.section(|w| write_forest(w, &m.forest));
}

/// Serialize and write atomically (temp file + rename).
pub fn save_model(model: &Model, path: &Path) -> Result<()> {
    let mut w = Writer::new();
    w.buf.extend_from_slice(&MAGIC);
    w.u32(FORMAT_VERSION);
    w.u8(model.kind_byte());
    match model {
        Model::Classifier(m) | Model::Regressor(m) => write_fitted(&mut w, m),
        Model::Sr(m) => write_sr(&mut w, m),
    }
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    fs::write(&tmp, &w.buf)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

// ---------------------------------------------------------------- reading

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(ModelFileError::Truncated);
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn count(&mut self) -> Result<usize> {
        Ok(self.u32()? as usize)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn vec_f64(&mut self) -> Result<Vec<f64>> {
        let n = self.count()?;
        (0..n).map(|_| self.f64()).collect()
    }

    fn matrix(&mut self) -> Result<Matrix> {
        let rows = self.count()?;
        let cols = self.count()?;
        let data: Vec<f64> = (0..rows * cols)
            .map(|_| self.f64())
            .collect::<Result<_>>()?;
        Matrix::new(rows, cols, data).map_err(|e| ModelFileError::Corrupt(e.to_string()))
    }

    fn section(&mut self) -> Result<Reader<'a>> {
        let len = self.count()?;
        Ok(Reader {
            buf: self.take(len)?,
            pos: 0,
        })
    }

    fn expect_consumed(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(ModelFileError::Corrupt("trailing bytes in section".into()));
        }
        Ok(())
    }
}

fn read_forest_config(r: &mut Reader) -> Result<ForestConfig> {
    Ok(ForestConfig {
        num_trees: r.count()?,
        max_depth: r.count()?,
        min_samples_split: r.count()?,
        num_candidate_dims: r.count()?,
        num_candidate_thresholds: r.count()?,
        mode: match r.u8()? {
            0 => SplitMode::Standard,
            1 => SplitMode::Jmpf,
            k => return Err(ModelFileError::Corrupt(format!("split mode tag {k}"))),
        },
        task: match r.u8()? {
            0 => Task::Classification,
            1 => Task::Regression,
            2 => Task::RidgeLeaves,
            k => return Err(ModelFileError::Corrupt(format!("task tag {k}"))),
        },
        lambda: r.f64()?,
        impurity: match r.u8()? {
            0 => Impurity::Entropy,
            1 => Impurity::VarianceSum,
            2 => Impurity::GaussianEntropy,
            k => return Err(ModelFileError::Corrupt(format!("impurity tag {k}"))),
        },
        seed: r.u64()?,
    })
}

fn read_leaf(r: &mut Reader) -> Result<LeafModel> {
    Ok(match r.u8()? {
        0 => LeafModel::Histogram(r.vec_f64()?),
        1 => LeafModel::Mean(r.vec_f64()?),
        2 => LeafModel::Ridge {
            p: r.matrix()?,
            samples: r.u32()?,
        },
        k => return Err(ModelFileError::Corrupt(format!("leaf tag {k}"))),
    })
}

fn read_forest(r: &mut Reader) -> Result<Forest> {
    let config = read_forest_config(r)?;
    let feature_dim = r.count()?;
    let num_classes = r.count()?;
    let target_dim = r.count()?;
    let num_trees = r.count()?;
    let mut trees = Vec::with_capacity(num_trees);
    for _ in 0..num_trees {
        let num_nodes = r.count()?;
        let mut nodes = Vec::with_capacity(num_nodes);
        for _ in 0..num_nodes {
            nodes.push(match r.u8()? {
                0 => Node::Split {
                    dim: r.count()?,
                    threshold: r.f64()?,
                    left: r.count()?,
                    right: r.count()?,
                },
                1 => Node::Leaf(read_leaf(r)?),
                k => return Err(ModelFileError::Corrupt(format!("node tag {k}"))),
            });
        }
        trees.push(Tree { nodes });
    }
    Ok(Forest {
        config,
        trees,
        feature_dim,
        num_classes,
        target_dim,
    })
}

fn read_rotation(r: &mut Reader) -> Result<RotationModel> {
    Ok(RotationModel {
        mean: r.vec_f64()?,
        r: r.matrix()?,
        loss_trace: r.vec_f64()?,
        iterations: r.count()?,
        seed: r.u64()?,
    })
}

fn read_fitted(r: &mut Reader) -> Result<FittedModel> {
    let mut s = r.section()?;
    let norm = Normalizer {
        mean: s.vec_f64()?,
        scale: s.vec_f64()?,
    };
    s.expect_consumed()?;

    let mut s = r.section()?;
    let rotation = match s.u8()? {
        0 => None,
        1 => Some(read_rotation(&mut s)?),
        k => return Err(ModelFileError::Corrupt(format!("rotation tag {k}"))),
    };
    s.expect_consumed()?;

    let mut s = r.section()?;
    let forest = read_forest(&mut s)?;
    s.expect_consumed()?;

    Ok(FittedModel {
        norm,
        rotation,
        forest,
    })
}

fn read_sr(r: &mut Reader) -> Result<SrModel> {
    let mut s = r.section()?;
    let patch = PatchConfig {
        patch_size: s.count()?,
        stride: s.count()?,
        scale: s.count()?,
        pca_energy: s.f64()?,
    };
    let raw_targets = s.u8()? != 0;
    s.expect_consumed()?;

    let mut s = r.section()?;
    let pca = PcaBasis {
        mean: s.vec_f64()?,
        components: s.matrix()?,
        explained_variance: s.vec_f64()?,
    };
    s.expect_consumed()?;

    let mut s = r.section()?;
    let rotation = read_rotation(&mut s)?;
    s.expect_consumed()?;

    let mut s = r.section()?;
    let forest = read_forest(&mut s)?;
    s.expect_consumed()?;

    Ok(SrModel {
        patch,
        pca,
        rotation,
        forest,
        raw_targets,
    })
}

pub fn load_model(path: &Path) -> Result<Model> {
    let bytes = fs::read(path)?;
    let mut r = Reader {
        buf: &bytes,
        pos: 0,
    };
    if r.take(4)? != MAGIC {
        return Err(ModelFileError::BadMagic);
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(ModelFileError::UnsupportedVersion(version));
    }
    let model = match r.u8()? {
        0 => Model::Classifier(read_fitted(&mut r)?),
        1 => Model::Regressor(read_fitted(&mut r)?),
        2 => Model::Sr(read_sr(&mut r)?),
        k => return Err(ModelFileError::Corrupt(format!("model kind {k}"))),
    };
    r.expect_consumed()?;
    Ok(model)
}
