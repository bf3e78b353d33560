//! Versioned binary container for trained models.
//!
//! Every file starts with the magic bytes `MDLB`, a `u32` format version
//! (currently 1), and a `u8` payload tag: 1 for a detector model, 2 for a
//! GAN checkpoint. All integers are little-endian; every `f64` is stored as
//! its raw little-endian bit pattern, so round-trips are bit-exact.
//!
//! Composite encodings:
//! - vector: `u64` element count, then the elements
//! - matrix: `u64` rows, `u64` cols, then rows*cols `f64`s in row-major order
//! - network: `u64` layer count, then per layer a `u8` tag: 0 dense
//!   (weights matrix, bias vector), 1 batch norm (gamma, beta, running mean,
//!   running variance vectors, then momentum and epsilon), 2 activation
//!   (`u8` 0 = LeakyReLU followed by the slope, 1 = sigmoid)
//!
//! A detector payload is a `u8` kind tag (the position of the kind in
//! [`ClassifierKind::ALL`]) followed by kind-specific fields in declaration
//! order. A GAN payload is a `u8` variant tag (position in
//! [`GanVariant::ALL`]), the full numeric config, the generator network and
//! dimensions, the substitute network, and a presence-flagged additional
//! network. Optimizer state is not persisted: a reloaded checkpoint carries
//! fresh Adam accumulators, which matters only if training is resumed.

use std::fs;
use std::path::Path;

use malgan_core::detectors::{
    AdaBoost, ClassifierKind, ClassifierModel, DecisionTree, GradientBoosting, KnnClassifier,
    LinearSvm, LogisticRegression, MlpClassifier, RandomForest, Stump, TreeNode,
};
use malgan_core::gan::{Gan, GanConfig, GanVariant, Generator};
use malgan_core::matrix::Matrix;
use malgan_core::numnet::{
    ActivationKind, Adam, BatchNormLayer, DenseLayer, Layer, Network,
};

use crate::error::{LabError, Result};

const MAGIC: &[u8; 4] = b"MDLB";
const VERSION: u32 = 1;
const TAG_MODEL: u8 = 1;
const TAG_GAN: u8 = 2;

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn new(payload_tag: u8) -> Self {
        let mut buf = Vec::new();
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.push(payload_tag);
        Writer { buf }
    }

    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn f64_slice(&mut self, v: &[f64]) {
        self.u64(v.len() as u64);
        for &x in v {
            self.f64(x);
        }
    }

    fn u64_slice(&mut self, v: &[u64]) {
        self.u64(v.len() as u64);
        for &x in v {
            self.buf.extend_from_slice(&x.to_le_bytes());
        }
    }

    fn bytes(&mut self, v: &[u8]) {
        self.u64(v.len() as u64);
        self.buf.extend_from_slice(v);
    }

    fn matrix(&mut self, m: &Matrix) {
        self.u64(m.rows() as u64);
        self.u64(m.cols() as u64);
        for &x in m.data() {
            self.f64(x);
        }
    }

    fn network(&mut self, net: &Network) {
        self.u64(net.layers().len() as u64);
        for layer in net.layers() {
            match layer {
                Layer::Dense(d) => {
                    self.u8(0);
                    self.matrix(&d.weights);
                    self.f64_slice(&d.bias);
                }
                Layer::BatchNorm(bn) => {
                    self.u8(1);
                    self.f64_slice(&bn.gamma);
                    self.f64_slice(&bn.beta);
                    self.f64_slice(&bn.running_mean);
                    self.f64_slice(&bn.running_var);
                    self.f64(bn.momentum);
                    self.f64(bn.epsilon);
                }
                Layer::Activation(ActivationKind::LeakyReLU(slope)) => {
                    self.u8(2);
                    self.u8(0);
                    self.f64(*slope);
                }
                Layer::Activation(ActivationKind::Sigmoid) => {
                    self.u8(2);
                    self.u8(1);
                }
            }
        }
    }
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
    location: String,
}

impl<'a> Reader<'a> {
    fn new(data: &'a [u8], location: &str, payload_tag: u8) -> Result<Self> {
        let mut r = Reader {
            data,
            pos: 0,
            location: location.to_string(),
        };
        let magic = r.take(4, "magic")?;
        if magic != MAGIC {
            return Err(r.bad("not a model container (bad magic)"));
        }
        let version = r.u32("version")?;
        if version != VERSION {
            return Err(r.bad(&format!(
                "unsupported container version {version} (this build reads {VERSION})"
            )));
        }
        let tag = r.u8("payload tag")?;
        if tag != payload_tag {
            return Err(r.bad(&format!(
                "payload tag {tag} is not the expected {payload_tag}"
            )));
        }
        Ok(r)
    }

    fn bad(&self, message: &str) -> LabError {
        LabError::format(
            format!("{} (byte {})", self.location, self.pos),
            message,
        )
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.data.len() - self.pos < n {
            return Err(self.bad(&format!("truncated while reading {what}")));
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn usize(&mut self, what: &str) -> Result<usize> {
        let v = self.u64(what)?;
        usize::try_from(v).map_err(|_| self.bad(&format!("{what} {v} does not fit in usize")))
    }

    /// Guards length prefixes against allocating more than the file could
    /// possibly hold.
    fn len_prefix(&mut self, element_size: usize, what: &str) -> Result<usize> {
        let n = self.usize(what)?;
        if n.saturating_mul(element_size) > self.data.len() - self.pos {
            return Err(self.bad(&format!("{what} count {n} exceeds the remaining bytes")));
        }
        Ok(n)
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f64_vec(&mut self, what: &str) -> Result<Vec<f64>> {
        let n = self.len_prefix(8, what)?;
        (0..n).map(|_| self.f64(what)).collect()
    }

    fn u64_vec(&mut self, what: &str) -> Result<Vec<u64>> {
        let n = self.len_prefix(8, what)?;
        (0..n)
            .map(|_| Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap())))
            .collect()
    }

    fn byte_vec(&mut self, what: &str) -> Result<Vec<u8>> {
        let n = self.len_prefix(1, what)?;
        Ok(self.take(n, what)?.to_vec())
    }

    fn matrix(&mut self, what: &str) -> Result<Matrix> {
        let rows = self.usize(what)?;
        let cols = self.usize(what)?;
        let n = rows
            .checked_mul(cols)
            .ok_or_else(|| self.bad(&format!("{what} dimensions overflow")))?;
        if n.saturating_mul(8) > self.data.len() - self.pos {
            return Err(self.bad(&format!("{what} {rows}x{cols} exceeds the remaining bytes")));
        }
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            data.push(self.f64(what)?);
        }
        Matrix::from_vec(rows, cols, data).map_err(LabError::Core)
    }

    fn network(&mut self, what: &str) -> Result<Network> {
        let count = self.len_prefix(1, what)?;
        let mut layers = Vec::with_capacity(count);
        for _ in 0..count {
            let tag = self.u8("layer tag")?;
            layers.push(match tag {
                0 => {
                    let weights = self.matrix("dense weights")?;
                    let bias = self.f64_vec("dense bias")?;
                    Layer::Dense(DenseLayer::from_parts(weights, bias).map_err(LabError::Core)?)
                }
                1 => {
                    let gamma = self.f64_vec("batch norm gamma")?;
                    let beta = self.f64_vec("batch norm beta")?;
                    let running_mean = self.f64_vec("batch norm running mean")?;
                    let running_var = self.f64_vec("batch norm running variance")?;
                    let momentum = self.f64("batch norm momentum")?;
                    let epsilon = self.f64("batch norm epsilon")?;
                    let widths = [beta.len(), running_mean.len(), running_var.len()];
                    if widths.iter().any(|&w| w != gamma.len()) {
                        return Err(self.bad("batch norm vectors disagree on width"));
                    }
                    let mut bn = BatchNormLayer::new(gamma.len());
                    bn.gamma = gamma;
                    bn.beta = beta;
                    bn.running_mean = running_mean;
                    bn.running_var = running_var;
                    bn.momentum = momentum;
                    bn.epsilon = epsilon;
                    Layer::BatchNorm(bn)
                }
                2 => {
                    let act = match self.u8("activation tag")? {
                        0 => ActivationKind::LeakyReLU(self.f64("leaky slope")?),
                        1 => ActivationKind::Sigmoid,
                        other => {
                            return Err(self.bad(&format!("unknown activation tag {other}")))
                        }
                    };
                    act.validate().map_err(LabError::Core)?;
                    Layer::Activation(act)
                }
                other => return Err(self.bad(&format!("unknown layer tag {other}"))),
            });
        }
        Network::new(layers).map_err(LabError::Core)
    }

    fn finish(self) -> Result<()> {
        if self.pos != self.data.len() {
            return Err(self.bad(&format!(
                "{} trailing bytes after the payload",
                self.data.len() - self.pos
            )));
        }
        Ok(())
    }
}

fn write_tree(w: &mut Writer, tree: &DecisionTree) {
    w.u64(tree.num_features as u64);
    w.u64(tree.nodes.len() as u64);
    for node in &tree.nodes {
        match node {
            TreeNode::Leaf { proba } => {
                w.u8(0);
                w.f64(*proba);
            }
            TreeNode::Split {
                feature,
                left,
                right,
            } => {
                w.u8(1);
                w.buf.extend_from_slice(&feature.to_le_bytes());
                w.buf.extend_from_slice(&left.to_le_bytes());
                w.buf.extend_from_slice(&right.to_le_bytes());
            }
        }
    }
}

fn read_tree(r: &mut Reader) -> Result<DecisionTree> {
    let num_features = r.usize("tree feature count")?;
    let count = r.len_prefix(2, "tree node count")?;
    let mut nodes = Vec::with_capacity(count);
    for _ in 0..count {
        nodes.push(match r.u8("tree node tag")? {
            0 => TreeNode::Leaf {
                proba: r.f64("leaf probability")?,
            },
            1 => TreeNode::Split {
                feature: r.u32("split feature")?,
                left: r.u32("split left child")?,
                right: r.u32("split right child")?,
            },
            other => return Err(r.bad(&format!("unknown tree node tag {other}"))),
        });
    }
    Ok(DecisionTree {
        nodes,
        num_features,
    })
}

fn write_stumps(w: &mut Writer, stumps: &[Stump]) {
    w.u64(stumps.len() as u64);
    for s in stumps {
        w.buf.extend_from_slice(&s.feature.to_le_bytes());
        w.f64(s.left);
        w.f64(s.right);
    }
}

fn read_stumps(r: &mut Reader) -> Result<Vec<Stump>> {
    let count = r.len_prefix(20, "stump count")?;
    (0..count)
        .map(|_| {
            Ok(Stump {
                feature: r.u32("stump feature")?,
                left: r.f64("stump left value")?,
                right: r.f64("stump right value")?,
            })
        })
        .collect()
}

fn kind_tag(kind: ClassifierKind) -> u8 {
    ClassifierKind::ALL
        .iter()
        .position(|&k| k == kind)
        .expect("every kind appears in ALL") as u8
}

/// Serializes a trained detector.
pub fn encode_model(model: &ClassifierModel) -> Vec<u8> {
    let mut w = Writer::new(TAG_MODEL);
    w.u8(kind_tag(model.kind()));
    match model {
        ClassifierModel::Rf(m) => {
            w.u64(m.num_features as u64);
            w.f64_slice(&m.importances);
            w.u64(m.trees.len() as u64);
            for tree in &m.trees {
                write_tree(&mut w, tree);
            }
        }
        ClassifierModel::Lr(m) => {
            w.f64_slice(&m.weights);
            w.f64(m.bias);
        }
        ClassifierModel::Dt(m) => write_tree(&mut w, m),
        ClassifierModel::Svm(m) => {
            w.f64_slice(&m.weights);
            w.f64(m.bias);
            w.f64(m.calib_slope);
            w.f64(m.calib_intercept);
        }
        ClassifierModel::Mlp(m) => w.network(&m.network),
        ClassifierModel::Ab(m) => {
            w.u64(m.num_features as u64);
            w.f64(m.prior);
            write_stumps(&mut w, &m.stumps);
            w.f64_slice(&m.alphas);
        }
        ClassifierModel::Gb(m) => {
            w.u64(m.num_features as u64);
            w.f64(m.intercept);
            write_stumps(&mut w, &m.stumps);
        }
        ClassifierModel::Knn(m) => {
            let (words_per_row, packed, labels) = m.storage();
            w.u64(m.k as u64);
            w.u64(m.num_features as u64);
            w.u64(words_per_row as u64);
            w.u64_slice(packed);
            w.bytes(labels);
        }
    }
    w.buf
}

/// Parses a detector container; `location` labels error messages (usually
/// the file path).
pub fn decode_model(data: &[u8], location: &str) -> Result<ClassifierModel> {
    let mut r = Reader::new(data, location, TAG_MODEL)?;
    let tag = r.u8("detector kind tag")?;
    let kind = *ClassifierKind::ALL
        .get(tag as usize)
        .ok_or_else(|| r.bad(&format!("unknown detector kind tag {tag}")))?;
    let model = match kind {
        ClassifierKind::Rf => {
            let num_features = r.usize("forest feature count")?;
            let importances = r.f64_vec("forest importances")?;
            let count = r.len_prefix(17, "forest tree count")?;
            let trees = (0..count)
                .map(|_| read_tree(&mut r))
                .collect::<Result<Vec<_>>>()?;
            ClassifierModel::Rf(RandomForest {
                trees,
                num_features,
                importances,
            })
        }
        ClassifierKind::Lr => ClassifierModel::Lr(LogisticRegression {
            weights: r.f64_vec("regression weights")?,
            bias: r.f64("regression bias")?,
        }),
        ClassifierKind::Dt => ClassifierModel::Dt(read_tree(&mut r)?),
        ClassifierKind::Svm => ClassifierModel::Svm(LinearSvm {
            weights: r.f64_vec("svm weights")?,
            bias: r.f64("svm bias")?,
            calib_slope: r.f64("svm calibration slope")?,
            calib_intercept: r.f64("svm calibration intercept")?,
        }),
        ClassifierKind::Mlp => ClassifierModel::Mlp(MlpClassifier {
            network: r.network("mlp network")?,
        }),
        ClassifierKind::Ab => {
            let num_features = r.usize("adaboost feature count")?;
            let prior = r.f64("adaboost prior")?;
            let stumps = read_stumps(&mut r)?;
            let alphas = r.f64_vec("adaboost alphas")?;
            if alphas.len() != stumps.len() {
                return Err(r.bad("alpha count differs from stump count"));
            }
            ClassifierModel::Ab(AdaBoost {
                stumps,
                alphas,
                num_features,
                prior,
            })
        }
        ClassifierKind::Gb => ClassifierModel::Gb(GradientBoosting {
            num_features: r.usize("boosting feature count")?,
            intercept: r.f64("boosting intercept")?,
            stumps: read_stumps(&mut r)?,
        }),
        ClassifierKind::Knn => {
            let k = r.usize("knn k")?;
            let num_features = r.usize("knn feature count")?;
            let words_per_row = r.usize("knn words per row")?;
            let packed = r.u64_vec("knn packed rows")?;
            let labels = r.byte_vec("knn labels")?;
            ClassifierModel::Knn(
                KnnClassifier::from_storage(k, num_features, words_per_row, packed, labels)
                    .map_err(LabError::Core)?,
            )
        }
    };
    r.finish()?;
    Ok(model)
}

/// Serializes a GAN checkpoint: variant, config, and all network weights.
pub fn encode_gan(gan: &Gan) -> Vec<u8> {
    let mut w = Writer::new(TAG_GAN);
    let variant_tag = GanVariant::ALL
        .iter()
        .position(|&v| v == gan.variant)
        .expect("every variant appears in ALL") as u8;
    w.u8(variant_tag);
    let c = &gan.config;
    w.u64(c.num_features as u64);
    w.u64(c.noise_dim as u64);
    w.f64(c.alpha);
    w.u64(c.hidden_width as u64);
    w.u64(c.batch_size as u64);
    w.u64(c.epochs as u64);
    w.u64(c.retrain_epochs as u64);
    w.f64(c.lr_generator);
    w.f64(c.lr_substitute);
    w.f64(c.lr_additional);
    w.network(&gan.generator.net);
    w.network(&gan.substitute);
    match &gan.additional {
        Some(net) => {
            w.u8(1);
            w.network(net);
        }
        None => w.u8(0),
    }
    w.buf
}

/// Parses a GAN checkpoint. Optimizer accumulators are rebuilt empty.
pub fn decode_gan(data: &[u8], location: &str) -> Result<Gan> {
    let mut r = Reader::new(data, location, TAG_GAN)?;
    let tag = r.u8("variant tag")?;
    let variant = *GanVariant::ALL
        .get(tag as usize)
        .ok_or_else(|| r.bad(&format!("unknown variant tag {tag}")))?;
    let config = GanConfig {
        num_features: r.usize("config num_features")?,
        noise_dim: r.usize("config noise_dim")?,
        alpha: r.f64("config alpha")?,
        hidden_width: r.usize("config hidden_width")?,
        batch_size: r.usize("config batch_size")?,
        epochs: r.usize("config epochs")?,
        retrain_epochs: r.usize("config retrain_epochs")?,
        lr_generator: r.f64("config lr_generator")?,
        lr_substitute: r.f64("config lr_substitute")?,
        lr_additional: r.f64("config lr_additional")?,
    };
    config.validate().map_err(LabError::Core)?;
    let generator_net = r.network("generator network")?;
    let substitute = r.network("substitute network")?;
    let additional = match r.u8("additional detector flag")? {
        0 => None,
        1 => Some(r.network("additional network")?),
        other => return Err(r.bad(&format!("bad additional detector flag {other}"))),
    };
    r.finish()?;

    if variant.has_additional_detector() != additional.is_some() {
        return Err(LabError::format(
            location,
            "additional detector presence does not match the variant",
        ));
    }
    let opt_generator = Adam::new(&generator_net, config.lr_generator);
    let opt_substitute = Adam::new(&substitute, config.lr_substitute);
    let opt_additional = additional
        .as_ref()
        .map(|net| Adam::new(net, config.lr_additional));
    Ok(Gan {
        variant,
        generator: Generator {
            net: generator_net,
            num_features: config.num_features,
            noise_dim: config.noise_dim,
        },
        substitute,
        additional,
        opt_generator,
        opt_substitute,
        opt_additional,
        config,
    })
}

/// Writes a detector container to disk.
pub fn save_model(path: &Path, model: &ClassifierModel) -> Result<()> {
    fs::write(path, encode_model(model)).map_err(|e| LabError::io(path, e))
}

/// Reads a detector container from disk.
pub fn load_model(path: &Path) -> Result<ClassifierModel> {
    let data = fs::read(path).map_err(|e| LabError::io(path, e))?;
    decode_model(&data, &path.display().to_string())
}

/// Writes a GAN checkpoint to disk.
pub fn save_gan(path: &Path, gan: &Gan) -> Result<()> {
    fs::write(path, encode_gan(gan)).map_err(|e| LabError::io(path, e))
}

/// Reads a GAN checkpoint from disk.
pub fn load_gan(path: &Path) -> Result<Gan> {
    let data = fs::read(path).map_err(|e| LabError::io(path, e))?;
    decode_gan(&data, &path.display().to_string())
}
