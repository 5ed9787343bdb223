//! Binary model file.
//!
//! Layout: `SHLC`, one version byte, then sections. Each section is a 4-byte
//! tag, a little-endian `u64` payload length and the payload. Sections appear
//! in the order `CONF VOCB PCA_ MODL END_`; `END_` is empty and must be the
//! last bytes of the file. Floats are little-endian IEEE-754 doubles.

use super::{Pipeline, PipelineConfig};
use crate::featurize::Vocabulary;
use crate::models::{ClassifierModel, DecisionTree, DenseLayer, LrModel, MlpModel, RfModel, TreeNode};
use crate::reduce::PcaModel;
use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"SHLC";
pub const FORMAT_VERSION: u8 = 1;

const SECTIONS: [&[u8; 4]; 4] = [b"CONF", b"VOCB", b"PCA_", b"MODL"];
const END: &[u8; 4] = b"END_";

const KIND_LR: u8 = 0;
const KIND_RF: u8 = 1;
const KIND_MLP: u8 = 2;
const NODE_LEAF: u8 = 0;
const NODE_SPLIT: u8 = 1;

#[derive(Default)]
struct Enc(Vec<u8>);

impl Enc {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }

    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn len(&mut self, v: usize) {
        self.u64(v as u64);
    }

    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn f64s(&mut self, vs: &[f64]) {
        self.len(vs.len());
        vs.iter().for_each(|&v| self.f64(v));
    }
}

struct Dec<'a> {
    buf: &'a [u8],
    what: &'static str,
}

impl<'a> Dec<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() < n {
            return Err(Error::Model(format!("{} section truncated", self.what)));
        }
        let (head, rest) = self.buf.split_at(n);
        self.buf = rest;
        Ok(head)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    /// A count that must fit in the remaining bytes at `unit` bytes per item.
    fn len(&mut self, unit: usize) -> Result<usize> {
        let n = self.u64()?;
        if n.saturating_mul(unit as u64) > self.buf.len() as u64 {
            return Err(Error::Model(format!("{} section declares {n} items past its end", self.what)));
        }
        Ok(n as usize)
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64s(&mut self) -> Result<Vec<f64>> {
        let n = self.len(8)?;
        (0..n).map(|_| self.f64()).collect()
    }

    fn finish(self) -> Result<()> {
        if self.buf.is_empty() {
            Ok(())
        } else {
            Err(Error::Model(format!("{} trailing bytes in {} section", self.buf.len(), self.what)))
        }
    }
}

pub fn encode(p: &Pipeline) -> Vec<u8> {
    let vocab = serde_json::to_vec(&p.vocabulary).expect("vocabulary serialises");
    let payloads = [p.config.to_text().into_bytes(), vocab, encode_pca(&p.pca), encode_model(&p.model)];
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.push(FORMAT_VERSION);
    for (tag, body) in SECTIONS.iter().zip(&payloads) {
        out.extend_from_slice(*tag);
        out.extend_from_slice(&(body.len() as u64).to_le_bytes());
        out.extend_from_slice(body);
    }
    out.extend_from_slice(END);
    out.extend_from_slice(&0u64.to_le_bytes());
    out
}

pub fn decode(bytes: &[u8]) -> Result<Pipeline> {
    let mut d = Dec { buf: bytes, what: "header" };
    if d.take(4).ok() != Some(&MAGIC[..]) {
        return Err(Error::Model("bad magic, not a model file".into()));
    }
    let version = d.u8()?;
    if version != FORMAT_VERSION {
        return Err(Error::Model(format!("unsupported format version {version}")));
    }
    let mut bodies = Vec::with_capacity(SECTIONS.len());
    for tag in SECTIONS.iter().chain([&END]) {
        let found = d.take(4)?;
        if found != &tag[..] {
            return Err(Error::Model(format!(
                "expected section {}, found {:?}",
                String::from_utf8_lossy(*tag),
                String::from_utf8_lossy(found)
            )));
        }
        let n = d.len(1)?;
        bodies.push(d.take(n)?);
    }
    d.finish()?;
    if !bodies[4].is_empty() {
        return Err(Error::Model("END_ section must be empty".into()));
    }

    let conf = std::str::from_utf8(bodies[0]).map_err(|_| Error::Model("CONF section is not UTF-8".into()))?;
    let config = PipelineConfig::from_text(conf).map_err(|e| Error::Model(format!("CONF section: {e}")))?;
    let vocabulary: Vocabulary =
        serde_json::from_slice(bodies[1]).map_err(|e| Error::Model(format!("VOCB section: {e}")))?;
    let pca = decode_pca(bodies[2])?;
    let model = decode_model(bodies[3])?;
    let p = Pipeline {
        config,
        vocabulary,
        pca,
        model,
    };
    p.validate()?;
    Ok(p)
}

fn encode_pca(pca: &PcaModel) -> Vec<u8> {
    let mut e = Enc::default();
    e.f64(pca.total_variance());
    e.f64(pca.variance_target());
    e.f64s(pca.mean());
    match pca.scale() {
        Some(s) => {
            e.u8(1);
            e.f64s(s);
        }
        None => e.u8(0),
    }
    e.f64s(pca.explained_variance());
    e.f64s(pca.components());
    e.0
}

fn decode_pca(buf: &[u8]) -> Result<PcaModel> {
    let mut d = Dec { buf, what: "PCA_" };
    let total = d.f64()?;
    let target = d.f64()?;
    let mean = d.f64s()?;
    let scale = match d.u8()? {
        0 => None,
        1 => Some(d.f64s()?),
        t => return Err(Error::Model(format!("PCA_ scale flag {t}"))),
    };
    let explained = d.f64s()?;
    let components = d.f64s()?;
    d.finish()?;
    PcaModel::from_parts(mean, scale, components, explained, total, target)
        .map_err(|e| Error::Model(format!("PCA_ section: {e}")))
}

fn encode_model(model: &ClassifierModel) -> Vec<u8> {
    let mut e = Enc::default();
    match model {
        ClassifierModel::Lr(m) => {
            e.u8(KIND_LR);
            e.f64s(&m.weights);
            e.f64(m.bias);
        }
        ClassifierModel::Rf(m) => {
            e.u8(KIND_RF);
            e.len(m.input_dim);
            e.f64(m.feature_subsample);
            e.len(m.trees.len());
            for tree in &m.trees {
                e.len(tree.nodes.len());
                for node in &tree.nodes {
                    match *node {
                        TreeNode::Leaf { prob } => {
                            e.u8(NODE_LEAF);
                            e.f64(prob);
                        }
                        TreeNode::Split { feature, threshold, left, right } => {
                            e.u8(NODE_SPLIT);
                            e.len(feature);
                            e.f64(threshold);
                            e.len(left);
                            e.len(right);
                        }
                    }
                }
            }
        }
        ClassifierModel::Mlp(m) => {
            e.u8(KIND_MLP);
            e.len(m.layers.len());
            for layer in &m.layers {
                e.len(layer.in_dim);
                e.len(layer.out_dim);
                e.f64s(&layer.weights);
                e.f64s(&layer.bias);
            }
        }
    }
    e.0
}

fn decode_model(buf: &[u8]) -> Result<ClassifierModel> {
    let mut d = Dec { buf, what: "MODL" };
    let model = match d.u8()? {
        KIND_LR => {
            let weights = d.f64s()?;
            let bias = d.f64()?;
            if weights.is_empty() || !weights.iter().chain([&bias]).all(|v| v.is_finite()) {
                return Err(Error::Model("logistic regression parameters invalid".into()));
            }
            ClassifierModel::Lr(LrModel { weights, bias })
        }
        KIND_RF => {
            let input_dim = d.u64()? as usize;
            let feature_subsample = d.f64()?;
            let n_trees = d.len(8)?;
            let mut trees = Vec::with_capacity(n_trees);
            for _ in 0..n_trees {
                let n_nodes = d.len(9)?;
                let mut nodes = Vec::with_capacity(n_nodes);
                for _ in 0..n_nodes {
                    nodes.push(match d.u8()? {
                        NODE_LEAF => TreeNode::Leaf { prob: d.f64()? },
                        NODE_SPLIT => TreeNode::Split {
                            feature: d.u64()? as usize,
                            threshold: d.f64()?,
                            left: d.u64()? as usize,
                            right: d.u64()? as usize,
                        },
                        t => return Err(Error::Model(format!("unknown tree node tag {t}"))),
                    });
                }
                trees.push(DecisionTree { nodes });
            }
            let m = RfModel {
                input_dim,
                feature_subsample,
                trees,
            };
            m.validate()?;
            ClassifierModel::Rf(m)
        }
        KIND_MLP => {
            let n_layers = d.len(16)?;
            let mut layers = Vec::with_capacity(n_layers);
            for _ in 0..n_layers {
                let in_dim = d.u64()? as usize;
                let out_dim = d.u64()? as usize;
                let weights = d.f64s()?;
                let bias = d.f64s()?;
                layers.push(DenseLayer {
                    in_dim,
                    out_dim,
                    weights,
                    bias,
                });
            }
            let m = MlpModel { layers };
            m.validate()?;
            ClassifierModel::Mlp(m)
        }
        t => return Err(Error::Model(format!("unknown model kind tag {t}"))),
    };
    d.finish()?;
    Ok(model)
}
