//! Hidden-node and network representations, forward evaluation, and the
//! versioned text model format (see `FORMATS.md`).

use std::fmt;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::linalg::{bilinear_form, dot, norm2, outer, Matrix};

/// Hidden-layer activation. Only the sigmoid is implemented; every bound in
/// this crate relies on `g' = g(1-g)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Sigmoid,
}

/// Numerically stable sigmoid: the negative branch avoids `exp` overflow.
#[inline]
pub fn activate(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Declared sample shape of a network or dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputShape {
    OneD(usize),
    TwoD(usize, usize),
}

impl InputShape {
    pub fn total(&self) -> usize {
        match *self {
            InputShape::OneD(d) => d,
            InputShape::TwoD(d1, d2) => d1 * d2,
        }
    }

    /// The flat shape with the same number of entries.
    pub fn flattened(&self) -> InputShape {
        InputShape::OneD(self.total())
    }
}

impl fmt::Display for InputShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            InputShape::OneD(d) => write!(f, "1d {d}"),
            InputShape::TwoD(d1, d2) => write!(f, "2d {d1} {d2}"),
        }
    }
}

/// Which hidden-node form a builder configures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    OneD,
    TwoD,
}

/// One configured basis function.
#[derive(Debug, Clone, PartialEq)]
pub enum HiddenNode {
    OneD { w: Vec<f64>, b: f64 },
    TwoD { u: Vec<f64>, v: Vec<f64>, b: f64 },
}

impl HiddenNode {
    pub fn kind(&self) -> NodeKind {
        match self {
            HiddenNode::OneD { .. } => NodeKind::OneD,
            HiddenNode::TwoD { .. } => NodeKind::TwoD,
        }
    }

    /// Pre-activation `w^T flatten(x) + b` (1D) or `u^T x v + b` (2D).
    pub fn preactivation(&self, x: &Matrix) -> Result<f64> {
        match self {
            HiddenNode::OneD { w, b } => {
                if x.rows() * x.cols() != w.len() {
                    return Err(Error::Shape(format!(
                        "node expects {} inputs, sample is {}x{}",
                        w.len(),
                        x.rows(),
                        x.cols()
                    )));
                }
                Ok(dot(w, x.vectorize().data()) + b)
            }
            HiddenNode::TwoD { u, v, b } => {
                if x.rows() != u.len() || x.cols() != v.len() {
                    return Err(Error::Shape(format!(
                        "node expects {}x{} inputs, sample is {}x{}",
                        u.len(),
                        v.len(),
                        x.rows(),
                        x.cols()
                    )));
                }
                Ok(bilinear_form(u, x, v)? + b)
            }
        }
    }

    /// Sigmoid output of this node on one sample.
    pub fn output(&self, x: &Matrix) -> Result<f64> {
        Ok(activate(self.preactivation(x)?))
    }

    /// Euclidean norm of the (possibly implicit) flat input weight vector.
    /// For 2D nodes `||vec(u v^T)||_2 = ||u||_2 * ||v||_2` exactly.
    pub fn weight_norm(&self) -> f64 {
        match self {
            HiddenNode::OneD { w, .. } => norm2(w),
            HiddenNode::TwoD { u, v, .. } => norm2(u) * norm2(v),
        }
    }

    /// The 1D twin with `w = vec(u v^T)`; identity on 1D nodes.
    pub fn to_one_d(&self) -> HiddenNode {
        match self {
            HiddenNode::OneD { .. } => self.clone(),
            HiddenNode::TwoD { u, v, b } => HiddenNode::OneD {
                w: outer(u, v).vectorize().data().to_vec(),
                b: *b,
            },
        }
    }
}

/// Which builder produced a network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builder {
    Scn,
    TwoDScn,
    Rvfl,
    TwoDRvfl,
}

impl Builder {
    pub fn tag(&self) -> &'static str {
        match self {
            Builder::Scn => "scn",
            Builder::TwoDScn => "2dscn",
            Builder::Rvfl => "rvfl",
            Builder::TwoDRvfl => "2drvfl",
        }
    }

    pub fn from_tag(s: &str) -> Option<Builder> {
        match s {
            "scn" => Some(Builder::Scn),
            "2dscn" => Some(Builder::TwoDScn),
            "rvfl" => Some(Builder::Rvfl),
            "2drvfl" => Some(Builder::TwoDRvfl),
            _ => None,
        }
    }
}

/// Builder provenance stored with every trained model.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub builder: Builder,
    pub seed: u64,
    pub config_digest: String,
}

/// Immutable trained learner.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    input_shape: InputShape,
    nodes: Vec<HiddenNode>,
    beta: Matrix,
    activation: Activation,
    provenance: Provenance,
}

impl Network {
    pub fn new(
        input_shape: InputShape,
        nodes: Vec<HiddenNode>,
        beta: Matrix,
        provenance: Provenance,
    ) -> Result<Self> {
        if beta.rows() != nodes.len() {
            return Err(Error::Shape(format!(
                "beta has {} rows but the network has {} nodes",
                beta.rows(),
                nodes.len()
            )));
        }
        for node in &nodes {
            let ok = match (node, input_shape) {
                (HiddenNode::OneD { w, .. }, shape) => w.len() == shape.total(),
                (HiddenNode::TwoD { u, v, .. }, InputShape::TwoD(d1, d2)) => {
                    u.len() == d1 && v.len() == d2
                }
                (HiddenNode::TwoD { .. }, InputShape::OneD(_)) => false,
            };
            if !ok {
                return Err(Error::Shape(format!(
                    "node incompatible with input shape {input_shape}"
                )));
            }
        }
        Ok(Self {
            input_shape,
            nodes,
            beta,
            activation: Activation::Sigmoid,
            provenance,
        })
    }

    pub fn input_shape(&self) -> InputShape {
        self.input_shape
    }

    pub fn nodes(&self) -> &[HiddenNode] {
        &self.nodes
    }

    pub fn beta(&self) -> &Matrix {
        &self.beta
    }

    pub fn output_dim(&self) -> usize {
        self.beta.cols()
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// The equivalent flat-input network with every 2D node replaced by its
    /// `vec(u v^T)` twin.
    pub fn to_one_d(&self) -> Network {
        Network {
            input_shape: self.input_shape.flattened(),
            nodes: self.nodes.iter().map(HiddenNode::to_one_d).collect(),
            beta: self.beta.clone(),
            activation: self.activation,
            provenance: self.provenance.clone(),
        }
    }

    /// `hidden_matrix(nodes, X) * beta`; an empty network predicts all zeros.
    pub fn predict(&self, inputs: &[Matrix]) -> Result<Matrix> {
        let h = hidden_matrix(&self.nodes, inputs)?;
        h.matmul(&self.beta)
    }
}

/// Activation column of one node over all samples.
pub fn node_activations(node: &HiddenNode, inputs: &[Matrix]) -> Result<Vec<f64>> {
    inputs.iter().map(|x| node.output(x)).collect()
}

/// `N x L` matrix with entry `(i, j) = g_j(x_i)`; column order follows node
/// insertion order.
pub fn hidden_matrix(nodes: &[HiddenNode], inputs: &[Matrix]) -> Result<Matrix> {
    let n = inputs.len();
    let l = nodes.len();
    let mut data = vec![0.0; n * l];
    for (i, x) in inputs.iter().enumerate() {
        for (j, node) in nodes.iter().enumerate() {
            data[i * l + j] = node.output(x)?;
        }
    }
    Matrix::new(n, l, data)
}

const MODEL_MAGIC: &str = "scn2d-model";
const MODEL_VERSION: u32 = 1;

fn write_floats(out: &mut String, v: &[f64]) {
    for (i, x) in v.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        // Display emits the shortest decimal that parses back bit-exactly.
        out.push_str(&format!("{x}"));
    }
    out.push('\n');
}

/// Serialize a network into the versioned text container.
pub fn serialize(net: &Network) -> String {
    let mut s = String::new();
    s.push_str(&format!("{MODEL_MAGIC} {MODEL_VERSION}\n"));
    s.push_str(&format!("builder: {}\n", net.provenance.builder.tag()));
    s.push_str(&format!("seed: {}\n", net.provenance.seed));
    s.push_str(&format!("config: {}\n", net.provenance.config_digest));
    s.push_str(&format!("input_shape: {}\n", net.input_shape));
    s.push_str("activation: sigmoid\n");
    s.push_str(&format!("nodes: {}\n", net.nodes.len()));
    for node in &net.nodes {
        match node {
            HiddenNode::OneD { w, b } => {
                s.push_str(&format!("node: 1d {b}\n"));
                s.push_str("w: ");
                write_floats(&mut s, w);
            }
            HiddenNode::TwoD { u, v, b } => {
                s.push_str(&format!("node: 2d {b}\n"));
                s.push_str("u: ");
                write_floats(&mut s, u);
                s.push_str("v: ");
                write_floats(&mut s, v);
            }
        }
    }
    s.push_str(&format!("beta: {} {}\n", net.beta.rows(), net.beta.cols()));
    for i in 0..net.beta.rows() {
        write_floats(&mut s, net.beta.row(i));
    }
    s.push_str("end\n");
    s
}

pub fn write_model<W: Write>(net: &Network, mut w: W) -> Result<()> {
    w.write_all(serialize(net).as_bytes())?;
    Ok(())
}

struct LineReader<'a> {
    text: &'a str,
    offset: usize,
}

impl<'a> LineReader<'a> {
    fn next_line(&mut self) -> Result<&'a str> {
        if self.offset >= self.text.len() {
            return Err(Error::Parse {
                offset: self.offset,
                msg: "unexpected end of stream".into(),
            });
        }
        let rest = &self.text[self.offset..];
        let (line, consumed) = match rest.find('\n') {
            Some(pos) => (&rest[..pos], pos + 1),
            None => (rest, rest.len()),
        };
        self.offset += consumed;
        Ok(line)
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            offset: self.offset,
            msg: msg.into(),
        }
    }

    fn field(&mut self, key: &str) -> Result<&'a str> {
        let line = self.next_line()?;
        line.strip_prefix(key)
            .and_then(|rest| rest.strip_prefix(": "))
            .ok_or_else(|| self.err(format!("expected `{key}: ...`, got `{line}`")))
    }
}

fn parse_floats(r: &LineReader<'_>, s: &str, expected: usize) -> Result<Vec<f64>> {
    let v: Vec<f64> = s
        .split(' ')
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| r.err(format!("bad float `{t}`")))
        })
        .collect::<Result<_>>()?;
    if v.len() != expected {
        return Err(r.err(format!("expected {expected} floats, got {}", v.len())));
    }
    Ok(v)
}

/// Parse a model from the text container; fails without constructing a
/// partial network.
pub fn deserialize(text: &str) -> Result<Network> {
    let mut r = LineReader { text, offset: 0 };
    let header = r.next_line()?;
    let mut parts = header.split(' ');
    if parts.next() != Some(MODEL_MAGIC) {
        return Err(r.err(format!("bad magic line `{header}`")));
    }
    let version: u32 = parts
        .next()
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| r.err("missing version"))?;
    if version != MODEL_VERSION {
        return Err(Error::Version(format!(
            "found {version}, supported {MODEL_VERSION}"
        )));
    }
    let builder = Builder::from_tag(r.field("builder")?)
        .ok_or_else(|| r.err("unknown builder tag"))?;
    let seed: u64 = r
        .field("seed")?
        .parse()
        .map_err(|_| r.err("bad seed"))?;
    let config_digest = r.field("config")?.to_string();
    let shape_str = r.field("input_shape")?;
    let shape_parts: Vec<&str> = shape_str.split(' ').collect();
    let input_shape = match shape_parts.as_slice() {
        ["1d", d] => InputShape::OneD(d.parse().map_err(|_| r.err("bad input_shape"))?),
        ["2d", d1, d2] => InputShape::TwoD(
            d1.parse().map_err(|_| r.err("bad input_shape"))?,
            d2.parse().map_err(|_| r.err("bad input_shape"))?,
        ),
        _ => return Err(r.err(format!("bad input_shape `{shape_str}`"))),
    };
    if r.field("activation")? != "sigmoid" {
        return Err(r.err("unknown activation"));
    }
    let node_count: usize = r
        .field("nodes")?
        .parse()
        .map_err(|_| r.err("bad node count"))?;
    let mut nodes = Vec::with_capacity(node_count);
    for _ in 0..node_count {
        let head = r.field("node")?;
        let (kind, b_str) = head
            .split_once(' ')
            .ok_or_else(|| r.err("bad node header"))?;
        let b: f64 = b_str.parse().map_err(|_| r.err("bad node bias"))?;
        match kind {
            "1d" => {
                let line = r.field("w")?;
                let w = parse_floats(&r, line, input_shape.total())?;
                nodes.push(HiddenNode::OneD { w, b });
            }
            "2d" => {
                let (d1, d2) = match input_shape {
                    InputShape::TwoD(d1, d2) => (d1, d2),
                    InputShape::OneD(_) => {
                        return Err(r.err("2d node in a 1d-shaped model"))
                    }
                };
                let u_line = r.field("u")?;
                let u = parse_floats(&r, u_line, d1)?;
                let v_line = r.field("v")?;
                let v = parse_floats(&r, v_line, d2)?;
                nodes.push(HiddenNode::TwoD { u, v, b });
            }
            other => return Err(r.err(format!("unknown node kind `{other}`"))),
        }
    }
    let beta_head = r.field("beta")?;
    let dims: Vec<usize> = beta_head
        .split(' ')
        .map(|t| t.parse().map_err(|_| r.err("bad beta dims")))
        .collect::<Result<_>>()?;
    let [rows, cols] = dims.as_slice() else {
        return Err(r.err("beta header needs two dims"));
    };
    if *rows != node_count {
        return Err(r.err(format!(
            "beta has {rows} rows but the model declares {node_count} nodes"
        )));
    }
    let mut beta_data = Vec::with_capacity(rows * cols);
    for _ in 0..*rows {
        let line = r.next_line()?;
        beta_data.extend(parse_floats(&r, line, *cols)?);
    }
    if r.next_line()? != "end" {
        return Err(r.err("missing `end` marker"));
    }
    let beta = Matrix::new(*rows, *cols, beta_data)
        .map_err(|e| r.err(format!("invalid beta: {e}")))?;
    Network::new(
        input_shape,
        nodes,
        beta,
        Provenance {
            builder,
            seed,
            config_digest,
        },
    )
}

pub fn read_model<R: Read>(mut r: R) -> Result<Network> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    deserialize(&text)
}
