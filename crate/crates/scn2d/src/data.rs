//! Dataset loading (IDX image containers, numeric CSV) and synthetic
//! matrix-regression task generation.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::{Builder, HiddenNode, InputShape, Network, Provenance};
use crate::rng::child_rng;
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// A named sample collection. Every sample shares `input_shape`; targets are
/// one row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub inputs: Vec<Matrix>,
    pub targets: Matrix,
    pub input_shape: InputShape,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        inputs: Vec<Matrix>,
        targets: Matrix,
        input_shape: InputShape,
    ) -> Result<Self> {
        if inputs.len() != targets.rows() {
            return Err(Error::Shape(format!(
                "{} samples vs {} target rows",
                inputs.len(),
                targets.rows()
            )));
        }
        for (i, x) in inputs.iter().enumerate() {
            let ok = match input_shape {
                InputShape::OneD(d) => x.cols() == 1 && x.rows() == d,
                InputShape::TwoD(d1, d2) => x.rows() == d1 && x.cols() == d2,
            };
            if !ok {
                return Err(Error::Shape(format!(
                    "sample {i} is {}x{}, expected {input_shape}",
                    x.rows(),
                    x.cols()
                )));
            }
        }
        Ok(Self {
            name: name.into(),
            inputs,
            targets,
            input_shape,
        })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

const IDX_IMAGE_MAGIC: u32 = 0x0000_0803;
const IDX_LABEL_MAGIC: u32 = 0x0000_0801;

struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
    what: &'a str,
}

impl<'a> ByteReader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Format(format!(
                "{}: truncated at byte {} (wanted {} more)",
                self.what, self.pos, n
            )));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u32_be(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }
}

/// Parse an IDX image/label pair: pixels scaled to [0,1], labels one-hot
/// encoded over the classes present in 0..=max_label.
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<Dataset> {
    let image_bytes = fs::read(images_path)?;
    let label_bytes = fs::read(labels_path)?;

    let mut ir = ByteReader { bytes: &image_bytes, pos: 0, what: "image file" };
    if ir.u32_be()? != IDX_IMAGE_MAGIC {
        return Err(Error::Format(format!(
            "image file: bad magic, expected {IDX_IMAGE_MAGIC:#010x}"
        )));
    }
    let n = ir.u32_be()? as usize;
    let d1 = ir.u32_be()? as usize;
    let d2 = ir.u32_be()? as usize;
    if d1 == 0 || d2 == 0 {
        return Err(Error::Format("image file: zero image dimensions".into()));
    }
    let pixels = ir.take(n * d1 * d2)?;
    if ir.pos != image_bytes.len() {
        return Err(Error::Format(format!(
            "image file: {} trailing bytes",
            image_bytes.len() - ir.pos
        )));
    }

    let mut lr = ByteReader { bytes: &label_bytes, pos: 0, what: "label file" };
    if lr.u32_be()? != IDX_LABEL_MAGIC {
        return Err(Error::Format(format!(
            "label file: bad magic, expected {IDX_LABEL_MAGIC:#010x}"
        )));
    }
    let n_labels = lr.u32_be()? as usize;
    if n_labels != n {
        return Err(Error::Format(format!(
            "{n} images but {n_labels} labels"
        )));
    }
    let labels = lr.take(n)?;
    if lr.pos != label_bytes.len() {
        return Err(Error::Format(format!(
            "label file: {} trailing bytes",
            label_bytes.len() - lr.pos
        )));
    }

    let inputs: Vec<Matrix> = (0..n)
        .map(|i| {
            let raw = &pixels[i * d1 * d2..(i + 1) * d1 * d2];
            // IDX stores pixels row by row
            Matrix::new(d1, d2, raw.iter().map(|&p| p as f64 / 255.0).collect())
        })
        .collect::<Result<_>>()?;
    let m = labels.iter().copied().max().unwrap_or(0) as usize + 1;
    let targets = one_hot(&labels.iter().map(|&l| l as usize).collect::<Vec<_>>(), m)?;

    Dataset::new(
        images_path.display().to_string(),
        inputs,
        targets,
        InputShape::TwoD(d1, d2),
    )
}

/// One-hot encode class indices into an `N x m` target matrix.
pub fn one_hot(labels: &[usize], m: usize) -> Result<Matrix> {
    if let Some(&bad) = labels.iter().find(|&&l| l >= m) {
        return Err(Error::Shape(format!("label {bad} out of range for {m} classes")));
    }
    Matrix::from_fn(labels.len(), m, |i, j| if labels[i] == j { 1.0 } else { 0.0 })
}

/// Load a headerless numeric CSV where each row is one flattened sample
/// (column-major) followed by `target_cols` target values. Set `skip_header`
/// to drop one leading header line.
pub fn load_csv(
    path: &Path,
    input_shape: InputShape,
    target_cols: usize,
    skip_header: bool,
) -> Result<Dataset> {
    let text = fs::read_to_string(path)?;
    let d = input_shape.total();
    if target_cols == 0 {
        return Err(Error::Config("target column count must be positive".into()));
    }
    let mut inputs = Vec::new();
    let mut target_data = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if skip_header && lineno == 0 {
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != d + target_cols {
            return Err(Error::Format(format!(
                "line {}: expected {} fields, found {}",
                lineno + 1,
                d + target_cols,
                fields.len()
            )));
        }
        let values: Vec<f64> = fields
            .iter()
            .map(|f| {
                f.trim().parse::<f64>().map_err(|_| {
                    Error::Format(format!("line {}: bad number `{}`", lineno + 1, f.trim()))
                })
            })
            .collect::<Result<_>>()?;
        let sample = match input_shape {
            InputShape::OneD(_) => Matrix::column_vector(&values[..d])?,
            InputShape::TwoD(d1, d2) => Matrix::from_col_major(d1, d2, &values[..d])?,
        };
        inputs.push(sample);
        target_data.extend_from_slice(&values[d..]);
    }
    let targets = Matrix::new(inputs.len(), target_cols, target_data)?;
    Dataset::new(path.display().to_string(), inputs, targets, input_shape)
}

/// Write a dataset back out in the `load_csv` layout (no header).
pub fn write_csv(ds: &Dataset, path: &Path) -> Result<()> {
    let mut out = String::new();
    for (x, i) in ds.inputs.iter().zip(0..) {
        let flat = x.vectorize();
        for v in flat.data() {
            out.push_str(&format!("{v},"));
        }
        let row = ds.targets.row(i);
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&format!("{v}"));
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// A synthetic matrix-regression task: targets are a planted `k`-node mixture
/// `f(x) = sum_j c_j g(u_j^T x v_j + b_j)` with parameters drawn from
/// `U[-1,1]` and inputs from `U[0,1]`. Gaussian noise (`noise_sd`) is added to
/// the training targets only; train and test draws are disjoint. The planted
/// network is returned for oracle checks.
pub fn synth_matrix_regression(
    n: usize,
    d1: usize,
    d2: usize,
    k: usize,
    noise_sd: f64,
    seed: u64,
) -> Result<(Dataset, Dataset, Network)> {
    if k == 0 {
        return Err(Error::Config("planted node count must be positive".into()));
    }
    if d1 == 0 || d2 == 0 || n == 0 {
        return Err(Error::Config("dimensions and sample count must be positive".into()));
    }
    if noise_sd.is_nan() || noise_sd < 0.0 || !noise_sd.is_finite() {
        return Err(Error::Config(format!("noise_sd must be finite and >= 0, got {noise_sd}")));
    }

    let mut prng = child_rng(seed, &[0x73796e74, 0]);
    let nodes: Vec<HiddenNode> = (0..k)
        .map(|_| HiddenNode::TwoD {
            u: (0..d1).map(|_| prng.gen_range(-1.0..=1.0)).collect(),
            v: (0..d2).map(|_| prng.gen_range(-1.0..=1.0)).collect(),
            b: prng.gen_range(-1.0..=1.0),
        })
        .collect();
    let beta = Matrix::new(k, 1, (0..k).map(|_| prng.gen_range(-1.0..=1.0)).collect())?;
    let planted = Network::new(
        InputShape::TwoD(d1, d2),
        nodes,
        beta,
        Provenance {
            builder: Builder::TwoDScn,
            seed,
            config_digest: "planted".into(),
        },
    )?;

    let draw_split = |tag: u64| -> Result<Vec<Matrix>> {
        let mut rng = child_rng(seed, &[0x73796e74, tag]);
        (0..n)
            .map(|_| {
                Matrix::new(d1, d2, (0..d1 * d2).map(|_| rng.gen_range(0.0..=1.0)).collect())
            })
            .collect()
    };
    let train_inputs = draw_split(1)?;
    let test_inputs = draw_split(2)?;

    let clean_train = planted.predict(&train_inputs)?;
    let train_targets = if noise_sd > 0.0 {
        let mut rng = child_rng(seed, &[0x73796e74, 3]);
        let noise = Normal::new(0.0, noise_sd)
            .map_err(|e| Error::Config(format!("bad noise_sd: {e}")))?;
        Matrix::from_fn(n, 1, |i, j| clean_train.get(i, j) + noise.sample(&mut rng))?
    } else {
        clean_train
    };
    let test_targets = planted.predict(&test_inputs)?;

    let train = Dataset::new("synth-train", train_inputs, train_targets, InputShape::TwoD(d1, d2))?;
    let test = Dataset::new("synth-test", test_inputs, test_targets, InputShape::TwoD(d1, d2))?;
    Ok((train, test, planted))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    fn idx_pair(dir: &Path, images: &[u8], labels: &[u8]) -> (std::path::PathBuf, std::path::PathBuf) {
        let ip = dir.join("imgs.idx");
        let lp = dir.join("lbls.idx");
        fs::File::create(&ip).unwrap().write_all(images).unwrap();
        fs::File::create(&lp).unwrap().write_all(labels).unwrap();
        (ip, lp)
    }

    fn be(v: u32) -> [u8; 4] {
        v.to_be_bytes()
    }

    fn tiny_idx_images() -> Vec<u8> {
        // 2 images, 2x2: [0,255,128,64] and [1,2,3,4]
        let mut b = Vec::new();
        b.extend(be(IDX_IMAGE_MAGIC));
        b.extend(be(2));
        b.extend(be(2));
        b.extend(be(2));
        b.extend([0u8, 255, 128, 64, 1, 2, 3, 4]);
        b
    }

    fn tiny_idx_labels() -> Vec<u8> {
        let mut b = Vec::new();
        b.extend(be(IDX_LABEL_MAGIC));
        b.extend(be(2));
        b.extend([1u8, 0]);
        b
    }

    #[test]
    fn idx_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let (ip, lp) = idx_pair(dir.path(), &tiny_idx_images(), &tiny_idx_labels());
        let ds = load_idx(&ip, &lp).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.input_shape, InputShape::TwoD(2, 2));
        // row-major pixel order, 255 -> exactly 1.0
        assert_eq!(ds.inputs[0].get(0, 0), 0.0);
        assert_eq!(ds.inputs[0].get(0, 1), 1.0);
        assert_eq!(ds.inputs[0].get(1, 0), 128.0 / 255.0);
        assert_eq!(ds.inputs[1].get(1, 1), 4.0 / 255.0);
        // labels [1, 0] -> one-hot over 2 classes
        assert_eq!(ds.targets.row(0), &[0.0, 1.0]);
        assert_eq!(ds.targets.row(1), &[1.0, 0.0]);
    }

    #[test]
    fn idx_errors() {
        let dir = tempfile::tempdir().unwrap();
        // bad magic
        let mut bad = tiny_idx_images();
        bad[3] = 0x07;
        let (ip, lp) = idx_pair(dir.path(), &bad, &tiny_idx_labels());
        assert!(load_idx(&ip, &lp).is_err());
        // truncated pixels
        let mut short = tiny_idx_images();
        short.truncate(short.len() - 3);
        let (ip, lp) = idx_pair(dir.path(), &short, &tiny_idx_labels());
        assert!(load_idx(&ip, &lp).is_err());
        // count mismatch
        let mut labels3 = tiny_idx_labels();
        labels3[7] = 3;
        labels3.push(2);
        let (ip, lp) = idx_pair(dir.path(), &tiny_idx_images(), &labels3);
        assert!(load_idx(&ip, &lp).is_err());
    }

    #[test]
    fn csv_round_trip_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let (train, _, _) = synth_matrix_regression(7, 3, 2, 2, 0.1, 42).unwrap();
        let path = dir.path().join("train.csv");
        write_csv(&train, &path).unwrap();
        let back = load_csv(&path, InputShape::TwoD(3, 2), 1, false).unwrap();
        assert_eq!(back.inputs, train.inputs);
        assert_eq!(back.targets, train.targets);
    }

    #[test]
    fn csv_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        fs::write(&path, "1,2,3\n4,5\n").unwrap();
        let err = load_csv(&path, InputShape::OneD(2), 1, false).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        fs::write(&path, "1,2,zap\n").unwrap();
        let err = load_csv(&path, InputShape::OneD(2), 1, false).unwrap_err();
        assert!(err.to_string().contains("zap"), "{err}");
    }

    #[test]
    fn csv_header_skip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.csv");
        fs::write(&path, "a,b,c\n1,2,3\n").unwrap();
        let ds = load_csv(&path, InputShape::OneD(2), 1, true).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.targets.get(0, 0), 3.0);
    }

    #[test]
    fn synth_deterministic_and_disjoint() {
        let (tr_a, te_a, net_a) = synth_matrix_regression(20, 4, 4, 3, 0.05, 9).unwrap();
        let (tr_b, te_b, net_b) = synth_matrix_regression(20, 4, 4, 3, 0.05, 9).unwrap();
        assert_eq!(tr_a, tr_b);
        assert_eq!(te_a, te_b);
        assert_eq!(net_a, net_b);
        assert_ne!(tr_a.inputs[0], te_a.inputs[0]);
    }

    #[test]
    fn synth_test_targets_match_planted_network() {
        let (_, test, planted) = synth_matrix_regression(15, 3, 3, 2, 0.2, 4).unwrap();
        let regen = planted.predict(&test.inputs).unwrap();
        assert_eq!(regen, test.targets);
    }

    #[test]
    fn synth_noiseless_train_is_realizable() {
        let (train, _, planted) = synth_matrix_regression(10, 2, 2, 1, 0.0, 5).unwrap();
        let clean = planted.predict(&train.inputs).unwrap();
        assert_eq!(clean, train.targets);
    }

    #[test]
    fn synth_noise_perturbs_train_only() {
        let (train, test, planted) = synth_matrix_regression(50, 2, 2, 2, 0.1, 6).unwrap();
        let clean = planted.predict(&train.inputs).unwrap();
        let diff = train.targets.sub(&clean).unwrap().frobenius_norm();
        assert!(diff > 0.0);
        // rough scale check: ~ sqrt(N) * sd
        assert!(diff < 0.1 * (50f64).sqrt() * 3.0);
        assert_eq!(planted.predict(&test.inputs).unwrap(), test.targets);
    }

    #[test]
    fn one_hot_round_trips() {
        let labels = [0usize, 3, 1, 2, 3];
        let t = one_hot(&labels, 4).unwrap();
        for (i, &l) in labels.iter().enumerate() {
            let row = t.row(i);
            assert_eq!(row[l], 1.0);
            assert_eq!(row.iter().sum::<f64>(), 1.0);
        }
        assert!(one_hot(&[4], 4).is_err());
    }
}
