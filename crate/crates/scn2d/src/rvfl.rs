//! One-shot randomized baselines: RVFL and 2DRVFL. All hidden parameters are
//! drawn blindly from `[-lambda, lambda]` with no supervisory check; only the
//! output weights are fit, by a single least-squares solve.

use crate::configurator::sample_candidate;
use crate::error::{Error, Result};
use crate::linalg::{least_squares, Matrix};
use crate::model::{hidden_matrix, Builder, InputShape, Network, NodeKind, Provenance};
use crate::rng::{child_rng, digest64};

/// Train an RVFL (flat inputs) or 2DRVFL (matrix inputs) network with `l`
/// hidden nodes. Node `j` draws from the child stream `(seed, j)`, so growing
/// `l` keeps the earlier draws identical.
pub fn train_rvfl(
    inputs: &[Matrix],
    targets: &Matrix,
    l: usize,
    lambda: f64,
    kind: NodeKind,
    seed: u64,
) -> Result<Network> {
    if l == 0 {
        return Err(Error::Config("node count must be positive".into()));
    }
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(Error::Config(format!("lambda must be positive, got {lambda}")));
    }
    if inputs.is_empty() || inputs.len() != targets.rows() {
        return Err(Error::Shape(format!(
            "{} input samples vs {} target rows",
            inputs.len(),
            targets.rows()
        )));
    }
    let full_shape = if inputs[0].cols() == 1 {
        InputShape::OneD(inputs[0].rows())
    } else {
        InputShape::TwoD(inputs[0].rows(), inputs[0].cols())
    };
    let shape = match kind {
        NodeKind::TwoD => match full_shape {
            InputShape::TwoD(..) => full_shape,
            InputShape::OneD(_) => {
                return Err(Error::Shape(
                    "2d training requires matrix-shaped samples".into(),
                ))
            }
        },
        NodeKind::OneD => full_shape.flattened(),
    };

    let nodes: Vec<_> = (0..l)
        .map(|j| {
            let mut rng = child_rng(seed, &[0x7276666c, j as u64]);
            sample_candidate(shape, lambda, &mut rng)
        })
        .collect();
    let h = hidden_matrix(&nodes, inputs)?;
    let beta = least_squares(&h, targets)?;

    let builder = match kind {
        NodeKind::OneD => Builder::Rvfl,
        NodeKind::TwoD => Builder::TwoDRvfl,
    };
    let digest = format!(
        "{:016x}",
        digest64(format!("rvfl;l={l};lambda={lambda}").as_bytes())
    );
    Network::new(
        shape,
        nodes,
        beta,
        Provenance {
            builder,
            seed,
            config_digest: digest,
        },
    )
}
